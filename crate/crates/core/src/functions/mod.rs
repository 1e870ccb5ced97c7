//! Real functions on intervals with derivative stacks.

mod family;

use std::fmt;
use std::sync::Arc;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{invert_monotone, ToleranceProfile};

pub use family::{
    exp_taylor_remainder, Family, NumericFn, WeightedTerm, MAX_ANALYTIC_ORDER, MAX_NUMERIC_ORDER,
};

/// Catalog entries are family descriptors.
pub type CatalogEntry = Family;

/// Evaluation cap for unbounded domains, measured from the left end.
pub const DEFAULT_HORIZON: f64 = 1e6;

/// Closed interval `[lo, hi]`; `hi` may be `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Construction(format!("invalid domain [{lo}, {hi}]")));
        }
        Ok(Domain { lo, hi })
    }

    pub fn unbounded(lo: f64) -> Self {
        Domain {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_finite()
    }

    /// Right end used for evaluation grids.
    pub fn effective_hi(&self) -> f64 {
        if self.hi.is_finite() {
            self.hi
        } else {
            self.lo + DEFAULT_HORIZON
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&self.lo)?;
        if self.hi.is_finite() {
            seq.serialize_element(&self.hi)?;
        } else {
            seq.serialize_element("inf")?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum End {
            Num(f64),
            Text(String),
        }
        let (lo, hi): (f64, End) = Deserialize::deserialize(d)?;
        let hi = match hi {
            End::Num(v) => v,
            End::Text(t) if matches!(t.as_str(), "inf" | "+inf" | "infinity") => f64::INFINITY,
            End::Text(t) => {
                return Err(de::Error::custom(format!(
                    "expected a number or \"inf\", got {t:?}"
                )))
            }
        };
        Domain::new(lo, hi).map_err(de::Error::custom)
    }
}

/// Where a derivative value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Numeric,
}

/// A real function on a domain, with derivatives to [`FunctionSpec::max_order`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub family: Family,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.label.is_empty() {
            f.write_str(&self.family.describe())
        } else {
            f.write_str(&self.label)
        }
    }
}

fn default_domain(family: &Family) -> Domain {
    match family {
        Family::ShiftedPower { a, .. } => Domain::unbounded(*a),
        Family::LogAffine { b } => Domain {
            lo: b * 1e-6,
            hi: *b,
        },
        Family::AffinePrecompose {
            inner,
            scale,
            shift,
        } if *scale > 0.0 => {
            let d = default_domain(inner);
            Domain {
                lo: (d.lo - shift) / scale,
                hi: (d.hi - shift) / scale,
            }
        }
        Family::Scaled { inner, .. }
        | Family::TaylorRemainder { inner, .. }
        | Family::Derivative { inner, .. } => default_domain(inner),
        Family::ComposeInverse { inner, lo, hi, .. } => Domain {
            lo: inner.eval(*lo),
            hi: inner.eval(*hi),
        },
        _ => Domain::unbounded(0.0),
    }
}

/// Builds a catalog function on its default domain.
pub fn make_catalog(entry: CatalogEntry) -> Result<FunctionSpec> {
    let domain = default_domain(&entry);
    FunctionSpec::new(entry, domain)
}

impl FunctionSpec {
    pub fn new(family: Family, domain: Domain) -> Result<Self> {
        family.validate()?;
        Domain::new(domain.lo, domain.hi)?;
        Ok(FunctionSpec {
            family,
            domain,
            label: String::new(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.domain = Domain::new(lo, hi)?;
        Ok(self)
    }

    /// `(x - a)^q` on `[a, ∞)`.
    pub fn shifted_power(q: f64, a: f64) -> Result<Self> {
        make_catalog(Family::ShiftedPower { q, a })
    }

    /// `e^(s x)` on `[0, ∞)`.
    pub fn exponential(s: f64) -> Result<Self> {
        make_catalog(Family::Exponential { s })
    }

    /// `T_p` on `[0, ∞)`.
    pub fn exp_taylor_remainder(p: u32) -> Self {
        make_catalog(Family::ExpTaylorRemainder { p }).expect("always valid")
    }

    /// `ln(x) - x/b` on `[1e-6 b, b]`.
    pub fn log_affine(b: f64) -> Result<Self> {
        make_catalog(Family::LogAffine { b })
    }

    /// Polynomial with ascending coefficients on `[0, ∞)`.
    pub fn polynomial(coefficients: Vec<f64>) -> Result<Self> {
        make_catalog(Family::Polynomial { coefficients })
    }

    /// User closure; derivatives by finite differences, order ≤ 4.
    pub fn numeric(f: impl Fn(f64) -> f64 + Send + Sync + 'static, domain: Domain) -> Result<Self> {
        FunctionSpec::new(Family::Numeric(NumericFn(Arc::new(f))), domain)
    }

    /// `x -> self(scale x + shift)`; the domain is mapped back through the affine map.
    pub fn precompose_affine(&self, scale: f64, shift: f64) -> Result<Self> {
        let (u, v) = (
            (self.domain.lo - shift) / scale,
            (self.domain.hi - shift) / scale,
        );
        let domain = if u <= v {
            Domain { lo: u, hi: v }
        } else {
            Domain { lo: v, hi: u }
        };
        FunctionSpec::new(
            Family::AffinePrecompose {
                inner: Box::new(self.family.clone()),
                scale,
                shift,
            },
            domain,
        )
    }

    /// `Σ w_i f_i` on the intersection of the domains.
    pub fn weighted_sum(terms: &[(f64, &FunctionSpec)]) -> Result<Self> {
        let lo = terms
            .iter()
            .map(|(_, f)| f.domain.lo)
            .fold(f64::NEG_INFINITY, f64::max);
        let hi = terms
            .iter()
            .map(|(_, f)| f.domain.hi)
            .fold(f64::INFINITY, f64::min);
        FunctionSpec::new(
            Family::NonnegWeightedSum {
                terms: terms
                    .iter()
                    .map(|(w, f)| WeightedTerm {
                        weight: *w,
                        function: f.family.clone(),
                    })
                    .collect(),
            },
            Domain::new(lo, hi)?,
        )
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        FunctionSpec::new(
            Family::Scaled {
                factor,
                inner: Box::new(self.family.clone()),
            },
            self.domain,
        )
    }

    pub fn product(&self, other: &FunctionSpec) -> Result<Self> {
        let domain = Domain::new(
            self.domain.lo.max(other.domain.lo),
            self.domain.hi.min(other.domain.hi),
        )?;
        FunctionSpec::new(
            Family::Product {
                left: Box::new(self.family.clone()),
                right: Box::new(other.family.clone()),
            },
            domain,
        )
    }

    /// `f^(order)` as a function in its own right.
    pub fn derivative_fn(&self, order: u32) -> Result<Self> {
        FunctionSpec::new(
            Family::Derivative {
                inner: Box::new(self.family.clone()),
                order,
            },
            self.domain,
        )
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.family.eval(x)
    }

    /// Canonical JSON text, or the description for closures.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| {
            format!(
                "{}@[{},{}]",
                self.family.describe(),
                self.domain.lo,
                self.domain.hi
            )
        })
    }

    /// `f^(k)(x)`; NaN when `k` exceeds [`FunctionSpec::max_order`].
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        self.family.derivative(k, x)
    }

    pub fn try_derivative(&self, k: usize, x: f64) -> Result<f64> {
        if k > self.max_order() {
            return Err(Error::Order {
                requested: k,
                available: self.max_order(),
            });
        }
        Ok(self.family.derivative(k, x))
    }

    pub fn max_order(&self) -> usize {
        self.family.max_order()
    }

    pub fn analytic_order(&self) -> usize {
        self.family.analytic_order()
    }

    /// Provenance of derivative `k`, or `None` past the available order.
    pub fn provenance(&self, k: usize) -> Option<Provenance> {
        if k <= self.analytic_order() {
            Some(Provenance::Analytic)
        } else if k <= self.max_order() {
            Some(Provenance::Numeric)
        } else {
            None
        }
    }

    /// Worst provenance over derivative orders `0..=k`.
    pub fn provenance_up_to(&self, k: usize) -> Option<Provenance> {
        self.provenance(k)
    }

    /// `f^-1(y)` on the effective domain; closed form when the family has one.
    pub fn invert(&self, y: f64, tol: &ToleranceProfile) -> Result<f64> {
        let (lo, hi) = (self.domain.lo, self.domain.effective_hi());
        if let Some(x) = self.family.closed_form_inverse(y) {
            if x >= lo && x <= hi {
                return Ok(x);
            }
        }
        invert_monotone(|t| self.eval(t), y, (lo, hi), tol)
    }

    /// Uniform grid of `n + 1` points over `[lo, hi]`.
    pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Taylor remainder at 0: `f(x) - Σ_{j<=p} f^(j)(0) x^j / j!`.
pub fn taylor_remainder(f: &FunctionSpec, p: u32) -> Result<FunctionSpec> {
    if f.domain.lo != 0.0 {
        return Err(Error::Construction(format!(
            "taylor remainder needs a domain starting at 0, got {}",
            f.domain.lo
        )));
    }
    if f.max_order() < p as usize {
        return Err(Error::Order {
            requested: p as usize,
            available: f.max_order(),
        });
    }
    FunctionSpec::new(
        Family::TaylorRemainder {
            inner: Box::new(f.family.clone()),
            p,
        },
        f.domain,
    )
}

/// Grid used to check that the inner function of a composition increases.
const MONOTONICITY_GRID: usize = 256;

/// `y -> l(f^-1(y))` on `[f(lo), f(hi)]`, where `[lo, hi]` is the shared
/// domain of `l` and `f` (unbounded domains capped at their horizon).
pub fn compose_inverse(l: &FunctionSpec, f: &FunctionSpec) -> Result<FunctionSpec> {
    let lo = l.domain.lo.max(f.domain.lo);
    let hi = l.domain.effective_hi().min(f.domain.effective_hi());
    compose_inverse_on(l, f, lo, hi)
}

/// [`compose_inverse`] with an explicit bracket `[lo, hi]` for `f^-1`.
pub fn compose_inverse_on(
    l: &FunctionSpec,
    f: &FunctionSpec,
    lo: f64,
    hi: f64,
) -> Result<FunctionSpec> {
    if !(lo < hi) {
        return Err(Error::Construction(format!(
            "empty composition bracket [{lo}, {hi}]"
        )));
    }
    for (i, x) in FunctionSpec::grid(lo, hi, MONOTONICITY_GRID)
        .into_iter()
        .enumerate()
    {
        let d = f.derivative(1, x);
        // f'(lo) = 0 is allowed at the anchor (e.g. x^2 at 0); strictness
        // then follows from positivity on the interior
        let ok = if i == 0 { d >= 0.0 } else { d > 0.0 };
        if !ok || d.is_nan() {
            return Err(Error::Monotonicity { x, derivative: d });
        }
    }
    let y_lo = f.eval(lo);
    let y_hi = f.eval(hi);
    let family = Family::ComposeInverse {
        outer: Box::new(l.family.clone()),
        inner: Box::new(f.family.clone()),
        lo,
        hi,
    };
    Ok(FunctionSpec::new(family, Domain::new(y_lo, y_hi)?)?.with_label(format!("{l}∘({f})^-1")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fd_derivative;
    use proptest::prelude::*;

    fn catalog() -> Vec<FunctionSpec> {
        vec![
            FunctionSpec::shifted_power(2.0, 0.0).unwrap(),
            FunctionSpec::shifted_power(3.5, 0.5).unwrap(),
            FunctionSpec::exponential(1.0).unwrap(),
            FunctionSpec::exponential(-0.7).unwrap(),
            FunctionSpec::exp_taylor_remainder(2),
            FunctionSpec::log_affine(0.6).unwrap(),
            FunctionSpec::polynomial(vec![1.0, 0.0, -3.0, 0.5, 0.25]).unwrap(),
            FunctionSpec::exponential(0.5)
                .unwrap()
                .precompose_affine(2.0, -1.0)
                .unwrap(),
            FunctionSpec::weighted_sum(&[
                (0.5, &FunctionSpec::shifted_power(4.0, 0.0).unwrap()),
                (2.0, &FunctionSpec::exp_taylor_remainder(3)),
            ])
            .unwrap(),
        ]
    }

    #[test]
    fn catalog_examples() {
        let sq = FunctionSpec::shifted_power(2.0, 0.0).unwrap();
        assert_eq!(sq.eval(3.0), 9.0);
        assert_eq!(sq.derivative(1, 3.0), 6.0);
        assert_eq!(sq.derivative(2, 3.0), 2.0);
        assert_eq!(sq.derivative(3, 3.0), 0.0);

        let e = FunctionSpec::exponential(1.0).unwrap();
        for k in 0..6 {
            assert!((e.derivative(k, 0.4) - 0.4f64.exp()).abs() < 1e-15);
        }

        let la = FunctionSpec::log_affine(0.6).unwrap();
        assert!((la.eval(0.6) - (0.6f64.ln() - 1.0)).abs() < 1e-15);
        assert!(la.derivative(1, 0.6).abs() < 1e-15);
    }

    #[test]
    fn catalog_rejects_bad_parameters() {
        assert!(matches!(
            FunctionSpec::shifted_power(0.5, 0.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            FunctionSpec::log_affine(-1.0),
            Err(Error::Construction(_))
        ));
        assert!(matches!(
            FunctionSpec::polynomial(vec![]),
            Err(Error::Construction(_))
        ));
        assert!(FunctionSpec::exponential(f64::NAN).is_err());
    }

    #[test]
    fn analytic_stack_matches_finite_differences() {
        for f in catalog() {
            let lo = f.domain.lo;
            let hi = f.domain.effective_hi().min(lo + 3.0);
            for i in 1..25 {
                let x = lo + (hi - lo) * (i as f64 + 0.37) / 26.0;
                for k in 0..6 {
                    let fd = fd_derivative(|t| f.derivative(k, t), x, 1, 1e-5);
                    let exact = f.derivative(k + 1, x);
                    assert!(
                        (fd - exact).abs() <= 1e-4 * (1.0 + exact.abs()),
                        "{f}: k = {k}, x = {x}: {fd} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn taylor_remainder_examples() {
        let e = FunctionSpec::exponential(1.0).unwrap();
        let r2 = taylor_remainder(&e, 2).unwrap();
        assert!((r2.eval(1.0) - (std::f64::consts::E - 2.5)).abs() < 1e-14);
        let r1 = taylor_remainder(&e, 1).unwrap();
        assert_eq!(r1.eval(0.0), 0.0);
        assert_eq!(r1.derivative(1, 0.0), 0.0);
        let x5 = FunctionSpec::shifted_power(5.0, 0.0).unwrap();
        let r = taylor_remainder(&x5, 2).unwrap();
        for &x in &[0.0, 0.3, 1.7] {
            assert_eq!(r.eval(x), x5.eval(x));
        }
        assert!(taylor_remainder(&FunctionSpec::log_affine(1.0).unwrap(), 1).is_err());
    }

    #[test]
    fn taylor_remainder_vanishes_at_origin() {
        for f in [
            FunctionSpec::exponential(1.3).unwrap(),
            FunctionSpec::polynomial(vec![2.0, -1.0, 0.5, 3.0, 1.0]).unwrap(),
        ] {
            for p in 1..6 {
                let r = taylor_remainder(&f, p).unwrap();
                for k in 0..=p as usize {
                    assert!(r.derivative(k, 0.0).abs() <= 1e-12, "p = {p}, k = {k}");
                }
            }
        }
    }

    #[test]
    fn compose_inverse_examples() {
        let x4 = FunctionSpec::shifted_power(4.0, 0.0).unwrap();
        let x2 = FunctionSpec::shifted_power(2.0, 0.0).unwrap();
        let g = compose_inverse_on(&x4, &x2, 0.0, 10.0).unwrap();
        for &y in &[0.25, 1.0, 4.0] {
            assert!((g.eval(y) - y * y).abs() < 1e-12);
            assert!((g.derivative(1, y) - 2.0 * y).abs() < 1e-10);
            assert!((g.derivative(2, y) - 2.0).abs() < 1e-8);
            assert!(g.derivative(3, y).abs() < 1e-3);
        }
        // 0/0 at the left end resolves to the limit
        assert!(g.derivative(1, 0.0).abs() < 1e-5);
        assert!((g.derivative(2, 0.0) - 2.0).abs() < 1e-5);

        let id = compose_inverse_on(&x2, &x2, 0.0, 10.0).unwrap();
        for &y in &[0.5, 3.0, 70.0] {
            assert!((id.eval(y) - y).abs() < 1e-12);
            assert!((id.derivative(1, y) - 1.0).abs() < 1e-10);
        }
        assert_eq!(g.provenance(2), Some(Provenance::Analytic));
        assert_eq!(g.provenance(3), Some(Provenance::Numeric));
    }

    #[test]
    fn compose_inverse_rejects_decreasing_inner() {
        let down = FunctionSpec::exponential(-1.0).unwrap();
        let x2 = FunctionSpec::shifted_power(2.0, 0.0).unwrap();
        assert!(matches!(
            compose_inverse_on(&x2, &down, 0.0, 1.0),
            Err(Error::Monotonicity { .. })
        ));
    }

    #[test]
    fn compose_inverse_round_trip() {
        let l = FunctionSpec::exponential(0.5).unwrap();
        let f = FunctionSpec::polynomial(vec![0.0, 1.0, 1.0]).unwrap();
        let g = compose_inverse_on(&l, &f, 0.0, 5.0).unwrap();
        for x in FunctionSpec::grid(0.0, 5.0, 40) {
            assert!((g.eval(f.eval(x)) - l.eval(x)).abs() <= 1e-9 * (1.0 + l.eval(x)));
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let mut all = catalog();
        all.push(taylor_remainder(&FunctionSpec::exponential(1.0).unwrap(), 2).unwrap());
        all.push(
            compose_inverse_on(
                &FunctionSpec::shifted_power(4.0, 0.0).unwrap(),
                &FunctionSpec::shifted_power(2.0, 0.0).unwrap(),
                0.0,
                3.0,
            )
            .unwrap(),
        );
        for f in all {
            let json = serde_json::to_string(&f).unwrap();
            let back: FunctionSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, f, "{json}");
        }
    }

    #[test]
    fn parses_documented_descriptor() {
        let f: FunctionSpec = serde_json::from_str(
            r#"{"family":"shifted-power","params":{"q":3,"a":0},"domain":[0,"inf"]}"#,
        )
        .unwrap();
        assert_eq!(f.eval(2.0), 8.0);
        assert!(!f.domain.is_bounded());
        let json = serde_json::to_value(&f).unwrap();
        assert_eq!(json["domain"][1], "inf");
        assert!(serde_json::from_str::<FunctionSpec>(
            r#"{"family":"shifted-power","params":{"q":3,"a":0},"domain":[1,0]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn inverse_is_right_inverse(q in 1.0f64..6.0, y in 0.0f64..1e3) {
            let f = FunctionSpec::shifted_power(q, 0.0).unwrap();
            let x = f.invert(y, &ToleranceProfile::default()).unwrap();
            prop_assert!((f.eval(x) - y).abs() <= 1e-10 + 1e-9 * y);
        }

        #[test]
        fn numeric_inverse_round_trip(s in 0.1f64..3.0, y in 0.0f64..50.0) {
            let f = FunctionSpec::exp_taylor_remainder(0).precompose_affine(s, 0.0).unwrap();
            let tol = ToleranceProfile::default();
            let x = f.invert(y, &tol).unwrap();
            prop_assert!((f.eval(x) - y).abs() <= tol.eq_abs + tol.eq_rel * y);
        }
    }
}
