//! Hermite-Hadamard bounds for 𝕴(p-1,a,b) functions, their
//! Riemann-Liouville fractional version and the bound for functions with
//! convex-class derivative.

use serde::{Deserialize, Serialize};

use crate::convexity::ConvexityCertificate;
use crate::distributions::{DensityFamily, RandomVariable};
use crate::error::{Error, Result};
use crate::functions::{exp_taylor_remainder, FunctionSpec};
use crate::numerics::{integrate, integrate_jacobi, ln_gamma, QuadraturePlan, Side};

/// Grid used to check that `f'` keeps one sign.
const SIGN_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HHReport {
    pub p: u32,
    /// Fractional order; absent for the plain integral average.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub lower: f64,
    pub mid: f64,
    pub mid_error: f64,
    pub upper: f64,
    pub classical_lower: f64,
    pub classical_upper: f64,
}

impl HHReport {
    /// `(mid - lower, upper - mid)`; both nonnegative when the bounds hold.
    pub fn gaps(&self) -> (f64, f64) {
        (self.mid - self.lower, self.upper - self.mid)
    }
}

/// Order of a Riemann-Liouville integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "fractional order must be finite and > 0, got {alpha}"
            )));
        }
        Ok(FractionalOrder(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        FractionalOrder::new(alpha)
    }
}

impl From<FractionalOrder> for f64 {
    fn from(a: FractionalOrder) -> f64 {
        a.0
    }
}

fn hh_interval(cert: &ConvexityCertificate, p: u32) -> Result<(f64, f64)> {
    if p == 0 {
        return Err(Error::Domain("order p must be >= 1".into()));
    }
    cert.require("I", p - 1)?;
    let [a, b] = cert.interval;
    if !b.is_finite() {
        return Err(Error::UnboundedSupport(b));
    }
    Ok((a, b))
}

/// `a + t (b - a)` with `t = w^(1/p)`, taken through logs.
fn interior(a: f64, b: f64, w: f64, p: u32) -> f64 {
    let t = (w.ln() / p as f64).exp();
    t * b + (1.0 - t) * a
}

fn classical(f: &FunctionSpec, a: f64, b: f64) -> (f64, f64) {
    (f.eval(0.5 * (a + b)), 0.5 * (f.eval(a) + f.eval(b)))
}

/// `f(a + (b-a)/(p+1)^{1/p}) <= (1/(b-a)) ∫_a^b f <= p/(p+1) f(a) + f(b)/(p+1)`
/// for `f` in 𝕴(p-1,a,b).
pub fn hh_bounds(f: &FunctionSpec, cert: &ConvexityCertificate, p: u32) -> Result<HHReport> {
    let (a, b) = hh_interval(cert, p)?;
    let w = 1.0 / (p as f64 + 1.0);
    let avg = integrate(|t| f.eval(t), a, b, &QuadraturePlan::default())?;
    let (classical_lower, classical_upper) = classical(f, a, b);
    Ok(HHReport {
        p,
        alpha: None,
        a,
        b,
        lower: f.eval(interior(a, b, w, p)),
        mid: avg.value / (b - a),
        mid_error: avg.error_estimate / (b - a),
        upper: (1.0 - w) * f.eval(a) + w * f.eval(b),
        classical_lower,
        classical_upper,
    })
}

/// The Hermite-Hadamard chain for the exponential Taylor remainder on `[0, b]`:
/// `T_{p-1}(b/(p+1)^{1/p}) <= T_p(b)/b <= T_{p-1}(b)/(p+1)`.
pub fn taylor_hh(p: u32, b: f64) -> Result<(f64, f64, f64)> {
    if p == 0 || !(b > 0.0) || !b.is_finite() {
        return Err(Error::Domain(format!(
            "taylor_hh needs p >= 1 and finite b > 0, got p = {p}, b = {b}"
        )));
    }
    let m = p as i64 - 1;
    let lower = exp_taylor_remainder(m, interior(0.0, b, 1.0 / (p as f64 + 1.0), p));
    let mid = exp_taylor_remainder(m + 1, b) / b;
    let upper = exp_taylor_remainder(m, b) / (p as f64 + 1.0);
    Ok((lower, mid, upper))
}

/// `c_p = 2(p + 2^-p) / ((p+1)(p+2))`.
pub fn derivative_hh_coefficient(p: u32) -> f64 {
    let p = p as f64;
    2.0 * (p + 0.5f64.powf(p)) / ((p + 1.0) * (p + 2.0))
}

/// `|f'|` as a function, for `f'` of one sign on `[a, b]`.
pub fn abs_derivative(f: &FunctionSpec, a: f64, b: f64) -> Result<FunctionSpec> {
    let d = f.derivative_fn(1)?.with_domain(a, b)?;
    let values: Vec<f64> = FunctionSpec::grid(a, b, SIGN_GRID)
        .into_iter()
        .map(|x| d.eval(x))
        .collect();
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain(
            "f' is undefined on part of the interval".into(),
        ));
    }
    if values.iter().all(|v| *v >= 0.0) {
        Ok(d.with_label(format!("|({f})'|")))
    } else if values.iter().all(|v| *v <= 0.0) {
        Ok(d.scaled(-1.0)?.with_label(format!("|({f})'|")))
    } else {
        Err(Error::Domain(format!(
            "f' changes sign on [{a}, {b}]; |f'| has no derivative stack"
        )))
    }
}

/// `|(f(a)+f(b))/2 - (1/(b-a)) ∫ f| <= ((b-a)/4) [c_p |f'(a)| + (1 - c_p) |f'(b)|]`
/// where `cert` certifies `|f'|` in 𝕴(p-1,a,b). Returns `(lhs, rhs)`.
pub fn derivative_hh_bound(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    p: u32,
) -> Result<(f64, f64)> {
    let (a, b) = hh_interval(cert, p)?;
    let avg = integrate(|t| f.eval(t), a, b, &QuadraturePlan::default())?.value / (b - a);
    let lhs = (0.5 * (f.eval(a) + f.eval(b)) - avg).abs();
    let c = derivative_hh_coefficient(p);
    let (da, db) = (f.derivative(1, a).abs(), f.derivative(1, b).abs());
    Ok((lhs, 0.25 * (b - a) * (c * da + (1.0 - c) * db)))
}

/// Anchor of a Riemann-Liouville integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "side", content = "anchor", rename_all = "kebab-case")]
pub enum RlSide {
    /// `I_{a+}`: integrates over `[a, x]`.
    Left(f64),
    /// `I_{b-}`: integrates over `[x, b]`.
    Right(f64),
}

/// `I_{a+}^α f(x) = (1/Γ(α)) ∫_a^x (x-t)^{α-1} f(t) dt`, or the mirrored
/// `I_{b-}^α f(x)`. Order 0 returns `f(x)`.
pub fn rl_integral(f: &FunctionSpec, alpha: f64, side: RlSide, x: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(f.eval(x));
    }
    let alpha = FractionalOrder::new(alpha)?.value();
    let plan = QuadraturePlan::default();
    let (lo, hi, weight_side) = match side {
        RlSide::Left(a) => (a, x, Side::Right),
        RlSide::Right(b) => (x, b, Side::Left),
    };
    if !(lo < hi) {
        if lo == hi {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!(
            "x = {x} lies outside the integration range of {side:?}"
        )));
    }
    let j = integrate_jacobi(|t| f.eval(t), lo, hi, alpha, weight_side, &plan)?;
    Ok(j.value * (-ln_gamma(alpha)?).exp())
}

/// `γ(p,α) = α/(2(α+p)) + Γ(α+1)Γ(p+1) / (2Γ(α+p+1))`.
///
/// The gamma ratio is the product `Π_{j=1}^{p} j/(α+j)`.
pub fn gamma_coefficient(p: u32, alpha: f64) -> Result<f64> {
    let alpha = FractionalOrder::new(alpha)?.value();
    let ratio = (1..=p).fold(1.0, |acc, j| acc * j as f64 / (alpha + j as f64));
    Ok(0.5 * alpha / (alpha + p as f64) + 0.5 * ratio)
}

/// Fractional chain for `f` in 𝕴(p-1,a,b), `0 <= a < b`:
/// `f(a + γ^{1/p}(b-a)) <= Γ(α+1)/(2(b-a)^α) (I_{a+}^α f(b) + I_{b-}^α f(a))
/// <= γ f(b) + (1-γ) f(a)` with `γ = γ(p,α)`.
pub fn fractional_hh_bounds(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    p: u32,
    alpha: f64,
) -> Result<HHReport> {
    let (a, b) = hh_interval(cert, p)?;
    if a < 0.0 {
        return Err(Error::Domain(format!(
            "fractional bounds need a >= 0, got {a}"
        )));
    }
    let g = gamma_coefficient(p, alpha)?;
    let right = rl_integral(f, alpha, RlSide::Left(a), b)?;
    let left = rl_integral(f, alpha, RlSide::Right(b), a)?;
    let scale = 0.5 * (ln_gamma(alpha + 1.0)? - alpha * (b - a).ln()).exp();
    let (classical_lower, classical_upper) = classical(f, a, b);
    Ok(HHReport {
        p,
        alpha: Some(alpha),
        a,
        b,
        lower: f.eval(interior(a, b, g, p)),
        mid: scale * (right + left),
        mid_error: QuadraturePlan::default().abs_tolerance * scale,
        upper: g * f.eval(b) + (1.0 - g) * f.eval(a),
        classical_lower,
        classical_upper,
    })
}

/// The fractional middle term as `E f(X)` under the density
/// `α/(2(b-a)^α) ((x-a)^{α-1} + (b-x)^{α-1})`.
pub fn fractional_mid_by_density(f: &FunctionSpec, a: f64, b: f64, alpha: f64) -> Result<f64> {
    let x = RandomVariable::density(DensityFamily::FractionalHh { alpha }, a, b)?;
    Ok(x.expect_fn(|t| f.eval(t))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexity::{certify_i, CertifyConfig};
    use crate::numerics::gamma;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn cert(f: &FunctionSpec, p: u32, a: f64, b: f64) -> ConvexityCertificate {
        certify_i(f, p, a, b, &CertifyConfig::default())
    }

    fn cube() -> FunctionSpec {
        FunctionSpec::shifted_power(3.0, 0.0).unwrap()
    }

    #[test]
    fn hh_golden() {
        let f = cube();
        let r = hh_bounds(&f, &cert(&f, 1, 0.0, 1.0), 2).unwrap();
        assert!((r.lower - 3f64.powf(-1.5)).abs() < 1e-15);
        assert!((r.lower - 0.1924501).abs() < 1e-7);
        assert!((r.mid - 0.25).abs() < 1e-14);
        assert!((r.upper - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!((r.classical_lower, r.classical_upper), (0.125, 0.5));
        assert!(r.classical_lower < r.lower && r.upper < r.classical_upper);
    }

    #[test]
    fn hh_reduces_to_classical_at_one() {
        let f = FunctionSpec::exponential(1.3).unwrap();
        let r = hh_bounds(&f, &cert(&f, 0, 0.2, 1.7), 1).unwrap();
        assert!((r.lower - r.classical_lower).abs() < 1e-15);
        assert!((r.upper - r.classical_upper).abs() < 1e-14);
        let c = FunctionSpec::polynomial(vec![2.5]).unwrap();
        let r = hh_bounds(&c, &cert(&c, 2, 0.0, 3.0), 3).unwrap();
        assert!(
            (r.lower - 2.5).abs() < 1e-15
                && (r.mid - 2.5).abs() < 1e-13
                && (r.upper - 2.5).abs() < 1e-15
        );
    }

    #[test]
    fn hh_needs_matching_certificate() {
        let f = cube();
        assert!(matches!(
            hh_bounds(&f, &cert(&f, 2, 0.0, 1.0), 2),
            Err(Error::CertificateRequired { .. })
        ));
    }

    #[test]
    fn taylor_examples() {
        let (l, m, u) = taylor_hh(1, 1.0).unwrap();
        assert!((l - (0.5f64.exp() - 1.0)).abs() < 1e-15 && (l - 0.6487213).abs() < 1e-7);
        assert!((m - (E - 2.0)).abs() < 1e-15);
        assert!((u - 0.5 * (E - 1.0)).abs() < 1e-15);
        let (l, m, u) = taylor_hh(2, 1.0).unwrap();
        let s = 3f64.sqrt().recip();
        assert!((l - (s.exp() - 1.0 - s)).abs() < 1e-15);
        assert!((m - (E - 2.5)).abs() < 1e-15);
        assert!((u - (E - 2.0) / 3.0).abs() < 1e-15);
        let (l, m, u) = taylor_hh(3, 1e-6).unwrap();
        assert!(l.abs() <= 1e-11 && m.abs() <= 1e-11 && u.abs() <= 1e-11);
    }

    #[test]
    fn taylor_mid_matches_quadrature() {
        // (1/b) ∫_0^b T_{p-1}
        for p in 1..5 {
            let b = 2.3;
            let q = integrate(
                |t| exp_taylor_remainder(p as i64 - 1, t),
                0.0,
                b,
                &QuadraturePlan::default(),
            )
            .unwrap();
            assert!((taylor_hh(p, b).unwrap().1 - q.value / b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_bound_golden() {
        let f = FunctionSpec::polynomial(vec![0.0, 0.0, 0.0, 0.0, 0.25]).unwrap();
        let d = abs_derivative(&f, 0.0, 1.0).unwrap();
        let (lhs, rhs) = derivative_hh_bound(&f, &cert(&d, 2, 0.0, 1.0), 3).unwrap();
        assert!((lhs - 0.075).abs() < 1e-14);
        assert!((rhs - 0.171875).abs() < 1e-15);
        assert_eq!(derivative_hh_coefficient(1), 0.5);
        assert_eq!(derivative_hh_coefficient(3), 0.3125);
    }

    #[test]
    fn derivative_sign_change_rejected() {
        let f = FunctionSpec::polynomial(vec![0.0, -1.0, 1.0]).unwrap();
        assert!(abs_derivative(&f, 0.0, 1.0).is_err());
        let g = FunctionSpec::polynomial(vec![0.0, -1.0]).unwrap();
        let d = abs_derivative(&g, 0.0, 1.0).unwrap();
        assert_eq!(d.eval(0.4), 1.0);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn rl_examples() {
        let one = FunctionSpec::polynomial(vec![1.0]).unwrap();
        assert!((rl_integral(&one, 1.0, RlSide::Left(0.0), 1.0).unwrap() - 1.0).abs() < 1e-14);
        let v = rl_integral(&one, 0.5, RlSide::Left(0.0), 1.0).unwrap();
        assert!((v - 1.0 / gamma(1.5).unwrap()).abs() < 1e-13 && (v - 1.1283792).abs() < 1e-7);
        let id = FunctionSpec::polynomial(vec![0.0, 1.0]).unwrap();
        assert!((rl_integral(&id, 1.0, RlSide::Left(0.0), 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(rl_integral(&id, 0.0, RlSide::Right(2.0), 0.7).unwrap(), 0.7);
        assert!(rl_integral(&id, 1.0, RlSide::Left(1.0), 0.5).is_err());
    }

    #[test]
    fn rl_power_identity() {
        // I_{a+}^α (t-a)^q at x = Γ(q+1) (x-a)^{q+α} / Γ(q+α+1)
        let (a, x) = (0.3, 1.9);
        for q in 0..=4 {
            let f = if q == 0 {
                FunctionSpec::polynomial(vec![1.0]).unwrap()
            } else {
                FunctionSpec::shifted_power(q as f64, a).unwrap()
            };
            for alpha in [0.5, 1.0, 1.5, 2.5] {
                let got = rl_integral(&f, alpha, RlSide::Left(a), x).unwrap();
                let want = gamma(q as f64 + 1.0).unwrap() * (x - a).powf(q as f64 + alpha)
                    / gamma(q as f64 + alpha + 1.0).unwrap();
                assert!(
                    (got - want).abs() <= 1e-8 * want,
                    "q={q} α={alpha}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn gamma_coefficient_examples() {
        assert!((gamma_coefficient(2, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for d in [1e-9, -1e-9] {
            assert!((gamma_coefficient(2, 1.0 + d).unwrap() - 1.0 / 3.0).abs() < 1e-8);
        }
        // direct evaluation with the gamma function
        for (p, alpha) in [(3u32, 0.7), (5, 2.2)] {
            let direct = alpha / (2.0 * (alpha + p as f64))
                + gamma(alpha + 1.0).unwrap() * gamma(p as f64 + 1.0).unwrap()
                    / (2.0 * gamma(alpha + p as f64 + 1.0).unwrap());
            assert!((gamma_coefficient(p, alpha).unwrap() - direct).abs() < 1e-13);
        }
        assert!(gamma_coefficient(1, 0.0).is_err());
    }

    #[test]
    fn fractional_examples() {
        let sq = FunctionSpec::shifted_power(2.0, 0.0).unwrap();
        for alpha in [0.3, 1.0, 2.5] {
            let r = fractional_hh_bounds(&sq, &cert(&sq, 0, 0.0, 1.0), 1, alpha).unwrap();
            assert!((r.lower - 0.25).abs() < 1e-15 && (r.upper - 0.5).abs() < 1e-15);
            assert!(r.lower <= r.mid && r.mid <= r.upper);
        }
        let f = cube();
        let c = cert(&f, 1, 0.0, 1.0);
        let frac = fractional_hh_bounds(&f, &c, 2, 1.0).unwrap();
        let plain = hh_bounds(&f, &c, 2).unwrap();
        assert!((frac.mid - 0.25).abs() < 1e-13);
        assert!(
            (frac.lower - plain.lower).abs() < 1e-12 && (frac.upper - plain.upper).abs() < 1e-12
        );
        let k = FunctionSpec::polynomial(vec![4.0]).unwrap();
        let r = fractional_hh_bounds(&k, &cert(&k, 1, 0.5, 2.0), 2, 0.7).unwrap();
        assert!(
            (r.lower - 4.0).abs() < 1e-15
                && (r.mid - 4.0).abs() < 1e-10
                && (r.upper - 4.0).abs() < 1e-15
        );
    }

    #[test]
    fn fractional_mid_routes_agree() {
        let f = FunctionSpec::exp_taylor_remainder(1);
        let c = cert(&f, 1, 0.0, 2.0);
        for alpha in [0.3, 0.5, 1.0, 1.5, 2.5, 4.0] {
            let r = fractional_hh_bounds(&f, &c, 2, alpha).unwrap();
            let d = fractional_mid_by_density(&f, 0.0, 2.0, alpha).unwrap();
            assert!(
                (r.mid - d).abs() < 1e-7 * r.mid.abs().max(1.0),
                "α={alpha}: {} vs {d}",
                r.mid
            );
        }
    }

    proptest! {
        #[test]
        fn gamma_half_at_order_one(e in -3.0f64..3.0) {
            let alpha = 10f64.powf(e);
            prop_assert!((gamma_coefficient(1, alpha).unwrap() - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn gamma_in_unit_interval(p in 1u32..12, alpha in 1e-3f64..50.0) {
            let g = gamma_coefficient(p, alpha).unwrap();
            prop_assert!(g > 0.0 && g <= 1.0);
        }

        #[test]
        fn sandwich_and_tightness(q in 2.0f64..6.0, a in 0.0f64..1.0, w in 0.2f64..3.0, p in 1u32..4, alpha in 0.4f64..3.0) {
            // (x - a0)^q with a0 = a is in 𝕴(p-1, a, b) when q >= p + 1
            let q = q.max(p as f64 + 1.0);
            let f = FunctionSpec::shifted_power(q, a).unwrap();
            let c = cert(&f, p - 1, a, a + w);
            prop_assume!(c.passed());
            for r in [hh_bounds(&f, &c, p).unwrap(), fractional_hh_bounds(&f, &c, p, alpha).unwrap()] {
                let tol = 1e-7 * (1.0 + r.upper.abs());
                prop_assert!(r.lower <= r.mid + tol && r.mid <= r.upper + tol, "{r:?}");
                prop_assert!(r.lower >= r.classical_lower - tol && r.upper <= r.classical_upper + tol, "{r:?}");
            }
        }
    }
}
