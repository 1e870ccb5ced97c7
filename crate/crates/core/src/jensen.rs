//! Shifted p-norm bounds on `E f(X)` and their classical comparators.

use serde::{Deserialize, Serialize};

use crate::convexity::ConvexityCertificate;
use crate::digest::inputs_digest;
use crate::distributions::RandomVariable;
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;
use crate::numerics::ToleranceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    JensenLowerI,
    JensenUpperI,
    JensenLowerD,
    ClassicalJensenLower,
    ClassicalSecantUpper,
}

impl BoundKind {
    pub fn is_lower(&self) -> bool {
        !matches!(
            self,
            BoundKind::JensenUpperI | BoundKind::ClassicalSecantUpper
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::JensenLowerI => "jensen-lower-I",
            BoundKind::JensenUpperI => "jensen-upper-I",
            BoundKind::JensenLowerD => "jensen-lower-D",
            BoundKind::ClassicalJensenLower => "classical-jensen-lower",
            BoundKind::ClassicalSecantUpper => "classical-secant-upper",
        }
    }
}

/// A bound on `E f(X)` with its comparator and oracle.
///
/// Gaps are signed so that a nonnegative value means "valid" for
/// `gap_to_oracle` and "at least as tight" for `gap_to_classical`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub p: u32,
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub oracle: Option<f64>,
    pub oracle_error: f64,
    pub classical: f64,
    pub gap_to_oracle: Option<f64>,
    pub gap_to_classical: f64,
    pub inputs_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundOptions {
    /// Skip `E f(X)`; the report then carries no oracle.
    pub skip_oracle: bool,
    pub tol: ToleranceProfile,
}

struct Parts<'a> {
    kind: BoundKind,
    p: u32,
    a: f64,
    b: f64,
    value: f64,
    classical: f64,
    f: &'a FunctionSpec,
    x: &'a RandomVariable,
}

fn report(parts: Parts<'_>, opts: &BoundOptions) -> Result<BoundReport> {
    let Parts {
        kind,
        p,
        a,
        b,
        value,
        classical,
        f,
        x,
    } = parts;
    let (oracle, oracle_error) = if opts.skip_oracle {
        (None, 0.0)
    } else {
        let e = x.expect(f)?;
        (Some(e.value), e.error_estimate)
    };
    let lower = kind.is_lower();
    let signed = |hi: f64, lo: f64| if lower { hi - lo } else { lo - hi };
    let digest = inputs_digest(&[
        kind.as_str(),
        &f.fingerprint(),
        &x.fingerprint(),
        &p.to_string(),
        &format!("{a:e}"),
        &format!("{b:e}"),
    ]);
    Ok(BoundReport {
        kind,
        p,
        a,
        b,
        value,
        oracle,
        oracle_error,
        classical,
        gap_to_oracle: oracle.map(|o| signed(o, value)),
        gap_to_classical: signed(value, classical),
        inputs_digest: digest,
    })
}

fn check_support(x: &RandomVariable, a: f64, b: f64, allow_unbounded: bool) -> Result<()> {
    let (lo, hi) = x.support();
    let tol = ToleranceProfile::default().eq_abs;
    if lo < a - tol {
        return Err(Error::SupportViolation(format!(
            "mass at {lo} lies below a = {a}"
        )));
    }
    if hi > b + tol && !(allow_unbounded && hi.is_infinite()) {
        return Err(Error::SupportViolation(format!(
            "mass at {hi} lies above b = {b}"
        )));
    }
    Ok(())
}

/// `f(a + ‖X - a‖_{p+1}) <= E f(X)` for `f` in 𝕴(p,a,b).
///
/// `X` may be unbounded above when the domain of `f` is `[a, ∞)`; only the
/// moment of order `p + 1` enters the bound.
pub fn jensen_lower(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    x: &RandomVariable,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    cert.require("I", cert.p)?;
    let (p, [a, b]) = (cert.p, cert.interval);
    check_support(x, a, b, !f.domain.is_bounded())?;
    let norm = x.shifted_moment(a, p + 1)?.norm;
    let value = f.eval(a + norm);
    let classical = f.eval(x.mean()?);
    report(
        Parts {
            kind: BoundKind::JensenLowerI,
            p,
            a,
            b,
            value,
            classical,
            f,
            x,
        },
        opts,
    )
}

/// `(1 - m) f(a) + m f(b) >= E f(X)` with `m = E((X - a)/(b - a))^{p+1}`,
/// for `f` in 𝕴(p,a,b) and `X` on the bounded `[a, b]`.
pub fn jensen_upper(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    x: &RandomVariable,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    cert.require("I", cert.p)?;
    let (p, [a, b]) = (cert.p, cert.interval);
    if !b.is_finite() || !x.is_bounded() {
        return Err(Error::UnboundedSupport(x.support().1.max(b)));
    }
    check_support(x, a, b, false)?;
    let w = b - a;
    let k = p as i32 + 1;
    let m = x.expect_fn(|t| ((t - a).max(0.0) / w).powi(k))?.value;
    let m1 = x.expect_fn(|t| (t - a).max(0.0) / w)?.value;
    let (fa, fb) = (f.eval(a), f.eval(b));
    report(
        Parts {
            kind: BoundKind::JensenUpperI,
            p,
            a,
            b,
            value: (1.0 - m) * fa + m * fb,
            classical: (1.0 - m1) * fa + m1 * fb,
            f,
            x,
        },
        opts,
    )
}

/// `f(b - ‖b - X‖_{p+1}) <= E f(X)` for `f` in 𝕯(p,a,b).
pub fn jensen_lower_decreasing(
    f: &FunctionSpec,
    cert: &ConvexityCertificate,
    x: &RandomVariable,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    cert.require("D", cert.p)?;
    let (p, [a, b]) = (cert.p, cert.interval);
    check_support(x, a, b, false)?;
    let norm = x.reflected_moment(b, p + 1)?.norm;
    report(
        Parts {
            kind: BoundKind::JensenLowerD,
            p,
            a,
            b,
            value: f.eval(b - norm),
            classical: f.eval(x.mean()?),
            f,
            x,
        },
        opts,
    )
}

/// Plain Jensen: `f(E X) <= E f(X)` for convex `f`.
pub fn classical_jensen_lower(
    f: &FunctionSpec,
    x: &RandomVariable,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    let (a, b) = x.support();
    let value = f.eval(x.mean()?);
    report(
        Parts {
            kind: BoundKind::ClassicalJensenLower,
            p: 0,
            a,
            b,
            value,
            classical: value,
            f,
            x,
        },
        opts,
    )
}

/// Secant bound `(1 - m1) f(a) + m1 f(b) >= E f(X)` for convex `f` on `[a, b]`.
pub fn classical_secant_upper(
    f: &FunctionSpec,
    x: &RandomVariable,
    a: f64,
    b: f64,
    opts: &BoundOptions,
) -> Result<BoundReport> {
    if !b.is_finite() || !x.is_bounded() {
        return Err(Error::UnboundedSupport(x.support().1.max(b)));
    }
    check_support(x, a, b, false)?;
    let m1 = (x.mean()? - a) / (b - a);
    let value = (1.0 - m1) * f.eval(a) + m1 * f.eval(b);
    report(
        Parts {
            kind: BoundKind::ClassicalSecantUpper,
            p: 0,
            a,
            b,
            value,
            classical: value,
            f,
            x,
        },
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexity::{certify_d, certify_i, CertifyConfig};
    use proptest::prelude::*;

    fn opts() -> BoundOptions {
        BoundOptions::default()
    }

    fn cube() -> FunctionSpec {
        FunctionSpec::shifted_power(3.0, 0.0).unwrap()
    }

    fn cert_i(f: &FunctionSpec, p: u32, a: f64, b: f64) -> ConvexityCertificate {
        let c = certify_i(f, p, a, b, &CertifyConfig::default());
        assert!(c.passed(), "{f} not certified at p = {p}: {:?}", c.witness);
        c
    }

    #[test]
    fn lower_golden_case() {
        let f = cube();
        let x = RandomVariable::two_point(0.0, 1.0, 0.5).unwrap();
        let r = jensen_lower(&f, &cert_i(&f, 1, 0.0, 1.0), &x, &opts()).unwrap();
        assert!((r.value - 0.5f64.powf(1.5)).abs() < 1e-15);
        assert_eq!(r.oracle, Some(0.5));
        assert_eq!(r.classical, 0.125);
        assert!(r.gap_to_oracle.unwrap() > 0.0 && r.gap_to_classical > 0.0);
    }

    #[test]
    fn lower_equality_for_the_power_itself() {
        for p in 1..4u32 {
            let f = FunctionSpec::shifted_power(p as f64 + 1.0, 0.5).unwrap();
            let x = RandomVariable::discrete(vec![0.5, 0.9, 1.7, 2.5], vec![0.1, 0.2, 0.3, 0.4])
                .unwrap();
            let r = jensen_lower(&f, &cert_i(&f, p, 0.5, 2.5), &x, &opts()).unwrap();
            assert!((r.value - r.oracle.unwrap()).abs() <= 1e-12 * r.oracle.unwrap());
        }
        let f = cube();
        let c = RandomVariable::point_mass(0.7).unwrap();
        let r = jensen_lower(&f, &cert_i(&f, 1, 0.0, 1.0), &c, &opts()).unwrap();
        assert!((r.value - f.eval(0.7)).abs() < 1e-15);
    }

    #[test]
    fn upper_examples() {
        let f = cube();
        let cert = cert_i(&f, 1, 0.0, 1.0);
        let u = RandomVariable::uniform(0.0, 1.0).unwrap();
        let r = jensen_upper(&f, &cert, &u, &opts()).unwrap();
        assert!((r.value - 1.0 / 3.0).abs() < 1e-13);
        assert!((r.oracle.unwrap() - 0.25).abs() < 1e-13);
        assert!((r.classical - 0.5).abs() < 1e-13);

        let two = RandomVariable::two_point(0.0, 1.0, 0.3).unwrap();
        let r = jensen_upper(&f, &cert, &two, &opts()).unwrap();
        assert!((r.value - r.oracle.unwrap()).abs() < 1e-15);

        let at_a = RandomVariable::point_mass(0.0).unwrap();
        let r = jensen_upper(&f, &cert, &at_a, &opts()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.oracle, Some(0.0));
    }

    #[test]
    fn upper_rejects_unbounded() {
        let f = cube();
        let cert = cert_i(&f, 1, 0.0, 1.0);
        let x = RandomVariable::density(
            crate::DensityFamily::Exponential { rate: 1.0 },
            0.0,
            f64::INFINITY,
        )
        .unwrap();
        assert!(matches!(
            jensen_upper(&f, &cert, &x, &opts()),
            Err(Error::UnboundedSupport(_))
        ));
    }

    #[test]
    fn lower_on_unbounded_support() {
        let f = cube();
        let cert = cert_i(&f, 1, 0.0, f64::INFINITY);
        let x = RandomVariable::density(
            crate::DensityFamily::Exponential { rate: 1.0 },
            0.0,
            f64::INFINITY,
        )
        .unwrap();
        let r = jensen_lower(&f, &cert, &x, &opts()).unwrap();
        // E X^2 = 2, E X^3 = 6
        assert!((r.value - 2f64.powf(1.5)).abs() < 1e-9);
        assert!((r.oracle.unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn decreasing_examples() {
        let f = FunctionSpec::log_affine(0.6).unwrap();
        let cert = certify_d(&f, 1, f.domain.lo, 0.6, &CertifyConfig::default());
        let x = RandomVariable::uniform_discrete(vec![0.4, 0.6]).unwrap();
        let r = jensen_lower_decreasing(&f, &cert, &x, &opts()).unwrap();
        let c = 0.6 - 0.02f64.sqrt();
        assert!((r.value - (c.ln() - c / 0.6)).abs() < 1e-14);
        assert!((r.value + 1.543_921).abs() < 1e-6);
        let oracle = 0.5 * (0.4f64.ln() + 0.6f64.ln()) - 0.5 / 0.6;
        assert!((r.oracle.unwrap() - oracle).abs() < 1e-15);
        assert!(r.value > r.oracle.unwrap() && r.value < r.classical);

        let b = 2.0;
        let g = FunctionSpec::polynomial(vec![-b * b, 2.0 * b, -1.0]).unwrap();
        let cert = certify_d(&g, 1, 0.0, b, &CertifyConfig::default());
        let t = 0.35;
        let x = RandomVariable::two_point(0.0, b, t).unwrap();
        let r = jensen_lower_decreasing(&g, &cert, &x, &opts()).unwrap();
        assert!((r.value + t * b * b).abs() < 1e-14);
        assert!((r.value - r.oracle.unwrap()).abs() < 1e-14);
    }

    #[test]
    fn failing_certificate_is_refused() {
        let id = FunctionSpec::polynomial(vec![0.0, 1.0]).unwrap();
        let cert = certify_i(&id, 1, 0.0, 1.0, &CertifyConfig::default());
        let x = RandomVariable::two_point(0.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            jensen_lower(&id, &cert, &x, &opts()),
            Err(Error::CertificateRequired { .. })
        ));
        let f = cube();
        let d = certify_d(&f, 1, 0.0, 1.0, &CertifyConfig::default());
        assert!(jensen_lower(&f, &d, &x, &opts()).is_err());
    }

    #[test]
    fn support_is_checked() {
        let f = cube();
        let cert = cert_i(&f, 1, 0.0, 1.0);
        let x = RandomVariable::two_point(0.0, 2.0, 0.5).unwrap();
        assert!(matches!(
            jensen_lower(&f, &cert, &x, &opts()),
            Err(Error::SupportViolation(_))
        ));
    }

    #[test]
    fn oracle_can_be_skipped() {
        let f = cube();
        let x = RandomVariable::two_point(0.0, 1.0, 0.5).unwrap();
        let o = BoundOptions {
            skip_oracle: true,
            ..opts()
        };
        let r = jensen_lower(&f, &cert_i(&f, 1, 0.0, 1.0), &x, &o).unwrap();
        assert!(r.oracle.is_none() && r.gap_to_oracle.is_none());
    }

    fn discrete_on(a: f64, b: f64) -> impl Strategy<Value = RandomVariable> {
        prop::collection::vec((0.0f64..=1.0, 0.01f64..1.0), 1..6).prop_map(move |pairs| {
            let total: f64 = pairs.iter().map(|(_, w)| w).sum();
            let atoms = pairs.iter().map(|(u, _)| a + (b - a) * u).collect();
            let mut probs: Vec<f64> = pairs.iter().map(|(_, w)| w / total).collect();
            let drift = 1.0 - probs.iter().sum::<f64>();
            probs[0] += drift;
            RandomVariable::discrete(atoms, probs).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sandwich_and_tightness(x in discrete_on(0.0, 2.0), p in 1u32..4, extra in 0.0f64..2.0) {
            let f = FunctionSpec::shifted_power(p as f64 + 1.0 + extra, 0.0).unwrap();
            let cert = certify_i(&f, p, 0.0, 2.0, &CertifyConfig::default());
            prop_assert!(cert.passed());
            let lo = jensen_lower(&f, &cert, &x, &opts()).unwrap();
            let hi = jensen_upper(&f, &cert, &x, &opts()).unwrap();
            let oracle = lo.oracle.unwrap();
            prop_assert!(lo.value <= oracle + 1e-8);
            prop_assert!(oracle <= hi.value + 1e-8);
            prop_assert!(lo.value >= lo.classical - 1e-10);
            prop_assert!(hi.value <= hi.classical + 1e-10);
        }

        #[test]
        fn lower_increases_with_order(x in discrete_on(1.0, 3.0), p in 1u32..3) {
            let f = FunctionSpec::shifted_power(5.0, 1.0).unwrap();
            let c1 = certify_i(&f, p, 1.0, 3.0, &CertifyConfig::default());
            let c2 = certify_i(&f, p + 1, 1.0, 3.0, &CertifyConfig::default());
            let v1 = jensen_lower(&f, &c1, &x, &opts()).unwrap().value;
            let v2 = jensen_lower(&f, &c2, &x, &opts()).unwrap().value;
            prop_assert!(v2 >= v1 - 1e-10);
        }
    }
}
