//! Parametric densities on an interval or a half line.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::Domain;
use crate::numerics::{integrate, integrate_jacobi_two_sided, ln_gamma, Integral, QuadraturePlan};

/// Density families, serialized as `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum DensityFamily {
    /// Constant density on `[a, b]`.
    Uniform {},
    /// Density proportional to `(x - a)^(alpha - 1) (b - x)^(beta - 1)` on `[a, b]`.
    BetaLike { alpha: f64, beta: f64 },
    /// `alpha / (2 (b - a)^alpha) * ((x - a)^(alpha - 1) + (b - x)^(alpha - 1))` on `[a, b]`.
    FractionalHh { alpha: f64 },
    /// `rate * exp(-rate (x - a))` on `[a, ∞)`.
    Exponential { rate: f64 },
    /// `shape a^shape / x^(shape + 1)` on `[a, ∞)`, `a > 0`.
    Pareto { shape: f64 },
}

/// Panels of doubling width used on half lines.
const MAX_HALF_LINE_PANELS: usize = 90;

impl DensityFamily {
    pub fn needs_bounded_support(&self) -> bool {
        matches!(
            self,
            DensityFamily::Uniform {}
                | DensityFamily::BetaLike { .. }
                | DensityFamily::FractionalHh { .. }
        )
    }

    pub fn validate(&self, support: &Domain) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if self.needs_bounded_support() != support.is_bounded() {
            return bad(format!(
                "{self:?} needs a {} support, got [{}, {}]",
                if self.needs_bounded_support() {
                    "bounded"
                } else {
                    "half-line"
                },
                support.lo,
                support.hi
            ));
        }
        match *self {
            DensityFamily::Uniform {} => Ok(()),
            DensityFamily::BetaLike { alpha, beta } => {
                if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
                    Ok(())
                } else {
                    bad(format!(
                        "beta-like needs alpha, beta > 0, got ({alpha}, {beta})"
                    ))
                }
            }
            DensityFamily::FractionalHh { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    bad(format!("fractional-hh needs alpha > 0, got {alpha}"))
                }
            }
            DensityFamily::Exponential { rate } => {
                if rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    bad(format!("exponential needs rate > 0, got {rate}"))
                }
            }
            DensityFamily::Pareto { shape } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    bad(format!("pareto needs shape > 0, got {shape}"))
                } else if !(support.lo > 0.0) {
                    bad(format!("pareto needs a positive scale, got {}", support.lo))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn ln_beta(alpha: f64, beta: f64) -> f64 {
        ln_gamma(alpha).expect("alpha > 0") + ln_gamma(beta).expect("beta > 0")
            - ln_gamma(alpha + beta).expect("alpha + beta > 0")
    }

    pub fn pdf(&self, support: &Domain, x: f64) -> f64 {
        let (a, b) = (support.lo, support.hi);
        if x < a || x > b {
            return 0.0;
        }
        match *self {
            DensityFamily::Uniform {} => 1.0 / (b - a),
            DensityFamily::BetaLike { alpha, beta } => {
                let w = b - a;
                let log_norm = Self::ln_beta(alpha, beta) + (alpha + beta - 1.0) * w.ln();
                ((alpha - 1.0) * (x - a).ln() + (beta - 1.0) * (b - x).ln() - log_norm).exp()
            }
            DensityFamily::FractionalHh { alpha } => {
                let w = b - a;
                alpha / (2.0 * w.powf(alpha))
                    * ((x - a).powf(alpha - 1.0) + (b - x).powf(alpha - 1.0))
            }
            DensityFamily::Exponential { rate } => rate * (-rate * (x - a)).exp(),
            DensityFamily::Pareto { shape } => shape * a.powf(shape) / x.powf(shape + 1.0),
        }
    }

    /// `E h(X)` by quadrature.
    pub fn expect<H: Fn(f64) -> f64>(
        &self,
        support: &Domain,
        plan: &QuadraturePlan,
        h: H,
    ) -> Result<Integral> {
        let (a, b) = (support.lo, support.hi);
        match *self {
            DensityFamily::Uniform {} => {
                let w = b - a;
                let i = integrate(&h, a, b, plan)?;
                Ok(Integral {
                    value: i.value / w,
                    error_estimate: i.error_estimate / w,
                })
            }
            DensityFamily::BetaLike { alpha, beta } => {
                let norm = (Self::ln_beta(alpha, beta) + (alpha + beta - 1.0) * (b - a).ln()).exp();
                let i = integrate_jacobi_two_sided(&h, a, b, alpha - 1.0, beta - 1.0, plan)?;
                Ok(Integral {
                    value: i.value / norm,
                    error_estimate: i.error_estimate / norm,
                })
            }
            DensityFamily::FractionalHh { alpha } => {
                let w = b - a;
                if alpha >= 1.0 {
                    // bounded density: integrate it directly
                    integrate(|x| self.pdf(support, x) * h(x), a, b, plan)
                } else {
                    // mixture of the two power laws, each mapped through its
                    // quantile u -> a + w u^(1/alpha), which is smooth for alpha < 1
                    let inv = 1.0 / alpha;
                    let left = integrate(|u| h(a + w * u.powf(inv)), 0.0, 1.0, plan)?;
                    let right = integrate(|u| h(b - w * u.powf(inv)), 0.0, 1.0, plan)?;
                    Ok(Integral {
                        value: 0.5 * (left.value + right.value),
                        error_estimate: 0.5 * (left.error_estimate + right.error_estimate),
                    })
                }
            }
            DensityFamily::Exponential { rate } => {
                half_line(|x| self.pdf(support, x) * h(x), a, 1.0 / rate, plan)
            }
            DensityFamily::Pareto { .. } => half_line(|x| self.pdf(support, x) * h(x), a, a, plan),
        }
    }

    /// One draw by inverse CDF (or a Beta draw for `beta-like`).
    pub fn draw<R: Rng>(&self, support: &Domain, rng: &mut R) -> f64 {
        let (a, b) = (support.lo, support.hi);
        let u: f64 = rng.random();
        match *self {
            DensityFamily::Uniform {} => a + (b - a) * u,
            DensityFamily::BetaLike { alpha, beta } => {
                let beta = Beta::new(alpha, beta).expect("validated parameters");
                a + (b - a) * beta.sample(rng)
            }
            DensityFamily::FractionalHh { alpha } => {
                let v: f64 = rng.random();
                let r = (b - a) * v.powf(1.0 / alpha);
                if u < 0.5 {
                    a + r
                } else {
                    b - r
                }
            }
            DensityFamily::Exponential { rate } => a - (-u).ln_1p() / rate,
            DensityFamily::Pareto { shape } => a * (1.0 - u).powf(-1.0 / shape),
        }
    }
}

/// `∫_a^∞ g` over panels of doubling width starting at `scale`. The last
/// panel's magnitude is added to the error estimate as the tail.
fn half_line<G: Fn(f64) -> f64>(
    g: G,
    a: f64,
    scale: f64,
    plan: &QuadraturePlan,
) -> Result<Integral> {
    let mut total = Integral {
        value: 0.0,
        error_estimate: 0.0,
    };
    let mut lo = a;
    let mut width = scale;
    for k in 0..MAX_HALF_LINE_PANELS {
        let piece = integrate(&g, lo, lo + width, plan)?;
        if !piece.value.is_finite() {
            break;
        }
        total = total + piece;
        if k >= 4 && piece.value.abs() <= plan.abs_tolerance.max(1e-15 * total.value.abs()) {
            total.error_estimate += piece.value.abs();
            return Ok(total);
        }
        lo += width;
        width *= 2.0;
    }
    Err(Error::Convergence {
        best: total.value,
        error_estimate: f64::INFINITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Domain {
        Domain::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn densities_integrate_to_one() {
        let plan = QuadraturePlan::default();
        let cases = [
            (DensityFamily::Uniform {}, Domain::new(-1.0, 2.0).unwrap()),
            (
                DensityFamily::BetaLike {
                    alpha: 0.5,
                    beta: 2.5,
                },
                Domain::new(1.0, 3.0).unwrap(),
            ),
            (DensityFamily::FractionalHh { alpha: 0.4 }, unit()),
            (
                DensityFamily::FractionalHh { alpha: 2.5 },
                Domain::new(0.5, 2.0).unwrap(),
            ),
            (
                DensityFamily::Exponential { rate: 3.0 },
                Domain::unbounded(1.0),
            ),
            (DensityFamily::Pareto { shape: 2.5 }, Domain::unbounded(1.0)),
        ];
        for (d, s) in cases {
            d.validate(&s).unwrap();
            let mass = d.expect(&s, &plan, |_| 1.0).unwrap();
            assert!((mass.value - 1.0).abs() < 1e-10, "{d:?}: {}", mass.value);
        }
    }

    #[test]
    fn known_means() {
        let plan = QuadraturePlan::default();
        let beta = DensityFamily::BetaLike {
            alpha: 2.0,
            beta: 3.0,
        };
        let m = beta.expect(&unit(), &plan, |x| x).unwrap().value;
        assert!((m - 0.4).abs() < 1e-12);
        let e = DensityFamily::Exponential { rate: 0.5 };
        let m = e
            .expect(&Domain::unbounded(0.0), &plan, |x| x * x)
            .unwrap()
            .value;
        assert!((m - 8.0).abs() < 1e-9);
        // E X for Pareto(shape 3, scale 1) = 3/2
        let p = DensityFamily::Pareto { shape: 3.0 };
        let m = p
            .expect(&Domain::unbounded(1.0), &plan, |x| x)
            .unwrap()
            .value;
        assert!((m - 1.5).abs() < 1e-9);
    }

    #[test]
    fn divergent_moment_is_reported() {
        let p = DensityFamily::Pareto { shape: 2.0 };
        let r = p.expect(&Domain::unbounded(1.0), &QuadraturePlan::default(), |x| {
            x * x
        });
        assert!(matches!(r, Err(Error::Convergence { .. })));
    }

    #[test]
    fn fractional_routes_agree_across_alpha_one() {
        // the quantile route (alpha < 1) and the direct route (alpha >= 1) meet
        let plan = QuadraturePlan::default();
        let f = |x: f64| x * x * x + x.exp();
        let below = DensityFamily::FractionalHh { alpha: 1.0 - 1e-9 }
            .expect(&unit(), &plan, f)
            .unwrap()
            .value;
        let at = DensityFamily::FractionalHh { alpha: 1.0 }
            .expect(&unit(), &plan, f)
            .unwrap()
            .value;
        assert!((below - at).abs() < 1e-7);
    }

    #[test]
    fn rejects_mismatched_support() {
        assert!(DensityFamily::Uniform {}
            .validate(&Domain::unbounded(0.0))
            .is_err());
        assert!(DensityFamily::Exponential { rate: 1.0 }
            .validate(&unit())
            .is_err());
        assert!(DensityFamily::Pareto { shape: 1.0 }
            .validate(&Domain::unbounded(0.0))
            .is_err());
        assert!(DensityFamily::BetaLike {
            alpha: 0.0,
            beta: 1.0
        }
        .validate(&unit())
        .is_err());
    }
}
