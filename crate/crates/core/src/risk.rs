//! Certainty equivalents, p-more-risk-averse comparisons and the ℒ_p risk
//! measure.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexity::{certify_i, certify_lp, CertifyConfig, ConvexityCertificate};
use crate::digest::inputs_digest;
use crate::distributions::RandomVariable;
use crate::error::{Error, Result};
use crate::functions::{compose_inverse_on, FunctionSpec};
use crate::jensen::{jensen_lower, BoundOptions};
use crate::numerics::{invert_monotone, invert_monotone_expanding, ToleranceProfile};

/// Default horizon for comparisons of loss functions on `[0, ∞)`.
pub const DEFAULT_RISK_HORIZON: f64 = 10.0;

/// `l^-1(E l(X))` for strictly increasing `l`.
pub fn certainty_equivalent(
    l: &FunctionSpec,
    x: &RandomVariable,
    tol: &ToleranceProfile,
) -> Result<f64> {
    let target = x.expect(l)?.value;
    let (lo, hi) = x.support();
    if lo == hi {
        return Ok(lo);
    }
    if !target.is_finite() {
        return Err(Error::Overflow(format!("E l(X) = {target} for l = {l}")));
    }
    if let Some(c) = l.family.closed_form_inverse(target) {
        if c >= lo - tol.eq_abs && c <= hi + tol.eq_abs {
            return Ok(c);
        }
    }
    if hi.is_finite() {
        invert_monotone(|t| l.eval(t), target, (lo, hi), tol)
    } else {
        invert_monotone_expanding(|t| l.eval(t), target, lo, tol)
    }
}

/// A two-point lottery `{x1 w.p. lambda, x2}` with `E l(X) = l(c)` and
/// `‖f(X)‖_p > f(c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Falsifier {
    pub x1: f64,
    pub x2: f64,
    pub lambda: f64,
    pub c: f64,
    /// `‖f(X)‖_p`
    pub lhs: f64,
    /// `f(c)`
    pub rhs: f64,
    pub margin: f64,
    pub trial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskComparison {
    pub l: FunctionSpec,
    pub f: FunctionSpec,
    pub p: u32,
    pub horizon: f64,
    /// Membership of `l∘f^-1` in 𝕴(p-1, f(0), f(horizon)).
    pub certificate: ConvexityCertificate,
    pub empirical_falsifier: Option<Falsifier>,
}

/// Certifies that `l` is p-more risk averse than `f` on `[0, horizon]` via
/// the convexity class of `l∘f^-1`.
pub fn certify_p_more_risk_averse(
    l: &FunctionSpec,
    f: &FunctionSpec,
    p: u32,
    horizon: f64,
    cfg: &CertifyConfig,
) -> Result<RiskComparison> {
    if p == 0 {
        return Err(Error::Domain("risk aversion order p must be >= 1".into()));
    }
    let g = compose_inverse_on(l, f, 0.0, horizon)?;
    let certificate = certify_i(&g, p - 1, g.domain.lo, g.domain.hi, cfg);
    Ok(RiskComparison {
        l: l.clone(),
        f: f.clone(),
        p,
        horizon,
        certificate,
        empirical_falsifier: None,
    })
}

/// Certification followed by a falsifier search: undirected when the
/// certificate passes, seeded at the witness when it fails.
pub fn compare_risk_aversion(
    l: &FunctionSpec,
    f: &FunctionSpec,
    p: u32,
    horizon: f64,
    trials: usize,
    seed: u64,
    cfg: &CertifyConfig,
) -> Result<RiskComparison> {
    let mut cmp = certify_p_more_risk_averse(l, f, p, horizon, cfg)?;
    let search = FalsifierSearch {
        horizon,
        tol: cfg.tol,
    };
    cmp.empirical_falsifier = match &cmp.certificate.witness {
        Some(w) if !cmp.certificate.passed() => {
            let around = f.invert(w.point, &cfg.tol).unwrap_or(0.0);
            search.directed(l, f, p, around, trials, seed)
        }
        _ => search.run(l, f, p, trials, seed),
    };
    Ok(cmp)
}

/// Random search over two-point lotteries on `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FalsifierSearch {
    pub horizon: f64,
    pub tol: ToleranceProfile,
}

impl Default for FalsifierSearch {
    fn default() -> Self {
        FalsifierSearch {
            horizon: DEFAULT_RISK_HORIZON,
            tol: ToleranceProfile::default(),
        }
    }
}

/// [`FalsifierSearch::run`] with the default horizon.
pub fn falsify_p_more_risk_averse(
    l: &FunctionSpec,
    f: &FunctionSpec,
    p: u32,
    trials: usize,
    seed: u64,
) -> Option<Falsifier> {
    FalsifierSearch::default().run(l, f, p, trials, seed)
}

impl FalsifierSearch {
    /// Lotteries with both outcomes uniform on `[0, horizon]`.
    pub fn run(
        &self,
        l: &FunctionSpec,
        f: &FunctionSpec,
        p: u32,
        trials: usize,
        seed: u64,
    ) -> Option<Falsifier> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.horizon;
        (0..trials).find_map(|trial| {
            let (x1, x2, lambda) = (
                h * rng.random::<f64>(),
                h * rng.random::<f64>(),
                rng.random::<f64>(),
            );
            self.probe(l, f, p, x1, x2, lambda, trial)
        })
    }

    /// Lotteries straddling `around` at log-uniform scales; a quarter of
    /// the trials put one outcome at 0, where the order conditions live.
    pub fn directed(
        &self,
        l: &FunctionSpec,
        f: &FunctionSpec,
        p: u32,
        around: f64,
        trials: usize,
        seed: u64,
    ) -> Option<Falsifier> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = self.horizon;
        let centre = around.clamp(0.0, h);
        (0..trials).find_map(|trial| {
            let r = h * 10f64.powf(-6.0 * rng.random::<f64>());
            let (u, v, lambda) = (
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
            );
            let x1 = if trial % 4 == 3 {
                0.0
            } else {
                (centre - r * u).max(0.0)
            };
            let x2 = (centre + r * v).min(h);
            self.probe(l, f, p, x1, x2, lambda, trial)
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn probe(
        &self,
        l: &FunctionSpec,
        f: &FunctionSpec,
        p: u32,
        x1: f64,
        x2: f64,
        lambda: f64,
        trial: usize,
    ) -> Option<Falsifier> {
        if x1 == x2 || !(lambda > 0.0 && lambda < 1.0) {
            return None;
        }
        let x = RandomVariable::discrete(vec![x1, x2], vec![lambda, 1.0 - lambda]).ok()?;
        let c = certainty_equivalent(l, &x, &self.tol).ok()?;
        let pi = p as i32;
        let moment =
            lambda * f.eval(x1).abs().powi(pi) + (1.0 - lambda) * f.eval(x2).abs().powi(pi);
        let lhs = moment.powf(1.0 / p as f64);
        let rhs = f.eval(c);
        let margin = lhs - rhs;
        (margin > self.tol.eq_abs + self.tol.eq_rel * rhs.abs()).then_some(Falsifier {
            x1,
            x2,
            lambda,
            c,
            lhs,
            rhs,
            margin,
            trial,
        })
    }
}

/// One loss function tried by the risk-measure sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCandidate {
    pub label: String,
    pub certified: bool,
    pub certainty_equivalent: Option<f64>,
    /// `l(‖X‖_{p+1})`, when `l` also certifies in 𝕴(p, 0, horizon).
    pub jensen_lower: Option<f64>,
    pub expected_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasureReport {
    pub distribution_digest: String,
    pub p: u32,
    pub horizon: f64,
    /// `‖X‖_{p+1}`
    pub closed_form: f64,
    pub sweep_infimum: f64,
    pub achiever: String,
    pub candidates: Vec<SweepCandidate>,
}

/// Loss functions swept for the ℒ_p infimum, `x^{p+1}` first.
pub fn sweep_family(p: u32, horizon: f64) -> Result<Vec<FunctionSpec>> {
    let base = p as f64 + 1.0;
    let power = |q: f64| -> Result<FunctionSpec> {
        Ok(FunctionSpec::shifted_power(q, 0.0)?
            .with_domain(0.0, horizon)?
            .with_label(format!("x^{q}")))
    };
    let mut out = vec![power(base)?];
    for dq in [0.5, 1.0, 2.0] {
        out.push(power(base + dq)?);
    }
    for beta in [0.1f64, 0.5, 1.0, 2.0] {
        for gamma in [1.0f64, 2.0, 3.0] {
            // (1 + βx)^γ = β^γ (x + 1/β)^γ
            let factor =
                FunctionSpec::shifted_power(gamma, -1.0 / beta)?.scaled(beta.powf(gamma))?;
            out.push(
                power(base)?
                    .product(&factor)?
                    .with_domain(0.0, horizon)?
                    .with_label(format!("x^{base}(1+{beta}x)^{gamma}")),
            );
        }
    }
    for beta in [0.1, 0.5, 1.0] {
        out.push(
            power(base)?
                .product(&FunctionSpec::exponential(beta)?)?
                .with_domain(0.0, horizon)?
                .with_label(format!("x^{base}e^({beta}x)")),
        );
    }
    Ok(out)
}

/// `R_ℒp(X) = ‖X‖_{p+1}` with a sweep over certified members of ℒ_p.
pub fn risk_measure(x: &RandomVariable, p: u32, cfg: &CertifyConfig) -> Result<RiskMeasureReport> {
    if p == 0 {
        return Err(Error::Domain("risk measure order p must be >= 1".into()));
    }
    let (lo, hi) = x.support();
    if lo < -cfg.tol.eq_abs {
        return Err(Error::SupportViolation(format!("loss at {lo} is negative")));
    }
    let closed_form = x.shifted_moment(0.0, p + 1)?.norm;
    let reach = if hi.is_finite() { hi } else { closed_form };
    let horizon = (10.0 * reach).max(10.0);
    let opts = BoundOptions {
        skip_oracle: true,
        tol: cfg.tol,
    };
    let mut candidates = Vec::new();
    let (mut best, mut achiever) = (f64::INFINITY, String::new());
    for l in sweep_family(p, horizon)? {
        let certified = certify_lp(&l, p, horizon, cfg).passed();
        let mut cand = SweepCandidate {
            label: l.label.clone(),
            certified,
            certainty_equivalent: None,
            jensen_lower: None,
            expected_loss: None,
        };
        if certified {
            cand.expected_loss = x.expect(&l).ok().map(|e| e.value).filter(|v| v.is_finite());
            cand.certainty_equivalent = certainty_equivalent(&l, x, &cfg.tol).ok();
            let icert = certify_i(&l, p, 0.0, horizon, cfg);
            if icert.passed() {
                cand.jensen_lower = jensen_lower(&l, &icert, x, &opts).ok().map(|r| r.value);
            }
        }
        if let Some(ce) = cand.certainty_equivalent {
            // ties keep the earlier candidate
            if ce < best - 1e-12 * best.abs().max(1.0) || achiever.is_empty() {
                best = ce;
                achiever = cand.label.clone();
            }
        }
        candidates.push(cand);
    }
    if achiever.is_empty() {
        return Err(Error::Construction(
            "no sweep candidate certified in ℒ_p".into(),
        ));
    }
    Ok(RiskMeasureReport {
        distribution_digest: inputs_digest(&[&x.fingerprint()]),
        p,
        horizon,
        closed_form,
        sweep_infimum: best,
        achiever,
        candidates,
    })
}
