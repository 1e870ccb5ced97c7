//! Random variables with moment, p-norm and expectation engines.

mod density;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Domain, FunctionSpec};
use crate::numerics::{pnorm_rescaled, QuadraturePlan, ToleranceProfile};

pub use density::DensityFamily;

/// Largest moment order accepted by [`RandomVariable::shifted_moment`].
pub const MAX_MOMENT_ORDER: u32 = 64;

/// Tolerance on the total mass of a discrete distribution.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RandomVariableKind {
    Discrete {
        atoms: Vec<f64>,
        probs: Vec<f64>,
    },
    Sample {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Density {
        #[serde(flatten)]
        family: DensityFamily,
        support: Domain,
        #[serde(default)]
        plan: QuadraturePlan,
    },
}

/// A validated random variable. Deserialization runs the same checks as
/// the constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RandomVariableKind", into = "RandomVariableKind")]
pub struct RandomVariable {
    kind: RandomVariableKind,
}

impl TryFrom<RandomVariableKind> for RandomVariable {
    type Error = Error;
    fn try_from(kind: RandomVariableKind) -> Result<Self> {
        RandomVariable::new(kind)
    }
}

impl From<RandomVariable> for RandomVariableKind {
    fn from(rv: RandomVariable) -> Self {
        rv.kind
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MomentMethod {
    ExactSum,
    Quadrature,
    MonteCarlo { n: usize, seed: Option<u64> },
}

/// `E (X - shift)^order` and the corresponding norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub order: u32,
    pub shift: f64,
    pub raw: f64,
    pub norm: f64,
    pub method: MomentMethod,
    pub error_estimate: f64,
}

/// An expectation with its absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    pub error_estimate: f64,
}

impl RandomVariable {
    pub fn new(kind: RandomVariableKind) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        match &kind {
            RandomVariableKind::Discrete { atoms, probs } => {
                if atoms.is_empty() || atoms.len() != probs.len() {
                    return bad(format!(
                        "discrete needs matching nonempty atoms and probs, got {} and {}",
                        atoms.len(),
                        probs.len()
                    ));
                }
                if atoms.iter().any(|a| !a.is_finite()) {
                    return bad("atoms must be finite".into());
                }
                if probs.iter().any(|p| !(*p >= 0.0)) {
                    return bad("probabilities must be >= 0".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > PROB_SUM_TOL {
                    return bad(format!("probabilities sum to {total}, expected 1"));
                }
            }
            RandomVariableKind::Sample { values, .. } => {
                if values.is_empty() {
                    return Err(Error::EmptyData);
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("sample values must be finite".into());
                }
            }
            RandomVariableKind::Density {
                family,
                support,
                plan,
            } => {
                family.validate(support)?;
                plan.validate()?;
            }
        }
        Ok(RandomVariable { kind })
    }

    pub fn kind(&self) -> &RandomVariableKind {
        &self.kind
    }

    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        RandomVariable::new(RandomVariableKind::Discrete { atoms, probs })
    }

    /// Equal weights on the given atoms.
    pub fn uniform_discrete(atoms: Vec<f64>) -> Result<Self> {
        let n = atoms.len().max(1);
        let probs = vec![1.0 / n as f64; atoms.len()];
        RandomVariable::discrete(atoms, probs)
    }

    pub fn point_mass(c: f64) -> Result<Self> {
        RandomVariable::discrete(vec![c], vec![1.0])
    }

    /// `a` with probability `t`, `b` with probability `1 - t`.
    pub fn two_point(a: f64, b: f64, t: f64) -> Result<Self> {
        if !(a < b) || !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidDistribution(format!(
                "two-point needs a < b and t in [0, 1], got a = {a}, b = {b}, t = {t}"
            )));
        }
        if t == 1.0 {
            return RandomVariable::point_mass(a);
        }
        if t == 0.0 {
            return RandomVariable::point_mass(b);
        }
        RandomVariable::discrete(vec![a, b], vec![t, 1.0 - t])
    }

    pub fn sample(values: Vec<f64>) -> Result<Self> {
        RandomVariable::new(RandomVariableKind::Sample { values, seed: None })
    }

    pub fn density(family: DensityFamily, lo: f64, hi: f64) -> Result<Self> {
        RandomVariable::new(RandomVariableKind::Density {
            family,
            support: Domain::new(lo, hi)?,
            plan: QuadraturePlan::default(),
        })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        RandomVariable::density(DensityFamily::Uniform {}, a, b)
    }

    pub fn with_plan(mut self, new_plan: QuadraturePlan) -> Result<Self> {
        new_plan.validate()?;
        if let RandomVariableKind::Density { plan, .. } = &mut self.kind {
            *plan = new_plan;
        }
        Ok(self)
    }

    /// `[inf X, sup X]`; the upper end is `+∞` for half-line densities.
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            RandomVariableKind::Discrete { atoms, probs } => {
                let live = atoms
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(a, _)| *a);
                let lo = live.clone().fold(f64::INFINITY, f64::min);
                let hi = live.fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            RandomVariableKind::Sample { values, .. } => (
                values.iter().copied().fold(f64::INFINITY, f64::min),
                values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ),
            RandomVariableKind::Density { support, .. } => (support.lo, support.hi),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.support().1.is_finite()
    }

    /// `E h(X)` for an arbitrary closure.
    pub fn expect_fn<H: Fn(f64) -> f64>(&self, h: H) -> Result<Expectation> {
        match &self.kind {
            RandomVariableKind::Discrete { atoms, probs } => {
                let value = atoms
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(a, p)| p * h(*a))
                    .sum();
                Ok(Expectation {
                    value,
                    error_estimate: 0.0,
                })
            }
            RandomVariableKind::Sample { values, .. } => {
                let n = values.len() as f64;
                let (mut mean, mut m2) = (0.0, 0.0);
                for (i, v) in values.iter().enumerate() {
                    let y = h(*v);
                    let d = y - mean;
                    mean += d / (i + 1) as f64;
                    m2 += d * (y - mean);
                }
                let var = if values.len() > 1 {
                    m2 / (n - 1.0)
                } else {
                    0.0
                };
                Ok(Expectation {
                    value: mean,
                    error_estimate: (var / n).sqrt(),
                })
            }
            RandomVariableKind::Density {
                family,
                support,
                plan,
            } => {
                let i = family.expect(support, plan, h)?;
                Ok(Expectation {
                    value: i.value,
                    error_estimate: i.error_estimate,
                })
            }
        }
    }

    fn check_inside(&self, domain: &Domain) -> Result<()> {
        let (lo, hi) = self.support();
        let tol = ToleranceProfile::default().eq_abs;
        if lo < domain.lo - tol || hi > domain.hi + tol {
            return Err(Error::DomainMismatch {
                support_lo: lo,
                support_hi: hi,
                domain_lo: domain.lo,
                domain_hi: domain.hi,
            });
        }
        Ok(())
    }

    /// `E f(X)`: the oracle for every bound.
    pub fn expect(&self, f: &FunctionSpec) -> Result<Expectation> {
        self.check_inside(&f.domain)?;
        self.expect_fn(|x| f.eval(x))
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.expect_fn(|x| x)?.value)
    }

    /// `E (X - shift)^order` with `‖X - shift‖_order`.
    ///
    /// Mass below `shift - eq_abs` is a support violation. Values are divided
    /// by `sup X - shift` before powering so that moments of high order stay
    /// representable.
    pub fn shifted_moment(&self, shift: f64, order: u32) -> Result<MomentReport> {
        self.oriented_moment(shift, order, false)
    }

    /// `E (anchor - X)^order` with `‖anchor - X‖_order`; mass above
    /// `anchor + eq_abs` is a support violation.
    pub fn reflected_moment(&self, anchor: f64, order: u32) -> Result<MomentReport> {
        self.oriented_moment(anchor, order, true)
    }

    fn oriented_moment(&self, shift: f64, order: u32, reflected: bool) -> Result<MomentReport> {
        if order == 0 || order > MAX_MOMENT_ORDER {
            return Err(Error::Domain(format!(
                "moment order must be in 1..={MAX_MOMENT_ORDER}, got {order}"
            )));
        }
        let (lo, hi) = self.support();
        let tol = ToleranceProfile::default().eq_abs;
        // distance from the anchor to the nearest and farthest mass
        let (near, far) = if reflected {
            (shift - hi, shift - lo)
        } else {
            (lo - shift, hi - shift)
        };
        if near < -tol {
            let side = if reflected { "above" } else { "below" };
            return Err(Error::SupportViolation(format!(
                "mass at {} lies {side} the anchor {shift}",
                if reflected { hi } else { lo }
            )));
        }
        let scale = if far.is_finite() {
            far
        } else {
            1.0 + near.abs()
        };
        let method = match &self.kind {
            RandomVariableKind::Discrete { .. } => MomentMethod::ExactSum,
            RandomVariableKind::Sample { values, seed } => MomentMethod::MonteCarlo {
                n: values.len(),
                seed: *seed,
            },
            RandomVariableKind::Density { .. } => MomentMethod::Quadrature,
        };
        if scale <= 0.0 {
            return Ok(MomentReport {
                order,
                shift,
                raw: 0.0,
                norm: 0.0,
                method,
                error_estimate: 0.0,
            });
        }
        let k = order as i32;
        let sign = if reflected { -1.0 } else { 1.0 };
        let e = self
            .expect_fn(|x| ((sign * (x - shift)).max(0.0) / scale).powi(k))
            .map_err(|e| match e {
                Error::Convergence { .. } => Error::MomentInfinite { order },
                other => other,
            })?;
        let normalized = e.value.max(0.0);
        let scale_pow = scale.powi(k);
        Ok(MomentReport {
            order,
            shift,
            raw: normalized * scale_pow,
            norm: pnorm_rescaled(normalized, order, scale)?,
            method,
            error_estimate: e.error_estimate * scale_pow,
        })
    }

    /// `E X^j` without any support requirement.
    pub fn raw_moment(&self, j: u32) -> Result<Expectation> {
        self.expect_fn(|x| x.powi(j as i32))
    }

    /// Distribution of `λ X` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("scale must be > 0, got {lambda}")));
        }
        let kind = match &self.kind {
            RandomVariableKind::Discrete { atoms, probs } => RandomVariableKind::Discrete {
                atoms: atoms.iter().map(|a| lambda * a).collect(),
                probs: probs.clone(),
            },
            RandomVariableKind::Sample { values, seed } => RandomVariableKind::Sample {
                values: values.iter().map(|a| lambda * a).collect(),
                seed: *seed,
            },
            RandomVariableKind::Density {
                family,
                support,
                plan,
            } => {
                let family = match *family {
                    DensityFamily::Exponential { rate } => DensityFamily::Exponential {
                        rate: rate / lambda,
                    },
                    other => other,
                };
                RandomVariableKind::Density {
                    family,
                    support: Domain {
                        lo: lambda * support.lo,
                        hi: lambda * support.hi,
                    },
                    plan: *plan,
                }
            }
        };
        RandomVariable::new(kind)
    }

    /// `n` draws with a ChaCha8 generator seeded from `seed`.
    pub fn sample_mc(&self, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyData);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = match &self.kind {
            RandomVariableKind::Discrete { atoms, probs } => {
                let mut cdf = Vec::with_capacity(probs.len());
                let mut acc = 0.0;
                for p in probs {
                    acc += p;
                    cdf.push(acc);
                }
                (0..n)
                    .map(|_| {
                        let u: f64 = rng.random::<f64>() * acc;
                        let i = cdf.partition_point(|c| *c <= u).min(atoms.len() - 1);
                        atoms[i]
                    })
                    .collect()
            }
            RandomVariableKind::Sample { values, .. } => (0..n)
                .map(|_| values[rng.random_range(0..values.len())])
                .collect(),
            RandomVariableKind::Density {
                family, support, ..
            } => (0..n).map(|_| family.draw(support, &mut rng)).collect(),
        };
        RandomVariable::new(RandomVariableKind::Sample {
            values,
            seed: Some(seed),
        })
    }

    /// Canonical JSON text, used for input digests.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }
}
