//! Log-likelihood lower bounds over finite latent variables and an EM run
//! on a Bernoulli mixture that logs them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::RandomVariable;
use crate::error::{Error, Result};

const RESPONSIBILITY_SUM_TOL: f64 = 1e-12;
/// `b_i / E X_i` above this makes the tight bound numerically dominated.
const LOOSENESS_WARNING: f64 = 1e6;
const MEAN_CLAMP: f64 = 1e-6;

/// One datum: `p(x_i, z | θ)` and `q_i(z)` over the latent values `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentRow {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub latent: Vec<String>,
    pub likelihood: Vec<f64>,
    pub responsibility: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct LikelihoodInstance {
    rows: Vec<LatentRow>,
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    rows: Vec<LatentRow>,
}

impl TryFrom<RawInstance> for LikelihoodInstance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        LikelihoodInstance::new(raw.rows)
    }
}

impl From<LikelihoodInstance> for RawInstance {
    fn from(inst: LikelihoodInstance) -> Self {
        RawInstance { rows: inst.rows }
    }
}

impl LikelihoodInstance {
    pub fn new(rows: Vec<LatentRow>) -> Result<Self> {
        let bad = |i: usize, m: &str| Err(Error::InvalidInstance(format!("row {i}: {m}")));
        if rows.is_empty() {
            return Err(Error::EmptyData);
        }
        for (i, r) in rows.iter().enumerate() {
            if r.likelihood.is_empty() || r.likelihood.len() != r.responsibility.len() {
                return bad(
                    i,
                    "likelihood and responsibility rows must be nonempty and of equal length",
                );
            }
            if !r.latent.is_empty() && r.latent.len() != r.likelihood.len() {
                return bad(i, "latent labels do not match the row length");
            }
            if r.likelihood.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return bad(i, "likelihood values must be finite and > 0");
            }
            if r.responsibility.iter().any(|v| !(*v > 0.0)) {
                return bad(i, "responsibilities must be > 0");
            }
            let total: f64 = r.responsibility.iter().sum();
            if (total - 1.0).abs() > RESPONSIBILITY_SUM_TOL {
                return bad(i, &format!("responsibilities sum to {total}"));
            }
        }
        Ok(LikelihoodInstance { rows })
    }

    /// Single-row convenience constructor.
    pub fn from_tables(likelihood: &[Vec<f64>], responsibility: &[Vec<f64>]) -> Result<Self> {
        if likelihood.len() != responsibility.len() {
            return Err(Error::InvalidInstance("table lengths differ".into()));
        }
        LikelihoodInstance::new(
            likelihood
                .iter()
                .zip(responsibility)
                .map(|(p, q)| LatentRow {
                    latent: Vec::new(),
                    likelihood: p.clone(),
                    responsibility: q.clone(),
                })
                .collect(),
        )
    }

    pub fn rows(&self) -> &[LatentRow] {
        &self.rows
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    fn atoms(&self, i: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let r = &self.rows[i];
        r.likelihood
            .iter()
            .zip(&r.responsibility)
            .map(|(p, q)| (p / q, *q))
    }

    /// `X_i = p(x_i, z | θ) / q_i(z)` with probability `q_i(z)`.
    pub fn x(&self, i: usize) -> Result<RandomVariable> {
        let (atoms, probs) = self.atoms(i).unzip();
        RandomVariable::discrete(atoms, probs)
    }

    /// `b_i = max_z p(x_i, z | θ) / q_i(z)`.
    pub fn b(&self, i: usize) -> f64 {
        self.atoms(i)
            .map(|(a, _)| a)
            .fold(f64::MIN_POSITIVE, f64::max)
    }

    /// Rows whose tight bound is numerically dominated by a huge `b_i`.
    pub fn warnings(&self) -> Vec<String> {
        (0..self.n())
            .filter_map(|i| {
                let mean: f64 = self.rows[i].likelihood.iter().sum();
                let ratio = self.b(i) / mean;
                (ratio > LOOSENESS_WARNING)
                    .then(|| format!("row {i}: b/E X = {ratio:e} exceeds {LOOSENESS_WARNING:e}"))
            })
            .collect()
    }
}

/// `Σ_i E ln X_i`, the standard EM minorant.
pub fn elbo_classical(inst: &LikelihoodInstance) -> f64 {
    (0..inst.n())
        .map(|i| inst.atoms(i).map(|(a, q)| q * a.ln()).sum::<f64>())
        .sum()
}

/// `Σ_i [ln c_i - (c_i - E X_i) / b_i]` with `c_i = b_i - ‖b_i - X_i‖_2`.
pub fn elbo_tight(inst: &LikelihoodInstance) -> f64 {
    elbo_tight_order(inst, 2)
}

/// Experimental: [`elbo_tight`] with `‖b_i - X_i‖_order`. Only order 2 is
/// backed by a certified bound; other orders may fail to be minorants.
pub fn elbo_tight_order(inst: &LikelihoodInstance, order: u32) -> f64 {
    let k = order.max(1) as i32;
    (0..inst.n())
        .map(|i| {
            let b = inst.b(i);
            let mean: f64 = inst.rows[i].likelihood.iter().sum();
            // scale by b so the moment stays in [0, 1]
            let m: f64 = inst
                .atoms(i)
                .map(|(a, q)| q * ((b - a).max(0.0) / b).powi(k))
                .sum();
            let c = b * (1.0 - m.powf(1.0 / k as f64));
            c.ln() - (c - mean) / b
        })
        .sum()
}

/// `Σ_i ln Σ_z p(x_i, z | θ)`.
pub fn loglik_exact(inst: &LikelihoodInstance) -> f64 {
    inst.rows
        .iter()
        .map(|r| r.likelihood.iter().sum::<f64>().ln())
        .sum()
}

/// Two-component mixture of independent Bernoulli coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliMixture {
    pub weights: [f64; 2],
    pub means: [Vec<f64>; 2],
}

impl BernoulliMixture {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    /// `p(x, z = k | θ)` for both components.
    pub fn joint(&self, x: &[bool]) -> [f64; 2] {
        std::array::from_fn(|k| {
            x.iter()
                .zip(&self.means[k])
                .fold(self.weights[k], |acc, (bit, m)| {
                    acc * if *bit { *m } else { 1.0 - m }
                })
        })
    }

    /// `n` seeded draws.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<bool>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let k = usize::from(rng.random::<f64>() >= self.weights[0]);
                self.means[k]
                    .iter()
                    .map(|m| rng.random::<f64>() < *m)
                    .collect()
            })
            .collect()
    }

    fn instance(&self, data: &[Vec<bool>], q: &[[f64; 2]]) -> Result<LikelihoodInstance> {
        LikelihoodInstance::new(
            data.iter()
                .zip(q)
                .map(|(x, qi)| LatentRow {
                    latent: Vec::new(),
                    likelihood: self.joint(x).to_vec(),
                    responsibility: qi.to_vec(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmTraceRow {
    pub iter: usize,
    pub loglik: f64,
    pub elbo_classical: f64,
    pub elbo_tight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmTrace {
    pub rows: Vec<EmTraceRow>,
    pub initial: BernoulliMixture,
    pub fitted: BernoulliMixture,
}

/// Posterior responsibilities, floored so that every `q_i(z) > 0`.
fn posterior(model: &BernoulliMixture, data: &[Vec<bool>]) -> Vec<[f64; 2]> {
    data.iter()
        .map(|x| {
            let j = model.joint(x);
            let total = j[0] + j[1];
            let q0 = (j[0] / total).clamp(1e-15, 1.0 - 1e-15);
            [q0, 1.0 - q0]
        })
        .collect()
}

fn m_step(data: &[Vec<bool>], q: &[[f64; 2]], dim: usize) -> BernoulliMixture {
    let n = data.len() as f64;
    let mut weights = [0.0; 2];
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    for (x, qi) in data.iter().zip(q) {
        for k in 0..2 {
            weights[k] += qi[k];
            for (m, bit) in means[k].iter_mut().zip(x) {
                if *bit {
                    *m += qi[k];
                }
            }
        }
    }
    for k in 0..2 {
        for m in means[k].iter_mut() {
            *m = (*m / weights[k]).clamp(MEAN_CLAMP, 1.0 - MEAN_CLAMP);
        }
        weights[k] /= n;
    }
    BernoulliMixture { weights, means }
}

/// Seeded initial model: equal weights, means uniform in `[0.25, 0.75]`.
pub fn em_init(dim: usize, seed: u64) -> BernoulliMixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        (0..dim)
            .map(|_| rng.random_range(0.25..0.75))
            .collect::<Vec<f64>>()
    };
    BernoulliMixture {
        weights: [0.5, 0.5],
        means: [draw(), draw()],
    }
}

/// Textbook EM from [`em_init`]. Row `t` logs the log-likelihood at the
/// current parameters and both minorants at the responsibilities of the
/// previous E-step (uniform at `t = 0`).
pub fn em_demo(data: &[Vec<bool>], iters: usize, seed: u64) -> Result<EmTrace> {
    em_from(data, iters, em_init(data.first().map_or(0, Vec::len), seed))
}

/// [`em_demo`] from a given starting model.
pub fn em_from(data: &[Vec<bool>], iters: usize, initial: BernoulliMixture) -> Result<EmTrace> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if iters == 0 {
        return Err(Error::Domain("iters must be >= 1".into()));
    }
    let dim = initial.dim();
    if data.iter().any(|x| x.len() != dim) {
        return Err(Error::InvalidInstance(format!(
            "every datum must have {dim} coordinates"
        )));
    }
    let mut model = initial.clone();
    let mut q = vec![[0.5, 0.5]; data.len()];
    let mut rows = Vec::with_capacity(iters);
    for iter in 0..iters {
        let inst = model.instance(data, &q)?;
        rows.push(EmTraceRow {
            iter,
            loglik: loglik_exact(&inst),
            elbo_classical: elbo_classical(&inst),
            elbo_tight: elbo_tight(&inst),
        });
        q = posterior(&model, data);
        model = m_step(data, &q, dim);
    }
    Ok(EmTrace {
        rows,
        initial,
        fitted: model,
    })
}
