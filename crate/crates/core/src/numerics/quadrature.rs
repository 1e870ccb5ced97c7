//! Quadrature rules: adaptive Gauss–Legendre, adaptive Simpson, and
//! Gauss–Jacobi rules that absorb algebraic endpoint weights.
//!
//! Gauss–Jacobi nodes come from the Golub–Welsch tridiagonal eigenproblem,
//! polished by Newton steps on the three-term recurrence. Weights use the
//! closed-form Christoffel numbers so they do not depend on eigenvector
//! accuracy.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::gamma::ln_gamma_unchecked;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuadratureRule {
    GaussLegendre,
    /// Weight `(t - a)^(alpha - 1)` on the left end of the interval.
    GaussJacobi {
        alpha: f64,
    },
    AdaptiveSimpson,
}

/// Which endpoint carries the algebraic weight `|t - endpoint|^(alpha - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePlan {
    pub rule: QuadratureRule,
    pub node_count: usize,
    pub abs_tolerance: f64,
    pub max_refinements: u32,
}

impl Default for QuadraturePlan {
    fn default() -> Self {
        QuadraturePlan {
            rule: QuadratureRule::GaussLegendre,
            node_count: 64,
            abs_tolerance: 1e-12,
            max_refinements: 40,
        }
    }
}

impl QuadraturePlan {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.abs_tolerance = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count < 2 {
            return Err(Error::Domain(format!(
                "quadrature needs at least 2 nodes, got {}",
                self.node_count
            )));
        }
        if !(self.abs_tolerance >= 0.0) {
            return Err(Error::Domain("abs_tolerance must be >= 0".into()));
        }
        if let QuadratureRule::GaussJacobi { alpha } = self.rule {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::Domain(format!(
                    "gauss-jacobi weight exponent alpha - 1 must exceed -1, got alpha = {alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// A quadrature value with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;
    fn add(self, rhs: Integral) -> Integral {
        Integral {
            value: self.value + rhs.value,
            error_estimate: self.error_estimate + rhs.error_estimate,
        }
    }
}

#[derive(Debug)]
struct NodeWeights {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

type RuleKey = (usize, u64, u64);

fn rule_cache() -> &'static Mutex<HashMap<RuleKey, Arc<NodeWeights>>> {
    static CACHE: OnceLock<Mutex<HashMap<RuleKey, Arc<NodeWeights>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Nodes and weights on [-1, 1] for the weight `(1 - x)^ja (1 + x)^jb`.
fn jacobi_rule(n: usize, ja: f64, jb: f64) -> Arc<NodeWeights> {
    let key = (n, ja.to_bits(), jb.to_bits());
    if let Some(rule) = rule_cache().lock().expect("rule cache poisoned").get(&key) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(build_jacobi_rule(n, ja, jb));
    rule_cache()
        .lock()
        .expect("rule cache poisoned")
        .insert(key, Arc::clone(&rule));
    rule
}

/// Gauss–Jacobi nodes and weights for `n` points; `ja`, `jb` > -1.
pub fn gauss_jacobi_nodes(n: usize, ja: f64, jb: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::Domain(format!("need at least 2 nodes, got {n}")));
    }
    if !(ja > -1.0 && jb > -1.0) {
        return Err(Error::Domain(format!(
            "jacobi exponents must exceed -1, got ({ja}, {jb})"
        )));
    }
    let rule = jacobi_rule(n, ja, jb);
    Ok((rule.nodes.clone(), rule.weights.clone()))
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre_nodes(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    gauss_jacobi_nodes(n, 0.0, 0.0)
}

fn build_jacobi_rule(n: usize, ja: f64, jb: f64) -> NodeWeights {
    let s = ja + jb;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (jb - ja) / (s + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let t = 2.0 * kf + s;
        diag[k] = (jb * jb - ja * ja) / (t * (t + 2.0));
        // (k + s) / (t - 1) is identically 1 at k = 1
        let ratio = if k == 1 { 1.0 } else { (kf + s) / (t - 1.0) };
        off[k - 1] = 2.0 / t * (kf * (kf + ja) * (kf + jb) * ratio / (t + 1.0)).sqrt();
    }
    tridiagonal_eigenvalues(&mut diag, &mut off);
    diag.sort_by(|a, b| a.total_cmp(b));

    let ln_c = ln_gamma_unchecked(n as f64 + ja + 1.0) + ln_gamma_unchecked(n as f64 + jb + 1.0)
        - ln_gamma_unchecked(n as f64 + s + 1.0)
        - ln_gamma_unchecked(n as f64 + 1.0)
        + (s + 1.0) * std::f64::consts::LN_2;
    let c = ln_c.exp();

    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &guess in &diag {
        let mut x = guess.clamp(-1.0 + 1e-300, 1.0 - 1e-300);
        let mut deriv = 0.0;
        for _ in 0..30 {
            let (p, dp) = jacobi_value_and_derivative(n, ja, jb, x);
            deriv = dp;
            let step = p / dp;
            let next = x - step;
            if !next.is_finite() || next <= -1.0 || next >= 1.0 {
                break;
            }
            x = next;
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                let (_, dp) = jacobi_value_and_derivative(n, ja, jb, x);
                deriv = dp;
                break;
            }
        }
        nodes.push(x);
        weights.push(c / ((1.0 - x * x) * deriv * deriv));
    }
    NodeWeights { nodes, weights }
}

fn jacobi_value_and_derivative(n: usize, ja: f64, jb: f64, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = 0.5 * (ja - jb + (2.0 + ja + jb) * x);
    for j in 2..=n {
        let jf = j as f64;
        let t = 2.0 * jf + ja + jb;
        let a = 2.0 * jf * (jf + ja + jb) * (t - 2.0);
        let b = (t - 1.0) * (ja * ja - jb * jb + t * (t - 2.0) * x);
        let c = 2.0 * (jf - 1.0 + ja) * (jf - 1.0 + jb) * t;
        let next = (b * p - c * p_prev) / a;
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let t = 2.0 * nf + ja + jb;
    let dp =
        (nf * (ja - jb - t * x) * p + 2.0 * (nf + ja) * (nf + jb) * p_prev) / (t * (1.0 - x * x));
    (p, dp)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. `off[i]` couples `diag[i]` and `diag[i + 1]`; the last
/// entry is scratch. Eigenvalues are left in `diag`, unsorted.
fn tridiagonal_eigenvalues(diag: &mut [f64], off: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                break;
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}

/// `∫_a^b (b - t)^ja (t - a)^jb g(t) dt` with a single fixed rule.
fn jacobi_panel<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, ja: f64, jb: f64, n: usize) -> f64 {
    let rule = jacobi_rule(n, ja, jb);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * g(mid + half * x))
        .sum();
    half.powf(ja + jb + 1.0) * sum
}

fn accept(err: f64, tol: f64, value: f64) -> bool {
    err <= tol.max(64.0 * f64::EPSILON * value.abs())
}

fn adaptive_legendre<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    n: usize,
    depth_left: u32,
) -> Integral {
    let m = 0.5 * (a + b);
    let left = jacobi_panel(f, a, m, 0.0, 0.0, n);
    let right = jacobi_panel(f, m, b, 0.0, 0.0, n);
    let halves = left + right;
    let err = (halves - whole).abs();
    if accept(err, tol, halves) || depth_left == 0 || m <= a || m >= b {
        return Integral {
            value: halves,
            error_estimate: err,
        };
    }
    adaptive_legendre(f, a, m, left, 0.5 * tol, n, depth_left - 1)
        + adaptive_legendre(f, m, b, right, 0.5 * tol, n, depth_left - 1)
}

fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    (a, fa): (f64, f64),
    (m, fm): (f64, f64),
    (b, fb): (f64, f64),
    whole: f64,
    tol: f64,
    depth_left: u32,
) -> Integral {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if accept(delta.abs() / 15.0, tol, left + right) || depth_left == 0 {
        return Integral {
            value: left + right + delta / 15.0,
            error_estimate: delta.abs() / 15.0,
        };
    }
    adaptive_simpson(
        f,
        (a, fa),
        (lm, flm),
        (m, fm),
        left,
        0.5 * tol,
        depth_left - 1,
    ) + adaptive_simpson(
        f,
        (m, fm),
        (rm, frm),
        (b, fb),
        right,
        0.5 * tol,
        depth_left - 1,
    )
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "integration interval must satisfy finite a < b, got [{a}, {b}]"
        )));
    }
    Ok(())
}

fn finish(result: Integral, plan: &QuadraturePlan) -> Result<Integral> {
    if !result.value.is_finite() {
        return Err(Error::Convergence {
            best: result.value,
            error_estimate: f64::INFINITY,
        });
    }
    if accept(result.error_estimate, plan.abs_tolerance, result.value) {
        Ok(result)
    } else {
        Err(Error::Convergence {
            best: result.value,
            error_estimate: result.error_estimate,
        })
    }
}

/// `∫_a^b f(x) dx` under `plan`.
///
/// Gauss–Legendre panels are bisected until the panel and its two halves
/// agree within the local share of `abs_tolerance` (floored at a few ulps of
/// the panel value). A `GaussJacobi` rule integrates against its left
/// weight `(t - a)^(alpha - 1)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    plan: &QuadraturePlan,
) -> Result<Integral> {
    plan.validate()?;
    check_interval(a, b)?;
    match plan.rule {
        QuadratureRule::GaussLegendre => {
            let whole = jacobi_panel(&f, a, b, 0.0, 0.0, plan.node_count);
            let result = adaptive_legendre(
                &f,
                a,
                b,
                whole,
                plan.abs_tolerance,
                plan.node_count,
                plan.max_refinements,
            );
            finish(result, plan)
        }
        QuadratureRule::AdaptiveSimpson => {
            let m = 0.5 * (a + b);
            let (fa, fm, fb) = (f(a), f(m), f(b));
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let result = adaptive_simpson(
                &f,
                (a, fa),
                (m, fm),
                (b, fb),
                whole,
                plan.abs_tolerance,
                plan.max_refinements,
            );
            finish(result, plan)
        }
        QuadratureRule::GaussJacobi { alpha } => integrate_jacobi(f, a, b, alpha, Side::Left, plan),
    }
}

#[allow(clippy::too_many_arguments)]
fn jacobi_one_sided<F: Fn(f64) -> f64>(
    g: &F,
    a: f64,
    b: f64,
    expo: f64,
    side: Side,
    whole: f64,
    tol: f64,
    n: usize,
    depth_left: u32,
) -> Integral {
    let m = 0.5 * (a + b);
    let (ja, jb) = match side {
        Side::Left => (0.0, expo),
        Side::Right => (expo, 0.0),
    };
    // the half touching the singular end keeps the Jacobi rule, the other
    // half carries the now-smooth weight explicitly
    let (sing_lo, sing_hi, reg_lo, reg_hi) = match side {
        Side::Left => (a, m, m, b),
        Side::Right => (m, b, a, m),
    };
    let singular = jacobi_panel(g, sing_lo, sing_hi, ja, jb, n);
    let weighted = |t: f64| {
        let w = match side {
            Side::Left => (t - a).powf(expo),
            Side::Right => (b - t).powf(expo),
        };
        w * g(t)
    };
    let regular_whole = jacobi_panel(&weighted, reg_lo, reg_hi, 0.0, 0.0, n);
    let halves = singular + regular_whole;
    let err = (halves - whole).abs();
    if accept(err, tol, halves) || depth_left == 0 || m <= a || m >= b {
        return Integral {
            value: halves,
            error_estimate: err,
        };
    }
    let regular = adaptive_legendre(
        &weighted,
        reg_lo,
        reg_hi,
        regular_whole,
        0.5 * tol,
        n,
        depth_left - 1,
    );
    // weight on the singular half is (t - a)^expo or (b - t)^expo with the
    // same anchor, so recursion keeps the same exponent
    let singular = jacobi_one_sided(
        g,
        sing_lo,
        sing_hi,
        expo,
        side,
        singular,
        0.5 * tol,
        n,
        depth_left - 1,
    );
    singular + regular
}

/// `∫_a^b w(t) g(t) dt` with `w(t) = (t - a)^(alpha - 1)` for [`Side::Left`]
/// and `w(t) = (b - t)^(alpha - 1)` for [`Side::Right`].
///
/// The weight is absorbed into Gauss–Jacobi nodes; it is never sampled on
/// the panel that touches the singular endpoint.
pub fn integrate_jacobi<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    alpha: f64,
    side: Side,
    plan: &QuadraturePlan,
) -> Result<Integral> {
    plan.validate()?;
    check_interval(a, b)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!(
            "jacobi order alpha must be > 0, got {alpha}"
        )));
    }
    let expo = alpha - 1.0;
    let (ja, jb) = match side {
        Side::Left => (0.0, expo),
        Side::Right => (expo, 0.0),
    };
    let whole = jacobi_panel(&g, a, b, ja, jb, plan.node_count);
    let result = jacobi_one_sided(
        &g,
        a,
        b,
        expo,
        side,
        whole,
        plan.abs_tolerance,
        plan.node_count,
        plan.max_refinements,
    );
    finish(result, plan)
}

/// `∫_a^b (t - a)^left_expo (b - t)^right_expo g(t) dt`, both exponents > -1.
pub fn integrate_jacobi_two_sided<F: Fn(f64) -> f64>(
    g: F,
    a: f64,
    b: f64,
    left_expo: f64,
    right_expo: f64,
    plan: &QuadraturePlan,
) -> Result<Integral> {
    plan.validate()?;
    check_interval(a, b)?;
    if !(left_expo > -1.0 && right_expo > -1.0) {
        return Err(Error::Domain(format!(
            "jacobi exponents must exceed -1, got ({left_expo}, {right_expo})"
        )));
    }
    let n = plan.node_count;
    let whole = jacobi_panel(&g, a, b, right_expo, left_expo, n);
    let m = 0.5 * (a + b);
    let left_g = |t: f64| (b - t).powf(right_expo) * g(t);
    let right_g = |t: f64| (t - a).powf(left_expo) * g(t);
    let left_whole = jacobi_panel(&left_g, a, m, 0.0, left_expo, n);
    let right_whole = jacobi_panel(&right_g, m, b, right_expo, 0.0, n);
    let halves = left_whole + right_whole;
    let err = (halves - whole).abs();
    let result = if accept(err, plan.abs_tolerance, halves) {
        Integral {
            value: halves,
            error_estimate: err,
        }
    } else {
        let depth = plan.max_refinements.saturating_sub(1);
        let tol = 0.5 * plan.abs_tolerance;
        jacobi_one_sided(
            &left_g,
            a,
            m,
            left_expo,
            Side::Left,
            left_whole,
            tol,
            n,
            depth,
        ) + jacobi_one_sided(
            &right_g,
            m,
            b,
            right_expo,
            Side::Right,
            right_whole,
            tol,
            n,
            depth,
        )
    };
    finish(result, plan)
}
