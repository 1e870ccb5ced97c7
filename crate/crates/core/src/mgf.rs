//! Bounds on `E e^{sX}` from shifted p-norms, and the generalized AM-GM
//! inequality.

use serde::{Deserialize, Serialize};

use crate::distributions::RandomVariable;
use crate::error::{Error, Result};
use crate::functions::exp_taylor_remainder;
use crate::numerics::ToleranceProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfBoundReport {
    pub s: f64,
    pub p: u32,
    pub lower: f64,
    pub upper: Option<f64>,
    /// `E e^{sX}`; absent when the oracle does not converge.
    pub exact: Option<f64>,
    pub exact_error: f64,
    /// `E X^j` for `j = 1..p-1`.
    pub moments_used: Vec<f64>,
}

fn check_inputs(x: &RandomVariable, s: f64, p: u32) -> Result<()> {
    if p == 0 {
        return Err(Error::Domain("order p must be >= 1".into()));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be finite and >= 0, got {s}")));
    }
    let lo = x.support().0;
    if lo < -ToleranceProfile::default().eq_abs {
        return Err(Error::SupportViolation(format!(
            "mass at {lo} lies below 0"
        )));
    }
    Ok(())
}

/// `E Σ_{j<p} (sX)^j / j!` and the raw moments it used.
fn taylor_mean(x: &RandomVariable, s: f64, p: u32) -> Result<(f64, Vec<f64>)> {
    let mut moments = Vec::new();
    let (mut sum, mut coef) = (1.0, 1.0);
    for j in 1..p {
        let m = x.raw_moment(j)?.value;
        coef *= s / j as f64;
        sum += coef * m;
        moments.push(m);
    }
    Ok((sum, moments))
}

fn oracle(x: &RandomVariable, s: f64) -> (Option<f64>, f64) {
    match x.expect_fn(|t| (s * t).exp()) {
        Ok(e) if e.value.is_finite() => (Some(e.value), e.error_estimate),
        _ => (None, 0.0),
    }
}

fn lower_value(x: &RandomVariable, s: f64, p: u32, taylor: f64) -> Result<f64> {
    let norm = x.shifted_moment(0.0, p)?.norm;
    Ok(exp_taylor_remainder(p as i64 - 1, s * norm) + taylor)
}

/// `E e^{sX} >= e^{s‖X‖_p} - Σ_{j<p} (s‖X‖_p)^j/j! + E Σ_{j<p} (sX)^j/j!`
/// for `X >= 0` in `L^p`.
pub fn mgf_lower(x: &RandomVariable, s: f64, p: u32) -> Result<MgfBoundReport> {
    check_inputs(x, s, p)?;
    let (taylor, moments_used) = taylor_mean(x, s, p)?;
    let lower = lower_value(x, s, p, taylor)?;
    let (exact, exact_error) = oracle(x, s);
    Ok(MgfBoundReport {
        s,
        p,
        lower,
        upper: None,
        exact,
        exact_error,
        moments_used,
    })
}

/// [`mgf_upper_on`] with `b = sup X`.
pub fn mgf_upper(x: &RandomVariable, s: f64, p: u32) -> Result<MgfBoundReport> {
    let b = x.support().1;
    mgf_upper_on(x, s, p, b)
}

/// `E e^{sX} <= (E X^p / b^p)(e^{sb} - Σ_{j<p} (sb)^j/j!) + E Σ_{j<p} (sX)^j/j!`
/// for `X` on `[0, b]`. The report also carries the lower bound.
pub fn mgf_upper_on(x: &RandomVariable, s: f64, p: u32, b: f64) -> Result<MgfBoundReport> {
    check_inputs(x, s, p)?;
    if !b.is_finite() || !x.is_bounded() {
        return Err(Error::UnboundedSupport(x.support().1.max(b)));
    }
    let hi = x.support().1;
    if hi > b + ToleranceProfile::default().eq_abs {
        return Err(Error::SupportViolation(format!(
            "mass at {hi} lies above b = {b}"
        )));
    }
    let (taylor, moments_used) = taylor_mean(x, s, p)?;
    let lower = lower_value(x, s, p, taylor)?;
    let upper = if b > 0.0 {
        let ratio = x.expect_fn(|t| (t.max(0.0) / b).powi(p as i32))?.value;
        ratio * exp_taylor_remainder(p as i64 - 1, s * b) + taylor
    } else {
        1.0
    };
    let (exact, exact_error) = oracle(x, s);
    Ok(MgfBoundReport {
        s,
        p,
        lower,
        upper: Some(upper),
        exact,
        exact_error,
        moments_used,
    })
}

/// `E X >= e^{‖ln X‖_p} - Σ_{j<p} ‖ln X‖_p^j/j! + E Σ_{j<p} (ln X)^j/j!`
/// for `X >= 1`; the geometric mean `exp(E ln X)` at `p = 1`.
pub fn am_gm_lower(x: &RandomVariable, p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::Domain("order p must be >= 1".into()));
    }
    let lo = x.support().0;
    if lo < 1.0 - ToleranceProfile::default().eq_abs {
        return Err(Error::SupportViolation(format!(
            "mass at {lo} lies below 1"
        )));
    }
    let ln = |t: f64| t.max(1.0).ln();
    let moment = x.expect_fn(|t| ln(t).powi(p as i32))?.value;
    if !moment.is_finite() {
        return Err(Error::MomentInfinite { order: p });
    }
    let norm = moment.max(0.0).powf(1.0 / p as f64);
    if p == 1 {
        return Ok(norm.exp());
    }
    let mut taylor = 1.0;
    let mut fact = 1.0;
    for j in 1..p {
        fact *= j as f64;
        taylor += x.expect_fn(|t| ln(t).powi(j as i32))?.value / fact;
    }
    Ok(exp_taylor_remainder(p as i64 - 1, norm) + taylor)
}
