//! Shared numerical kernels.

mod diff;
mod gamma;
mod quadrature;
mod roots;

use serde::{Deserialize, Serialize};

pub use diff::{fd_derivative, fd_step};
pub use gamma::{gamma, ln_gamma, GAMMA_MAX_ARG};
pub use quadrature::{
    gauss_jacobi_nodes, gauss_legendre_nodes, integrate, integrate_jacobi,
    integrate_jacobi_two_sided, Integral, QuadraturePlan, QuadratureRule, Side,
};
pub use roots::{invert_monotone, invert_monotone_expanding};

use crate::error::{Error, Result};

/// Equality and certification tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceProfile {
    pub eq_abs: f64,
    pub eq_rel: f64,
    /// Slack allowed when testing `>= 0` on certification grids.
    pub certify_slack: f64,
    /// Base step for finite differences.
    pub fd_step: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            eq_abs: 1e-10,
            eq_rel: 1e-9,
            certify_slack: 1e-8,
            fd_step: 1e-5,
        }
    }
}

/// Multiplier applied to `certify_slack` when derivatives are numeric.
pub const NUMERIC_SLACK_FACTOR: f64 = 1e3;

impl ToleranceProfile {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eq_abs", self.eq_abs),
            ("eq_rel", self.eq_rel),
            ("certify_slack", self.certify_slack),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!(
                    "tolerance {name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `|a - b| <= eq_abs + eq_rel * max(|a|, |b|)`.
    pub fn approx_eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.eq_abs + self.eq_rel * a.abs().max(b.abs())
    }
}

/// `moment^(1/order)` for a nonnegative shifted moment `E|X - a|^order`.
pub fn pnorm_shifted(moment: f64, order: u32) -> Result<f64> {
    if order == 0 {
        return Err(Error::Domain("norm order must be >= 1".into()));
    }
    if !(moment >= 0.0) {
        return Err(Error::Domain(format!(
            "shifted moment must be >= 0, got {moment}"
        )));
    }
    Ok(match order {
        1 => moment,
        2 => moment.sqrt(),
        _ => moment.powf(1.0 / order as f64),
    })
}

/// Norm from a moment pre-scaled by `scale^order`: `scale * normalized^(1/order)`.
pub fn pnorm_rescaled(normalized_moment: f64, order: u32, scale: f64) -> Result<f64> {
    Ok(scale * pnorm_shifted(normalized_moment, order)?)
}
