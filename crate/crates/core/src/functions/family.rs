//! Closed-form function families and combinators with exact derivative stacks.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{fd_derivative, fd_step, invert_monotone, ToleranceProfile};

/// Highest derivative order served by closed-form families.
pub const MAX_ANALYTIC_ORDER: usize = 64;

/// Highest derivative order served by finite differences.
pub const MAX_NUMERIC_ORDER: usize = 4;

const DEFAULT_FD_STEP: f64 = 1e-5;

/// A term of a [`Family::NonnegWeightedSum`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub function: Family,
}

/// Opaque user function whose derivatives come from finite differences.
#[derive(Clone)]
pub struct NumericFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for NumericFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("NumericFn(..)")
    }
}

impl PartialEq for NumericFn {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// Function families. Serialized as `{"family": "...", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum Family {
    /// `(x - a)^q`, `q >= 1`.
    ShiftedPower { q: f64, a: f64 },
    /// `e^(s x)`.
    Exponential { s: f64 },
    /// `T_p(x) = e^x - Σ_{j<=p} x^j / j!`.
    ExpTaylorRemainder { p: u32 },
    /// `ln(x) - x / b` on `(0, b]`.
    LogAffine { b: f64 },
    /// `Σ c_j x^j`, coefficients in ascending order.
    Polynomial { coefficients: Vec<f64> },
    /// `g(scale * x + shift)`.
    AffinePrecompose {
        inner: Box<Family>,
        scale: f64,
        shift: f64,
    },
    /// `Σ w_i g_i(x)` with `w_i >= 0`.
    NonnegWeightedSum { terms: Vec<WeightedTerm> },
    /// `factor * g(x)`, any real factor.
    Scaled { factor: f64, inner: Box<Family> },
    /// `g(x) h(x)`.
    Product {
        left: Box<Family>,
        right: Box<Family>,
    },
    /// Taylor remainder of order `p` at 0.
    TaylorRemainder { inner: Box<Family>, p: u32 },
    /// `g^(order)`.
    Derivative { inner: Box<Family>, order: u32 },
    /// `y -> outer(inner^-1(y))`; `inner` is inverted on `[lo, hi]`.
    ComposeInverse {
        outer: Box<Family>,
        inner: Box<Family>,
        lo: f64,
        hi: f64,
    },
    #[serde(skip)]
    Numeric(NumericFn),
}

fn falling_factorial(q: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (q - j as f64))
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `e^x - Σ_{j=0}^{m} x^j / j!`; `m < 0` gives `e^x`.
pub fn exp_taylor_remainder(m: i64, x: f64) -> f64 {
    if m < 0 {
        return x.exp();
    }
    let m = m as usize;
    if x.abs() < 2.0 || (0.0..=50.0).contains(&x) {
        // tail series Σ_{j>m} x^j / j!, free of cancellation
        let mut term = (1..=m + 1).fold(1.0, |acc, j| acc * x / j as f64);
        let mut sum = 0.0;
        let mut j = m + 1;
        loop {
            sum += term;
            j += 1;
            term *= x / j as f64;
            if term.abs() <= 1e-17 * sum.abs() || j > m + 400 {
                break;
            }
        }
        sum
    } else {
        let mut partial = 0.0;
        let mut term = 1.0;
        for j in 0..=m {
            if j > 0 {
                term *= x / j as f64;
            }
            partial += term;
        }
        x.exp() - partial
    }
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Construction(msg));
        match self {
            Family::ShiftedPower { q, a } => {
                if !(*q >= 1.0) || !q.is_finite() || !a.is_finite() {
                    return bad(format!(
                        "shifted-power requires finite q >= 1 and a, got q = {q}, a = {a}"
                    ));
                }
            }
            Family::Exponential { s } => {
                if !s.is_finite() {
                    return bad(format!("exponential rate must be finite, got {s}"));
                }
            }
            Family::ExpTaylorRemainder { .. } => {}
            Family::LogAffine { b } => {
                if !(*b > 0.0) || !b.is_finite() {
                    return bad(format!("log-affine requires b > 0, got {b}"));
                }
            }
            Family::Polynomial { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return bad("polynomial needs at least one finite coefficient".into());
                }
            }
            Family::AffinePrecompose {
                inner,
                scale,
                shift,
            } => {
                if *scale == 0.0 || !scale.is_finite() || !shift.is_finite() {
                    return bad(format!(
                        "affine-precompose needs finite nonzero scale, got {scale}"
                    ));
                }
                inner.validate()?;
            }
            Family::NonnegWeightedSum { terms } => {
                if terms.is_empty() {
                    return bad("nonneg-weighted-sum needs at least one term".into());
                }
                for t in terms {
                    if !(t.weight >= 0.0) || !t.weight.is_finite() {
                        return bad(format!("weights must be finite and >= 0, got {}", t.weight));
                    }
                    t.function.validate()?;
                }
            }
            Family::Scaled { factor, inner } => {
                if !factor.is_finite() {
                    return bad(format!("scale factor must be finite, got {factor}"));
                }
                inner.validate()?;
            }
            Family::Product { left, right } => {
                left.validate()?;
                right.validate()?;
            }
            Family::TaylorRemainder { inner, p } => {
                inner.validate()?;
                if *p < 1 {
                    return bad("taylor remainder order must be >= 1".into());
                }
                if inner.max_order() < *p as usize {
                    return Err(Error::Order {
                        requested: *p as usize,
                        available: inner.max_order(),
                    });
                }
            }
            Family::Derivative { inner, order } => {
                inner.validate()?;
                if *order < 1 {
                    return bad("derivative order must be >= 1".into());
                }
                if inner.max_order() < *order as usize {
                    return Err(Error::Order {
                        requested: *order as usize,
                        available: inner.max_order(),
                    });
                }
            }
            Family::ComposeInverse {
                outer,
                inner,
                lo,
                hi,
            } => {
                outer.validate()?;
                inner.validate()?;
                if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                    return bad(format!(
                        "compose-inverse needs a finite bracket, got [{lo}, {hi}]"
                    ));
                }
            }
            Family::Numeric(_) => {}
        }
        Ok(())
    }

    /// Highest derivative order computed in closed form.
    pub fn analytic_order(&self) -> usize {
        match self {
            Family::ShiftedPower { .. }
            | Family::Exponential { .. }
            | Family::ExpTaylorRemainder { .. }
            | Family::LogAffine { .. }
            | Family::Polynomial { .. } => MAX_ANALYTIC_ORDER,
            Family::AffinePrecompose { inner, .. } | Family::Scaled { inner, .. } => {
                inner.analytic_order()
            }
            Family::NonnegWeightedSum { terms } => terms
                .iter()
                .map(|t| t.function.analytic_order())
                .min()
                .unwrap_or(0),
            Family::Product { left, right } => left.analytic_order().min(right.analytic_order()),
            Family::TaylorRemainder { inner, .. } => inner.analytic_order(),
            Family::Derivative { inner, order } => {
                inner.analytic_order().saturating_sub(*order as usize)
            }
            Family::ComposeInverse { outer, inner, .. } => {
                2.min(outer.analytic_order()).min(inner.analytic_order())
            }
            Family::Numeric(_) => 0,
        }
    }

    /// Highest derivative order available at all.
    pub fn max_order(&self) -> usize {
        match self {
            Family::ShiftedPower { .. }
            | Family::Exponential { .. }
            | Family::ExpTaylorRemainder { .. }
            | Family::LogAffine { .. }
            | Family::Polynomial { .. } => MAX_ANALYTIC_ORDER,
            Family::AffinePrecompose { inner, .. } | Family::Scaled { inner, .. } => {
                inner.max_order()
            }
            Family::NonnegWeightedSum { terms } => terms
                .iter()
                .map(|t| t.function.max_order())
                .min()
                .unwrap_or(0),
            Family::Product { left, right } => left.max_order().min(right.max_order()),
            Family::TaylorRemainder { inner, .. } => inner.max_order(),
            Family::Derivative { inner, order } => {
                inner.max_order().saturating_sub(*order as usize)
            }
            Family::ComposeInverse { .. } => MAX_NUMERIC_ORDER,
            Family::Numeric(_) => MAX_NUMERIC_ORDER,
        }
    }

    /// Derivative of order `k` at `x` (`k = 0` evaluates). Returns NaN beyond
    /// [`Family::max_order`].
    pub fn derivative(&self, k: usize, x: f64) -> f64 {
        if k > self.max_order() {
            return f64::NAN;
        }
        match self {
            Family::ShiftedPower { q, a } => {
                let qi = q.round();
                if *q == qi {
                    if k as f64 > qi {
                        return 0.0;
                    }
                    falling_factorial(*q, k) * (x - a).powi((qi as i64 - k as i64) as i32)
                } else {
                    falling_factorial(*q, k) * (x - a).powf(q - k as f64)
                }
            }
            Family::Exponential { s } => s.powi(k as i32) * (s * x).exp(),
            Family::ExpTaylorRemainder { p } => exp_taylor_remainder(*p as i64 - k as i64, x),
            Family::LogAffine { b } => match k {
                0 => x.ln() - x / b,
                1 => 1.0 / x - 1.0 / b,
                _ => {
                    let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
                    sign * factorial(k - 1) / x.powi(k as i32)
                }
            },
            Family::Polynomial { coefficients } => {
                let n = coefficients.len();
                if k >= n {
                    return 0.0;
                }
                let mut acc = 0.0;
                for j in (k..n).rev() {
                    acc = acc * x + coefficients[j] * falling_factorial(j as f64, k);
                }
                acc
            }
            Family::AffinePrecompose {
                inner,
                scale,
                shift,
            } => scale.powi(k as i32) * inner.derivative(k, scale * x + shift),
            Family::NonnegWeightedSum { terms } => terms
                .iter()
                .map(|t| t.weight * t.function.derivative(k, x))
                .sum(),
            Family::Scaled { factor, inner } => factor * inner.derivative(k, x),
            Family::Product { left, right } => (0..=k)
                .map(|j| binomial(k, j) * left.derivative(j, x) * right.derivative(k - j, x))
                .sum(),
            Family::TaylorRemainder { inner, p } => {
                let p = *p as usize;
                let mut value = inner.derivative(k, x);
                if k <= p {
                    value -= (k..=p)
                        .map(|j| {
                            inner.derivative(j, 0.0) * x.powi((j - k) as i32) / factorial(j - k)
                        })
                        .sum::<f64>();
                }
                value
            }
            Family::Derivative { inner, order } => inner.derivative(k + *order as usize, x),
            Family::ComposeInverse { .. } => self.compose_inverse_derivative(k, x),
            Family::Numeric(NumericFn(f)) => {
                if k == 0 {
                    f(x)
                } else {
                    fd_derivative(|t| f(t), x, k, DEFAULT_FD_STEP)
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x)
    }

    /// Closed-form inverse when the family has one.
    pub fn closed_form_inverse(&self, y: f64) -> Option<f64> {
        match self {
            Family::ShiftedPower { q, a } if y >= 0.0 => Some(if *q == 1.0 {
                a + y
            } else if *q == 2.0 {
                a + y.sqrt()
            } else {
                a + y.powf(1.0 / q)
            }),
            Family::Exponential { s } if *s != 0.0 && y > 0.0 => Some(y.ln() / s),
            Family::AffinePrecompose {
                inner,
                scale,
                shift,
            } if *scale > 0.0 => inner.closed_form_inverse(y).map(|u| (u - shift) / scale),
            Family::Scaled { factor, inner } if *factor > 0.0 => {
                inner.closed_form_inverse(y / factor)
            }
            _ => None,
        }
    }

    fn inverse_on(&self, y: f64, lo: f64, hi: f64) -> f64 {
        if let Some(x) = self.closed_form_inverse(y) {
            if x >= lo && x <= hi {
                return x;
            }
        }
        invert_monotone(|t| self.eval(t), y, (lo, hi), &ToleranceProfile::default())
            .unwrap_or(f64::NAN)
    }

    fn compose_inverse_derivative(&self, k: usize, y: f64) -> f64 {
        let Family::ComposeInverse {
            outer,
            inner,
            lo,
            hi,
        } = self
        else {
            unreachable!()
        };
        let (y_lo, y_hi) = (inner.eval(*lo), inner.eval(*hi));
        // orders 0..=2 by the inverse-function rule at x = inner^-1(y)
        let raw = |order: usize, y: f64| -> f64 {
            let x = inner.inverse_on(y, *lo, *hi);
            match order {
                0 => outer.eval(x),
                1 => outer.derivative(1, x) / inner.derivative(1, x),
                _ => {
                    let (l1, l2) = (outer.derivative(1, x), outer.derivative(2, x));
                    let (f1, f2) = (inner.derivative(1, x), inner.derivative(2, x));
                    (l2 * f1 - l1 * f2) / (f1 * f1 * f1)
                }
            }
        };
        let with_limit = |order: usize, y: f64| -> f64 {
            let v = raw(order, y);
            if v.is_finite() {
                return v;
            }
            // 0/0 where inner' vanishes: linear extrapolation from two
            // points on the side with more room
            let delta = 1e-7 * (1.0 + (y_hi - y_lo).abs());
            let dir = if y - y_lo <= y_hi - y { 1.0 } else { -1.0 };
            2.0 * raw(order, y + dir * delta) - raw(order, y + dir * 2.0 * delta)
        };
        match k {
            0..=2 => with_limit(k, y),
            _ => {
                // central stencils reach one step to each side; keep them
                // inside [y_lo, y_hi]
                let h = 1.01 * fd_step(DEFAULT_FD_STEP, k - 2, y);
                let yc = if y_hi - y_lo > 2.0 * h {
                    y.clamp(y_lo + h, y_hi - h)
                } else {
                    y
                };
                fd_derivative(|t| with_limit(2, t), yc, k - 2, DEFAULT_FD_STEP)
            }
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            Family::ShiftedPower { q, a } => {
                if *a == 0.0 {
                    format!("x^{q}")
                } else {
                    format!("(x-{a})^{q}")
                }
            }
            Family::Exponential { s } => format!("exp({s}x)"),
            Family::ExpTaylorRemainder { p } => format!("T_{p}"),
            Family::LogAffine { b } => format!("ln(x)-x/{b}"),
            Family::Polynomial { coefficients } => format!("poly{coefficients:?}"),
            Family::AffinePrecompose {
                inner,
                scale,
                shift,
            } => {
                format!("{}∘({scale}x+{shift})", inner.describe())
            }
            Family::NonnegWeightedSum { terms } => terms
                .iter()
                .map(|t| format!("{}·{}", t.weight, t.function.describe()))
                .collect::<Vec<_>>()
                .join("+"),
            Family::Scaled { factor, inner } => format!("{factor}·{}", inner.describe()),
            Family::Product { left, right } => {
                format!("({})·({})", left.describe(), right.describe())
            }
            Family::TaylorRemainder { inner, p } => format!("R[{},{p}]", inner.describe()),
            Family::Derivative { inner, order } => format!("D^{order}[{}]", inner.describe()),
            Family::ComposeInverse { outer, inner, .. } => {
                format!("{}∘({})^-1", outer.describe(), inner.describe())
            }
            Family::Numeric(_) => "numeric".into(),
        }
    }
}
