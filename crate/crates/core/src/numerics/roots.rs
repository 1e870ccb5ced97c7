//! Inversion of strictly increasing scalar maps.

use super::ToleranceProfile;
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const MAX_EXPANSION: f64 = 1_099_511_627_776.0; // 2^40

/// Solves `f(x) = y` for strictly increasing `f` on `bracket`.
///
/// Safeguarded secant (regula falsi with bisection fallback). The bracket is
/// kept throughout, so bisection alone guarantees convergence; iteration
/// continues past the tolerance until the bracket stops shrinking or 200
/// steps have run, which makes the result reproducible for fixed inputs.
pub fn invert_monotone<F: Fn(f64) -> f64>(
    f: F,
    y: f64,
    bracket: (f64, f64),
    tol: &ToleranceProfile,
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo <= hi) {
        return Err(Error::Domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    let slack = tol.eq_abs + tol.eq_rel * y.abs();
    if !(f_lo - slack <= y && y <= f_hi + slack) {
        return Err(Error::Bracket {
            target: y,
            f_lo,
            f_hi,
        });
    }
    if f_lo >= y {
        return Ok(lo);
    }
    if f_hi <= y {
        return Ok(hi);
    }
    let mut best = if (f_lo - y).abs() <= (f_hi - y).abs() {
        lo
    } else {
        hi
    };
    let mut best_resid = (f(best) - y).abs();
    let mut last_width = hi - lo;
    for iter in 0..MAX_ITERATIONS {
        let width = hi - lo;
        let secant = lo + (y - f_lo) * width / (f_hi - f_lo);
        // every other step is a plain bisection unless the secant step has
        // at least halved the bracket
        let use_secant = secant.is_finite()
            && secant > lo
            && secant < hi
            && (iter % 2 == 0 || width <= 0.5 * last_width);
        let x = if use_secant { secant } else { lo + 0.5 * width };
        if x <= lo || x >= hi {
            break;
        }
        last_width = width;
        let fx = f(x);
        let resid = (fx - y).abs();
        if resid < best_resid {
            best = x;
            best_resid = resid;
        }
        if fx == y {
            return Ok(x);
        }
        if fx < y {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
    }
    if best_resid <= slack
        || hi - lo <= 4.0 * f64::EPSILON * (lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE))
    {
        Ok(best)
    } else {
        Err(Error::Convergence {
            best,
            error_estimate: best_resid,
        })
    }
}

/// Like [`invert_monotone`] but grows `[lo, lo + 1]` geometrically until it
/// brackets `y`, giving up once the width exceeds 2^40.
pub fn invert_monotone_expanding<F: Fn(f64) -> f64>(
    f: F,
    y: f64,
    lo: f64,
    tol: &ToleranceProfile,
) -> Result<f64> {
    let mut width = 1.0;
    loop {
        let hi = lo + width;
        let f_hi = f(hi);
        if f_hi >= y {
            return invert_monotone(&f, y, (lo, hi), tol);
        }
        if width >= MAX_EXPANSION {
            return Err(Error::Bracket {
                target: y,
                f_lo: f(lo),
                f_hi,
            });
        }
        width *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceProfile {
        ToleranceProfile::default()
    }

    #[test]
    fn examples() {
        let x = invert_monotone(|x| x * x, 4.0, (0.0, 10.0), &tol()).unwrap();
        assert!((x - 2.0).abs() < 1e-14);
        let x = invert_monotone(|x| x * x * x, 0.125, (0.0, 1.0), &tol()).unwrap();
        assert!((x - 0.5).abs() < 1e-14);
        let y = std::f64::consts::E - 1.0;
        let x = invert_monotone(|x: f64| x.exp() - 1.0, y, (0.0, 2.0), &tol()).unwrap();
        assert!((x - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bracket_errors() {
        assert!(matches!(
            invert_monotone(|x| x, 5.0, (0.0, 1.0), &tol()),
            Err(Error::Bracket { .. })
        ));
        assert!(matches!(
            invert_monotone_expanding(|x: f64| x.atan(), 2.0, 0.0, &tol()),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn expanding_bracket() {
        let x = invert_monotone_expanding(|x: f64| x.powi(3), 1e9, 0.0, &tol()).unwrap();
        assert!((x - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let a = invert_monotone(|x: f64| x.sinh(), 3.7, (0.0, 5.0), &tol()).unwrap();
        let b = invert_monotone(|x: f64| x.sinh(), 3.7, (0.0, 5.0), &tol()).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
