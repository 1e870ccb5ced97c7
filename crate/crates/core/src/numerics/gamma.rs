//! Gamma function by the Lanczos approximation (g = 7, nine coefficients).

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

#[allow(clippy::excessive_precision)]
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest argument accepted by [`gamma`]; Γ(171.62…) overflows `f64`.
pub const GAMMA_MAX_ARG: f64 = 170.0;

fn lanczos_sum(z: f64) -> f64 {
    LANCZOS_COEFFS
        .iter()
        .enumerate()
        .skip(1)
        .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| acc + c / (z + i as f64))
}

/// Γ(x) for `0 < x <= 170`.
///
/// Arguments below one half go through the reflection formula. Large
/// arguments split the power `t^(z+1/2)` in two halves so that no
/// intermediate overflows before the exponential damping is applied.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x > GAMMA_MAX_ARG {
        return Err(Error::Overflow(format!("gamma({x}) exceeds f64 range")));
    }
    Ok(gamma_unchecked(x))
}

pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(z)
}

/// ln Γ(x) for `x > 0`. Accepts arguments far beyond the range of [`gamma`].
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "ln_gamma requires finite x > 0, got {x}"
        )));
    }
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ln Γ via upward shift and the Stirling series; independent of Lanczos.
    fn ln_gamma_stirling(x: f64) -> f64 {
        let mut shift = 0.0;
        let mut y = x;
        while y < 40.0 {
            shift += y.ln();
            y += 1.0;
        }
        // Bernoulli-number coefficients B_2k / (2k (2k-1))
        let coeffs = [
            1.0 / 12.0,
            -1.0 / 360.0,
            1.0 / 1260.0,
            -1.0 / 1680.0,
            1.0 / 1188.0,
            -691.0 / 360_360.0,
            1.0 / 156.0,
            -3617.0 / 122_400.0,
        ];
        let mut series = 0.0;
        let mut pow = y;
        let y2 = y * y;
        for c in coeffs {
            series += c / pow;
            pow *= y2;
        }
        (y - 0.5) * y.ln() - y + 0.5 * (2.0 * PI).ln() + series - shift
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn factorials() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-13);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-13);
        let mut fact = 1.0_f64;
        for n in 1..=30 {
            fact *= n as f64;
            assert!(rel(gamma(n as f64 + 1.0).unwrap(), fact) < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn half_integer() {
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-13);
        assert!((gamma(0.5).unwrap() - 1.772_453_850_9).abs() < 1e-10);
        assert!(rel(gamma(1.5).unwrap(), 0.5 * PI.sqrt()) < 1e-13);
    }

    #[test]
    fn matches_stirling_oracle() {
        let mut x = 0.05;
        while x <= 170.0 {
            let oracle = ln_gamma_stirling(x).exp();
            let got = gamma(x).unwrap();
            assert!(rel(got, oracle) < 1e-12, "x = {x}: {got} vs {oracle}");
            x += 0.37;
        }
    }

    #[test]
    fn recurrence_on_grid() {
        for i in 1..=500 {
            let x = i as f64 * 0.1;
            let lhs = gamma(x + 1.0).unwrap();
            let rhs = x * gamma(x).unwrap();
            assert!(rel(lhs, rhs) < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn ln_gamma_agrees() {
        for &x in &[1e-3, 0.3, 1.0, 2.5, 10.0, 100.0, 1000.0, 1e5] {
            let got = ln_gamma(x).unwrap();
            let oracle = ln_gamma_stirling(x);
            assert!(
                (got - oracle).abs() <= 1e-12 * (1.0 + oracle.abs()),
                "x = {x}"
            );
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(gamma(-1.5), Err(Error::Domain(_))));
        assert!(matches!(gamma(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(gamma(170.5), Err(Error::Overflow(_))));
        assert!(gamma(170.0).unwrap().is_finite());
    }
}
