//! Central finite differences with one Richardson extrapolation step.

/// Step used for a derivative of order `k` at `x` given the base step `h`.
///
/// Higher orders divide by `h^k`, so the step grows with `k` to keep the
/// rounding error `eps / h^k` below the `O(h^4)` truncation error.
pub fn fd_step(base: f64, k: usize, x: f64) -> f64 {
    (1.0 + x.abs()) * base.powf(2.0 / (k as f64 + 1.0))
}

fn central<F: Fn(f64) -> f64>(f: &F, x: f64, k: usize, h: f64) -> f64 {
    match k {
        1 => (f(x + h) - f(x - h)) / (2.0 * h),
        2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
        3 => {
            (f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h)) / (2.0 * h * h * h)
        }
        4 => {
            (f(x + 2.0 * h) - 4.0 * f(x + h) + 6.0 * f(x) - 4.0 * f(x - h) + f(x - 2.0 * h))
                / (h * h * h * h)
        }
        _ => f64::NAN,
    }
}

/// Derivative of order `k` (1..=4) at `x`.
///
/// The second-order central stencil at steps `h` and `h/2` is combined as
/// `(4 D(h/2) - D(h)) / 3`, giving `O(h^4)` truncation error. Orders outside
/// 1..=4 return NaN.
pub fn fd_derivative<F: Fn(f64) -> f64>(f: F, x: f64, k: usize, base_step: f64) -> f64 {
    if !(1..=4).contains(&k) {
        return f64::NAN;
    }
    let h = fd_step(base_step, k, x);
    let coarse = central(&f, x, k, h);
    let fine = central(&f, x, k, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: f64 = 1e-5;

    #[test]
    fn examples() {
        assert!((fd_derivative(|x| x * x, 3.0, 1, H) - 6.0).abs() < 1e-6);
        assert!((fd_derivative(|x| x * x * x, 1.0, 2, H) - 6.0).abs() < 1e-4);
        assert!((fd_derivative(f64::exp, 0.0, 3, H) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn all_orders_of_exp() {
        for k in 1..=4 {
            for &x in &[-1.0, 0.0, 0.7, 2.0] {
                let d = fd_derivative(f64::exp, x, k, H);
                assert!((d / x.exp() - 1.0).abs() < 1e-5, "k = {k}, x = {x}: {d}");
            }
        }
    }

    #[test]
    fn out_of_range_order() {
        assert!(fd_derivative(f64::exp, 0.0, 5, H).is_nan());
        assert!(fd_derivative(f64::exp, 0.0, 0, H).is_nan());
    }
}
