//! Panel Gauss–Legendre quadrature for complex-valued integrands.

use std::sync::OnceLock;

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// Nodes per panel.
pub const ORDER: usize = 12;

/// Gauss–Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    rule
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule12() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Panel width that resolves oscillation at wavenumber `k`.
pub fn max_panel<T: Real>(k: Complex<T>) -> T {
    T::PI() / (T::lit(4.0) * (T::one() + k.norm()))
}

/// Integrates `f` over `[a, b]` by splitting into equal panels no wider than
/// `max_width`, applying the 12-point rule on each.
pub fn integrate<T: Real>(a: T, b: T, max_width: T, mut f: impl FnMut(T) -> Complex<T>) -> Complex<T> {
    let len = b - a;
    if len <= T::zero() {
        return Complex::zero();
    }
    let panels = (len / max_width).ceil().max(T::one());
    let count = panels.to_usize().unwrap_or(1).max(1);
    let h = len / T::lit(count as f64);
    let half = h / T::lit(2.0);
    let rule = rule12();
    let mut total = Complex::zero();
    for p in 0..count {
        let mid = a + h * T::lit(p as f64) + half;
        let mut panel = Complex::zero();
        for &(x, w) in rule {
            panel = panel + f(mid + half * T::lit(x)) * T::lit(w);
        }
        total = total + panel * half;
    }
    total
}

/// Quadrature points `(x, weight)` covering `[a, b]`, for integrands that are
/// evaluated more than once.
pub fn points<T: Real>(a: T, b: T, max_width: T) -> Vec<(T, T)> {
    let len = b - a;
    if len <= T::zero() {
        return Vec::new();
    }
    let count = (len / max_width).ceil().max(T::one()).to_usize().unwrap_or(1).max(1);
    let h = len / T::lit(count as f64);
    let half = h / T::lit(2.0);
    let rule = rule12();
    let mut out = Vec::with_capacity(count * ORDER);
    for p in 0..count {
        let mid = a + h * T::lit(p as f64) + half;
        for &(x, w) in rule {
            out.push((mid + half * T::lit(x), half * T::lit(w)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        let rule = gauss_legendre(ORDER);
        let sum: f64 = rule.iter().map(|r| r.1).sum();
        assert_relative_eq!(sum, 2.0, epsilon = 1e-14);
        for i in 0..ORDER {
            assert_relative_eq!(rule[i].0, -rule[ORDER - 1 - i].0, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_for_degree_23_polynomials() {
        let val = integrate(0.0, 2.0, 10.0, |x: f64| Complex64::new(x.powi(23), 0.0));
        assert_relative_eq!(val.re, 2f64.powi(24) / 24.0, max_relative = 1e-13);
    }

    #[test]
    fn oscillatory_exponential() {
        let k = Complex64::new(30.0, 0.0);
        let val = integrate(0.0, 3.0, max_panel(k), |x: f64| (Complex64::i() * k * x).exp());
        let exact = ((Complex64::i() * k * 3.0).exp() - 1.0) / (Complex64::i() * k);
        assert!((val - exact).norm() < 1e-13);
    }
}
