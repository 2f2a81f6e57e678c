//! Neumann resolvent on the half-line, applied componentwise on the leads:
//!
//! `(r(λ)f)(x) = (i/2k) ∫₀^∞ [e^{ik(x+s)} + e^{ik|x−s|}] f(s) ds`, `k = √λ`.
//!
//! `k` is the principal root. For `Im λ > 0` it has `Im k > 0` (the
//! physical sheet); it continues analytically across `(0, ∞)` into
//! `Im λ < 0` with `Im k < 0`. Since lead functions have compact support
//! the integrals stay finite there.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::PiecewisePoly;
use crate::quadrature;
use crate::scalar::{to_c64, Real};
use crate::settings::Tolerances;

/// Principal `√λ`; refuses the cut `(−∞, 0]` and `|λ| < floor`.
pub fn branch_k_with<T: Real>(lambda: Complex<T>, floor: T) -> Result<Complex<T>> {
    let on_cut = lambda.im == T::zero() && lambda.re <= T::zero();
    if on_cut || lambda.norm() < floor || !lambda.re.is_finite() || !lambda.im.is_finite() {
        return Err(Error::Threshold {
            lambda: to_c64(lambda),
        });
    }
    Ok(lambda.sqrt())
}

pub fn branch_k<T: Real>(lambda: Complex<T>) -> Result<Complex<T>> {
    branch_k_with(lambda, Tolerances::<T>::default().lambda_floor)
}

/// A function on the leads: one compactly supported piecewise polynomial
/// per boundary index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LeadFunction<T> {
    components: Vec<PiecewisePoly<T>>,
}

impl<T: Real> LeadFunction<T> {
    pub fn zero(n: usize) -> Self {
        Self {
            components: vec![PiecewisePoly::zero(); n],
        }
    }

    pub fn new(components: Vec<PiecewisePoly<T>>) -> Self {
        Self { components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: usize) -> &PiecewisePoly<T> {
        &self.components[i]
    }

    pub fn components(&self) -> &[PiecewisePoly<T>] {
        &self.components
    }

    pub fn set(&mut self, i: usize, f: PiecewisePoly<T>) {
        self.components[i] = f;
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(PiecewisePoly::is_zero)
    }

    /// `X_max`: beyond this every component vanishes.
    pub fn support_end(&self) -> T {
        self.components
            .iter()
            .map(PiecewisePoly::support_end)
            .fold(T::zero(), T::max)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.components.iter().map(|f| f.scale(s)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.add(b))
                .collect(),
        )
    }
}

/// `r(λ)` at a fixed wavenumber `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannResolvent<T> {
    pub k: Complex<T>,
    panel: T,
}

impl<T: Real> NeumannResolvent<T> {
    pub fn new(k: Complex<T>) -> Self {
        Self {
            k,
            panel: quadrature::max_panel(k),
        }
    }

    pub fn from_lambda(lambda: Complex<T>) -> Result<Self> {
        branch_k(lambda).map(Self::new)
    }

    pub fn panel(&self) -> T {
        self.panel
    }

    fn ik(&self) -> Complex<T> {
        Complex::new(-self.k.im, self.k.re)
    }

    /// `∫ kernel(s) f(s) ds` over `f`'s pieces restricted to `[a, b]`.
    fn integrate(&self, f: &PiecewisePoly<T>, a: T, b: T, kernel: impl Fn(T) -> Complex<T>) -> Complex<T> {
        let mut total = Complex::zero();
        for p in f.pieces() {
            let (lo, hi) = (p.start.max(a), p.end.min(b));
            if hi > lo {
                total = total + quadrature::integrate(lo, hi, self.panel.min(p.len()), |s| kernel(s) * p.eval(s));
            }
        }
        total
    }

    /// `(r f)(x)` for one component.
    pub fn eval(&self, f: &PiecewisePoly<T>, x: T) -> Complex<T> {
        let ik = self.ik();
        let i_over_k = Complex::new(T::zero(), T::one()) / self.k;
        let end = f.support_end();
        if x >= end {
            // single outgoing wave: e^{ik(x+s)} + e^{ik(x-s)} = 2 e^{ikx} cos(ks)
            let moment = self.integrate(f, T::zero(), end, |s| (self.k * s).cos());
            return i_over_k * (ik * x).exp() * moment;
        }
        let sum = self.integrate(f, T::zero(), end, |s| (ik * (x + s)).exp())
            + self.integrate(f, T::zero(), x, |s| (ik * (x - s)).exp())
            + self.integrate(f, x, end, |s| (ik * (s - x)).exp());
        i_over_k * sum / T::lit(2.0)
    }

    /// `(r f)'(x)`; vanishes at `x = 0` (the Neumann condition).
    pub fn derivative(&self, f: &PiecewisePoly<T>, x: T) -> Complex<T> {
        let ik = self.ik();
        let end = f.support_end().max(x);
        let sum = self.integrate(f, T::zero(), end, |s| (ik * (x + s)).exp())
            + self.integrate(f, T::zero(), x, |s| (ik * (x - s)).exp())
            - self.integrate(f, x, end, |s| (ik * (s - x)).exp());
        -sum / T::lit(2.0)
    }

    pub fn eval_vec(&self, f: &LeadFunction<T>, x: T) -> Vec<Complex<T>> {
        f.components().iter().map(|c| self.eval(c, x)).collect()
    }

    pub fn derivative_vec(&self, f: &LeadFunction<T>, x: T) -> Vec<Complex<T>> {
        f.components().iter().map(|c| self.derivative(c, x)).collect()
    }

    /// `(r f, f)` summed over the leads.
    pub fn quadratic_form(&self, f: &LeadFunction<T>) -> Complex<T> {
        lead_inner_product(|j, x| self.eval(f.component(j), x), f, self.panel)
    }

    /// `∫ e^{ikx} conj(f_j(x)) dx` per component.
    pub fn outgoing_moments(&self, f: &LeadFunction<T>) -> Vec<Complex<T>> {
        let ik = self.ik();
        (0..f.len())
            .map(|j| lead_inner_product_component(|x| (ik * x).exp(), f.component(j), self.panel))
            .collect()
    }
}

/// `(r(λ) f)(x)` on every lead.
pub fn neumann_resolvent_eval<T: Real>(f: &LeadFunction<T>, lambda: Complex<T>, x: T) -> Result<Vec<Complex<T>>> {
    Ok(NeumannResolvent::from_lambda(lambda)?.eval_vec(f, x))
}

/// `(r(λ) f)'(0)` on every lead; identically zero up to roundoff.
pub fn neumann_derivative_at_zero<T: Real>(f: &LeadFunction<T>, lambda: Complex<T>) -> Result<Vec<Complex<T>>> {
    Ok(NeumannResolvent::from_lambda(lambda)?.derivative_vec(f, T::zero()))
}

fn lead_inner_product_component<T: Real>(
    u: impl Fn(T) -> Complex<T>,
    f: &PiecewisePoly<T>,
    panel: T,
) -> Complex<T> {
    f.pieces()
        .iter()
        .map(|p| quadrature::integrate(p.start, p.end, panel.min(p.len()), |x| u(x) * p.eval(x).conj()))
        .fold(Complex::zero(), |a, b| a + b)
}

/// `Σ_j ∫ u_j(x) conj(f_j(x)) dx`, with `u` given as `(lead index, x) -> value`.
pub fn lead_inner_product<T: Real>(u: impl Fn(usize, T) -> Complex<T>, f: &LeadFunction<T>, panel: T) -> Complex<T> {
    (0..f.len())
        .map(|j| lead_inner_product_component(|x| u(j, x), f.component(j), panel))
        .fold(Complex::zero(), |a, b| a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cr(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    /// `(s-1)²(2-s)² · 16` on [1, 2], a smooth bump of height 1.
    fn bump() -> PiecewisePoly<f64> {
        // t = s - 1: 16 t² (1 - t)² = 16 t² - 32 t³ + 16 t⁴
        PiecewisePoly::single(1.0, 2.0, vec![cr(0.0), cr(0.0), cr(16.0), cr(-32.0), cr(16.0)]).unwrap()
    }

    #[test]
    fn branch_examples() {
        assert_eq!(branch_k(cr(4.0)).unwrap(), cr(2.0));
        let k = branch_k(Complex64::new(0.0, 1.0)).unwrap();
        let e = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((k - e).norm() < 1e-15 && k.im > 0.0);
        let k = branch_k(Complex64::new(4.0, -0.01)).unwrap();
        assert!((k.re - 2.0).abs() < 1e-5 && (k.im + 0.0025).abs() < 1e-6);
        assert!(branch_k(cr(-1.0)).is_err());
        assert!(branch_k(cr(0.0)).is_err());
        assert!(branch_k(cr(1e-7)).is_err());
        assert!(branch_k(Complex64::new(-1.0, 1e-3)).is_ok());
    }

    #[test]
    fn zero_function_gives_zero() {
        let f = LeadFunction::zero(2);
        let v = neumann_resolvent_eval(&f, Complex64::new(2.0, 1.0), 0.7).unwrap();
        assert!(v.iter().all(|z| *z == cr(0.0)));
    }

    #[test]
    fn value_at_origin_reduces_to_single_kernel() {
        let f = bump();
        let lam = Complex64::new(3.0, 0.5);
        let r = NeumannResolvent::from_lambda(lam).unwrap();
        let k = r.k;
        let moment = r.integrate(&f, 0.0, 2.0, |s| (Complex64::i() * k * s).exp());
        let expect = Complex64::i() / k * moment;
        assert!((r.eval(&f, 0.0) - expect).norm() < 1e-14);
    }

    #[test]
    fn neumann_condition_holds() {
        let f = LeadFunction::new(vec![bump(), PiecewisePoly::single(0.0, 0.5, vec![cr(1.0), cr(-1.0)]).unwrap()]);
        for lam in [Complex64::new(2.0, 1.0), Complex64::new(5.0, 0.1), cr(3.0)] {
            for d in neumann_derivative_at_zero(&f, lam).unwrap() {
                assert!(d.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn satisfies_the_equation_between_nodes() {
        let f = bump();
        let lam = Complex64::new(2.0, 0.7);
        let r = NeumannResolvent::from_lambda(lam).unwrap();
        let h = 1e-3;
        for x in [0.4, 1.3, 1.77, 2.6] {
            let d2 = (r.eval(&f, x + h) - r.eval(&f, x) * 2.0 + r.eval(&f, x - h)) / (h * h);
            let resid = -d2 - lam * r.eval(&f, x) - f.eval(x);
            assert!(resid.norm() < 1e-5, "x = {x}: {resid}");
            // derivative against central difference
            let fd = (r.eval(&f, x + h) - r.eval(&f, x - h)) / (2.0 * h);
            assert!((fd - r.derivative(&f, x)).norm() < 1e-5);
        }
    }

    #[test]
    fn decays_beyond_support() {
        let f = bump();
        let lam = Complex64::new(4.0, 1.0);
        let r = NeumannResolvent::from_lambda(lam).unwrap();
        let base = r.eval(&f, 2.0).norm();
        for dx in [1.0, 5.0, 10.0] {
            let bound = base * (-r.k.im * dx).exp() * (1.0 + 1e-12);
            assert!(r.eval(&f, 2.0 + dx).norm() <= bound);
        }
    }

    /// RK4 integration of `u'' = -λu` with given Cauchy data, from `x0` to `x1`.
    fn rk4(lam: Complex64, x0: f64, x1: f64, u0: Complex64, du0: Complex64, steps: usize) -> Vec<(f64, Complex64)> {
        let h = (x1 - x0) / steps as f64;
        let mut out = vec![(x0, u0)];
        let (mut u, mut v) = (u0, du0);
        let f = |u: Complex64, v: Complex64| (v, -lam * u);
        for i in 0..steps {
            let (k1u, k1v) = f(u, v);
            let (k2u, k2v) = f(u + k1u * (h / 2.0), v + k1v * (h / 2.0));
            let (k3u, k3v) = f(u + k2u * (h / 2.0), v + k2v * (h / 2.0));
            let (k4u, k4v) = f(u + k3u * h, v + k3v * h);
            u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            out.push((x0 + h * (i + 1) as f64, u));
        }
        out
    }

    #[test]
    fn matches_truncated_domain_oracle() {
        // Green's function of the problem on [0, X] with u'(0) = 0 and the
        // outgoing condition u'(X) = iku(X); y_out integrated back from X.
        let lam = Complex64::new(1.0, 1.0);
        let k = lam.sqrt();
        let x_max = 40.0;
        let steps = 40_000;
        let y_out = rk4(lam, x_max, 0.0, cr(1.0), Complex64::i() * k, steps);
        // W = y_N y_out' - y_N' y_out at x = 0 with y_N(0)=1, y_N'(0)=0:
        // need y_out'(0); recompute with a derivative-tracking pass.
        let h = -x_max / steps as f64;
        let (mut u, mut v) = (cr(1.0), Complex64::i() * k);
        for _ in 0..steps {
            let f = |u: Complex64, v: Complex64| (v, -lam * u);
            let (k1u, k1v) = f(u, v);
            let (k2u, k2v) = f(u + k1u * (h / 2.0), v + k1v * (h / 2.0));
            let (k3u, k3v) = f(u + k2u * (h / 2.0), v + k2v * (h / 2.0));
            let (k4u, k4v) = f(u + k3u * h, v + k3v * h);
            u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        }
        let w = v; // y_N(0) y_out'(0) - 0
        // u(0) = -∫ y_out(s) f(s) ds / W, Simpson on the RK4 grid over [1, 2]
        let f = bump();
        let pts: Vec<(f64, Complex64)> = y_out
            .iter()
            .rev()
            .filter(|(x, _)| (1.0 - 1e-9..=2.0 + 1e-9).contains(x))
            .copied()
            .collect();
        let hs = pts[1].0 - pts[0].0;
        let mut integral = Complex64::zero();
        for (i, (x, y)) in pts.iter().enumerate() {
            let wgt = if i == 0 || i == pts.len() - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            integral += y * f.eval(*x) * wgt;
        }
        integral *= hs / 3.0;
        let oracle = -integral / w;
        let got = NeumannResolvent::new(k).eval(&f, 0.0);
        assert!((got - oracle).norm() < 1e-8 * oracle.norm(), "{got} vs {oracle}");
    }

    #[test]
    fn inner_products() {
        let f = LeadFunction::new(vec![bump()]);
        // ‖f‖² = 256 ∫₀¹ t⁴(1-t)⁴ dt = 256 / 630
        let norm2 = lead_inner_product(|j, x| f.component(j).eval(x), &f, 0.1);
        assert!((norm2 - cr(256.0 / 630.0)).norm() < 1e-14);
        let g = LeadFunction::new(vec![PiecewisePoly::single(3.0, 4.0, vec![cr(1.0)]).unwrap()]);
        assert_eq!(lead_inner_product(|j, x| g.component(j).eval(x), &f, 0.1), cr(0.0));
        // ∫₀¹ e^{ikx} x dx = e^{ik}(1/(ik) + 1/k²) - 1/k²
        let k = Complex64::new(2.5, 0.3);
        let h = LeadFunction::new(vec![PiecewisePoly::single(0.0, 1.0, vec![cr(0.0), cr(1.0)]).unwrap()]);
        let ik = Complex64::i() * k;
        let exact = ik.exp() * (1.0 / ik + 1.0 / (k * k)) - 1.0 / (k * k);
        let got = NeumannResolvent::new(k).outgoing_moments(&h)[0];
        assert!((got - exact).norm() < 1e-14);
    }
}
