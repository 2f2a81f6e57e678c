//! The resolvent `(R(λ)f, f)` of the full graph (compact part plus leads).
//!
//! The lead part is `u₁ = r(λ)f₁ − i e^{ikx}A` with `A` fixed by the Robin
//! condition `u₁'(0) = Λ(λ)u₁(0) + g(λ)`; the compact part is the Dirichlet
//! problem with data `u₁(0)` and forcing `f₀`. The same formulas evaluated
//! at real `λ` or below the axis give the analytic continuation.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;

use crate::dtn::DtnMatrix;
use crate::error::{Error, Result};
use crate::graph::{End, LeadId, MetricGraph, MovedLead};
use crate::halfline::{branch_k_with, LeadFunction, NeumannResolvent};
use crate::interior::{normal_derivative, EdgeForcing, EdgeSolution, Interior};
use crate::linalg::CMatrix;
use crate::poly::PiecewisePoly;
use crate::scalar::{to_c64, vec_norm, Real};
use crate::settings::Tolerances;

/// `f = (f₀, f₁)`: forcing on the edges plus compactly supported functions
/// on the leads (keyed by lead id, coordinate measured from the vertex).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositeFunction<T> {
    pub f0: EdgeForcing<T>,
    pub leads: BTreeMap<LeadId, PiecewisePoly<T>>,
}

impl<T: Real> CompositeFunction<T> {
    pub fn zero() -> Self {
        Self {
            f0: EdgeForcing::zero(),
            leads: BTreeMap::new(),
        }
    }

    pub fn with_edge(mut self, edge: usize, f: PiecewisePoly<T>) -> Self {
        self.f0.insert(edge, f);
        self
    }

    pub fn with_lead(mut self, lead: LeadId, f: PiecewisePoly<T>) -> Self {
        if f.is_zero() {
            self.leads.remove(&lead);
        } else {
            self.leads.insert(lead, f);
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.f0.is_zero() && self.leads.values().all(PiecewisePoly::is_zero)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            f0: self.f0.scale(s),
            leads: self.leads.iter().map(|(k, f)| (*k, f.scale(s))).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = Self {
            f0: self.f0.add(&other.f0),
            leads: self.leads.clone(),
        };
        for (id, f) in &other.leads {
            let sum = match out.leads.get(id) {
                Some(g) => g.add(f),
                None => f.clone(),
            };
            out = out.with_lead(*id, sum);
        }
        out
    }

    /// Checks edge and lead ids against `g` and collects the lead parts in
    /// boundary-index order.
    pub fn lead_function(&self, g: &MetricGraph<T>) -> Result<LeadFunction<T>> {
        self.f0.check_against(g)?;
        for id in self.leads.keys() {
            if !g.leads().iter().any(|l| l.id == *id) {
                return Err(Error::InvalidArgument(format!("function given on unknown lead {id}")));
            }
        }
        let components = g
            .boundary()
            .into_iter()
            .map(|v| {
                let lead = g.lead_at(v).expect("boundary vertices carry a lead");
                self.leads.get(&lead.id).cloned().unwrap_or_default()
            })
            .collect();
        Ok(LeadFunction::new(components))
    }

    /// Re-expresses `f` on a graph whose leads were moved out by
    /// normalization: the first `offset` of each moved lead becomes the new
    /// edge, the rest stays on the lead shifted back to start at 0.
    pub fn transfer(&self, moved: &[MovedLead<T>]) -> Self {
        let mut out = self.clone();
        for m in moved {
            let Some(f) = self.leads.get(&m.lead) else { continue };
            out.f0.insert(m.edge, f.restrict(T::zero(), m.offset));
            let end = f.support_end();
            let rest = if end > m.offset {
                f.restrict(m.offset, end)
            } else {
                PiecewisePoly::zero()
            };
            out = out.with_lead(m.lead, rest);
        }
        out
    }
}

/// Which expression for the Robin coefficient `A(λ)` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Formula {
    /// `(kI + iΛ)⁻¹(Λ·rf₁(0) + g)`, which satisfies the Robin condition.
    #[default]
    Derived,
    /// `Λ(kI + iΛ)⁻¹ rf₁(0) + g/k`; kept for comparison only.
    Printed,
}

/// Which root `k` of `λ` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    /// Principal root everywhere: the analytic continuation from the upper
    /// half-plane across `(0, ∞)`.
    #[default]
    Principal,
    /// `Im k > 0` everywhere: the actual resolvent in both half-planes.
    Physical,
}

pub fn wavenumber<T: Real>(lambda: Complex<T>, branch: Branch, floor: T) -> Result<Complex<T>> {
    let k = branch_k_with(lambda, floor)?;
    Ok(match branch {
        Branch::Physical if k.im < T::zero() => -k,
        _ => k,
    })
}

/// `kI + iΛ`.
pub fn pole_matrix<T: Real>(k: Complex<T>, dtn: &CMatrix<T>) -> CMatrix<T> {
    let n = dtn.rows();
    CMatrix::identity(n)
        .scale(k)
        .add(&dtn.scale(Complex::new(T::zero(), T::one())))
}

/// Solves for `A(λ)` with the chosen formula. `rf0` is `(r(λ)f₁)(0)`.
pub fn robin_coefficient<T: Real>(
    dtn: &CMatrix<T>,
    g: &[Complex<T>],
    rf0: &[Complex<T>],
    k: Complex<T>,
    formula: Formula,
    pole_tol: T,
    lambda: Complex<T>,
) -> Result<Vec<Complex<T>>> {
    if k == Complex::zero() {
        return Err(Error::Threshold { lambda: to_c64(lambda) });
    }
    let p = pole_matrix(k, dtn);
    let ratio = p.smin_ratio();
    let pole = || Error::ContinuationPole {
        lambda: to_c64(lambda),
        sigma_min: ratio.to_f64_lossy(),
    };
    if !(ratio >= pole_tol) {
        return Err(pole());
    }
    let lu = p.lu();
    match formula {
        Formula::Derived => {
            let lrf = dtn.mul_vec(rf0);
            let rhs: Vec<_> = lrf.iter().zip(g).map(|(a, b)| *a + *b).collect();
            lu.solve(&rhs).ok_or_else(pole)
        }
        Formula::Printed => {
            let w = lu.solve(rf0).ok_or_else(pole)?;
            Ok(dtn.mul_vec(&w).iter().zip(g).map(|(a, b)| *a + *b / k).collect())
        }
    }
}

/// Residual diagnostics of one sample; all absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    /// `‖u₁'(0) − Λu₁(0) − g‖`.
    pub robin: T,
    /// `‖u₀|_B − u₁(0)‖`.
    pub trace: T,
    /// `‖u₁'(0) − N u₀‖`: derivative balance at B.
    pub flux: T,
    /// `1 + ‖Λ‖‖u₁(0)‖ + ‖g‖ + |k|‖A‖`, the size the residuals are judged against.
    pub scale: T,
}

impl<T: Real> Residuals<T> {
    pub fn worst_relative(&self) -> T {
        self.robin.max(self.trace).max(self.flux) / self.scale
    }

    pub fn passes(&self, res_tol: T) -> bool {
        self.worst_relative() <= res_tol
    }
}

/// Everything computed at one spectral point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSample<T> {
    pub lambda: Complex<T>,
    pub k: Complex<T>,
    pub formula: Formula,
    pub dtn: DtnMatrix<T>,
    pub g: Vec<Complex<T>>,
    pub a: Vec<Complex<T>>,
    /// `(r(λ)f₁)(0)`.
    pub rf0: Vec<Complex<T>>,
    pub u1_at_zero: Vec<Complex<T>>,
    pub u1_derivative_at_zero: Vec<Complex<T>>,
    /// `(R(λ)f, f)`.
    pub value: Complex<T>,
    pub residuals: Residuals<T>,
    /// Residuals within `res_tol · scale`.
    pub valid: bool,
    /// `σ_min/σ_max` of `kI + iΛ`.
    pub pole_ratio: T,
    /// The compact-part solution `u₀`.
    pub interior: EdgeSolution<T>,
}

impl<T: Real> ResolventSample<T> {
    /// `(u₁(x), u₁'(x))` on the lead at boundary index `j`.
    pub fn lead_solution(&self, f1: &LeadFunction<T>, j: usize, x: T) -> (Complex<T>, Complex<T>) {
        let r = NeumannResolvent::new(self.k);
        let e = (Complex::new(T::zero(), T::one()) * self.k * x).exp();
        let i = Complex::new(T::zero(), T::one());
        (
            r.eval(f1.component(j), x) - i * e * self.a[j],
            r.derivative(f1.component(j), x) + self.k * e * self.a[j],
        )
    }
}

/// Evaluation options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventConfig<T> {
    pub formula: Formula,
    pub branch: Branch,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> Default for ResolventConfig<T> {
    fn default() -> Self {
        Self {
            formula: Formula::Derived,
            branch: Branch::Principal,
            tolerances: Tolerances::default(),
        }
    }
}

/// Full evaluation at `λ` with explicit options.
pub fn evaluate<T: Real>(
    g: &MetricGraph<T>,
    f: &CompositeFunction<T>,
    lambda: Complex<T>,
    cfg: &ResolventConfig<T>,
) -> Result<ResolventSample<T>> {
    let tol = cfg.tolerances;
    let k = wavenumber(lambda, cfg.branch, tol.lambda_floor)?;
    let f1 = f.lead_function(g)?;
    let interior = Interior::with_tolerances(g, lambda, tol)?;
    let dtn = interior.dtn()?;
    let g_vals = interior.robin(&f.f0)?.values;

    let r = NeumannResolvent::new(k);
    let rf0 = r.eval_vec(&f1, T::zero());
    let drf0 = r.derivative_vec(&f1, T::zero());
    let pole_ratio = pole_matrix(k, &dtn.matrix).smin_ratio();
    let a = robin_coefficient(&dtn.matrix, &g_vals, &rf0, k, cfg.formula, tol.pole_tol, lambda)?;

    let i = Complex::new(T::zero(), T::one());
    let u1: Vec<_> = rf0.iter().zip(&a).map(|(r0, aj)| *r0 - i * *aj).collect();
    let du1: Vec<_> = drf0.iter().zip(&a).map(|(d0, aj)| *d0 + k * *aj).collect();

    let sol = interior.solve(&u1, &f.f0)?;
    let u0_at_b = boundary_values(&sol, g)?;
    let nu0 = normal_derivative(&sol, g)?;

    let lu1 = dtn.apply(&u1);
    let robin: Vec<_> = (0..u1.len()).map(|j| du1[j] - lu1[j] - g_vals[j]).collect();
    let trace: Vec<_> = u0_at_b.iter().zip(&u1).map(|(a, b)| *a - *b).collect();
    let flux: Vec<_> = du1.iter().zip(&nu0).map(|(a, b)| *a - *b).collect();
    let residuals = Residuals {
        robin: vec_norm(&robin),
        trace: vec_norm(&trace),
        flux: vec_norm(&flux),
        scale: T::one() + dtn.norm() * vec_norm(&u1) + vec_norm(&g_vals) + k.norm() * vec_norm(&a),
    };

    let moments = r.outgoing_moments(&f1);
    let lead_tail: Complex<T> = a.iter().zip(&moments).fold(Complex::zero(), |s, (aj, m)| s + *aj * *m);
    let value = sol.inner_product(&f.f0) + r.quadratic_form(&f1) - i * lead_tail;

    Ok(ResolventSample {
        lambda,
        k,
        formula: cfg.formula,
        valid: residuals.passes(tol.res_tol),
        dtn,
        g: g_vals,
        a,
        rf0,
        u1_at_zero: u1,
        u1_derivative_at_zero: du1,
        value,
        residuals,
        pole_ratio,
        interior: sol,
    })
}

fn boundary_values<T: Real>(sol: &EdgeSolution<T>, g: &MetricGraph<T>) -> Result<Vec<Complex<T>>> {
    g.boundary()
        .into_iter()
        .map(|v| {
            let (edge, end) = g.boundary_slot(v)?;
            let x = match end {
                End::Start => T::zero(),
                End::End => g.edge(edge).expect("edge exists").length,
            };
            Ok(sol.trace(edge, x)?.0)
        })
        .collect()
}

/// `(R(λ)f, f)` with the derived Robin coefficient and principal `k`.
pub fn solve_full<T: Real>(g: &MetricGraph<T>, f: &CompositeFunction<T>, lambda: Complex<T>) -> Result<ResolventSample<T>> {
    evaluate(g, f, lambda, &ResolventConfig::default())
}

/// Boundary value / continuation at real `λ > 0` or `Im λ ≤ 0`. Identical
/// formulas to [`solve_full`]; the principal root carries them across the
/// positive axis.
pub fn continue_value<T: Real>(
    g: &MetricGraph<T>,
    f: &CompositeFunction<T>,
    lambda: Complex<T>,
) -> Result<ResolventSample<T>> {
    evaluate(g, f, lambda, &ResolventConfig::default())
}

/// The actual resolvent of the self-adjoint operator, in either half-plane.
pub fn physical_value<T: Real>(
    g: &MetricGraph<T>,
    f: &CompositeFunction<T>,
    lambda: Complex<T>,
) -> Result<ResolventSample<T>> {
    let cfg = ResolventConfig {
        branch: Branch::Physical,
        ..ResolventConfig::default()
    };
    evaluate(g, f, lambda, &cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{split_leads, Edge, Lead, VertexCondition};
    use num_complex::Complex64;

    fn cr(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn interval_lead(len: f64) -> MetricGraph<f64> {
        MetricGraph::new(
            vec![
                (1, VertexCondition::standard(2).unwrap()),
                (2, VertexCondition::dirichlet(1).unwrap()),
            ],
            vec![Edge {
                id: 1,
                from: 1,
                to: 2,
                length: len,
            }],
            vec![Lead { id: 1, vertex: 1 }],
        )
        .unwrap()
    }

    fn sample_f() -> CompositeFunction<f64> {
        CompositeFunction::zero()
            .with_edge(1, PiecewisePoly::single(0.2, 1.1, vec![cr(1.0), Complex64::new(0.5, -0.3), cr(-0.4)]).unwrap())
            .with_lead(1, PiecewisePoly::single(0.5, 1.7, vec![Complex64::new(0.3, 0.2), cr(1.0)]).unwrap())
    }

    #[test]
    fn zero_function_gives_zero() {
        let g = interval_lead(2.0);
        let s = solve_full(&g, &CompositeFunction::zero(), Complex64::new(2.0, 1.0)).unwrap();
        assert_eq!(s.value, cr(0.0));
        assert!(s.a.iter().chain(&s.u1_at_zero).all(|z| *z == cr(0.0)));
    }

    #[test]
    fn trivial_robin_cases() {
        let zero = CMatrix::<f64>::zeros(2, 2);
        let g = vec![Complex64::new(1.0, 2.0), cr(-0.5)];
        let k = Complex64::new(1.5, 0.2);
        let lam = k * k;
        for formula in [Formula::Derived, Formula::Printed] {
            let a = robin_coefficient(&zero, &g, &[cr(0.3), cr(0.1)], k, formula, 1e-12, lam).unwrap();
            for (aj, gj) in a.iter().zip(&g) {
                assert!((aj - gj / k).norm() < 1e-15);
            }
        }
        let dtn = CMatrix::from_rows(&[vec![cr(1.0), cr(0.5)], vec![cr(0.5), cr(-2.0)]]).unwrap();
        let z = vec![cr(0.0); 2];
        let a = robin_coefficient(&dtn, &z, &z, k, Formula::Derived, 1e-12, lam).unwrap();
        assert!(a.iter().all(|x| *x == cr(0.0)));
    }

    #[test]
    fn pole_is_reported() {
        // kI + iΛ = 0 for Λ = ik I
        let k = Complex64::new(1.0, 0.0);
        let dtn = CMatrix::identity(1).scale(Complex64::i() * k);
        let err = robin_coefficient(&dtn, &[cr(1.0)], &[cr(0.0)], k, Formula::Derived, 1e-12, cr(1.0)).unwrap_err();
        assert!(matches!(err, Error::ContinuationPole { .. }));
    }

    #[test]
    fn robin_residual_on_interval_with_lead() {
        let g = interval_lead(1.3);
        let s = solve_full(&g, &sample_f(), Complex64::new(2.0, 1.0)).unwrap();
        // recompute the Robin residual from the lead solution at x = 0
        let f1 = sample_f().lead_function(&g).unwrap();
        let (u, du) = s.lead_solution(&f1, 0, 0.0);
        let resid = du - s.dtn.matrix[(0, 0)] * u - s.g[0];
        assert!(resid.norm() < 1e-10, "{resid}");
        assert!(s.valid);
        assert!(s.residuals.trace < 1e-12 && s.residuals.flux < 1e-10);
    }

    #[test]
    fn herglotz_and_conjugate_symmetry() {
        let g = interval_lead(1.3);
        let f = sample_f();
        let lam = Complex64::new(3.0, 0.3);
        let up = solve_full(&g, &f, lam).unwrap();
        assert!(up.value.im > 0.0);
        let down = physical_value(&g, &f, lam.conj()).unwrap();
        assert!((down.value - up.value.conj()).norm() < 1e-10 * up.value.norm());
        assert!(down.value.im < 0.0);
    }

    #[test]
    fn continuation_is_the_boundary_value() {
        let g = interval_lead(1.3);
        let f = sample_f();
        let lam = 3.7;
        let f_real = continue_value(&g, &f, cr(lam)).unwrap();
        let near = solve_full(&g, &f, Complex64::new(lam, 1e-6)).unwrap();
        assert!((f_real.value - near.value).norm() <= 1e-4 * f_real.value.norm());
        assert!(f_real.valid);
    }

    #[test]
    fn lead_split_leaves_the_value_unchanged() {
        let g = interval_lead(1.3);
        let f = sample_f();
        let lam = Complex64::new(2.5, 0.4);
        let base = solve_full(&g, &f, lam).unwrap().value;
        for offset in [0.5, 1.3] {
            let n = split_leads(&g, offset).unwrap();
            let moved = f.transfer(&n.moved);
            let v = solve_full(&n.graph, &moved, lam).unwrap().value;
            assert!((v - base).norm() < 1e-9 * base.norm(), "offset {offset}: {v} vs {base}");
        }
    }

    #[test]
    fn unknown_lead_is_rejected() {
        let g = interval_lead(1.0);
        let f = CompositeFunction::zero().with_lead(7, PiecewisePoly::single(0.0, 1.0, vec![cr(1.0)]).unwrap());
        assert!(matches!(solve_full(&g, &f, Complex64::new(1.0, 1.0)), Err(Error::InvalidArgument(_))));
    }
}
