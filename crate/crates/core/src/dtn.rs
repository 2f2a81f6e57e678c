//! Dirichlet-to-Neumann matrix `Λ(λ)`, Robin data `g(λ) = N R₀(λ) f₀`, and
//! the extension-operator route used to cross-check `Λ`.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, VertexId};
use crate::interior::{normal_derivative, EdgeForcing, Interior};
use crate::linalg::CMatrix;
use crate::poly::{affine_compose, derivative, Piece, PiecewisePoly};
use crate::scalar::Real;
use crate::settings::Tolerances;

/// `Λ(λ)` in boundary-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnMatrix<T> {
    pub lambda: Complex<T>,
    pub matrix: CMatrix<T>,
    /// Boundary vertex ids; row/column `i` belongs to `boundary[i]`.
    pub boundary: Vec<VertexId>,
    /// `σ_min/σ_max` of the interior system this was computed from.
    pub smin_ratio: T,
}

impl<T: Real> DtnMatrix<T> {
    pub fn apply(&self, phi: &[Complex<T>]) -> Vec<Complex<T>> {
        self.matrix.mul_vec(phi)
    }

    /// `‖Λ − Λ*‖₂`.
    pub fn hermitian_defect(&self) -> T {
        self.matrix.sub(&self.matrix.adjoint()).norm2()
    }

    pub fn norm(&self) -> T {
        self.matrix.norm2()
    }
}

/// `g(λ)` in boundary-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinData<T> {
    pub lambda: Complex<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Interior<'_, T> {
    /// Column `j` is `N u_j` where `u_j` solves the homogeneous problem with
    /// boundary data `e_j`; all columns share one factorization.
    pub fn dtn(&self) -> Result<DtnMatrix<T>> {
        let n = self.graph().boundary().len();
        let mut columns = Vec::with_capacity(n);
        let zero = EdgeForcing::zero();
        for j in 0..n {
            let mut phi = vec![Complex::zero(); n];
            phi[j] = Complex::new(T::one(), T::zero());
            let sol = self.solve(&phi, &zero)?;
            columns.push(normal_derivative(&sol, self.graph())?);
        }
        Ok(DtnMatrix {
            lambda: self.lambda(),
            matrix: CMatrix::from_columns(n, &columns),
            boundary: self.graph().boundary(),
            smin_ratio: self.smin_ratio(),
        })
    }

    pub fn robin(&self, f0: &EdgeForcing<T>) -> Result<RobinData<T>> {
        let n = self.graph().boundary().len();
        let sol = self.solve(&vec![Complex::zero(); n], f0)?;
        Ok(RobinData {
            lambda: self.lambda(),
            values: normal_derivative(&sol, self.graph())?,
        })
    }
}

pub fn dtn_matrix<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>) -> Result<DtnMatrix<T>> {
    Interior::new(g, lambda)?.dtn()
}

pub fn dtn_matrix_with<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>, tol: Tolerances<T>) -> Result<DtnMatrix<T>> {
    Interior::with_tolerances(g, lambda, tol)?.dtn()
}

pub fn robin_data<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>, f0: &EdgeForcing<T>) -> Result<RobinData<T>> {
    Interior::new(g, lambda)?.robin(f0)
}

/// Extension `E: ℂⁿ → functions on Γ₀`. At each boundary vertex a quintic
/// profile equal to 1 at the vertex, with vanishing first and second
/// derivatives there, falling to 0 (value and two derivatives) at distance
/// `radius = l₀/2` along the vertex's edge.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionOperator<T> {
    pub radius: T,
    /// For each boundary index, its edge id and which end sits at the vertex.
    pub attachments: Vec<(usize, End)>,
}

impl<T: Real> ExtensionOperator<T> {
    pub fn new(g: &MetricGraph<T>) -> Result<Self> {
        g.require_normalized()?;
        let shortest = g
            .shortest_edge()
            .ok_or_else(|| Error::Graph("extension needs at least one finite edge".into()))?;
        let attachments = g
            .boundary()
            .into_iter()
            .map(|v| g.boundary_slot(v))
            .collect::<Result<_>>()?;
        Ok(Self {
            radius: shortest / T::lit(2.0),
            attachments,
        })
    }

    /// Profile coefficients in the distance `y` from the vertex:
    /// `1 - 10 t³ + 15 t⁴ - 6 t⁵`, `t = y / radius`.
    pub fn profile(&self) -> Vec<Complex<T>> {
        let h = self.radius;
        let re = |x: T| Complex::new(x, T::zero());
        vec![
            re(T::one()),
            re(T::zero()),
            re(T::zero()),
            re(T::lit(-10.0) / h.powi(3)),
            re(T::lit(15.0) / h.powi(4)),
            re(T::lit(-6.0) / h.powi(5)),
        ]
    }

    fn place(&self, g: &MetricGraph<T>, coeff_in_distance: impl Fn(usize) -> Vec<Complex<T>>) -> EdgeForcing<T> {
        let h = self.radius;
        let mut pieces: BTreeMap<usize, Vec<Piece<T>>> = BTreeMap::new();
        for (i, &(edge, end)) in self.attachments.iter().enumerate() {
            let coeffs = coeff_in_distance(i);
            let len = g.edge(edge).expect("attachment edge").length;
            let piece = match end {
                End::Start => Piece::new(T::zero(), h, coeffs),
                End::End => Piece::new(len - h, len, affine_compose(&coeffs, h, -T::one())),
            };
            pieces.entry(edge).or_default().push(piece);
        }
        let mut out = EdgeForcing::zero();
        for (edge, ps) in pieces {
            out.insert(edge, PiecewisePoly::new(ps).expect("profiles do not overlap"));
        }
        out
    }

    /// `E φ` as piecewise polynomials on Γ₀.
    pub fn extend(&self, g: &MetricGraph<T>, phi: &[Complex<T>]) -> EdgeForcing<T> {
        let p = self.profile();
        self.place(g, |i| p.iter().map(|c| *c * phi[i]).collect())
    }

    /// `(d²/dx² + λ) E φ`.
    pub fn helmholtz_image(&self, g: &MetricGraph<T>, lambda: Complex<T>, phi: &[Complex<T>]) -> EdgeForcing<T> {
        let p = self.profile();
        let pp = derivative(&derivative(&p));
        self.place(g, |i| {
            p.iter()
                .enumerate()
                .map(|(j, c)| (*c * lambda + pp.get(j).copied().unwrap_or_else(Complex::zero)) * phi[i])
                .collect()
        })
    }
}

/// `Λ(λ) φ` computed as `N R₀(λ) (d²/dx² + λ) E φ`; `N E φ = 0` by
/// construction of `E`.
pub fn dtn_via_extension<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>, phi: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let ext = ExtensionOperator::new(g)?;
    if phi.len() != ext.attachments.len() {
        return Err(Error::Shape(format!(
            "boundary data has {} entries, graph has {} boundary vertices",
            phi.len(),
            ext.attachments.len()
        )));
    }
    let w = ext.helmholtz_image(g, lambda, phi);
    let interior = Interior::new(g, lambda)?;
    let sol = interior.solve(&vec![Complex::zero(); phi.len()], &w)?;
    normal_derivative(&sol, g)
}
