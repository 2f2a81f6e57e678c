//! Exact edgewise solutions of `-u'' - λu = f` on the compact part Γ₀.
//!
//! On each edge `u = α c(x, λ) + β s(x, λ) + u_p(x)` where
//! `c = cos(√λ x)`, `s = sin(√λ x)/√λ` are entire in `λ` and `u_p` is the
//! particular solution with zero Cauchy data at `x = 0`. Vertex conditions
//! at interior vertices and Dirichlet data at the boundary set give a square
//! system in the `2|E₀|` coefficients.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{End, MetricGraph, Slot, VertexId};
use crate::linalg::{CMatrix, Lu};
use crate::poly::PiecewisePoly;
use crate::quadrature;
use crate::scalar::{to_c64, Real};
use crate::settings::Tolerances;

/// `λx²` magnitude below which the Taylor series replaces trig evaluation.
const SERIES_CUTOFF: f64 = 1e-3;
const SERIES_TERMS: usize = 12;

/// Values of the fundamental pair and their `x`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fundamental<T> {
    pub c: Complex<T>,
    pub dc: Complex<T>,
    pub s: Complex<T>,
    pub ds: Complex<T>,
}

impl<T: Real> Fundamental<T> {
    pub fn wronskian(&self) -> Complex<T> {
        self.c * self.ds - self.dc * self.s
    }
}

/// `c(x,λ) = cos(√λ x)`, `s(x,λ) = sin(√λ x)/√λ` and derivatives.
pub fn eval_fundamental<T: Real>(x: T, lambda: Complex<T>) -> Fundamental<T> {
    let z = lambda * x * x;
    if z.norm() < T::lit(SERIES_CUTOFF) {
        // c = Σ (-z)^j/(2j)!, s = x Σ (-z)^j/(2j+1)!
        let mut c = Complex::zero();
        let mut s = Complex::zero();
        let mut term_c = Complex::<T>::one();
        let mut term_s = Complex::<T>::one();
        for j in 0..SERIES_TERMS {
            c = c + term_c;
            s = s + term_s;
            let jf = T::lit(j as f64);
            let two = T::lit(2.0);
            term_c = -term_c * z / ((two * jf + T::one()) * (two * jf + two));
            term_s = -term_s * z / ((two * jf + two) * (two * jf + T::lit(3.0)));
        }
        let s = s * x;
        Fundamental {
            c,
            dc: -lambda * s,
            s,
            ds: c,
        }
    } else {
        let k = lambda.sqrt();
        let (sin, cos) = ((k * x).sin(), (k * x).cos());
        Fundamental {
            c: cos,
            dc: -k * sin,
            s: sin / k,
            ds: cos,
        }
    }
}

/// Forcing on the edges of Γ₀, keyed by edge id. Missing edges carry zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeForcing<T> {
    per_edge: BTreeMap<usize, PiecewisePoly<T>>,
}

impl<T: Real> EdgeForcing<T> {
    pub fn zero() -> Self {
        Self {
            per_edge: BTreeMap::new(),
        }
    }

    pub fn with(mut self, edge: usize, f: PiecewisePoly<T>) -> Self {
        self.insert(edge, f);
        self
    }

    pub fn insert(&mut self, edge: usize, f: PiecewisePoly<T>) {
        if f.is_zero() {
            self.per_edge.remove(&edge);
        } else {
            self.per_edge.insert(edge, f);
        }
    }

    pub fn get(&self, edge: usize) -> Option<&PiecewisePoly<T>> {
        self.per_edge.get(&edge)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &PiecewisePoly<T>)> {
        self.per_edge.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_zero(&self) -> bool {
        self.per_edge.is_empty()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            per_edge: self.per_edge.iter().map(|(k, f)| (*k, f.scale(s))).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, f) in other.iter() {
            let sum = match out.per_edge.get(&e) {
                Some(g) => g.add(f),
                None => f.clone(),
            };
            out.insert(e, sum);
        }
        out
    }

    /// Every forcing edge exists and its support fits inside `[0, ℓ]`.
    pub fn check_against(&self, g: &MetricGraph<T>) -> Result<()> {
        for (e, f) in self.iter() {
            let edge = g
                .edge(e)
                .ok_or_else(|| Error::InvalidArgument(format!("forcing given on unknown edge {e}")))?;
            let slack = T::tol(1e-12) * edge.length;
            if f.support_end() > edge.length + slack {
                return Err(Error::InvalidArgument(format!(
                    "forcing on edge {e} extends to {} beyond length {}",
                    f.support_end(),
                    edge.length
                )));
            }
        }
        Ok(())
    }
}

/// `u_p(x) = -∫₀ˣ s(x-t, λ) f(t) dt` with `u_p(0) = u_p'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticularSolution<T> {
    forcing: PiecewisePoly<T>,
    lambda: Complex<T>,
    panel: T,
}

impl<T: Real> ParticularSolution<T> {
    pub fn new(forcing: PiecewisePoly<T>, lambda: Complex<T>) -> Self {
        let panel = quadrature::max_panel(lambda.sqrt());
        Self { forcing, lambda, panel }
    }

    /// `(u_p(x), u_p'(x))`.
    pub fn eval(&self, x: T) -> (Complex<T>, Complex<T>) {
        let mut u = Complex::zero();
        let mut du = Complex::zero();
        for piece in self.forcing.pieces() {
            if piece.start >= x {
                break;
            }
            let b = piece.end.min(x);
            for (t, w) in quadrature::points(piece.start, b, self.panel.min(piece.len())) {
                let fun = eval_fundamental(x - t, self.lambda);
                let ft = piece.eval(t) * w;
                u = u - fun.s * ft;
                du = du - fun.c * ft;
            }
        }
        (u, du)
    }

    /// `u_p''(x) = -λ u_p(x) - f(x)`.
    pub fn second_derivative(&self, x: T) -> Complex<T> {
        -self.lambda * self.eval(x).0 - self.forcing.eval(x)
    }

    pub fn forcing(&self) -> &PiecewisePoly<T> {
        &self.forcing
    }
}

/// [`ParticularSolution::new`] as a free function.
pub fn particular_solution<T: Real>(f: &PiecewisePoly<T>, lambda: Complex<T>) -> ParticularSolution<T> {
    ParticularSolution::new(f.clone(), lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState<T> {
    pub edge: usize,
    pub length: T,
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub particular: Option<ParticularSolution<T>>,
}

/// Solution of the interior problem, one coefficient pair per edge of Γ₀.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSolution<T> {
    pub lambda: Complex<T>,
    pub edges: Vec<EdgeState<T>>,
}

impl<T: Real> EdgeSolution<T> {
    fn state(&self, edge: usize) -> Result<&EdgeState<T>> {
        self.edges
            .iter()
            .find(|s| s.edge == edge)
            .ok_or_else(|| Error::InvalidArgument(format!("no edge {edge} in solution")))
    }

    /// `(u(x), u'(x))` on `edge`, `0 ≤ x ≤ ℓ`.
    pub fn trace(&self, edge: usize, x: T) -> Result<(Complex<T>, Complex<T>)> {
        let st = self.state(edge)?;
        let slack = T::tol(1e-12) * st.length.max(T::one());
        if !(x >= -slack && x <= st.length + slack) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} outside [0, {}] on edge {edge}",
                st.length
            )));
        }
        Ok(self.trace_unchecked(st, x))
    }

    fn trace_unchecked(&self, st: &EdgeState<T>, x: T) -> (Complex<T>, Complex<T>) {
        let f = eval_fundamental(x, self.lambda);
        let (up, dup) = st.particular.as_ref().map_or((Complex::zero(), Complex::zero()), |p| p.eval(x));
        (st.alpha * f.c + st.beta * f.s + up, st.alpha * f.dc + st.beta * f.ds + dup)
    }

    /// Coefficient vector `(α₀, β₀, α₁, β₁, …)` in edge order.
    pub fn coefficients(&self) -> Vec<Complex<T>> {
        self.edges.iter().flat_map(|s| [s.alpha, s.beta]).collect()
    }

    /// `∫ u · conj(f)` over Γ₀.
    pub fn inner_product(&self, forcing: &EdgeForcing<T>) -> Complex<T> {
        let panel = quadrature::max_panel(self.lambda.sqrt());
        let mut total = Complex::zero();
        for st in &self.edges {
            let Some(f) = forcing.get(st.edge) else { continue };
            for piece in f.pieces() {
                for (x, w) in quadrature::points(piece.start, piece.end, panel.min(piece.len())) {
                    total = total + self.trace_unchecked(st, x).0 * piece.eval(x).conj() * w;
                }
            }
        }
        total
    }
}

/// `(u, u')` of a solution on an edge; see [`EdgeSolution::trace`].
pub fn trace<T: Real>(sol: &EdgeSolution<T>, edge: usize, x: T) -> Result<(Complex<T>, Complex<T>)> {
    sol.trace(edge, x)
}

/// Linear form `coef_α·α + coef_β·β + constant`.
#[derive(Debug, Clone, Copy)]
struct Form<T> {
    alpha: Complex<T>,
    beta: Complex<T>,
    constant: Complex<T>,
}

/// The interior system at one `λ`, factorized once and reusable for any
/// boundary data and forcing.
#[derive(Debug, Clone)]
pub struct Interior<'g, T> {
    graph: &'g MetricGraph<T>,
    lambda: Complex<T>,
    boundary: Vec<VertexId>,
    matrix: CMatrix<T>,
    lu: Lu<T>,
    smin_ratio: T,
    tolerances: Tolerances<T>,
}

impl<'g, T: Real> Interior<'g, T> {
    pub fn new(graph: &'g MetricGraph<T>, lambda: Complex<T>) -> Result<Self> {
        Self::with_tolerances(graph, lambda, Tolerances::default())
    }

    pub fn with_tolerances(graph: &'g MetricGraph<T>, lambda: Complex<T>, tolerances: Tolerances<T>) -> Result<Self> {
        graph.require_normalized()?;
        let (matrix, _) = assemble(graph, lambda, None, &BTreeMap::new());
        let smin_ratio = matrix.smin_ratio();
        let lu = matrix.lu();
        Ok(Self {
            graph,
            lambda,
            boundary: graph.boundary(),
            matrix,
            lu,
            smin_ratio,
            tolerances,
        })
    }

    pub fn lambda(&self) -> Complex<T> {
        self.lambda
    }

    pub fn graph(&self) -> &'g MetricGraph<T> {
        self.graph
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    /// `σ_min(M)/σ_max(M)`.
    pub fn smin_ratio(&self) -> T {
        self.smin_ratio
    }

    pub fn is_regular(&self) -> bool {
        self.smin_ratio >= self.tolerances.sing_tol && !self.lu.is_singular()
    }

    pub fn require_regular(&self) -> Result<()> {
        if self.is_regular() {
            Ok(())
        } else {
            Err(Error::NearSingular {
                lambda: to_c64(self.lambda),
                sigma_min: self.smin_ratio.to_f64_lossy(),
            })
        }
    }

    /// Solves with Dirichlet data `phi` on B (boundary-index order).
    pub fn solve(&self, phi: &[Complex<T>], forcing: &EdgeForcing<T>) -> Result<EdgeSolution<T>> {
        self.require_regular()?;
        if phi.len() != self.boundary.len() {
            return Err(Error::Shape(format!(
                "boundary data has {} entries, graph has {} boundary vertices",
                phi.len(),
                self.boundary.len()
            )));
        }
        forcing.check_against(self.graph)?;
        let particulars = particulars(self.graph, self.lambda, forcing);
        let (_, rhs) = assemble(self.graph, self.lambda, Some(phi), &particulars);
        let coeffs = self.lu.solve(&rhs).ok_or_else(|| Error::NearSingular {
            lambda: to_c64(self.lambda),
            sigma_min: 0.0,
        })?;
        Ok(self.solution_from(&coeffs, particulars))
    }

    fn solution_from(
        &self,
        coeffs: &[Complex<T>],
        mut particulars: BTreeMap<usize, ParticularSolution<T>>,
    ) -> EdgeSolution<T> {
        let edges = self
            .graph
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| EdgeState {
                edge: e.id,
                length: e.length,
                alpha: coeffs[2 * i],
                beta: coeffs[2 * i + 1],
                particular: particulars.remove(&e.id),
            })
            .collect();
        EdgeSolution {
            lambda: self.lambda,
            edges,
        }
    }

    /// `N` applied to the homogeneous solution with coefficient vector
    /// `coeffs` (no forcing).
    pub fn normal_derivative_of(&self, coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
        let sol = self.solution_from(coeffs, BTreeMap::new());
        normal_derivative(&sol, self.graph).expect("graph is normalized")
    }
}

fn particulars<T: Real>(
    g: &MetricGraph<T>,
    lambda: Complex<T>,
    forcing: &EdgeForcing<T>,
) -> BTreeMap<usize, ParticularSolution<T>> {
    g.edges()
        .iter()
        .filter_map(|e| forcing.get(e.id).map(|f| (e.id, ParticularSolution::new(f.clone(), lambda))))
        .collect()
}

/// Value and outgoing-derivative forms of the solution at one edge endpoint.
fn slot_forms<T: Real>(
    g: &MetricGraph<T>,
    lambda: Complex<T>,
    edge: usize,
    end: End,
    particulars: &BTreeMap<usize, ParticularSolution<T>>,
) -> (usize, Form<T>, Form<T>) {
    let idx = g.edge_index(edge).expect("slot refers to a graph edge");
    match end {
        End::Start => (
            idx,
            Form {
                alpha: Complex::one(),
                beta: Complex::zero(),
                constant: Complex::zero(),
            },
            Form {
                alpha: Complex::zero(),
                beta: Complex::one(),
                constant: Complex::zero(),
            },
        ),
        End::End => {
            let len = g.edges()[idx].length;
            let f = eval_fundamental(len, lambda);
            let (up, dup) = particulars
                .get(&edge)
                .map_or((Complex::zero(), Complex::zero()), |p| p.eval(len));
            (
                idx,
                Form {
                    alpha: f.c,
                    beta: f.s,
                    constant: up,
                },
                Form {
                    alpha: -f.dc,
                    beta: -f.ds,
                    constant: -dup,
                },
            )
        }
    }
}

fn assemble<T: Real>(
    g: &MetricGraph<T>,
    lambda: Complex<T>,
    phi: Option<&[Complex<T>]>,
    particulars: &BTreeMap<usize, ParticularSolution<T>>,
) -> (CMatrix<T>, Vec<Complex<T>>) {
    let n = 2 * g.edges().len();
    let mut m = CMatrix::zeros(n, n);
    let mut rhs = vec![Complex::zero(); n];
    let boundary = g.boundary();
    let mut row = 0;
    for v in g.vertex_ids() {
        let slots = g.slots(v);
        if let Ok(bi) = boundary.binary_search(&v) {
            let (edge, end) = g.boundary_slot(v).expect("normalized boundary vertex");
            let (idx, val, _) = slot_forms(g, lambda, edge, end, particulars);
            m[(row, 2 * idx)] = val.alpha;
            m[(row, 2 * idx + 1)] = val.beta;
            let data = phi.map_or(Complex::zero(), |p| p[bi]);
            rhs[row] = data - val.constant;
            row += 1;
            continue;
        }
        let cond = g.condition(v).expect("declared vertex");
        let forms: Vec<_> = slots
            .iter()
            .map(|s| match s {
                Slot::Edge(e, end) => slot_forms(g, lambda, *e, *end, particulars),
                Slot::Lead(_) => unreachable!("leads attach only at boundary vertices"),
            })
            .collect();
        for r in 0..slots.len() {
            let mut constant = Complex::zero();
            for (j, (idx, val, der)) in forms.iter().enumerate() {
                let (a, b) = (cond.a[(r, j)], cond.b[(r, j)]);
                m[(row, 2 * idx)] += a * val.alpha + b * der.alpha;
                m[(row, 2 * idx + 1)] += a * val.beta + b * der.beta;
                constant += a * val.constant + b * der.constant;
            }
            rhs[row] = -constant;
            row += 1;
        }
    }
    debug_assert_eq!(row, n);
    (m, rhs)
}

/// The linear system `M(λ)·(α, β) = rhs` of the interior problem with
/// boundary data `phi` and forcing `f0`. Its size is `2|E₀|`.
pub fn assemble_interior<T: Real>(
    g: &MetricGraph<T>,
    lambda: Complex<T>,
    phi: &[Complex<T>],
    f0: &EdgeForcing<T>,
) -> Result<(CMatrix<T>, Vec<Complex<T>>)> {
    g.require_normalized()?;
    if phi.len() != g.boundary().len() {
        return Err(Error::Shape(format!(
            "boundary data has {} entries, graph has {} boundary vertices",
            phi.len(),
            g.boundary().len()
        )));
    }
    f0.check_against(g)?;
    Ok(assemble(g, lambda, Some(phi), &particulars(g, lambda, f0)))
}

/// Solves the interior problem `-u'' - λu = f0` on Γ₀, vertex conditions
/// off B, `u|_B = phi`.
pub fn solve_interior<T: Real>(
    g: &MetricGraph<T>,
    lambda: Complex<T>,
    phi: &[Complex<T>],
    f0: &EdgeForcing<T>,
) -> Result<EdgeSolution<T>> {
    Interior::new(g, lambda)?.solve(phi, f0)
}

/// `N u`: at each boundary vertex, the derivative along its Γ₀ edge taken
/// in the direction towards the vertex.
pub fn normal_derivative<T: Real>(sol: &EdgeSolution<T>, g: &MetricGraph<T>) -> Result<Vec<Complex<T>>> {
    g.boundary()
        .into_iter()
        .map(|v| {
            let (edge, end) = g.boundary_slot(v)?;
            let st = sol.state(edge)?;
            Ok(match end {
                End::Start => -sol.trace_unchecked(st, T::zero()).1,
                End::End => sol.trace_unchecked(st, st.length).1,
            })
        })
        .collect()
}
