//! Metric graph with leads and self-adjoint vertex conditions.
//!
//! A vertex condition is a pair `(A, B)` of `d × d` complex matrices acting
//! on the vectors of values and outgoing derivatives at a vertex of degree
//! `d`: `A f(v) + B f'(v) = 0`. Columns follow the vertex's slot order,
//! which is always the sorted order of [`Slot`]: finite edge endpoints by
//! `(edge id, endpoint)` first, then leads by id.
//!
//! The outgoing derivative at the `x = 0` end of an edge is `+u'(0)`; at the
//! `x = ℓ` end it is `-u'(ℓ)`. On a lead it is `+u'(0)`.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex;
use num_traits::One;

use crate::error::{ConditionViolation, Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

pub type VertexId = usize;
pub type EdgeId = usize;
pub type LeadId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum End {
    /// `x = 0`.
    Start,
    /// `x = ℓ`.
    End,
}

/// One incident edge-endpoint (or lead) at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Edge(EdgeId, End),
    Lead(LeadId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCondition<T> {
    pub a: CMatrix<T>,
    pub b: CMatrix<T>,
}

impl<T: Real> VertexCondition<T> {
    pub fn new(a: CMatrix<T>, b: CMatrix<T>) -> Self {
        Self { a, b }
    }

    pub fn degree(&self) -> usize {
        self.a.rows()
    }

    /// `f = 0` on every incident edge.
    pub fn dirichlet(d: usize) -> Result<Self> {
        nonzero_degree(d)?;
        Ok(Self::new(CMatrix::identity(d), CMatrix::zeros(d, d)))
    }

    /// `f' = 0` on every incident edge (decoupled).
    pub fn neumann(d: usize) -> Result<Self> {
        nonzero_degree(d)?;
        Ok(Self::new(CMatrix::zeros(d, d), CMatrix::identity(d)))
    }

    /// Continuity plus zero sum of outgoing derivatives.
    pub fn standard(d: usize) -> Result<Self> {
        nonzero_degree(d)?;
        let mut a = CMatrix::zeros(d, d);
        let mut b = CMatrix::zeros(d, d);
        for i in 0..d - 1 {
            a[(i, i)] = Complex::one();
            a[(i, i + 1)] = -Complex::<T>::one();
        }
        for j in 0..d {
            b[(d - 1, j)] = Complex::one();
        }
        Ok(Self::new(a, b))
    }

    /// Continuity plus `Σ f' = strength · f(v)`, the δ-interaction.
    pub fn delta(d: usize, strength: T) -> Result<Self> {
        let mut cond = Self::standard(d)?;
        cond.a[(d - 1, 0)] = Complex::new(-strength, T::zero());
        Ok(cond)
    }

    /// `A = U - I`, `B = i (U + I)` for a unitary `U`; every such pair is
    /// admissible.
    pub fn from_unitary(u: &CMatrix<T>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Shape("unitary parametrization needs a square matrix".into()));
        }
        let id = CMatrix::identity(u.rows());
        let a = u.sub(&id);
        let b = u.add(&id).scale(Complex::i());
        Ok(Self::new(a, b))
    }

    /// Whether both pairs describe the same Lagrangian subspace.
    pub fn equivalent_to(&self, other: &Self, rel_tol: T) -> bool {
        if self.degree() != other.degree() {
            return false;
        }
        let d = self.degree();
        let stacked = self.a.hcat(&self.b).vcat(&other.a.hcat(&other.b));
        let sv = stacked.adjoint().singular_values();
        let max = sv[0];
        max > T::zero() && sv[d] <= rel_tol * max
    }

    fn permute_columns(&self, perm: &[usize]) -> Self {
        let d = self.degree();
        let a = CMatrix::from_fn(d, d, |i, j| self.a[(i, perm[j])]);
        let b = CMatrix::from_fn(d, d, |i, j| self.b[(i, perm[j])]);
        Self::new(a, b)
    }
}

fn nonzero_degree(d: usize) -> Result<()> {
    if d == 0 {
        Err(Error::InvalidArgument("vertex degree must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// [`VertexCondition::standard`] as a free function.
pub fn standard_condition<T: Real>(d: usize) -> Result<VertexCondition<T>> {
    VertexCondition::standard(d)
}

/// Measured admissibility defects of a vertex condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck<T> {
    /// Smallest over largest singular value of `(A B)`.
    pub rank_ratio: T,
    pub rank: usize,
    /// `‖A B* − B A*‖_F`.
    pub hermitian_defect: T,
    pub hermitian_tol: T,
    pub violation: Option<ConditionViolation>,
}

impl<T> ConditionCheck<T> {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn default_rank_tol<T: Real>() -> T {
    T::tol(1e-10)
}

/// Checks `rank(A B) = d` and `A B*` self-adjoint. Shape errors are returned
/// as `Err`; invariant failures are reported inside the check.
pub fn validate_condition<T: Real>(cond: &VertexCondition<T>) -> Result<ConditionCheck<T>> {
    let d = cond.a.rows();
    if !cond.a.is_square() || !cond.b.is_square() || cond.b.rows() != d {
        return Err(Error::Shape(format!(
            "A is {}x{}, B is {}x{}; both must be d x d",
            cond.a.rows(),
            cond.a.cols(),
            cond.b.rows(),
            cond.b.cols()
        )));
    }
    if d == 0 {
        return Err(Error::Shape("degree 0 condition".into()));
    }
    let rank_tol = default_rank_tol::<T>();
    let sv = cond.a.hcat(&cond.b).adjoint().singular_values();
    let max = sv[0];
    let rank_ratio = if max > T::zero() { sv[d - 1] / max } else { T::zero() };
    let rank = if max > T::zero() {
        sv.iter().filter(|&&s| s > rank_tol * max).count()
    } else {
        0
    };

    let abs = cond.a.matmul(&cond.b.adjoint());
    let hermitian_defect = abs.sub(&abs.adjoint()).norm_fro();
    let hermitian_tol = T::tol(1e-10) * T::one().max(cond.a.norm_fro() * cond.b.norm_fro());

    let violation = if rank < d {
        Some(ConditionViolation::RankDeficient {
            rank,
            degree: d,
            ratio: rank_ratio.to_f64_lossy(),
        })
    } else if hermitian_defect > hermitian_tol {
        Some(ConditionViolation::NotSelfAdjoint {
            defect: hermitian_defect.to_f64_lossy(),
            tol: hermitian_tol.to_f64_lossy(),
        })
    } else {
        None
    };
    Ok(ConditionCheck {
        rank_ratio,
        rank,
        hermitian_defect,
        hermitian_tol,
        violation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub id: EdgeId,
    /// Vertex at `x = 0`.
    pub from: VertexId,
    /// Vertex at `x = ℓ`.
    pub to: VertexId,
    pub length: T,
}

impl<T> Edge<T> {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lead {
    pub id: LeadId,
    pub vertex: VertexId,
}

/// Compact graph Γ₀ plus leads. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGraph<T> {
    vertices: BTreeMap<VertexId, VertexCondition<T>>,
    edges: Vec<Edge<T>>,
    leads: Vec<Lead>,
    slots: BTreeMap<VertexId, Vec<Slot>>,
}

impl<T: Real> MetricGraph<T> {
    /// Builds and validates a graph: ids unique, endpoints declared, lengths
    /// positive, condition sizes matching degrees, conditions admissible.
    pub fn new(
        vertices: impl IntoIterator<Item = (VertexId, VertexCondition<T>)>,
        mut edges: Vec<Edge<T>>,
        mut leads: Vec<Lead>,
    ) -> Result<Self> {
        let mut vmap = BTreeMap::new();
        for (id, cond) in vertices {
            if vmap.insert(id, cond).is_some() {
                return Err(Error::Graph(format!("duplicate vertex id {id}")));
            }
        }
        edges.sort_by_key(|e| e.id);
        leads.sort_by_key(|l| l.id);
        if let Some(w) = edges.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Graph(format!("duplicate edge id {}", w[0].id)));
        }
        if let Some(w) = leads.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Graph(format!("duplicate lead id {}", w[0].id)));
        }

        let mut slots: BTreeMap<VertexId, Vec<Slot>> = vmap.keys().map(|&v| (v, Vec::new())).collect();
        for e in &edges {
            if !(e.length > T::zero() && e.length.is_finite()) {
                return Err(Error::Graph(format!("edge {} has non-positive length {}", e.id, e.length)));
            }
            for (v, end) in [(e.from, End::Start), (e.to, End::End)] {
                slots
                    .get_mut(&v)
                    .ok_or_else(|| Error::Graph(format!("edge {} refers to undeclared vertex {v}", e.id)))?
                    .push(Slot::Edge(e.id, end));
            }
        }
        for l in &leads {
            slots
                .get_mut(&l.vertex)
                .ok_or_else(|| Error::Graph(format!("lead {} refers to undeclared vertex {}", l.id, l.vertex)))?
                .push(Slot::Lead(l.id));
        }
        for s in slots.values_mut() {
            s.sort();
        }

        for (&v, cond) in &vmap {
            let d = slots[&v].len();
            if d == 0 {
                return Err(Error::Graph(format!("vertex {v} has no incident edges or leads")));
            }
            if cond.a.rows() != d || cond.a.cols() != d || cond.b.rows() != d || cond.b.cols() != d {
                return Err(Error::Shape(format!(
                    "vertex {v} has degree {d} but condition matrices are {}x{} and {}x{}",
                    cond.a.rows(),
                    cond.a.cols(),
                    cond.b.rows(),
                    cond.b.cols()
                )));
            }
            let check = validate_condition(cond)?;
            if let Some(violation) = check.violation {
                return Err(Error::Condition { vertex: v, violation });
            }
        }

        Ok(Self {
            vertices: vmap,
            edges,
            leads,
            slots,
        })
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices.keys().copied()
    }

    pub fn condition(&self, v: VertexId) -> Option<&VertexCondition<T>> {
        self.vertices.get(&v)
    }

    pub fn conditions(&self) -> impl Iterator<Item = (VertexId, &VertexCondition<T>)> {
        self.vertices.iter().map(|(k, c)| (*k, c))
    }

    /// Edges sorted by id.
    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Leads sorted by id.
    pub fn leads(&self) -> &[Lead] {
        &self.leads
    }

    pub fn edge_index(&self, id: EdgeId) -> Option<usize> {
        self.edges.binary_search_by_key(&id, |e| e.id).ok()
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Edge<T>> {
        self.edge_index(id).map(|i| &self.edges[i])
    }

    /// Ordered incident slots of `v`; the column order of its condition.
    pub fn slots(&self, v: VertexId) -> &[Slot] {
        self.slots.get(&v).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.slots(v).len()
    }

    /// Boundary set B: vertices carrying a lead, sorted by id. The position
    /// in this list is the boundary index used by all ℂⁿ vectors.
    pub fn boundary(&self) -> Vec<VertexId> {
        self.leads
            .iter()
            .map(|l| l.vertex)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn boundary_index(&self, v: VertexId) -> Option<usize> {
        self.boundary().binary_search(&v).ok()
    }

    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.leads.iter().any(|l| l.vertex == v)
    }

    pub fn shortest_edge(&self) -> Option<T> {
        self.edges.iter().map(|e| e.length).reduce(T::min)
    }

    pub fn longest_edge(&self) -> Option<T> {
        self.edges.iter().map(|e| e.length).reduce(T::max)
    }

    /// Whether the lead attachment `v` is a degree-2 vertex joining one
    /// finite edge and one lead under the standard condition.
    fn boundary_vertex_is_normal(&self, v: VertexId) -> bool {
        let slots = self.slots(v);
        let edges = slots.iter().filter(|s| matches!(s, Slot::Edge(..))).count();
        let leads = slots.len() - edges;
        slots.len() == 2
            && edges == 1
            && leads == 1
            && self.vertices[&v].equivalent_to(
                &VertexCondition::standard(2).expect("degree 2"),
                default_rank_tol::<T>(),
            )
    }

    /// `None` if every lead attachment is in normal form, otherwise the
    /// first offending vertex with a reason.
    pub fn normal_form_violation(&self) -> Option<String> {
        self.boundary()
            .into_iter()
            .find(|&v| !self.boundary_vertex_is_normal(v))
            .map(|v| {
                format!(
                    "boundary vertex {v} must join exactly one finite edge and one lead under the standard condition"
                )
            })
    }

    pub fn is_normalized(&self) -> bool {
        self.normal_form_violation().is_none()
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        match self.normal_form_violation() {
            None => Ok(()),
            Some(msg) => Err(Error::NotNormalized(msg)),
        }
    }

    /// The unique finite slot at a normalized boundary vertex.
    pub fn boundary_slot(&self, v: VertexId) -> Result<(EdgeId, End)> {
        let mut it = self.slots(v).iter().filter_map(|s| match s {
            Slot::Edge(e, end) => Some((*e, *end)),
            Slot::Lead(_) => None,
        });
        match (it.next(), it.next()) {
            (Some(slot), None) => Ok(slot),
            _ => Err(Error::NotNormalized(format!(
                "boundary vertex {v} must be incident to exactly one finite edge"
            ))),
        }
    }

    /// Lead attached at boundary vertex `v` (the first by id if several).
    pub fn lead_at(&self, v: VertexId) -> Option<&Lead> {
        self.leads.iter().find(|l| l.vertex == v)
    }
}

/// Record of a lead that was moved out to a new boundary vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovedLead<T> {
    pub lead: LeadId,
    /// New edge covering `[0, offset]` of the old lead coordinate.
    pub edge: EdgeId,
    pub offset: T,
}

/// Output of boundary normalization: the new graph plus the lead moves
/// needed to transfer functions defined on the old leads.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized<T> {
    pub graph: MetricGraph<T>,
    pub moved: Vec<MovedLead<T>>,
}

/// Moves every lead whose attachment vertex is not already in normal form
/// out by `offset`, placing a new degree-2 boundary vertex with the
/// standard condition there. The operator is unchanged.
pub fn normalize_boundary<T: Real>(g: &MetricGraph<T>, offset: T) -> Result<Normalized<T>> {
    check_offset(offset)?;
    let targets: Vec<LeadId> = g
        .leads
        .iter()
        .filter(|l| !g.boundary_vertex_is_normal(l.vertex))
        .map(|l| l.id)
        .collect();
    split_leads_where(g, offset, &targets)
}

/// Moves every lead out by `offset`, whether or not its vertex is already
/// normal.
pub fn split_leads<T: Real>(g: &MetricGraph<T>, offset: T) -> Result<Normalized<T>> {
    check_offset(offset)?;
    let targets: Vec<LeadId> = g.leads.iter().map(|l| l.id).collect();
    split_leads_where(g, offset, &targets)
}

fn check_offset<T: Real>(offset: T) -> Result<()> {
    if offset > T::zero() && offset.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("normalization offset must be positive, got {offset}")))
    }
}

fn split_leads_where<T: Real>(g: &MetricGraph<T>, offset: T, targets: &[LeadId]) -> Result<Normalized<T>> {
    if targets.is_empty() {
        return Ok(Normalized {
            graph: g.clone(),
            moved: Vec::new(),
        });
    }
    let mut next_vertex = g.vertices.keys().next_back().map_or(0, |v| v + 1);
    let mut next_edge = g.edges.last().map_or(0, |e| e.id + 1);

    let mut vertices = g.vertices.clone();
    let mut edges = g.edges.clone();
    let mut leads = g.leads.clone();
    let mut moved = Vec::new();
    // old slot -> replacement, per attachment vertex
    let mut renamed: BTreeMap<VertexId, BTreeMap<Slot, Slot>> = BTreeMap::new();

    for lead in leads.iter_mut().filter(|l| targets.contains(&l.id)) {
        let (v, w, e) = (lead.vertex, next_vertex, next_edge);
        next_vertex += 1;
        next_edge += 1;
        edges.push(Edge {
            id: e,
            from: v,
            to: w,
            length: offset,
        });
        vertices.insert(w, VertexCondition::standard(2)?);
        renamed
            .entry(v)
            .or_default()
            .insert(Slot::Lead(lead.id), Slot::Edge(e, End::Start));
        lead.vertex = w;
        moved.push(MovedLead {
            lead: lead.id,
            edge: e,
            offset,
        });
    }

    for (v, map) in renamed {
        let old = g.slots(v);
        let mut new: Vec<Slot> = old.iter().map(|s| *map.get(s).unwrap_or(s)).collect();
        let relabeled = new.clone();
        new.sort();
        // column j of the new condition is the old column of the slot now at j
        let perm: Vec<usize> = new
            .iter()
            .map(|s| relabeled.iter().position(|r| r == s).expect("slot present"))
            .collect();
        let cond = vertices[&v].permute_columns(&perm);
        vertices.insert(v, cond);
    }

    Ok(Normalized {
        graph: MetricGraph::new(vertices, edges, leads)?,
        moved,
    })
}

/// Convenience constructor for graphs whose vertices all carry the standard
/// condition.
pub fn standard_graph<T: Real>(
    vertex_ids: &[VertexId],
    edges: Vec<Edge<T>>,
    leads: Vec<Lead>,
    overrides: Vec<(VertexId, VertexCondition<T>)>,
) -> Result<MetricGraph<T>> {
    let mut degree: BTreeMap<VertexId, usize> = vertex_ids.iter().map(|&v| (v, 0)).collect();
    for e in &edges {
        *degree.entry(e.from).or_default() += 1;
        *degree.entry(e.to).or_default() += 1;
    }
    for l in &leads {
        *degree.entry(l.vertex).or_default() += 1;
    }
    let overrides: BTreeMap<_, _> = overrides.into_iter().collect();
    let mut vertices = Vec::new();
    for (v, d) in degree {
        let cond = match overrides.get(&v) {
            Some(c) => c.clone(),
            None => VertexCondition::standard(d)?,
        };
        vertices.push((v, cond));
    }
    MetricGraph::new(vertices, edges, leads)
}
