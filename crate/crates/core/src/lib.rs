//! Spectral and resolvent computations for quantum graphs: a compact metric
//! graph with self-adjoint vertex conditions plus semi-infinite leads.
//!
//! The library computes Dirichlet-to-Neumann matrices of the compact part,
//! its Dirichlet spectrum, the quadratic form `(R(λ)f, f)` of the full
//! resolvent, its continuation onto and across the positive real axis, and
//! `ε ↓ 0` diagnostics of the limiting absorption principle.
//!
//! Everything is generic over the real scalar ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix `f64`.

pub mod cli;
pub mod dtn;
pub mod error;
pub mod format;
pub mod graph;
pub mod halfline;
pub mod interior;
pub mod lap;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod resolvent;
pub mod scalar;
pub mod settings;
pub mod spectrum;

pub use dtn::{dtn_matrix, dtn_via_extension, robin_data, DtnMatrix, ExtensionOperator, RobinData};
pub use error::{ConditionViolation, Error, Result};
pub use graph::{
    normalize_boundary, split_leads, standard_graph, validate_condition, Edge, End, Lead, MetricGraph, Slot,
    VertexCondition,
};
pub use halfline::{branch_k, neumann_resolvent_eval, LeadFunction, NeumannResolvent};
pub use interior::{assemble_interior, normal_derivative, solve_interior, EdgeForcing, EdgeSolution, Interior};
pub use lap::{embedded_probe, exceptional_scan, lap_sweep, Classification, ExceptionalKind, ExceptionalSet, LapConfig};
pub use linalg::CMatrix;
pub use poly::{Piece, PiecewisePoly};
pub use resolvent::{continue_value, physical_value, solve_full, CompositeFunction, Formula, ResolventSample};
pub use scalar::Real;
pub use settings::Tolerances;
pub use spectrum::{find_eigenvalues, ScanConfig};

pub type C64 = num_complex::Complex64;
pub type C32 = num_complex::Complex32;

pub type Graph64 = MetricGraph<f64>;
pub type Graph32 = MetricGraph<f32>;
pub type Function64 = CompositeFunction<f64>;
pub type Function32 = CompositeFunction<f32>;
pub type Sample64 = ResolventSample<f64>;
pub type Sample32 = ResolventSample<f32>;
pub type Matrix64 = CMatrix<f64>;
pub type Matrix32 = CMatrix<f32>;
