use num_complex::Complex64;
use thiserror::Error;

/// Why a vertex condition fails admissibility.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionViolation {
    #[error("rank(A B) = {rank} < {degree} (smallest/largest singular value {ratio:.3e})")]
    RankDeficient {
        rank: usize,
        degree: usize,
        ratio: f64,
    },
    #[error("A·B* is not self-adjoint (defect {defect:.3e} > tolerance {tol:.3e})")]
    NotSelfAdjoint { defect: f64, tol: f64 },
    #[error("edge order: {0}")]
    EdgeOrder(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("vertex {vertex}: {violation}")]
    Condition {
        vertex: usize,
        violation: ConditionViolation,
    },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("graph is not in boundary normal form: {0}")]
    NotNormalized(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// The interior Dirichlet system is singular at `lambda`, i.e. `lambda`
    /// is (numerically) an eigenvalue of the interior operator.
    #[error("lambda = {lambda} is numerically in the interior spectrum (relative sigma_min {sigma_min:.3e})")]
    NearSingular { lambda: Complex64, sigma_min: f64 },

    /// `k + iΛ(λ)` is not invertible.
    #[error("continuation pole at lambda = {lambda} (sigma_min {sigma_min:.3e})")]
    ContinuationPole { lambda: Complex64, sigma_min: f64 },

    #[error("lambda = {lambda} is on the branch cut (-inf, 0] or below the threshold floor")]
    Threshold { lambda: Complex64 },

    #[error("window contains exceptional points: {}", fmt_points(.0))]
    ExceptionalPoints(Vec<f64>),
}

fn fmt_points(points: &[f64]) -> String {
    points
        .iter()
        .map(|p| format!("{p:.12}"))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    /// Numerical exceptions at requested spectral points, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NearSingular { .. }
                | Error::ContinuationPole { .. }
                | Error::Threshold { .. }
                | Error::ExceptionalPoints(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
