use crate::scalar::Real;

/// Numerical thresholds shared by the solvers. All are relative unless noted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    /// Interior system is singular when `σ_min(M) < sing_tol · ‖M‖`.
    pub sing_tol: T,
    /// Accept a refined eigenvalue when `σ_min/σ_max` falls below this.
    pub accept_tol: T,
    /// Eigenvalue hits closer than this are merged (absolute).
    pub merge_tol: T,
    /// Residual gate for resolvent samples, relative to the sample scale.
    pub res_tol: T,
    /// `|λ|` below this is refused as the threshold region (absolute).
    pub lambda_floor: T,
    /// `k I + iΛ` is treated as singular when `σ_min/σ_max` is below this.
    pub pole_tol: T,
    /// Grid points closer than this to an exceptional point are skipped
    /// (absolute).
    pub exclusion_radius: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            sing_tol: T::tol(1e-8),
            accept_tol: T::tol(1e-8),
            merge_tol: T::tol(1e-6),
            res_tol: T::tol(1e-8),
            lambda_floor: T::lit(1e-6),
            pole_tol: T::tol(1e-12),
            exclusion_radius: T::lit(1e-3),
        }
    }
}
