//! Eigenvalues of the interior operator H₀ (Dirichlet on B) as the points
//! where the interior system `M(λ)` becomes singular.
//!
//! The scan minimizes `σ_min(M)/σ_max(M)` rather than tracking a determinant
//! sign, since `det M(λ)` is complex for complex vertex conditions.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::interior::Interior;
use crate::scalar::Real;
use crate::settings::Tolerances;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueHit<T> {
    pub lambda: T,
    /// Number of relative singular values of `M(λ)` below `accept_tol`.
    pub multiplicity: usize,
    /// `σ_min/σ_max` at the refined point.
    pub smin: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig<T> {
    pub window: (T, T),
    pub step: T,
    pub accept_tol: T,
    pub merge_tol: T,
    pub max_iter: usize,
}

impl<T: Real> ScanConfig<T> {
    pub fn new(window: (T, T), step: T) -> Result<Self> {
        if !(window.0 < window.1) {
            return Err(Error::InvalidArgument(format!(
                "scan window [{}, {}] is empty",
                window.0, window.1
            )));
        }
        if !(step > T::zero()) {
            return Err(Error::InvalidArgument(format!("scan step must be positive, got {step}")));
        }
        let tol = Tolerances::<T>::default();
        Ok(Self {
            window,
            step,
            accept_tol: tol.accept_tol,
            merge_tol: tol.merge_tol,
            max_iter: 200,
        })
    }

    /// Step `0.01 (π/ℓ_max)²`, a fraction of the smallest level spacing one
    /// expects on the longest edge.
    pub fn for_graph(g: &MetricGraph<T>, window: (T, T)) -> Result<Self> {
        Self::new(window, default_step(g))
    }
}

pub fn default_step<T: Real>(g: &MetricGraph<T>) -> T {
    let lmax = g.longest_edge().unwrap_or_else(T::one);
    T::lit(0.01) * (T::PI() / lmax).powi(2)
}

/// `σ_min(M(λ)) / σ_max(M(λ))` for the homogeneous interior system.
pub fn smin_profile<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>) -> Result<T> {
    Ok(Interior::new(g, lambda)?.smin_ratio())
}

fn profile_real<T: Real>(g: &MetricGraph<T>, lambda: T) -> T {
    Interior::new(g, Complex::new(lambda, T::zero()))
        .map(|i| i.smin_ratio())
        .unwrap_or_else(|_| T::infinity())
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<T: Real>(mut a: T, mut b: T, tol: T, max_iter: usize, f: impl Fn(T) -> T) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `[λ_min, λ_max]` for eigenvalues of H₀. Eigenvalues closer together
/// than the grid step may be missed.
pub fn find_eigenvalues<T: Real>(g: &MetricGraph<T>, cfg: &ScanConfig<T>) -> Result<Vec<EigenvalueHit<T>>> {
    g.require_normalized()?;
    let (lo, hi) = cfg.window;
    let steps = ((hi - lo) / cfg.step).ceil().to_usize().unwrap_or(0);
    // one extra grid point on either side so minima at the window edges are bracketed
    let grid: Vec<T> = (0..steps + 3)
        .map(|i| lo + cfg.step * (T::lit(i as f64) - T::one()))
        .collect();
    let profile: Vec<T> = grid.par_iter().map(|&l| profile_real(g, l)).collect();

    let candidates: Vec<usize> = (1..grid.len() - 1)
        .filter(|&i| {
            profile[i] <= profile[i - 1] && profile[i] <= profile[i + 1] && profile[i] < profile[i - 1].max(profile[i + 1])
        })
        .collect();

    let mut hits: Vec<EigenvalueHit<T>> = candidates
        .par_iter()
        .filter_map(|&i| {
            let (a, b) = (grid[i - 1], grid[i + 1]);
            let tol = T::lit(1e-12) * T::one().max(grid[i].abs());
            let (lambda, smin) = golden_min(a, b, tol, cfg.max_iter, |l| profile_real(g, l));
            if smin >= cfg.accept_tol || lambda < lo || lambda > hi {
                return None;
            }
            let interior = Interior::new(g, Complex::new(lambda, T::zero())).ok()?;
            let multiplicity = interior.matrix().svd().nullity(cfg.accept_tol).max(1);
            Some(EigenvalueHit {
                lambda,
                multiplicity,
                smin,
            })
        })
        .collect();

    hits.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<EigenvalueHit<T>> = Vec::with_capacity(hits.len());
    for h in hits {
        match merged.last_mut() {
            Some(last) if h.lambda - last.lambda <= cfg.merge_tol => {
                if h.smin < last.smin {
                    last.lambda = h.lambda;
                    last.smin = h.smin;
                }
                last.multiplicity = last.multiplicity.max(h.multiplicity);
            }
            _ => merged.push(h),
        }
    }
    Ok(merged)
}

/// Coefficient vectors spanning the numerical kernel of `M(λ)`.
pub fn interior_null_space<T: Real>(
    g: &MetricGraph<T>,
    lambda: T,
    rel_tol: T,
) -> Result<Vec<Vec<Complex<T>>>> {
    let interior = Interior::new(g, Complex::new(lambda, T::zero()))?;
    Ok(interior.matrix().svd().null_space(rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, Lead, VertexCondition};
    use std::f64::consts::PI;

    fn interval(len: f64) -> MetricGraph<f64> {
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

    #[test]
    fn profile_vanishes_on_spectrum_only() {
        let g = interval(PI);
        assert!(smin_profile(&g, Complex::new(1.0, 0.0)).unwrap() < 1e-14);
        assert!(smin_profile(&g, Complex::new(0.5, 0.0)).unwrap() > 1e-3);
        assert!(smin_profile(&g, Complex::new(1.0, 1.0)).unwrap() > 0.0);
    }

    #[test]
    fn golden_section_finds_v_minimum() {
        let (x, fx) = golden_min(0.0, 1.0, 1e-14, 200, |x: f64| (x - 0.3141).abs());
        assert!((x - 0.3141).abs() < 1e-13);
        assert!(fx < 1e-13);
    }

    #[test]
    fn interval_pi_spectrum() {
        let g = interval(PI);
        let cfg = ScanConfig::for_graph(&g, (0.0, 17.0)).unwrap();
        let hits = find_eigenvalues(&g, &cfg).unwrap();
        let lambdas: Vec<f64> = hits.iter().map(|h| h.lambda).collect();
        assert_eq!(lambdas.len(), 4, "{lambdas:?}");
        for (h, n) in hits.iter().zip(1..) {
            assert!((h.lambda - (n * n) as f64).abs() < 1e-8);
            assert_eq!(h.multiplicity, 1);
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        assert!(ScanConfig::new((1.0, 0.0), 0.1).is_err());
        assert!(ScanConfig::new((0.0, 1.0), 0.0).is_err());
    }
}
