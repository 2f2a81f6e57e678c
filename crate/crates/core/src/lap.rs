//! Limiting absorption on the real axis: `ε ↓ 0` sweeps of
//! `(R(λ+iε)f, f)`, the exceptional set where the continuation can fail,
//! and a probe for eigenvalues embedded in the continuous spectrum.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::halfline::branch_k_with;
use crate::interior::Interior;
use crate::linalg::CMatrix;
use crate::resolvent::{continue_value, pole_matrix, solve_full, CompositeFunction};
use crate::scalar::Real;
use crate::settings::Tolerances;
use crate::spectrum::{find_eigenvalues, golden_min, ScanConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExceptionalKind {
    /// Eigenvalue of the interior Dirichlet problem whose eigenfunctions
    /// leak into the leads.
    InteriorEigenvalue,
    /// `kI + iΛ(λ)` is numerically singular.
    ContinuationPole,
    /// Interior eigenvalue with an eigenfunction of vanishing normal
    /// derivative on B: it extends by zero to the leads.
    EmbeddedEigenvalueCandidate,
}

impl ExceptionalKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::InteriorEigenvalue => "interior_eigenvalue",
            Self::ContinuationPole => "continuation_pole",
            Self::EmbeddedEigenvalueCandidate => "embedded_candidate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalPoint<T> {
    pub lambda: T,
    pub kind: ExceptionalKind,
    /// `σ_min/σ_max` of `M(λ)` for eigenvalue kinds, `σ_min(kI + iΛ)/max(1, |k|)`
    /// for poles.
    pub sigma_min: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalSet<T> {
    pub window: (T, T),
    /// Sorted by `λ`.
    pub points: Vec<ExceptionalPoint<T>>,
}

impl<T: Real> ExceptionalSet<T> {
    pub fn lambdas(&self) -> Vec<T> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn of_kind(&self, kind: ExceptionalKind) -> impl Iterator<Item = &ExceptionalPoint<T>> {
        self.points.iter().filter(move |p| p.kind == kind)
    }
}

/// `σ_min(kI + iΛ(λ))`, absolute. At real `λ > 0` off the interior spectrum
/// this is at least `k`, since `Re⟨(kI+iΛ)v, v⟩ = k‖v‖²`.
pub fn pole_sigma_min<T: Real>(g: &MetricGraph<T>, lambda: Complex<T>) -> Result<T> {
    let tol = Tolerances::<T>::default();
    let k = branch_k_with(lambda, tol.lambda_floor)?;
    let dtn = Interior::new(g, lambda)?.dtn()?;
    Ok(pole_matrix(k, &dtn.matrix).svd().smallest())
}

/// Relative threshold below which `σ_min(kI + iΛ)/max(1,|k|)` counts as a pole.
pub const POLE_DIP: f64 = 1e-6;

fn scaled_pole_sigma<T: Real>(g: &MetricGraph<T>, lambda: T) -> T {
    let l = Complex::new(lambda, T::zero());
    match pole_sigma_min(g, l) {
        Ok(s) => s / T::one().max(lambda.abs().sqrt()),
        Err(_) => T::infinity(),
    }
}

/// Classifies an interior eigenvalue: embedded if some eigenfunction has
/// `Nψ = 0`, i.e. `N` restricted to the kernel of `M(λ)` is not injective.
fn classify_interior<T: Real>(g: &MetricGraph<T>, lambda: T, accept_tol: T) -> Result<ExceptionalKind> {
    let interior = Interior::new(g, Complex::new(lambda, T::zero()))?;
    let null = interior.matrix().svd().null_space(accept_tol);
    if null.is_empty() {
        return Ok(ExceptionalKind::InteriorEigenvalue);
    }
    let n = g.boundary().len();
    let columns: Vec<_> = null.iter().map(|v| interior.normal_derivative_of(v)).collect();
    let nv = CMatrix::from_columns(n, &columns);
    let scale = T::one().max(lambda.abs().sqrt());
    Ok(if nv.svd().smallest() < T::lit(POLE_DIP) * scale {
        ExceptionalKind::EmbeddedEigenvalueCandidate
    } else {
        ExceptionalKind::InteriorEigenvalue
    })
}

/// Interior eigenvalues (tagged interior or embedded) plus real-axis dips of
/// `σ_min(kI + iΛ)` inside `window`.
pub fn exceptional_scan<T: Real>(g: &MetricGraph<T>, cfg: &ScanConfig<T>) -> Result<ExceptionalSet<T>> {
    let tol = Tolerances::<T>::default();
    let (lo, hi) = cfg.window;
    if !(lo >= tol.lambda_floor) {
        return Err(Error::InvalidArgument(format!(
            "scan window must lie above the threshold floor {}, got [{lo}, {hi}]",
            tol.lambda_floor
        )));
    }
    let mut points = Vec::new();
    for hit in find_eigenvalues(g, cfg)? {
        points.push(ExceptionalPoint {
            lambda: hit.lambda,
            kind: classify_interior(g, hit.lambda, cfg.accept_tol)?,
            sigma_min: hit.smin,
        });
    }

    let steps = ((hi - lo) / cfg.step).ceil().to_usize().unwrap_or(0);
    let grid: Vec<T> = (0..=steps).map(|i| (lo + cfg.step * T::lit(i as f64)).min(hi)).collect();
    let profile: Vec<T> = grid.par_iter().map(|&l| scaled_pole_sigma(g, l)).collect();
    let dip = T::lit(POLE_DIP);
    let poles: Vec<ExceptionalPoint<T>> = (1..grid.len().saturating_sub(1))
        .filter(|&i| profile[i] <= profile[i - 1] && profile[i] <= profile[i + 1] && profile[i] < T::lit(1e-2))
        .collect::<Vec<_>>()
        .par_iter()
        .filter_map(|&i| {
            let tol = T::lit(1e-12) * T::one().max(grid[i]);
            let (lambda, s) = golden_min(grid[i - 1], grid[i + 1], tol, cfg.max_iter, |l| scaled_pole_sigma(g, l));
            (s < dip).then_some(ExceptionalPoint {
                lambda,
                kind: ExceptionalKind::ContinuationPole,
                sigma_min: s,
            })
        })
        .collect();
    points.extend(poles);
    points.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ExceptionalSet {
        window: cfg.window,
        points,
    })
}

/// `1, 1e-1, …, 1e-6`.
pub fn default_ladder<T: Real>() -> Vec<T> {
    (0..=6).map(|i| T::lit(10f64.powi(-i))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapConfig<T> {
    pub step: T,
    /// Strictly decreasing positive values.
    pub ladder: Vec<T>,
    /// Skip grid points near exceptional points instead of failing.
    pub exclude: bool,
    pub tolerances: Tolerances<T>,
    /// Step of the exceptional-set scan; `None` uses the graph default.
    pub scan_step: Option<T>,
}

impl<T: Real> LapConfig<T> {
    pub fn new(step: T) -> Self {
        Self {
            step,
            ladder: default_ladder(),
            exclude: false,
            tolerances: Tolerances::default(),
            scan_step: None,
        }
    }
}

/// Samples at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct LapRow<T> {
    pub lambda: T,
    /// Boundary value `F(λ)` from the continued formulas.
    pub continued: Complex<T>,
    /// `(R(λ+iε)f, f)` per ladder entry.
    pub values: Vec<Complex<T>>,
    /// `|value(ε) − F(λ)|` per ladder entry.
    pub deviations: Vec<T>,
    pub sup: T,
    /// `max|value| / min|value|` over the ladder (1 when `f = 0`).
    pub ladder_ratio: T,
    /// Deviations decrease for `ε ≤ 1e-2`, allowing one roundoff step.
    pub monotone: bool,
    /// Least-squares slope of `log dev` against `log ε` for `ε ≤ 1e-2`.
    pub rate: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapSweep<T> {
    pub window: (T, T),
    pub ladder: Vec<T>,
    pub rows: Vec<LapRow<T>>,
    /// Exceptional points found in or near the window.
    pub exceptional: Vec<T>,
}

impl<T: Real> LapSweep<T> {
    pub fn max_ladder_ratio(&self) -> T {
        self.rows.iter().map(|r| r.ladder_ratio).fold(T::one(), T::max)
    }

    pub fn all_monotone(&self) -> bool {
        self.rows.iter().all(|r| r.monotone)
    }
}

fn check_ladder<T: Real>(ladder: &[T], min_len: usize) -> Result<()> {
    if ladder.len() < min_len {
        return Err(Error::InvalidArgument(format!(
            "epsilon ladder needs at least {min_len} entries, got {}",
            ladder.len()
        )));
    }
    if ladder.iter().any(|e| !(*e > T::zero())) || ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("epsilon ladder must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn grid<T: Real>(window: (T, T), step: T) -> Result<Vec<T>> {
    if !(window.0 < window.1) || !(step > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "need a < b and step > 0, got [{}, {}] step {step}",
            window.0, window.1
        )));
    }
    let n = ((window.1 - window.0) / step + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
    Ok((0..=n).map(|i| window.0 + step * T::lit(i as f64)).collect())
}

fn sweep_row<T: Real>(g: &MetricGraph<T>, f: &CompositeFunction<T>, lambda: T, ladder: &[T]) -> Result<LapRow<T>> {
    let continued = continue_value(g, f, Complex::new(lambda, T::zero()))?.value;
    let values = ladder
        .iter()
        .map(|&eps| solve_full(g, f, Complex::new(lambda, eps)).map(|s| s.value))
        .collect::<Result<Vec<_>>>()?;
    let deviations: Vec<T> = values.iter().map(|v| (*v - continued).norm()).collect();
    let mags: Vec<T> = values.iter().map(|v| v.norm()).collect();
    let sup = mags.iter().copied().fold(T::zero(), T::max);
    let inf = mags.iter().copied().fold(T::infinity(), T::min);
    let ladder_ratio = if sup == T::zero() { T::one() } else { sup / inf };

    let cut = T::lit(1e-2) * (T::one() + T::lit(1e-9));
    let small: Vec<(T, T)> = ladder
        .iter()
        .zip(&deviations)
        .filter(|(e, _)| **e <= cut)
        .map(|(e, d)| (*e, *d))
        .collect();
    let floor = T::lit(1e-12) * (T::one() + continued.norm());
    let rises = small
        .windows(2)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 > floor)
        .count();
    let monotone = rises <= 1;

    let fit: Vec<(T, T)> = small
        .iter()
        .filter(|(_, d)| *d > floor)
        .map(|(e, d)| (e.ln(), d.ln()))
        .collect();
    let rate = (fit.len() >= 2).then(|| {
        let n = T::lit(fit.len() as f64);
        let mx = fit.iter().map(|p| p.0).fold(T::zero(), |a, b| a + b) / n;
        let my = fit.iter().map(|p| p.1).fold(T::zero(), |a, b| a + b) / n;
        let sxy = fit.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
        let sxx = fit.iter().fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
        sxy / sxx
    });

    Ok(LapRow {
        lambda,
        continued,
        values,
        deviations,
        sup,
        ladder_ratio,
        monotone,
        rate,
    })
}

/// `ε ↓ 0` sweep over a real window. Fails with the offending points when
/// the window meets the exceptional set and `cfg.exclude` is off.
pub fn lap_sweep<T: Real>(
    g: &MetricGraph<T>,
    f: &CompositeFunction<T>,
    window: (T, T),
    cfg: &LapConfig<T>,
) -> Result<LapSweep<T>> {
    check_ladder(&cfg.ladder, 1)?;
    let tol = cfg.tolerances;
    if !(window.0 > tol.lambda_floor) {
        return Err(Error::InvalidArgument(format!(
            "sweep window must lie above the threshold floor {}",
            tol.lambda_floor
        )));
    }
    let points = grid(window, cfg.step)?;
    let r = tol.exclusion_radius;
    let scan_lo = (window.0 - r).max(tol.lambda_floor);
    let mut scan = match cfg.scan_step {
        Some(s) => ScanConfig::new((scan_lo, window.1 + r), s)?,
        None => ScanConfig::for_graph(g, (scan_lo, window.1 + r))?,
    };
    scan.accept_tol = tol.accept_tol;
    scan.merge_tol = tol.merge_tol;
    let exceptional = exceptional_scan(g, &scan)?.lambdas();
    if !exceptional.is_empty() && !cfg.exclude {
        return Err(Error::ExceptionalPoints(exceptional.iter().map(|x| x.to_f64_lossy()).collect()));
    }
    let kept: Vec<T> = points
        .into_iter()
        .filter(|l| exceptional.iter().all(|p| (*l - *p).abs() >= r))
        .collect();
    log::info!("lap sweep: {} grid points, {} exceptional", kept.len(), exceptional.len());
    let rows = kept
        .par_iter()
        .map(|&l| sweep_row(g, f, l, &cfg.ladder))
        .collect::<Result<Vec<_>>>()?;
    Ok(LapSweep {
        window,
        ladder: cfg.ladder.clone(),
        rows,
        exceptional,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    EmbeddedEigenvalue,
    Regular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult<T> {
    pub classification: Classification,
    /// Fitted `1/ε` coefficient.
    pub pole: T,
    /// Fitted constant background.
    pub background: T,
    pub ladder: Vec<T>,
    pub magnitudes: Vec<T>,
}

/// Fits `|(R(λ*+iε)f, f)| ≈ c/ε + b + dε` on the ladder entries with
/// `ε ≤ 0.1` (all entries if fewer than three qualify), each row weighted by
/// `1/|value|`. Embedded when `c > 0` and `c/ε_min > 10|b|`: the spectral
/// projection of `f` onto an eigenvalue at `λ*` contributes `‖Pf‖²/ε`.
pub fn embedded_probe<T: Real>(
    g: &MetricGraph<T>,
    f: &CompositeFunction<T>,
    lambda_star: T,
    ladder: &[T],
) -> Result<ProbeResult<T>> {
    check_ladder(ladder, 3)?;
    let tol = Tolerances::<T>::default();
    if !(lambda_star > tol.lambda_floor) {
        return Err(Error::InvalidArgument(format!("probe point {lambda_star} is below the threshold floor")));
    }
    let magnitudes = ladder
        .iter()
        .map(|&eps| solve_full(g, f, Complex::new(lambda_star, eps)).map(|s| s.value.norm()))
        .collect::<Result<Vec<T>>>()?;

    let cut = T::lit(0.1) * (T::one() + T::lit(1e-9));
    let mut used: Vec<(T, T)> = ladder
        .iter()
        .zip(&magnitudes)
        .filter(|(e, _)| **e <= cut)
        .map(|(e, m)| (*e, *m))
        .collect();
    if used.len() < 3 {
        used = ladder.iter().copied().zip(magnitudes.iter().copied()).collect();
    }
    let (pole, background) = if used.iter().all(|(_, m)| *m == T::zero()) {
        (T::zero(), T::zero())
    } else {
        fit_pole(&used)
    };
    let eps_min = ladder[ladder.len() - 1];
    let classification = if pole > T::zero() && pole / eps_min > T::lit(10.0) * background.abs() {
        Classification::EmbeddedEigenvalue
    } else {
        Classification::Regular
    };
    Ok(ProbeResult {
        classification,
        pole,
        background,
        ladder: ladder.to_vec(),
        magnitudes,
    })
}

/// Weighted least squares for `m ≈ c/ε + b + dε`; returns `(c, b)`.
fn fit_pole<T: Real>(data: &[(T, T)]) -> (T, T) {
    let zero = Complex::new(T::zero(), T::zero());
    let rows: Vec<Vec<Complex<T>>> = data
        .iter()
        .map(|(e, m)| {
            let w = T::one() / m.max(T::min_positive_value());
            // columns scaled so each has unit size at the smallest ε
            vec![
                Complex::new(w / *e, T::zero()),
                Complex::new(w, T::zero()),
                Complex::new(w * *e, T::zero()),
            ]
        })
        .collect();
    let a = CMatrix::from_rows(&rows).expect("rectangular");
    let rhs: Vec<Complex<T>> = data.iter().map(|_| Complex::new(T::one(), T::zero())).collect();
    // normal equations on column-scaled system
    let scales: Vec<T> = (0..3)
        .map(|j| {
            let n = a.column(j).iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, x| s + x).sqrt();
            if n > T::zero() {
                n
            } else {
                T::one()
            }
        })
        .collect();
    let scaled = CMatrix::from_fn(a.rows(), 3, |i, j| a[(i, j)] / scales[j]);
    let ah = scaled.adjoint();
    let sol = ah.matmul(&scaled).solve(&ah.mul_vec(&rhs)).unwrap_or_else(|| vec![zero; 3]);
    (sol[0].re / scales[0], sol[1].re / scales[1])
}
