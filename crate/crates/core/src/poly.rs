//! Compactly supported piecewise polynomials with complex coefficients.
//!
//! This is the representation used for forcing terms on finite edges and
//! for functions on leads. Each piece stores coefficients in powers of the
//! local offset `x - start`, low degree first.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Highest admitted polynomial degree on a piece.
pub const MAX_DEGREE: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    /// Coefficients of `(x - start)^j`, `j = 0, 1, ...`.
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> Piece<T> {
    pub fn new(start: T, end: T, coeffs: Vec<Complex<T>>) -> Self {
        Self { start, end, coeffs }
    }

    pub fn len(&self) -> T {
        self.end - self.start
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.start && x <= self.end
    }

    /// Evaluates the polynomial (ignores the piece bounds).
    pub fn eval(&self, x: T) -> Complex<T> {
        horner(&self.coeffs, x - self.start)
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.start, self.end, derivative(&self.coeffs))
    }
}

pub(crate) fn horner<T: Real>(coeffs: &[Complex<T>], t: T) -> Complex<T> {
    coeffs.iter().rev().fold(Complex::zero(), |acc, c| acc * t + *c)
}

pub(crate) fn derivative<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, c)| *c * T::lit(j as f64))
        .collect()
}

/// Coefficients of `t -> p(a + b t)`.
pub(crate) fn affine_compose<T: Real>(coeffs: &[Complex<T>], a: T, b: T) -> Vec<Complex<T>> {
    let mut out: Vec<Complex<T>> = Vec::with_capacity(coeffs.len());
    for c in coeffs.iter().rev() {
        // out <- out * (a + b t) + c
        let mut next = vec![Complex::zero(); out.len() + 1];
        for (j, o) in out.iter().enumerate() {
            next[j] = next[j] + *o * a;
            next[j + 1] = next[j + 1] + *o * b;
        }
        next[0] = next[0] + *c;
        out = next;
    }
    while out.len() > 1 && out.last().is_some_and(|z| z.is_zero()) {
        out.pop();
    }
    out
}

/// A function that is polynomial on finitely many disjoint intervals of
/// `[0, ∞)` and zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly<T> {
    pieces: Vec<Piece<T>>,
}

impl<T: Real> Default for PiecewisePoly<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> PiecewisePoly<T> {
    pub fn zero() -> Self {
        Self { pieces: Vec::new() }
    }

    /// Validates and sorts the pieces. Pieces must have positive length,
    /// start at or after 0, not overlap, and have degree at most [`MAX_DEGREE`].
    pub fn new(mut pieces: Vec<Piece<T>>) -> Result<Self> {
        pieces.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
        for p in &pieces {
            if !(p.start.is_finite() && p.end.is_finite()) || p.end <= p.start {
                return Err(Error::InvalidArgument(format!(
                    "piece [{}, {}] must have finite, positive length",
                    p.start, p.end
                )));
            }
            if p.start < T::zero() {
                return Err(Error::InvalidArgument(format!(
                    "piece [{}, {}] starts before 0",
                    p.start, p.end
                )));
            }
            if p.coeffs.len() > MAX_DEGREE + 1 {
                return Err(Error::InvalidArgument(format!(
                    "piece [{}, {}] has degree {} > {MAX_DEGREE}",
                    p.start,
                    p.end,
                    p.coeffs.len() - 1
                )));
            }
        }
        for w in pieces.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::InvalidArgument(format!(
                    "pieces [{}, {}] and [{}, {}] overlap",
                    w[0].start, w[0].end, w[1].start, w[1].end
                )));
            }
        }
        pieces.retain(|p| p.coeffs.iter().any(|c| !c.is_zero()));
        Ok(Self { pieces })
    }

    /// A single polynomial piece.
    pub fn single(start: T, end: T, coeffs: Vec<Complex<T>>) -> Result<Self> {
        Self::new(vec![Piece::new(start, end, coeffs)])
    }

    pub fn pieces(&self) -> &[Piece<T>] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Right end of the support (0 for the zero function).
    pub fn support_end(&self) -> T {
        self.pieces.last().map_or(T::zero(), |p| p.end)
    }

    pub fn eval(&self, x: T) -> Complex<T> {
        self.pieces
            .iter()
            .find(|p| p.contains(x))
            .map_or(Complex::zero(), |p| p.eval(x))
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.start, p.end, p.coeffs.iter().map(|c| *c * s).collect()))
            .collect();
        Self { pieces }
    }

    /// Pointwise sum, re-expanding both operands on merged breakpoints.
    pub fn add(&self, other: &Self) -> Self {
        let mut cuts: Vec<T> = self
            .pieces
            .iter()
            .chain(&other.pieces)
            .flat_map(|p| [p.start, p.end])
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup();
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = (a + b) / T::lit(2.0);
            let mut coeffs: Vec<Complex<T>> = Vec::new();
            for src in [self, other] {
                if let Some(p) = src.pieces.iter().find(|p| p.start <= mid && mid <= p.end) {
                    let shifted = affine_compose(&p.coeffs, a - p.start, T::one());
                    if coeffs.len() < shifted.len() {
                        coeffs.resize(shifted.len(), Complex::zero());
                    }
                    for (c, s) in coeffs.iter_mut().zip(shifted) {
                        *c = *c + s;
                    }
                }
            }
            if coeffs.iter().any(|c| !c.is_zero()) {
                pieces.push(Piece::new(a, b, coeffs));
            }
        }
        Self { pieces }
    }

    /// Restriction to `[a, b]`, translated so that `a` maps to 0.
    pub fn restrict(&self, a: T, b: T) -> Self {
        let pieces = self
            .pieces
            .iter()
            .filter(|p| p.end > a && p.start < b)
            .map(|p| {
                let s = p.start.max(a);
                let e = p.end.min(b);
                Piece::new(s - a, e - a, affine_compose(&p.coeffs, s - p.start, T::one()))
            })
            .collect();
        Self { pieces }
    }

    /// Translation by `offset`: the result at `x + offset` equals `self` at `x`.
    pub fn shift(&self, offset: T) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece::new(p.start + offset, p.end + offset, p.coeffs.clone()))
            .collect();
        Self { pieces }
    }

    /// `x -> self(len - x)`; the support must lie inside `[0, len]`.
    pub fn reflect(&self, len: T) -> Self {
        let mut pieces: Vec<Piece<T>> = self
            .pieces
            .iter()
            .map(|p| {
                // new local t = x - (len - end); old local = end - (len - x) - start... i.e.
                // old offset = (p.end - p.start) - t.
                Piece::new(len - p.end, len - p.start, affine_compose(&p.coeffs, p.len(), -T::one()))
            })
            .collect();
        pieces.reverse();
        Self { pieces }
    }
}
