#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use qgraph::format::{parse_function, parse_graph};
use qgraph::graph::{Edge, Lead, MetricGraph, VertexCondition};
use qgraph::linalg::CMatrix;
use qgraph::resolvent::CompositeFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn cr(x: f64) -> C {
    C::new(x, 0.0)
}

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn graph(name: &str) -> MetricGraph<f64> {
    parse_graph(&std::fs::read_to_string(data_path(name)).unwrap()).unwrap()
}

pub fn function(name: &str) -> CompositeFunction<f64> {
    parse_function(&std::fs::read_to_string(data_path(name)).unwrap()).unwrap()
}

/// Cayley transform of a random Hermitian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix<f64> {
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = cr(rng.gen_range(-2.0..2.0));
        for j in i + 1..d {
            let z = C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
        }
    }
    let ih = h.scale(C::i());
    let id = CMatrix::identity(d);
    let num = id.sub(&ih);
    let den = id.add(&ih);
    // U = (I - iH)(I + iH)^{-1}; the factors commute
    let cols: Vec<Vec<C>> = (0..d).map(|j| den.solve(&num.column(j)).unwrap()).collect();
    CMatrix::from_columns(d, &cols)
}

/// Five edges: a triangle 1-2-3 plus edges to boundary vertices 10 and 11
/// carrying leads. Interior vertices get `A = U − I`, `B = i(U + I)`.
pub fn random_unitary_graph(seed: u64) -> MetricGraph<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ends = [(1, 2), (2, 3), (3, 1), (1, 10), (3, 11)];
    let edges: Vec<Edge<f64>> = ends
        .iter()
        .enumerate()
        .map(|(i, &(from, to))| Edge {
            id: i + 1,
            from,
            to,
            length: rng.gen_range(0.5..2.0),
        })
        .collect();
    let degree = |v: usize| ends.iter().filter(|e| e.0 == v).count() + ends.iter().filter(|e| e.1 == v).count();
    let mut vertices = Vec::new();
    for v in [1, 2, 3] {
        let u = random_unitary(&mut rng, degree(v));
        vertices.push((v, VertexCondition::from_unitary(&u).unwrap()));
    }
    for v in [10, 11] {
        vertices.push((v, VertexCondition::standard(2).unwrap()));
    }
    MetricGraph::new(vertices, edges, vec![Lead { id: 1, vertex: 10 }, Lead { id: 2, vertex: 11 }]).unwrap()
}

/// Bump `16 t²(1−t)²` on `[a, a+1]` as coefficients in `x − a`.
pub fn bump_coeffs() -> Vec<C> {
    vec![cr(0.0), cr(0.0), cr(16.0), cr(-32.0), cr(16.0)]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// A polynomial piece on the unfolded line, in powers of `Y − y0`.
#[derive(Clone, Debug)]
pub struct LinePiece {
    pub y0: f64,
    pub y1: f64,
    pub coeffs: Vec<C>,
}

impl LinePiece {
    fn eval(&self, y: f64) -> C {
        let t = y - self.y0;
        self.coeffs.iter().rev().fold(cr(0.0), |acc, c| acc * t + c)
    }

    fn derivative(&self) -> LinePiece {
        LinePiece {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(j, c)| c * j as f64).collect(),
            ..self.clone()
        }
    }

    /// `∫_a^b e^{μY} p(Y) dY` from the antiderivative
    /// `e^{μY} Σ_j (−1)^j p^{(j)}(Y) / μ^{j+1}`.
    fn exp_moment(&self, mu: C, a: f64, b: f64) -> C {
        let anti = |y: f64| {
            let mut sum = cr(0.0);
            let mut p = self.clone();
            let mut sign = 1.0;
            let mut mu_pow = mu;
            while !p.coeffs.is_empty() {
                sum += p.eval(y) * sign / mu_pow;
                p = p.derivative();
                sign = -sign;
                mu_pow *= mu;
            }
            (mu * y).exp() * sum
        };
        anti(b) - anti(a)
    }
}

/// Places the full-line graph (lead 1 at vertex 1, edge 1 = [0, ℓ],
/// lead 2 at vertex 2) on the real line: lead 1 ↦ `−s`, edge ↦ `x`,
/// lead 2 ↦ `ℓ + s`.
pub fn unfold_full_line(f: &CompositeFunction<f64>, len: f64) -> Vec<LinePiece> {
    let mut out = Vec::new();
    if let Some(p) = f.leads.get(&1) {
        for piece in p.pieces() {
            let (a, b) = (piece.start, piece.end);
            // s − a = (b − a) − t with t = Y + b
            let n = piece.coeffs.len();
            let mut q = vec![cr(0.0); n];
            for (j, c) in piece.coeffs.iter().enumerate() {
                for m in 0..=j {
                    q[m] += c * binomial(j, m) * (b - a).powi((j - m) as i32) * (-1.0f64).powi(m as i32);
                }
            }
            out.push(LinePiece { y0: -b, y1: -a, coeffs: q });
        }
    }
    if let Some(p) = f.f0.get(1) {
        for piece in p.pieces() {
            out.push(LinePiece {
                y0: piece.start,
                y1: piece.end,
                coeffs: piece.coeffs.clone(),
            });
        }
    }
    if let Some(p) = f.leads.get(&2) {
        for piece in p.pieces() {
            out.push(LinePiece {
                y0: len + piece.start,
                y1: len + piece.end,
                coeffs: piece.coeffs.clone(),
            });
        }
    }
    out
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664_0, 0.236_926_885_056_189_1),
];

/// `(i/2k) ∬ e^{ik|X−Y|} f(Y) conj f(X) dY dX` for the free line, with the
/// inner integral in closed form and the outer one by 5-point Gauss on
/// panels of width at most 0.005.
pub fn whole_line_form(pieces: &[LinePiece], k: C) -> C {
    let ik = C::i() * k;
    let inner = |x: f64| -> C {
        let mut total = cr(0.0);
        for p in pieces {
            let lo_end = x.min(p.y1);
            if lo_end > p.y0 {
                total += (ik * x).exp() * p.exp_moment(-ik, p.y0, lo_end);
            }
            let hi_start = x.max(p.y0);
            if p.y1 > hi_start {
                total += (-ik * x).exp() * p.exp_moment(ik, hi_start, p.y1);
            }
        }
        total
    };
    let mut outer = cr(0.0);
    for p in pieces {
        let n = ((p.y1 - p.y0) / 0.005).ceil() as usize;
        let h = (p.y1 - p.y0) / n as f64;
        for i in 0..n {
            let mid = p.y0 + h * (i as f64 + 0.5);
            for (node, w) in GAUSS5 {
                let x = mid + 0.5 * h * node;
                outer += inner(x) * p.eval(x).conj() * (0.5 * h * w);
            }
        }
    }
    C::i() / (2.0 * k) * outer
}

/// Closed-form DtN of an interval with a Dirichlet far end.
pub fn interval_dtn(lambda: C, len: f64) -> C {
    let k = lambda.sqrt();
    k * (k * len).cos() / (k * len).sin()
}

/// Secular function of the cosine-type lasso modes (loop 2π, stub δ):
/// `2 sin(kπ) sin(kδ) − cos(kπ) cos(kδ)`; zero exactly at those modes.
pub fn lasso_secular(lambda: f64, delta: f64) -> f64 {
    let k = lambda.sqrt();
    let pi = std::f64::consts::PI;
    2.0 * (k * pi).sin() * (k * delta).sin() - (k * pi).cos() * (k * delta).cos()
}

pub fn rel_err(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
