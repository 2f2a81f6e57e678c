//! Line-based text formats for graphs and functions.
//!
//! Both formats are a sequence of `[section]` headers each followed by
//! `key = value` lines. `#` starts a comment. Complex numbers are written
//! `re`, `im i` or `re±im i` (`1`, `-2.5i`, `1-2i`, `3e-2+1e1i`).
//!
//! Graph sections:
//!
//! ```text
//! [vertex]
//! id = 1
//! condition = standard        # standard | dirichlet | neumann | delta | general
//! strength = 2.0              # delta only
//! A = 1, -1; 0, 0             # general only: rows split by ';'
//! B = 0, 0; 1, 1
//! [edge]
//! id = 1
//! endpoints = 1, 2
//! length = 3.14159
//! [lead]
//! id = 1
//! vertex = 1
//! ```
//!
//! Columns of a general condition follow the vertex's slots: incident edge
//! ends sorted by edge id (start before end for loops), then leads by id.
//!
//! Function sections are `[edge]` or `[lead]` with an `id` and any number of
//! `piece = x0, x1 : c0, c1, ...` lines; coefficients multiply powers of
//! `x − x0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::graph::{Edge, Lead, MetricGraph, VertexCondition, VertexId};
use crate::linalg::CMatrix;
use crate::poly::{Piece, PiecewisePoly};
use crate::resolvent::CompositeFunction;
use crate::scalar::Real;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses a real number.
pub fn parse_real<T: Real>(s: &str) -> Option<T> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).map(T::lit)
}

/// Parses `re`, `im i` or `re±im i`.
pub fn parse_complex<T: Real>(s: &str) -> Option<Complex<T>> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return None;
    }
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(&s).map(|re| Complex::new(re, T::zero()));
    };
    // split at the last sign that is not a leading sign or an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(i) => (parse_real(&body[..i])?, &body[i..]),
        None => (T::zero(), body),
    };
    let im = match im {
        "" | "+" => T::one(),
        "-" => -T::one(),
        x => parse_real(x)?,
    };
    Some(Complex::new(re, im))
}

/// `re+imi` with an explicit sign, shortest round-trip digits.
pub fn format_complex_exact<T: Real>(z: Complex<T>) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

/// `re+imi` with 15 significant digits.
pub fn format_complex<T: Real>(z: Complex<T>) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
}

/// 15 significant digits in scientific notation; `-0` prints as `0`.
pub fn format_real<T: Real>(x: T) -> String {
    let x = if x == T::zero() { T::zero() } else { x };
    format!("{x:.14e}")
}

struct Section {
    kind: String,
    line: usize,
    entries: Vec<(usize, String, String)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries
            .iter()
            .find(|(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.get(key)
            .ok_or_else(|| perr(self.line, format!("[{}] section is missing `{key}`", self.kind)))
    }

    fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = (usize, &'a str)> + 'a {
        self.entries
            .iter()
            .filter(move |(_, k, _)| k == key)
            .map(|(l, _, v)| (*l, v.as_str()))
    }

    fn id(&self) -> Result<usize> {
        let (line, v) = self.require("id")?;
        v.trim()
            .parse()
            .map_err(|_| perr(line, format!("`id` must be a non-negative integer, got `{v}`")))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        for (line, k, _) in &self.entries {
            if !allowed.contains(&k.as_str()) {
                return Err(perr(*line, format!("unknown key `{k}` in [{}] section", self.kind)));
            }
        }
        Ok(())
    }
}

fn sections(text: &str, kinds: &[&str]) -> Result<Vec<Section>> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(kind) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let kind = kind.trim();
            if !kinds.contains(&kind) {
                return Err(perr(line, format!("unknown section [{kind}]; expected one of {kinds:?}")));
            }
            out.push(Section {
                kind: kind.to_string(),
                line,
                entries: Vec::new(),
            });
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return Err(perr(line, format!("expected `key = value`, got `{content}`")));
        };
        let section = out
            .last_mut()
            .ok_or_else(|| perr(line, "entry before the first section header"))?;
        section.entries.push((line, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_matrix<T: Real>(line: usize, s: &str, d: usize, name: &str) -> Result<CMatrix<T>> {
    let rows: Vec<Vec<Complex<T>>> = s
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|x| parse_complex(x).ok_or_else(|| perr(line, format!("bad complex entry `{}` in {name}", x.trim()))))
                .collect()
        })
        .collect::<Result<_>>()?;
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(perr(line, format!("{name} must be {d}x{d} for a vertex of degree {d}")));
    }
    Ok(CMatrix::from_rows(&rows).expect("rectangular"))
}

/// Parses a graph file and validates the result. Admissibility failures
/// are reported at the line of the offending `[vertex]` section.
pub fn parse_graph<T: Real>(text: &str) -> Result<MetricGraph<T>> {
    let secs = sections(text, &["vertex", "edge", "lead"])?;
    let mut edges = Vec::new();
    let mut leads = Vec::new();
    let mut vertex_secs: Vec<(VertexId, &Section)> = Vec::new();
    for s in &secs {
        match s.kind.as_str() {
            "edge" => {
                s.check_keys(&["id", "endpoints", "length"])?;
                let id = s.id()?;
                let (line, ends) = s.require("endpoints")?;
                let ends: Vec<usize> = ends
                    .split(',')
                    .map(|x| x.trim().parse().map_err(|_| perr(line, format!("bad vertex id `{}`", x.trim()))))
                    .collect::<Result<_>>()?;
                if ends.len() != 2 {
                    return Err(perr(line, "`endpoints` needs exactly two vertex ids"));
                }
                let (line, len) = s.require("length")?;
                let length = parse_real(len).ok_or_else(|| perr(line, format!("bad length `{len}`")))?;
                edges.push(Edge {
                    id,
                    from: ends[0],
                    to: ends[1],
                    length,
                });
            }
            "lead" => {
                s.check_keys(&["id", "vertex"])?;
                let id = s.id()?;
                let (line, v) = s.require("vertex")?;
                let vertex = v.trim().parse().map_err(|_| perr(line, format!("bad vertex id `{v}`")))?;
                leads.push(Lead { id, vertex });
            }
            _ => {
                s.check_keys(&["id", "condition", "strength", "A", "B"])?;
                vertex_secs.push((s.id()?, s));
            }
        }
    }

    let mut degree: BTreeMap<VertexId, usize> = BTreeMap::new();
    for e in &edges {
        *degree.entry(e.from).or_default() += 1;
        *degree.entry(e.to).or_default() += 1;
    }
    for l in &leads {
        *degree.entry(l.vertex).or_default() += 1;
    }

    let mut vertices = Vec::new();
    let mut vertex_line = BTreeMap::new();
    for (id, s) in vertex_secs {
        let d = degree.get(&id).copied().unwrap_or(0);
        if d == 0 {
            return Err(perr(s.line, format!("vertex {id} has no incident edges or leads")));
        }
        let (line, kind) = s.get("condition").unwrap_or((s.line, "standard"));
        let cond = match kind {
            "standard" => VertexCondition::standard(d)?,
            "dirichlet" => VertexCondition::dirichlet(d)?,
            "neumann" => VertexCondition::neumann(d)?,
            "delta" => {
                let (l, v) = s.require("strength")?;
                let strength = parse_real(v).ok_or_else(|| perr(l, format!("bad strength `{v}`")))?;
                VertexCondition::delta(d, strength)?
            }
            "general" => {
                let (la, a) = s.require("A")?;
                let (lb, b) = s.require("B")?;
                VertexCondition::new(parse_matrix(la, a, d, "A")?, parse_matrix(lb, b, d, "B")?)
            }
            other => return Err(perr(line, format!("unknown condition `{other}`"))),
        };
        vertex_line.insert(id, s.line);
        vertices.push((id, cond));
    }
    for v in degree.keys() {
        if !vertex_line.contains_key(v) {
            return Err(Error::Graph(format!("vertex {v} is used by an edge or lead but has no [vertex] section")));
        }
    }

    MetricGraph::new(vertices, edges, leads).map_err(|e| match &e {
        Error::Condition { vertex, .. } => perr(vertex_line[vertex], e.to_string()),
        _ => e,
    })
}

/// Writes a graph with every condition spelled out as `general`; parsing the
/// result gives back an identical graph.
pub fn serialize_graph<T: Real>(g: &MetricGraph<T>) -> String {
    let mut out = String::new();
    let matrix = |m: &CMatrix<T>| {
        (0..m.rows())
            .map(|i| m.row(i).iter().map(|z| format_complex_exact(*z)).collect::<Vec<_>>().join(", "))
            .collect::<Vec<_>>()
            .join("; ")
    };
    for (id, cond) in g.conditions() {
        let _ = writeln!(
            out,
            "[vertex]\nid = {id}\ncondition = general\nA = {}\nB = {}\n",
            matrix(&cond.a),
            matrix(&cond.b)
        );
    }
    for e in g.edges() {
        let _ = writeln!(out, "[edge]\nid = {}\nendpoints = {}, {}\nlength = {}\n", e.id, e.from, e.to, e.length);
    }
    for l in g.leads() {
        let _ = writeln!(out, "[lead]\nid = {}\nvertex = {}\n", l.id, l.vertex);
    }
    out
}

fn parse_piece<T: Real>(line: usize, s: &str) -> Result<Piece<T>> {
    let (range, coeffs) = s
        .split_once(':')
        .ok_or_else(|| perr(line, "piece needs `x0, x1 : c0, c1, ...`"))?;
    let ends: Vec<T> = range
        .split(',')
        .map(|x| parse_real(x).ok_or_else(|| perr(line, format!("bad piece endpoint `{}`", x.trim()))))
        .collect::<Result<_>>()?;
    if ends.len() != 2 {
        return Err(perr(line, "piece range needs exactly two endpoints"));
    }
    let coeffs: Vec<Complex<T>> = coeffs
        .split(',')
        .map(|x| parse_complex(x).ok_or_else(|| perr(line, format!("bad coefficient `{}`", x.trim()))))
        .collect::<Result<_>>()?;
    Ok(Piece::new(ends[0], ends[1], coeffs))
}

/// Parses a function file. Ids are checked against a graph only when the
/// function is used.
pub fn parse_function<T: Real>(text: &str) -> Result<CompositeFunction<T>> {
    let mut f = CompositeFunction::zero();
    for s in sections(text, &["edge", "lead"])? {
        s.check_keys(&["id", "piece"])?;
        let id = s.id()?;
        let pieces = s.all("piece").map(|(l, v)| parse_piece(l, v)).collect::<Result<Vec<_>>>()?;
        let poly = PiecewisePoly::new(pieces).map_err(|e| perr(s.line, e.to_string()))?;
        let dup = if s.kind == "edge" {
            f.f0.get(id).is_some()
        } else {
            f.leads.contains_key(&id)
        };
        if dup {
            return Err(perr(s.line, format!("{} {id} is given twice", s.kind)));
        }
        f = if s.kind == "edge" { f.with_edge(id, poly) } else { f.with_lead(id, poly) };
    }
    Ok(f)
}

/// Writes a function file that parses back to the same function.
pub fn serialize_function<T: Real>(f: &CompositeFunction<T>) -> String {
    let mut out = String::new();
    let mut write = |kind: &str, id: usize, p: &PiecewisePoly<T>| {
        let _ = writeln!(out, "[{kind}]\nid = {id}");
        for piece in p.pieces() {
            let c: Vec<String> = piece.coeffs.iter().map(|z| format_complex_exact(*z)).collect();
            let _ = writeln!(out, "piece = {}, {} : {}", piece.start, piece.end, c.join(", "));
        }
        out.push('\n');
    };
    for (id, p) in f.f0.iter() {
        write("edge", id, p);
    }
    for (id, p) in &f.leads {
        write("lead", *id, p);
    }
    out
}
