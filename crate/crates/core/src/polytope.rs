//! Moment polytope data of a compact toric manifold.
//!
//! A polytope is `P = {u | ⟨u, vⱼ⟩ ≥ λⱼ}` with primitive integer normals.
//! Facet indices are 0-based in the API and 1-based in every user-facing
//! rendering (error messages, JSON bulk entries, CLI flags).

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{q, Rational};

/// Largest facet count accepted by the subset enumerations below.
pub const MAX_FACETS: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolytopeError {
    #[error("polytope is unbounded (recession direction along facets {})", one_based(.0))]
    Unbounded(Vec<usize>),
    #[error("polytope has empty interior (facets {})", one_based(.0))]
    EmptyInterior(Vec<usize>),
    #[error("polytope is not smooth at the vertex cut out by facets {}", one_based(.0))]
    NotSmooth(Vec<usize>),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("no cone contains the normal sum of collection {}", one_based(.0))]
    NoConeDecomposition(Vec<usize>),
    #[error("expected a point of dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown built-in model {0:?}")]
    UnknownModel(String),
}

pub(crate) fn one_based(ix: &[usize]) -> String {
    let parts: Vec<String> = ix.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub lambda: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vertex {
    pub coords: Vec<Rational>,
    /// Facets with `ℓⱼ(u) = 0` at this vertex, ascending.
    pub active: Vec<usize>,
}

/// Which closed-form family a model belongs to, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family")]
pub enum ModelKind {
    ProjectiveSpace { n: usize },
    SphereProduct { alpha: Rational },
    BlowupCp2,
    Hirzebruch { alpha: Rational },
    Custom,
}

/// Degree-2 bulk parameter `w` attached to a facet class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BulkEntry {
    pub facet: usize,
    pub w: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToricData {
    pub name: String,
    pub dim: usize,
    pub facets: Vec<Facet>,
    pub vertices: Vec<Vertex>,
    pub kind: ModelKind,
    pub bulk: Vec<BulkEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveCollection {
    pub members: Vec<usize>,
    pub cone_support: Vec<usize>,
    /// Aligned with `cone_support`; all positive.
    pub multipliers: Vec<i64>,
    pub omega: Rational,
}

impl PrimitiveCollection {
    /// Renders the relation `Z^𝒫 − T^ω Z^𝒫′` with 1-based variable names.
    pub fn relation_string(&self) -> String {
        let lhs: Vec<String> = self.members.iter().map(|i| format!("Z{}", i + 1)).collect();
        let mut rhs = format!("T^({})", self.omega);
        for (i, k) in self.cone_support.iter().zip(&self.multipliers) {
            if *k == 1 {
                rhs.push_str(&format!("*Z{}", i + 1));
            } else {
                rhs.push_str(&format!("*Z{}^{}", i + 1, k));
            }
        }
        format!("{} - {}", lhs.join("*"), rhs)
    }
}

fn dot(a: &[i64], u: &[Rational]) -> Rational {
    a.iter().zip(u).map(|(&ai, &ui)| ui * ai).sum()
}

/// Solves `A x = b` exactly; `None` if `A` is singular.
fn solve_rational(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = a.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col];
        for k in col..=n {
            m[col][k] = m[col][k] / p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                for k in col..=n {
                    let v = m[col][k];
                    m[r][k] = m[r][k] - f * v;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n]).collect())
}

fn determinant(rows: &[Vec<i64>]) -> i64 {
    let n = rows.len();
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| Rational::integer(x)).collect())
        .collect();
    let mut det = Rational::ONE;
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return 0;
        };
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        let p = m[col][col];
        det = det * p;
        for r in col + 1..n {
            let f = m[r][col] / p;
            if !f.is_zero() {
                for k in col..n {
                    let v = m[col][k];
                    m[r][k] = m[r][k] - f * v;
                }
            }
        }
    }
    debug_assert_eq!(det.denom(), 1);
    det.numer()
}

fn rank(rows: &[Vec<i64>], n: usize) -> usize {
    let mut m: Vec<Vec<Rational>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| Rational::integer(x)).collect())
        .collect();
    let mut rank = 0;
    for col in 0..n {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, piv);
        let p = m[rank][col];
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col] / p;
                for k in col..n {
                    let v = m[rank][k];
                    m[r][k] = m[r][k] - f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            if m - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, m, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, k, &mut Vec::new(), &mut out);
    out
}

/// A one-dimensional kernel vector of an `(n−1) × n` integer matrix of full
/// rank, via signed maximal minors.
fn kernel_direction(rows: &[Vec<i64>], n: usize) -> Vec<i64> {
    (0..n)
        .map(|c| {
            let minor: Vec<Vec<i64>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|&(k, _)| k != c)
                        .map(|(_, &x)| x)
                        .collect()
                })
                .collect();
            let d = if minor.is_empty() { 1 } else { determinant(&minor) };
            if c % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

fn gcd(a: i64, b: i64) -> i64 {
    num_integer::Integer::gcd(&a, &b)
}

#[derive(Debug, Deserialize)]
struct FacetDoc {
    normal: Vec<i64>,
    lambda: Rational,
}

#[derive(Debug, Deserialize)]
struct BulkDoc {
    facet: usize,
    w: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    dim: usize,
    facets: Vec<FacetDoc>,
    #[serde(default)]
    bulk: Vec<BulkDoc>,
    #[serde(default)]
    alpha: Option<Rational>,
}

impl ToricData {
    /// Validates raw facet data and enumerates vertices.
    pub fn new(name: &str, dim: usize, facets: Vec<Facet>) -> Result<Self, PolytopeError> {
        if dim == 0 {
            return Err(PolytopeError::Malformed("dimension must be positive".into()));
        }
        if facets.len() > MAX_FACETS {
            return Err(PolytopeError::Malformed(format!(
                "{} facets exceeds the supported maximum of {MAX_FACETS}",
                facets.len()
            )));
        }
        if facets.len() <= dim {
            return Err(PolytopeError::Unbounded((0..facets.len()).collect()));
        }
        for (j, f) in facets.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(PolytopeError::Malformed(format!(
                    "facet {} normal has length {}, expected {dim}",
                    j + 1,
                    f.normal.len()
                )));
            }
            let g = f.normal.iter().fold(0, |g, &x| gcd(g, x));
            if g != 1 {
                return Err(PolytopeError::Malformed(format!(
                    "facet {} normal {:?} is not primitive",
                    j + 1,
                    f.normal
                )));
            }
        }
        let mut td = ToricData {
            name: name.to_string(),
            dim,
            facets,
            vertices: Vec::new(),
            kind: ModelKind::Custom,
            bulk: Vec::new(),
        };
        td.check_bounded()?;
        td.vertices = td.enumerate_vertices();
        td.check_interior()?;
        td.check_smooth()?;
        Ok(td)
    }

    fn normals(&self) -> Vec<Vec<i64>> {
        self.facets.iter().map(|f| f.normal.clone()).collect()
    }

    fn check_bounded(&self) -> Result<(), PolytopeError> {
        let n = self.dim;
        let normals = self.normals();
        if rank(&normals, n) < n {
            return Err(PolytopeError::Unbounded((0..self.facets.len()).collect()));
        }
        // The recession cone is pointed; it is nonzero iff it has an extreme
        // ray, which is cut out by n−1 independent tight normals.
        for sub in subsets(self.facets.len(), n - 1) {
            let rows: Vec<Vec<i64>> = sub.iter().map(|&j| normals[j].clone()).collect();
            if rank(&rows, n) < n - 1 {
                continue;
            }
            let d = kernel_direction(&rows, n);
            for dir in [d.clone(), d.iter().map(|x| -x).collect()] {
                if normals
                    .iter()
                    .all(|v| v.iter().zip(&dir).map(|(a, b)| a * b).sum::<i64>() >= 0)
                {
                    return Err(PolytopeError::Unbounded(sub));
                }
            }
        }
        Ok(())
    }

    fn enumerate_vertices(&self) -> Vec<Vertex> {
        let n = self.dim;
        let mut out: Vec<Vertex> = Vec::new();
        for sub in subsets(self.facets.len(), n) {
            let a: Vec<Vec<Rational>> = sub
                .iter()
                .map(|&j| self.facets[j].normal.iter().map(|&x| Rational::integer(x)).collect())
                .collect();
            let b: Vec<Rational> = sub.iter().map(|&j| self.facets[j].lambda).collect();
            let Some(u) = solve_rational(&a, &b) else {
                continue;
            };
            if (0..self.facets.len()).any(|j| self.ell(j, &u).is_negative()) {
                continue;
            }
            if out.iter().any(|v| v.coords == u) {
                continue;
            }
            let active = (0..self.facets.len())
                .filter(|&j| self.ell(j, &u).is_zero())
                .collect();
            out.push(Vertex { coords: u, active });
        }
        out.sort_by(|a, b| a.coords.cmp(&b.coords));
        out
    }

    fn check_interior(&self) -> Result<(), PolytopeError> {
        if self.vertices.is_empty() {
            return Err(PolytopeError::EmptyInterior((0..self.facets.len()).collect()));
        }
        let c = self.vertex_centroid();
        let tight: Vec<usize> = (0..self.facets.len())
            .filter(|&j| !self.ell(j, &c).is_positive())
            .collect();
        if !tight.is_empty() {
            return Err(PolytopeError::EmptyInterior(tight));
        }
        for j in 0..self.facets.len() {
            if !self.vertices.iter().any(|v| v.active.contains(&j)) {
                return Err(PolytopeError::Malformed(format!(
                    "facet {} is redundant (touches no vertex)",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    fn check_smooth(&self) -> Result<(), PolytopeError> {
        for v in &self.vertices {
            if v.active.len() != self.dim {
                return Err(PolytopeError::NotSmooth(v.active.clone()));
            }
            let rows: Vec<Vec<i64>> = v.active.iter().map(|&j| self.facets[j].normal.clone()).collect();
            if determinant(&rows).abs() != 1 {
                return Err(PolytopeError::NotSmooth(v.active.clone()));
            }
        }
        Ok(())
    }

    /// `ℓⱼ(u) = ⟨u, vⱼ⟩ − λⱼ`.
    pub fn ell(&self, j: usize, u: &[Rational]) -> Rational {
        dot(&self.facets[j].normal, u) - self.facets[j].lambda
    }

    pub fn ell_f64(&self, j: usize, u: &[f64]) -> f64 {
        let f = &self.facets[j];
        f.normal.iter().zip(u).map(|(&a, &x)| a as f64 * x).sum::<f64>() - f.lambda.to_f64()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn vertex_centroid(&self) -> Vec<Rational> {
        let k = self.vertices.len() as i64;
        (0..self.dim)
            .map(|i| self.vertices.iter().map(|v| v.coords[i]).sum::<Rational>() / Rational::integer(k))
            .collect()
    }

    /// The distinguished interior fiber: the monotone/balanced point of a
    /// built-in family, otherwise the vertex centroid.
    pub fn balanced_point(&self) -> Vec<Rational> {
        match self.kind {
            ModelKind::ProjectiveSpace { n } => vec![q(1, n as i64 + 1); n],
            ModelKind::SphereProduct { alpha } => {
                vec![(Rational::ONE - alpha) / q(2, 1), (Rational::ONE + alpha) / q(2, 1)]
            }
            ModelKind::BlowupCp2 => vec![q(1, 3), q(1, 3)],
            ModelKind::Hirzebruch { alpha } => {
                vec![(Rational::ONE + alpha) / q(2, 1), (Rational::ONE - alpha) / q(2, 1)]
            }
            ModelKind::Custom => self.vertex_centroid(),
        }
    }

    /// Per-coordinate `(min, max)` over the vertices.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim)
            .map(|i| {
                let xs = self.vertices.iter().map(|v| v.coords[i].to_f64());
                let lo = xs.clone().fold(f64::INFINITY, f64::min);
                let hi = xs.fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect()
    }

    /// Looks up a built-in model: `cpn(n)` (n ≤ 3), `s2xs2(α)`,
    /// `blowup_cp2`, `f2(α)`. `s2xs2` alone means `α = 0`.
    pub fn builtin(name: &str) -> Result<Self, PolytopeError> {
        let name = name.trim();
        let (head, arg) = match name.split_once('(') {
            Some((h, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| PolytopeError::UnknownModel(name.to_string()))?;
                (h.trim(), Some(arg.trim()))
            }
            None => (name, None),
        };
        let parse_alpha = |a: Option<&str>| -> Result<Rational, PolytopeError> {
            a.ok_or_else(|| PolytopeError::UnknownModel(name.to_string()))?
                .parse::<Rational>()
                .map_err(|_| PolytopeError::UnknownModel(name.to_string()))
        };
        match head {
            "cpn" => {
                let n: usize = arg
                    .and_then(|a| a.parse().ok())
                    .ok_or_else(|| PolytopeError::UnknownModel(name.to_string()))?;
                if n == 0 || n > 3 {
                    return Err(PolytopeError::UnknownModel(name.to_string()));
                }
                Self::projective_space(n)
            }
            "s2xs2" => Self::sphere_product(match arg {
                Some(_) => parse_alpha(arg)?,
                None => Rational::ZERO,
            }),
            "blowup_cp2" if arg.is_none() => Self::blowup_cp2(),
            "f2" => Self::hirzebruch(parse_alpha(arg)?),
            _ => Err(PolytopeError::UnknownModel(name.to_string())),
        }
    }

    pub fn projective_space(n: usize) -> Result<Self, PolytopeError> {
        let mut facets: Vec<Facet> = (0..n)
            .map(|i| {
                let mut normal = vec![0; n];
                normal[i] = 1;
                Facet { normal, lambda: Rational::ZERO }
            })
            .collect();
        facets.push(Facet {
            normal: vec![-1; n],
            lambda: q(-1, 1),
        });
        let mut td = Self::new(&format!("cpn({n})"), n, facets)?;
        td.kind = ModelKind::ProjectiveSpace { n };
        Ok(td)
    }

    /// `S²(1−α) × S²(1+α)`.
    pub fn sphere_product(alpha: Rational) -> Result<Self, PolytopeError> {
        if alpha.is_negative() || alpha >= Rational::ONE {
            return Err(PolytopeError::Malformed(format!("s2xs2 needs 0 ≤ α < 1, got {alpha}")));
        }
        let facets = vec![
            Facet { normal: vec![1, 0], lambda: Rational::ZERO },
            Facet { normal: vec![0, 1], lambda: Rational::ZERO },
            Facet { normal: vec![-1, 0], lambda: -(Rational::ONE - alpha) },
            Facet { normal: vec![0, -1], lambda: -(Rational::ONE + alpha) },
        ];
        let mut td = Self::new(&format!("s2xs2({alpha})"), 2, facets)?;
        td.kind = ModelKind::SphereProduct { alpha };
        Ok(td)
    }

    /// Monotone one-point blow-up of CP², monotone fiber at (1/3, 1/3).
    pub fn blowup_cp2() -> Result<Self, PolytopeError> {
        let facets = vec![
            Facet { normal: vec![1, 0], lambda: Rational::ZERO },
            Facet { normal: vec![0, 1], lambda: Rational::ZERO },
            Facet { normal: vec![-1, -1], lambda: q(-1, 1) },
            Facet { normal: vec![-1, 0], lambda: q(-2, 3) },
        ];
        let mut td = Self::new("blowup_cp2", 2, facets)?;
        td.kind = ModelKind::BlowupCp2;
        Ok(td)
    }

    /// Hirzebruch surface `F₂(α)`: `u₁, u₂ ≥ 0`, `u₁ + 2u₂ ≤ 2`, `u₂ ≤ 1 − α`.
    pub fn hirzebruch(alpha: Rational) -> Result<Self, PolytopeError> {
        if !alpha.is_positive() || alpha >= Rational::ONE {
            return Err(PolytopeError::Malformed(format!("f2 needs 0 < α < 1, got {alpha}")));
        }
        let mut td = Self::new(&format!("f2({alpha})"), 2, Self::hirzebruch_facets(alpha))?;
        td.kind = ModelKind::Hirzebruch { alpha };
        Ok(td)
    }

    fn hirzebruch_facets(alpha: Rational) -> Vec<Facet> {
        vec![
            Facet { normal: vec![1, 0], lambda: Rational::ZERO },
            Facet { normal: vec![0, 1], lambda: Rational::ZERO },
            Facet { normal: vec![-1, -2], lambda: q(-2, 1) },
            Facet { normal: vec![0, -1], lambda: -(Rational::ONE - alpha) },
        ]
    }

    /// Parses the JSON model document.
    pub fn from_json(doc: &str) -> Result<Self, PolytopeError> {
        let doc: ModelDoc =
            serde_json::from_str(doc).map_err(|e| PolytopeError::Malformed(e.to_string()))?;
        let facets: Vec<Facet> = doc
            .facets
            .into_iter()
            .map(|f| Facet { normal: f.normal, lambda: f.lambda })
            .collect();
        let mut td = Self::new(&doc.name, doc.dim, facets)?;
        if let Some(alpha) = doc.alpha {
            if td.facets != Self::hirzebruch_facets(alpha) {
                return Err(PolytopeError::Malformed(
                    "\"alpha\" is only meaningful for the F2 facet layout".into(),
                ));
            }
            td.kind = ModelKind::Hirzebruch { alpha };
        }
        for b in doc.bulk {
            if b.facet == 0 || b.facet > td.facets.len() {
                return Err(PolytopeError::Malformed(format!("bulk facet {} out of range", b.facet)));
            }
            td.bulk.push(BulkEntry {
                facet: b.facet - 1,
                w: Complex64::new(b.w[0], b.w[1]),
            });
        }
        Ok(td)
    }

    /// Accepts a built-in model name or a JSON model document.
    pub fn load(document: &str) -> Result<Self, PolytopeError> {
        if document.trim_start().starts_with('{') {
            Self::from_json(document)
        } else {
            Self::builtin(document)
        }
    }

    /// Vertices and the total Betti rank, which for a smooth projective
    /// toric manifold equals the vertex count.
    pub fn vertices_and_rank(&self) -> (Vec<Vec<Rational>>, usize) {
        let vs: Vec<Vec<Rational>> = self.vertices.iter().map(|v| v.coords.clone()).collect();
        let r = vs.len();
        (vs, r)
    }

    pub fn betti_rank(&self) -> usize {
        self.vertices.len()
    }

    /// `true` iff `ℓⱼ(u) > ε` for every facet.
    pub fn interior_test(&self, u: &[Rational], eps: Rational) -> Result<bool, PolytopeError> {
        if u.len() != self.dim {
            return Err(PolytopeError::DimensionMismatch {
                expected: self.dim,
                got: u.len(),
            });
        }
        Ok((0..self.facets.len()).all(|j| self.ell(j, u) > eps))
    }

    fn in_some_cone(&self, set: &[usize]) -> bool {
        self.vertices
            .iter()
            .any(|v| set.iter().all(|j| v.active.contains(j)))
    }

    /// Minimal subsets of facets that span no cone, with their quantum
    /// Stanley–Reisner data.
    pub fn primitive_collections(&self) -> Result<Vec<PrimitiveCollection>, PolytopeError> {
        let m = self.facets.len();
        let mut out = Vec::new();
        for k in 2..=m {
            for sub in subsets(m, k) {
                if self.in_some_cone(&sub) {
                    continue;
                }
                let minimal = (0..sub.len()).all(|drop| {
                    let smaller: Vec<usize> = sub
                        .iter()
                        .enumerate()
                        .filter(|&(i, _)| i != drop)
                        .map(|(_, &j)| j)
                        .collect();
                    self.in_some_cone(&smaller)
                });
                if minimal {
                    out.push(self.collection_data(sub)?);
                }
            }
        }
        Ok(out)
    }

    fn collection_data(&self, members: Vec<usize>) -> Result<PrimitiveCollection, PolytopeError> {
        let n = self.dim;
        let target: Vec<i64> = (0..n)
            .map(|i| members.iter().map(|&j| self.facets[j].normal[i]).sum())
            .collect();
        let mut decomposition: Option<(Vec<usize>, Vec<i64>)> = None;
        if target.iter().all(|&x| x == 0) {
            decomposition = Some((Vec::new(), Vec::new()));
        } else {
            for v in &self.vertices {
                // columns are the cone generators
                let a: Vec<Vec<Rational>> = (0..n)
                    .map(|i| {
                        v.active
                            .iter()
                            .map(|&j| Rational::integer(self.facets[j].normal[i]))
                            .collect()
                    })
                    .collect();
                let b: Vec<Rational> = target.iter().map(|&x| Rational::integer(x)).collect();
                let Some(coef) = solve_rational(&a, &b) else {
                    continue;
                };
                if coef.iter().any(|c| c.is_negative() || c.denom() != 1) {
                    continue;
                }
                let mut support = Vec::new();
                let mut mult = Vec::new();
                for (&j, c) in v.active.iter().zip(&coef) {
                    if c.is_positive() {
                        support.push(j);
                        mult.push(c.numer());
                    }
                }
                decomposition = Some((support, mult));
                break;
            }
        }
        let (cone_support, multipliers) =
            decomposition.ok_or_else(|| PolytopeError::NoConeDecomposition(members.clone()))?;
        let omega_at = |u: &[Rational]| -> Rational {
            members.iter().map(|&j| self.ell(j, u)).sum::<Rational>()
                - cone_support
                    .iter()
                    .zip(&multipliers)
                    .map(|(&j, &k)| self.ell(j, u) * k)
                    .sum::<Rational>()
        };
        let omega = omega_at(&self.vertices[0].coords);
        for v in &self.vertices {
            if omega_at(&v.coords) != omega {
                return Err(PolytopeError::NoConeDecomposition(members));
            }
        }
        Ok(PrimitiveCollection {
            members,
            cone_support,
            multipliers,
            omega,
        })
    }
}

impl fmt::Display for ToricData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (dim {}, {} facets)", self.name, self.dim, self.facets.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp2_builtin() {
        let td = ToricData::builtin("cpn(2)").unwrap();
        assert_eq!(td.num_facets(), 3);
        let (vs, r) = td.vertices_and_rank();
        assert_eq!(r, 3);
        assert!(vs.contains(&vec![q(0, 1), q(0, 1)]));
        assert!(vs.contains(&vec![q(1, 1), q(0, 1)]));
        assert!(vs.contains(&vec![q(0, 1), q(1, 1)]));
    }

    #[test]
    fn f2_builtin() {
        let td = ToricData::builtin("f2(1/4)").unwrap();
        assert_eq!(td.vertices.len(), 4);
        assert!(td.vertices.iter().any(|v| v.coords == vec![q(1, 2), q(3, 4)]));
        assert!(td
            .interior_test(&[q(5, 8), q(3, 8)], Rational::ZERO)
            .unwrap());
        assert_eq!(td.balanced_point(), vec![q(5, 8), q(3, 8)]);
    }

    #[test]
    fn blowup_builtin() {
        let td = ToricData::builtin("blowup_cp2").unwrap();
        assert_eq!(td.betti_rank(), 4);
        let u = td.balanced_point();
        for j in 0..4 {
            assert_eq!(td.ell(j, &u), q(1, 3));
        }
    }

    #[test]
    fn ranks() {
        assert_eq!(ToricData::builtin("cpn(1)").unwrap().betti_rank(), 2);
        assert_eq!(ToricData::builtin("cpn(3)").unwrap().betti_rank(), 4);
        assert_eq!(ToricData::builtin("s2xs2(1/3)").unwrap().betti_rank(), 4);
        assert!(ToricData::builtin("cpn(4)").is_err());
        assert!(ToricData::builtin("f2(0)").is_err());
        assert!(ToricData::builtin("nope").is_err());
    }

    #[test]
    fn interior_examples() {
        let td = ToricData::builtin("cpn(2)").unwrap();
        assert!(td.interior_test(&[q(1, 3), q(1, 3)], q(1, 1_000_000)).unwrap());
        assert!(!td.interior_test(&[q(0, 1), q(0, 1)], q(1, 1_000_000)).unwrap());
        assert_eq!(
            td.interior_test(&[q(0, 1)], Rational::ZERO),
            Err(PolytopeError::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn primitive_collections_cp2() {
        let pcs = ToricData::builtin("cpn(2)").unwrap().primitive_collections().unwrap();
        assert_eq!(pcs.len(), 1);
        assert_eq!(pcs[0].members, vec![0, 1, 2]);
        assert!(pcs[0].cone_support.is_empty());
        assert_eq!(pcs[0].omega, q(1, 1));
        assert_eq!(pcs[0].relation_string(), "Z1*Z2*Z3 - T^(1/1)");
    }

    #[test]
    fn primitive_collections_square() {
        let pcs = ToricData::builtin("s2xs2(0)").unwrap().primitive_collections().unwrap();
        let members: Vec<_> = pcs.iter().map(|p| p.members.clone()).collect();
        assert_eq!(members, vec![vec![0, 2], vec![1, 3]]);
        assert!(pcs.iter().all(|p| p.cone_support.is_empty() && p.omega == q(1, 1)));
    }

    #[test]
    fn primitive_collections_cp1() {
        let pcs = ToricData::builtin("cpn(1)").unwrap().primitive_collections().unwrap();
        assert_eq!(pcs.len(), 1);
        assert_eq!(pcs[0].members, vec![0, 1]);
        assert_eq!(pcs[0].omega, q(1, 1));
    }

    #[test]
    fn primitive_collections_with_cone_support() {
        // {2,3}: v₂ + v₃ = (−1,0) = v₄
        let pcs = ToricData::builtin("blowup_cp2").unwrap().primitive_collections().unwrap();
        assert_eq!(pcs.len(), 2);
        let a = pcs.iter().find(|p| p.members == vec![0, 3]).unwrap();
        assert_eq!(a.omega, q(2, 3));
        let b = pcs.iter().find(|p| p.members == vec![1, 2]).unwrap();
        assert_eq!(b.cone_support, vec![3]);
        assert_eq!(b.multipliers, vec![1]);
        assert_eq!(b.omega, q(1, 3));
    }

    #[test]
    fn f2_collections_have_multiplier_two() {
        // v₂ + v₄ = 0 and v₁ + v₃ = (0,−2) = 2v₄
        let pcs = ToricData::builtin("f2(1/4)").unwrap().primitive_collections().unwrap();
        assert_eq!(pcs.len(), 2);
        let a = pcs.iter().find(|p| p.members == vec![0, 2]).unwrap();
        assert_eq!((a.cone_support.clone(), a.multipliers.clone()), (vec![3], vec![2]));
        assert_eq!(a.omega, q(2, 1) - q(3, 2));
        let b = pcs.iter().find(|p| p.members == vec![1, 3]).unwrap();
        assert_eq!(b.omega, q(3, 4));
    }

    #[test]
    fn rejects_bad_input() {
        let unbounded = vec![
            Facet { normal: vec![1, 0], lambda: Rational::ZERO },
            Facet { normal: vec![0, 1], lambda: Rational::ZERO },
            Facet { normal: vec![1, 1], lambda: Rational::ZERO },
        ];
        assert!(matches!(ToricData::new("x", 2, unbounded), Err(PolytopeError::Unbounded(_))));

        let empty = vec![
            Facet { normal: vec![1], lambda: q(1, 1) },
            Facet { normal: vec![-1], lambda: q(-1, 1) },
        ];
        assert!(matches!(ToricData::new("x", 1, empty), Err(PolytopeError::EmptyInterior(_))));

        let infeasible = vec![
            Facet { normal: vec![1], lambda: q(2, 1) },
            Facet { normal: vec![-1], lambda: q(-1, 1) },
        ];
        assert!(matches!(ToricData::new("x", 1, infeasible), Err(PolytopeError::EmptyInterior(_))));

        // weighted projective plane P(1,1,2): singular vertex
        let singular = vec![
            Facet { normal: vec![1, 0], lambda: Rational::ZERO },
            Facet { normal: vec![0, 1], lambda: Rational::ZERO },
            Facet { normal: vec![-1, -2], lambda: q(-2, 1) },
        ];
        assert!(matches!(ToricData::new("x", 2, singular), Err(PolytopeError::NotSmooth(_))));

        let non_primitive = vec![
            Facet { normal: vec![2], lambda: Rational::ZERO },
            Facet { normal: vec![-1], lambda: q(-1, 1) },
        ];
        assert!(matches!(ToricData::new("x", 1, non_primitive), Err(PolytopeError::Malformed(_))));
    }

    #[test]
    fn json_model() {
        let doc = r#"{"name": "sq", "dim": 2, "facets": [
            {"normal": [1, 0], "lambda": "0"}, {"normal": [0, 1], "lambda": "0"},
            {"normal": [-1, 0], "lambda": "-1"}, {"normal": [0, -1], "lambda": "-1/2"}],
            "bulk": [{"facet": 2, "w": [0.5, 0.0]}]}"#;
        let td = ToricData::load(doc).unwrap();
        assert_eq!(td.betti_rank(), 4);
        assert_eq!(td.bulk, vec![BulkEntry { facet: 1, w: Complex64::new(0.5, 0.0) }]);
        assert_eq!(td.balanced_point(), vec![q(1, 2), q(1, 4)]);
        assert!(ToricData::load(r#"{"name": "x"}"#).is_err());

        let f2 = r#"{"name": "f", "dim": 2, "alpha": "1/4", "facets": [
            {"normal": [1, 0], "lambda": "0"}, {"normal": [0, 1], "lambda": "0"},
            {"normal": [-1, -2], "lambda": "-2"}, {"normal": [0, -1], "lambda": "-3/4"}]}"#;
        assert_eq!(ToricData::load(f2).unwrap().kind, ModelKind::Hirzebruch { alpha: q(1, 4) });
    }
}
