//! Finite-dimensional unital Frobenius algebras, their trace `Z`, and the
//! Clifford models attached to nondegenerate critical points.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critsolve::{point_at, CritError, CriticalPoint};
use crate::polytope::ModelKind;
use crate::potential::PotentialFunction;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative tolerance of the associativity and Frobenius checks.
pub const ALGEBRA_TOL: f64 = 1e-9;
pub const MAX_CLIFFORD_RANK: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FrobeniusError {
    #[error("pairing matrix is singular (condition number {0:.3e})")]
    SingularPairing(f64),
    #[error("pairing ⟨e{0}, e{1}⟩ is nonzero across the wrong parity")]
    ParityViolation(usize, usize),
    #[error("e{unit} is not a two-sided unit (residual {residual:.3e})")]
    UnitLaw { unit: usize, residual: f64 },
    #[error("product is not associative (relative residual {0:.3e})")]
    NotAssociative(f64),
    #[error("pairing is not invariant under the product (relative residual {0:.3e})")]
    NotFrobenius(f64),
    #[error("Clifford parameter d{0} is zero")]
    ZeroD(usize),
    #[error("Clifford rank {0} exceeds the supported maximum {MAX_CLIFFORD_RANK}")]
    TooLarge(usize),
    #[error("critical point is degenerate")]
    Degenerate,
    #[error("some interior critical point is degenerate")]
    NotMorse,
    #[error("unsupported model {0}")]
    UnsupportedModel(String),
    #[error("basis change rejected: {0}")]
    BasisChange(String),
    #[error("malformed algebra: {0}")]
    Malformed(String),
    #[error(transparent)]
    Crit(#[from] CritError),
}

/// `(C, ⟨·,·⟩, ∪, e₀)` with a `ℤ/2` grading. Products are stored sparsely:
/// `products[i·dim + j]` lists the nonzero `(k, c^k_{ij})` in `eᵢ ∪ eⱼ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusAlgebra {
    n: usize,
    degrees: Vec<u8>,
    pairing: DMatrix<Complex64>,
    products: Vec<Vec<(usize, Complex64)>>,
    unit: usize,
    labels: Vec<String>,
    condition: f64,
}

fn max_norm<'a>(it: impl IntoIterator<Item = &'a Complex64>) -> f64 {
    it.into_iter().map(|v| v.norm()).fold(0.0, f64::max)
}

impl FrobeniusAlgebra {
    /// Validates and builds an algebra from dense structure constants
    /// `structure[i][j][k] = c^k_{ij}`. `n` is the parity reference.
    pub fn new(
        n: usize,
        degrees: Vec<u8>,
        pairing: DMatrix<Complex64>,
        structure: &[Vec<Vec<Complex64>>],
        unit: usize,
    ) -> Result<Self, FrobeniusError> {
        let dim = degrees.len();
        if pairing.nrows() != dim || pairing.ncols() != dim || structure.len() != dim {
            return Err(FrobeniusError::Malformed("dimension mismatch".into()));
        }
        let mut products = Vec::with_capacity(dim * dim);
        for row in structure {
            if row.len() != dim {
                return Err(FrobeniusError::Malformed("dimension mismatch".into()));
            }
            for v in row {
                if v.len() != dim {
                    return Err(FrobeniusError::Malformed("dimension mismatch".into()));
                }
                products.push(v.iter().enumerate().filter(|(_, c)| **c != ZERO).map(|(k, c)| (k, *c)).collect());
            }
        }
        Self::from_sparse(n, degrees, pairing, products, unit, None)
    }

    fn from_sparse(
        n: usize,
        degrees: Vec<u8>,
        pairing: DMatrix<Complex64>,
        products: Vec<Vec<(usize, Complex64)>>,
        unit: usize,
        labels: Option<Vec<String>>,
    ) -> Result<Self, FrobeniusError> {
        let dim = degrees.len();
        if dim == 0 || unit >= dim {
            return Err(FrobeniusError::Malformed("empty basis or unit out of range".into()));
        }
        if degrees.iter().any(|&d| d > 1) {
            return Err(FrobeniusError::Malformed("degrees are taken mod 2".into()));
        }
        let labels = labels.unwrap_or_else(|| (0..dim).map(|i| format!("e{i}")).collect());
        let alg = FrobeniusAlgebra {
            n,
            degrees,
            condition: 0.0,
            pairing,
            products,
            unit,
            labels,
        };
        alg.validate()
    }

    fn validate(mut self) -> Result<Self, FrobeniusError> {
        let dim = self.dim();
        let sv = self.pairing.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        self.condition = smax / smin;
        if !(smin > 1e-13 * smax) {
            return Err(FrobeniusError::SingularPairing(self.condition));
        }
        let gmax = max_norm(self.pairing.iter());
        for i in 0..dim {
            for j in 0..dim {
                let parity = (self.degrees[i] as usize + self.degrees[j] as usize + self.n) % 2;
                if parity != 0 && self.pairing[(i, j)].norm() > 1e-12 * gmax {
                    return Err(FrobeniusError::ParityViolation(i, j));
                }
            }
        }

        let cmax = self
            .products
            .iter()
            .flat_map(|p| p.iter().map(|(_, c)| c.norm()))
            .fold(0.0, f64::max)
            .max(1.0);
        let mut unit_res: f64 = 0.0;
        for x in 0..dim {
            for v in [self.mul_basis(self.unit, x), self.mul_basis(x, self.unit)] {
                for (k, c) in v.iter().enumerate() {
                    let want = if k == x { ONE } else { ZERO };
                    unit_res = unit_res.max((c - want).norm());
                }
            }
        }
        if unit_res > 1e-12 * cmax {
            return Err(FrobeniusError::UnitLaw {
                unit: self.unit,
                residual: unit_res,
            });
        }

        let (assoc, frob) = self.law_residuals();
        if assoc > ALGEBRA_TOL {
            return Err(FrobeniusError::NotAssociative(assoc));
        }
        if frob > ALGEBRA_TOL {
            return Err(FrobeniusError::NotFrobenius(frob));
        }
        Ok(self)
    }

    /// Relative residuals of associativity and of `⟨x∪y, z⟩ = ⟨x, y∪z⟩`
    /// over all basis triples.
    pub fn law_residuals(&self) -> (f64, f64) {
        let dim = self.dim();
        let per_i: Vec<(f64, f64, f64, f64)> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let (mut da, mut sa, mut df, mut sf) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
                for j in 0..dim {
                    let ij = self.mul_basis(i, j);
                    for k in 0..dim {
                        let left = self.mul_vec_basis(&ij, k);
                        let jk = self.mul_basis(j, k);
                        let right = self.mul_basis_vec(i, &jk);
                        for (a, b) in left.iter().zip(&right) {
                            da = da.max((a - b).norm());
                            sa = sa.max(a.norm()).max(b.norm());
                        }
                        let l = self.pair_vec_basis(&ij, k);
                        let r = self.pair_basis_vec(i, &jk);
                        df = df.max((l - r).norm());
                        sf = sf.max(l.norm()).max(r.norm());
                    }
                }
                (da, sa, df, sf)
            })
            .collect();
        let (da, sa, df, sf) = per_i
            .into_iter()
            .fold((0.0f64, 0.0f64, 0.0f64, 0.0f64), |acc, v| {
                (acc.0.max(v.0), acc.1.max(v.1), acc.2.max(v.2), acc.3.max(v.3))
            });
        (
            if sa > 0.0 { da / sa } else { 0.0 },
            if sf > 0.0 { df / sf } else { 0.0 },
        )
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[u8] {
        &self.degrees
    }

    pub fn pairing(&self) -> &DMatrix<Complex64> {
        &self.pairing
    }

    pub fn unit_index(&self) -> usize {
        self.unit
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Condition number of the pairing matrix.
    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    /// `c^k_{ij}`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.products[i * self.dim() + j]
            .iter()
            .find(|(kk, _)| *kk == k)
            .map_or(ZERO, |(_, c)| *c)
    }

    /// Coordinates of `eᵢ ∪ eⱼ`.
    pub fn mul_basis(&self, i: usize, j: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for &(k, c) in &self.products[i * self.dim() + j] {
            out[k] += c;
        }
        out
    }

    fn mul_vec_basis(&self, x: &[Complex64], j: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for (i, xi) in x.iter().enumerate() {
            if *xi == ZERO {
                continue;
            }
            for &(k, c) in &self.products[i * self.dim() + j] {
                out[k] += xi * c;
            }
        }
        out
    }

    fn mul_basis_vec(&self, i: usize, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for (j, yj) in y.iter().enumerate() {
            if *yj == ZERO {
                continue;
            }
            for &(k, c) in &self.products[i * self.dim() + j] {
                out[k] += yj * c;
            }
        }
        out
    }

    /// Product of two coordinate vectors.
    pub fn mul(&self, x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        for (j, yj) in y.iter().enumerate() {
            if *yj == ZERO {
                continue;
            }
            for (k, v) in self.mul_vec_basis(x, j).into_iter().enumerate() {
                out[k] += v * yj;
            }
        }
        out
    }

    /// `⟨x, y⟩` for coordinate vectors.
    pub fn pair(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut s = ZERO;
        for (i, xi) in x.iter().enumerate() {
            for (j, yj) in y.iter().enumerate() {
                s += xi * self.pairing[(i, j)] * yj;
            }
        }
        s
    }

    fn pair_vec_basis(&self, x: &[Complex64], k: usize) -> Complex64 {
        x.iter().enumerate().map(|(i, xi)| xi * self.pairing[(i, k)]).sum()
    }

    fn pair_basis_vec(&self, i: usize, y: &[Complex64]) -> Complex64 {
        y.iter().enumerate().map(|(j, yj)| self.pairing[(i, j)] * yj).sum()
    }

    /// The same algebra in the basis `e'ₐ = Σ_b M[b, a] e_b`. `M` must be
    /// invertible, preserve degrees, and fix the unit.
    pub fn change_basis(&self, m: &DMatrix<Complex64>) -> Result<Self, FrobeniusError> {
        let dim = self.dim();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(FrobeniusError::BasisChange("matrix has the wrong size".into()));
        }
        for a in 0..dim {
            for b in 0..dim {
                if self.degrees[a] != self.degrees[b] && m[(b, a)] != ZERO {
                    return Err(FrobeniusError::BasisChange("mixes degrees".into()));
                }
                let want = if b == self.unit { ONE } else { ZERO };
                if a == self.unit && m[(b, a)] != want {
                    return Err(FrobeniusError::BasisChange("moves the unit".into()));
                }
            }
        }
        let minv = m
            .clone()
            .try_inverse()
            .ok_or_else(|| FrobeniusError::BasisChange("matrix is singular".into()))?;
        let pairing = m.transpose() * &self.pairing * m;
        let cols: Vec<Vec<Complex64>> = (0..dim).map(|a| m.column(a).iter().cloned().collect()).collect();
        let mut products = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let prod = self.mul(&cols[a], &cols[b]);
                let v = &minv * nalgebra::DVector::from_vec(prod);
                let vmax = max_norm(v.iter());
                products.push(
                    v.iter()
                        .enumerate()
                        .filter(|(_, c)| c.norm() > 1e-15 * vmax)
                        .map(|(k, c)| (k, *c))
                        .collect(),
                );
            }
        }
        // Round-off leaves the unit row at 1 ± ε; restore it exactly.
        for x in 0..dim {
            products[self.unit * dim + x] = vec![(x, ONE)];
            products[x * dim + self.unit] = vec![(x, ONE)];
        }
        Self::from_sparse(self.n, self.degrees.clone(), pairing, products, self.unit, None)
    }

    /// Parses the algebra JSON format: `n`, `basis_degrees`, `pairing` as rows
    /// of `[re, im]`, `structure` as `[i, j, k, re, im]` entries (0-based),
    /// and `unit_index`.
    pub fn from_json(doc: &str) -> Result<Self, FrobeniusError> {
        let raw: AlgebraJson = serde_json::from_str(doc).map_err(|e| FrobeniusError::Malformed(e.to_string()))?;
        let dim = raw.basis_degrees.len();
        if raw.pairing.len() != dim || raw.pairing.iter().any(|r| r.len() != dim) {
            return Err(FrobeniusError::Malformed("pairing must be dim × dim".into()));
        }
        let pairing = DMatrix::from_fn(dim, dim, |i, j| raw.pairing[i][j]);
        let mut dense = vec![vec![vec![ZERO; dim]; dim]; dim];
        for &(i, j, k, re, im) in &raw.structure {
            if i >= dim || j >= dim || k >= dim {
                return Err(FrobeniusError::Malformed(format!("structure index ({i}, {j}, {k}) out of range")));
            }
            dense[i][j][k] += Complex64::new(re, im);
        }
        Self::new(raw.n, raw.basis_degrees, pairing, &dense, raw.unit_index)
    }

    pub fn to_json(&self) -> String {
        let dim = self.dim();
        let raw = AlgebraJson {
            n: self.n,
            basis_degrees: self.degrees.clone(),
            pairing: (0..dim).map(|i| (0..dim).map(|j| self.pairing[(i, j)]).collect()).collect(),
            structure: (0..dim * dim)
                .flat_map(|ij| {
                    self.products[ij]
                        .iter()
                        .map(move |&(k, c)| (ij / dim, ij % dim, k, c.re, c.im))
                })
                .collect(),
            unit_index: self.unit,
        };
        serde_json::to_string(&raw).expect("algebra serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    n: usize,
    basis_degrees: Vec<u8>,
    pairing: Vec<Vec<Complex64>>,
    structure: Vec<(usize, usize, usize, f64, f64)>,
    unit_index: usize,
}

impl fmt::Display for FrobeniusAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Frobenius algebra of dimension {} (n = {})", self.dim(), self.n)?;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let terms = &self.products[i * self.dim() + j];
                if terms.is_empty() {
                    continue;
                }
                let rhs: Vec<String> = terms
                    .iter()
                    .map(|(k, c)| format!("({},{})*{}", c.re, c.im, self.labels[*k]))
                    .collect();
                writeln!(f, "{} * {} = {}", self.labels[i], self.labels[j], rhs.join(" + "))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordSpec {
    pub d: Vec<Complex64>,
}

impl CliffordSpec {
    pub fn new(d: Vec<Complex64>) -> Self {
        CliffordSpec { d }
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }
}

/// Subsets of `{0..n}` as bitmasks, ordered by size then lexicographically.
fn clifford_basis(n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, sets: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                sets.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, sets);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut sets);
        out.extend(sets.into_iter().map(|s| s.iter().fold(0u32, |m, &i| m | (1 << i))));
    }
    out
}

/// `X_I · X_J` as `(coefficient, K)`, by anticommuting generators into order.
fn clifford_mul(i: u32, j: u32, d: &[Complex64]) -> (Complex64, u32) {
    let mut coef = ONE;
    // Each generator of J passes the generators of I above it.
    let mut swaps = 0u32;
    for b in 0..d.len() {
        if j & (1 << b) != 0 {
            swaps += (i >> (b + 1)).count_ones();
        }
    }
    if swaps % 2 == 1 {
        coef = -coef;
    }
    let both = i & j;
    for (b, db) in d.iter().enumerate() {
        if both & (1 << b) != 0 {
            coef *= db;
        }
    }
    (coef, i ^ j)
}

fn subset_label(m: u32, n: usize) -> String {
    if m == 0 {
        return "1".into();
    }
    let idx: String = (0..n).filter(|b| m & (1 << b) != 0).map(|b| (b + 1).to_string()).collect();
    format!("X{idx}")
}

/// `Cliff(n; d)`: generators with `XᵢXⱼ = −XⱼXᵢ`, `Xᵢ² = dᵢ`, and pairing
/// `⟨X_I, X_J⟩` = top coefficient of `X_I X_J`, which is `(−1)^{*(I)}` when
/// `J = Iᶜ` and zero otherwise.
pub fn clifford_algebra(spec: &CliffordSpec) -> Result<FrobeniusAlgebra, FrobeniusError> {
    let n = spec.n();
    if n > MAX_CLIFFORD_RANK {
        return Err(FrobeniusError::TooLarge(n));
    }
    if let Some(i) = spec.d.iter().position(|d| d.norm() == 0.0) {
        return Err(FrobeniusError::ZeroD(i + 1));
    }
    let basis = clifford_basis(n);
    let dim = basis.len();
    let mut pos = vec![0usize; 1 << n];
    for (a, &m) in basis.iter().enumerate() {
        pos[m as usize] = a;
    }
    let top = ((1u64 << n) - 1) as u32;
    let mut products = Vec::with_capacity(dim * dim);
    let mut pairing = DMatrix::from_element(dim, dim, ZERO);
    for (a, &i) in basis.iter().enumerate() {
        for (b, &j) in basis.iter().enumerate() {
            let (c, k) = clifford_mul(i, j, &spec.d);
            products.push(vec![(pos[k as usize], c)]);
            if i & j == 0 && i | j == top {
                pairing[(a, b)] = c;
            }
        }
    }
    let degrees = basis.iter().map(|m| (m.count_ones() % 2) as u8).collect();
    let labels = basis.iter().map(|&m| subset_label(m, n)).collect();
    FrobeniusAlgebra::from_sparse(n, degrees, pairing, products, 0, Some(labels))
}

/// `*(I) = #{(i, j) ∈ I × Iᶜ : j < i}` for a subset of `{1..n}` given 1-based.
pub fn star_sign(subset: &[usize], n: usize) -> usize {
    let comp: Vec<usize> = (1..=n).filter(|j| !subset.contains(j)).collect();
    subset.iter().map(|&i| comp.iter().filter(|&&j| j < i).count()).sum()
}

/// The trace `Z(C)`, as the literal sum over `(I₁, I₂, I₃, J₁, J₂, J₃)` of
/// `(−1)^* g^{I₁J₁} g^{I₂J₂} g^{I₃0} g^{J₃0} ⟨e_{I₁}∪e_{I₂}, e_{I₃}⟩
/// ⟨e_{J₁}∪e_{J₂}, e_{J₃}⟩` with `* = deg I₁ · deg J₂ + n(n−1)/2`. Zero
/// factors are skipped; the outer index is split across threads and partial
/// sums are added in index order.
pub fn trace_z(alg: &FrobeniusAlgebra) -> Result<Complex64, FrobeniusError> {
    let dim = alg.dim();
    let ginv = alg
        .pairing
        .clone()
        .try_inverse()
        .ok_or(FrobeniusError::SingularPairing(f64::INFINITY))?;
    let gmax = max_norm(ginv.iter());
    let nz = |v: Complex64| v.norm() > 1e-15 * gmax;
    let row_nz: Vec<Vec<usize>> = (0..dim).map(|i| (0..dim).filter(|&j| nz(ginv[(i, j)])).collect()).collect();
    let unit_nz: Vec<usize> = (0..dim).filter(|&i| nz(ginv[(i, alg.unit)])).collect();

    // P[a][b][c] = ⟨e_a ∪ e_b, e_c⟩
    let mut p = vec![ZERO; dim * dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            let ab = alg.mul_basis(a, b);
            for c in 0..dim {
                p[(a * dim + b) * dim + c] = alg.pair_vec_basis(&ab, c);
            }
        }
    }
    let pidx = |a: usize, b: usize, c: usize| p[(a * dim + b) * dim + c];
    let base_sign = (alg.n * alg.n.saturating_sub(1) / 2) % 2;

    let partial: Vec<Complex64> = (0..dim)
        .into_par_iter()
        .map(|i1| {
            let mut acc = ZERO;
            for &j1 in &row_nz[i1] {
                let g11 = ginv[(i1, j1)];
                for i2 in 0..dim {
                    for &j2 in &row_nz[i2] {
                        let g22 = ginv[(i2, j2)];
                        let sign = (alg.degrees[i1] as usize * alg.degrees[j2] as usize + base_sign) % 2;
                        for &i3 in &unit_nz {
                            let pi = pidx(i1, i2, i3);
                            if pi == ZERO {
                                continue;
                            }
                            for &j3 in &unit_nz {
                                let pj = pidx(j1, j2, j3);
                                if pj == ZERO {
                                    continue;
                                }
                                let term = g11 * g22 * ginv[(i3, alg.unit)] * ginv[(j3, alg.unit)] * pi * pj;
                                if sign == 1 {
                                    acc -= term;
                                } else {
                                    acc += term;
                                }
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();
    Ok(partial.into_iter().fold(ZERO, |a, b| a + b))
}

/// Eigenvalues of the `x`-Hessian at `point`, sorted by modulus then
/// argument.
pub fn hessian_eigenvalues(
    po: &PotentialFunction,
    point: &CriticalPoint,
    t: f64,
) -> Result<Vec<Complex64>, FrobeniusError> {
    let h = hessian_at(po, point, t)?;
    let mut ev: Vec<Complex64> = h
        .schur()
        .eigenvalues()
        .ok_or_else(|| FrobeniusError::Malformed("eigenvalue iteration failed".into()))?
        .iter()
        .cloned()
        .collect();
    ev.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    Ok(ev)
}

fn hessian_at(po: &PotentialFunction, point: &CriticalPoint, t: f64) -> Result<DMatrix<Complex64>, FrobeniusError> {
    let y = point_at(po, point, t)?;
    let x: Vec<Complex64> = y.iter().map(|v| v.ln()).collect();
    Ok(po.absolute().numeric(t).hessian(&x))
}

/// `Cliff(n; d)` with `2dᵢ` the Hessian eigenvalues at the point.
pub fn floer_algebra(
    po: &PotentialFunction,
    point: &CriticalPoint,
    t: f64,
) -> Result<FrobeniusAlgebra, FrobeniusError> {
    if !point.nondegenerate {
        return Err(FrobeniusError::Degenerate);
    }
    let ev = hessian_eigenvalues(po, point, t)?;
    let d: Vec<Complex64> = ev.iter().map(|e| e / 2.0).collect();
    clifford_algebra(&CliffordSpec::new(d)).map_err(|e| match e {
        FrobeniusError::ZeroD(_) => FrobeniusError::Degenerate,
        other => other,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResiduePairing {
    /// `1 / det Hess`.
    pub simplified: Complex64,
    /// `1 / Z` of the Floer algebra.
    pub z_based: Complex64,
    /// The two agree within 1e-8 relative.
    pub agree: bool,
}

pub fn residue_pairings(
    po: &PotentialFunction,
    point: &CriticalPoint,
    t: f64,
) -> Result<ResiduePairing, FrobeniusError> {
    if !point.nondegenerate {
        return Err(FrobeniusError::Degenerate);
    }
    let det = hessian_at(po, point, t)?.determinant();
    let z = trace_z(&floer_algebra(po, point, t)?)?;
    let simplified = det.inv();
    let z_based = z.inv();
    let agree = (simplified - z_based).norm() <= 1e-8 * simplified.norm().max(z_based.norm());
    Ok(ResiduePairing {
        simplified,
        z_based,
        agree,
    })
}

/// `|Σ 1/Z| / max |1/Z|` over the interior points.
pub fn sum_formula_check(po: &PotentialFunction, points: &[CriticalPoint], t: f64) -> Result<f64, FrobeniusError> {
    let interior: Vec<&CriticalPoint> = points.iter().filter(|p| p.interior).collect();
    if interior.iter().any(|p| !p.nondegenerate) {
        return Err(FrobeniusError::NotMorse);
    }
    let inv: Vec<Complex64> = interior
        .iter()
        .map(|p| residue_pairings(po, p, t).map(|r| r.z_based))
        .collect::<Result<_, _>>()?;
    let total: Complex64 = inv.iter().sum();
    let top = max_norm(inv.iter());
    Ok(if top > 0.0 { total.norm() / top } else { 0.0 })
}

/// Kodaira–Spencer values: row `j < m` holds `e^{wⱼ} T^{−λⱼ} y^{vⱼ}` at each
/// interior point, the last row is the unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsMatrix {
    pub rows: Vec<Vec<Complex64>>,
    pub t: f64,
}

pub fn ks_matrix(po: &PotentialFunction, points: &[CriticalPoint], t: f64) -> Result<KsMatrix, FrobeniusError> {
    let td = po
        .toric
        .as_ref()
        .ok_or_else(|| FrobeniusError::UnsupportedModel("custom potential without toric data".into()))?;
    let interior: Vec<&CriticalPoint> = points.iter().filter(|p| p.interior).collect();
    if interior.iter().any(|p| !p.nondegenerate) {
        return Err(FrobeniusError::NotMorse);
    }
    let ys: Vec<Vec<Complex64>> = interior
        .iter()
        .map(|p| point_at(po, p, t))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(td.num_facets() + 1);
    for (j, f) in td.facets.iter().enumerate() {
        let w = po.bulk.iter().find(|b| b.facet == j).map_or(ZERO, |b| b.w);
        let coeff = w.exp() * t.powf(-f.lambda.to_f64());
        rows.push(
            ys.iter()
                .map(|y| {
                    f.normal
                        .iter()
                        .zip(y)
                        .fold(coeff, |acc, (&k, yi)| acc * yi.powi(k as i32))
                })
                .collect(),
        );
    }
    rows.push(vec![ONE; ys.len()]);
    Ok(KsMatrix { rows, t })
}

/// For `CPⁿ`, the matrix `Σ_k ks(f₁)^ℓ ks(f₁)^{ℓ'} ⟨1_k, 1_k⟩_res` over
/// `0 ≤ ℓ, ℓ' ≤ n`, which is the Poincaré pairing of `1, f₁, …, f₁ⁿ`.
pub fn pd_check(po: &PotentialFunction, points: &[CriticalPoint], t: f64) -> Result<DMatrix<Complex64>, FrobeniusError> {
    let n = match po.toric.as_ref().map(|td| &td.kind) {
        Some(ModelKind::ProjectiveSpace { n }) => *n,
        _ => return Err(FrobeniusError::UnsupportedModel("pd_check needs cpn(n)".into())),
    };
    let ks = ks_matrix(po, points, t)?;
    let interior: Vec<&CriticalPoint> = points.iter().filter(|p| p.interior).collect();
    let res: Vec<Complex64> = interior
        .iter()
        .map(|p| residue_pairings(po, p, t).map(|r| r.simplified))
        .collect::<Result<_, _>>()?;
    let f1 = &ks.rows[0];
    Ok(DMatrix::from_fn(n + 1, n + 1, |l, lp| {
        f1.iter()
            .zip(&res)
            .map(|(v, r)| v.powi(l as i32) * v.powi(lp as i32) * r)
            .sum()
    }))
}
