//! Quantum Stanley–Reisner presentations and the comparison of `c₁`
//! eigenvalues with critical values.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::critsolve::{point_at, solve_critical, CritError, CriticalPoint, SolverConfig};
use crate::polytope::{ModelKind, PolytopeError, PrimitiveCollection, ToricData};
use crate::potential::{default_potential, monomial_z, PotentialError, PotentialFunction, PotentialKind};
use crate::rational::Rational;

/// Relative tolerance of the eigenvalue and critical-value comparison.
pub const C1_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QhError {
    #[error("no independent quantum cohomology presentation for {0}")]
    UnsupportedModel(String),
    #[error("some interior critical point is degenerate")]
    NotMorse,
    #[error("potential has no toric data")]
    NoToricData,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Crit(#[from] CritError),
}

/// Variables `Z₁..Z_m`, one quantum Stanley–Reisner relation per primitive
/// collection, and the `n` linear relations `Σⱼ v_{j,i} Zⱼ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QHPresentation {
    pub variables: usize,
    pub qsr: Vec<PrimitiveCollection>,
    /// `linear[i][j] = v_{j,i}`.
    pub linear: Vec<Vec<i64>>,
}

impl QHPresentation {
    pub fn qsr_strings(&self) -> Vec<String> {
        self.qsr.iter().map(|c| c.relation_string()).collect()
    }

    pub fn linear_strings(&self) -> Vec<String> {
        self.linear
            .iter()
            .map(|row| {
                let mut s = String::new();
                for (j, &c) in row.iter().enumerate() {
                    if c == 0 {
                        continue;
                    }
                    let sign = match (c < 0, s.is_empty()) {
                        (true, true) => "-",
                        (true, false) => " - ",
                        (false, true) => "",
                        (false, false) => " + ",
                    };
                    let mag = if c.abs() == 1 { String::new() } else { format!("{}*", c.abs()) };
                    s.push_str(&format!("{sign}{mag}Z{}", j + 1));
                }
                format!("{s} = 0")
            })
            .collect()
    }
}

pub fn qsr_relations(td: &ToricData) -> Result<QHPresentation, QhError> {
    let qsr = td.primitive_collections()?;
    let linear = (0..td.dim)
        .map(|i| td.facets.iter().map(|f| f.normal[i]).collect())
        .collect();
    Ok(QHPresentation {
        variables: td.num_facets(),
        qsr,
        linear,
    })
}

/// Largest `|z^𝒫 − T^ω z^𝒫′| / |z^𝒫|` over `trials` random `(y, t)`, using
/// the monomials `zⱼ` of the potential's toric data at its basepoint.
pub fn qsr_identity_check(po: &PotentialFunction, trials: usize, seed: u64) -> Result<f64, QhError> {
    let td = po.toric.as_ref().ok_or(QhError::NoToricData)?;
    let collections = td.primitive_collections()?;
    qsr_identity_check_with(po, &collections, trials, seed)
}

/// As [`qsr_identity_check`], with caller-supplied relation data (for
/// example a deliberately perturbed `ω`).
pub fn qsr_identity_check_with(
    po: &PotentialFunction,
    collections: &[PrimitiveCollection],
    trials: usize,
    seed: u64,
) -> Result<f64, QhError> {
    let td = po.toric.as_ref().ok_or(QhError::NoToricData)?;
    let zs = (0..td.num_facets())
        .map(|j| monomial_z(td, j, &po.basepoint))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let y: Vec<Complex64> = (0..td.dim)
            .map(|_| Complex64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let t = rng.gen_range(0.01..0.5);
        let z = zs.iter().map(|p| p.eval(&y, t)).collect::<Result<Vec<_>, _>>()?;
        for c in collections {
            let lhs: Complex64 = c.members.iter().map(|&j| z[j]).product();
            let rhs: Complex64 = c
                .cone_support
                .iter()
                .zip(&c.multipliers)
                .map(|(&j, &k)| z[j].powi(k as i32))
                .product::<Complex64>()
                * t.powf(c.omega.to_f64());
            worst = worst.max((lhs - rhs).norm() / lhs.norm());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct C1Check {
    pub t: f64,
    pub eigenvalues_qh: Vec<Complex64>,
    pub critical_values: Vec<Complex64>,
    /// Largest matched distance relative to the largest magnitude.
    pub residual: f64,
    pub matched: bool,
}

/// Matches two multisets greedily by nearest value and returns the largest
/// matched distance relative to the largest magnitude present, or `∞` when
/// the sizes differ.
pub fn multiset_residual(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = a.iter().chain(b).map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("sizes agree");
        used[k] = true;
        worst = worst.max(d / scale);
    }
    worst
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    m.schur()
        .eigenvalues()
        .map(|v| v.iter().cloned().collect())
        .unwrap_or_default()
}

/// Multiplication by `c₁ = (n+1)x` on `Λ[x]/(x^{n+1} − t)`.
pub fn cpn_c1_matrix(n: usize, t: f64) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(n + 1, n + 1, c(0.0));
    for i in 0..n {
        m[(i + 1, i)] = c((n + 1) as f64);
    }
    m[(0, n)] = c((n + 1) as f64 * t);
    m
}

/// `c₁` on the tensor product of two `CP¹` factors with `x² = t^{a}`,
/// `x'² = t^{b}`, basis `1, x, x', xx'`.
pub fn sphere_product_c1_matrix(a: Rational, b: Rational, t: f64) -> DMatrix<Complex64> {
    let cp1 = |area: Rational| {
        DMatrix::from_row_slice(2, 2, &[c(0.0), c(2.0 * t.powf(area.to_f64())), c(2.0), c(0.0)])
    };
    let id = DMatrix::<Complex64>::identity(2, 2);
    cp1(a).kronecker(&id) + id.kronecker(&cp1(b))
}

/// Multiplication by `Z₁` and `Z₂` on `{1, Z₁, Z₂, Z₁Z₂}` for the blow-up,
/// from `Z₃ = Z₂`, `Z₄ = Z₁ − Z₂`, `Z₁Z₄ = T^{2/3}`, `Z₂Z₃ = T^{1/3}Z₄`:
/// `Z₁² = Z₁Z₂ + T^{2/3}`, `Z₂² = T^{1/3}(Z₁ − Z₂)`, `Z₁Z₂² = T`,
/// `Z₁²Z₂ = T + T^{2/3}Z₂`. Columns are images of basis vectors.
pub fn blowup_multiplication(t: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let a = t.powf(1.0 / 3.0);
    let b = t.powf(2.0 / 3.0);
    #[rustfmt::skip]
    let z1 = DMatrix::from_row_slice(4, 4, &[
        c(0.0), c(b),   c(0.0), c(t),
        c(1.0), c(0.0), c(0.0), c(0.0),
        c(0.0), c(0.0), c(0.0), c(b),
        c(0.0), c(1.0), c(1.0), c(0.0),
    ]);
    #[rustfmt::skip]
    let z2 = DMatrix::from_row_slice(4, 4, &[
        c(0.0), c(0.0), c(0.0), c(t),
        c(0.0), c(0.0), c(a),   c(0.0),
        c(1.0), c(0.0), c(-a),  c(0.0),
        c(0.0), c(1.0), c(0.0), c(0.0),
    ]);
    (z1, z2)
}

/// `c₁ = Z₁ + Z₂ + Z₃ + Z₄ = 2Z₁ + Z₂` on `{1, Z₁, Z₂, Z₁Z₂}`.
pub fn blowup_c1_matrix(t: f64) -> DMatrix<Complex64> {
    let (z1, z2) = blowup_multiplication(t);
    z1 * c(2.0) + z2
}

/// The same operator on `{1, Z₃, Z₄, Z₃Z₄}`, where
/// `Z₃Z₄ = Z₁Z₂ − T^{1/3}Z₁ + T^{1/3}Z₂`.
pub fn blowup_c1_matrix_alt(t: f64) -> DMatrix<Complex64> {
    let a = t.powf(1.0 / 3.0);
    #[rustfmt::skip]
    let p = DMatrix::from_row_slice(4, 4, &[
        c(1.0), c(0.0), c(0.0),  c(0.0),
        c(0.0), c(0.0), c(1.0),  c(-a),
        c(0.0), c(1.0), c(-1.0), c(a),
        c(0.0), c(0.0), c(0.0),  c(1.0),
    ]);
    let pinv = p.clone().try_inverse().expect("basis change is invertible");
    pinv * blowup_c1_matrix(t) * p
}

/// `c₁` eigenvalues from a presentation that does not use the potential.
pub fn qh_eigenvalues(td: &ToricData, t: f64) -> Result<Vec<Complex64>, QhError> {
    let m = match &td.kind {
        ModelKind::ProjectiveSpace { n } => cpn_c1_matrix(*n, t),
        ModelKind::SphereProduct { alpha } | ModelKind::Hirzebruch { alpha } => {
            sphere_product_c1_matrix(Rational::ONE - *alpha, Rational::ONE + *alpha, t)
        }
        ModelKind::BlowupCp2 => blowup_c1_matrix(t),
        ModelKind::Custom => return Err(QhError::UnsupportedModel(td.name.clone())),
    };
    Ok(eigenvalues(m))
}

/// Compares the `c₁` spectrum with the critical values of the default
/// potential at its interior critical points.
pub fn c1_eigen_check(td: &ToricData, t: f64, seed: u64) -> Result<C1Check, QhError> {
    let po = default_potential(td)?;
    let points = solve_critical(&po, &SolverConfig::with_seed(seed))?;
    c1_compare(&po, &points, t)
}

/// As [`c1_eigen_check`] for already computed critical points of `po`.
/// Bulk-deformed potentials are rejected, since the presentations above
/// describe the undeformed product.
pub fn c1_compare(po: &PotentialFunction, points: &[CriticalPoint], t: f64) -> Result<C1Check, QhError> {
    let td = po.toric.as_ref().ok_or(QhError::NoToricData)?;
    if po.kind == PotentialKind::Custom || po.bulk.iter().any(|b| b.w.norm() > 0.0) {
        return Err(QhError::UnsupportedModel(format!("{} with deformed potential", td.name)));
    }
    let eigenvalues_qh = qh_eigenvalues(td, t)?;
    let interior: Vec<_> = points.iter().filter(|p| p.interior).collect();
    if interior.iter().any(|p| !p.nondegenerate) {
        return Err(QhError::NotMorse);
    }
    let abs = po.absolute();
    let critical_values = interior
        .iter()
        .map(|p| {
            let y = point_at(po, p, t)?;
            Ok(abs.eval(&y, t)?)
        })
        .collect::<Result<Vec<_>, QhError>>()?;
    let residual = multiset_residual(&eigenvalues_qh, &critical_values);
    Ok(C1Check {
        t,
        matched: residual <= C1_TOL,
        residual,
        eigenvalues_qh,
        critical_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn cp2_presentation() {
        let td = ToricData::projective_space(2).unwrap();
        let p = qsr_relations(&td).unwrap();
        assert_eq!(p.qsr_strings(), vec!["Z1*Z2*Z3 - T^(1/1)"]);
        assert_eq!(p.linear, vec![vec![1, 0, -1], vec![0, 1, -1]]);
        assert_eq!(p.linear_strings(), vec!["Z1 - Z3 = 0", "Z2 - Z3 = 0"]);
    }

    #[test]
    fn cp1_presentation() {
        let td = ToricData::projective_space(1).unwrap();
        let p = qsr_relations(&td).unwrap();
        assert_eq!(p.qsr_strings(), vec!["Z1*Z2 - T^(1/1)"]);
        assert_eq!(p.linear, vec![vec![1, -1]]);
    }

    #[test]
    fn square_presentation() {
        let td = ToricData::sphere_product(q(0, 1)).unwrap();
        let p = qsr_relations(&td).unwrap();
        let mut rel = p.qsr_strings();
        rel.sort();
        assert_eq!(rel, vec!["Z1*Z3 - T^(1/1)", "Z2*Z4 - T^(1/1)"]);
    }

    #[test]
    fn multiset_matching() {
        let a = [c(1.0), c(-1.0), Complex64::new(0.0, 2.0)];
        let b = [Complex64::new(0.0, 2.0), c(1.0), c(-1.0)];
        assert_eq!(multiset_residual(&a, &b), 0.0);
        assert_eq!(multiset_residual(&a, &b[..2]), f64::INFINITY);
        assert!(multiset_residual(&[c(1.0), c(1.0)], &[c(1.0), c(-1.0)]) > 0.5);
    }

    #[test]
    fn cpn_spectrum_is_roots() {
        let t: f64 = 0.1;
        let ev = eigenvalues(cpn_c1_matrix(2, t));
        for e in ev {
            assert!(((e / 3.0).powi(3) - t).norm() < 1e-12);
        }
    }

    #[test]
    fn blowup_operators_commute() {
        let (z1, z2) = blowup_multiplication(0.07);
        let d = &z1 * &z2 - &z2 * &z1;
        assert!(d.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn blowup_bases_agree() {
        let t = 0.05;
        let r = multiset_residual(&eigenvalues(blowup_c1_matrix(t)), &eigenvalues(blowup_c1_matrix_alt(t)));
        assert!(r < 1e-12);
    }
}
