//! Laurent polynomials over Novikov series and the potential functions
//! built from toric data.
//!
//! A [`PotentialFunction`] stores its polynomial in the fiber coordinates
//! `y(u)ᵢ = T^{−uᵢ} yᵢ` of its basepoint `u`; [`PotentialFunction::absolute`]
//! converts to the basepoint-free coordinates `yᵢ` used by the solver.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::novikov::NovikovSeries;
use crate::polytope::{one_based, BulkEntry, ModelKind, PolytopeError, ToricData};
use crate::rational::{Rational, Valuation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("basepoint lies outside P (facets {} negative)", one_based(.0))]
    OutsideP(Vec<usize>),
    #[error("basepoint is not in the interior of P (facets {} not positive)", one_based(.0))]
    NotInterior(Vec<usize>),
    #[error("the exact F2 potential needs an F2 model, got {0}")]
    F2Required(String),
    #[error("malformed potential: {0}")]
    Malformed(String),
    #[error("coordinate y{0} is zero")]
    ZeroCoordinate(usize),
    #[error("evaluation point t = {0} outside (0, 1)")]
    OutOfRange(f64),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// `Σ_k c_k y^k` with distinct exponent vectors and nonzero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPolynomial {
    n: usize,
    terms: BTreeMap<Vec<i64>, NovikovSeries>,
}

impl LaurentPolynomial {
    pub fn zero(n: usize) -> Self {
        LaurentPolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(powers: Vec<i64>, coeff: NovikovSeries) -> Self {
        let mut p = Self::zero(powers.len());
        p.add_term(powers, coeff);
        p
    }

    /// Adds `coeff·y^powers`, merging with an existing term.
    pub fn add_term(&mut self, powers: Vec<i64>, coeff: NovikovSeries) {
        assert_eq!(powers.len(), self.n, "exponent vector length");
        let merged = match self.terms.remove(&powers) {
            Some(c) => c.add(&coeff),
            None => coeff,
        };
        if !merged.is_zero() {
            self.terms.insert(powers, merged);
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &NovikovSeries)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, powers: &[i64]) -> Option<&NovikovSeries> {
        self.terms.get(powers)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    /// `yᵢ ∂/∂yᵢ`, i.e. `∂/∂xᵢ` for `y = eˣ`.
    pub fn log_derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            if k[i] != 0 {
                out.add_term(k.clone(), c.scale(Complex64::new(k[i] as f64, 0.0)));
            }
        }
        out
    }

    /// Ordinary partial derivative `∂/∂yᵢ`.
    pub fn partial(&self, i: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            if k[i] != 0 {
                let mut k2 = k.clone();
                k2[i] -= 1;
                out.add_term(k2, c.scale(Complex64::new(k[i] as f64, 0.0)));
            }
        }
        out
    }

    /// Multiplies every coefficient by `T^e`.
    pub fn shift(&self, e: Rational) -> Self {
        LaurentPolynomial {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), c.shift(e))).collect(),
        }
    }

    /// Multiplies the coefficient of `y^k` by `T^{⟨s, k⟩}`.
    pub fn twist(&self, s: &[Rational]) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            let e: Rational = k.iter().zip(s).map(|(&ki, &si)| si * ki).sum();
            out.add_term(k.clone(), c.shift(e));
        }
        out
    }

    /// Smallest coefficient valuation.
    pub fn valuation(&self) -> Valuation {
        self.terms
            .values()
            .map(|c| c.valuation())
            .min()
            .unwrap_or(Valuation::Infinite)
    }

    /// Specializes every coefficient at `t`.
    pub fn numeric(&self, t: f64) -> NumericPoly {
        let (exps, coeffs) = self
            .terms
            .iter()
            .map(|(k, c)| (k.clone(), c.eval_unchecked(t)))
            .unzip();
        NumericPoly {
            n: self.n,
            exps,
            coeffs,
        }
    }

    /// Value at `y` and `t` with integer powers taken directly.
    pub fn eval(&self, y: &[Complex64], t: f64) -> Result<Complex64, PotentialError> {
        check_point(self.n, y, t)?;
        Ok(self
            .terms
            .iter()
            .map(|(k, c)| c.eval_unchecked(t) * monomial_value(k, y))
            .sum())
    }

    /// Symbolic substitution of series values `yᵢ = Yᵢ` (each `Yᵢ` nonzero).
    pub fn substitute(&self, values: &[NovikovSeries]) -> NovikovSeries {
        let inverses: Vec<Option<NovikovSeries>> = values.iter().map(|v| v.inv().ok()).collect();
        let mut acc = NovikovSeries::zero();
        for (k, c) in &self.terms {
            let mut term = c.clone();
            for (i, &ki) in k.iter().enumerate() {
                let base = if ki >= 0 {
                    values[i].clone()
                } else {
                    inverses[i].clone().expect("substituted coordinate must be nonzero")
                };
                term = term.mul(&base.pow(ki.unsigned_abs() as u32));
            }
            acc = acc.add(&term);
        }
        acc
    }
}

fn monomial_value(k: &[i64], y: &[Complex64]) -> Complex64 {
    k.iter()
        .zip(y)
        .fold(Complex64::new(1.0, 0.0), |acc, (&ki, yi)| acc * yi.powi(ki as i32))
}

fn check_point(n: usize, y: &[Complex64], t: f64) -> Result<(), PotentialError> {
    if y.len() != n {
        return Err(PotentialError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(PotentialError::OutOfRange(t));
    }
    if let Some(i) = y.iter().position(|yi| yi.norm() == 0.0) {
        return Err(PotentialError::ZeroCoordinate(i + 1));
    }
    Ok(())
}

impl fmt::Display for LaurentPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (idx, (k, c)) in self.terms.iter().enumerate() {
            if idx > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "[{c}]{}", monomial_string(k))?;
        }
        Ok(())
    }
}

/// `*y1^-1*y2^2`, or the empty string for the constant monomial.
pub fn monomial_string(k: &[i64]) -> String {
    let mut s = String::new();
    for (i, &ki) in k.iter().enumerate() {
        match ki {
            0 => {}
            1 => s.push_str(&format!("*y{}", i + 1)),
            _ => s.push_str(&format!("*y{}^{}", i + 1, ki)),
        }
    }
    s
}

/// A Laurent polynomial specialized at a numeric `t`, evaluated in
/// logarithmic coordinates `x = log y`.
#[derive(Debug, Clone)]
pub struct NumericPoly {
    pub n: usize,
    pub exps: Vec<Vec<i64>>,
    pub coeffs: Vec<Complex64>,
}

impl NumericPoly {
    fn term_values(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.exps
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                let s: Complex64 = k.iter().zip(x).map(|(&ki, xi)| xi * ki as f64).sum();
                c * s.exp()
            })
            .collect()
    }

    pub fn value(&self, x: &[Complex64]) -> Complex64 {
        self.term_values(x).into_iter().sum()
    }

    /// Largest term magnitude, the natural scale of the gradient residual.
    pub fn scale(&self, x: &[Complex64]) -> f64 {
        self.term_values(x).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Per coordinate, the largest magnitude among terms that involve it.
    pub fn row_scales(&self, x: &[Complex64]) -> Vec<f64> {
        let tv = self.term_values(x);
        (0..self.n)
            .map(|i| {
                self.exps
                    .iter()
                    .zip(&tv)
                    .filter(|(k, _)| k[i] != 0)
                    .map(|(_, v)| v.norm())
                    .fold(0.0, f64::max)
            })
            .collect()
    }

    pub fn gradient(&self, x: &[Complex64]) -> Vec<Complex64> {
        let tv = self.term_values(x);
        (0..self.n)
            .map(|i| {
                self.exps
                    .iter()
                    .zip(&tv)
                    .map(|(k, v)| v * k[i] as f64)
                    .sum()
            })
            .collect()
    }

    pub fn hessian(&self, x: &[Complex64]) -> DMatrix<Complex64> {
        let tv = self.term_values(x);
        let mut h = DMatrix::from_element(self.n, self.n, Complex64::new(0.0, 0.0));
        for (k, v) in self.exps.iter().zip(&tv) {
            for i in 0..self.n {
                if k[i] == 0 {
                    continue;
                }
                for j in i..self.n {
                    h[(i, j)] += v * (k[i] * k[j]) as f64;
                }
            }
        }
        for i in 0..self.n {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    LeadingOrder,
    F2Exact,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialFunction {
    /// Polytope for interior tests; optional for custom potentials.
    pub toric: Option<ToricData>,
    pub basepoint: Vec<Rational>,
    pub poly: LaurentPolynomial,
    pub kind: PotentialKind,
    pub bulk: Vec<BulkEntry>,
}

impl PotentialFunction {
    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    /// The polynomial in basepoint-free coordinates `yᵢ = T^{uᵢ} y(u)ᵢ`.
    pub fn absolute(&self) -> LaurentPolynomial {
        let neg: Vec<Rational> = self.basepoint.iter().map(|&u| -u).collect();
        self.poly.twist(&neg)
    }

    /// Converts absolute coordinates to this potential's `y(u)` at `t`.
    pub fn to_local(&self, y_abs: &[Complex64], t: f64) -> Vec<Complex64> {
        y_abs
            .iter()
            .zip(&self.basepoint)
            .map(|(y, u)| y * t.powf(-u.to_f64()))
            .collect()
    }

    /// The same function expressed around another basepoint.
    pub fn rebase(&self, u: &[Rational]) -> Result<Self, PotentialError> {
        if u.len() != self.dim() {
            return Err(PotentialError::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        let shift: Vec<Rational> = u.iter().zip(&self.basepoint).map(|(&a, &b)| a - b).collect();
        Ok(PotentialFunction {
            basepoint: u.to_vec(),
            poly: self.poly.twist(&shift),
            ..self.clone()
        })
    }
}

impl fmt::Display for PotentialFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

/// `zⱼ = T^{ℓⱼ(u)} y(u)^{vⱼ}`.
pub fn monomial_z(td: &ToricData, j: usize, u: &[Rational]) -> Result<LaurentPolynomial, PotentialError> {
    if u.len() != td.dim {
        return Err(PotentialError::DimensionMismatch {
            expected: td.dim,
            got: u.len(),
        });
    }
    let outside: Vec<usize> = (0..td.num_facets())
        .filter(|&i| td.ell(i, u).is_negative())
        .collect();
    if !outside.is_empty() {
        return Err(PotentialError::OutsideP(outside));
    }
    Ok(LaurentPolynomial::monomial(
        td.facets[j].normal.clone(),
        NovikovSeries::t_pow(td.ell(j, u)),
    ))
}

/// Leading-order `Σⱼ e^{wⱼ} zⱼ`, or the exact F₂ potential whose fourth
/// term carries the extra factor `(1 + T^{2α})`.
pub fn build_potential(
    td: &ToricData,
    u: &[Rational],
    bulk: &[BulkEntry],
    kind: PotentialKind,
) -> Result<PotentialFunction, PotentialError> {
    if u.len() != td.dim {
        return Err(PotentialError::DimensionMismatch {
            expected: td.dim,
            got: u.len(),
        });
    }
    let not_interior: Vec<usize> = (0..td.num_facets())
        .filter(|&j| !td.ell(j, u).is_positive())
        .collect();
    if !not_interior.is_empty() {
        return Err(PotentialError::NotInterior(not_interior));
    }
    let mut w = vec![Complex64::new(0.0, 0.0); td.num_facets()];
    for b in bulk {
        if b.facet >= td.num_facets() {
            return Err(PotentialError::Malformed(format!("bulk facet {} out of range", b.facet + 1)));
        }
        w[b.facet] += b.w;
    }
    let f2_alpha = match (kind, td.kind) {
        (PotentialKind::F2Exact, ModelKind::Hirzebruch { alpha }) => Some(alpha),
        (PotentialKind::F2Exact, _) => return Err(PotentialError::F2Required(td.name.clone())),
        (PotentialKind::Custom, _) => {
            return Err(PotentialError::Malformed("use custom_potential for custom input".into()))
        }
        _ => None,
    };
    let mut poly = LaurentPolynomial::zero(td.dim);
    for j in 0..td.num_facets() {
        let z = monomial_z(td, j, u)?;
        let mut coeff = NovikovSeries::t_pow(td.ell(j, u)).scale(w[j].exp());
        if let (Some(alpha), 3) = (f2_alpha, j) {
            let correction = NovikovSeries::one().add(&NovikovSeries::t_pow(alpha * 2));
            coeff = coeff.mul(&correction);
        }
        debug_assert_eq!(z.num_terms(), 1);
        poly.add_term(td.facets[j].normal.clone(), coeff);
    }
    Ok(PotentialFunction {
        toric: Some(td.clone()),
        basepoint: u.to_vec(),
        poly,
        kind: if f2_alpha.is_some() {
            PotentialKind::F2Exact
        } else {
            PotentialKind::LeadingOrder
        },
        bulk: bulk.to_vec(),
    })
}

/// The model's own potential at its balanced point with its declared bulk:
/// exact for F₂, leading order (exact in the Fano case) otherwise.
pub fn default_potential(td: &ToricData) -> Result<PotentialFunction, PotentialError> {
    let kind = match td.kind {
        ModelKind::Hirzebruch { .. } => PotentialKind::F2Exact,
        _ => PotentialKind::LeadingOrder,
    };
    build_potential(td, &td.balanced_point(), &td.bulk, kind)
}

/// A hand-written potential in absolute coordinates. `toric`, when given,
/// is only used to flag critical points whose valuation leaves `Int P`.
pub fn custom_potential(
    n: usize,
    terms: Vec<(Vec<i64>, NovikovSeries)>,
    toric: Option<ToricData>,
) -> Result<PotentialFunction, PotentialError> {
    if n == 0 {
        return Err(PotentialError::Malformed("dimension must be positive".into()));
    }
    if let Some(td) = &toric {
        if td.dim != n {
            return Err(PotentialError::Malformed(format!(
                "attached model has dimension {}, potential has {n}",
                td.dim
            )));
        }
    }
    let mut poly = LaurentPolynomial::zero(n);
    for (k, c) in terms {
        if k.len() != n {
            return Err(PotentialError::Malformed(format!(
                "exponent vector {k:?} has length {}, expected {n}",
                k.len()
            )));
        }
        poly.add_term(k, c);
    }
    if poly.is_zero() {
        return Err(PotentialError::Malformed("potential has no terms".into()));
    }
    Ok(PotentialFunction {
        toric,
        basepoint: vec![Rational::ZERO; n],
        poly,
        kind: PotentialKind::Custom,
        bulk: Vec::new(),
    })
}

#[derive(Debug, Deserialize)]
struct CustomTermDoc {
    powers: Vec<i64>,
    coeff: NovikovSeries,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomDoc {
    dim: usize,
    terms: Vec<CustomTermDoc>,
    /// Built-in model name used for interior tests.
    #[serde(default)]
    toric: Option<String>,
}

/// Parses `{"dim": n, "terms": [{"powers": [..], "coeff": "<series>"}]}`
/// with an optional `"toric": "<builtin>"` for interior tests.
pub fn custom_potential_from_json(doc: &str) -> Result<PotentialFunction, PotentialError> {
    let doc: CustomDoc =
        serde_json::from_str(doc).map_err(|e| PotentialError::Malformed(e.to_string()))?;
    let toric = doc.toric.as_deref().map(ToricData::builtin).transpose()?;
    custom_potential(
        doc.dim,
        doc.terms.into_iter().map(|t| (t.powers, t.coeff)).collect(),
        toric,
    )
}

/// The CP² potential with a point-class bulk deformation,
/// `y₁ + y₂ + c·y₁y₂ + T·y₁⁻¹y₂⁻¹`, attached to `cpn(2)`. It has a critical
/// point of valuation `(0, 0)` on the boundary of P.
pub fn boundary_example(c: Complex64) -> PotentialFunction {
    let one = NovikovSeries::one();
    custom_potential(
        2,
        vec![
            (vec![1, 0], one.clone()),
            (vec![0, 1], one),
            (vec![1, 1], NovikovSeries::constant(c)),
            (vec![-1, -1], NovikovSeries::t_pow(Rational::ONE)),
        ],
        Some(ToricData::projective_space(2).expect("cpn(2)")),
    )
    .expect("boundary example")
}

/// `yᵢ ∂𝔓𝔒/∂yᵢ` for `i = 1..n`.
pub fn log_derivatives(po: &PotentialFunction) -> Vec<LaurentPolynomial> {
    (0..po.dim()).map(|i| po.poly.log_derivative(i)).collect()
}

/// Value at `y` (in the potential's own coordinates).
pub fn eval_potential(po: &PotentialFunction, y: &[Complex64], t: f64) -> Result<Complex64, PotentialError> {
    po.poly.eval(y, t)
}

/// `[yᵢ yⱼ ∂²𝔓𝔒/∂yᵢ∂yⱼ]` in logarithmic coordinates, exactly symmetric.
pub fn hessian_x(po: &PotentialFunction, y: &[Complex64], t: f64) -> Result<DMatrix<Complex64>, PotentialError> {
    check_point(po.dim(), y, t)?;
    let x: Vec<Complex64> = y.iter().map(|v| v.ln()).collect();
    Ok(po.poly.numeric(t).hessian(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn single_coeff(p: &LaurentPolynomial, k: &[i64]) -> NovikovSeries {
        p.coefficient(k).cloned().unwrap_or_else(NovikovSeries::zero)
    }

    #[test]
    fn z_monomials_cp2() {
        let td = ToricData::builtin("cpn(2)").unwrap();
        let u = [q(1, 3), q(1, 3)];
        let z3 = monomial_z(&td, 2, &u).unwrap();
        assert_eq!(single_coeff(&z3, &[-1, -1]), NovikovSeries::t_pow(q(1, 3)));
        let z1 = monomial_z(&td, 0, &u).unwrap();
        assert_eq!(single_coeff(&z1, &[1, 0]), NovikovSeries::t_pow(q(1, 3)));
        // at a vertex adjacent to facet 1 the exponent is 0
        let z = monomial_z(&td, 0, &[q(0, 1), q(1, 2)]).unwrap();
        assert_eq!(single_coeff(&z, &[1, 0]).valuation(), q(0, 1));
        assert!(matches!(
            monomial_z(&td, 0, &[q(-1, 2), q(1, 2)]),
            Err(PotentialError::OutsideP(_))
        ));
    }

    #[test]
    fn cp2_potential() {
        let td = ToricData::builtin("cpn(2)").unwrap();
        let po = default_potential(&td).unwrap();
        assert_eq!(po.kind, PotentialKind::LeadingOrder);
        for k in [[1, 0], [0, 1], [-1, -1]] {
            assert_eq!(single_coeff(&po.poly, &k), NovikovSeries::t_pow(q(1, 3)));
        }
        let abs = po.absolute();
        assert_eq!(single_coeff(&abs, &[1, 0]), NovikovSeries::one());
        assert_eq!(single_coeff(&abs, &[-1, -1]), NovikovSeries::t_pow(q(1, 1)));
    }

    #[test]
    fn bulk_factor() {
        let td = ToricData::builtin("cpn(2)").unwrap();
        let w = Complex64::new(0.7, 0.2);
        let po = build_potential(
            &td,
            &[q(1, 3), q(1, 3)],
            &[BulkEntry { facet: 0, w }],
            PotentialKind::LeadingOrder,
        )
        .unwrap();
        let c1 = single_coeff(&po.poly, &[1, 0]);
        assert_eq!(c1.valuation(), q(1, 3));
        assert!((c1.coefficient(q(1, 3)) - w.exp()).norm() < 1e-15);
        assert_eq!(single_coeff(&po.poly, &[0, 1]), NovikovSeries::t_pow(q(1, 3)));
    }

    #[test]
    fn f2_potential() {
        let td = ToricData::builtin("f2(1/4)").unwrap();
        let po = default_potential(&td).unwrap();
        assert_eq!(po.kind, PotentialKind::F2Exact);
        let t38 = NovikovSeries::t_pow(q(3, 8));
        let t58 = NovikovSeries::t_pow(q(5, 8));
        assert_eq!(single_coeff(&po.poly, &[0, 1]), t38);
        assert_eq!(single_coeff(&po.poly, &[1, 0]), t58);
        assert_eq!(single_coeff(&po.poly, &[-1, -2]), t58);
        let fourth = single_coeff(&po.poly, &[0, -1]);
        assert_eq!(fourth.terms().len(), 2);
        assert_eq!(fourth.terms()[0].0, q(3, 8));
        assert_eq!(fourth.terms()[1].0, q(7, 8));

        let cp2 = ToricData::builtin("cpn(2)").unwrap();
        assert!(matches!(
            build_potential(&cp2, &[q(1, 3), q(1, 3)], &[], PotentialKind::F2Exact),
            Err(PotentialError::F2Required(_))
        ));
        assert!(matches!(
            build_potential(&cp2, &[q(0, 1), q(1, 3)], &[], PotentialKind::LeadingOrder),
            Err(PotentialError::NotInterior(_))
        ));
    }

    #[test]
    fn custom_examples() {
        let po = boundary_example(c(1.0));
        assert_eq!(po.poly.num_terms(), 4);
        let d = log_derivatives(&po);
        // y₁∂₁ = y₁ + c·y₁y₂ − T·y₁⁻¹y₂⁻¹
        assert_eq!(d[0].num_terms(), 3);
        assert_eq!(single_coeff(&d[0], &[-1, -1]).coefficient(q(1, 1)), c(-1.0));

        let single = custom_potential(1, vec![(vec![1], NovikovSeries::one())], None).unwrap();
        assert_eq!(log_derivatives(&single)[0], single.poly);
        assert!(custom_potential(1, vec![], None).is_err());
        assert!(custom_potential(2, vec![(vec![1], NovikovSeries::one())], None).is_err());

        let json = r#"{"dim": 1, "terms": [{"powers": [1], "coeff": "T^(1/2)"},
            {"powers": [-1], "coeff": "(1,0)*T^(1/2)"}], "toric": "cpn(1)"}"#;
        let cp1 = custom_potential_from_json(json).unwrap();
        assert!(cp1.toric.is_some());
        assert!((eval_potential(&cp1, &[c(1.0)], 0.25).unwrap() - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn derivatives_cp1_cp2() {
        let cp1 = default_potential(&ToricData::builtin("cpn(1)").unwrap()).unwrap();
        let d = log_derivatives(&cp1);
        assert_eq!(single_coeff(&d[0], &[1]), NovikovSeries::t_pow(q(1, 2)));
        assert_eq!(single_coeff(&d[0], &[-1]), NovikovSeries::t_pow(q(1, 2)).neg());

        let cp2 = default_potential(&ToricData::builtin("cpn(2)").unwrap()).unwrap();
        let d = log_derivatives(&cp2);
        assert_eq!(d[0].num_terms(), 2);
        assert_eq!(single_coeff(&d[0], &[-1, -1]), NovikovSeries::t_pow(q(1, 3)).neg());
    }

    #[test]
    fn blowup_critical_equations_match_divided_form() {
        // y₁∂₁PO = 0 ⟺ 1 − y₁⁻²y₂⁻¹ − y₁⁻² = 0 after dividing by T^{1/3}y₁
        let po = default_potential(&ToricData::builtin("blowup_cp2").unwrap()).unwrap();
        let d = log_derivatives(&po);
        let y = [Complex64::new(0.7, 0.3), Complex64::new(-0.4, 1.1)];
        let t = 0.1;
        let lhs = d[0].eval(&y, t).unwrap() / (t.powf(1.0 / 3.0) * y[0]);
        let rhs = c(1.0) - (y[0] * y[0] * y[1]).inv() - (y[0] * y[0]).inv();
        assert!((lhs - rhs).norm() < 1e-13);
        let lhs2 = d[1].eval(&y, t).unwrap() / (t.powf(1.0 / 3.0) * y[1]);
        let rhs2 = c(1.0) - (y[0] * y[1] * y[1]).inv();
        assert!((lhs2 - rhs2).norm() < 1e-13);
    }

    #[test]
    fn evaluation_examples() {
        let cp1 = default_potential(&ToricData::builtin("cpn(1)").unwrap()).unwrap();
        let t = 0.09;
        assert!((eval_potential(&cp1, &[c(1.0)], t).unwrap() - c(2.0 * 0.3)).norm() < 1e-14);
        let h = hessian_x(&cp1, &[c(1.0)], t).unwrap();
        assert!((h[(0, 0)] - c(0.6)).norm() < 1e-14);

        // local coordinates at the balanced fiber: y = (ζ, ζ), ζ³ = 1
        let cp2 = default_potential(&ToricData::builtin("cpn(2)").unwrap()).unwrap();
        for k in 0..3 {
            let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            let v = eval_potential(&cp2, &[z, z], t).unwrap();
            assert!((v - z * 3.0 * t.powf(1.0 / 3.0)).norm() < 1e-13);
        }

        assert_eq!(eval_potential(&cp1, &[c(0.0)], t), Err(PotentialError::ZeroCoordinate(1)));
        assert_eq!(eval_potential(&cp1, &[c(1.0)], 1.5), Err(PotentialError::OutOfRange(1.5)));
    }

    #[test]
    fn cpn_hessians_at_critical_points() {
        let t = 0.2_f64;
        for n in 1..=3usize {
            let po = default_potential(&ToricData::projective_space(n).unwrap()).unwrap();
            for k in 0..=n {
                let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / (n + 1) as f64);
                let h = hessian_x(&po, &vec![z; n], t).unwrap();
                let s = z * t.powf(1.0 / (n + 1) as f64);
                for i in 0..n {
                    for j in 0..n {
                        let expect = s * if i == j { 2.0 } else { 1.0 };
                        assert!((h[(i, j)] - expect).norm() < 1e-13);
                    }
                }
                let det = h.determinant();
                let expect = z.powu(n as u32) * (n + 1) as f64 * t.powf(n as f64 / (n + 1) as f64);
                assert!((det - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn f2_hessian_determinants() {
        let td = ToricData::builtin("f2(1/4)").unwrap();
        let po = default_potential(&td).unwrap();
        let t = 0.1_f64;
        let ta = t.powf(0.25);
        for (prod, y2) in [(1.0, 1.0 + ta), (1.0, -(1.0 + ta)), (-1.0, 1.0 - ta), (-1.0, -(1.0 - ta))] {
            let y = [c(prod / y2), c(y2)];
            let det = hessian_x(&po, &y, t).unwrap().determinant();
            // 4T·y₁y₂: both points with y₁y₂ = 1 give +4T, the others −4T
            assert!((det - c(4.0 * t * prod)).norm() < 1e-12, "{det}");
        }
    }

    #[test]
    fn rebase_preserves_function() {
        let td = ToricData::builtin("blowup_cp2").unwrap();
        let po = default_potential(&td).unwrap();
        let other = po.rebase(&[q(1, 4), q(1, 2)]).unwrap();
        assert_eq!(po.absolute(), other.absolute());
        let t = 0.3;
        let y_abs = [Complex64::new(0.2, 0.5), Complex64::new(-0.6, 0.1)];
        let a = eval_potential(&po, &po.to_local(&y_abs, t), t).unwrap();
        let b = eval_potential(&other, &other.to_local(&y_abs, t), t).unwrap();
        assert!((a - b).norm() < 1e-13);
    }
}
