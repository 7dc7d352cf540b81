//! `T`-adic Newton lifting of a numerically located critical point.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CritError, CriticalPoint};
use crate::novikov::NovikovSeries;
use crate::potential::{LaurentPolynomial, PotentialFunction};
use crate::rational::{Rational, Valuation};

const MAX_ROUNDS: usize = 64;
/// Extra precision carried through elimination.
const GUARD: i64 = 2;

fn constant_part(p: &LaurentPolynomial) -> LaurentPolynomial {
    let mut out = LaurentPolynomial::zero(p.dim());
    for (k, c) in p.terms() {
        out.add_term(k.clone(), NovikovSeries::constant(c.coefficient(Rational::ZERO)));
    }
    out
}

fn eval_const(p: &LaurentPolynomial, y: &[Complex64]) -> Complex64 {
    p.terms()
        .map(|(k, c)| {
            let m = k
                .iter()
                .zip(y)
                .fold(Complex64::new(1.0, 0.0), |acc, (&ki, yi)| acc * yi.powi(ki as i32));
            c.coefficient(Rational::ZERO) * m
        })
        .sum()
}

fn term_scale(p: &LaurentPolynomial, y: &[Complex64]) -> f64 {
    p.terms()
        .map(|(k, c)| {
            let m: f64 = k.iter().zip(y).map(|(&ki, yi)| yi.norm().powi(ki as i32)).product();
            c.coefficient(Rational::ZERO).norm() * m
        })
        .fold(0.0, f64::max)
}

/// Newton on the leading-order system in plain `Y` coordinates.
fn polish_leading(
    lead: &[LaurentPolynomial],
    jac: &[Vec<LaurentPolynomial>],
    y0: &[Complex64],
) -> Result<Vec<Complex64>, CritError> {
    let n = y0.len();
    let mut y = y0.to_vec();
    let jmat = |y: &[Complex64]| DMatrix::from_fn(n, n, |i, j| eval_const(&jac[i][j], y));
    for _ in 0..50 {
        let f: Vec<Complex64> = lead.iter().map(|p| eval_const(p, &y)).collect();
        let scale = lead.iter().map(|p| term_scale(p, &y)).fold(0.0, f64::max);
        let fmax = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if fmax <= 1e-15 * scale {
            break;
        }
        let Some(d) = jmat(&y).lu().solve(&nalgebra::DVector::from_vec(f)) else {
            return Err(CritError::DegenerateLeading);
        };
        for (yi, di) in y.iter_mut().zip(d.iter()) {
            *yi -= di;
        }
    }
    let j = jmat(&y);
    let jmax = j.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if j.determinant().norm() <= 1e-9 * jmax.powi(n as i32) {
        return Err(CritError::DegenerateLeading);
    }
    Ok(y)
}

/// Solves `A x = b` over truncated series by elimination with
/// minimal-valuation pivots.
fn solve_series(
    mut a: Vec<Vec<NovikovSeries>>,
    mut b: Vec<NovikovSeries>,
    bound: Rational,
) -> Result<Vec<NovikovSeries>, CritError> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .min_by(|&r, &s| {
                a[r][col]
                    .valuation()
                    .cmp(&a[s][col].valuation())
                    .then(
                        a[s][col].leading().map_or(0.0, |l| l.1.norm())
                            .total_cmp(&a[r][col].leading().map_or(0.0, |l| l.1.norm())),
                    )
            })
            .ok_or(CritError::DegenerateLeading)?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col]
            .inv_to(bound)
            .map_err(|_| CritError::DegenerateLeading)?;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].mul(&inv).truncate(bound);
            for c in col..n {
                let upd = f.mul(&a[col][c]);
                a[r][c] = a[r][c].sub(&upd).truncate(bound);
            }
            let upd = f.mul(&b[col]);
            b[r] = b[r].sub(&upd).truncate(bound);
        }
    }
    let mut x = vec![NovikovSeries::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = acc.sub(&a[r][c].mul(&x[c])).truncate(bound);
        }
        let inv = a[r][r].inv_to(bound).map_err(|_| CritError::DegenerateLeading)?;
        x[r] = acc.mul(&inv).truncate(bound);
    }
    Ok(x)
}

/// Series `y(T)` in the potential's own coordinates whose log-derivative
/// residuals all have valuation at least `order`.
pub fn lift_tadic(
    po: &PotentialFunction,
    point: &CriticalPoint,
    order: Rational,
) -> Result<Vec<NovikovSeries>, CritError> {
    let n = po.dim();
    let v = &point.valuation;
    let abs = po.absolute();

    // y = T^v Y; divide each equation by its leading power of T.
    let mut g = Vec::with_capacity(n);
    let mut mins = Vec::with_capacity(n);
    for i in 0..n {
        let fi = abs.log_derivative(i).twist(v);
        let Valuation::Finite(m) = fi.valuation() else {
            return Err(CritError::DegenerateLeading);
        };
        mins.push(m);
        g.push(fi.shift(-m));
    }
    let m_min = mins.iter().copied().min().expect("n ≥ 1");
    let kappa = (order - m_min).max(Rational::ONE);
    let bound = kappa + Rational::integer(GUARD);

    for gi in &g {
        for (_, c) in gi.terms() {
            if let Valuation::Finite(cut) = c.cutoff() {
                if cut < kappa {
                    return Err(CritError::OrderUnreachable {
                        order,
                        reason: format!("coefficient known only below T^({cut})"),
                    });
                }
            }
        }
    }

    let jac: Vec<Vec<LaurentPolynomial>> = g.iter().map(|gi| (0..n).map(|j| gi.partial(j)).collect()).collect();
    let lead: Vec<LaurentPolynomial> = g.iter().map(constant_part).collect();
    let lead_jac: Vec<Vec<LaurentPolynomial>> =
        jac.iter().map(|row| row.iter().map(constant_part).collect()).collect();
    let ybar = polish_leading(&lead, &lead_jac, &point.leading)?;
    let res_tol: Vec<f64> = lead.iter().map(|p| 1e-9 * term_scale(p, &ybar).max(1e-300)).collect();
    let ymax = ybar.iter().map(|v| v.norm()).fold(0.0, f64::max);

    let mut y: Vec<NovikovSeries> = ybar
        .iter()
        .map(|&c| NovikovSeries::from_terms(vec![(Rational::ZERO, c)], Valuation::Finite(bound)))
        .collect();
    let mut done = false;
    for _ in 0..MAX_ROUNDS {
        let r: Vec<NovikovSeries> = g
            .iter()
            .zip(&res_tol)
            .map(|(gi, &tol)| gi.substitute(&y).truncate(kappa).chop(tol))
            .collect();
        if r.iter().all(|ri| ri.is_zero()) {
            done = true;
            break;
        }
        let a: Vec<Vec<NovikovSeries>> = jac
            .iter()
            .map(|row| row.iter().map(|p| p.substitute(&y).truncate(bound)).collect())
            .collect();
        let rhs: Vec<NovikovSeries> = r.iter().map(|ri| ri.neg()).collect();
        let delta = solve_series(a, rhs, bound)?;
        for (yi, di) in y.iter_mut().zip(&delta) {
            *yi = yi.add(di).truncate(bound).chop(1e-12 * ymax);
        }
    }
    if !done {
        return Err(CritError::OrderUnreachable {
            order,
            reason: "Newton iteration did not converge".into(),
        });
    }
    Ok(y
        .iter()
        .zip(v.iter().zip(&po.basepoint))
        .map(|(yi, (&vi, &ui))| {
            yi.truncate(kappa)
                .shift(vi - ui)
                .with_cutoff(Valuation::Finite(kappa + vi - ui))
        })
        .collect())
}
