//! Numeric Newton iteration and `log t` continuation for the gradient
//! system `∇ₓ 𝔓𝔒(eˣ) = 0`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::potential::{LaurentPolynomial, NumericPoly};

/// Largest Newton step (sup norm, in `x`) taken in one iteration.
const MAX_STEP: f64 = 2.0;
/// Largest continuation step in `s = log t`.
const MAX_DS: f64 = 4.0;
const MIN_DS: f64 = 1e-7;

/// A polynomial whose coefficients are kept as `(exponent, coefficient)`
/// lists so they can be evaluated, and differentiated, at `t = eˢ`.
#[derive(Debug, Clone)]
pub(crate) struct SeriesPoly {
    n: usize,
    exps: Vec<Vec<i64>>,
    coeffs: Vec<Vec<(f64, Complex64)>>,
}

impl SeriesPoly {
    pub(crate) fn new(p: &LaurentPolynomial) -> Self {
        let mut exps = Vec::new();
        let mut coeffs = Vec::new();
        for (k, c) in p.terms() {
            exps.push(k.clone());
            coeffs.push(c.terms().iter().map(|(e, a)| (e.to_f64(), *a)).collect());
        }
        SeriesPoly {
            n: p.dim(),
            exps,
            coeffs,
        }
    }

    pub(crate) fn at(&self, s: f64) -> NumericPoly {
        self.build(s, false)
    }

    /// Coefficients replaced by their `s`-derivatives.
    fn d_ds(&self, s: f64) -> NumericPoly {
        self.build(s, true)
    }

    fn build(&self, s: f64, derivative: bool) -> NumericPoly {
        let coeffs = self
            .coeffs
            .iter()
            .map(|terms| {
                terms
                    .iter()
                    .map(|&(e, a)| {
                        let v = a * (e * s).exp();
                        if derivative {
                            v * e
                        } else {
                            v
                        }
                    })
                    .sum()
            })
            .collect();
        NumericPoly {
            n: self.n,
            exps: self.exps.clone(),
            coeffs,
        }
    }
}

pub(crate) fn relative_residual(p: &NumericPoly, x: &[Complex64]) -> f64 {
    let g = p.gradient(x);
    let scale = p.scale(x);
    let gmax = g.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale > 0.0 && scale.is_finite() {
        gmax / scale
    } else {
        f64::INFINITY
    }
}

/// Largest `|∂ᵢ p| / sᵢ` with `sᵢ` the row scale of coordinate `i`. This is
/// never larger than [`relative_residual`], and stays meaningful when the
/// coordinates live at very different orders of `t`.
pub(crate) fn row_residual(p: &NumericPoly, x: &[Complex64]) -> f64 {
    let g = p.gradient(x);
    let s = p.row_scales(x);
    let mut worst: f64 = 0.0;
    for (gi, si) in g.iter().zip(&s) {
        if !(gi.re.is_finite() && gi.im.is_finite()) {
            return f64::INFINITY;
        }
        if *si > 0.0 && si.is_finite() {
            worst = worst.max(gi.norm() / si);
        } else if gi.norm() > 0.0 || !si.is_finite() {
            return f64::INFINITY;
        }
    }
    if worst.is_finite() {
        worst
    } else {
        f64::INFINITY
    }
}

/// Solves `H d = rhs`, falling back to a Levenberg–Marquardt step when `H`
/// is numerically singular.
pub(crate) fn solve_step(h: &DMatrix<Complex64>, rhs: &DVector<Complex64>) -> DVector<Complex64> {
    let hmax = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if let Some(d) = h.clone().lu().solve(rhs) {
        if d.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            let back = h * &d - rhs;
            let rn = rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
            if back.iter().all(|v| v.norm() <= 1e-6 * rn.max(1e-300)) {
                return d;
            }
        }
    }
    let hh = h.adjoint();
    let mu = (1e-10 * hmax * hmax).max(1e-300);
    let a = &hh * h + DMatrix::identity(h.nrows(), h.ncols()).map(|v: Complex64| v * mu);
    a.lu()
        .solve(&(&hh * rhs))
        .unwrap_or_else(|| DVector::from_element(rhs.len(), Complex64::new(0.0, 0.0)))
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<Complex64>,
    pub converged: bool,
}

/// Damped Newton on `∇ₓ p = 0` until the row residual is below `tol`.
pub(crate) fn newton(p: &NumericPoly, x0: &[Complex64], tol: f64, max_iter: usize) -> NewtonOutcome {
    let mut x = x0.to_vec();
    let mut r = row_residual(p, &x);
    for _ in 0..max_iter {
        if !r.is_finite() {
            break;
        }
        if r <= tol {
            return NewtonOutcome { x, converged: true };
        }
        let g = DVector::from_vec(p.gradient(&x));
        let h = p.hessian(&x);
        let mut d = solve_step(&h, &(-g));
        let dmax = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if dmax > MAX_STEP {
            d *= Complex64::new(MAX_STEP / dmax, 0.0);
        }
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 1.0 / 64.0 {
            let trial: Vec<Complex64> = x.iter().zip(d.iter()).map(|(a, b)| a + b * lambda).collect();
            let rt = row_residual(p, &trial);
            if rt < r {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome {
        converged: r <= tol,
        x,
    }
}

/// Follows a solution from `s0 = log t0` to `s1 = log t1` with a tangent
/// predictor and Newton corrector. Returns the `s` where tracking failed.
pub(crate) fn track(
    poly: &SeriesPoly,
    x0: &[Complex64],
    s0: f64,
    s1: f64,
    tol: f64,
    max_ds: f64,
) -> Result<Vec<Complex64>, f64> {
    let max_ds = max_ds.min(MAX_DS);
    let mut x = x0.to_vec();
    let mut s = s0;
    let dir = (s1 - s0).signum();
    let mut h = (s1 - s0).abs().min(max_ds);
    while (s1 - s).abs() > 0.0 {
        h = h.min((s1 - s).abs());
        let p = poly.at(s);
        let dg = DVector::from_vec(poly.d_ds(s).gradient(&x));
        let tangent = solve_step(&p.hessian(&x), &(-dg));
        let s_next = if (s1 - s).abs() <= h { s1 } else { s + dir * h };
        let ds = s_next - s;
        let pred: Vec<Complex64> = x.iter().zip(tangent.iter()).map(|(a, b)| a + b * ds).collect();
        let out = newton(&poly.at(s_next), &pred, tol, 12);
        let jump = out
            .x
            .iter()
            .zip(&pred)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if out.converged && jump < 0.25 {
            x = out.x;
            s = s_next;
            h = (h * 2.0).min(max_ds);
        } else {
            h *= 0.5;
            if h < MIN_DS {
                return Err(s.exp());
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::novikov::NovikovSeries;
    use crate::rational::q;

    fn cp1_absolute() -> LaurentPolynomial {
        let mut p = LaurentPolynomial::zero(1);
        p.add_term(vec![1], NovikovSeries::one());
        p.add_term(vec![-1], NovikovSeries::t_pow(q(1, 1)));
        p
    }

    #[test]
    fn newton_finds_cp1_point() {
        let t: f64 = 0.1;
        let p = cp1_absolute().numeric(t);
        let out = newton(&p, &[Complex64::new(-1.0, 0.2)], 1e-13, 100);
        assert!(out.converged);
        let y = out.x[0].exp();
        assert!((y - Complex64::new(t.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn continuation_follows_sqrt_t() {
        let sp = SeriesPoly::new(&cp1_absolute());
        let t0: f64 = 0.2;
        let x0 = [Complex64::new(0.5 * t0.ln(), std::f64::consts::PI)];
        let t1: f64 = 1e-30;
        let x1 = track(&sp, &x0, t0.ln(), t1.ln(), 1e-13, 4.0).unwrap();
        let y = x1[0].exp();
        assert!((y + Complex64::new(t1.sqrt(), 0.0)).norm() < 1e-12 * t1.sqrt());
    }

    #[test]
    fn singular_step_falls_back() {
        let h = DMatrix::from_element(2, 2, Complex64::new(1.0, 0.0));
        let rhs = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        let d = solve_step(&h, &rhs);
        assert!(d.iter().all(|v| v.re.is_finite()));
    }
}
