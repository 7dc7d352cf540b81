//! Critical points of a potential function: multistart Newton at numeric
//! `t`, continuation in `log t`, valuation recovery, interior and
//! nondegeneracy classification, and `T`-adic lifting.
//!
//! Sample coordinates are absolute (`yᵢ = T^{uᵢ} y(u)ᵢ` with `u` the
//! potential's basepoint), so valuations live in the same space as the
//! moment polytope. Lifted series are in the potential's own coordinates.

mod lift;
mod newton;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::novikov::NovikovSeries;
use crate::potential::{NumericPoly, PotentialError, PotentialFunction};
use crate::rational::{q, Rational};

pub use lift::lift_tadic;
use newton::{newton, relative_residual, track, SeriesPoly};

/// `t` values, below the user samples, along which valuations are fitted.
pub const DEFAULT_LADDER: [f64; 11] = [
    1e-10, 1e-15, 1e-20, 1e-25, 1e-30, 1e-35, 1e-40, 1e-45, 1e-50, 1e-55, 1e-60,
];
/// The ladder stops once the row-scaled Hessian determinant falls below this.
const LADDER_CONDITION: f64 = 1e-10;
/// Ladder points used in the slope fit.
const FIT_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CritError {
    #[error("valuation of coordinate {coord} of point {point} is unstable (slope {slope}, residual {residual:.3e}); raise starts or add samples")]
    ValuationUnstable {
        point: usize,
        coord: usize,
        slope: f64,
        residual: f64,
    },
    #[error("continuation lost track of a solution near t = {t:.3e}")]
    TrackingLost { t: f64 },
    #[error("solution count differs between seeds ({first} vs {second})")]
    Underresolved { first: usize, second: usize },
    #[error("leading-order system is degenerate at this point")]
    DegenerateLeading,
    #[error("order {order} unreachable: {reason}")]
    OrderUnreachable { order: Rational, reason: String },
    #[error("potential is not Morse; {lower_bound} is only a lower bound")]
    NotMorse { lower_bound: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub t_samples: Vec<f64>,
    /// Defaults to 60 times the expected count.
    pub starts: Option<usize>,
    pub grad_tol: f64,
    pub dedupe_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub val_denom_bound: i64,
    /// Required for potentials without toric data.
    pub expected_count: Option<usize>,
    pub interior_eps: Rational,
    pub ladder: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            t_samples: vec![0.05, 0.1, 0.2],
            starts: None,
            grad_tol: 1e-12,
            dedupe_tol: 1e-6,
            max_iter: 200,
            seed: 0,
            val_denom_bound: 60,
            expected_count: None,
            interior_eps: q(1, 1_000_000),
            ladder: DEFAULT_LADDER.to_vec(),
        }
    }
}

impl SolverConfig {
    pub fn with_seed(seed: u64) -> Self {
        SolverConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CritError> {
        let bad = |m: &str| Err(CritError::InvalidConfig(m.to_string()));
        if self.t_samples.len() < 2 {
            return bad("need at least two t samples");
        }
        if self.t_samples.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("t samples must lie in (0, 1)");
        }
        if self.t_samples.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t samples must be strictly increasing");
        }
        if !(self.grad_tol > 0.0 && self.dedupe_tol > 0.0 && self.interior_eps.is_positive()) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 || self.starts == Some(0) || self.val_denom_bound < 1 {
            return bad("iteration and start counts must be positive");
        }
        if self.ladder.len() < 2 {
            return bad("need at least two ladder values");
        }
        if self.ladder.iter().any(|&t| !(t > 0.0 && t < self.t_samples[0])) {
            return bad("ladder values must lie below the smallest sample");
        }
        if self.ladder.windows(2).any(|w| w[0] <= w[1]) {
            return bad("ladder must be strictly decreasing");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub t: f64,
    /// Absolute coordinates.
    pub y: Vec<Complex64>,
    pub hess_det: Complex64,
    pub crit_value: Complex64,
    /// Gradient sup norm over the largest term magnitude.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    /// One entry per configured `t`, in increasing `t`.
    pub samples: Vec<PointSample>,
    pub valuation: Vec<Rational>,
    /// Estimate of `lim yᵢ / t^{valᵢ}`.
    pub leading: Vec<Complex64>,
    pub interior: bool,
    pub nondegenerate: bool,
    /// 1 for nondegenerate points, `1 + corank` of the Hessian otherwise.
    pub multiplicity: usize,
    pub lifted: Option<Vec<NovikovSeries>>,
}

impl CriticalPoint {
    pub fn sample(&self, t: f64) -> Option<&PointSample> {
        self.samples.iter().find(|s| (s.t - t).abs() <= 1e-14 * t)
    }

    /// The sample at the largest `t`.
    pub fn reference(&self) -> &PointSample {
        self.samples.last().expect("critical point without samples")
    }
}

/// Absolute coordinates of `point` at any `t ∈ (0, 1)`, continuing from the
/// nearest stored sample when `t` was not sampled.
pub fn point_at(po: &PotentialFunction, point: &CriticalPoint, t: f64) -> Result<Vec<Complex64>, CritError> {
    if !(t > 0.0 && t < 1.0) {
        return Err(PotentialError::OutOfRange(t).into());
    }
    if let Some(s) = point.sample(t) {
        return Ok(s.y.clone());
    }
    let near = point
        .samples
        .iter()
        .min_by(|a, b| (a.t.ln() - t.ln()).abs().total_cmp(&(b.t.ln() - t.ln()).abs()))
        .expect("critical point without samples");
    let sp = SeriesPoly::new(&po.absolute());
    let x0 = log_coords(&near.y);
    let tol = if point.nondegenerate { 1e-12 } else { 1e-8 };
    let x = track(&sp, &x0, near.t.ln(), t.ln(), tol, 1.0).map_err(|t| CritError::TrackingLost { t })?;
    Ok(x.iter().map(|v| v.exp()).collect())
}

/// The same point in the potential's own coordinates `y(u)`.
pub fn local_point_at(po: &PotentialFunction, point: &CriticalPoint, t: f64) -> Result<Vec<Complex64>, CritError> {
    Ok(po.to_local(&point_at(po, point, t)?, t))
}

fn log_coords(y: &[Complex64]) -> Vec<Complex64> {
    y.iter().map(|v| v.ln()).collect()
}

fn expected_count(po: &PotentialFunction, cfg: &SolverConfig) -> Result<usize, CritError> {
    cfg.expected_count
        .or_else(|| po.toric.as_ref().map(|td| td.betti_rank()))
        .ok_or_else(|| CritError::InvalidConfig("expected count required without toric data".into()))
}

fn start_box(po: &PotentialFunction) -> Vec<(f64, f64)> {
    match &po.toric {
        Some(td) => td.bounding_box(),
        None => vec![(-1.0, 2.0); po.dim()],
    }
}

/// Relative size below which `det H` counts as zero. Double roots are only
/// resolved to about `√ε` in double precision, so their determinants sit
/// near 1e-8 of the term scale.
pub const DEGENERACY_TOL: f64 = 1e-6;

/// `|det H| / Πᵢ sᵢ` with `sᵢ` the row scales of the potential at `x`.
fn scaled_det(p: &NumericPoly, x: &[Complex64]) -> f64 {
    let s: f64 = p.row_scales(x).iter().product();
    p.hessian(x).determinant().norm() / s
}

/// Corank of the row-scaled Hessian.
fn corank(p: &NumericPoly, x: &[Complex64]) -> usize {
    let s = p.row_scales(x);
    let mut h = p.hessian(x);
    for i in 0..h.nrows() {
        for j in 0..h.ncols() {
            h[(i, j)] /= s[i];
        }
    }
    let sv = h.svd(false, false).singular_values;
    sv.iter().filter(|&&v| v <= 1e-3).count()
}

fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).norm() < tol * u.norm())
}

/// Principal argument with the branch cut folded onto `+π`.
fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI + 1e-7 {
        PI
    } else {
        a
    }
}

/// Newton until the residual stops decreasing, so that multiple roots are
/// resolved as far as double precision allows.
fn polish(p: &NumericPoly, x: Vec<Complex64>) -> Vec<Complex64> {
    newton(p, &x, 0.0, 100).x
}

/// Sort key quantized so that round-off cannot reorder points.
fn order_key(p: &CriticalPoint) -> (Vec<Rational>, Vec<(i64, i64)>) {
    let y = &p.reference().y;
    let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let quant = |v: f64| (v * 1e6).round() as i64;
    (
        p.valuation.clone(),
        y.iter()
            .map(|&v| (quant(principal_arg(v)), quant(v.norm() / scale)))
            .collect(),
    )
}

/// Least-squares slope of `log|yᵢ|` against `log t`.
fn fit_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ls: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ls.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ls).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// All critical points found by the multistart pipeline.
pub fn solve_critical(po: &PotentialFunction, cfg: &SolverConfig) -> Result<Vec<CriticalPoint>, CritError> {
    cfg.validate()?;
    let n = po.dim();
    let expected = expected_count(po, cfg)?;
    let starts = cfg.starts.unwrap_or(60 * expected.max(1));
    let sp = SeriesPoly::new(&po.absolute());
    let t_ref = *cfg.t_samples.last().expect("validated");
    let s_ref = t_ref.ln();
    let p_ref = sp.at(s_ref);

    let bbox = start_box(po);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial: Vec<Vec<Complex64>> = (0..starts)
        .map(|_| {
            bbox.iter()
                .map(|&(lo, hi)| {
                    let u = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                    Complex64::new(u * s_ref, rng.gen_range(0.0..2.0 * PI))
                })
                .collect()
        })
        .collect();
    let solved: Vec<Option<Vec<Complex64>>> = initial
        .par_iter()
        .map(|x0| {
            let out = newton(&p_ref, x0, cfg.grad_tol, cfg.max_iter);
            out.converged.then(|| polish(&p_ref, out.x))
        })
        .collect();

    let mut roots: Vec<Vec<Complex64>> = Vec::new();
    for x in solved.into_iter().flatten() {
        let y: Vec<Complex64> = x.iter().map(|v| v.exp()).collect();
        if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite() || v.norm() == 0.0) {
            continue;
        }
        let dup = roots
            .iter()
            .any(|r| close(&r.iter().map(|v| v.exp()).collect::<Vec<_>>(), &y, cfg.dedupe_tol));
        if !dup {
            roots.push(x);
        }
    }

    // Degenerate roots are found as loose clusters; merge them.
    let degenerate: Vec<bool> = roots
        .iter()
        .map(|x| scaled_det(&p_ref, x) <= DEGENERACY_TOL)
        .collect();
    let mut merged: Vec<(Vec<Complex64>, bool)> = Vec::new();
    for (x, deg) in roots.into_iter().zip(degenerate) {
        let y: Vec<Complex64> = x.iter().map(|v| v.exp()).collect();
        let hit = merged.iter().any(|(r, rdeg)| {
            (deg || *rdeg) && close(&r.iter().map(|v| v.exp()).collect::<Vec<_>>(), &y, 1e-4)
        });
        if !hit {
            merged.push((x, deg));
        }
    }

    let tracked: Vec<Result<CriticalPoint, CritError>> = merged
        .par_iter()
        .map(|(x, deg)| build_point(po, &sp, cfg, x, *deg, n))
        .collect();
    let mut points = Vec::with_capacity(tracked.len());
    for (idx, p) in tracked.into_iter().enumerate() {
        points.push(p.map_err(|e| match e {
            CritError::ValuationUnstable {
                coord, slope, residual, ..
            } => CritError::ValuationUnstable {
                point: idx + 1,
                coord,
                slope,
                residual,
            },
            other => other,
        })?);
    }
    points.sort_by_cached_key(order_key);
    Ok(points)
}

fn build_point(
    po: &PotentialFunction,
    sp: &SeriesPoly,
    cfg: &SolverConfig,
    x_ref: &[Complex64],
    degenerate: bool,
    n: usize,
) -> Result<CriticalPoint, CritError> {
    let tol = if degenerate { cfg.grad_tol.max(1e-8) } else { cfg.grad_tol };
    let lost = |t| CritError::TrackingLost { t };

    // Walk downward from the reference sample through every sample, each
    // leg warm-started from the previous one.
    let schedule: Vec<f64> = cfg.t_samples.iter().rev().cloned().collect();
    let mut xs: Vec<Vec<Complex64>> = vec![x_ref.to_vec()];
    for w in schedule.windows(2) {
        let prev = xs.last().expect("nonempty");
        let next = track(sp, prev, w[0].ln(), w[1].ln(), tol, 4.0).map_err(lost)?;
        xs.push(next);
    }

    let k = cfg.t_samples.len();
    let mut samples = Vec::with_capacity(k);
    let mut nondegenerate = !degenerate;
    let mut mult = 1;
    for (x, &t) in xs.iter().zip(&schedule).rev() {
        let p = sp.at(t.ln());
        let x = &polish(&p, x.clone());
        let h = p.hessian(x);
        if scaled_det(&p, x) <= DEGENERACY_TOL {
            nondegenerate = false;
            mult = mult.max(1 + corank(&p, x));
        }
        samples.push(PointSample {
            t,
            y: x.iter().map(|v| v.exp()).collect(),
            hess_det: h.determinant(),
            crit_value: p.value(x),
            residual: relative_residual(&p, x),
        });
    }
    if !nondegenerate {
        mult = mult.max(2);
    }

    // Continue down the ladder while the point stays well conditioned, and
    // fit valuations on the deepest stretch reached (samples included).
    let mut ladder_t: Vec<f64> = schedule.clone();
    let mut ladder_x: Vec<Vec<Complex64>> = xs.clone();
    let mut prev = (schedule[k - 1], xs[k - 1].clone());
    for &t in &cfg.ladder {
        let Ok(x) = track(sp, &prev.1, prev.0.ln(), t.ln(), tol, 4.0) else {
            break;
        };
        if nondegenerate && scaled_det(&sp.at(t.ln()), &x) <= LADDER_CONDITION {
            break;
        }
        ladder_t.push(t);
        ladder_x.push(x.clone());
        prev = (t, x);
    }
    let from = ladder_t.len().saturating_sub(FIT_POINTS);
    let (fit_t, fit_x) = (&ladder_t[from..], &ladder_x[from..]);
    let mut valuation = Vec::with_capacity(n);
    for i in 0..n {
        let mags: Vec<f64> = fit_x.iter().map(|x| x[i].re.exp()).collect();
        let slope = fit_slope(fit_t, &mags);
        let r = Rational::approximate(slope, cfg.val_denom_bound);
        let residual = r.map_or(f64::INFINITY, |r| (slope - r.to_f64()).abs());
        match r {
            Some(r) if residual < 1e-3 => valuation.push(r),
            _ => {
                return Err(CritError::ValuationUnstable {
                    point: 0,
                    coord: i + 1,
                    slope,
                    residual,
                })
            }
        }
    }
    let t_deep = *fit_t.last().expect("nonempty");
    let x_deep = fit_x.last().expect("nonempty");
    let leading = x_deep
        .iter()
        .zip(&valuation)
        .map(|(x, v)| (x - Complex64::new(v.to_f64() * t_deep.ln(), 0.0)).exp())
        .collect();
    let interior = match &po.toric {
        Some(td) => td
            .interior_test(&valuation, cfg.interior_eps)
            .map_err(PotentialError::from)?,
        None => true,
    };
    Ok(CriticalPoint {
        samples,
        valuation,
        leading,
        interior,
        nondegenerate,
        multiplicity: mult,
        lifted: None,
    })
}

/// Runs the solver with `cfg.seed` and with `alt_seed`, failing with
/// `Underresolved` if the two runs disagree.
pub fn solve_critical_checked(
    po: &PotentialFunction,
    cfg: &SolverConfig,
    alt_seed: u64,
) -> Result<Vec<CriticalPoint>, CritError> {
    let first = solve_critical(po, cfg)?;
    let second = solve_critical(
        po,
        &SolverConfig {
            seed: alt_seed,
            ..cfg.clone()
        },
    )?;
    if !same_points(&first, &second, 1e-8) {
        return Err(CritError::Underresolved {
            first: first.len(),
            second: second.len(),
        });
    }
    Ok(first)
}

/// Same count, valuations and sample coordinates within `tol` relative.
pub fn same_points(a: &[CriticalPoint], b: &[CriticalPoint], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(p, r)| {
            p.valuation == r.valuation
                && p.samples.len() == r.samples.len()
                && p.samples.iter().zip(&r.samples).all(|(s, z)| {
                    s.t == z.t && s.y.iter().zip(&z.y).all(|(u, v)| (u - v).norm() <= tol * u.norm().max(v.norm()))
                })
        })
}

/// Number of interior critical points, the rank of the Jacobian ring in
/// the Morse case.
pub fn jacobian_rank(points: &[CriticalPoint]) -> Result<usize, CritError> {
    let interior: Vec<&CriticalPoint> = points.iter().filter(|p| p.interior).collect();
    if interior.iter().any(|p| !p.nondegenerate) {
        return Err(CritError::NotMorse {
            lower_bound: interior.len(),
        });
    }
    Ok(interior.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::ToricData;
    use crate::potential::{boundary_example, custom_potential, default_potential};

    fn cfg() -> SolverConfig {
        SolverConfig::with_seed(11)
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        let mut c = cfg();
        c.t_samples = vec![0.2, 0.1];
        assert!(matches!(c.validate(), Err(CritError::InvalidConfig(_))));
        c.t_samples = vec![0.1];
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.grad_tol = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn cp2_roots_of_unity() {
        let td = ToricData::projective_space(2).unwrap();
        let po = default_potential(&td).unwrap();
        let pts = solve_critical(&po, &cfg()).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert_eq!(p.valuation, vec![q(1, 3), q(1, 3)]);
            assert!(p.interior && p.nondegenerate);
            for s in &p.samples {
                let r = s.t.powf(1.0 / 3.0);
                let ph = s.y[0] / r;
                assert!((ph.powi(3) - 1.0).norm() < 1e-9);
                assert!((s.y[0] - s.y[1]).norm() < 1e-9 * r);
            }
        }
        assert_eq!(jacobian_rank(&pts).unwrap(), 3);
    }

    #[test]
    fn boundary_point_is_excluded() {
        let po = boundary_example(Complex64::new(1.0, 0.0));
        let pts = solve_critical(
            &po,
            &SolverConfig {
                expected_count: Some(4),
                ..cfg()
            },
        )
        .unwrap();
        assert_eq!(pts.len(), 4);
        let outside: Vec<_> = pts.iter().filter(|p| !p.interior).collect();
        assert_eq!(outside.len(), 1);
        assert_eq!(outside[0].valuation, vec![q(0, 1), q(0, 1)]);
        assert_eq!(jacobian_rank(&pts).unwrap(), 3);
    }

    #[test]
    fn double_root_is_degenerate() {
        // x-gradient y³ − 2y² + y = y(y − 1)²
        let c = |v: f64| NovikovSeries::constant(Complex64::new(v, 0.0));
        let po = custom_potential(1, vec![(vec![3], c(1.0 / 3.0)), (vec![2], c(-1.0)), (vec![1], c(1.0))], None).unwrap();
        let pts = solve_critical(
            &po,
            &SolverConfig {
                expected_count: Some(1),
                ..cfg()
            },
        )
        .unwrap();
        assert_eq!(pts.len(), 1);
        assert!(!pts[0].nondegenerate);
        assert_eq!(pts[0].multiplicity, 2);
        assert_eq!(pts[0].valuation, vec![q(0, 1)]);
        assert!(matches!(
            jacobian_rank(&pts),
            Err(CritError::NotMorse { lower_bound: 1 })
        ));
    }

    #[test]
    fn seeds_agree() {
        let td = ToricData::blowup_cp2().unwrap();
        let po = default_potential(&td).unwrap();
        let pts = solve_critical_checked(&po, &cfg(), 99).unwrap();
        assert_eq!(pts.len(), 4);
    }

    #[test]
    fn custom_without_count_is_rejected() {
        let po = custom_potential(1, vec![(vec![1], NovikovSeries::one())], None).unwrap();
        assert!(matches!(
            solve_critical(&po, &cfg()),
            Err(CritError::InvalidConfig(_))
        ));
    }
}
