//! Deterministic reports for every command and the verification suite.
//!
//! Floats are written with 17 significant digits and rationals as `"p/q"`
//! strings, so a report parses back to the same bytes.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::critsolve::{lift_tadic, point_at, solve_critical, CritError, CriticalPoint, SolverConfig};
use crate::frobenius::{
    floer_algebra, hessian_eigenvalues, pd_check, residue_pairings, sum_formula_check, trace_z, FrobeniusError,
};
use crate::novikov::NovikovSeries;
use crate::polytope::{BulkEntry, ModelKind, PolytopeError, ToricData};
use crate::potential::{
    boundary_example, build_potential, custom_potential_from_json, monomial_string,
    PotentialError, PotentialFunction, PotentialKind,
};
use crate::qh::{c1_compare, qsr_identity_check, qsr_identity_check_with, qsr_relations, QhError, C1_TOL};
use crate::rational::{q, Rational, Valuation};

pub const SCHEMA: u32 = 1;

/// Tolerance for identities between computed and closed-form values.
pub const CHECK_TOL: f64 = 1e-8;
pub const Z_CLOSED_FORM_TOL: f64 = 1e-10;
pub const SUM_FORMULA_TOL: f64 = 1e-9;
pub const PD_TOL: f64 = 1e-7;
pub const QSR_TOL: f64 = 1e-12;
/// Residual the perturbed relations must exceed.
pub const QSR_CONTROL_MIN: f64 = 1e-3;
pub const QSR_TRIALS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Crit(#[from] CritError),
}

/// A float written with 17 significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn text(self) -> String {
        let x = self.0;
        if x.is_nan() {
            "\"NaN\"".into()
        } else if x.is_infinite() {
            if x > 0.0 { "\"Infinity\"" } else { "\"-Infinity\"" }.into()
        } else {
            format!("{x:.16e}")
        }
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawValue::from_string(self.text())
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"NaN\" or \"Infinity\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                match v {
                    "NaN" => Ok(Num(f64::NAN)),
                    "Infinity" => Ok(Num(f64::INFINITY)),
                    "-Infinity" => Ok(Num(f64::NEG_INFINITY)),
                    _ => Err(E::custom(format!("bad number {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cplx(pub Num, pub Num);

impl From<Complex64> for Cplx {
    fn from(c: Complex64) -> Self {
        Cplx(Num(c.re), Num(c.im))
    }
}

impl From<Cplx> for Complex64 {
    fn from(c: Cplx) -> Self {
        Complex64::new(c.0 .0, c.1 .0)
    }
}

fn cplx(v: &[Complex64]) -> Vec<Cplx> {
    v.iter().map(|&c| c.into()).collect()
}

fn rats(v: &[Rational]) -> Vec<String> {
    v.iter().map(|r| r.to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    /// Passes when `residual ≤ tolerance`.
    Le,
    /// Passes when `residual > tolerance`.
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub residual: Num,
    pub tolerance: Num,
    pub comparison: Comparison,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Verdict {
    pub fn le(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Verdict {
            name: name.into(),
            pass: residual <= tolerance,
            residual: Num(residual),
            tolerance: Num(tolerance),
            comparison: Comparison::Le,
            error: None,
        }
    }

    pub fn gt(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Verdict {
            pass: residual > tolerance,
            comparison: Comparison::Gt,
            ..Verdict::le(name, residual, tolerance)
        }
    }

    pub fn failed(name: impl Into<String>, error: impl fmt::Display) -> Self {
        Verdict {
            name: name.into(),
            pass: false,
            residual: Num(f64::NAN),
            tolerance: Num(0.0),
            comparison: Comparison::Le,
            error: Some(error.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkRow {
    pub facet: usize,
    pub w: Cplx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grad_tol: Num,
    pub dedupe_tol: Num,
    pub check_tol: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub t_samples: Vec<Num>,
    pub seed: u64,
    pub cutoff: Option<String>,
    pub starts: Option<usize>,
    pub basepoint: Vec<String>,
    /// 1-based facet indices.
    pub bulk: Vec<BulkRow>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetRow {
    pub normal: Vec<i64>,
    pub lambda: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoSection {
    pub dim: usize,
    pub facets: Vec<FacetRow>,
    pub vertices: Vec<Vec<String>>,
    pub betti_rank: usize,
    pub balanced_point: Vec<String>,
    pub primitive_collections: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRow {
    pub monomial: String,
    pub exponents: Vec<i64>,
    pub coefficient: String,
    pub valuation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub t: Num,
    /// Absolute coordinates.
    pub y: Vec<Cplx>,
    /// Coordinates at the potential's basepoint.
    pub y_local: Vec<Cplx>,
    pub crit_value: Cplx,
    pub hess_det: Cplx,
    pub residual: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub index: usize,
    pub valuation: Vec<String>,
    pub leading: Vec<Cplx>,
    pub interior: bool,
    pub nondegenerate: bool,
    pub multiplicity: usize,
    pub samples: Vec<SampleRow>,
    pub lifted: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRow {
    pub point: usize,
    pub t: Num,
    pub simplified: Cplx,
    pub z_based: Cplx,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZRow {
    pub point: usize,
    pub t: Num,
    pub hessian_eigenvalues: Vec<Cplx>,
    /// Brute-force trace of the Floer Clifford algebra.
    pub z: Cplx,
    /// `2ⁿ Π dᵢ`.
    pub closed_form: Cplx,
    pub hess_det: Cplx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Row {
    pub t: Num,
    pub eigenvalues_qh: Vec<Cplx>,
    pub critical_values: Vec<Cplx>,
    pub residual: Num,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QhSection {
    pub qsr_relations: Vec<String>,
    pub linear_relations: Vec<String>,
    pub qsr_residual: Option<Num>,
    pub perturbed_residual: Option<Num>,
    pub c1: Vec<C1Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub model: String,
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<InfoSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<TermRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critical_points: Option<Vec<PointRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairings: Option<Vec<PairingRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_traces: Option<Vec<ZRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qh_check: Option<QhSection>,
    pub verdicts: Vec<Verdict>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(doc: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(doc)
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Info,
    Potential,
    Critical,
    Residue,
    ZTrace,
    Qsr,
    C1Check,
    Verify,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Info,
        Command::Potential,
        Command::Critical,
        Command::Residue,
        Command::ZTrace,
        Command::Qsr,
        Command::C1Check,
        Command::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Info => "info",
            Command::Potential => "potential",
            Command::Critical => "critical",
            Command::Residue => "residue",
            Command::ZTrace => "z-trace",
            Command::Qsr => "qsr",
            Command::C1Check => "c1check",
            Command::Verify => "verify",
        }
    }
}

impl std::str::FromStr for Command {
    type Err = RunError;
    fn from_str(s: &str) -> Result<Self, RunError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| RunError::Usage(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_samples: Vec<f64>,
    pub seed: u64,
    /// Lifting order for `critical`.
    pub cutoff: Option<Rational>,
    pub starts: Option<usize>,
    pub grad_tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        let cfg = SolverConfig::default();
        RunOptions {
            t_samples: cfg.t_samples,
            seed: cfg.seed,
            cutoff: None,
            starts: None,
            grad_tol: cfg.grad_tol,
        }
    }
}

impl RunOptions {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            t_samples: self.t_samples.clone(),
            starts: self.starts,
            grad_tol: self.grad_tol,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

/// Where a model comes from: a built-in name (including
/// `boundarycrit(c)`) or a JSON document, with optional basepoint and bulk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelSpec {
    pub name: Option<String>,
    pub document: Option<String>,
    pub alpha: Option<Rational>,
    pub u: Option<Vec<Rational>>,
    /// 0-based facets.
    pub bulk: Vec<BulkEntry>,
}

/// A resolved model: display label and potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub label: String,
    pub potential: PotentialFunction,
}

fn boundary_constant(name: &str) -> Result<Option<Complex64>, RunError> {
    let Some(rest) = name.strip_prefix("boundarycrit") else {
        return Ok(None);
    };
    if rest.is_empty() {
        return Ok(Some(Complex64::new(1.0, 0.0)));
    }
    let arg = rest
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| RunError::Usage(format!("unknown model {name:?}")))?;
    let c: f64 = arg
        .trim()
        .parse()
        .map_err(|_| RunError::Usage(format!("bad constant in {name:?}")))?;
    Ok(Some(Complex64::new(c, 0.0)))
}

impl ModelSpec {
    pub fn builtin(name: &str) -> Self {
        ModelSpec {
            name: Some(name.to_string()),
            ..Default::default()
        }
    }

    pub fn resolve(&self) -> Result<Model, RunError> {
        let (toric, custom) = match (&self.name, &self.document) {
            (Some(_), Some(_)) => return Err(RunError::Usage("give either a model name or an input file".into())),
            (None, None) => return Err(RunError::Usage("a model name or an input file is required".into())),
            (Some(name), None) => {
                let mut name = name.trim().to_string();
                if let Some(alpha) = self.alpha {
                    if name.contains('(') {
                        return Err(RunError::Usage("alpha given both in the model name and as a flag".into()));
                    }
                    if !matches!(name.as_str(), "s2xs2" | "f2") {
                        return Err(RunError::Usage(format!("{name} takes no alpha")));
                    }
                    name = format!("{name}({alpha})");
                }
                match boundary_constant(&name)? {
                    Some(c) => (None, Some(boundary_example(c))),
                    None => (Some(ToricData::builtin(&name)?), None),
                }
            }
            (None, Some(doc)) => {
                if self.alpha.is_some() {
                    return Err(RunError::Usage("alpha only applies to built-in names".into()));
                }
                let v: serde_json::Value =
                    serde_json::from_str(doc).map_err(|e| RunError::Usage(format!("input is not JSON: {e}")))?;
                if v.get("facets").is_some() {
                    (Some(ToricData::from_json(doc)?), None)
                } else {
                    (None, Some(custom_potential_from_json(doc)?))
                }
            }
        };
        if let Some(po) = custom {
            if self.u.is_some() || !self.bulk.is_empty() {
                return Err(RunError::Usage("basepoint and bulk only apply to toric models".into()));
            }
            let label = match (&self.name, &po.toric) {
                (Some(n), _) => n.clone(),
                (None, Some(td)) => format!("custom on {}", td.name),
                (None, None) => "custom".into(),
            };
            return Ok(Model { label, potential: po });
        }
        let td = toric.expect("toric model");
        let mut bulk = td.bulk.clone();
        bulk.extend(self.bulk.iter().copied());
        let u = self.u.clone().unwrap_or_else(|| td.balanced_point());
        let kind = match td.kind {
            ModelKind::Hirzebruch { .. } => PotentialKind::F2Exact,
            _ => PotentialKind::LeadingOrder,
        };
        let po = build_potential(&td, &u, &bulk, kind)?;
        Ok(Model {
            label: td.name.clone(),
            potential: po,
        })
    }
}

/// Runs `command` on `model`. Computation failures become failing verdicts;
/// only malformed options are errors.
pub fn run(command: Command, model: &Model, opts: &RunOptions) -> Result<Report, RunError> {
    let cfg = opts.solver_config();
    cfg.validate()?;
    let po = &model.potential;
    let mut ctx = Ctx {
        po,
        opts,
        cfg,
        verdicts: Vec::new(),
        points: None,
    };
    let mut report = Report {
        schema: SCHEMA,
        command: command.name().into(),
        model: model.label.clone(),
        parameters: Parameters {
            t_samples: opts.t_samples.iter().map(|&t| Num(t)).collect(),
            seed: opts.seed,
            cutoff: opts.cutoff.map(|c| c.to_string()),
            starts: opts.starts,
            basepoint: rats(&po.basepoint),
            bulk: po
                .bulk
                .iter()
                .map(|b| BulkRow {
                    facet: b.facet + 1,
                    w: b.w.into(),
                })
                .collect(),
            tolerances: Tolerances {
                grad_tol: Num(ctx.cfg.grad_tol),
                dedupe_tol: Num(ctx.cfg.dedupe_tol),
                check_tol: Num(CHECK_TOL),
            },
        },
        info: None,
        potential: None,
        critical_points: None,
        pairings: None,
        z_traces: None,
        qh_check: None,
        verdicts: Vec::new(),
    };
    match command {
        Command::Info => report.info = po.toric.as_ref().map(info_section).transpose()?,
        Command::Potential => report.potential = Some(potential_rows(po)),
        Command::Critical => report.critical_points = ctx.critical_section(),
        Command::Residue => {
            report.pairings = ctx.pairings_section();
        }
        Command::ZTrace => report.z_traces = ctx.z_section(),
        Command::Qsr => report.qh_check = ctx.qh_section(false),
        Command::C1Check => report.qh_check = ctx.qh_section(true),
        Command::Verify => {
            report.potential = Some(potential_rows(po));
            report.critical_points = ctx.critical_section();
            report.pairings = ctx.pairings_section();
            report.z_traces = ctx.z_section();
            ctx.sum_formula();
            ctx.model_checks();
            if let Some(td) = po.toric.as_ref().filter(|_| po.kind != PotentialKind::Custom) {
                let with_c1 = td.kind != ModelKind::Custom;
                report.qh_check = ctx.qh_section(with_c1);
            }
        }
    }
    report.verdicts = ctx.verdicts;
    Ok(report)
}

pub fn info_section(td: &ToricData) -> Result<InfoSection, RunError> {
    let (vertices, rank) = td.vertices_and_rank();
    Ok(InfoSection {
        dim: td.dim,
        facets: td
            .facets
            .iter()
            .map(|f| FacetRow {
                normal: f.normal.clone(),
                lambda: f.lambda.to_string(),
            })
            .collect(),
        vertices: vertices.iter().map(|v| rats(v)).collect(),
        betti_rank: rank,
        balanced_point: rats(&td.balanced_point()),
        primitive_collections: td
            .primitive_collections()?
            .iter()
            .map(|c| c.relation_string())
            .collect(),
    })
}

pub fn potential_rows(po: &PotentialFunction) -> Vec<TermRow> {
    po.poly
        .terms()
        .map(|(k, c)| {
            let m = monomial_string(k);
            TermRow {
                monomial: if m.is_empty() { "1".into() } else { m.trim_start_matches('*').to_string() },
                exponents: k.clone(),
                coefficient: c.to_string(),
                valuation: match c.valuation() {
                    Valuation::Finite(v) => v.to_string(),
                    Valuation::Infinite => "inf".into(),
                },
            }
        })
        .collect()
}

/// Smallest valuation of the log-derivatives after substituting `ys`,
/// ignoring coefficients below `1e-9`.
pub fn lift_residual_valuation(po: &PotentialFunction, ys: &[NovikovSeries]) -> Valuation {
    let mut worst = Valuation::Infinite;
    for i in 0..po.dim() {
        let r = po.poly.log_derivative(i).substitute(ys).chop(1e-9);
        if let Valuation::Finite(v) = r.valuation() {
            worst = match worst {
                Valuation::Finite(w) if w <= v => Valuation::Finite(w),
                _ => Valuation::Finite(v),
            };
        }
    }
    worst
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

struct Ctx<'a> {
    po: &'a PotentialFunction,
    opts: &'a RunOptions,
    cfg: SolverConfig,
    verdicts: Vec<Verdict>,
    points: Option<Result<Vec<CriticalPoint>, CritError>>,
}

impl Ctx<'_> {
    fn points(&mut self) -> Result<&[CriticalPoint], CritError> {
        if self.points.is_none() {
            self.points = Some(solve_critical(self.po, &self.cfg));
        }
        match self.points.as_ref().expect("solved") {
            Ok(p) => Ok(p),
            Err(e) => Err(e.clone()),
        }
    }

    fn interior(&mut self) -> Option<Vec<(usize, CriticalPoint)>> {
        match self.points() {
            Ok(p) => Some(
                p.iter()
                    .enumerate()
                    .filter(|(_, p)| p.interior)
                    .map(|(i, p)| (i, p.clone()))
                    .collect(),
            ),
            Err(_) => None,
        }
    }

    fn push(&mut self, v: Verdict) {
        if !self.verdicts.iter().any(|w| w.name == v.name) {
            self.verdicts.push(v);
        }
    }

    fn critical_section(&mut self) -> Option<Vec<PointRow>> {
        let points = match self.points() {
            Ok(p) => p.to_vec(),
            Err(e) => {
                self.push(Verdict::failed("solve", e));
                return None;
            }
        };
        let interior: Vec<&CriticalPoint> = points.iter().filter(|p| p.interior).collect();
        if let Some(td) = &self.po.toric {
            let rank = td.betti_rank();
            self.push(Verdict::le("count", (interior.len() as f64 - rank as f64).abs(), 0.0));
        }
        let degenerate = interior.iter().filter(|p| !p.nondegenerate).count();
        self.push(Verdict::le("morse", degenerate as f64, 0.0));
        let worst = points
            .iter()
            .flat_map(|p| p.samples.iter().map(|s| s.residual))
            .fold(0.0, f64::max);
        self.push(Verdict::le("gradient_residual", worst, self.cfg.grad_tol));

        let mut lifted: Vec<Option<Vec<String>>> = vec![None; points.len()];
        if let Some(order) = self.opts.cutoff {
            let mut worst_gap = 0.0f64;
            let mut err = None;
            for (i, p) in points.iter().enumerate() {
                if !(p.interior && p.nondegenerate) {
                    continue;
                }
                match lift_tadic(self.po, p, order) {
                    Ok(ys) => {
                        if let Valuation::Finite(v) = lift_residual_valuation(self.po, &ys) {
                            worst_gap = worst_gap.max((order - v).to_f64());
                        }
                        lifted[i] = Some(ys.iter().map(|s| s.to_string()).collect());
                    }
                    Err(e) => err = Some(e),
                }
            }
            match err {
                Some(e) => self.push(Verdict::failed("lift_order", e)),
                None => self.push(Verdict::le("lift_order", worst_gap, 0.0)),
            }
        }

        Some(
            points
                .iter()
                .zip(lifted)
                .enumerate()
                .map(|(index, (p, lifted))| PointRow {
                    index,
                    valuation: rats(&p.valuation),
                    leading: cplx(&p.leading),
                    interior: p.interior,
                    nondegenerate: p.nondegenerate,
                    multiplicity: p.multiplicity,
                    samples: p
                        .samples
                        .iter()
                        .map(|s| SampleRow {
                            t: Num(s.t),
                            y: cplx(&s.y),
                            y_local: cplx(&self.po.to_local(&s.y, s.t)),
                            crit_value: s.crit_value.into(),
                            hess_det: s.hess_det.into(),
                            residual: Num(s.residual),
                        })
                        .collect(),
                    lifted,
                })
                .collect(),
        )
    }

    fn pairings_section(&mut self) -> Option<Vec<PairingRow>> {
        let Some(interior) = self.interior() else {
            let e = self.points().expect_err("failed solve");
            self.push(Verdict::failed("solve", e));
            return None;
        };
        let mut rows = Vec::new();
        let mut worst = 0.0f64;
        let mut failure: Option<FrobeniusError> = None;
        for &t in &self.opts.t_samples {
            for (i, p) in &interior {
                match residue_pairings(self.po, p, t) {
                    Ok(r) => {
                        worst = worst.max(rel(r.simplified, r.z_based));
                        rows.push(PairingRow {
                            point: *i,
                            t: Num(t),
                            simplified: r.simplified.into(),
                            z_based: r.z_based.into(),
                            agree: r.agree,
                        });
                    }
                    Err(e) => failure = Some(e),
                }
            }
        }
        match failure {
            Some(e) => self.push(Verdict::failed("residues_agree", e)),
            None => self.push(Verdict::le("residues_agree", worst, CHECK_TOL)),
        }
        if let Some(ModelKind::ProjectiveSpace { n }) = self.po.toric.as_ref().map(|td| td.kind) {
            if self.po.kind != PotentialKind::Custom && self.po.bulk.is_empty() {
                self.cpn_pairings(n, &interior);
            }
        }
        Some(rows)
    }

    fn cpn_pairings(&mut self, n: usize, interior: &[(usize, CriticalPoint)]) {
        let m = (n + 1) as f64;
        let mut worst = 0.0f64;
        let mut worst_pd = 0.0f64;
        let all: Vec<CriticalPoint> = interior.iter().map(|(_, p)| p.clone()).collect();
        for &t in &self.opts.t_samples {
            for (_, p) in interior {
                let y = match point_at(self.po, p, t) {
                    Ok(y) => y,
                    Err(e) => return self.push(Verdict::failed("cpn_residue_formula", e)),
                };
                let k = (y[0].arg() / (TAU / m)).round().rem_euclid(m);
                let expected = Complex64::from_polar(t.powf(-(n as f64) / m) / m, -TAU * k * n as f64 / m);
                match residue_pairings(self.po, p, t) {
                    Ok(r) => worst = worst.max(rel(r.simplified, expected)),
                    Err(e) => return self.push(Verdict::failed("cpn_residue_formula", e)),
                }
            }
            match pd_check(self.po, &all, t) {
                Ok(mat) => {
                    for l in 0..=n {
                        for lp in 0..=n {
                            let target = if l + lp == n { 1.0 } else { 0.0 };
                            worst_pd = worst_pd.max((mat[(l, lp)] - target).norm());
                        }
                    }
                }
                Err(e) => return self.push(Verdict::failed("pd_check", e)),
            }
        }
        self.push(Verdict::le("cpn_residue_formula", worst, CHECK_TOL));
        self.push(Verdict::le("pd_check", worst_pd, PD_TOL));
    }

    fn z_section(&mut self) -> Option<Vec<ZRow>> {
        let Some(interior) = self.interior() else {
            let e = self.points().expect_err("failed solve");
            self.push(Verdict::failed("solve", e));
            return None;
        };
        let mut rows = Vec::new();
        let (mut worst_closed, mut worst_det) = (0.0f64, 0.0f64);
        for &t in &self.opts.t_samples {
            for (i, p) in &interior {
                let row = (|| -> Result<ZRow, FrobeniusError> {
                    let ev = hessian_eigenvalues(self.po, p, t)?;
                    let z = trace_z(&floer_algebra(self.po, p, t)?)?;
                    let closed: Complex64 = ev.iter().map(|e| e / 2.0).product::<Complex64>() * 2f64.powi(ev.len() as i32);
                    let y = point_at(self.po, p, t)?;
                    let x: Vec<Complex64> = y.iter().map(|v| v.ln()).collect();
                    let det = self.po.absolute().numeric(t).hessian(&x).determinant();
                    Ok(ZRow {
                        point: *i,
                        t: Num(t),
                        hessian_eigenvalues: cplx(&ev),
                        z: z.into(),
                        closed_form: closed.into(),
                        hess_det: det.into(),
                    })
                })();
                match row {
                    Ok(r) => {
                        worst_closed = worst_closed.max(rel(r.z.into(), r.closed_form.into()));
                        worst_det = worst_det.max(rel(r.z.into(), r.hess_det.into()));
                        rows.push(r);
                    }
                    Err(e) => {
                        self.push(Verdict::failed("z_closed_form", e));
                        return Some(rows);
                    }
                }
            }
        }
        self.push(Verdict::le("z_closed_form", worst_closed, Z_CLOSED_FORM_TOL));
        self.push(Verdict::le("z_hessian_det", worst_det, CHECK_TOL));
        Some(rows)
    }

    /// Skipped for custom potentials, whose excluded boundary points carry
    /// part of the residue sum.
    fn sum_formula(&mut self) {
        if self.po.kind == PotentialKind::Custom {
            return;
        }
        let points = match self.points() {
            Ok(p) => p.to_vec(),
            Err(_) => return,
        };
        let mut worst = 0.0f64;
        for &t in &self.opts.t_samples {
            match sum_formula_check(self.po, &points, t) {
                Ok(r) => worst = worst.max(r),
                Err(e) => return self.push(Verdict::failed("sum_formula", e)),
            }
        }
        self.push(Verdict::le("sum_formula", worst, SUM_FORMULA_TOL));
    }

    fn qh_section(&mut self, with_c1: bool) -> Option<QhSection> {
        let Some(td) = self.po.toric.clone() else {
            self.push(Verdict::failed("qsr_identity", QhError::NoToricData));
            return None;
        };
        let pres = match qsr_relations(&td) {
            Ok(p) => p,
            Err(e) => {
                self.push(Verdict::failed("qsr_identity", e));
                return None;
            }
        };
        let mut section = QhSection {
            qsr_relations: pres.qsr_strings(),
            linear_relations: pres.linear_strings(),
            qsr_residual: None,
            perturbed_residual: None,
            c1: Vec::new(),
        };
        let seed = self.opts.seed;
        let base = self.po;
        match qsr_identity_check(base, QSR_TRIALS, seed) {
            Ok(r) => {
                section.qsr_residual = Some(Num(r));
                self.push(Verdict::le("qsr_identity", r, QSR_TOL));
            }
            Err(e) => self.push(Verdict::failed("qsr_identity", e)),
        }
        let perturbed: Vec<_> = pres
            .qsr
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.omega = c.omega + q(1, 100);
                c
            })
            .collect();
        match qsr_identity_check_with(base, &perturbed, QSR_TRIALS, seed) {
            Ok(r) => {
                section.perturbed_residual = Some(Num(r));
                self.push(Verdict::gt("qsr_negative_control", r, QSR_CONTROL_MIN));
            }
            Err(e) => self.push(Verdict::failed("qsr_negative_control", e)),
        }
        if with_c1 {
            let points = match self.points() {
                Ok(p) => p.to_vec(),
                Err(e) => {
                    self.push(Verdict::failed("c1_match", e));
                    return Some(section);
                }
            };
            for &t in &self.opts.t_samples.clone() {
                let name = format!("c1_match@t={t}");
                match c1_compare(self.po, &points, t) {
                    Ok(c) => {
                        self.push(Verdict::le(name, c.residual, C1_TOL));
                        section.c1.push(C1Row {
                            t: Num(t),
                            eigenvalues_qh: cplx(&c.eigenvalues_qh),
                            critical_values: cplx(&c.critical_values),
                            residual: Num(c.residual),
                            matched: c.matched,
                        });
                    }
                    Err(e) => self.push(Verdict::failed(name, e)),
                }
            }
        }
        Some(section)
    }

    /// Closed-form checks for the built-in families.
    fn model_checks(&mut self) {
        let Some(td) = self.po.toric.clone() else { return };
        let Ok(points) = self.points().map(|p| p.to_vec()) else { return };
        if self.po.kind == PotentialKind::Custom {
            if td.kind == (ModelKind::ProjectiveSpace { n: 2 }) {
                let outside: Vec<&CriticalPoint> = points.iter().filter(|p| !p.interior).collect();
                let at_origin = outside
                    .iter()
                    .filter(|p| p.valuation.iter().all(|v| v.is_zero()))
                    .count();
                let bad = (outside.len() as f64 - 1.0).abs() + (at_origin as f64 - 1.0).abs();
                self.push(Verdict::le("boundary_excluded", bad, 0.0));
            }
            return;
        }
        if !self.po.bulk.is_empty() {
            return;
        }
        let interior: Vec<CriticalPoint> = points.into_iter().filter(|p| p.interior).collect();
        let ts = self.opts.t_samples.clone();
        let ys = |ctx: &Self, t: f64| -> Result<Vec<Vec<Complex64>>, CritError> {
            interior.iter().map(|p| point_at(ctx.po, p, t)).collect()
        };
        match td.kind {
            ModelKind::ProjectiveSpace { n } => {
                let m = (n + 1) as f64;
                let mut worst = 0.0f64;
                for &t in &ts {
                    let Ok(all) = ys(self, t) else {
                        return self.push(Verdict::failed("cpn_points", "tracking failed"));
                    };
                    let expected: Vec<Complex64> = (0..=n)
                        .map(|k| Complex64::from_polar(t.powf(1.0 / m), TAU * k as f64 / m))
                        .collect();
                    for y in &all {
                        let best = expected
                            .iter()
                            .map(|e| y.iter().map(|yi| rel(*yi, *e)).fold(0.0, f64::max))
                            .fold(f64::INFINITY, f64::min);
                        worst = worst.max(best);
                    }
                    let covered = expected
                        .iter()
                        .filter(|e| all.iter().any(|y| rel(y[0], **e) <= CHECK_TOL))
                        .count();
                    if covered != n + 1 {
                        worst = f64::INFINITY;
                    }
                }
                self.push(Verdict::le("cpn_points", worst, CHECK_TOL));
                let target = q(1, n as i64 + 1);
                let off = interior
                    .iter()
                    .flat_map(|p| p.valuation.iter())
                    .filter(|v| **v != target)
                    .count();
                self.push(Verdict::le("cpn_valuations", off as f64, 0.0));
            }
            ModelKind::BlowupCp2 => {
                let (mut quartic, mut zform) = (0.0f64, 0.0f64);
                for &t in &ts {
                    for p in &interior {
                        let res = (|| -> Result<(f64, f64), FrobeniusError> {
                            let y = point_at(self.po, p, t)?;
                            let y2 = y[1] / t.powf(1.0 / 3.0);
                            let (a, b) = (y2.powi(4), y2.powi(3));
                            let r1 = (a + b - 1.0).norm() / a.norm().max(b.norm()).max(1.0);
                            let z = trace_z(&floer_algebra(self.po, p, t)?)?;
                            let r2 = rel(z / t.powf(2.0 / 3.0), (4.0 - b) / y2);
                            Ok((r1, r2))
                        })();
                        match res {
                            Ok((r1, r2)) => {
                                quartic = quartic.max(r1);
                                zform = zform.max(r2);
                            }
                            Err(e) => return self.push(Verdict::failed("blowup_quartic", e)),
                        }
                    }
                }
                self.push(Verdict::le("blowup_quartic", quartic, CHECK_TOL));
                self.push(Verdict::le("blowup_z_formula", zform, CHECK_TOL));
            }
            ModelKind::Hirzebruch { alpha } => {
                let a = alpha.to_f64();
                let (mut values, mut dets) = (0.0f64, 0.0f64);
                let abs = self.po.absolute();
                for &t in &ts {
                    let Ok(all) = ys(self, t) else {
                        return self.push(Verdict::failed("f2_critical_values", "tracking failed"));
                    };
                    let (p, r) = (2.0 * t.powf((1.0 - a) / 2.0), 2.0 * t.powf((1.0 + a) / 2.0));
                    let expected_values: Vec<Complex64> = [p + r, p - r, -p + r, -p - r]
                        .iter()
                        .map(|&v| Complex64::new(v, 0.0))
                        .collect();
                    let expected_dets: Vec<Complex64> = [4.0 * t, 4.0 * t, -4.0 * t, -4.0 * t]
                        .iter()
                        .map(|&v| Complex64::new(v, 0.0))
                        .collect();
                    let mut got_values = Vec::new();
                    let mut got_dets = Vec::new();
                    for y in &all {
                        let x: Vec<Complex64> = y.iter().map(|v| v.ln()).collect();
                        let num = abs.numeric(t);
                        got_values.push(num.value(&x));
                        got_dets.push(num.hessian(&x).determinant());
                    }
                    values = values.max(crate::qh::multiset_residual(&expected_values, &got_values));
                    dets = dets.max(crate::qh::multiset_residual(&expected_dets, &got_dets));
                }
                self.push(Verdict::le("f2_critical_values", values, CHECK_TOL));
                self.push(Verdict::le("f2_hessian_det", dets, CHECK_TOL));
            }
            ModelKind::SphereProduct { .. } | ModelKind::Custom => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(cmd: Command, name: &str) -> Report {
        let model = ModelSpec::builtin(name).resolve().unwrap();
        run(cmd, &model, &RunOptions::default()).unwrap()
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(Num(0.1).text(), "1.0000000000000001e-1");
        assert_eq!(Num(-2.0).text(), "-2.0000000000000000e0");
        assert_eq!(Num(f64::NAN).text(), "\"NaN\"");
        let back: Num = serde_json::from_str("1.0000000000000001e-1").unwrap();
        assert_eq!(back.0, 0.1);
    }

    #[test]
    fn json_round_trip_is_identity() {
        let r = report(Command::Verify, "cpn(1)");
        let text = r.to_json();
        let parsed = Report::from_json(&text).unwrap();
        assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn verify_blowup() {
        let r = report(Command::Verify, "blowup_cp2");
        for name in ["count", "sum_formula", "z_closed_form", "blowup_quartic", "blowup_z_formula"] {
            assert!(r.verdict(name).unwrap().pass, "{name}");
        }
        assert!(r.passed(), "{:?}", r.verdicts);
    }

    #[test]
    fn verify_boundary_example() {
        let r = report(Command::Verify, "boundarycrit");
        assert!(r.verdict("boundary_excluded").unwrap().pass);
        assert!(r.verdict("count").unwrap().pass);
    }

    #[test]
    fn negative_control_is_reported_as_pass() {
        let r = report(Command::Qsr, "cpn(2)");
        let v = r.verdict("qsr_negative_control").unwrap();
        assert_eq!(v.comparison, Comparison::Gt);
        assert!(v.pass && v.residual.0 > 1e-3);
    }

    #[test]
    fn model_spec_errors() {
        let both = ModelSpec {
            name: Some("cpn(2)".into()),
            document: Some("{}".into()),
            ..Default::default()
        };
        assert!(matches!(both.resolve(), Err(RunError::Usage(_))));
        let alpha = ModelSpec {
            name: Some("f2".into()),
            alpha: Some(q(1, 4)),
            ..Default::default()
        };
        assert_eq!(alpha.resolve().unwrap().label, "f2(1/4)");
        let twice = ModelSpec {
            name: Some("f2(1/4)".into()),
            alpha: Some(q(1, 4)),
            ..Default::default()
        };
        assert!(twice.resolve().is_err());
    }

    #[test]
    fn lift_in_critical_report() {
        let model = ModelSpec::builtin("cpn(1)").resolve().unwrap();
        let opts = RunOptions {
            cutoff: Some(q(2, 1)),
            ..Default::default()
        };
        let r = run(Command::Critical, &model, &opts).unwrap();
        assert!(r.verdict("lift_order").unwrap().pass);
        let pts = r.critical_points.unwrap();
        assert!(pts.iter().all(|p| p.lifted.is_some()));
    }
}
