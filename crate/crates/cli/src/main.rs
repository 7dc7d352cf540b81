use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use toric_lg::polytope::BulkEntry;
use toric_lg::report::{run, Command, ModelSpec, Report, RunOptions};
use toric_lg::Rational;

mod table;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Info,
    Potential,
    Critical,
    Residue,
    #[value(name = "z-trace")]
    ZTrace,
    Qsr,
    #[value(name = "c1check")]
    C1Check,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Info => Command::Info,
            Cmd::Potential => Command::Potential,
            Cmd::Critical => Command::Critical,
            Cmd::Residue => Command::Residue,
            Cmd::ZTrace => Command::ZTrace,
            Cmd::Qsr => Command::Qsr,
            Cmd::C1Check => Command::C1Check,
            Cmd::Verify => Command::Verify,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy)]
struct Bulk {
    facet: usize,
    w: Complex64,
}

fn parse_bulk(s: &str) -> Result<Bulk, String> {
    let (j, w) = s.split_once('=').ok_or("expected j=re,im")?;
    let facet: usize = j.trim().parse().map_err(|_| format!("bad facet index {j:?}"))?;
    if facet == 0 {
        return Err("facet indices start at 1".into());
    }
    let (re, im) = w.split_once(',').unwrap_or((w, "0"));
    let re: f64 = re.trim().parse().map_err(|_| format!("bad real part {re:?}"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part {im:?}"))?;
    Ok(Bulk {
        facet,
        w: Complex64::new(re, im),
    })
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    s.trim().parse::<Rational>().map_err(|e| e.to_string())
}

/// Toric Landau–Ginzburg potentials: critical points, residue pairings,
/// Clifford traces and quantum Stanley–Reisner checks.
#[derive(Debug, Parser)]
#[command(name = "toric-lg", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Built-in model: cpn(n), s2xs2(a), blowup_cp2, f2(a), boundarycrit(c).
    #[arg(long, conflicts_with = "input")]
    model: Option<String>,
    /// JSON model or custom-potential document.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample values of T in (0, 1), comma separated.
    #[arg(long = "t", value_delimiter = ',', default_values_t = [0.05, 0.1, 0.2])]
    t: Vec<f64>,
    /// Basepoint in P, e.g. 1/3,1/3.
    #[arg(long, value_delimiter = ',', value_parser = parse_rational)]
    u: Option<Vec<Rational>>,
    /// Bulk parameter on facet j (1-based): j=re,im. Repeatable.
    #[arg(long, value_parser = parse_bulk)]
    bulk: Vec<Bulk>,
    /// Parameter for a bare s2xs2 or f2.
    #[arg(long, value_parser = parse_rational)]
    alpha: Option<Rational>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lifting order for critical points.
    #[arg(long, value_parser = parse_rational)]
    cutoff: Option<Rational>,
    /// Number of Newton starts.
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Newton gradient tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let document = match &cli.input {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(s) => Some(s),
            Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
        },
        None => None,
    };
    let spec = ModelSpec {
        name: cli.model.clone(),
        document,
        alpha: cli.alpha,
        u: cli.u.clone(),
        bulk: cli
            .bulk
            .iter()
            .map(|b| BulkEntry {
                facet: b.facet - 1,
                w: b.w,
            })
            .collect(),
    };
    let model = match spec.resolve() {
        Ok(m) => m,
        Err(e) => return usage(e),
    };
    let opts = RunOptions {
        t_samples: cli.t.clone(),
        seed: cli.seed,
        cutoff: cli.cutoff,
        starts: cli.starts,
        grad_tol: cli.tol,
    };
    let report = match run(cli.command.into(), &model, &opts) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    if let Err(e) = emit(&report, cli.format) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn emit(report: &Report, format: Format) -> Result<(), Box<dyn std::error::Error>> {
    let mut out = std::io::stdout().lock();
    match format {
        Format::Json => out.write_all(report.to_json().as_bytes())?,
        Format::Csv => {
            let (header, rows) = table::rows(report);
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
