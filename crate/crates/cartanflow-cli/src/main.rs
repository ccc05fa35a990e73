use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cartanflow::engine::{analytic_flow_substepped, c1_lift, measurable_curve, sorted_curve_partial};
use cartanflow::report::{Columns, Report, Row};
use cartanflow::spec_io::{self, GridSpec};
use cartanflow::{Builtin, Error, Family, PathSpec, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

mod checks;

const EXIT_INPUT: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_NEAR_SINGULAR: u8 = 3;
const EXIT_CHECK: u8 = 4;

const DEFAULT_SAMPLES: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "cartanflow", version, about = "Diagonalize paths of structured matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Path specification (JSON file, or `-` for standard input).
    spec: PathBuf,
    /// Time grid `start:end:n`; defaults to 101 samples over the domain.
    #[arg(long, value_parser = spec_io::parse_grid, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// Tolerance override `key=value` (member, group, solve, cluster, face, h_fd).
    #[arg(long = "tol")]
    tol: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sorted spectrum, face and residuals at each sample.
    Diagonalize(Common),
    /// Differentiable lift through crossings.
    Lift(Common),
    /// Diagonalizing frame U(t) from the flow ODE.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Smallest admissible root value; defaults to 1e-6 (1 + |rho|).
        #[arg(long)]
        gap_min: Option<f64>,
        /// Largest integration step; grid intervals are subdivided to fit.
        #[arg(long, default_value_t = 1e-2)]
        max_step: f64,
    },
    /// Run the invariant suite on a path.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        gap_min: Option<f64>,
        /// Seed for the random probes.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the supported families.
    Families {
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// List built-in paths, or print one as a path specification.
    Corpus {
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NearSingularPoint { .. } => EXIT_NEAR_SINGULAR,
        Error::SolverFailure(_)
        | Error::NotInImage { .. }
        | Error::NotCommuting { .. }
        | Error::NotInChamber
        | Error::TooLarge { .. }
        | Error::ClusterMismatch { .. } => EXIT_SOLVER,
        _ => EXIT_INPUT,
    }
}

struct Loaded {
    spec: PathSpec,
    grid: Vec<f64>,
    tol: Tolerances,
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin()).map_err(|e| input_error(format!("reading standard input: {e}")))
    } else {
        fs::read_to_string(path).map_err(|e| input_error(format!("reading {}: {e}", path.display())))
    }
}

fn load(common: &Common, checked: bool) -> Result<Loaded, Failure> {
    let mut tol = Tolerances::default();
    for t in &common.tol {
        spec_io::apply_tolerance(&mut tol, t)?;
    }
    let text = read_input(&common.spec)?;
    let spec = if checked {
        spec_io::parse_path_spec(&text, &tol)?
    } else {
        spec_io::parse_path_spec_unchecked(&text)?
    };
    let grid = match common.grid {
        Some(g) => {
            if !(spec.contains(g.start) && spec.contains(g.end)) {
                return Err(input_error(format!(
                    "grid {}:{} leaves the path domain [{}, {}]",
                    g.start, g.end, spec.domain.0, spec.domain.1
                )));
            }
            g.points()
        }
        None => {
            if !(spec.domain.0 < spec.domain.1) {
                return Err(input_error("path domain is a single point; pass --grid"));
            }
            spec.grid(DEFAULT_SAMPLES)
        }
    };
    Ok(Loaded { spec, grid, tol })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| input_error(format!("writing {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| input_error(format!("writing output: {e}")))
        }
    }
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Csv => report.to_csv(),
        Format::Json => format!("{:#}\n", report.to_json()),
    }
}

fn cmd_diagonalize(common: &Common) -> Result<(), Failure> {
    let Loaded { spec, grid, tol } = load(common, true)?;
    let columns = Columns {
        lambda_sorted: true,
        face: true,
        residual_offdiag: true,
        residual_group: true,
        ..Default::default()
    };
    let mut report = Report::new(spec.family, "diagonalize", columns);
    let mut first_error: Option<Error> = None;
    let mut max_off: f64 = 0.0;
    let mut max_group: f64 = 0.0;
    for (&t, sample) in grid.iter().zip(sorted_curve_partial(&spec, &grid, &tol)) {
        match sample {
            Ok((u, lambda, face, offdiag)) => {
                let group = u.group_residual();
                max_off = max_off.max(offdiag);
                max_group = max_group.max(group);
                report.rows.push(Row {
                    t,
                    lambda_sorted: Some(lambda.coords),
                    face: Some(face.hash_string()),
                    residual_offdiag: Some(offdiag),
                    residual_group: Some(group),
                    status: if u.det_relaxed { "ok:det-relaxed" } else { "ok" }.into(),
                    ..Default::default()
                });
            }
            Err(e) => {
                report.rows.push(Row {
                    t,
                    status: format!("error: {}", e.root()),
                    ..Default::default()
                });
                first_error.get_or_insert(e);
            }
        }
    }
    report.push_meta("max_residual_offdiag", json!(max_off));
    report.push_meta("max_residual_group", json!(max_group));
    if first_error.is_none() && spec.derivative {
        if let Ok(m) = measurable_curve(&spec, &grid, &tol) {
            if let Some(f) = m.ae_match_fraction {
                report.push_meta("ae_match_fraction", json!(f));
            }
        }
    }
    report.push_meta("failed_samples", json!(report.failed_rows()));
    emit(&common.out, &render(&report, common.format))?;
    match first_error {
        None => Ok(()),
        Some(e) => Err(Failure {
            code: EXIT_SOLVER,
            message: e.to_string(),
        }),
    }
}

fn cmd_lift(common: &Common) -> Result<(), Failure> {
    let Loaded { spec, grid, tol } = load(common, true)?;
    let path = c1_lift(&spec, &grid, &tol)?;
    let mut report = Report::from_path("lift", &path);
    report.push_meta("ambiguous_matches", json!(path.warnings.len()));
    emit(&common.out, &render(&report, common.format))
}

fn cmd_flow(common: &Common, gap_min: Option<f64>, max_step: f64) -> Result<(), Failure> {
    if !(max_step.is_finite() && max_step > 0.0) {
        return Err(input_error("--max-step must be positive"));
    }
    if let Some(g) = gap_min {
        if !(g.is_finite() && g >= 0.0) {
            return Err(input_error("--gap-min must be a non-negative number"));
        }
    }
    let Loaded { spec, grid, tol } = load(common, true)?;
    let path = analytic_flow_substepped(&spec, &grid, max_step, gap_min, &tol)?;
    let mut report = Report::from_path("flow", &path);
    report.columns.lambda_sorted = false;
    report.columns.face = false;
    emit(&common.out, &render(&report, common.format))
}

fn cmd_check(common: &Common, gap_min: Option<f64>, seed: u64) -> Result<(), Failure> {
    let Loaded { spec, grid, tol } = load(common, false)?;
    let summary = checks::run(&spec, &grid, gap_min, seed, &tol);
    let text = match common.format {
        Format::Csv => format!("{}{}\n", summary.table(), summary.to_json()),
        Format::Json => format!("{:#}\n", summary.to_json()),
    };
    emit(&common.out, &text)?;
    if summary.all_pass() {
        Ok(())
    } else {
        let failed: Vec<&str> = summary
            .results
            .iter()
            .filter(|r| r.status == checks::Status::Fail)
            .map(|r| r.name)
            .collect();
        Err(Failure {
            code: EXIT_CHECK,
            message: format!("failed checks: {}", failed.join(", ")),
        })
    }
}

fn cmd_families(format: Format) -> Result<(), Failure> {
    let families = Family::registry();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("# cartanflow v1\nfamily,weyl_type,rank,description\n");
            for f in &families {
                let wt = f.weyl_type();
                s.push_str(&format!("{f},{},{},{}\n", wt.letter(), wt.rank(), f.description()));
            }
            s
        }
        Format::Json => {
            let list: Vec<_> = families
                .iter()
                .map(|f| {
                    json!({
                        "family": f.to_string(),
                        "weyl_type": f.weyl_type().letter().to_string(),
                        "rank": f.weyl_type().rank(),
                        "description": f.description(),
                    })
                })
                .collect();
            format!("{:#}\n", json!(list))
        }
    };
    emit(&None, &text)
}

fn cmd_corpus(name: Option<&str>, out: &Option<PathBuf>) -> Result<(), Failure> {
    match name {
        None => {
            let mut s = String::new();
            for b in Builtin::ALL {
                let (a, z) = b.default_domain();
                s.push_str(&format!("{}\t{}\t[{a}, {z}]\n", b.name(), b.family()));
            }
            emit(out, &s)
        }
        Some(name) => {
            let spec = cartanflow::oracles::corpus(name)?;
            emit(out, &format!("{:#}\n", spec_io::path_spec_to_json(&spec)))
        }
    }
}

fn main() -> ExitCode {
    // usage errors are input errors; clap's own code 2 is reserved for solver failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Diagonalize(c) => cmd_diagonalize(c),
        Command::Lift(c) => cmd_lift(c),
        Command::Flow { common, gap_min, max_step } => cmd_flow(common, *gap_min, *max_step),
        Command::Check { common, gap_min, seed } => cmd_check(common, *gap_min, *seed),
        Command::Families { format } => cmd_families(*format),
        Command::Corpus { name, out } => cmd_corpus(name.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cartanflow: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
