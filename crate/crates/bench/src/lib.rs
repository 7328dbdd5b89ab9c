//! Command line harness around `spam-core`: generate test matrices, run
//! method comparisons and summarize the resulting convergence CSVs.

mod spec;
mod table;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use spam_core::solvers::{run_outer, RunOutcome, RunStatus, SolverConfig};
use spam_core::{Error as CoreError, LinearMap};

pub use spec::{ApproxArg, MatrixSource, MethodArg, Problem, RunSpec, StartArg, TargetArg};
pub use table::{compare_table, parse_csv, write_comparison_csv, RunSummary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "spam-bench", version, about = "SPAM eigensolver benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a builtin matrix in Matrix Market format.
    Gen {
        #[arg(long)]
        matrix: MatrixSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one or more methods on a problem.
    Run(RunArgs),
    /// Summarize convergence CSVs.
    Compare {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Also write the summary as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// builtin:banded:n,q,eps | builtin:rd1d:n | path to a .mtx file
    #[arg(long, required_unless_present = "replay")]
    matrix: Option<MatrixSource>,
    /// zero | alphaI:a | diag | band:q0 | lowrank:m | natural-reaction
    #[arg(long, default_value = "zero")]
    approx: ApproxArg,
    /// lanczos | fullspam | spam1 | spam1l:l | jd:l | jd1:l (repeatable)
    #[arg(long = "method")]
    methods: Vec<MethodArg>,
    /// largest | p:k | smallest:alpha
    #[arg(long, default_value = "largest")]
    target: TargetArg,
    /// Relative residual tolerance
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Cap on the search space dimension
    #[arg(long)]
    max_outer: Option<usize>,
    /// random:seed | eigvec
    #[arg(long, default_value = "random:0")]
    start: StartArg,
    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-run the RunSpec embedded in a CSV written by an earlier run.
    #[arg(long, conflicts_with_all = ["matrix", "methods"])]
    replay: Option<PathBuf>,
}

/// Failure classes, mapped to exit codes 2 and 1.
#[derive(Debug)]
pub enum CliError {
    Config(anyhow::Error),
    Numerical(anyhow::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e:#}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e:#}"),
        }
    }
}

fn config_err(e: impl Into<anyhow::Error>) -> CliError {
    CliError::Config(e.into())
}

fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::DensifyCap { .. }
        | CoreError::InvalidArgument(_)
        | CoreError::DimensionMismatch { .. }
        | CoreError::Parse { .. }
        | CoreError::Io(_)
        | CoreError::NotSymmetric { .. } => CliError::Config(e.into()),
        _ => CliError::Numerical(e.into()),
    }
}

/// Entry point; returns the process exit code.
pub fn cli_run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Gen { matrix, out } => gen(&matrix, &out),
        Command::Run(args) => run(args),
        Command::Compare { files, csv } => compare(&files, csv.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("spam-bench: {e}");
            match e {
                CliError::Config(_) => 2,
                CliError::Numerical(_) => 1,
            }
        }
    }
}

fn gen(matrix: &MatrixSource, out: &Path) -> Result<(), CliError> {
    let problem = matrix.load().map_err(classify)?;
    let file = fs::File::create(out)
        .with_context(|| format!("cannot create {}", out.display()))
        .map_err(config_err)?;
    spam_core::problems::write_matrix_market(&problem.a, std::io::BufWriter::new(file)).map_err(classify)?;
    println!("wrote {} ({}x{})", out.display(), problem.a.dim(), problem.a.dim());
    Ok(())
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let spec = match &args.replay {
        Some(path) => {
            let mut spec = RunSpec::from_csv_header(path).map_err(config_err)?;
            if let Some(out) = args.out {
                spec.out = out;
            }
            spec
        }
        None => {
            if args.methods.is_empty() {
                return Err(config_err(anyhow!("at least one --method is required")));
            }
            RunSpec {
                matrix: args.matrix.expect("clap enforces --matrix"),
                approx: args.approx,
                methods: args.methods,
                target: args.target,
                tol: args.tol,
                max_outer: args.max_outer,
                start: args.start,
                out: args.out.unwrap_or_else(|| PathBuf::from(".")),
            }
        }
    };
    let summaries = execute(&spec)?;
    print!("{}", compare_table(&summaries));
    Ok(())
}

/// Runs every method of `spec`, writing one CSV per method and
/// `comparison.csv` into `spec.out`.
pub fn execute(spec: &RunSpec) -> Result<Vec<RunSummary>, CliError> {
    let problem = spec.matrix.load().map_err(classify)?;
    let a0 = spec.build_approx(&problem).map_err(classify)?;
    fs::create_dir_all(&spec.out)
        .with_context(|| format!("cannot create output directory {}", spec.out.display()))
        .map_err(config_err)?;
    let mut summaries = Vec::new();
    for method in &spec.methods {
        let config = SolverConfig {
            strategy: method.0,
            target: spec.target.0,
            tol: spec.tol,
            max_outer: spec.max_outer,
            start: spec.start.to_core(),
        };
        problem.a.reset_matvecs();
        a0.reset_matvecs();
        let outcome = run_outer(&problem.a, &a0, &config).map_err(classify)?;
        let name = method.0.name();
        let path = spec.out.join(format!("{}.csv", name.replace(':', "-")));
        write_run_csv(&path, spec, &name, &outcome).map_err(config_err)?;
        summaries.push(RunSummary::from_outcome(&name, &outcome));
    }
    write_comparison_csv(&spec.out.join("comparison.csv"), &summaries).map_err(config_err)?;
    Ok(summaries)
}

fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Converged => "converged",
        RunStatus::MaxOuter => "max_outer",
        RunStatus::Breakdown => "breakdown",
        RunStatus::Exhausted => "exhausted",
    }
}

pub const CSV_COLUMNS: &str = "outer_k,ritz_value,abs_error,resnorm,a_matvecs,inner_matvecs";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_run_csv(path: &Path, spec: &RunSpec, method: &str, outcome: &RunOutcome) -> anyhow::Result<()> {
    let mut text = String::new();
    text.push_str(&format!("# spam-bench {VERSION}\n"));
    text.push_str(&format!("# runspec: {}\n", serde_json::to_string(spec)?));
    text.push_str(&format!("# method: {method}\n"));
    text.push_str(&format!("# status: {}\n", status_name(outcome.status)));
    match outcome.reference {
        Some(r) => text.push_str(&format!("# reference: {}\n", float(r))),
        None => text.push_str("# reference: none\n"),
    }
    if let Some(seed) = outcome.seed {
        text.push_str(&format!("# seed: {seed}\n"));
    }
    for fb in &outcome.fallbacks {
        text.push_str(&format!("# fallback: k={} {}\n", fb.k, fb.reason));
    }
    text.push_str(CSV_COLUMNS);
    text.push('\n');
    for r in &outcome.records {
        let err = r.abs_error.map(float).unwrap_or_else(|| "nan".into());
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            float(r.ritz_value),
            err,
            float(r.resnorm),
            r.a_matvecs,
            r.inner_matvecs
        ));
    }
    let mut file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn compare(files: &[PathBuf], csv: Option<&Path>) -> Result<(), CliError> {
    let mut summaries = Vec::new();
    for f in files {
        summaries.push(parse_csv(f).map_err(config_err)?);
    }
    print!("{}", compare_table(&summaries));
    if let Some(path) = csv {
        write_comparison_csv(path, &summaries).map_err(config_err)?;
    }
    Ok(())
}
