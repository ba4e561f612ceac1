//! `plq`: batch analysis of PLQ programs. Reports go to stdout as JSON,
//! diagnostics to stderr.
//!
//! Exit status: 0 success, 1 negative verdict, 2 input error, 3 guard exceeded.

mod commands;
mod problem;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use commands::{CertifyLevel, CopositiveMethod, EnumerateWhat, Outcome};
use plq_core::linalg::Vector;
use plq_core::Settings;
use problem::{load_cone, load_matrix, load_problem, parse_vector, CliError, CliResult, Problem, VERSION};

#[derive(Parser, Debug)]
#[command(name = "plq", version, about = "Analyze piecewise linear-quadratic programs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
struct Global {
    /// Relative membership tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Override every row guard
    #[arg(long, global = true)]
    max_rows: Option<usize>,
    /// Override every piece guard
    #[arg(long, global = true)]
    max_pieces: Option<usize>,
    /// Worker threads for data-parallel loops
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
enum Command {
    /// Check continuity and the C¹ / PA-gradient property
    Validate { problem: PathBuf },
    /// Evaluate the objective at points
    Eval {
        problem: PathBuf,
        #[arg(long = "point", value_name = "X1,X2,...", allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// First and second directional derivatives
    Deriv {
        problem: PathBuf,
        #[arg(long = "point", value_name = "X1,X2,...", allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long = "direction", value_name = "D1,D2,...", allow_hyphen_values = true)]
        directions: Vec<String>,
    },
    /// Certify local or strong local optimality
    Certify {
        problem: PathBuf,
        #[arg(long = "point", value_name = "X1,X2,...", allow_hyphen_values = true)]
        points: Vec<String>,
        #[arg(long, value_enum, default_value = "local")]
        level: CertifyLevel,
    },
    /// Enumerate strict local minima or stationary values
    Enumerate {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "minima")]
        what: EnumerateWhat,
    },
    /// Copositivity of a matrix on a polyhedral cone
    Copositive {
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        method: CopositiveMethod,
        /// Cone file; defaults to the file's `cone` or the nonnegative orthant
        #[arg(long)]
        cone: Option<PathBuf>,
        /// Ask for strict copositivity
        #[arg(long)]
        strict: bool,
    },
    /// Copositivity under the absolute-value sign classification of (b, α)
    Absqp { matrix: PathBuf },
}

#[derive(Serialize)]
struct Inputs {
    problem: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    cone: Option<Value>,
}

#[derive(Serialize)]
struct Timings {
    elapsed_seconds: f64,
}

/// Everything but `timings` is a deterministic function of the inputs.
#[derive(Serialize)]
struct Report {
    version: u32,
    command: Command,
    global: Global,
    settings: Settings,
    inputs: Inputs,
    positive: bool,
    result: Value,
    timings: Timings,
}

fn settings(file: Option<&Settings>, g: &Global) -> Settings {
    let mut s = file.copied().unwrap_or_default();
    if let Some(t) = g.tol {
        s.tol = t;
    }
    if let Some(r) = g.max_rows {
        s = s.with_max_rows(r);
    }
    if let Some(p) = g.max_pieces {
        s = s.with_max_pieces(p);
    }
    s
}

fn vectors(what: &str, texts: &[String], n: usize) -> CliResult<Vec<Vector>> {
    texts.iter().map(|t| parse_vector(what, t, n)).collect()
}

fn problem(path: &Path, g: &Global) -> CliResult<(Problem, Settings)> {
    let p = load_problem(path, |file| settings(file, g))?;
    let s = settings(p.options.as_ref(), g);
    Ok((p, s))
}

fn dispatch(cmd: &Command, g: &Global) -> CliResult<(Outcome, Settings, Inputs)> {
    let (outcome, s, inputs) = match cmd {
        Command::Validate { problem: path } => {
            let (p, s) = problem(path, g)?;
            (commands::validate(&p)?, s, p.raw)
        }
        Command::Eval { problem: path, points } => {
            let (p, s) = problem(path, g)?;
            let pts = vectors("--point", points, p.objective.dim())?;
            (commands::eval(&p, &pts)?, s, p.raw)
        }
        Command::Deriv {
            problem: path,
            points,
            directions,
        } => {
            let (p, s) = problem(path, g)?;
            let n = p.objective.dim();
            let pts = vectors("--point", points, n)?;
            let dirs = vectors("--direction", directions, n)?;
            (commands::deriv(&p, &pts, &dirs)?, s, p.raw)
        }
        Command::Certify {
            problem: path,
            points,
            level,
        } => {
            let (p, s) = problem(path, g)?;
            let pts = vectors("--point", points, p.objective.dim())?;
            (commands::certify(&p, &pts, *level, &s)?, s, p.raw)
        }
        Command::Enumerate { problem: path, what } => {
            let (p, s) = problem(path, g)?;
            (commands::enumerate(&p, *what, &s)?, s, p.raw)
        }
        Command::Copositive {
            matrix,
            method,
            cone,
            strict,
        } => {
            let m = load_matrix(matrix)?;
            let s = settings(m.options.as_ref(), g);
            let external = cone.as_deref().map(load_cone).transpose()?;
            let c = external.as_ref().map(|(c, _)| c).or(m.cone.as_ref());
            let out = commands::copositive(&m, c, *method, *strict, &s)?;
            let inputs = Inputs {
                problem: m.raw,
                cone: external.map(|(_, raw)| raw),
            };
            return Ok((out, s, inputs));
        }
        Command::Absqp { matrix } => {
            let m = load_matrix(matrix)?;
            let s = settings(m.options.as_ref(), g);
            (commands::absqp(&m, &s)?, s, m.raw)
        }
    };
    Ok((outcome, s, Inputs { problem: inputs, cone: None }))
}

fn run(cli: &Cli) -> CliResult<Report> {
    if cli.global.threads == 0 {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let (outcome, settings, inputs) = dispatch(&cli.command, &cli.global)?;
    Ok(Report {
        version: VERSION,
        command: cli.command.clone(),
        global: cli.global.clone(),
        settings,
        inputs,
        positive: outcome.positive,
        result: outcome.result,
        timings: Timings {
            elapsed_seconds: start.elapsed().as_secs_f64(),
        },
    })
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
    match run(&cli) {
        Ok(report) => {
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            // A closed pipe is the reader's choice, not an error worth a panic.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if report.positive {
                ExitCode::SUCCESS
            } else {
                eprintln!("verdict: negative");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("plq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
