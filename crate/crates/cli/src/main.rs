//! `tap`: batch front end for validating, solving, checking and exporting
//! teacher assignment instances.

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use tap_core::assignment::Assignment;
use tap_core::encode::{import_solution, read_solution_file, to_lp, to_smtlib, EncodingArtifact, ImportError};
use tap_core::generate::{generate, GenSpec};
use tap_core::instance::{capacity_report, Instance, LoadError};
use tap_core::metrics::{build_report, compare, Source};
use tap_core::model::build;
use tap_core::solver::{solve_with, SolveConfig, SolveHooks, Status};
use tap_core::verify::{check, CheckMode, VerifyError};
use tap_service::SessionStore;

#[derive(Parser)]
#[command(name = "tap", version, about = "Teacher assignment planning toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and print its capacity summary.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve an instance with the built-in solver.
    Solve(SolveArgs),
    /// Check a solution file against an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Report every violation instead of rejecting at the first hard one.
        #[arg(long)]
        audit: bool,
    },
    /// Workload report for a solution, optionally compared with a manual one.
    Report {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        against_manual: Option<PathBuf>,
        /// Directory for report JSON and chart CSV files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write the model for an external solver.
    Export {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Read an external solver's solution into a solution file.
    Import {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Solution file written by the external solver.
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded synthetic instance.
    Gen {
        #[arg(long)]
        tas: usize,
        #[arg(long)]
        courses: usize,
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        #[arg(long, default_value_t = 0.9)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the planning HTTP service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Directory for session snapshots; sessions live in memory without it.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// JSON solve configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Solution file to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full outcome as JSON.
    #[arg(long)]
    outcome: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Lp,
    Smt2,
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Infeasible = 1,
    Usage = 2,
    Internal = 3,
}

#[derive(Debug)]
struct Failure {
    exit: Exit,
    error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut shown = String::new();
        for cause in self.error.chain() {
            let message = cause.to_string();
            if shown.contains(&message) {
                continue;
            }
            if !shown.is_empty() {
                shown.push_str(": ");
            }
            shown.push_str(&message);
        }
        f.write_str(&shown)
    }
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { exit: Exit::Usage, error: error.into() }
    }

    fn infeasible(message: impl fmt::Display) -> Self {
        Failure { exit: Exit::Infeasible, error: anyhow::anyhow!("{message}") }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { exit: Exit::Internal, error }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TAP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("tap: {failure}");
            ExitCode::from(failure.exit as u8)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate { instance } => validate(&instance),
        Command::Solve(args) => solve(args),
        Command::Verify { instance, solution, audit } => verify(&instance, &solution, audit),
        Command::Report { instance, solution, against_manual, out_dir } => {
            report(&instance, &solution, against_manual.as_deref(), out_dir.as_deref())
        }
        Command::Export { instance, format, out } => export(&instance, format, out.as_deref()),
        Command::Import { instance, format, solution, out } => import(&instance, format, &solution, out.as_deref()),
        Command::Gen { tas, courses, tasks, ratio, seed, out } => {
            let instance = generate(&GenSpec::new(tas, courses, tasks, ratio, seed)).map_err(Failure::usage)?;
            emit(out.as_deref(), &instance.to_json())
        }
        Command::Serve { port, host, data_dir } => serve(SocketAddr::new(host, port), data_dir.as_deref()),
    }
}

fn load(path: &Path) -> Result<Instance, Failure> {
    Instance::load(path).map_err(|e| match e {
        LoadError::Io { .. } => Failure::usage(e),
        other => Failure::usage(anyhow::Error::new(other).context(path.display().to_string())),
    })
}

fn read_schedule(instance: &Instance, path: &Path) -> Result<Assignment, Failure> {
    read_solution_file(instance, path).map_err(|e| match e {
        ImportError::Infeasible => Failure::infeasible(format!("{}: solution reports infeasible", path.display())),
        ImportError::Io { .. } => Failure::usage(e),
        other => Failure::usage(anyhow::Error::new(other).context(path.display().to_string())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn json(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text
}

fn validate(path: &Path) -> Outcome {
    let instance = load(path)?;
    let capacity = capacity_report(&instance);
    if capacity.warning {
        log::warn!("task hours exceed what the TAs can supply by {}", -capacity.slack);
    }
    print!("{}", json(&serde_json::json!({
        "label": instance.label(),
        "tas": instance.n_tas(),
        "courses": instance.n_courses(),
        "task_kinds": instance.n_kinds(),
        "capacity": capacity,
    })));
    Ok(())
}

fn solve(args: SolveArgs) -> Outcome {
    let instance = load(&args.instance)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(Failure::usage)?;
            serde_json::from_str(&text).with_context(|| path.display().to_string()).map_err(Failure::usage)?
        }
        None => SolveConfig::default(),
    };
    if let Some(t) = args.time_limit {
        config.time_limit = t;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(threads) = args.threads {
        config.thread_budget = threads;
    }
    if args.node_limit.is_some() {
        config.node_limit = args.node_limit;
    }
    config.validate().map_err(Failure::usage)?;

    let progress = |p: &tap_core::solver::Progress| log::info!("{}", p.line());
    let outcome = solve_with(&build(&instance), &config, SolveHooks { cancel: None, progress: Some(&progress) });
    let objective = outcome.objective.map_or("-".to_string(), |o| o.to_string());
    println!("status {}", outcome.status);
    println!("objective {objective}");
    println!("lower_bound {}", outcome.lower_bound);
    println!("time_s {:.3}", outcome.stats.wall_time);
    if let Some(path) = &args.outcome {
        emit(Some(path), &json(&outcome))?;
    }
    let Some(best) = &outcome.best else {
        if let Some(path) = &args.out {
            emit(Some(path), "infeasible\n")?;
        }
        return match outcome.status {
            Status::Infeasible => Err(Failure::infeasible("instance is infeasible")),
            _ => Err(Failure::infeasible(format!("no schedule found ({})", outcome.status))),
        };
    };
    if let Some(path) = &args.out {
        let header = [("status", outcome.status.to_string()), ("objective", objective), ("label", instance.label().to_string())];
        emit(Some(path), &best.to_solution_text(&instance, &header))?;
    }
    Ok(())
}

fn verify(instance: &Path, solution: &Path, audit: bool) -> Outcome {
    let instance = load(instance)?;
    let schedule = read_schedule(&instance, solution)?;
    let mode = if audit { CheckMode::Audit } else { CheckMode::Strict };
    match check(&instance, &schedule, mode) {
        Ok(verdict) => {
            print!("{}", verdict.to_json());
            Ok(())
        }
        Err(VerifyError::HardViolation(verdict)) => {
            print!("{}", verdict.to_json());
            Err(Failure::infeasible(format!("{} hard violation(s)", verdict.hard_violations.len())))
        }
        Err(e) => Err(Failure::usage(e)),
    }
}

fn report(instance: &Path, solution: &Path, manual: Option<&Path>, out_dir: Option<&Path>) -> Outcome {
    let instance = load(instance)?;
    let schedule = read_schedule(&instance, solution)?;
    let name = solution.file_stem().map_or("solution".to_string(), |s| s.to_string_lossy().into_owned());
    let source = Source::Solver { name, status: header_status(solution).unwrap_or(Status::Unknown), seconds: 0.0 };
    let mut reports = vec![build_report(&instance, &schedule, source).map_err(Failure::usage)?];
    if let Some(path) = manual {
        let schedule = read_schedule(&instance, path)?;
        reports.push(build_report(&instance, &schedule, Source::Manual).map_err(Failure::usage)?);
    }
    let comparison = compare(&reports).map_err(|e| Failure::from(anyhow::Error::new(e)))?;
    print!("{}", comparison.to_text());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for report in &reports {
            let stem = report.source.name();
            emit(Some(&dir.join(format!("{stem}.json"))), &report.to_json())?;
            emit(Some(&dir.join(format!("{stem}_scatter.csv"))), &report.scatter_csv())?;
            emit(Some(&dir.join(format!("{stem}_courses.csv"))), &report.histogram_csv())?;
        }
        emit(Some(&dir.join("comparison.csv")), &comparison.to_csv())?;
    }
    Ok(())
}

/// Status recorded in a `# status ...` header line of a solution file.
fn header_status(path: &Path) -> Option<Status> {
    let text = std::fs::read_to_string(path).ok()?;
    let value = text.lines().take_while(|l| l.starts_with('#')).find_map(|l| l.strip_prefix("# status "))?;
    serde_json::from_value(serde_json::Value::String(value.trim().to_string())).ok()
}

fn artifact(instance: &Instance, format: ExportFormat) -> Result<EncodingArtifact, Failure> {
    let ir = build(instance);
    match format {
        ExportFormat::Lp => Ok(to_lp(&ir)),
        ExportFormat::Smt2 => to_smtlib(&ir).map_err(Failure::usage),
    }
}

fn export(instance: &Path, format: ExportFormat, out: Option<&Path>) -> Outcome {
    let instance = load(instance)?;
    emit(out, &artifact(&instance, format)?.text)
}

fn import(instance: &Path, format: ExportFormat, solution: &Path, out: Option<&Path>) -> Outcome {
    let instance = load(instance)?;
    let artifact = artifact(&instance, format)?;
    let schedule = import_solution(&artifact, solution).map_err(|e| match e {
        ImportError::Infeasible => Failure::infeasible("the external solver reported the model infeasible"),
        ImportError::Io { .. } => Failure::usage(e),
        other => Failure::usage(anyhow::Error::new(other).context(solution.display().to_string())),
    })?;
    let objective = match check(&instance, &schedule, CheckMode::Strict) {
        Ok(verdict) => verdict.total_objective.to_string(),
        Err(VerifyError::HardViolation(verdict)) => {
            log::warn!("imported schedule breaks {} hard rule(s)", verdict.hard_violations.len());
            "-".to_string()
        }
        Err(e) => return Err(Failure::usage(e)),
    };
    eprintln!("objective {objective}");
    emit(out, &schedule.to_solution_text(&instance, &[("objective", objective), ("label", instance.label().to_string())]))
}

fn serve(addr: SocketAddr, data_dir: Option<&Path>) -> Outcome {
    let store = match data_dir {
        Some(dir) => SessionStore::open(dir).map_err(|e| Failure::usage(anyhow::anyhow!("{e}")))?,
        None => SessionStore::in_memory(),
    };
    let runtime = tokio::runtime::Runtime::new().context("cannot start the runtime")?;
    runtime.block_on(tap_service::serve(Arc::new(store), addr)).with_context(|| format!("cannot serve on {addr}"))?;
    Ok(())
}
