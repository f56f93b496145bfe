use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use laplace_cert::error::{Error, Result};
use laplace_cert::problem::config::ProblemDef;
use laplace_cert::report::{self, RunConfigPatch, Status, DEFAULT_OUTPUT, OUTPUT_ENV, REPORT_FILE};

#[derive(Parser)]
#[command(name = "laplace-cert", version, about = "Certified Laplace approximations and Gibbs-measure limit checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run checks on a problem and write report.json and convergence.csv.
    Run(RunArgs),
    /// List the built-in problems.
    List,
    /// Log-log convergence data from a report.
    Plotdata {
        /// A report.json file or the directory containing it.
        report: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with run settings; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog problem name (inline problems go in the config file).
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n_sweep: Option<Vec<u64>>,
    #[arg(long)]
    grid_res: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    safety_factor: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of laplace, constants, lln, fluctuations, preposition1, sampler.
    #[arg(long, value_delimiter = ',')]
    checks: Option<Vec<String>>,
    /// Output directory (default: $LAPLACE_CERT_OUT, then ./laplace-cert-out).
    #[arg(long)]
    output_path: Option<PathBuf>,
    /// MGF argument in the local frame, one value per coordinate.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi: Option<Vec<f64>>,
    /// Draws per N for the fluctuations and sampler checks.
    #[arg(long)]
    sample_count: Option<usize>,
}

impl RunArgs {
    fn patch(self) -> RunConfigPatch {
        RunConfigPatch {
            problem: self.problem.map(ProblemDef::Named),
            n_sweep: self.n_sweep,
            grid_res: self.grid_res,
            tol: self.tol,
            safety_factor: self.safety_factor,
            seed: self.seed,
            checks: self.checks,
            output_path: self.output_path,
            xi: self.xi,
            sample_count: self.sample_count,
        }
    }
}

fn default_output() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn exit(status: Status) -> ExitCode {
    ExitCode::from(status as u8)
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("laplace-cert: {e}");
    exit(Status::for_error(e))
}

fn run(args: RunArgs) -> ExitCode {
    let file = match &args.config {
        Some(path) => match RunConfigPatch::from_file(path) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        },
        None => RunConfigPatch::default(),
    };
    let cfg = match file.overridden_by(args.patch()).finish(default_output()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let (status, outcome) = report::run(&cfg);
    match outcome {
        Ok(r) => {
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            for a in r.assertions.iter().filter(|a| !a.passed) {
                eprintln!("FAILED [{}] {}: {}", a.check, a.name, a.detail);
            }
            println!(
                "{}: {} of {} assertions passed; wrote {}",
                r.problem.name,
                r.assertions.iter().filter(|a| a.passed).count(),
                r.assertions.len(),
                cfg.output_path.display()
            );
            exit(status)
        }
        Err(e) => fail(&e),
    }
}

fn plotdata(report_path: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let path = if report_path.is_dir() { report_path.join(REPORT_FILE) } else { report_path };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let (csv, slope) = report::plotdata(&text)?;
    match output {
        Some(out) => std::fs::write(out, csv)?,
        None => print!("{csv}"),
    }
    if let Some(s) = slope {
        eprintln!("slope of log relative error against log N: {s:.4}");
    }
    Ok(())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::List => {
            print!("{}", report::list_problems());
            ExitCode::SUCCESS
        }
        Command::Plotdata { report, output } => match plotdata(report, output) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => fail(&e),
        },
    }
}
