use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slab_transport::grid::AngularQuadrature;
use slab_transport::harness::{self, builtin_problem, HarnessError, ProblemSpec};
use slab_transport::MethodKind;

const EXIT_USAGE: u8 = 1;
const EXIT_NONCONVERGENCE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "slab-transport",
    version,
    about = "Time-dependent slab transport with reduced-memory slope methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method on a problem.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// reference, zero-slope, p1, sr-sl, beta-bar or beta-lr
        #[arg(long)]
        method: Option<String>,
    },
    /// Run several methods and compare them with the reference.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated list or "all".
        #[arg(long, default_value = "all")]
        methods: String,
    },
    /// Print double Gauss-Legendre directions and weights.
    Quadrature {
        /// Points per half-range.
        #[arg(long, default_value_t = 4)]
        points: usize,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Built-in problem: test-a or test-b.
    #[arg(long, default_value = "test-a")]
    problem: String,
    /// key=value file applied on top of the built-in problem.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time step in ns.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cells: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonArgs {
    fn spec(&self) -> Result<ProblemSpec, HarnessError> {
        let mut spec = builtin_problem(&self.problem)?;
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
                path: path.clone(),
                source,
            })?;
            spec.apply_config(&text)?;
        }
        if let Some(dt) = self.dt {
            spec.dt = dt;
        }
        if let Some(cells) = self.cells {
            spec.cells = cells;
        }
        if let Some(out) = &self.out {
            spec.out = out.clone();
        }
        Ok(spec)
    }
}

fn sweep_threads() -> usize {
    std::env::var("TRANSPORT_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(1)
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Quadrature { points } => match AngularQuadrature::double_gauss(points) {
            Ok(q) => {
                println!("m,mu,weight");
                for (m, (mu, w)) in q.directions().iter().zip(q.weights()).enumerate() {
                    println!(
                        "{},{},{}",
                        m + 1,
                        harness::fmt_f64(*mu),
                        harness::fmt_f64(*w)
                    );
                }
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Command::Run { common, method } => {
            let mut spec = match common.spec() {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            if let Some(m) = method {
                match m.parse::<MethodKind>() {
                    Ok(m) => spec.method = m,
                    Err(e) => return usage(e),
                }
            }
            let problem = match spec.build(sweep_threads()) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let run = harness::run_method(&problem, spec.method);
            if let Err(e) = harness::write_run(&spec.out, &run, &problem.mesh) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            let iters: Vec<usize> = run.steps.iter().map(|s| s.iterations).collect();
            println!(
                "{} {}: {} steps, iterations min {} max {}",
                spec.name,
                spec.method,
                run.steps.len(),
                iters.iter().min().unwrap_or(&0),
                iters.iter().max().unwrap_or(&0)
            );
            match run.failure {
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_NONCONVERGENCE)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Command::Compare { common, methods } => {
            let spec = match common.spec() {
                Ok(s) => s,
                Err(e) => return usage(e),
            };
            let methods = match harness::parse_methods(&methods) {
                Ok(m) => m,
                Err(e) => return usage(e),
            };
            let problem = match spec.build(sweep_threads()) {
                Ok(p) => p,
                Err(e) => return usage(e),
            };
            let (report, runs) = harness::run_comparison(&problem, &spec.name, &methods);
            if let Err(e) = harness::write_comparison(&spec.out, &report, &runs, &problem.mesh) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            print!("{}", harness::summary_csv(&report));
            if report.methods.iter().any(|m| m.failure.is_some()) {
                ExitCode::from(EXIT_NONCONVERGENCE)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
