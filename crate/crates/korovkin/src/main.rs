//! Thin CLI over the report commands. All computation lives in the
//! library; this file only parses flags, merges config files, prints
//! results, and maps errors to exit codes:
//!
//! * 0 — run completed and every verdict passed
//! * 1 — run completed but a verdict failed
//! * 2 — configuration error (also clap's own exit code for bad flags)
//! * 3 — computation or i/o failure
//!
//! Errors are emitted to stderr as one JSON object:
//! `{"error":{"kind":"config"|"computation"|"io","message":"..."}}`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use korovkin::report::{self, ExperimentConfig, ReportError, RunOutcome};

#[derive(Parser)]
#[command(
    name = "korovkin",
    version,
    about = "Quantitative Korovkin verification with summability-matrix densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)] // constructed once at startup
enum Command {
    /// Run the quantitative verification and write errors.csv,
    /// densities.csv, and summary.json.
    Verify(VerifyArgs),
    /// Reproduce the square-spike counterexample: statistical convergence
    /// where classical convergence fails.
    DemoCounterexample(DemoArgs),
    /// Print the A-transform of a catalog sequence at scheduled rows.
    Transform(TransformArgs),
    /// Run regularity diagnostics for a summability matrix.
    Regularity(RegularityArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Summability matrix: c1, identity, doubled-c1.
    #[arg(long)]
    matrix: Option<String>,
    /// Operator family: bbh or tn.
    #[arg(long)]
    operator: Option<String>,
    /// Number of variables (1..=4; tn requires 2).
    #[arg(long)]
    m: Option<usize>,
    /// Perturbation sequence for tn, e.g. squares:2 or 1+1/n.
    #[arg(long)]
    un: Option<String>,
    /// Target: f0..f{m+1}, product, or a node-table file.
    #[arg(long)]
    f: Option<String>,
    /// Largest operator degree swept.
    #[arg(long)]
    nmax: Option<usize>,
    /// Comma-separated strictly increasing matrix rows.
    #[arg(long, value_delimiter = ',')]
    jschedule: Option<Vec<usize>>,
    /// Target-error threshold.
    #[arg(long)]
    r: Option<f64>,
    /// Modulus budget (0 < epsilon < r).
    #[arg(long)]
    epsilon: Option<f64>,
    /// Largest transformed grid coordinate.
    #[arg(long)]
    pmax: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Seed for the modulus sampler.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Random pairs per modulus estimate.
    #[arg(long)]
    pair_samples: Option<usize>,
    /// JSON config file; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report files.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    /// Height of the perturbation at square indices (not 1).
    #[arg(long, default_value_t = 2.0)]
    spike: f64,
    /// Degrees tabulated in errors.csv.
    #[arg(long, default_value_t = 200)]
    nmax: usize,
    /// Comma-separated strictly increasing matrix rows.
    #[arg(long, value_delimiter = ',', default_value = "100,400,2500,10000")]
    jschedule: Vec<usize>,
    /// Output directory for the report files.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    /// Summability matrix: c1, identity, doubled-c1.
    #[arg(long, default_value = "c1")]
    matrix: String,
    /// Sequence: ones, 1/n, 1+1/n, alternating, constant:<c>, squares:<s>.
    #[arg(long, default_value = "squares:2")]
    sequence: String,
    /// Comma-separated strictly increasing rows to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    jschedule: Vec<usize>,
}

#[derive(Args)]
struct RegularityArgs {
    /// Summability matrix: c1, identity, doubled-c1.
    #[arg(long, default_value = "c1")]
    matrix: String,
    /// Comma-separated strictly increasing rows to diagnose.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000,10000")]
    jschedule: Vec<usize>,
    /// Optional output directory for regularity.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_config(args: &VerifyArgs) -> Result<ExperimentConfig, ReportError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ReportError::Io {
                path: path.clone(),
                source,
            })?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| ReportError::Config {
                field: "config",
                message: format!("{}: {e}", path.display()),
            })?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(v) = &args.matrix {
        cfg.matrix = v.clone();
    }
    if let Some(v) = &args.operator {
        cfg.operator = v.clone();
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = &args.un {
        cfg.un = Some(v.clone());
    }
    if let Some(v) = &args.f {
        cfg.f = v.clone();
    }
    if let Some(v) = args.nmax {
        cfg.n_max = v;
    }
    if let Some(v) = &args.jschedule {
        cfg.j_schedule = v.clone();
    }
    if let Some(v) = args.r {
        cfg.r = v;
    }
    if let Some(v) = args.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = args.pmax {
        cfg.p_max = v;
    }
    if let Some(v) = args.grid_points {
        cfg.grid_points = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = args.pair_samples {
        cfg.pair_samples = v;
    }
    Ok(cfg)
}

fn print_outcome(outcome: &RunOutcome) {
    println!("{}", outcome.headline);
    println!("wrote {}", outcome.files.errors_csv.display());
    println!("wrote {}", outcome.files.densities_csv.display());
    println!("wrote {}", outcome.files.summary_json.display());
    if !outcome.all_pass {
        println!("failed verdicts: {}", outcome.failed_verdicts.join(", "));
    }
}

fn run(cli: Cli) -> Result<ExitCode, ReportError> {
    match cli.command {
        Command::Verify(args) => {
            let cfg = resolve_config(&args)?;
            let outcome = report::cmd_verify(&cfg, &args.out)?;
            print_outcome(&outcome);
            Ok(exit_for(outcome.all_pass))
        }
        Command::DemoCounterexample(args) => {
            let outcome =
                report::cmd_demo_counterexample(args.spike, args.nmax, &args.jschedule, &args.out)?;
            print_outcome(&outcome);
            Ok(exit_for(outcome.all_pass))
        }
        Command::Transform(args) => {
            let transform = report::cmd_transform(&args.matrix, &args.sequence, &args.jschedule)?;
            println!(
                "matrix: {}\nsequence: {}",
                transform.matrix, transform.sequence
            );
            print!("{}", transform.to_table());
            Ok(ExitCode::SUCCESS)
        }
        Command::Regularity(args) => {
            let run = report::cmd_regularity(&args.matrix, &args.jschedule, args.out.as_deref())?;
            print!("{}", run.table);
            if let Some(path) = &run.json_path {
                println!("wrote {}", path.display());
            }
            Ok(exit_for(run.report.all_ok()))
        }
    }
}

fn exit_for(all_pass: bool) -> ExitCode {
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            let doc = serde_json::json!({
                "error": { "kind": err.kind(), "message": err.to_string() },
            });
            eprintln!("{doc}");
            match err.kind() {
                "config" => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
