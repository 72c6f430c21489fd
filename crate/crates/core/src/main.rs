use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use collisim::config::{ExperimentConfig, RawConfig};
use collisim::experiments::{self, ExperimentId};
use collisim::verify::{self, VerifyOptions};
use collisim::{Error, Result};

#[derive(Parser)]
#[command(name = "collisim", version, about = "Collision-model quantum classifier experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every random draw (overrides the config and COLLISIM_SEED).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (CSV for `run`, JSON lines for `verify`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; changes wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a config file or a registry id.
    Run { config: String },
    /// Run the acceptance checks and write a JSON-lines report.
    Verify {
        /// Replace a criterion tolerance, `ID=VALUE` (harness self-test).
        #[arg(long = "tolerance", value_name = "ID=VALUE")]
        tolerances: Vec<String>,
    },
    /// List the experiment registry.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Run { config } => run(config, &cli),
        Command::Verify { tolerances } => verify(tolerances, &cli),
        Command::List => {
            for id in ExperimentId::ALL {
                println!("{:<8} {}", id.as_str(), id.description());
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(config: &str) -> Result<RawConfig> {
    let path = Path::new(config);
    if path.exists() {
        return RawConfig::load(path);
    }
    let id: ExperimentId =
        config.parse().map_err(|_| Error::Config(format!("`{config}` is neither a config file nor a registry id")))?;
    RawConfig::parse(&format!("experiment = {id}"))
}

fn run(config: &str, cli: &Cli) -> Result<ExitCode> {
    let cfg = ExperimentConfig::resolve(&load(config)?, cli.seed)?;
    let table = experiments::run(&cfg)?;
    let path = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));
    experiments::write_atomic(&path, &experiments::render_csv(&cfg, &table))?;
    let unconverged = table
        .column("converged")
        .map_or(0, |c| c.iter().filter(|v| matches!(v, experiments::Cell::Bool(false))).count());
    if unconverged > 0 {
        eprintln!("warning: {unconverged} rows did not converge (flagged in the `converged` column)");
    }
    println!("wrote {} rows to {}", table.rows.len(), path.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(tolerances: &[String], cli: &Cli) -> Result<ExitCode> {
    let seed = match cli.seed {
        Some(s) => s,
        None => ExperimentConfig::resolve(&RawConfig::parse("experiment = custom")?, None)?.seed,
    };
    let mut opts = VerifyOptions::new(seed);
    for t in tolerances {
        let (id, v) =
            t.split_once('=').ok_or_else(|| Error::Config(format!("--tolerance expects ID=VALUE, got `{t}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("--tolerance value `{v}` is not a number")))?;
        opts.tolerances.insert(id.trim().to_string(), v);
    }
    let report = verify::run(&opts)?;
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let path = cli.out.clone().unwrap_or_else(|| PathBuf::from("verify_report.jsonl"));
    experiments::write_atomic(&path, &report.to_jsonl())?;
    let failed = report.failures().len();
    println!("{} checks, {failed} failed; report written to {}", report.criteria.len(), path.display());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
