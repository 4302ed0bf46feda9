use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use normprr_cli::check::{check_grid, write_report};
use normprr_cli::config::parse_config;
use normprr_cli::gen_data::gen_data;
use normprr_cli::runner::{execute, format_summary, HarnessError, OutputPaths};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_DIAGNOSTICS: u8 = 3;

#[derive(Parser)]
#[command(
    name = "normprr",
    about = "Composite-optimization experiment harness built around normal-map proximal random reshuffling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads for the run grid (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Added to every configured seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed_offset: u64,

    /// Skip SVG plot emission.
    #[arg(long, global = true)]
    no_plots: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured grid; writes runs.csv and summary.txt.
    Run { config: PathBuf },
    /// Execute, aggregate curves over seeds, and plot.
    Compare { config: PathBuf },
    /// Execute with theory diagnostics on and verify the descent and
    /// error estimates along every trace; exit code 3 on violation.
    Check { config: PathBuf },
    /// Write a synthetic dataset dump (kinds: tanh).
    GenData { kind: String, params: String, out: PathBuf },
}

fn load_config(path: &PathBuf) -> Result<normprr_cli::ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| HarnessError::Config(e.0))
}

fn exit_for(e: &HarnessError) -> u8 {
    match e {
        HarnessError::Config(_) => EXIT_CONFIG,
        HarnessError::Runtime(_) => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load_config(config)?;
            let out = OutputPaths::new(cli.output.clone().unwrap_or_else(|| cfg.output.clone().into()));
            let (_, summary) = execute(&cfg, &out, cli.jobs, cli.seed_offset)?;
            print!("{}", format_summary(&summary));
            println!("wrote {}", out.runs_csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { config } => {
            let cfg = load_config(config)?;
            let out = OutputPaths::new(cli.output.clone().unwrap_or_else(|| cfg.output.clone().into()));
            let (_, summary) =
                normprr_cli::compare(&cfg, &out, cli.jobs, cli.seed_offset, !cli.no_plots)?;
            print!("{}", format_summary(&summary));
            println!("wrote {}", out.aggregate_csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { config } => {
            let mut cfg = load_config(config)?;
            cfg.diagnostics = true;
            let out = OutputPaths::new(cli.output.clone().unwrap_or_else(|| cfg.output.clone().into()));
            let (grid, summary) = execute(&cfg, &out, cli.jobs, cli.seed_offset)?;
            let outcome = check_grid(&grid);
            write_report(&outcome, &out.diagnostics)?;
            print!("{}", format_summary(&summary));
            println!(
                "diagnostics: {} applicable, {} skipped, {} violations ({})",
                outcome.applicable,
                outcome.skipped,
                outcome.violations,
                out.diagnostics.display()
            );
            if outcome.violations > 0 {
                return Ok(ExitCode::from(EXIT_DIAGNOSTICS));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::GenData { kind, params, out } => {
            gen_data(kind, params, out)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
