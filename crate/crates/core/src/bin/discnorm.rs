use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use discnorm::cli::{self, CliError, Outcome, RunOptions};
use discnorm::integop::Preset;

#[derive(Parser)]
#[command(name = "discnorm", version, about = "Norms and essential-norm estimates for operators on the unit disk")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// JSON config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for JSON and CSV output
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the command's main tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for the angular jitter of sample grids
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    preset: Option<PresetArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Norm of a function in a mixed, zygmund, bloch or bergman space
    Norm,
    /// Delta ladder and compactness verdict for an integration operator
    Essnorm,
    /// Extremal identities, uniform bounds, pointwise bounds, weight normality
    Verify,
    /// Values and derivatives of an operator image at sample points
    Apply,
}

#[derive(ValueEnum, Clone, Copy)]
enum PresetArg {
    Composition,
    Volterra,
}

fn run(args: &Args) -> Result<Outcome, CliError> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let opts = RunOptions {
        out: args.out.clone(),
        tol: args.tol,
        seed: args.seed,
        preset: args.preset.map(|p| match p {
            PresetArg::Composition => Preset::Composition,
            PresetArg::Volterra => Preset::Volterra,
        }),
    };
    match args.command {
        Command::Norm => cli::cmd_norm(&cli::read_config(path)?, &opts),
        Command::Essnorm => cli::cmd_essnorm(&cli::read_config(path)?, &opts),
        Command::Verify => cli::cmd_verify(&cli::read_config(path)?, &opts),
        Command::Apply => cli::cmd_apply(&cli::read_config(path)?, &opts),
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("DISCNORM_THREADS") {
        let n: usize = v.parse().context("DISCNORM_THREADS must be a positive integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(&args) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
