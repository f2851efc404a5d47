//! `sfr`: reconstruct dense 2-D fields from sparse sensors.
//!
//! Exit codes: 0 success, 2 bad config, 3 bad or missing data, 4 numerical
//! failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use sfr_cli::commands;
use sfr_cli::config::Config;
use sfr_cli::error::Result;

#[derive(Parser)]
#[command(name = "sfr", about = "Dense-field reconstruction from sparse sensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory.
    Synth(RunArgs),
    /// Partition a dataset's frames into train/val/test.
    Split(RunArgs),
    /// Export every raw input channel as field files.
    Masks(RunArgs),
    /// Train one model per sensor placement case.
    Train(RunArgs),
    /// Score trained checkpoints and write the report.
    Eval(RunArgs),
    /// Verify analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (key=value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct GradcheckArgs {
    /// Optional config overriding the probe and network shape.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => with_config(&a, commands::cmd_synth, "synth"),
        Command::Split(a) => with_config(&a, commands::cmd_split, "split"),
        Command::Masks(a) => with_config(&a, commands::cmd_masks, "masks"),
        Command::Train(a) => with_config(&a, commands::cmd_train, "train"),
        Command::Eval(a) => with_config(&a, commands::cmd_eval, "eval"),
        Command::Gradcheck(a) => {
            let cfg = match &a.config {
                Some(path) => Some(Config::load(path)?),
                None => None,
            };
            let summary = commands::cmd_gradcheck(cfg.as_ref())?;
            println!(
                "gradient check: max relative error {} over {} parameters (tolerance {})",
                summary.report.max_relative_error,
                summary.report.parameters_checked,
                summary.report.tolerance
            );
            println!(
                "negative control: 10% corruption produced relative error {} (detected)",
                summary.control_error
            );
            Ok(())
        }
    }
}

fn with_config(
    args: &RunArgs,
    command: fn(&Config, &std::path::Path, bool) -> Result<()>,
    name: &str,
) -> Result<()> {
    let cfg = Config::load(&args.config)?;
    command(&cfg, &args.out, args.force)?;
    println!("{name}: wrote {}", args.out.display());
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
