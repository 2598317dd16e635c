use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use snlab_cli::config::Kind;
use snlab_core::FrequencyConvention;

#[derive(Parser)]
#[command(name = "snlab", version, about = "Schrodinger-Newton numerical laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form Gaussian correlations (log-negativity, mutual information) vs time.
    Gaussian(RunArgs),
    /// Effective single-particle Schrodinger-Newton evolution on the cylinder grid.
    SnEffective(RunArgs),
    /// Two-particle wave function on the (z1, z2) plane under a chosen kernel.
    Bipartite(RunArgs),
    /// Pure vs mixed ensembles with equal density matrices.
    Signaling(RunArgs),
    /// One base experiment per value of a single config key.
    Sweep(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Cyclic,
    Angular,
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file, or the `manifest.json` of an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing); defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `convention` from the config file.
    #[arg(long, value_enum)]
    convention: Option<Convention>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Gaussian(a) => (Kind::GaussianCorrelations, a),
        Command::SnEffective(a) => (Kind::SnEffective, a),
        Command::Bipartite(a) => (Kind::BipartiteOracle, a),
        Command::Signaling(a) => (Kind::Signaling, a),
        Command::Sweep(a) => (Kind::Sweep, a),
    };
    let convention = args.convention.map(|c| match c {
        Convention::Cyclic => FrequencyConvention::Cyclic,
        Convention::Angular => FrequencyConvention::Angular,
    });
    match snlab_cli::execute(kind, &args.config, args.out.as_deref(), convention) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
