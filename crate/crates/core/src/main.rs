use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ghost_edge::config::{parse_config, ExperimentKind, Overrides};
use ghost_edge::correlator::Mode;
use ghost_edge::{run, Error};

/// Edge-enhanced ghost imaging and Bell-type correlation experiments.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation image over a grid of object offsets.
    Scan(Common),
    /// Rim correlation curves and the CHSH combination.
    Bell {
        #[command(flatten)]
        common: Common,
        /// Remove the thermal background from every correlation before forming E.
        #[arg(long)]
        subtract_background: bool,
    },
    /// Azimuthal mode spectrum of an object mask.
    Spectrum(Common),
    /// Moment check of the speckle generator.
    SpeckleCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<Mode>,
    #[arg(long)]
    mc_realizations: Option<usize>,
    #[arg(long)]
    coherence_px: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; outputs do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "analytic" => Ok(Mode::Analytic),
        "montecarlo" => Ok(Mode::MonteCarlo),
        _ => Err(format!("unknown mode \"{s}\" (analytic | montecarlo)")),
    }
}

fn execute(kind: ExperimentKind, common: Common, subtract_background: bool) -> Result<(), Error> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    let text = std::fs::read_to_string(&common.config).map_err(|source| Error::Io {
        path: common.config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text, Some(kind))?;
    cfg.apply_overrides(&Overrides {
        seed: common.seed,
        mode: common.mode,
        mc_realizations: common.mc_realizations,
        coherence_px: common.coherence_px,
        output: common.out,
        subtract_background,
    })?;
    for path in run::run(&cfg)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scan(c) => execute(ExperimentKind::Scan, c, false),
        Command::Bell {
            common,
            subtract_background,
        } => execute(ExperimentKind::Bell, common, subtract_background),
        Command::Spectrum(c) => execute(ExperimentKind::Spectrum, c, false),
        Command::SpeckleCheck(c) => execute(ExperimentKind::SpeckleCheck, c, false),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
