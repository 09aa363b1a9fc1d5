//! Command-line driver for the fracture-network inversion pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dfn_inversion::config::{parse_config_toml, PipelineConfig};
use dfn_inversion::pipeline::{
    self, ArtifactPaths, ClusterStageSummary, InvertSummary, OrientSummary, ReportSummary,
    SynthSummary,
};

const EXIT_CONFIG: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "dfninv",
    version,
    about = "Fracture network inversion from microseismic events and pressure observations"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Closure case override (1-4).
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=4))]
    case: Option<u8>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Synthesize a microseismic catalog from the truth network.
    Synth,
    /// Cluster event locations and select the cluster count.
    Cluster,
    /// Constrain per-cluster strike and dip from event-triple planes.
    Orient,
    /// Sample fracture networks and minimize the pressure misfit.
    Invert,
    /// Write the human-readable summary and error tables.
    Report,
    /// Run every stage in order.
    All,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, String> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config_toml(&text).map_err(|e| e.to_string())?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out_dir) = &cli.out_dir {
        config.out_dir = out_dir.clone();
    }
    if let Some(case) = cli.case {
        config.case = case;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn print_synth(config: &PipelineConfig, s: &SynthSummary) {
    let paths = ArtifactPaths::new(&config.out_dir);
    println!(
        "synth: {} events from {} fractures -> {}",
        s.n_events,
        s.n_fractures,
        paths.catalog_csv().display()
    );
}

fn print_cluster(s: &ClusterStageSummary) {
    println!(
        "cluster: k = {} ({:.1}% variance explained; focal peaks {} strike / {} dip)",
        s.k, s.explained_pct, s.strike_peaks, s.dip_peaks
    );
}

fn print_orient(s: &OrientSummary) {
    for (i, c) in s.constraints.iter().enumerate() {
        println!(
            "orient: cluster {i} strike [{:.0}, {:.0}] deg, dip [{:.0}, {:.0}] deg",
            c.strike.lo_deg, c.strike.hi_deg, c.dip.lo_deg, c.dip.hi_deg
        );
    }
}

fn print_invert(s: &InvertSummary) {
    println!(
        "invert: best sample {} of {} ({} failed), misfit {:.3e} Pa",
        s.best_index, s.n_samples, s.n_failed, s.best_misfit_pa
    );
    for (i, (obs, model)) in s.observed_pa.iter().zip(&s.best_pa).enumerate() {
        println!("invert: point {i} observed {:.4e} Pa, model {:.4e} Pa", obs, model);
    }
}

fn print_report(s: &ReportSummary) {
    println!("report: {} error rows -> {}", s.n_error_rows, s.summary_path.display());
}

fn run(cli: &Cli, config: &PipelineConfig) -> Result<(), pipeline::PipelineError> {
    match cli.command {
        Command::Synth => print_synth(config, &pipeline::run_synth(config)?),
        Command::Cluster => print_cluster(&pipeline::run_cluster(config)?),
        Command::Orient => print_orient(&pipeline::run_orient(config)?),
        Command::Invert => print_invert(&pipeline::run_invert(config)?),
        Command::Report => print_report(&pipeline::run_report(config)?),
        Command::All => {
            let all = pipeline::run_all(config)?;
            print_synth(config, &all.synth);
            print_cluster(&all.cluster);
            print_orient(&all.orient);
            print_invert(&all.invert);
            print_report(&all.report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();

    let config = match load_config(&cli) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("configuration error: {message}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };

    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }

    match run(&cli, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stage error: {e}");
            ExitCode::from(EXIT_STAGE)
        }
    }
}
