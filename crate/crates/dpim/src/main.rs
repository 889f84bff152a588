use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpim::config::{parse_config, ExperimentConfig, Format, Workload};
use dpim::experiment::{prepare_apsp, prepare_genomics, run_apsp, run_genomics};
use dpim::io::save_index;
use dpim::report::{emit_report, parse_reports};
use dpim::sweep::run_sweep;
use dpim::{CliError, Result};

#[derive(Parser)]
#[command(name = "dpim", version, about = "Cycle and energy simulator for a 3D-DRAM processing-in-memory array")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON). Shipped defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's rng_seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Concurrent runs for sweeps.
    #[arg(long, global = true)]
    parallel: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// All-pairs shortest paths on the compute PUs.
    Apsp {
        #[command(flatten)]
        common: Common,
    },
    /// Seeding and alignment pipeline.
    Genomics {
        #[command(flatten)]
        common: Common,
    },
    /// Build the binary seed index for the configured reference (needs --out).
    Index {
        #[command(flatten)]
        common: Common,
    },
    /// Run the config's sweep section.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Re-emit saved JSON reports, e.g. as CSV.
    Report {
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.rng_seed = s;
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    if let Some(o) = &common.out {
        cfg.output.path = Some(o.clone());
    }
    Ok(cfg)
}

fn emit(cfg: &ExperimentConfig, reports: &[dpim_core::engine::RunReport]) -> Result<()> {
    emit_report(reports, cfg.output.format, cfg.output.path.as_deref())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Apsp { common } => {
            let mut cfg = load(&common)?;
            cfg.workload = Workload::Apsp;
            let m = prepare_apsp(&cfg)?;
            let (_, report) = run_apsp(&cfg, &m)?;
            emit(&cfg, &[report])
        }
        Cmd::Genomics { common } => {
            let mut cfg = load(&common)?;
            cfg.workload = Workload::Genomics;
            let input = prepare_genomics(&cfg)?;
            let run = run_genomics(&cfg, &input)?;
            emit(&cfg, &[run.report])
        }
        Cmd::Index { common } => {
            let cfg = load(&common)?;
            let out = cfg
                .output
                .path
                .clone()
                .ok_or_else(|| CliError::Config("index needs --out <path>".into()))?;
            let mut no_index = cfg.clone();
            no_index.genomics.index = None;
            no_index.genomics.read_count = 1;
            let input = prepare_genomics(&no_index)?;
            save_index(&input.index, &out)
        }
        Cmd::Sweep { common } => {
            let cfg = load(&common)?;
            if cfg.sweep.is_none() {
                return Err(CliError::Config("sweep needs a config with a \"sweep\" section".into()));
            }
            let parallel = common
                .parallel
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let reports = run_sweep(&cfg, parallel)?;
            emit(&cfg, &reports)
        }
        Cmd::Report { inputs, common } => {
            let mut reports = Vec::new();
            for p in &inputs {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.clone(),
                    source: e,
                })?;
                reports.extend(parse_reports(&text)?);
            }
            emit_report(&reports, common.format.unwrap_or_default(), common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
