//! Turns a validated config into inputs and runs the engine on them.

use dpim_core::apsp::{load_graph, DistanceMatrix};
use dpim_core::engine::{run_apsp_sim, run_genomics_sim, GenomicsRun, RunReport};
use dpim_core::seed::{build_index, SeedIndex};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io::{load_index, read_edge_list, read_sequences};
use crate::synth::{random_graph, random_reference, simulate_reads};

const DESK_MAX_NODES: usize = 4096;
const DESK_MAX_REFERENCE: usize = 10_000_000;
const DESK_MAX_READS: usize = 100_000;

pub fn prepare_apsp(cfg: &ExperimentConfig) -> Result<DistanceMatrix> {
    let a = &cfg.apsp;
    match &a.graph {
        Some(p) => read_edge_list(p)?.to_matrix(),
        None => Ok(load_graph(&random_graph(a.n, a.out_degree, a.max_weight, cfg.rng_seed), a.n)?),
    }
}

#[derive(Debug, Clone)]
pub struct GenomicsInput {
    pub reference: Vec<u8>,
    pub reads: Vec<Vec<u8>>,
    /// Origin of each read when it was simulated.
    pub truth: Option<Vec<usize>>,
    pub index: SeedIndex,
}

pub fn prepare_genomics(cfg: &ExperimentConfig) -> Result<GenomicsInput> {
    let g = &cfg.genomics;
    let mut reference = match &g.reference {
        Some(p) => read_sequences(p)?
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Config(format!("{} holds no sequence", p.display())))?
            .seq,
        None => random_reference(g.reference_length, cfg.rng_seed),
    };
    if let Some(n) = g.reference_slice {
        reference.truncate(n);
    }
    let (reads, truth) = match &g.reads {
        Some(p) => (read_sequences(p)?.into_iter().map(|r| r.seq).collect(), None),
        None => {
            // A separate stream from the reference's, so the two never correlate.
            let s = simulate_reads(
                &reference,
                g.read_count,
                g.read_length,
                g.error_rate,
                g.indel_fraction,
                cfg.rng_seed ^ 0x5eed_5eed_5eed_5eed,
            )?;
            (s.reads, Some(s.truth))
        }
    };
    let index = match &g.index {
        Some(p) => {
            let idx = load_index(p)?;
            if idx.k() != g.k || idx.reference_length() != reference.len() as u64 {
                return Err(CliError::Config(format!(
                    "index {} was built with k = {} over {} bases, config has k = {} and {} bases",
                    p.display(),
                    idx.k(),
                    idx.reference_length(),
                    g.k,
                    reference.len()
                )));
            }
            idx
        }
        None => build_index(&reference, g.k)?,
    };
    Ok(GenomicsInput {
        reference,
        reads,
        truth,
        index,
    })
}

fn annotate(report: &mut RunReport, cfg: &ExperimentConfig) {
    let p = &mut report.params;
    p.insert("rng_seed".into(), cfg.rng_seed.to_string());
    p.insert(
        "mapping_policy".into(),
        serde_json::to_value(cfg.mapping_policy).unwrap().as_str().unwrap_or("").into(),
    );
}

pub fn run_apsp(cfg: &ExperimentConfig, m: &DistanceMatrix) -> Result<(DistanceMatrix, RunReport)> {
    let run = run_apsp_sim(&cfg.sim(), m, cfg.apsp.block)?;
    let mut report = run.report;
    annotate(&mut report, cfg);
    if let Some(g) = &cfg.apsp.graph {
        report.params.insert("graph".into(), g.display().to_string());
    }
    if m.n() > DESK_MAX_NODES {
        report
            .warnings
            .push(format!("{} vertices is beyond desk scale ({DESK_MAX_NODES}); expect long runtimes", m.n()));
    }
    Ok((run.matrix, report))
}

pub fn run_genomics(cfg: &ExperimentConfig, input: &GenomicsInput) -> Result<GenomicsRun> {
    let g = &cfg.genomics;
    let mut run = run_genomics_sim(
        &cfg.sim(),
        &input.index,
        &input.reference,
        &input.reads,
        &g.seeding,
        &g.alignment,
        g.mode,
    )?;
    let report = &mut run.report;
    annotate(report, cfg);
    report.params.insert("read_length".into(), g.read_length.to_string());
    report.params.insert("error_rate".into(), g.error_rate.to_string());
    report.params.insert("stride".into(), g.seeding.stride.to_string());
    report.params.insert("max_candidates".into(), g.seeding.max_candidates.to_string());
    if input.reference.len() > DESK_MAX_REFERENCE {
        report.warnings.push(format!(
            "reference of {} bases is beyond desk scale ({DESK_MAX_REFERENCE}); expect long runtimes",
            input.reference.len()
        ));
    }
    if input.reads.len() > DESK_MAX_READS {
        report.warnings.push(format!(
            "{} reads is beyond desk scale ({DESK_MAX_READS}); expect long runtimes",
            input.reads.len()
        ));
    }
    if let Some(truth) = &input.truth {
        let hit = run
            .results
            .iter()
            .zip(truth)
            .filter(|(r, &t)| r.best_alignment().is_some_and(|(c, _)| (c.reference_position as usize).abs_diff(t) <= g.alignment.band_width))
            .count();
        run.report.derived.insert("mapped_fraction".into(), hit as f64 / truth.len().max(1) as f64);
    }
    Ok(run)
}
