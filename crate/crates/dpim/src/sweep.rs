//! One-axis parameter sweeps over a base experiment.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::Value;

use dpim_core::engine::{PipelineMode, RunReport};
use dpim_core::memmodel::TierPolicy;

use crate::config::{ExperimentConfig, SweepAxis, Workload};
use crate::error::{CliError, Result};
use crate::experiment::{prepare_apsp, prepare_genomics, run_apsp, run_genomics};

fn as_usize(v: &Value) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| CliError::Config(format!("sweep value {v} must be a non-negative integer")))
}

fn parse_enum<T: serde::de::DeserializeOwned>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Config(format!("sweep value {v}: {e}")))
}

/// Human label of an axis value: bare strings, everything else as JSON.
pub fn value_label(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// The base config with one axis set to `v`.
pub fn apply(base: &ExperimentConfig, axis: SweepAxis, v: &Value) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    c.workload = base.sweep.as_ref().map_or(base.workload, |s| s.workload);
    c.sweep = None;
    match axis {
        SweepAxis::TierPolicy => c.mapping_policy = parse_enum::<TierPolicy>(v)?,
        SweepAxis::PipelineMode => c.genomics.mode = parse_enum::<PipelineMode>(v)?,
        SweepAxis::BandWidth => c.genomics.alignment.band_width = as_usize(v)?,
        SweepAxis::PesPerPu => c.pu.pes_per_pu = as_usize(v)?,
        SweepAxis::TotalPus => {
            // Keeps the default one-search-in-four split.
            let t = as_usize(v)?;
            c.pu.total_pus = t;
            c.pu.search_pus = t / 4;
            c.pu.compute_pus = t - t / 4;
        }
        SweepAxis::SearchComputeRatio => {
            let (s, k) = match v {
                Value::String(x) => {
                    let mut it = x.split(':').map(|p| p.trim().parse::<usize>());
                    match (it.next(), it.next(), it.next()) {
                        (Some(Ok(a)), Some(Ok(b)), None) => (a, b),
                        _ => return Err(CliError::Config(format!("split {x:?} must look like \"8:24\""))),
                    }
                }
                Value::Array(a) if a.len() == 2 => (as_usize(&a[0])?, as_usize(&a[1])?),
                _ => return Err(CliError::Config(format!("split {v} must be \"S:C\" or [S, C]"))),
            };
            c.pu.search_pus = s;
            c.pu.compute_pus = k;
            c.pu.total_pus = s + k;
        }
    }
    Ok(c)
}

/// Runs every axis value on inputs prepared once from the base config, `parallel`
/// runs at a time. Reports come back in axis order with a `normalized_speedup`
/// (baseline cycles over this run's cycles).
pub fn run_sweep(cfg: &ExperimentConfig, parallel: usize) -> Result<Vec<RunReport>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("config has no sweep section".into()))?;
    let points: Vec<ExperimentConfig> = spec
        .values
        .iter()
        .map(|v| apply(cfg, spec.axis, v))
        .collect::<Result<_>>()?;
    enum Input {
        Apsp(dpim_core::apsp::DistanceMatrix),
        Genomics(Box<crate::experiment::GenomicsInput>),
    }
    let input = match spec.workload {
        Workload::Apsp => Input::Apsp(prepare_apsp(&points[0])?),
        Workload::Genomics => Input::Genomics(Box::new(prepare_genomics(&points[0])?)),
        Workload::Sweep => return Err(CliError::Config("nested sweeps are not supported".into())),
    };
    let run_one = |c: &ExperimentConfig| -> Result<RunReport> {
        match &input {
            Input::Apsp(m) => run_apsp(c, m).map(|r| r.1),
            Input::Genomics(g) => run_genomics(c, g).map(|r| r.report),
        }
    };

    let slots: Mutex<Vec<Option<Result<RunReport>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..parallel.clamp(1, points.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let r = run_one(&points[i]);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });

    let axis_name = serde_json::to_value(spec.axis).unwrap();
    let mut reports = Vec::with_capacity(points.len());
    for (i, slot) in slots.into_inner().unwrap().into_iter().enumerate() {
        let v = &spec.values[i];
        let mut r = slot.expect("every sweep point ran").map_err(|e| CliError::Sweep {
            value: value_label(v),
            config: Box::new(serde_json::to_value(&points[i]).unwrap_or(Value::Null)),
            source: Box::new(e),
        })?;
        r.params.insert("axis".into(), value_label(&axis_name));
        r.params.insert("axis_value".into(), value_label(v));
        reports.push(r);
    }
    let base_idx = spec
        .baseline
        .as_ref()
        .and_then(|b| spec.values.iter().position(|v| v == b))
        .unwrap_or(0);
    let base_cycles = reports[base_idx].total_cycles as f64;
    for r in &mut reports {
        let s = if r.total_cycles == 0 {
            0.0
        } else {
            base_cycles / r.total_cycles as f64
        };
        r.derived.insert("normalized_speedup".into(), s);
    }
    Ok(reports)
}
