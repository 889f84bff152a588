//! Library-level checks of sweeps and the genomics front-end.

use serde_json::{json, Value};

use dpim::config::{ExperimentConfig, SweepAxis, SweepSpec, Workload};
use dpim::experiment::{prepare_genomics, run_genomics};
use dpim::sweep::run_sweep;

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.genomics.reference_length = 40_000;
    c.genomics.read_count = 150;
    c
}

fn with_sweep(mut c: ExperimentConfig, axis: SweepAxis, values: Vec<Value>) -> ExperimentConfig {
    c.workload = Workload::Sweep;
    c.sweep = Some(SweepSpec {
        workload: Workload::Genomics,
        axis,
        values,
        baseline: None,
    });
    c
}

/// Leaf paths whose values differ between two JSON documents.
fn diff(a: &Value, b: &Value, path: String, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                diff(va, y.get(k).unwrap_or(&Value::Null), format!("{path}/{k}"), out);
            }
            for k in y.keys().filter(|k| !x.contains_key(*k)) {
                out.push(format!("{path}/{k}"));
            }
        }
        _ if a != b => out.push(path),
        _ => {}
    }
}

#[test]
fn single_value_sweep_equals_direct_run() {
    let base = small();
    let input = prepare_genomics(&base).unwrap();
    let direct = run_genomics(&base, &input).unwrap().report;
    let swept = run_sweep(&with_sweep(base, SweepAxis::PesPerPu, vec![json!(16)]), 1).unwrap();
    assert_eq!(swept.len(), 1);
    let s = &swept[0];
    assert_eq!(s.total_cycles, direct.total_cycles);
    assert_eq!(s.phase_cycles, direct.phase_cycles);
    assert_eq!(s.energy_breakdown_pj, direct.energy_breakdown_pj);
    assert_eq!(s.event_counts, direct.event_counts);
    assert_eq!(s.stats, direct.stats);
    assert_eq!(s.derived["normalized_speedup"], 1.0);
}

#[test]
fn sweep_points_differ_only_on_the_axis() {
    let cases = [
        (SweepAxis::PesPerPu, vec![json!(8), json!(32)], vec!["/pu/pes_per_pu"]),
        (
            SweepAxis::SearchComputeRatio,
            vec![json!("8:24"), json!([16, 16])],
            vec!["/pu/compute_pus", "/pu/search_pus"],
        ),
        (
            SweepAxis::TierPolicy,
            vec![json!("tier_aware"), json!("uniform_worst")],
            vec!["/mapping_policy"],
        ),
        (SweepAxis::TotalPus, vec![json!(32), json!(64)], vec![
            "/pu/compute_pus",
            "/pu/search_pus",
            "/pu/total_pus",
        ]),
    ];
    for (axis, values, want) in cases {
        let reports = run_sweep(&with_sweep(small(), axis, values), 2).unwrap();
        let a = serde_json::to_value(&reports[0].config).unwrap();
        let b = serde_json::to_value(&reports[1].config).unwrap();
        let mut got = Vec::new();
        diff(&a, &b, String::new(), &mut got);
        got.sort();
        assert_eq!(got, want, "{axis:?}");
    }
}

#[test]
fn parallel_and_serial_sweeps_agree() {
    let c = with_sweep(
        small(),
        SweepAxis::PipelineMode,
        vec![json!("integrated"), json!("hybrid"), json!("cpu_baseline")],
    );
    let a = run_sweep(&c, 1).unwrap();
    let b = run_sweep(&c, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[2].mode, "cpu_baseline");
}

#[test]
fn exact_reads_map_to_their_origin() {
    let mut c = small();
    c.genomics.error_rate = 0.0;
    c.genomics.seeding.stride = 1;
    let input = prepare_genomics(&c).unwrap();
    let run = run_genomics(&c, &input).unwrap();
    let truth = input.truth.as_ref().unwrap();
    for (r, &t) in run.results.iter().zip(truth) {
        let (cand, _) = r.best_alignment().expect("every exact read aligns");
        assert_eq!(cand.reference_position as usize, t, "read {}", r.read);
    }
    assert_eq!(run.report.derived["mapped_fraction"], 1.0);
}

#[test]
fn modes_share_alignment_results() {
    let mut c = small();
    let input = prepare_genomics(&c).unwrap();
    let integrated = run_genomics(&c, &input).unwrap();
    c.genomics.mode = dpim_core::engine::PipelineMode::Hybrid;
    let hybrid = run_genomics(&c, &input).unwrap();
    assert_eq!(integrated.results, hybrid.results);
    assert!(integrated.report.total_cycles < hybrid.report.total_cycles);
}
