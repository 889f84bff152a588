//! Report serialization: JSON arrays of full reports, or flat CSV rows.

use std::fs;
use std::io::Write;
use std::path::Path;

use dpim_core::engine::RunReport;

use crate::config::Format;
use crate::error::{CliError, Result};

/// CSV header, in order.
pub const CSV_COLUMNS: &[&str] = &[
    "workload",
    "mode",
    "axis",
    "axis_value",
    "mapping_policy",
    "total_pus",
    "search_pus",
    "compute_pus",
    "pes_per_pu",
    "total_cycles",
    "phase_pivot",
    "phase_rowcol",
    "phase_internal",
    "phase_seeding",
    "phase_alignment",
    "phase_pipeline_overlap",
    "energy_dram_pj",
    "energy_shared_sram_pj",
    "energy_local_sram_pj",
    "energy_ring_pj",
    "energy_pe_ops_pj",
    "energy_total_pj",
    "util_search",
    "util_compute",
    "runtime_s",
    "average_power_w",
    "stalls",
    "normalized_speedup",
    "warnings",
];

fn csv_row(r: &RunReport) -> Vec<String> {
    let param = |k: &str| r.params.get(k).cloned().unwrap_or_default();
    let phase = |k: &str| r.phase_cycles.get(k).map(|v| v.to_string()).unwrap_or_default();
    let util = |k: &str| r.utilization.get(k).map(|v| v.to_string()).unwrap_or_default();
    let e = &r.energy_breakdown_pj;
    let policy = serde_json::to_value(r.config.mapping_policy).unwrap();
    vec![
        r.workload.clone(),
        r.mode.clone(),
        param("axis"),
        param("axis_value"),
        policy.as_str().unwrap_or("").to_string(),
        r.config.pu.total_pus.to_string(),
        r.config.pu.search_pus.to_string(),
        r.config.pu.compute_pus.to_string(),
        r.config.pu.pes_per_pu.to_string(),
        r.total_cycles.to_string(),
        phase("pivot"),
        phase("rowcol"),
        phase("internal"),
        phase("seeding"),
        phase("alignment"),
        phase("pipeline_overlap"),
        e.dram.to_string(),
        e.shared_sram.to_string(),
        e.local_sram.to_string(),
        e.ring.to_string(),
        e.pe_ops.to_string(),
        r.total_energy_pj.to_string(),
        util("search"),
        util("compute"),
        r.runtime_s.to_string(),
        r.average_power_w.to_string(),
        r.stats.get("stalls").map(|v| v.to_string()).unwrap_or_default(),
        r.derived.get("normalized_speedup").map(|v| v.to_string()).unwrap_or_default(),
        r.warnings.join("; "),
    ]
}

pub fn render(reports: &[RunReport], format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(reports).map_err(|e| CliError::Report(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| CliError::Report(e.to_string());
            w.write_record(CSV_COLUMNS).map_err(err)?;
            for r in reports {
                w.write_record(csv_row(r)).map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Report(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| CliError::Report(e.to_string()))
        }
    }
}

/// Writes to `out`, or stdout when `None`.
pub fn emit_report(reports: &[RunReport], format: Format, out: Option<&Path>) -> Result<()> {
    let text = render(reports, format)?;
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

/// Accepts either one report or an array of them.
pub fn parse_reports(text: &str) -> Result<Vec<RunReport>> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
    let parsed = if v.is_array() {
        serde_json::from_value(v)
    } else {
        serde_json::from_value(v).map(|r| vec![r])
    };
    parsed.map_err(|e| CliError::Report(e.to_string()))
}
