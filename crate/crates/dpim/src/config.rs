//! Experiment configuration: a JSON document whose every section is optional and
//! falls back to the shipped hardware defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use dpim_core::align::AlignmentParams;
use dpim_core::engine::{EnergyModel, PipelineConfig, PipelineMode, PuConfig, SimConfig};
use dpim_core::memmodel::{MemConfig, TierPolicy};
use dpim_core::seed::{SeedParams, MAX_K, MIN_K};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workload {
    Apsp,
    Genomics,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApspParams {
    /// SNAP edge list; when absent a random graph of `n` vertices is generated.
    pub graph: Option<PathBuf>,
    pub n: usize,
    pub block: usize,
    pub out_degree: usize,
    pub max_weight: i64,
}

impl Default for ApspParams {
    fn default() -> Self {
        ApspParams {
            graph: None,
            n: 512,
            block: 64,
            out_degree: 8,
            max_weight: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenomicsParams {
    /// FASTA; the first record is used. Random when absent.
    pub reference: Option<PathBuf>,
    pub reference_length: usize,
    /// Keep only this many leading bases of a FASTA reference.
    pub reference_slice: Option<usize>,
    /// FASTA or FASTQ reads; simulated when absent.
    pub reads: Option<PathBuf>,
    /// Prebuilt binary index; built from the reference when absent.
    pub index: Option<PathBuf>,
    pub read_count: usize,
    pub read_length: usize,
    pub error_rate: f64,
    pub indel_fraction: f64,
    pub k: usize,
    pub mode: PipelineMode,
    pub seeding: SeedParams,
    pub alignment: AlignmentParams,
}

impl Default for GenomicsParams {
    fn default() -> Self {
        GenomicsParams {
            reference: None,
            reference_length: 1_000_000,
            reference_slice: None,
            reads: None,
            index: None,
            read_count: 10_000,
            read_length: 100,
            error_rate: 0.05,
            indel_fraction: 0.1,
            k: 12,
            mode: PipelineMode::Integrated,
            seeding: SeedParams {
                stride: 12,
                min_votes: 1,
                max_candidates: 2,
                ..SeedParams::default()
            },
            alignment: AlignmentParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    TierPolicy,
    SearchComputeRatio,
    TotalPus,
    PesPerPu,
    PipelineMode,
    BandWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// `apsp` or `genomics`.
    pub workload: Workload,
    pub axis: SweepAxis,
    pub values: Vec<Value>,
    /// Axis value the speedup column is normalized to; the first value when absent.
    #[serde(default)]
    pub baseline: Option<Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub workload: Workload,
    pub rng_seed: u64,
    pub mapping_policy: TierPolicy,
    pub mem: MemConfig,
    pub pu: PuConfig,
    pub energy: EnergyModel,
    pub pipeline: PipelineConfig,
    pub die_area_mm2: f64,
    pub power_density_alarm_w_per_mm2: f64,
    pub apsp: ApspParams,
    pub genomics: GenomicsParams,
    pub sweep: Option<SweepSpec>,
    pub output: OutputSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sim = SimConfig::default();
        ExperimentConfig {
            workload: Workload::Genomics,
            rng_seed: 1,
            mapping_policy: sim.mapping_policy,
            mem: sim.mem,
            pu: sim.pu,
            energy: sim.energy,
            pipeline: sim.pipeline,
            die_area_mm2: sim.die_area_mm2,
            power_density_alarm_w_per_mm2: sim.power_density_alarm_w_per_mm2,
            apsp: ApspParams::default(),
            genomics: GenomicsParams::default(),
            sweep: None,
            output: OutputSpec::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig {
            mem: self.mem.clone(),
            pu: self.pu.clone(),
            energy: self.energy.clone(),
            pipeline: self.pipeline.clone(),
            mapping_policy: self.mapping_policy,
            die_area_mm2: self.die_area_mm2,
            power_density_alarm_w_per_mm2: self.power_density_alarm_w_per_mm2,
        }
    }

    /// Checks every module invariant, including each sweep point.
    pub fn validate(&self) -> Result<()> {
        self.validate_single()?;
        if self.workload == Workload::Sweep {
            let s = self
                .sweep
                .as_ref()
                .ok_or_else(|| CliError::Config("workload \"sweep\" needs a \"sweep\" section".into()))?;
            if s.workload == Workload::Sweep {
                return Err(CliError::Config("sweep.workload must be \"apsp\" or \"genomics\"".into()));
            }
            if s.values.is_empty() {
                return Err(CliError::Config("sweep.values must be non-empty".into()));
            }
            for v in &s.values {
                let point = crate::sweep::apply(self, s.axis, v)?;
                point.validate_single().map_err(|e| CliError::Sweep {
                    value: crate::sweep::value_label(v),
                    config: Box::new(serde_json::to_value(&point).unwrap_or(Value::Null)),
                    source: Box::new(e),
                })?;
            }
            if let Some(b) = &s.baseline {
                if !s.values.contains(b) {
                    return Err(CliError::Config(format!("sweep.baseline {b} is not one of sweep.values")));
                }
            }
        }
        Ok(())
    }

    fn validate_single(&self) -> Result<()> {
        self.sim().validate()?;
        if self.energy.dram_pj_per_bit != self.mem.energy_per_bit_pj {
            return Err(CliError::Config(
                "energy.dram_pj_per_bit and mem.energy_per_bit_pj must agree".into(),
            ));
        }
        if self.apsp.block == 0 || (self.apsp.graph.is_none() && self.apsp.n == 0) {
            return Err(CliError::Config("apsp.block and apsp.n must be >= 1".into()));
        }
        let g = &self.genomics;
        if !(MIN_K..=MAX_K).contains(&g.k) {
            return Err(CliError::Config(format!("genomics.k must be in {MIN_K}..={MAX_K}")));
        }
        if g.reads.is_none() && (g.read_length < g.k || g.read_count == 0) {
            return Err(CliError::Config("genomics.read_length must be >= k and read_count >= 1".into()));
        }
        if !(0.0..1.0).contains(&g.error_rate) || !(0.0..=1.0).contains(&g.indel_fraction) {
            return Err(CliError::Config(
                "genomics.error_rate must be in [0, 1) and indel_fraction in [0, 1]".into(),
            ));
        }
        g.seeding.validate()?;
        g.alignment.validate()?;
        Ok(())
    }
}

/// Overlays `over` on `base`, recursing into objects; anything else replaces.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn has(v: &Value, section: &str, key: &str) -> bool {
    v.get(section).and_then(|s| s.get(key)).is_some()
}

/// Parses a config document; relative paths inside it resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let raw: Value = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    if !raw.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    let mut merged = serde_json::to_value(ExperimentConfig::default()).expect("defaults serialize");
    merge(&mut merged, raw.clone());
    let mut cfg: ExperimentConfig = serde_json::from_value(merged).map_err(|e| CliError::Config(e.to_string()))?;
    // DRAM energy per bit lives in both the device and the energy tables; an override
    // of either one carries over to the other.
    match (has(&raw, "energy", "dram_pj_per_bit"), has(&raw, "mem", "energy_per_bit_pj")) {
        (true, false) => cfg.mem.energy_per_bit_pj = cfg.energy.dram_pj_per_bit,
        (false, true) => cfg.energy.dram_pj_per_bit = cfg.mem.energy_per_bit_pj,
        _ => {}
    }
    let fix = |p: &mut Option<PathBuf>| {
        if let Some(x) = p.as_mut() {
            if x.is_relative() {
                *x = base_dir.join(&*x);
            }
        }
    };
    fix(&mut cfg.apsp.graph);
    fix(&mut cfg.genomics.reference);
    fix(&mut cfg.genomics.reads);
    fix(&mut cfg.genomics.index);
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_config_str(&text, dir)
}
