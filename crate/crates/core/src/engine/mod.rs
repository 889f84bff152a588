//! Cycle and energy accounting for the PU/PE array: the tiled shortest-path schedule,
//! the seeding→alignment pipeline, and the per-run report.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::memmodel::{MemConfig, TierPolicy};
use crate::util::{ceil_to_u64, ns_to_ps};
use crate::{Error, Result};

mod apsp_sim;
mod genomics_sim;
mod ledger;

pub use apsp_sim::{run_apsp_sim, ApspRun};
pub use genomics_sim::{align_reads, run_genomics_sim, GenomicsRun, PipelineMode, ReadAlignment};
pub use ledger::{replay, Busy, CycleLedger, Replay, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PuConfig {
    pub total_pus: usize,
    pub search_pus: usize,
    pub compute_pus: usize,
    pub pes_per_pu: usize,
    pub pe_lane_bits: u32,
    pub compute_pe_buffer_bytes: u64,
    pub search_pe_buffer_bytes: u64,
    pub shared_memory_bytes: u64,
    /// Per ring link, 10^9 bytes per second.
    pub ring_link_gb_per_s: f64,
    pub clock_ghz: f64,
    pub hop_latency_cycles: u64,
    /// Width of a PU's shared-memory read port. Every tile-update lane op pulls one
    /// operand through it, which is what caps scaling past 16 PEs.
    pub shared_port_bits_per_cycle: u64,
}

impl Default for PuConfig {
    fn default() -> Self {
        PuConfig {
            total_pus: 32,
            search_pus: 8,
            compute_pus: 24,
            pes_per_pu: 16,
            pe_lane_bits: 512,
            compute_pe_buffer_bytes: 32 * 1024,
            search_pe_buffer_bytes: 8 * 1024,
            shared_memory_bytes: 256 * 1024,
            ring_link_gb_per_s: 128.0,
            clock_ghz: 1.0,
            hop_latency_cycles: 1,
            shared_port_bits_per_cycle: 9216,
        }
    }
}

impl PuConfig {
    pub fn validate(&self, mem: &MemConfig) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.search_pus + self.compute_pus != self.total_pus {
            return bad(format!(
                "search_pus + compute_pus must equal total_pus ({} + {} != {})",
                self.search_pus, self.compute_pus, self.total_pus
            ));
        }
        if self.compute_pus == 0 {
            return bad("compute_pus must be >= 1".into());
        }
        let groups = mem.bank_groups();
        if !(self.total_pus % groups == 0 || groups % self.total_pus == 0) {
            return bad(format!(
                "PU/bank-group mismatch: total_pus = {} must divide or be a multiple of {} bank groups",
                self.total_pus, groups
            ));
        }
        if self.pes_per_pu == 0 || self.pe_lane_bits == 0 || self.pe_lane_bits % 8 != 0 {
            return bad("pes_per_pu must be >= 1 and pe_lane_bits a positive multiple of 8".into());
        }
        if !(self.ring_link_gb_per_s > 0.0 && self.ring_link_gb_per_s.is_finite()) {
            return bad("ring_link_gb_per_s must be positive".into());
        }
        if !(self.clock_ghz > 0.0 && self.clock_ghz <= 1000.0) {
            return bad("clock_ghz must be in (0, 1000]".into());
        }
        if self.shared_port_bits_per_cycle == 0 {
            return bad("shared_port_bits_per_cycle must be >= 1".into());
        }
        Ok(())
    }

    /// Clock period in picoseconds.
    pub fn cycle_ps(&self) -> u64 {
        ns_to_ps(1.0 / self.clock_ghz).max(1)
    }

    pub fn ring_bytes_per_cycle(&self) -> f64 {
        self.ring_link_gb_per_s / self.clock_ghz
    }

    /// SIMD lanes of one PE for `element_bits`-wide values.
    pub fn lanes_per_pe(&self, element_bits: u32) -> Result<u64> {
        if element_bits == 0 || self.pe_lane_bits % element_bits != 0 {
            return Err(Error::Config(format!(
                "element width {element_bits} does not divide pe_lane_bits = {}",
                self.pe_lane_bits
            )));
        }
        Ok((self.pe_lane_bits / element_bits) as u64)
    }
}

/// Per-event energies. DRAM is per bit, SRAM per access, ring per byte-hop, PE per
/// vector instruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    pub dram_pj_per_bit: f64,
    pub local_sram_nj_per_access: f64,
    pub shared_sram_nj_per_access: f64,
    pub ring_pj_per_byte: f64,
    pub pe_op_pj: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            dram_pj_per_bit: 0.429,
            local_sram_nj_per_access: 0.007,
            shared_sram_nj_per_access: 0.012,
            ring_pj_per_byte: 0.5,
            pe_op_pj: 0.1,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dram_pj_per_bit", self.dram_pj_per_bit),
            ("local_sram_nj_per_access", self.local_sram_nj_per_access),
            ("shared_sram_nj_per_access", self.shared_sram_nj_per_access),
            ("ring_pj_per_byte", self.ring_pj_per_byte),
            ("pe_op_pj", self.pe_op_pj),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("energy constant {name} must be a nonnegative number")));
            }
        }
        Ok(())
    }
}

/// Knobs of the seeding→alignment pipeline that the hardware tables leave open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Candidate batches the search→compute queue holds before producers stall.
    pub queue_depth: usize,
    /// Width of one DP cell in the PE lanes (5-bit differences padded to a byte).
    pub align_element_bits: u32,
    /// Vector instructions per anti-diagonal step per lane group: three
    /// difference-vector updates, their compare/select and the band shift.
    pub dp_ops_per_step: u64,
    /// PE cycles to hash a k-mer and form the pointer-table address.
    pub lookup_issue_cycles: u64,
    pub extract_cycles_per_hit: u64,
    pub sort_cycles_per_bin: u64,
    pub batch_header_bytes: u64,
    pub candidate_bytes: u64,
    /// Host-side cost per read base; only the hybrid and cpu_baseline modes use these.
    /// The defaults split cpu_baseline time 30:70 between seeding and alignment.
    pub host_seed_ns_per_base: f64,
    pub host_align_ns_per_base: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            queue_depth: 64,
            align_element_bits: 8,
            dp_ops_per_step: 7,
            lookup_issue_cycles: 1,
            extract_cycles_per_hit: 1,
            sort_cycles_per_bin: 1,
            batch_header_bytes: 16,
            candidate_bytes: 8,
            host_seed_ns_per_base: 0.6,
            host_align_ns_per_base: 1.4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.queue_depth == 0 {
            return Err(Error::Config("queue_depth must be >= 1".into()));
        }
        for (name, v) in [
            ("host_seed_ns_per_base", self.host_seed_ns_per_base),
            ("host_align_ns_per_base", self.host_align_ns_per_base),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a nonnegative number")));
            }
        }
        Ok(())
    }
}

/// Everything a simulation run depends on besides its input data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub mem: MemConfig,
    pub pu: PuConfig,
    pub energy: EnergyModel,
    pub pipeline: PipelineConfig,
    pub mapping_policy: TierPolicy,
    pub die_area_mm2: f64,
    pub power_density_alarm_w_per_mm2: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            mem: MemConfig::default(),
            pu: PuConfig::default(),
            energy: EnergyModel::default(),
            pipeline: PipelineConfig::default(),
            mapping_policy: TierPolicy::TierAware,
            die_area_mm2: 105.0,
            power_density_alarm_w_per_mm2: 0.3,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.mem.validate()?;
        self.pu.validate(&self.mem)?;
        self.energy.validate()?;
        self.pipeline.validate()?;
        self.pu.lanes_per_pe(self.pipeline.align_element_bits)?;
        if !(self.die_area_mm2 > 0.0 && self.die_area_mm2.is_finite()) {
            return Err(Error::Config("die_area_mm2 must be positive".into()));
        }
        Ok(())
    }
}

/// `ceil(bytes / link bytes per cycle) + ceil(total_pus / 2) × hop latency`: a
/// pipelined cut-through broadcast around a bidirectional ring.
pub fn broadcast_cost(bytes: u64, cfg: &PuConfig) -> u64 {
    if bytes == 0 {
        return 0;
    }
    serialization_cycles(bytes, cfg) + (cfg.total_pus as u64).div_ceil(2) * cfg.hop_latency_cycles
}

pub(crate) fn serialization_cycles(bytes: u64, cfg: &PuConfig) -> u64 {
    ceil_to_u64(bytes as f64 / cfg.ring_bytes_per_cycle())
}

/// Cycles for `op_count` independent lane operations spread over one PU's PEs.
pub fn pe_compute_cycles(op_count: u64, cfg: &PuConfig, element_bits: u32) -> Result<u64> {
    let lanes = cfg.pes_per_pu as u64 * cfg.lanes_per_pe(element_bits)?;
    Ok(op_count.div_ceil(lanes))
}

/// Raw event counts for one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub dram_bits: u64,
    pub shared_sram_accesses: u64,
    pub local_sram_accesses: u64,
    /// Bytes times links traversed.
    pub ring_byte_hops: u64,
    pub pe_ops: u64,
}

impl EventCounts {
    pub fn add(&mut self, o: &EventCounts) {
        self.dram_bits += o.dram_bits;
        self.shared_sram_accesses += o.shared_sram_accesses;
        self.local_sram_accesses += o.local_sram_accesses;
        self.ring_byte_hops += o.ring_byte_hops;
        self.pe_ops += o.pe_ops;
    }
}

/// Component energies in picojoules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub dram: f64,
    pub shared_sram: f64,
    pub local_sram: f64,
    pub ring: f64,
    pub pe_ops: f64,
}

impl EnergyBreakdown {
    /// Components summed in declaration order; the report's total is exactly this.
    pub fn total(&self) -> f64 {
        self.dram + self.shared_sram + self.local_sram + self.ring + self.pe_ops
    }

    pub fn components(&self) -> [(&'static str, f64); 5] {
        [
            ("dram", self.dram),
            ("shared_sram", self.shared_sram),
            ("local_sram", self.local_sram),
            ("ring", self.ring),
            ("pe_ops", self.pe_ops),
        ]
    }
}

pub fn accumulate_energy(counts: &EventCounts, model: &EnergyModel) -> EnergyBreakdown {
    EnergyBreakdown {
        dram: counts.dram_bits as f64 * model.dram_pj_per_bit,
        shared_sram: counts.shared_sram_accesses as f64 * (model.shared_sram_nj_per_access * 1000.0),
        local_sram: counts.local_sram_accesses as f64 * (model.local_sram_nj_per_access * 1000.0),
        ring: counts.ring_byte_hops as f64 * model.ring_pj_per_byte,
        pe_ops: counts.pe_ops as f64 * model.pe_op_pj,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuClass {
    Search,
    Compute,
}

impl PuClass {
    pub fn name(self) -> &'static str {
        match self {
            PuClass::Search => "search",
            PuClass::Compute => "compute",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// `apsp` or `genomics`.
    pub workload: String,
    /// Pipeline mode for genomics, `systolic` for APSP.
    pub mode: String,
    pub config: SimConfig,
    /// Workload parameters (sizes, seeds, file names) as given by the caller.
    pub params: BTreeMap<String, String>,
    pub phase_cycles: BTreeMap<String, u64>,
    pub total_cycles: u64,
    pub energy_breakdown_pj: EnergyBreakdown,
    pub total_energy_pj: f64,
    pub event_counts: EventCounts,
    /// Busy PE-time over available PE-time, per PU class.
    pub utilization: BTreeMap<String, f64>,
    /// Same, restricted to each phase's windows.
    pub phase_utilization: BTreeMap<String, BTreeMap<String, f64>>,
    pub runtime_s: f64,
    pub average_power_w: f64,
    pub power_density_w_per_mm2: f64,
    /// Pipeline stalls, queue depth, tile counts and similar integer statistics.
    pub stats: BTreeMap<String, u64>,
    /// Internal-phase tiles handled by each compute PU over the whole run (APSP only).
    pub tile_histogram: Vec<u64>,
    /// Figures computed by the caller after the run, such as sweep speedups.
    pub derived: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub(crate) fn assemble(
        workload: &str,
        mode: &str,
        cfg: &SimConfig,
        ledger: &CycleLedger,
        total_cycles: u64,
        counts: EventCounts,
    ) -> RunReport {
        let r = replay(ledger);
        let energy = accumulate_energy(&counts, &cfg.energy);
        let total_energy_pj = energy.total();
        let runtime_s = total_cycles as f64 * ledger.cycle_ps as f64 * 1e-12;
        let average_power_w = if runtime_s > 0.0 {
            total_energy_pj * 1e-12 / runtime_s
        } else {
            0.0
        };
        let density = average_power_w / cfg.die_area_mm2;
        let mut warnings = Vec::new();
        if density > cfg.power_density_alarm_w_per_mm2 {
            warnings.push(format!(
                "average power density {density:.4} W/mm^2 exceeds the {} W/mm^2 alarm",
                cfg.power_density_alarm_w_per_mm2
            ));
        }
        RunReport {
            workload: workload.into(),
            mode: mode.into(),
            config: cfg.clone(),
            params: BTreeMap::new(),
            phase_cycles: r.phase_cycles,
            total_cycles,
            energy_breakdown_pj: energy,
            total_energy_pj,
            event_counts: counts,
            utilization: r.utilization,
            phase_utilization: r.phase_utilization,
            runtime_s,
            average_power_w,
            power_density_w_per_mm2: density,
            stats: BTreeMap::new(),
            tile_histogram: Vec::new(),
            derived: BTreeMap::new(),
            warnings,
        }
    }
}

/// Busy-time fraction per PU class (`search`, `compute`), each in [0, 1].
pub fn utilization(report: &RunReport) -> BTreeMap<String, f64> {
    report.utilization.clone()
}
