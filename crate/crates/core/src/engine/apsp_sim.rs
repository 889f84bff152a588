//! Tiled shortest paths on the compute PUs: one PU closes the pivot tile, the pivot
//! row and column update in parallel after a ring broadcast, then every remaining
//! tile updates on the PU chosen by the modulo tile map.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::ledger::CycleLedger;
use super::{broadcast_cost, pe_compute_cycles, EventCounts, PuClass, RunReport, SimConfig};
use crate::apsp::{blocked_fw_visit, DistanceMatrix, Phase, TileVisitor};
use crate::memmodel::{map_tile, map_tile_over, place_segments, Segment};
use crate::{Error, Result};

const ELEMENT_BITS: u32 = 32;

#[derive(Debug, Clone)]
pub struct ApspRun {
    pub matrix: DistanceMatrix,
    pub report: RunReport,
    pub ledger: CycleLedger,
}

#[derive(Default)]
struct Recorder {
    tiles: Vec<(Phase, usize, usize, usize)>,
}

impl TileVisitor for Recorder {
    fn tile(&mut self, phase: Phase, k: usize, i: usize, j: usize) {
        self.tiles.push((phase, k, i, j));
    }
}

/// Cycle cost of one tile operation, assuming operand double-buffering so compute,
/// the shared-memory port and the DRAM stream overlap.
#[derive(Debug, Clone, Copy)]
struct TileCost {
    pivot: u64,
    update: u64,
    dram: u64,
}

fn tile_cost(cfg: &SimConfig, b: u64, timing_tier: usize) -> Result<TileCost> {
    let pu = &cfg.pu;
    let ops = b * b * b;
    let lanes = pu.pes_per_pu as u64 * pu.lanes_per_pe(ELEMENT_BITS)?;
    let port = (ops * ELEMENT_BITS as u64).div_ceil(pu.shared_port_bits_per_cycle);
    let tile_bits = b * b * ELEMENT_BITS as u64;
    let activate = cfg.mem.timing().t_rc(timing_tier)?.div_ceil(pu.cycle_ps());
    let dram = (2 * tile_bits).div_ceil(cfg.mem.io_bits_per_pu) + activate;
    // The pivot tile's k-loop is sequential: B dependent rounds of B² lane ops.
    let pivot = (b * (b * b).div_ceil(lanes)).max(port).max(dram);
    let update = pe_compute_cycles(ops, pu, ELEMENT_BITS)?.max(port).max(dram);
    Ok(TileCost { pivot, update, dram })
}

fn tile_events(cfg: &SimConfig, b: u64) -> Result<EventCounts> {
    let vector_ops = (b * b * b).div_ceil(cfg.pu.lanes_per_pe(ELEMENT_BITS)?);
    Ok(EventCounts {
        dram_bits: 2 * b * b * ELEMENT_BITS as u64,
        // One operand line from shared memory per vector op, target read and write locally.
        shared_sram_accesses: vector_ops,
        local_sram_accesses: 2 * vector_ops,
        ring_byte_hops: 0,
        pe_ops: vector_ops,
    })
}

/// Runs blocked Floyd-Warshall on the simulated array. `m` is padded to a multiple of
/// `b` with unreachable phantom nodes (timed like real ones) and trimmed afterwards.
pub fn run_apsp_sim(cfg: &SimConfig, m: &DistanceMatrix, b: usize) -> Result<ApspRun> {
    cfg.validate()?;
    if b == 0 {
        return Err(Error::Config("block size must be >= 1".into()));
    }
    let padded = m.padded(b)?;
    let n = padded.n();
    let t = n / b;
    let pool = cfg.pu.compute_pus;
    let pes = cfg.pu.pes_per_pu as u64;
    let cyc = cfg.pu.cycle_ps();

    let placement = place_segments(
        &[(Segment::DistanceMatrix, (n * n) as u64 * ELEMENT_BITS as u64)],
        cfg.mapping_policy,
        &cfg.mem,
    )?;
    let home_tier = placement.get(Segment::DistanceMatrix).map_or(0, |p| p.tier_range.0);
    let cost = tile_cost(cfg, b as u64, placement.timing_tier(home_tier))?;
    let per_tile = tile_events(cfg, b as u64)?;

    let mut rec = Recorder::default();
    let out = blocked_fw_visit(&padded, b, &mut rec)?;

    let tile_bytes = (b * b) as u64 * ELEMENT_BITS as u64 / 8;
    let fanout = cfg.pu.total_pus as u64 - 1;
    let mut ledger = CycleLedger {
        cycle_ps: cyc,
        phases: vec!["pivot", "rowcol", "internal"],
        ..Default::default()
    };
    ledger.capacity.insert(PuClass::Search, cfg.pu.search_pus as u64 * pes);
    ledger.capacity.insert(PuClass::Compute, pool as u64 * pes);

    let mut counts = EventCounts::default();
    let mut histogram = vec![0u64; pool];
    let mut clock = 0u64;
    let mut phase_sum = [0u64; 3];
    let mut max_internal_per_step = 0u64;
    let mut rowcol = vec![0u64; pool];
    let mut internal = vec![0u64; pool];
    let mut group_dram = vec![0u64; cfg.mem.bank_groups()];

    let mut idx = 0;
    for k in 0..t {
        let step = &rec.tiles[idx..idx + t * t];
        idx += t * t;
        rowcol.iter_mut().for_each(|c| *c = 0);
        internal.iter_mut().for_each(|c| *c = 0);
        group_dram.iter_mut().for_each(|c| *c = 0);
        let mut saw_pivot = false;
        // Only the internal phase is bound to the tile map; pivot row and column
        // tiles are dealt round-robin so a column never piles onto a few PUs.
        let mut next_rowcol = 0;
        for &(phase, kk, i, j) in step {
            debug_assert_eq!(kk, k);
            match phase {
                Phase::Pivot => saw_pivot = true,
                Phase::RowCol => {
                    rowcol[next_rowcol % pool] += 1;
                    next_rowcol += 1;
                }
                Phase::Internal => {
                    let p = map_tile_over(i, j, t, pool);
                    internal[p] += 1;
                    histogram[p] += 1;
                    group_dram[map_tile(i, j, t, &cfg.mem)] += cost.dram;
                }
            }
            counts.add(&per_tile);
        }
        if !saw_pivot {
            return Err(Error::Usage(format!("super-step {k} has no pivot tile")));
        }

        // Pivot: a single PU.
        let start = clock;
        let pivot_len = cost.pivot;
        ledger.window("pivot", start * cyc, (start + pivot_len) * cyc);
        ledger.busy(PuClass::Compute, pes as u32, start * cyc, (start + pivot_len) * cyc);
        clock += pivot_len;
        phase_sum[0] += pivot_len;

        // Pivot row and column, after the pivot tile reaches every PU.
        let start = clock;
        let mut rowcol_len = 0;
        if t > 1 {
            let bc = broadcast_cost(tile_bytes, &cfg.pu);
            counts.ring_byte_hops += tile_bytes * fanout;
            let max_load = rowcol.iter().max().copied().unwrap_or(0) * cost.update;
            rowcol_len = bc + max_load;
            for &c in &rowcol {
                let s = start + bc;
                ledger.busy(PuClass::Compute, pes as u32, s * cyc, (s + c * cost.update) * cyc);
            }
        }
        ledger.window("rowcol", start * cyc, (start + rowcol_len) * cyc);
        clock += rowcol_len;
        phase_sum[1] += rowcol_len;

        // Remaining tiles; propagating the updated row/column tiles overlaps the work.
        let start = clock;
        let mut internal_len = 0;
        if t > 1 {
            let moved = 2 * (t as u64 - 1) * tile_bytes;
            counts.ring_byte_hops += moved * fanout;
            let max_tiles = internal.iter().max().copied().unwrap_or(0);
            max_internal_per_step = max_internal_per_step.max(max_tiles);
            let max_group = group_dram.iter().max().copied().unwrap_or(0);
            internal_len = (max_tiles * cost.update).max(broadcast_cost(moved, &cfg.pu)).max(max_group);
            for &c in &internal {
                ledger.busy(PuClass::Compute, pes as u32, start * cyc, (start + c * cost.update) * cyc);
            }
        }
        ledger.window("internal", start * cyc, (start + internal_len) * cyc);
        clock += internal_len;
        phase_sum[2] += internal_len;
    }
    debug_assert_eq!(clock, phase_sum.iter().sum::<u64>());

    let mut report = RunReport::assemble("apsp", "systolic", cfg, &ledger, clock, counts);
    report.params.insert("n".into(), m.n().to_string());
    report.params.insert("block".into(), b.to_string());
    report.params.insert("padded_n".into(), n.to_string());
    report.tile_histogram = histogram;
    for (key, v) in [
        ("super_steps", t as u64),
        ("tile_cycles_pivot", cost.pivot),
        ("tile_cycles_update", cost.update),
        ("tile_cycles_dram", cost.dram),
        ("max_internal_tiles_per_pu_step", max_internal_per_step),
        ("internal_tiles_per_step", ((t - 1) * (t - 1)) as u64),
    ] {
        report.stats.insert(key.into(), v);
    }
    Ok(ApspRun {
        matrix: out.truncated(m.n()),
        report,
        ledger,
    })
}
