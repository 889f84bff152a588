//! Seeding→alignment as a producer/consumer pipeline.
//!
//! Functional results come from the pure kernels first; the timing model then replays
//! the recorded work. Search PEs walk PTR→CAL chains through per-PU bank queues, push
//! candidate batches into a bounded queue, and compute PEs drain it, each fetching the
//! reference window and running the banded DP.

use alloc::collections::{BTreeSet, BinaryHeap, VecDeque};
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use serde::{Deserialize, Serialize};

use super::ledger::CycleLedger;
use super::{serialization_cycles, EventCounts, PuClass, RunReport, SimConfig};
use crate::align::{align_banded, AlignmentParams, AlignmentResult};
use crate::memmodel::{decompose, place_segments, BankState, PhysicalAddress, Placement, Segment, Timing};
use crate::seed::{seed_read_traced, Candidate, SeedIndex, SeedParams, SeedTrace};
use crate::util::ns_to_ps;
use crate::{Error, Result};

const SRAM_LINE_BYTES: u64 = 64;
const PTR_ENTRY_BYTES: u64 = 8;
const CAL_ENTRY_BYTES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    /// Search and compute PUs overlap through the candidate queue.
    Integrated,
    /// Seeding on the host, then alignment on the compute PUs.
    Hybrid,
    /// Both stages on the host.
    CpuBaseline,
}

impl PipelineMode {
    pub fn name(self) -> &'static str {
        match self {
            PipelineMode::Integrated => "integrated",
            PipelineMode::Hybrid => "hybrid",
            PipelineMode::CpuBaseline => "cpu_baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadAlignment {
    pub read: usize,
    pub candidates: Vec<Candidate>,
    /// One per candidate, same order.
    pub alignments: Vec<AlignmentResult>,
    /// Highest-scoring candidate; ties keep the earlier (better-voted) one.
    pub best: Option<usize>,
}

impl ReadAlignment {
    pub fn best_alignment(&self) -> Option<(&Candidate, &AlignmentResult)> {
        self.best.map(|b| (&self.candidates[b], &self.alignments[b]))
    }
}

#[derive(Debug, Clone)]
pub struct GenomicsRun {
    pub results: Vec<ReadAlignment>,
    pub report: RunReport,
    pub ledger: CycleLedger,
}

/// Reference slice a candidate is aligned against: from the candidate start, read
/// length plus band slack.
fn window(c: &Candidate, read_len: usize, band: usize, ref_len: usize) -> (usize, usize) {
    let s = (c.reference_position as usize).min(ref_len);
    (s, (s + read_len + band).min(ref_len))
}

fn align_one(
    index: &SeedIndex,
    reference: &[u8],
    r: usize,
    read: &[u8],
    sp: &SeedParams,
    ap: &AlignmentParams,
) -> Result<(ReadAlignment, SeedTrace)> {
    let (candidates, trace) = seed_read_traced(index, read, sp)?;
    let mut alignments: Vec<AlignmentResult> = Vec::with_capacity(candidates.len());
    let mut best: Option<usize> = None;
    for (ci, c) in candidates.iter().enumerate() {
        let (s, e) = window(c, read.len(), ap.band_width, reference.len());
        let a = align_banded(read, &reference[s..e], ap)?;
        if best.map_or(true, |b| a.score > alignments[b].score) {
            best = Some(ci);
        }
        alignments.push(a);
    }
    Ok((
        ReadAlignment {
            read: r,
            candidates,
            alignments,
            best,
        },
        trace,
    ))
}

/// The functional pipeline on its own: seed each read, align every candidate, keep
/// the best.
pub fn align_reads(
    index: &SeedIndex,
    reference: &[u8],
    reads: &[Vec<u8>],
    sp: &SeedParams,
    ap: &AlignmentParams,
) -> Result<Vec<ReadAlignment>> {
    ap.validate()?;
    reads
        .iter()
        .enumerate()
        .map(|(r, read)| align_one(index, reference, r, read, sp, ap).map(|x| x.0))
        .collect()
}

struct Access {
    server: usize,
    pre_ps: u64,
    hold_ps: u64,
}

struct SearchJob {
    read: usize,
    head_ps: u64,
    accesses: Vec<Access>,
    tail_ps: u64,
}

struct Batch {
    read: usize,
    avail_ps: u64,
}

/// Shared timing context for one run.
struct Model<'a> {
    cfg: &'a SimConfig,
    timing: Timing,
    placement: Placement,
    cyc: u64,
    quantum_bytes: u64,
    banks_per_group: usize,
    align_lanes: u64,
    ring_hops: u64,
}

impl Model<'_> {
    fn locate(&self, seg: Segment, off: u64) -> Result<PhysicalAddress> {
        let a = self
            .placement
            .address(seg, off)
            .ok_or_else(|| Error::Usage(format!("segment {seg:?} was not placed")))?;
        decompose(a, &self.cfg.mem)
    }

    fn t_rc(&self, a: &PhysicalAddress) -> u64 {
        self.timing.t_rc_unchecked(self.placement.timing_tier(a.tier))
    }

    fn quanta(&self, off: u64, bytes: u64) -> u64 {
        if bytes == 0 {
            0
        } else {
            (off + bytes - 1) / self.quantum_bytes - off / self.quantum_bytes + 1
        }
    }

    /// Reads `bytes` from `seg` quantum by quantum through the open-page bank state.
    fn stream(&self, banks: &mut BankState, seg: Segment, off: u64, bytes: u64) -> Result<(u64, u64)> {
        let mut ps = 0;
        let first = off / self.quantum_bytes;
        let n = self.quanta(off, bytes);
        for q in first..first + n {
            let a = self.locate(seg, q * self.quantum_bytes)?;
            ps += banks.access(&a, &self.timing, self.placement.timing_tier(a.tier)).1;
        }
        Ok((ps, n))
    }

    fn ring_ps(&self, bytes: u64) -> u64 {
        (serialization_cycles(bytes, &self.cfg.pu) + self.ring_hops * self.cfg.pu.hop_latency_cycles) * self.cyc
    }

    fn batch_bytes(&self, read_len: usize, candidates: usize) -> u64 {
        let p = &self.cfg.pipeline;
        p.batch_header_bytes + (read_len as u64).div_ceil(4) + candidates as u64 * p.candidate_bytes
    }

    /// Access chain of one read on a search PE, plus its event counts.
    fn search_job(
        &self,
        read: usize,
        read_off: u64,
        read_len: usize,
        trace: &SeedTrace,
        read_banks: &mut BankState,
        ev: &mut EventCounts,
    ) -> Result<SearchJob> {
        let p = &self.cfg.pipeline;
        let q_bits = self.quantum_bytes * 8;
        let (head_ps, nq) = self.stream(read_banks, Segment::ReadBuffer, read_off, (read_len as u64).div_ceil(4))?;
        ev.dram_bits += nq * q_bits;
        let mut accesses = Vec::with_capacity(2 * trace.lookups.len());
        for l in &trace.lookups {
            let a = self.locate(Segment::Ptr, l.group as u64 * PTR_ENTRY_BYTES)?;
            accesses.push(Access {
                server: a.bank_group * self.banks_per_group + a.bank,
                pre_ps: p.lookup_issue_cycles * self.cyc,
                hold_ps: self.t_rc(&a),
            });
            ev.dram_bits += q_bits;
            ev.local_sram_accesses += 1;
            ev.pe_ops += p.lookup_issue_cycles;
            if !l.skipped && l.cal_len > 0 {
                let off = l.cal_start * CAL_ENTRY_BYTES;
                let bytes = l.cal_len as u64 * CAL_ENTRY_BYTES;
                let a = self.locate(Segment::Cal, off)?;
                let nq = self.quanta(off, bytes);
                accesses.push(Access {
                    server: a.bank_group * self.banks_per_group + a.bank,
                    pre_ps: 0,
                    hold_ps: self.t_rc(&a) + (nq - 1) * self.timing.cas,
                });
                ev.dram_bits += nq * q_bits;
            }
        }
        let tail_cycles = trace.hits * p.extract_cycles_per_hit + trace.bins * p.sort_cycles_per_bin;
        ev.local_sram_accesses += trace.hits + trace.bins;
        ev.pe_ops += tail_cycles;
        Ok(SearchJob {
            read,
            head_ps,
            accesses,
            tail_ps: tail_cycles * self.cyc,
        })
    }

    /// Compute-PE time for one batch: per candidate, fetch the reference window and
    /// run the DP wavefront.
    fn compute_ps(
        &self,
        ra: &ReadAlignment,
        read_len: usize,
        band: usize,
        ref_len: usize,
        ref_banks: &mut BankState,
        ev: &mut EventCounts,
    ) -> Result<u64> {
        let p = &self.cfg.pipeline;
        let mut ps = 0;
        let batch = self.batch_bytes(read_len, ra.candidates.len());
        ev.shared_sram_accesses += batch.div_ceil(SRAM_LINE_BYTES);
        for (c, a) in ra.candidates.iter().zip(&ra.alignments) {
            let (s, e) = window(c, read_len, band, ref_len);
            let off = s as u64 / 4;
            let bytes = (e as u64).div_ceil(4) - off;
            let (fetch, nq) = self.stream(ref_banks, Segment::Reference, off, bytes)?;
            ev.dram_bits += nq * self.quantum_bytes * 8;
            ev.local_sram_accesses += bytes.div_ceil(SRAM_LINE_BYTES);
            let steps = a.work.steps as u64;
            let per_step = if steps == 0 { 0 } else { a.work.cells.div_ceil(steps) };
            let vector_ops = steps * per_step.div_ceil(self.align_lanes) * p.dp_ops_per_step;
            ev.pe_ops += vector_ops;
            ev.local_sram_accesses += 2 * steps;
            ps += fetch + vector_ops * self.cyc;
        }
        Ok(ps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Ev {
    Search(usize),
    Compute(usize),
}

struct Queue {
    heap: BinaryHeap<Reverse<(u64, u64, Ev)>>,
    seq: u64,
}

impl Queue {
    fn push(&mut self, t: u64, e: Ev) {
        self.heap.push(Reverse((t, self.seq, e)));
        self.seq += 1;
    }
}

/// Runs the full seeding→alignment workload. Results equal [`align_reads`] in every
/// mode; only the timing differs.
#[allow(clippy::too_many_arguments)]
pub fn run_genomics_sim(
    cfg: &SimConfig,
    index: &SeedIndex,
    reference: &[u8],
    reads: &[Vec<u8>],
    sp: &SeedParams,
    ap: &AlignmentParams,
    mode: PipelineMode,
) -> Result<GenomicsRun> {
    cfg.validate()?;
    ap.validate()?;
    sp.validate()?;
    if reads.is_empty() {
        return Err(Error::Input("no reads to align".into()));
    }
    if reference.len() as u64 != index.reference_length() {
        return Err(Error::Input(format!(
            "reference has {} bases but the index was built over {}",
            reference.len(),
            index.reference_length()
        )));
    }

    let mut results = Vec::with_capacity(reads.len());
    let mut traces = Vec::with_capacity(reads.len());
    for (r, read) in reads.iter().enumerate() {
        let (ra, tr) = align_one(index, reference, r, read, sp, ap)?;
        results.push(ra);
        traces.push(tr);
    }

    let read_bases: u64 = reads.iter().map(|r| r.len() as u64).sum();
    let placement = place_segments(
        &[
            (Segment::Ptr, index.ptr_bits()),
            (Segment::Cal, index.cal_bits()),
            (Segment::Reference, 2 * reference.len() as u64),
            (Segment::ReadBuffer, 2 * read_bases),
        ],
        cfg.mapping_policy,
        &cfg.mem,
    )?;
    let pu = &cfg.pu;
    let model = Model {
        cfg,
        timing: cfg.mem.timing(),
        placement,
        cyc: pu.cycle_ps(),
        quantum_bytes: cfg.mem.access_quantum_bits / 8,
        banks_per_group: cfg.mem.banks_per_group(),
        align_lanes: pu.lanes_per_pe(cfg.pipeline.align_element_bits)?,
        ring_hops: (pu.total_pus as u64).div_ceil(4),
    };
    let pes = pu.pes_per_pu;
    let n_search = pu.search_pus * pes;
    let n_compute = pu.compute_pus * pes;
    let cyc = model.cyc;

    let mut ledger = CycleLedger {
        cycle_ps: cyc,
        phases: vec!["seeding", "alignment"],
        overlap: Some(("pipeline_overlap", "seeding", "alignment")),
        ..Default::default()
    };
    ledger.capacity.insert(PuClass::Search, n_search as u64);
    ledger.capacity.insert(PuClass::Compute, n_compute as u64);
    let mut counts = EventCounts::default();
    let mut stats = alloc::collections::BTreeMap::new();
    let band = ap.band_width;
    let ref_len = reference.len();
    let host = |ns_per_base: f64| ns_to_ps(ns_per_base * read_bases as f64);

    let end_ps = match mode {
        PipelineMode::CpuBaseline => {
            let s = host(cfg.pipeline.host_seed_ns_per_base);
            let a = host(cfg.pipeline.host_align_ns_per_base);
            ledger.window("seeding", 0, s);
            ledger.window("alignment", s, s + a);
            s + a
        }
        PipelineMode::Hybrid => {
            let t0 = host(cfg.pipeline.host_seed_ns_per_base);
            ledger.window("seeding", 0, t0);
            let mut ref_banks = BankState::new(&cfg.mem);
            let mut free: BinaryHeap<Reverse<(u64, usize)>> = (0..n_compute).map(|c| Reverse((t0, c))).collect();
            let mut end = t0;
            for ra in results.iter().filter(|ra| !ra.candidates.is_empty()) {
                let Reverse((at, c)) = free.pop().expect("at least one compute PE");
                let len = reads[ra.read].len();
                let cost = model.compute_ps(ra, len, band, ref_len, &mut ref_banks, &mut counts)?;
                ledger.window("alignment", at, at + cost);
                ledger.busy(PuClass::Compute, 1, at, at + cost);
                end = end.max(at + cost);
                free.push(Reverse((at + cost, c)));
            }
            end
        }
        PipelineMode::Integrated => {
            let mut read_off = vec![0u64; reads.len()];
            let mut acc = 0;
            for (r, read) in reads.iter().enumerate() {
                read_off[r] = acc;
                acc += (read.len() as u64).div_ceil(4);
            }
            let mut read_banks = BankState::new(&cfg.mem);
            let mut ref_banks = BankState::new(&cfg.mem);
            let mut servers = vec![vec![0u64; cfg.mem.banks_per_channel]; pu.search_pus];
            let mut jobs: Vec<Option<SearchJob>> = (0..n_search).map(|_| None).collect();
            let mut step = vec![0usize; n_search];
            let mut busy_start = vec![0u64; n_search];
            let mut fifo: VecDeque<Batch> = VecDeque::new();
            let mut blocked: VecDeque<(usize, Batch, u64)> = VecDeque::new();
            let mut idle: BTreeSet<usize> = (0..n_compute).collect();
            let mut q = Queue {
                heap: BinaryHeap::new(),
                seq: 0,
            };
            let mut next_read = 0usize;
            let (mut stalls, mut stall_ps, mut wait_ps, mut max_fill, mut done_reads) = (0u64, 0u64, 0u64, 0usize, 0usize);

            macro_rules! start_read {
                ($pe:expr, $t:expr) => {{
                    let pe: usize = $pe;
                    if next_read < reads.len() {
                        let r = next_read;
                        next_read += 1;
                        let job = model.search_job(
                            r,
                            read_off[r],
                            reads[r].len(),
                            &traces[r],
                            &mut read_banks,
                            &mut counts,
                        )?;
                        busy_start[pe] = $t;
                        step[pe] = 0;
                        q.push($t + job.head_ps, Ev::Search(pe));
                        jobs[pe] = Some(job);
                    } else {
                        jobs[pe] = None;
                    }
                }};
            }
            macro_rules! enqueue {
                ($b:expr, $t:expr) => {{
                    fifo.push_back($b);
                    max_fill = max_fill.max(fifo.len());
                    if let Some(c) = idle.pop_first() {
                        q.push($t, Ev::Compute(c));
                    }
                }};
            }

            // Fill PEs round-robin over PUs so early reads spread across bank queues.
            for l in 0..pes {
                for p in 0..pu.search_pus {
                    start_read!(p * pes + l, 0);
                }
            }
            let mut end = 0u64;
            while let Some(Reverse((t, _, ev))) = q.heap.pop() {
                end = end.max(t);
                match ev {
                    Ev::Search(pe) => {
                        let job = jobs[pe].as_ref().expect("search event without a job");
                        let s = step[pe];
                        if s < job.accesses.len() {
                            let a = &job.accesses[s];
                            let ready = t + a.pre_ps;
                            let srv = &mut servers[pe / pes][a.server];
                            let begin = ready.max(*srv);
                            wait_ps += begin - ready;
                            *srv = begin + a.hold_ps;
                            step[pe] += 1;
                            q.push(begin + a.hold_ps, Ev::Search(pe));
                        } else if s == job.accesses.len() {
                            step[pe] += 1;
                            q.push(t + job.tail_ps, Ev::Search(pe));
                        } else {
                            let r = job.read;
                            ledger.window("seeding", busy_start[pe], t);
                            ledger.busy(PuClass::Search, 1, busy_start[pe], t);
                            done_reads += 1;
                            let ra = &results[r];
                            if ra.candidates.is_empty() {
                                start_read!(pe, t);
                                continue;
                            }
                            let bytes = model.batch_bytes(reads[r].len(), ra.candidates.len());
                            counts.shared_sram_accesses += bytes.div_ceil(SRAM_LINE_BYTES);
                            counts.ring_byte_hops += bytes * model.ring_hops;
                            let b = Batch {
                                read: r,
                                avail_ps: t + model.ring_ps(bytes),
                            };
                            if fifo.len() < cfg.pipeline.queue_depth {
                                enqueue!(b, t);
                                start_read!(pe, t);
                            } else {
                                stalls += 1;
                                blocked.push_back((pe, b, t));
                            }
                        }
                    }
                    Ev::Compute(c) => {
                        let Some(b) = fifo.pop_front() else {
                            idle.insert(c);
                            continue;
                        };
                        if let Some((spe, sb, since)) = blocked.pop_front() {
                            stall_ps += t - since;
                            enqueue!(sb, t);
                            start_read!(spe, t);
                        }
                        let begin = t.max(b.avail_ps);
                        let ra = &results[b.read];
                        let cost =
                            model.compute_ps(ra, reads[b.read].len(), band, ref_len, &mut ref_banks, &mut counts)?;
                        ledger.window("alignment", begin, begin + cost);
                        ledger.busy(PuClass::Compute, 1, begin, begin + cost);
                        q.push(begin + cost, Ev::Compute(c));
                    }
                }
            }
            // Producers only block on a full queue and consumers always drain it, so
            // the event loop can only stop with everything delivered.
            assert!(fifo.is_empty() && blocked.is_empty() && done_reads == reads.len());
            stats.insert("stalls".into(), stalls);
            stats.insert("stall_cycles".into(), stall_ps.div_ceil(cyc));
            stats.insert("search_bank_wait_cycles".into(), wait_ps.div_ceil(cyc));
            stats.insert("max_queue_fill".into(), max_fill as u64);
            end
        }
    };

    let total_cycles = end_ps.div_ceil(cyc);
    let mut report = RunReport::assemble("genomics", mode.name(), cfg, &ledger, total_cycles, counts);
    let n_cand: u64 = results.iter().map(|r| r.candidates.len() as u64).sum();
    let lookups: u64 = traces.iter().map(|t| t.lookups.len() as u64).sum();
    stats.insert("reads".into(), reads.len() as u64);
    stats.insert("read_bases".into(), read_bases);
    stats.insert("candidates".into(), n_cand);
    stats.insert("lookups".into(), lookups);
    stats.insert("queue_depth".into(), cfg.pipeline.queue_depth as u64);
    stats.entry("stalls".into()).or_insert(0);
    report.stats = stats;
    report.params.insert("reads".into(), reads.len().to_string());
    report.params.insert("reference_length".into(), reference.len().to_string());
    report.params.insert("k".into(), index.k().to_string());
    report.params.insert("band_width".into(), band.to_string());
    Ok(GenomicsRun {
        results,
        report,
        ledger,
    })
}
