//! Tiered 3D-DRAM geometry, per-tier timing, open-page bank state, tile-to-PU mapping
//! and segment placement.
//!
//! Time is kept in integer picoseconds so that sums of latencies are exact.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::util::ns_to_ps;
use crate::{Error, Result};

const GIBIBIT: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MemConfig {
    pub layers: u32,
    pub tiers: usize,
    pub tier_capacity_bits: u64,
    pub channels: usize,
    pub banks_per_channel: usize,
    pub bank_groups_per_channel: usize,
    pub row_buffer_bits: u64,
    /// Bits moved by one column burst out of an open row.
    pub access_quantum_bits: u64,
    pub io_bits_per_pu: u64,
    pub t_rcd_ns: Vec<f64>,
    pub t_rp_ns: f64,
    pub t_ras_offset_ns: f64,
    pub cas_ns: f64,
    pub energy_per_bit_pj: f64,
}

impl Default for MemConfig {
    fn default() -> Self {
        MemConfig {
            layers: 1024,
            tiers: 8,
            tier_capacity_bits: 4 * GIBIBIT,
            channels: 16,
            banks_per_channel: 16,
            bank_groups_per_channel: 2,
            row_buffer_bits: 32 * 1024,
            access_quantum_bits: 8192,
            io_bits_per_pu: 1024,
            t_rcd_ns: vec![2.29, 3.92, 5.99, 8.50, 11.44, 14.82, 18.63, 22.88],
            t_rp_ns: 4.77,
            t_ras_offset_ns: 27.5,
            cas_ns: 2.0,
            energy_per_bit_pj: 0.429,
        }
    }
}

impl MemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: alloc::string::String| Err(Error::Config(m));
        if self.tiers == 0 || self.channels == 0 || self.banks_per_channel == 0 || self.bank_groups_per_channel == 0 {
            return bad("tiers, channels, banks_per_channel and bank_groups_per_channel must be >= 1".into());
        }
        if self.t_rcd_ns.len() != self.tiers {
            return bad(format!("t_rcd_ns has {} entries for {} tiers", self.t_rcd_ns.len(), self.tiers));
        }
        if self.t_rcd_ns.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return bad("t_rcd_ns entries must be positive".into());
        }
        if self.t_rcd_ns.windows(2).any(|w| w[0] >= w[1]) {
            return bad("t_rcd_ns must be strictly increasing with tier index".into());
        }
        for (name, v) in [
            ("t_rp_ns", self.t_rp_ns),
            ("t_ras_offset_ns", self.t_ras_offset_ns),
            ("cas_ns", self.cas_ns),
            ("energy_per_bit_pj", self.energy_per_bit_pj),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a nonnegative number"));
            }
        }
        if self.banks_per_channel % self.bank_groups_per_channel != 0 {
            return bad("banks_per_channel must be a multiple of bank_groups_per_channel".into());
        }
        if self.row_buffer_bits == 0 || self.row_buffer_bits % 8 != 0 {
            return bad("row_buffer_bits must be a positive multiple of 8".into());
        }
        if self.access_quantum_bits == 0 || self.row_buffer_bits % self.access_quantum_bits != 0 {
            return bad("access_quantum_bits must divide row_buffer_bits".into());
        }
        let per_row_slot = self.row_buffer_bits * (self.channels * self.banks_per_channel) as u64;
        if self.tier_capacity_bits == 0 || self.tier_capacity_bits % per_row_slot != 0 {
            return bad("tier_capacity_bits must be a whole number of rows in every bank".into());
        }
        Ok(())
    }

    pub fn bank_groups(&self) -> usize {
        self.channels * self.bank_groups_per_channel
    }

    pub fn banks_per_group(&self) -> usize {
        self.banks_per_channel / self.bank_groups_per_channel
    }

    pub fn total_banks(&self) -> usize {
        self.channels * self.banks_per_channel
    }

    pub fn row_bytes(&self) -> u64 {
        self.row_buffer_bits / 8
    }

    /// Rows each bank holds inside one tier.
    pub fn rows_per_bank_tier(&self) -> u64 {
        self.tier_capacity_bits / (self.row_buffer_bits * self.total_banks() as u64)
    }

    pub fn capacity_bits(&self) -> u64 {
        self.tier_capacity_bits * self.tiers as u64
    }

    pub fn tier_bytes(&self) -> u64 {
        self.tier_capacity_bits / 8
    }

    pub fn timing(&self) -> Timing {
        Timing {
            t_rcd: self.t_rcd_ns.iter().map(|&t| ns_to_ps(t)).collect(),
            t_rp: ns_to_ps(self.t_rp_ns),
            t_ras_offset: ns_to_ps(self.t_ras_offset_ns),
            cas: ns_to_ps(self.cas_ns),
        }
    }

    /// Row cycle time `t_RP + t_RCD[tier] + t_RAS offset` in nanoseconds.
    pub fn t_rc(&self, tier: usize) -> Result<f64> {
        Ok(self.timing().t_rc(tier)? as f64 / 1000.0)
    }
}

/// Timing parameters in picoseconds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timing {
    pub t_rcd: Vec<u64>,
    pub t_rp: u64,
    pub t_ras_offset: u64,
    pub cas: u64,
}

impl Timing {
    pub fn t_rc(&self, tier: usize) -> Result<u64> {
        let rcd = self
            .t_rcd
            .get(tier)
            .ok_or_else(|| Error::Input(format!("tier {tier} out of range 0..{}", self.t_rcd.len())))?;
        Ok(self.t_rp + rcd + self.t_ras_offset)
    }

    #[inline]
    pub fn t_rc_unchecked(&self, tier: usize) -> u64 {
        self.t_rp + self.t_rcd[tier] + self.t_ras_offset
    }

    #[inline]
    pub fn latency(&self, kind: AccessKind, tier: usize) -> u64 {
        match kind {
            AccessKind::Hit => self.cas,
            AccessKind::Miss => self.t_rcd[tier] + self.cas,
            AccessKind::Conflict => self.t_rp + self.t_rcd[tier] + self.cas,
        }
    }
}

/// Row cycle time of `tier` under the default device parameters, in nanoseconds.
pub fn t_rc(tier: usize) -> Result<f64> {
    MemConfig::default().t_rc(tier)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhysicalAddress {
    pub channel: usize,
    pub bank_group: usize,
    /// Bank index inside its group.
    pub bank: usize,
    pub tier: usize,
    pub row: u64,
    /// Byte offset inside the row.
    pub column: u64,
}

impl PhysicalAddress {
    /// Flat bank id, `0..total_banks`.
    pub fn bank_id(&self, cfg: &MemConfig) -> usize {
        (self.channel * cfg.bank_groups_per_channel + self.bank_group) * cfg.banks_per_group() + self.bank
    }

    pub fn group_id(&self, cfg: &MemConfig) -> usize {
        self.channel * cfg.bank_groups_per_channel + self.bank_group
    }
}

/// Byte address → coordinates. Field order from least significant: column, channel,
/// bank group, bank, row, tier; consecutive rows of a segment rotate over channels first.
pub fn decompose(addr: u64, cfg: &MemConfig) -> Result<PhysicalAddress> {
    if addr >= cfg.capacity_bits() / 8 {
        return Err(Error::Input(format!("address {addr:#x} beyond device capacity")));
    }
    let column = addr % cfg.row_bytes();
    let mut r = addr / cfg.row_bytes();
    let channel = (r % cfg.channels as u64) as usize;
    r /= cfg.channels as u64;
    let bank_group = (r % cfg.bank_groups_per_channel as u64) as usize;
    r /= cfg.bank_groups_per_channel as u64;
    let bank = (r % cfg.banks_per_group() as u64) as usize;
    r /= cfg.banks_per_group() as u64;
    let row = r % cfg.rows_per_bank_tier();
    let tier = (r / cfg.rows_per_bank_tier()) as usize;
    Ok(PhysicalAddress {
        channel,
        bank_group,
        bank,
        tier,
        row,
        column,
    })
}

pub fn compose(a: &PhysicalAddress, cfg: &MemConfig) -> u64 {
    let mut r = a.tier as u64 * cfg.rows_per_bank_tier() + a.row;
    r = r * cfg.banks_per_group() as u64 + a.bank as u64;
    r = r * cfg.bank_groups_per_channel as u64 + a.bank_group as u64;
    r = r * cfg.channels as u64 + a.channel as u64;
    r * cfg.row_bytes() + a.column
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessKind {
    Hit,
    Miss,
    Conflict,
}

/// Open-page row-buffer state for every bank.
#[derive(Debug, Clone)]
pub struct BankState {
    open: Vec<Option<(usize, u64)>>,
    banks_per_group: usize,
    groups_per_channel: usize,
}

impl BankState {
    pub fn new(cfg: &MemConfig) -> Self {
        BankState {
            open: vec![None; cfg.total_banks()],
            banks_per_group: cfg.banks_per_group(),
            groups_per_channel: cfg.bank_groups_per_channel,
        }
    }

    /// Classifies the access, latches the row, and returns the latency in picoseconds.
    /// `timing_tier` is the tier whose t_RCD applies (see [`Placement::timing_tier`]).
    pub fn access(&mut self, addr: &PhysicalAddress, timing: &Timing, timing_tier: usize) -> (AccessKind, u64) {
        let id = (addr.channel * self.groups_per_channel + addr.bank_group) * self.banks_per_group + addr.bank;
        let row = (addr.tier, addr.row);
        let kind = match self.open[id] {
            Some(r) if r == row => AccessKind::Hit,
            Some(_) => AccessKind::Conflict,
            None => AccessKind::Miss,
        };
        self.open[id] = Some(row);
        (kind, timing.latency(kind, timing_tier))
    }
}

/// Open-page access latency in nanoseconds, timed at the address's own tier.
pub fn access_latency(addr: &PhysicalAddress, state: &mut BankState, cfg: &MemConfig) -> f64 {
    state.access(addr, &cfg.timing(), addr.tier).1 as f64 / 1000.0
}

/// Home PU of tile (i, j) in a grid `m` tiles wide: `(i·m + j) mod (channels × bank groups)`.
pub fn map_tile(i: usize, j: usize, m: usize, cfg: &MemConfig) -> usize {
    map_tile_over(i, j, m, cfg.bank_groups())
}

/// Same modulo rule over an arbitrary pool size.
#[inline]
pub fn map_tile_over(i: usize, j: usize, m: usize, pool: usize) -> usize {
    (i * m + j) % pool
}

/// Energy for moving `bits` across the DRAM interface, picojoules.
pub fn access_energy(bits: u64, cfg: &MemConfig) -> f64 {
    bits as f64 * cfg.energy_per_bit_pj
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Ptr,
    Cal,
    Reference,
    ReadBuffer,
    DistanceMatrix,
    Scratch,
}

impl Segment {
    fn priority(self) -> u8 {
        match self {
            Segment::Ptr => 0,
            Segment::Cal => 1,
            Segment::Reference => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interleave {
    ChannelInterleaved,
    Pinned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierPolicy {
    TierAware,
    UniformWorst,
    UniformBest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlacement {
    pub segment: Segment,
    /// Inclusive.
    pub tier_range: (usize, usize),
    pub interleave: Interleave,
    pub base: u64,
    pub bits: u64,
    pub allocated_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub policy: TierPolicy,
    pub segments: Vec<SegmentPlacement>,
    tiers: usize,
}

impl Placement {
    pub fn get(&self, s: Segment) -> Option<&SegmentPlacement> {
        self.segments.iter().find(|p| p.segment == s)
    }

    /// Byte address of `offset` inside segment `s`.
    pub fn address(&self, s: Segment, offset: u64) -> Option<u64> {
        self.get(s).map(|p| p.base + offset)
    }

    /// Tier whose timing applies to an access physically located in `tier`.
    pub fn timing_tier(&self, tier: usize) -> usize {
        match self.policy {
            TierPolicy::TierAware => tier,
            TierPolicy::UniformWorst => self.tiers - 1,
            TierPolicy::UniformBest => 0,
        }
    }

    /// Placed bits per tier.
    pub fn bits_per_tier(&self, cfg: &MemConfig) -> Vec<u64> {
        let tb = cfg.tier_bytes();
        let mut out = vec![0u64; cfg.tiers];
        for p in &self.segments {
            let (mut lo, hi) = (p.base, p.base + p.bits.div_ceil(8));
            while lo < hi {
                let t = (lo / tb) as usize;
                let end = ((t as u64 + 1) * tb).min(hi);
                out[t] += (end - lo) * 8;
                lo = end;
            }
        }
        out
    }
}

/// Lays segments out contiguously from address 0 in priority order (PTR, CAL,
/// Reference, then the rest as given), so the latency-critical tables take the lowest
/// tiers and spill upward. The uniform policies keep the layout and override timing.
pub fn place_segments(requests: &[(Segment, u64)], policy: TierPolicy, cfg: &MemConfig) -> Result<Placement> {
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| requests[i].0.priority());
    let total: u64 = requests.iter().map(|r| r.1).sum();
    if total > cfg.capacity_bits() {
        return Err(Error::Placement(format!(
            "requested {total} bits exceeds device capacity of {} bits",
            cfg.capacity_bits()
        )));
    }
    let rb = cfg.row_bytes();
    let tb = cfg.tier_bytes();
    let limit = cfg.capacity_bits() / 8;
    let mut cursor = 0u64;
    let mut segments = Vec::with_capacity(requests.len());
    for i in order {
        let (segment, bits) = requests[i];
        let bytes = bits.div_ceil(8).div_ceil(rb) * rb;
        if cursor + bytes > limit {
            return Err(Error::Placement(format!("segment {segment:?} does not fit after row rounding")));
        }
        let last = if bytes == 0 { cursor } else { cursor + bytes - 1 };
        let interleave = match (policy, segment) {
            (TierPolicy::TierAware, Segment::Ptr | Segment::Cal) => Interleave::Pinned,
            _ => Interleave::ChannelInterleaved,
        };
        segments.push(SegmentPlacement {
            segment,
            tier_range: ((cursor / tb) as usize, (last / tb) as usize),
            interleave,
            base: cursor,
            bits,
            allocated_bytes: bytes,
        });
        cursor += bytes;
    }
    Ok(Placement {
        policy,
        segments,
        tiers: cfg.tiers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn row_cycle_times() {
        assert_eq!(t_rc(0).unwrap(), 34.56);
        assert_eq!(t_rc(7).unwrap(), 55.15);
        assert_eq!(t_rc(1).unwrap(), 36.19);
        assert!(t_rc(8).is_err());
        let ratio = t_rc(7).unwrap() / t_rc(0).unwrap();
        assert!((ratio - 1.596).abs() <= 0.001);
    }

    #[test]
    fn defaults_are_consistent() {
        let c = MemConfig::default();
        c.validate().unwrap();
        assert_eq!(c.capacity_bits(), 32 * GIBIBIT);
        assert_eq!(c.bank_groups(), 32);
        assert_eq!(c.rows_per_bank_tier(), 512);
    }

    #[test]
    fn validation_rejects_flat_timing() {
        let mut c = MemConfig::default();
        c.t_rcd_ns[3] = c.t_rcd_ns[2];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = MemConfig { t_rcd_ns: vec![1.0; 3], ..MemConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn open_page_latencies() {
        let cfg = MemConfig::default();
        let tm = cfg.timing();
        let mut st = BankState::new(&cfg);
        let a = decompose(0, &cfg).unwrap();
        assert_eq!(st.access(&a, &tm, 0), (AccessKind::Miss, 2290 + 2000));
        assert_eq!(st.access(&a, &tm, 0), (AccessKind::Hit, 2000));
        let other_row = PhysicalAddress { row: 1, ..a };
        let (k, l) = st.access(&other_row, &tm, 7);
        assert_eq!(k, AccessKind::Conflict);
        assert_eq!(l as f64 / 1000.0, 4.77 + 22.88 + 2.0);
    }

    #[test]
    fn tile_mapping_examples() {
        let c = MemConfig::default();
        assert_eq!(map_tile(0, 0, 256, &c), 0);
        assert_eq!(map_tile(0, 1, 256, &c), 1);
        assert_eq!(map_tile(1, 0, 256, &c), 0);
    }

    #[test]
    fn energy_examples() {
        let c = MemConfig::default();
        assert_eq!(access_energy(1, &c), 0.429);
        assert!((access_energy(8192, &c) - 3514.368).abs() < 1e-9);
        assert_eq!(access_energy(0, &c), 0.0);
    }

    #[test]
    fn tier_aware_pins_tables_low() {
        let c = MemConfig::default();
        let reqs = [
            (Segment::Reference, 20_000_000),
            (Segment::Ptr, GIBIBIT),
            (Segment::Cal, 2 * GIBIBIT),
        ];
        let p = place_segments(&reqs, TierPolicy::TierAware, &c).unwrap();
        assert_eq!(p.get(Segment::Ptr).unwrap().tier_range, (0, 0));
        assert_eq!(p.get(Segment::Cal).unwrap().tier_range, (0, 0));
        assert_eq!(p.get(Segment::Ptr).unwrap().interleave, Interleave::Pinned);
        assert_eq!(p.timing_tier(5), 5);
        let w = place_segments(&reqs, TierPolicy::UniformWorst, &c).unwrap();
        assert_eq!(w.timing_tier(0), 7);
        let b = place_segments(&reqs, TierPolicy::UniformBest, &c).unwrap();
        assert_eq!(b.timing_tier(6), 0);
    }

    #[test]
    fn oversubscription_fails() {
        let c = MemConfig::default();
        let r = place_segments(&[(Segment::Scratch, 33 * GIBIBIT)], TierPolicy::TierAware, &c);
        assert!(matches!(r, Err(Error::Placement(_))));
    }

    #[test]
    fn consecutive_rows_rotate_channels() {
        let c = MemConfig::default();
        let chans: Vec<usize> = (0..16).map(|r| decompose(r * c.row_bytes(), &c).unwrap().channel).collect();
        assert_eq!(chans, (0..16).collect::<Vec<_>>());
        assert_eq!(decompose(c.tier_bytes(), &c).unwrap().tier, 1);
    }

    proptest! {
        #[test]
        fn address_roundtrip(addr in 0u64..(4u64 << 30)) {
            let c = MemConfig::default();
            let a = decompose(addr, &c).unwrap();
            prop_assert!(a.channel < 16 && a.bank_group < 2 && a.bank < 8 && a.tier < 8 && a.row < 512);
            prop_assert_eq!(compose(&a, &c), addr);
        }

        #[test]
        fn hit_miss_conflict_ordering(tier in 0usize..8) {
            let tm = MemConfig::default().timing();
            let (h, m, x) = (
                tm.latency(AccessKind::Hit, tier),
                tm.latency(AccessKind::Miss, tier),
                tm.latency(AccessKind::Conflict, tier),
            );
            prop_assert!(h <= m && m <= x);
        }

        #[test]
        fn placement_conserves_bits(sizes in proptest::collection::vec(0u64..(6u64 << 30), 1..6), pol in 0u8..3) {
            let c = MemConfig::default();
            let segs = [Segment::Scratch, Segment::Ptr, Segment::ReadBuffer, Segment::Cal, Segment::Reference, Segment::DistanceMatrix];
            let reqs: Vec<(Segment, u64)> = sizes.iter().enumerate().map(|(i, &b)| (segs[i], b)).collect();
            let policy = [TierPolicy::TierAware, TierPolicy::UniformWorst, TierPolicy::UniformBest][pol as usize];
            match place_segments(&reqs, policy, &c) {
                Ok(p) => {
                    let placed: u64 = p.segments.iter().map(|s| s.bits).sum();
                    prop_assert_eq!(placed, sizes.iter().sum::<u64>());
                    prop_assert!(p.bits_per_tier(&c).iter().all(|&b| b <= c.tier_capacity_bits));
                }
                Err(e) => prop_assert!(matches!(e, Error::Placement(_))),
            }
        }

        // Trace replay: summing per-event latencies from an independent classifier.
        #[test]
        fn trace_latency_replays(rows in proptest::collection::vec((0usize..4, 0u64..3, 0usize..8), 1..200)) {
            let c = MemConfig::default();
            let tm = c.timing();
            let mut st = BankState::new(&c);
            let mut total = 0u64;
            let events: Vec<PhysicalAddress> = rows.iter().map(|&(bank, row, tier)| PhysicalAddress {
                channel: 0, bank_group: 0, bank, tier, row, column: 0 }).collect();
            for e in &events {
                total += st.access(e, &tm, e.tier).1;
            }
            let mut open: [Option<(usize, u64)>; 4] = [None; 4];
            let mut replay = 0u64;
            for e in &events {
                let rcd = tm.t_rcd[e.tier];
                replay += match open[e.bank] {
                    Some(r) if r == (e.tier, e.row) => tm.cas,
                    Some(_) => tm.t_rp + rcd + tm.cas,
                    None => rcd + tm.cas,
                };
                open[e.bank] = Some((e.tier, e.row));
            }
            prop_assert_eq!(total, replay);
        }
    }
}
