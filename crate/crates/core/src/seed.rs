//! Two-stage k-mer index: a direct-address pointer table (PTR) of prefix offsets into a
//! flat candidate-location table (CAL), and the read seeding pass built on it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_K: usize = 4;
pub const MAX_K: usize = 15;

/// 2-bit code: A=0, C=1, G=2, T=3. Anything else has no code.
#[inline]
pub fn encode_base(b: u8) -> Option<u32> {
    match b {
        b'A' => Some(0),
        b'C' => Some(1),
        b'G' => Some(2),
        b'T' => Some(3),
        _ => None,
    }
}

pub fn encode_kmer(kmer: &[u8]) -> Option<u32> {
    let mut g = 0u32;
    for &b in kmer {
        g = (g << 2) | encode_base(b)?;
    }
    Some(g)
}

/// Calls `f(position, code)` for every k-mer window free of non-ACGT bases.
fn for_each_kmer(seq: &[u8], k: usize, mut f: impl FnMut(usize, u32)) {
    let mask = if k >= 16 { u32::MAX } else { (1u32 << (2 * k)) - 1 };
    let mut code = 0u32;
    let mut valid = 0usize;
    for (i, &b) in seq.iter().enumerate() {
        match encode_base(b) {
            Some(c) => {
                code = ((code << 2) | c) & mask;
                valid += 1;
            }
            None => valid = 0,
        }
        if valid >= k {
            f(i + 1 - k, code);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedIndex {
    k: usize,
    reference_length: u64,
    ptr: Vec<u64>,
    cal: Vec<u32>,
}

impl SeedIndex {
    /// Reassembles an index from stored parts, checking the structural invariants.
    pub fn from_parts(k: usize, reference_length: u64, ptr: Vec<u64>, cal: Vec<u32>) -> Result<Self> {
        check_k(k)?;
        let groups = 1usize << (2 * k);
        if ptr.len() != groups + 1 {
            return Err(Error::Input(format!("ptr has {} entries, expected {}", ptr.len(), groups + 1)));
        }
        if ptr[0] != 0 {
            return Err(Error::Input("ptr[0] must be 0".into()));
        }
        if ptr[groups] != cal.len() as u64 {
            return Err(Error::Input(format!("ptr ends at {} but cal has {} entries", ptr[groups], cal.len())));
        }
        if let Some(g) = (0..groups).find(|&g| ptr[g] > ptr[g + 1]) {
            return Err(Error::Input(format!("ptr decreases at group {g}")));
        }
        for g in 0..groups {
            let grp = &cal[ptr[g] as usize..ptr[g + 1] as usize];
            if grp.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Input(format!("cal group {g} is not strictly ascending")));
            }
            if grp.last().is_some_and(|&p| p as u64 + k as u64 > reference_length) {
                return Err(Error::Input(format!("cal group {g} holds a position past the reference end")));
            }
        }
        Ok(SeedIndex { k, reference_length, ptr, cal })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn reference_length(&self) -> u64 {
        self.reference_length
    }

    pub fn ptr(&self) -> &[u64] {
        &self.ptr
    }

    pub fn cal(&self) -> &[u32] {
        &self.cal
    }

    pub fn group_count(&self) -> usize {
        self.ptr.len() - 1
    }

    /// CAL slice for group `g`.
    #[inline]
    pub fn lookup(&self, g: u32) -> &[u32] {
        let (a, b) = (self.ptr[g as usize] as usize, self.ptr[g as usize + 1] as usize);
        &self.cal[a..b]
    }

    /// Encodes `kmer` and looks it up; `None` if it contains a non-ACGT base.
    pub fn lookup_kmer(&self, kmer: &[u8]) -> Option<&[u32]> {
        if kmer.len() != self.k {
            return None;
        }
        encode_kmer(kmer).map(|g| self.lookup(g))
    }

    pub fn ptr_bits(&self) -> u64 {
        self.ptr.len() as u64 * 64
    }

    pub fn cal_bits(&self) -> u64 {
        self.cal.len() as u64 * 32
    }
}

fn check_k(k: usize) -> Result<()> {
    if !(MIN_K..=MAX_K).contains(&k) {
        return Err(Error::Config(format!("k must lie in {MIN_K}..={MAX_K}, got {k}")));
    }
    Ok(())
}

/// Counting-sort build: positions come out ascending within every group.
pub fn build_index(reference: &[u8], k: usize) -> Result<SeedIndex> {
    check_k(k)?;
    if reference.len() > u32::MAX as usize {
        return Err(Error::Input("reference longer than 2^32 bases".into()));
    }
    let groups = 1usize << (2 * k);
    let mut ptr = vec![0u64; groups + 1];
    for_each_kmer(reference, k, |_, g| ptr[g as usize + 1] += 1);
    for g in 0..groups {
        ptr[g + 1] += ptr[g];
    }
    let mut fill: Vec<u64> = ptr[..groups].to_vec();
    let mut cal = vec![0u32; ptr[groups] as usize];
    for_each_kmer(reference, k, |pos, g| {
        let slot = &mut fill[g as usize];
        cal[*slot as usize] = pos as u32;
        *slot += 1;
    });
    Ok(SeedIndex {
        k,
        reference_length: reference.len() as u64,
        ptr,
        cal,
    })
}

/// Every start position where `kmer` occurs verbatim. Windows holding N never match.
pub fn brute_force_matches(reference: &[u8], kmer: &[u8]) -> Vec<u32> {
    if kmer.is_empty() || kmer.len() > reference.len() || kmer.iter().any(|&b| encode_base(b).is_none()) {
        return Vec::new();
    }
    reference
        .windows(kmer.len())
        .enumerate()
        .filter(|(_, w)| *w == kmer)
        .map(|(i, _)| i as u32)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedParams {
    pub stride: usize,
    pub min_votes: u32,
    pub max_candidates: usize,
    /// Groups larger than this are skipped.
    pub repeat_cap: usize,
    /// Projections within ± this many bases pool their votes. 0 = exact binning.
    pub vote_window: u32,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams {
            stride: 1,
            min_votes: 1,
            max_candidates: 4,
            repeat_cap: 500,
            vote_window: 0,
        }
    }
}

impl SeedParams {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::Config("max_candidates must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Candidate {
    pub reference_position: u32,
    pub vote_count: u32,
}

/// One sampled k-mer's trip through the index, as the search PE sees it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lookup {
    pub group: u32,
    /// First CAL entry of the group.
    pub cal_start: u64,
    pub cal_len: u32,
    /// Group was over the repeat cap: PTR read only.
    pub skipped: bool,
}

/// Memory-side record of one seeding pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SeedTrace {
    pub lookups: Vec<Lookup>,
    /// CAL positions that reached the vote bins.
    pub hits: u64,
    /// Distinct projections before thresholding.
    pub bins: u64,
}

pub fn seed_read(index: &SeedIndex, read: &[u8], p: &SeedParams) -> Result<Vec<Candidate>> {
    Ok(seed_read_traced(index, read, p)?.0)
}

pub fn seed_read_traced(index: &SeedIndex, read: &[u8], p: &SeedParams) -> Result<(Vec<Candidate>, SeedTrace)> {
    p.validate()?;
    let k = index.k;
    if read.len() < k {
        return Err(Error::Input(format!("read of length {} is shorter than k = {k}", read.len())));
    }
    let mut trace = SeedTrace::default();
    let mut projections: Vec<u32> = Vec::new();
    let mut off = 0;
    while off + k <= read.len() {
        if let Some(g) = encode_kmer(&read[off..off + k]) {
            let a = index.ptr[g as usize];
            let len = (index.ptr[g as usize + 1] - a) as usize;
            let skipped = len > p.repeat_cap;
            trace.lookups.push(Lookup {
                group: g,
                cal_start: a,
                cal_len: len as u32,
                skipped,
            });
            if !skipped {
                for &hit in index.lookup(g) {
                    trace.hits += 1;
                    if let Some(start) = hit.checked_sub(off as u32) {
                        projections.push(start);
                    }
                }
            }
        }
        off += p.stride;
    }
    projections.sort_unstable();
    let mut bins: Vec<(u32, u32)> = Vec::new();
    for pos in projections {
        match bins.last_mut() {
            Some((q, n)) if *q == pos => *n += 1,
            _ => bins.push((pos, 1)),
        }
    }
    trace.bins = bins.len() as u64;
    let votes: Vec<u32> = if p.vote_window == 0 {
        bins.iter().map(|b| b.1).collect()
    } else {
        pooled_votes(&bins, p.vote_window)
    };
    let mut out: Vec<Candidate> = bins
        .iter()
        .zip(votes)
        .filter(|(_, v)| *v >= p.min_votes)
        .map(|(&(pos, _), v)| Candidate {
            reference_position: pos,
            vote_count: v,
        })
        .collect();
    out.sort_by(|a, b| b.vote_count.cmp(&a.vote_count).then(a.reference_position.cmp(&b.reference_position)));
    out.truncate(p.max_candidates);
    Ok((out, trace))
}

/// Sliding-window vote sums over sorted bins.
fn pooled_votes(bins: &[(u32, u32)], w: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(bins.len());
    let (mut lo, mut hi, mut sum) = (0usize, 0usize, 0u32);
    for &(pos, _) in bins {
        while hi < bins.len() && bins[hi].0 <= pos.saturating_add(w) {
            sum += bins[hi].1;
            hi += 1;
        }
        while bins[lo].0 < pos.saturating_sub(w) {
            sum -= bins[lo].1;
            lo += 1;
        }
        out.push(sum);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dna_with_n(len: core::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(
            prop_oneof![8 => prop_oneof![Just(b'A'), Just(b'C'), Just(b'G'), Just(b'T')], 1 => Just(b'N')],
            len,
        )
    }

    #[test]
    fn small_examples() {
        let idx = build_index(b"ACGTACGT", 4).unwrap();
        assert_eq!(idx.lookup_kmer(b"ACGT").unwrap(), &[0, 4]);
        assert_eq!(brute_force_matches(b"ACGTACGT", b"ACGT"), vec![0, 4]);
        assert!(idx.lookup_kmer(b"TTTT").unwrap().is_empty());

        let idx = build_index(b"AAAA", 4).unwrap();
        assert_eq!(idx.cal(), &[0]);
        assert_eq!(*idx.ptr().last().unwrap(), 1);
        assert_eq!(idx.lookup_kmer(b"AAAA").unwrap(), &[0]);

        let idx = build_index(b"ACGTNACGTA", 4).unwrap();
        assert_eq!(idx.lookup_kmer(b"ACGT").unwrap(), &[0, 5]);
        assert_eq!(idx.cal().len(), 3);
        assert!(brute_force_matches(b"ACGT", b"TTTTT").is_empty());
    }

    #[test]
    fn k_out_of_range() {
        assert!(matches!(build_index(b"ACGT", 3), Err(Error::Config(_))));
        assert!(matches!(build_index(b"ACGT", 16), Err(Error::Config(_))));
    }

    #[test]
    fn seed_read_examples() {
        let reference: Vec<u8> = {
            let mut s: u64 = 7;
            (0..400)
                .map(|_| {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                    b"ACGT"[(s >> 62) as usize]
                })
                .collect()
        };
        let idx = build_index(&reference, 8).unwrap();
        let p = SeedParams { stride: 1, min_votes: 1, max_candidates: 4, ..Default::default() };
        let c = seed_read(&idx, &reference[100..200], &p).unwrap();
        assert_eq!(c[0].reference_position, 100);
        assert_eq!(c[0].vote_count, 93);

        assert!(seed_read(&idx, &[b'N'; 50], &p).unwrap().is_empty());
        let strict = SeedParams { min_votes: 94, ..p };
        assert!(seed_read(&idx, &reference[100..200], &strict).unwrap().is_empty());
        assert!(matches!(seed_read(&idx, b"ACG", &p), Err(Error::Input(_))));
    }

    #[test]
    fn repeat_cap_skips_but_traces() {
        let reference = [b'A'; 64];
        let idx = build_index(&reference, 4).unwrap();
        let p = SeedParams { repeat_cap: 10, ..Default::default() };
        let (c, t) = seed_read_traced(&idx, &reference[..8], &p).unwrap();
        assert!(c.is_empty());
        assert_eq!(t.lookups.len(), 5);
        assert!(t.lookups.iter().all(|l| l.skipped));
    }

    #[test]
    fn vote_window_pools_neighbours() {
        let bins = [(10, 2), (11, 1), (20, 4)];
        assert_eq!(pooled_votes(&bins, 1), vec![3, 3, 4]);
        assert_eq!(pooled_votes(&bins, 10), vec![7, 7, 7]);
    }

    #[test]
    fn from_parts_rejects_broken_tables() {
        let idx = build_index(b"ACGTACGTTT", 4).unwrap();
        let (ptr, cal) = (idx.ptr().to_vec(), idx.cal().to_vec());
        assert!(SeedIndex::from_parts(4, 10, ptr.clone(), cal.clone()).is_ok());
        let mut bad = ptr.clone();
        bad[3] = 100;
        assert!(SeedIndex::from_parts(4, 10, bad, cal.clone()).is_err());
        assert!(SeedIndex::from_parts(4, 5, ptr.clone(), cal.clone()).is_err());
        assert!(SeedIndex::from_parts(5, 10, ptr, cal).is_err());
    }

    proptest! {
        #[test]
        fn index_invariants(reference in dna_with_n(4..=300), k in 4usize..7) {
            let idx = build_index(&reference, k).unwrap();
            let ptr = idx.ptr();
            prop_assert_eq!(ptr[0], 0);
            prop_assert!(ptr.windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(*ptr.last().unwrap() as usize, idx.cal().len());
            let valid = reference.windows(k).filter(|w| w.iter().all(|&b| b != b'N')).count();
            prop_assert_eq!(idx.cal().len(), valid);
            for g in 0..idx.group_count() as u32 {
                for &p in idx.lookup(g) {
                    prop_assert_eq!(encode_kmer(&reference[p as usize..p as usize + k]), Some(g));
                }
            }
        }

        #[test]
        fn lookup_equals_brute_force(reference in dna_with_n(4..=300), k in 4usize..7) {
            let idx = build_index(&reference, k).unwrap();
            for w in reference.windows(k) {
                if let Some(hits) = idx.lookup_kmer(w) {
                    prop_assert_eq!(hits.to_vec(), brute_force_matches(&reference, w));
                }
            }
        }

        #[test]
        fn error_free_read_contains_truth(reference in dna_with_n(200..=400), start in 0usize..100, len in 20usize..80) {
            let idx = build_index(&reference, 6).unwrap();
            let read = &reference[start..start + len];
            let p = SeedParams { max_candidates: usize::MAX, ..Default::default() };
            let c = seed_read(&idx, read, &p).unwrap();
            let valid = read.windows(6).filter(|w| w.iter().all(|&b| b != b'N')).count() as u32;
            if valid > 0 {
                let truth = c.iter().find(|c| c.reference_position == start as u32).unwrap();
                prop_assert!(truth.vote_count >= valid);
                prop_assert_eq!(c[0].vote_count, truth.vote_count);
            }
        }

        #[test]
        fn output_order_is_total(reference in dna_with_n(100..=300), start in 0usize..50) {
            let idx = build_index(&reference, 4).unwrap();
            let p = SeedParams { max_candidates: 1000, ..Default::default() };
            let c = seed_read(&idx, &reference[start..start + 40], &p).unwrap();
            prop_assert!(c.windows(2).all(|w| (w[0].vote_count, core::cmp::Reverse(w[0].reference_position))
                > (w[1].vote_count, core::cmp::Reverse(w[1].reference_position))));
        }
    }
}
