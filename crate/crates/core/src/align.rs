//! Local alignment: full Smith-Waterman, fixed-band DP with 5-bit difference storage,
//! and adaptive-band anti-diagonal DP.
//!
//! The DP grid has the reference along rows (`i`) and the query along columns (`j`), so
//! an "up" move consumes a reference base only (a deletion from the query) and a
//! "left" move consumes a query base only (an insertion).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::semiring::{maxplus_spec, NEG_INF};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignmentParams {
    pub match_score: i32,
    pub mismatch_penalty: i32,
    pub gap_penalty: i32,
    /// Fixed band: half-width around the main diagonal. Adaptive band: cells per anti-diagonal.
    pub band_width: usize,
    pub adaptive: bool,
    /// Keep the DP state and emit a cigar.
    pub traceback: bool,
}

impl Default for AlignmentParams {
    fn default() -> Self {
        AlignmentParams {
            match_score: 1,
            mismatch_penalty: -1,
            gap_penalty: -1,
            band_width: 6,
            adaptive: true,
            traceback: false,
        }
    }
}

impl AlignmentParams {
    pub fn validate(&self) -> Result<()> {
        if self.match_score <= 0 {
            return Err(Error::Config(format!("match_score must be > 0, got {}", self.match_score)));
        }
        if self.mismatch_penalty > 0 {
            return Err(Error::Config(format!("mismatch_penalty must be <= 0, got {}", self.mismatch_penalty)));
        }
        if self.gap_penalty > 0 {
            return Err(Error::Config(format!("gap_penalty must be <= 0, got {}", self.gap_penalty)));
        }
        if self.band_width == 0 {
            return Err(Error::Config("band_width must be >= 1".into()));
        }
        if self.adaptive && self.band_width < 3 {
            return Err(Error::Config(format!("adaptive band_width must be >= 3, got {}", self.band_width)));
        }
        Ok(())
    }

    #[inline]
    fn substitution(&self, r: u8, q: u8) -> i32 {
        if r == q && r != b'N' {
            self.match_score
        } else {
            self.mismatch_penalty
        }
    }
}

/// A 5-bit signed score difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiffCell(i8);

pub const DIFF_MIN: i32 = -16;
pub const DIFF_MAX: i32 = 15;

impl DiffCell {
    pub fn value(self) -> i32 {
        self.0 as i32
    }
}

pub fn encode_diff(v: i32) -> DiffCell {
    DiffCell(v.clamp(DIFF_MIN, DIFF_MAX) as i8)
}

pub fn decode_diff(c: DiffCell, anchor: i32) -> i32 {
    anchor.saturating_add(c.0 as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CigarOp {
    Match,
    Mismatch,
    Insert,
    Delete,
}

impl CigarOp {
    fn symbol(self) -> char {
        match self {
            CigarOp::Match => 'M',
            CigarOp::Mismatch => 'X',
            CigarOp::Insert => 'I',
            CigarOp::Delete => 'D',
        }
    }
}

/// Run-length alignment path, first op at the alignment start.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cigar(pub Vec<(CigarOp, u32)>);

impl Cigar {
    fn push(&mut self, op: CigarOp) {
        match self.0.last_mut() {
            Some((last, n)) if *last == op => *n += 1,
            _ => self.0.push((op, 1)),
        }
    }

    pub fn count(&self, op: CigarOp) -> usize {
        self.0.iter().filter(|(o, _)| *o == op).count()
    }
}

impl fmt::Display for Cigar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (op, n) in &self.0 {
            write!(f, "{n}{}", op.symbol())?;
        }
        Ok(())
    }
}

/// Work done by one scoring pass; the engine turns it into PE cycles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DpWork {
    /// Dependent wavefront steps (rows for row-ordered passes, anti-diagonals otherwise).
    pub steps: u32,
    pub cells: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub score: i32,
    /// (query index, reference index), 1-based cell coordinates; (0, 0) when nothing scores.
    pub end_position: (usize, usize),
    pub cigar: Option<Cigar>,
    /// Set when a score difference fell outside the 5-bit range and was clamped.
    pub lossy: bool,
    pub work: DpWork,
}

/// Retained DP values for traceback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DpState {
    Discarded,
    Full { cols: usize, data: Vec<i32> },
    /// Per reference row: first query column stored, then the values.
    Rows(Vec<(usize, Vec<i32>)>),
    /// Per anti-diagonal `d` (index `d - 2`): first reference row stored, then the values.
    Diagonals(Vec<(isize, Vec<i32>)>),
}

impl DpState {
    /// Value at grid cell (i, j); boundary cells are 0, cells outside the stored region `None`.
    fn value(&self, i: usize, j: usize) -> Option<i32> {
        if i == 0 || j == 0 {
            return Some(0);
        }
        let v = match self {
            DpState::Discarded => return None,
            DpState::Full { cols, data } => data.get(i * cols + j).copied(),
            DpState::Rows(rows) => {
                let (lo, vals) = rows.get(i)?;
                if j < *lo {
                    return None;
                }
                vals.get(j - lo).copied()
            }
            DpState::Diagonals(diags) => {
                let (lo, vals) = diags.get(i + j - 2)?;
                let p = i as isize - lo;
                if p < 0 {
                    return None;
                }
                vals.get(p as usize).copied()
            }
        };
        v.filter(|&x| x != NEG_INF)
    }

    /// Window start per anti-diagonal, for adaptive passes.
    pub fn band_starts(&self) -> Option<Vec<isize>> {
        match self {
            DpState::Diagonals(d) => Some(d.iter().map(|(lo, _)| *lo).collect()),
            _ => None,
        }
    }
}

fn check_seq(name: &str, s: &[u8]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Input(format!("{name} sequence is empty")));
    }
    if let Some(&b) = s.iter().find(|&&b| !matches!(b, b'A' | b'C' | b'G' | b'T' | b'N')) {
        return Err(Error::Input(format!("{name} contains invalid base {:?}", b as char)));
    }
    Ok(())
}

/// `max(0, diag ⊗ s ⊕ up ⊗ g ⊕ left ⊗ g)` over max-plus.
#[inline]
fn cell(diag: i32, up: i32, left: i32, s: i32, g: i32) -> i32 {
    let sr = maxplus_spec();
    let v = sr.accumulate(sr.accumulate(sr.combine(diag, s), sr.combine(up, g)), sr.combine(left, g));
    v.max(0)
}

/// Keeps the maximum by (score, i, j).
#[derive(Clone, Copy)]
struct Best {
    score: i32,
    i: usize,
    j: usize,
}

impl Best {
    fn new() -> Self {
        Best { score: 0, i: 0, j: 0 }
    }

    #[inline]
    fn offer(&mut self, v: i32, i: usize, j: usize) {
        if v > 0 && (v, i, j) > (self.score, self.i, self.j) {
            *self = Best { score: v, i, j };
        }
    }
}

fn finish(
    best: Best,
    state: DpState,
    q: &[u8],
    r: &[u8],
    p: &AlignmentParams,
    lossy: bool,
    work: DpWork,
) -> Result<(AlignmentResult, DpState)> {
    let end_position = (best.j, best.i);
    let state = if p.traceback { state } else { DpState::Discarded };
    let cigar = if p.traceback && !lossy {
        Some(traceback_impl(&state, end_position, q, r, p)?)
    } else {
        None
    };
    Ok((
        AlignmentResult {
            score: best.score,
            end_position,
            cigar,
            lossy,
            work,
        },
        state,
    ))
}

/// Full local alignment over the whole grid.
pub fn sw_reference(query: &[u8], reference: &[u8], p: &AlignmentParams) -> Result<AlignmentResult> {
    Ok(sw_reference_state(query, reference, p)?.0)
}

pub fn sw_reference_state(query: &[u8], reference: &[u8], p: &AlignmentParams) -> Result<(AlignmentResult, DpState)> {
    check_seq("query", query)?;
    check_seq("reference", reference)?;
    let (lr, lq) = (reference.len(), query.len());
    let cols = lq + 1;
    let mut h = vec![0i32; (lr + 1) * cols];
    let mut best = Best::new();
    for i in 1..=lr {
        for j in 1..=lq {
            let v = cell(
                h[(i - 1) * cols + j - 1],
                h[(i - 1) * cols + j],
                h[i * cols + j - 1],
                p.substitution(reference[i - 1], query[j - 1]),
                p.gap_penalty,
            );
            h[i * cols + j] = v;
            best.offer(v, i, j);
        }
    }
    let work = DpWork {
        steps: lr as u32,
        cells: (lr * lq) as u64,
    };
    finish(best, DpState::Full { cols, data: h }, query, reference, p, false, work)
}

/// Fixed band `|i - j| <= band_width`; each row is held as an absolute anchor plus 5-bit differences.
pub fn banded_diff_dp(query: &[u8], reference: &[u8], p: &AlignmentParams) -> Result<AlignmentResult> {
    Ok(banded_diff_dp_state(query, reference, p)?.0)
}

pub fn banded_diff_dp_state(
    query: &[u8],
    reference: &[u8],
    p: &AlignmentParams,
) -> Result<(AlignmentResult, DpState)> {
    check_seq("query", query)?;
    check_seq("reference", reference)?;
    if p.band_width > reference.len() {
        return sw_reference_state(query, reference, p);
    }
    let (lr, lq, w) = (reference.len(), query.len(), p.band_width);
    let span = |i: usize| (i.saturating_sub(w).max(1), (i + w).min(lq));

    let mut rows: Vec<(usize, Vec<i32>)> = Vec::with_capacity(lr + 1);
    rows.push((1, Vec::new()));
    let mut best = Best::new();
    let mut lossy = false;
    let mut cells = 0u64;
    let mut steps = 0u32;
    // Previous row decoded from its stored form.
    let mut prev_lo = 1usize;
    let mut prev: Vec<i32> = Vec::new();
    for i in 1..=lr {
        let (lo, hi) = span(i);
        let prev_at = |j: usize| -> i32 {
            if i == 1 || j == 0 {
                return 0;
            }
            if j < prev_lo || j - prev_lo >= prev.len() {
                NEG_INF
            } else {
                prev[j - prev_lo]
            }
        };
        let mut decoded: Vec<i32> = Vec::new();
        if lo <= hi {
            steps += 1;
            decoded.reserve(hi - lo + 1);
            let mut anchor = 0i32;
            for j in lo..=hi {
                let left = if j == 1 {
                    0
                } else if j == lo {
                    NEG_INF
                } else {
                    anchor
                };
                let v = cell(
                    prev_at(j - 1),
                    prev_at(j),
                    left,
                    p.substitution(reference[i - 1], query[j - 1]),
                    p.gap_penalty,
                );
                let stored = if j == lo {
                    v
                } else {
                    let dc = encode_diff(v - anchor);
                    if dc.value() != v - anchor {
                        lossy = true;
                    }
                    decode_diff(dc, anchor)
                };
                anchor = stored;
                decoded.push(stored);
                best.offer(stored, i, j);
                cells += 1;
            }
        }
        prev_lo = lo;
        prev = decoded.clone();
        rows.push((lo, decoded));
    }
    let work = DpWork { steps, cells };
    finish(best, DpState::Rows(rows), query, reference, p, lossy, work)
}

/// Anti-diagonal wavefront with a `band_width`-cell window that follows the running maximum.
pub fn adaptive_banded_dp(query: &[u8], reference: &[u8], p: &AlignmentParams) -> Result<AlignmentResult> {
    Ok(adaptive_banded_dp_state(query, reference, p)?.0)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Move {
    Down,
    Right,
}

pub fn adaptive_banded_dp_state(
    query: &[u8],
    reference: &[u8],
    p: &AlignmentParams,
) -> Result<(AlignmentResult, DpState)> {
    check_seq("query", query)?;
    check_seq("reference", reference)?;
    if p.band_width < 3 {
        return Err(Error::Config(format!("adaptive band_width must be >= 3, got {}", p.band_width)));
    }
    if p.band_width > reference.len() {
        return sw_reference_state(query, reference, p);
    }
    let (lr, lq, bw) = (reference.len() as isize, query.len() as isize, p.band_width);
    let twice_center = bw as isize - 1;

    let mut diags: Vec<(isize, Vec<i32>)> = Vec::with_capacity((lr + lq) as usize);
    let mut best = Best::new();
    let mut cells = 0u64;
    let mut steps = 0u32;
    let mut lo: isize = 1 - twice_center / 2;
    let mut last = Move::Right;

    let lookup = |diags: &Vec<(isize, Vec<i32>)>, i: isize, j: isize| -> i32 {
        if i == 0 || j == 0 {
            return 0;
        }
        let d = (i + j - 2) as usize;
        match diags.get(d) {
            Some((l, v)) => {
                let k = i - l;
                if k < 0 || k as usize >= v.len() {
                    NEG_INF
                } else {
                    v[k as usize]
                }
            }
            None => NEG_INF,
        }
    };

    for d in 2..=(lr + lq) {
        let mut vals = vec![NEG_INF; bw];
        let mut max_v = NEG_INF;
        let (mut below, mut above, mut centered) = (false, false, false);
        let mut any_valid = false;
        let mut ahead = true;
        for (k, slot) in vals.iter_mut().enumerate() {
            let i = lo + k as isize;
            let j = d - i;
            if i <= lr && j <= lq {
                ahead = false;
            }
            if i < 1 || j < 1 || i > lr || j > lq {
                continue;
            }
            any_valid = true;
            let v = cell(
                lookup(&diags, i - 1, j - 1),
                lookup(&diags, i - 1, j),
                lookup(&diags, i, j - 1),
                p.substitution(reference[(i - 1) as usize], query[(j - 1) as usize]),
                p.gap_penalty,
            );
            *slot = v;
            cells += 1;
            best.offer(v, i as usize, j as usize);
            let pos = 2 * k as isize;
            if v > max_v {
                max_v = v;
                (below, above, centered) = (false, false, false);
            }
            if v == max_v {
                if pos > twice_center {
                    below = true;
                } else if pos < twice_center {
                    above = true;
                } else {
                    centered = true;
                }
            }
        }
        diags.push((lo, vals));
        if any_valid {
            steps += 1;
        } else if ahead {
            break;
        }
        let mv = match (below, above, centered) {
            (true, false, false) => Move::Down,
            (false, true, false) => Move::Right,
            _ => {
                if last == Move::Down {
                    Move::Right
                } else {
                    Move::Down
                }
            }
        };
        if mv == Move::Down {
            lo += 1;
        }
        last = mv;
    }
    let work = DpWork { steps, cells };
    finish(best, DpState::Diagonals(diags), query, reference, p, false, work)
}

/// Walks back from `end` (query index, reference index) to the first zero cell.
pub fn traceback(
    state: &DpState,
    end_position: (usize, usize),
    query: &[u8],
    reference: &[u8],
    p: &AlignmentParams,
) -> Result<Cigar> {
    traceback_impl(state, end_position, query, reference, p)
}

fn traceback_impl(
    state: &DpState,
    end_position: (usize, usize),
    q: &[u8],
    r: &[u8],
    p: &AlignmentParams,
) -> Result<Cigar> {
    if matches!(state, DpState::Discarded) {
        return Err(Error::Usage("traceback needs a scoring pass run with traceback enabled".into()));
    }
    let (mut j, mut i) = end_position;
    let mut rev = Vec::new();
    loop {
        let h = state
            .value(i, j)
            .ok_or_else(|| Error::Input(format!("traceback reached cell ({j}, {i}) outside the stored band")))?;
        if h == 0 {
            break;
        }
        let s = p.substitution(r[i - 1], q[j - 1]);
        let diag = state.value(i - 1, j - 1);
        let up = state.value(i - 1, j);
        let left = state.value(i, j - 1);
        if diag.is_some_and(|d| d.saturating_add(s) == h) {
            rev.push(if s == p.match_score && r[i - 1] == q[j - 1] { CigarOp::Match } else { CigarOp::Mismatch });
            i -= 1;
            j -= 1;
        } else if up.is_some_and(|u| u.saturating_add(p.gap_penalty) == h) {
            rev.push(CigarOp::Delete);
            i -= 1;
        } else if left.is_some_and(|l| l.saturating_add(p.gap_penalty) == h) {
            rev.push(CigarOp::Insert);
            j -= 1;
        } else {
            return Err(Error::Input(format!(
                "cell ({j}, {i}) has no consistent predecessor; the state is lossy"
            )));
        }
    }
    let mut c = Cigar::default();
    for op in rev.into_iter().rev() {
        c.push(op);
    }
    Ok(c)
}

/// Re-scores a cigar that ends at `end_position`; used to check traceback output.
pub fn replay_score(
    cigar: &Cigar,
    end_position: (usize, usize),
    query: &[u8],
    reference: &[u8],
    p: &AlignmentParams,
) -> Result<i32> {
    let (mut j, mut i) = end_position;
    let mut score = 0i32;
    for &(op, n) in cigar.0.iter().rev() {
        for _ in 0..n {
            match op {
                CigarOp::Match | CigarOp::Mismatch => {
                    if i == 0 || j == 0 {
                        return Err(Error::Input("cigar runs past the sequence start".into()));
                    }
                    let same = reference[i - 1] == query[j - 1] && query[j - 1] != b'N';
                    if same != (op == CigarOp::Match) {
                        return Err(Error::Input(format!("cigar op {op:?} disagrees with bases at ({j}, {i})")));
                    }
                    score += p.substitution(reference[i - 1], query[j - 1]);
                    i -= 1;
                    j -= 1;
                }
                CigarOp::Delete => {
                    if i == 0 {
                        return Err(Error::Input("cigar runs past the reference start".into()));
                    }
                    score += p.gap_penalty;
                    i -= 1;
                }
                CigarOp::Insert => {
                    if j == 0 {
                        return Err(Error::Input("cigar runs past the query start".into()));
                    }
                    score += p.gap_penalty;
                    j -= 1;
                }
            }
        }
    }
    Ok(score)
}

/// Dispatches to the adaptive or fixed-band kernel per `p.adaptive`.
pub fn align_banded(query: &[u8], reference: &[u8], p: &AlignmentParams) -> Result<AlignmentResult> {
    if p.adaptive {
        adaptive_banded_dp(query, reference, p)
    } else {
        banded_diff_dp(query, reference, p)
    }
}

/// Uppercases and maps every non-ACGT symbol to N.
pub fn normalize_bases(s: &[u8]) -> Vec<u8> {
    s.iter()
        .map(|b| match b.to_ascii_uppercase() {
            x @ (b'A' | b'C' | b'G' | b'T') => x,
            _ => b'N',
        })
        .collect()
}

pub fn cigar_string(c: &Cigar) -> String {
    format!("{c}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> AlignmentParams {
        AlignmentParams {
            traceback: true,
            ..AlignmentParams::default()
        }
    }

    fn dna(max: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(prop_oneof![Just(b'A'), Just(b'C'), Just(b'G'), Just(b'T')], 1..=max)
    }

    // Independent scalar oracle: recursion over explicit i64 table.
    fn oracle_score(q: &[u8], r: &[u8], p: &AlignmentParams) -> i32 {
        let mut h = vec![vec![0i64; q.len() + 1]; r.len() + 1];
        let mut best = 0;
        for i in 1..=r.len() {
            for j in 1..=q.len() {
                let s = if r[i - 1] == q[j - 1] && q[j - 1] != b'N' {
                    p.match_score
                } else {
                    p.mismatch_penalty
                } as i64;
                let v = 0
                    .max(h[i - 1][j - 1] + s)
                    .max(h[i - 1][j] + p.gap_penalty as i64)
                    .max(h[i][j - 1] + p.gap_penalty as i64);
                h[i][j] = v;
                best = best.max(v);
            }
        }
        best as i32
    }

    // Plain banded DP with absolute values, no difference storage.
    fn banded_plain(q: &[u8], r: &[u8], p: &AlignmentParams) -> i32 {
        let w = p.band_width as i64;
        let mut h = vec![vec![i64::MIN / 4; q.len() + 1]; r.len() + 1];
        for row in h.iter_mut() {
            row[0] = 0;
        }
        for c in h[0].iter_mut() {
            *c = 0;
        }
        let mut best = 0;
        for i in 1..=r.len() {
            for j in 1..=q.len() {
                if (i as i64 - j as i64).abs() > w {
                    continue;
                }
                let s = if r[i - 1] == q[j - 1] { p.match_score } else { p.mismatch_penalty } as i64;
                let v = 0
                    .max(h[i - 1][j - 1] + s)
                    .max(h[i - 1][j] + p.gap_penalty as i64)
                    .max(h[i][j - 1] + p.gap_penalty as i64);
                h[i][j] = v;
                best = best.max(v);
            }
        }
        best as i32
    }

    #[test]
    fn sw_examples() {
        let p = params();
        let r = sw_reference(b"ACGT", b"ACGT", &p).unwrap();
        assert_eq!(r.score, 4);
        assert_eq!(r.cigar.unwrap().to_string(), "4M");
        assert_eq!(sw_reference(b"ACGT", b"TTTT", &p).unwrap().score, 1);
        assert_eq!(sw_reference(b"ACGT", b"AGGT", &p).unwrap().score, oracle_score(b"ACGT", b"AGGT", &p));
    }

    #[test]
    fn traceback_finds_single_deletion() {
        let p = params();
        let r = sw_reference(b"ACGT", b"ACGGT", &p).unwrap();
        let c = r.cigar.unwrap();
        assert_eq!(c.count(CigarOp::Delete), 1);
        assert!(c.0.iter().any(|&(op, n)| op == CigarOp::Delete && n == 1));
        assert_eq!(r.score, 3);
    }

    #[test]
    fn empty_and_invalid_sequences_are_input_errors() {
        let p = AlignmentParams::default();
        assert!(matches!(sw_reference(b"", b"ACGT", &p), Err(Error::Input(_))));
        assert!(matches!(banded_diff_dp(b"ACGT", b"", &p), Err(Error::Input(_))));
        assert!(matches!(adaptive_banded_dp(b"ACXT", b"ACGT", &p), Err(Error::Input(_))));
    }

    #[test]
    fn n_matches_nothing() {
        let p = AlignmentParams::default();
        assert_eq!(sw_reference(b"NNNN", b"NNNN", &p).unwrap().score, 0);
        assert_eq!(sw_reference(b"ANA", b"ANA", &p).unwrap().score, 1);
    }

    #[test]
    fn traceback_without_state_is_usage_error() {
        let p = AlignmentParams::default();
        let (r, st) = sw_reference_state(b"ACGT", b"ACGT", &p).unwrap();
        assert!(r.cigar.is_none());
        assert!(matches!(traceback(&st, r.end_position, b"ACGT", b"ACGT", &p), Err(Error::Usage(_))));
    }

    #[test]
    fn diff_encoding() {
        assert_eq!(encode_diff(3).value(), 3);
        assert_eq!(decode_diff(encode_diff(3), 40), 43);
        assert_eq!(encode_diff(100).value(), 15);
        assert_eq!(encode_diff(-100).value(), -16);
        for v in DIFF_MIN..=DIFF_MAX {
            assert_eq!(encode_diff(v).value(), v);
            assert_eq!(decode_diff(encode_diff(v), 0), v);
        }
    }

    #[test]
    fn perfect_match_in_band() {
        let read: Vec<u8> = (0..100).map(|i| b"ACGT"[(i * 7 + i / 3) % 4]).collect();
        let p = AlignmentParams { band_width: 6, adaptive: false, ..params() };
        assert_eq!(banded_diff_dp(&read, &read, &p).unwrap().score, 100);
        let p = AlignmentParams { band_width: 3, adaptive: true, ..params() };
        let (r, st) = adaptive_banded_dp_state(&read, &read, &p).unwrap();
        assert_eq!(r.score, 100);
        assert_eq!(r.cigar.unwrap().to_string(), "100M");
        // The center cell of every even anti-diagonal sits on the main diagonal.
        let starts = st.band_starts().unwrap();
        for (idx, lo) in starts.iter().enumerate() {
            let d = idx as isize + 2;
            if d % 2 == 0 && d <= 200 {
                assert_eq!(lo + 1, d / 2, "anti-diagonal {d}");
            }
        }
    }

    #[test]
    fn adaptive_follows_a_midpoint_deletion() {
        let reference: Vec<u8> = (0..80).map(|i| b"ACGT"[(i * 13 + i / 5) % 4]).collect();
        let mut query = reference.clone();
        query.remove(40);
        let p = AlignmentParams { band_width: 3, adaptive: true, ..params() };
        let (r, st) = adaptive_banded_dp_state(&query, &reference, &p).unwrap();
        assert_eq!(r.score, sw_reference(&query, &reference, &p).unwrap().score);
        // Center offset (i - j) averages 0 before the deletion and about +1 after it.
        let starts = st.band_starts().unwrap();
        let offset = |idx: usize| {
            let d = idx as isize + 2;
            let ci = starts[idx] + 1;
            2 * ci - d
        };
        let mean = |r: core::ops::Range<usize>| r.clone().map(offset).sum::<isize>() as f64 / r.len() as f64;
        assert!(mean(10..40).abs() <= 0.5);
        assert!((mean(120..150) - 1.0).abs() <= 0.5);
        let c = r.cigar.unwrap();
        assert_eq!(c.count(CigarOp::Delete), 1);
    }

    #[test]
    fn wide_band_falls_back() {
        let p = AlignmentParams { band_width: 10, adaptive: false, ..params() };
        let r = banded_diff_dp(b"ACGTAC", b"ACGT", &p).unwrap();
        assert_eq!(r, sw_reference(b"ACGTAC", b"ACGT", &p).unwrap());
    }

    #[test]
    fn large_scores_clamp_and_flag() {
        let p = AlignmentParams {
            match_score: 20,
            mismatch_penalty: -20,
            gap_penalty: -20,
            band_width: 4,
            adaptive: false,
            traceback: false,
        };
        let q = b"AAAAAAAACCCCCCCC";
        let r = b"AAAAAAAAGGGGGGGG";
        assert!(banded_diff_dp(q, r, &p).unwrap().lossy);
        let small = AlignmentParams::default();
        assert!(!banded_diff_dp(q, r, &AlignmentParams { adaptive: false, ..small }).unwrap().lossy);
    }

    #[test]
    fn params_validation() {
        assert!(AlignmentParams::default().validate().is_ok());
        assert!(AlignmentParams { match_score: 0, ..Default::default() }.validate().is_err());
        assert!(AlignmentParams { mismatch_penalty: 1, ..Default::default() }.validate().is_err());
        assert!(AlignmentParams { gap_penalty: 1, ..Default::default() }.validate().is_err());
        assert!(AlignmentParams { band_width: 0, adaptive: false, ..Default::default() }.validate().is_err());
        assert!(AlignmentParams { band_width: 2, adaptive: true, ..Default::default() }.validate().is_err());
    }

    proptest! {
        #[test]
        fn sw_matches_oracle(q in dna(24), r in dna(24)) {
            let p = params();
            prop_assert_eq!(sw_reference(&q, &r, &p).unwrap().score, oracle_score(&q, &r, &p));
        }

        #[test]
        fn covering_band_equals_sw(q in dna(24), r in dna(24)) {
            let p = AlignmentParams { band_width: q.len() + r.len(), adaptive: false, ..params() };
            let b = banded_diff_dp(&q, &r, &p).unwrap();
            let s = sw_reference(&q, &r, &p).unwrap();
            prop_assert_eq!(b.score, s.score);
            prop_assert_eq!(b.end_position, s.end_position);
        }

        #[test]
        fn diff_storage_is_exact_in_range(q in dna(40), r in dna(40), w in 1usize..8) {
            let p = AlignmentParams { band_width: w, adaptive: false, ..AlignmentParams::default() };
            prop_assume!(w <= r.len());
            let b = banded_diff_dp(&q, &r, &p).unwrap();
            prop_assert!(!b.lossy);
            prop_assert_eq!(b.score, banded_plain(&q, &r, &p));
        }

        #[test]
        fn adaptive_never_beats_full(q in dna(40), r in dna(40), w in 3usize..9) {
            let p = AlignmentParams { band_width: w, adaptive: true, ..params() };
            let a = adaptive_banded_dp(&q, &r, &p).unwrap();
            prop_assert!(a.score <= sw_reference(&q, &r, &p).unwrap().score);
        }

        #[test]
        fn cigars_replay_to_score(q in dna(30), r in dna(30), kind in 0u8..3) {
            let p = match kind {
                0 => params(),
                1 => AlignmentParams { band_width: 4, adaptive: false, ..params() },
                _ => AlignmentParams { band_width: 5, adaptive: true, ..params() },
            };
            prop_assume!(p.band_width <= r.len() || kind == 0);
            let res = match kind {
                0 => sw_reference(&q, &r, &p).unwrap(),
                1 => banded_diff_dp(&q, &r, &p).unwrap(),
                _ => adaptive_banded_dp(&q, &r, &p).unwrap(),
            };
            let cigar = res.cigar.clone().unwrap();
            prop_assert_eq!(replay_score(&cigar, res.end_position, &q, &r, &p).unwrap(), res.score);
        }

        #[test]
        fn cell_update_matches_plain_max(diag in -1000i32..1000, up in -1000i32..1000, left in -1000i32..1000,
                                         s in -5i32..5, g in -5i32..=0) {
            prop_assert_eq!(cell(diag, up, left, s, g), 0.max(diag + s).max(up + g).max(left + g));
        }

        #[test]
        fn deterministic(q in dna(30), r in dna(30)) {
            let p = AlignmentParams { band_width: 5, ..params() };
            prop_assume!(r.len() >= 5);
            prop_assert_eq!(adaptive_banded_dp(&q, &r, &p).unwrap(), adaptive_banded_dp(&q, &r, &p).unwrap());
        }
    }
}
