//! Deterministic synthetic inputs: references, sequencing reads and graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dpim_core::Error;

use crate::error::Result;

const BASES: &[u8; 4] = b"ACGT";

pub fn random_reference(length: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..length).map(|_| BASES[rng.random_range(0..4)]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatedReads {
    pub reads: Vec<Vec<u8>>,
    /// Reference offset each read was copied from.
    pub truth: Vec<usize>,
}

/// Copies uniformly placed reference windows and applies per-base errors: with
/// probability `error_rate` a base is wrong; a wrong base is an indel with probability
/// `indel_fraction` (insertion or deletion, evenly), otherwise a substitution.
pub fn simulate_reads(
    reference: &[u8],
    count: usize,
    length: usize,
    error_rate: f64,
    indel_fraction: f64,
    seed: u64,
) -> Result<SimulatedReads> {
    if length == 0 || length > reference.len() {
        return Err(Error::Input(format!(
            "read length {length} must be in 1..={} (reference length)",
            reference.len()
        ))
        .into());
    }
    if !(0.0..1.0).contains(&error_rate) || !(0.0..=1.0).contains(&indel_fraction) {
        return Err(Error::Input("error_rate must be in [0, 1) and indel_fraction in [0, 1]".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reads = Vec::with_capacity(count);
    let mut truth = Vec::with_capacity(count);
    for _ in 0..count {
        let start = rng.random_range(0..=reference.len() - length);
        let mut read = Vec::with_capacity(length);
        let mut pos = start;
        while read.len() < length && pos < reference.len() {
            let b = reference[pos];
            if error_rate > 0.0 && rng.random_bool(error_rate) {
                if rng.random_bool(indel_fraction) {
                    if rng.random_bool(0.5) {
                        read.push(BASES[rng.random_range(0..4)]);
                    } else {
                        pos += 1;
                    }
                    continue;
                }
                let shift = rng.random_range(1..4);
                let i = BASES.iter().position(|&x| x == b).unwrap_or(0);
                read.push(BASES[(i + shift) % 4]);
            } else {
                read.push(b);
            }
            pos += 1;
        }
        reads.push(read);
        truth.push(start);
    }
    Ok(SimulatedReads { reads, truth })
}

/// Directed graph where every vertex gets `out_degree` random successors with
/// weights in `1..=max_weight`.
pub fn random_graph(n: usize, out_degree: usize, max_weight: i64, seed: u64) -> Vec<(usize, usize, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(n * out_degree);
    if n < 2 {
        return edges;
    }
    for u in 0..n {
        for _ in 0..out_degree {
            let v = rng.random_range(0..n);
            edges.push((u, v, rng.random_range(1..=max_weight.max(1))));
        }
    }
    edges
}
