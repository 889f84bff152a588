//! Accumulate/combine algebra over saturating 32-bit values.
//!
//! Every DP kernel in the crate is a relaxation `d = d ⊕ (a ⊗ b)`. Min-plus gives
//! shortest paths, max-plus gives alignment scores.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// "Unreachable" under min-plus, and the upper saturation bound.
pub const POS_INF: i32 = i32::MAX;
/// Neutral element of max-plus, and the lower saturation bound.
pub const NEG_INF: i32 = i32::MIN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accumulate {
    Min,
    Max,
}

/// An (⊕, ⊗) pair. ⊗ is always saturating addition; ⊕ is min or max.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SemiringSpec {
    pub accumulate: Accumulate,
    pub accumulate_identity: i32,
    pub combine_identity: i32,
}

pub const fn minplus_spec() -> SemiringSpec {
    SemiringSpec {
        accumulate: Accumulate::Min,
        accumulate_identity: POS_INF,
        combine_identity: 0,
    }
}

pub const fn maxplus_spec() -> SemiringSpec {
    SemiringSpec {
        accumulate: Accumulate::Max,
        accumulate_identity: NEG_INF,
        combine_identity: 0,
    }
}

impl SemiringSpec {
    #[inline]
    pub fn accumulate(&self, a: i32, b: i32) -> i32 {
        match self.accumulate {
            Accumulate::Min => a.min(b),
            Accumulate::Max => a.max(b),
        }
    }

    /// Saturating add with absorbing sentinels. `POS_INF ⊗ NEG_INF` yields the
    /// accumulate identity so the term can never win an accumulate.
    #[inline]
    pub fn combine(&self, a: i32, b: i32) -> i32 {
        let pos = a == POS_INF || b == POS_INF;
        let neg = a == NEG_INF || b == NEG_INF;
        match (pos, neg) {
            (true, true) => self.accumulate_identity,
            (true, false) => POS_INF,
            (false, true) => NEG_INF,
            (false, false) => a.saturating_add(b),
        }
    }

    /// One relaxation step `acc ⊕ (a ⊗ b)`.
    #[inline]
    pub fn relax(&self, acc: i32, a: i32, b: i32) -> i32 {
        self.accumulate(acc, self.combine(a, b))
    }
}

/// Square tile stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tile {
    side: usize,
    data: Vec<i32>,
}

impl Tile {
    pub fn filled(side: usize, value: i32) -> Self {
        Tile {
            side,
            data: vec![value; side * side],
        }
    }

    pub fn from_vec(side: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::Shape(format!(
                "tile of side {side} needs {} cells, got {}",
                side * side,
                data.len()
            )));
        }
        Ok(Tile { side, data })
    }

    pub fn from_rows(rows: &[&[i32]]) -> Result<Self> {
        let side = rows.len();
        let mut data = Vec::with_capacity(side * side);
        for r in rows {
            if r.len() != side {
                return Err(Error::Shape(format!("row of length {} in a {side}-row tile", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Tile { side, data })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.side + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i32) {
        self.data[i * self.side + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[i32] {
        &self.data[i * self.side..(i + 1) * self.side]
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [i32] {
        &mut self.data
    }
}

pub(crate) fn check_same_side(tiles: &[&Tile]) -> Result<usize> {
    let side = tiles[0].side;
    if side == 0 {
        return Err(Error::Shape("tile side must be at least 1".into()));
    }
    for t in &tiles[1..] {
        if t.side != side {
            return Err(Error::Shape(format!("tile sides differ: {side} vs {}", t.side)));
        }
    }
    Ok(side)
}

/// `D'[i][j] = D[i][j] ⊕ ⊕_k (A[i][k] ⊗ B[k][j])`, pure.
pub fn tile_update(d: &Tile, a: &Tile, b: &Tile, spec: SemiringSpec) -> Result<Tile> {
    let n = check_same_side(&[d, a, b])?;
    let mut out = d.clone();
    for i in 0..n {
        for j in 0..n {
            let mut acc = d.get(i, j);
            for k in 0..n {
                acc = spec.relax(acc, a.get(i, k), b.get(k, j));
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}
