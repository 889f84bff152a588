//! All-pairs shortest paths: scalar Floyd-Warshall and its tiled three-phase form.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::semiring::{check_same_side, Tile, POS_INF};
use crate::{Error, Result};

/// Dense n×n distance grid. Off-diagonal cells hold a nonnegative weight or `POS_INF`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<i32>,
}

impl DistanceMatrix {
    /// Zero diagonal, everything else unreachable.
    pub fn unconnected(n: usize) -> Self {
        let mut data = vec![POS_INF; n * n];
        for i in 0..n {
            data[i * n + i] = 0;
        }
        DistanceMatrix { n, data }
    }

    pub fn from_vec(n: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Shape(format!("{n}x{n} matrix needs {} cells, got {}", n * n, data.len())));
        }
        Ok(DistanceMatrix { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i32) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.data
    }

    /// Count of finite off-diagonal cells.
    pub fn finite_edges(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.get(i, j) != POS_INF {
                    c += 1;
                }
            }
        }
        c
    }

    /// Smallest multiple of `b` that is at least `n`.
    pub fn padded_len(n: usize, b: usize) -> usize {
        n.div_ceil(b) * b
    }

    /// Extend with unreachable phantom nodes so the side is a multiple of `b`.
    pub fn padded(&self, b: usize) -> Result<Self> {
        if b == 0 {
            return Err(Error::Config("block size must be at least 1".into()));
        }
        let p = Self::padded_len(self.n, b);
        if p == self.n {
            return Ok(self.clone());
        }
        let mut out = Self::unconnected(p);
        for i in 0..self.n {
            out.data[i * p..i * p + self.n].copy_from_slice(&self.data[i * self.n..(i + 1) * self.n]);
        }
        Ok(out)
    }

    /// Leading `n`×`n` corner.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.n);
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            data.extend_from_slice(&self.data[i * self.n..i * self.n + n]);
        }
        DistanceMatrix { n, data }
    }

    /// Copy tile (ti, tj) of side `b` out of the grid.
    pub fn tile(&self, ti: usize, tj: usize, b: usize) -> Tile {
        let mut v = Vec::with_capacity(b * b);
        for r in 0..b {
            let start = (ti * b + r) * self.n + tj * b;
            v.extend_from_slice(&self.data[start..start + b]);
        }
        Tile::from_vec(b, v).expect("tile size is b*b by construction")
    }

    fn store_tile(&mut self, ti: usize, tj: usize, t: &Tile) {
        let b = t.side();
        for r in 0..b {
            let start = (ti * b + r) * self.n + tj * b;
            self.data[start..start + b].copy_from_slice(t.row(r));
        }
    }
}

/// Builds the adjacency grid. Duplicate edges keep the minimum weight, self-loops are dropped.
pub fn load_graph(edges: &[(usize, usize, i64)], n: usize) -> Result<DistanceMatrix> {
    let mut m = DistanceMatrix::unconnected(n);
    for &(u, v, w) in edges {
        if u >= n || v >= n {
            return Err(Error::Input(format!("edge ({u}, {v}) references a node outside 0..{n}")));
        }
        if w < 0 {
            return Err(Error::Input(format!("edge ({u}, {v}) has negative weight {w}")));
        }
        if w >= POS_INF as i64 {
            return Err(Error::Input(format!("edge ({u}, {v}) weight {w} does not fit in 31 bits")));
        }
        if u == v {
            continue;
        }
        let w = w as i32;
        if w < m.get(u, v) {
            m.set(u, v, w);
        }
    }
    Ok(m)
}

/// `dst[j] = min(dst[j], a + src[j])`. Needs `a` finite and nonnegative and `src`
/// nonnegative or `POS_INF`, which makes a plain saturating add absorb correctly.
#[inline]
fn relax_row(dst: &mut [i32], a: i32, src: &[i32]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        let t = a.saturating_add(s);
        if t < *d {
            *d = t;
        }
    }
}

/// Scalar Floyd-Warshall, k outermost.
pub fn fw_reference(m: &DistanceMatrix) -> DistanceMatrix {
    let n = m.n;
    let mut d = m.data.clone();
    let mut row_k = vec![0; n];
    for k in 0..n {
        row_k.copy_from_slice(&d[k * n..(k + 1) * n]);
        for i in 0..n {
            let dik = d[i * n + k];
            if dik == POS_INF {
                continue;
            }
            relax_row(&mut d[i * n..(i + 1) * n], dik, &row_k);
        }
    }
    DistanceMatrix { n, data: d }
}

/// Floyd-Warshall restricted to one tile.
pub fn fw_on_block(pivot: &Tile) -> Tile {
    let mut t = pivot.clone();
    fw_on_block_in_place(&mut t);
    t
}

pub(crate) fn fw_on_block_in_place(t: &mut Tile) {
    let b = t.side();
    let mut row_k = vec![0; b];
    for k in 0..b {
        row_k.copy_from_slice(t.row(k));
        for i in 0..b {
            let dik = t.get(i, k);
            if dik == POS_INF {
                continue;
            }
            relax_row(&mut t.as_mut_slice()[i * b..(i + 1) * b], dik, &row_k);
        }
    }
}

/// `target ⊕ left ⊗ top` under min-plus, pure.
pub fn block_update(target: &Tile, left: &Tile, top: &Tile) -> Result<Tile> {
    check_same_side(&[target, left, top])?;
    let mut out = target.clone();
    block_update_in_place(&mut out, left, top);
    Ok(out)
}

pub(crate) fn block_update_in_place(target: &mut Tile, left: &Tile, top: &Tile) {
    let b = target.side();
    let dst = target.as_mut_slice();
    for i in 0..b {
        let row = &mut dst[i * b..(i + 1) * b];
        for k in 0..b {
            let a = left.get(i, k);
            if a == POS_INF {
                continue;
            }
            relax_row(row, a, top.row(k));
        }
    }
}

/// Which of the three phases a tile operation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Pivot,
    RowCol,
    Internal,
}

/// Observer for the tile schedule; the engine uses it to charge time per tile.
pub trait TileVisitor {
    fn super_step(&mut self, _k: usize) {}
    fn tile(&mut self, phase: Phase, k: usize, i: usize, j: usize);
}

impl TileVisitor for () {
    fn tile(&mut self, _: Phase, _: usize, _: usize, _: usize) {}
}

/// Three-phase tiled Floyd-Warshall. `b` must divide the side of `m`.
pub fn blocked_fw(m: &DistanceMatrix, b: usize) -> Result<DistanceMatrix> {
    blocked_fw_visit(m, b, &mut ())
}

/// [`blocked_fw`] with a callback per tile operation, in execution order.
pub fn blocked_fw_visit<V: TileVisitor>(m: &DistanceMatrix, b: usize, visitor: &mut V) -> Result<DistanceMatrix> {
    if b == 0 || m.n % b != 0 {
        return Err(Error::Config(format!("block size {b} does not divide n = {}", m.n)));
    }
    let t = m.n / b;
    let mut tiles: Vec<Tile> = Vec::with_capacity(t * t);
    for i in 0..t {
        for j in 0..t {
            tiles.push(m.tile(i, j, b));
        }
    }
    let at = |i: usize, j: usize| i * t + j;
    for k in 0..t {
        visitor.super_step(k);
        fw_on_block_in_place(&mut tiles[at(k, k)]);
        visitor.tile(Phase::Pivot, k, k, k);
        let pivot = tiles[at(k, k)].clone();
        for i in (0..t).filter(|&i| i != k) {
            let left = tiles[at(i, k)].clone();
            block_update_in_place(&mut tiles[at(i, k)], &left, &pivot);
            visitor.tile(Phase::RowCol, k, i, k);
        }
        for j in (0..t).filter(|&j| j != k) {
            let top = tiles[at(k, j)].clone();
            block_update_in_place(&mut tiles[at(k, j)], &pivot, &top);
            visitor.tile(Phase::RowCol, k, k, j);
        }
        for i in (0..t).filter(|&i| i != k) {
            let left = tiles[at(i, k)].clone();
            for j in (0..t).filter(|&j| j != k) {
                let top = tiles[at(k, j)].clone();
                block_update_in_place(&mut tiles[at(i, j)], &left, &top);
                visitor.tile(Phase::Internal, k, i, j);
            }
        }
    }
    let mut out = DistanceMatrix::unconnected(m.n);
    for i in 0..t {
        for j in 0..t {
            out.store_tile(i, j, &tiles[at(i, j)]);
        }
    }
    Ok(out)
}

/// Pads to a multiple of `b`, runs [`blocked_fw`], and trims the phantom nodes.
pub fn blocked_fw_padded(m: &DistanceMatrix, b: usize) -> Result<DistanceMatrix> {
    let p = m.padded(b)?;
    Ok(blocked_fw(&p, b)?.truncated(m.n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiring::{minplus_spec, tile_update};
    use proptest::prelude::*;

    fn graph_strategy(max_n: usize) -> impl Strategy<Value = DistanceMatrix> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec((0..n, 0..n, 0i64..=20), 0..=(n * n).min(200))
                .prop_map(move |edges| load_graph(&edges, n).unwrap())
        })
    }

    fn apsp_tile(side: usize) -> impl Strategy<Value = Tile> {
        proptest::collection::vec(prop_oneof![6 => 0i32..=100, 1 => Just(POS_INF)], side * side)
            .prop_map(move |v| Tile::from_vec(side, v).unwrap())
    }

    #[test]
    fn one_relaxation() {
        let m = load_graph(&[(0, 1, 2), (1, 2, 3), (0, 2, 10)], 3).unwrap();
        assert_eq!(fw_reference(&m).get(0, 2), 5);
    }

    #[test]
    fn empty_graph_is_identity() {
        let m = DistanceMatrix::unconnected(4);
        assert_eq!(fw_reference(&m), m);
    }

    #[test]
    fn load_graph_rules() {
        let m = load_graph(&[], 2).unwrap();
        assert_eq!(m.as_slice(), &[0, POS_INF, POS_INF, 0]);
        let m = load_graph(&[(0, 1, 5), (0, 1, 3), (1, 1, 7)], 2).unwrap();
        assert_eq!(m.get(0, 1), 3);
        assert_eq!(m.get(1, 1), 0);
        assert!(matches!(load_graph(&[(0, 2, 1)], 2), Err(Error::Input(_))));
        assert!(matches!(load_graph(&[(0, 1, -1)], 2), Err(Error::Input(_))));
        assert!(matches!(load_graph(&[(0, 1, i32::MAX as i64)], 2), Err(Error::Input(_))));
    }

    #[test]
    fn small_tile_examples() {
        let t = Tile::from_rows(&[&[0]]).unwrap();
        assert_eq!(fw_on_block(&t), t);
        let t = Tile::from_rows(&[&[0, 4], &[1, 0]]).unwrap();
        assert_eq!(fw_on_block(&t), t);
        let one = |v| Tile::from_vec(1, vec![v]).unwrap();
        assert_eq!(block_update(&one(10), &one(2), &one(3)).unwrap().get(0, 0), 5);
        let target = Tile::from_vec(2, vec![1, 2, 3, 4]).unwrap();
        let id = Tile::filled(2, POS_INF);
        assert_eq!(block_update(&target, &id, &id).unwrap(), target);
    }

    #[test]
    fn bad_block_size_is_config_error() {
        let m = DistanceMatrix::unconnected(6);
        assert!(matches!(blocked_fw(&m, 4), Err(Error::Config(_))));
        assert!(matches!(blocked_fw(&m, 0), Err(Error::Config(_))));
    }

    #[test]
    fn schedule_order_follows_three_phases() {
        struct Log(Vec<(Phase, usize, usize, usize)>);
        impl TileVisitor for Log {
            fn tile(&mut self, p: Phase, k: usize, i: usize, j: usize) {
                self.0.push((p, k, i, j));
            }
        }
        let mut log = Log(Vec::new());
        blocked_fw_visit(&DistanceMatrix::unconnected(6), 2, &mut log).unwrap();
        assert_eq!(log.0.len(), 3 * 9);
        let step0: Vec<_> = log.0[..9].to_vec();
        assert_eq!(step0[0], (Phase::Pivot, 0, 0, 0));
        assert_eq!(&step0[1..5], &[
            (Phase::RowCol, 0, 1, 0),
            (Phase::RowCol, 0, 2, 0),
            (Phase::RowCol, 0, 0, 1),
            (Phase::RowCol, 0, 0, 2)
        ]);
        assert!(step0[5..].iter().all(|&(p, _, i, j)| p == Phase::Internal && i != 0 && j != 0));
    }

    proptest! {
        #[test]
        fn fast_kernel_matches_generic_update(d in apsp_tile(4), a in apsp_tile(4), b in apsp_tile(4)) {
            prop_assert_eq!(block_update(&d, &a, &b).unwrap(), tile_update(&d, &a, &b, minplus_spec()).unwrap());
        }

        #[test]
        fn fw_on_block_matches_reference(g in graph_strategy(6)) {
            let n = g.n();
            let t = Tile::from_vec(n, g.as_slice().to_vec()).unwrap();
            let (got, want) = (fw_on_block(&t), fw_reference(&g));
            prop_assert_eq!(got.as_slice(), want.as_slice());
        }

        #[test]
        fn degenerate_blockings_match(g in graph_strategy(12)) {
            let r = fw_reference(&g);
            prop_assert_eq!(&blocked_fw(&g, 1).unwrap(), &r);
            prop_assert_eq!(&blocked_fw(&g, g.n()).unwrap(), &r);
        }

        #[test]
        fn reference_is_idempotent(g in graph_strategy(16)) {
            let r = fw_reference(&g);
            prop_assert_eq!(fw_reference(&r), r);
        }

        #[test]
        fn triangle_inequality(g in graph_strategy(20)) {
            let r = fw_reference(&g);
            let s = minplus_spec();
            let n = r.n();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        prop_assert!(r.get(i, j) <= s.combine(r.get(i, k), r.get(k, j)));
                    }
                }
            }
        }

        #[test]
        fn padding_never_changes_distances(g in graph_strategy(20), b in 1usize..9) {
            prop_assert_eq!(blocked_fw_padded(&g, b).unwrap(), fw_reference(&g));
        }
    }

    #[test]
    fn sixty_four_nodes_block_sixteen() {
        // Fixed LCG so the graph is reproducible without a rand dependency in core.
        let mut s: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 33) as usize
        };
        let mut edges = Vec::new();
        for _ in 0..600 {
            edges.push((next() % 64, next() % 64, (next() % 20 + 1) as i64));
        }
        let g = load_graph(&edges, 64).unwrap();
        assert_eq!(blocked_fw(&g, 16).unwrap(), fw_reference(&g));
    }
}
