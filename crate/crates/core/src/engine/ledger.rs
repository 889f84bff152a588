//! Phase windows and PE busy intervals recorded during a run, plus a replay pass that
//! recomputes the report's cycle totals from them alone.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::PuClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub phase: &'static str,
    pub start_ps: u64,
    pub end_ps: u64,
}

/// `pes` PEs of one PU class occupied over `[start_ps, end_ps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Busy {
    pub class: PuClass,
    pub pes: u32,
    pub start_ps: u64,
    pub end_ps: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleLedger {
    pub cycle_ps: u64,
    /// PE count per class, the denominator of utilization.
    pub capacity: BTreeMap<PuClass, u64>,
    /// Phases reported even when no window was recorded.
    pub phases: Vec<&'static str>,
    pub windows: Vec<Window>,
    pub busy: Vec<Busy>,
    /// `(name, a, b)`: report the time where phases `a` and `b` are both active as `name`.
    pub overlap: Option<(&'static str, &'static str, &'static str)>,
}

impl CycleLedger {
    pub fn window(&mut self, phase: &'static str, start_ps: u64, end_ps: u64) {
        debug_assert!(start_ps <= end_ps);
        self.windows.push(Window { phase, start_ps, end_ps });
    }

    pub fn busy(&mut self, class: PuClass, pes: u32, start_ps: u64, end_ps: u64) {
        debug_assert!(start_ps <= end_ps);
        if end_ps > start_ps && pes > 0 {
            self.busy.push(Busy {
                class,
                pes,
                start_ps,
                end_ps,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub end_ps: u64,
    pub total_cycles: u64,
    pub phase_cycles: BTreeMap<String, u64>,
    pub utilization: BTreeMap<String, f64>,
    pub phase_utilization: BTreeMap<String, BTreeMap<String, f64>>,
}

/// Sorted, disjoint cover of the given intervals.
fn union(mut iv: Vec<(u64, u64)>) -> Vec<(u64, u64)> {
    iv.retain(|&(a, b)| b > a);
    iv.sort_unstable();
    let mut out: Vec<(u64, u64)> = Vec::with_capacity(iv.len());
    for (a, b) in iv {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

fn length(u: &[(u64, u64)]) -> u64 {
    u.iter().map(|(a, b)| b - a).sum()
}

fn intersect(x: &[(u64, u64)], y: &[(u64, u64)]) -> Vec<(u64, u64)> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        let a = x[i].0.max(y[j].0);
        let b = x[i].1.min(y[j].1);
        if a < b {
            out.push((a, b));
        }
        if x[i].1 < y[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Length of `[a, b)` covered by the disjoint sorted cover `u`.
fn covered(u: &[(u64, u64)], a: u64, b: u64) -> u64 {
    let first = u.partition_point(|iv| iv.1 <= a);
    let mut s = 0;
    for &(x, y) in &u[first..] {
        if x >= b {
            break;
        }
        s += y.min(b) - x.max(a);
    }
    s
}

fn ratio(num: u128, den: u128) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Recomputes totals from the ledger alone: the run ends at the latest recorded
/// instant, each phase lasts the union of its windows, utilization is PE-time busy
/// over PE-time available.
pub fn replay(ledger: &CycleLedger) -> Replay {
    let cyc = ledger.cycle_ps.max(1);
    let end_ps = ledger
        .windows
        .iter()
        .map(|w| w.end_ps)
        .chain(ledger.busy.iter().map(|b| b.end_ps))
        .max()
        .unwrap_or(0);
    let mut covers: BTreeMap<&'static str, Vec<(u64, u64)>> = BTreeMap::new();
    for p in &ledger.phases {
        covers.entry(p).or_default();
    }
    for w in &ledger.windows {
        covers.entry(w.phase).or_default().push((w.start_ps, w.end_ps));
    }
    let covers: BTreeMap<&'static str, Vec<(u64, u64)>> = covers.into_iter().map(|(k, v)| (k, union(v))).collect();

    let mut phase_cycles = BTreeMap::new();
    for (p, u) in &covers {
        phase_cycles.insert(String::from(*p), length(u).div_ceil(cyc));
    }
    if let Some((name, a, b)) = ledger.overlap {
        let empty = Vec::new();
        let both = intersect(covers.get(a).unwrap_or(&empty), covers.get(b).unwrap_or(&empty));
        phase_cycles.insert(String::from(name), length(&both).div_ceil(cyc));
    }

    let mut utilization = BTreeMap::new();
    let mut phase_utilization: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (&class, &cap) in &ledger.capacity {
        let busy: u128 = ledger
            .busy
            .iter()
            .filter(|b| b.class == class)
            .map(|b| b.pes as u128 * (b.end_ps - b.start_ps) as u128)
            .sum();
        utilization.insert(String::from(class.name()), ratio(busy, cap as u128 * end_ps as u128));
        for (p, u) in &covers {
            let inside: u128 = ledger
                .busy
                .iter()
                .filter(|b| b.class == class)
                .map(|b| b.pes as u128 * covered(u, b.start_ps, b.end_ps) as u128)
                .sum();
            phase_utilization
                .entry(String::from(*p))
                .or_default()
                .insert(String::from(class.name()), ratio(inside, cap as u128 * length(u) as u128));
        }
    }
    Replay {
        end_ps,
        total_cycles: end_ps.div_ceil(cyc),
        phase_cycles,
        utilization,
        phase_utilization,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn union_and_intersection() {
        assert_eq!(union(vec![(5, 7), (0, 2), (1, 3), (7, 9), (4, 4)]), vec![(0, 3), (5, 9)]);
        assert_eq!(intersect(&[(0, 10)], &[(2, 3), (8, 12)]), vec![(2, 3), (8, 10)]);
        assert_eq!(covered(&[(0, 3), (5, 9)], 2, 6), 2);
    }

    #[test]
    fn replay_of_two_sequential_phases() {
        let mut l = CycleLedger {
            cycle_ps: 1000,
            ..Default::default()
        };
        l.capacity.insert(PuClass::Compute, 4);
        l.phases = vec!["a", "b", "c"];
        l.window("a", 0, 3000);
        l.window("b", 3000, 4500);
        l.busy(PuClass::Compute, 1, 0, 3000);
        l.busy(PuClass::Compute, 4, 3000, 4500);
        l.overlap = Some(("ab", "a", "b"));
        let r = replay(&l);
        assert_eq!(r.total_cycles, 5);
        assert_eq!(r.phase_cycles["a"], 3);
        assert_eq!(r.phase_cycles["b"], 2);
        assert_eq!(r.phase_cycles["c"], 0);
        assert_eq!(r.phase_cycles["ab"], 0);
        assert_eq!(r.phase_utilization["a"]["compute"], 0.25);
        assert_eq!(r.phase_utilization["b"]["compute"], 1.0);
        assert_eq!(r.utilization["compute"], (3000.0 + 6000.0) / (4.0 * 4500.0));
    }
}
