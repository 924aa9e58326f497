//! Strongly connected components by iterative reachability splitting.
//!
//! Vertices carry a part id; every SCC stays inside one part. Inserting
//! pivot `v` (unless it already belongs to a found component) searches
//! forward and backward from `v` inside its part. The intersection is `v`'s
//! SCC. The rest splits into the forward-only, backward-only and unreached
//! vertices, which become three parts.
//!
//! The parallel variant runs every live pivot of a round against the
//! round-start parts. A vertex reached both ways by several pivots belongs
//! to the SCC of the lowest-ranked one (an atomic-min priority write, here
//! resolved by sorting). Every other reached vertex moves to a part keyed by
//! its old part and the set of `(search, direction)` pairs that reached it.
//! Vertices of one SCC are reached by exactly the same searches, so the
//! cuts never split an SCC. An SCC is always found by its lowest-ranked
//! vertex, so component numbering by that rank matches the sequential run.

use std::collections::VecDeque;
use std::ops::Range;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;
use thiserror::Error;

use crate::exec::{run_type3, RoundTrace, Type3Steps};
use crate::graphcore::Graph;
use crate::order::Permutation;

/// Part id of vertices already assigned to a component.
pub const DEAD: u32 = u32::MAX;
/// Label of vertices not yet assigned to a component.
pub const UNASSIGNED: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SccError {
    #[error("permutation has {perm} entries for {n} vertices")]
    PermutationSize { n: usize, perm: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Current parts and found components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionState {
    /// Part id per vertex, [`DEAD`] once the vertex's component is found.
    pub part: Vec<u32>,
    /// Rank of the pivot that found the vertex's component, or [`UNASSIGNED`].
    pub found_by: Vec<u32>,
}

impl PartitionState {
    pub fn new(n: usize) -> Self {
        Self { part: vec![0; n], found_by: vec![UNASSIGNED; n] }
    }

    /// Component labels numbered by the rank of the pivot that found them.
    /// Panics if some vertex is unassigned.
    pub fn labels(&self) -> Vec<u32> {
        let mut ranks: Vec<u32> = self.found_by.clone();
        ranks.sort_unstable();
        ranks.dedup();
        assert!(ranks.last() != Some(&UNASSIGNED), "some vertex has no component");
        self.found_by.iter().map(|r| ranks.binary_search(r).unwrap() as u32).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SccMetrics {
    /// Vertices reached, summed over all forward and backward searches.
    pub visits: u64,
    pub components: usize,
    pub trace: Option<RoundTrace>,
}

/// Vertices reachable from `source` in direction `dir` without leaving its part.
pub fn restricted_reach(g: &Graph, state: &PartitionState, source: u32, dir: Direction) -> Vec<u32> {
    let p = state.part[source as usize];
    assert_ne!(p, DEAD, "search from a vertex whose component is already found");
    let mut seen = FxHashSet::default();
    seen.insert(source);
    let mut out = vec![source];
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let edges = match dir {
            Direction::Forward => g.out_edges(u),
            Direction::Backward => g.in_edges(u),
        };
        for &(v, _) in edges {
            if state.part[v as usize] == p && seen.insert(v) {
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out
}

/// Sequential iterative algorithm. Returns component labels numbered in
/// pivot order.
pub fn scc_seq(g: &Graph, perm: &Permutation) -> Result<(Vec<u32>, SccMetrics), SccError> {
    let n = g.n();
    if perm.len() != n {
        return Err(SccError::PermutationSize { n, perm: perm.len() });
    }
    let mut state = PartitionState::new(n);
    let mut next_part = 1u32;
    let mut forward_mark = vec![u32::MAX; n];
    let mut metrics = SccMetrics::default();
    for (rank, &v) in perm.order().iter().enumerate() {
        if state.part[v as usize] == DEAD {
            continue;
        }
        let fwd = restricted_reach(g, &state, v, Direction::Forward);
        let bwd = restricted_reach(g, &state, v, Direction::Backward);
        metrics.visits += (fwd.len() + bwd.len()) as u64;
        metrics.components += 1;
        for &x in &fwd {
            forward_mark[x as usize] = rank as u32;
        }
        for &x in &bwd {
            if forward_mark[x as usize] == rank as u32 {
                state.part[x as usize] = DEAD;
                state.found_by[x as usize] = rank as u32;
            }
        }
        let (fwd_part, bwd_part) = (next_part, next_part + 1);
        next_part += 2;
        for (set, id) in [(&fwd, fwd_part), (&bwd, bwd_part)] {
            for &x in set {
                if state.part[x as usize] != DEAD {
                    state.part[x as usize] = id;
                }
            }
        }
    }
    Ok((state.labels(), metrics))
}

struct ParScc<'a> {
    g: &'a Graph,
    order: &'a [u32],
    state: PartitionState,
    next_part: u32,
    visits: u64,
}

/// Forward and backward reach of one live pivot.
type Reach = Option<(Vec<u32>, Vec<u32>)>;

impl Type3Steps for ParScc<'_> {
    type Output = Reach;
    type Error = std::convert::Infallible;

    fn run_step(&self, step: usize) -> Result<Reach, Self::Error> {
        let v = self.order[step];
        if self.state.part[v as usize] == DEAD {
            return Ok(None);
        }
        let fwd = restricted_reach(self.g, &self.state, v, Direction::Forward);
        let bwd = restricted_reach(self.g, &self.state, v, Direction::Backward);
        Ok(Some((fwd, bwd)))
    }

    fn combine(&mut self, steps: Range<usize>, results: Vec<Reach>) {
        // (vertex, search rank, direction: 0 forward / 1 backward)
        let mut hits: Vec<(u32, u32, u8)> = Vec::new();
        for (rank, reach) in steps.zip(results) {
            if let Some((fwd, bwd)) = reach {
                hits.extend(fwd.into_iter().map(|x| (x, rank as u32, 0)));
                hits.extend(bwd.into_iter().map(|x| (x, rank as u32, 1)));
            }
        }
        self.visits += hits.len() as u64;
        hits.par_sort_unstable();
        let mut new_parts: FxHashMap<(u32, Vec<(u32, u8)>), u32> = FxHashMap::default();
        for group in hits.chunk_by(|a, b| a.0 == b.0) {
            let x = group[0].0 as usize;
            // Entries are sorted by rank then direction, so a search that
            // reached `x` both ways appears as two adjacent entries.
            let owner = group.windows(2).find(|w| w[0].1 == w[1].1).map(|w| w[0].1);
            if let Some(rank) = owner {
                self.state.part[x] = DEAD;
                self.state.found_by[x] = rank;
                continue;
            }
            let signature: Vec<(u32, u8)> = group.iter().map(|&(_, r, d)| (r, d)).collect();
            let next = &mut self.next_part;
            let id = *new_parts.entry((self.state.part[x], signature)).or_insert_with(|| {
                *next += 1;
                *next
            });
            self.state.part[x] = id;
        }
    }
}

/// Doubling rounds of concurrent pivot searches with eager part cutting.
/// Labels equal [`scc_seq`]'s exactly.
pub fn scc_par(g: &Graph, perm: &Permutation) -> Result<(Vec<u32>, SccMetrics), SccError> {
    let n = g.n();
    if perm.len() != n {
        return Err(SccError::PermutationSize { n, perm: perm.len() });
    }
    let mut run = ParScc { g, order: perm.order(), state: PartitionState::new(n), next_part: 0, visits: 0 };
    let Ok(trace) = run_type3(n, &mut run);
    let labels = run.state.labels();
    let components = labels.iter().max().map_or(0, |&m| m as usize + 1);
    Ok((labels, SccMetrics { visits: run.visits, components, trace: Some(trace) }))
}
