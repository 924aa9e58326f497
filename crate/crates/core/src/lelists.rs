//! LE-lists by iterative pruned shortest-path searches.
//!
//! Vertices are inserted in permutation order. Inserting `s` runs a search
//! from `s` along out-edges that only settles vertices `u` with
//! `d(s, u) < delta(u)`, the best distance any earlier source achieved;
//! each settled `u` gets the entry `(s, d(s, u))` appended to its list.
//!
//! `delta` is always a multi-source distance function, so it satisfies the
//! triangle inequality along edges. A shortest path to a vertex the search
//! must settle therefore never passes through a pruned vertex, and the
//! pruned search returns exact distances.
//!
//! The parallel variant runs every search of a round against the
//! round-start `delta`. Searches then settle a superset of what they would
//! sequentially; the combine sorts the hits by `(target, source rank)` and
//! keeps the strict prefix minima, which is exactly the sequential outcome.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::ops::Range;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::exec::{run_type3, RoundTrace, Type3Steps};
use crate::graphcore::{oracle_sssp, Graph, OrdF64};
use crate::order::Permutation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LeError {
    #[error("permutation has {perm} entries for {n} vertices")]
    PermutationSize { n: usize, perm: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeEntry {
    pub source: u32,
    pub dist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeLists {
    /// `lists[u]`: entries in increasing source rank, strictly decreasing distance.
    pub lists: Vec<Vec<LeEntry>>,
}

impl LeLists {
    pub fn max_len(&self) -> usize {
        self.lists.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_len(&self) -> f64 {
        if self.lists.is_empty() {
            return 0.0;
        }
        self.lists.iter().map(Vec::len).sum::<usize>() as f64 / self.lists.len() as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LeMetrics {
    /// Vertices settled, summed over all searches.
    pub visits: u64,
    pub trace: Option<RoundTrace>,
}

/// Every `(u, d(source, u))` with `d(source, u) < delta[u]`, in settling order.
///
/// Exact when `delta` satisfies `delta[v] <= delta[u] + w(u, v)` on every
/// edge (for instance, distances from any set of earlier sources).
pub fn pruned_sssp(g: &Graph, source: u32, delta: &[f64]) -> Vec<(u32, f64)> {
    let mut settled = Vec::new();
    if 0.0 >= delta[source as usize] {
        return settled;
    }
    let mut tentative: FxHashMap<u32, f64> = FxHashMap::default();
    tentative.insert(source, 0.0);
    if !g.is_weighted() {
        let mut queue = VecDeque::from([(source, 0.0)]);
        while let Some((u, d)) = queue.pop_front() {
            settled.push((u, d));
            let nd = d + 1.0;
            for &(v, _) in g.out_edges(u) {
                if nd < delta[v as usize] && !tentative.contains_key(&v) {
                    tentative.insert(v, nd);
                    queue.push_back((v, nd));
                }
            }
        }
        return settled;
    }
    let mut heap = BinaryHeap::from([Reverse((OrdF64(0.0), source))]);
    while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
        if d > tentative[&u] {
            continue;
        }
        settled.push((u, d));
        for &(v, w) in g.out_edges(u) {
            let nd = d + w;
            if nd < delta[v as usize] && tentative.get(&v).is_none_or(|&t| nd < t) {
                tentative.insert(v, nd);
                heap.push(Reverse((OrdF64(nd), v)));
            }
        }
    }
    settled
}

struct LeRun<'a> {
    g: &'a Graph,
    order: &'a [u32],
    delta: Vec<f64>,
    lists: Vec<Vec<LeEntry>>,
    visits: u64,
}

impl<'a> LeRun<'a> {
    fn new(g: &'a Graph, perm: &'a Permutation) -> Result<Self, LeError> {
        if perm.len() != g.n() {
            return Err(LeError::PermutationSize { n: g.n(), perm: perm.len() });
        }
        Ok(Self {
            g,
            order: perm.order(),
            delta: vec![f64::INFINITY; g.n()],
            lists: vec![Vec::new(); g.n()],
            visits: 0,
        })
    }
}

impl Type3Steps for LeRun<'_> {
    type Output = Vec<(u32, f64)>;
    type Error = std::convert::Infallible;

    fn run_step(&self, step: usize) -> Result<Self::Output, Self::Error> {
        Ok(pruned_sssp(self.g, self.order[step], &self.delta))
    }

    fn combine(&mut self, steps: Range<usize>, results: Vec<Self::Output>) {
        let mut hits: Vec<(u32, u32, f64)> = steps
            .zip(results)
            .flat_map(|(rank, settled)| settled.into_iter().map(move |(u, d)| (u, rank as u32, d)))
            .collect();
        self.visits += hits.len() as u64;
        hits.par_sort_unstable_by_key(|&(u, rank, _)| (u, rank));
        for (u, rank, d) in hits {
            // Hits of one target arrive in rank order: keep strict prefix minima.
            if d < self.delta[u as usize] {
                self.delta[u as usize] = d;
                self.lists[u as usize].push(LeEntry { source: self.order[rank as usize], dist: d });
            }
        }
    }
}

/// Sequential construction.
pub fn le_lists_seq(g: &Graph, perm: &Permutation) -> Result<(LeLists, LeMetrics), LeError> {
    let mut run = LeRun::new(g, perm)?;
    for step in 0..g.n() {
        let settled = pruned_sssp(g, run.order[step], &run.delta);
        run.visits += settled.len() as u64;
        for (u, d) in settled {
            run.delta[u as usize] = d;
            run.lists[u as usize].push(LeEntry { source: run.order[step], dist: d });
        }
    }
    Ok((LeLists { lists: run.lists }, LeMetrics { visits: run.visits, trace: None }))
}

/// Doubling rounds of concurrent searches against a round-start snapshot.
pub fn le_lists_par(g: &Graph, perm: &Permutation) -> Result<(LeLists, LeMetrics), LeError> {
    let mut run = LeRun::new(g, perm)?;
    let Ok(trace) = run_type3(g.n(), &mut run);
    Ok((LeLists { lists: run.lists }, LeMetrics { visits: run.visits, trace: Some(trace) }))
}

/// Brute force from the definition: `v_j` is in `L(u)` iff `d(v_j, u)` is
/// strictly smaller than `d(v_k, u)` for every earlier `v_k`. O(n) searches.
pub fn le_lists_oracle(g: &Graph, perm: &Permutation) -> LeLists {
    let from: Vec<Vec<f64>> = perm.order().par_iter().map(|&s| oracle_sssp(g, s)).collect();
    let lists = (0..g.n())
        .map(|u| {
            let mut best = f64::INFINITY;
            let mut list = Vec::new();
            for (rank, dist) in from.iter().enumerate() {
                let d = dist[u];
                if d < best {
                    best = d;
                    list.push(LeEntry { source: perm.at(rank) as u32, dist: d });
                }
            }
            list
        })
        .collect();
    LeLists { lists }
}
