//! Iteration dependence DAGs recorded from sequential runs.
//!
//! Node ids are dense and assigned in creation order; an arc may only point
//! from an earlier-created node to a later one, so creation order is a
//! topological order and the longest path is a single forward DP pass.

use rustc_hash::FxHashSet;
use serde::Serialize;
use thiserror::Error;

pub type NodeId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DagError {
    #[error("node {0} is not registered")]
    UnknownNode(NodeId),
    #[error("arc {from} -> {to} does not follow creation order")]
    OrderViolation { from: NodeId, to: NodeId },
    #[error("cannot aggregate an empty list of runs")]
    EmptyAggregate,
    #[error("runs have different problem sizes ({0} vs {1})")]
    MixedSizes(usize, usize),
}

#[derive(Clone, Debug, Default)]
pub struct IterationDag {
    labels: Vec<Option<u64>>,
    arcs: Vec<(NodeId, NodeId)>,
    seen: FxHashSet<(NodeId, NodeId)>,
}

impl IterationDag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize) -> Self {
        Self { labels: Vec::with_capacity(nodes), ..Self::default() }
    }

    /// Registers a node; `label` is an optional tag such as an element id.
    pub fn add_node(&mut self, label: Option<u64>) -> NodeId {
        let id = self.labels.len() as NodeId;
        self.labels.push(label);
        id
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: NodeId) -> Option<u64> {
        self.labels.get(node as usize).copied().flatten()
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    /// Records `from -> to`. Recording the same arc twice is a no-op.
    pub fn record_arc(&mut self, from: NodeId, to: NodeId) -> Result<(), DagError> {
        let n = self.labels.len() as NodeId;
        if from >= n {
            return Err(DagError::UnknownNode(from));
        }
        if to >= n {
            return Err(DagError::UnknownNode(to));
        }
        if from >= to {
            return Err(DagError::OrderViolation { from, to });
        }
        if self.seen.insert((from, to)) {
            self.arcs.push((from, to));
        }
        Ok(())
    }

    /// Longest path, in arcs, plus the harmonic normalisation for a problem of size `n`.
    pub fn longest_path(&self, n: usize) -> DepthStats {
        DepthStats::new(self.depths().into_iter().max().unwrap_or(0), n)
    }

    /// Per-node depth: the longest arc count of any path ending at the node.
    pub fn depths(&self) -> Vec<u32> {
        let nodes = self.labels.len();
        // Bucket arcs by target; targets are processed in id order.
        let mut start = vec![0usize; nodes + 1];
        for &(_, to) in &self.arcs {
            start[to as usize + 1] += 1;
        }
        for i in 0..nodes {
            start[i + 1] += start[i];
        }
        let mut preds = vec![0 as NodeId; self.arcs.len()];
        let mut fill = start.clone();
        for &(from, to) in &self.arcs {
            preds[fill[to as usize]] = from;
            fill[to as usize] += 1;
        }
        let mut depth = vec![0u32; nodes];
        for v in 0..nodes {
            let best = preds[start[v]..start[v + 1]].iter().map(|&p| depth[p as usize] + 1).max().unwrap_or(0);
            depth[v] = best;
        }
        depth
    }
}

/// Depth of one recorded run together with its normalisations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthStats {
    pub depth: u32,
    pub n: usize,
    pub harmonic_n: f64,
    /// `depth / ln n`; `None` for `n < 2`.
    pub ratio_to_ln_n: Option<f64>,
}

impl DepthStats {
    pub fn new(depth: u32, n: usize) -> Self {
        let ratio_to_ln_n = (n >= 2).then(|| depth as f64 / (n as f64).ln());
        Self { depth, n, harmonic_n: harmonic(n), ratio_to_ln_n }
    }
}

/// `H_n = sum_{i=1..n} 1/i`, summed smallest term first with Kahan compensation.
pub fn harmonic(n: usize) -> f64 {
    let mut acc = Kahan::default();
    for i in (1..=n).rev() {
        acc.add(1.0 / i as f64);
    }
    acc.sum()
}

#[derive(Default, Clone, Copy)]
pub(crate) struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub(crate) fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn sum(&self) -> f64 {
        self.sum
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DepthSummary {
    pub runs: usize,
    pub n: usize,
    pub mean: f64,
    pub max: u32,
    pub max_ratio_to_ln_n: Option<f64>,
}

/// Aggregates runs that share one problem size.
pub fn aggregate(runs: &[DepthStats]) -> Result<DepthSummary, DagError> {
    let first = runs.first().ok_or(DagError::EmptyAggregate)?;
    let mut acc = Kahan::default();
    let mut max = 0;
    let mut max_ratio: Option<f64> = None;
    for run in runs {
        if run.n != first.n {
            return Err(DagError::MixedSizes(first.n, run.n));
        }
        acc.add(run.depth as f64);
        max = max.max(run.depth);
        if let Some(r) = run.ratio_to_ln_n {
            max_ratio = Some(max_ratio.map_or(r, |m| m.max(r)));
        }
    }
    Ok(DepthSummary {
        runs: runs.len(),
        n: first.n,
        mean: acc.sum() / runs.len() as f64,
        max,
        max_ratio_to_ln_n: max_ratio,
    })
}
