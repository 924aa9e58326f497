//! Directed graphs shared by the LE-list and SCC code, plus reference
//! shortest-path and strongly-connected-component oracles.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::order::SplitMix64;

/// Distance to an unreachable vertex.
pub const UNREACHABLE: f64 = f64::INFINITY;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {index}: vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { index: usize, vertex: u64, n: usize },
    #[error("edge {index}: weight {weight} is negative or not finite")]
    BadWeight { index: usize, weight: f64 },
    #[error("cannot place {m} edges on an empty vertex set")]
    NoVertices { m: usize },
}

/// Directed graph with forward and reverse adjacency. Unweighted graphs
/// store weight 1 on every edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    out_adj: Vec<Vec<(u32, f64)>>,
    in_adj: Vec<Vec<(u32, f64)>>,
    edges: Vec<(u32, u32, f64)>,
    weighted: bool,
}

impl Graph {
    /// Builds a graph from `(u, v, w)` triples; `w` is ignored when unweighted.
    pub fn from_edges(n: usize, edges: &[(u32, u32, f64)], weighted: bool) -> Result<Self, GraphError> {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut kept = Vec::with_capacity(edges.len());
        for (index, &(u, v, w)) in edges.iter().enumerate() {
            for x in [u, v] {
                if x as usize >= n {
                    return Err(GraphError::VertexOutOfRange { index, vertex: x as u64, n });
                }
            }
            let w = if weighted { w } else { 1.0 };
            if !(w >= 0.0 && w.is_finite()) {
                return Err(GraphError::BadWeight { index, weight: w });
            }
            out_adj[u as usize].push((v, w));
            in_adj[v as usize].push((u, w));
            kept.push((u, v, w));
        }
        Ok(Self { n, out_adj, in_adj, edges: kept, weighted })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn out_edges(&self, u: u32) -> &[(u32, f64)] {
        &self.out_adj[u as usize]
    }

    pub fn in_edges(&self, u: u32) -> &[(u32, f64)] {
        &self.in_adj[u as usize]
    }

    /// Edges in input order.
    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    /// The edge-list text format read by [`parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}{}", self.n, self.m(), if self.weighted { " weighted" } else { "" });
        for &(u, v, w) in &self.edges {
            if self.weighted {
                let _ = writeln!(s, "{u} {v} {w}");
            } else {
                let _ = writeln!(s, "{u} {v}");
            }
        }
        s
    }
}

/// Parses `n m [weighted]` followed by `m` lines `u v [w]` (0-based).
/// Blank lines and `#` comments are skipped.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, msg: String| GraphError::Parse { line, msg };
    let (hline, header) = lines.next().ok_or_else(|| err(1, "missing `n m` header".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let weighted = match fields.as_slice() {
        [_, _] => false,
        [_, _, "weighted"] => true,
        _ => return Err(err(hline, format!("expected `n m [weighted]`, found {header:?}"))),
    };
    let n: usize = fields[0].parse().map_err(|_| err(hline, format!("invalid vertex count {:?}", fields[0])))?;
    let m: usize = fields[1].parse().map_err(|_| err(hline, format!("invalid edge count {:?}", fields[1])))?;
    let mut edges = Vec::with_capacity(m);
    for (line, body) in lines {
        if edges.len() == m {
            return Err(err(line, format!("more than the {m} declared edges")));
        }
        let f: Vec<&str> = body.split_whitespace().collect();
        let expected = if weighted { 3 } else { 2 };
        if f.len() != expected {
            return Err(err(line, format!("expected {expected} fields, found {}", f.len())));
        }
        let vertex = |s: &str| -> Result<u32, GraphError> {
            let v: u64 = s.parse().map_err(|_| err(line, format!("invalid vertex {s:?}")))?;
            if v >= n as u64 {
                return Err(err(line, format!("vertex {v} out of range for {n} vertices")));
            }
            Ok(v as u32)
        };
        let (u, v) = (vertex(f[0])?, vertex(f[1])?);
        let w = if weighted {
            let w: f64 = f[2].parse().map_err(|_| err(line, format!("invalid weight {:?}", f[2])))?;
            if !(w >= 0.0 && w.is_finite()) {
                return Err(err(line, format!("weight {w} must be finite and non-negative")));
            }
            w
        } else {
            1.0
        };
        edges.push((u, v, w));
    }
    if edges.len() != m {
        return Err(err(text.lines().count().max(1), format!("expected {m} edges, found {}", edges.len())));
    }
    Graph::from_edges(n, &edges, weighted)
}

/// `m` edges with endpoints drawn uniformly (with replacement); weights
/// uniform in `(0, 1]` when `weighted`.
pub fn gen_random_graph(n: usize, m: usize, seed: u64, weighted: bool) -> Result<Graph, GraphError> {
    if n == 0 && m > 0 {
        return Err(GraphError::NoVertices { m });
    }
    let mut rng = SplitMix64::new(seed).fork(0x67);
    let edges: Vec<(u32, u32, f64)> = (0..m)
        .map(|_| {
            let u = rng.below(n as u64) as u32;
            let v = rng.below(n as u64) as u32;
            let w = if weighted { ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64 } else { 1.0 };
            (u, v, w)
        })
        .collect();
    Graph::from_edges(n, &edges, weighted)
}

/// Single-source distances along out-edges: BFS when unweighted, binary-heap
/// Dijkstra otherwise. Unreachable vertices get [`UNREACHABLE`].
pub fn oracle_sssp(g: &Graph, source: u32) -> Vec<f64> {
    let mut dist = vec![UNREACHABLE; g.n];
    dist[source as usize] = 0.0;
    if !g.weighted {
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in g.out_edges(u) {
                if dist[v as usize] == UNREACHABLE {
                    dist[v as usize] = dist[u as usize] + 1.0;
                    queue.push_back(v);
                }
            }
        }
        return dist;
    }
    let mut heap = BinaryHeap::from([Reverse((OrdF64(0.0), source))]);
    while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
        if d > dist[u as usize] {
            continue;
        }
        for &(v, w) in g.out_edges(u) {
            let nd = d + w;
            if nd < dist[v as usize] {
                dist[v as usize] = nd;
                heap.push(Reverse((OrdF64(nd), v)));
            }
        }
    }
    dist
}

/// Total order on non-NaN floats for heaps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct OrdF64(pub f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Tarjan's algorithm (iterative). Components are numbered in the order
/// they are completed.
pub fn oracle_scc(g: &Graph) -> Vec<u32> {
    const UNSEEN: u32 = u32::MAX;
    let n = g.n;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut label = vec![UNSEEN; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut next_label = 0u32;
    // Call frames: (vertex, next out-edge position).
    let mut frames: Vec<(u32, usize)> = Vec::new();
    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        frames.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (u, ref mut pos)) = frames.last_mut() {
            let edges = g.out_edges(u);
            if *pos < edges.len() {
                let v = edges[*pos].0;
                *pos += 1;
                if index[v as usize] == UNSEEN {
                    index[v as usize] = next_index;
                    low[v as usize] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v as usize] = true;
                    frames.push((v, 0));
                } else if on_stack[v as usize] {
                    low[u as usize] = low[u as usize].min(index[v as usize]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent as usize] = low[parent as usize].min(low[u as usize]);
            }
            if low[u as usize] == index[u as usize] {
                loop {
                    let w = stack.pop().expect("root is on the stack");
                    on_stack[w as usize] = false;
                    label[w as usize] = next_label;
                    if w == u {
                        break;
                    }
                }
                next_label += 1;
            }
        }
    }
    label
}

/// Relabels components by first appearance (vertex 0's component becomes 0, ...).
pub fn canonical_labels(labels: &[u32]) -> Vec<u32> {
    let mut map = rustc_hash::FxHashMap::default();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() as u32;
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// True if two labelings describe the same partition of the vertices.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    a.len() == b.len() && canonical_labels(a) == canonical_labels(b)
}
