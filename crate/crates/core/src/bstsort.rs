//! Comparison sorting by unbalanced BST insertion in random order.
//!
//! The parallel version runs every pending key in lock-step rounds. In each
//! round a key standing on an empty child slot tries to claim it; contested
//! slots go to the smallest step index (a priority write, realised with
//! `fetch_min`). Losers and keys standing on occupied slots then descend one
//! level. A key at depth `d` finishes in round `d`, so the round count equals
//! the tree height and the tree is exactly the sequential one.

use std::sync::atomic::{AtomicU32, Ordering};

use rayon::prelude::*;
use thiserror::Error;

use crate::dagmeter::IterationDag;

const NIL: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SortError {
    #[error("duplicate key at steps {first} and {second}")]
    DuplicateKey { first: usize, second: usize },
}

/// A BST whose node `i` holds the key inserted at step `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bst<K> {
    keys: Vec<K>,
    left: Vec<u32>,
    right: Vec<u32>,
}

impl<K: Ord + Copy> Bst<K> {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// The first key inserted, if any.
    pub fn root(&self) -> Option<usize> {
        (!self.keys.is_empty()).then_some(0)
    }

    pub fn key(&self, node: usize) -> K {
        self.keys[node]
    }

    pub fn left(&self, node: usize) -> Option<usize> {
        (self.left[node] != NIL).then(|| self.left[node] as usize)
    }

    pub fn right(&self, node: usize) -> Option<usize> {
        (self.right[node] != NIL).then(|| self.right[node] as usize)
    }

    /// Parent of every node (`None` for the root).
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut parent = vec![None; self.len()];
        for v in 0..self.len() {
            for c in [self.left[v], self.right[v]] {
                if c != NIL {
                    parent[c as usize] = Some(v);
                }
            }
        }
        parent
    }

    /// Nodes on the longest root-to-leaf path; 0 for the empty tree.
    pub fn height(&self) -> usize {
        let mut depth = vec![0usize; self.len()];
        let mut best = 0;
        // Children always have larger step indices than their parent.
        for v in 0..self.len() {
            if v == 0 {
                depth[0] = 1;
            }
            best = best.max(depth[v]);
            for c in [self.left[v], self.right[v]] {
                if c != NIL {
                    depth[c as usize] = depth[v] + 1;
                }
            }
        }
        best
    }

    /// Keys in sorted order.
    pub fn in_order(&self) -> Vec<K> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut cur = if self.is_empty() { NIL } else { 0 };
        while cur != NIL || !stack.is_empty() {
            while cur != NIL {
                stack.push(cur);
                cur = self.left[cur as usize];
            }
            let v = stack.pop().unwrap();
            out.push(self.keys[v as usize]);
            cur = self.right[v as usize];
        }
        out
    }
}

fn check_distinct<K: Ord + Copy>(keys: &[K]) -> Result<(), SortError> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    for w in idx.windows(2) {
        if keys[w[0]] == keys[w[1]] {
            return Err(SortError::DuplicateKey { first: w[0], second: w[1] });
        }
    }
    Ok(())
}

/// Sequential insertion in the given order.
pub fn sort_seq<K: Ord + Copy>(keys: &[K]) -> Result<Bst<K>, SortError> {
    check_distinct(keys)?;
    let n = keys.len();
    let mut left = vec![NIL; n];
    let mut right = vec![NIL; n];
    for i in 1..n {
        let mut cur = 0usize;
        loop {
            let slot = if keys[i] < keys[cur] { &mut left[cur] } else { &mut right[cur] };
            if *slot == NIL {
                *slot = i as u32;
                break;
            }
            cur = *slot as usize;
        }
    }
    Ok(Bst { keys: keys.to_vec(), left, right })
}

/// Result of [`sort_par`]: the tree plus the number of lock-step rounds.
#[derive(Clone, Debug)]
pub struct ParSort<K> {
    pub tree: Bst<K>,
    pub rounds: usize,
}

/// Round-parallel insertion with priority writes.
pub fn sort_par<K: Ord + Copy + Send + Sync>(keys: &[K]) -> Result<ParSort<K>, SortError> {
    check_distinct(keys)?;
    let n = keys.len();
    // Slot 0 is the root pointer; slots 2v+1 / 2v+2 are node v's left / right.
    let slots: Vec<AtomicU32> = (0..2 * n + 1).map(|_| AtomicU32::new(NIL)).collect();
    let mut pending: Vec<(u32, u32)> = (0..n as u32).map(|i| (i, 0)).collect();
    let mut rounds = 0;
    while !pending.is_empty() {
        rounds += 1;
        pending.par_iter().for_each(|&(step, slot)| {
            let cell = &slots[slot as usize];
            if cell.load(Ordering::Relaxed) == NIL {
                cell.fetch_min(step, Ordering::Relaxed);
            }
        });
        // The implicit barrier between the two passes publishes every write.
        pending = pending
            .into_par_iter()
            .filter_map(|(step, slot)| {
                let owner = slots[slot as usize].load(Ordering::Relaxed);
                if owner == step {
                    return None;
                }
                let child = if keys[step as usize] < keys[owner as usize] { 2 * owner + 1 } else { 2 * owner + 2 };
                Some((step, child))
            })
            .collect();
    }
    let load = |s: usize| slots[s].load(Ordering::Relaxed);
    let tree = Bst {
        keys: keys.to_vec(),
        left: (0..n).map(|v| load(2 * v + 1)).collect(),
        right: (0..n).map(|v| load(2 * v + 2)).collect(),
    };
    Ok(ParSort { tree, rounds })
}

/// Dependence DAG of sequential insertion: step `j` depends on every step
/// whose node lies on its search path. Node ids equal step indices.
pub fn dependence_dag<K: Ord + Copy>(tree: &Bst<K>) -> IterationDag {
    let n = tree.len();
    let parent = tree.parents();
    let mut dag = IterationDag::with_capacity(n);
    for i in 0..n {
        dag.add_node(Some(i as u64));
    }
    for v in 0..n {
        let mut a = parent[v];
        while let Some(u) = a {
            dag.record_arc(u as u32, v as u32).expect("ancestors are earlier steps");
            a = parent[u];
        }
    }
    dag
}
