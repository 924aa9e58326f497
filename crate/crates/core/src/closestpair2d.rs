//! Randomized incremental closest pair on a uniform grid.
//!
//! The grid has cell side `r`, the closest distance so far, so a new point
//! only needs to inspect its own cell and the eight around it. A point that
//! improves the pair is a special step; when it also shrinks `r` the grid is
//! rebuilt over the whole prefix.
//!
//! Pairs are ordered by `(squared distance, lower id, higher id)`, which
//! makes the answer unique. Once two coincident points are found the answer
//! is the smallest coincident id pair overall, computed directly.

use std::ops::Range;

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::exec::{run_type2, RoundTrace, Type2Steps};
use crate::geomkit::{find_duplicate, Point2D};
use crate::order::Permutation;

/// Most points a cell may hold while every pair is at least `r` apart.
pub const CELL_CAPACITY: usize = 9;

#[derive(Debug, Error, PartialEq)]
pub enum CpError {
    #[error("closest pair needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("grid cell side must be positive and finite, got {0}")]
    BadCellSide(f64),
    #[error("permutation has {perm} entries for {points} points")]
    PermutationSize { points: usize, perm: usize },
}

/// A candidate pair, ordered by squared distance then ids.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize)]
pub struct PairKey {
    pub dist2: f64,
    pub lo: u32,
    pub hi: u32,
}

impl PairKey {
    pub fn of(p: &Point2D, q: &Point2D) -> Self {
        Self { dist2: p.dist2(q), lo: p.id.min(q.id), hi: p.id.max(q.id) }
    }

    pub fn distance(&self) -> f64 {
        self.dist2.sqrt()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CpMetrics {
    /// Grid rebuilds after the initial build.
    pub rebuilds: usize,
    /// Insertions that improved the pair.
    pub special_steps: usize,
    pub trace: Option<RoundTrace>,
}

type Cell = (i64, i64);

/// Points hashed into square cells of side `r`.
#[derive(Clone, Debug)]
pub struct PairGrid {
    r: f64,
    cells: FxHashMap<Cell, Vec<u32>>,
    count: usize,
}

impl PairGrid {
    /// Hashes `points[i]` for every `i` in `members` (in parallel).
    pub fn build(points: &[Point2D], members: Range<usize>, r: f64) -> Result<Self, CpError> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CpError::BadCellSide(r));
        }
        let mut keyed: Vec<(Cell, u32)> = members.into_par_iter().map(|i| (cell_of(&points[i], r), i as u32)).collect();
        keyed.par_sort_unstable();
        let mut grid = PairGrid { r, cells: FxHashMap::default(), count: 0 };
        grid.cells.reserve(keyed.len());
        for (cell, i) in keyed {
            grid.push(cell, i);
        }
        Ok(grid)
    }

    pub fn cell_side(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn insert(&mut self, points: &[Point2D], i: usize) {
        self.push(cell_of(&points[i], self.r), i as u32);
    }

    fn push(&mut self, cell: Cell, i: u32) {
        let bucket = self.cells.entry(cell).or_default();
        bucket.push(i);
        assert!(bucket.len() <= CELL_CAPACITY, "cell {cell:?} exceeds {CELL_CAPACITY} points");
        self.count += 1;
    }

    /// Stored indices in the 3x3 block of cells around `p`.
    pub fn neighbours<'a>(&'a self, p: &Point2D) -> impl Iterator<Item = u32> + 'a {
        neighbourhood(&self.cells, cell_of(p, self.r))
    }
}

fn neighbourhood(cells: &FxHashMap<Cell, Vec<u32>>, (cx, cy): Cell) -> impl Iterator<Item = u32> + '_ {
    (-1..=1)
        .flat_map(move |dx| (-1..=1).map(move |dy| (cx.saturating_add(dx), cy.saturating_add(dy))))
        .filter_map(|c| cells.get(&c))
        .flatten()
        .copied()
}

fn cell_of(p: &Point2D, r: f64) -> Cell {
    ((p.x / r).floor() as i64, (p.y / r).floor() as i64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosestPair {
    pub pair: (u32, u32),
    pub distance: f64,
    pub dist2: f64,
}

impl From<PairKey> for ClosestPair {
    fn from(k: PairKey) -> Self {
        Self { pair: (k.lo, k.hi), distance: k.distance(), dist2: k.dist2 }
    }
}

/// Shared state: points in insertion order, the best pair and the grid.
struct CpRun {
    pts: Vec<Point2D>,
    best: PairKey,
    grid: Option<PairGrid>,
    /// Block being checked in the current sub-round, keyed by cell.
    overlay: FxHashMap<Cell, Vec<u32>>,
    rebuilds: usize,
    special_steps: usize,
}

impl CpRun {
    fn new(points: &[Point2D], perm: &Permutation) -> Result<Self, CpError> {
        if points.len() < 2 {
            return Err(CpError::TooFewPoints(points.len()));
        }
        if perm.len() != points.len() {
            return Err(CpError::PermutationSize { points: points.len(), perm: perm.len() });
        }
        let pts: Vec<Point2D> = perm.order().iter().map(|&i| points[i as usize]).collect();
        let best = PairKey::of(&pts[0], &pts[1]);
        let grid = if best.dist2 > 0.0 { Some(PairGrid::build(&pts, 0..2, best.distance())?) } else { None };
        Ok(Self { pts, best, grid, overlay: FxHashMap::default(), rebuilds: 0, special_steps: 0 })
    }

    /// Number of insertion steps after the two that seed the grid.
    fn steps(&self) -> usize {
        self.pts.len() - 2
    }

    fn finished(&self) -> bool {
        self.grid.is_none()
    }

    /// Best pair between the point at rank `k` and the grid.
    fn query(&self, k: usize) -> Option<PairKey> {
        let grid = self.grid.as_ref()?;
        let p = &self.pts[k];
        grid.neighbours(p).map(|j| PairKey::of(p, &self.pts[j as usize])).reduce(min_key)
    }

    /// Applies the insertion of rank `k` given its best candidate pair.
    fn apply(&mut self, k: usize, candidate: Option<PairKey>) {
        match candidate {
            Some(key) if key < self.best => {
                self.special_steps += 1;
                let shrinks = key.dist2 < self.best.dist2;
                self.best = key;
                if key.dist2 == 0.0 {
                    self.grid = None;
                } else if shrinks {
                    self.rebuilds += 1;
                    self.grid = Some(PairGrid::build(&self.pts, 0..k + 1, key.distance()).expect("positive side"));
                } else {
                    self.grid.as_mut().unwrap().insert(&self.pts, k);
                }
            }
            _ => self.grid.as_mut().unwrap().insert(&self.pts, k),
        }
    }

    fn result(&self, trace: Option<RoundTrace>) -> (ClosestPair, CpMetrics) {
        let key = if self.best.dist2 == 0.0 {
            let (lo, hi) = find_duplicate(&self.pts).expect("a coincident pair was seen");
            PairKey { dist2: 0.0, lo, hi }
        } else {
            self.best
        };
        let metrics = CpMetrics { rebuilds: self.rebuilds, special_steps: self.special_steps, trace };
        (key.into(), metrics)
    }
}

fn min_key(a: PairKey, b: PairKey) -> PairKey {
    if b < a {
        b
    } else {
        a
    }
}

impl Type2Steps for CpRun {
    type Error = std::convert::Infallible;

    fn prepare(&mut self, steps: Range<usize>) {
        self.overlay.clear();
        let Some(grid) = &self.grid else { return };
        for s in steps {
            let k = s + 2;
            self.overlay.entry(cell_of(&self.pts[k], grid.r)).or_default().push(k as u32);
        }
    }

    fn is_special(&self, step: usize) -> bool {
        let k = step + 2;
        let Some(grid) = &self.grid else { return false };
        let p = &self.pts[k];
        let in_grid = self.query(k);
        // Earlier points of the same block are not in the grid yet.
        let in_block = neighbourhood(&self.overlay, cell_of(p, grid.r))
            .filter(|&j| (j as usize) < k)
            .map(|j| PairKey::of(p, &self.pts[j as usize]))
            .reduce(min_key);
        let best = match (in_grid, in_block) {
            (Some(a), Some(b)) => Some(min_key(a, b)),
            (a, b) => a.or(b),
        };
        best.is_some_and(|key| key < self.best)
    }

    fn run_regular(&mut self, steps: Range<usize>) {
        let grid = self.grid.as_mut().expect("regular steps run before any coincident pair");
        for s in steps {
            grid.insert(&self.pts, s + 2);
        }
    }

    fn run_special(&mut self, step: usize) -> Result<(), Self::Error> {
        let k = step + 2;
        let candidate = self.query(k);
        self.apply(k, candidate);
        Ok(())
    }

    fn finished(&self) -> bool {
        CpRun::finished(self)
    }
}

/// Sequential insertion in permutation order.
pub fn closest_pair_seq(points: &[Point2D], perm: &Permutation) -> Result<(ClosestPair, CpMetrics), CpError> {
    let mut run = CpRun::new(points, perm)?;
    for k in 2..run.pts.len() {
        if run.finished() {
            break;
        }
        let candidate = run.query(k);
        run.apply(k, candidate);
    }
    Ok(run.result(None))
}

/// Prefix-doubled insertion; the result equals [`closest_pair_seq`].
pub fn closest_pair_par(points: &[Point2D], perm: &Permutation) -> Result<(ClosestPair, CpMetrics), CpError> {
    let mut run = CpRun::new(points, perm)?;
    let trace = if run.finished() {
        RoundTrace::default()
    } else {
        let steps = run.steps();
        let Ok(trace) = run_type2(steps, &mut run);
        trace
    };
    Ok(run.result(Some(trace)))
}

/// Grid certificate: with cells of side `d` (the reported distance), any
/// pair closer than `d` lies in adjacent cells, so one pass over each
/// point's 3x3 neighbourhood confirms no smaller pair exists.
pub fn certify_closest(points: &[Point2D], result: &ClosestPair) -> Result<(), String> {
    let index: FxHashMap<u32, usize> = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
    let (Some(&a), Some(&b)) = (index.get(&result.pair.0), index.get(&result.pair.1)) else {
        return Err(format!("pair {:?} names unknown ids", result.pair));
    };
    let claimed = PairKey::of(&points[a], &points[b]);
    if claimed.dist2 != result.dist2 || (claimed.lo, claimed.hi) != result.pair {
        return Err("reported distance does not match the pair".into());
    }
    if claimed.dist2 == 0.0 {
        return match find_duplicate(points) {
            Some(dup) if dup == result.pair => Ok(()),
            other => Err(format!("smallest coincident pair is {other:?}")),
        };
    }
    let side = claimed.distance();
    let cell = |p: &Point2D| ((p.x / side).floor() as i64, (p.y / side).floor() as i64);
    let mut cells: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
    for (i, p) in points.iter().enumerate() {
        cells.entry(cell(p)).or_default().push(i);
    }
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &j in cells.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    if j != i && PairKey::of(p, &points[j]) < claimed {
                        return Err(format!("pair ({}, {}) is closer", p.id, points[j].id));
                    }
                }
            }
        }
    }
    Ok(())
}

/// O(n^2) reference under the same pair ordering.
pub fn brute_force_closest(points: &[Point2D]) -> Option<ClosestPair> {
    (0..points.len())
        .into_par_iter()
        .filter_map(|i| (i + 1..points.len()).map(|j| PairKey::of(&points[i], &points[j])).reduce(min_key))
        .reduce_with(min_key)
        .map(ClosestPair::from)
}
