//! Seidel's randomized incremental linear programming in the plane.
//!
//! Constraints are added in permutation order while the optimum is
//! maintained. A constraint that excludes the running optimum is a special
//! step: the new optimum lies on its boundary line and is found by a 1D LP
//! over every constraint added so far.
//!
//! Two bounding constraints `m1 . p <= M` and `m2 . p <= M` (the unit
//! objective rotated by +-45 degrees, `M = 1e9`) form the initial state, so
//! every prefix has a finite optimum. An optimum still held in place by one
//! of them means the real problem is unbounded and is reported as
//! [`LpStatus::UnboundedRejected`].

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::exec::{run_type2, RoundTrace, Type2Steps};
use crate::order::{Permutation, SplitMix64};

/// Right-hand side of the two bounding constraints.
pub const BOUND: f64 = 1e9;

/// Relative slack of the feasibility test.
const REL_TOL: f64 = 1e-12;

/// The halfplane `a x + b y <= c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Halfplane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Halfplane {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    /// True if `(x, y)` lies outside beyond rounding slack.
    pub fn violated_by(&self, x: f64, y: f64) -> bool {
        let ax = self.a * x;
        let by = self.b * y;
        let scale = ax.abs() + by.abs() + self.c.abs();
        ax + by > self.c + REL_TOL * scale
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("constraint {0} has a zero normal")]
    DegenerateConstraint(u32),
    #[error("constraint {0} has a non-finite coefficient")]
    NonFinite(u32),
    #[error("objective must be a finite non-zero vector")]
    BadObjective,
    #[error("permutation has {perm} entries for {constraints} constraints")]
    PermutationSize { constraints: usize, perm: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LpStatus {
    Optimal { x: f64, y: f64 },
    Infeasible,
    UnboundedRejected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpResult {
    pub status: LpStatus,
    /// Ids of the (at most two) constraints defining the optimum, ascending.
    /// Ids `n` and `n + 1` denote the bounding constraints.
    pub tight: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LpMetrics {
    pub special_steps: usize,
    /// Prefix-doubling trace (parallel variant only).
    pub trace: Option<RoundTrace>,
}

/// Feasible parameter interval on a line; endpoints carry the constraint id
/// that produced them. Ties on value go to the lower id.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Interval {
    lo: (f64, u32),
    hi: (f64, u32),
    /// A parallel constraint excluding the whole line.
    blocked: Option<u32>,
}

impl Interval {
    const FULL: Interval = Interval { lo: (f64::NEG_INFINITY, u32::MAX), hi: (f64::INFINITY, u32::MAX), blocked: None };

    fn merge(self, other: Interval) -> Interval {
        let lo = if other.lo.0 > self.lo.0 || (other.lo.0 == self.lo.0 && other.lo.1 < self.lo.1) {
            other.lo
        } else {
            self.lo
        };
        let hi = if other.hi.0 < self.hi.0 || (other.hi.0 == self.hi.0 && other.hi.1 < self.hi.1) {
            other.hi
        } else {
            self.hi
        };
        let blocked = match (self.blocked, other.blocked) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Interval { lo, hi, blocked }
    }
}

/// Boundary line of a constraint, parameterised as `origin + t * dir` with `|dir| = 1`.
#[derive(Clone, Copy, Debug)]
struct Line {
    origin: (f64, f64),
    dir: (f64, f64),
}

impl Line {
    fn of(h: &Halfplane) -> Line {
        let norm = h.a.hypot(h.b);
        let (a, b, c) = (h.a / norm, h.b / norm, h.c / norm);
        Line { origin: (a * c, b * c), dir: (-b, a) }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        (self.origin.0 + t * self.dir.0, self.origin.1 + t * self.dir.1)
    }

    /// The interval of `t` allowed by constraint `g` (with id `id`).
    fn restrict(&self, id: u32, g: &Halfplane) -> Interval {
        let slope = g.a * self.dir.0 + g.b * self.dir.1;
        let at_origin = g.a * self.origin.0 + g.b * self.origin.1;
        let mut iv = Interval::FULL;
        if slope > 0.0 {
            iv.hi = ((g.c - at_origin) / slope, id);
        } else if slope < 0.0 {
            iv.lo = ((g.c - at_origin) / slope, id);
        } else if g.violated_by(self.origin.0, self.origin.1) {
            iv.blocked = Some(id);
        }
        iv
    }
}

/// Outcome of a 1D LP: the optimum point and the constraint pinning it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lp1d {
    Optimal { x: f64, y: f64, partner: u32 },
    Infeasible,
}

fn pick_endpoint(line: &Line, iv: Interval, objective: (f64, f64)) -> Lp1d {
    if iv.blocked.is_some() {
        return Lp1d::Infeasible;
    }
    let (lo, hi) = (iv.lo.0, iv.hi.0);
    if lo > hi && lo - hi > REL_TOL * lo.abs().max(hi.abs()).max(1.0) {
        return Lp1d::Infeasible;
    }
    let gain = objective.0 * line.dir.0 + objective.1 * line.dir.1;
    let (t, partner) = if gain > 0.0 {
        iv.hi
    } else if gain < 0.0 || (iv.lo.0.is_finite() && (iv.lo.1 < iv.hi.1 || !iv.hi.0.is_finite())) {
        iv.lo
    } else {
        iv.hi
    };
    // The bounding constraints span the plane, so some endpoint is finite.
    debug_assert!(t.is_finite());
    let (x, y) = line.at(t);
    Lp1d::Optimal { x, y, partner }
}

/// Maximises `objective` on the boundary line of `line_of`, subject to
/// `constraints` (pairs of id and halfplane).
pub fn lp_1d(line_of: &Halfplane, constraints: &[(u32, Halfplane)], objective: (f64, f64)) -> Lp1d {
    let line = Line::of(line_of);
    let iv = constraints.iter().fold(Interval::FULL, |acc, (id, g)| acc.merge(line.restrict(*id, g)));
    pick_endpoint(&line, iv, objective)
}

/// Checked problem with the bounding constraints appended (ids `n`, `n + 1`).
struct Problem {
    all: Vec<Halfplane>,
    n: usize,
    objective: (f64, f64),
}

impl Problem {
    fn new(constraints: &[Halfplane], objective: (f64, f64), perm: &Permutation) -> Result<Self, LpError> {
        let (ox, oy) = objective;
        if !(ox.is_finite() && oy.is_finite()) || (ox == 0.0 && oy == 0.0) {
            return Err(LpError::BadObjective);
        }
        if perm.len() != constraints.len() {
            return Err(LpError::PermutationSize { constraints: constraints.len(), perm: perm.len() });
        }
        for (i, h) in constraints.iter().enumerate() {
            if !(h.a.is_finite() && h.b.is_finite() && h.c.is_finite()) {
                return Err(LpError::NonFinite(i as u32));
            }
            if h.a == 0.0 && h.b == 0.0 {
                return Err(LpError::DegenerateConstraint(i as u32));
            }
        }
        let mut all = constraints.to_vec();
        all.extend(bounding_constraints(objective));
        Ok(Self { all, n: constraints.len(), objective })
    }

    fn initial_point(&self) -> (f64, f64) {
        let (m1, m2) = (self.all[self.n], self.all[self.n + 1]);
        (BOUND * (m1.a + m2.a), BOUND * (m1.b + m2.b))
    }
}

/// `m1, m2`: the unit objective rotated by -45 and +45 degrees.
fn bounding_constraints(objective: (f64, f64)) -> [Halfplane; 2] {
    let norm = objective.0.hypot(objective.1);
    let (ux, uy) = (objective.0 / norm, objective.1 / norm);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [Halfplane::new(s * (ux + uy), s * (uy - ux), BOUND), Halfplane::new(s * (ux - uy), s * (ux + uy), BOUND)]
}

/// Running state shared by both variants.
struct LpRun<'a> {
    problem: &'a Problem,
    /// Constraint ids in insertion order.
    order: Vec<u32>,
    point: (f64, f64),
    tight: [u32; 2],
    infeasible: bool,
    special_steps: usize,
    parallel: bool,
}

impl<'a> LpRun<'a> {
    fn new(problem: &'a Problem, perm: &Permutation, parallel: bool) -> Self {
        let n = problem.n as u32;
        Self {
            problem,
            order: perm.order().to_vec(),
            point: problem.initial_point(),
            tight: [n, n + 1],
            infeasible: false,
            special_steps: 0,
            parallel,
        }
    }

    fn violated(&self, step: usize) -> bool {
        let h = &self.problem.all[self.order[step] as usize];
        h.violated_by(self.point.0, self.point.1)
    }

    /// Re-optimises on the boundary of step `step`'s constraint if it excludes the optimum.
    fn insert(&mut self, step: usize) {
        if self.infeasible || !self.violated(step) {
            return;
        }
        self.special_steps += 1;
        let id = self.order[step];
        let all = &self.problem.all;
        let line = Line::of(&all[id as usize]);
        let n = self.problem.n;
        let earlier = self.order[..step].iter().copied().chain([n as u32, n as u32 + 1]);
        let restrict = |g: u32| line.restrict(g, &all[g as usize]);
        let iv = if self.parallel {
            let ids: Vec<u32> = earlier.collect();
            ids.par_iter().map(|&g| restrict(g)).reduce(|| Interval::FULL, Interval::merge)
        } else {
            earlier.map(restrict).fold(Interval::FULL, Interval::merge)
        };
        match pick_endpoint(&line, iv, self.problem.objective) {
            Lp1d::Optimal { x, y, partner } => {
                self.point = (x, y);
                self.tight = [id.min(partner), id.max(partner)];
            }
            Lp1d::Infeasible => self.infeasible = true,
        }
    }

    fn result(&self) -> LpResult {
        if self.infeasible {
            return LpResult { status: LpStatus::Infeasible, tight: vec![] };
        }
        let tight = self.tight.to_vec();
        let status = if tight.iter().any(|&id| id as usize >= self.problem.n) {
            LpStatus::UnboundedRejected
        } else {
            LpStatus::Optimal { x: self.point.0, y: self.point.1 }
        };
        LpResult { status, tight }
    }
}

impl Type2Steps for LpRun<'_> {
    type Error = std::convert::Infallible;

    fn is_special(&self, step: usize) -> bool {
        self.violated(step)
    }

    fn run_regular(&mut self, _steps: std::ops::Range<usize>) {}

    fn run_special(&mut self, step: usize) -> Result<(), Self::Error> {
        self.insert(step);
        Ok(())
    }

    fn finished(&self) -> bool {
        self.infeasible
    }
}

/// Sequential incremental LP maximising `objective . (x, y)`.
pub fn lp_seq(
    constraints: &[Halfplane],
    objective: (f64, f64),
    perm: &Permutation,
) -> Result<(LpResult, LpMetrics), LpError> {
    let problem = Problem::new(constraints, objective, perm)?;
    let mut run = LpRun::new(&problem, perm, false);
    for step in 0..problem.n {
        run.insert(step);
        if run.infeasible {
            break;
        }
    }
    Ok((run.result(), LpMetrics { special_steps: run.special_steps, trace: None }))
}

/// Prefix-doubled LP; the result is bitwise equal to [`lp_seq`].
pub fn lp_par(
    constraints: &[Halfplane],
    objective: (f64, f64),
    perm: &Permutation,
) -> Result<(LpResult, LpMetrics), LpError> {
    let problem = Problem::new(constraints, objective, perm)?;
    let mut run = LpRun::new(&problem, perm, true);
    let Ok(trace) = run_type2(problem.n, &mut run);
    Ok((run.result(), LpMetrics { special_steps: run.special_steps, trace: Some(trace) }))
}

/// `n` halfplanes tangent to the unit circle at uniformly random angles
/// (`cos t x + sin t y <= 1`).
pub fn tangent_constraints(n: usize, seed: u64) -> Vec<Halfplane> {
    let mut rng = SplitMix64::new(seed).fork(0x1b);
    (0..n)
        .map(|_| {
            let t = rng.next_f64() * std::f64::consts::TAU;
            Halfplane::new(t.cos(), t.sin(), 1.0)
        })
        .collect()
}

/// Parses one `a b c` triple per line; blank lines and `#` comments are skipped.
pub fn parse_halfplanes(text: &str) -> Result<Vec<Halfplane>, LpError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| LpError::Parse { line: i + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, found {}", fields.len())));
        }
        let mut v = [0.0f64; 3];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| err(format!("invalid number {f:?}")))?;
            if !slot.is_finite() {
                return Err(err(format!("non-finite value {f:?}")));
            }
        }
        let h = Halfplane::new(v[0], v[1], v[2]);
        if h.a == 0.0 && h.b == 0.0 {
            return Err(err("zero normal".into()));
        }
        out.push(h);
    }
    Ok(out)
}

/// Brute force: best feasible pairwise intersection of the given constraints.
/// Returns `None` when no vertex is feasible within `slack`.
pub fn brute_force_optimum(constraints: &[Halfplane], objective: (f64, f64), slack: f64) -> Option<(f64, f64)> {
    let mut best: Option<(f64, (f64, f64))> = None;
    for i in 0..constraints.len() {
        for j in i + 1..constraints.len() {
            let (p, q) = (constraints[i], constraints[j]);
            let det = p.a * q.b - p.b * q.a;
            if det == 0.0 {
                continue;
            }
            let x = (p.c * q.b - p.b * q.c) / det;
            let y = (p.a * q.c - p.c * q.a) / det;
            if constraints.iter().all(|h| h.a * x + h.b * y <= h.c + slack) {
                let value = objective.0 * x + objective.1 * y;
                if best.is_none_or(|(b, _)| value > b) {
                    best = Some((value, (x, y)));
                }
            }
        }
    }
    best.map(|(_, p)| p)
}

/// Checks an optimal result: the point satisfies every constraint and the
/// objective is a non-negative combination of the two tight normals (the
/// KKT conditions). Feasibility slack is `tol` on unit-normalised constraints.
pub fn certify_optimum(
    constraints: &[Halfplane],
    objective: (f64, f64),
    result: &LpResult,
    tol: f64,
) -> Result<(), String> {
    let LpStatus::Optimal { x, y } = result.status else {
        return Err(format!("status {:?} has no optimality certificate", result.status));
    };
    let scale = 1.0 + x.abs().max(y.abs());
    for (i, h) in constraints.iter().enumerate() {
        let norm = h.a.hypot(h.b);
        if (h.a * x + h.b * y - h.c) / norm > tol * scale {
            return Err(format!("constraint {i} violated at ({x}, {y})"));
        }
    }
    let &[i, j] = result.tight.as_slice() else {
        return Err(format!("expected two tight constraints, got {:?}", result.tight));
    };
    let (Some(p), Some(q)) = (constraints.get(i as usize), constraints.get(j as usize)) else {
        return Err("optimum rests on a bounding constraint".into());
    };
    for (id, h) in [(i, p), (j, q)] {
        if ((h.a * x + h.b * y - h.c) / h.a.hypot(h.b)).abs() > tol * scale {
            return Err(format!("constraint {id} is not tight"));
        }
    }
    let det = p.a * q.b - p.b * q.a;
    if det == 0.0 {
        return Err("tight constraints are parallel".into());
    }
    let l1 = (objective.0 * q.b - objective.1 * q.a) / det;
    let l2 = (p.a * objective.1 - p.b * objective.0) / det;
    let obj_scale = objective.0.hypot(objective.1) / p.a.hypot(p.b).min(q.a.hypot(q.b));
    if l1 < -tol * obj_scale || l2 < -tol * obj_scale {
        return Err(format!("negative multiplier ({l1}, {l2})"));
    }
    Ok(())
}
