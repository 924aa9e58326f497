//! Welzl's randomized incremental smallest enclosing disk.
//!
//! The disk starts as the diameter disk of the first two points. A point
//! outside the current disk lies on the boundary of the new one; `update1`
//! rebuilds the disk with that point fixed, and `update2` with two points
//! fixed. Each level scans earlier points for the earliest one outside the
//! current disk. The parallel variant runs the outer loop through the
//! prefix-doubling driver and both inner scans as doubling searches.
//!
//! Containment is decided exactly from the support points, never from the
//! rounded centre and radius: a point on the boundary counts as inside.

use serde::Serialize;
use thiserror::Error;

use crate::exec::{first_true_doubling, run_type2, RoundTrace, Type2Steps};
use crate::geomkit::{circumdisk, diameter_disk, diametral_side, incircle_ccw, orient2d, Disk, GeomError, Point2D};
use crate::order::Permutation;

#[derive(Debug, Error, PartialEq)]
pub enum SebError {
    #[error("enclosing disk needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("permutation has {perm} entries for {points} points")]
    PermutationSize { points: usize, perm: usize },
}

/// Smallest disk through two points.
pub fn disk_from_2(p: &Point2D, q: &Point2D) -> Disk {
    diameter_disk(p, q)
}

/// Circle through three points.
pub fn disk_from_3(p: &Point2D, q: &Point2D, r: &Point2D) -> Result<Disk, GeomError> {
    circumdisk(p, q, r)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SebState {
    pub disk: Disk,
    /// Ids of the points defining the disk (2 or 3), ascending.
    pub support: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SebMetrics {
    pub update1_calls: usize,
    pub update2_calls: usize,
    pub trace: Option<RoundTrace>,
}

/// Disk given by its support, as insertion ranks. Three-point supports are
/// kept counterclockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Support {
    Two(u32, u32),
    Three(u32, u32, u32),
}

struct SebRun {
    pts: Vec<Point2D>,
    support: Support,
    update1_calls: usize,
    update2_calls: usize,
    parallel: bool,
}

impl SebRun {
    fn new(points: &[Point2D], perm: &Permutation, parallel: bool) -> Result<Self, SebError> {
        if points.len() < 2 {
            return Err(SebError::TooFewPoints(points.len()));
        }
        if perm.len() != points.len() {
            return Err(SebError::PermutationSize { points: points.len(), perm: perm.len() });
        }
        let pts = perm.order().iter().map(|&i| points[i as usize]).collect();
        Ok(Self { pts, support: Support::Two(0, 1), update1_calls: 0, update2_calls: 0, parallel })
    }

    fn outside(&self, support: Support, k: usize) -> bool {
        let p = &self.pts[k];
        match support {
            Support::Two(a, b) => diametral_side(&self.pts[a as usize], &self.pts[b as usize], p) > 0,
            Support::Three(a, b, c) => {
                incircle_ccw(&self.pts[a as usize], &self.pts[b as usize], &self.pts[c as usize], p) < 0
            }
        }
    }

    fn three(&self, a: usize, b: usize, c: usize) -> Support {
        let (a, b, c) = (a as u32, b as u32, c as u32);
        match orient2d(&self.pts[a as usize], &self.pts[b as usize], &self.pts[c as usize]) {
            1 => Support::Three(a, b, c),
            -1 => Support::Three(a, c, b),
            _ => unreachable!("a point outside a two-point disk through its diameter is not collinear with it"),
        }
    }

    /// Earliest rank in `range` outside `support`.
    fn first_outside(&self, support: Support, range: std::ops::Range<usize>) -> Option<usize> {
        if self.parallel {
            first_true_doubling(range, |k| self.outside(support, k))
        } else {
            range.into_iter().find(|&k| self.outside(support, k))
        }
    }

    /// Smallest disk of ranks `0..=i` with `i` on the boundary.
    fn update1(&mut self, i: usize) {
        self.update1_calls += 1;
        let mut support = Support::Two(0, i as u32);
        let mut from = 1;
        while let Some(j) = self.first_outside(support, from..i) {
            support = self.update2(i, j);
            from = j + 1;
        }
        self.support = support;
    }

    /// Smallest disk of ranks `0..=j` plus `i` with `i` and `j` on the boundary.
    fn update2(&mut self, i: usize, j: usize) -> Support {
        self.update2_calls += 1;
        let mut support = Support::Two(i as u32, j as u32);
        let mut from = 0;
        while let Some(k) = self.first_outside(support, from..j) {
            support = self.three(i, j, k);
            from = k + 1;
        }
        support
    }

    fn insert(&mut self, i: usize) {
        if self.outside(self.support, i) {
            self.update1(i);
        }
    }

    fn state(&self) -> SebState {
        let p = |r: u32| &self.pts[r as usize];
        let (disk, mut support) = match self.support {
            Support::Two(a, b) => (disk_from_2(p(a), p(b)), vec![p(a).id, p(b).id]),
            Support::Three(a, b, c) => (
                disk_from_3(p(a), p(b), p(c)).expect("three-point support is not collinear"),
                vec![p(a).id, p(b).id, p(c).id],
            ),
        };
        support.sort_unstable();
        SebState { disk, support }
    }

    fn metrics(&self, trace: Option<RoundTrace>) -> SebMetrics {
        SebMetrics { update1_calls: self.update1_calls, update2_calls: self.update2_calls, trace }
    }
}

impl Type2Steps for SebRun {
    type Error = std::convert::Infallible;

    fn is_special(&self, step: usize) -> bool {
        self.outside(self.support, step + 2)
    }

    fn run_regular(&mut self, _steps: std::ops::Range<usize>) {}

    fn run_special(&mut self, step: usize) -> Result<(), Self::Error> {
        self.insert(step + 2);
        Ok(())
    }
}

/// Sequential insertion in permutation order.
pub fn seb_seq(points: &[Point2D], perm: &Permutation) -> Result<(SebState, SebMetrics), SebError> {
    let mut run = SebRun::new(points, perm, false)?;
    for i in 2..run.pts.len() {
        run.insert(i);
    }
    Ok((run.state(), run.metrics(None)))
}

/// Prefix-doubled insertion; the result equals [`seb_seq`] bitwise.
pub fn seb_par(points: &[Point2D], perm: &Permutation) -> Result<(SebState, SebMetrics), SebError> {
    let mut run = SebRun::new(points, perm, true)?;
    let steps = run.pts.len() - 2;
    let Ok(trace) = run_type2(steps, &mut run);
    Ok((run.state(), run.metrics(Some(trace))))
}

/// Certificate for an enclosing disk: every point is inside, every support
/// point is on the boundary, and the support admits no smaller disk (two
/// points are antipodal; three points form a non-obtuse triangle).
/// `tol` is relative to the radius.
pub fn certify_disk(points: &[Point2D], state: &SebState, tol: f64) -> Result<(), String> {
    let d = state.disk;
    let slack = tol * d.radius.max(f64::MIN_POSITIVE);
    let dist = |p: &Point2D| (p.x - d.cx).hypot(p.y - d.cy);
    if let Some(p) = points.iter().find(|p| dist(p) > d.radius + slack) {
        return Err(format!("point {} lies outside", p.id));
    }
    let support: Vec<&Point2D> = state
        .support
        .iter()
        .map(|id| points.iter().find(|p| p.id == *id).ok_or(format!("unknown support id {id}")))
        .collect::<Result<_, _>>()?;
    if let Some(p) = support.iter().find(|p| (dist(p) - d.radius).abs() > slack) {
        return Err(format!("support point {} is off the boundary", p.id));
    }
    match support.as_slice() {
        [p, q] => {
            let (mx, my) = ((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
            if (mx - d.cx).hypot(my - d.cy) > slack {
                return Err("two-point support is not a diameter".into());
            }
        }
        [p, q, r] => {
            for (a, b, c) in [(p, q, r), (q, r, p), (r, p, q)] {
                let (ux, uy, vx, vy) = (b.x - a.x, b.y - a.y, c.x - a.x, c.y - a.y);
                if ux * vx + uy * vy < -tol * ux.hypot(uy) * vx.hypot(vy) {
                    return Err(format!("support triangle is obtuse at {}", a.id));
                }
            }
        }
        other => return Err(format!("support has {} points", other.len())),
    }
    Ok(())
}

/// Reference radius: the smallest pair or triple disk that contains every
/// point (within `1e-9` relative slack). Only convex-hull vertices can be
/// on the boundary, so candidates are drawn from the hull.
pub fn brute_force_radius(points: &[Point2D]) -> Option<f64> {
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return Some(0.0);
    }
    let contains = |d: &Disk| {
        let r2 = d.radius * d.radius;
        let slack = 1e-9 * r2.max(f64::MIN_POSITIVE);
        points.iter().all(|p| (p.x - d.cx).powi(2) + (p.y - d.cy).powi(2) <= r2 + slack)
    };
    let mut best: Option<f64> = None;
    let mut consider = |d: Disk| {
        if best.is_none_or(|b| d.radius < b) && contains(&d) {
            best = Some(d.radius);
        }
    };
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            consider(diameter_disk(&hull[i], &hull[j]));
            for k in j + 1..hull.len() {
                if let Ok(d) = circumdisk(&hull[i], &hull[j], &hull[k]) {
                    consider(d);
                }
            }
        }
    }
    best
}

/// Monotone-chain hull, counterclockwise, collinear points dropped.
fn convex_hull(points: &[Point2D]) -> Vec<Point2D> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2D> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2D>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && orient2d(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    hull
}
