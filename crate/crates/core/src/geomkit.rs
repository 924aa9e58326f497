//! 2D points, disks and exact geometric predicates.
//!
//! `orient2d` and `incircle` are Shewchuk's adaptive-precision predicates
//! (via the `robust` crate): a floating-point filter with exact expansion
//! arithmetic when the filter cannot decide. The diametral-disk test used
//! by the enclosing-disk code has its own filter with a big-integer
//! fallback. All three return exact signs for every finite `f64` input.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
    /// Input index (line order when parsed).
    pub id: u32,
}

impl Point2D {
    pub fn new(x: f64, y: f64, id: u32) -> Self {
        Self { x, y, id }
    }

    #[inline]
    pub fn dist2(&self, other: &Point2D) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    fn coord(&self) -> robust::Coord<f64> {
        robust::Coord { x: self.x, y: self.y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Disk {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    #[error("points {0}, {1}, {2} are collinear")]
    Collinear(u32, u32, u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("points {0} and {1} coincide")]
    Duplicate(u32, u32),
}

#[inline]
fn sign_of(v: f64) -> i8 {
    match v.partial_cmp(&0.0) {
        Some(Ordering::Greater) => 1,
        Some(Ordering::Less) => -1,
        _ => 0,
    }
}

/// Sign of `(b - a) x (c - a)`: +1 counterclockwise, -1 clockwise, 0 collinear.
#[inline]
pub fn orient2d(a: &Point2D, b: &Point2D, c: &Point2D) -> i8 {
    sign_of(robust::orient2d(a.coord(), b.coord(), c.coord()))
}

/// +1 iff `d` is strictly inside the circle through `a, b, c`; 0 on it; -1 outside.
///
/// The orientation of `a, b, c` is normalised internally. Panics if they are collinear.
pub fn incircle(a: &Point2D, b: &Point2D, c: &Point2D, d: &Point2D) -> i8 {
    match orient2d(a, b, c) {
        1 => incircle_ccw(a, b, c, d),
        -1 => incircle_ccw(a, c, b, d),
        _ => panic!("incircle on collinear points {}, {}, {}", a.id, b.id, c.id),
    }
}

/// `incircle` for a triangle already known to be counterclockwise.
#[inline]
pub(crate) fn incircle_ccw(a: &Point2D, b: &Point2D, c: &Point2D, d: &Point2D) -> i8 {
    sign_of(robust::incircle(a.coord(), b.coord(), c.coord(), d.coord()))
}

/// Circle through three non-collinear points.
pub fn circumdisk(a: &Point2D, b: &Point2D, c: &Point2D) -> Result<Disk, GeomError> {
    if orient2d(a, b, c) == 0 {
        return Err(GeomError::Collinear(a.id, b.id, c.id));
    }
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    Ok(Disk { cx: a.x + ux, cy: a.y + uy, radius: (ux * ux + uy * uy).sqrt() })
}

/// Disk with diameter `ab`.
pub fn diameter_disk(a: &Point2D, b: &Point2D) -> Disk {
    let cx = 0.5 * (a.x + b.x);
    let cy = 0.5 * (a.y + b.y);
    Disk { cx, cy, radius: 0.5 * a.dist2(b).sqrt() }
}

/// Sign of `(p - a) . (p - b)`: -1 strictly inside the disk with diameter
/// `ab`, 0 on its boundary, +1 outside. Exact.
pub fn diametral_side(a: &Point2D, b: &Point2D, p: &Point2D) -> i8 {
    let (dax, day) = (p.x - a.x, p.y - a.y);
    let (dbx, dby) = (p.x - b.x, p.y - b.y);
    let t1 = dax * dbx;
    let t2 = day * dby;
    let det = t1 + t2;
    // Each difference, product and the sum contribute at most a few units
    // of relative rounding; 8 ulps of the magnitude is a safe bound.
    let bound = 8.0 * f64::EPSILON * (t1.abs() + t2.abs());
    if det > bound {
        return 1;
    }
    if det < -bound {
        return -1;
    }
    exact_diametral_side(a, b, p)
}

fn exact_diametral_side(a: &Point2D, b: &Point2D, p: &Point2D) -> i8 {
    let [ax, ay, bx, by, px, py] = [a.x, a.y, b.x, b.y, p.x, p.y].map(scaled_int);
    let v = (&px - &ax) * (&px - &bx) + (&py - &ay) * (&py - &by);
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// `x * 2^1074` as an exact integer (every finite f64 is an integer multiple of 2^-1074).
fn scaled_int(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::from(0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp_bits - 1075) };
    BigInt::from(sign * mantissa as i64) << ((exp + 1074) as usize)
}

/// Parses one `x y` pair per line. Blank lines and `#` comments are skipped;
/// ids follow the order of the accepted lines.
pub fn parse_points(text: &str) -> Result<Vec<Point2D>, GeomError> {
    let mut points = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| GeomError::Parse { line: idx + 1, msg };
        let mut fields = line.split_whitespace();
        let mut coord = |name: &str| -> Result<f64, GeomError> {
            let s = fields.next().ok_or_else(|| err(format!("missing {name}")))?;
            let v: f64 = s.parse().map_err(|_| err(format!("bad {name} {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite {name}")))
            }
        };
        let x = coord("x")?;
        let y = coord("y")?;
        if fields.next().is_some() {
            return Err(err("expected exactly two fields".into()));
        }
        points.push(Point2D::new(x, y, points.len() as u32));
    }
    Ok(points)
}

/// Smallest `(lower id, higher id)` pair of points with identical coordinates, if any.
pub fn find_duplicate(points: &[Point2D]) -> Option<(u32, u32)> {
    let mut keyed: Vec<(u64, u64, u32)> = points.iter().map(|p| (canon_bits(p.x), canon_bits(p.y), p.id)).collect();
    keyed.sort_unstable();
    // Within a run of equal coordinates ids ascend, so the run's first two
    // entries form its smallest pair.
    keyed
        .windows(2)
        .enumerate()
        .filter(|&(i, w)| {
            w[0].0 == w[1].0 && w[0].1 == w[1].1 && (i == 0 || keyed[i - 1].0 != w[0].0 || keyed[i - 1].1 != w[0].1)
        })
        .map(|(_, w)| (w[0].2, w[1].2))
        .min()
}

// -0.0 and 0.0 are the same location.
fn canon_bits(v: f64) -> u64 {
    if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// `n` points uniform in the unit square, ids `0..n`.
pub fn uniform_points(n: usize, seed: u64) -> Vec<Point2D> {
    let mut rng = crate::order::SplitMix64::new(seed).fork(0x9017);
    (0..n)
        .map(|i| {
            let x = rng.next_f64();
            let y = rng.next_f64();
            Point2D::new(x, y, i as u32)
        })
        .collect()
}
