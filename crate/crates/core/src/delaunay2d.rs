//! Offline conflict-set incremental Delaunay triangulation in the plane.
//!
//! Every triangle carries `E(t)`, the uninserted points strictly inside its
//! circumcircle, kept sorted by insertion rank. Inserting `v` replaces each
//! boundary face `f = (t, t_o)` of the region `v` encroaches with a new
//! triangle `t' = (f, v)`, whose conflict set is filtered out of
//! `E(t) ∪ E(t_o)`. Points in both sets stay in `E(t')` without a test.
//!
//! The parallel variant fires every face whose inner triangle's earliest
//! conflict precedes the outer triangle's earliest conflict. Those are
//! exactly the replacements the sequential order performs, so both variants
//! build the same triangles and run the same in-circle tests.
//!
//! Internally vertices are numbered by insertion rank (`0..n`), followed by
//! the three corners of the bounding triangle (`n..n+3`). The bounding
//! corners sit at distance `100 * diam` from the centre of the input's
//! bounding box, where `diam` is the box diagonal. The triangle's inscribed
//! circle (radius `50 * diam`) then strictly contains every input point, and
//! predicates are evaluated on the real coordinates. Triangles touching a
//! bounding corner are stripped from the output. Every remaining triangle has
//! an empty circumcircle. A hull triangle of the input can be missing when a
//! bounding corner falls inside its (very large) circumcircle.

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::dagmeter::IterationDag;
use crate::geomkit::{find_duplicate, incircle_ccw, orient2d, Point2D};
use crate::order::Permutation;

const NONE: u32 = u32::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DtError {
    #[error("duplicate points {0} and {1}")]
    DuplicatePoints(u32, u32),
    #[error("permutation has {perm} entries for {points} points")]
    PermutationSize { points: usize, perm: usize },
}

/// Unordered pair of vertex indices; the smaller index comes first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceKey(u32, u32);

impl FaceKey {
    pub fn new(a: u32, b: u32) -> Self {
        if a < b {
            FaceKey(a, b)
        } else {
            FaceKey(b, a)
        }
    }

    pub fn endpoints(&self) -> (u32, u32) {
        (self.0, self.1)
    }
}

#[derive(Clone, Debug)]
pub struct Triangle {
    /// Counterclockwise internal vertex indices.
    pub corners: [u32; 3],
    /// Uninserted encroaching points, as ascending insertion ranks.
    pub conflicts: Vec<u32>,
    /// Rank of the point whose insertion created this triangle.
    pub creator: Option<u32>,
}

impl Triangle {
    /// Earliest conflicting rank, or `u32::MAX` if none.
    #[inline]
    pub fn min_conflict(&self) -> u32 {
        self.conflicts.first().copied().unwrap_or(NONE)
    }

    pub fn faces(&self) -> [FaceKey; 3] {
        let [a, b, c] = self.corners;
        [FaceKey::new(a, b), FaceKey::new(b, c), FaceKey::new(c, a)]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DtMetrics {
    /// In-circle evaluations performed while filtering conflict sets.
    pub incircle_count: u64,
    /// Parallel rounds (0 for the sequential variant).
    pub rounds: usize,
    pub triangles_created: usize,
}

/// Output of either variant: every triangle ever created, plus the vertex table.
#[derive(Clone, Debug)]
pub struct Triangulation {
    n: usize,
    verts: Vec<Point2D>,
    ids: Vec<u32>,
    triangles: Vec<Triangle>,
}

impl Triangulation {
    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn bounding(&self) -> [Point2D; 3] {
        [self.verts[self.n], self.verts[self.n + 1], self.verts[self.n + 2]]
    }

    /// All triangles created during the run, in creation order.
    pub fn all_triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Triangles of the final triangulation (including bounding-incident ones).
    pub fn final_triangles(&self) -> impl Iterator<Item = &Triangle> {
        self.triangles.iter().filter(|t| t.conflicts.is_empty())
    }

    /// Input id of an internal vertex, `None` for bounding corners.
    pub fn input_id(&self, v: u32) -> Option<u32> {
        self.ids.get(v as usize).copied()
    }

    /// Final triangles not touching a bounding corner, as counterclockwise
    /// triples of input ids rotated to start at the smallest id, sorted.
    pub fn interior_triangles(&self) -> Vec<[u32; 3]> {
        let mut out: Vec<[u32; 3]> = self
            .final_triangles()
            .filter_map(|t| {
                let c = t.corners.map(|v| self.input_id(v));
                Some(canonical([c[0]?, c[1]?, c[2]?]))
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Every created triangle as a canonical triple of internal vertices (for
    /// comparing runs that create the same triangles in different orders).
    pub fn created_multiset(&self) -> Vec<[u32; 3]> {
        let mut out: Vec<[u32; 3]> =
            self.triangles.iter().map(|t| canonical(t.corners.map(|v| self.verts[v as usize].id))).collect();
        out.sort_unstable();
        out
    }
}

/// Rotation of a counterclockwise triple starting at its smallest entry.
fn canonical(c: [u32; 3]) -> [u32; 3] {
    let k = (0..3).min_by_key(|&i| c[i]).unwrap();
    [c[k], c[(k + 1) % 3], c[(k + 2) % 3]]
}

/// Shared triangle store and face map.
struct Mesh {
    n: usize,
    verts: Vec<Point2D>,
    tris: Vec<Triangle>,
    faces: FxHashMap<FaceKey, [u32; 2]>,
    incircle_count: u64,
}

/// A triangle computed by `replace_boundary`, not yet linked into the mesh.
struct NewTriangle {
    corners: [u32; 3],
    conflicts: Vec<u32>,
    tests: u64,
}

impl Mesh {
    fn new(points: &[Point2D], perm: &Permutation) -> Result<Self, DtError> {
        if perm.len() != points.len() {
            return Err(DtError::PermutationSize { points: points.len(), perm: perm.len() });
        }
        if let Some((a, b)) = find_duplicate(points) {
            return Err(DtError::DuplicatePoints(a, b));
        }
        let n = points.len();
        let mut verts: Vec<Point2D> = (0..n)
            .map(|r| {
                let p = points[perm.at(r)];
                Point2D::new(p.x, p.y, p.id)
            })
            .collect();
        verts.extend(bounding_corners(points, n as u32));
        let root = Triangle {
            corners: [n as u32, n as u32 + 1, n as u32 + 2],
            conflicts: (0..n as u32).collect(),
            creator: None,
        };
        debug_assert_eq!(orient2d(&verts[n], &verts[n + 1], &verts[n + 2]), 1);
        let mut mesh =
            Mesh { n, verts, tris: Vec::with_capacity(8 * n + 1), faces: FxHashMap::default(), incircle_count: 0 };
        mesh.faces.reserve(6 * n + 3);
        for f in root.faces() {
            mesh.faces.insert(f, [0, NONE]);
        }
        mesh.tris.push(root);
        Ok(mesh)
    }

    fn is_bounding_face(&self, f: FaceKey) -> bool {
        f.0 as usize >= self.n
    }

    /// The triangle across `f` from `t`, if linked.
    fn across(&self, f: FaceKey, t: u32) -> Option<u32> {
        let slots = self.faces.get(&f)?;
        let other = if slots[0] == t { slots[1] } else { slots[0] };
        (other != NONE).then_some(other)
    }

    /// Builds `t' = (f, v)` and its conflict set from `E(t) ∪ E(t_o)`.
    fn replace_boundary(&self, t_o: Option<u32>, f: FaceKey, t: u32, v: u32) -> NewTriangle {
        let (a, b) = f.endpoints();
        let corners = if orient2d(&self.verts[a as usize], &self.verts[b as usize], &self.verts[v as usize]) > 0 {
            [a, b, v]
        } else {
            [b, a, v]
        };
        let [p0, p1, p2] = corners.map(|c| &self.verts[c as usize]);
        let inner = &self.tris[t as usize].conflicts;
        let outer: &[u32] = t_o.map_or(&[], |o| &self.tris[o as usize].conflicts);
        let mut conflicts = Vec::new();
        let mut tests = 0u64;
        let mut test = |z: u32, out: &mut Vec<u32>| {
            tests += 1;
            if incircle_ccw(p0, p1, p2, &self.verts[z as usize]) > 0 {
                out.push(z);
            }
        };
        let (mut i, mut j) = (0, 0);
        while i < inner.len() || j < outer.len() {
            let x = inner.get(i).copied().unwrap_or(NONE);
            let y = outer.get(j).copied().unwrap_or(NONE);
            if x == y {
                // In both sets: always encroaches the new triangle.
                conflicts.push(x);
                i += 1;
                j += 1;
            } else if x < y {
                if x != v {
                    test(x, &mut conflicts);
                }
                i += 1;
            } else {
                test(y, &mut conflicts);
                j += 1;
            }
        }
        NewTriangle { corners, conflicts, tests }
    }

    /// Links a new triangle created across `f` from `t` by point `v`.
    fn link(&mut self, f: FaceKey, t: u32, v: u32, nt: NewTriangle) -> u32 {
        let id = self.tris.len() as u32;
        let slots = self.faces.get_mut(&f).expect("boundary face is linked");
        let k = if slots[0] == t { 0 } else { 1 };
        debug_assert_eq!(slots[k], t);
        slots[k] = id;
        let (a, b) = f.endpoints();
        for side in [FaceKey::new(a, v), FaceKey::new(b, v)] {
            let slots = self.faces.entry(side).or_insert([NONE, NONE]);
            if slots[0] == NONE {
                slots[0] = id;
            } else {
                assert_eq!(slots[1], NONE, "face {side:?} would get a third triangle");
                slots[1] = id;
            }
        }
        self.incircle_count += nt.tests;
        self.tris.push(Triangle { corners: nt.corners, conflicts: nt.conflicts, creator: Some(v) });
        id
    }

    fn into_triangulation(self) -> Triangulation {
        let ids = self.verts[..self.n].iter().map(|p| p.id).collect();
        Triangulation { n: self.n, verts: self.verts, ids, triangles: self.tris }
    }
}

fn bounding_corners(points: &[Point2D], first_id: u32) -> [Point2D; 3] {
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        lo_x = lo_x.min(p.x);
        lo_y = lo_y.min(p.y);
        hi_x = hi_x.max(p.x);
        hi_y = hi_y.max(p.y);
    }
    let (cx, cy, diam) = if points.is_empty() {
        (0.0, 0.0, 1.0)
    } else {
        let d = ((hi_x - lo_x).powi(2) + (hi_y - lo_y).powi(2)).sqrt();
        (0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y), if d > 0.0 { d } else { 1.0 })
    };
    let r = 100.0 * diam;
    let s = 3f64.sqrt() / 2.0;
    [
        Point2D::new(cx, cy + r, first_id),
        Point2D::new(cx - s * r, cy - 0.5 * r, first_id + 1),
        Point2D::new(cx + s * r, cy - 0.5 * r, first_id + 2),
    ]
}

/// Step-by-step sequential triangulator.
pub(crate) struct SeqDt {
    mesh: Mesh,
    alive: Vec<bool>,
    /// Triangles keyed by their earliest conflict.
    pending: Vec<Vec<u32>>,
    dag: Option<IterationDag>,
    next: usize,
}

impl SeqDt {
    fn new(points: &[Point2D], perm: &Permutation, metered: bool) -> Result<Self, DtError> {
        let mesh = Mesh::new(points, perm)?;
        let n = mesh.n;
        let mut pending = vec![Vec::new(); n];
        if n > 0 {
            pending[0].push(0);
        }
        let dag = metered.then(|| {
            let mut dag = IterationDag::with_capacity(8 * n + 1);
            dag.add_node(None);
            dag
        });
        Ok(Self { mesh, alive: vec![true], pending, dag, next: 0 })
    }

    /// Inserts the point of the next rank. Returns false when all are inserted.
    fn step(&mut self) -> bool {
        let i = self.next as u32;
        if self.next >= self.mesh.n {
            return false;
        }
        self.next += 1;
        let region = std::mem::take(&mut self.pending[i as usize]);
        let mut boundary = Vec::new();
        for &t in &region {
            debug_assert!(self.alive[t as usize]);
            for f in self.mesh.tris[t as usize].faces() {
                let outer = self.mesh.across(f, t);
                if outer.is_some_and(|o| self.mesh.tris[o as usize].min_conflict() == i) {
                    continue;
                }
                boundary.push((outer, f, t));
            }
        }
        let built: Vec<NewTriangle> =
            boundary.iter().map(|&(outer, f, t)| self.mesh.replace_boundary(outer, f, t, i)).collect();
        // Interior faces of the region lose both triangles.
        for &t in &region {
            self.alive[t as usize] = false;
            for f in self.mesh.tris[t as usize].faces() {
                if let Some(slots) = self.mesh.faces.get_mut(&f) {
                    let both_dead = slots.iter().all(|&s| s != NONE && (s == t || !self.alive[s as usize]));
                    if both_dead {
                        self.mesh.faces.remove(&f);
                    }
                }
            }
        }
        for ((outer, f, t), nt) in boundary.into_iter().zip(built) {
            let id = self.mesh.link(f, t, i, nt);
            self.alive.push(true);
            let m = self.mesh.tris[id as usize].min_conflict();
            if m != NONE {
                self.pending[m as usize].push(id);
            }
            if let Some(dag) = self.dag.as_mut() {
                let node = dag.add_node(Some(i as u64));
                debug_assert_eq!(node, id);
                dag.record_arc(t, id).expect("creation order");
                if let Some(o) = outer {
                    dag.record_arc(o, id).expect("creation order");
                }
            }
        }
        true
    }

    fn metrics(&self) -> DtMetrics {
        DtMetrics { incircle_count: self.mesh.incircle_count, rounds: 0, triangles_created: self.mesh.tris.len() }
    }
}

/// Sequential insertion in permutation order.
pub fn triangulate_seq(points: &[Point2D], perm: &Permutation) -> Result<(Triangulation, DtMetrics), DtError> {
    let mut dt = SeqDt::new(points, perm, false)?;
    while dt.step() {}
    let metrics = dt.metrics();
    Ok((dt.mesh.into_triangulation(), metrics))
}

/// Sequential insertion that also records the triangle dependence DAG
/// (node ids equal triangle ids; each new triangle depends on `t` and `t_o`).
pub fn triangulate_seq_metered(
    points: &[Point2D],
    perm: &Permutation,
) -> Result<(Triangulation, DtMetrics, IterationDag), DtError> {
    let mut dt = SeqDt::new(points, perm, true)?;
    while dt.step() {}
    let metrics = dt.metrics();
    let dag = dt.dag.take().expect("metered run");
    Ok((dt.mesh.into_triangulation(), metrics, dag))
}

/// Face-parallel rounds: every face whose inner triangle's earliest conflict
/// precedes the outer one's is replaced in the same round.
pub fn triangulate_par(points: &[Point2D], perm: &Permutation) -> Result<(Triangulation, DtMetrics), DtError> {
    let mut mesh = Mesh::new(points, perm)?;
    let mut candidates: Vec<FaceKey> = mesh.tris[0].faces().to_vec();
    let mut rounds = 0;
    loop {
        candidates.par_sort_unstable();
        candidates.dedup();
        let active: Vec<(FaceKey, u32, Option<u32>)> = {
            let mesh = &mesh;
            candidates.par_iter().filter_map(|&f| ready(mesh, f)).collect()
        };
        if active.is_empty() {
            break;
        }
        rounds += 1;
        let built: Vec<NewTriangle> = {
            let mesh = &mesh;
            active
                .par_iter()
                .map(|&(f, t, outer)| {
                    let v = mesh.tris[t as usize].min_conflict();
                    mesh.replace_boundary(outer, f, t, v)
                })
                .collect()
        };
        candidates.clear();
        for (&(f, t, _), nt) in active.iter().zip(built) {
            let v = mesh.tris[t as usize].min_conflict();
            let id = mesh.link(f, t, v, nt);
            candidates.extend(mesh.tris[id as usize].faces());
        }
    }
    debug_assert_eq!(
        mesh.tris.iter().filter(|t| t.conflicts.is_empty()).count(),
        2 * mesh.n + 1,
        "parallel rounds stopped before every point was inserted"
    );
    let metrics = DtMetrics { incircle_count: mesh.incircle_count, rounds, triangles_created: mesh.tris.len() };
    Ok((mesh.into_triangulation(), metrics))
}

/// `(f, t, t_o)` if face `f` may fire: `min E(t) < min E(t_o)`, or `f` is a
/// bounding edge and `t` has conflicts. Faces still waiting for their
/// second triangle are not ready.
fn ready(mesh: &Mesh, f: FaceKey) -> Option<(FaceKey, u32, Option<u32>)> {
    let slots = mesh.faces.get(&f)?;
    match (slots[0], slots[1]) {
        (NONE, NONE) => None,
        (t, NONE) | (NONE, t) => {
            let m = mesh.tris[t as usize].min_conflict();
            (mesh.is_bounding_face(f) && m != NONE).then_some((f, t, None))
        }
        (x, y) => {
            let mx = mesh.tris[x as usize].min_conflict();
            let my = mesh.tris[y as usize].min_conflict();
            if mx < my {
                Some((f, x, Some(y)))
            } else if my < mx {
                Some((f, y, Some(x)))
            } else {
                None
            }
        }
    }
}

/// Empty-circumcircle check result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Validation {
    pub ok: bool,
    /// `(triangle, point id)` pairs where the point is strictly inside the circumcircle.
    pub violations: Vec<([u32; 3], u32)>,
}

/// Brute force: no input point strictly inside any interior triangle's circumcircle.
pub fn validate_delaunay(tri: &Triangulation, points: &[Point2D]) -> Validation {
    validate_triangles(&tri.interior_triangles(), points)
}

/// [`validate_delaunay`] on an explicit list of triangles (input ids).
pub fn validate_triangles(triangles: &[[u32; 3]], points: &[Point2D]) -> Validation {
    let violations: Vec<([u32; 3], u32)> = triangles
        .par_iter()
        .flat_map_iter(|&t| {
            let [a, b, c] = t.map(|v| points[v as usize]);
            let (a, b, c) = if orient2d(&a, &b, &c) >= 0 { (a, b, c) } else { (a, c, b) };
            points
                .iter()
                .filter(move |p| !t.contains(&p.id) && incircle_ccw(&a, &b, &c, p) > 0)
                .map(move |p| (t, p.id))
                .collect::<Vec<_>>()
        })
        .collect();
    Validation { ok: violations.is_empty(), violations }
}

/// Linear-time certificate: the final triangles tile the bounding triangle
/// (two per internal edge, one per bounding edge, `2n + 1` in total) and
/// every internal edge is locally Delaunay. Together these imply the whole
/// triangulation is Delaunay.
pub fn check_local_delaunay(tri: &Triangulation) -> Result<(), String> {
    let finals: Vec<&Triangle> = tri.final_triangles().collect();
    if finals.len() != 2 * tri.n + 1 {
        return Err(format!("{} final triangles, expected {}", finals.len(), 2 * tri.n + 1));
    }
    let mut faces: FxHashMap<FaceKey, Vec<usize>> = FxHashMap::default();
    for (k, t) in finals.iter().enumerate() {
        for f in t.faces() {
            faces.entry(f).or_default().push(k);
        }
    }
    for (f, ts) in &faces {
        let bounding_edge = f.0 as usize >= tri.n;
        match (ts.as_slice(), bounding_edge) {
            ([_], true) => {}
            (&[a, b], false) => {
                let apex = |t: &Triangle| *t.corners.iter().find(|&&c| c != f.0 && c != f.1).unwrap();
                let [p, q, r] = finals[a].corners.map(|c| &tri.verts[c as usize]);
                let opposite = &tri.verts[apex(finals[b]) as usize];
                if incircle_ccw(p, q, r, opposite) > 0 {
                    return Err(format!(
                        "edge {:?} is not locally Delaunay",
                        (tri.verts[f.0 as usize].id, tri.verts[f.1 as usize].id)
                    ));
                }
            }
            _ => return Err(format!("edge {f:?} has {} final triangles", ts.len())),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomkit::uniform_points;
    use std::collections::HashMap;

    fn pts(coords: &[(f64, f64)]) -> Vec<Point2D> {
        coords.iter().enumerate().map(|(i, &(x, y))| Point2D::new(x, y, i as u32)).collect()
    }

    /// Faces of the final triangles: every interior edge has two triangles,
    /// the three bounding edges one.
    fn check_tiling(tri: &Triangulation) {
        let mut count: HashMap<FaceKey, u32> = HashMap::new();
        for t in tri.final_triangles() {
            for f in t.faces() {
                *count.entry(f).or_default() += 1;
            }
        }
        let n = tri.point_count() as u32;
        for (f, c) in count {
            let expected = if f.0 >= n { 1 } else { 2 };
            assert_eq!(c, expected, "face {f:?}");
        }
        assert_eq!(tri.final_triangles().count(), 2 * tri.point_count() + 1);
    }

    #[test]
    fn three_points() {
        let p = pts(&[(0., 0.), (1., 0.), (0., 1.)]);
        for seed in 0..6 {
            let perm = Permutation::seeded(3, seed);
            let (t, _) = triangulate_seq(&p, &perm).unwrap();
            assert_eq!(t.interior_triangles(), vec![[0, 1, 2]]);
            check_tiling(&t);
            let (tp, m) = triangulate_par(&p, &perm).unwrap();
            assert_eq!(tp.interior_triangles(), vec![[0, 1, 2]]);
            let (_, _, dag) = triangulate_seq_metered(&p, &perm).unwrap();
            assert_eq!(m.rounds as u32, dag.longest_path(3).depth);
        }
    }

    #[test]
    fn interior_point_splits_triangle() {
        let p = pts(&[(0., 0.), (4., 0.), (2., 4.), (2., 1.)]);
        let brute = brute_force_delaunay(&p);
        assert_eq!(brute.len(), 3);
        for seed in 0..10 {
            let perm = Permutation::seeded(4, seed);
            let (t, _) = triangulate_seq(&p, &perm).unwrap();
            assert_eq!(t.interior_triangles(), brute);
            assert_eq!(triangulate_par(&p, &perm).unwrap().0.interior_triangles(), brute);
        }
    }

    /// All triples with an empty circumcircle (general position input).
    fn brute_force_delaunay(p: &[Point2D]) -> Vec<[u32; 3]> {
        let mut out = Vec::new();
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                for k in j + 1..p.len() {
                    let o = orient2d(&p[i], &p[j], &p[k]);
                    if o == 0 {
                        continue;
                    }
                    let tri = if o > 0 { [i, j, k] } else { [i, k, j] }.map(|v| v as u32);
                    if validate_triangles(&[tri], p).ok {
                        out.push(canonical(tri));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn matches_brute_force_on_small_random_sets() {
        for seed in 0..8 {
            let p = uniform_points(40, seed);
            let perm = Permutation::seeded(40, seed + 100);
            let (t, _) = triangulate_seq(&p, &perm).unwrap();
            let interior = t.interior_triangles();
            let brute = brute_force_delaunay(&p);
            // Every produced triangle is Delaunay; hull slivers may be missing.
            assert!(interior.iter().all(|t| brute.binary_search(t).is_ok()));
            assert!(interior.len() + 3 >= brute.len());
        }
    }

    #[test]
    fn empty_and_single_point() {
        let (t, m) = triangulate_seq(&[], &Permutation::identity(0)).unwrap();
        assert!(t.interior_triangles().is_empty());
        assert_eq!(m.incircle_count, 0);
        let p = pts(&[(3., 3.)]);
        let (t, _) = triangulate_par(&p, &Permutation::identity(1)).unwrap();
        check_tiling(&t);
    }

    #[test]
    fn duplicates_rejected() {
        let p = pts(&[(0., 0.), (1., 1.), (0., 0.)]);
        assert_eq!(triangulate_seq(&p, &Permutation::identity(3)).unwrap_err(), DtError::DuplicatePoints(0, 2));
        assert!(triangulate_par(&p, &Permutation::identity(3)).is_err());
    }

    fn tiny_mesh(coords: &[(f64, f64)]) -> Mesh {
        Mesh::new(&pts(coords), &Permutation::identity(coords.len())).unwrap()
    }

    fn push_tri(mesh: &mut Mesh, corners: [u32; 3], conflicts: Vec<u32>) -> u32 {
        mesh.tris.push(Triangle { corners, conflicts, creator: None });
        mesh.tris.len() as u32 - 1
    }

    #[test]
    fn replace_boundary_only_inserted_point() {
        let mut mesh = tiny_mesh(&[(0., 0.), (1., 0.), (0.5, 1.), (0.5, -1.)]);
        let t = push_tri(&mut mesh, [0, 1, 2], vec![3]);
        let o = push_tri(&mut mesh, [1, 0, 4], vec![]);
        let nt = mesh.replace_boundary(Some(o), FaceKey::new(0, 1), t, 3);
        assert!(nt.conflicts.is_empty());
        assert_eq!(nt.tests, 0);
    }

    #[test]
    fn replace_boundary_shared_conflict_is_untested() {
        let mut mesh = tiny_mesh(&[(0., 0.), (1., 0.), (0.5, 1.), (0.5, -1.), (0.5, 0.1)]);
        let t = push_tri(&mut mesh, [0, 1, 2], vec![3, 4]);
        let o = push_tri(&mut mesh, [1, 0, 5], vec![4]);
        let nt = mesh.replace_boundary(Some(o), FaceKey::new(0, 1), t, 3);
        assert_eq!(nt.conflicts, vec![4]);
        assert_eq!(nt.tests, 0);
    }

    #[test]
    fn replace_boundary_tests_one_sided_points() {
        // New triangle (0,1,v) with v = (0.5,-1): circumcircle centre (0.5,-0.375), r = 0.625.
        let coords = [(0., 0.), (1., 0.), (0.5, 1.), (0.5, -1.), (0.5, -0.5), (3., 3.)];
        let mut mesh = tiny_mesh(&coords);
        let t = push_tri(&mut mesh, [1, 0, 6], vec![3, 4]);
        let o = push_tri(&mut mesh, [0, 1, 2], vec![5]);
        let nt = mesh.replace_boundary(Some(o), FaceKey::new(0, 1), t, 3);
        assert_eq!(nt.tests, 2);
        let p = pts(&coords);
        let oracle = |z: usize| incircle_ccw(&p[0], &p[3], &p[1], &p[z]) > 0;
        assert!(oracle(4) && !oracle(5));
        assert_eq!(nt.conflicts, vec![4]);
        assert_eq!(nt.corners, [1, 0, 3]);
    }

    #[test]
    fn conflict_sets_stay_sound() {
        for seed in 0..4 {
            let n = 120;
            let p = uniform_points(n, seed);
            let perm = Permutation::seeded(n, seed ^ 0xabc);
            let mut dt = SeqDt::new(&p, &perm, false).unwrap();
            while dt.step() {
                let inserted = dt.next as u32;
                for (id, t) in dt.mesh.tris.iter().enumerate() {
                    if !dt.alive[id] {
                        continue;
                    }
                    let [a, b, c] = t.corners.map(|v| dt.mesh.verts[v as usize]);
                    let expected: Vec<u32> = (inserted..n as u32)
                        .filter(|&z| incircle_ccw(&a, &b, &c, &dt.mesh.verts[z as usize]) > 0)
                        .collect();
                    assert_eq!(t.conflicts, expected);
                }
            }
        }
    }

    #[test]
    fn par_matches_seq_and_dag() {
        for seed in 0..6 {
            let n = 700;
            let p = uniform_points(n, seed);
            let perm = Permutation::seeded(n, seed);
            let (s, sm, dag) = triangulate_seq_metered(&p, &perm).unwrap();
            let (t, pm) = triangulate_par(&p, &perm).unwrap();
            assert_eq!(s.interior_triangles(), t.interior_triangles());
            assert_eq!(s.created_multiset(), t.created_multiset());
            assert_eq!(sm.incircle_count, pm.incircle_count);
            assert_eq!(pm.rounds as u32, dag.longest_path(n).depth);
            check_tiling(&s);
            check_tiling(&t);
            assert!(validate_delaunay(&s, &p).ok);
            assert_eq!(check_local_delaunay(&t), Ok(()));
            // Each triangle depends on at most the two it replaced.
            let mut indegree = vec![0; dag.node_count()];
            for &(_, b) in dag.arcs() {
                indegree[b as usize] += 1;
            }
            assert!(indegree.iter().all(|&d| d <= 2));
            assert!(indegree[1..].iter().all(|&d| d >= 1));
        }
    }

    #[test]
    fn cocircular_grid() {
        // Lattice points: many exactly cocircular quadruples.
        let mut coords = Vec::new();
        for i in 0..9 {
            for j in 0..9 {
                coords.push((i as f64, j as f64));
            }
        }
        let p = pts(&coords);
        for seed in 0..4 {
            let perm = Permutation::seeded(p.len(), seed);
            let (s, sm) = triangulate_seq(&p, &perm).unwrap();
            let (t, pm) = triangulate_par(&p, &perm).unwrap();
            assert!(validate_delaunay(&s, &p).ok);
            check_tiling(&s);
            assert_eq!(check_local_delaunay(&s), Ok(()));
            assert_eq!(s.interior_triangles(), t.interior_triangles());
            assert_eq!(sm.incircle_count, pm.incircle_count);
        }
    }

    #[test]
    fn local_check_flags_flipped_edge() {
        let p = pts(&[(0., 0.), (2., 0.), (2.2, 2.2), (0., 2.)]);
        let (mut t, _) = triangulate_seq(&p, &Permutation::identity(4)).unwrap();
        assert_eq!(check_local_delaunay(&t), Ok(()));
        // Flip the legal diagonal 1-3 into the illegal 0-2.
        let rank = |id: u32| t.ids.iter().position(|&x| x == id).unwrap() as u32;
        let [a, b, c, d] = [0, 1, 2, 3].map(rank);
        for tr in t.triangles.iter_mut().filter(|tr| tr.conflicts.is_empty()) {
            let mut sorted = tr.corners;
            sorted.sort_unstable();
            if sorted == {
                let mut x = [a, b, d];
                x.sort_unstable();
                x
            } {
                tr.corners = [a, b, c];
            } else if sorted == {
                let mut x = [b, c, d];
                x.sort_unstable();
                x
            } {
                tr.corners = [a, c, d];
            }
        }
        assert!(check_local_delaunay(&t).is_err());
    }

    #[test]
    fn validation_flags_illegal_edge() {
        // Square-ish quad; diagonal 0-2 is illegal because 3 lies inside circle(0,1,2).
        let p = pts(&[(0., 0.), (2., 0.), (2.2, 2.2), (0., 2.)]);
        let good = validate_triangles(&[[0, 1, 3], [1, 2, 3]], &p);
        assert!(good.ok);
        let bad = validate_triangles(&[[0, 1, 2], [0, 2, 3]], &p);
        assert!(!bad.ok);
        assert_eq!(bad.violations, vec![([0, 1, 2], 3), ([0, 2, 3], 1)]);
        let single = pts(&[(0., 0.), (1., 0.), (0., 1.)]);
        assert!(validate_triangles(&[[0, 1, 2]], &single).ok);
    }
}
