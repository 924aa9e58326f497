//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line each, and exits nonzero if a gating criterion fails.
//!
//! Run with `cargo test -p incpar --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use incpar::bstsort::{sort_par, sort_seq};
use incpar::closestpair2d::{brute_force_closest, closest_pair_par, closest_pair_seq};
use incpar::dagmeter::harmonic;
use incpar::delaunay2d::{triangulate_par, triangulate_seq, validate_delaunay};
use incpar::geomkit::{incircle, orient2d, uniform_points, Point2D};
use incpar::graphcore::{gen_random_graph, oracle_scc, same_partition};
use incpar::lelists::{le_lists_oracle, le_lists_par, le_lists_seq};
use incpar::lp2d::{brute_force_optimum, lp_par, lp_seq, tangent_constraints, LpStatus};
use incpar::order::{Permutation, SplitMix64};
use incpar::scc::{scc_par, scc_seq};
use incpar::seb2d::{brute_force_radius, seb_par, seb_seq};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    gating: bool,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn keys(n: usize, seed: u64) -> Vec<u64> {
    let mut rng = SplitMix64::new(seed).fork(0x5e);
    (0..n).map(|_| rng.next_u64()).collect()
}

fn ln(n: usize) -> f64 {
    (n as f64).ln()
}

fn determinism() -> Outcome {
    let n = 2000;
    for seed in 0..20u64 {
        let k = keys(n, seed);
        let s = sort_seq(&k).map_err(|e| e.to_string())?;
        let p = sort_par(&k).map_err(|e| e.to_string())?;
        ensure(s == p.tree, || format!("sort differs at seed {seed}"))?;

        let pts = uniform_points(n, seed);
        let perm = Permutation::seeded(n, seed);
        let (ts, ms) = triangulate_seq(&pts, &perm).map_err(|e| e.to_string())?;
        let (tp, mp) = triangulate_par(&pts, &perm).map_err(|e| e.to_string())?;
        ensure(
            ts.created_multiset() == tp.created_multiset()
                && ts.interior_triangles() == tp.interior_triangles()
                && ms.incircle_count == mp.incircle_count,
            || format!("delaunay differs at seed {seed}"),
        )?;

        let cons = tangent_constraints(n, seed);
        let (ls, _) = lp_seq(&cons, (0.0, 1.0), &perm).map_err(|e| e.to_string())?;
        let (lp, _) = lp_par(&cons, (0.0, 1.0), &perm).map_err(|e| e.to_string())?;
        ensure(format!("{ls:?}") == format!("{lp:?}"), || format!("lp differs at seed {seed}"))?;

        let (cs, _) = closest_pair_seq(&pts, &perm).map_err(|e| e.to_string())?;
        let (cp, _) = closest_pair_par(&pts, &perm).map_err(|e| e.to_string())?;
        ensure(format!("{cs:?}") == format!("{cp:?}"), || format!("closest pair differs at seed {seed}"))?;

        let (bs, _) = seb_seq(&pts, &perm).map_err(|e| e.to_string())?;
        let (bp, _) = seb_par(&pts, &perm).map_err(|e| e.to_string())?;
        ensure(format!("{bs:?}") == format!("{bp:?}"), || format!("seb differs at seed {seed}"))?;

        let g = gen_random_graph(1000, 5000, seed, true).map_err(|e| e.to_string())?;
        let gperm = Permutation::seeded(1000, seed);
        let (es, _) = le_lists_seq(&g, &gperm).map_err(|e| e.to_string())?;
        let (ep, _) = le_lists_par(&g, &gperm).map_err(|e| e.to_string())?;
        ensure(format!("{es:?}") == format!("{ep:?}"), || format!("le-lists differ at seed {seed}"))?;

        let g = gen_random_graph(1000, 5000, seed, false).map_err(|e| e.to_string())?;
        let (ss, _) = scc_seq(&g, &gperm).map_err(|e| e.to_string())?;
        let (sp, _) = scc_par(&g, &gperm).map_err(|e| e.to_string())?;
        ensure(same_partition(&ss, &sp), || format!("scc partition differs at seed {seed}"))?;
    }
    Ok("7 algorithms x 20 seeds identical".into())
}

fn oracles() -> Outcome {
    let mut checks = 0usize;
    for n in [50usize, 500] {
        for seed in 0..20u64 {
            let k = keys(n, seed);
            let mut sorted = k.clone();
            sorted.sort_unstable();
            let tree = sort_par(&k).map_err(|e| e.to_string())?.tree;
            ensure(tree.in_order() == sorted, || format!("sort n={n} seed={seed}"))?;

            let pts = uniform_points(n, seed);
            let perm = Permutation::seeded(n, seed);
            let (tri, _) = triangulate_par(&pts, &perm).map_err(|e| e.to_string())?;
            let v = validate_delaunay(&tri, &pts);
            ensure(v.ok, || format!("delaunay n={n} seed={seed}: {:?}", v.violations.first()))?;

            let cons = tangent_constraints(n, seed);
            let (r, _) = lp_par(&cons, (0.0, 1.0), &perm).map_err(|e| e.to_string())?;
            let oracle = brute_force_optimum(&cons, (0.0, 1.0), 1e-9);
            match (r.status, oracle) {
                (LpStatus::Optimal { x, y }, Some((ox, oy))) => {
                    ensure((x - ox).abs() <= 1e-9 && (y - oy).abs() <= 1e-9, || {
                        format!("lp n={n} seed={seed}: ({x}, {y}) vs ({ox}, {oy})")
                    })?
                }
                (status, oracle) => return Err(format!("lp n={n} seed={seed}: {status:?} vs {oracle:?}")),
            }

            let (cp, _) = closest_pair_par(&pts, &perm).map_err(|e| e.to_string())?;
            ensure(Some(&cp) == brute_force_closest(&pts).as_ref(), || format!("closest pair n={n} seed={seed}"))?;

            let seb_n = n.min(300);
            let seb_pts = uniform_points(seb_n, seed);
            let (s, _) = seb_par(&seb_pts, &Permutation::seeded(seb_n, seed)).map_err(|e| e.to_string())?;
            let radius = brute_force_radius(&seb_pts).ok_or("seb oracle found no disk")?;
            ensure((s.disk.radius - radius).abs() <= 1e-9 * radius, || {
                format!("seb n={seb_n} seed={seed}: {} vs {radius}", s.disk.radius)
            })?;

            let g = gen_random_graph(n, 4 * n, seed, true).map_err(|e| e.to_string())?;
            let (le, _) = le_lists_par(&g, &perm).map_err(|e| e.to_string())?;
            ensure(le == le_lists_oracle(&g, &perm), || format!("le-lists n={n} seed={seed}"))?;

            let g = gen_random_graph(n, 4 * n, seed, false).map_err(|e| e.to_string())?;
            let (labels, _) = scc_par(&g, &perm).map_err(|e| e.to_string())?;
            ensure(same_partition(&labels, &oracle_scc(&g)), || format!("scc n={n} seed={seed}"))?;
            checks += 7;
        }
    }
    Ok(format!("{checks} oracle comparisons agree"))
}

fn incircle_work() -> Outcome {
    let n = 10_000;
    let runs = 10u64;
    let mut total = 0u64;
    for seed in 0..runs {
        let (_, m) =
            triangulate_seq(&uniform_points(n, seed), &Permutation::seeded(n, seed)).map_err(|e| e.to_string())?;
        total += m.incircle_count;
    }
    let mean = total as f64 / runs as f64;
    let cap = 24.0 * n as f64 * ln(n) + 50.0 * n as f64;
    let detail = format!("mean {mean:.0} <= cap {cap:.0}; mean/(n ln n) = {:.3}", mean / (n as f64 * ln(n)));
    ensure(mean <= cap, || detail.clone())?;
    Ok(detail)
}

fn type1_depth() -> Outcome {
    let n = 100_000;
    let max_height = (0..50u64)
        .map(|seed| sort_seq(&keys(n, seed)).map(|t| t.height()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?
        .into_iter()
        .max()
        .unwrap_or(0);
    let height_cap = 6.0 * ln(n);
    let n_dt = 10_000;
    let mut max_rounds = 0;
    for seed in 0..10u64 {
        let (_, m) = triangulate_par(&uniform_points(n_dt, seed), &Permutation::seeded(n_dt, seed))
            .map_err(|e| e.to_string())?;
        max_rounds = max_rounds.max(m.rounds);
    }
    let rounds_cap = 12.0 * ln(n_dt);
    let detail = format!(
        "bst height max {max_height} <= {height_cap:.1} ({:.2} ln n); delaunay rounds max {max_rounds} <= {rounds_cap:.1} ({:.2} ln n)",
        max_height as f64 / ln(n),
        max_rounds as f64 / ln(n_dt)
    );
    ensure(max_height as f64 <= height_cap && max_rounds as f64 <= rounds_cap, || detail.clone())?;
    Ok(detail)
}

fn special_steps() -> Outcome {
    let n = 10_000;
    let runs = 100u64;
    let (mut lp, mut cp, mut cp_rebuilds, mut seb) = (0usize, 0usize, 0usize, 0usize);
    for seed in 0..runs {
        let perm = Permutation::seeded(n, seed);
        let (_, m) = lp_seq(&tangent_constraints(n, seed), (0.0, 1.0), &perm).map_err(|e| e.to_string())?;
        lp += m.special_steps;
        let pts = uniform_points(n, seed);
        let (_, m) = closest_pair_seq(&pts, &perm).map_err(|e| e.to_string())?;
        cp += m.special_steps;
        cp_rebuilds += m.rebuilds;
        let (_, m) = seb_seq(&pts, &perm).map_err(|e| e.to_string())?;
        seb += m.update1_calls;
    }
    let h = harmonic(n);
    let mean = |total: usize| total as f64 / runs as f64;
    let checks = [("lp", mean(lp), 2.0 * h), ("closest pair", mean(cp), 2.0 * h), ("seb", mean(seb), 3.0 * h)];
    let detail =
        checks.iter().map(|(name, m, e)| format!("{name} {m:.2} <= {:.2}", 1.5 * e)).collect::<Vec<_>>().join("; ")
            + &format!("; closest pair rebuilds {:.2}", mean(cp_rebuilds));
    ensure(checks.iter().all(|(_, m, e)| *m <= 1.5 * e), || detail.clone())?;
    Ok(detail)
}

fn type3_bounds() -> Outcome {
    let (n, m) = (1000, 4000);
    let round_cap = (n as f64).log2().ceil() as usize + 1;
    let list_cap = 6.0 * ln(n);
    let (mut max_rounds, mut max_list) = (0usize, 0usize);
    let (mut le_ratio, mut scc_ratio) = (0.0f64, 0.0f64);
    for seed in 0..10u64 {
        let perm = Permutation::seeded(n, seed);
        let g = gen_random_graph(n, m, seed, true).map_err(|e| e.to_string())?;
        let (lists, seq) = le_lists_seq(&g, &perm).map_err(|e| e.to_string())?;
        let (_, par) = le_lists_par(&g, &perm).map_err(|e| e.to_string())?;
        max_rounds = max_rounds.max(par.trace.as_ref().map_or(usize::MAX, |t| t.rounds));
        max_list = max_list.max(lists.max_len());
        le_ratio = le_ratio.max(par.visits as f64 / seq.visits as f64);

        let g = gen_random_graph(n, m, seed, false).map_err(|e| e.to_string())?;
        let (_, seq) = scc_seq(&g, &perm).map_err(|e| e.to_string())?;
        let (_, par) = scc_par(&g, &perm).map_err(|e| e.to_string())?;
        max_rounds = max_rounds.max(par.trace.as_ref().map_or(usize::MAX, |t| t.rounds));
        scc_ratio = scc_ratio.max(par.visits as f64 / seq.visits as f64);
    }
    let detail = format!(
        "rounds max {max_rounds} <= {round_cap}; le list max {max_list} <= {list_cap:.1}; visit ratio le {le_ratio:.2}, scc {scc_ratio:.2} <= 3"
    );
    ensure(max_rounds <= round_cap && max_list as f64 <= list_cap && le_ratio <= 3.0 && scc_ratio <= 3.0, || {
        detail.clone()
    })?;
    Ok(detail)
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coordinate")
}

fn sign(v: &BigRational) -> i8 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

fn exact_orient(a: &Point2D, b: &Point2D, c: &Point2D) -> i8 {
    let (ax, ay, bx, by, cx, cy) = (exact(a.x), exact(a.y), exact(b.x), exact(b.y), exact(c.x), exact(c.y));
    sign(&((&bx - &ax) * (&cy - &ay) - (&by - &ay) * (&cx - &ax)))
}

/// Sign of the lifted determinant; positive when `d` is inside the circle of
/// a counterclockwise `a, b, c`.
fn exact_incircle_raw(a: &Point2D, b: &Point2D, c: &Point2D, d: &Point2D) -> i8 {
    let (dx, dy) = (exact(d.x), exact(d.y));
    let rel = |p: &Point2D| (exact(p.x) - &dx, exact(p.y) - &dy);
    let ((adx, ady), (bdx, bdy), (cdx, cdy)) = (rel(a), rel(b), rel(c));
    let lift = |x: &BigRational, y: &BigRational| x * x + y * y;
    let det = lift(&adx, &ady) * (&bdx * &cdy - &cdx * &bdy)
        + lift(&bdx, &bdy) * (&cdx * &ady - &adx * &cdy)
        + lift(&cdx, &cdy) * (&adx * &bdy - &bdx * &ady);
    sign(&det)
}

/// Compares both predicates on one quadruple; returns the number of mismatches.
fn compare(q: &[Point2D; 4]) -> usize {
    let [a, b, c, d] = q;
    let o = exact_orient(a, b, c);
    let mut bad = usize::from(orient2d(a, b, c) != o);
    if o != 0 {
        bad += usize::from(incircle(a, b, c, d) != o * exact_incircle_raw(a, b, c, d));
    }
    bad
}

fn nudge(v: f64, ulps: i64) -> f64 {
    let bits = v.to_bits() as i64;
    if v == 0.0 {
        return v;
    }
    f64::from_bits((bits + ulps) as u64)
}

fn adversarial(rng: &mut SplitMix64, k: usize) -> [Point2D; 4] {
    let ulps = |rng: &mut SplitMix64| rng.below(5) as i64 - 2;
    let scale = [1.0, 1e-8, 1e8, 0.1][rng.below(4) as usize];
    match k % 3 {
        // Nearly collinear: third point interpolated on a line and perturbed.
        0 => {
            let (ax, ay, bx, by) = (rng.next_f64(), rng.next_f64(), rng.next_f64(), rng.next_f64());
            let t = rng.next_f64() * 3.0 - 1.0;
            let (cx, cy) = (ax + t * (bx - ax), ay + t * (by - ay));
            let s = 1.0 - rng.next_f64() * 2.0;
            [
                Point2D::new(ax * scale, ay * scale, 0),
                Point2D::new(bx * scale, by * scale, 1),
                Point2D::new(nudge(cx * scale, ulps(rng)), nudge(cy * scale, ulps(rng)), 2),
                Point2D::new(s * scale, ax * scale, 3),
            ]
        }
        // Nearly cocircular: rounded points on a random circle.
        1 => {
            let (cx, cy, r) = (rng.next_f64(), rng.next_f64(), 0.1 + rng.next_f64());
            let mut q = [Point2D::new(0.0, 0.0, 0); 4];
            for (i, p) in q.iter_mut().enumerate() {
                let t = rng.next_f64() * std::f64::consts::TAU;
                *p = Point2D::new((cx + r * t.cos()) * scale, (cy + r * t.sin()) * scale, i as u32);
            }
            q
        }
        // Exactly cocircular integer points, optionally nudged by an ulp.
        _ => {
            let ring =
                [(5.0, 0.0), (4.0, 3.0), (3.0, 4.0), (0.0, 5.0), (-3.0, 4.0), (-4.0, -3.0), (0.0, -5.0), (3.0, -4.0)];
            let start = rng.below(8) as usize;
            let mut q = [Point2D::new(0.0, 0.0, 0); 4];
            for (i, p) in q.iter_mut().enumerate() {
                let (x, y) = ring[(start + 2 * i) % 8];
                let dx = if i == 3 { ulps(rng) } else { 0 };
                *p = Point2D::new(nudge(x * scale, dx), y * scale, i as u32);
            }
            q
        }
    }
}

fn predicate_exactness() -> Outcome {
    let mut rng = SplitMix64::new(7).fork(0x9e);
    let mut mismatches = 0;
    for _ in 0..100_000 {
        let q = [0, 1, 2, 3].map(|i| Point2D::new(rng.next_f64(), rng.next_f64(), i));
        mismatches += compare(&q);
    }
    for k in 0..1000 {
        mismatches += compare(&adversarial(&mut rng, k));
    }
    let detail = format!("{mismatches} mismatches over 101000 quadruples");
    ensure(mismatches == 0, || detail.clone())?;
    Ok(detail)
}

fn timed_in_pool<T>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<Duration, String>
where
    T: Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    pool.install(f);
    Ok(start.elapsed())
}

fn scaling() -> Outcome {
    let n = 100_000;
    let pts = uniform_points(n, 1);
    let perm = Permutation::seeded(n, 1);
    let g = gen_random_graph(n, 4 * n, 1, false).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for (name, job) in [
        ("delaunay", &(|| drop(triangulate_par(&pts, &perm))) as &(dyn Fn() + Sync)),
        ("scc", &|| drop(scc_par(&g, &perm))),
    ] {
        let one = timed_in_pool(1, job)?;
        let four = timed_in_pool(4, job)?;
        ratios.push((name, one.as_secs_f64() / four.as_secs_f64()));
    }
    let cores = std::thread::available_parallelism().map_or(1, |c| c.get());
    let detail = ratios.iter().map(|(name, r)| format!("{name} {r:.2}x")).collect::<Vec<_>>().join(", ")
        + &format!(" (1 vs 4 threads, {cores} cores available, target 1.8x)");
    ensure(ratios.iter().all(|(_, r)| *r >= 1.8), || detail.clone())?;
    Ok(detail)
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, title: "determinism par == seq", gating: true, run: determinism },
    Criterion { id: 2, title: "oracle correctness", gating: true, run: oracles },
    Criterion { id: 3, title: "incircle work bound", gating: true, run: incircle_work },
    Criterion { id: 4, title: "type 1 dependence depth", gating: true, run: type1_depth },
    Criterion { id: 5, title: "type 2 special steps", gating: true, run: special_steps },
    Criterion { id: 6, title: "type 3 rounds and work", gating: true, run: type3_bounds },
    Criterion { id: 7, title: "predicate exactness", gating: true, run: predicate_exactness },
    Criterion { id: 8, title: "scaling sanity", gating: false, run: scaling },
];

fn main() -> ExitCode {
    let mut gating_failures = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let outcome = (c.run)();
        let secs = start.elapsed().as_secs_f64();
        let tag = if c.gating { "" } else { " (non-gating)" };
        match outcome {
            Ok(detail) => println!("PASS [{}] {}{tag}: {detail} [{secs:.1}s]", c.id, c.title),
            Err(detail) => {
                println!("FAIL [{}] {}{tag}: {detail} [{secs:.1}s]", c.id, c.title);
                gating_failures += usize::from(c.gating);
            }
        }
    }
    if gating_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{gating_failures} gating criteria failed");
        ExitCode::FAILURE
    }
}
