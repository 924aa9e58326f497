//! One seeded run of one algorithm, with metering and optional validation.
//!
//! Counter schema per algorithm (keys of `MetricsReport::counters`):
//!
//! | algo         | counters                                   |
//! |--------------|--------------------------------------------|
//! | sort         | `height`                                   |
//! | delaunay     | `incircle_count`, `triangles_created`      |
//! | lp           | `special_steps`                            |
//! | closest-pair | `special_steps`, `rebuilds`                |
//! | seb          | `update1_calls`, `update2_calls`           |
//! | le-lists     | `visits`, `max_list_len`, `total_list_len` |
//! | scc          | `visits`, `components`                     |
//!
//! `rounds` is the number of lock-step rounds in parallel mode and the number
//! of steps in sequential mode. `depth` is the metered dependence depth and
//! is recorded only by sequential sort and Delaunay runs.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::time::Instant;

use clap::ValueEnum;
use incpar::bstsort::{dependence_dag, sort_par, sort_seq, Bst};
use incpar::closestpair2d::{certify_closest, closest_pair_par, closest_pair_seq, ClosestPair};
use incpar::delaunay2d::{check_local_delaunay, triangulate_par, triangulate_seq_metered, validate_delaunay};
use incpar::graphcore::{oracle_scc, same_partition};
use incpar::lelists::{le_lists_oracle, le_lists_par, le_lists_seq, LeLists};
use incpar::lp2d::{brute_force_optimum, certify_optimum, lp_par, lp_seq, LpResult, LpStatus};
use incpar::order::Permutation;
use incpar::scc::{scc_par, scc_seq};
use incpar::seb2d::{certify_disk, seb_par, seb_seq, SebState};

use crate::input::Input;
use crate::CliError;

/// Largest input checked against a quadratic or worse brute-force oracle.
const BRUTE_FORCE_LIMIT: usize = 2000;
/// Relative tolerance of the floating-point certificates.
const CERT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Algo {
    Sort,
    Delaunay,
    Lp,
    ClosestPair,
    Seb,
    LeLists,
    Scc,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Sort => "sort",
            Algo::Delaunay => "delaunay",
            Algo::Lp => "lp",
            Algo::ClosestPair => "closest-pair",
            Algo::Seb => "seb",
            Algo::LeLists => "le-lists",
            Algo::Scc => "scc",
        }
    }

    pub fn counter_names(self) -> &'static [&'static str] {
        match self {
            Algo::Sort => &["height"],
            Algo::Delaunay => &["incircle_count", "triangles_created"],
            Algo::Lp => &["special_steps"],
            Algo::ClosestPair => &["special_steps", "rebuilds"],
            Algo::Seb => &["update1_calls", "update2_calls"],
            Algo::LeLists => &["visits", "max_list_len", "total_list_len"],
            Algo::Scc => &["visits", "components"],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Seq,
    Par,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Seq => "seq",
            Mode::Par => "par",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Sorted(Vec<i64>),
    Triangles(Vec<[u32; 3]>),
    Lp(LpResult),
    Pair(ClosestPair),
    Disk(SebState),
    Lists(LeLists),
    Components(Vec<u32>),
}

impl Outcome {
    /// The result in its documented text format.
    pub fn render(&self) -> String {
        let mut s = String::new();
        match self {
            Outcome::Sorted(keys) => keys.iter().for_each(|k| {
                let _ = writeln!(s, "{k}");
            }),
            Outcome::Triangles(ts) => ts.iter().for_each(|[a, b, c]| {
                let _ = writeln!(s, "{a} {b} {c}");
            }),
            Outcome::Lp(r) => {
                let _ = match r.status {
                    LpStatus::Optimal { x, y } => writeln!(s, "optimal {x} {y}\ntight {:?}", r.tight),
                    LpStatus::Infeasible => writeln!(s, "infeasible"),
                    LpStatus::UnboundedRejected => writeln!(s, "unbounded"),
                };
            }
            Outcome::Pair(p) => {
                let _ = writeln!(s, "{} {} {}", p.pair.0, p.pair.1, p.distance);
            }
            Outcome::Disk(d) => {
                let ids: Vec<String> = d.support.iter().map(u32::to_string).collect();
                let _ = writeln!(s, "{} {} {}\nsupport {}", d.disk.cx, d.disk.cy, d.disk.radius, ids.join(" "));
            }
            Outcome::Lists(l) => {
                for (v, list) in l.lists.iter().enumerate() {
                    let _ = write!(s, "{v}");
                    for e in list {
                        let _ = write!(s, " ({},{})", e.source, e.dist);
                    }
                    s.push('\n');
                }
            }
            Outcome::Components(labels) => labels.iter().enumerate().for_each(|(v, c)| {
                let _ = writeln!(s, "{v} {c}");
            }),
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct Run {
    pub rounds: usize,
    pub depth: Option<u32>,
    pub counters: BTreeMap<String, u64>,
    pub wall_ms: f64,
    /// `None` when validation was not requested.
    pub validation: Option<Result<(), String>>,
    pub outcome: Outcome,
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    // Microsecond resolution.
    (out, (start.elapsed().as_secs_f64() * 1e6).round() / 1e3)
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn counters<const K: usize>(pairs: [(&str, u64); K]) -> BTreeMap<String, u64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn mismatch(what: &str) -> String {
    format!("{what}: sequential and parallel results differ")
}

/// Runs `algo` on `input` with the insertion order drawn from `seed`.
pub fn execute(algo: Algo, input: &Input, mode: Mode, seed: u64, validate: bool) -> Result<Run, CliError> {
    let wrong_input = || CliError::Usage(format!("{} cannot run on this input", algo.name()));
    let n = input.n();
    let perm = Permutation::seeded(n, seed);
    match (algo, input) {
        (Algo::Sort, Input::Keys(keys)) => {
            let ordered: Vec<i64> = (0..n).map(|s| keys[perm.at(s)]).collect();
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => sort_seq(&ordered).map(|t| (t, n)),
                Mode::Par => sort_par(&ordered).map(|p| (p.tree, p.rounds)),
            });
            let (tree, rounds) = res.map_err(input_err)?;
            let depth = (mode == Mode::Seq).then(|| dependence_dag(&tree).longest_path(n).depth);
            let validation = validate.then(|| validate_sort(&tree, &ordered, mode));
            Ok(Run {
                rounds,
                depth,
                counters: counters([("height", tree.height() as u64)]),
                wall_ms,
                validation,
                outcome: Outcome::Sorted(tree.in_order()),
            })
        }
        (Algo::Delaunay, Input::Points(points)) => {
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => triangulate_seq_metered(points, &perm).map(|(t, m, dag)| (t, m, Some(dag))),
                Mode::Par => triangulate_par(points, &perm).map(|(t, m)| (t, m, None)),
            });
            let (tri, metrics, dag) = res.map_err(input_err)?;
            let validation = validate.then(|| {
                check_local_delaunay(&tri)?;
                if n <= BRUTE_FORCE_LIMIT {
                    let v = validate_delaunay(&tri, points);
                    if let Some((t, p)) = v.violations.first() {
                        return Err(format!("point {p} lies inside the circumcircle of {t:?}"));
                    }
                }
                Ok(())
            });
            Ok(Run {
                rounds: if mode == Mode::Par { metrics.rounds } else { n },
                depth: dag.map(|d| d.longest_path(n).depth),
                counters: counters([
                    ("incircle_count", metrics.incircle_count),
                    ("triangles_created", metrics.triangles_created as u64),
                ]),
                wall_ms,
                validation,
                outcome: Outcome::Triangles(tri.interior_triangles()),
            })
        }
        (Algo::Lp, Input::Lp { constraints, objective }) => {
            let solve = |m: Mode| match m {
                Mode::Seq => lp_seq(constraints, *objective, &perm),
                Mode::Par => lp_par(constraints, *objective, &perm),
            };
            let (res, wall_ms) = timed(|| solve(mode));
            let (result, metrics) = res.map_err(input_err)?;
            let validation = validate.then(|| {
                let (other, _) = solve(other_mode(mode)).map_err(|e| e.to_string())?;
                if other != result {
                    return Err(mismatch("lp"));
                }
                match result.status {
                    LpStatus::Optimal { .. } => certify_optimum(constraints, *objective, &result, CERT_TOL),
                    LpStatus::Infeasible if n <= BRUTE_FORCE_LIMIT => {
                        match brute_force_optimum(constraints, *objective, CERT_TOL) {
                            Some(p) => Err(format!("reported infeasible but {p:?} is feasible")),
                            None => Ok(()),
                        }
                    }
                    _ => Ok(()),
                }
            });
            Ok(Run {
                rounds: metrics.trace.as_ref().map_or(n, |t| t.rounds),
                depth: None,
                counters: counters([("special_steps", metrics.special_steps as u64)]),
                wall_ms,
                validation,
                outcome: Outcome::Lp(result),
            })
        }
        (Algo::ClosestPair, Input::Points(points)) => {
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => closest_pair_seq(points, &perm),
                Mode::Par => closest_pair_par(points, &perm),
            });
            let (pair, metrics) = res.map_err(input_err)?;
            let validation = validate.then(|| certify_closest(points, &pair));
            Ok(Run {
                rounds: metrics.trace.as_ref().map_or(n, |t| t.rounds),
                depth: None,
                counters: counters([
                    ("special_steps", metrics.special_steps as u64),
                    ("rebuilds", metrics.rebuilds as u64),
                ]),
                wall_ms,
                validation,
                outcome: Outcome::Pair(pair),
            })
        }
        (Algo::Seb, Input::Points(points)) => {
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => seb_seq(points, &perm),
                Mode::Par => seb_par(points, &perm),
            });
            let (state, metrics) = res.map_err(input_err)?;
            let validation = validate.then(|| certify_disk(points, &state, CERT_TOL));
            Ok(Run {
                rounds: metrics.trace.as_ref().map_or(n, |t| t.rounds),
                depth: None,
                counters: counters([
                    ("update1_calls", metrics.update1_calls as u64),
                    ("update2_calls", metrics.update2_calls as u64),
                ]),
                wall_ms,
                validation,
                outcome: Outcome::Disk(state),
            })
        }
        (Algo::LeLists, Input::Graph(g)) => {
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => le_lists_seq(g, &perm),
                Mode::Par => le_lists_par(g, &perm),
            });
            let (lists, metrics) = res.map_err(input_err)?;
            let validation = validate.then(|| {
                if le_lists_oracle(g, &perm) == lists {
                    Ok(())
                } else {
                    Err("lists differ from the definitional oracle".to_string())
                }
            });
            let total: usize = lists.lists.iter().map(Vec::len).sum();
            Ok(Run {
                rounds: metrics.trace.as_ref().map_or(n, |t| t.rounds),
                depth: None,
                counters: counters([
                    ("visits", metrics.visits),
                    ("max_list_len", lists.max_len() as u64),
                    ("total_list_len", total as u64),
                ]),
                wall_ms,
                validation,
                outcome: Outcome::Lists(lists),
            })
        }
        (Algo::Scc, Input::Graph(g)) => {
            let (res, wall_ms) = timed(|| match mode {
                Mode::Seq => scc_seq(g, &perm),
                Mode::Par => scc_par(g, &perm),
            });
            let (labels, metrics) = res.map_err(input_err)?;
            let validation = validate.then(|| {
                if same_partition(&labels, &oracle_scc(g)) {
                    Ok(())
                } else {
                    Err("components differ from Tarjan's".to_string())
                }
            });
            Ok(Run {
                rounds: metrics.trace.as_ref().map_or(n, |t| t.rounds),
                depth: None,
                counters: counters([("visits", metrics.visits), ("components", metrics.components as u64)]),
                wall_ms,
                validation,
                outcome: Outcome::Components(labels),
            })
        }
        _ => Err(wrong_input()),
    }
}

fn other_mode(mode: Mode) -> Mode {
    match mode {
        Mode::Seq => Mode::Par,
        Mode::Par => Mode::Seq,
    }
}

fn validate_sort(tree: &Bst<i64>, ordered: &[i64], mode: Mode) -> Result<(), String> {
    let other = match other_mode(mode) {
        Mode::Seq => sort_seq(ordered),
        Mode::Par => sort_par(ordered).map(|p| p.tree),
    }
    .map_err(|e| e.to_string())?;
    if &other != tree {
        return Err(mismatch("sort"));
    }
    let keys = tree.in_order();
    match keys.windows(2).position(|w| w[0] >= w[1]) {
        Some(i) => Err(format!("in-order keys not increasing at position {i}")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::{load_graph, load_points, random_keys};
    use crate::GraphArgs;

    #[test]
    fn every_algorithm_validates_in_both_modes() {
        let pts = load_points(None, Some(300), 5).unwrap();
        let graph = |weighted| load_graph(&GraphArgs { graph: None, n: Some(200), m: None }, 5, weighted).unwrap();
        let cases = [
            (Algo::Sort, Input::Keys(random_keys(300, 5))),
            (Algo::Delaunay, pts.clone()),
            (Algo::Lp, Input::Lp { constraints: incpar::lp2d::tangent_constraints(300, 5), objective: (1.0, 0.5) }),
            (Algo::ClosestPair, pts.clone()),
            (Algo::Seb, pts),
            (Algo::LeLists, graph(true)),
            (Algo::Scc, graph(false)),
        ];
        for (algo, input) in &cases {
            let seq = execute(*algo, input, Mode::Seq, 5, true).unwrap();
            let par = execute(*algo, input, Mode::Par, 5, true).unwrap();
            assert_eq!(seq.validation, Some(Ok(())), "{algo:?} seq");
            assert_eq!(par.validation, Some(Ok(())), "{algo:?} par");
            if *algo != Algo::Scc {
                assert_eq!(seq.outcome.render(), par.outcome.render(), "{algo:?}");
            }
            let names: Vec<&str> = seq.counters.keys().map(String::as_str).collect();
            let mut expected = algo.counter_names().to_vec();
            expected.sort_unstable();
            assert_eq!(names, expected, "{algo:?} counter schema");
        }
    }

    #[test]
    fn mismatched_input_is_a_usage_error() {
        let err = execute(Algo::Scc, &Input::Keys(vec![1, 2]), Mode::Seq, 0, false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn duplicate_keys_are_an_input_error() {
        let err = execute(Algo::Sort, &Input::Keys(vec![3, 1, 3]), Mode::Par, 0, false).unwrap_err();
        assert!(matches!(err, CliError::Input(_)), "{err:?}");
    }

    #[test]
    fn sequential_runs_record_depth() {
        let keys = Input::Keys(random_keys(500, 2));
        let seq = execute(Algo::Sort, &keys, Mode::Seq, 2, false).unwrap();
        let par = execute(Algo::Sort, &keys, Mode::Par, 2, false).unwrap();
        // Height counts nodes; depth counts arcs.
        assert_eq!(seq.depth, Some(seq.counters["height"] as u32 - 1));
        assert_eq!(par.depth, None);
        assert_eq!(par.rounds as u64, seq.counters["height"]);
    }
}
