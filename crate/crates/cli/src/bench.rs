//! Multi-seed sweeps. Rows are ordered by `(algo, n, seed, mode)`; a run
//! that errors or fails validation is flagged in its row and the sweep
//! continues.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;

use incpar::geomkit::uniform_points;
use incpar::graphcore::gen_random_graph;
use incpar::lp2d::tangent_constraints;

use crate::algo::{execute, Algo, Mode};
use crate::input::{default_edges, random_keys, Input};
use crate::report::MetricsReport;
use crate::{append_metrics, CliError};

/// Inclusive seed range, written `a..b` or as a single seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("invalid seed {t:?}"));
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
            None => (num(s)?, num(s)?),
        };
        if first > last {
            return Err(format!("empty seed range {s:?}"));
        }
        Ok(Self { first, last })
    }
}

#[derive(Clone, Debug)]
pub struct Plan {
    pub algos: Vec<Algo>,
    pub sizes: Vec<usize>,
    /// Edge count for graph inputs; `4n` when absent.
    pub edges: Option<usize>,
    pub seeds: SeedRange,
    pub modes: Vec<Mode>,
    pub objective: (f64, f64),
}

pub struct Table {
    pub csv: String,
    pub rows: usize,
    pub failed_rows: usize,
}

fn generated_input(
    algo: Algo,
    n: usize,
    edges: Option<usize>,
    seed: u64,
    objective: (f64, f64),
) -> Result<Input, CliError> {
    let m = edges.unwrap_or(default_edges(n));
    let graph =
        |weighted| gen_random_graph(n, m, seed, weighted).map(Input::Graph).map_err(|e| CliError::Usage(e.to_string()));
    match algo {
        Algo::Sort => Ok(Input::Keys(random_keys(n, seed))),
        Algo::Delaunay | Algo::ClosestPair | Algo::Seb => Ok(Input::Points(uniform_points(n, seed))),
        Algo::Lp => Ok(Input::Lp { constraints: tangent_constraints(n, seed), objective }),
        Algo::LeLists => graph(true),
        Algo::Scc => graph(false),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Runs the full sweep and renders it as CSV. Counter columns are the union
/// of the requested algorithms' counters; cells of other algorithms stay empty.
pub fn bench_sweep(plan: &Plan, validate: bool, metrics_out: Option<&Path>) -> Result<Table, CliError> {
    if plan.algos.is_empty() || plan.sizes.is_empty() || plan.modes.is_empty() {
        return Err(CliError::Usage("bench needs at least one algorithm, size and mode".into()));
    }
    let algos: BTreeSet<Algo> = plan.algos.iter().copied().collect();
    let sizes: BTreeSet<usize> = plan.sizes.iter().copied().collect();
    let modes: BTreeSet<Mode> = plan.modes.iter().copied().collect();
    let counter_cols: BTreeSet<&str> = algos.iter().flat_map(|a| a.counter_names().iter().copied()).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> =
        vec!["algo", "n", "m", "seed", "mode", "threads", "rounds", "depth", "wall_ms", "validated", "status", "error"];
    header.extend(counter_cols.iter().copied());
    w.write_record(&header).expect("in-memory csv");

    let (mut rows, mut failed_rows) = (0, 0);
    for &algo in &algos {
        for &n in &sizes {
            for seed in plan.seeds.first..=plan.seeds.last {
                for &mode in &modes {
                    let mut record = vec![
                        algo.name().to_string(),
                        n.to_string(),
                        String::new(),
                        seed.to_string(),
                        mode.name().to_string(),
                    ];
                    let run = generated_input(algo, n, plan.edges, seed, plan.objective)
                        .and_then(|input| execute(algo, &input, mode, seed, validate).map(|run| (input, run)));
                    let mut cells = vec![String::new(); counter_cols.len()];
                    let status = match run {
                        Ok((input, run)) => {
                            let report = MetricsReport::new(algo, &input, seed, mode, &run);
                            if let Some(path) = metrics_out {
                                append_metrics(path, &report)?;
                            }
                            record[2] = opt(report.m);
                            for (cell, col) in cells.iter_mut().zip(&counter_cols) {
                                *cell = opt(report.counters.get(*col));
                            }
                            let (status, error) = match &run.validation {
                                Some(Err(msg)) => ("invalid", msg.clone()),
                                _ => ("ok", String::new()),
                            };
                            record.extend([
                                report.threads.to_string(),
                                report.rounds.to_string(),
                                opt(report.depth),
                                format!("{:.3}", report.wall_ms),
                                report.validated.to_string(),
                                status.to_string(),
                                error,
                            ]);
                            status
                        }
                        Err(e) => {
                            record.extend([
                                rayon::current_num_threads().to_string(),
                                String::new(),
                                String::new(),
                                String::new(),
                                "false".into(),
                                "failed".into(),
                                e.to_string(),
                            ]);
                            "failed"
                        }
                    };
                    record.extend(cells);
                    w.write_record(&record).expect("in-memory csv");
                    rows += 1;
                    failed_rows += usize::from(status != "ok");
                }
            }
        }
    }
    let csv = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv");
    Ok(Table { csv, rows, failed_rows })
}
