//! Input files and seeded generators. Every generator is deterministic in
//! `(n, m, seed)`, so a `gen` file and the matching `--n` run see the same data.

use std::fmt::Write;
use std::path::Path;

use clap::ValueEnum;
use incpar::geomkit::{parse_points, uniform_points, Point2D};
use incpar::graphcore::{gen_random_graph, parse_edge_list, Graph};
use incpar::lp2d::{parse_halfplanes, tangent_constraints, Halfplane};
use incpar::order::{Permutation, SplitMix64};

use crate::{io_err, CliError, GraphArgs};

#[derive(Clone, Debug)]
pub enum Input {
    Keys(Vec<i64>),
    Points(Vec<Point2D>),
    Lp { constraints: Vec<Halfplane>, objective: (f64, f64) },
    Graph(Graph),
}

impl Input {
    pub fn n(&self) -> usize {
        match self {
            Input::Keys(k) => k.len(),
            Input::Points(p) => p.len(),
            Input::Lp { constraints, .. } => constraints.len(),
            Input::Graph(g) => g.n(),
        }
    }

    pub fn m(&self) -> Option<usize> {
        match self {
            Input::Graph(g) => Some(g.m()),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Keys,
    Points,
    Constraints,
    Graph,
    Perm,
}

pub fn random_keys(n: usize, seed: u64) -> Vec<i64> {
    let mut rng = SplitMix64::new(seed).fork(0x6b);
    (0..n).map(|_| (rng.next_u64() >> 1) as i64).collect()
}

pub fn default_edges(n: usize) -> usize {
    4 * n
}

/// Text of a generated input file in the format the matching loader reads.
pub fn generate(kind: GenKind, n: usize, m: Option<usize>, seed: u64, weighted: bool) -> Result<String, CliError> {
    let mut out = String::new();
    match kind {
        GenKind::Keys => random_keys(n, seed).iter().for_each(|k| {
            let _ = writeln!(out, "{k}");
        }),
        GenKind::Points => uniform_points(n, seed).iter().for_each(|p| {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }),
        GenKind::Constraints => tangent_constraints(n, seed).iter().for_each(|h| {
            let _ = writeln!(out, "{} {} {}", h.a, h.b, h.c);
        }),
        GenKind::Graph => {
            let g = gen_random_graph(n, m.unwrap_or(default_edges(n)), seed, weighted)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            out = g.to_edge_list();
        }
        GenKind::Perm => {
            out = Permutation::seeded(n, seed).to_index_list();
            out.push('\n');
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn need_n(n: Option<usize>, file_flag: &str) -> Result<usize, CliError> {
    n.ok_or_else(|| CliError::Usage(format!("either --n or --{file_flag} is required")))
}

pub fn parse_keys(text: &str) -> Result<Vec<i64>, CliError> {
    let mut keys = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let k = line.parse().map_err(|_| CliError::Input(format!("line {}: invalid key {line:?}", i + 1)))?;
        keys.push(k);
    }
    Ok(keys)
}

pub fn load_keys(path: Option<&Path>, n: Option<usize>, seed: u64) -> Result<Input, CliError> {
    match path {
        Some(p) => Ok(Input::Keys(parse_keys(&read(p)?)?)),
        None => Ok(Input::Keys(random_keys(need_n(n, "keys")?, seed))),
    }
}

pub fn load_points(path: Option<&Path>, n: Option<usize>, seed: u64) -> Result<Input, CliError> {
    match path {
        Some(p) => parse_points(&read(p)?).map(Input::Points).map_err(|e| CliError::Input(e.to_string())),
        None => Ok(Input::Points(uniform_points(need_n(n, "points")?, seed))),
    }
}

pub fn load_constraints(
    path: Option<&Path>,
    n: Option<usize>,
    seed: u64,
    objective: (f64, f64),
) -> Result<Input, CliError> {
    let constraints = match path {
        Some(p) => parse_halfplanes(&read(p)?).map_err(|e| CliError::Input(e.to_string()))?,
        None => tangent_constraints(need_n(n, "constraints")?, seed),
    };
    Ok(Input::Lp { constraints, objective })
}

/// Graph from `--graph`, or generated from `--n`/`--m`; generated graphs
/// are weighted iff `weighted`.
pub fn load_graph(args: &GraphArgs, seed: u64, weighted: bool) -> Result<Input, CliError> {
    let g = match &args.graph {
        Some(p) => parse_edge_list(&read(p)?).map_err(|e| CliError::Input(e.to_string()))?,
        None => {
            let n = need_n(args.n, "graph")?;
            gen_random_graph(n, args.m.unwrap_or(default_edges(n)), seed, weighted)
                .map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    Ok(Input::Graph(g))
}
