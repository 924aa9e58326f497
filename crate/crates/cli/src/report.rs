use std::collections::BTreeMap;

use serde::Serialize;

use crate::algo::{Algo, Mode, Run};
use crate::input::Input;

/// One run, serialised as a single JSON line. Every field except `wall_ms`
/// is deterministic in the inputs, seed and mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub algo: String,
    pub n: usize,
    /// Edge count, for graph inputs only.
    pub m: Option<usize>,
    pub seed: u64,
    pub mode: String,
    pub threads: usize,
    pub rounds: usize,
    pub depth: Option<u32>,
    pub counters: BTreeMap<String, u64>,
    pub wall_ms: f64,
    /// True iff validation ran and passed.
    pub validated: bool,
}

impl MetricsReport {
    pub fn new(algo: Algo, input: &Input, seed: u64, mode: Mode, run: &Run) -> Self {
        Self {
            algo: algo.name().to_string(),
            n: input.n(),
            m: input.m(),
            seed,
            mode: mode.name().to_string(),
            threads: rayon::current_num_threads(),
            rounds: run.rounds,
            depth: run.depth,
            counters: run.counters.clone(),
            wall_ms: run.wall_ms,
            validated: matches!(run.validation, Some(Ok(()))),
        }
    }
}
