//! Round-synchronous drivers for prefix-doubling (Type 2) and
//! doubling-rounds-with-combine (Type 3) incremental algorithms.
//!
//! Both drivers own the barrier between rounds. Work inside a round is
//! spread over the current rayon pool; with a one-thread pool the exact
//! same code runs serially.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

/// What a driver did: rounds, Type 2 sub-rounds, and steps per round.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundTrace {
    pub rounds: usize,
    pub sub_rounds: usize,
    pub per_round_sizes: Vec<usize>,
}

impl RoundTrace {
    pub fn steps(&self) -> usize {
        self.per_round_sizes.iter().sum()
    }
}

/// A step callback failed; `step` is the index that failed.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("step {step} failed: {error}")]
pub struct StepFailed<E: std::fmt::Display> {
    pub step: usize,
    pub error: E,
}

/// Callbacks for [`run_type2`].
///
/// `is_special` is evaluated concurrently over a range of steps, against
/// the state reached after every step before the range's start (plus
/// whatever [`Type2Steps::prepare`] set up for the range). `run_regular`
/// and `run_special` are externally atomic and may parallelise internally.
pub trait Type2Steps: Sync {
    type Error: std::fmt::Display + Send;

    /// Called before each sub-round with the steps about to be checked.
    fn prepare(&mut self, _steps: Range<usize>) {}

    fn is_special(&self, step: usize) -> bool;

    /// Runs a block of regular steps, all of whose checks came back false.
    fn run_regular(&mut self, steps: Range<usize>);

    fn run_special(&mut self, step: usize) -> Result<(), Self::Error>;

    /// Lets an algorithm stop early (e.g. an infeasible LP).
    fn finished(&self) -> bool {
        false
    }
}

/// Prefix-doubling driver.
///
/// Step 0 runs as special. Round `i` then covers `[2^(i-1), 2^i)` (the last
/// round is clipped to `n`); each sub-round finds the earliest special step
/// in the unfinished part of the round, runs the regular steps before it as
/// one block, then runs the special step alone.
pub fn run_type2<A: Type2Steps>(n: usize, alg: &mut A) -> Result<RoundTrace, StepFailed<A::Error>> {
    let mut trace = RoundTrace::default();
    if n == 0 {
        return Ok(trace);
    }
    alg.run_special(0).map_err(|error| StepFailed { step: 0, error })?;
    trace.rounds = 1;
    trace.per_round_sizes.push(1);

    let mut done = 1;
    while done < n && !alg.finished() {
        let end = (done * 2).min(n);
        trace.rounds += 1;
        trace.per_round_sizes.push(end - done);
        let mut j = done;
        while j < end {
            trace.sub_rounds += 1;
            alg.prepare(j..end);
            let first_special = {
                let alg = &*alg;
                (j..end).into_par_iter().find_first(|&k| alg.is_special(k))
            };
            let l = first_special.unwrap_or(end);
            if j < l {
                alg.run_regular(j..l);
            }
            if l == end {
                break;
            }
            alg.run_special(l).map_err(|error| StepFailed { step: l, error })?;
            if alg.finished() {
                return Ok(trace);
            }
            j = l + 1;
        }
        done = end;
    }
    Ok(trace)
}

/// Callbacks for [`run_type3`].
///
/// Every step of a round runs concurrently against the state frozen at the
/// start of the round; `combine` then receives the results ordered by step
/// and must leave the state equal to running those steps in order.
pub trait Type3Steps: Sync {
    type Output: Send;
    type Error: std::fmt::Display + Send;

    fn run_step(&self, step: usize) -> Result<Self::Output, Self::Error>;

    fn combine(&mut self, steps: Range<usize>, results: Vec<Self::Output>);
}

/// Step ranges visited by [`run_type3`]: `[0,1)`, `[1,2)`, `[2,4)`, `[4,8)`, ...
pub fn type3_rounds(n: usize) -> Vec<Range<usize>> {
    let mut rounds = Vec::new();
    if n == 0 {
        return rounds;
    }
    rounds.push(0..1);
    let mut start = 1;
    while start < n {
        let end = (start * 2).min(n);
        rounds.push(start..end);
        start = end;
    }
    rounds
}

/// Doubling-rounds driver with a per-round combine.
pub fn run_type3<A: Type3Steps>(n: usize, alg: &mut A) -> Result<RoundTrace, StepFailed<A::Error>> {
    let mut trace = RoundTrace::default();
    for steps in type3_rounds(n) {
        let results: Vec<Result<A::Output, A::Error>> = {
            let alg = &*alg;
            steps.clone().into_par_iter().map(|k| alg.run_step(k)).collect()
        };
        let mut outputs = Vec::with_capacity(results.len());
        for (k, r) in steps.clone().zip(results) {
            outputs.push(r.map_err(|error| StepFailed { step: k, error })?);
        }
        trace.rounds += 1;
        trace.per_round_sizes.push(steps.len());
        alg.combine(steps, outputs);
    }
    Ok(trace)
}

/// Index of the earliest `true` in `range`, scanning blocks of doubling size
/// (1, 2, 4, ...) and reducing each block in parallel.
///
/// This is the prefix-doubling "earliest violator" search used inside
/// special steps: work stays proportional to the returned index.
pub fn first_true_doubling<F>(range: Range<usize>, pred: F) -> Option<usize>
where
    F: Fn(usize) -> bool + Sync,
{
    let mut start = range.start;
    let mut block = 1;
    while start < range.end {
        let end = (start + block).min(range.end);
        if let Some(k) = (start..end).into_par_iter().find_first(|&k| pred(k)) {
            return Some(k);
        }
        start = end;
        block *= 2;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt;

    #[derive(Debug, PartialEq)]
    struct Boom;
    impl fmt::Display for Boom {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("boom")
        }
    }

    /// Records every execution; state is a running fold so order matters.
    struct Log {
        specials: Vec<usize>,
        log: Vec<(usize, bool)>,
        fold: u64,
        fail_at: Option<usize>,
    }

    impl Log {
        fn new(specials: &[usize]) -> Self {
            Self { specials: specials.to_vec(), log: vec![], fold: 0, fail_at: None }
        }
        fn apply(&mut self, k: usize, special: bool) {
            self.log.push((k, special));
            self.fold = self.fold.wrapping_mul(31).wrapping_add(k as u64 * 2 + special as u64);
        }
    }

    impl Type2Steps for Log {
        type Error = Boom;
        fn is_special(&self, step: usize) -> bool {
            self.specials.contains(&step)
        }
        fn run_regular(&mut self, steps: Range<usize>) {
            for k in steps {
                self.apply(k, false);
            }
        }
        fn run_special(&mut self, step: usize) -> Result<(), Boom> {
            if self.fail_at == Some(step) {
                return Err(Boom);
            }
            self.apply(step, true);
            Ok(())
        }
    }

    fn sequential(n: usize, specials: &[usize]) -> Log {
        let mut log = Log::new(specials);
        for k in 0..n {
            let special = k == 0 || specials.contains(&k);
            log.apply(k, special);
        }
        log
    }

    #[test]
    fn type2_no_specials() {
        let mut alg = Log::new(&[]);
        let trace = run_type2(8, &mut alg).unwrap();
        assert_eq!(trace.per_round_sizes, vec![1, 1, 2, 4]);
        assert_eq!(trace.rounds, 4);
        assert_eq!(trace.sub_rounds, 3);
        assert_eq!(alg.log, sequential(8, &[]).log);
    }

    #[test]
    fn type2_one_special() {
        let mut alg = Log::new(&[3]);
        let trace = run_type2(8, &mut alg).unwrap();
        let expected = sequential(8, &[3]);
        assert_eq!(alg.log, expected.log);
        assert_eq!(alg.fold, expected.fold);
        assert_eq!(alg.log[3], (3, true));
        // Round [2,4): sub-round runs 2 then special 3; round [4,8): one sub-round.
        assert_eq!(trace.sub_rounds, 3);
    }

    #[test]
    fn type2_single_step() {
        let mut alg = Log::new(&[]);
        let trace = run_type2(1, &mut alg).unwrap();
        assert_eq!(alg.log, vec![(0, true)]);
        assert_eq!(trace.rounds, 1);
        assert_eq!(trace.sub_rounds, 0);
        assert_eq!(run_type2(0, &mut Log::new(&[])).unwrap(), RoundTrace::default());
    }

    #[test]
    fn type2_failure_reports_step() {
        let mut alg = Log::new(&[5]);
        alg.fail_at = Some(5);
        let err = run_type2(16, &mut alg).unwrap_err();
        assert_eq!(err, StepFailed { step: 5, error: Boom });
    }

    #[test]
    fn type2_sub_round_bound() {
        let specials = [1, 2, 3, 5, 9, 17, 18, 40, 41, 42, 99];
        let n = 128;
        let mut alg = Log::new(&specials);
        let trace = run_type2(n, &mut alg).unwrap();
        assert_eq!(alg.log, sequential(n, &specials).log);
        let bound = specials.len() + (n as f64).log2().ceil() as usize + 1;
        assert!(trace.sub_rounds <= bound);
        assert_eq!(trace.steps(), n);
    }

    struct Prefix {
        values: Vec<u64>,
        acc: Vec<u64>,
    }

    impl Type3Steps for Prefix {
        type Output = u64;
        type Error = Boom;
        fn run_step(&self, step: usize) -> Result<u64, Boom> {
            Ok(self.values[step])
        }
        fn combine(&mut self, _steps: Range<usize>, results: Vec<u64>) {
            for v in results {
                let last = self.acc.last().copied().unwrap_or(0);
                self.acc.push(last + v);
            }
        }
    }

    #[test]
    fn type3_round_ranges() {
        assert_eq!(type3_rounds(8), vec![0..1, 1..2, 2..4, 4..8]);
        assert_eq!(type3_rounds(1), vec![0..1]);
        assert_eq!(type3_rounds(5), vec![0..1, 1..2, 2..4, 4..5]);
        assert!(type3_rounds(0).is_empty());
        for n in 1..300usize {
            let rounds = type3_rounds(n).len();
            assert!(rounds <= (n as f64).log2().ceil() as usize + 1);
        }
    }

    #[test]
    fn type3_combines_in_step_order() {
        let mut alg = Prefix { values: (1..=10).collect(), acc: vec![] };
        let trace = run_type3(10, &mut alg).unwrap();
        assert_eq!(trace.rounds, 5);
        assert_eq!(trace.per_round_sizes, vec![1, 1, 2, 4, 2]);
        assert_eq!(alg.acc, (1..=10u64).map(|k| k * (k + 1) / 2).collect::<Vec<_>>());
    }

    #[test]
    fn doubling_search() {
        assert_eq!(first_true_doubling(0..100, |k| k >= 37), Some(37));
        assert_eq!(first_true_doubling(5..100, |k| k % 10 == 0), Some(10));
        assert_eq!(first_true_doubling(0..100, |_| false), None);
        assert_eq!(first_true_doubling(3..3, |_| true), None);
    }
}
