//! Greedy backward search for per-stage crop bandwidths.
//!
//! Training is split into `N` equal stages, all initialized to the base
//! resolution. For `i = N-1` down to `1`, stages `1..=i` are set to a common
//! candidate bandwidth (stages after `i` keep their solved values) and the
//! smallest candidate whose accuracy reaches the baseline becomes stage `i`'s
//! value. Stage `N` is never searched, so the final stage always trains on the
//! original data.

mod cache;
pub mod oracle;

use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::AccuracyCache;
pub use oracle::{bandwidth_key, oracle_invoke, parse_accuracy, AccuracyOracle, OracleMode, OracleSpec};

use crate::curriculum::{Schedule, DEFAULT_BASE_RESOLUTION, DEFAULT_M0};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub total_epochs: u32,
    pub stages: usize,
    /// Ascending even bandwidths; the largest is the base resolution.
    pub candidates: Vec<u32>,
    pub baseline_accuracy: f64,
    pub oracle: OracleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    /// Evaluate all candidates of a step concurrently; results are still
    /// applied in ascending order.
    #[serde(default)]
    pub speculative: bool,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::Config("stage count must be at least 1".into()));
        }
        if self.total_epochs == 0 || !(self.total_epochs as usize).is_multiple_of(self.stages) {
            return Err(Error::Config(format!(
                "{} epochs cannot be split into {} equal stages",
                self.total_epochs, self.stages
            )));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("candidate list is empty".into()));
        }
        if self.candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("candidates must be strictly ascending".into()));
        }
        if self.candidates.iter().any(|&b| b == 0 || b % 2 != 0) {
            return Err(Error::Config("candidates must be positive and even".into()));
        }
        if !self.baseline_accuracy.is_finite() {
            return Err(Error::Config("baseline accuracy must be finite".into()));
        }
        self.oracle.validate()
    }

    /// Largest candidate, used as the full-resolution value.
    pub fn base_resolution(&self) -> u32 {
        self.candidates.last().copied().unwrap_or(DEFAULT_BASE_RESOLUTION)
    }
}

/// One accuracy query made during the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// 1-based index of the stage being solved.
    pub step: usize,
    pub bandwidths: Vec<u32>,
    pub accuracy: f64,
    pub feasible: bool,
    /// Answered from the cache without calling the oracle.
    pub cached: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub bandwidths: Vec<u32>,
    pub schedule: Schedule,
    pub trace: Vec<TraceEntry>,
    /// 1-based stages where no candidate met the baseline.
    pub infeasible_steps: Vec<usize>,
    pub oracle_calls: usize,
}

impl SearchOutcome {
    pub fn feasible(&self) -> bool {
        self.infeasible_steps.is_empty()
    }

    /// No searched stage found a feasible candidate.
    pub fn infeasible_at_every_stage(&self) -> bool {
        let searched = self.bandwidths.len().saturating_sub(1);
        searched > 0 && self.infeasible_steps.len() == searched
    }
}

/// The search stopped on an oracle or cache error; `trace` holds what ran.
#[derive(Debug, Error)]
#[error("search aborted after {} queries: {source}", trace.len())]
pub struct SearchAborted {
    pub trace: Vec<TraceEntry>,
    #[source]
    pub source: Error,
}

/// Runs the search against the oracle named in `config`.
pub fn greedy_search(config: &SearchConfig) -> std::result::Result<SearchOutcome, SearchAborted> {
    greedy_search_with(config, &config.oracle)
}

/// Runs the search against an arbitrary oracle; `config.oracle` is ignored.
pub fn greedy_search_with(
    config: &SearchConfig,
    oracle: &dyn AccuracyOracle,
) -> std::result::Result<SearchOutcome, SearchAborted> {
    let abort = |trace: Vec<TraceEntry>, source: Error| SearchAborted { trace, source };
    config.validate().map_err(|e| abort(Vec::new(), e))?;
    let cache = match &config.cache_path {
        Some(path) => AccuracyCache::open(path),
        None => Ok(AccuracyCache::in_memory()),
    }
    .map_err(|e| abort(Vec::new(), e))?;

    let mut run = Run {
        config,
        oracle,
        cache: Mutex::new(cache),
        trace: Vec::new(),
        oracle_calls: 0,
    };
    match run.execute() {
        Ok((bandwidths, infeasible_steps)) => {
            let schedule =
                Schedule::from_stage_bandwidths(config.total_epochs, &bandwidths, config.base_resolution(), DEFAULT_M0)
                    .map_err(|e| abort(run.trace.clone(), e))?;
            Ok(SearchOutcome {
                bandwidths,
                schedule,
                trace: run.trace,
                infeasible_steps,
                oracle_calls: run.oracle_calls,
            })
        }
        Err(source) => Err(abort(run.trace, source)),
    }
}

struct Run<'a> {
    config: &'a SearchConfig,
    oracle: &'a dyn AccuracyOracle,
    cache: Mutex<AccuracyCache>,
    trace: Vec<TraceEntry>,
    oracle_calls: usize,
}

impl Run<'_> {
    fn execute(&mut self) -> Result<(Vec<u32>, Vec<usize>)> {
        let n = self.config.stages;
        let base = self.config.base_resolution();
        let mut solved = vec![base; n];
        let mut infeasible = Vec::new();

        for i in (1..n).rev() {
            let vectors: Vec<Vec<u32>> = self
                .config
                .candidates
                .iter()
                .map(|&b| {
                    let mut v = solved.clone();
                    v[..i].fill(b);
                    v
                })
                .collect();

            let found = if self.config.speculative {
                self.step_speculative(i, &vectors)?
            } else {
                self.step_sequential(i, &vectors)?
            };
            match found {
                Some(idx) => solved[i - 1] = self.config.candidates[idx],
                None => infeasible.push(i),
            }
        }
        Ok((solved, infeasible))
    }

    fn step_sequential(&mut self, step: usize, vectors: &[Vec<u32>]) -> Result<Option<usize>> {
        for (idx, v) in vectors.iter().enumerate() {
            let (accuracy, cached) = self.query(v)?;
            let feasible = self.record(step, v, accuracy, cached);
            if feasible {
                return Ok(Some(idx));
            }
        }
        Ok(None)
    }

    fn step_speculative(&mut self, step: usize, vectors: &[Vec<u32>]) -> Result<Option<usize>> {
        let results: Vec<Result<(f64, bool)>> = thread::scope(|scope| {
            let handles: Vec<_> = vectors.iter().map(|v| scope.spawn(|| self.query_shared(v))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("oracle thread panicked"))
                .collect()
        });
        let mut first = None;
        for (idx, (v, result)) in vectors.iter().zip(results).enumerate() {
            let (accuracy, cached) = result?;
            if !cached {
                self.oracle_calls += 1;
            }
            if self.record(step, v, accuracy, cached) && first.is_none() {
                first = Some(idx);
            }
        }
        Ok(first)
    }

    fn record(&mut self, step: usize, bandwidths: &[u32], accuracy: f64, cached: bool) -> bool {
        let feasible = accuracy >= self.config.baseline_accuracy;
        self.trace.push(TraceEntry {
            step,
            bandwidths: bandwidths.to_vec(),
            accuracy,
            feasible,
            cached,
        });
        feasible
    }

    fn query(&mut self, bandwidths: &[u32]) -> Result<(f64, bool)> {
        let result = self.query_shared(bandwidths)?;
        if !result.1 {
            self.oracle_calls += 1;
        }
        Ok(result)
    }

    /// Cache lookup, otherwise one oracle call whose result is stored.
    fn query_shared(&self, bandwidths: &[u32]) -> Result<(f64, bool)> {
        if let Some(acc) = self.cache.lock().unwrap().get(bandwidths) {
            return Ok((acc, true));
        }
        let schedule = Schedule::from_stage_bandwidths(
            self.config.total_epochs,
            bandwidths,
            self.config.base_resolution(),
            DEFAULT_M0,
        )?;
        let accuracy = self.oracle.accuracy(&schedule, bandwidths)?;
        if !accuracy.is_finite() {
            return Err(Error::Protocol {
                message: format!(
                    "oracle returned non-finite accuracy for ({})",
                    bandwidth_key(bandwidths)
                ),
                output: String::new(),
            });
        }
        self.cache.lock().unwrap().insert(bandwidths, accuracy)?;
        Ok((accuracy, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(stages: usize, candidates: &[u32], a0: f64) -> SearchConfig {
        SearchConfig {
            total_epochs: 300,
            stages,
            candidates: candidates.to_vec(),
            baseline_accuracy: a0,
            oracle: OracleSpec::table(Vec::new()),
            cache_path: None,
            speculative: false,
        }
    }

    #[test]
    fn single_stage_never_queries() {
        let oracle = |_: &[u32]| -> f64 { panic!("must not be called") };
        let out = greedy_search_with(&config(1, &[96, 224], 0.8), &oracle).unwrap();
        assert_eq!(out.bandwidths, vec![224]);
        assert_eq!(out.oracle_calls, 0);
        assert!(out.trace.is_empty());
        assert!(out.feasible());
        assert!(!out.infeasible_at_every_stage());
    }

    #[test]
    fn all_infeasible_keeps_initialization() {
        let oracle = |_: &[u32]| 0.1;
        let out = greedy_search_with(&config(3, &[96, 160, 224], 0.8), &oracle).unwrap();
        assert_eq!(out.bandwidths, vec![224, 224, 224]);
        assert!(out.infeasible_at_every_stage());
        assert_eq!(out.infeasible_steps, vec![2, 1]);
    }

    #[test]
    fn picks_smallest_feasible_and_memoizes() {
        // feasible iff every stage is at least 160
        let oracle = |b: &[u32]| if b.iter().all(|&x| x >= 160) { 0.9 } else { 0.5 };
        let out = greedy_search_with(&config(3, &[96, 160, 224], 0.8), &oracle).unwrap();
        assert_eq!(out.bandwidths, vec![160, 160, 224]);
        // step 2 asks (96,96,224) then (160,160,224); step 1 asks (96,160,224) then hits the cache
        assert_eq!(out.oracle_calls, 3);
        assert!(out.trace.last().unwrap().cached);
        assert_eq!(out.schedule.stage_bandwidths().unwrap(), vec![160, 160, 224]);
    }

    #[test]
    fn speculative_matches_sequential() {
        let oracle = |b: &[u32]| {
            0.80 - b
                .iter()
                .map(|&x| 0.01 * (1.0 - (x as f64 / 224.0).powi(2)))
                .sum::<f64>()
        };
        let mut cfg = config(4, &[96, 128, 160, 192, 224], 0.795);
        let seq = greedy_search_with(&cfg, &oracle).unwrap();
        cfg.speculative = true;
        let spec = greedy_search_with(&cfg, &oracle).unwrap();
        assert_eq!(seq.bandwidths, spec.bandwidths);
        assert!(spec.oracle_calls <= 3 * 5);
    }

    #[test]
    fn oracle_failure_keeps_partial_trace() {
        let cfg = SearchConfig {
            oracle: OracleSpec::table([(vec![96, 96, 224], 0.5)]),
            ..config(3, &[96, 160, 224], 0.8)
        };
        let err = greedy_search(&cfg).unwrap_err();
        assert_eq!(err.trace.len(), 1);
        assert!(matches!(err.source, Error::Protocol { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(config(7, &[96, 224], 0.8).validate().is_err());
        assert!(config(0, &[96, 224], 0.8).validate().is_err());
        assert!(config(3, &[224, 96], 0.8).validate().is_err());
        assert!(config(3, &[], 0.8).validate().is_err());
        assert!(config(3, &[97, 224], 0.8).validate().is_err());
    }
}
