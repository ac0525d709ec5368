//! Progressive, constraint-satisfying search over module micro-architectures.
//!
//! Each generation samples candidates from the current generator, scores
//! them with NetScore, drops those failing the accuracy floor, and moves
//! the generator's base onto the winner when it beats the incumbent. The
//! recorded best NetScore therefore never decreases. The macro-architecture
//! (module count, stage layout, module types) stays fixed.

mod evaluator;
mod micro;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arch::{GraphError, NetworkSpec};
use crate::complexity::analyze;
use crate::netscore::{indicator, netscore, MetricConfig, MetricInputs};

pub use evaluator::{AccuracyEvaluator, CommandEvaluator, EvaluationError, FnEvaluator, Memoized, SyntheticEvaluator};
pub use micro::{generate, Generator, MicroParams, CANDIDATE_NAME};

#[derive(Debug, Error)]
pub enum ExplorerError {
    #[error("evaluator failed on spec {digest}: {source}")]
    EvaluatorFailure {
        digest: String,
        #[source]
        source: EvaluationError,
    },
    #[error("requested {requested} networks but history holds {available} distinct feasible bests")]
    InsufficientHistory { requested: usize, available: usize },
    #[error("base network unsupported: {0}")]
    UnsupportedBase(String),
    #[error("invalid exploration config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub seeds_per_generation: usize,
    /// Fraction of feasible candidates (by NetScore) eligible to become the
    /// new base.
    pub survivor_fraction: f64,
    pub metric: MetricConfig,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            seeds_per_generation: 16,
            survivor_fraction: 0.25,
            metric: MetricConfig::default(),
        }
    }
}

/// A scored network that satisfied the indicator when evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestRecord {
    pub netscore: f64,
    pub accuracy: f64,
    pub params: u64,
    pub mult_adds: u64,
    pub digest: String,
    #[serde(skip)]
    pub network: NetworkSpec,
    #[serde(skip)]
    pub micro: MicroParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    /// Index `k` of the generator that was sampled.
    pub generation: usize,
    pub feasible_count: usize,
    /// True when this generation replaced the incumbent.
    pub improved: bool,
    /// Best feasible network found so far (`None` until one exists).
    pub best: Option<BestRecord>,
}

/// One exploration-log line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogLine {
    pub generation: usize,
    pub best_netscore: Option<f64>,
    pub best_params: Option<u64>,
    pub best_mult_adds: Option<u64>,
    pub feasible_count: usize,
    pub spec_digest: Option<String>,
}

impl HistoryEntry {
    pub fn log_line(&self) -> LogLine {
        LogLine {
            generation: self.generation,
            best_netscore: self.best.as_ref().map(|b| b.netscore),
            best_params: self.best.as_ref().map(|b| b.params),
            best_mult_adds: self.best.as_ref().map(|b| b.mult_adds),
            feasible_count: self.feasible_count,
            spec_digest: self.best.as_ref().map(|b| b.digest.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationState {
    pub generation: usize,
    pub current: Generator,
    pub history: Vec<HistoryEntry>,
    pub rng_seed: u64,
}

impl ExplorationState {
    pub fn new(initial: Generator, rng_seed: u64) -> Self {
        Self {
            generation: 0,
            current: initial,
            history: Vec::new(),
            rng_seed,
        }
    }

    pub fn best(&self) -> Option<&BestRecord> {
        self.history.last().and_then(|h| h.best.as_ref())
    }

    /// Candidate seeds for the current generation.
    fn seeds(&self, n: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(self.generation as u64);
        (0..n).map(|_| rng.random()).collect()
    }
}

struct Candidate {
    micro: MicroParams,
    network: NetworkSpec,
    digest: String,
    params: u64,
    mult_adds: u64,
}

fn score(c: &Candidate, accuracy: f64, cfg: &MetricConfig) -> Option<f64> {
    if !indicator(accuracy, cfg) {
        return None;
    }
    netscore(&MetricInputs::from_counts(accuracy, c.params, c.mult_adds), cfg).ok()
}

/// Advance one generation, returning the next state.
pub fn step<E>(state: &ExplorationState, evaluator: &E, cfg: &StepConfig) -> Result<ExplorationState, ExplorerError>
where
    E: AccuracyEvaluator + Sync + ?Sized,
{
    if cfg.seeds_per_generation < 2 {
        return Err(ExplorerError::InvalidConfig(
            "seeds_per_generation must be at least 2".into(),
        ));
    }
    let generator = &state.current;
    let candidates = state
        .seeds(cfg.seeds_per_generation)
        .into_par_iter()
        .map(|seed| {
            let micro = generator.sample(seed);
            let network = generator.materialize(&micro, CANDIDATE_NAME);
            let report = analyze(&network)?;
            Ok(Candidate {
                digest: network.digest(),
                micro,
                network,
                params: report.total_params,
                mult_adds: report.total_mult_adds,
            })
        })
        .collect::<Result<Vec<_>, GraphError>>()?;

    let evaluate = |c: &Candidate| evaluator.evaluate(&c.network);
    let accuracies: Vec<Result<f64, EvaluationError>> = if evaluator.concurrent() {
        candidates.par_iter().map(evaluate).collect()
    } else {
        candidates.iter().map(evaluate).collect()
    };
    let mut scored = Vec::with_capacity(candidates.len());
    for (c, acc) in candidates.into_iter().zip(accuracies) {
        let accuracy = acc.map_err(|source| ExplorerError::EvaluatorFailure {
            digest: c.digest.clone(),
            source,
        })?;
        if let Some(u) = score(&c, accuracy, &cfg.metric) {
            scored.push((c, accuracy, u));
        }
    }

    let mut next = state.clone();
    next.generation += 1;
    let incumbent = state.best().cloned();
    let feasible_count = scored.len();

    if scored.is_empty() {
        next.current.perturbation_scale /= 2.0;
        next.history.push(HistoryEntry {
            generation: state.generation,
            feasible_count,
            improved: false,
            best: incumbent,
        });
        return Ok(next);
    }

    // Highest NetScore first; fewer params, then seed order, break ties.
    scored.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.params.cmp(&b.0.params)));
    let top = scored[0].2;
    let beats = |u: f64| incumbent.as_ref().is_none_or(|inc| u > inc.netscore);

    let mut best = incumbent.clone();
    let mut improved = false;
    if beats(top) {
        let survivors = ((cfg.survivor_fraction * feasible_count as f64).ceil() as usize).clamp(1, feasible_count);
        let slack = generator.complexity_pressure.max(0.0);
        let (chosen, accuracy, u) = scored[..survivors]
            .iter()
            .filter(|(_, _, u)| *u >= top - slack && beats(*u))
            .min_by(|a, b| a.0.params.cmp(&b.0.params).then(b.2.total_cmp(&a.2)))
            .expect("the top candidate always qualifies");
        next.current.base = chosen.micro.clone();
        best = Some(BestRecord {
            netscore: *u,
            accuracy: *accuracy,
            params: chosen.params,
            mult_adds: chosen.mult_adds,
            digest: chosen.digest.clone(),
            network: chosen.network.clone(),
            micro: chosen.micro.clone(),
        });
        improved = true;
    }

    next.history.push(HistoryEntry {
        generation: state.generation,
        feasible_count,
        improved,
        best,
    });
    Ok(next)
}

/// Run `generations` steps, calling `on_step` after each.
pub fn explore<E>(
    mut state: ExplorationState,
    evaluator: &E,
    cfg: &StepConfig,
    generations: usize,
    mut on_step: impl FnMut(&HistoryEntry),
) -> Result<ExplorationState, ExplorerError>
where
    E: AccuracyEvaluator + Sync + ?Sized,
{
    for _ in 0..generations {
        state = step(&state, evaluator, cfg)?;
        on_step(state.history.last().expect("step appends history"));
    }
    Ok(state)
}

/// `count` networks from distinct generations' bests, highest NetScore
/// first among distinct parameter totals, returned in decreasing
/// parameter order.
pub fn emit_family(state: &ExplorationState, count: usize) -> Result<Vec<NetworkSpec>, ExplorerError> {
    let mut bests: Vec<(usize, &BestRecord)> = state
        .history
        .iter()
        .filter(|h| h.improved)
        .filter_map(|h| h.best.as_ref().map(|b| (h.generation, b)))
        .collect();
    bests.sort_by(|a, b| b.1.netscore.total_cmp(&a.1.netscore));

    let mut picked: Vec<(usize, &BestRecord)> = Vec::with_capacity(count);
    for (generation, b) in bests {
        if picked.len() == count {
            break;
        }
        if picked.iter().all(|(_, p)| p.params != b.params) {
            picked.push((generation, b));
        }
    }
    if picked.len() < count {
        return Err(ExplorerError::InsufficientHistory {
            requested: count,
            available: picked.len(),
        });
    }
    picked.sort_by_key(|(_, b)| std::cmp::Reverse(b.params));
    Ok(picked
        .into_iter()
        .map(|(generation, b)| {
            let mut net = b.network.clone();
            net.name = format!("explored-g{generation}");
            net
        })
        .collect())
}
