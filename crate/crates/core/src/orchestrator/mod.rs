//! Training driver: dispatches self-play games to worker threads, merges their deltas into the
//! learner, evaluates against the baselines at a fixed interval and writes checkpoints.
//!
//! The coordinator owns the learner state. Workers only ever see immutable snapshots and
//! return [`UpdateDelta`]s; all merging happens on the coordinator thread.

mod checkpoint;
mod evaluate;
mod metrics;
mod seed;

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{checkpoint_path, latest_checkpoint, Checkpoint, CheckpointMetadata, CODE_REVISION};
pub use evaluate::{evaluate, EvalResult, StartMode};
pub use metrics::{
    median_action_probabilities, metrics_append, quantiles, update_count_quantiles, MetricsRecord, MetricsSink,
    Quantiles,
};
pub use seed::{eval_seed, game_seed};

use crate::cfr::{
    cfr_game_update, max_expected_regret_with, CfrError, LearnerConfig, LearnerState, RegretStatistic, UpdateDelta,
};
use crate::engine::EngineError;
use crate::selectors::{Baseline, RiskAwareParams};

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("checkpoint field `{field}`: {message}")]
    Checkpoint { field: String, message: String },
    #[error("no checkpoint_<idx>.json found in {0}")]
    NoCheckpoint(PathBuf),
    #[error("game {game_idx} failed twice, aborting the run: {message}")]
    Worker { game_idx: u64, message: String },
    #[error(transparent)]
    Cfr(#[from] CfrError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl OrchestratorError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        OrchestratorError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parallelism {
    /// One game at a time, merged in game order.
    None,
    /// Workers run on the latest merged snapshot; deltas merge in arrival order.
    #[default]
    ParallelUnorderedUpdate,
    /// Batches of `n_workers` games share a snapshot; deltas merge in game order per batch.
    ParallelBatchOrderedUpdate,
}

impl Parallelism {
    pub const ALL: [Parallelism; 3] =
        [Parallelism::None, Parallelism::ParallelUnorderedUpdate, Parallelism::ParallelBatchOrderedUpdate];

    pub fn name(self) -> &'static str {
        match self {
            Parallelism::None => "none",
            Parallelism::ParallelUnorderedUpdate => "parallel-unordered-update",
            Parallelism::ParallelBatchOrderedUpdate => "parallel-batch-ordered-update",
        }
    }
}

impl fmt::Display for Parallelism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Parallelism {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Parallelism::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Parallelism::ALL.iter().map(|p| p.name()).collect();
            format!("unknown parallelism `{s}`; expected one of {}", names.join(", "))
        })
    }
}

/// Batch size of the reference setup, which ran one game per CPU on eight CPUs.
pub const DEFAULT_BATCH_SIZE: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub learner: LearnerConfig,
    pub n_training_games: u64,
    pub eval_interval: u64,
    /// Games per baseline and start mode at each evaluation; 0 skips the evaluation games.
    pub test_games_per_eval: u32,
    pub parallelism: Parallelism,
    pub n_workers: usize,
    /// Games per batch under `ParallelBatchOrderedUpdate`. Independent of `n_workers`, so the
    /// worker count never changes the result.
    pub batch_size: usize,
    /// Save every this many games in addition to the final checkpoint.
    pub checkpoint_interval: Option<u64>,
    pub primary_seed: u64,
    pub risk_aware: RiskAwareParams,
    /// Receives `metrics.jsonl` and `metrics.csv`.
    pub metrics_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            learner: LearnerConfig::default(),
            n_training_games: 1000,
            eval_interval: 50,
            test_games_per_eval: 20,
            parallelism: Parallelism::default(),
            n_workers: thread::available_parallelism().map_or(1, |n| n.get()),
            batch_size: DEFAULT_BATCH_SIZE,
            checkpoint_interval: None,
            primary_seed: 1,
            risk_aware: RiskAwareParams::default(),
            metrics_dir: PathBuf::from("runs"),
            checkpoint_dir: PathBuf::from("runs/checkpoints"),
        }
    }
}

impl RunConfig {
    pub fn with_out_dir(mut self, dir: &Path) -> Self {
        self.metrics_dir = dir.to_path_buf();
        self.checkpoint_dir = dir.join("checkpoints");
        self
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        let fail = |m: &str| Err(OrchestratorError::Config(m.to_string()));
        if self.n_training_games < 1 {
            return fail("n_training_games must be at least 1");
        }
        if self.eval_interval < 1 {
            return fail("eval_interval must be at least 1");
        }
        if self.n_workers < 1 {
            return fail("n_workers must be at least 1");
        }
        if self.batch_size < 1 {
            return fail("batch_size must be at least 1");
        }
        if self.checkpoint_interval == Some(0) {
            return fail("checkpoint_interval must be at least 1");
        }
        self.risk_aware.validate().map_err(|e| OrchestratorError::Config(e.to_string()))?;
        self.learner.validate()?;
        Ok(())
    }
}

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub checkpoint: Checkpoint,
    pub checkpoint_path: PathBuf,
    pub records: Vec<MetricsRecord>,
    /// MER after each merged game of this invocation, in merge order.
    pub mer_series: Vec<Option<f64>>,
    pub elapsed: Duration,
}

/// Computes one game's delta. Injectable so failure handling can be exercised in tests.
pub type GameRunner<'a> = dyn Fn(&LearnerState, u64, u64) -> Result<UpdateDelta, CfrError> + Sync + 'a;

fn default_runner(state: &LearnerState, game_idx: u64, seed: u64) -> Result<UpdateDelta, CfrError> {
    cfr_game_update(state, game_idx, seed)
}

/// Runs a game, retrying once with the same seed if it errors or panics.
fn run_game(
    runner: &GameRunner<'_>,
    snapshot: &LearnerState,
    game_idx: u64,
    seed: u64,
) -> Result<UpdateDelta, OrchestratorError> {
    let mut message = String::new();
    for attempt in 0..2 {
        match catch_unwind(AssertUnwindSafe(|| runner(snapshot, game_idx, seed))) {
            Ok(Ok(delta)) => return Ok(delta),
            Ok(Err(e)) => message = e.to_string(),
            Err(panic) => {
                message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "worker panicked".into())
            }
        }
        if attempt == 0 {
            log::warn!("game {game_idx} failed ({message}); retrying with the same seed");
        }
    }
    Err(OrchestratorError::Worker { game_idx, message })
}

struct Coordinator<'a> {
    run: &'a RunConfig,
    state: LearnerState,
    merged: u64,
    mer_window: VecDeque<f64>,
    mer_series: Vec<Option<f64>>,
    sink: Option<MetricsSink>,
    records: Vec<MetricsRecord>,
    last_saved: Option<u64>,
    started: Instant,
    observer: &'a mut dyn FnMut(&MetricsRecord),
}

impl Coordinator<'_> {
    fn merge(&mut self, delta: &UpdateDelta) -> Result<(), OrchestratorError> {
        self.state.merge_delta(delta)?;
        self.merged += 1;
        let mer = self.state.max_expected_regret();
        self.mer_series.push(mer);
        if let Some(m) = mer {
            self.mer_window.push_back(m);
            while self.mer_window.len() as u64 > self.run.eval_interval {
                self.mer_window.pop_front();
            }
        }
        if self.merged.is_multiple_of(self.run.eval_interval) {
            self.record()?;
        }
        if self.run.checkpoint_interval.is_some_and(|k| self.merged.is_multiple_of(k)) {
            self.save()?;
        }
        Ok(())
    }

    fn record(&mut self) -> Result<(), OrchestratorError> {
        let step = self.merged;
        let games = self.run.test_games_per_eval;
        let seed = eval_seed(self.run.primary_seed, step);
        let mut rates = [0.0; 4];
        if games > 0 {
            let configs = [
                (Baseline::Random, StartMode::AgentFirst),
                (Baseline::Random, StartMode::Alternating),
                (Baseline::RiskAware(self.run.risk_aware), StartMode::AgentFirst),
                (Baseline::RiskAware(self.run.risk_aware), StartMode::Alternating),
            ];
            for (i, (baseline, mode)) in configs.into_iter().enumerate() {
                rates[i] = evaluate(&self.state, baseline, mode, games, game_seed(seed, i as u64))?.win_rate;
            }
        }
        let (infoset_count, update_count_quantiles, median_action_probability) =
            MetricsRecord::learner_fields(&self.state);
        let smooth =
            (!self.mer_window.is_empty()).then(|| self.mer_window.iter().sum::<f64>() / self.mer_window.len() as f64);
        let record = MetricsRecord {
            step,
            max_expected_regret: self.state.max_expected_regret(),
            max_expected_regret_smooth: smooth,
            max_expected_regret_sum: max_expected_regret_with(
                &self.state.regrets,
                &self.state.reach,
                RegretStatistic::Sum,
            ),
            random_agent_first: rates[0],
            random_alternating: rates[1],
            risk_aware_agent_first: rates[2],
            risk_aware_alternating: rates[3],
            infoset_count,
            update_count_quantiles,
            median_action_probability,
            elapsed_secs: self.started.elapsed().as_secs_f64(),
        };
        if let Some(sink) = &self.sink {
            if let Err(e) = sink.append(&record) {
                log::warn!("metrics logging disabled: {e}");
                self.sink = None;
            }
        }
        (self.observer)(&record);
        self.records.push(record);
        Ok(())
    }

    fn checkpoint(&self) -> Checkpoint {
        Checkpoint::from_state(&self.state, self.run.primary_seed, self.merged.checked_sub(1))
    }

    fn save(&mut self) -> Result<PathBuf, OrchestratorError> {
        let game_idx = self.merged.saturating_sub(1);
        let path = checkpoint_path(&self.run.checkpoint_dir, game_idx);
        self.checkpoint().save(&path)?;
        self.last_saved = Some(self.merged);
        Ok(path)
    }
}

/// Trains from scratch under `run`.
pub fn train(run: &RunConfig) -> Result<TrainReport, OrchestratorError> {
    train_observed(run, LearnerState::new(run.learner.clone()), 0, &mut |_| {})
}

/// Loads the highest-index checkpoint in `run.checkpoint_dir` and continues until
/// `run.n_training_games` games have been merged. The checkpoint's learner settings and primary
/// seed take precedence over those in `run`.
pub fn resume(run: &RunConfig, observer: &mut dyn FnMut(&MetricsRecord)) -> Result<TrainReport, OrchestratorError> {
    let (_, path) = latest_checkpoint(&run.checkpoint_dir)?
        .ok_or_else(|| OrchestratorError::NoCheckpoint(run.checkpoint_dir.clone()))?;
    let checkpoint = Checkpoint::load(&path)?;
    let run = RunConfig {
        learner: checkpoint.learner_state().config,
        primary_seed: checkpoint.metadata.primary_seed,
        ..run.clone()
    };
    train_observed(&run, checkpoint.learner_state(), checkpoint.games_completed(), observer)
}

/// Continues training `state`, which already has `games_completed` games merged, up to
/// `run.n_training_games`. `observer` sees every metrics record as it is produced.
pub fn train_observed(
    run: &RunConfig,
    state: LearnerState,
    games_completed: u64,
    observer: &mut dyn FnMut(&MetricsRecord),
) -> Result<TrainReport, OrchestratorError> {
    train_with_runner(run, state, games_completed, observer, &default_runner)
}

pub fn train_with_runner(
    run: &RunConfig,
    state: LearnerState,
    games_completed: u64,
    observer: &mut dyn FnMut(&MetricsRecord),
    runner: &GameRunner<'_>,
) -> Result<TrainReport, OrchestratorError> {
    run.validate()?;
    fs::create_dir_all(&run.checkpoint_dir).map_err(|e| OrchestratorError::io(&run.checkpoint_dir, e))?;
    let sink = MetricsSink::open(&run.metrics_dir)?;
    let mut coord = Coordinator {
        run,
        state,
        merged: games_completed,
        mer_window: VecDeque::new(),
        mer_series: Vec::new(),
        sink: Some(sink),
        records: Vec::new(),
        last_saved: None,
        started: Instant::now(),
        observer,
    };
    let games = games_completed..run.n_training_games.max(games_completed);
    let seed_of = |idx| game_seed(run.primary_seed, idx);

    match run.parallelism {
        Parallelism::None => {
            for idx in games {
                let delta = run_game(runner, &coord.state, idx, seed_of(idx))?;
                coord.merge(&delta)?;
            }
        }
        Parallelism::ParallelBatchOrderedUpdate => {
            let indices: Vec<u64> = games.collect();
            for batch in indices.chunks(run.batch_size) {
                let snapshot = coord.state.clone();
                let next = AtomicUsize::new(0);
                let slots: Vec<Mutex<Option<Result<UpdateDelta, OrchestratorError>>>> =
                    batch.iter().map(|_| Mutex::new(None)).collect();
                // Workers only share out the games of one batch; results land in index order, so the
                // worker count cannot influence the merged state.
                thread::scope(|s| {
                    for _ in 0..run.n_workers.min(batch.len()) {
                        s.spawn(|| loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            let Some(&idx) = batch.get(i) else { break };
                            let result = run_game(runner, &snapshot, idx, seed_of(idx));
                            *slots[i].lock().expect("slot lock") = Some(result);
                        });
                    }
                });
                for slot in slots {
                    let delta = slot.into_inner().expect("slot lock").expect("every game in the batch ran")?;
                    coord.merge(&delta)?;
                }
            }
        }
        Parallelism::ParallelUnorderedUpdate => {
            thread::scope(|s| -> Result<(), OrchestratorError> {
                let (tx, rx) = mpsc::channel();
                let spawn = |idx: u64, snapshot: Arc<LearnerState>| {
                    let tx = tx.clone();
                    s.spawn(move || {
                        let _ = tx.send(run_game(runner, &snapshot, idx, seed_of(idx)));
                    });
                };
                let mut next = games.start;
                let mut in_flight = 0;
                let snapshot = Arc::new(coord.state.clone());
                while next < games.end && in_flight < run.n_workers {
                    spawn(next, Arc::clone(&snapshot));
                    next += 1;
                    in_flight += 1;
                }
                while in_flight > 0 {
                    let delta = rx.recv().expect("a worker is in flight")?;
                    in_flight -= 1;
                    coord.merge(&delta)?;
                    if next < games.end {
                        spawn(next, Arc::new(coord.state.clone()));
                        next += 1;
                        in_flight += 1;
                    }
                }
                Ok(())
            })?;
        }
    }

    let checkpoint_path = if coord.last_saved == Some(coord.merged) {
        checkpoint_path(&run.checkpoint_dir, coord.merged.saturating_sub(1))
    } else {
        coord.save()?
    };
    Ok(TrainReport {
        checkpoint: coord.checkpoint(),
        checkpoint_path,
        records: coord.records,
        mer_series: coord.mer_series,
        elapsed: coord.started.elapsed(),
    })
}
