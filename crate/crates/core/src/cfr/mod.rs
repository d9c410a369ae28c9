//! Tabular Monte Carlo CFR with action-based rollouts.
//!
//! At every decision point of a self-play game each available abstract action is valued by the
//! unweighted mean outcome of `sims_per_action` simulated games that start with it. Regrets are
//! measured against the current policy's expected value and accumulated; the regret-matched
//! policy is pushed into a bounded per-player buffer whose mean is the deployable policy.

mod matching;
mod rollout;
mod tables;


use thiserror::Error;

use crate::abstraction::AbstractionError;
use crate::engine::EngineError;

pub use matching::{regret_match, regret_match_dense, sample_action, ActionPolicy};
pub use rollout::{cfr_game_update, game_rng, rollout_value, PolicyCache, PolicyKind};
pub use tables::{
    max_expected_regret, max_expected_regret_with, DecisionRecord, LearnerConfig, LearnerState, PlayerBuffer,
    PolicyBuffer, PolicyVector, ReachCounter, RegretEntry, RegretStatistic, RegretTable, UpdateDelta,
};

#[derive(Debug, Error)]
pub enum CfrError {
    #[error("regret matching needs at least one action")]
    NoActions,
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error("malformed update delta: {0}")]
    MalformedDelta(String),
    #[error("the target player is not the one to act")]
    NotTargetsDecision,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}
