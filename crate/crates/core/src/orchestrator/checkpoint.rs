use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::OrchestratorError;
use crate::abstraction::{AbstractAction, ABSTRACTION_CLS, RESOLVER_CLS};
use crate::cfr::{LearnerConfig, LearnerState, PolicyBuffer, ReachCounter, RegretTable};
use crate::engine::GameConfig;

/// Identifies the code that produced a checkpoint.
pub const CODE_REVISION: &str = concat!("mdeal-core ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMetadata {
    pub primary_seed: u64,
    /// Index of the last game merged; `None` for an untrained learner.
    pub game_idx: Option<u64>,
    pub code_revision: String,
}

/// The complete learner state plus the configuration it was trained under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub game_config: Arc<GameConfig>,
    pub abstraction_cls: String,
    pub resolver_cls: String,
    pub sims_per_action: u32,
    pub epsilon: f64,
    pub policy_manager: PolicyBuffer,
    pub regret_manager: RegretTable,
    pub cf_reach_prob_counter: ReachCounter,
    pub metadata: CheckpointMetadata,
}

fn schema(field: &str, message: impl Into<String>) -> OrchestratorError {
    OrchestratorError::Checkpoint { field: field.to_string(), message: message.into() }
}

impl Checkpoint {
    pub fn from_state(state: &LearnerState, primary_seed: u64, game_idx: Option<u64>) -> Self {
        Checkpoint {
            game_config: Arc::clone(&state.config.game),
            abstraction_cls: ABSTRACTION_CLS.to_string(),
            resolver_cls: RESOLVER_CLS.to_string(),
            sims_per_action: state.config.sims_per_action,
            epsilon: state.config.epsilon,
            policy_manager: state.policies.clone(),
            regret_manager: state.regrets.clone(),
            cf_reach_prob_counter: state.reach.clone(),
            metadata: CheckpointMetadata { primary_seed, game_idx, code_revision: CODE_REVISION.to_string() },
        }
    }

    pub fn learner_state(&self) -> LearnerState {
        LearnerState {
            config: LearnerConfig {
                sims_per_action: self.sims_per_action,
                epsilon: self.epsilon,
                buffer_size: self.policy_manager.buffer_size,
                game: Arc::clone(&self.game_config),
            },
            regrets: self.regret_manager.clone(),
            policies: self.policy_manager.clone(),
            reach: self.cf_reach_prob_counter.clone(),
        }
    }

    /// Number of games merged into this checkpoint.
    pub fn games_completed(&self) -> u64 {
        self.metadata.game_idx.map_or(0, |g| g + 1)
    }

    /// Pretty-printed JSON with object keys sorted, so equal checkpoints serialize to equal bytes.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("checkpoints always serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("json values always serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, OrchestratorError> {
        let checkpoint: Checkpoint = serde_json::from_str(text).map_err(|e| schema("<document>", e.to_string()))?;
        checkpoint.validate()?;
        Ok(checkpoint)
    }

    pub fn validate(&self) -> Result<(), OrchestratorError> {
        if self.abstraction_cls != ABSTRACTION_CLS {
            return Err(schema("abstraction_cls", format!("unknown abstraction `{}`", self.abstraction_cls)));
        }
        if self.resolver_cls != RESOLVER_CLS {
            return Err(schema("resolver_cls", format!("unknown resolver `{}`", self.resolver_cls)));
        }
        self.game_config.validate().map_err(|e| schema("game_config", e.to_string()))?;
        if self.sims_per_action < 1 {
            return Err(schema("sims_per_action", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(schema("epsilon", "must lie in [0, 1]"));
        }
        let pm = &self.policy_manager;
        if pm.buffer_size < 1 {
            return Err(schema("policy_manager.buffer_size", "must be at least 1"));
        }
        if pm.player_buffers.len() != 2 {
            return Err(schema("policy_manager.player_buffers", "expected one buffer per player"));
        }
        for (p, buffer) in pm.player_buffers.iter().enumerate() {
            if buffer.buffer_size != pm.buffer_size {
                return Err(schema(
                    "policy_manager.player_buffers.buffer_size",
                    format!("player {p} disagrees with policy_manager.buffer_size"),
                ));
            }
            for (key, fifo) in &buffer.buffer {
                if fifo.len() > pm.buffer_size {
                    return Err(schema(
                        "policy_manager.player_buffers.buffer",
                        format!("{key} holds more than buffer_size vectors"),
                    ));
                }
                for vector in fifo {
                    let total: f64 = vector.iter().sum();
                    if vector.iter().any(|p| *p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > 1e-9 {
                        return Err(schema(
                            "policy_manager.player_buffers.buffer",
                            format!("{key} holds a vector that is not a distribution"),
                        ));
                    }
                }
            }
        }
        for (key, entries) in &self.regret_manager.0 {
            for (action, entry) in entries {
                if usize::from(*action) >= AbstractAction::COUNT {
                    return Err(schema(
                        "regret_manager",
                        format!("{key} has action index {action} outside the vocabulary"),
                    ));
                }
                if entry.n < 1 {
                    return Err(schema("regret_manager", format!("{key} has an entry with no visits")));
                }
            }
        }
        if let Some((key, _)) = self.cf_reach_prob_counter.0.iter().find(|(_, m)| m.is_nan() || **m < 0.0) {
            return Err(schema("cf_reach_prob_counter", format!("{key} has negative reach mass")));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), OrchestratorError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| OrchestratorError::io(dir, e))?;
        }
        // Write-then-rename so a crash never leaves a truncated checkpoint behind.
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()).map_err(|e| OrchestratorError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| OrchestratorError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, OrchestratorError> {
        let text = fs::read_to_string(path).map_err(|e| OrchestratorError::io(path, e))?;
        Checkpoint::from_json(&text)
    }
}

pub fn checkpoint_path(dir: &Path, game_idx: u64) -> PathBuf {
    dir.join(format!("checkpoint_{game_idx}.json"))
}

/// The `checkpoint_{game_idx}.json` file with the highest index in `dir`, if any.
pub fn latest_checkpoint(dir: &Path) -> Result<Option<(u64, PathBuf)>, OrchestratorError> {
    let entries = match fs::read_dir(dir) {
        Ok(entries) => entries,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(OrchestratorError::io(dir, e)),
    };
    let mut best: Option<(u64, PathBuf)> = None;
    for entry in entries {
        let entry = entry.map_err(|e| OrchestratorError::io(dir, e))?;
        let name = entry.file_name();
        let Some(idx) = name
            .to_str()
            .and_then(|n| n.strip_prefix("checkpoint_"))
            .and_then(|n| n.strip_suffix(".json"))
            .and_then(|n| n.parse::<u64>().ok())
        else {
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| idx > *b) {
            best = Some((idx, entry.path()));
        }
    }
    Ok(best)
}
