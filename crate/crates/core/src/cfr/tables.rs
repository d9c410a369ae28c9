use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::matching::{regret_match_dense, ActionPolicy};
use super::CfrError;
use crate::abstraction::{AbstractAction, ActionMask, InfoSetKey};
use crate::engine::{GameConfig, Outcome};

/// A dense probability vector indexed by abstract-action index.
pub type PolicyVector = [f64; AbstractAction::COUNT];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretEntry {
    pub sum: f64,
    pub n: u64,
}

/// Accumulated regret per info set and abstract-action index.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegretTable(pub BTreeMap<InfoSetKey, BTreeMap<u8, RegretEntry>>);

impl RegretTable {
    pub fn add(&mut self, key: &InfoSetKey, action: u8, regret: f64) {
        let entry = self.0.entry(key.clone()).or_default().entry(action).or_insert(RegretEntry { sum: 0.0, n: 0 });
        entry.sum += regret;
        entry.n += 1;
    }

    /// Accumulated regret by action index; absent entries read as zero.
    pub fn sums(&self, key: &InfoSetKey) -> PolicyVector {
        let mut sums = [0.0; AbstractAction::COUNT];
        if let Some(entries) = self.0.get(key) {
            for (a, e) in entries {
                sums[usize::from(*a)] = e.sum;
            }
        }
        sums
    }

    /// The regret-matched current policy over `mask`; uniform for unseen keys.
    pub fn current_policy(&self, key: &InfoSetKey, mask: ActionMask) -> ActionPolicy {
        regret_match_dense(mask, &self.sums(key))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerBuffer {
    pub buffer: BTreeMap<InfoSetKey, VecDeque<PolicyVector>>,
    pub buffer_size: usize,
}

/// Per-player FIFO of recent current policies plus per-key update counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBuffer {
    pub buffer_size: usize,
    pub update_count: BTreeMap<InfoSetKey, u64>,
    pub player_buffers: Vec<PlayerBuffer>,
}

impl PolicyBuffer {
    pub fn new(buffer_size: usize) -> Self {
        PolicyBuffer {
            buffer_size,
            update_count: BTreeMap::new(),
            player_buffers: (0..2).map(|_| PlayerBuffer { buffer: BTreeMap::new(), buffer_size }).collect(),
        }
    }

    pub fn push(&mut self, player: usize, key: &InfoSetKey, policy: PolicyVector) {
        let fifo = self.player_buffers[player].buffer.entry(key.clone()).or_default();
        fifo.push_back(policy);
        while fifo.len() > self.buffer_size {
            fifo.pop_front();
        }
        *self.update_count.entry(key.clone()).or_insert(0) += 1;
    }

    /// Uniform mean of the stored vectors; uniform over `mask` when nothing is stored.
    pub fn average_policy(&self, player: usize, key: &InfoSetKey, mask: ActionMask) -> ActionPolicy {
        let stored = self.player_buffers.get(player).and_then(|b| b.buffer.get(key)).filter(|f| !f.is_empty());
        let Some(fifo) = stored else {
            return ActionPolicy::uniform(mask);
        };
        let mut probs = [0.0; AbstractAction::COUNT];
        for vector in fifo {
            for (p, v) in probs.iter_mut().zip(vector) {
                *p += v;
            }
        }
        for p in &mut probs {
            *p /= fifo.len() as f64;
        }
        ActionPolicy { mask, probs }
    }

    pub fn update_count(&self, key: &InfoSetKey) -> u64 {
        self.update_count.get(key).copied().unwrap_or(0)
    }
}

/// Accumulated counterfactual reach mass per info set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReachCounter(pub BTreeMap<InfoSetKey, f64>);

impl ReachCounter {
    pub fn add(&mut self, key: &InfoSetKey, mass: f64) {
        *self.0.entry(key.clone()).or_insert(0.0) += mass;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub sims_per_action: u32,
    pub epsilon: f64,
    pub buffer_size: usize,
    pub game: Arc<GameConfig>,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig { sims_per_action: 20, epsilon: 0.1, buffer_size: 10, game: Arc::new(GameConfig::default()) }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), CfrError> {
        if self.sims_per_action < 1 {
            return Err(CfrError::Config("sims_per_action must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(CfrError::Config("epsilon must lie in [0, 1]".into()));
        }
        if self.buffer_size < 1 {
            return Err(CfrError::Config("buffer_size must be at least 1".into()));
        }
        self.game.validate().map_err(|e| CfrError::Config(e.to_string()))
    }
}

/// Everything the learner accumulates. Both players share the regret table; policy buffers are
/// kept per player.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerState {
    pub config: LearnerConfig,
    pub regrets: RegretTable,
    pub policies: PolicyBuffer,
    pub reach: ReachCounter,
}

impl LearnerState {
    pub fn new(config: LearnerConfig) -> Self {
        let policies = PolicyBuffer::new(config.buffer_size);
        LearnerState { config, regrets: RegretTable::default(), policies, reach: ReachCounter::default() }
    }

    pub fn current_policy(&self, key: &InfoSetKey, mask: ActionMask) -> ActionPolicy {
        self.regrets.current_policy(key, mask)
    }

    pub fn average_policy(&self, player: usize, key: &InfoSetKey, mask: ActionMask) -> ActionPolicy {
        self.policies.average_policy(player, key, mask)
    }

    /// Distinct info sets the learner has updated.
    pub fn infoset_count(&self) -> usize {
        self.policies.update_count.len()
    }

    pub fn apply(&mut self, record: &DecisionRecord) {
        for (a, r) in &record.regrets {
            self.regrets.add(&record.key, *a, *r);
        }
        self.policies.push(record.player, &record.key, record.policy);
        self.reach.add(&record.key, record.reach);
    }

    /// Applies every record of `delta` in order. The whole delta is rejected before any change if
    /// it names an action index outside the vocabulary or a player other than 0 and 1.
    pub fn merge_delta(&mut self, delta: &UpdateDelta) -> Result<(), CfrError> {
        for record in &delta.records {
            if record.player > 1 {
                return Err(CfrError::MalformedDelta(format!("player index {}", record.player)));
            }
            if let Some((a, _)) = record.regrets.iter().find(|(a, _)| usize::from(*a) >= AbstractAction::COUNT) {
                return Err(CfrError::MalformedDelta(format!("action index {a}")));
            }
        }
        for record in &delta.records {
            self.apply(record);
        }
        Ok(())
    }

    pub fn max_expected_regret(&self) -> Option<f64> {
        max_expected_regret(&self.regrets, &self.reach)
    }
}

/// One decision-point update: regrets for each available action index, the recomputed current
/// policy and the reach mass at the decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub player: usize,
    pub key: InfoSetKey,
    pub regrets: Vec<(u8, f64)>,
    pub policy: PolicyVector,
    pub reach: f64,
}

/// Everything one self-play game contributes, in decision order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateDelta {
    pub game_idx: u64,
    pub seed: u64,
    pub records: Vec<DecisionRecord>,
    pub outcome: Option<Outcome>,
    pub turns: u32,
}

/// How the per-action regret of an info set is read when computing MER.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegretStatistic {
    /// Accumulated regret divided by the number of updates: the average instantaneous regret.
    Mean,
    /// Accumulated regret as stored.
    Sum,
}

/// Reach-weighted mean over info sets of the largest per-action regret, with regret read as the
/// per-update average. Keys missing from either table are skipped; `None` when no positive reach
/// mass remains.
pub fn max_expected_regret(regrets: &RegretTable, reach: &ReachCounter) -> Option<f64> {
    max_expected_regret_with(regrets, reach, RegretStatistic::Mean)
}

pub fn max_expected_regret_with(regrets: &RegretTable, reach: &ReachCounter, stat: RegretStatistic) -> Option<f64> {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for (key, entries) in &regrets.0 {
        let Some(&mass) = reach.0.get(key) else { continue };
        let value = |e: &RegretEntry| match stat {
            RegretStatistic::Mean => e.sum / e.n.max(1) as f64,
            RegretStatistic::Sum => e.sum,
        };
        let Some(max) = entries.values().map(value).reduce(f64::max) else { continue };
        weighted += max * mass;
        total += mass;
    }
    (total > 0.0).then(|| weighted / total)
}
