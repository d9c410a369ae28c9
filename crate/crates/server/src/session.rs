use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use mdeal_core::abstraction::{AbstractAction, Analysis, InfoSetKey};
use mdeal_core::cfr::LearnerState;
use mdeal_core::engine::{
    new_game, ConcreteAction, EngineError, GameConfig, InfoView, Outcome, ViewDecision, WorldState,
};
use mdeal_core::orchestrator::game_seed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    Human,
    Agent,
}

/// How the agent turns its policy into a move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentMode {
    /// Sample from the average policy.
    #[default]
    Sample,
    /// Take the most probable intent, lowest action index on ties.
    Argmax,
}

/// What the agent saw and chose at one of its decisions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentStepReport {
    pub action: ConcreteAction,
    pub abstract_action: AbstractAction,
    /// Average policy over the available intents.
    pub policy: BTreeMap<AbstractAction, f64>,
    pub infoset_key: InfoSetKey,
    /// Number of training updates the info set received.
    pub update_count: u64,
    pub mode: AgentMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Position in the log, from 0.
    pub seq: u64,
    pub actor: Actor,
    pub player: usize,
    pub action: ConcreteAction,
    /// Milliseconds since the Unix epoch; non-decreasing along the log.
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentStepReport>,
}

/// Everything needed to deal a session's game. Written once, before any event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub game_id: String,
    pub config: Arc<GameConfig>,
    pub seed: u64,
    /// Whether the client chose the seed. A server-drawn seed determines the hidden deck order,
    /// so it is only disclosed once the game is over.
    pub seed_from_client: bool,
    pub human_player_idx: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub created_ms: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    Active,
    Finished { outcome: Outcome },
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("it is not the human player's turn")]
    NotHumanTurn,
    #[error("it is not the agent's turn")]
    NotAgentTurn,
    #[error("the game is already over")]
    Finished,
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("event {seq} does not replay: {message}")]
    Replay { seq: u64, message: String },
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// A human-vs-agent game. `world` is always `new_game(config, seed)` with `events` applied.
#[derive(Clone, Debug)]
pub struct Session {
    pub meta: SessionMeta,
    pub events: Vec<Event>,
    pub world: WorldState,
}

/// A move that has been checked against the rules but not yet committed.
pub struct Pending {
    pub event: Event,
    world: WorldState,
}

impl Session {
    pub fn new(meta: SessionMeta) -> Result<Self, EngineError> {
        let world = new_game(Arc::clone(&meta.config), meta.seed)?;
        Ok(Session { meta, events: Vec::new(), world })
    }

    /// Rebuilds a session by re-applying its log, checking each event's actor and seat.
    pub fn replay(meta: SessionMeta, events: Vec<Event>) -> Result<Self, SessionError> {
        let mut session = Session::new(meta)?;
        for event in events {
            let bad = |message: String| SessionError::Replay { seq: event.seq, message };
            if event.seq != session.events.len() as u64 {
                return Err(bad(format!("expected sequence number {}", session.events.len())));
            }
            let expected_actor =
                if Some(session.meta.human_player_idx) == session.world.to_act() { Actor::Human } else { Actor::Agent };
            if session.world.to_act() != Some(event.player) || event.actor != expected_actor {
                return Err(bad("recorded actor was not the player to act".into()));
            }
            session.world.step(&event.action).map_err(|e| bad(e.to_string()))?;
            session.events.push(event);
        }
        Ok(session)
    }

    pub fn agent_idx(&self) -> usize {
        1 - self.meta.human_player_idx
    }

    pub fn status(&self) -> Status {
        match self.world.outcome {
            Some(outcome) => Status::Finished { outcome },
            None => Status::Active,
        }
    }

    pub fn human_view(&self) -> InfoView {
        self.world.info_view(self.meta.human_player_idx).expect("human seat is validated at creation")
    }

    /// The seed when it may be shown to the human.
    pub fn disclosed_seed(&self) -> Option<u64> {
        (self.meta.seed_from_client || self.world.is_terminal()).then_some(self.meta.seed)
    }

    fn next_timestamp(&self) -> u64 {
        now_ms().max(self.events.last().map_or(0, |e| e.timestamp_ms))
    }

    fn pending(
        &self,
        actor: Actor,
        action: ConcreteAction,
        agent: Option<AgentStepReport>,
    ) -> Result<Pending, SessionError> {
        let player = self.world.to_act().ok_or(SessionError::Finished)?;
        let world = self.world.apply_action(&action)?;
        let event =
            Event { seq: self.events.len() as u64, actor, player, action, timestamp_ms: self.next_timestamp(), agent };
        Ok(Pending { event, world })
    }

    pub fn plan_human(&self, action: ConcreteAction) -> Result<Pending, SessionError> {
        match self.world.to_act() {
            None => Err(SessionError::Finished),
            Some(p) if p != self.meta.human_player_idx => Err(SessionError::NotHumanTurn),
            Some(_) => self.pending(Actor::Human, action, None),
        }
    }

    /// Chooses the agent's move from its own information set only.
    pub fn plan_agent(&self, learner: &LearnerState, mode: AgentMode) -> Result<Pending, SessionError> {
        let agent = self.agent_idx();
        match self.world.to_act() {
            None => return Err(SessionError::Finished),
            Some(p) if p != agent => return Err(SessionError::NotAgentTurn),
            Some(_) => {}
        }
        let view = self.world.info_view(agent)?;
        let decision = ViewDecision::new(&view).expect("the agent is to act");
        let analysis = Analysis::of(&decision.decision());
        let key = analysis.key();
        let policy = learner.average_policy(agent, &key, analysis.mask);
        let chosen = match mode {
            AgentMode::Sample => {
                // Keyed by position in the log so a pinned session seed replays the same choices.
                let mut rng = ChaCha8Rng::seed_from_u64(game_seed(self.meta.seed, self.events.len() as u64));
                rng.set_stream(3);
                policy.sample(0.0, &mut rng)
            }
            AgentMode::Argmax => {
                let mut best = None;
                for (a, p) in policy.entries() {
                    if best.is_none_or(|(_, q)| p > q) {
                        best = Some((a, p));
                    }
                }
                best.expect("a decision always has an available action").0
            }
        };
        let action = analysis.resolve(chosen).expect("sampled from the available actions");
        let report = AgentStepReport {
            action,
            abstract_action: chosen,
            policy: policy.entries().collect(),
            update_count: learner.policies.update_count(&key),
            infoset_key: key,
            mode,
        };
        self.pending(Actor::Agent, action, Some(report))
    }

    pub fn commit(&mut self, pending: Pending) {
        debug_assert_eq!(pending.event.seq, self.events.len() as u64);
        self.events.push(pending.event);
        self.world = pending.world;
    }
}

/// Reconstructs the final state of a game from its deal and log, without the server.
pub fn reconstruct(
    config: Arc<GameConfig>,
    seed: u64,
    actions: impl IntoIterator<Item = ConcreteAction>,
) -> Result<WorldState, EngineError> {
    let mut world = new_game(config, seed)?;
    for action in actions {
        world.step(&action)?;
    }
    Ok(world)
}
