use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::seed::game_seed;
use crate::abstraction::Analysis;
use crate::cfr::{LearnerState, PolicyCache, PolicyKind};
use crate::engine::{new_game, EngineError, Outcome};
use crate::selectors::Baseline;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartMode {
    /// The agent is always player 0.
    AgentFirst,
    /// The agent is player 0 in even-numbered games and player 1 in odd-numbered ones.
    Alternating,
}

impl StartMode {
    pub fn agent_seat(self, game: u64) -> usize {
        match self {
            StartMode::AgentFirst => 0,
            StartMode::Alternating => (game % 2) as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    /// Wins over games played; draws count as non-wins.
    pub win_rate: f64,
}

/// Plays `n_games` between the learner's average policy (no exploration) and `baseline`.
/// Game `i` is dealt from `game_seed(seed, i)`.
pub fn evaluate(
    state: &LearnerState,
    baseline: Baseline,
    start_mode: StartMode,
    n_games: u32,
    seed: u64,
) -> Result<EvalResult, EngineError> {
    let mut cache = PolicyCache::default();
    let mut result = EvalResult::default();
    for game in 0..u64::from(n_games) {
        let deal = game_seed(seed, game);
        let agent = start_mode.agent_seat(game);
        let mut world = new_game(state.config.game.clone(), deal)?;
        let mut rng = ChaCha8Rng::seed_from_u64(deal);
        rng.set_stream(2);
        while let Some(analysis) = Analysis::of_world(&world) {
            let chosen = if analysis.player == agent {
                cache
                    .policy(state, PolicyKind::Average, agent, analysis.mask, analysis.streak_idx)
                    .sample(0.0, &mut rng)
            } else {
                baseline.select_from(analysis.mask, &mut rng)
            };
            world.step(&analysis.resolve(chosen).expect("chosen from the available actions"))?;
        }
        match world.outcome {
            Some(Outcome::Win { player }) if player == agent => result.wins += 1,
            Some(Outcome::Win { .. }) => result.losses += 1,
            _ => result.draws += 1,
        }
    }
    result.win_rate = if n_games == 0 { 0.0 } else { f64::from(result.wins) / f64::from(n_games) };
    Ok(result)
}
