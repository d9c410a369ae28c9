use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matching::{regret_match_dense, ActionPolicy};
use super::tables::{DecisionRecord, LearnerState, UpdateDelta};
use super::CfrError;
use crate::abstraction::{infoset_key, AbstractAction, AbstractState, ActionMask, Analysis, InfoSetKey};
use crate::engine::{new_game, ConcreteAction, WorldState};

/// Which of the learner's policies to read at an info set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyKind {
    /// Regret-matched from the accumulated regrets.
    Current,
    /// Mean of the player's policy buffer.
    Average,
}

#[derive(Default)]
struct CacheEntry {
    key: Option<InfoSetKey>,
    current: Option<ActionPolicy>,
    average: Option<ActionPolicy>,
}

/// Memoizes info-set keys and policies by (player, available actions, streak index) so that
/// simulations never hash inside their inner loop. Entries must be invalidated whenever the
/// learner state they were read from changes for that info set.
#[derive(Default)]
pub struct PolicyCache {
    entries: HashMap<(usize, ActionMask, u32), CacheEntry>,
}

impl PolicyCache {
    pub fn key(&mut self, player: usize, mask: ActionMask, streak_idx: u32) -> &InfoSetKey {
        let entry = self.entries.entry((player, mask, streak_idx)).or_default();
        entry.key.get_or_insert_with(|| infoset_key(player, &AbstractState::from_mask(mask, streak_idx)))
    }

    pub fn policy(
        &mut self,
        state: &LearnerState,
        kind: PolicyKind,
        player: usize,
        mask: ActionMask,
        streak_idx: u32,
    ) -> ActionPolicy {
        let entry = self.entries.entry((player, mask, streak_idx)).or_default();
        let key = entry.key.get_or_insert_with(|| infoset_key(player, &AbstractState::from_mask(mask, streak_idx)));
        match kind {
            PolicyKind::Current => *entry.current.get_or_insert_with(|| state.current_policy(key, mask)),
            PolicyKind::Average => *entry.average.get_or_insert_with(|| state.average_policy(player, key, mask)),
        }
    }

    pub fn invalidate(&mut self, player: usize, mask: ActionMask, streak_idx: u32) {
        if let Some(entry) = self.entries.get_mut(&(player, mask, streak_idx)) {
            entry.current = None;
            entry.average = None;
        }
    }
}

/// Plays `world` to the end: `target` follows its current policy with exploration, the other
/// player its average policy. Returns the target's utility.
fn playout<R: Rng + ?Sized>(
    world: &mut WorldState,
    target: usize,
    state: &LearnerState,
    cache: &mut PolicyCache,
    rng: &mut R,
) -> f64 {
    while let Some(analysis) = Analysis::of_world(world) {
        let player = analysis.player;
        let (kind, epsilon) =
            if player == target { (PolicyKind::Current, state.config.epsilon) } else { (PolicyKind::Average, 0.0) };
        let policy = cache.policy(state, kind, player, analysis.mask, analysis.streak_idx);
        let action = analysis.resolve(policy.sample(epsilon, rng)).expect("sampled from the available actions");
        world.step(&action).expect("resolved actions are legal");
    }
    f64::from(world.utility(target).expect("played to the end"))
}

fn rollout_mean<R: Rng + ?Sized>(
    world: &WorldState,
    target: usize,
    forced: &ConcreteAction,
    sims: u32,
    state: &LearnerState,
    cache: &mut PolicyCache,
    rng: &mut R,
) -> Result<f64, CfrError> {
    let after = world.apply_action(forced)?;
    if after.is_terminal() {
        return Ok(f64::from(after.utility(target)?));
    }
    let mut total = 0.0;
    for _ in 0..sims {
        let mut sim = after.clone();
        // Undealt cards are hidden from both players; each simulation redraws their order.
        sim.deck.shuffle(rng);
        total += playout(&mut sim, target, state, cache, rng);
    }
    Ok(total / f64::from(sims))
}

/// Unweighted mean utility for `target` over `sims` full games that start with `forced`.
pub fn rollout_value<R: Rng + ?Sized>(
    world: &WorldState,
    target: usize,
    forced: &ConcreteAction,
    sims: u32,
    state: &LearnerState,
    rng: &mut R,
) -> Result<f64, CfrError> {
    if sims < 1 {
        return Err(CfrError::Config("sims_per_action must be at least 1".into()));
    }
    if world.to_act() != Some(target) {
        return Err(CfrError::NotTargetsDecision);
    }
    rollout_mean(world, target, forced, sims, state, &mut PolicyCache::default(), rng)
}

/// Rng driving the self-play trajectory and simulations of one game. Kept on a separate stream
/// from the deal shuffle, which uses the same seed.
pub fn game_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Plays one self-play game from `seed` against a private copy of `snapshot` and returns the
/// per-decision updates. Each update is also applied to the private copy as soon as it is made,
/// so later decisions in the same game see it; merging the returned delta into `snapshot`
/// reproduces that copy exactly.
pub fn cfr_game_update(snapshot: &LearnerState, game_idx: u64, seed: u64) -> Result<UpdateDelta, CfrError> {
    let mut local = snapshot.clone();
    let epsilon = local.config.epsilon;
    let sims = local.config.sims_per_action;
    let mut world = new_game(local.config.game.clone(), seed)?;
    let mut rng = game_rng(seed);
    let mut cache = PolicyCache::default();
    // reach[p]: product of the other player's sampling probabilities along the trajectory.
    let mut reach = [1.0f64; 2];
    let mut records = Vec::new();

    while let Some(analysis) = Analysis::of_world(&world) {
        let (player, mask, streak) = (analysis.player, analysis.mask, analysis.streak_idx);
        let key = cache.key(player, mask, streak).clone();
        let sigma = cache.policy(&local, PolicyKind::Current, player, mask, streak);
        let actions: Vec<AbstractAction> = mask.iter().collect();

        // A lone action has regret exactly zero, so its value need not be estimated.
        let values = if actions.len() == 1 {
            vec![0.0]
        } else {
            actions
                .iter()
                .map(|a| rollout_mean(&world, player, &analysis.resolve(*a)?, sims, &local, &mut cache, &mut rng))
                .collect::<Result<Vec<_>, _>>()?
        };
        let baseline: f64 = actions.iter().zip(&values).map(|(a, v)| sigma.prob(*a) * v).sum();
        let regrets: Vec<(u8, f64)> =
            actions.iter().zip(&values).map(|(a, v)| (a.index() as u8, v - baseline)).collect();

        let mut sums = local.regrets.sums(&key);
        for (a, r) in &regrets {
            sums[usize::from(*a)] += r;
        }
        let updated = regret_match_dense(mask, &sums);
        let record = DecisionRecord { player, key, regrets, policy: updated.probs, reach: reach[player] };
        local.apply(&record);
        cache.invalidate(player, mask, streak);
        records.push(record);

        let chosen = updated.sample(epsilon, &mut rng);
        reach[1 - player] *= updated.behaviour_prob(chosen, epsilon);
        world.step(&analysis.resolve(chosen)?)?;
    }

    Ok(UpdateDelta { game_idx, seed, records, outcome: world.outcome, turns: world.turn.turn_idx })
}
