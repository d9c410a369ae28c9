use rand::Rng;

use super::CfrError;
use crate::abstraction::{AbstractAction, ActionMask};

/// A distribution over the abstract-action vocabulary, stored densely by action index.
/// Entries outside `mask` are zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionPolicy {
    pub mask: ActionMask,
    pub probs: [f64; AbstractAction::COUNT],
}

impl ActionPolicy {
    pub fn uniform(mask: ActionMask) -> Self {
        let mut probs = [0.0; AbstractAction::COUNT];
        let p = 1.0 / mask.len() as f64;
        for a in mask.iter() {
            probs[a.index()] = p;
        }
        ActionPolicy { mask, probs }
    }

    pub fn prob(&self, action: AbstractAction) -> f64 {
        self.probs[action.index()]
    }

    /// Probability that [`ActionPolicy::sample`] returns `action` under exploration rate `epsilon`.
    pub fn behaviour_prob(&self, action: AbstractAction, epsilon: f64) -> f64 {
        if !self.mask.contains(action) {
            return 0.0;
        }
        (1.0 - epsilon) * self.prob(action) + epsilon / self.mask.len() as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, epsilon: f64, rng: &mut R) -> AbstractAction {
        let mut actions = [AbstractAction::Other; AbstractAction::COUNT];
        let mut probs = [0.0; AbstractAction::COUNT];
        let mut len = 0;
        for a in self.mask.iter() {
            actions[len] = a;
            probs[len] = self.probs[a.index()];
            len += 1;
        }
        actions[sample_action(&probs[..len], epsilon, rng)]
    }

    /// Support and probabilities in action-index order.
    pub fn entries(&self) -> impl Iterator<Item = (AbstractAction, f64)> + '_ {
        self.mask.iter().map(|a| (a, self.probs[a.index()]))
    }
}

/// Regret matching with progress clamping. Non-card actions lose their positive regret while any
/// card action other than a suppressed one has positive regret; suppressed actions lose theirs
/// while any other action has positive regret. Falls back to uniform when nothing positive remains.
pub fn regret_match(regrets: &[(AbstractAction, f64)]) -> Result<Vec<f64>, CfrError> {
    if regrets.is_empty() {
        return Err(CfrError::NoActions);
    }
    let card_positive = regrets.iter().any(|(a, r)| a.is_card_action() && !a.is_suppressed() && *r > 0.0);
    let positive: Vec<f64> = regrets
        .iter()
        .enumerate()
        .map(|(i, (a, r))| {
            let other_positive = regrets.iter().enumerate().any(|(j, (_, s))| j != i && *s > 0.0);
            let clamp = (card_positive && !a.is_card_action()) || (a.is_suppressed() && other_positive);
            if clamp { r.min(0.0) } else { *r }.max(0.0)
        })
        .collect();
    let total: f64 = positive.iter().sum();
    Ok(if total > 0.0 {
        positive.iter().map(|p| p / total).collect()
    } else {
        vec![1.0 / regrets.len() as f64; regrets.len()]
    })
}

/// Regret matching over the actions in `mask`, reading accumulated regret by action index.
pub fn regret_match_dense(mask: ActionMask, sums: &[f64; AbstractAction::COUNT]) -> ActionPolicy {
    let pairs: Vec<_> = mask.iter().map(|a| (a, sums[a.index()])).collect();
    let probs = regret_match(&pairs).expect("masks of decision points are never empty");
    let mut dense = [0.0; AbstractAction::COUNT];
    for ((a, _), p) in pairs.iter().zip(probs) {
        dense[a.index()] = p;
    }
    ActionPolicy { mask, probs: dense }
}

/// With probability `epsilon` picks uniformly, otherwise samples from `policy`. A single-entry
/// policy consumes no randomness.
pub fn sample_action<R: Rng + ?Sized>(policy: &[f64], epsilon: f64, rng: &mut R) -> usize {
    match policy.len() {
        0 => panic!("cannot sample from an empty policy"),
        1 => return 0,
        _ => {}
    }
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return rng.random_range(0..policy.len());
    }
    let mut u = rng.random::<f64>() * policy.iter().sum::<f64>();
    for (i, p) in policy.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    // Rounding can leave u marginally above the last bucket.
    policy.iter().rposition(|p| *p > 0.0).unwrap_or(policy.len() - 1)
}
