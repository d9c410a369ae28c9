//! Fixed baseline opponents. Both pick an abstract action and let the greedy resolver choose the
//! concrete move.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{abstract_state, AbstractAction, AbstractionError, ActionMask};
use crate::cfr::ActionPolicy;
use crate::engine::InfoView;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskAwareParams {
    pub aggressiveness: f64,
    pub temperature: f64,
}

impl Default for RiskAwareParams {
    fn default() -> Self {
        RiskAwareParams { aggressiveness: 0.5, temperature: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SelectorError {
    #[error("aggressiveness must lie in [0, 1], got {0}")]
    Aggressiveness(f64),
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
}

impl RiskAwareParams {
    pub fn validate(&self) -> Result<(), SelectorError> {
        if !(0.0..=1.0).contains(&self.aggressiveness) {
            return Err(SelectorError::Aggressiveness(self.aggressiveness));
        }
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(SelectorError::Temperature(self.temperature));
        }
        Ok(())
    }

    /// Property-advancing intents score `aggressiveness`, cash and defensive intents score its
    /// complement, everything else the smaller of the two.
    pub fn score(&self, action: AbstractAction) -> f64 {
        let a = self.aggressiveness;
        match action {
            AbstractAction::StartNewPropertySet
            | AbstractAction::AddToPropertySet
            | AbstractAction::CompletePropertySet
            | AbstractAction::AttemptCollectRent => a,
            AbstractAction::Cash | AbstractAction::GiveOpponentCash | AbstractAction::JustSayNo => 1.0 - a,
            _ => a.min(1.0 - a),
        }
    }

    /// Softmax of score / temperature over the available actions.
    pub fn distribution(&self, mask: ActionMask) -> ActionPolicy {
        let logits: Vec<(AbstractAction, f64)> = mask.iter().map(|a| (a, self.score(a) / self.temperature)).collect();
        let max = logits.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logits.iter().map(|(_, l)| (l - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut probs = [0.0; AbstractAction::COUNT];
        for ((a, _), w) in logits.iter().zip(&weights) {
            probs[a.index()] = w / total;
        }
        ActionPolicy { mask, probs }
    }
}

/// A named baseline policy over abstract actions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Baseline {
    Random,
    RiskAware(RiskAwareParams),
}

impl Baseline {
    pub fn name(&self) -> &'static str {
        match self {
            Baseline::Random => "RandomSelector",
            Baseline::RiskAware(_) => "RiskAwareSelector",
        }
    }

    pub fn distribution(&self, mask: ActionMask) -> ActionPolicy {
        match self {
            Baseline::Random => ActionPolicy::uniform(mask),
            Baseline::RiskAware(params) => params.distribution(mask),
        }
    }

    pub fn select_from<R: Rng + ?Sized>(&self, mask: ActionMask, rng: &mut R) -> AbstractAction {
        self.distribution(mask).sample(0.0, rng)
    }
}

/// Uniform over the available abstract actions.
pub fn random_select<R: Rng + ?Sized>(view: &InfoView, rng: &mut R) -> Result<AbstractAction, SelectorError> {
    let mask = abstract_state(view)?.mask();
    Ok(Baseline::Random.select_from(mask, rng))
}

pub fn risk_aware_select<R: Rng + ?Sized>(
    view: &InfoView,
    params: RiskAwareParams,
    rng: &mut R,
) -> Result<AbstractAction, SelectorError> {
    params.validate()?;
    let mask = abstract_state(view)?.mask();
    Ok(Baseline::RiskAware(params).select_from(mask, rng))
}
