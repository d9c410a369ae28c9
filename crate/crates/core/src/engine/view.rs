use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cards::Card;
use super::config::GameConfig;
use super::rules::Decision;
use super::state::{ConcreteAction, Outcome, PlayerZone, PropertySet, TurnState, WorldState};
use super::EngineError;

/// The publicly visible part of a player's holdings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicZone {
    pub cash_pile: Vec<Card>,
    pub property_sets: Vec<PropertySet>,
}

/// One player's information set: their own hand, both players' public piles and the turn
/// context. Opponent hand contents, opponent hand size and deck order are never included.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfoView {
    pub player_idx: usize,
    pub hand: Vec<Card>,
    pub own: PublicZone,
    pub opponent: PublicZone,
    pub turn: TurnState,
    pub config: Arc<GameConfig>,
    pub deck_size: usize,
    pub to_act: Option<usize>,
    pub outcome: Option<Outcome>,
    /// Empty unless this player is the one to act.
    pub legal_actions: Vec<ConcreteAction>,
}

impl InfoView {
    /// The private zone this view is built from (hand plus own public piles).
    pub fn own_zone(&self) -> PlayerZone {
        PlayerZone {
            hand: self.hand.clone(),
            cash_pile: self.own.cash_pile.clone(),
            property_sets: self.own.property_sets.clone(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }
}

impl WorldState {
    pub fn info_view(&self, player_idx: usize) -> Result<InfoView, EngineError> {
        if player_idx > 1 {
            return Err(EngineError::BadPlayer(player_idx));
        }
        let public = |zone: &PlayerZone| PublicZone {
            cash_pile: zone.cash_pile.clone(),
            property_sets: zone.property_sets.clone(),
        };
        let to_act = self.to_act();
        let legal_actions = match self.decision() {
            Some(decision) if decision.player == player_idx => decision.legal_actions(),
            _ => Vec::new(),
        };
        Ok(InfoView {
            player_idx,
            hand: self.zones[player_idx].hand.clone(),
            own: public(&self.zones[player_idx]),
            opponent: public(&self.zones[1 - player_idx]),
            turn: self.turn.clone(),
            config: Arc::clone(&self.config),
            deck_size: self.deck.len(),
            to_act,
            outcome: self.outcome,
            legal_actions,
        })
    }
}

/// Owned decision data derived from a view, so abstraction code can treat views and world
/// states uniformly.
pub struct ViewDecision {
    zone: PlayerZone,
    view: InfoView,
}

impl ViewDecision {
    /// `None` unless the view's player is the one to act.
    pub fn new(view: &InfoView) -> Option<Self> {
        if view.is_terminal() || view.to_act != Some(view.player_idx) {
            return None;
        }
        Some(ViewDecision { zone: view.own_zone(), view: view.clone() })
    }

    pub fn decision(&self) -> Decision<'_> {
        Decision {
            player: self.view.player_idx,
            config: &self.view.config,
            zone: &self.zone,
            response: self.view.turn.response_ctx.as_ref(),
            streak_idx: self.view.turn.streak_idx,
        }
    }
}
