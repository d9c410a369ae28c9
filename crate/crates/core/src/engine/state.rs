use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cards::{Card, CardId, CardKind, Color};
use super::config::GameConfig;

/// Where a played property lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SetTarget {
    New,
    Existing { set: usize },
}

/// A fully specified move. Variant order is the canonical ordering of legal action lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConcreteAction {
    PlayProperty { card: CardId, target: SetTarget },
    PlayCash { card: CardId },
    PlayRent { card: CardId },
    PlayJustSayNo { card: CardId },
    PayCash { card: CardId },
    PayProperty { card: CardId },
    Yield,
    Pass,
}

impl ConcreteAction {
    pub fn card(&self) -> Option<CardId> {
        match *self {
            ConcreteAction::PlayProperty { card, .. }
            | ConcreteAction::PlayCash { card }
            | ConcreteAction::PlayRent { card }
            | ConcreteAction::PlayJustSayNo { card }
            | ConcreteAction::PayCash { card }
            | ConcreteAction::PayProperty { card } => Some(card),
            ConcreteAction::Yield | ConcreteAction::Pass => None,
        }
    }

    pub fn is_payment(&self) -> bool {
        matches!(self, ConcreteAction::PayCash { .. } | ConcreteAction::PayProperty { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertySet {
    pub color: Color,
    pub cards: Vec<Card>,
}

impl PropertySet {
    pub fn is_complete(&self, config: &GameConfig) -> bool {
        self.cards.len() as u32 >= config.property_set_size[self.color]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerZone {
    pub hand: Vec<Card>,
    pub cash_pile: Vec<Card>,
    pub property_sets: Vec<PropertySet>,
}

impl PlayerZone {
    /// Properties of `color` across every set this player owns.
    pub fn owned_count(&self, color: Color) -> u32 {
        self.property_sets.iter().filter(|s| s.color == color).map(|s| s.cards.len() as u32).sum()
    }

    pub fn property_count(&self) -> u32 {
        self.property_sets.iter().map(|s| s.cards.len() as u32).sum()
    }

    pub fn complete_sets(&self, config: &GameConfig) -> u32 {
        self.property_sets.iter().filter(|s| s.is_complete(config)).count() as u32
    }

    pub fn cash_total(&self) -> u32 {
        self.cash_pile.iter().map(|c| c.value).sum()
    }

    pub fn properties(&self) -> impl Iterator<Item = &Card> {
        self.property_sets.iter().flat_map(|s| s.cards.iter())
    }

    /// The set a newly acquired property of `color` joins: the fullest incomplete set of that
    /// color (lowest index on ties), or a new set when none is incomplete.
    pub fn placement(&self, color: Color, config: &GameConfig) -> SetTarget {
        let mut best: Option<(usize, usize)> = None;
        for (idx, set) in self.property_sets.iter().enumerate() {
            if set.color != color || set.is_complete(config) {
                continue;
            }
            if best.is_none_or(|(_, len)| set.cards.len() > len) {
                best = Some((idx, set.cards.len()));
            }
        }
        match best {
            Some((set, _)) => SetTarget::Existing { set },
            None => SetTarget::New,
        }
    }

    /// Whether this player has anything other than Pass to do in their own turn.
    pub fn has_main_play(&self) -> bool {
        self.hand.iter().any(|card| match card.kind {
            CardKind::Property { .. } | CardKind::Cash => true,
            CardKind::Rent { color } => self.owned_count(color) > 0,
            CardKind::JustSayNo => false,
        })
    }

    pub(crate) fn take_from_hand(&mut self, id: CardId) -> Option<Card> {
        let pos = self.hand.iter().position(|c| c.id == id)?;
        Some(self.hand.remove(pos))
    }

    pub(crate) fn take_from_cash(&mut self, id: CardId) -> Option<Card> {
        let pos = self.cash_pile.iter().position(|c| c.id == id)?;
        Some(self.cash_pile.remove(pos))
    }

    pub(crate) fn take_property(&mut self, id: CardId) -> Option<Card> {
        for idx in 0..self.property_sets.len() {
            if let Some(pos) = self.property_sets[idx].cards.iter().position(|c| c.id == id) {
                let card = self.property_sets[idx].cards.remove(pos);
                if self.property_sets[idx].cards.is_empty() {
                    self.property_sets.remove(idx);
                }
                return Some(card);
            }
        }
        None
    }

    pub(crate) fn place_property(&mut self, card: Card, target: SetTarget) {
        let color = card.color().expect("only properties are placed into sets");
        match target {
            SetTarget::Existing { set } => self.property_sets[set].cards.push(card),
            SetTarget::New => self.property_sets.push(PropertySet { color, cards: vec![card] }),
        }
    }
}

/// Public summary of the initiator at the moment a response phase opened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitiatorSnapshot {
    pub cash_total: u32,
    pub property_count: u32,
    pub complete_sets: u32,
}

/// An open (or just resolved) bounded response phase triggered by a rent play.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseContext {
    pub initiating_action: ConcreteAction,
    pub initiator: usize,
    pub pre_response_snapshot: InitiatorSnapshot,
    pub owed: u32,
    pub paid_so_far: u32,
    /// Every entry was taken by the responder, `1 - initiator`.
    pub response_actions: Vec<ConcreteAction>,
    pub cancelled: bool,
}

impl ResponseContext {
    pub fn responder(&self) -> usize {
        1 - self.initiator
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnState {
    pub turn_idx: u32,
    pub streak_idx: u32,
    pub active_player: usize,
    pub response_ctx: Option<ResponseContext>,
    /// The most recently closed response phase, kept for display and inspection.
    pub last_response: Option<ResponseContext>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Win { player: usize },
    Draw,
}

/// Complete hidden-information game state. The deck is drawn from its end.
///
/// All chance is resolved by the seeded shuffle in `new_game`, so `seed` is the only
/// generator state the engine ever needs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub config: Arc<GameConfig>,
    pub seed: u64,
    pub deck: Vec<Card>,
    pub zones: [PlayerZone; 2],
    pub discard: Vec<Card>,
    pub turn: TurnState,
    pub outcome: Option<Outcome>,
}

impl WorldState {
    /// The player whose decision it is: the responder during a response phase, otherwise the
    /// player whose streak it is. `None` once the game is over.
    pub fn to_act(&self) -> Option<usize> {
        if self.outcome.is_some() {
            return None;
        }
        Some(match &self.turn.response_ctx {
            Some(ctx) => ctx.responder(),
            None => self.turn.active_player,
        })
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_some()
    }

    /// Every card in every zone, sorted by id.
    pub fn all_cards(&self) -> Vec<Card> {
        let mut cards: Vec<Card> = self.deck.iter().chain(&self.discard).copied().collect();
        for zone in &self.zones {
            cards.extend(zone.hand.iter().chain(&zone.cash_pile).copied());
            cards.extend(zone.properties().copied());
        }
        cards.sort_by_key(|c| c.id);
        cards
    }
}
