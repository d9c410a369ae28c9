use std::sync::Arc;

use crate::engine::{Card, CardKind, Color, GameConfig, PlayerZone, TurnState, WorldState};

/// A default-config world at the start of player 0's turn with every card still in the deck;
/// `setup` moves cards from the deck into the zones.
pub fn world_with(setup: impl FnOnce(&mut Vec<Card>, &mut [PlayerZone; 2])) -> WorldState {
    let config = Arc::new(GameConfig::default());
    let mut deck = config.build_deck();
    let mut zones = [PlayerZone::default(), PlayerZone::default()];
    setup(&mut deck, &mut zones);
    WorldState {
        config,
        seed: 0,
        deck,
        zones,
        discard: vec![],
        turn: TurnState { turn_idx: 0, streak_idx: 0, active_player: 0, response_ctx: None, last_response: None },
        outcome: None,
    }
}

pub fn take(deck: &mut Vec<Card>, kind: CardKind, value: Option<u32>) -> Card {
    let pos =
        deck.iter().position(|c| c.kind == kind && value.is_none_or(|v| v == c.value)).expect("card left in deck");
    deck.remove(pos)
}

/// Moves a property of `color` from the deck onto the zone's table.
pub fn own(deck: &mut Vec<Card>, zone: &mut PlayerZone, color: Color) -> Card {
    let card = take(deck, CardKind::Property { color }, None);
    let target = zone.placement(color, &GameConfig::default());
    zone.place_property(card, target);
    card
}
