use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::cards::{Card, CardKind};
use super::config::GameConfig;
use super::state::{ConcreteAction, InitiatorSnapshot, Outcome, PlayerZone, ResponseContext, TurnState, WorldState};
use super::{EngineError, IllegalReason};

/// Everything that determines one player's legal moves: their own zone, the phase and the rules.
#[derive(Clone, Copy, Debug)]
pub struct Decision<'a> {
    pub player: usize,
    pub config: &'a GameConfig,
    pub zone: &'a PlayerZone,
    pub response: Option<&'a ResponseContext>,
    pub streak_idx: u32,
}

impl Decision<'_> {
    /// Legal moves, sorted by action kind then card id.
    pub fn legal_actions(&self) -> Vec<ConcreteAction> {
        let mut actions = Vec::with_capacity(self.zone.hand.len() + 2);
        self.visit_legal(|action, _| actions.push(action));
        actions.sort_unstable();
        actions
    }

    /// Calls `f` once per legal move (unsorted) together with the card it uses.
    pub fn visit_legal(&self, mut f: impl FnMut(ConcreteAction, Option<&Card>)) {
        let zone = self.zone;
        match self.response {
            None => {
                for card in &zone.hand {
                    match card.kind {
                        CardKind::Property { color } => f(
                            ConcreteAction::PlayProperty { card: card.id, target: zone.placement(color, self.config) },
                            Some(card),
                        ),
                        CardKind::Cash => f(ConcreteAction::PlayCash { card: card.id }, Some(card)),
                        CardKind::Rent { color } if zone.owned_count(color) > 0 => {
                            f(ConcreteAction::PlayRent { card: card.id }, Some(card))
                        }
                        CardKind::Rent { .. } | CardKind::JustSayNo => {}
                    }
                }
                f(ConcreteAction::Pass, None);
            }
            Some(ctx) => {
                for card in &zone.cash_pile {
                    f(ConcreteAction::PayCash { card: card.id }, Some(card));
                }
                for card in zone.properties() {
                    f(ConcreteAction::PayProperty { card: card.id }, Some(card));
                }
                if ctx.response_actions.is_empty() {
                    for card in zone.hand.iter().filter(|c| c.kind == CardKind::JustSayNo) {
                        f(ConcreteAction::PlayJustSayNo { card: card.id }, Some(card));
                    }
                }
                if zone.cash_pile.is_empty() && zone.property_sets.is_empty() {
                    f(ConcreteAction::Yield, None);
                }
            }
        }
    }

    /// Checks a single action without enumerating the whole legal list; agrees exactly with
    /// [`Decision::legal_actions`].
    pub fn check(&self, action: &ConcreteAction) -> Result<(), IllegalReason> {
        let zone = self.zone;
        let in_hand = |id| zone.hand.iter().find(|c| c.id == id);
        match (self.response, *action) {
            (None, ConcreteAction::PlayProperty { card, target }) => {
                let card = in_hand(card).ok_or(IllegalReason::CardNotInHand)?;
                let CardKind::Property { color } = card.kind else {
                    return Err(IllegalReason::WrongCardKind);
                };
                if zone.placement(color, self.config) != target {
                    return Err(IllegalReason::WrongSetTarget);
                }
                Ok(())
            }
            (None, ConcreteAction::PlayCash { card }) => match in_hand(card) {
                None => Err(IllegalReason::CardNotInHand),
                Some(c) if c.is_cash() => Ok(()),
                Some(_) => Err(IllegalReason::WrongCardKind),
            },
            (None, ConcreteAction::PlayRent { card }) => match in_hand(card).map(|c| c.kind) {
                None => Err(IllegalReason::CardNotInHand),
                Some(CardKind::Rent { color }) if zone.owned_count(color) > 0 => Ok(()),
                Some(CardKind::Rent { .. }) => Err(IllegalReason::RentColorNotOwned),
                Some(_) => Err(IllegalReason::WrongCardKind),
            },
            (None, ConcreteAction::Pass) => Ok(()),
            (None, _) => Err(IllegalReason::NotInResponsePhase),
            (Some(_), ConcreteAction::PayCash { card }) => {
                if zone.cash_pile.iter().any(|c| c.id == card) {
                    Ok(())
                } else {
                    Err(IllegalReason::CardNotInCashPile)
                }
            }
            (Some(_), ConcreteAction::PayProperty { card }) => {
                if zone.properties().any(|c| c.id == card) {
                    Ok(())
                } else {
                    Err(IllegalReason::PropertyNotOwned)
                }
            }
            (Some(ctx), ConcreteAction::PlayJustSayNo { card }) => match in_hand(card) {
                None => Err(IllegalReason::CardNotInHand),
                Some(c) if c.kind != CardKind::JustSayNo => Err(IllegalReason::WrongCardKind),
                Some(_) if !ctx.response_actions.is_empty() => Err(IllegalReason::JustSayNoAfterPayment),
                Some(_) => Ok(()),
            },
            (Some(_), ConcreteAction::Yield) => {
                if zone.cash_pile.is_empty() && zone.property_sets.is_empty() {
                    Ok(())
                } else {
                    Err(IllegalReason::YieldWithAssets)
                }
            }
            (Some(_), _) => Err(IllegalReason::ResponsePhaseOpen),
        }
    }
}

/// Deals a fresh game. The deck is shuffled from `seed`, both players receive their opening
/// hands and player 0 has already drawn for its first streak.
pub fn new_game(config: impl Into<Arc<GameConfig>>, seed: u64) -> Result<WorldState, EngineError> {
    let config = config.into();
    config.validate()?;
    let mut deck = config.build_deck();
    deck.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut world = WorldState {
        config,
        seed,
        deck,
        zones: [PlayerZone::default(), PlayerZone::default()],
        discard: Vec::new(),
        turn: TurnState { turn_idx: 0, streak_idx: 0, active_player: 0, response_ctx: None, last_response: None },
        outcome: None,
    };
    let hand = world.config.initial_hand_size as usize;
    for player in 0..2 {
        world.draw(player, hand);
    }
    world.draw(0, world.config.new_cards_per_turn as usize);
    Ok(world)
}

impl WorldState {
    /// The decision facing whoever acts next, or `None` when the game is over.
    pub fn decision(&self) -> Option<Decision<'_>> {
        let player = self.to_act()?;
        Some(Decision {
            player,
            config: &self.config,
            zone: &self.zones[player],
            response: self.turn.response_ctx.as_ref(),
            streak_idx: self.turn.streak_idx,
        })
    }

    pub fn legal_actions(&self) -> Result<Vec<ConcreteAction>, EngineError> {
        self.decision().map(|d| d.legal_actions()).ok_or(EngineError::Terminal)
    }

    /// Pure transition: returns the successor state and leaves `self` untouched.
    pub fn apply_action(&self, action: &ConcreteAction) -> Result<WorldState, EngineError> {
        let mut next = self.clone();
        next.step(action)?;
        Ok(next)
    }

    /// In-place transition used by simulations.
    pub fn step(&mut self, action: &ConcreteAction) -> Result<(), EngineError> {
        let decision = self.decision().ok_or(EngineError::Terminal)?;
        decision.check(action).map_err(|reason| EngineError::Illegal { action: *action, reason })?;
        if self.turn.response_ctx.is_some() {
            self.respond(action);
        } else {
            self.play(action);
        }
        Ok(())
    }

    /// +1 for the winner, -1 for the loser, 0 for both on a draw.
    pub fn utility(&self, player: usize) -> Result<i32, EngineError> {
        if player > 1 {
            return Err(EngineError::BadPlayer(player));
        }
        match self.outcome {
            None => Err(EngineError::NotTerminal),
            Some(Outcome::Draw) => Ok(0),
            Some(Outcome::Win { player: w }) => Ok(if w == player { 1 } else { -1 }),
        }
    }

    fn play(&mut self, action: &ConcreteAction) {
        let p = self.turn.active_player;
        match *action {
            ConcreteAction::PlayProperty { card, target } => {
                let card = self.zones[p].take_from_hand(card).expect("checked");
                self.zones[p].place_property(card, target);
                self.check_win(p);
                self.conclude_turn(false);
            }
            ConcreteAction::PlayCash { card } => {
                let card = self.zones[p].take_from_hand(card).expect("checked");
                self.zones[p].cash_pile.push(card);
                self.conclude_turn(false);
            }
            ConcreteAction::PlayRent { card } => {
                let card = self.zones[p].take_from_hand(card).expect("checked");
                let color = card.color().expect("rent cards carry a color");
                let zone = &self.zones[p];
                let owed = self.config.rent_amount(color, zone.owned_count(color)).expect("checked");
                let snapshot = InitiatorSnapshot {
                    cash_total: zone.cash_total(),
                    property_count: zone.property_count(),
                    complete_sets: zone.complete_sets(&self.config),
                };
                self.discard.push(card);
                self.turn.response_ctx = Some(ResponseContext {
                    initiating_action: *action,
                    initiator: p,
                    pre_response_snapshot: snapshot,
                    owed,
                    paid_so_far: 0,
                    response_actions: Vec::new(),
                    cancelled: false,
                });
            }
            ConcreteAction::Pass => self.conclude_turn(true),
            _ => unreachable!("response actions are rejected outside a response phase"),
        }
    }

    fn respond(&mut self, action: &ConcreteAction) {
        let ctx = self.turn.response_ctx.as_mut().expect("response phase open");
        let initiator = ctx.initiator;
        let responder = ctx.responder();
        ctx.response_actions.push(*action);
        let mut closed = false;
        match *action {
            ConcreteAction::PayCash { card } => {
                let card = self.zones[responder].take_from_cash(card).expect("checked");
                ctx.paid_so_far += card.value;
                self.zones[initiator].cash_pile.push(card);
            }
            ConcreteAction::PayProperty { card } => {
                let card = self.zones[responder].take_property(card).expect("checked");
                ctx.paid_so_far += card.value;
                let color = card.color().expect("property");
                let target = self.zones[initiator].placement(color, &self.config);
                self.zones[initiator].place_property(card, target);
            }
            ConcreteAction::PlayJustSayNo { card } => {
                let card = self.zones[responder].take_from_hand(card).expect("checked");
                self.discard.push(card);
                ctx.cancelled = true;
                closed = true;
            }
            ConcreteAction::Yield => closed = true,
            _ => unreachable!("main-phase actions are rejected during a response phase"),
        }
        closed |= ctx.paid_so_far >= ctx.owed;
        self.check_win(initiator);
        if closed || self.outcome.is_some() {
            self.turn.last_response = self.turn.response_ctx.take();
            self.conclude_turn(false);
        }
    }

    fn check_win(&mut self, player: usize) {
        if self.outcome.is_none()
            && self.zones[player].complete_sets(&self.config) >= self.config.required_property_sets
        {
            self.outcome = Some(Outcome::Win { player });
        }
    }

    fn conclude_turn(&mut self, passed: bool) {
        self.turn.turn_idx += 1;
        if self.outcome.is_some() {
            return;
        }
        if self.turn.turn_idx >= self.config.max_turns {
            self.outcome = Some(Outcome::Draw);
            return;
        }
        if passed || self.turn.streak_idx + 1 >= self.config.turns_per_streak {
            let next = 1 - self.turn.active_player;
            self.turn.active_player = next;
            self.turn.streak_idx = 0;
            self.draw(next, self.config.new_cards_per_turn as usize);
        } else {
            self.turn.streak_idx += 1;
        }
        // With the deck exhausted and nothing but Pass left to either player, no state change
        // is possible any more; this also covers the case of both hands being empty.
        if self.deck.is_empty() && !self.zones.iter().any(PlayerZone::has_main_play) {
            self.outcome = Some(Outcome::Draw);
        }
    }

    fn draw(&mut self, player: usize, count: usize) {
        let take = count.min(self.deck.len());
        let start = self.deck.len() - take;
        let drawn: Vec<_> = self.deck.drain(start..).rev().collect();
        self.zones[player].hand.extend(drawn);
    }
}
