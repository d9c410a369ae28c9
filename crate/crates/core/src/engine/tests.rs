use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Builds hand-crafted positions out of a real deck so card conservation still holds.
pub(crate) struct Fixture {
    pub world: WorldState,
}

impl Fixture {
    pub fn new(config: GameConfig) -> Self {
        let config = Arc::new(config);
        let deck = config.build_deck();
        Fixture {
            world: WorldState {
                config,
                seed: 0,
                deck,
                zones: [PlayerZone::default(), PlayerZone::default()],
                discard: Vec::new(),
                turn: TurnState {
                    turn_idx: 0,
                    streak_idx: 0,
                    active_player: 0,
                    response_ctx: None,
                    last_response: None,
                },
                outcome: None,
            },
        }
    }

    pub fn take(&mut self, kind: CardKind, value: Option<u32>) -> Card {
        let pos = self
            .world
            .deck
            .iter()
            .position(|c| c.kind == kind && value.is_none_or(|v| v == c.value))
            .unwrap_or_else(|| panic!("no {kind:?} left in fixture deck"));
        self.world.deck.remove(pos)
    }

    pub fn hand(&mut self, player: usize, kind: CardKind, value: Option<u32>) -> Card {
        let card = self.take(kind, value);
        self.world.zones[player].hand.push(card);
        card
    }

    pub fn bank(&mut self, player: usize, value: u32) -> Card {
        let card = self.take(CardKind::Cash, Some(value));
        self.world.zones[player].cash_pile.push(card);
        card
    }

    pub fn own(&mut self, player: usize, color: Color) -> Card {
        let card = self.take(CardKind::Property { color }, None);
        let zone = &mut self.world.zones[player];
        let target = zone.placement(color, &self.world.config);
        zone.place_property(card, target);
        card
    }
}

pub(crate) fn prop(color: Color) -> CardKind {
    CardKind::Property { color }
}

pub(crate) fn rent(color: Color) -> CardKind {
    CardKind::Rent { color }
}

fn assert_conserved(world: &WorldState) {
    let full = world.config.build_deck();
    assert_eq!(world.all_cards(), full, "card multiset changed");
}

#[test]
fn new_game_deals_and_conserves() {
    let world = new_game(GameConfig::default(), 1).unwrap();
    assert_conserved(&world);
    assert_eq!(world.zones[0].hand.len(), 7);
    assert_eq!(world.zones[1].hand.len(), 5);
    assert_eq!(world.deck.len(), 83 - 12);
    assert_eq!(world.turn.turn_idx, 0);
    assert_eq!(world.turn.streak_idx, 0);
    assert!(world.turn.response_ctx.is_none());
    assert!(world.outcome.is_none());
    assert_eq!(world, new_game(GameConfig::default(), 1).unwrap());
    assert_ne!(world.deck, new_game(GameConfig::default(), 2).unwrap().deck);
}

#[test]
fn new_game_rejects_undealable_deck() {
    let config = GameConfig {
        deck_counts: DeckCounts {
            property: PerColor::new(2, 0, 0),
            cash: vec![2, 2],
            rent: PerColor::splat(0),
            just_say_no: 0,
        },
        ..GameConfig::default()
    };
    assert!(matches!(new_game(config, 1), Err(EngineError::Config { .. })));
}

#[test]
fn rent_needs_owned_color() {
    let mut fx = Fixture::new(GameConfig::default());
    let green_rent = fx.hand(0, rent(Color::Green), None);
    let brown_rent = fx.hand(0, rent(Color::Brown), None);
    fx.own(0, Color::Brown);
    let actions = fx.world.legal_actions().unwrap();
    assert!(!actions.contains(&ConcreteAction::PlayRent { card: green_rent.id }));
    assert!(actions.contains(&ConcreteAction::PlayRent { card: brown_rent.id }));
    let err = fx.world.apply_action(&ConcreteAction::PlayRent { card: green_rent.id }).unwrap_err();
    assert_eq!(
        err,
        EngineError::Illegal {
            action: ConcreteAction::PlayRent { card: green_rent.id },
            reason: IllegalReason::RentColorNotOwned
        }
    );
}

/// Player 0 owns two Green properties and charges Green rent; returns the fixture after the play.
fn green_rent_fixture(setup_responder: impl FnOnce(&mut Fixture)) -> (Fixture, Card) {
    let mut fx = Fixture::new(GameConfig::default());
    fx.own(0, Color::Green);
    fx.own(0, Color::Green);
    let card = fx.hand(0, rent(Color::Green), None);
    setup_responder(&mut fx);
    fx.world.step(&ConcreteAction::PlayRent { card: card.id }).unwrap();
    (fx, card)
}

#[test]
fn rent_opens_response_phase() {
    let (fx, card) = green_rent_fixture(|_| {});
    let world = &fx.world;
    let ctx = world.turn.response_ctx.as_ref().unwrap();
    assert_eq!(ctx.owed, 4);
    assert_eq!(ctx.initiator, 0);
    assert_eq!(ctx.initiating_action, ConcreteAction::PlayRent { card: card.id });
    assert_eq!(world.to_act(), Some(1));
    assert_eq!(world.turn.turn_idx, 0);
    assert_conserved(world);
    // Broke responder without Just Say No can only yield.
    assert_eq!(world.legal_actions().unwrap(), vec![ConcreteAction::Yield]);

    let view = world.info_view(1).unwrap();
    let vctx = view.turn.response_ctx.as_ref().unwrap();
    assert_eq!((vctx.owed, vctx.paid_so_far), (4, 0));
}

#[test]
fn responder_options_enumerated() {
    let mut cards = Vec::new();
    let (fx, _) = green_rent_fixture(|fx| {
        cards.push(fx.bank(1, 3));
        cards.push(fx.bank(1, 1));
        cards.push(fx.own(1, Color::Brown));
        cards.push(fx.hand(1, CardKind::JustSayNo, None));
    });
    let mut expected = vec![
        ConcreteAction::PayCash { card: cards[0].id },
        ConcreteAction::PayCash { card: cards[1].id },
        ConcreteAction::PayProperty { card: cards[2].id },
        ConcreteAction::PlayJustSayNo { card: cards[3].id },
    ];
    expected.sort();
    assert_eq!(fx.world.legal_actions().unwrap(), expected);
}

#[test]
fn just_say_no_cancels() {
    let mut jsn = None;
    let (fx, _) = green_rent_fixture(|fx| {
        fx.bank(1, 3);
        jsn = Some(fx.hand(1, CardKind::JustSayNo, None));
    });
    let before = fx.world.clone();
    let after = fx.world.apply_action(&ConcreteAction::PlayJustSayNo { card: jsn.unwrap().id }).unwrap();
    assert_eq!(fx.world, before, "input must not be mutated");
    assert!(after.turn.response_ctx.is_none());
    let closed = after.turn.last_response.as_ref().unwrap();
    assert!(closed.cancelled);
    assert_eq!(closed.paid_so_far, 0);
    assert_eq!(after.zones[0].cash_pile.len(), 0);
    assert_eq!(after.zones[1].cash_pile.len(), 1);
    assert_eq!(after.turn.turn_idx, 1);
    assert_eq!(after.turn.active_player, 0, "initiator keeps the second turn of its streak");
    assert_eq!(after.to_act(), Some(0));
    assert_conserved(&after);
}

#[test]
fn just_say_no_only_first() {
    let mut cards = Vec::new();
    let (mut fx, _) = green_rent_fixture(|fx| {
        cards.push(fx.bank(1, 1));
        cards.push(fx.hand(1, CardKind::JustSayNo, None));
        fx.bank(1, 1);
    });
    fx.world.step(&ConcreteAction::PayCash { card: cards[0].id }).unwrap();
    assert!(!fx.world.legal_actions().unwrap().iter().any(|a| matches!(a, ConcreteAction::PlayJustSayNo { .. })));
    let err = fx.world.apply_action(&ConcreteAction::PlayJustSayNo { card: cards[1].id }).unwrap_err();
    assert!(matches!(err, EngineError::Illegal { reason: IllegalReason::JustSayNoAfterPayment, .. }));
}

#[test]
fn overpayment_keeps_no_change() {
    let mut cash = Vec::new();
    let (mut fx, _) = green_rent_fixture(|fx| {
        cash.push(fx.bank(1, 3));
        cash.push(fx.bank(1, 3));
    });
    fx.world.step(&ConcreteAction::PayCash { card: cash[0].id }).unwrap();
    assert_eq!(fx.world.turn.response_ctx.as_ref().unwrap().paid_so_far, 3);
    assert_eq!(fx.world.to_act(), Some(1));
    fx.world.step(&ConcreteAction::PayCash { card: cash[1].id }).unwrap();
    assert!(fx.world.turn.response_ctx.is_none());
    let closed = fx.world.turn.last_response.as_ref().unwrap();
    assert_eq!(closed.paid_so_far, 6);
    assert_eq!(closed.response_actions.len(), 2);
    assert_eq!(fx.world.zones[0].cash_pile, cash);
    assert!(fx.world.zones[1].cash_pile.is_empty());
    assert_conserved(&fx.world);
}

#[test]
fn property_payment_counts_for_receiver() {
    let config = GameConfig { required_property_sets: 1, ..GameConfig::default() };
    let mut fx = Fixture::new(config);
    fx.own(0, Color::Brown);
    fx.own(0, Color::Brown);
    let card = fx.hand(0, rent(Color::Brown), None);
    let paid = fx.own(1, Color::Brown);
    fx.world.step(&ConcreteAction::PlayRent { card: card.id }).unwrap();
    assert_eq!(fx.world.turn.response_ctx.as_ref().unwrap().owed, 2);
    fx.world.step(&ConcreteAction::PayProperty { card: paid.id }).unwrap();
    assert_eq!(fx.world.outcome, Some(Outcome::Win { player: 0 }));
    assert_eq!(fx.world.zones[0].owned_count(Color::Brown), 3);
    assert!(fx.world.zones[1].property_sets.is_empty());
    assert_eq!(fx.world.utility(0), Ok(1));
    assert_eq!(fx.world.utility(1), Ok(-1));
}

#[test]
fn yield_only_when_broke() {
    let mut cards = Vec::new();
    let (mut fx, _) = green_rent_fixture(|fx| {
        cards.push(fx.bank(1, 1));
    });
    assert!(matches!(
        fx.world.apply_action(&ConcreteAction::Yield),
        Err(EngineError::Illegal { reason: IllegalReason::YieldWithAssets, .. })
    ));
    fx.world.step(&ConcreteAction::PayCash { card: cards[0].id }).unwrap();
    assert_eq!(fx.world.legal_actions().unwrap(), vec![ConcreteAction::Yield]);
    fx.world.step(&ConcreteAction::Yield).unwrap();
    let closed = fx.world.turn.last_response.as_ref().unwrap();
    assert_eq!((closed.owed, closed.paid_so_far, closed.cancelled), (4, 1, false));
}

#[test]
fn property_placement_rules() {
    let mut fx = Fixture::new(GameConfig::default());
    let first = fx.hand(0, prop(Color::Pink), None);
    let second = fx.hand(0, prop(Color::Pink), None);
    let actions = fx.world.legal_actions().unwrap();
    assert!(actions.contains(&ConcreteAction::PlayProperty { card: first.id, target: SetTarget::New }));
    assert!(!actions.contains(&ConcreteAction::PlayProperty { card: first.id, target: SetTarget::Existing { set: 0 } }));
    fx.world.step(&ConcreteAction::PlayProperty { card: first.id, target: SetTarget::New }).unwrap();
    let err = fx.world.apply_action(&ConcreteAction::PlayProperty { card: second.id, target: SetTarget::New });
    assert!(matches!(err, Err(EngineError::Illegal { reason: IllegalReason::WrongSetTarget, .. })));
    fx.world.step(&ConcreteAction::PlayProperty { card: second.id, target: SetTarget::Existing { set: 0 } }).unwrap();
    assert_eq!(fx.world.zones[0].property_sets.len(), 1);
    assert_eq!(fx.world.zones[0].property_sets[0].cards.len(), 2);
}

#[test]
fn streaks_alternate_and_draw() {
    let mut world = new_game(GameConfig::default(), 7).unwrap();
    let cash = world.zones[0].hand.iter().find(|c| c.is_cash()).copied();
    match cash {
        Some(c) => world.step(&ConcreteAction::PlayCash { card: c.id }).unwrap(),
        None => world.step(&ConcreteAction::Pass).unwrap(),
    }
    if cash.is_some() {
        assert_eq!(world.turn.active_player, 0);
        assert_eq!(world.turn.streak_idx, 1);
        world.step(&ConcreteAction::Pass).unwrap();
    }
    assert_eq!(world.turn.active_player, 1);
    assert_eq!(world.turn.streak_idx, 0);
    assert_eq!(world.zones[1].hand.len(), 7);
}

#[test]
fn passing_to_the_cap_draws() {
    let config = GameConfig { max_turns: 6, ..GameConfig::default() };
    let mut world = new_game(config, 3).unwrap();
    for _ in 0..6 {
        world.step(&ConcreteAction::Pass).unwrap();
    }
    assert_eq!(world.outcome, Some(Outcome::Draw));
    assert_eq!(world.utility(0), Ok(0));
    assert_eq!(world.utility(1), Ok(0));
    assert_eq!(world.legal_actions(), Err(EngineError::Terminal));
    assert_eq!(world.apply_action(&ConcreteAction::Pass), Err(EngineError::Terminal));
}

#[test]
fn utility_requires_terminal() {
    let world = new_game(GameConfig::default(), 1).unwrap();
    assert_eq!(world.utility(0), Err(EngineError::NotTerminal));
}

#[test]
fn view_hides_opponent_hand_and_deck() {
    let world = new_game(GameConfig::default(), 11).unwrap();
    let mut swapped = world.clone();
    let top = swapped.deck.len() - 1;
    std::mem::swap(&mut swapped.zones[1].hand[0], &mut swapped.deck[top]);
    swapped.deck.swap(0, 5);
    assert_eq!(world.info_view(0).unwrap(), swapped.info_view(0).unwrap());
    assert_ne!(world.info_view(1).unwrap(), swapped.info_view(1).unwrap());
    let json = canonical_json(&world.info_view(0).unwrap());
    assert!(!json.contains("\"deck\""));
    assert!(world.info_view(2).is_err());
}

#[test]
fn serialization_round_trip_keeps_ids() {
    let world = new_game(GameConfig::default(), 5).unwrap();
    let json = canonical_json(&world);
    let back: WorldState = serde_json::from_str(&json).unwrap();
    assert_eq!(back, world);
    assert_eq!(canonical_json(&back), json);
    let action = ConcreteAction::PlayProperty { card: 4, target: SetTarget::Existing { set: 1 } };
    assert_eq!(canonical_json(&action), r#"{"PlayProperty":{"card":4,"target":{"Existing":{"set":1}}}}"#);
    assert_eq!(canonical_json(&ConcreteAction::Pass), r#""Pass""#);
}

/// Plays uniformly random legal moves, checking every engine invariant along the way.
pub(crate) fn random_playout(config: &GameConfig, seed: u64) -> (WorldState, Vec<ConcreteAction>) {
    let start = new_game(config.clone(), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xDEAD_BEEF);
    let mut world = start.clone();
    let mut history = Vec::new();
    let mut response_len = 0usize;
    let mut response_bound = 0usize;
    while let Some(decision) = world.decision() {
        let actions = decision.legal_actions();
        assert!(!actions.is_empty());
        let action = actions[rng.random_range(0..actions.len())];
        let actor = decision.player;
        match &world.turn.response_ctx {
            None => {
                if actor == world.turn.active_player && matches!(action, ConcreteAction::PlayRent { .. }) {
                    response_len = 0;
                }
            }
            Some(ctx) => {
                if response_len == 0 {
                    let zone = &world.zones[actor];
                    response_bound = zone.cash_pile.len() + zone.property_count() as usize + 1;
                }
                response_len += 1;
                assert!(response_len <= response_bound, "response phase exceeded its bound");
                assert_eq!(actor, ctx.responder());
            }
        }
        let snapshot = world.clone();
        let next = world.apply_action(&action).unwrap();
        assert_eq!(world, snapshot);
        world = next;
        if let Some(ctx) = &world.turn.response_ctx {
            assert!(ctx.response_actions.iter().all(|a| a.is_payment() || matches!(a, ConcreteAction::Yield)));
            let paid: u32 = ctx
                .response_actions
                .iter()
                .map(|a| match a {
                    ConcreteAction::PayCash { card } | ConcreteAction::PayProperty { card } => {
                        start.config.build_deck()[usize::from(*card)].value
                    }
                    _ => 0,
                })
                .sum();
            assert_eq!(paid, ctx.paid_so_far);
        }
        assert!(world.turn.streak_idx < world.config.turns_per_streak);
        assert_conserved(&world);
        history.push(action);
    }
    assert_eq!(world.utility(0).unwrap() + world.utility(1).unwrap(), 0);
    // Replaying the same actions from the same seed reproduces the final state.
    let mut replay = start;
    for action in &history {
        replay.step(action).unwrap();
    }
    assert_eq!(replay, world);
    (world, history)
}

#[test]
fn random_playouts_hold_invariants() {
    let config = GameConfig::default();
    for seed in 0..200 {
        random_playout(&config, seed);
    }
}

#[test]
fn streak_law_holds() {
    let config = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..50 {
        let mut world = new_game(config.clone(), seed).unwrap();
        let mut turns_in_streak = 0;
        let mut current = world.turn.active_player;
        while let Some(d) = world.decision() {
            let actions = d.legal_actions();
            let a = actions[rng.random_range(0..actions.len())];
            let turn_before = world.turn.turn_idx;
            world.step(&a).unwrap();
            if world.turn.turn_idx > turn_before {
                turns_in_streak += 1;
                assert!(turns_in_streak <= config.turns_per_streak);
            }
            if world.turn.active_player != current {
                current = world.turn.active_player;
                turns_in_streak = 0;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn check_agrees_with_legal_list(seed in any::<u64>(), steps in 0usize..120, probe in any::<u16>()) {
        let mut world = new_game(GameConfig::default(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..steps {
            let Some(d) = world.decision() else { break };
            let actions = d.legal_actions();
            let a = actions[rng.random_range(0..actions.len())];
            world.step(&a).unwrap();
        }
        if let Some(d) = world.decision() {
            let legal = d.legal_actions();
            let card = probe % 83;
            let candidates = [
                ConcreteAction::PlayProperty { card, target: SetTarget::New },
                ConcreteAction::PlayProperty { card, target: SetTarget::Existing { set: (probe % 3) as usize } },
                ConcreteAction::PlayCash { card },
                ConcreteAction::PlayRent { card },
                ConcreteAction::PlayJustSayNo { card },
                ConcreteAction::PayCash { card },
                ConcreteAction::PayProperty { card },
                ConcreteAction::Yield,
                ConcreteAction::Pass,
            ];
            for action in candidates.iter().chain(legal.iter()) {
                prop_assert_eq!(d.check(action).is_ok(), legal.contains(action), "{:?}", action);
            }
        }
    }
}
