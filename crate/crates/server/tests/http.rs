mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use common::{game, human_choice, start, untrained, Server};
use mdeal_core::abstraction::AbstractAction;
use mdeal_core::engine::{new_game, CardKind, ConcreteAction, GameConfig, WorldState};
use mdeal_server::api::{AgentStepResponse, GameResponse, ReplayResponse};
use mdeal_server::session::{reconstruct, Actor, Status};
use mdeal_server::store::{FileStore, MemoryStore};
use serde_json::{json, Value};

/// One acknowledged move and the raw body the server answered with.
struct Step {
    body: Value,
    agent_in_response: bool,
}

/// Plays `game_id` to the end with the scripted human, returning every response.
async fn play_out(server: &Server, mut current: GameResponse, max_steps: usize) -> (GameResponse, Vec<Step>) {
    let id = current.game_id.clone();
    let human = current.human_player_idx;
    let mut steps = Vec::new();
    while current.status == Status::Active {
        assert!(steps.len() < max_steps, "game did not finish");
        if current.view.to_act == Some(human) {
            let action = human_choice(&current.view);
            let (status, body) =
                server.post(&format!("/games/{id}/actions"), serde_json::to_value(action).unwrap()).await;
            assert_eq!(status, 200, "{body}");
            current = game(body.clone());
            steps.push(Step { body, agent_in_response: false });
        } else {
            let agent_in_response = current.view.turn.response_ctx.is_some();
            let (status, body) = server.post(&format!("/games/{id}/agent-step"), json!(null)).await;
            assert_eq!(status, 200, "{body}");
            let parsed: AgentStepResponse = serde_json::from_value(body.clone()).unwrap();
            current = parsed.game;
            steps.push(Step { body, agent_in_response });
        }
    }
    (current, steps)
}

/// Every card id mentioned anywhere in a response body.
fn card_ids(value: &Value, out: &mut BTreeSet<u64>) {
    match value {
        Value::Object(map) => {
            if let (Some(id), true) = (map.get("id").and_then(Value::as_u64), map.contains_key("kind")) {
                out.insert(id);
            }
            if let Some(card) = map.get("card").and_then(Value::as_u64) {
                out.insert(card);
            }
            map.values().for_each(|v| card_ids(v, out));
        }
        Value::Array(items) => items.iter().for_each(|v| card_ids(v, out)),
        _ => {}
    }
}

fn world_after(config: &Arc<GameConfig>, seed: u64, actions: &[ConcreteAction]) -> WorldState {
    reconstruct(Arc::clone(config), seed, actions.iter().copied()).unwrap()
}

#[tokio::test]
async fn scripted_full_game_completes_and_replays_exactly() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let mut response_policies = 0;
    for seed in 11..31u64 {
        let created = server.create(json!({ "seed": seed, "label": "scripted" })).await;
        let id = created.game_id.clone();
        let (last, steps) = play_out(&server, created, 5000).await;

        let (status, replay) = server.get(&format!("/games/{id}/replay")).await;
        assert_eq!(status, 200);
        let replay: ReplayResponse = serde_json::from_value(replay).unwrap();
        assert_eq!(replay.events.len(), steps.len());
        assert_eq!(replay.seed, Some(seed));
        for (i, e) in replay.events.iter().enumerate() {
            assert_eq!(e.seq, i as u64);
            assert_eq!(e.actor == Actor::Agent, e.agent.is_some());
        }
        assert!(replay.events.windows(2).all(|w| w[0].timestamp_ms <= w[1].timestamp_ms));

        // The live final state is exactly the replayed log applied to the deal.
        let actions: Vec<ConcreteAction> = replay.events.iter().map(|e| e.action).collect();
        let rebuilt = world_after(&replay.config, seed, &actions);
        assert!(rebuilt.is_terminal());
        assert_eq!(rebuilt.info_view(0).unwrap(), last.view);
        let (_, fetched) = server.get(&format!("/games/{id}")).await;
        assert_eq!(game(fetched).view, last.view);

        // No response ever mentions a card that was in the agent's hand at that moment.
        for (i, step) in steps.iter().enumerate() {
            let world = world_after(&replay.config, seed, &actions[..=i]);
            let hidden: BTreeSet<u64> = world.zones[1].hand.iter().map(|c| u64::from(c.id)).collect();
            let mut seen = BTreeSet::new();
            card_ids(&step.body, &mut seen);
            assert!(seen.is_disjoint(&hidden), "response {i} leaks agent cards {:?}", seen.intersection(&hidden));
            assert!(step.body.get("deck").is_none() && step.body["view"].get("deck").is_none());
        }

        // While responding to rent, the agent only ever considers response intents.
        let allowed = [
            AbstractAction::GiveOpponentCash,
            AbstractAction::GiveOpponentProperty,
            AbstractAction::JustSayNo,
            AbstractAction::Yield,
        ];
        for step in steps.iter().filter(|s| s.agent_in_response) {
            let report: AgentStepResponse = serde_json::from_value(step.body.clone()).unwrap();
            assert!(report.report.policy.keys().all(|a| allowed.contains(a)), "{:?}", report.report.policy);
            response_policies += 1;
        }
        if response_policies > 0 {
            break;
        }
    }
    assert!(response_policies > 0, "no scripted game put the agent in a response phase");
}

#[tokio::test]
async fn create_validates_its_input() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let (status, body) = server.post("/games", json!({ "human_player_idx": 2 })).await;
    assert_eq!(status, 400);
    assert_eq!(body["code"], "invalid_field");
    assert_eq!(body["detail"]["field"], "human_player_idx");
    assert!(body["message"].is_string());

    let (status, body) = server.post("/games", json!({ "config": { "bogus": 1 } })).await;
    assert_eq!(status, 400);
    assert!(body["detail"]["field"].as_str().unwrap().starts_with("config"), "{body}");

    let (status, body) = server.post("/games", json!({ "config": { "initial_hand_size": "five" } })).await;
    assert_eq!(status, 400);
    assert_eq!(body["detail"]["field"], "config.initial_hand_size");

    let (status, body) = server.post("/games", json!({ "config": { "required_property_sets": 0 } })).await;
    assert_eq!(status, 400);
    assert_eq!(body["detail"]["field"], "config.required_property_sets");

    let (status, body) = server.post("/games", json!({ "seed": -1 })).await;
    assert_eq!(status, 400);
    assert_eq!(body["detail"]["field"], "seed");

    let shortened = server.create(json!({ "config": { "max_turns": 30 } })).await;
    assert_eq!(shortened.view.config.max_turns, 30);
    assert_eq!(shortened.view.config.initial_hand_size, 5);
}

#[tokio::test]
async fn creation_is_reproducible_from_a_seed() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let a = server.create(json!({ "seed": 99 })).await;
    let b = server.create(json!({ "seed": 99 })).await;
    assert_ne!(a.game_id, b.game_id);
    assert_eq!(a.view, b.view);
    assert_eq!(a.seed, Some(99));
    // The human moves first as player 0 and has drawn; as player 1 they hold the opening hand.
    assert_eq!(a.view.hand.len(), 7);
    let second = server.create(json!({ "human_player_idx": 1 })).await;
    assert_eq!(second.view.hand.len(), 5);
    assert_eq!(second.seed, None, "a server-drawn seed would reveal the deck order");

    let (status, list) = server.get("/games").await;
    assert_eq!(status, 200);
    let list = list.as_array().unwrap();
    assert_eq!(list.len(), 3);
    assert!(list.iter().all(|s| s["status"]["state"] == "active" && s["event_count"] == 0));
}

#[tokio::test]
async fn unknown_games_are_not_found() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    for (method, path) in [
        (reqwest::Method::GET, "/games/nope"),
        (reqwest::Method::GET, "/games/nope/replay"),
        (reqwest::Method::POST, "/games/nope/actions"),
        (reqwest::Method::POST, "/games/nope/agent-step"),
    ] {
        let (status, body) = server.call(method, path, Some(json!("Pass"))).await;
        assert_eq!(status, 404, "{path}");
        assert_eq!(body["code"], "game_not_found");
    }
    let (status, body) = server.get("/nowhere").await;
    assert_eq!((status, body["code"].as_str()), (404, Some("no_route")));
}

#[tokio::test]
async fn turn_order_is_enforced() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let agent_first = server.create(json!({ "seed": 3, "human_player_idx": 1 })).await;
    let (status, body) = server.post(&format!("/games/{}/actions", agent_first.game_id), json!("Pass")).await;
    assert_eq!((status, body["code"].as_str()), (409, Some("not_your_turn")));

    let human_first = server.create(json!({ "seed": 3 })).await;
    let (status, body) = server.post(&format!("/games/{}/agent-step", human_first.game_id), json!(null)).await;
    assert_eq!((status, body["code"].as_str()), (409, Some("not_agent_turn")));

    let (status, body) =
        server.post(&format!("/games/{}/actions", human_first.game_id), json!({ "Teleport": {} })).await;
    assert_eq!((status, body["detail"]["field"].as_str()), (400, Some("action")));
    let (status, _) = server.get(&format!("/games/{}", human_first.game_id)).await;
    assert_eq!(status, 200);
}

#[tokio::test]
async fn rent_for_an_unowned_color_cites_the_rule() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    // At the opening nobody owns property, so any rent card in the human's hand is unplayable.
    let (seed, card) = (0..100u64)
        .find_map(|seed| {
            let world = new_game(GameConfig::default(), seed).unwrap();
            let card = world.zones[0].hand.iter().find(|c| matches!(c.kind, CardKind::Rent { .. }))?;
            Some((seed, card.id))
        })
        .unwrap();
    let created = server.create(json!({ "seed": seed })).await;
    let (status, body) =
        server.post(&format!("/games/{}/actions", created.game_id), json!({ "PlayRent": { "card": card } })).await;
    assert_eq!(status, 400);
    assert_eq!(body["code"], "illegal_action");
    assert_eq!(body["detail"]["rule"], "rent_color_not_owned");
    let (_, after) = server.get(&format!("/games/{}", created.game_id)).await;
    assert!(game(after).events.is_empty(), "a rejected move is not logged");
}

#[tokio::test]
async fn finished_games_reject_moves() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let created = server.create(json!({ "config": { "max_turns": 6 } })).await;
    assert_eq!(created.seed, None);
    let id = created.game_id.clone();
    let (status, replay) = server.get(&format!("/games/{id}/replay")).await;
    assert_eq!((status, replay["seed"].clone()), (200, Value::Null));
    let (last, _) = play_out(&server, created, 1000).await;
    assert!(matches!(last.status, Status::Finished { .. }));
    assert!(last.seed.is_some(), "the deal is disclosed once the game is over");
    let (status, body) = server.post(&format!("/games/{id}/actions"), json!("Pass")).await;
    assert_eq!((status, body["code"].as_str()), (409, Some("game_finished")));
    let (status, body) = server.post(&format!("/games/{id}/agent-step"), json!(null)).await;
    assert_eq!((status, body["code"].as_str()), (409, Some("game_finished")));
}

#[tokio::test]
async fn agent_reports_describe_its_policy() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let created = server.create(json!({ "seed": 5, "human_player_idx": 1 })).await;
    let id = created.game_id;
    let (status, body) = server.post(&format!("/games/{id}/agent-step?mode=argmax"), json!(null)).await;
    assert_eq!(status, 200, "{body}");
    let step: AgentStepResponse = serde_json::from_value(body).unwrap();
    let report = step.report;
    // An untrained learner has never seen the info set, so its policy is uniform.
    let n = report.policy.len() as f64;
    assert!(report.policy.values().all(|p| (p - 1.0 / n).abs() < 1e-12));
    assert_eq!(report.update_count, 0);
    assert!(report.infoset_key.as_str().starts_with("0@IntentStateAbstraction@"));
    // Argmax breaks the tie toward the lowest action index.
    let lowest = report.policy.keys().min_by_key(|a| a.index()).unwrap();
    assert_eq!(report.abstract_action, *lowest);
    assert_eq!(step.game.events.last().unwrap().action, report.action);

    let (status, body) = server.post(&format!("/games/{id}/agent-step?mode=greedy"), json!(null)).await;
    assert_eq!((status, body["detail"]["field"].as_str()), (400, Some("mode")));
}

#[tokio::test]
async fn a_pinned_seed_replays_the_same_agent_moves() {
    let server = start(untrained(), Box::new(MemoryStore::default())).await;
    let mut runs = Vec::new();
    for _ in 0..2 {
        let created = server.create(json!({ "seed": 2024 })).await;
        let (last, _) = play_out(&server, created, 5000).await;
        runs.push(last.events.iter().map(|e| (e.actor, e.action)).collect::<Vec<_>>());
    }
    assert!(runs[0].iter().any(|(actor, _)| *actor == Actor::Agent));
    assert_eq!(runs[0], runs[1]);
}

#[tokio::test]
async fn restart_restores_every_acknowledged_move() {
    let dir = tempfile::tempdir().unwrap();
    let (id, before) = {
        let server = start(untrained(), Box::new(FileStore::open(dir.path()).unwrap())).await;
        let mut current = server.create(json!({ "seed": 8 })).await;
        let id = current.game_id.clone();
        for _ in 0..12 {
            let path = if current.view.to_act == Some(0) { "actions" } else { "agent-step" };
            let body = if path == "actions" {
                serde_json::to_value(human_choice(&current.view)).unwrap()
            } else {
                json!(null)
            };
            let (status, body) = server.post(&format!("/games/{id}/{path}"), body).await;
            assert_eq!(status, 200);
            current = if path == "actions" {
                game(body)
            } else {
                serde_json::from_value::<AgentStepResponse>(body).unwrap().game
            };
        }
        let (_, before) = server.get(&format!("/games/{id}")).await;
        (id, before)
    };
    let server = start(untrained(), Box::new(FileStore::open(dir.path()).unwrap())).await;
    let (status, after) = server.get(&format!("/games/{id}")).await;
    assert_eq!(status, 200);
    assert_eq!(after, before);
    assert_eq!(game(after.clone()).events.len(), 12);
    let (last, _) = play_out(&server, game(after), 5000).await;
    assert!(last.events.len() > 12);
}
