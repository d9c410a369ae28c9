use mdeal_core::cfr::{LearnerConfig, LearnerState};
use mdeal_core::orchestrator::Checkpoint;
use mdeal_wasm::{regret_match_json, risk_aware_json, Game};
use serde_json::Value;

fn play_out(mut game: Game) -> (Game, usize) {
    let mut moves = 0;
    while game.snapshot().unwrap().result.is_none() {
        // Yield and Pass sort last, so the first listed move always plays or pays a card.
        game.play(0).unwrap();
        moves += 1;
        assert!(moves < 2000, "game never ended");
    }
    (game, moves)
}

#[test]
fn a_game_runs_to_completion_against_each_opponent() {
    for opponent in ["random", "risk-aware"] {
        for seat in [0, 1] {
            let game = Game::new(3, seat, opponent).unwrap();
            let first = game.snapshot().unwrap();
            assert_eq!(first.view.to_act, Some(seat), "the opponent moves until the human must act");
            assert!(!first.choices.is_empty());
            let (game, moves) = play_out(game);
            let last = game.snapshot().unwrap();
            assert!(last.choices.is_empty());
            assert!(last.log.iter().filter(|l| l.starts_with("you: ")).count() == moves);
        }
    }
}

#[test]
fn identical_seeds_replay_identically() {
    let logs: Vec<Vec<String>> =
        (0..2).map(|_| play_out(Game::new(11, 0, "risk-aware").unwrap()).0.snapshot().unwrap().log).collect();
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn an_empty_checkpoint_drives_the_opponent() {
    let json = Checkpoint::from_state(&LearnerState::new(LearnerConfig::default()), 1, None).to_json();
    let game = Game::with_checkpoint(5, 1, &json).unwrap();
    assert!(game.snapshot().unwrap().opponent.starts_with("checkpoint agent (0 info sets)"));
    play_out(game);
    assert!(Game::with_checkpoint(5, 0, "{}").is_err());
}

#[test]
fn bad_moves_and_options_are_rejected() {
    let mut game = Game::new(1, 0, "random").unwrap();
    let n = game.snapshot().unwrap().choices.len();
    assert!(game.play(n).is_err());
    assert!(Game::new(1, 2, "random").is_err());
    assert!(Game::new(1, 0, "greedy").is_err());
}

#[test]
fn regret_explorer_applies_clamping() {
    let out: Value = serde_json::from_str(
        &regret_match_json(r#"[{"action":"Cash","regret":1},{"action":"Pass","regret":5}]"#).unwrap(),
    )
    .unwrap();
    assert_eq!(out[0]["probability"], 1.0);
    assert_eq!(out[1]["probability"], 0.0);

    let uniform: Value = serde_json::from_str(
        &regret_match_json(r#"[{"action":"Cash","regret":-1},{"action":"Pass","regret":0}]"#).unwrap(),
    )
    .unwrap();
    assert_eq!(uniform[0]["probability"], 0.5);

    assert!(regret_match_json("[]").is_err());
    assert!(regret_match_json(r#"[{"action":"Cash","regret":1},{"action":"Cash","regret":2}]"#).is_err());
    assert!(regret_match_json(r#"[{"action":"Teleport","regret":1}]"#).is_err());
}

#[test]
fn risk_explorer_matches_the_softmax() {
    let out: Value =
        serde_json::from_str(&risk_aware_json(0.5, 2.0, r#"["Cash","StartNewPropertySet"]"#).unwrap()).unwrap();
    let probs: Vec<f64> = out.as_array().unwrap().iter().map(|e| e["probability"].as_f64().unwrap()).collect();
    assert_eq!(probs, vec![0.5, 0.5]);

    // Aggressiveness 1: property intent scores 1, cash 0; softmax at temperature 1.
    let out: Value =
        serde_json::from_str(&risk_aware_json(1.0, 1.0, r#"["Cash","StartNewPropertySet"]"#).unwrap()).unwrap();
    let e = std::f64::consts::E;
    let property = out.as_array().unwrap().iter().find(|x| x["action"] == "StartNewPropertySet").unwrap();
    assert!((property["probability"].as_f64().unwrap() - e / (1.0 + e)).abs() < 1e-12);

    assert!(risk_aware_json(1.5, 1.0, r#"["Cash"]"#).is_err());
    assert!(risk_aware_json(0.5, 0.0, r#"["Cash"]"#).is_err());
    assert!(risk_aware_json(0.5, 1.0, "[]").is_err());
}
