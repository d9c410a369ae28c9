//! Browser demo: play against a baseline or a loaded checkpoint, and explore the two
//! action-weighting rules interactively.
//!
//! Everything below the bindings is plain Rust returning `Result<_, String>` so it can be
//! tested natively; the `#[wasm_bindgen]` layer only converts errors.

use std::sync::Arc;

use mdeal_core::abstraction::{abstract_action_of, AbstractAction, ActionMask, Analysis};
use mdeal_core::cfr::{regret_match, LearnerState};
use mdeal_core::engine::{new_game, ConcreteAction, GameConfig, InfoView, Outcome, WorldState};
use mdeal_core::orchestrator::Checkpoint;
use mdeal_core::selectors::{Baseline, RiskAwareParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

enum Opponent {
    Baseline(Baseline),
    /// Plays the average policy of a trained learner.
    Learner(Box<LearnerState>),
}

impl Opponent {
    fn label(&self) -> String {
        match self {
            Opponent::Baseline(Baseline::Random) => "random".into(),
            Opponent::Baseline(Baseline::RiskAware(p)) => {
                format!("risk-aware (aggressiveness {}, temperature {})", p.aggressiveness, p.temperature)
            }
            Opponent::Learner(state) => {
                format!("checkpoint agent ({} info sets)", state.infoset_count())
            }
        }
    }
}

/// One move the human can make, with the intent the learner would see.
#[derive(Serialize)]
pub struct Choice {
    pub index: usize,
    pub action: ConcreteAction,
    pub label: String,
    pub intent: AbstractAction,
}

#[derive(Serialize)]
pub struct Snapshot {
    pub view: InfoView,
    pub choices: Vec<Choice>,
    pub opponent: String,
    pub log: Vec<String>,
    pub result: Option<String>,
}

/// A human-vs-computer game. The human's seat is fixed at creation.
pub struct Game {
    world: WorldState,
    human: usize,
    opponent: Opponent,
    rng: ChaCha8Rng,
    log: Vec<String>,
}

fn describe(world: &WorldState, action: &ConcreteAction) -> String {
    let card = action.card().and_then(|id| world.all_cards().into_iter().find(|c| c.id == id));
    let name = card.map_or_else(String::new, |c| c.to_string());
    match action {
        ConcreteAction::PlayProperty { .. } => format!("play property {name}"),
        ConcreteAction::PlayCash { .. } => format!("bank {name}"),
        ConcreteAction::PlayRent { .. } => format!("charge rent with {name}"),
        ConcreteAction::PlayJustSayNo { .. } => "refuse with Just Say No".into(),
        ConcreteAction::PayCash { .. } => format!("pay cash {name}"),
        ConcreteAction::PayProperty { .. } => format!("pay property {name}"),
        ConcreteAction::Yield => "stop paying".into(),
        ConcreteAction::Pass => "pass".into(),
    }
}

impl Game {
    pub fn new(seed: u64, human: usize, opponent: &str) -> Result<Game, String> {
        if human > 1 {
            return Err(format!("seat {human} does not exist; choose 0 or 1"));
        }
        let opponent = match opponent {
            "random" => Opponent::Baseline(Baseline::Random),
            "risk-aware" => Opponent::Baseline(Baseline::RiskAware(RiskAwareParams::default())),
            other => return Err(format!("unknown opponent `{other}`; expected random or risk-aware")),
        };
        Game::start(Arc::new(GameConfig::default()), seed, human, opponent)
    }

    /// Plays against the average policy stored in a checkpoint, under the checkpoint's ruleset.
    pub fn with_checkpoint(seed: u64, human: usize, checkpoint_json: &str) -> Result<Game, String> {
        if human > 1 {
            return Err(format!("seat {human} does not exist; choose 0 or 1"));
        }
        let checkpoint = Checkpoint::from_json(checkpoint_json).map_err(|e| e.to_string())?;
        let state = checkpoint.learner_state();
        Game::start(Arc::clone(&state.config.game), seed, human, Opponent::Learner(Box::new(state)))
    }

    fn start(config: Arc<GameConfig>, seed: u64, human: usize, opponent: Opponent) -> Result<Game, String> {
        let world = new_game(config, seed).map_err(|e| e.to_string())?;
        let mut game = Game { world, human, opponent, rng: ChaCha8Rng::seed_from_u64(seed), log: Vec::new() };
        game.run_opponent()?;
        Ok(game)
    }

    fn run_opponent(&mut self) -> Result<(), String> {
        while let Some(analysis) = Analysis::of_world(&self.world) {
            if analysis.player == self.human {
                break;
            }
            let policy = match &self.opponent {
                Opponent::Baseline(b) => b.distribution(analysis.mask),
                Opponent::Learner(state) => state.average_policy(analysis.player, &analysis.key(), analysis.mask),
            };
            let intent = policy.sample(0.0, &mut self.rng);
            let action = analysis.resolve(intent).map_err(|e| e.to_string())?;
            self.log.push(format!("opponent: {} ({intent})", describe(&self.world, &action)));
            self.world.step(&action).map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn play(&mut self, index: usize) -> Result<(), String> {
        let view = self.world.info_view(self.human).map_err(|e| e.to_string())?;
        let action = *view.legal_actions.get(index).ok_or_else(|| format!("no move number {index}"))?;
        self.log.push(format!("you: {}", describe(&self.world, &action)));
        self.world.step(&action).map_err(|e| e.to_string())?;
        self.run_opponent()
    }

    pub fn snapshot(&self) -> Result<Snapshot, String> {
        let view = self.world.info_view(self.human).map_err(|e| e.to_string())?;
        let choices = view
            .legal_actions
            .iter()
            .enumerate()
            .map(|(index, action)| {
                let intent = abstract_action_of(&view, action).map_err(|e| e.to_string())?;
                Ok(Choice { index, action: *action, label: describe(&self.world, action), intent })
            })
            .collect::<Result<_, String>>()?;
        let result = self.world.outcome.map(|o| match o {
            Outcome::Win { player } if player == self.human => "you win".to_string(),
            Outcome::Win { .. } => "the opponent wins".to_string(),
            Outcome::Draw => "draw".to_string(),
        });
        Ok(Snapshot { view, choices, opponent: self.opponent.label(), log: self.log.clone(), result })
    }
}

#[derive(Deserialize)]
struct RegretEntryIn {
    action: AbstractAction,
    regret: f64,
}

#[derive(Serialize, Deserialize, Debug, PartialEq)]
pub struct Weighted {
    pub action: AbstractAction,
    pub probability: f64,
}

/// Regret matching with clamping over `[{action, regret}, ...]`.
pub fn regret_match_json(input: &str) -> Result<String, String> {
    let entries: Vec<RegretEntryIn> = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let mut seen = ActionMask::default();
    for e in &entries {
        if seen.contains(e.action) {
            return Err(format!("{} is listed twice", e.action));
        }
        if !e.regret.is_finite() {
            return Err(format!("regret for {} is not a number", e.action));
        }
        seen.insert(e.action);
    }
    let pairs: Vec<(AbstractAction, f64)> = entries.iter().map(|e| (e.action, e.regret)).collect();
    let probs = regret_match(&pairs).map_err(|e| e.to_string())?;
    let out: Vec<Weighted> =
        entries.iter().zip(probs).map(|(e, probability)| Weighted { action: e.action, probability }).collect();
    Ok(serde_json::to_string(&out).expect("plain data serializes"))
}

#[derive(Serialize)]
struct Scored {
    action: AbstractAction,
    score: f64,
    probability: f64,
}

/// Scores and softmax probabilities of the risk-aware baseline over the listed actions.
pub fn risk_aware_json(aggressiveness: f64, temperature: f64, actions: &str) -> Result<String, String> {
    let params = RiskAwareParams { aggressiveness, temperature };
    params.validate().map_err(|e| e.to_string())?;
    let listed: Vec<AbstractAction> = serde_json::from_str(actions).map_err(|e| e.to_string())?;
    if listed.is_empty() {
        return Err("select at least one action".into());
    }
    let mask: ActionMask = listed.into_iter().collect();
    let policy = params.distribution(mask);
    let out: Vec<Scored> = mask
        .iter()
        .map(|action| Scored { action, score: params.score(action), probability: policy.prob(action) })
        .collect();
    Ok(serde_json::to_string(&out).expect("plain data serializes"))
}

/// Names of every abstract action in index order.
pub fn action_names() -> Vec<&'static str> {
    AbstractAction::ALL.iter().map(|a| a.name()).collect()
}

fn js(e: String) -> JsValue {
    JsValue::from_str(&e)
}

#[wasm_bindgen(js_name = Game)]
pub struct JsGame(Game);

#[wasm_bindgen(js_class = Game)]
impl JsGame {
    /// `opponent` is `random` or `risk-aware`.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, human: usize, opponent: &str) -> Result<JsGame, JsValue> {
        Game::new(u64::from(seed), human, opponent).map(JsGame).map_err(js)
    }

    #[wasm_bindgen(js_name = withCheckpoint)]
    pub fn with_checkpoint(seed: u32, human: usize, checkpoint_json: &str) -> Result<JsGame, JsValue> {
        Game::with_checkpoint(u64::from(seed), human, checkpoint_json).map(JsGame).map_err(js)
    }

    pub fn play(&mut self, index: usize) -> Result<(), JsValue> {
        self.0.play(index).map_err(js)
    }

    /// The human's view, legal moves and move log as JSON.
    pub fn snapshot(&self) -> Result<String, JsValue> {
        let snapshot = self.0.snapshot().map_err(js)?;
        Ok(serde_json::to_string(&snapshot).expect("plain data serializes"))
    }
}

#[wasm_bindgen(js_name = regretMatch)]
pub fn js_regret_match(input: &str) -> Result<String, JsValue> {
    regret_match_json(input).map_err(js)
}

#[wasm_bindgen(js_name = riskAware)]
pub fn js_risk_aware(aggressiveness: f64, temperature: f64, actions: &str) -> Result<String, JsValue> {
    risk_aware_json(aggressiveness, temperature, actions).map_err(js)
}

#[wasm_bindgen(js_name = actionNames)]
pub fn js_action_names() -> String {
    serde_json::to_string(&action_names()).expect("plain data serializes")
}
