use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdeal_core::abstraction::{infoset_key, AbstractAction, AbstractState, ActionMask, InfoSetKey};
use mdeal_core::cfr::{LearnerConfig, LearnerState};
use mdeal_core::engine::{DeckCounts, GameConfig, PerColor};
use mdeal_core::orchestrator::{
    self, evaluate, update_count_quantiles, Checkpoint, MetricsRecord, Parallelism, RunConfig, StartMode,
};
use mdeal_core::selectors::{Baseline, RiskAwareParams};

use crate::api::{self, AppState};
use crate::store::FileStore;

#[derive(Parser, Debug)]
#[command(
    name = "mdeal",
    version,
    about = "Train, evaluate, inspect and serve counterfactual-regret agents for two-player Monopoly Deal"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train a learner from scratch.
    Train(TrainArgs),
    /// Continue from the highest-index checkpoint in a directory.
    Resume(ResumeArgs),
    /// Play a checkpoint's average policy against a baseline.
    Eval(EvalArgs),
    /// Summarize a checkpoint.
    Inspect(InspectArgs),
    /// Serve human-vs-agent games over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct GameArgs {
    #[arg(long, default_value_t = 2)]
    pub required_sets: u32,
    #[arg(long, default_value_t = 5)]
    pub initial_hand_size: u32,
    #[arg(long, default_value_t = 2)]
    pub new_cards_per_turn: u32,
    #[arg(long, default_value_t = 2)]
    pub turns_per_streak: u32,
    #[arg(long, default_value_t = 250)]
    pub max_turns: u32,
    /// Property cards of each color.
    #[arg(long, default_value_t = 10)]
    pub property_cards: u32,
    /// Cash cards of each value ($1 and $3).
    #[arg(long, default_value_t = 10)]
    pub cash_cards: u32,
    /// Rent cards of each color.
    #[arg(long, default_value_t = 10)]
    pub rent_cards: u32,
    #[arg(long, default_value_t = 3)]
    pub just_say_no_cards: u32,
}

impl GameArgs {
    pub fn config(&self) -> GameConfig {
        let base = GameConfig::default();
        GameConfig {
            required_property_sets: self.required_sets,
            initial_hand_size: self.initial_hand_size,
            new_cards_per_turn: self.new_cards_per_turn,
            turns_per_streak: self.turns_per_streak,
            max_turns: self.max_turns,
            deck_counts: DeckCounts {
                property: PerColor::splat(self.property_cards),
                cash: vec![self.cash_cards; base.cash_card_values.len()],
                rent: PerColor::splat(self.rent_cards),
                just_say_no: self.just_say_no_cards,
            },
            ..base
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Total games to have merged when the run ends.
    #[arg(long, default_value_t = 1000)]
    pub games: u64,
    #[arg(long, default_value_t = 50)]
    pub eval_interval: u64,
    /// Evaluation games per baseline and start mode; 0 skips them.
    #[arg(long, default_value_t = 20)]
    pub test_games: u32,
    #[arg(long, default_value_t = Parallelism::ParallelUnorderedUpdate)]
    pub parallelism: Parallelism,
    #[arg(long, default_value_t = 8)]
    pub workers: usize,
    /// Games per batch in parallel-batch-ordered-update mode; results do not depend on --workers.
    #[arg(long, default_value_t = orchestrator::DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Also checkpoint every this many games.
    #[arg(long)]
    pub checkpoint_interval: Option<u64>,
    #[arg(long, default_value_t = 0.5)]
    pub aggressiveness: f64,
    #[arg(long, default_value_t = 2.0)]
    pub temperature: f64,
}

impl RunArgs {
    fn run_config(
        &self,
        learner: LearnerConfig,
        seed: u64,
        metrics_dir: PathBuf,
        checkpoint_dir: PathBuf,
    ) -> RunConfig {
        RunConfig {
            learner,
            n_training_games: self.games,
            eval_interval: self.eval_interval,
            test_games_per_eval: self.test_games,
            parallelism: self.parallelism,
            n_workers: self.workers,
            batch_size: self.batch_size,
            checkpoint_interval: self.checkpoint_interval,
            primary_seed: seed,
            risk_aware: RiskAwareParams { aggressiveness: self.aggressiveness, temperature: self.temperature },
            metrics_dir,
            checkpoint_dir,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub game: GameArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, default_value_t = 20)]
    pub sims: u32,
    #[arg(long, default_value_t = 10)]
    pub buffer: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Receives metrics files and a `checkpoints` directory.
    #[arg(long, env = "MDEAL_OUT_DIR", default_value = "runs")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ResumeArgs {
    #[arg(long)]
    pub checkpoint_dir: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
    /// Where metrics are appended; defaults to the checkpoint directory's parent.
    #[arg(long, env = "MDEAL_OUT_DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BaselineArg {
    Random,
    RiskAware,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StartModeArg {
    AgentFirst,
    Alternating,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = BaselineArg::Random)]
    pub baseline: BaselineArg,
    #[arg(long, value_enum, default_value_t = StartModeArg::Alternating)]
    pub start_mode: StartModeArg,
    #[arg(long, default_value_t = 100)]
    pub games: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub aggressiveness: f64,
    #[arg(long, default_value_t = 2.0)]
    pub temperature: f64,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// How many of the most visited info sets to list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// 0 picks a free port; the bound address is printed on startup.
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, env = "MDEAL_DATA_DIR", default_value = "mdeal-data")]
    pub data_dir: PathBuf,
}

/// One-line diagnostic for a failed command.
#[derive(Debug)]
pub struct CliError(pub String);

impl<E: std::fmt::Display> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn log_record(record: &MetricsRecord) {
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.5}"));
    log::info!(
        "step {} mer {} smooth {} infosets {} vs random {:.2}/{:.2} vs risk-aware {:.2}/{:.2}",
        record.step,
        fmt(record.max_expected_regret),
        fmt(record.max_expected_regret_smooth),
        record.infoset_count,
        record.random_agent_first,
        record.random_alternating,
        record.risk_aware_agent_first,
        record.risk_aware_alternating,
    );
}

fn summary(report: &orchestrator::TrainReport) -> String {
    let mut out = format!("checkpoint: {}\n", report.checkpoint_path.display());
    let state = report.checkpoint.learner_state();
    let _ = writeln!(out, "games merged: {}", report.checkpoint.games_completed());
    let _ = writeln!(out, "info sets: {}", state.infoset_count());
    if let Some(record) = report.records.last() {
        let _ = writeln!(out, "max expected regret (smoothed): {:?}", record.max_expected_regret_smooth);
        let _ = writeln!(
            out,
            "win rate vs random: {} (agent first), {} (alternating)",
            record.random_agent_first, record.random_alternating
        );
        let _ = writeln!(
            out,
            "win rate vs risk-aware: {} (agent first), {} (alternating)",
            record.risk_aware_agent_first, record.risk_aware_alternating
        );
    }
    let _ = write!(out, "elapsed: {:.1}s", report.elapsed.as_secs_f64());
    out
}

fn train(args: &TrainArgs) -> Result<String, CliError> {
    let learner = LearnerConfig {
        sims_per_action: args.sims,
        epsilon: args.epsilon,
        buffer_size: args.buffer,
        game: Arc::new(args.game.config()),
    };
    let run = args.run.run_config(learner, args.seed, args.out_dir.clone(), args.out_dir.join("checkpoints"));
    let report = orchestrator::train_observed(&run, LearnerState::new(run.learner.clone()), 0, &mut log_record)?;
    Ok(summary(&report))
}

fn resume(args: &ResumeArgs) -> Result<String, CliError> {
    let out_dir = args
        .out_dir
        .clone()
        .unwrap_or_else(|| args.checkpoint_dir.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    // Learner settings and seed come from the checkpoint.
    let run = args.run.run_config(LearnerConfig::default(), 0, out_dir, args.checkpoint_dir.clone());
    let report = orchestrator::resume(&run, &mut log_record)?;
    Ok(summary(&report))
}

fn eval(args: &EvalArgs) -> Result<String, CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let baseline = match args.baseline {
        BaselineArg::Random => Baseline::Random,
        BaselineArg::RiskAware => {
            let params = RiskAwareParams { aggressiveness: args.aggressiveness, temperature: args.temperature };
            params.validate()?;
            Baseline::RiskAware(params)
        }
    };
    let mode = match args.start_mode {
        StartModeArg::AgentFirst => StartMode::AgentFirst,
        StartModeArg::Alternating => StartMode::Alternating,
    };
    let result = evaluate(&checkpoint.learner_state(), baseline, mode, args.games, args.seed)?;
    Ok(format!(
        "baseline: {}\nstart mode: {:?}\ngames: {}\nwins: {}\ndraws: {}\nlosses: {}\nwin_rate: {}",
        baseline.name(),
        mode,
        args.games,
        result.wins,
        result.draws,
        result.losses,
        result.win_rate
    ))
}

/// Recovers the abstract state behind each key by hashing every possible one.
fn key_index(config: &GameConfig) -> std::collections::HashMap<InfoSetKey, (ActionMask, u32)> {
    let mut index = std::collections::HashMap::new();
    for bits in 1u16..(1 << AbstractAction::COUNT) {
        let mask = ActionMask(bits);
        for streak in 0..config.turns_per_streak.max(1) {
            for player in 0..2 {
                index.insert(infoset_key(player, &AbstractState::from_mask(mask, streak)), (mask, streak));
            }
        }
    }
    index
}

/// Info-set count, update-count quantiles and the most visited info sets with their
/// average policies, one per line in a fixed column order.
pub fn inspect_report(checkpoint: &Checkpoint, top: usize) -> String {
    let state = checkpoint.learner_state();
    let mut out = String::new();
    let _ = writeln!(out, "games merged: {}", checkpoint.games_completed());
    let _ = writeln!(out, "info sets: {}", state.infoset_count());
    match update_count_quantiles(&state.policies) {
        Some(q) => {
            let _ = writeln!(
                out,
                "update count quantiles: p0={} p25={} p50={} p75={} p100={}",
                q.p0, q.p25, q.p50, q.p75, q.p100
            );
        }
        None => out.push_str("update count quantiles: -\n"),
    }
    let mut visits: Vec<(&InfoSetKey, u64)> = state.policies.update_count.iter().map(|(k, c)| (k, *c)).collect();
    visits.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let index = key_index(&checkpoint.game_config);
    let _ = writeln!(out, "rank\tvisits\tkey\tstreak\tpolicy");
    for (rank, (key, count)) in visits.into_iter().take(top).enumerate() {
        let (streak, policy) = match (key.player(), index.get(key)) {
            (Some(player), Some(&(mask, streak))) => {
                let policy = state.average_policy(player, key, mask);
                let entries: Vec<String> = policy.entries().map(|(a, p)| format!("{}={p:.3}", a.name())).collect();
                (streak.to_string(), entries.join(" "))
            }
            _ => ("?".to_string(), "?".to_string()),
        };
        let _ = writeln!(out, "{}\t{count}\t{key}\t{streak}\t{policy}", rank + 1);
    }
    out.pop();
    out
}

fn inspect(args: &InspectArgs) -> Result<String, CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    Ok(inspect_report(&checkpoint, args.top))
}

fn serve(args: &ServeArgs) -> Result<String, CliError> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let store = FileStore::open(&args.data_dir)
        .map_err(|e| CliError(format!("cannot open data directory {}: {e}", args.data_dir.display())))?;
    let app = Arc::new(AppState::new(checkpoint.learner_state(), Box::new(store)).map_err(CliError)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = match tokio::net::TcpListener::bind((args.host.as_str(), args.port)).await {
            Ok(listener) => listener,
            Err(e) if e.kind() == std::io::ErrorKind::AddrInUse => {
                return Err(CliError(format!("port {} is already in use", args.port)));
            }
            Err(e) => return Err(CliError(format!("cannot listen on {}:{}: {e}", args.host, args.port))),
        };
        let addr = listener.local_addr()?;
        log::info!("restored {} game(s) from {}", app.session_count(), args.data_dir.display());
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        api::serve(listener, app).await?;
        Ok(String::new())
    })
}

pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Train(args) => train(args),
        Command::Resume(args) => resume(args),
        Command::Eval(args) => eval(args),
        Command::Inspect(args) => inspect(args),
        Command::Serve(args) => serve(args),
    }
}
