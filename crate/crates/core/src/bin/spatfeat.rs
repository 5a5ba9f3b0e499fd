//! Command-line front end: benchmarks, oracle checks, training and matches.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use log::info;

use spatfeat::agents::{self_play, Budget, FinalMove, LinearPolicy, MctsConfig, SelfPlayConfig};
use spatfeat::backends::{Backend, BuildConfig, FeatureEvaluator};
use spatfeat::bench::{
    bench_playouts, bench_round_robin, oracle_sweep, rank_counts, rank_table, read_csv, slowdown_table, to_markdown,
    write_csv, write_markdown, Agent, BenchMode, BenchResult, Selector,
};
use spatfeat::features::{generate_atomic, FeatureSet};
use spatfeat::games::{by_name, Game, GAME_NAMES};
use spatfeat::ordering::Heuristic;
use spatfeat::{Error, Result};

#[derive(Parser)]
#[command(name = "spatfeat", version, about = "Spatial feature evaluation for board games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure playout rates per game, feature set and backend.
    Bench(BenchArgs),
    /// Slowdown and rank tables from a results CSV.
    Rank(RankArgs),
    /// Play two agents against each other with alternating seats.
    Match(MatchArgs),
    /// Train a policy by self-play with feature discovery.
    Train(TrainArgs),
    /// Write an atomic feature set.
    GenFeatures(GenArgs),
    /// Compare all backends on random playouts; fails on any mismatch.
    Check(CheckArgs),
    /// Print instance-store statistics.
    Instances(InstancesArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated game names, or `all`.
    #[arg(long, default_value = "all")]
    game: String,
    /// Comma-separated feature sets: `Atomic-M-N` or file paths.
    #[arg(long, default_value = "Atomic-1-1,Atomic-2-2")]
    features: String,
    /// Comma-separated backends, or `all`.
    #[arg(long, default_value = "all")]
    backend: String,
    #[arg(long, default_value_t = 5.0)]
    warmup: f64,
    #[arg(long, default_value_t = 30.0)]
    seconds: f64,
    /// Fixed playout count instead of a time window; counts evaluations.
    #[arg(long)]
    playouts: Option<u64>,
    /// Split the time window into this many rounds that alternate between
    /// backends.
    #[arg(long, default_value_t = 1)]
    rounds: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "uniform")]
    selector: String,
    /// Policy file for `--selector policy`; its features replace `--features`.
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value = "eq2")]
    heuristic: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "Atomic-1-1")]
    baseline: String,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    game: String,
    /// Agent spec: `random`, `greedy:<backend>` or `mcts:<backend>`.
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    /// Policy file shared by both agents (zero weights on atomic features otherwise).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    games: u32,
    #[arg(long, default_value_t = 0.25)]
    move_seconds: f64,
    /// Fixed iteration budget instead of `--move-seconds`.
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    game: String,
    #[arg(long, default_value_t = 50)]
    episodes: usize,
    #[arg(long, default_value_t = 0.1)]
    move_seconds: f64,
    /// Fixed iteration budget instead of `--move-seconds` (deterministic).
    #[arg(long)]
    iterations: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "Atomic-2-4")]
    features: String,
    #[arg(long, default_value = "spatternet-jit")]
    backend: String,
    #[arg(long)]
    no_discovery: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    game: String,
    #[arg(long, default_value_t = 1)]
    max_len: usize,
    #[arg(long, default_value_t = 1)]
    max_straight: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value = "all")]
    game: String,
    #[arg(long, default_value = "Atomic-1-1,Atomic-1-2,Atomic-2-2")]
    features: String,
    #[arg(long, default_value_t = 100)]
    playouts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check every deduction against the state as well.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct InstancesArgs {
    #[arg(long)]
    game: String,
    #[arg(long, default_value = "Atomic-1-1")]
    features: String,
}

fn split(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn games(spec: &str) -> Result<Vec<Arc<dyn Game>>> {
    if spec == "all" {
        return GAME_NAMES.iter().map(|g| by_name(g)).collect();
    }
    split(spec).into_iter().map(by_name).collect()
}

fn backends(spec: &str) -> Result<Vec<Backend>> {
    if spec == "all" {
        return Ok(Backend::ALL.to_vec());
    }
    split(spec).into_iter().map(str::parse).collect()
}

/// Resolves `Atomic-M-N` or loads a feature-set file.
fn feature_set(game: &dyn Game, spec: &str) -> Result<FeatureSet> {
    if let Some(rest) = spec.strip_prefix("Atomic-") {
        let parsed = rest
            .split_once('-')
            .and_then(|(m, n)| Some((m.parse::<usize>().ok()?, n.parse::<usize>().ok()?)));
        return match parsed {
            Some((m, n)) if m >= 1 && n >= m => Ok(generate_atomic(game.meta(), m, n)),
            _ => Err(Error::InvalidArgument(format!(
                "bad atomic set `{spec}` (want Atomic-M-N with 1 <= M <= N)"
            ))),
        };
    }
    FeatureSet::load(Path::new(spec))
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let selector: Selector = a.selector.parse()?;
    let heuristic: Heuristic = a.heuristic.parse()?;
    let mode = match a.playouts {
        Some(n) => BenchMode::Fixed(n),
        None => BenchMode::Timed {
            warmup: a.warmup,
            measure: a.seconds,
        },
    };
    let loaded = a.policy.as_deref().map(LinearPolicy::load).transpose()?;
    let mut results: Vec<BenchResult> = Vec::new();
    for game in games(&a.game)? {
        let sets: Vec<(String, FeatureSet)> = match &loaded {
            Some((_, set)) => vec![("policy".to_string(), set.clone())],
            None => split(&a.features)
                .into_iter()
                .map(|s| Ok((s.to_string(), feature_set(game.as_ref(), s)?)))
                .collect::<Result<_>>()?,
        };
        let cfg = BuildConfig {
            heuristic,
            order_seed: a.seed,
        };
        let policy = loaded.as_ref().map(|p| &p.0);
        for (name, set) in &sets {
            let evals: Vec<FeatureEvaluator> = backends(&a.backend)?
                .into_iter()
                .map(|b| FeatureEvaluator::build(game.as_ref(), std::slice::from_ref(set), b, cfg))
                .collect::<Result<_>>()?;
            let rs = match mode {
                BenchMode::Timed { warmup, measure } if a.rounds > 1 => {
                    let refs: Vec<&FeatureEvaluator> = evals.iter().collect();
                    bench_round_robin(
                        game.as_ref(),
                        name,
                        &refs,
                        warmup,
                        measure,
                        a.rounds,
                        a.seed,
                        selector,
                        policy,
                    )?
                }
                _ => evals
                    .iter()
                    .map(|ev| bench_playouts(game.as_ref(), name, ev, mode, a.seed, selector, policy))
                    .collect::<Result<_>>()?,
            };
            for r in rs {
                println!(
                    "{:<13} {:<12} {:<15} {:>8} playouts {:>9.3} s {:>12.2}/s {:>14} evals",
                    r.game, r.feature_set, r.backend, r.playouts, r.seconds, r.rate, r.prop_evals
                );
                results.push(r);
            }
        }
    }
    if let Some(p) = &a.out {
        write_csv(&results, p)?;
    }
    if let Some(p) = &a.markdown {
        let base = split(&a.features).first().copied().unwrap_or("Atomic-1-1").to_string();
        write_markdown(&results, &base, p)?;
    }
    Ok(())
}

fn run_rank(a: RankArgs) -> Result<()> {
    let results = read_csv(&a.input)?;
    for r in slowdown_table(&results, &a.baseline)? {
        println!(
            "{:<13} {:<12} {:<15} slowdown {:.3}",
            r.game, r.feature_set, r.backend, r.slowdown
        );
    }
    println!();
    for (b, c) in rank_counts(&rank_table(&results)) {
        println!("{b:<15} ranks 1..4: {:?}", c);
    }
    if let Some(p) = &a.markdown {
        std::fs::write(p, to_markdown(&results, &a.baseline)).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn run_match(a: MatchArgs) -> Result<()> {
    let game = by_name(&a.game)?;
    let (policy, set) = match &a.policy {
        Some(p) => LinearPolicy::load(p)?,
        None => {
            let set = generate_atomic(game.meta(), 1, 1);
            (LinearPolicy::zeros(game.meta().players, set.len()), set)
        }
    };
    let mcts = MctsConfig {
        budget: match a.iterations {
            Some(n) => Budget::Iterations(n),
            None => Budget::Seconds(a.move_seconds),
        },
        final_move: FinalMove::MaxVisits,
        ..MctsConfig::default()
    };
    // evaluators live as long as the agents that borrow them
    let parse = |spec: &str| -> Result<(String, Option<Backend>)> {
        match spec.split_once(':') {
            None if spec == "random" => Ok(("random".into(), None)),
            Some((kind @ ("greedy" | "mcts"), b)) => Ok((kind.into(), Some(b.parse()?))),
            _ => Err(Error::InvalidArgument(format!("bad agent `{spec}`"))),
        }
    };
    let (ka, ba) = parse(&a.a)?;
    let (kb, bb) = parse(&a.b)?;
    let build = |b: Option<Backend>| -> Result<Option<FeatureEvaluator>> {
        b.map(|b| FeatureEvaluator::build(game.as_ref(), std::slice::from_ref(&set), b, BuildConfig::default()))
            .transpose()
    };
    let (ea, eb) = (build(ba)?, build(bb)?);
    fn agent<'a>(
        kind: &str,
        ev: &'a Option<FeatureEvaluator>,
        policy: &'a LinearPolicy,
        mcts: MctsConfig,
    ) -> Agent<'a> {
        match (kind, ev) {
            ("greedy", Some(e)) => Agent::Greedy { evaluator: e, policy },
            ("mcts", Some(e)) => Agent::Mcts {
                evaluator: e,
                policy,
                config: mcts,
            },
            _ => Agent::Random,
        }
    }
    let (agent_a, agent_b) = (agent(&ka, &ea, &policy, mcts), agent(&kb, &eb, &policy, mcts));
    let r = spatfeat::bench::run_match(
        game.as_ref(),
        (&a.a, &agent_a),
        (&a.b, &agent_b),
        a.games,
        a.seed,
        |g, s| {
            info!("game {g}: {s:?}");
        },
    )?;
    println!(
        "{} {} vs {}: {}W {}D {}L  win rate {:.3} [{:.3}, {:.3}]",
        r.game, r.agent_a, r.agent_b, r.wins, r.draws, r.losses, r.win_rate, r.ci_low, r.ci_high
    );
    Ok(())
}

fn run_train(a: TrainArgs) -> Result<()> {
    let game = by_name(&a.game)?;
    let set = feature_set(game.as_ref(), &a.features)?;
    let config = SelfPlayConfig {
        episodes: a.episodes,
        mcts: MctsConfig {
            budget: match a.iterations {
                Some(n) => Budget::Iterations(n),
                None => Budget::Seconds(a.move_seconds),
            },
            final_move: FinalMove::Proportional,
            ..MctsConfig::default()
        },
        discovery: !a.no_discovery,
        backend: a.backend.parse()?,
        seed: a.seed,
        ..SelfPlayConfig::default()
    };
    let trained = self_play(game.as_ref(), set, &config, |s| {
        info!(
            "episode {} plies {} utilities {:?} features {} (+{})",
            s.episode, s.plies, s.utilities, s.num_features, s.added
        );
    })?;
    trained.policy.save(&trained.features, &a.out)?;
    println!("wrote {} ({} features)", a.out.display(), trained.features.len());
    Ok(())
}

fn run_gen(a: GenArgs) -> Result<()> {
    let game = by_name(&a.game)?;
    if a.max_len == 0 || a.max_straight < a.max_len {
        return Err(Error::InvalidArgument("need 1 <= max-len <= max-straight".into()));
    }
    let set = generate_atomic(game.meta(), a.max_len, a.max_straight);
    match &a.out {
        Some(p) => {
            set.save(p)?;
            println!("wrote {} features to {}", set.len(), p.display());
        }
        None => print!("{}", set.to_text()),
    }
    Ok(())
}

fn run_check(a: CheckArgs) -> Result<bool> {
    let mut all_ok = true;
    for game in games(&a.game)? {
        for spec in split(&a.features) {
            let set = feature_set(game.as_ref(), spec)?;
            let r = oracle_sweep(game.as_ref(), &set, a.playouts, a.seed, a.verify)?;
            println!(
                "{:<13} {:<12} {:>9} queries  {} mismatches  {} repeated evals  {}",
                game.name(),
                spec,
                r.queries,
                r.mismatches,
                r.repeated_evals,
                if r.ok() { "ok" } else { "FAIL" }
            );
            if let Some(m) = &r.first_mismatch {
                println!("  first mismatch: {m}");
            }
            all_ok &= r.ok();
        }
    }
    Ok(all_ok)
}

fn run_instances(a: InstancesArgs) -> Result<()> {
    let game = by_name(&a.game)?;
    let set = feature_set(game.as_ref(), &a.features)?;
    let ev = FeatureEvaluator::build(
        game.as_ref(),
        std::slice::from_ref(&set),
        Backend::Naive,
        BuildConfig::default(),
    )?;
    println!("{}: {} features", game.name(), set.len());
    for p in 1..=game.meta().players {
        let s = ev.store(p);
        let phi: usize = s.keys().map(|(_, e)| e.phi_init.len()).sum();
        println!(
            "player {p}: {} instances, {} proactive keys, {} reactive keys, {} distinct props, {} phi entries, {} skipped forks",
            s.instances.len(),
            s.proactive.len(),
            s.reactive.len(),
            s.num_distinct_props(),
            phi,
            s.skipped_forks
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Bench(a) => run_bench(a).map(|_| true),
        Command::Rank(a) => run_rank(a).map(|_| true),
        Command::Match(a) => run_match(a).map(|_| true),
        Command::Train(a) => run_train(a).map(|_| true),
        Command::GenFeatures(a) => run_gen(a).map(|_| true),
        Command::Check(a) => run_check(a),
        Command::Instances(a) => run_instances(a).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
