//! Benchmark harness: playout rates per backend, slowdown and rank tables,
//! head-to-head matches and CSV/markdown output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::mcts::sample;
use crate::agents::{softmax, LinearPolicy, Mcts, MctsConfig};
use crate::backends::{
    Backend, BuildConfig, EvalCounters, FeatureEvaluator, FeatureVector, NetScratch, Scratch, Tracer,
};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::games::Game;
use crate::state::{Action, GameState, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selector {
    Uniform,
    Policy,
}

impl Selector {
    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Uniform => "uniform",
            Selector::Policy => "policy",
        }
    }
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Selector::Uniform),
            "policy" => Ok(Selector::Policy),
            _ => Err(Error::InvalidArgument(format!("unknown selector `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BenchMode {
    /// Warm up, then count playouts completed within the window.
    Timed { warmup: f64, measure: f64 },
    /// Run exactly this many playouts, counting proposition evaluations.
    Fixed(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub game: String,
    pub feature_set: String,
    pub backend: String,
    pub selector: String,
    pub playouts: u64,
    pub seconds: f64,
    pub rate: f64,
    pub prop_evals: u64,
}

/// One playout from the initial state, computing the features of every
/// legal action in every state. Selection draws from `rng` only, so the
/// playout sequence does not depend on the backend.
fn bench_playout<O: crate::backends::EvalObserver>(
    game: &dyn Game,
    ev: &FeatureEvaluator,
    policy: Option<&LinearPolicy>,
    rng: &mut ChaCha8Rng,
    buf: &mut (Vec<Action>, Vec<f64>, Scratch, FeatureVector),
    obs: &mut O,
) {
    let mut state = game.initial_state();
    let (actions, logits, scratch, fv) = buf;
    while !state.is_terminal() {
        actions.clear();
        game.legal_actions_into(&state, actions);
        logits.clear();
        for a in actions.iter() {
            ev.eval_observed(&state, a, scratch, fv, obs);
            logits.push(policy.map_or(0.0, |p| p.logit(state.mover, fv.iter())));
        }
        let i = match policy {
            Some(_) => sample(&softmax(logits), rng),
            None => rng.gen_range(0..actions.len()),
        };
        game.apply(&mut state, &actions[i]);
    }
}

/// Measures the playout rate of one evaluator. `policy` is required for
/// [`Selector::Policy`].
pub fn bench_playouts(
    game: &dyn Game,
    feature_set: &str,
    ev: &FeatureEvaluator,
    mode: BenchMode,
    seed: u64,
    selector: Selector,
    policy: Option<&LinearPolicy>,
) -> Result<BenchResult> {
    let policy = match selector {
        Selector::Uniform => None,
        Selector::Policy => {
            Some(policy.ok_or_else(|| Error::InvalidArgument("policy selector needs a policy".into()))?)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = Default::default();
    let (playouts, seconds, prop_evals) = match mode {
        BenchMode::Fixed(n) => {
            let mut counters = EvalCounters::default();
            let start = Instant::now();
            for _ in 0..n {
                bench_playout(game, ev, policy, &mut rng, &mut buf, &mut counters);
            }
            (n, start.elapsed().as_secs_f64(), counters.prop_evals)
        }
        BenchMode::Timed { warmup, measure } => {
            if !(warmup >= 0.0 && measure > 0.0) {
                return Err(Error::InvalidArgument("durations must be positive".into()));
            }
            let start = Instant::now();
            while start.elapsed() < Duration::from_secs_f64(warmup) {
                bench_playout(game, ev, policy, &mut rng, &mut buf, &mut ());
            }
            let start = Instant::now();
            let window = Duration::from_secs_f64(measure);
            let mut n = 0;
            while start.elapsed() < window {
                bench_playout(game, ev, policy, &mut rng, &mut buf, &mut ());
                n += 1;
            }
            (n, start.elapsed().as_secs_f64(), 0)
        }
    };
    Ok(BenchResult {
        game: game.name().to_string(),
        feature_set: feature_set.to_string(),
        backend: ev.backend().to_string(),
        selector: selector.as_str().to_string(),
        playouts,
        seconds,
        rate: playouts as f64 / seconds.max(f64::MIN_POSITIVE),
        prop_evals,
    })
}

/// Timed measurement of several evaluators of one game, interleaved over
/// `rounds` windows so that drift in machine speed affects all of them
/// alike. Each evaluator warms up once, then gets `measure / rounds`
/// seconds per round; the round's starting evaluator rotates. Every
/// evaluator draws from its own generator seeded with `seed`.
#[allow(clippy::too_many_arguments)]
pub fn bench_round_robin(
    game: &dyn Game,
    feature_set: &str,
    evals: &[&FeatureEvaluator],
    warmup: f64,
    measure: f64,
    rounds: u32,
    seed: u64,
    selector: Selector,
    policy: Option<&LinearPolicy>,
) -> Result<Vec<BenchResult>> {
    if !(warmup >= 0.0 && measure > 0.0) || rounds == 0 {
        return Err(Error::InvalidArgument("durations and rounds must be positive".into()));
    }
    let policy = match selector {
        Selector::Uniform => None,
        Selector::Policy => {
            Some(policy.ok_or_else(|| Error::InvalidArgument("policy selector needs a policy".into()))?)
        }
    };
    let n = evals.len();
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|_| ChaCha8Rng::seed_from_u64(seed)).collect();
    let mut bufs: Vec<(Vec<Action>, Vec<f64>, Scratch, FeatureVector)> = (0..n).map(|_| Default::default()).collect();
    let mut playouts = vec![0u64; n];
    let mut seconds = vec![0f64; n];
    for (i, ev) in evals.iter().enumerate() {
        let start = Instant::now();
        while start.elapsed() < Duration::from_secs_f64(warmup) {
            bench_playout(game, ev, policy, &mut rngs[i], &mut bufs[i], &mut ());
        }
    }
    let window = Duration::from_secs_f64(measure / rounds as f64);
    for r in 0..rounds as usize {
        for j in 0..n {
            let i = (r + j) % n;
            let start = Instant::now();
            while start.elapsed() < window {
                bench_playout(game, evals[i], policy, &mut rngs[i], &mut bufs[i], &mut ());
                playouts[i] += 1;
            }
            seconds[i] += start.elapsed().as_secs_f64();
        }
    }
    Ok(evals
        .iter()
        .enumerate()
        .map(|(i, ev)| BenchResult {
            game: game.name().to_string(),
            feature_set: feature_set.to_string(),
            backend: ev.backend().to_string(),
            selector: selector.as_str().to_string(),
            playouts: playouts[i],
            seconds: seconds[i],
            rate: playouts[i] as f64 / seconds[i].max(f64::MIN_POSITIVE),
            prop_evals: 0,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlowdownRow {
    pub game: String,
    pub feature_set: String,
    pub backend: String,
    pub slowdown: f64,
}

/// Divides each game's baseline rate (naive backend on `baseline_set`) by
/// every configuration's rate.
pub fn slowdown_table(results: &[BenchResult], baseline_set: &str) -> Result<Vec<SlowdownRow>> {
    let naive = Backend::Naive.as_str();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        let base = results
            .iter()
            .find(|b| b.game == r.game && b.backend == naive && b.feature_set == baseline_set)
            .ok_or_else(|| Error::MissingBaseline(format!("{} / {naive} / {baseline_set}", r.game)))?;
        rows.push(SlowdownRow {
            game: r.game.clone(),
            feature_set: r.feature_set.clone(),
            backend: r.backend.clone(),
            slowdown: base.rate / r.rate,
        });
    }
    Ok(rows)
}

/// Ranks (1 = fastest) of each backend per (game, feature set); equal rates
/// share the better rank.
pub fn rank_table(results: &[BenchResult]) -> Vec<(String, String, String, usize)> {
    let mut groups: BTreeMap<(&str, &str), Vec<&BenchResult>> = BTreeMap::new();
    for r in results {
        groups.entry((&r.game, &r.feature_set)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((game, set), rs) in groups {
        for r in &rs {
            let rank = 1 + rs.iter().filter(|o| o.rate > r.rate).count();
            out.push((game.to_string(), set.to_string(), r.backend.clone(), rank));
        }
    }
    out
}

/// How often each backend obtained each rank.
pub fn rank_counts(ranks: &[(String, String, String, usize)]) -> BTreeMap<String, [usize; 4]> {
    let mut counts: BTreeMap<String, [usize; 4]> = BTreeMap::new();
    for (_, _, b, r) in ranks {
        if (1..=4).contains(r) {
            counts.entry(b.clone()).or_default()[r - 1] += 1;
        }
    }
    counts
}

pub const CSV_HEADER: [&str; 8] = [
    "game",
    "feature_set",
    "backend",
    "selector",
    "playouts",
    "seconds",
    "rate",
    "prop_evals",
];

pub fn write_csv(results: &[BenchResult], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in results {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<BenchResult>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|x| x.map_err(csv_err)).collect()
}

/// Markdown with rates, slowdowns (when the baseline exists) and rank
/// counts.
pub fn to_markdown(results: &[BenchResult], baseline_set: &str) -> String {
    let backends: Vec<&str> = Backend::ALL.iter().map(|b| b.as_str()).collect();
    let mut keys: Vec<(&str, &str)> = results
        .iter()
        .map(|r| (r.game.as_str(), r.feature_set.as_str()))
        .collect();
    keys.dedup();
    keys.sort_unstable();
    keys.dedup();
    let header = |title: &str| {
        let mut s = format!("### {title}\n\n| game | features |");
        for b in &backends {
            let _ = write!(s, " {b} |");
        }
        s.push_str("\n|---|---|");
        s.push_str(&"---:|".repeat(backends.len()));
        s.push('\n');
        s
    };
    let mut md = header("Playouts per second");
    let cell = |g: &str, f: &str, b: &str| {
        results
            .iter()
            .find(|r| r.game == g && r.feature_set == f && r.backend == b)
    };
    for &(g, f) in &keys {
        let _ = write!(md, "| {g} | {f} |");
        for b in &backends {
            match cell(g, f, b) {
                Some(r) => {
                    let _ = write!(md, " {:.2} |", r.rate);
                }
                None => md.push_str(" - |"),
            }
        }
        md.push('\n');
    }
    if let Ok(rows) = slowdown_table(results, baseline_set) {
        md.push('\n');
        md.push_str(&header(&format!("Slowdown (baseline: naive, {baseline_set})")));
        for &(g, f) in &keys {
            let _ = write!(md, "| {g} | {f} |");
            for b in &backends {
                match rows
                    .iter()
                    .find(|r| r.game == g && r.feature_set == f && r.backend == *b)
                {
                    Some(r) => {
                        let _ = write!(md, " {:.3} |", r.slowdown);
                    }
                    None => md.push_str(" - |"),
                }
            }
            md.push('\n');
        }
    }
    let counts = rank_counts(&rank_table(results));
    md.push_str("\n### Rank counts\n\n| backend | 1 | 2 | 3 | 4 |\n|---|---:|---:|---:|---:|\n");
    for b in &backends {
        if let Some(c) = counts.get(*b) {
            let _ = writeln!(md, "| {b} | {} | {} | {} | {} |", c[0], c[1], c[2], c[3]);
        }
    }
    md
}

pub fn write_markdown(results: &[BenchResult], baseline_set: &str, path: &Path) -> Result<()> {
    std::fs::write(path, to_markdown(results, baseline_set)).map_err(|e| Error::io(path, e))
}

/// A player in a match.
pub enum Agent<'a> {
    Random,
    /// Plays the policy's most probable action.
    Greedy {
        evaluator: &'a FeatureEvaluator,
        policy: &'a LinearPolicy,
    },
    Mcts {
        evaluator: &'a FeatureEvaluator,
        policy: &'a LinearPolicy,
        config: MctsConfig,
    },
}

impl Agent<'_> {
    pub fn choose(&self, game: &dyn Game, state: &GameState, rng: &mut ChaCha8Rng) -> Action {
        match self {
            Agent::Random => {
                let acts = game.legal_actions(state);
                acts[rng.gen_range(0..acts.len())]
            }
            Agent::Greedy { evaluator, policy } => {
                let acts = game.legal_actions(state);
                let logits = policy.logits(
                    evaluator,
                    state,
                    &acts,
                    &mut Scratch::default(),
                    &mut FeatureVector::default(),
                );
                let best = logits
                    .iter()
                    .enumerate()
                    .fold(0, |b, (i, &l)| if l > logits[b] { i } else { b });
                acts[best]
            }
            Agent::Mcts {
                evaluator,
                policy,
                config,
            } => Mcts::new(game, evaluator, policy, *config).search(state, rng).action(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub game: String,
    pub agent_a: String,
    pub agent_b: String,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    pub win_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl MatchResult {
    pub fn games(&self) -> u32 {
        self.wins + self.draws + self.losses
    }
}

/// Win rate (draws count half) with a 95% normal-approximation interval.
pub fn binomial_interval(wins: u32, draws: u32, games: u32) -> (f64, f64, f64) {
    if games == 0 {
        return (0.0, 0.0, 1.0);
    }
    let n = games as f64;
    let p = (wins as f64 + 0.5 * draws as f64) / n;
    let half = 1.96 * (p * (1.0 - p) / n).sqrt();
    (p, (p - half).max(0.0), (p + half).min(1.0))
}

/// Plays `games` two-player games, alternating seats; agent A moves first
/// in even-numbered games. Each game gets its own seed derived from `seed`.
pub fn run_match(
    game: &dyn Game,
    a: (&str, &Agent),
    b: (&str, &Agent),
    games: u32,
    seed: u64,
    mut on_game: impl FnMut(u32, Status),
) -> Result<MatchResult> {
    if games < 2 || !games.is_multiple_of(2) {
        return Err(Error::InvalidArgument(
            "match needs an even number of games (at least 2)".into(),
        ));
    }
    if game.meta().players != 2 {
        return Err(Error::InvalidArgument("matches are two-player only".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let (mut wins, mut draws, mut losses) = (0, 0, 0);
    for g in 0..games {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let a_seat = if g % 2 == 0 { 1 } else { 2 };
        let mut s = game.initial_state();
        while !s.is_terminal() {
            let act = if s.mover == a_seat {
                a.1.choose(game, &s, &mut rng)
            } else {
                b.1.choose(game, &s, &mut rng)
            };
            game.apply(&mut s, &act);
        }
        match s.status {
            Status::Won(p) if p == a_seat => wins += 1,
            Status::Won(_) => losses += 1,
            _ => draws += 1,
        }
        on_game(g, s.status);
    }
    let (win_rate, ci_low, ci_high) = binomial_interval(wins, draws, games);
    Ok(MatchResult {
        game: game.name().to_string(),
        agent_a: a.0.to_string(),
        agent_b: b.0.to_string(),
        wins,
        draws,
        losses,
        win_rate,
        ci_low,
        ci_high,
    })
}

/// Outcome of comparing all backends over seeded random playouts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub queries: u64,
    pub mismatches: u64,
    /// Queries in which some proposition was evaluated twice by a net.
    pub repeated_evals: u64,
    /// Queries whose net evaluated more propositions than it holds.
    pub over_budget: u64,
    pub first_mismatch: Option<String>,
}

impl SweepReport {
    pub fn ok(&self) -> bool {
        self.mismatches == 0 && self.repeated_evals == 0 && self.over_budget == 0
    }
}

/// Evaluates every (state, legal action) of `playouts` uniform playouts
/// (seeds `seed..seed+playouts`) with all four backends and compares the
/// results. Also traces every SPatterNet query; with `verify`, each
/// deduction is checked against the state (panicking if unsound).
pub fn oracle_sweep(game: &dyn Game, set: &FeatureSet, playouts: u64, seed: u64, verify: bool) -> Result<SweepReport> {
    let evals: Vec<FeatureEvaluator> = Backend::ALL
        .iter()
        .map(|&b| FeatureEvaluator::build(game, std::slice::from_ref(set), b, BuildConfig::default()))
        .collect::<Result<_>>()?;
    let mut report = SweepReport::default();
    let mut scratch = Scratch::default();
    let mut net_scratch = NetScratch::default();
    let mut outs = vec![FeatureVector::default(); evals.len()];
    let mut tracer = Tracer::default();
    let mut seen: Vec<bool> = Vec::new();
    let mut actions = Vec::new();
    let mut traced = FeatureVector::default();
    for i in 0..playouts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i));
        let mut state = game.initial_state();
        while !state.is_terminal() {
            actions.clear();
            game.legal_actions_into(&state, &mut actions);
            for a in &actions {
                report.queries += 1;
                for (e, out) in evals.iter().zip(outs.iter_mut()) {
                    e.eval(&state, a, &mut scratch, out);
                }
                if let Some(e) = evals[1..].iter().zip(&outs[1..]).find(|(_, o)| **o != outs[0]) {
                    report.mismatches += 1;
                    report.first_mismatch.get_or_insert_with(|| {
                        format!(
                            "{} vs naive at ply {} action {:?}: {:?} != {:?}",
                            e.0.backend(),
                            state.ply,
                            a,
                            e.1.to_vec(),
                            outs[0].to_vec()
                        )
                    });
                }
                if let Some(net) = evals[2].net_for(&state, a) {
                    tracer.props.clear();
                    traced.reset(set.len());
                    if verify {
                        net.eval_verified(&state, &mut traced, &mut net_scratch, &mut tracer);
                    } else {
                        net.eval(&state, &mut traced, &mut net_scratch, &mut tracer);
                    }
                    seen.clear();
                    seen.resize(net.num_props(), false);
                    if tracer.props.iter().any(|&p| std::mem::replace(&mut seen[p], true)) {
                        report.repeated_evals += 1;
                    }
                    if tracer.props.len() > net.num_props() {
                        report.over_budget += 1;
                    }
                }
            }
            let a = actions[rng.gen_range(0..actions.len())];
            game.apply(&mut state, &a);
        }
    }
    Ok(report)
}
