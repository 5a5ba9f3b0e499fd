//! Self-play training: MCTS moves sampled from visit counts, one gradient
//! step per move for every player, and feature discovery after each
//! episode.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::discovery::discover_features;
use super::mcts::{Budget, FinalMove, Mcts, MctsConfig};
use super::policy::LinearPolicy;
use super::train::{train_step, ReplayBuffer, RmsProp, Sample, TrainConfig};
use crate::backends::{Backend, BuildConfig, FeatureEvaluator, FeatureVector, Scratch};
use crate::error::Result;
use crate::features::{canonical_key, FeatureSet};
use crate::games::Game;
use crate::state::{Action, GameState};

#[derive(Clone, Debug)]
pub struct SelfPlayConfig {
    pub episodes: usize,
    pub mcts: MctsConfig,
    pub train: TrainConfig,
    pub buffer_capacity: usize,
    pub discovery: bool,
    pub backend: Backend,
    pub seed: u64,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        SelfPlayConfig {
            episodes: 50,
            mcts: MctsConfig {
                budget: Budget::Iterations(200),
                final_move: FinalMove::Proportional,
                ..MctsConfig::default()
            },
            train: TrainConfig::default(),
            buffer_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            discovery: true,
            backend: Backend::SpatterNetJit,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    pub plies: u32,
    pub utilities: Vec<f64>,
    pub num_features: usize,
    pub added: usize,
}

pub struct Trained {
    pub policy: LinearPolicy,
    pub features: FeatureSet,
    pub buffers: Vec<ReplayBuffer>,
}

/// Active features per action for the mover.
pub fn action_features(ev: &FeatureEvaluator, state: &GameState, actions: &[Action]) -> Vec<Vec<u32>> {
    let mut scratch = Scratch::default();
    let mut fv = FeatureVector::default();
    actions
        .iter()
        .map(|a| {
            if a.is_pass() {
                return Vec::new();
            }
            ev.eval(state, a, &mut scratch, &mut fv);
            fv.to_vec()
        })
        .collect()
}

fn refresh(buf: &mut ReplayBuffer, idx: &[usize], ev: &FeatureEvaluator, n: usize) {
    for &i in idx {
        let s = buf.get_mut(i);
        if s.feature_count != n {
            s.features = action_features(ev, &s.state, &s.actions);
            s.feature_count = n;
        }
    }
}

fn draw_batch<'b>(
    buf: &'b mut ReplayBuffer,
    ev: &FeatureEvaluator,
    n: usize,
    size: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'b Sample> {
    let idx = buf.sample_indices(size, rng);
    refresh(buf, &idx, ev, n);
    let buf: &ReplayBuffer = buf;
    idx.iter().map(|&i| buf.get(i)).collect()
}

/// Trains a policy from `initial` features. `on_episode` sees progress.
pub fn self_play(
    game: &dyn Game,
    initial: FeatureSet,
    config: &SelfPlayConfig,
    mut on_episode: impl FnMut(&EpisodeStats),
) -> Result<Trained> {
    let meta = game.meta();
    let np = meta.players;
    let k = meta.graph.max_directions().max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut set = initial;
    let mut policy = LinearPolicy::zeros(np, set.len());
    let mut opts = vec![RmsProp::default(); np as usize];
    let mut buffers: Vec<ReplayBuffer> = (0..np).map(|_| ReplayBuffer::new(config.buffer_capacity)).collect();
    let mut ev = FeatureEvaluator::build(game, &[set.clone()], config.backend, BuildConfig::default())?;

    for episode in 0..config.episodes {
        let mut state = game.initial_state();
        while !state.is_terminal() {
            let result = Mcts::new(game, &ev, &policy, config.mcts).search(&state, &mut rng);
            let features = action_features(&ev, &state, &result.actions);
            buffers[state.mover as usize - 1].push(Sample {
                state: state.clone(),
                target: result.visit_distribution(),
                actions: result.actions.clone(),
                features,
                feature_count: set.len(),
            });
            game.apply(&mut state, &result.action());
            for p in 1..=np {
                let b = &mut buffers[p as usize - 1];
                if b.is_empty() {
                    continue;
                }
                let batch = draw_batch(b, &ev, set.len(), config.train.batch, &mut rng);
                train_step(policy.weights_mut(p), &mut opts[p as usize - 1], &batch, &config.train);
            }
        }

        let mut added = 0;
        if config.discovery {
            let mut new = Vec::new();
            for p in 1..=np {
                let b = &mut buffers[p as usize - 1];
                let batch = draw_batch(b, &ev, set.len(), config.train.batch, &mut rng);
                new.extend(discover_features(&set, meta, &ev, p, policy.weights(p), &batch));
            }
            let mut seen: std::collections::HashSet<String> =
                set.features.iter().map(|f| canonical_key(f, k)).collect();
            for f in new {
                if seen.insert(canonical_key(&f, k)) {
                    set.features.push(f);
                    added += 1;
                }
            }
            if added > 0 {
                policy.grow(set.len());
                ev = FeatureEvaluator::build(game, &[set.clone()], config.backend, BuildConfig::default())?;
            }
        }
        on_episode(&EpisodeStats {
            episode,
            plies: state.ply,
            utilities: game.utilities(&state),
            num_features: set.len(),
            added,
        });
    }
    Ok(Trained {
        policy,
        features: set,
        buffers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::generate_atomic;
    use crate::games::by_name;

    fn quick(episodes: usize, seed: u64) -> SelfPlayConfig {
        SelfPlayConfig {
            episodes,
            mcts: MctsConfig {
                budget: Budget::Iterations(50),
                final_move: FinalMove::Proportional,
                ..MctsConfig::default()
            },
            seed,
            ..SelfPlayConfig::default()
        }
    }

    #[test]
    fn one_episode_fills_buffers_per_ply() {
        let game = by_name("tictactoe").unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let mut plies = 0;
        let t = self_play(game.as_ref(), set, &quick(1, 3), |s| plies = s.plies).unwrap();
        let total: usize = t.buffers.iter().map(ReplayBuffer::len).sum();
        assert_eq!(total, plies as usize);
    }

    #[test]
    fn equal_seeds_give_equal_weights() {
        let game = by_name("tictactoe").unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let a = self_play(game.as_ref(), set.clone(), &quick(3, 9), |_| {}).unwrap();
        let b = self_play(game.as_ref(), set, &quick(3, 9), |_| {}).unwrap();
        assert_eq!(a.policy, b.policy);
        assert_eq!(a.features, b.features);
    }

    #[test]
    fn discovery_adds_at_most_two_per_episode() {
        let game = by_name("tictactoe").unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let start = set.len();
        let t = self_play(game.as_ref(), set, &quick(4, 1), |s| assert!(s.added <= 2)).unwrap();
        assert!(t.features.len() <= start + 8);
        for f in &t.features.features {
            f.validate().unwrap();
        }
    }
}
