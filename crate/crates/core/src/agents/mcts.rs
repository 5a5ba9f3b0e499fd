//! PUCT Monte Carlo tree search guided by a linear softmax policy. Each
//! iteration expands exactly one node; playouts mix uniform and policy
//! sampling.

use std::time::{Duration, Instant};

use rand::Rng;

use super::policy::{softmax, LinearPolicy};
use crate::backends::{FeatureEvaluator, FeatureVector, Scratch};
use crate::games::Game;
use crate::state::{Action, GameState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Iterations(u32),
    Seconds(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalMove {
    /// Sample proportionally to root visit counts.
    Proportional,
    MaxVisits,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MctsConfig {
    pub c_puct: f64,
    /// Probability of a uniform (rather than policy) playout step.
    pub epsilon: f64,
    pub budget: Budget,
    pub final_move: FinalMove,
}

impl Default for MctsConfig {
    fn default() -> Self {
        MctsConfig {
            c_puct: 2.5,
            epsilon: 0.5,
            budget: Budget::Iterations(1000),
            final_move: FinalMove::MaxVisits,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub actions: Vec<Action>,
    pub visits: Vec<u32>,
    pub chosen: usize,
    pub iterations: u32,
}

impl SearchResult {
    pub fn action(&self) -> Action {
        self.actions[self.chosen]
    }

    /// Visit counts normalised to a distribution.
    pub fn visit_distribution(&self) -> Vec<f64> {
        let total: u32 = self.visits.iter().sum();
        if total == 0 {
            return vec![1.0 / self.visits.len() as f64; self.visits.len()];
        }
        self.visits.iter().map(|&v| v as f64 / total as f64).collect()
    }
}

struct Node {
    state: GameState,
    actions: Vec<Action>,
    priors: Vec<f64>,
    children: Vec<u32>,
    visits: u32,
    /// Summed utilities per player.
    value: Vec<f64>,
}

const NONE: u32 = u32::MAX;

/// A search agent bound to a game, evaluator and policy.
pub struct Mcts<'a> {
    pub game: &'a dyn Game,
    pub evaluator: &'a FeatureEvaluator,
    pub policy: &'a LinearPolicy,
    pub config: MctsConfig,
    scratch: Scratch,
    fv: FeatureVector,
    buf: Vec<Action>,
}

impl<'a> Mcts<'a> {
    pub fn new(
        game: &'a dyn Game,
        evaluator: &'a FeatureEvaluator,
        policy: &'a LinearPolicy,
        config: MctsConfig,
    ) -> Self {
        Mcts {
            game,
            evaluator,
            policy,
            config,
            scratch: Scratch::default(),
            fv: FeatureVector::default(),
            buf: Vec::new(),
        }
    }

    fn node(&mut self, state: GameState) -> Node {
        let players = self.game.meta().players as usize;
        let (actions, priors) = if state.is_terminal() {
            (Vec::new(), Vec::new())
        } else {
            let actions = self.game.legal_actions(&state);
            let priors = self
                .policy
                .distribution(self.evaluator, &state, &actions, &mut self.scratch, &mut self.fv);
            (actions, priors)
        };
        Node {
            children: vec![NONE; actions.len()],
            state,
            actions,
            priors,
            visits: 0,
            value: vec![0.0; players],
        }
    }

    fn select(&self, nodes: &[Node], n: usize) -> usize {
        let node = &nodes[n];
        let mover = node.state.mover as usize - 1;
        let parent_q = if node.visits > 0 {
            node.value[mover] / node.visits as f64
        } else {
            0.0
        };
        let sqrt_total = (node.visits.max(1) as f64).sqrt();
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, (&c, &p)) in node.children.iter().zip(&node.priors).enumerate() {
            let (q, visits) = match c {
                NONE => (parent_q, 0),
                c => {
                    let ch = &nodes[c as usize];
                    (ch.value[mover] / ch.visits as f64, ch.visits)
                }
            };
            let score = q + self.config.c_puct * p * sqrt_total / (1.0 + visits as f64);
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }

    /// Plays to the end from `state`; each step is uniform with probability
    /// epsilon and sampled from the policy otherwise.
    pub fn playout<R: Rng>(&mut self, mut state: GameState, rng: &mut R) -> Vec<f64> {
        while !state.is_terminal() {
            self.buf.clear();
            self.game.legal_actions_into(&state, &mut self.buf);
            let i = if rng.gen_bool(self.config.epsilon) {
                rng.gen_range(0..self.buf.len())
            } else {
                let logits = self
                    .policy
                    .logits(self.evaluator, &state, &self.buf, &mut self.scratch, &mut self.fv);
                sample(&softmax(&logits), rng)
            };
            let a = self.buf[i];
            self.game.apply(&mut state, &a);
        }
        self.game.utilities(&state)
    }

    pub fn search<R: Rng>(&mut self, root: &GameState, rng: &mut R) -> SearchResult {
        assert!(!root.is_terminal(), "search from a terminal state");
        let mut nodes = vec![self.node(root.clone())];
        let start = Instant::now();
        let deadline = match self.config.budget {
            Budget::Seconds(s) => Some(Duration::from_secs_f64(s.max(0.0))),
            Budget::Iterations(_) => None,
        };
        let mut iterations = 0u32;
        let mut path = Vec::new();
        loop {
            match (self.config.budget, deadline) {
                (Budget::Iterations(n), _) if iterations >= n => break,
                (_, Some(d)) if iterations > 0 && start.elapsed() >= d => break,
                _ => {}
            }
            path.clear();
            let mut n = 0usize;
            path.push(n);
            let utilities = loop {
                if nodes[n].state.is_terminal() {
                    break self.game.utilities(&nodes[n].state);
                }
                let i = self.select(&nodes, n);
                match nodes[n].children[i] {
                    NONE => {
                        let mut s = nodes[n].state.clone();
                        self.game.apply(&mut s, &nodes[n].actions[i]);
                        let child = self.node(s);
                        let id = nodes.len();
                        nodes[n].children[i] = id as u32;
                        nodes.push(child);
                        path.push(id);
                        let s = nodes[id].state.clone();
                        break self.playout(s, rng);
                    }
                    c => {
                        n = c as usize;
                        path.push(n);
                    }
                }
            };
            for &p in &path {
                let node = &mut nodes[p];
                node.visits += 1;
                for (v, u) in node.value.iter_mut().zip(&utilities) {
                    *v += u.clamp(-1.0, 1.0);
                }
            }
            iterations += 1;
        }
        let root = &nodes[0];
        let visits: Vec<u32> = root
            .children
            .iter()
            .map(|&c| if c == NONE { 0 } else { nodes[c as usize].visits })
            .collect();
        let chosen = match self.config.final_move {
            FinalMove::MaxVisits => {
                let max = *visits.iter().max().expect("root has actions");
                visits.iter().position(|&v| v == max).expect("max exists")
            }
            FinalMove::Proportional => {
                let total: u32 = visits.iter().sum();
                if total == 0 {
                    rng.gen_range(0..visits.len())
                } else {
                    let w: Vec<f64> = visits.iter().map(|&v| v as f64 / total as f64).collect();
                    sample(&w, rng)
                }
            }
        };
        SearchResult {
            actions: root.actions.clone(),
            visits,
            chosen,
            iterations,
        }
    }
}

/// Index drawn from a discrete distribution.
pub fn sample<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let mut x: f64 = rng.gen_range(0.0..1.0);
    for (i, &p) in probs.iter().enumerate() {
        if x < p {
            return i;
        }
        x -= p;
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Backend, BuildConfig};
    use crate::features::generate_atomic;
    use crate::games::{by_name, Game};
    use crate::state::Status;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(name: &str) -> (std::sync::Arc<dyn Game>, FeatureEvaluator, LinearPolicy) {
        let game = by_name(name).unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let ev = FeatureEvaluator::build(
            game.as_ref(),
            std::slice::from_ref(&set),
            Backend::SpatterNetJit,
            BuildConfig::default(),
        )
        .unwrap();
        let pol = LinearPolicy::zeros(game.meta().players, set.len());
        (game, ev, pol)
    }

    #[test]
    fn one_iteration_visits_one_child() {
        let (game, ev, pol) = setup("tictactoe");
        let cfg = MctsConfig {
            budget: Budget::Iterations(1),
            ..MctsConfig::default()
        };
        let mut m = Mcts::new(game.as_ref(), &ev, &pol, cfg);
        let r = m.search(&game.initial_state(), &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r.visits.iter().sum::<u32>(), 1);
        assert_eq!(r.visits.iter().filter(|&&v| v == 1).count(), 1);
    }

    #[test]
    fn visits_sum_to_iterations() {
        let (game, ev, pol) = setup("hex");
        let cfg = MctsConfig {
            budget: Budget::Iterations(300),
            ..MctsConfig::default()
        };
        let mut m = Mcts::new(game.as_ref(), &ev, &pol, cfg);
        let r = m.search(&game.initial_state(), &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(r.visits.iter().sum::<u32>(), 300);
        assert_eq!(r.iterations, 300);
    }

    #[test]
    fn huge_exploration_follows_policy_first() {
        let (game, ev, mut pol) = setup("tictactoe");
        for (i, w) in pol.weights_mut(1).iter_mut().enumerate() {
            *w = i as f64 * 0.01;
        }
        let s = game.initial_state();
        let acts = game.legal_actions(&s);
        let pri = pol.distribution(&ev, &s, &acts, &mut Scratch::default(), &mut FeatureVector::default());
        let cfg = MctsConfig {
            c_puct: 1e9,
            budget: Budget::Iterations(1),
            ..MctsConfig::default()
        };
        let mut m = Mcts::new(game.as_ref(), &ev, &pol, cfg);
        let r = m.search(&s, &mut ChaCha8Rng::seed_from_u64(0));
        let visited = r.visits.iter().position(|&v| v == 1).unwrap();
        let best = pri
            .iter()
            .enumerate()
            .fold(0, |b, (i, &p)| if p > pri[b] { i } else { b });
        assert_eq!(visited, best);
    }

    #[test]
    fn never_loses_tictactoe_as_first_player() {
        let (game, ev, pol) = setup("tictactoe");
        let cfg = MctsConfig {
            budget: Budget::Iterations(5000),
            ..MctsConfig::default()
        };
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = Mcts::new(game.as_ref(), &ev, &pol, cfg);
            let mut s = game.initial_state();
            while !s.is_terminal() {
                let a = if s.mover == 1 {
                    m.search(&s, &mut rng).action()
                } else {
                    let acts = game.legal_actions(&s);
                    acts[rng.gen_range(0..acts.len())]
                };
                game.apply(&mut s, &a);
            }
            assert_ne!(s.status, Status::Won(2), "lost game {seed}");
        }
    }

    #[test]
    fn sample_respects_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let i = sample(&[0.0, 0.3, 0.0, 0.7], &mut rng);
            assert!(i == 1 || i == 3);
        }
    }
}
