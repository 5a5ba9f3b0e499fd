//! Linear softmax policies over binary feature activity, and their file
//! format.

use std::fmt::Write as _;
use std::path::Path;

use crate::backends::{FeatureEvaluator, FeatureVector, Scratch};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::state::{Action, GameState};

const HEADER: &str = "spatw v1";

/// Per-player weight vectors over one shared feature set.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearPolicy {
    weights: Vec<Vec<f64>>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for p in &mut out {
        *p /= sum;
    }
    out
}

impl LinearPolicy {
    pub fn zeros(players: u8, num_features: usize) -> Self {
        LinearPolicy {
            weights: vec![vec![0.0; num_features]; players as usize],
        }
    }

    pub fn players(&self) -> u8 {
        self.weights.len() as u8
    }

    pub fn num_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn weights(&self, player: u8) -> &[f64] {
        &self.weights[player as usize - 1]
    }

    pub fn weights_mut(&mut self, player: u8) -> &mut [f64] {
        &mut self.weights[player as usize - 1]
    }

    /// Extends every weight vector with zeros up to `num_features`.
    pub fn grow(&mut self, num_features: usize) {
        for w in &mut self.weights {
            if w.len() < num_features {
                w.resize(num_features, 0.0);
            }
        }
    }

    /// Sum of the weights of active features.
    pub fn logit(&self, player: u8, active: impl IntoIterator<Item = u32>) -> f64 {
        let w = self.weights(player);
        active.into_iter().map(|f| w[f as usize]).sum()
    }

    /// Logits of all `actions` in `state` for the mover; pass moves get 0.
    pub fn logits(
        &self,
        evaluator: &FeatureEvaluator,
        state: &GameState,
        actions: &[Action],
        scratch: &mut Scratch,
        fv: &mut FeatureVector,
    ) -> Vec<f64> {
        actions
            .iter()
            .map(|a| {
                if a.is_pass() {
                    return 0.0;
                }
                evaluator.eval(state, a, scratch, fv);
                self.logit(state.mover, fv.iter())
            })
            .collect()
    }

    pub fn distribution(
        &self,
        evaluator: &FeatureEvaluator,
        state: &GameState,
        actions: &[Action],
        scratch: &mut Scratch,
        fv: &mut FeatureVector,
    ) -> Vec<f64> {
        softmax(&self.logits(evaluator, state, actions, scratch, fv))
    }

    /// Serialises the policy together with its feature set.
    pub fn to_text(&self, set: &FeatureSet) -> String {
        let mut s = format!("{HEADER}\nplayers {}\n", self.players());
        s.push_str(&set.to_text());
        s.push_str("weights\n");
        for w in &self.weights {
            for x in w {
                // round-trips exactly
                let _ = writeln!(s, "{x:?}");
            }
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<(Self, FeatureSet)> {
        let fmt_err = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, l)) if l.trim() == HEADER => {}
            _ => return Err(fmt_err(1, format!("expected header `{HEADER}`"))),
        }
        let players: u8 = match lines.next() {
            Some((i, l)) => l
                .trim()
                .strip_prefix("players ")
                .and_then(|n| n.trim().parse().ok())
                .filter(|&n| n > 0)
                .ok_or_else(|| fmt_err(i + 1, "expected `players <n>`".into()))?,
            None => return Err(fmt_err(2, "missing player count".into())),
        };
        let rest: Vec<(usize, &str)> = lines.collect();
        let split = rest
            .iter()
            .position(|(_, l)| l.trim() == "weights")
            .ok_or_else(|| fmt_err(text.lines().count(), "missing `weights` section".into()))?;
        let set_text: String = rest[..split].iter().map(|(_, l)| format!("{l}\n")).collect();
        let set = FeatureSet::from_text(&set_text, path).map_err(|e| match e {
            Error::Format { line, message, .. } => fmt_err(line + 2, message),
            other => other,
        })?;
        let n = set.len();
        let mut values = Vec::with_capacity(n * players as usize);
        for &(i, l) in &rest[split + 1..] {
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            values.push(
                l.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| fmt_err(i + 1, format!("bad weight `{l}`")))?,
            );
        }
        if values.len() != n * players as usize {
            return Err(fmt_err(
                text.lines().count(),
                format!("expected {} weights, found {}", n * players as usize, values.len()),
            ));
        }
        let weights = values
            .chunks(n.max(1))
            .take(players as usize)
            .map(<[f64]>::to_vec)
            .collect();
        let weights = if n == 0 {
            vec![Vec::new(); players as usize]
        } else {
            weights
        };
        Ok((LinearPolicy { weights }, set))
    }

    pub fn save(&self, set: &FeatureSet, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(set)).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<(Self, FeatureSet)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{Backend, BuildConfig};
    use crate::features::generate_atomic;
    use crate::games::by_name;
    use proptest::prelude::*;

    #[test]
    fn zero_weights_give_uniform() {
        let game = by_name("tictactoe").unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let ev = FeatureEvaluator::build(
            game.as_ref(),
            std::slice::from_ref(&set),
            Backend::Naive,
            BuildConfig::default(),
        )
        .unwrap();
        let pol = LinearPolicy::zeros(2, set.len());
        let s = game.initial_state();
        let acts = game.legal_actions(&s);
        let d = pol.distribution(&ev, &s, &acts, &mut Scratch::default(), &mut FeatureVector::default());
        assert!(d.iter().all(|&p| (p - 1.0 / 9.0).abs() < 1e-12));
    }

    #[test]
    fn dominant_feature() {
        let mut logits = vec![0.0; 10];
        logits[3] = 10.0;
        assert!(softmax(&logits)[3] > 0.99);
    }

    #[test]
    fn text_roundtrip() {
        let game = by_name("hex").unwrap();
        let set = generate_atomic(game.meta(), 1, 1);
        let mut pol = LinearPolicy::zeros(2, set.len());
        for (i, w) in pol.weights_mut(2).iter_mut().enumerate() {
            *w = (i as f64).sin() / 3.0;
        }
        let text = pol.to_text(&set);
        let (back, set2) = LinearPolicy::from_text(&text, Path::new("p.spatw")).unwrap();
        assert_eq!(back, pol);
        assert_eq!(set2, set);
        assert!(LinearPolicy::from_text("spatw v2\n", Path::new("x")).is_err());
        let truncated = text.rsplit_once("\n0").map(|(a, _)| a).unwrap_or(&text);
        assert!(LinearPolicy::from_text(truncated, Path::new("x")).is_err());
    }

    proptest! {
        #[test]
        fn softmax_is_distribution_and_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 1..20),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
