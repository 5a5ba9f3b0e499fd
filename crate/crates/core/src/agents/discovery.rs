//! Growing a feature set by combining pairs of feature instances that are
//! active together, scored by how well the combination explains the loss
//! beyond its constituents.

use std::f64::consts::TAU;

use rustc_hash::{FxHashMap, FxHashSet};

use super::train::{loss, Sample};
use crate::backends::FeatureEvaluator;
use crate::features::{canonical_key, transform_feature, Feature, FeatureSet};
use crate::games::GameMeta;
use crate::geometry::Rot;
use crate::instantiation::{instantiate, FeatureInstance};
use crate::state::{GameState, Proposition};

/// Candidates instantiated for the frame check before giving up.
const MAX_VERIFY: usize = 16;

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 1e-12 && syy > 1e-12).then(|| sxy / (sxx * syy).sqrt())
}

/// Candidate score: how strongly the candidate tracks the loss, minus how
/// much it merely repeats either constituent.
pub fn candidate_score(cand: &[f64], loss: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let corr = |y: &[f64]| pearson(cand, y).map(f64::abs);
    match (corr(loss), corr(a), corr(b)) {
        (Some(l), Some(ca), Some(cb)) => l - ca.max(cb),
        _ => f64::NEG_INFINITY,
    }
}

/// Re-expresses `b` (instantiated with frame `(ref_b, reflect_b)`) in the
/// frame `(ref_a, reflect_a)` of `a` at the same anchor and joins both.
fn combine(meta: &GameMeta, a: &Feature, ia: &FeatureInstance, b: &Feature, ib: &FeatureInstance) -> Option<Feature> {
    let dirs = meta.graph.directions(ia.provenance.anchor as usize);
    let angle = |r: u32| dirs.get(r as usize).map_or(0.0, |d| d.angle);
    let k = meta.graph.max_directions().max(1) as i32;
    let delta = (angle(ib.provenance.reference) - angle(ia.provenance.reference)) / TAU;
    let delta = Rot::new((delta * k as f64).round() as i32, k);
    let (ra, rb) = (ia.provenance.reflect as i32, ib.provenance.reflect as i32);
    let b2 = transform_feature(b, delta * ra, ra * rb);
    let mut elements = a.elements.clone();
    for e in b2.elements {
        if !elements.contains(&e) {
            elements.push(e);
        }
    }
    Feature::new(elements).ok()
}

/// Whether `f` instantiated at `anchor` yields exactly `props` somewhere.
fn instantiates_to(meta: &GameMeta, player: u8, f: &Feature, anchor: u32, props: &[Proposition]) -> bool {
    let set = FeatureSet::new(vec![f.clone()]);
    let Ok(store) = instantiate(&set, meta, player) else {
        return false;
    };
    store
        .instances
        .iter()
        .any(|i| i.provenance.anchor == anchor && i.props == props)
}

struct Candidate {
    feature: Feature,
    parts: (u32, u32),
    active: Vec<f64>,
    /// One witnessing pair: anchor and the union of both instances' props.
    witness: (u32, Vec<Proposition>),
}

fn selected_action(s: &Sample) -> usize {
    s.target
        .iter()
        .enumerate()
        .fold(0, |b, (i, &t)| if t > s.target[b] { i } else { b })
}

fn true_instances<'s>(ev: &'s FeatureEvaluator, state: &GameState, s: &Sample, player: u8) -> Vec<&'s FeatureInstance> {
    let store = ev.store(player);
    let a = &s.actions[selected_action(s)];
    let mut out = Vec::new();
    store.for_each_entry(state, a, |_, e| {
        for &i in &e.instances {
            let inst = &store.instances[i as usize];
            if inst.props.iter().all(|p| state.eval(p)) {
                out.push(inst);
            }
        }
    });
    out
}

/// Proposes up to one proactive and one reactive feature for `player`.
/// `evaluator` must have been built from `set`; sample feature lists must
/// be up to date with `set`.
pub fn discover_features(
    set: &FeatureSet,
    meta: &GameMeta,
    evaluator: &FeatureEvaluator,
    player: u8,
    weights: &[f64],
    batch: &[&Sample],
) -> Vec<Feature> {
    if batch.len() < 2 {
        return Vec::new();
    }
    let k = meta.graph.max_directions().max(1);
    let existing: FxHashSet<String> = set.features.iter().map(|f| canonical_key(f, k)).collect();
    let losses: Vec<f64> = batch.iter().map(|s| loss(weights, s)).collect();
    let activity = |f: u32| -> Vec<f64> {
        batch
            .iter()
            .map(|s| s.features[selected_action(s)].contains(&f) as u8 as f64)
            .collect()
    };

    let mut cands: Vec<Candidate> = Vec::new();
    let mut index: FxHashMap<String, usize> = FxHashMap::default();
    for (si, s) in batch.iter().enumerate() {
        let insts = true_instances(evaluator, &s.state, s, player);
        for (x, ia) in insts.iter().enumerate() {
            for ib in &insts[x + 1..] {
                if ia.feature == ib.feature || ia.provenance.anchor != ib.provenance.anchor {
                    continue;
                }
                let (fa, fb) = (&set.features[ia.feature as usize], &set.features[ib.feature as usize]);
                let Some(f) = combine(meta, fa, ia, fb, ib) else {
                    continue;
                };
                let key = canonical_key(&f, k);
                if existing.contains(&key) {
                    continue;
                }
                let c = *index.entry(key).or_insert_with(|| {
                    let mut props: Vec<_> = ia.props.iter().chain(&ib.props).copied().collect();
                    props.sort_unstable();
                    props.dedup();
                    cands.push(Candidate {
                        feature: f,
                        parts: (ia.feature, ib.feature),
                        active: vec![0.0; batch.len()],
                        witness: (ia.provenance.anchor, props),
                    });
                    cands.len() - 1
                });
                cands[c].active[si] = 1.0;
            }
        }
    }

    let mut scored: Vec<(f64, usize)> = cands
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = candidate_score(&c.active, &losses, &activity(c.parts.0), &activity(c.parts.1));
            (s, i)
        })
        .filter(|(s, _)| s.is_finite())
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut out = Vec::new();
    for reactive in [false, true] {
        let pick = scored
            .iter()
            .map(|&(_, i)| &cands[i])
            .filter(|c| c.feature.is_reactive() == reactive)
            .take(MAX_VERIFY)
            .find(|c| instantiates_to(meta, player, &c.feature, c.witness.0, &c.witness.1));
        if let Some(c) = pick {
            out.push(c.feature.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        let x = [0.0, 1.0, 0.0, 1.0];
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let y = [1.0, 0.0, 1.0, 0.0];
        assert!((pearson(&x, &y).unwrap() + 1.0).abs() < 1e-12);
        assert!(pearson(&x, &[1.0; 4]).is_none());
    }

    #[test]
    fn identical_constituent_is_penalised() {
        let cand = [1.0, 0.0, 1.0, 0.0, 1.0];
        let loss = [2.0, 0.1, 1.5, 0.3, 1.9];
        let other = [1.0, 1.0, 0.0, 1.0, 0.0];
        let s = candidate_score(&cand, &loss, &cand, &other);
        let l = pearson(&cand, &loss).unwrap().abs();
        assert!((s - (l - 1.0)).abs() < 1e-12);
        assert!(s <= 0.0);
        assert_eq!(candidate_score(&[1.0; 5], &loss, &cand, &other), f64::NEG_INFINITY);
    }
}
