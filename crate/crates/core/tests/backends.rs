use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spatfeat::backends::{
    Backend, BuildConfig, EvalCounters, FeatureEvaluator, FeatureVector, NetScratch, Scratch, Tracer,
};
use spatfeat::features::generate_atomic;
use spatfeat::games::{by_name, playout, uniform_selector, GAME_NAMES};

fn check_game(name: &str, max_len: usize, max_straight: usize, playouts: u64) {
    let game = by_name(name).unwrap();
    let set = generate_atomic(game.meta(), max_len, max_straight);
    let evals: Vec<FeatureEvaluator> = Backend::ALL
        .iter()
        .map(|&b| {
            FeatureEvaluator::build(game.as_ref(), std::slice::from_ref(&set), b, BuildConfig::default()).unwrap()
        })
        .collect();
    let mut scratch = Scratch::default();
    let mut net_scratch = NetScratch::default();
    let mut outs = vec![FeatureVector::default(); evals.len()];
    for seed in 0..playouts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = playout(game.as_ref(), game.initial_state(), uniform_selector(&mut rng), true);
        for (state, _) in &traj.steps {
            for a in game.legal_actions(state) {
                for (e, out) in evals.iter().zip(outs.iter_mut()) {
                    e.eval(state, &a, &mut scratch, out);
                }
                for (e, out) in evals.iter().zip(&outs).skip(1) {
                    assert_eq!(out, &outs[0], "{name} {}: {:?} at ply {}", e.backend(), a, state.ply);
                }
                if let Some(net) = evals[2].net_for(state, &a) {
                    let mut tracer = Tracer::default();
                    let mut v = FeatureVector::new(set.len());
                    net.eval_verified(state, &mut v, &mut net_scratch, &mut tracer);
                    let mut seen = tracer.props.clone();
                    seen.sort_unstable();
                    seen.dedup();
                    assert_eq!(seen.len(), tracer.props.len());
                    assert!(tracer.props.len() <= net.num_props());
                }
            }
        }
    }
    let _ = EvalCounters::default();
}

#[test]
fn backends_agree_on_random_playouts() {
    for name in GAME_NAMES {
        check_game(name, 2, 2, 3);
    }
}
