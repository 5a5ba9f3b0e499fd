//! Baseline: test every retrieved instance in turn.

use super::{EvalObserver, FeatureVector};
use crate::instantiation::InstanceStore;
use crate::state::{Action, GameState};

/// Starts from the unconditional features and adds every instance whose
/// propositions all hold, stopping each instance at its first violation.
pub fn naive_eval<O: EvalObserver>(
    store: &InstanceStore,
    state: &GameState,
    action: &Action,
    out: &mut FeatureVector,
    obs: &mut O,
) {
    store.for_each_entry(state, action, |_, e| {
        for &f in &e.phi_init {
            out.insert(f);
        }
        for &i in &e.instances {
            obs.instance(i as usize);
            let inst = &store.instances[i as usize];
            let holds = inst.props.iter().enumerate().all(|(k, p)| {
                obs.prop(k);
                state.eval(p)
            });
            if holds {
                out.insert(inst.feature);
            }
        }
    });
}
