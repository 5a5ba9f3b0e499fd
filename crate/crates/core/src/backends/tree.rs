//! Baseline: instances arranged in a forest by generalisation, so a child
//! only tests the propositions its parent does not already guarantee.

use rustc_hash::FxHashMap;

use super::{EvalObserver, FeatureVector};
use crate::instantiation::{is_sorted_subset, InstanceStore, Key};
use crate::state::{Action, GameState, Proposition};

#[derive(Clone, Debug)]
struct Node {
    feature: u32,
    /// Propositions not implied by the parent.
    extra: Vec<Proposition>,
    children: Vec<u32>,
}

/// The forest built from one stored key's instances.
#[derive(Clone, Debug, Default)]
pub struct Forest {
    nodes: Vec<Node>,
    roots: Vec<u32>,
}

impl Forest {
    /// Inserts instances (feature, sorted props) one at a time, smallest
    /// first, under the deepest existing generaliser; ties go to the
    /// earliest inserted candidate.
    pub fn build(instances: &[(u32, &[Proposition])]) -> Self {
        let mut order: Vec<usize> = (0..instances.len()).collect();
        order.sort_by_key(|&i| instances[i].1.len());
        let mut forest = Forest::default();
        let mut full: Vec<&[Proposition]> = Vec::new();
        let mut depth: Vec<u32> = Vec::new();
        for i in order {
            let (feature, props) = instances[i];
            let parent = (0..forest.nodes.len())
                .filter(|&n| is_sorted_subset(full[n], props))
                .fold(None, |best: Option<usize>, n| match best {
                    Some(b) if depth[b] >= depth[n] => Some(b),
                    _ => Some(n),
                });
            let id = forest.nodes.len() as u32;
            let extra = match parent {
                Some(p) => props
                    .iter()
                    .filter(|x| full[p].binary_search(x).is_err())
                    .copied()
                    .collect(),
                None => props.to_vec(),
            };
            forest.nodes.push(Node {
                feature,
                extra,
                children: Vec::new(),
            });
            full.push(props);
            match parent {
                Some(p) => {
                    depth.push(depth[p] + 1);
                    forest.nodes[p].children.push(id);
                }
                None => {
                    depth.push(0);
                    forest.roots.push(id);
                }
            }
        }
        forest
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of root nodes.
    pub fn width(&self) -> usize {
        self.roots.len()
    }

    pub fn eval<O: EvalObserver>(&self, state: &GameState, out: &mut FeatureVector, obs: &mut O) {
        let mut stack: Vec<u32> = self.roots.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            obs.instance(n as usize);
            let holds = node.extra.iter().enumerate().all(|(k, p)| {
                obs.prop(k);
                state.eval(p)
            });
            if holds {
                out.insert(node.feature);
                stack.extend(node.children.iter().rev());
            }
        }
    }
}

/// One forest per stored key.
#[derive(Clone, Debug, Default)]
pub struct TreeIndex {
    forests: FxHashMap<Key, Forest>,
}

impl TreeIndex {
    pub fn build(store: &InstanceStore) -> Self {
        let forests = store
            .keys()
            .filter(|(_, e)| !e.instances.is_empty())
            .map(|(k, e)| {
                let insts: Vec<(u32, &[Proposition])> = e
                    .instances
                    .iter()
                    .map(|&i| {
                        let inst = &store.instances[i as usize];
                        (inst.feature, inst.props.as_slice())
                    })
                    .collect();
                (*k, Forest::build(&insts))
            })
            .collect();
        TreeIndex { forests }
    }

    pub fn forest(&self, key: &Key) -> Option<&Forest> {
        self.forests.get(key)
    }

    pub fn eval<O: EvalObserver>(
        &self,
        store: &InstanceStore,
        state: &GameState,
        action: &Action,
        out: &mut FeatureVector,
        obs: &mut O,
    ) {
        store.for_each_entry(state, action, |k, e| {
            for &f in &e.phi_init {
                out.insert(f);
            }
            if let Some(forest) = self.forests.get(k) {
                forest.eval(state, out, obs);
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::EvalCounters;
    use crate::state::BitArray;

    #[test]
    fn specialisation_nests_and_prunes() {
        let a = Proposition::new(0, BitArray::Empty, 1, false);
        let b = Proposition::new(1, BitArray::Empty, 1, false);
        let ab = {
            let mut v = vec![a, b];
            v.sort();
            v
        };
        let insts = [(1, ab.as_slice()), (0, std::slice::from_ref(&a))];
        let forest = Forest::build(&insts);
        assert_eq!(forest.width(), 1);
        assert_eq!(forest.len(), 2);
        // A false: B is never evaluated
        let mut s = GameState::new(2, 2, 2);
        s.set_site(0, 1, 1).unwrap();
        let mut out = FeatureVector::new(2);
        let mut c = EvalCounters::default();
        forest.eval(&s, &mut out, &mut c);
        assert_eq!(c.prop_evals, 1);
        assert_eq!(out.count(), 0);
        // A true: the child tests only B
        let s = GameState::new(2, 2, 2);
        let mut c = EvalCounters::default();
        forest.eval(&s, &mut out, &mut c);
        assert_eq!(c.prop_evals, 2);
        assert_eq!(out.to_vec(), vec![0, 1]);
    }

    #[test]
    fn disjoint_instances_stay_flat() {
        let ps: Vec<Proposition> = (0..4).map(|s| Proposition::new(s, BitArray::Empty, 1, false)).collect();
        let insts: Vec<(u32, &[Proposition])> = ps
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u32, std::slice::from_ref(p)))
            .collect();
        let forest = Forest::build(&insts);
        assert_eq!(forest.width(), 4);
    }

    #[test]
    fn deepest_parent_wins() {
        let p = |s| Proposition::new(s, BitArray::Empty, 1, false);
        let a = vec![p(0)];
        let ab = vec![p(0), p(1)];
        let abc = vec![p(0), p(1), p(2)];
        let insts = [(2, abc.as_slice()), (0, a.as_slice()), (1, ab.as_slice())];
        let forest = Forest::build(&insts);
        assert_eq!(forest.width(), 1);
        // chain of depth 3: root -> ab -> abc, each node adds one prop
        assert!(forest.nodes.iter().all(|n| n.extra.len() == 1));
    }
}
