//! Turning features into concrete instances: every anchor, reference
//! direction and mirror image is resolved into a conjunction of
//! propositions, indexed by the action positions it requires.

use std::collections::HashSet;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::features::{ElementKind, FeatureElement, FeatureSet};
use crate::games::GameMeta;
use crate::geometry::{Endpoint, SiteGraph};
use crate::state::{Action, BitArray, GameState, Proposition};

/// Maximum number of instances one (feature, anchor, reference, mirror)
/// combination may expand into through walk forks.
pub const FORK_CAP: usize = 64;

/// Action positions an instance requires. `None` matches any value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub from: Option<u32>,
    pub to: Option<u32>,
    pub last_from: Option<u32>,
    pub last_to: Option<u32>,
}

impl Key {
    pub fn is_reactive(&self) -> bool {
        self.last_from.is_some() || self.last_to.is_some()
    }

    /// Whether every concrete component agrees with the query.
    pub fn matches(&self, action: &Action, state: &GameState) -> bool {
        let ok = |k: Option<u32>, v: i32| k.is_none_or(|k| v >= 0 && k as i32 == v);
        ok(self.from, action.from)
            && ok(self.to, action.to)
            && ok(self.last_from, state.last_from)
            && ok(self.last_to, state.last_to)
    }
}

fn site(v: i32) -> Option<u32> {
    (v >= 0).then_some(v as u32)
}

/// Calls `f` with every stored-key pattern compatible with the query, in a
/// fixed order: proactive keys first, then reactive ones.
pub fn for_each_query_key(action: &Action, state: &GameState, mut f: impl FnMut(Key)) {
    let (from, to) = (site(action.from), site(action.to));
    let (lf, lt) = (site(state.last_from), site(state.last_to));
    let mut seen: [Key; 12] = [Key::default(); 12];
    let mut n = 0;
    let mut emit = |k: Key, f: &mut dyn FnMut(Key)| {
        if seen[..n].contains(&k) {
            return;
        }
        seen[n] = k;
        n += 1;
        f(k);
    };
    let actions = [(from, to), (None, to), (from, None)];
    for &(f0, t0) in &actions {
        if f0.is_some() || t0.is_some() {
            emit(
                Key {
                    from: f0,
                    to: t0,
                    ..Key::default()
                },
                &mut f,
            );
        }
    }
    for &(f0, t0) in &actions {
        if f0.is_none() && t0.is_none() {
            continue;
        }
        for (l0, l1) in [(lf, lt), (None, lt), (lf, None)] {
            if l0.is_some() || l1.is_some() {
                emit(
                    Key {
                        from: f0,
                        to: t0,
                        last_from: l0,
                        last_to: l1,
                    },
                    &mut f,
                );
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub anchor: u32,
    pub reference: u32,
    pub reflect: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureInstance {
    pub feature: u32,
    pub key: Key,
    /// Sorted, deduplicated.
    pub props: Vec<Proposition>,
    pub provenance: Provenance,
}

impl FeatureInstance {
    /// Whether every proposition of `self` also occurs in `other`.
    pub fn generalises(&self, other: &FeatureInstance) -> bool {
        is_sorted_subset(&self.props, &other.props)
    }
}

pub(crate) fn is_sorted_subset<T: Ord>(small: &[T], big: &[T]) -> bool {
    if small.len() > big.len() {
        return false;
    }
    let mut j = 0;
    for x in small {
        while j < big.len() && big[j] < *x {
            j += 1;
        }
        if j == big.len() || big[j] != *x {
            return false;
        }
        j += 1;
    }
    true
}

#[derive(Clone, Debug, Default)]
pub struct KeyEntry {
    /// Indices into the store's instance list, in insertion order.
    pub instances: Vec<u32>,
    /// Features active for every query matching this key.
    pub phi_init: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct InstanceStore {
    pub player: u8,
    pub num_features: usize,
    pub instances: Vec<FeatureInstance>,
    pub proactive: FxHashMap<Key, KeyEntry>,
    pub reactive: FxHashMap<Key, KeyEntry>,
    /// Orientations skipped because walk forks exceeded [`FORK_CAP`].
    pub skipped_forks: usize,
}

/// Outcome of resolving one element at one endpoint.
enum Resolved {
    Reject,
    Satisfied,
    /// Disjunction of conjunctions.
    Props(Vec<Vec<Proposition>>),
}

struct Ctx<'a> {
    meta: &'a GameMeta,
    player: u8,
}

impl Ctx<'_> {
    fn graph(&self) -> &SiteGraph {
        &self.meta.graph
    }

    fn state_element(&self, e: &FeatureElement, end: Endpoint, anchor: usize) -> Resolved {
        use ElementKind::*;
        let neg = e.negated;
        let decide = |holds: bool| {
            if holds != neg {
                Resolved::Satisfied
            } else {
                Resolved::Reject
            }
        };
        let s = match end {
            Endpoint::OffBoard => {
                return match e.kind {
                    Off => decide(true),
                    // Nothing on the board lies off it, so every other
                    // condition is false there.
                    _ => decide(false),
                };
            }
            Endpoint::Site(s) => s,
        };
        let p = |array, value, negated| Proposition::new(s, array, value, negated);
        let one = |prop| Resolved::Props(vec![vec![prop]]);
        let players = self.meta.players;
        match e.kind {
            Off => decide(false),
            Connectivity(k) => decide(self.graph().onboard_degree(s) == k as usize),
            RegionProx(k) => {
                let d = self.graph().region_dist(k as usize);
                decide(d[s] < d[anchor])
            }
            Empty => one(p(BitArray::Empty, 1, neg)),
            Friend => one(p(BitArray::Who, self.player, neg)),
            Item(k) => one(p(BitArray::What, k, neg)),
            Enemy if players == 2 => one(p(BitArray::Who, 3 - self.player, neg)),
            Enemy => {
                let mut excluded = vec![0, self.player];
                if self.meta.has_shared_pieces() {
                    excluded.push(players + 1);
                }
                if neg {
                    Resolved::Props(excluded.into_iter().map(|v| vec![p(BitArray::Who, v, false)]).collect())
                } else {
                    Resolved::Props(vec![excluded.into_iter().map(|v| p(BitArray::Who, v, true)).collect()])
                }
            }
            To | From | LastTo | LastFrom => unreachable!("action element"),
        }
    }
}

fn check_kinds(set: &FeatureSet, meta: &GameMeta) -> Result<()> {
    for f in &set.features {
        f.validate()?;
        for e in &f.elements {
            match e.kind {
                ElementKind::Item(k) if k == 0 || k as usize > meta.num_piece_types() => {
                    return Err(Error::Validation(format!("`{f}`: no piece type {k}")));
                }
                ElementKind::RegionProx(k) if k as usize >= meta.graph.regions().len() => {
                    return Err(Error::Validation(format!("`{f}`: no region {k}")));
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Builds the instance store of one player.
pub fn instantiate(set: &FeatureSet, meta: &GameMeta, player: u8) -> Result<InstanceStore> {
    check_kinds(set, meta)?;
    let ctx = Ctx { meta, player };
    let g = &meta.graph;
    let mut instances: Vec<FeatureInstance> = Vec::new();
    let mut phi: Vec<(Key, u32)> = Vec::new();
    let mut seen: HashSet<(u32, Key, Vec<Proposition>)> = HashSet::new();
    let mut skipped_forks = 0;

    for (fid, feature) in set.features.iter().enumerate() {
        let fid = fid as u32;
        for anchor in 0..g.num_sites() {
            let refs = g.directions(anchor).len().max(1);
            for reference in 0..refs {
                for reflect in [1i32, -1] {
                    let ends: Vec<Vec<Endpoint>> = feature
                        .elements
                        .iter()
                        .map(|e| g.resolve_walk(anchor, reference, reflect, &e.walk.0))
                        .collect();
                    let combos: usize = ends.iter().map(Vec::len).product();
                    if combos > FORK_CAP {
                        skipped_forks += 1;
                        continue;
                    }
                    let provenance = Provenance {
                        anchor: anchor as u32,
                        reference: reference as u32,
                        reflect: reflect as i8,
                    };
                    let mut choice = vec![0usize; ends.len()];
                    'combo: for _ in 0..combos {
                        let picked: Vec<Endpoint> = choice.iter().zip(&ends).map(|(&c, e)| e[c]).collect();
                        advance(&mut choice, &ends);

                        let mut key = Key::default();
                        let mut alternatives: Vec<Vec<Proposition>> = vec![Vec::new()];
                        for (e, &end) in feature.elements.iter().zip(&picked) {
                            let slot = match e.kind {
                                ElementKind::To => Some(&mut key.to),
                                ElementKind::From => Some(&mut key.from),
                                ElementKind::LastTo => Some(&mut key.last_to),
                                ElementKind::LastFrom => Some(&mut key.last_from),
                                _ => None,
                            };
                            if let Some(slot) = slot {
                                let Endpoint::Site(s) = end else { continue 'combo };
                                match *slot {
                                    Some(prev) if prev != s as u32 => continue 'combo,
                                    _ => *slot = Some(s as u32),
                                }
                                continue;
                            }
                            match ctx.state_element(e, end, anchor) {
                                Resolved::Reject => continue 'combo,
                                Resolved::Satisfied => {}
                                Resolved::Props(disj) => {
                                    let mut next = Vec::new();
                                    for base in &alternatives {
                                        for conj in &disj {
                                            let mut c = base.clone();
                                            c.extend_from_slice(conj);
                                            next.push(c);
                                        }
                                    }
                                    alternatives = next;
                                }
                            }
                        }
                        for mut props in alternatives {
                            props.sort_unstable();
                            props.dedup();
                            if props.windows(2).any(|w| w[0].negate() == w[1]) {
                                continue;
                            }
                            if props.is_empty() {
                                phi.push((key, fid));
                                continue;
                            }
                            if seen.insert((fid, key, props.clone())) {
                                instances.push(FeatureInstance {
                                    feature: fid,
                                    key,
                                    props,
                                    provenance,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    if skipped_forks > 0 {
        log::warn!("player {player}: {skipped_forks} orientations skipped by the fork cap");
    }

    let mut store = InstanceStore {
        player,
        num_features: set.len(),
        instances: Vec::new(),
        proactive: FxHashMap::default(),
        reactive: FxHashMap::default(),
        skipped_forks,
    };
    for (key, fid) in phi {
        let entry = store.entry_mut(key);
        if !entry.phi_init.contains(&fid) {
            entry.phi_init.push(fid);
        }
    }
    for e in store.proactive.values_mut().chain(store.reactive.values_mut()) {
        e.phi_init.sort_unstable();
    }

    // Drop instances made redundant by a more general one of the same
    // feature and key, or by the feature being unconditionally active.
    let mut groups: FxHashMap<(u32, Key), Vec<usize>> = FxHashMap::default();
    for (i, inst) in instances.iter().enumerate() {
        groups.entry((inst.feature, inst.key)).or_default().push(i);
    }
    let mut keep = vec![true; instances.len()];
    for ((fid, key), members) in &groups {
        let always = store.entry(key).is_some_and(|e| e.phi_init.contains(fid));
        for &i in members {
            if always
                || members
                    .iter()
                    .any(|&j| j != i && instances[j].generalises(&instances[i]))
            {
                keep[i] = false;
            }
        }
    }
    for (inst, keep) in instances.into_iter().zip(keep) {
        if keep {
            let idx = store.instances.len() as u32;
            let key = inst.key;
            store.instances.push(inst);
            store.entry_mut(key).instances.push(idx);
        }
    }
    Ok(store)
}

fn advance(choice: &mut [usize], ends: &[Vec<Endpoint>]) {
    for (c, e) in choice.iter_mut().zip(ends).rev() {
        *c += 1;
        if *c < e.len() {
            return;
        }
        *c = 0;
    }
}

/// Instances and unconditional features gathered for one query.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Retrieved {
    pub instances: Vec<u32>,
    pub phi_init: Vec<u32>,
}

impl InstanceStore {
    fn entry_mut(&mut self, key: Key) -> &mut KeyEntry {
        if key.is_reactive() {
            self.reactive.entry(key).or_default()
        } else {
            self.proactive.entry(key).or_default()
        }
    }

    pub fn entry(&self, key: &Key) -> Option<&KeyEntry> {
        if key.is_reactive() {
            self.reactive.get(key)
        } else {
            self.proactive.get(key)
        }
    }

    /// Calls `f` for every stored entry compatible with the query.
    #[inline]
    pub fn for_each_entry(&self, state: &GameState, action: &Action, mut f: impl FnMut(&Key, &KeyEntry)) {
        for_each_query_key(action, state, |k| {
            if let Some(e) = self.entry(&k) {
                f(&k, e);
            }
        });
    }

    /// All instances and unconditional features relevant to the query, in
    /// key enumeration order, then insertion order.
    pub fn retrieve(&self, state: &GameState, action: &Action) -> Retrieved {
        let mut out = Retrieved::default();
        self.for_each_entry(state, action, |_, e| {
            out.instances.extend_from_slice(&e.instances);
            out.phi_init.extend_from_slice(&e.phi_init);
        });
        out.phi_init.sort_unstable();
        out.phi_init.dedup();
        out
    }

    pub fn keys(&self) -> impl Iterator<Item = (&Key, &KeyEntry)> {
        self.proactive.iter().chain(self.reactive.iter())
    }

    /// All distinct propositions used by any instance.
    pub fn num_distinct_props(&self) -> usize {
        let set: HashSet<&Proposition> = self.instances.iter().flat_map(|i| &i.props).collect();
        set.len()
    }
}
