//! Evaluators mapping a (state, action) query to the set of active features.
//!
//! All backends share the same instance store; they differ only in how they
//! test the retrieved instances. [`FeatureEvaluator`] hides the choice.

mod naive;
mod spatternet;
mod tree;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

pub use naive::naive_eval;
pub use spatternet::{NetInstance, NetScratch, SpatterNet};
pub use tree::{Forest, TreeIndex};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::games::Game;
use crate::instantiation::{for_each_query_key, instantiate, InstanceStore, Key};
use crate::ordering::{Heuristic, ImplicationRules};
use crate::state::{Action, GameState};

/// Word-level helpers for dense bitsets stored as `u64` slices.
pub(crate) mod bits {
    #[inline]
    pub fn words(n: usize) -> usize {
        n.div_ceil(64)
    }

    #[inline]
    pub fn get(b: &[u64], i: usize) -> bool {
        b[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(b: &mut [u64], i: usize) {
        b[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn clear(b: &mut [u64], i: usize) {
        b[i / 64] &= !(1 << (i % 64));
    }

    /// Sets the first `n` bits of `b` and clears the rest.
    #[inline]
    pub fn fill_ones(b: &mut [u64], n: usize) {
        for (k, w) in b.iter_mut().enumerate() {
            let lo = k * 64;
            *w = if n >= lo + 64 {
                !0
            } else if n > lo {
                (1u64 << (n - lo)) - 1
            } else {
                0
            };
        }
    }
}

/// Active features of one query, as a dense bitset over feature ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureVector {
    words: Vec<u64>,
    len: usize,
}

impl FeatureVector {
    pub fn new(num_features: usize) -> Self {
        FeatureVector {
            words: vec![0; bits::words(num_features)],
            len: num_features,
        }
    }

    /// Number of feature ids the vector can hold.
    pub fn capacity(&self) -> usize {
        self.len
    }

    /// Clears and resizes to `num_features`.
    pub fn reset(&mut self, num_features: usize) {
        self.words.clear();
        self.words.resize(bits::words(num_features), 0);
        self.len = num_features;
    }

    #[inline]
    pub fn insert(&mut self, f: u32) {
        debug_assert!((f as usize) < self.len);
        bits::set(&mut self.words, f as usize);
    }

    #[inline]
    pub fn contains(&self, f: u32) -> bool {
        (f as usize) < self.len && bits::get(&self.words, f as usize)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros();
                    w &= w - 1;
                    i as u32 * 64 + b
                })
            })
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }
}

/// Hooks called during evaluation. The unit type ignores everything, so
/// uninstrumented queries pay nothing.
pub trait EvalObserver {
    #[inline]
    fn prop(&mut self, _index: usize) {}
    #[inline]
    fn instance(&mut self, _index: usize) {}
}

impl EvalObserver for () {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EvalCounters {
    pub prop_evals: u64,
    pub instance_visits: u64,
}

impl EvalObserver for EvalCounters {
    #[inline]
    fn prop(&mut self, _: usize) {
        self.prop_evals += 1;
    }
    #[inline]
    fn instance(&mut self, _: usize) {
        self.instance_visits += 1;
    }
}

/// Records the index of every evaluated proposition.
#[derive(Clone, Debug, Default)]
pub struct Tracer {
    pub props: Vec<usize>,
    pub counters: EvalCounters,
}

impl EvalObserver for Tracer {
    fn prop(&mut self, index: usize) {
        self.props.push(index);
        self.counters.prop(index);
    }
    fn instance(&mut self, index: usize) {
        self.counters.instance(index);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Backend {
    Naive,
    Tree,
    #[default]
    SpatterNet,
    SpatterNetJit,
}

impl Backend {
    pub const ALL: [Backend; 4] = [
        Backend::Naive,
        Backend::Tree,
        Backend::SpatterNet,
        Backend::SpatterNetJit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Naive => "naive",
            Backend::Tree => "tree",
            Backend::SpatterNet => "spatternet",
            Backend::SpatterNetJit => "spatternet-jit",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown backend `{s}`")))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildConfig {
    pub heuristic: Heuristic,
    /// Seed for random tie-breaking in proposition ordering.
    pub order_seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            heuristic: Heuristic::Eq2,
            order_seed: 0,
        }
    }
}

/// Per-worker buffers reused across queries.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    net: NetScratch,
}

/// What a query needs once its key is known: the unconditional features
/// and the net covering its instances.
struct Plan {
    phi: Box<[u32]>,
    net: Option<Arc<SpatterNet>>,
}

/// Nets keyed by signature and plans keyed by the full query key. Eager
/// mode fills `frozen` up front; anything else goes through the locks.
struct NetCache {
    nets: RwLock<FxHashMap<Key, Arc<SpatterNet>>>,
    plans: RwLock<FxHashMap<Key, Plan>>,
    frozen: FxHashMap<Key, Plan>,
    builds: AtomicUsize,
}

enum Engine {
    Naive,
    Tree(TreeIndex),
    Nets(NetCache),
}

struct PlayerEval {
    store: InstanceStore,
    engine: Engine,
}

/// Evaluates feature sets for every player of a game with one backend.
pub struct FeatureEvaluator {
    backend: Backend,
    config: BuildConfig,
    rules: ImplicationRules,
    players: Vec<PlayerEval>,
}

fn site(v: i32) -> Option<u32> {
    (v >= 0).then_some(v as u32)
}

fn query_key(state: &GameState, action: &Action) -> Key {
    Key {
        from: site(action.from),
        to: site(action.to),
        last_from: site(state.last_from),
        last_to: site(state.last_to),
    }
}

/// The unconditional features of a query, and its key with every
/// component dropped that no instance-bearing stored key uses. Queries
/// with equal signatures see the same instances. The signature is `None`
/// when no instances are retrieved at all.
fn phi_and_signature(store: &InstanceStore, state: &GameState, action: &Action) -> (Vec<u32>, Option<Key>) {
    let mut used = [false; 4];
    let mut any = false;
    let mut phi = Vec::new();
    store.for_each_entry(state, action, |k, e| {
        phi.extend_from_slice(&e.phi_init);
        if !e.instances.is_empty() {
            any = true;
            used[0] |= k.from.is_some();
            used[1] |= k.to.is_some();
            used[2] |= k.last_from.is_some();
            used[3] |= k.last_to.is_some();
        }
    });
    phi.sort_unstable();
    phi.dedup();
    let q = query_key(state, action);
    let sig = any.then(|| Key {
        from: q.from.filter(|_| used[0]),
        to: q.to.filter(|_| used[1]),
        last_from: q.last_from.filter(|_| used[2]),
        last_to: q.last_to.filter(|_| used[3]),
    });
    (phi, sig)
}

/// Gathers the instances a signature stands for and compiles their net.
fn build_net(store: &InstanceStore, sig: &Key, rules: &ImplicationRules, config: &BuildConfig) -> SpatterNet {
    let as_i32 = |v: Option<u32>| v.map_or(-1, |v| v as i32);
    let action = Action {
        from: as_i32(sig.from),
        to: as_i32(sig.to),
        tag: 0,
    };
    let mut probe = GameState::new(0, 2, 1);
    probe.last_from = as_i32(sig.last_from);
    probe.last_to = as_i32(sig.last_to);
    let mut phi: FxHashSet<u32> = FxHashSet::default();
    let mut ids = Vec::new();
    for_each_query_key(&action, &probe, |k| {
        if let Some(e) = store.entry(&k) {
            phi.extend(e.phi_init.iter().copied());
            ids.extend_from_slice(&e.instances);
        }
    });
    let instances: Vec<NetInstance> = ids
        .into_iter()
        .map(|i| &store.instances[i as usize])
        .filter(|inst| !phi.contains(&inst.feature))
        .map(|inst| NetInstance {
            feature: inst.feature,
            props: inst.props.clone(),
        })
        .collect();
    // phi_init lives in the plan; the net only covers instances
    SpatterNet::compile(&instances, Vec::new(), rules, config.heuristic, config.order_seed)
}

impl NetCache {
    fn new() -> Self {
        NetCache {
            nets: RwLock::new(FxHashMap::default()),
            plans: RwLock::new(FxHashMap::default()),
            frozen: FxHashMap::default(),
            builds: AtomicUsize::new(0),
        }
    }

    fn net(&self, store: &InstanceStore, sig: &Key, rules: &ImplicationRules, config: &BuildConfig) -> Arc<SpatterNet> {
        let hit = self.nets.read().expect("net cache poisoned").get(sig).cloned();
        if let Some(n) = hit {
            return n;
        }
        let net = Arc::new(build_net(store, sig, rules, config));
        self.builds.fetch_add(1, Ordering::Relaxed);
        self.nets
            .write()
            .expect("net cache poisoned")
            .entry(*sig)
            .or_insert(net)
            .clone()
    }

    fn plan(
        &self,
        store: &InstanceStore,
        state: &GameState,
        action: &Action,
        rules: &ImplicationRules,
        config: &BuildConfig,
    ) -> Plan {
        let (phi, sig) = phi_and_signature(store, state, action);
        Plan {
            phi: phi.into_boxed_slice(),
            net: sig.map(|s| self.net(store, &s, rules, config)),
        }
    }
}

impl Plan {
    #[inline]
    fn run<O: EvalObserver>(&self, state: &GameState, out: &mut FeatureVector, scratch: &mut Scratch, obs: &mut O) {
        for &f in self.phi.iter() {
            out.insert(f);
        }
        if let Some(net) = &self.net {
            net.eval(state, out, &mut scratch.net, obs);
        }
    }
}

impl FeatureEvaluator {
    /// Instantiates `sets` (one per player, or a single set shared by all)
    /// and prepares the chosen backend. Eager SPatterNet builds a net for
    /// every signature reachable from the game's action domains.
    pub fn build(game: &dyn Game, sets: &[FeatureSet], backend: Backend, config: BuildConfig) -> Result<Self> {
        let meta = game.meta();
        let np = meta.players as usize;
        if sets.len() != 1 && sets.len() != np {
            return Err(Error::InvalidArgument(format!(
                "expected 1 or {np} feature sets, got {}",
                sets.len()
            )));
        }
        let rules = ImplicationRules::new(meta.players, meta.piece_owner.clone());
        let mut players = Vec::with_capacity(np);
        for p in 1..=meta.players {
            let set = &sets[if sets.len() == 1 { 0 } else { p as usize - 1 }];
            let store = instantiate(set, meta, p)?;
            let engine = match backend {
                Backend::Naive => Engine::Naive,
                Backend::Tree => Engine::Tree(TreeIndex::build(&store)),
                Backend::SpatterNet | Backend::SpatterNetJit => Engine::Nets(NetCache::new()),
            };
            players.push(PlayerEval { store, engine });
        }
        let mut ev = FeatureEvaluator {
            backend,
            config,
            rules,
            players,
        };
        if backend == Backend::SpatterNet {
            ev.build_all_nets(game);
        }
        Ok(ev)
    }

    fn build_all_nets(&mut self, game: &dyn Game) {
        let np = self.players.len() as u8;
        let (rules, config) = (&self.rules, &self.config);
        for (pi, pe) in self.players.iter_mut().enumerate() {
            let Engine::Nets(cache) = &mut pe.engine else { continue };
            let p = pi as u8 + 1;
            let own = game.action_domain(p);
            let mut last: Vec<(i32, i32)> = vec![(-1, -1)];
            for q in (1..=np).filter(|&q| q != p) {
                last.extend(game.action_domain(q));
            }
            if np == 1 {
                last.extend(own.iter().copied());
            }
            let mut probe = GameState::new(0, np.max(1), 1);
            let mut queries: Vec<(Key, Vec<u32>, Option<Key>)> = Vec::new();
            let mut sigs: FxHashSet<Key> = FxHashSet::default();
            for &(f, t) in &own {
                let action = Action { from: f, to: t, tag: 0 };
                for &(lf, lt) in &last {
                    probe.last_from = lf;
                    probe.last_to = lt;
                    let (phi, sig) = phi_and_signature(&pe.store, &probe, &action);
                    sigs.extend(sig);
                    queries.push((query_key(&probe, &action), phi, sig));
                }
            }
            let mut sigs: Vec<Key> = sigs.into_iter().collect();
            sigs.sort_unstable();
            let store = &pe.store;
            let built: FxHashMap<Key, Arc<SpatterNet>> = sigs
                .par_iter()
                .map(|s| (*s, Arc::new(build_net(store, s, rules, config))))
                .collect();
            cache.builds.fetch_add(built.len(), Ordering::Relaxed);
            cache.frozen = queries
                .into_iter()
                .map(|(q, phi, sig)| {
                    let net = sig.map(|s| built[&s].clone());
                    (
                        q,
                        Plan {
                            phi: phi.into_boxed_slice(),
                            net,
                        },
                    )
                })
                .collect();
            *cache.nets.get_mut().expect("net cache poisoned") = built;
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn num_features(&self, player: u8) -> usize {
        self.players[player as usize - 1].store.num_features
    }

    pub fn store(&self, player: u8) -> &InstanceStore {
        &self.players[player as usize - 1].store
    }

    /// Number of nets built so far for `player` (zero for other backends).
    pub fn net_builds(&self, player: u8) -> usize {
        match &self.players[player as usize - 1].engine {
            Engine::Nets(c) => c.builds.load(Ordering::Relaxed),
            _ => 0,
        }
    }

    /// The net that serves a query, building it if needed.
    pub fn net_for(&self, state: &GameState, action: &Action) -> Option<Arc<SpatterNet>> {
        let pe = &self.players[state.mover as usize - 1];
        let Engine::Nets(cache) = &pe.engine else { return None };
        let (_, sig) = phi_and_signature(&pe.store, state, action);
        Some(cache.net(&pe.store, &sig?, &self.rules, &self.config))
    }

    /// Features of the mover active for `action` in `state`.
    #[inline]
    pub fn eval(&self, state: &GameState, action: &Action, scratch: &mut Scratch, out: &mut FeatureVector) {
        self.eval_observed(state, action, scratch, out, &mut ())
    }

    /// Like [`eval`](Self::eval), reporting evaluated propositions to `obs`.
    pub fn eval_observed<O: EvalObserver>(
        &self,
        state: &GameState,
        action: &Action,
        scratch: &mut Scratch,
        out: &mut FeatureVector,
        obs: &mut O,
    ) {
        let pe = &self.players[state.mover as usize - 1];
        out.reset(pe.store.num_features);
        match &pe.engine {
            Engine::Naive => naive_eval(&pe.store, state, action, out, obs),
            Engine::Tree(t) => t.eval(&pe.store, state, action, out, obs),
            Engine::Nets(cache) => {
                let q = query_key(state, action);
                if let Some(plan) = cache.frozen.get(&q) {
                    return plan.run(state, out, scratch, obs);
                }
                {
                    let plans = cache.plans.read().expect("plan cache poisoned");
                    if let Some(plan) = plans.get(&q) {
                        return plan.run(state, out, scratch, obs);
                    }
                }
                let plan = cache.plan(&pe.store, state, action, &self.rules, &self.config);
                plan.run(state, out, scratch, obs);
                cache
                    .plans
                    .write()
                    .expect("plan cache poisoned")
                    .entry(q)
                    .or_insert(plan);
            }
        }
    }
}
