//! Pattern networks: instances and propositions in a fixed order with
//! precomputed deduction masks, so that every proposition is evaluated at
//! most once per query.

use rustc_hash::FxHashMap;

use super::{bits, EvalObserver, FeatureVector};
use crate::error::{Error, Result};
use crate::ordering::{order_instances, order_propositions, Heuristic, ImplicationRules, ImplicationTable};
use crate::state::{GameState, Proposition};

#[derive(Clone, Debug)]
pub struct SpatterNet {
    props: Vec<Proposition>,
    inst_feature: Vec<u32>,
    inst_offsets: Vec<u32>,
    inst_props: Vec<u32>,
    /// Words per mask; proposition and instance masks share the width.
    words: usize,
    /// Per proposition, four masks of `words` words each: propositions
    /// settled and instances disabled when it is true, then the same when
    /// it is false.
    deduce: Vec<u64>,
    siblings: Vec<u64>,
    phi_init: Vec<u32>,
}

/// Widths up to this many words run on stack arrays.
const MAX_FIXED_WORDS: usize = 4;

#[inline]
fn and_not<const W: usize>(b: &mut [u64], mask: &[u64], w: usize) {
    let n = if W == 0 { w } else { W };
    let (b, mask) = (&mut b[..n], &mask[..n]);
    for k in 0..n {
        b[k] &= !mask[k];
    }
}

/// Caller-owned working memory for [`SpatterNet::eval`].
#[derive(Clone, Debug, Default)]
pub struct NetScratch {
    props: Vec<u64>,
    insts: Vec<u64>,
}

/// An instance as seen by the network builder.
#[derive(Clone, Debug)]
pub struct NetInstance {
    pub feature: u32,
    pub props: Vec<Proposition>,
}

fn is_permutation(order: &[u32], n: usize) -> bool {
    let mut seen = vec![false; n];
    order.len() == n
        && order.iter().all(|&i| {
            let i = i as usize;
            i < n && !std::mem::replace(&mut seen[i], true)
        })
}

impl SpatterNet {
    /// Orders the instances and their propositions, then builds the net.
    pub fn compile(
        instances: &[NetInstance],
        phi_init: Vec<u32>,
        rules: &ImplicationRules,
        heuristic: Heuristic,
        seed: u64,
    ) -> Self {
        let mut universe: Vec<Proposition> = instances.iter().flat_map(|i| i.props.iter().copied()).collect();
        universe.sort_unstable();
        universe.dedup();
        let index: FxHashMap<Proposition, u32> = universe.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
        let conj: Vec<Vec<u32>> = instances
            .iter()
            .map(|i| {
                let mut c: Vec<u32> = i.props.iter().map(|p| index[p]).collect();
                c.sort_unstable();
                c.dedup();
                c
            })
            .collect();
        let mut by_feature: Vec<(u32, Vec<Vec<u32>>)> = Vec::new();
        let mut slot: FxHashMap<u32, usize> = FxHashMap::default();
        let mut features: Vec<u32> = instances.iter().map(|i| i.feature).collect();
        features.sort_unstable();
        features.dedup();
        for f in features {
            slot.insert(f, by_feature.len());
            by_feature.push((f, Vec::new()));
        }
        for (inst, c) in instances.iter().zip(&conj) {
            by_feature[slot[&inst.feature]].1.push(c.clone());
        }
        let dnf: Vec<Vec<Vec<u32>>> = by_feature.into_iter().map(|(_, d)| d).collect();
        let table = rules.table(&universe);
        let prop_order = order_propositions(universe.len(), &dnf, Some(&table), heuristic, seed);
        let inst_order = order_instances(&conj, &prop_order);
        let inst_order: Vec<u32> = inst_order.into_iter().map(|i| i as u32).collect();
        Self::build(&universe, instances, &prop_order, &inst_order, &table, phi_init)
            .expect("orders come from the same universe")
    }

    /// Builds a net from explicit orders. `table` is indexed like `universe`;
    /// `prop_order` and `inst_order` must be permutations of their inputs.
    pub fn build(
        universe: &[Proposition],
        instances: &[NetInstance],
        prop_order: &[u32],
        inst_order: &[u32],
        table: &ImplicationTable,
        phi_init: Vec<u32>,
    ) -> Result<Self> {
        if !is_permutation(prop_order, universe.len()) {
            return Err(Error::Build("proposition order is not a permutation".into()));
        }
        if !is_permutation(inst_order, instances.len()) {
            return Err(Error::Build("instance order is not a permutation".into()));
        }
        if table.len() != universe.len() {
            return Err(Error::Build("implication table size mismatch".into()));
        }
        // position of each universe prop in the net
        let mut pos = vec![0u32; universe.len()];
        for (i, &p) in prop_order.iter().enumerate() {
            pos[p as usize] = i as u32;
        }
        let index: FxHashMap<Proposition, u32> = universe.iter().enumerate().map(|(i, &p)| (p, i as u32)).collect();
        let np = universe.len();
        let ni = instances.len();
        let pw = bits::words(np);
        let iw = bits::words(ni);

        let mut inst_feature = Vec::with_capacity(ni);
        let mut inst_offsets = vec![0u32];
        let mut inst_props = Vec::new();
        let mut requiring: Vec<Vec<u32>> = vec![Vec::new(); np];
        for (net_i, &src) in inst_order.iter().enumerate() {
            let inst = &instances[src as usize];
            let mut ps: Vec<u32> = Vec::with_capacity(inst.props.len());
            for p in &inst.props {
                let u = *index
                    .get(p)
                    .ok_or_else(|| Error::Build(format!("proposition {p} not in universe")))?;
                ps.push(pos[u as usize]);
            }
            ps.sort_unstable();
            ps.dedup();
            for &p in &ps {
                requiring[p as usize].push(net_i as u32);
            }
            inst_props.extend_from_slice(&ps);
            inst_offsets.push(inst_props.len() as u32);
            inst_feature.push(inst.feature);
        }

        let w = pw.max(iw);
        let mut deduce = vec![0u64; np * 4 * w];
        for u in 0..np {
            let c = pos[u] as usize;
            let row = &mut deduce[c * 4 * w..(c + 1) * 4 * w];
            let (on_true, on_false) = row.split_at_mut(2 * w);
            let (true_props, true_insts) = on_true.split_at_mut(w);
            let (false_props, false_insts) = on_false.split_at_mut(w);
            for &x in &table.proves_true[u] {
                bits::set(true_props, pos[x as usize] as usize);
            }
            bits::set(true_props, c);
            for &x in &table.disproves_true[u] {
                for &f in &requiring[pos[x as usize] as usize] {
                    bits::set(true_insts, f as usize);
                }
            }
            for &x in &table.proves_false[u] {
                bits::set(false_props, pos[x as usize] as usize);
            }
            bits::set(false_props, c);
            for &x in table.disproves_false[u].iter().chain(std::iter::once(&(u as u32))) {
                for &f in &requiring[pos[x as usize] as usize] {
                    bits::set(false_insts, f as usize);
                }
            }
        }

        let mut siblings = vec![0u64; ni * w];
        let mut by_feature: FxHashMap<u32, Vec<usize>> = FxHashMap::default();
        for (i, &f) in inst_feature.iter().enumerate() {
            by_feature.entry(f).or_default().push(i);
        }
        for (i, f) in inst_feature.iter().enumerate() {
            for &j in &by_feature[f] {
                bits::set(&mut siblings[i * w..(i + 1) * w], j);
            }
        }

        let mut props = universe.to_vec();
        for (u, &p) in universe.iter().enumerate() {
            props[pos[u] as usize] = p;
        }
        Ok(SpatterNet {
            props,
            inst_feature,
            inst_offsets,
            inst_props,
            words: w,
            deduce,
            siblings,
            phi_init,
        })
    }

    pub fn num_props(&self) -> usize {
        self.props.len()
    }

    pub fn num_instances(&self) -> usize {
        self.inst_feature.len()
    }

    pub fn props(&self) -> &[Proposition] {
        &self.props
    }

    pub fn phi_init(&self) -> &[u32] {
        &self.phi_init
    }

    fn inst(&self, i: usize) -> &[u32] {
        &self.inst_props[self.inst_offsets[i] as usize..self.inst_offsets[i + 1] as usize]
    }

    /// Instances (net order) and their feature ids, mostly for inspection.
    pub fn instances(&self) -> impl Iterator<Item = (u32, &[u32])> + '_ {
        (0..self.num_instances()).map(|i| (self.inst_feature[i], self.inst(i)))
    }

    fn mask(&self, c: usize, k: usize) -> &[u64] {
        let w = self.words;
        &self.deduce[(4 * c + k) * w..(4 * c + k + 1) * w]
    }

    pub fn on_true_prop_mask(&self, c: usize) -> &[u64] {
        self.mask(c, 0)
    }

    pub fn on_true_instance_mask(&self, c: usize) -> &[u64] {
        self.mask(c, 1)
    }

    pub fn on_false_prop_mask(&self, c: usize) -> &[u64] {
        self.mask(c, 2)
    }

    pub fn on_false_instance_mask(&self, c: usize) -> &[u64] {
        self.mask(c, 3)
    }

    /// Adds the features active in `state` to `out`.
    #[inline]
    pub fn eval<O: EvalObserver>(
        &self,
        state: &GameState,
        out: &mut FeatureVector,
        scratch: &mut NetScratch,
        obs: &mut O,
    ) {
        self.eval_impl::<O, false>(state, out, scratch, obs)
    }

    /// Like [`eval`](Self::eval), but checks every deduction against the
    /// state and panics on an unsound one.
    pub fn eval_verified<O: EvalObserver>(
        &self,
        state: &GameState,
        out: &mut FeatureVector,
        scratch: &mut NetScratch,
        obs: &mut O,
    ) {
        self.eval_impl::<O, true>(state, out, scratch, obs)
    }

    fn check_deduction(&self, state: &GameState, insts: &[u64], before: &[u64]) {
        for i in 0..self.num_instances() {
            if bits::get(before, i) && !bits::get(insts, i) {
                assert!(
                    !self.inst(i).iter().all(|&c| state.eval(&self.props[c as usize])),
                    "deduction disabled satisfiable instance {i}"
                );
            }
        }
    }

    fn eval_impl<O: EvalObserver, const VERIFY: bool>(
        &self,
        state: &GameState,
        out: &mut FeatureVector,
        scratch: &mut NetScratch,
        obs: &mut O,
    ) {
        for &f in &self.phi_init {
            out.insert(f);
        }
        macro_rules! fixed {
            ($w:literal) => {{
                let (mut props, mut insts) = ([0u64; $w], [0u64; $w]);
                self.run::<O, VERIFY, $w>(state, out, &mut props, &mut insts, obs)
            }};
        }
        match self.words {
            0 => {}
            1 => fixed!(1),
            2 => fixed!(2),
            3 => fixed!(3),
            4 => fixed!(4),
            w => {
                debug_assert!(w > MAX_FIXED_WORDS);
                scratch.props.resize(w, 0);
                scratch.insts.resize(w, 0);
                self.run::<O, VERIFY, 0>(state, out, &mut scratch.props, &mut scratch.insts, obs)
            }
        }
    }

    /// The evaluation loop over masks of `W` words (`W == 0`: `self.words`).
    #[inline(always)]
    fn run<O: EvalObserver, const VERIFY: bool, const W: usize>(
        &self,
        state: &GameState,
        out: &mut FeatureVector,
        props: &mut [u64],
        insts: &mut [u64],
        obs: &mut O,
    ) {
        let w = if W == 0 { self.words } else { W };
        bits::fill_ones(props, self.num_props());
        bits::fill_ones(insts, self.num_instances());
        let mut snapshot: (Vec<u64>, Vec<u64>) = (Vec::new(), Vec::new());

        for k in 0..w {
            let mut word = insts[k];
            while word != 0 {
                let b = word.trailing_zeros();
                let i = k * 64 + b as usize;
                obs.instance(i);
                let mut matched = true;
                for &c in self.inst(i) {
                    let c = c as usize;
                    if !bits::get(props, c) {
                        continue;
                    }
                    bits::clear(props, c);
                    obs.prop(c);
                    let holds = state.eval(&self.props[c]);
                    if VERIFY {
                        snapshot = (props.to_vec(), insts.to_vec());
                    }
                    let row = &self.deduce[4 * w * c..][..4 * w];
                    let row = if holds { &row[..2 * w] } else { &row[2 * w..] };
                    and_not::<W>(props, &row[..w], w);
                    and_not::<W>(insts, &row[w..], w);
                    if VERIFY {
                        self.verify_step(state, c, holds, props, insts, &snapshot);
                    }
                    if !holds || !bits::get(insts, i) {
                        matched = false;
                        break;
                    }
                }
                if matched {
                    out.insert(self.inst_feature[i]);
                    and_not::<W>(insts, &self.siblings[i * w..][..w], w);
                }
                // re-read: deductions may have cleared later bits in this word
                word = insts[k] & (!1u64 << b);
            }
        }
    }

    fn verify_step(
        &self,
        state: &GameState,
        c: usize,
        holds: bool,
        props: &[u64],
        insts: &[u64],
        before: &(Vec<u64>, Vec<u64>),
    ) {
        for x in 0..self.num_props() {
            if x != c && bits::get(&before.0, x) && !bits::get(props, x) {
                assert!(
                    state.eval(&self.props[x]),
                    "{} ({holds}) proved {} which is false",
                    self.props[c],
                    self.props[x]
                );
            }
        }
        self.check_deduction(state, insts, &before.1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{EvalCounters, Tracer};
    use crate::state::BitArray;
    use proptest::prelude::*;

    fn p(site: usize, array: BitArray, value: u8, negated: bool) -> Proposition {
        Proposition::new(site, array, value, negated)
    }

    fn rules() -> ImplicationRules {
        ImplicationRules::new(2, vec![1, 2])
    }

    #[test]
    fn empty_net_returns_phi_init() {
        let net = SpatterNet::compile(&[], vec![2, 5], &rules(), Heuristic::Eq2, 0);
        let mut out = FeatureVector::new(8);
        let s = GameState::new(3, 2, 2);
        net.eval(&s, &mut out, &mut NetScratch::default(), &mut ());
        assert_eq!(out.to_vec(), vec![2, 5]);
    }

    #[test]
    fn empty_true_disables_owner_instances() {
        let insts = vec![
            NetInstance {
                feature: 0,
                props: vec![p(5, BitArray::Empty, 1, false)],
            },
            NetInstance {
                feature: 1,
                props: vec![p(5, BitArray::Who, 1, false)],
            },
            NetInstance {
                feature: 2,
                props: vec![p(5, BitArray::Empty, 1, true)],
            },
        ];
        let net = SpatterNet::compile(&insts, vec![], &rules(), Heuristic::Eq2, 0);
        let c = net
            .props()
            .iter()
            .position(|&x| x == p(5, BitArray::Empty, 1, false))
            .unwrap();
        let not_empty = net
            .props()
            .iter()
            .position(|&x| x == p(5, BitArray::Empty, 1, true))
            .unwrap();
        // the "not empty" instance and the "owned by 1" instance are disproven
        let owner_inst = net.instances().position(|(f, _)| f == 1).unwrap();
        let not_empty_inst = net.instances().position(|(f, _)| f == 2).unwrap();
        let mask = net.on_true_instance_mask(c);
        assert!(bits::get(mask, owner_inst));
        assert!(bits::get(mask, not_empty_inst));
        assert!(!bits::get(net.on_true_prop_mask(c), not_empty));

        let s = GameState::new(6, 2, 2);
        let mut out = FeatureVector::new(3);
        let mut counters = EvalCounters::default();
        net.eval_verified(&s, &mut out, &mut NetScratch::default(), &mut counters);
        assert_eq!(out.to_vec(), vec![0]);
        assert_eq!(counters.prop_evals, 1);
    }

    #[test]
    fn lone_prop_masks_only_itself() {
        let insts = vec![NetInstance {
            feature: 0,
            props: vec![p(1, BitArray::Who, 0, false)],
        }];
        let net = SpatterNet::compile(&insts, vec![], &rules(), Heuristic::Eq1, 0);
        assert_eq!(net.on_true_prop_mask(0), &[1]);
        assert_eq!(net.on_false_instance_mask(0), &[1]);
        assert_eq!(net.on_true_instance_mask(0), &[0]);
    }

    #[test]
    fn masks_match_pairwise_oracle() {
        // all propositions of a 3-site, 2-player game, one instance each
        let mut universe = Vec::new();
        for site in 0..3 {
            universe.push(p(site, BitArray::Empty, 1, false));
            universe.push(p(site, BitArray::Empty, 1, true));
            for v in 0..=3 {
                universe.push(p(site, BitArray::Who, v, false));
                universe.push(p(site, BitArray::Who, v, true));
            }
            for v in 0..=2 {
                universe.push(p(site, BitArray::What, v, false));
                universe.push(p(site, BitArray::What, v, true));
            }
        }
        let insts: Vec<NetInstance> = universe
            .iter()
            .enumerate()
            .map(|(i, &x)| NetInstance {
                feature: i as u32,
                props: vec![x],
            })
            .collect();
        let r = rules();
        let net = SpatterNet::compile(&insts, vec![], &r, Heuristic::Eq2, 3);
        for (c, &pc) in net.props().iter().enumerate() {
            let proven = r.proves(pc);
            let proven_false = r.proves(pc.negate());
            for (i, (_, ps)) in net.instances().enumerate() {
                let q = net.props()[ps[0] as usize];
                let expect_true = q.site == pc.site && proven.contains(&q.negate());
                let expect_false = q == pc || (q.site == pc.site && proven_false.contains(&q.negate()));
                assert_eq!(bits::get(net.on_true_instance_mask(c), i), expect_true);
                assert_eq!(bits::get(net.on_false_instance_mask(c), i), expect_false);
            }
            for (x, &q) in net.props().iter().enumerate() {
                assert_eq!(bits::get(net.on_true_prop_mask(c), x), q == pc || proven.contains(&q));
            }
        }
    }

    #[test]
    fn each_prop_evaluated_once() {
        let a = p(0, BitArray::Empty, 1, false);
        let b = p(1, BitArray::Who, 1, false);
        let c = p(2, BitArray::Who, 2, true);
        let insts = vec![
            NetInstance {
                feature: 0,
                props: vec![a, b],
            },
            NetInstance {
                feature: 0,
                props: vec![b, c],
            },
            NetInstance {
                feature: 1,
                props: vec![a, b, c],
            },
            NetInstance {
                feature: 1,
                props: vec![b, c],
            },
            NetInstance {
                feature: 2,
                props: vec![a, c],
            },
        ];
        let net = SpatterNet::compile(&insts, vec![], &rules(), Heuristic::Eq2, 0);
        let mut s = GameState::new(3, 2, 2);
        s.set_site(1, 1, 1).unwrap();
        let mut tracer = Tracer::default();
        let mut out = FeatureVector::new(3);
        net.eval_verified(&s, &mut out, &mut NetScratch::default(), &mut tracer);
        let mut seen = tracer.props.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), tracer.props.len());
        assert_eq!(out.to_vec(), vec![0, 1, 2]);
    }

    #[test]
    fn bad_orders_rejected() {
        let universe = vec![p(0, BitArray::Empty, 1, false)];
        let insts = vec![NetInstance {
            feature: 0,
            props: universe.clone(),
        }];
        let t = ImplicationTable::identity(1);
        assert!(SpatterNet::build(&universe, &insts, &[0, 0], &[0], &t, vec![]).is_err());
        assert!(SpatterNet::build(&universe, &insts, &[0], &[1], &t, vec![]).is_err());
        assert!(SpatterNet::build(&universe, &insts, &[0], &[0], &t, vec![]).is_ok());
    }

    fn arb_prop(sites: usize) -> impl Strategy<Value = Proposition> {
        (0..sites, 0..3u8, 0..=3u8, any::<bool>()).prop_map(|(site, a, v, neg)| match a {
            0 => p(site, BitArray::Empty, 1, neg),
            1 => p(site, BitArray::Who, v, neg),
            _ => p(site, BitArray::What, v.min(2), neg),
        })
    }

    fn arb_state(sites: usize) -> impl Strategy<Value = GameState> {
        proptest::collection::vec(0..3u8, sites).prop_map(move |cells| {
            let mut s = GameState::new(sites, 2, 2);
            for (x, &c) in cells.iter().enumerate() {
                if c > 0 {
                    s.set_site(x, c, c).unwrap();
                }
            }
            s
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // covers both the stack-array widths and the wide fallback
        #[test]
        fn net_matches_direct_evaluation(
            insts in proptest::collection::vec(
                (0..40u32, proptest::collection::vec(arb_prop(12), 1..4)),
                1..400,
            ),
            states in proptest::collection::vec(arb_state(12), 1..6),
        ) {
            let insts: Vec<NetInstance> = insts
                .into_iter()
                .map(|(feature, props)| NetInstance { feature, props })
                .collect();
            let net = SpatterNet::compile(&insts, vec![], &rules(), Heuristic::Eq2, 1);
            let mut scratch = NetScratch::default();
            for s in &states {
                let mut want: Vec<u32> = insts
                    .iter()
                    .filter(|i| i.props.iter().all(|c| s.eval(c)))
                    .map(|i| i.feature)
                    .collect();
                want.sort_unstable();
                want.dedup();
                let mut out = FeatureVector::new(40);
                let mut tracer = Tracer::default();
                net.eval_verified(s, &mut out, &mut scratch, &mut tracer);
                prop_assert_eq!(out.to_vec(), want);
                let mut seen = tracer.props.clone();
                seen.sort_unstable();
                seen.dedup();
                prop_assert_eq!(seen.len(), tracer.props.len());
            }
        }
    }
}
