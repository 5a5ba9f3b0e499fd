//! Proposition implications, generalisation between disjunctions, and the
//! greedy proposition ordering used to build pattern networks.
//!
//! The ordering works on abstract input: each disjunction is a list of
//! conjunctions of proposition ids `0..num_props`, and implications are
//! given as an [`ImplicationTable`] over the same ids.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::instantiation::is_sorted_subset;
use crate::state::{BitArray, Proposition};

/// Domain rules relating propositions on the same site.
#[derive(Clone, Debug)]
pub struct ImplicationRules {
    players: u8,
    /// Owner of piece type `i + 1`.
    piece_owner: Vec<u8>,
}

impl ImplicationRules {
    pub fn new(players: u8, piece_owner: Vec<u8>) -> Self {
        ImplicationRules { players, piece_owner }
    }

    fn owner(&self, piece: u8) -> u8 {
        self.piece_owner[piece as usize - 1]
    }

    fn sole_piece(&self, player: u8) -> Option<u8> {
        let mut owned = (1..=self.piece_owner.len() as u8).filter(|&i| self.owner(i) == player);
        match (owned.next(), owned.next()) {
            (Some(i), None) => Some(i),
            _ => None,
        }
    }

    fn owners(&self) -> std::ops::RangeInclusive<u8> {
        1..=self.players + 1
    }

    fn pieces(&self) -> std::ops::RangeInclusive<u8> {
        1..=self.piece_owner.len() as u8
    }

    /// Propositions proven true when `c` holds, `c` itself included.
    pub fn proves(&self, c: Proposition) -> Vec<Proposition> {
        let x = c.site as usize;
        let p = |array, value, negated| Proposition::new(x, array, value, negated);
        let mut out = vec![c];
        match (c.array, c.negated) {
            (BitArray::Empty, false) => {
                out.extend(self.owners().map(|q| p(BitArray::Who, q, true)));
                out.extend(self.pieces().map(|i| p(BitArray::What, i, true)));
            }
            (BitArray::Empty, true) => {}
            (BitArray::Who, _) if c.value == 0 => {}
            (BitArray::Who, false) => {
                let q = c.value;
                out.extend(
                    self.pieces()
                        .filter(|&i| self.owner(i) != q)
                        .map(|i| p(BitArray::What, i, true)),
                );
                if let Some(i) = self.sole_piece(q) {
                    out.push(p(BitArray::What, i, false));
                }
                out.push(p(BitArray::Empty, 1, true));
            }
            (BitArray::Who, true) => {
                let q = c.value;
                out.extend(
                    self.pieces()
                        .filter(|&i| self.owner(i) == q)
                        .map(|i| p(BitArray::What, i, true)),
                );
            }
            (BitArray::What, _) if c.value == 0 => {}
            (BitArray::What, false) => {
                let i = c.value;
                let o = self.owner(i);
                out.push(p(BitArray::Empty, 1, true));
                out.extend(self.pieces().filter(|&j| j != i).map(|j| p(BitArray::What, j, true)));
                out.push(p(BitArray::Who, o, false));
                out.extend(self.owners().filter(|&q| q != o).map(|q| p(BitArray::Who, q, true)));
            }
            (BitArray::What, true) => {
                let i = c.value;
                out.extend(
                    self.owners()
                        .filter(|&q| self.sole_piece(q) == Some(i))
                        .map(|q| p(BitArray::Who, q, true)),
                );
            }
        }
        out
    }

    /// Restricts the rules to a universe of propositions.
    pub fn table(&self, universe: &[Proposition]) -> ImplicationTable {
        let index: FxHashMap<Proposition, u32> = universe.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        let lookup = |props: &[Proposition], flip: bool| -> Vec<u32> {
            let mut ids: Vec<u32> = props
                .iter()
                .filter_map(|&q| index.get(&if flip { q.negate() } else { q }).copied())
                .collect();
            ids.sort_unstable();
            ids.dedup();
            ids
        };
        let mut t = ImplicationTable::empty(universe.len());
        for (i, &c) in universe.iter().enumerate() {
            let on_true = self.proves(c);
            let on_false = self.proves(c.negate());
            t.proves_true[i] = lookup(&on_true, false);
            t.disproves_true[i] = lookup(&on_true, true);
            t.proves_false[i] = lookup(&on_false, false);
            t.disproves_false[i] = lookup(&on_false, true);
        }
        t
    }
}

/// Implications restricted to a universe of proposition ids. For id `c`:
/// `proves_true[c]` lists ids known true once `c` is true, `disproves_true`
/// ids known false, and the `_false` variants the same once `c` is false.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ImplicationTable {
    pub proves_true: Vec<Vec<u32>>,
    pub disproves_true: Vec<Vec<u32>>,
    pub proves_false: Vec<Vec<u32>>,
    pub disproves_false: Vec<Vec<u32>>,
}

impl ImplicationTable {
    /// Only self-implication.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::empty(n);
        for i in 0..n {
            t.proves_true[i] = vec![i as u32];
            t.disproves_false[i] = vec![i as u32];
        }
        t
    }

    fn empty(n: usize) -> Self {
        ImplicationTable {
            proves_true: vec![Vec::new(); n],
            disproves_true: vec![Vec::new(); n],
            proves_false: vec![Vec::new(); n],
            disproves_false: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.proves_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proves_true.is_empty()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Heuristic {
    /// Jeroslow-Wang style score over uncovered conjunctions.
    Eq1,
    /// Eq1 plus half the score of every proposition decided either way.
    #[default]
    Eq2,
}

impl std::str::FromStr for Heuristic {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "eq1" => Ok(Heuristic::Eq1),
            "eq2" => Ok(Heuristic::Eq2),
            _ => Err(crate::Error::InvalidArgument(format!("unknown heuristic `{s}`"))),
        }
    }
}

/// A disjunction of conjunctions of proposition ids.
pub type Disjunction = Vec<Vec<u32>>;

/// Whether `a` generalises `b`: `b` is non-empty and each of its
/// conjunctions contains some conjunction of `a`.
pub fn generalises(a: &Disjunction, b: &Disjunction) -> bool {
    !b.is_empty() && b.iter().all(|cb| a.iter().any(|ca| is_sorted_subset(ca, cb)))
}

/// Ungeneralised/generalised split of a family of disjunctions. Exact
/// equivalents generalise each other; the lowest index among them stays
/// ungeneralised.
pub fn partition(dnf: &[Disjunction]) -> (Vec<usize>, Vec<usize>) {
    let live: Vec<usize> = (0..dnf.len()).filter(|&i| !dnf[i].is_empty()).collect();
    let mut ungeneralised = Vec::new();
    let mut generalised = Vec::new();
    for &b in &live {
        let covered = live
            .iter()
            .any(|&a| a != b && generalises(&dnf[a], &dnf[b]) && (a < b || !generalises(&dnf[b], &dnf[a])));
        if covered {
            generalised.push(b);
        } else {
            ungeneralised.push(b);
        }
    }
    (ungeneralised, generalised)
}

struct Orderer<'a> {
    dnf: Vec<Disjunction>,
    removed: Vec<usize>,
    generalised: Vec<bool>,
    picked: Vec<bool>,
    implications: Option<&'a ImplicationTable>,
    heuristic: Heuristic,
    rng: ChaCha8Rng,
    num_props: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Family {
    generalised: bool,
    removed: usize,
    size: usize,
}

impl<'a> Orderer<'a> {
    fn new(
        num_props: usize,
        dnf: &[Disjunction],
        implications: Option<&'a ImplicationTable>,
        heuristic: Heuristic,
        seed: u64,
    ) -> Self {
        let mut o = Orderer {
            dnf: dnf.to_vec(),
            removed: vec![0; dnf.len()],
            generalised: vec![false; dnf.len()],
            picked: vec![false; num_props],
            implications,
            heuristic,
            rng: ChaCha8Rng::seed_from_u64(seed),
            num_props,
        };
        o.recompute();
        o
    }

    fn live(&self, d: usize) -> bool {
        !self.dnf[d].is_empty()
    }

    fn in_family(&self, d: usize, fam: Family) -> bool {
        self.live(d)
            && self.generalised[d] == fam.generalised
            && self.removed[d] == fam.removed
            && self.dnf[d].len() == fam.size
    }

    fn covered(&self, d: usize) -> bool {
        self.dnf[d].iter().any(|c| c.iter().any(|&p| self.picked[p as usize]))
    }

    /// Heuristic score of every proposition over the uncovered
    /// disjunctions of `fam`.
    fn scores(&self, fam: Family) -> Vec<f64> {
        let mut s = vec![0.0; self.num_props];
        for d in 0..self.dnf.len() {
            if !self.in_family(d, fam) || self.covered(d) {
                continue;
            }
            for c in &self.dnf[d] {
                let w = (-(c.len() as f64)).exp2();
                for &p in c {
                    s[p as usize] += w;
                }
            }
        }
        match (self.heuristic, self.implications) {
            (Heuristic::Eq2, Some(t)) => {
                let mut out = s.clone();
                let mut seen: Vec<u32> = Vec::new();
                for (c, score) in out.iter_mut().enumerate() {
                    for (a, b) in [
                        (&t.proves_true[c], &t.disproves_true[c]),
                        (&t.proves_false[c], &t.disproves_false[c]),
                    ] {
                        seen.clear();
                        seen.extend(a.iter().chain(b).copied().filter(|&x| x as usize != c));
                        seen.sort_unstable();
                        seen.dedup();
                        *score += 0.5 * seen.iter().map(|&x| s[x as usize]).sum::<f64>();
                    }
                }
                out
            }
            _ => s,
        }
    }

    fn families(&self) -> Vec<Family> {
        let mut fams: Vec<Family> = (0..self.dnf.len())
            .filter(|&d| self.live(d))
            .map(|d| Family {
                generalised: self.generalised[d],
                removed: self.removed[d],
                size: self.dnf[d].len(),
            })
            .collect();
        fams.sort_by_key(|f| (f.generalised, f.removed, f.size));
        fams.dedup();
        fams
    }

    fn pick(&mut self, d: usize, fam: Family, families: &[Family]) -> u32 {
        let mut candidates: Vec<u32> = self.dnf[d].iter().flatten().copied().collect();
        candidates.sort_unstable();
        candidates.dedup();
        let start = families.iter().position(|&f| f == fam).expect("family exists");
        for &f in &families[start..] {
            if candidates.len() == 1 {
                break;
            }
            let s = self.scores(f);
            let best = candidates
                .iter()
                .map(|&c| s[c as usize])
                .fold(f64::NEG_INFINITY, f64::max);
            candidates.retain(|&c| s[c as usize] >= best - 1e-12 * best.abs().max(1.0));
        }
        *candidates.choose(&mut self.rng).expect("non-empty disjunction")
    }

    fn recompute(&mut self) {
        let (_, g) = partition(&self.dnf);
        self.generalised = vec![false; self.dnf.len()];
        for d in g {
            self.generalised[d] = true;
        }
    }

    fn run(mut self) -> Vec<u32> {
        let mut order = Vec::with_capacity(self.num_props);
        let mut first = true;
        loop {
            self.recompute();
            let families = self.families();
            let Some(min_removed) = families.iter().filter(|f| !f.generalised).map(|f| f.removed).min() else {
                break;
            };
            if first {
                for d in 0..self.dnf.len() {
                    let fam = Family {
                        generalised: false,
                        removed: 0,
                        size: 1,
                    };
                    if self.in_family(d, fam) && self.dnf[d][0].len() == 1 {
                        let p = self.dnf[d][0][0];
                        if !self.picked[p as usize] {
                            self.picked[p as usize] = true;
                            order.push(p);
                        }
                    }
                }
                first = false;
            }
            let round: Vec<Family> = families
                .iter()
                .copied()
                .filter(|f| !f.generalised && f.removed == min_removed)
                .collect();
            for fam in round {
                for d in 0..self.dnf.len() {
                    if self.in_family(d, fam) && !self.covered(d) {
                        let p = self.pick(d, fam, &families);
                        self.picked[p as usize] = true;
                        order.push(p);
                    }
                }
            }
            for d in 0..self.dnf.len() {
                let picked = &self.picked;
                let before = self.dnf[d].len();
                for c in &mut self.dnf[d] {
                    c.retain(|&p| !picked[p as usize]);
                }
                self.dnf[d].retain(|c| !c.is_empty());
                self.removed[d] += before - self.dnf[d].len();
            }
        }
        // Propositions outside every conjunction still need a slot.
        for p in 0..self.num_props as u32 {
            if !self.picked[p as usize] {
                order.push(p);
            }
        }
        order
    }
}

/// Orders proposition ids `0..num_props` for the disjunctions in `dnf`
/// (indexed by ascending feature id). Conjunctions need not be sorted.
pub fn order_propositions(
    num_props: usize,
    dnf: &[Disjunction],
    implications: Option<&ImplicationTable>,
    heuristic: Heuristic,
    seed: u64,
) -> Vec<u32> {
    let dnf: Vec<Disjunction> = dnf
        .iter()
        .map(|d| {
            d.iter()
                .map(|c| {
                    let mut c = c.clone();
                    c.sort_unstable();
                    c.dedup();
                    c
                })
                .filter(|c| !c.is_empty())
                .collect()
        })
        .collect();
    Orderer::new(num_props, &dnf, implications, heuristic, seed).run()
}

/// Orders instances by the position of their last-ordered proposition,
/// then by size, then by input position.
pub fn order_instances(instances: &[Vec<u32>], prop_order: &[u32]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; prop_order.len()];
    for (i, &p) in prop_order.iter().enumerate() {
        pos[p as usize] = i;
    }
    let mut idx: Vec<usize> = (0..instances.len()).collect();
    idx.sort_by_key(|&i| {
        let last = instances[i].iter().map(|&p| pos[p as usize]).max().unwrap_or(0);
        (last, instances[i].len(), i)
    });
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prop(array: BitArray, value: u8, negated: bool) -> Proposition {
        Proposition::new(0, array, value, negated)
    }

    fn two_player_rules() -> ImplicationRules {
        ImplicationRules::new(2, vec![1, 2])
    }

    #[test]
    fn empty_row() {
        let r = two_player_rules();
        let got = r.proves(prop(BitArray::Empty, 1, false));
        for q in 1..=3 {
            assert!(got.contains(&prop(BitArray::Who, q, true)));
        }
        for i in 1..=2 {
            assert!(got.contains(&prop(BitArray::What, i, true)));
        }
    }

    #[test]
    fn sole_type_row() {
        let r = two_player_rules();
        let got = r.proves(prop(BitArray::Who, 1, false));
        assert!(got.contains(&prop(BitArray::What, 1, false)));
        assert!(got.contains(&prop(BitArray::What, 2, true)));
        assert!(got.contains(&prop(BitArray::Empty, 1, true)));
        let shared = ImplicationRules::new(2, vec![1, 1]);
        assert!(!shared
            .proves(prop(BitArray::Who, 1, false))
            .contains(&prop(BitArray::What, 1, false)));
    }

    #[test]
    fn piece_row() {
        let r = two_player_rules();
        let got = r.proves(prop(BitArray::What, 2, false));
        assert!(got.contains(&prop(BitArray::Who, 2, false)));
        assert!(got.contains(&prop(BitArray::Empty, 1, true)));
        assert!(got.contains(&prop(BitArray::Who, 1, true)));
        assert!(got.contains(&prop(BitArray::What, 1, true)));
    }

    #[test]
    fn table_masks_on_universe() {
        let r = two_player_rules();
        let universe = vec![
            prop(BitArray::Empty, 1, false),
            prop(BitArray::Empty, 1, true),
            prop(BitArray::Who, 1, false),
        ];
        let t = r.table(&universe);
        // empty proves itself, disproves "owned by 1"; "not empty" is its negation
        assert_eq!(t.proves_true[0], vec![0]);
        assert_eq!(t.disproves_true[0], vec![1, 2]);
        assert_eq!(t.proves_false[0], vec![1]);
        assert_eq!(t.disproves_false[0], vec![0]);
        // owned by 1 proves "not empty"
        assert_eq!(t.proves_true[2], vec![1, 2]);
        assert_eq!(t.disproves_true[2], vec![0]);
    }

    #[test]
    fn who_zero_only_implies_itself() {
        let r = two_player_rules();
        assert_eq!(r.proves(prop(BitArray::Who, 0, false)).len(), 1);
    }

    #[test]
    fn partition_nested_triple() {
        let dnf = vec![vec![vec![0]], vec![vec![0, 1]], vec![vec![0, 1, 2]]];
        assert_eq!(partition(&dnf), (vec![0], vec![1, 2]));
        assert_eq!(partition(&dnf[..1]), (vec![0], vec![]));
    }

    #[test]
    fn partition_identical_pair() {
        let dnf = vec![vec![vec![0, 1]], vec![vec![1, 0]]];
        let dnf: Vec<Disjunction> = dnf
            .into_iter()
            .map(|d| {
                d.into_iter()
                    .map(|mut c| {
                        c.sort();
                        c
                    })
                    .collect()
            })
            .collect();
        assert_eq!(partition(&dnf), (vec![0], vec![1]));
    }

    #[test]
    fn eq1_prefers_short_conjunction() {
        // {A} or {B, C}: A scores 1/2, B and C 1/4
        let dnf = vec![vec![vec![0], vec![1, 2]]];
        let order = order_propositions(3, &dnf, None, Heuristic::Eq1, 0);
        assert_eq!(order[0], 0);
        assert_eq!(order.len(), 3);
    }

    #[test]
    fn unit_features_come_first() {
        let dnf = vec![vec![vec![3, 4], vec![5, 6]], vec![vec![2]], vec![vec![0, 1, 2]]];
        let order = order_propositions(7, &dnf, None, Heuristic::Eq1, 0);
        assert_eq!(order[0], 2);
    }

    #[test]
    fn eq2_rewards_implications() {
        // one disjunction {0} or {1}; another {2} only picked later.
        // Prop 1 proves prop 2 on true, so under eq2 it beats prop 0.
        let dnf = vec![vec![vec![0], vec![1]], vec![vec![2], vec![3]]];
        let mut t = ImplicationTable::identity(4);
        t.proves_true[1].push(2);
        let eq1 = order_propositions(4, &dnf, Some(&t), Heuristic::Eq1, 0);
        let eq2 = order_propositions(4, &dnf, Some(&t), Heuristic::Eq2, 0);
        assert_eq!(eq2[0], 1);
        // without the implication bonus 0 and 1 tie and the seed decides
        assert!(eq1[0] == 0 || eq1[0] == 1);
        for seed in 0..20 {
            assert_eq!(order_propositions(4, &dnf, Some(&t), Heuristic::Eq2, seed)[0], 1);
        }
    }

    #[test]
    fn instance_order_generaliser_first() {
        let insts = vec![vec![0, 1], vec![0], vec![2]];
        let order = order_instances(&insts, &[0, 1, 2]);
        assert_eq!(order, vec![1, 0, 2]);
    }

    fn arb_dnf() -> impl Strategy<Value = (usize, Vec<Disjunction>)> {
        (2usize..12).prop_flat_map(|n| {
            let conj =
                proptest::collection::btree_set(0..n as u32, 1..4).prop_map(|s| s.into_iter().collect::<Vec<u32>>());
            let disj = proptest::collection::vec(conj, 1..4);
            (Just(n), proptest::collection::vec(disj, 1..8))
        })
    }

    fn used(dnf: &[Disjunction]) -> usize {
        dnf.iter()
            .flatten()
            .flatten()
            .map(|&p| p as usize + 1)
            .max()
            .unwrap_or(0)
    }

    proptest! {
        #[test]
        fn order_is_permutation((n, dnf) in arb_dnf(), seed in 0u64..5, eq2 in any::<bool>()) {
            let n = n.max(used(&dnf));
            let t = ImplicationTable::identity(n);
            let h = if eq2 { Heuristic::Eq2 } else { Heuristic::Eq1 };
            let order = order_propositions(n, &dnf, Some(&t), h, seed);
            let mut sorted = order.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..n as u32).collect::<Vec<_>>());
            prop_assert_eq!(order_propositions(n, &dnf, Some(&t), h, seed), order);
        }

        #[test]
        fn generalisers_precede((n, dnf) in arb_dnf()) {
            let n = n.max(used(&dnf));
            let order = order_propositions(n, &dnf, None, Heuristic::Eq1, 0);
            let insts: Vec<Vec<u32>> = dnf.iter().flatten().cloned().collect();
            let inst_order = order_instances(&insts, &order);
            let mut rank = vec![0; insts.len()];
            for (r, &i) in inst_order.iter().enumerate() {
                rank[i] = r;
            }
            for a in 0..insts.len() {
                for b in 0..insts.len() {
                    if insts[a].len() < insts[b].len() && is_sorted_subset(&insts[a], &insts[b]) {
                        prop_assert!(rank[a] < rank[b]);
                    }
                }
            }
        }

        #[test]
        fn eq1_relabelling_invariant((n, dnf) in arb_dnf(), shift in 1usize..7) {
            let n = n.max(used(&dnf));
            let relabel = |p: u32| ((p as usize + shift) % n) as u32;
            let moved: Vec<Disjunction> = dnf
                .iter()
                .map(|d| d.iter().map(|c| {
                    let mut c: Vec<u32> = c.iter().map(|&p| relabel(p)).collect();
                    c.sort_unstable();
                    c
                }).collect())
                .collect();
            let a = Orderer::new(n, &dnf, None, Heuristic::Eq1, 0);
            let b = Orderer::new(n, &moved, None, Heuristic::Eq1, 0);
            for fam in a.families() {
                let sa = a.scores(fam);
                let sb = b.scores(fam);
                for p in 0..n as u32 {
                    prop_assert!((sa[p as usize] - sb[relabel(p) as usize]).abs() < 1e-12);
                }
            }
        }
    }
}
