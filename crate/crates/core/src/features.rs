//! Spatial features: elements positioned by walks relative to an anchor,
//! their text format, symmetry transforms and atomic set generation.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use num_traits::{One, Signed};

use crate::error::{Error, Result};
use crate::games::GameMeta;
use crate::geometry::Rot;

pub const FEATURE_FILE_HEADER: &str = "spatfeat v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    To,
    From,
    LastTo,
    LastFrom,
    Empty,
    Friend,
    Enemy,
    Off,
    Item(u8),
    Connectivity(u8),
    RegionProx(u8),
}

impl ElementKind {
    pub fn is_action(self) -> bool {
        matches!(
            self,
            ElementKind::To | ElementKind::From | ElementKind::LastTo | ElementKind::LastFrom
        )
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementKind::To => f.write_str("to"),
            ElementKind::From => f.write_str("from"),
            ElementKind::LastTo => f.write_str("lastTo"),
            ElementKind::LastFrom => f.write_str("lastFrom"),
            ElementKind::Empty => f.write_str("empty"),
            ElementKind::Friend => f.write_str("friend"),
            ElementKind::Enemy => f.write_str("enemy"),
            ElementKind::Off => f.write_str("off"),
            ElementKind::Item(k) => write!(f, "item#{k}"),
            ElementKind::Connectivity(k) => write!(f, "conn#{k}"),
            ElementKind::RegionProx(k) => write!(f, "regionProx#{k}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Walk(pub Vec<Rot>);

impl Walk {
    pub fn empty() -> Self {
        Walk(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FeatureElement {
    pub kind: ElementKind,
    pub negated: bool,
    pub walk: Walk,
}

impl FeatureElement {
    pub fn new(kind: ElementKind, negated: bool, walk: Vec<Rot>) -> Self {
        FeatureElement {
            kind,
            negated,
            walk: Walk(walk),
        }
    }
}

impl fmt::Display for FeatureElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str("!")?;
        }
        write!(f, "{}@{}", self.kind, self.walk)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Feature {
    pub elements: Vec<FeatureElement>,
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_feature(s)
    }
}

impl Feature {
    pub fn new(elements: Vec<FeatureElement>) -> Result<Self> {
        let f = Feature { elements };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self
            .elements
            .iter()
            .any(|e| matches!(e.kind, ElementKind::To | ElementKind::From))
        {
            return Err(Error::Validation(format!("`{self}` has no to/from element")));
        }
        for e in &self.elements {
            if e.negated && e.kind.is_action() {
                return Err(Error::Validation(format!("action element `{e}` is negated")));
            }
            if e.walk.0.iter().any(|r| r.abs() > Rot::one()) {
                return Err(Error::Validation(format!("rotation out of [-1, 1] in `{e}`")));
            }
        }
        Ok(())
    }

    pub fn is_reactive(&self) -> bool {
        self.elements
            .iter()
            .any(|e| matches!(e.kind, ElementKind::LastTo | ElementKind::LastFrom))
    }
}

pub fn is_reactive(f: &Feature) -> bool {
    f.is_reactive()
}

pub fn serialize_feature(f: &Feature) -> String {
    f.to_string()
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.rest().starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn int(&mut self) -> Result<i32> {
        let digits = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if digits == 0 {
            return self.err("expected integer");
        }
        let v = self.rest()[..digits].parse::<i32>();
        match v {
            Ok(v) => {
                self.pos += digits;
                Ok(v)
            }
            Err(_) => self.err("integer out of range"),
        }
    }

    fn small_int(&mut self) -> Result<u8> {
        let start = self.pos;
        let v = self.int()?;
        u8::try_from(v).or_else(|_| {
            self.pos = start;
            self.err("index out of range")
        })
    }

    fn kind(&mut self) -> Result<ElementKind> {
        // Longer keywords first so `lastTo` is not read as a prefix match.
        const PLAIN: [(&str, ElementKind); 8] = [
            ("lastFrom", ElementKind::LastFrom),
            ("lastTo", ElementKind::LastTo),
            ("from", ElementKind::From),
            ("to", ElementKind::To),
            ("empty", ElementKind::Empty),
            ("friend", ElementKind::Friend),
            ("enemy", ElementKind::Enemy),
            ("off", ElementKind::Off),
        ];
        if self.eat("item#") {
            return Ok(ElementKind::Item(self.small_int()?));
        }
        if self.eat("conn#") {
            return Ok(ElementKind::Connectivity(self.small_int()?));
        }
        if self.eat("regionProx#") {
            return Ok(ElementKind::RegionProx(self.small_int()?));
        }
        for (word, kind) in PLAIN {
            if self.eat(word) {
                return Ok(kind);
            }
        }
        self.err("unknown element kind")
    }

    fn rot(&mut self) -> Result<Rot> {
        let neg = self.eat("-");
        let n = self.int()?;
        let d = if self.eat("/") { self.int()? } else { 1 };
        if d == 0 {
            return self.err("zero denominator");
        }
        let r = Rot::new(n, d);
        Ok(if neg { -r } else { r })
    }

    fn walk(&mut self) -> Result<Walk> {
        self.expect("(")?;
        let mut rots = Vec::new();
        if self.eat(")") {
            return Ok(Walk(rots));
        }
        loop {
            rots.push(self.rot()?);
            if self.eat(")") {
                return Ok(Walk(rots));
            }
            self.expect(",")?;
        }
    }

    fn element(&mut self) -> Result<FeatureElement> {
        let negated = self.eat("!");
        let kind = self.kind()?;
        self.expect("@")?;
        let walk = self.walk()?;
        Ok(FeatureElement { kind, negated, walk })
    }
}

/// Parses one feature line, e.g. `to@();!enemy@(1/4)`.
pub fn parse_feature(text: &str) -> Result<Feature> {
    let mut c = Cursor { text, pos: 0 };
    let mut elements = vec![c.element()?];
    while c.eat(";") {
        elements.push(c.element()?);
    }
    if !c.rest().is_empty() {
        return c.err("unexpected trailing input");
    }
    Feature::new(elements)
}

/// Applies a rotation (fraction of a clockwise turn) and optional mirror.
/// Every non-empty walk is multiplied by `reflect` and then has `rotation`
/// added to its first step, wrapped back into `[-1, 1]`.
pub fn transform_feature(f: &Feature, rotation: Rot, reflect: i32) -> Feature {
    let s = Rot::from_integer(reflect);
    let elements = f
        .elements
        .iter()
        .map(|e| {
            let mut rots: Vec<Rot> = e.walk.0.iter().map(|r| r * s).collect();
            if let Some(first) = rots.first_mut() {
                *first += rotation;
                while *first > Rot::one() {
                    *first -= Rot::one();
                }
                while *first < -Rot::one() {
                    *first += Rot::one();
                }
            }
            FeatureElement {
                kind: e.kind,
                negated: e.negated,
                walk: Walk(rots),
            }
        })
        .collect();
    Feature { elements }
}

fn wrap_unit(r: Rot) -> Rot {
    let mut r = r - r.floor();
    if r >= Rot::one() {
        r -= Rot::one();
    }
    r
}

/// Key identifying a feature up to element order, full-turn rotation
/// equivalence, and the `k`-fold rotations and reflections of the board.
pub fn canonical_key(f: &Feature, k: usize) -> String {
    let k = k.max(1) as i32;
    let mut best: Option<String> = None;
    for reflect in [1, -1] {
        for step in 0..k {
            let t = transform_feature(f, Rot::new(step, k), reflect);
            let mut parts: Vec<String> = t
                .elements
                .iter()
                .map(|e| {
                    let walk = Walk(e.walk.0.iter().map(|&r| wrap_unit(r)).collect());
                    FeatureElement {
                        kind: e.kind,
                        negated: e.negated,
                        walk,
                    }
                    .to_string()
                })
                .collect();
            parts.sort();
            parts.dedup();
            let key = parts.join(";");
            if best.as_ref().is_none_or(|b| key < *b) {
                best = Some(key);
            }
        }
    }
    best.unwrap_or_default()
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FeatureSet {
    pub features: Vec<Feature>,
}

impl FeatureSet {
    pub fn new(features: Vec<Feature>) -> Self {
        FeatureSet { features }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(FEATURE_FILE_HEADER);
        out.push('\n');
        for f in &self.features {
            out.push_str(&f.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses a feature-set file body. `path` is used only in errors.
    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let fmt_err = |line: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == FEATURE_FILE_HEADER => {}
            _ => return Err(fmt_err(1, format!("missing `{FEATURE_FILE_HEADER}` header"))),
        }
        let mut features = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f = parse_feature(line).map_err(|e| fmt_err(i + 1, e.to_string()))?;
            features.push(f);
        }
        Ok(FeatureSet { features })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Walks of rotation indices (multiples of `1/k`) with first step 0, kept
/// only in the lexicographically smaller of each mirror pair. Ordered by
/// length, then lexicographically. Straight walks extend up to `max_straight`.
fn atomic_walks(k: usize, max_len: usize, max_straight: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<usize>> = vec![Vec::new()];
    for len in 1..=max_len {
        let mut next = Vec::new();
        for w in &layer {
            let choices: Vec<usize> = if len == 1 { vec![0] } else { (0..k).collect() };
            for c in choices {
                let mut v = w.clone();
                v.push(c);
                next.push(v);
            }
        }
        for w in &next {
            let mirrored: Vec<usize> = w.iter().map(|&i| (k - i) % k).collect();
            if *w <= mirrored {
                out.push(w.clone());
            }
        }
        layer = next;
    }
    for len in max_len + 1..=max_straight {
        out.push(vec![0; len]);
    }
    out
}

/// All features with one state element on a walk of length up to
/// `max_len` (or up to `max_straight` when the walk is straight), plus the
/// action-only and last-action-relative features that need no state check.
pub fn generate_atomic(meta: &GameMeta, max_len: usize, max_straight: usize) -> FeatureSet {
    assert!(max_straight >= max_len && max_len >= 1);
    let k = meta.graph.max_directions().max(1);
    let to_rot = |idx: &Vec<usize>| -> Vec<Rot> { idx.iter().map(|&i| Rot::new(i as i32, k as i32)).collect() };
    let walks: Vec<Vec<Rot>> = atomic_walks(k, max_len, max_straight).iter().map(to_rot).collect();

    let mut state_kinds = vec![ElementKind::Empty, ElementKind::Friend, ElementKind::Enemy];
    if !meta.one_type_per_player() {
        state_kinds.extend((1..=meta.num_piece_types()).map(|i| ElementKind::Item(i as u8)));
    }
    let mut anchors = vec![ElementKind::To];
    if meta.movement {
        anchors.push(ElementKind::From);
    }

    let el = |kind, negated, walk: &Vec<Rot>| FeatureElement::new(kind, negated, walk.clone());
    let none = Vec::new();
    let mut features = Vec::new();

    features.push(Feature {
        elements: vec![el(ElementKind::To, false, &none)],
    });
    if meta.movement {
        features.push(Feature {
            elements: vec![el(ElementKind::From, false, &none)],
        });
        for w in walks.iter().filter(|w| !w.is_empty()) {
            features.push(Feature {
                elements: vec![el(ElementKind::To, false, &none), el(ElementKind::From, false, w)],
            });
        }
    }
    for &anchor in &anchors {
        for w in &walks {
            for &kind in state_kinds.iter().chain(std::iter::once(&ElementKind::Off)) {
                if kind == ElementKind::Off && w.is_empty() {
                    continue;
                }
                for negated in [false, true] {
                    features.push(Feature {
                        elements: vec![el(anchor, false, &none), el(kind, negated, w)],
                    });
                }
            }
        }
    }
    let mut last_kinds = vec![ElementKind::LastTo];
    if meta.movement {
        last_kinds.push(ElementKind::LastFrom);
    }
    for kind in last_kinds {
        for w in &walks {
            features.push(Feature {
                elements: vec![el(ElementKind::To, false, &none), el(kind, false, w)],
            });
        }
    }

    let mut seen = HashSet::new();
    features.retain(|f| seen.insert(canonical_key(f, k)));
    FeatureSet { features }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games;
    use num_traits::Zero;
    use proptest::prelude::*;

    fn r(n: i32, d: i32) -> Rot {
        Rot::new(n, d)
    }

    #[test]
    fn parse_examples() {
        let f = parse_feature("to@();empty@();friend@(0);friend@(1/2)").unwrap();
        assert_eq!(f.elements.len(), 4);
        assert_eq!(f.elements[3].walk.0, vec![r(1, 2)]);
        let f = parse_feature("to@();!enemy@(1/4)").unwrap();
        assert!(f.elements[1].negated);
        assert_eq!(f.elements[1].kind, ElementKind::Enemy);
        assert_eq!(f.to_string(), "to@();!enemy@(1/4)");
    }

    #[test]
    fn parse_all_kinds() {
        let text = "from@(-1/3,0);lastTo@();lastFrom@(1);off@(0);item#2@();conn#3@(0);regionProx#1@(1/6)";
        let f = parse_feature(text).unwrap();
        assert_eq!(f.to_string(), text);
        assert!(f.is_reactive());
    }

    #[test]
    fn parse_normalizes_fractions() {
        let f = parse_feature("to@(2/4)").unwrap();
        assert_eq!(f.to_string(), "to@(1/2)");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_feature("to@(1/0)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_feature("empty@()"), Err(Error::Validation(_))));
        assert!(matches!(parse_feature("to@();!to@()"), Err(Error::Validation(_))));
        match parse_feature("to@();bogus@()") {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 7),
            other => panic!("{other:?}"),
        }
        assert!(parse_feature("to@(3/2)").is_err());
        assert!(parse_feature("to@()x").is_err());
    }

    #[test]
    fn reactive_flag() {
        assert!(parse_feature("to@();lastTo@(0)").unwrap().is_reactive());
        assert!(!parse_feature("to@();empty@(0)").unwrap().is_reactive());
        assert!(parse_feature("to@();lastFrom@()").unwrap().is_reactive());
    }

    #[test]
    fn transform_examples() {
        let f = parse_feature("to@();friend@(0,1/4)").unwrap();
        assert_eq!(transform_feature(&f, r(0, 1), 1), f);
        assert_eq!(transform_feature(&f, r(0, 1), -1).to_string(), "to@();friend@(0,-1/4)");
        let line = parse_feature("to@();friend@(0,0)").unwrap();
        assert_eq!(transform_feature(&line, r(1, 2), 1).to_string(), "to@();friend@(1/2,0)");
    }

    #[test]
    fn canonical_key_merges_symmetric_copies() {
        let a = parse_feature("to@();friend@(1/4)").unwrap();
        let b = parse_feature("friend@(-1/4);to@()").unwrap();
        let c = parse_feature("to@();friend@(0)").unwrap();
        assert_eq!(canonical_key(&a, 4), canonical_key(&b, 4));
        assert_eq!(canonical_key(&a, 4), canonical_key(&c, 4));
        let d = parse_feature("to@();enemy@(0)").unwrap();
        assert_ne!(canonical_key(&a, 4), canonical_key(&d, 4));
    }

    #[test]
    fn set_text_roundtrip() {
        let set = FeatureSet::new(vec![
            parse_feature("to@();empty@(0)").unwrap(),
            parse_feature("to@();lastTo@(1/2)").unwrap(),
        ]);
        let text = set.to_text();
        let commented = text.replace("spatfeat v1\n", "spatfeat v1\n# comment\n\n");
        let back = FeatureSet::from_text(&commented, Path::new("x")).unwrap();
        assert_eq!(back, set);
        assert!(FeatureSet::from_text("to@()\n", Path::new("x")).is_err());
        match FeatureSet::from_text("spatfeat v1\nto@()\nnope\n", Path::new("x")) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn walk_enumeration() {
        // k=4, length 2: [], [0], [0,0], [0,1], [0,2]; [0,3] mirrors [0,1]
        assert_eq!(
            atomic_walks(4, 2, 2),
            vec![vec![], vec![0], vec![0, 0], vec![0, 1], vec![0, 2]]
        );
        assert_eq!(atomic_walks(4, 1, 3), vec![vec![], vec![0], vec![0, 0], vec![0, 0, 0]]);
    }

    fn keys(set: &FeatureSet, k: usize) -> HashSet<String> {
        set.features.iter().map(|f| canonical_key(f, k)).collect()
    }

    #[test]
    fn atomic_sets_nest() {
        for name in games::GAME_NAMES {
            let g = games::by_name(name).unwrap();
            let meta = g.meta();
            let k = meta.graph.max_directions();
            let sets = [(1, 1), (1, 2), (2, 2), (2, 3), (2, 4)].map(|(m, n)| keys(&generate_atomic(meta, m, n), k));
            for w in sets.windows(2) {
                assert!(w[0].is_subset(&w[1]), "{name}");
                assert!(w[0].len() < w[1].len(), "{name}");
            }
        }
    }

    #[test]
    fn atomic_contents() {
        let hex = games::by_name("hex").unwrap();
        let set = generate_atomic(hex.meta(), 1, 1);
        let texts: Vec<String> = set.features.iter().map(|f| f.to_string()).collect();
        assert!(texts.contains(&"to@();empty@(0)".to_string()));
        for f in &set.features {
            f.validate().unwrap();
        }
        let gomoku = games::by_name("gomoku").unwrap();
        let set = generate_atomic(gomoku.meta(), 2, 4);
        assert!(set
            .features
            .iter()
            .all(|f| f.elements.iter().all(|e| !matches!(e.kind, ElementKind::Item(_)))));
        assert!(set
            .features
            .iter()
            .all(|f| f.elements.iter().all(|e| e.kind != ElementKind::From)));
        // oracle for k=4, walks {[],[0],[0,0],[0,1/4],[0,1/2]}:
        // 3 kinds x 2 signs x 5 walks + off x 2 x 4 + to@() + 5 lastTo
        assert_eq!(generate_atomic(gomoku.meta(), 2, 2).len(), 30 + 8 + 1 + 5);
        let bt = games::by_name("breakthrough").unwrap();
        let set = generate_atomic(bt.meta(), 1, 1);
        assert!(set.features.iter().any(|f| f.to_string() == "from@()"));
    }

    #[test]
    fn atomic_is_deterministic() {
        let g = games::by_name("breakthrough").unwrap();
        assert_eq!(generate_atomic(g.meta(), 2, 2), generate_atomic(g.meta(), 2, 2));
    }

    fn arb_rot() -> impl Strategy<Value = Rot> {
        (-12i32..=12, 1i32..=12).prop_map(|(n, d)| {
            let r = Rot::new(n, d);
            if r.abs() > Rot::one() {
                Rot::new(n.signum(), 1)
            } else {
                r
            }
        })
    }

    fn arb_element() -> impl Strategy<Value = FeatureElement> {
        let kind = prop_oneof![
            Just(ElementKind::Empty),
            Just(ElementKind::Friend),
            Just(ElementKind::Enemy),
            Just(ElementKind::Off),
            Just(ElementKind::LastTo),
            (0u8..5).prop_map(ElementKind::Item),
            (0u8..7).prop_map(ElementKind::Connectivity),
            (0u8..4).prop_map(ElementKind::RegionProx),
        ];
        (kind, any::<bool>(), proptest::collection::vec(arb_rot(), 0..4))
            .prop_map(|(kind, negated, walk)| FeatureElement::new(kind, negated && !kind.is_action(), walk))
    }

    fn arb_feature() -> impl Strategy<Value = Feature> {
        (
            prop_oneof![Just(ElementKind::To), Just(ElementKind::From)],
            proptest::collection::vec(arb_rot(), 0..3),
            proptest::collection::vec(arb_element(), 0..4),
        )
            .prop_map(|(anchor, walk, rest)| {
                let mut elements = vec![FeatureElement::new(anchor, false, walk)];
                elements.extend(rest);
                Feature { elements }
            })
    }

    proptest! {
        #[test]
        fn text_roundtrip(f in arb_feature()) {
            let text = f.to_string();
            let back = parse_feature(&text).unwrap();
            prop_assert_eq!(&back, &f);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn transform_inverse(f in arb_feature(), n in -8i32..8, reflect in prop_oneof![Just(1), Just(-1)]) {
            let rot = Rot::new(n, 8);
            let there = transform_feature(&f, rot, reflect);
            let back = transform_feature(&there, -rot * Rot::from_integer(reflect), reflect);
            // rotations are compared modulo a full turn
            for (a, b) in back.elements.iter().zip(&f.elements) {
                let wa: Vec<Rot> = a.walk.0.iter().map(|&r| wrap_unit(r)).collect();
                let wb: Vec<Rot> = b.walk.0.iter().map(|&r| wrap_unit(r)).collect();
                prop_assert_eq!(wa, wb);
            }
        }

        #[test]
        fn double_reflection_is_identity(f in arb_feature()) {
            let twice = transform_feature(&transform_feature(&f, Rot::zero(), -1), Rot::zero(), -1);
            prop_assert_eq!(twice, f);
        }
    }
}
