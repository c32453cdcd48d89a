use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{Label, NodeId, Surgery, Tree, TreeError};
use crate::sexpr::{self, Spanned, SyntaxError};

/// Labels described by a rule rather than listed one by one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelFamily {
    /// `f` followed by `parts²` bits, row-major: the edge function
    /// `[parts] × [parts] → {0, 1}`.
    EdgeFunctions { parts: usize },
    /// `a:b` for letters `a`, `b`.
    Pairs { letters: BTreeSet<Label> },
    /// `i` for `1 ≤ i ≤ parts`, or `i:σ` when letters are given.
    Colours { parts: usize, letters: Option<BTreeSet<Label>> },
}

impl LabelFamily {
    pub fn contains(&self, label: &Label) -> bool {
        let text = label.as_str();
        match self {
            LabelFamily::EdgeFunctions { parts } => {
                text.len() == 1 + parts * parts
                    && text.starts_with('f')
                    && text[1..].bytes().all(|b| b == b'0' || b == b'1')
            }
            LabelFamily::Pairs { letters } => match label.split_pair() {
                Some((a, b)) => letters.contains(&Label::new(a)) && letters.contains(&Label::new(b)),
                None => false,
            },
            LabelFamily::Colours { parts, letters } => {
                let (colour, letter) = match (letters, label.split_pair()) {
                    (Some(ls), Some((c, l))) => (c, ls.contains(&Label::new(l))),
                    (None, None) => (text, true),
                    _ => return false,
                };
                letter && colour.parse::<usize>().is_ok_and(|i| (1..=*parts).contains(&i))
            }
        }
    }

    pub fn enumerate(&self) -> Vec<Label> {
        match self {
            LabelFamily::EdgeFunctions { parts } => {
                let bits = parts * parts;
                (0..1u64 << bits)
                    .map(|code| {
                        let s: String =
                            (0..bits).map(|i| if code >> (bits - 1 - i) & 1 == 1 { '1' } else { '0' }).collect();
                        Label::new(&format!("f{s}"))
                    })
                    .collect()
            }
            LabelFamily::Pairs { letters } => {
                letters.iter().flat_map(|a| letters.iter().map(move |b| Label::pair(a.as_str(), b.as_str()))).collect()
            }
            LabelFamily::Colours { parts, letters } => (1..=*parts)
                .flat_map(|i| match letters {
                    None => vec![Label::new(&i.to_string())],
                    Some(ls) => ls.iter().map(|l| Label::pair(&i.to_string(), l.as_str())).collect(),
                })
                .collect(),
        }
    }

    fn write(&self, out: &mut String) {
        match self {
            LabelFamily::EdgeFunctions { parts } => out.push_str(&format!("(edge-functions {parts})")),
            LabelFamily::Pairs { letters } => {
                out.push_str("(pairs");
                for l in letters {
                    out.push(' ');
                    sexpr::write_atom(out, l.as_str()).unwrap();
                }
                out.push(')');
            }
            LabelFamily::Colours { parts, letters } => {
                out.push_str(&format!("(colours {parts}"));
                for l in letters.iter().flatten() {
                    out.push(' ');
                    sexpr::write_atom(out, l.as_str()).unwrap();
                }
                out.push(')');
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelSet {
    pub explicit: BTreeSet<Label>,
    pub families: Vec<LabelFamily>,
}

impl LabelSet {
    pub fn of<'a>(labels: impl IntoIterator<Item = &'a str>) -> Self {
        LabelSet { explicit: labels.into_iter().map(Label::new).collect(), families: Vec::new() }
    }

    pub fn with_family(mut self, family: LabelFamily) -> Self {
        self.families.push(family);
        self
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.explicit.contains(label) || self.families.iter().any(|f| f.contains(label))
    }

    /// Every label in the set, sorted.
    pub fn enumerate(&self) -> Vec<Label> {
        let mut all: BTreeSet<Label> = self.explicit.clone();
        for f in &self.families {
            all.extend(f.enumerate());
        }
        all.into_iter().collect()
    }

    pub fn union(&self, other: &LabelSet) -> LabelSet {
        let mut out = self.clone();
        out.explicit.extend(other.explicit.iter().cloned());
        for f in &other.families {
            if !out.families.contains(f) {
                out.families.push(f.clone());
            }
        }
        out
    }
}

/// Internal and leaf labels, the ranked labels with their arities, and the
/// chunk parameter ρ of the unranked ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeAlphabet {
    pub internal: LabelSet,
    pub leaf: LabelSet,
    ranked: BTreeMap<Label, usize>,
    rho: BTreeMap<Label, usize>,
    default_rho: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    InternalLabel(Label),
    LeafLabel(Label),
    Arity { label: Label, expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeViolation {
    pub node: NodeId,
    pub kind: ViolationKind,
}

impl fmt::Display for TreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::InternalLabel(l) => write!(f, "internal node {} has non-internal label {l}", self.node),
            ViolationKind::LeafLabel(l) => write!(f, "leaf {} has non-leaf label {l}", self.node),
            ViolationKind::Arity { label, expected, found } => {
                write!(f, "node {} labeled {label} has {found} children, needs {expected}", self.node)
            }
        }
    }
}

/// One application of a closure condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosureOp {
    Subtree(NodeId),
    Remove(NodeId),
    Replace { at: NodeId, by: NodeId },
}

impl TreeAlphabet {
    pub fn new(internal: LabelSet, leaf: LabelSet) -> Self {
        TreeAlphabet { internal, leaf, ranked: BTreeMap::new(), rho: BTreeMap::new(), default_rho: 2 }
    }

    /// Declares `label` ranked with exactly `arity` children.
    pub fn with_ranked(mut self, label: &str, arity: usize) -> Result<Self, TreeError> {
        let label = Label::new(label);
        if !self.internal.contains(&label) {
            return Err(TreeError::Alphabet(format!("ranked label {label} is not internal")));
        }
        if arity == 0 {
            return Err(TreeError::Alphabet(format!("ranked label {label} needs arity ≥ 1")));
        }
        self.ranked.insert(label, arity);
        Ok(self)
    }

    /// Sets ρ for an unranked internal label.
    pub fn with_rho(mut self, label: &str, rho: usize) -> Result<Self, TreeError> {
        let label = Label::new(label);
        if rho == 0 {
            return Err(TreeError::Alphabet(format!("ρ({label}) must be positive")));
        }
        if self.ranked.contains_key(&label) {
            return Err(TreeError::Alphabet(format!("{label} is ranked; its ρ is its arity")));
        }
        self.rho.insert(label, rho);
        Ok(self)
    }

    /// Labels of both alphabets; a label ranked or given ρ in both must agree.
    pub fn union(&self, other: &TreeAlphabet) -> Result<TreeAlphabet, TreeError> {
        let mut out = TreeAlphabet::new(self.internal.union(&other.internal), self.leaf.union(&other.leaf));
        out.default_rho = self.default_rho.max(other.default_rho);
        for (map, into) in [(&self.ranked, 0), (&other.ranked, 0), (&self.rho, 1), (&other.rho, 1)] {
            for (label, &k) in map {
                let target = if into == 0 { &mut out.ranked } else { &mut out.rho };
                if target.insert(label.clone(), k).is_some_and(|old| old != k) {
                    return Err(TreeError::Alphabet(format!("conflicting arity or ρ for {label}")));
                }
            }
        }
        if let Some(l) = out.ranked.keys().find(|l| out.rho.contains_key(*l)) {
            return Err(TreeError::Alphabet(format!("{l} is ranked in one alphabet only")));
        }
        Ok(out)
    }

    pub fn is_ranked(&self, label: &Label) -> bool {
        self.ranked.contains_key(label)
    }

    pub fn ranked(&self) -> &BTreeMap<Label, usize> {
        &self.ranked
    }

    pub fn rho(&self, label: &Label) -> usize {
        self.ranked.get(label).or_else(|| self.rho.get(label)).copied().unwrap_or(self.default_rho)
    }

    /// Largest ρ over the internal labels.
    pub fn max_rho(&self) -> usize {
        self.ranked.values().chain(self.rho.values()).copied().fold(self.default_rho, usize::max)
    }

    /// Every label of either kind, sorted and deduplicated.
    pub fn all_labels(&self) -> Vec<Label> {
        self.internal.union(&self.leaf).enumerate()
    }

    /// Labeling and ranking violations of `t`.
    pub fn check(&self, t: &Tree) -> Vec<TreeViolation> {
        let mut out = Vec::new();
        for n in 0..t.size() {
            let label = t.label(n);
            if t.is_leaf(n) {
                if !self.leaf.contains(label) {
                    out.push(TreeViolation { node: n, kind: ViolationKind::LeafLabel(label.clone()) });
                }
                continue;
            }
            if !self.internal.contains(label) {
                out.push(TreeViolation { node: n, kind: ViolationKind::InternalLabel(label.clone()) });
            }
            if let Some(&k) = self.ranked.get(label) {
                if t.children(n).len() != k {
                    out.push(TreeViolation {
                        node: n,
                        kind: ViolationKind::Arity { label: label.clone(), expected: k, found: t.children(n).len() },
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self, t: &Tree) -> Result<(), TreeError> {
        let v = self.check(t);
        if v.is_empty() {
            Ok(())
        } else {
            Err(TreeError::Infeasible(v))
        }
    }

    /// Applies every closure operation the feasibility conditions allow:
    /// rooted subtrees, removals under unranked parents, replacements by
    /// descendants.
    pub fn closure_variants(&self, t: &Tree) -> Vec<(ClosureOp, Surgery)> {
        let mut out = Vec::new();
        for a in 0..t.size() {
            out.push((ClosureOp::Subtree(a), t.subtree_at(a).expect("node exists")));
        }
        for b in 1..t.size() {
            if let Ok(s) = t.remove_subtree(b, Some(self)) {
                out.push((ClosureOp::Remove(b), s));
            }
        }
        for a in 1..t.size() {
            for b in t.subtree_range(a).skip(1) {
                out.push((ClosureOp::Replace { at: a, by: b }, t.replace_with_descendant(a, b).expect("descendant")));
            }
        }
        out
    }

    /// Closure operations whose result violates labeling or ranking.
    pub fn check_closure(&self, t: &Tree) -> Vec<(ClosureOp, Vec<TreeViolation>)> {
        self.closure_variants(t)
            .into_iter()
            .filter_map(|(op, s)| {
                let v = self.check(&s.tree);
                (!v.is_empty()).then_some((op, v))
            })
            .collect()
    }

    pub fn format(&self) -> String {
        let mut out = String::from("(alphabet");
        for (head, set) in [("int", &self.internal), ("leaf", &self.leaf)] {
            out.push_str(&format!(" ({head}"));
            for l in &set.explicit {
                out.push(' ');
                sexpr::write_atom(&mut out, l.as_str()).unwrap();
            }
            for f in &set.families {
                out.push(' ');
                f.write(&mut out);
            }
            out.push(')');
        }
        for (head, map) in [("rank", &self.ranked), ("rho", &self.rho)] {
            if map.is_empty() {
                continue;
            }
            out.push_str(&format!(" ({head}"));
            for (l, k) in map {
                out.push_str(" (");
                sexpr::write_atom(&mut out, l.as_str()).unwrap();
                out.push_str(&format!(" {k})"));
            }
            out.push(')');
        }
        out.push(')');
        out
    }
}

fn read_label_set(items: &[Spanned]) -> Result<LabelSet, SyntaxError> {
    let mut set = LabelSet::default();
    for item in items {
        if let Some(text) = item.atom() {
            set.explicit.insert(Label::new(text));
            continue;
        }
        let (head, rest) = item.expect_form("label or label family")?;
        let letters = |rest: &[Spanned]| -> Result<BTreeSet<Label>, SyntaxError> {
            rest.iter().map(|r| r.expect_atom("letter").map(Label::new)).collect()
        };
        let count = |node: Option<&Spanned>| -> Result<usize, SyntaxError> {
            let node = node.ok_or_else(|| item.error("missing part count"))?;
            node.expect_atom("part count")?.parse().map_err(|_| node.error("bad part count"))
        };
        let family = match head {
            "edge-functions" => LabelFamily::EdgeFunctions { parts: count(rest.first())? },
            "pairs" => LabelFamily::Pairs { letters: letters(rest)? },
            "colours" => {
                let ls = letters(rest.get(1..).unwrap_or(&[]))?;
                LabelFamily::Colours { parts: count(rest.first())?, letters: (!ls.is_empty()).then_some(ls) }
            }
            other => return Err(item.error(format!("unknown label family {other}"))),
        };
        set.families.push(family);
    }
    Ok(set)
}

/// Parses `(alphabet (int ...) (leaf ...) (rank (σ k) ...) (rho (σ d) ...))`.
pub fn parse_alphabet(text: &str) -> Result<TreeAlphabet, TreeError> {
    let node = sexpr::parse(text)?;
    let (head, items) = node.expect_form("(alphabet ...)")?;
    if head != "alphabet" {
        return Err(node.error("expected (alphabet ...)").into());
    }
    let mut internal = LabelSet::default();
    let mut leaf = LabelSet::default();
    let mut ranked = Vec::new();
    let mut rho = Vec::new();
    for item in items {
        let (section, rest) = item.expect_form("alphabet section")?;
        match section {
            "int" => internal = read_label_set(rest)?,
            "leaf" => leaf = read_label_set(rest)?,
            "rank" | "rho" => {
                for entry in rest {
                    let parts = entry.expect_list("(LABEL N)")?;
                    if parts.len() != 2 {
                        return Err(entry.error("expected (LABEL N)").into());
                    }
                    let label = parts[0].expect_atom("label")?.to_string();
                    let k: usize = parts[1].expect_atom("number")?.parse().map_err(|_| parts[1].error("bad number"))?;
                    if section == "rank" {
                        ranked.push((label, k))
                    } else {
                        rho.push((label, k))
                    }
                }
            }
            other => return Err(item.error(format!("unknown alphabet section {other}")).into()),
        }
    }
    let mut alpha = TreeAlphabet::new(internal, leaf);
    for (l, k) in ranked {
        alpha = alpha.with_ranked(&l, k)?;
    }
    for (l, d) in rho {
        alpha = alpha.with_rho(&l, d)?;
    }
    Ok(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    fn binary() -> TreeAlphabet {
        TreeAlphabet::new(LabelSet::of(["f", "g"]), LabelSet::of(["a", "b"])).with_ranked("f", 2).unwrap()
    }

    #[test]
    fn labeling_and_ranking() {
        let alpha = binary();
        assert!(alpha.check(&parse_tree("(node f (leaf a) (leaf b))").unwrap()).is_empty());
        let bad = alpha.check(&parse_tree("(node f (leaf a))").unwrap());
        assert!(matches!(bad[0].kind, ViolationKind::Arity { expected: 2, found: 1, .. }));
        let bad = alpha.check(&parse_tree("(node g (leaf f))").unwrap());
        assert!(matches!(bad[0].kind, ViolationKind::LeafLabel(_)));
        assert_eq!(alpha.rho(&Label::new("g")), 2);
        assert_eq!(alpha.rho(&Label::new("f")), 2);
    }

    #[test]
    fn removal_respects_ranking() {
        let alpha = binary();
        let t = parse_tree("(node g (node f (leaf a) (leaf b)) (leaf a))").unwrap();
        assert!(matches!(t.remove_subtree(2, Some(&alpha)), Err(TreeError::RankedParent { .. })));
        assert!(t.remove_subtree(1, Some(&alpha)).is_ok());
        let only = parse_tree("(node g (leaf a))").unwrap();
        assert!(matches!(only.remove_subtree(1, Some(&alpha)), Err(TreeError::LeafLabel { .. })));
        assert!(alpha.check_closure(&t).is_empty());
    }

    #[test]
    fn families() {
        let e = LabelFamily::EdgeFunctions { parts: 2 };
        assert!(e.contains(&Label::new("f0110")));
        assert!(!e.contains(&Label::new("f011")));
        assert_eq!(e.enumerate().len(), 16);
        let c = LabelFamily::Colours { parts: 2, letters: Some(LabelSet::of(["x"]).explicit) };
        assert!(c.contains(&Label::new("2:x")));
        assert!(!c.contains(&Label::new("3:x")));
        assert!(!c.contains(&Label::new("1")));
    }

    #[test]
    fn alphabet_text_round_trip() {
        let text = "(alphabet (int g f (edge-functions 1)) (leaf a (pairs a b)) (rank (f 2)) (rho (g 3)))";
        let alpha = parse_alphabet(text).unwrap();
        assert_eq!(alpha.rho(&Label::new("g")), 3);
        assert!(alpha.internal.contains(&Label::new("f1")));
        assert!(alpha.leaf.contains(&Label::new("b:a")));
        assert_eq!(parse_alphabet(&alpha.format()).unwrap(), alpha);
        assert!(parse_alphabet("(alphabet (int f) (rank (q 2)))").is_err());
    }
}
