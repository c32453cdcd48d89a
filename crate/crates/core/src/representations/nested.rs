use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{ReprError, Representation, Trace, TracedStructure, CONCAT};
use crate::structure::{Elem, Structure, Vocabulary};
use crate::trees::{label_predicate, Label, LabelFamily, LabelSet, NodeId, Tree, TreeAlphabet, ANCESTOR};

/// Relation name of the nesting matching.
pub const MATCH: &str = "~>";

/// A word with a non-crossing matching; positions are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NestedWord {
    pub letters: Vec<Label>,
    pub matching: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NestedViolation {
    Empty,
    OutOfRange { call: usize, ret: usize },
    NotForward { call: usize, ret: usize },
    SharedCall(usize),
    SharedReturn(usize),
    Crossing { outer: (usize, usize), inner: (usize, usize) },
}

impl NestedWord {
    /// Builds from a letter string and 1-based matched pairs.
    pub fn from_text(word: &str, pairs: &[(usize, usize)]) -> Self {
        NestedWord {
            letters: word.chars().map(|c| Label::new(&c.to_string())).collect(),
            matching: pairs.iter().map(|&(i, j)| (i - 1, j - 1)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn word(&self) -> String {
        self.letters.iter().map(Label::as_str).collect()
    }

    /// Matched pairs, 1-based.
    pub fn pairs_one_based(&self) -> Vec<(usize, usize)> {
        self.matching.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    /// The structure over `{<=, ~>, P_σ}`; element `i` is position `i`.
    pub fn to_structure(&self, vocab: &Arc<Vocabulary>) -> Structure {
        let n = self.len() as Elem;
        let mut tables: Vec<(String, Vec<Vec<Elem>>)> = vec![
            (ANCESTOR.into(), (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect()),
            (MATCH.into(), self.matching.iter().map(|&(i, j)| vec![i as Elem, j as Elem]).collect()),
        ];
        for rel in &vocab.relations()[2..] {
            let letter = &rel.name[2..];
            let members = self.letters.iter().enumerate().filter(|(_, l)| l.as_str() == letter);
            tables.push((rel.name.clone(), members.map(|(i, _)| vec![i as Elem]).collect()));
        }
        Structure::new(vocab.clone(), 0..n, tables).expect("nested word images are well formed")
    }
}

impl fmt::Display for NestedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pairs: Vec<String> = self.pairs_one_based().iter().map(|(i, j)| format!("({i}, {j})")).collect();
        write!(f, "({}, {{{}}})", self.word(), pairs.join(", "))
    }
}

pub fn validate_nested(w: &NestedWord) -> Vec<NestedViolation> {
    let mut out = Vec::new();
    if w.is_empty() {
        out.push(NestedViolation::Empty);
    }
    let mut calls = BTreeSet::new();
    let mut rets = BTreeSet::new();
    for &(i, j) in &w.matching {
        if i >= w.len() || j >= w.len() {
            out.push(NestedViolation::OutOfRange { call: i, ret: j });
        }
        if i >= j {
            out.push(NestedViolation::NotForward { call: i, ret: j });
        }
        if !calls.insert(i) {
            out.push(NestedViolation::SharedCall(i));
        }
        if !rets.insert(j) {
            out.push(NestedViolation::SharedReturn(j));
        }
    }
    for &(i1, j1) in &w.matching {
        for &(i2, j2) in &w.matching {
            if i1 < i2 && i2 <= j1 && j1 < j2 {
                out.push(NestedViolation::Crossing { outer: (i1, j1), inner: (i2, j2) });
            }
        }
    }
    out
}

/// `u ↑_e v`: the positions of `v` go right after position `e` of `u`.
pub fn nested_insert(u: &NestedWord, e: usize, v: &NestedWord) -> Result<NestedWord, ReprError> {
    if e >= u.len() {
        return Err(ReprError::Invalid(format!("position {e} is not in a word of length {}", u.len())));
    }
    if v.is_empty() {
        return Err(ReprError::Invalid("inserted nested word must be nonempty".into()));
    }
    let k = v.len();
    let shift_u = |p: usize| if p > e { p + k } else { p };
    let mut letters = u.letters[..=e].to_vec();
    letters.extend(v.letters.iter().cloned());
    letters.extend(u.letters[e + 1..].iter().cloned());
    let mut matching: BTreeSet<(usize, usize)> = u.matching.iter().map(|&(i, j)| (shift_u(i), shift_u(j))).collect();
    matching.extend(v.matching.iter().map(|&(i, j)| (i + e + 1, j + e + 1)));
    Ok(NestedWord { letters, matching })
}

/// `u · v`, the insert at the last position of `u`.
pub fn nested_concat(u: &NestedWord, v: &NestedWord) -> Result<NestedWord, ReprError> {
    nested_insert(u, u.len().checked_sub(1).ok_or_else(|| ReprError::Invalid("empty nested word".into()))?, v)
}

/// Nested words as trees. Leaves `σ` are one-letter words, leaves `σ:σ′`
/// the matched word `σσ′`. An internal `∘` concatenates its children, an
/// internal `σ:σ′` wraps their concatenation in a matched pair, and an
/// internal `σ` prefixes it with `σ`.
#[derive(Debug, Clone)]
pub struct NestedWordsRep {
    alphabet: TreeAlphabet,
    vocab: Arc<Vocabulary>,
    m0: usize,
}

impl NestedWordsRep {
    pub fn new(letters: &[&str]) -> Self {
        let sigma = LabelSet::of(letters.iter().copied());
        let leaf = sigma.clone().with_family(LabelFamily::Pairs { letters: sigma.explicit.clone() });
        let internal = leaf.union(&LabelSet::of([CONCAT]));
        let alphabet = TreeAlphabet::new(internal, leaf);
        let mut rels = vec![(ANCESTOR.to_string(), 2), (MATCH.to_string(), 2)];
        rels.extend(sigma.explicit.iter().map(|l| (label_predicate(l), 1)));
        let vocab = Arc::new(Vocabulary::new(rels).expect("distinct letters"));
        NestedWordsRep { alphabet, vocab, m0: 2 }
    }

    /// The nested word of a tree with each position's trace.
    pub fn word_of(&self, t: &Tree) -> (NestedWord, Vec<Trace>) {
        let mut w = NestedWord { letters: Vec::new(), matching: BTreeSet::new() };
        let mut trace = Vec::new();
        emit(t, 0, &mut w, &mut trace);
        (w, trace)
    }
}

fn push(w: &mut NestedWord, trace: &mut Vec<Trace>, letter: &str, node: NodeId, slot: u8) -> usize {
    w.letters.push(Label::new(letter));
    trace.push(vec![(node, slot)]);
    w.letters.len() - 1
}

fn emit(t: &Tree, n: NodeId, w: &mut NestedWord, trace: &mut Vec<Trace>) {
    let label = t.label(n);
    let open = match (label.as_str(), label.split_pair()) {
        (CONCAT, _) => None,
        (_, Some((a, b))) => Some((push(w, trace, a, n, 0), b)),
        (a, None) => {
            push(w, trace, a, n, 0);
            None
        }
    };
    for &c in t.children(n) {
        emit(t, c, w, trace);
    }
    if let Some((call, b)) = open {
        let ret = push(w, trace, b, n, 1);
        w.matching.insert((call, ret));
    }
}

impl Representation for NestedWordsRep {
    fn name(&self) -> &str {
        "nested-words"
    }
    fn alphabet(&self) -> &TreeAlphabet {
        &self.alphabet
    }
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }
    fn m0(&self) -> usize {
        self.m0
    }
    fn str_traced(&self, t: &Tree) -> TracedStructure {
        let (w, trace) = self.word_of(t);
        TracedStructure { structure: w.to_structure(&self.vocab), trace }
    }
    fn elements_per_node(&self) -> usize {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::parse_tree;

    #[test]
    fn golden_example_from_its_tree() {
        let rep = NestedWordsRep::new(&["a", "b"]);
        let t = parse_tree("(node ∘ (leaf a) (node b:b (leaf a) (leaf a:b)) (leaf a))").unwrap();
        assert!((&rep as &dyn Representation).check(&t).is_empty());
        let (w, _) = rep.word_of(&t);
        assert_eq!(w, NestedWord::from_text("abaabba", &[(2, 6), (4, 5)]));
        assert!(validate_nested(&w).is_empty());
        assert_eq!(w.to_string(), "(abaabba, {(2, 6), (4, 5)})");
    }

    #[test]
    fn leaf_pairs_and_plain_concatenation() {
        let rep = NestedWordsRep::new(&["a", "b"]);
        let (w, trace) = rep.word_of(&Tree::leaf("a:b"));
        assert_eq!(w, NestedWord::from_text("ab", &[(1, 2)]));
        assert_eq!(trace, vec![vec![(0, 0)], vec![(0, 1)]]);
        let (w, _) = rep.word_of(&parse_tree("(node ∘ (leaf a) (leaf b))").unwrap());
        assert!(w.matching.is_empty());
        let (w, _) = rep.word_of(&parse_tree("(node a (leaf b))").unwrap());
        assert_eq!(w.word(), "ab");
    }

    #[test]
    fn validation() {
        assert!(!validate_nested(&NestedWord::from_text("abab", &[(1, 3), (2, 4)])).is_empty());
        assert!(!validate_nested(&NestedWord::from_text("aaa", &[(1, 2), (1, 3)])).is_empty());
        assert!(!validate_nested(&NestedWord::from_text("aa", &[(2, 1)])).is_empty());
        assert!(validate_nested(&NestedWord::from_text("aaaa", &[(1, 2), (3, 4)])).is_empty());
    }

    #[test]
    fn insert_and_concat() {
        let u = NestedWord::from_text("ab", &[(1, 2)]);
        let v = NestedWord::from_text("ba", &[(1, 2)]);
        let at_last = nested_insert(&u, 1, &v).unwrap();
        assert_eq!(at_last, nested_concat(&u, &v).unwrap());
        assert_eq!(at_last, NestedWord::from_text("abba", &[(1, 2), (3, 4)]));
        let inside = nested_insert(&u, 0, &v).unwrap();
        assert_eq!(inside, NestedWord::from_text("abab", &[(1, 4), (2, 3)]));
        assert!(validate_nested(&inside).is_empty());
        assert!(nested_insert(&u, 2, &v).is_err());
    }
}
