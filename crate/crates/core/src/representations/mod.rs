//! Tree encodings of structure classes: the `Str` maps.
//!
//! Each element of an image is traced back to the tree nodes it was built
//! from. A trace has one `(node, slot)` entry per coordinate; slot 1 marks
//! the closing position of a matched pair in nested words.

mod compose;
mod good;
mod nested;
mod npartite;

use std::fmt;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::structure::{Elem, Structure, Vocabulary};
use crate::trees::{tree_vocabulary, Label, LabelSet, NodeId, Tree, TreeAlphabet, TreeError, TreeViolation, ANCESTOR};

pub use compose::{compose_representations, ComposedRep};
pub use good::{check_good, Conflict, GoodReport};
pub use nested::{nested_concat, nested_insert, validate_nested, NestedViolation, NestedWord, NestedWordsRep, MATCH};
pub use npartite::{edge_bit, NPartiteRep, EDGE};

pub type Trace = Vec<(NodeId, u8)>;

/// An image together with the trace of each element (indexed by element id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracedStructure {
    pub structure: Structure,
    pub trace: Vec<Trace>,
}

impl TracedStructure {
    /// Element of this image by trace.
    pub fn index(&self) -> FxHashMap<&Trace, Elem> {
        self.trace.iter().enumerate().map(|(e, t)| (t, e as Elem)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReprError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("unknown representation {0}")]
    Unknown(String),
    #[error("{0}")]
    Invalid(String),
}

pub trait Representation: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn alphabet(&self) -> &TreeAlphabet;
    /// Vocabulary shared by every image.
    fn vocabulary(&self) -> &Arc<Vocabulary>;
    /// Rank from which composition is claimed.
    fn m0(&self) -> usize;
    /// Feasibility violations of `t` for this representation.
    fn check(&self, t: &Tree) -> Vec<TreeViolation> {
        self.alphabet().check(t)
    }
    /// The image of a feasible tree.
    fn str_traced(&self, t: &Tree) -> TracedStructure;
    /// Upper bound on image elements contributed by a single node.
    fn elements_per_node(&self) -> usize {
        1
    }
}

impl dyn Representation {
    pub fn str_image(&self, t: &Tree) -> Structure {
        self.str_traced(t).structure
    }

    pub fn validate(&self, t: &Tree) -> Result<(), ReprError> {
        let v = self.check(t);
        if v.is_empty() {
            Ok(())
        } else {
            Err(TreeError::Infeasible(v).into())
        }
    }

    pub fn str_checked(&self, t: &Tree) -> Result<TracedStructure, ReprError> {
        self.validate(t)?;
        Ok(self.str_traced(t))
    }
}

pub type Rep = Arc<dyn Representation>;

/// Trees read directly as posets, with or without sibling order.
#[derive(Debug, Clone)]
pub struct TreeRep {
    name: String,
    alphabet: TreeAlphabet,
    ordered: bool,
    labels: Vec<Label>,
    vocab: Arc<Vocabulary>,
    m0: usize,
}

impl TreeRep {
    fn new(name: &str, alphabet: TreeAlphabet, ordered: bool) -> Self {
        let labels = alphabet.all_labels();
        let vocab = Arc::new(tree_vocabulary(ordered, &labels));
        TreeRep { name: name.into(), alphabet, ordered, labels, vocab, m0: 3 }
    }
}

impl Representation for TreeRep {
    fn name(&self) -> &str {
        &self.name
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
        TracedStructure {
            structure: t.as_structure_in(self.ordered, &self.labels, &self.vocab),
            trace: (0..t.size()).map(|n| vec![(n, 0)]).collect(),
        }
    }
}

/// Ordered trees partially ranked by the alphabet.
pub fn rep_partially_ranked(alphabet: TreeAlphabet) -> Rep {
    Arc::new(TreeRep::new("ranked-trees", alphabet, true))
}

/// Unordered trees: sibling order is forgotten, nothing is ranked.
pub fn rep_unordered_trees(internal: LabelSet, leaf: LabelSet) -> Rep {
    Arc::new(TreeRep::new("unordered-trees", TreeAlphabet::new(internal, leaf), false))
}

pub const CONCAT: &str = "∘";

/// Words as concatenation trees: internal nodes `∘`, leaves are letters,
/// the word is the left-to-right leaf sequence.
#[derive(Debug, Clone)]
pub struct WordsRep {
    alphabet: TreeAlphabet,
    letters: Vec<Label>,
    vocab: Arc<Vocabulary>,
    m0: usize,
}

/// Vocabulary of words over `letters`: reflexive order plus letter predicates.
pub fn word_vocabulary(letters: &[Label]) -> Vocabulary {
    tree_vocabulary(false, letters)
}

/// The word structure of a letter sequence; element `i` is position `i`.
pub fn word_structure(word: &[Label], vocab: &Arc<Vocabulary>) -> Structure {
    let n = word.len() as Elem;
    let mut tables: Vec<(String, Vec<Vec<Elem>>)> =
        vec![(ANCESTOR.into(), (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect())];
    for rel in &vocab.relations()[1..] {
        let letter = &rel.name[2..];
        let members = word.iter().enumerate().filter(|(_, l)| l.as_str() == letter).map(|(i, _)| vec![i as Elem]);
        tables.push((rel.name.clone(), members.collect()));
    }
    Structure::new(vocab.clone(), 0..n, tables).expect("word images are well formed")
}

impl WordsRep {
    pub fn new(letters: &[&str]) -> Self {
        let alphabet = TreeAlphabet::new(LabelSet::of([CONCAT]), LabelSet::of(letters.iter().copied()));
        let letters = alphabet.leaf.enumerate();
        let vocab = Arc::new(word_vocabulary(&letters));
        WordsRep { alphabet, letters, vocab, m0: 3 }
    }

    /// A flat `∘` tree over the letters of `word` (a single leaf if length 1).
    pub fn tree_of(word: &str) -> Tree {
        let leaves: Vec<Tree> = word.chars().map(|c| Tree::leaf(c.to_string().as_str())).collect();
        if leaves.len() == 1 {
            leaves.into_iter().next().unwrap()
        } else {
            Tree::node(CONCAT, leaves)
        }
    }

    pub fn letters(&self) -> &[Label] {
        &self.letters
    }
}

impl Representation for WordsRep {
    fn name(&self) -> &str {
        "words"
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
        let leaves: Vec<NodeId> = t.leaves().collect();
        let word: Vec<Label> = leaves.iter().map(|&n| t.label(n).clone()).collect();
        TracedStructure {
            structure: word_structure(&word, &self.vocab),
            trace: leaves.iter().map(|&n| vec![(n, 0)]).collect(),
        }
    }
}

/// Wraps a representation with a different composition threshold.
#[derive(Debug)]
pub struct WithM0 {
    inner: Rep,
    m0: usize,
}

impl Representation for WithM0 {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn alphabet(&self) -> &TreeAlphabet {
        self.inner.alphabet()
    }
    fn vocabulary(&self) -> &Arc<Vocabulary> {
        self.inner.vocabulary()
    }
    fn m0(&self) -> usize {
        self.m0
    }
    fn check(&self, t: &Tree) -> Vec<TreeViolation> {
        self.inner.check(t)
    }
    fn str_traced(&self, t: &Tree) -> TracedStructure {
        self.inner.str_traced(t)
    }
    fn elements_per_node(&self) -> usize {
        self.inner.elements_per_node()
    }
}

pub fn with_m0(rep: Rep, m0: usize) -> Rep {
    Arc::new(WithM0 { inner: rep, m0 })
}

pub fn rep_words(letters: &[&str]) -> Rep {
    Arc::new(WordsRep::new(letters))
}

pub fn rep_nested_words(letters: &[&str]) -> Rep {
    Arc::new(NestedWordsRep::new(letters))
}

pub fn rep_npartite(parts: usize, labels: Option<&[&str]>) -> Rep {
    Arc::new(NPartiteRep::new(parts, labels))
}

pub fn rep_cographs() -> Rep {
    Arc::new(NPartiteRep::cographs())
}

/// Default alphabet for `ranked-trees` when none is supplied.
pub fn default_ranked_alphabet() -> TreeAlphabet {
    TreeAlphabet::new(LabelSet::of([CONCAT, "f"]), LabelSet::of(["a", "b"])).with_ranked("f", 2).expect("f is internal")
}

/// Resolves a CLI selector. Letters for words and nested words come from the
/// alphabet's explicit leaf labels; n-partite labels likewise.
pub fn rep_by_name(name: &str, alphabet: Option<&TreeAlphabet>) -> Result<Rep, ReprError> {
    let letters: Vec<String> = match alphabet {
        Some(a) => a.leaf.explicit.iter().map(|l| l.to_string()).collect(),
        None => vec!["a".into(), "b".into()],
    };
    let letters: Vec<&str> = letters.iter().map(String::as_str).collect();
    Ok(match name {
        "ranked-trees" => rep_partially_ranked(alphabet.cloned().unwrap_or_else(default_ranked_alphabet)),
        "unordered-trees" => {
            let a = alphabet.cloned().unwrap_or_else(default_ranked_alphabet);
            rep_unordered_trees(a.internal, a.leaf)
        }
        "words" => rep_words(&letters),
        "nested-words" => rep_nested_words(&letters),
        "cograph" => rep_cographs(),
        other => match other.strip_prefix("npartite:").map(str::parse::<usize>) {
            Some(Ok(n)) if (1..=3).contains(&n) => {
                rep_npartite(n, alphabet.map(|_| letters.as_slice()).filter(|l| !l.is_empty()))
            }
            Some(_) => return Err(ReprError::Invalid(format!("npartite needs 1 ≤ n ≤ 3, got {other}"))),
            None => return Err(ReprError::Unknown(other.into())),
        },
    })
}

pub const REPRESENTATION_NAMES: [&str; 6] =
    ["ranked-trees", "unordered-trees", "words", "nested-words", "cograph", "npartite:<n>"];

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::isomorphic;
    use crate::trees::parse_tree;

    #[test]
    fn words_read_leaves_left_to_right() {
        let rep = rep_words(&["a", "b"]);
        let t = parse_tree("(node ∘ (leaf a) (node ∘ (leaf b) (leaf a)))").unwrap();
        let img = rep.str_checked(&t).unwrap();
        assert_eq!(img.structure.size(), 3);
        assert_eq!(img.trace, vec![vec![(1, 0)], vec![(3, 0)], vec![(4, 0)]]);
        let flat = rep.str_image(&WordsRep::tree_of("aba"));
        assert!(isomorphic(&img.structure, &flat, 10).unwrap());
        assert_eq!(rep.str_image(&Tree::leaf("a")).size(), 1);
        assert!(rep.str_checked(&parse_tree("(node a (leaf b))").unwrap()).is_err());
    }

    #[test]
    fn ab_tree_is_the_word_ab() {
        let rep = rep_words(&["a", "b"]);
        let img = rep.str_image(&parse_tree("(node ∘ (leaf a) (leaf b))").unwrap());
        assert!(img.holds(0, &[0, 1]));
        assert!(!img.holds(0, &[1, 0]));
        assert_eq!(img.table_by_name("P_a").unwrap().iter().next().unwrap(), &vec![0]);
    }

    #[test]
    fn unordered_forgets_sibling_order() {
        let rep = rep_unordered_trees(LabelSet::of(["r"]), LabelSet::of(["a", "b"]));
        let x = rep.str_image(&parse_tree("(node r (leaf a) (leaf b))").unwrap());
        let y = rep.str_image(&parse_tree("(node r (leaf b) (leaf a))").unwrap());
        assert!(isomorphic(&x, &y, 10).unwrap());
        let ranked = rep_partially_ranked(default_ranked_alphabet());
        assert_eq!(ranked.str_image(&Tree::leaf("a")).size(), 1);
        assert!(ranked.str_checked(&parse_tree("(node f (leaf a))").unwrap()).is_err());
    }

    #[test]
    fn selectors() {
        for name in ["ranked-trees", "unordered-trees", "words", "nested-words", "cograph", "npartite:2"] {
            assert!(rep_by_name(name, None).is_ok(), "{name}");
        }
        assert!(rep_by_name("npartite:9", None).is_err());
        assert!(rep_by_name("graphs", None).is_err());
        assert_eq!(with_m0(rep_words(&["a"]), 1).m0(), 1);
    }
}
