//! Labeled ordered trees and the surgery operations used by the reductions.
//!
//! Nodes are numbered in preorder, so the subtree below `a` occupies the id
//! range `a .. a + subtree_size(a)`. Every operation builds a fresh tree and
//! reports where each new node came from.

mod alphabet;
mod editor;

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::sexpr::{self, Spanned, SyntaxError};
use crate::structure::{Elem, Structure, Vocabulary};

pub use alphabet::{parse_alphabet, ClosureOp, LabelFamily, LabelSet, TreeAlphabet, TreeViolation, ViolationKind};
pub use editor::TreeEditor;

pub type NodeId = usize;

/// Relation names used when a tree is read as a poset.
pub const ANCESTOR: &str = "<=";
pub const SIBLING: &str = "<<";

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(text: &str) -> Self {
        Label(Arc::from(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The pair label `a:b`.
    pub fn pair(a: &str, b: &str) -> Self {
        Label::new(&format!("{a}:{b}"))
    }

    pub fn split_pair(&self) -> Option<(&str, &str)> {
        self.0.split_once(':')
    }
}

impl From<&str> for Label {
    fn from(text: &str) -> Self {
        Label::new(text)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("no node {0}")]
    NoSuchNode(NodeId),
    #[error("{0} is not allowed at the root")]
    Root(&'static str),
    #[error("node {node} is labeled {label}, which is ranked")]
    RankedParent { node: NodeId, label: Label },
    #[error("node {node} would become a leaf but {label} is not a leaf label")]
    LeafLabel { node: NodeId, label: Label },
    #[error("merge needs equal root labels, got {left} and {right}")]
    LabelMismatch { left: Label, right: Label },
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("node {descendant} is not a proper descendant of {ancestor}")]
    NotDescendant { ancestor: NodeId, descendant: NodeId },
    #[error("child range {start}..{end} is out of bounds or empty at node {node}")]
    BadRange { node: NodeId, start: usize, end: usize },
    #[error("bad alphabet: {0}")]
    Alphabet(String),
    #[error("infeasible tree: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Infeasible(Vec<TreeViolation>),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Rooted ordered tree with labels, stored in preorder.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Tree {
    labels: Vec<Label>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    sizes: Vec<usize>,
}

/// Where a node of a surgery result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Source {
    /// Node of the tree the operation was applied to.
    Base(NodeId),
    /// Node of the tree that was grafted in.
    Graft(NodeId),
}

/// A new tree together with the provenance of each of its nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surgery {
    pub tree: Tree,
    pub origin: Vec<Source>,
}

impl Surgery {
    /// The base-tree node behind `n`, if it came from the base tree.
    pub fn base_node(&self, n: NodeId) -> Option<NodeId> {
        match self.origin[n] {
            Source::Base(b) => Some(b),
            Source::Graft(_) => None,
        }
    }
}

/// Preorder builder. Nodes must be pushed parent-first, depth-first.
#[derive(Default)]
pub(crate) struct Builder {
    labels: Vec<Label>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    origin: Vec<Source>,
}

impl Builder {
    pub(crate) fn push(&mut self, label: Label, parent: Option<NodeId>, origin: Source) -> NodeId {
        let id = self.labels.len();
        self.labels.push(label);
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.origin.push(origin);
        if let Some(p) = parent {
            self.children[p].push(id);
        }
        id
    }

    /// Copies `src`'s subtree at `node` below `parent`.
    pub(crate) fn copy(
        &mut self,
        src: &Tree,
        node: NodeId,
        parent: Option<NodeId>,
        tag: fn(NodeId) -> Source,
    ) -> NodeId {
        let id = self.push(src.labels[node].clone(), parent, tag(node));
        for &c in &src.children[node] {
            self.copy(src, c, Some(id), tag);
        }
        id
    }

    pub(crate) fn finish(self) -> Surgery {
        let n = self.labels.len();
        let mut sizes = vec![1; n];
        for v in (1..n).rev() {
            let p = self.parent[v].expect("non-root has a parent");
            sizes[p] += sizes[v];
        }
        Surgery {
            tree: Tree { labels: self.labels, parent: self.parent, children: self.children, sizes },
            origin: self.origin,
        }
    }
}

impl Tree {
    pub fn leaf(label: impl Into<Label>) -> Tree {
        Tree::node(label, [])
    }

    pub fn node(label: impl Into<Label>, children: impl IntoIterator<Item = Tree>) -> Tree {
        let mut b = Builder::default();
        let root = b.push(label.into(), None, Source::Base(0));
        for child in children {
            b.copy(&child, 0, Some(root), Source::Graft);
        }
        b.finish().tree
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn label(&self, n: NodeId) -> &Label {
        &self.labels[n]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.parent[n]
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.children[n]
    }

    pub fn is_leaf(&self, n: NodeId) -> bool {
        self.children[n].is_empty()
    }

    pub fn subtree_size(&self, n: NodeId) -> usize {
        self.sizes[n]
    }

    /// Ids of the subtree below `n`, including `n`.
    pub fn subtree_range(&self, n: NodeId) -> Range<NodeId> {
        n..n + self.sizes[n]
    }

    /// `a ≤ b` in the ancestor order (reflexive).
    pub fn is_ancestor(&self, a: NodeId, b: NodeId) -> bool {
        self.subtree_range(a).contains(&b)
    }

    pub fn depth(&self, mut n: NodeId) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent[n] {
            n = p;
            d += 1;
        }
        d
    }

    /// Maximum number of children of any node.
    pub fn degree(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Maximum root-to-leaf distance.
    pub fn height(&self) -> usize {
        let mut h = vec![0usize; self.size()];
        for v in (0..self.size()).rev() {
            h[v] = self.children[v].iter().map(|&c| h[c] + 1).max().unwrap_or(0);
        }
        h[0]
    }

    /// Greatest common ancestor under `≤`.
    pub fn lca(&self, a: NodeId, b: NodeId) -> NodeId {
        let mut x = a;
        while !self.is_ancestor(x, b) {
            x = self.parent[x].expect("root is an ancestor of every node");
        }
        x
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.size()).filter(|&n| self.is_leaf(n))
    }

    fn check(&self, n: NodeId) -> Result<(), TreeError> {
        if n < self.size() {
            Ok(())
        } else {
            Err(TreeError::NoSuchNode(n))
        }
    }

    fn check_non_root(&self, n: NodeId, op: &'static str) -> Result<(), TreeError> {
        self.check(n)?;
        if n == 0 {
            Err(TreeError::Root(op))
        } else {
            Ok(())
        }
    }

    /// The subtree `t_{≥a}`.
    pub fn subtree_at(&self, a: NodeId) -> Result<Surgery, TreeError> {
        self.check(a)?;
        let mut b = Builder::default();
        b.copy(self, a, None, Source::Base);
        Ok(b.finish())
    }

    /// The tree rooted at `a` keeping only the children in `range` (by position).
    pub fn restrict_children(&self, a: NodeId, range: Range<usize>) -> Result<Surgery, TreeError> {
        self.check(a)?;
        if range.end > self.children[a].len() || range.start > range.end {
            return Err(TreeError::BadRange { node: a, start: range.start, end: range.end });
        }
        let mut b = Builder::default();
        let root = b.push(self.labels[a].clone(), None, Source::Base(a));
        for &c in &self.children[a][range] {
            b.copy(self, c, Some(root), Source::Base);
        }
        Ok(b.finish())
    }

    /// `t − t_{≥b}`. With an alphabet, the parent must be unranked and keep a
    /// valid label if it becomes a leaf.
    pub fn remove_subtree(&self, b: NodeId, alphabet: Option<&TreeAlphabet>) -> Result<Surgery, TreeError> {
        self.check_non_root(b, "removal")?;
        let p = self.parent[b].unwrap();
        if let Some(alpha) = alphabet {
            let label = &self.labels[p];
            if alpha.is_ranked(label) {
                return Err(TreeError::RankedParent { node: p, label: label.clone() });
            }
            if self.children[p].len() == 1 && !alpha.leaf.contains(label) {
                return Err(TreeError::LeafLabel { node: p, label: label.clone() });
            }
        }
        Ok(self.rebuild(|n| if n == b { Graft::Skip } else { Graft::Keep }, None))
    }

    /// `t[t_{≥a} ↦ s]`: `s` takes `a`'s position among its siblings.
    pub fn replace(&self, a: NodeId, s: &Tree) -> Result<Surgery, TreeError> {
        self.check_non_root(a, "replacement")?;
        Ok(self.rebuild(|n| if n == a { Graft::Replace } else { Graft::Keep }, Some(s)))
    }

    /// `t[t_{≥a} ↦ t_{≥b}]` for a proper descendant `b` of `a`; all nodes keep
    /// base provenance.
    pub fn replace_with_descendant(&self, a: NodeId, b: NodeId) -> Result<Surgery, TreeError> {
        self.check_non_root(a, "replacement")?;
        self.check(b)?;
        if a == b || !self.is_ancestor(a, b) {
            return Err(TreeError::NotDescendant { ancestor: a, descendant: b });
        }
        let mut out = Builder::default();
        self.copy_redirect(&mut out, 0, None, a, b);
        Ok(out.finish())
    }

    fn copy_redirect(&self, out: &mut Builder, node: NodeId, parent: Option<NodeId>, a: NodeId, b: NodeId) {
        let node = if node == a { b } else { node };
        let id = out.push(self.labels[node].clone(), parent, Source::Base(node));
        for &c in &self.children[node] {
            self.copy_redirect(out, c, Some(id), a, b);
        }
    }

    /// `t ⊙ s`: `s`'s root children are appended after `t`'s root children.
    pub fn merge(&self, s: &Tree) -> Result<Surgery, TreeError> {
        if self.labels[0] != s.labels[0] {
            return Err(TreeError::LabelMismatch { left: self.labels[0].clone(), right: s.labels[0].clone() });
        }
        let mut b = Builder::default();
        let root = b.copy(self, 0, None, Source::Base);
        for &c in &s.children[0] {
            b.copy(s, c, Some(root), Source::Graft);
        }
        Ok(b.finish())
    }

    /// Inserts `s` as the next sibling of `a`.
    pub fn join_right(&self, a: NodeId, s: &Tree) -> Result<Surgery, TreeError> {
        self.check_non_root(a, "join to the right")?;
        Ok(self.rebuild(|n| if n == a { Graft::After } else { Graft::Keep }, Some(s)))
    }

    /// Inserts `s` as the previous sibling of `a`.
    pub fn join_left(&self, a: NodeId, s: &Tree) -> Result<Surgery, TreeError> {
        self.check_non_root(a, "join to the left")?;
        Ok(self.rebuild(|n| if n == a { Graft::Before } else { Graft::Keep }, Some(s)))
    }

    /// Attaches `s` as the only child of the leaf `a`.
    pub fn join_below(&self, a: NodeId, s: &Tree) -> Result<Surgery, TreeError> {
        self.check(a)?;
        if !self.is_leaf(a) {
            return Err(TreeError::NotALeaf(a));
        }
        Ok(self.rebuild(|n| if n == a { Graft::Below } else { Graft::Keep }, Some(s)))
    }

    fn rebuild(&self, action: impl Fn(NodeId) -> Graft, graft: Option<&Tree>) -> Surgery {
        let mut out = Builder::default();
        self.rebuild_at(&mut out, 0, None, &action, graft);
        out.finish()
    }

    fn rebuild_at(
        &self,
        out: &mut Builder,
        node: NodeId,
        parent: Option<NodeId>,
        action: &impl Fn(NodeId) -> Graft,
        graft: Option<&Tree>,
    ) {
        let graft_here = |out: &mut Builder, parent| {
            out.copy(graft.expect("graft tree supplied"), 0, parent, Source::Graft);
        };
        match action(node) {
            Graft::Skip => return,
            Graft::Replace => return graft_here(out, parent),
            Graft::Before => graft_here(out, parent),
            _ => {}
        }
        let id = out.push(self.labels[node].clone(), parent, Source::Base(node));
        for &c in &self.children[node] {
            self.rebuild_at(out, c, Some(id), action, graft);
        }
        match action(node) {
            Graft::After => graft_here(out, parent),
            Graft::Below => graft_here(out, Some(id)),
            _ => {}
        }
    }

    /// Reads the tree as a poset: reflexive ancestor order `<=`, in ordered
    /// mode the left-of order `<<` between incomparable nodes (on siblings it
    /// is the child order), and `P_σ` for each listed label.
    /// Element `i` is node `i`.
    pub fn as_structure(&self, ordered: bool, labels: &[Label]) -> Structure {
        self.as_structure_in(ordered, labels, &Arc::new(tree_vocabulary(ordered, labels)))
    }

    /// As [`Tree::as_structure`], reusing a vocabulary built by [`tree_vocabulary`].
    pub fn as_structure_in(&self, ordered: bool, labels: &[Label], vocab: &Arc<Vocabulary>) -> Structure {
        let mut tables: Vec<(String, Vec<Vec<Elem>>)> = Vec::new();
        let mut le = Vec::new();
        for a in 0..self.size() {
            for b in self.subtree_range(a) {
                le.push(vec![a as Elem, b as Elem]);
            }
        }
        tables.push((ANCESTOR.into(), le));
        if ordered {
            let n = self.size();
            let sib: Vec<Vec<Elem>> =
                (0..n).flat_map(|x| (x + self.sizes[x]..n).map(move |y| vec![x as Elem, y as Elem])).collect();
            tables.push((SIBLING.into(), sib));
        }
        for l in labels {
            let members = (0..self.size()).filter(|&n| &self.labels[n] == l).map(|n| vec![n as Elem]).collect();
            tables.push((label_predicate(l), members));
        }
        Structure::new(vocab.clone(), 0..self.size() as Elem, tables).expect("tree images are well formed")
    }

    /// Distinct labels in sorted order.
    pub fn label_set(&self) -> Vec<Label> {
        let mut out = self.labels.clone();
        out.sort();
        out.dedup();
        out
    }

    pub fn format(&self) -> String {
        self.to_string()
    }
}

enum Graft {
    Keep,
    Skip,
    Replace,
    Before,
    After,
    Below,
}

pub fn label_predicate(label: &Label) -> String {
    format!("P_{label}")
}

pub fn tree_vocabulary(ordered: bool, labels: &[Label]) -> Vocabulary {
    let mut rels = vec![(ANCESTOR.to_string(), 2)];
    if ordered {
        rels.push((SIBLING.to_string(), 2));
    }
    rels.extend(labels.iter().map(|l| (label_predicate(l), 1)));
    Vocabulary::new(rels).expect("labels are distinct")
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(t: &Tree, n: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if t.is_leaf(n) {
                f.write_str("(leaf ")?;
                sexpr::write_atom(f, t.labels[n].as_str())?;
                return f.write_str(")");
            }
            f.write_str("(node ")?;
            sexpr::write_atom(f, t.labels[n].as_str())?;
            for &c in &t.children[n] {
                f.write_str(" ")?;
                go(t, c, f)?;
            }
            f.write_str(")")
        }
        go(self, 0, f)
    }
}

impl fmt::Debug for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Parses `(node LABEL child ...)` / `(leaf LABEL)`.
pub fn parse_tree(text: &str) -> Result<Tree, TreeError> {
    Ok(tree_from_sexpr(&sexpr::parse(text)?)?)
}

pub(crate) fn tree_from_sexpr(node: &Spanned) -> Result<Tree, SyntaxError> {
    let mut b = Builder::default();
    read_node(node, &mut b, None)?;
    Ok(b.finish().tree)
}

fn read_node(node: &Spanned, b: &mut Builder, parent: Option<NodeId>) -> Result<(), SyntaxError> {
    let (head, rest) = node.expect_form("(node ...) or (leaf ...)")?;
    let label = rest.first().ok_or_else(|| node.error("missing label"))?.expect_atom("label")?;
    match head {
        "leaf" if rest.len() == 1 => {
            b.push(Label::new(label), parent, Source::Base(0));
            Ok(())
        }
        "leaf" => Err(node.error("a leaf has no children")),
        "node" => {
            let id = b.push(Label::new(label), parent, Source::Base(0));
            for child in &rest[1..] {
                read_node(child, b, Some(id))?;
            }
            Ok(())
        }
        other => Err(node.error(format!("expected node or leaf, found {other}"))),
    }
}
