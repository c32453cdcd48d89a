//! Kernels of tree representations: every node coloured by the class of its
//! subtree, unranked children cut between equal prefix classes, then subtrees
//! replaced by their lowest descendants of the same colour.

mod table;
mod witness;

use std::collections::BTreeSet;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

pub use table::{learn_composition, CompositionTable, TableKey};
pub use witness::{
    ebsp_witness, evaluate_fpt, lift_elements, paths_witness, unary_color_cap, EbspWitness, FptAnswer, PathsWitness,
};

use crate::equivalence::{ClassId, ClassRegistry, EquivError};
use crate::logic::{Logic, LogicError};
use crate::representations::{Rep, ReprError};
use crate::structure::StructureError;
use crate::trees::{Label, NodeId, Tree, TreeAlphabet, TreeEditor, TreeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("composition conflict on {key:?}: {first} and {second} share the key but not the class")]
    Conflict { key: Box<TableKey>, first: Box<Tree>, second: Box<Tree> },
    #[error("{0}")]
    Invalid(String),
    #[error("no representative known for {0:?}")]
    MissingRepresentative(ClassId),
    #[error("class of node {node}: {source}")]
    AtNode { node: NodeId, source: EquivError },
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// How node colours are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ColourMode {
    /// Bottom-up through the composition table; a miss is resolved on a
    /// small tree built from representatives.
    Synthesized,
    /// Every subtree and prefix image is classified on its own.
    Direct,
}

/// `max(ρ, 2)`: children per block of an unranked node.
pub(crate) fn block_width(alphabet: &TreeAlphabet, label: &Label) -> usize {
    alphabet.rho(label).max(2)
}

/// Child counts at which an unranked node with `n` children is split into
/// prefixes: `r, r + (d−1), …, n` with `r = ((n−1) mod (d−1)) + 1`.
pub(crate) fn prefix_marks(n: usize, d: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let step = d - 1;
    let first = (n - 1) % step + 1;
    (first..=n).step_by(step).collect()
}

/// Node colours of one tree, plus the classes of the marked prefixes of each
/// unranked node as `(child count, class)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colouring {
    pub colour: Vec<ClassId>,
    pub prefixes: Vec<Vec<(usize, ClassId)>>,
}

impl Colouring {
    /// Distinct classes among node colours and prefix classes.
    pub fn class_count(&self) -> usize {
        let mut all: BTreeSet<ClassId> = self.colour.iter().copied().collect();
        all.extend(self.prefixes.iter().flatten().map(|&(_, c)| c));
        all.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub size: usize,
    pub degree: usize,
    pub height: usize,
}

impl Shape {
    pub fn of(t: &Tree) -> Self {
        Shape { size: t.size(), degree: t.degree(), height: t.height() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KernelReport {
    pub representation: String,
    pub logic: Logic,
    pub rank: usize,
    /// `max(rank, m0)`, the rank the colours are taken at.
    pub working_rank: usize,
    pub mode: ColourMode,
    /// Distinct classes of subtrees and prefixes of the input.
    pub classes: usize,
    pub degree_bound: usize,
    pub height_bound: usize,
    pub size_bound: u64,
    pub input: Shape,
    pub after_degree: Shape,
    pub kernel: Shape,
    pub degree_cuts: usize,
    pub height_replacements: usize,
    pub visits: u64,
    pub table_hits: u64,
    pub table_misses: u64,
    pub table_size: usize,
}

impl KernelReport {
    pub fn within_bounds(&self) -> bool {
        self.after_degree.degree <= self.degree_bound
            && self.kernel.degree <= self.degree_bound
            && self.kernel.height <= self.height_bound
            && (self.kernel.size as u64) <= self.size_bound
    }
}

/// A kernel with, per node, the input node it was copied from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    pub tree: Tree,
    pub origin: Vec<NodeId>,
    pub report: KernelReport,
}

/// Kernelization state for one representation, logic and rank. The
/// composition table persists across trees.
pub struct Kernelizer {
    rep: Rep,
    logic: Logic,
    rank: usize,
    working_rank: usize,
    mode: ColourMode,
    registry: ClassRegistry,
    table: CompositionTable,
    visits: u64,
}

impl Kernelizer {
    pub fn new(rep: Rep, m: usize, logic: Logic) -> Self {
        let working_rank = m.max(rep.m0());
        Kernelizer {
            rep,
            logic,
            rank: m,
            working_rank,
            mode: ColourMode::Synthesized,
            registry: ClassRegistry::new(),
            table: CompositionTable::new(logic, working_rank),
            visits: 0,
        }
    }

    pub fn with_mode(mut self, mode: ColourMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_registry(mut self, registry: ClassRegistry) -> Self {
        self.registry = registry;
        self
    }

    pub fn rep(&self) -> &Rep {
        &self.rep
    }

    pub fn logic(&self) -> Logic {
        self.logic
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn working_rank(&self) -> usize {
        self.working_rank
    }

    pub fn table(&self) -> &CompositionTable {
        &self.table
    }

    pub fn registry_mut(&mut self) -> &mut ClassRegistry {
        &mut self.registry
    }

    fn direct(&mut self, t: &Tree, node: NodeId) -> Result<ClassId, KernelError> {
        self.visits += 1;
        let image = self.rep.str_image(t);
        self.registry
            .class_of(&image, self.working_rank, self.logic)
            .map_err(|source| KernelError::AtNode { node, source })
    }

    fn representative(&self, c: ClassId) -> Result<Tree, KernelError> {
        self.table.representative(c).cloned().ok_or(KernelError::MissingRepresentative(c))
    }

    /// Looks `key` up, or classifies `build()` and records it.
    fn lookup(
        &mut self,
        key: TableKey,
        node: NodeId,
        build: impl FnOnce(&Self) -> Result<Tree, KernelError>,
    ) -> Result<ClassId, KernelError> {
        if let Some(c) = self.table.get(&key) {
            self.table.hits += 1;
            return Ok(c);
        }
        self.table.misses += 1;
        let sample = build(self)?;
        let c = self.direct(&sample, node)?;
        self.table.insert(key, c, &sample)?;
        Ok(c)
    }

    /// Colours every node of a feasible tree.
    pub fn colour(&mut self, t: &Tree) -> Result<Colouring, KernelError> {
        self.rep.validate(t)?;
        let n = t.size();
        let mut colour = vec![ClassId(0); n];
        let mut prefixes = vec![Vec::new(); n];
        for node in (0..n).rev() {
            let (c, chain) = match self.mode {
                ColourMode::Synthesized => self.colour_synthesized(t, node, &colour)?,
                ColourMode::Direct => self.colour_direct(t, node)?,
            };
            colour[node] = c;
            prefixes[node] = chain;
        }
        Ok(Colouring { colour, prefixes })
    }

    fn colour_synthesized(
        &mut self,
        t: &Tree,
        node: NodeId,
        colour: &[ClassId],
    ) -> Result<(ClassId, Vec<(usize, ClassId)>), KernelError> {
        self.visits += 1;
        let label = t.label(node).clone();
        let kids: Vec<ClassId> = t.children(node).iter().map(|&c| colour[c]).collect();
        if kids.is_empty() {
            let c = self.lookup(TableKey::Leaf(label.clone()), node, |_| Ok(Tree::leaf(label)))?;
            return Ok((c, Vec::new()));
        }
        let fresh = |k: &Self, base: Option<Tree>, block: &[ClassId]| -> Result<Tree, KernelError> {
            let mut parts = Vec::with_capacity(block.len());
            for &c in block {
                parts.push(k.representative(c)?);
            }
            Ok(match base {
                None => Tree::node(label.clone(), parts),
                Some(prefix) => {
                    let mut children: Vec<Tree> = prefix
                        .children(0)
                        .iter()
                        .map(|&c| prefix.subtree_at(c).map(|s| s.tree))
                        .collect::<Result<_, _>>()?;
                    children.extend(parts);
                    Tree::node(label.clone(), children)
                }
            })
        };
        if self.rep.alphabet().is_ranked(&label) {
            let c = self.lookup(TableKey::Compose(label.clone(), kids.clone()), node, |k| fresh(k, None, &kids))?;
            return Ok((c, Vec::new()));
        }
        let d = block_width(self.rep.alphabet(), &label);
        let mut chain = Vec::new();
        let mut previous: Option<(usize, ClassId)> = None;
        for k in prefix_marks(kids.len(), d) {
            let c = match previous {
                None => self.lookup(TableKey::Compose(label.clone(), kids[..k].to_vec()), node, |me| {
                    fresh(me, None, &kids[..k])
                })?,
                Some((j, prev)) => {
                    let key = TableKey::Step(label.clone(), prev, kids[j..k].to_vec());
                    self.lookup(key, node, |me| {
                        let base = me
                            .table
                            .prefix_representative(prev, &label)
                            .cloned()
                            .ok_or(KernelError::MissingRepresentative(prev))?;
                        fresh(me, Some(base), &kids[j..k])
                    })?
                }
            };
            chain.push((k, c));
            previous = Some((k, c));
        }
        Ok((chain.last().expect("at least one child").1, chain))
    }

    fn colour_direct(&mut self, t: &Tree, node: NodeId) -> Result<(ClassId, Vec<(usize, ClassId)>), KernelError> {
        let sub = t.subtree_at(node)?.tree;
        let c = self.direct(&sub, node)?;
        let label = t.label(node);
        let n = t.children(node).len();
        if n == 0 || self.rep.alphabet().is_ranked(label) {
            return Ok((c, Vec::new()));
        }
        let mut chain = Vec::new();
        for k in prefix_marks(n, block_width(self.rep.alphabet(), label)) {
            let pc = if k == n { c } else { self.direct(&t.restrict_children(node, 0..k)?.tree, node)? };
            chain.push((k, pc));
        }
        Ok((c, chain))
    }

    /// Cuts the children of each unranked node between two marked prefixes of
    /// the same class. Returns the result and the number of cuts.
    pub fn reduce_degree(
        &mut self,
        t: &Tree,
        colouring: &Colouring,
    ) -> Result<(crate::trees::Surgery, usize), KernelError> {
        let alphabet = self.rep.alphabet().clone();
        let mut editor = TreeEditor::new(t, &alphabet);
        let mut cuts = 0;
        let mut stack = vec![t.root()];
        while let Some(node) = stack.pop() {
            self.visits += 1;
            let mut chain = colouring.prefixes[node].clone();
            let classes: BTreeSet<ClassId> = chain.iter().map(|&(_, c)| c).collect();
            for class in classes {
                let Some(p) = chain.iter().position(|&(_, c)| c == class) else { continue };
                let q = chain.iter().rposition(|&(_, c)| c == class).expect("present");
                if p == q {
                    continue;
                }
                let (kp, kq) = (chain[p].0, chain[q].0);
                editor.remove_children(node, kp, kq)?;
                cuts += 1;
                chain.drain(p + 1..=q);
                for entry in &mut chain[p + 1..] {
                    entry.0 -= kq - kp;
                }
            }
            stack.extend(editor.children(node).iter().rev());
        }
        Ok((editor.finish(), cuts))
    }

    /// Replaces every non-root node, top-down, by its lowest descendant of the
    /// same colour. Returns the result and the number of replacements.
    pub fn reduce_height(
        &mut self,
        t: &Tree,
        colour: &[ClassId],
    ) -> Result<(crate::trees::Surgery, usize), KernelError> {
        let n = t.size();
        let mut lowest: Vec<FxHashMap<ClassId, NodeId>> = vec![FxHashMap::default(); n];
        let mut target = vec![0; n];
        for node in (0..n).rev() {
            self.visits += 1;
            let mut kids = t.children(node).iter();
            let mut map = kids.next().map(|&c| std::mem::take(&mut lowest[c])).unwrap_or_default();
            for &c in kids {
                for (k, v) in std::mem::take(&mut lowest[c]) {
                    map.entry(k).or_insert(v);
                }
            }
            target[node] = *map.entry(colour[node]).or_insert(node);
            lowest[node] = map;
        }
        let alphabet = self.rep.alphabet().clone();
        let mut editor = TreeEditor::new(t, &alphabet);
        let mut replacements = 0;
        let mut stack: Vec<NodeId> = t.children(t.root()).iter().rev().copied().collect();
        while let Some(a) = stack.pop() {
            self.visits += 1;
            let b = target[a];
            if b != a {
                editor.replace_with_descendant(a, b)?;
                replacements += 1;
            }
            stack.extend(editor.children(b).iter().rev());
        }
        Ok((editor.finish(), replacements))
    }

    /// Degree reduction followed by height reduction.
    pub fn kernelize(&mut self, t: &Tree) -> Result<Kernel, KernelError> {
        let visits_before = self.visits;
        let (hits, misses) = (self.table.hits, self.table.misses);
        let colouring = self.colour(t)?;
        let classes = colouring.class_count();
        let (first, degree_cuts) = self.reduce_degree(t, &colouring)?;
        let base_of = |s: &crate::trees::Surgery, n: NodeId| s.base_node(n).expect("edits keep base nodes");
        let first_origin: Vec<NodeId> = (0..first.tree.size()).map(|n| base_of(&first, n)).collect();
        let first_colour: Vec<ClassId> = first_origin.iter().map(|&o| colouring.colour[o]).collect();
        let (second, height_replacements) = self.reduce_height(&first.tree, &first_colour)?;
        let origin = (0..second.tree.size()).map(|n| first_origin[base_of(&second, n)]).collect();
        let alphabet = self.rep.alphabet();
        let max_rho = alphabet.max_rho().max(1);
        let degree_bound = max_rho.saturating_mul(classes);
        let height_bound = classes + 1;
        let size_bound =
            (degree_bound.max(2) as u64).saturating_pow(u32::try_from(height_bound + 1).unwrap_or(u32::MAX));
        let report = KernelReport {
            representation: self.rep.name().to_string(),
            logic: self.logic,
            rank: self.rank,
            working_rank: self.working_rank,
            mode: self.mode,
            classes,
            degree_bound,
            height_bound,
            size_bound,
            input: Shape::of(t),
            after_degree: Shape::of(&first.tree),
            kernel: Shape::of(&second.tree),
            degree_cuts,
            height_replacements,
            visits: self.visits - visits_before,
            table_hits: self.table.hits - hits,
            table_misses: self.table.misses - misses,
            table_size: self.table.len(),
        };
        Ok(Kernel { tree: second.tree, origin, report })
    }
}

/// Kernel of `t` for rank `m` in the given logic.
pub fn kernelize(t: &Tree, rep: &Rep, m: usize, logic: Logic) -> Result<Kernel, KernelError> {
    Kernelizer::new(rep.clone(), m, logic).kernelize(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equivalence::equivalent;
    use crate::representations::rep_by_name;
    use crate::structure::is_embedding;
    use crate::trees::parse_tree;

    fn star(n: usize) -> Tree {
        Tree::node(CONCAT, (0..n).map(|_| Tree::leaf("a")))
    }

    use crate::representations::CONCAT;

    #[test]
    fn marks_split_into_blocks() {
        assert_eq!(prefix_marks(5, 2), vec![1, 2, 3, 4, 5]);
        assert_eq!(prefix_marks(6, 3), vec![2, 4, 6]);
        assert_eq!(prefix_marks(7, 3), vec![1, 3, 5, 7]);
        assert_eq!(prefix_marks(1, 4), vec![1]);
        assert!(prefix_marks(0, 3).is_empty());
    }

    #[test]
    fn star_of_equal_letters() {
        let rep = rep_by_name("words", None).unwrap();
        let t = star(10);
        let kernel = kernelize(&t, &rep, 2, Logic::Fo).unwrap();
        assert!(kernel.tree.size() < t.size());
        assert!(kernel.tree.children(0).len() <= kernel.report.classes);
        assert!(kernel.report.within_bounds());
        let mut reg = ClassRegistry::new();
        assert!(equivalent(&mut reg, &rep.str_image(&t), &rep.str_image(&kernel.tree), 2, Logic::Fo).unwrap());
    }

    #[test]
    fn unary_chain_collapses() {
        let rep = rep_by_name("words", None).unwrap();
        let mut t = Tree::leaf("a");
        for _ in 0..8 {
            t = Tree::node(CONCAT, [t]);
        }
        let kernel = kernelize(&t, &rep, 1, Logic::Fo).unwrap();
        assert!(kernel.tree.height() <= kernel.report.height_bound);
        assert!(kernel.tree.height() < t.height());
        assert_eq!(kernel.origin[0], 0);
    }

    #[test]
    fn synthesized_colours_match_direct_ones() {
        let rep = rep_by_name("ranked-trees", None).unwrap();
        let t = parse_tree("(node ∘ (node f (leaf a) (leaf b)) (leaf a) (node ∘ (leaf b) (leaf b) (leaf a)) (leaf a))")
            .unwrap();
        let mut synth = Kernelizer::new(rep.clone(), 1, Logic::Fo);
        let mut direct = Kernelizer::new(rep, 1, Logic::Fo).with_mode(ColourMode::Direct);
        let (a, b) = (synth.colour(&t).unwrap(), direct.colour(&t).unwrap());
        let flat = |c: &Colouring| -> Vec<ClassId> {
            c.colour.iter().copied().chain(c.prefixes.iter().flatten().map(|&(_, x)| x)).collect()
        };
        let (fa, fb) = (flat(&a), flat(&b));
        assert_eq!(fa.len(), fb.len());
        let mut forward = FxHashMap::default();
        let mut backward = FxHashMap::default();
        for (x, y) in fa.into_iter().zip(fb) {
            assert_eq!(*forward.entry(x).or_insert(y), y);
            assert_eq!(*backward.entry(y).or_insert(x), x);
        }
    }

    #[test]
    fn kernel_is_a_sound_fixpoint() {
        let rep = rep_by_name("ranked-trees", None).unwrap();
        let t = parse_tree(
            "(node ∘ (leaf a) (leaf a) (node ∘ (leaf a) (leaf a) (leaf a) (leaf a)) (leaf a) (leaf b) (leaf a) (leaf a))",
        )
        .unwrap();
        let mut k = Kernelizer::new(rep.clone(), 1, Logic::Fo);
        let kernel = k.kernelize(&t).unwrap();
        let (big, small) = (rep.str_traced(&t), rep.str_traced(&kernel.tree));
        let index = big.index();
        let embeds = is_embedding(&small.structure, &big.structure, |e| {
            let lifted: Vec<_> = small.trace[e as usize].iter().map(|&(n, s)| (kernel.origin[n], s)).collect();
            index.get(&lifted).copied()
        });
        assert!(embeds);
        let mut reg = ClassRegistry::new();
        let m1 = k.working_rank();
        assert!(equivalent(&mut reg, &big.structure, &small.structure, m1, Logic::Fo).unwrap());
        let again = k.kernelize(&kernel.tree).unwrap();
        assert_eq!(again.tree, kernel.tree);
        let inherited: Vec<ClassId> = {
            let c = k.colour(&t).unwrap();
            kernel.origin.iter().map(|&o| c.colour[o]).collect()
        };
        assert_eq!(k.colour(&kernel.tree).unwrap().colour, inherited);
    }

    #[test]
    fn learned_table_is_functional() {
        let rep = rep_by_name("ranked-trees", None).unwrap();
        let corpus: Vec<Tree> =
            ["(node ∘ (leaf a) (leaf b))", "(node ∘ (leaf b) (leaf a) (leaf a))", "(node f (leaf a) (leaf a))"]
                .iter()
                .map(|s| parse_tree(s).unwrap())
                .collect();
        let mut reg = ClassRegistry::new();
        let table = learn_composition(&corpus, &rep, 2, Logic::Fo, &mut reg).unwrap();
        assert!(!table.is_empty());
        assert!(learn_composition(&[], &rep, 2, Logic::Fo, &mut reg).unwrap().is_empty());
    }
}
