use rustc_hash::FxHashMap;
use serde::Serialize;

use super::KernelError;
use crate::equivalence::{ClassId, ClassRegistry};
use crate::logic::Logic;
use crate::representations::Rep;
use crate::trees::{Label, Tree};

/// What determines a class under composition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum TableKey {
    Leaf(Label),
    /// A node with exactly these child classes: a ranked node, or the first
    /// block of an unranked one.
    Compose(Label, Vec<ClassId>),
    /// An unranked prefix of the given class extended by one block.
    Step(Label, ClassId, Vec<ClassId>),
}

/// Learned composition functions for one representation, logic and rank,
/// with the smallest known tree of every class.
#[derive(Debug, Clone)]
pub struct CompositionTable {
    logic: Logic,
    rank: usize,
    entries: FxHashMap<TableKey, (ClassId, Tree)>,
    smallest: FxHashMap<ClassId, Tree>,
    prefixes: FxHashMap<(ClassId, Label), Tree>,
    pub hits: u64,
    pub misses: u64,
}

impl CompositionTable {
    pub fn new(logic: Logic, rank: usize) -> Self {
        CompositionTable {
            logic,
            rank,
            entries: FxHashMap::default(),
            smallest: FxHashMap::default(),
            prefixes: FxHashMap::default(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn logic(&self) -> Logic {
        self.logic
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &TableKey) -> Option<ClassId> {
        self.entries.get(key).map(|(c, _)| *c)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&TableKey, ClassId)> {
        self.entries.iter().map(|(k, (c, _))| (k, *c))
    }

    /// Smallest known tree of class `c`.
    pub fn representative(&self, c: ClassId) -> Option<&Tree> {
        self.smallest.get(&c)
    }

    /// Smallest known `label`-rooted prefix tree (at least one child) of class `c`.
    pub fn prefix_representative(&self, c: ClassId, label: &Label) -> Option<&Tree> {
        self.prefixes.get(&(c, label.clone()))
    }

    /// Records `tree` as a tree of class `class`; `prefix` marks trees that
    /// may be extended by further children.
    pub fn witness(&mut self, class: ClassId, tree: &Tree, prefix: bool) {
        keep_smaller(self.smallest.entry(class).or_insert_with(|| tree.clone()), tree);
        if prefix && !tree.is_leaf(0) {
            let slot = self.prefixes.entry((class, tree.label(0).clone())).or_insert_with(|| tree.clone());
            keep_smaller(slot, tree);
        }
    }

    /// Inserts an entry, failing if the key already maps to another class.
    pub fn insert(&mut self, key: TableKey, class: ClassId, tree: &Tree) -> Result<(), KernelError> {
        let prefix = !matches!(key, TableKey::Leaf(_));
        match self.entries.get(&key) {
            Some((old, first)) if *old != class => {
                return Err(KernelError::Conflict {
                    key: Box::new(key),
                    first: Box::new(first.clone()),
                    second: Box::new(tree.clone()),
                })
            }
            Some(_) => {}
            None => {
                self.entries.insert(key, (class, tree.clone()));
            }
        }
        self.witness(class, tree, prefix);
        Ok(())
    }
}

fn keep_smaller(slot: &mut Tree, candidate: &Tree) {
    if candidate.size() < slot.size() {
        *slot = candidate.clone();
    }
}

/// Observes every node and unranked prefix of every corpus tree, computing
/// each class directly, and checks that the class is a function of the key.
pub fn learn_composition(
    corpus: &[Tree],
    rep: &Rep,
    m: usize,
    logic: Logic,
    registry: &mut ClassRegistry,
) -> Result<CompositionTable, KernelError> {
    let mut table = CompositionTable::new(logic, m);
    let alphabet = rep.alphabet();
    for t in corpus {
        let mut direct =
            |tree: &Tree| -> Result<ClassId, KernelError> { Ok(registry.class_of(&rep.str_image(tree), m, logic)?) };
        let mut class = vec![ClassId(0); t.size()];
        for node in (0..t.size()).rev() {
            let sub = t.subtree_at(node)?.tree;
            class[node] = direct(&sub)?;
            let label = t.label(node).clone();
            let kids: Vec<ClassId> = t.children(node).iter().map(|&c| class[c]).collect();
            if kids.is_empty() {
                table.insert(TableKey::Leaf(label), class[node], &sub)?;
            } else if alphabet.is_ranked(&label) {
                table.insert(TableKey::Compose(label, kids), class[node], &sub)?;
            } else {
                let d = super::block_width(alphabet, &label);
                let marks = super::prefix_marks(kids.len(), d);
                let mut previous: Option<(usize, ClassId)> = None;
                for &k in &marks {
                    let prefix = if k == kids.len() { sub.clone() } else { sub.restrict_children(0, 0..k)?.tree };
                    let chi = if k == kids.len() { class[node] } else { direct(&prefix)? };
                    let key = match previous {
                        None => TableKey::Compose(label.clone(), kids[..k].to_vec()),
                        Some((j, prev)) => TableKey::Step(label.clone(), prev, kids[j..k].to_vec()),
                    };
                    table.insert(key, chi, &prefix)?;
                    previous = Some((k, chi));
                }
            }
        }
    }
    Ok(table)
}
