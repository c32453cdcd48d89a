//! Rank-m FO/MSO equivalence via hash-consed type codes.
//!
//! The depth-0 code of a pointed structure is its atomic type: every atomic
//! fact over the distinguished points (relation tuples, equalities, set
//! memberships). The depth-(k+1) code is the set of depth-k codes of all
//! one-point extensions, paired for MSO with the set of depth-k codes of all
//! one-set extensions. Two structures agree on all rank-m sentences exactly
//! when their depth-m codes coincide.
//!
//! Atomic types are built incrementally: each move appends the facts that
//! mention the new point or set to the code of the position it extends, so a
//! code is a chain of deltas rooted at the empty position.

mod game;

use std::collections::BTreeMap;
use std::sync::Arc;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::logic::Logic;
use crate::structure::{Dense, PointedStructure, Structure, Vocabulary};

pub use game::{ef_game_decide, GameBudget};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("{logic} rank-{m} type of a {size}-element structure exceeds the budget ({reason})")]
    BudgetExceeded { logic: Logic, m: usize, size: usize, reason: String },
    #[error("structures have different vocabularies")]
    VocabularyMismatch,
    #[error("distinguished sets need a universe of at most 64 elements")]
    SetsTooLarge,
}

/// Limits on type computations. Exceeding any of them is an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub fo_max_universe: usize,
    pub mso_max_universe: usize,
    /// Upper bound on the estimated number of positions visited.
    pub max_work: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { fo_max_universe: 4096, mso_max_universe: 24, max_work: 60_000_000 }
    }
}

/// Canonical identifier of a rank-m equivalence class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClassId(pub u32);

/// Identifier of a hash-consed type code node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum TypeNode {
    /// Atomic type extending `parent` by one move; `set_move` tells which kind.
    Atomic {
        parent: Option<TypeId>,
        set_move: bool,
        delta: Box<[u64]>,
    },
    Fo(Box<[TypeId]>),
    Mso(Box<[TypeId]>, Box<[TypeId]>),
}

#[derive(Debug, Default)]
struct Arena {
    nodes: Vec<TypeNode>,
    index: FxHashMap<TypeNode, TypeId>,
}

impl Arena {
    fn intern(&mut self, node: TypeNode) -> TypeId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = TypeId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct ClassKey {
    logic: Logic,
    m: usize,
    vocab: u32,
    code: TypeId,
}

/// Per-(logic, m) count of classes issued so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassCount {
    pub logic: Logic,
    pub m: usize,
    pub classes: usize,
}

/// Memo from type codes to dense class ids.
#[derive(Debug, Default)]
pub struct ClassRegistry {
    arena: Arena,
    vocabs: Vec<Arc<Vocabulary>>,
    classes: FxHashMap<ClassKey, ClassId>,
    keys: Vec<ClassKey>,
    budget: Budget,
}

/// A position during type computation: distinguished points (as dense
/// indices) and sets (as bitmasks over dense indices).
struct Position<'a> {
    dense: &'a Dense,
    points: Vec<u32>,
    sets: Vec<u64>,
}

impl Position<'_> {
    fn point_delta(&self, e: u32, out: &mut BitBuf) {
        out.clear();
        let k = self.points.len();
        for &p in &self.points {
            out.push(p == e);
        }
        let mut tuple: Vec<u32> = Vec::new();
        let all: Vec<u32> = self.points.iter().copied().chain(std::iter::once(e)).collect();
        for r in 0..self.dense.rels.len() {
            let arity = self.dense.arity(r);
            let total = (k + 1).pow(arity as u32);
            for code in 0..total {
                let mut c = code;
                let mut mentions_new = false;
                tuple.clear();
                for _ in 0..arity {
                    let i = c % (k + 1);
                    c /= k + 1;
                    mentions_new |= i == k;
                    tuple.push(all[i]);
                }
                if mentions_new {
                    out.push(self.dense.holds(r, &tuple));
                }
            }
        }
        for &s in &self.sets {
            out.push(s >> e & 1 == 1);
        }
    }

    fn set_delta(&self, mask: u64, out: &mut BitBuf) {
        out.clear();
        for &p in &self.points {
            out.push(mask >> p & 1 == 1);
        }
    }
}

#[derive(Default)]
struct BitBuf {
    words: Vec<u64>,
    len: usize,
}

impl BitBuf {
    fn clear(&mut self) {
        self.words.clear();
        self.len = 0;
    }

    fn push(&mut self, bit: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            *self.words.last_mut().unwrap() |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    fn boxed(&self) -> Box<[u64]> {
        // Length is implied by the shape of the position, so words suffice.
        self.words.clone().into_boxed_slice()
    }
}

impl ClassRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_budget(budget: Budget) -> Self {
        ClassRegistry { budget, ..Self::default() }
    }

    pub fn budget(&self) -> Budget {
        self.budget
    }

    pub fn set_budget(&mut self, budget: Budget) {
        self.budget = budget;
    }

    fn vocab_id(&mut self, vocab: &Arc<Vocabulary>) -> u32 {
        if let Some(i) = self.vocabs.iter().position(|v| Arc::ptr_eq(v, vocab) || **v == **vocab) {
            return i as u32;
        }
        self.vocabs.push(vocab.clone());
        (self.vocabs.len() - 1) as u32
    }

    /// Checks the budget for a rank-m type of `a` without computing it.
    pub fn check_budget(&self, a: &PointedStructure, m: usize, logic: Logic) -> Result<(), EquivError> {
        let n = a.base.size();
        let err = |reason: String| EquivError::BudgetExceeded { logic, m, size: n, reason };
        let work = estimate_work(n, a.points.len(), m, logic);
        match logic {
            Logic::Fo if n > self.budget.fo_max_universe => {
                return Err(err(format!("universe above {}", self.budget.fo_max_universe)))
            }
            Logic::Mso if n > self.budget.mso_max_universe.min(63) => {
                return Err(err(format!("universe above {}", self.budget.mso_max_universe.min(63))))
            }
            _ => {}
        }
        if work > self.budget.max_work as f64 {
            return Err(err(format!("about {work:.3e} positions, limit {}", self.budget.max_work)));
        }
        Ok(())
    }

    /// The class of `a` under rank-m equivalence in `logic`.
    pub fn mtype(&mut self, a: &PointedStructure, m: usize, logic: Logic) -> Result<ClassId, EquivError> {
        self.check_budget(a, m, logic)?;
        let code = self.type_code(a, m, logic)?;
        let vocab = self.vocab_id(a.base.vocab());
        let key = ClassKey { logic, m, vocab, code };
        if let Some(&id) = self.classes.get(&key) {
            return Ok(id);
        }
        let id = ClassId(self.keys.len() as u32);
        self.keys.push(key);
        self.classes.insert(key, id);
        Ok(id)
    }

    /// Class of an unpointed structure.
    pub fn class_of(&mut self, a: &Structure, m: usize, logic: Logic) -> Result<ClassId, EquivError> {
        self.mtype(&PointedStructure::plain(a.clone()), m, logic)
    }

    fn type_code(&mut self, a: &PointedStructure, m: usize, logic: Logic) -> Result<TypeId, EquivError> {
        let dense = Dense::new(&a.base);
        let needs_masks = logic == Logic::Mso || !a.sets.is_empty();
        if needs_masks && dense.n > 64 {
            return Err(EquivError::SetsTooLarge);
        }
        let mut pos = Position { dense: &dense, points: Vec::new(), sets: Vec::new() };
        let mut buf = BitBuf::default();
        let mut atomic = None;
        for &p in &a.points {
            let e = a.base.index_of(p).expect("point in universe") as u32;
            pos.point_delta(e, &mut buf);
            atomic = Some(self.arena.intern(TypeNode::Atomic { parent: atomic, set_move: false, delta: buf.boxed() }));
            pos.points.push(e);
        }
        for set in &a.sets {
            let mut mask = 0u64;
            for &e in set {
                mask |= 1 << a.base.index_of(e).expect("set inside universe");
            }
            pos.set_delta(mask, &mut buf);
            atomic = Some(self.arena.intern(TypeNode::Atomic { parent: atomic, set_move: true, delta: buf.boxed() }));
            pos.sets.push(mask);
        }
        let root = match atomic {
            Some(id) => id,
            None => self.arena.intern(TypeNode::Atomic { parent: None, set_move: false, delta: Box::new([]) }),
        };
        Ok(match logic {
            Logic::Fo => self.fo_code(&mut pos, root, m, &mut buf),
            Logic::Mso => self.mso_code(&mut pos, root, m, &mut buf),
        })
    }

    fn fo_code(&mut self, pos: &mut Position, atomic: TypeId, depth: usize, buf: &mut BitBuf) -> TypeId {
        if depth == 0 {
            return atomic;
        }
        let mut children = Vec::with_capacity(pos.dense.n);
        for e in 0..pos.dense.n as u32 {
            pos.point_delta(e, buf);
            let child =
                self.arena.intern(TypeNode::Atomic { parent: Some(atomic), set_move: false, delta: buf.boxed() });
            pos.points.push(e);
            children.push(self.fo_code(pos, child, depth - 1, buf));
            pos.points.pop();
        }
        children.sort_unstable();
        children.dedup();
        self.arena.intern(TypeNode::Fo(children.into_boxed_slice()))
    }

    fn mso_code(&mut self, pos: &mut Position, atomic: TypeId, depth: usize, buf: &mut BitBuf) -> TypeId {
        if depth == 0 {
            return atomic;
        }
        let mut point_children = Vec::with_capacity(pos.dense.n);
        for e in 0..pos.dense.n as u32 {
            pos.point_delta(e, buf);
            let child =
                self.arena.intern(TypeNode::Atomic { parent: Some(atomic), set_move: false, delta: buf.boxed() });
            pos.points.push(e);
            point_children.push(self.mso_code(pos, child, depth - 1, buf));
            pos.points.pop();
        }
        let mut set_children = Vec::new();
        if depth == 1 {
            // With no rounds left a new set only matters through the current
            // points, and every membership pattern consistent with equality
            // among them is realized by some subset.
            let mut distinct: Vec<u32> = pos.points.clone();
            distinct.sort_unstable();
            distinct.dedup();
            for pattern in 0..(1u64 << distinct.len()) {
                let mask = distinct
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| pattern >> i & 1 == 1)
                    .fold(0u64, |m, (_, &e)| m | 1 << e);
                pos.set_delta(mask, buf);
                set_children.push(self.arena.intern(TypeNode::Atomic {
                    parent: Some(atomic),
                    set_move: true,
                    delta: buf.boxed(),
                }));
            }
        } else {
            for mask in 0..(1u64 << pos.dense.n) {
                pos.set_delta(mask, buf);
                let child =
                    self.arena.intern(TypeNode::Atomic { parent: Some(atomic), set_move: true, delta: buf.boxed() });
                pos.sets.push(mask);
                set_children.push(self.mso_code(pos, child, depth - 1, buf));
                pos.sets.pop();
            }
        }
        point_children.sort_unstable();
        point_children.dedup();
        set_children.sort_unstable();
        set_children.dedup();
        self.arena.intern(TypeNode::Mso(point_children.into_boxed_slice(), set_children.into_boxed_slice()))
    }

    /// Number of classes issued for `(logic, m)` over all vocabularies.
    pub fn realized_count(&self, logic: Logic, m: usize) -> usize {
        self.keys.iter().filter(|k| k.logic == logic && k.m == m).count()
    }

    pub fn stats(&self) -> Vec<ClassCount> {
        let mut counts: BTreeMap<(Logic, usize), usize> = BTreeMap::new();
        for k in &self.keys {
            *counts.entry((k.logic, k.m)).or_default() += 1;
        }
        counts.into_iter().map(|((logic, m), classes)| ClassCount { logic, m, classes }).collect()
    }

    /// Number of distinct hash-consed code nodes.
    pub fn code_nodes(&self) -> usize {
        self.arena.nodes.len()
    }

    /// Logic and rank a class id was issued for.
    pub fn class_info(&self, id: ClassId) -> (Logic, usize) {
        let k = self.keys[id.0 as usize];
        (k.logic, k.m)
    }
}

/// Rough number of positions visited by a type computation.
pub fn estimate_work(n: usize, points: usize, m: usize, logic: Logic) -> f64 {
    let n = n as f64;
    match logic {
        Logic::Fo => (0..=m).map(|i| n.powi(i as i32)).sum(),
        Logic::Mso => {
            if m == 0 {
                return 1.0;
            }
            let branch = n + 2f64.powf(n);
            let last = n + 2f64.powi((points + m - 1) as i32);
            branch.powi(m as i32 - 1) * last
        }
    }
}

/// True iff `a` and `b` satisfy the same rank-m sentences of `logic`.
pub fn equivalent(
    registry: &mut ClassRegistry,
    a: &Structure,
    b: &Structure,
    m: usize,
    logic: Logic,
) -> Result<bool, EquivError> {
    if !a.same_vocab(b) {
        return Err(EquivError::VocabularyMismatch);
    }
    Ok(registry.class_of(a, m, logic)? == registry.class_of(b, m, logic)?)
}

/// Input indices grouped by class, in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub groups: Vec<(ClassId, Vec<usize>)>,
}

impl Partition {
    pub fn count(&self) -> usize {
        self.groups.len()
    }
}

pub fn realized_classes(
    registry: &mut ClassRegistry,
    structures: &[Structure],
    m: usize,
    logic: Logic,
) -> Result<Partition, EquivError> {
    let mut groups: Vec<(ClassId, Vec<usize>)> = Vec::new();
    for (i, s) in structures.iter().enumerate() {
        let id = registry.class_of(s, m, logic)?;
        match groups.iter_mut().find(|(g, _)| *g == id) {
            Some((_, members)) => members.push(i),
            None => groups.push((id, vec![i])),
        }
    }
    Ok(Partition { groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;

    fn word(letters: &str) -> Structure {
        let vocab = Arc::new(Vocabulary::new([("<=", 2), ("P_a", 1), ("P_b", 1)]).unwrap());
        let n = letters.len() as u32;
        let order = (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect();
        let pick = |c| letters.chars().enumerate().filter(|&(_, l)| l == c).map(|(i, _)| vec![i as u32]).collect();
        Structure::new(vocab, 0..n, [("<=", order), ("P_a", pick('a')), ("P_b", pick('b'))]).unwrap()
    }

    fn path(edges: u32) -> Structure {
        let vocab = Arc::new(Vocabulary::new([("E", 2)]).unwrap());
        let tuples = (0..edges).flat_map(|i| [vec![i, i + 1], vec![i + 1, i]]).collect();
        Structure::new(vocab, 0..=edges, [("E", tuples)]).unwrap()
    }

    #[test]
    fn ab_and_ba() {
        let mut reg = ClassRegistry::new();
        assert!(equivalent(&mut reg, &word("ab"), &word("ba"), 1, Logic::Fo).unwrap());
        assert!(!equivalent(&mut reg, &word("ab"), &word("ba"), 2, Logic::Fo).unwrap());
        assert!(!equivalent(&mut reg, &word("a"), &word("b"), 1, Logic::Fo).unwrap());
        assert!(equivalent(&mut reg, &word("a"), &word("bbb"), 0, Logic::Mso).unwrap());
    }

    #[test]
    fn long_paths_collapse() {
        let mut reg = ClassRegistry::new();
        assert!(equivalent(&mut reg, &path(9), &path(10), 2, Logic::Fo).unwrap());
        assert!(!equivalent(&mut reg, &path(0), &path(9), 2, Logic::Fo).unwrap());
    }

    #[test]
    fn words_up_to_four_letters_give_three_rank_one_classes() {
        let mut words = Vec::new();
        for len in 1..=4 {
            for bits in 0..1u32 << len {
                let w: String = (0..len).map(|i| if bits >> i & 1 == 1 { 'b' } else { 'a' }).collect();
                words.push(word(&w));
            }
        }
        assert_eq!(words.len(), 30);
        let mut reg = ClassRegistry::new();
        let part = realized_classes(&mut reg, &words, 1, Logic::Fo).unwrap();
        assert_eq!(part.count(), 3);
        assert_eq!(reg.realized_count(Logic::Fo, 1), 3);
    }

    #[test]
    fn ids_are_first_encounter_order() {
        let mut reg = ClassRegistry::new();
        assert_eq!(reg.class_of(&word("a"), 1, Logic::Fo).unwrap(), ClassId(0));
        assert_eq!(reg.class_of(&word("b"), 1, Logic::Fo).unwrap(), ClassId(1));
        assert_eq!(reg.class_of(&word("aa"), 1, Logic::Fo).unwrap(), ClassId(0));
        assert_eq!(reg.stats(), vec![ClassCount { logic: Logic::Fo, m: 1, classes: 2 }]);
    }

    #[test]
    fn budget_is_enforced() {
        let mut reg = ClassRegistry::with_budget(Budget { fo_max_universe: 5, mso_max_universe: 4, max_work: 1000 });
        assert!(matches!(reg.class_of(&path(6), 1, Logic::Fo), Err(EquivError::BudgetExceeded { .. })));
        assert!(matches!(reg.class_of(&path(4), 1, Logic::Mso), Err(EquivError::BudgetExceeded { .. })));
        assert!(matches!(reg.class_of(&path(4), 5, Logic::Fo), Err(EquivError::BudgetExceeded { .. })));
        assert!(reg.class_of(&path(3), 2, Logic::Mso).is_ok());
    }

    #[test]
    fn mismatched_vocabularies_are_rejected() {
        let mut reg = ClassRegistry::new();
        assert_eq!(equivalent(&mut reg, &word("a"), &path(1), 1, Logic::Fo), Err(EquivError::VocabularyMismatch));
    }

    #[test]
    fn pointed_types_see_the_point() {
        let mut reg = ClassRegistry::new();
        let w = word("ab");
        let first = PointedStructure::with_points(w.clone(), vec![0]).unwrap();
        let last = PointedStructure::with_points(w, vec![1]).unwrap();
        assert_ne!(reg.mtype(&first, 0, Logic::Fo).unwrap(), reg.mtype(&last, 0, Logic::Fo).unwrap());
    }
}
