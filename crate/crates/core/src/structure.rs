//! Finite relational structures over purely relational vocabularies.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use rustc_hash::FxHashSet;
use serde::Serialize;
use thiserror::Error;

use crate::sexpr::{self, Spanned, SyntaxError};

/// Opaque element identifier.
pub type Elem = u32;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RelSymbol {
    pub name: String,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct Vocabulary {
    relations: Vec<RelSymbol>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("relation {0} declared twice")]
    DuplicateRelation(String),
    #[error("relation {0} has arity 0")]
    ZeroArity(String),
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("element {0} is not in the universe")]
    NotInUniverse(Elem),
    #[error("substructure universe must be nonempty")]
    EmptySubset,
    #[error("vocabularies differ")]
    VocabularyMismatch,
    #[error("invalid structure: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("embedding search over {size} elements exceeds budget {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    EmptyUniverse,
    TupleOutsideUniverse { relation: String, tuple: Vec<Elem> },
    ArityMismatch { relation: String, tuple: Vec<Elem> },
    MissingTable { relation: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyUniverse => f.write_str("universe is empty"),
            Violation::TupleOutsideUniverse { relation, tuple } => {
                write!(f, "tuple {tuple:?} of {relation} leaves the universe")
            }
            Violation::ArityMismatch { relation, tuple } => {
                write!(f, "tuple {tuple:?} has the wrong arity for {relation}")
            }
            Violation::MissingTable { relation } => write!(f, "no table for {relation}"),
        }
    }
}

impl Vocabulary {
    pub fn new<S: Into<String>>(relations: impl IntoIterator<Item = (S, usize)>) -> Result<Self, StructureError> {
        let mut out = Vocabulary::default();
        for (name, arity) in relations {
            out.push(name.into(), arity)?;
        }
        Ok(out)
    }

    pub(crate) fn push(&mut self, name: String, arity: usize) -> Result<(), StructureError> {
        if arity == 0 {
            return Err(StructureError::ZeroArity(name));
        }
        if self.index_of(&name).is_some() {
            return Err(StructureError::DuplicateRelation(name));
        }
        self.relations.push(RelSymbol { name, arity });
        Ok(())
    }

    pub fn relations(&self) -> &[RelSymbol] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&RelSymbol> {
        self.relations.iter().find(|r| r.name == name)
    }

    /// Returns a copy with extra relations appended.
    pub fn extended<S: Into<String>>(
        &self,
        extra: impl IntoIterator<Item = (S, usize)>,
    ) -> Result<Vocabulary, StructureError> {
        let mut out = self.clone();
        for (name, arity) in extra {
            out.push(name.into(), arity)?;
        }
        Ok(out)
    }

    /// A relation name not yet used, derived from `stem`.
    pub fn fresh_name(&self, stem: &str) -> String {
        if self.index_of(stem).is_none() {
            return stem.to_string();
        }
        (1..).map(|k| format!("{stem}{k}")).find(|n| self.index_of(n).is_none()).unwrap()
    }
}

/// A finite relational structure. Tables are indexed like the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Structure {
    vocab: Arc<Vocabulary>,
    universe: Vec<Elem>,
    tables: Vec<BTreeSet<Vec<Elem>>>,
}

/// A structure with distinguished points and sets, as used by pointed types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedStructure {
    pub base: Structure,
    pub points: Vec<Elem>,
    pub sets: Vec<BTreeSet<Elem>>,
}

impl PointedStructure {
    pub fn plain(base: Structure) -> Self {
        PointedStructure { base, points: Vec::new(), sets: Vec::new() }
    }

    pub fn with_points(base: Structure, points: Vec<Elem>) -> Result<Self, StructureError> {
        for &p in &points {
            if !base.contains(p) {
                return Err(StructureError::NotInUniverse(p));
            }
        }
        Ok(PointedStructure { base, points, sets: Vec::new() })
    }
}

impl Structure {
    /// Builds and validates a structure. Tables are given by relation name;
    /// relations without an entry get an empty table.
    pub fn new<S: AsRef<str>>(
        vocab: Arc<Vocabulary>,
        universe: impl IntoIterator<Item = Elem>,
        tables: impl IntoIterator<Item = (S, Vec<Vec<Elem>>)>,
    ) -> Result<Self, StructureError> {
        let s = Self::new_unchecked(vocab, universe, tables)?;
        let violations = s.validate();
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(StructureError::Invalid(violations))
        }
    }

    /// Builds without checking membership or arity; see [`Structure::validate`].
    pub fn new_unchecked<S: AsRef<str>>(
        vocab: Arc<Vocabulary>,
        universe: impl IntoIterator<Item = Elem>,
        tables: impl IntoIterator<Item = (S, Vec<Vec<Elem>>)>,
    ) -> Result<Self, StructureError> {
        let universe: BTreeSet<Elem> = universe.into_iter().collect();
        let mut out = vec![BTreeSet::new(); vocab.len()];
        for (name, tuples) in tables {
            let idx = vocab
                .index_of(name.as_ref())
                .ok_or_else(|| StructureError::UnknownRelation(name.as_ref().to_string()))?;
            out[idx].extend(tuples);
        }
        Ok(Structure { vocab, universe: universe.into_iter().collect(), tables: out })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Elements in increasing order.
    pub fn universe(&self) -> &[Elem] {
        &self.universe
    }

    pub fn size(&self) -> usize {
        self.universe.len()
    }

    pub fn contains(&self, e: Elem) -> bool {
        self.universe.binary_search(&e).is_ok()
    }

    /// Position of `e` in [`Structure::universe`].
    pub fn index_of(&self, e: Elem) -> Option<usize> {
        self.universe.binary_search(&e).ok()
    }

    pub fn table(&self, rel: usize) -> &BTreeSet<Vec<Elem>> {
        &self.tables[rel]
    }

    pub fn table_by_name(&self, name: &str) -> Option<&BTreeSet<Vec<Elem>>> {
        self.vocab.index_of(name).map(|i| &self.tables[i])
    }

    pub fn holds(&self, rel: usize, tuple: &[Elem]) -> bool {
        self.tables[rel].contains(tuple)
    }

    pub fn tuple_count(&self) -> usize {
        self.tables.iter().map(BTreeSet::len).sum()
    }

    pub fn same_vocab(&self, other: &Structure) -> bool {
        Arc::ptr_eq(&self.vocab, &other.vocab) || self.vocab == other.vocab
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.universe.is_empty() {
            out.push(Violation::EmptyUniverse);
        }
        for (rel, table) in self.vocab.relations().iter().zip(&self.tables) {
            for tuple in table {
                if tuple.len() != rel.arity {
                    out.push(Violation::ArityMismatch { relation: rel.name.clone(), tuple: tuple.clone() });
                } else if tuple.iter().any(|&e| !self.contains(e)) {
                    out.push(Violation::TupleOutsideUniverse { relation: rel.name.clone(), tuple: tuple.clone() });
                }
            }
        }
        out
    }

    pub fn induced_substructure(&self, subset: impl IntoIterator<Item = Elem>) -> Result<Structure, StructureError> {
        let keep: BTreeSet<Elem> = subset.into_iter().collect();
        if keep.is_empty() {
            return Err(StructureError::EmptySubset);
        }
        if let Some(&bad) = keep.iter().find(|&&e| !self.contains(e)) {
            return Err(StructureError::NotInUniverse(bad));
        }
        let tables = self
            .tables
            .iter()
            .map(|t| t.iter().filter(|tuple| tuple.iter().all(|e| keep.contains(e))).cloned().collect())
            .collect();
        Ok(Structure { vocab: self.vocab.clone(), universe: keep.into_iter().collect(), tables })
    }

    /// Renames elements through `f`, which must be injective on the universe.
    pub fn relabel(&self, f: impl Fn(Elem) -> Elem) -> Structure {
        let universe: BTreeSet<Elem> = self.universe.iter().map(|&e| f(e)).collect();
        assert_eq!(universe.len(), self.universe.len(), "relabel map must be injective");
        let tables =
            self.tables.iter().map(|t| t.iter().map(|tuple| tuple.iter().map(|&e| f(e)).collect()).collect()).collect();
        Structure { vocab: self.vocab.clone(), universe: universe.into_iter().collect(), tables }
    }

    /// Re-expresses the structure over `vocab`, which must contain every
    /// relation of the current vocabulary with the same arity.
    pub fn expand_to(&self, vocab: Arc<Vocabulary>) -> Result<Structure, StructureError> {
        let mut tables = vec![BTreeSet::new(); vocab.len()];
        for (rel, table) in self.vocab.relations().iter().zip(&self.tables) {
            match vocab.get(&rel.name) {
                Some(target) if target.arity == rel.arity => {
                    tables[vocab.index_of(&rel.name).unwrap()] = table.clone();
                }
                _ => return Err(StructureError::VocabularyMismatch),
            }
        }
        Ok(Structure { vocab, universe: self.universe.clone(), tables })
    }

    /// Expansion by a fresh unary predicate holding exactly `{a}`.
    pub fn with_point(&self, a: Elem) -> Result<Structure, StructureError> {
        if !self.contains(a) {
            return Err(StructureError::NotInUniverse(a));
        }
        let name = self.vocab.fresh_name("@pt");
        let vocab = Arc::new(self.vocab.extended([(name, 1)])?);
        let mut tables = self.tables.clone();
        tables.push(BTreeSet::from([vec![a]]));
        Ok(Structure { vocab, universe: self.universe.clone(), tables })
    }

    pub fn format(&self) -> String {
        self.to_string()
    }
}

/// Disjoint sum with fresh unary predicates `P_1..P_n` marking each summand.
///
/// Elements are retagged as (component, id) and renumbered densely from 0
/// in lexicographic order; the returned origin list gives that pair for each
/// new id.
pub fn disjoint_sum(parts: &[&Structure]) -> Result<(Structure, Vec<(usize, Elem)>), StructureError> {
    let first = parts.first().ok_or(StructureError::EmptySubset)?;
    if parts.iter().any(|p| !p.same_vocab(first)) {
        return Err(StructureError::VocabularyMismatch);
    }
    let base = first.vocab();
    let markers: Vec<String> = {
        let mut names = Vec::new();
        let mut probe = (**base).clone();
        for i in 1..=parts.len() {
            let name = probe.fresh_name(&format!("P_{i}"));
            probe.push(name.clone(), 1)?;
            names.push(name);
        }
        names
    };
    let vocab = Arc::new(base.extended(markers.iter().map(|n| (n.clone(), 1)))?);
    let mut origin = Vec::new();
    let mut maps: Vec<BTreeMap<Elem, Elem>> = Vec::new();
    for (c, part) in parts.iter().enumerate() {
        let mut map = BTreeMap::new();
        for &e in part.universe() {
            map.insert(e, origin.len() as Elem);
            origin.push((c, e));
        }
        maps.push(map);
    }
    let mut tables = vec![BTreeSet::new(); vocab.len()];
    for (c, part) in parts.iter().enumerate() {
        for (r, table) in part.tables.iter().enumerate() {
            tables[r].extend(table.iter().map(|t| t.iter().map(|e| maps[c][e]).collect::<Vec<_>>()));
        }
        tables[base.len() + c].extend(maps[c].values().map(|&e| vec![e]));
    }
    let universe = (0..origin.len() as Elem).collect();
    Ok((Structure { vocab, universe, tables }, origin))
}

/// True iff `f` is injective on `b`'s universe, lands in `a`, and preserves
/// and reflects every relation.
pub fn is_embedding(b: &Structure, a: &Structure, f: impl Fn(Elem) -> Option<Elem>) -> bool {
    if !b.same_vocab(a) {
        return false;
    }
    let mut image = BTreeMap::new();
    for &e in b.universe() {
        match f(e) {
            Some(x) if a.contains(x) => {
                if image.insert(x, e).is_some() {
                    return false;
                }
            }
            _ => return false,
        }
    }
    for (r, table) in a.tables.iter().enumerate() {
        for tuple in table {
            if tuple.iter().all(|x| image.contains_key(x)) {
                let pre: Vec<Elem> = tuple.iter().map(|x| image[x]).collect();
                if !b.holds(r, &pre) {
                    return false;
                }
            }
        }
    }
    for (r, table) in b.tables.iter().enumerate() {
        for tuple in table {
            let img: Vec<Elem> = tuple.iter().map(|&e| f(e).unwrap()).collect();
            if !a.holds(r, &img) {
                return false;
            }
        }
    }
    true
}

/// Dense, index-based view of a structure used by the search routines.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub rels: Vec<DenseRel>,
}

#[derive(Debug, Clone)]
pub enum DenseRel {
    Unary(Vec<bool>),
    Binary(Vec<bool>),
    General { arity: usize, tuples: FxHashSet<Vec<u32>> },
}

impl Dense {
    pub fn new(s: &Structure) -> Dense {
        let n = s.size();
        let idx = |e: Elem| s.index_of(e).unwrap() as u32;
        let rels = s
            .vocab()
            .relations()
            .iter()
            .zip(&s.tables)
            .map(|(rel, table)| match rel.arity {
                1 => {
                    let mut bits = vec![false; n];
                    for t in table {
                        bits[idx(t[0]) as usize] = true;
                    }
                    DenseRel::Unary(bits)
                }
                2 => {
                    let mut bits = vec![false; n * n];
                    for t in table {
                        bits[idx(t[0]) as usize * n + idx(t[1]) as usize] = true;
                    }
                    DenseRel::Binary(bits)
                }
                arity => DenseRel::General {
                    arity,
                    tuples: table.iter().map(|t| t.iter().map(|&e| idx(e)).collect()).collect(),
                },
            })
            .collect();
        Dense { n, rels }
    }

    pub fn arity(&self, rel: usize) -> usize {
        match &self.rels[rel] {
            DenseRel::Unary(_) => 1,
            DenseRel::Binary(_) => 2,
            DenseRel::General { arity, .. } => *arity,
        }
    }

    #[inline]
    pub fn holds(&self, rel: usize, tuple: &[u32]) -> bool {
        match &self.rels[rel] {
            DenseRel::Unary(bits) => bits[tuple[0] as usize],
            DenseRel::Binary(bits) => bits[tuple[0] as usize * self.n + tuple[1] as usize],
            DenseRel::General { tuples, .. } => tuples.contains(tuple),
        }
    }
}

/// Brute-force search for an embedding of `b` into `a`. `budget` caps
/// `|a|`; the search itself backtracks with relation checks on each
/// partial assignment.
pub fn find_embedding(
    b: &Structure,
    a: &Structure,
    budget: usize,
) -> Result<Option<BTreeMap<Elem, Elem>>, StructureError> {
    if !b.same_vocab(a) {
        return Err(StructureError::VocabularyMismatch);
    }
    if a.size() > budget {
        return Err(StructureError::BudgetExceeded { size: a.size(), budget });
    }
    if b.size() > a.size() {
        return Ok(None);
    }
    let db = Dense::new(b);
    let da = Dense::new(a);
    let mut assign: Vec<u32> = Vec::with_capacity(b.size());
    let mut used = vec![false; a.size()];
    if extend_embedding(&db, &da, &mut assign, &mut used) {
        let map = assign.iter().enumerate().map(|(i, &x)| (b.universe()[i], a.universe()[x as usize])).collect();
        Ok(Some(map))
    } else {
        Ok(None)
    }
}

fn consistent(db: &Dense, da: &Dense, assign: &[u32]) -> bool {
    let k = assign.len() - 1;
    let mut src = Vec::new();
    let mut dst = Vec::new();
    for r in 0..db.rels.len() {
        let arity = db.arity(r);
        // Check every tuple over 0..=k that mentions k.
        let total = (k + 1).pow(arity as u32);
        for code in 0..total {
            src.clear();
            let mut c = code;
            for _ in 0..arity {
                src.push((c % (k + 1)) as u32);
                c /= k + 1;
            }
            if !src.contains(&(k as u32)) {
                continue;
            }
            dst.clear();
            dst.extend(src.iter().map(|&i| assign[i as usize]));
            if db.holds(r, &src) != da.holds(r, &dst) {
                return false;
            }
        }
    }
    true
}

fn extend_embedding(db: &Dense, da: &Dense, assign: &mut Vec<u32>, used: &mut [bool]) -> bool {
    if assign.len() == db.n {
        return true;
    }
    for x in 0..da.n {
        if used[x] {
            continue;
        }
        assign.push(x as u32);
        if consistent(db, da, assign) {
            used[x] = true;
            if extend_embedding(db, da, assign, used) {
                return true;
            }
            used[x] = false;
        }
        assign.pop();
    }
    false
}

/// Isomorphism test by embedding search between equal-size structures.
pub fn isomorphic(a: &Structure, b: &Structure, budget: usize) -> Result<bool, StructureError> {
    if !a.same_vocab(b) {
        return Err(StructureError::VocabularyMismatch);
    }
    if a.size() != b.size() || a.tables.iter().zip(&b.tables).any(|(x, y)| x.len() != y.len()) {
        return Ok(false);
    }
    Ok(find_embedding(a, b, budget)?.is_some())
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(structure (vocab")?;
        for rel in self.vocab.relations() {
            f.write_str(" (")?;
            sexpr::write_atom(f, &rel.name)?;
            write!(f, " {})", rel.arity)?;
        }
        f.write_str(") (universe")?;
        for e in &self.universe {
            write!(f, " {e}")?;
        }
        f.write_char(')')?;
        for (rel, table) in self.vocab.relations().iter().zip(&self.tables) {
            f.write_str(" (rel ")?;
            sexpr::write_atom(f, &rel.name)?;
            for tuple in table {
                if rel.arity == 1 {
                    write!(f, " {}", tuple[0])?;
                } else {
                    f.write_str(" (")?;
                    for (i, e) in tuple.iter().enumerate() {
                        if i > 0 {
                            f.write_char(' ')?;
                        }
                        write!(f, "{e}")?;
                    }
                    f.write_char(')')?;
                }
            }
            f.write_char(')')?;
        }
        f.write_char(')')
    }
}

fn parse_elem(node: &Spanned) -> Result<Elem, SyntaxError> {
    let text = node.expect_atom("element id")?;
    text.parse().map_err(|_| node.error(format!("bad element id {text:?}")))
}

pub(crate) fn parse_vocab(node: &Spanned) -> Result<Vocabulary, StructureError> {
    let (head, items) = node.expect_form("(vocab ...)")?;
    if head != "vocab" {
        return Err(node.error("expected (vocab ...)").into());
    }
    let mut vocab = Vocabulary::default();
    for item in items {
        let parts = item.expect_list("(NAME ARITY)")?;
        if parts.len() != 2 {
            return Err(item.error("expected (NAME ARITY)").into());
        }
        let name = parts[0].expect_atom("relation name")?;
        let arity_text = parts[1].expect_atom("arity")?;
        let arity = arity_text.parse().map_err(|_| parts[1].error("bad arity"))?;
        vocab.push(name.to_string(), arity)?;
    }
    Ok(vocab)
}

/// Parses the structure text format and validates the result.
pub fn parse_structure(text: &str) -> Result<Structure, StructureError> {
    structure_from_sexpr(&sexpr::parse(text)?)
}

pub(crate) fn structure_from_sexpr(node: &Spanned) -> Result<Structure, StructureError> {
    let (head, items) = node.expect_form("(structure ...)")?;
    if head != "structure" || items.len() < 2 {
        return Err(node.error("expected (structure (vocab ...) (universe ...) ...)").into());
    }
    let vocab = Arc::new(parse_vocab(&items[0])?);
    let (uhead, elems) = items[1].expect_form("(universe ...)")?;
    if uhead != "universe" {
        return Err(items[1].error("expected (universe ...)").into());
    }
    let universe = elems.iter().map(parse_elem).collect::<Result<Vec<_>, _>>()?;
    let mut tables: Vec<(String, Vec<Vec<Elem>>)> = Vec::new();
    for item in &items[2..] {
        let (rhead, rest) = item.expect_form("(rel NAME ...)")?;
        if rhead != "rel" || rest.is_empty() {
            return Err(item.error("expected (rel NAME tuple...)").into());
        }
        let name = rest[0].expect_atom("relation name")?;
        let rel = vocab.get(name).ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
        let mut tuples = Vec::new();
        for t in &rest[1..] {
            match t.list() {
                Some(parts) => tuples.push(parts.iter().map(parse_elem).collect::<Result<_, _>>()?),
                None if rel.arity == 1 => tuples.push(vec![parse_elem(t)?]),
                None => return Err(t.error("expected a tuple").into()),
            }
        }
        tables.push((name.to_string(), tuples));
    }
    Structure::new(vocab, universe, tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(n: u32, edges: &[(u32, u32)]) -> Structure {
        let vocab = Arc::new(Vocabulary::new([("E", 2)]).unwrap());
        let mut tuples = Vec::new();
        for &(a, b) in edges {
            tuples.push(vec![a, b]);
            tuples.push(vec![b, a]);
        }
        Structure::new(vocab, 1..=n, [("E", tuples)]).unwrap()
    }

    #[test]
    fn validate_reports_each_violation() {
        let vocab = Arc::new(Vocabulary::new([("E", 2)]).unwrap());
        assert!(graph(2, &[(1, 2)]).validate().is_empty());
        let bad = Structure::new_unchecked(vocab.clone(), [1, 2], [("E", vec![vec![1, 3]])]).unwrap();
        assert_eq!(bad.validate().len(), 1);
        let empty = Structure::new_unchecked(vocab, [], Vec::<(&str, _)>::new()).unwrap();
        assert_eq!(empty.validate(), vec![Violation::EmptyUniverse]);
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_nullary() {
        assert!(Vocabulary::new([("E", 2), ("E", 1)]).is_err());
        assert!(Vocabulary::new([("c", 0)]).is_err());
    }

    #[test]
    fn induced_substructures() {
        let k3 = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        assert_eq!(k3.induced_substructure([1, 2]).unwrap(), graph(2, &[(1, 2)]));
        assert_eq!(k3.induced_substructure([1, 2, 3]).unwrap(), k3);
        let path = graph(3, &[(1, 2), (2, 3)]);
        let ends = path.induced_substructure([1, 3]).unwrap();
        assert!(ends.table(0).is_empty());
        assert_eq!(ends.universe(), &[1, 3]);
        assert!(matches!(path.induced_substructure([]), Err(StructureError::EmptySubset)));
        assert!(matches!(path.induced_substructure([9]), Err(StructureError::NotInUniverse(9))));
    }

    #[test]
    fn disjoint_sum_marks_components() {
        let a = graph(2, &[(1, 2)]);
        let b = graph(3, &[(1, 2)]);
        let (sum, origin) = disjoint_sum(&[&a, &b]).unwrap();
        assert_eq!(sum.size(), 5);
        assert_eq!(origin[2], (1, 1));
        let p1 = sum.table_by_name("P_1").unwrap();
        let p2 = sum.table_by_name("P_2").unwrap();
        assert_eq!(p1.len() + p2.len(), 5);
        assert!(p1.is_disjoint(p2));
        assert!(disjoint_sum(&[&a, &a.with_point(1).unwrap()]).is_err());
    }

    #[test]
    fn embeddings() {
        let k2 = graph(2, &[(1, 2)]);
        let empty2 = graph(2, &[]);
        assert!(is_embedding(&k2, &k2, Some));
        assert!(!is_embedding(&k2, &empty2, Some));
        assert!(!is_embedding(&k2, &empty2, |e| Some(3 - e)));
        let p2 = graph(3, &[(1, 2), (2, 3)]);
        let p3 = graph(4, &[(1, 2), (2, 3), (3, 4)]);
        assert!(find_embedding(&p2, &p3, 10).unwrap().is_some());
        let k3 = graph(3, &[(1, 2), (2, 3), (1, 3)]);
        let c4 = graph(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert!(find_embedding(&k3, &c4, 10).unwrap().is_none());
        let f = find_embedding(&c4, &c4, 10).unwrap().unwrap();
        assert!(is_embedding(&c4, &c4, |e| f.get(&e).copied()));
        assert!(find_embedding(&c4, &c4, 3).is_err());
    }

    #[test]
    fn with_point_adds_singleton() {
        let k2 = graph(2, &[(1, 2)]);
        let p = k2.with_point(2).unwrap();
        assert_eq!(p.size(), k2.size());
        assert_eq!(p.table(1).iter().cloned().collect::<Vec<_>>(), vec![vec![2]]);
        assert_eq!(p.with_point(1).unwrap().vocab().len(), 3);
        assert!(k2.with_point(7).is_err());
    }

    #[test]
    fn text_round_trip() {
        let text = "(structure (vocab (P 1) (E 2)) (universe 1 2 3) (rel P 1 2) (rel E (1 2) (2 3)))";
        let s = parse_structure(text).unwrap();
        assert_eq!(s.to_string(), text);
        assert_eq!(parse_structure(&s.to_string()).unwrap(), s);
        assert!(parse_structure("(structure (vocab (E 2)) (universe 1) (rel E (1 2)))").is_err());
        assert!(parse_structure("(structure (vocab (E 2)) (universe 1)").is_err());
    }
}
