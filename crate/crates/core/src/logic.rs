//! FO and MSO formulas: syntax, rank, text format and a Tarskian evaluator.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::sexpr::{self, Spanned, SyntaxError};
use crate::structure::{Dense, Elem, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Logic {
    Fo,
    Mso,
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logic::Fo => "FO",
            Logic::Mso => "MSO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom {
        rel: String,
        args: Vec<String>,
    },
    Eq(String, String),
    /// `x ∈ X`.
    In(String, String),
    /// Order of element ids; only meaningful inside translation schemes.
    IdLess(String, String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    ExistsSet(String, Box<Formula>),
    ForallSet(String, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("variable {0} used both as element and as set")]
    SortClash(String),
    #[error("relation {0} is not in the vocabulary")]
    UnknownRelation(String),
    #[error("relation {rel} expects {expected} arguments, got {got}")]
    Arity { rel: String, expected: usize, got: usize },
    #[error("set quantifiers or membership atoms need MSO")]
    NotFirstOrder,
    #[error("assignment maps {0} outside the universe")]
    OutsideUniverse(String),
    #[error("set quantification over {size} elements exceeds the budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
}

/// Values for free variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub points: BTreeMap<String, Elem>,
    pub sets: BTreeMap<String, BTreeSet<Elem>>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn point(mut self, var: impl Into<String>, e: Elem) -> Self {
        self.points.insert(var.into(), e);
        self
    }

    pub fn set(mut self, var: impl Into<String>, elems: impl IntoIterator<Item = Elem>) -> Self {
        self.sets.insert(var.into(), elems.into_iter().collect());
        self
    }
}

impl Formula {
    pub fn atom(rel: impl Into<String>, args: &[&str]) -> Formula {
        Formula::Atom { rel: rel.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }

    pub fn eq(x: impl Into<String>, y: impl Into<String>) -> Formula {
        Formula::Eq(x.into(), y.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::And(parts.into_iter().collect())
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        Formula::Or(parts.into_iter().collect())
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn exists(x: impl Into<String>, f: Formula) -> Formula {
        Formula::Exists(x.into(), Box::new(f))
    }

    pub fn forall(x: impl Into<String>, f: Formula) -> Formula {
        Formula::Forall(x.into(), Box::new(f))
    }

    pub fn exists_set(x: impl Into<String>, f: Formula) -> Formula {
        Formula::ExistsSet(x.into(), Box::new(f))
    }

    pub fn forall_set(x: impl Into<String>, f: Formula) -> Formula {
        Formula::ForallSet(x.into(), Box::new(f))
    }

    /// Maximum number of quantifiers on a root-to-leaf path of the parse tree.
    pub fn rank(&self) -> usize {
        match self {
            Formula::True
            | Formula::False
            | Formula::Atom { .. }
            | Formula::Eq(..)
            | Formula::In(..)
            | Formula::IdLess(..) => 0,
            Formula::Not(f) => f.rank(),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().map(Formula::rank).max().unwrap_or(0),
            Formula::Implies(a, b) => a.rank().max(b.rank()),
            Formula::Exists(_, f) | Formula::Forall(_, f) | Formula::ExistsSet(_, f) | Formula::ForallSet(_, f) => {
                1 + f.rank()
            }
        }
    }

    /// The weakest logic the formula belongs to.
    pub fn logic(&self) -> Logic {
        let mut mso = false;
        self.visit(&mut |f| {
            if matches!(f, Formula::In(..) | Formula::ExistsSet(..) | Formula::ForallSet(..)) {
                mso = true;
            }
        });
        if mso {
            Logic::Mso
        } else {
            Logic::Fo
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        self.rank() == 0
    }

    fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(g)
            | Formula::Exists(_, g)
            | Formula::Forall(_, g)
            | Formula::ExistsSet(_, g)
            | Formula::ForallSet(_, g) => g.visit(f),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.visit(f)),
            Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    /// Free first-order and free set variables.
    pub fn free_vars(&self) -> (BTreeSet<String>, BTreeSet<String>) {
        let mut points = BTreeSet::new();
        let mut sets = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut points, &mut sets);
        (points, sets)
    }

    fn collect_free(&self, bound: &mut Vec<String>, points: &mut BTreeSet<String>, sets: &mut BTreeSet<String>) {
        let note = |v: &String, into: &mut BTreeSet<String>| {
            if !bound.contains(v) {
                into.insert(v.clone());
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom { args, .. } => args.iter().for_each(|v| note(v, points)),
            Formula::Eq(x, y) | Formula::IdLess(x, y) => {
                note(x, points);
                note(y, points);
            }
            Formula::In(x, set) => {
                note(x, points);
                note(set, sets);
            }
            Formula::Not(g) => g.collect_free(bound, points, sets),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| g.collect_free(bound, points, sets)),
            Formula::Implies(a, b) => {
                a.collect_free(bound, points, sets);
                b.collect_free(bound, points, sets);
            }
            Formula::Exists(v, g) | Formula::Forall(v, g) | Formula::ExistsSet(v, g) | Formula::ForallSet(v, g) => {
                bound.push(v.clone());
                g.collect_free(bound, points, sets);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        let (p, s) = self.free_vars();
        p.is_empty() && s.is_empty()
    }

    /// Replaces free first-order variables according to `map`. Bound
    /// variables shadow the map; callers must avoid capture.
    pub fn rename_free(&self, map: &BTreeMap<String, String>) -> Formula {
        let r = |v: &String| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom { rel, args } => Formula::Atom { rel: rel.clone(), args: args.iter().map(r).collect() },
            Formula::Eq(x, y) => Formula::Eq(r(x), r(y)),
            Formula::IdLess(x, y) => Formula::IdLess(r(x), r(y)),
            Formula::In(x, set) => Formula::In(r(x), set.clone()),
            Formula::Not(g) => Formula::not(g.rename_free(map)),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| g.rename_free(map)).collect()),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| g.rename_free(map)).collect()),
            Formula::Implies(a, b) => Formula::implies(a.rename_free(map), b.rename_free(map)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                let mut inner = map.clone();
                inner.remove(v);
                let body = Box::new(g.rename_free(&inner));
                if matches!(self, Formula::Exists(..)) {
                    Formula::Exists(v.clone(), body)
                } else {
                    Formula::Forall(v.clone(), body)
                }
            }
            Formula::ExistsSet(v, g) => Formula::ExistsSet(v.clone(), Box::new(g.rename_free(map))),
            Formula::ForallSet(v, g) => Formula::ForallSet(v.clone(), Box::new(g.rename_free(map))),
        }
    }

    /// Rejects set syntax when `logic` is FO.
    pub fn check_logic(&self, logic: Logic) -> Result<(), LogicError> {
        if logic == Logic::Fo && self.logic() == Logic::Mso {
            Err(LogicError::NotFirstOrder)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atom = |f: &mut fmt::Formatter<'_>, s: &str| sexpr::write_atom(f, s);
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom { rel, args } => {
                f.write_str("(atom ")?;
                atom(f, rel)?;
                for a in args {
                    f.write_str(" ")?;
                    atom(f, a)?;
                }
                f.write_str(")")
            }
            Formula::Eq(x, y) | Formula::In(x, y) | Formula::IdLess(x, y) => {
                let head = match self {
                    Formula::Eq(..) => "=",
                    Formula::In(..) => "in",
                    _ => "id<",
                };
                write!(f, "({head} ")?;
                atom(f, x)?;
                f.write_str(" ")?;
                atom(f, y)?;
                f.write_str(")")
            }
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(gs) | Formula::Or(gs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in gs {
                    write!(f, " {g}")?;
                }
                f.write_str(")")
            }
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, g) | Formula::Forall(v, g) | Formula::ExistsSet(v, g) | Formula::ForallSet(v, g) => {
                let head = match self {
                    Formula::Exists(..) => "exists",
                    Formula::Forall(..) => "forall",
                    Formula::ExistsSet(..) => "exists-set",
                    _ => "forall-set",
                };
                write!(f, "({head} ")?;
                atom(f, v)?;
                write!(f, " {g})")
            }
        }
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    Ok(formula_from_sexpr(&sexpr::parse(text)?)?)
}

pub fn format_formula(phi: &Formula) -> String {
    phi.to_string()
}

pub(crate) fn formula_from_sexpr(node: &Spanned) -> Result<Formula, SyntaxError> {
    if let Some(a) = node.atom() {
        return match a {
            "true" => Ok(Formula::True),
            "false" => Ok(Formula::False),
            _ => Err(node.error(format!("unexpected atom {a:?} where a formula was expected"))),
        };
    }
    let (head, args) = node.expect_form("formula")?;
    let var = |i: usize| -> Result<String, SyntaxError> {
        args.get(i)
            .ok_or_else(|| node.error(format!("{head} is missing an argument")))?
            .expect_atom("variable")
            .map(str::to_string)
    };
    let sub = |i: usize| -> Result<Formula, SyntaxError> {
        formula_from_sexpr(args.get(i).ok_or_else(|| node.error(format!("{head} is missing a subformula")))?)
    };
    let arity = |n: usize| -> Result<(), SyntaxError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(node.error(format!("{head} takes {n} arguments")))
        }
    };
    Ok(match head {
        "atom" => {
            if args.is_empty() {
                return Err(node.error("atom needs a relation name"));
            }
            Formula::Atom { rel: var(0)?, args: (1..args.len()).map(var).collect::<Result<_, _>>()? }
        }
        "=" | "in" | "id<" => {
            arity(2)?;
            let (x, y) = (var(0)?, var(1)?);
            match head {
                "=" => Formula::Eq(x, y),
                "in" => Formula::In(x, y),
                _ => Formula::IdLess(x, y),
            }
        }
        "not" => {
            arity(1)?;
            Formula::not(sub(0)?)
        }
        "and" | "or" => {
            let parts = (0..args.len()).map(sub).collect::<Result<Vec<_>, _>>()?;
            if head == "and" {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        "implies" => {
            arity(2)?;
            Formula::implies(sub(0)?, sub(1)?)
        }
        "exists" | "forall" | "exists-set" | "forall-set" => {
            arity(2)?;
            let (v, body) = (var(0)?, Box::new(sub(1)?));
            match head {
                "exists" => Formula::Exists(v, body),
                "forall" => Formula::Forall(v, body),
                "exists-set" => Formula::ExistsSet(v, body),
                _ => Formula::ForallSet(v, body),
            }
        }
        other => return Err(node.error(format!("unknown formula form {other:?}"))),
    })
}

/// Limits for [`evaluate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EvalBudget {
    /// Largest universe over which set quantifiers are enumerated.
    pub max_set_universe: usize,
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget { max_set_universe: 20 }
    }
}

#[derive(Debug)]
enum Op {
    Const(bool),
    Atom(usize, Vec<usize>),
    Eq(usize, usize),
    In(usize, usize),
    IdLess(usize, usize),
    Not(Box<Op>),
    And(Vec<Op>),
    Or(Vec<Op>),
    Implies(Box<Op>, Box<Op>),
    Exists(usize, Box<Op>),
    Forall(usize, Box<Op>),
    ExistsSet(usize, Box<Op>),
    ForallSet(usize, Box<Op>),
}

struct Compiler<'a> {
    structure: &'a Structure,
    points: Vec<String>,
    sets: Vec<String>,
    uses_sets: bool,
}

impl Compiler<'_> {
    fn point(&self, v: &str) -> Result<usize, LogicError> {
        if let Some(i) = self.points.iter().rposition(|p| p == v) {
            return Ok(i);
        }
        if self.sets.iter().any(|s| s == v) {
            return Err(LogicError::SortClash(v.to_string()));
        }
        Err(LogicError::Unbound(v.to_string()))
    }

    fn set(&self, v: &str) -> Result<usize, LogicError> {
        if let Some(i) = self.sets.iter().rposition(|s| s == v) {
            return Ok(i);
        }
        if self.points.iter().any(|p| p == v) {
            return Err(LogicError::SortClash(v.to_string()));
        }
        Err(LogicError::Unbound(v.to_string()))
    }

    fn compile(&mut self, f: &Formula) -> Result<Op, LogicError> {
        Ok(match f {
            Formula::True => Op::Const(true),
            Formula::False => Op::Const(false),
            Formula::Atom { rel, args } => {
                let vocab = self.structure.vocab();
                let r = vocab.index_of(rel).ok_or_else(|| LogicError::UnknownRelation(rel.clone()))?;
                let expected = vocab.relations()[r].arity;
                if expected != args.len() {
                    return Err(LogicError::Arity { rel: rel.clone(), expected, got: args.len() });
                }
                Op::Atom(r, args.iter().map(|a| self.point(a)).collect::<Result<_, _>>()?)
            }
            Formula::Eq(x, y) => Op::Eq(self.point(x)?, self.point(y)?),
            Formula::IdLess(x, y) => Op::IdLess(self.point(x)?, self.point(y)?),
            Formula::In(x, s) => {
                self.uses_sets = true;
                Op::In(self.point(x)?, self.set(s)?)
            }
            Formula::Not(g) => Op::Not(Box::new(self.compile(g)?)),
            Formula::And(gs) => Op::And(gs.iter().map(|g| self.compile(g)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Op::Or(gs.iter().map(|g| self.compile(g)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => Op::Implies(Box::new(self.compile(a)?), Box::new(self.compile(b)?)),
            Formula::Exists(v, g) | Formula::Forall(v, g) => {
                self.points.push(v.clone());
                let slot = self.points.len() - 1;
                let body = Box::new(self.compile(g)?);
                self.points.pop();
                if matches!(f, Formula::Exists(..)) {
                    Op::Exists(slot, body)
                } else {
                    Op::Forall(slot, body)
                }
            }
            Formula::ExistsSet(v, g) | Formula::ForallSet(v, g) => {
                self.uses_sets = true;
                self.sets.push(v.clone());
                let slot = self.sets.len() - 1;
                let body = Box::new(self.compile(g)?);
                self.sets.pop();
                if matches!(f, Formula::ExistsSet(..)) {
                    Op::ExistsSet(slot, body)
                } else {
                    Op::ForallSet(slot, body)
                }
            }
        })
    }
}

struct Env<'a> {
    dense: &'a Dense,
    ids: &'a [Elem],
    points: Vec<u32>,
    sets: Vec<u64>,
    scratch: Vec<u32>,
}

impl Env<'_> {
    fn eval(&mut self, op: &Op) -> bool {
        match op {
            Op::Const(b) => *b,
            Op::Atom(r, slots) => {
                let mut tuple = std::mem::take(&mut self.scratch);
                tuple.clear();
                tuple.extend(slots.iter().map(|&s| self.points[s]));
                let out = self.dense.holds(*r, &tuple);
                self.scratch = tuple;
                out
            }
            Op::Eq(x, y) => self.points[*x] == self.points[*y],
            Op::IdLess(x, y) => self.ids[self.points[*x] as usize] < self.ids[self.points[*y] as usize],
            Op::In(x, s) => self.sets[*s] >> self.points[*x] & 1 == 1,
            Op::Not(g) => !self.eval(g),
            Op::And(gs) => gs.iter().all(|g| self.eval(g)),
            Op::Or(gs) => gs.iter().any(|g| self.eval(g)),
            Op::Implies(a, b) => !self.eval(a) || self.eval(b),
            Op::Exists(slot, g) | Op::Forall(slot, g) => {
                let want = matches!(op, Op::Exists(..));
                debug_assert_eq!(*slot, self.points.len());
                let mut result = !want;
                for e in 0..self.dense.n as u32 {
                    self.points.push(e);
                    let v = self.eval(g);
                    self.points.pop();
                    if v == want {
                        result = want;
                        break;
                    }
                }
                result
            }
            Op::ExistsSet(slot, g) | Op::ForallSet(slot, g) => {
                let want = matches!(op, Op::ExistsSet(..));
                debug_assert_eq!(*slot, self.sets.len());
                let mut result = !want;
                for mask in 0..(1u64 << self.dense.n) {
                    self.sets.push(mask);
                    let v = self.eval(g);
                    self.sets.pop();
                    if v == want {
                        result = want;
                        break;
                    }
                }
                result
            }
        }
    }
}

/// Evaluates `phi` on `a` under `asg` with the default budget.
pub fn evaluate(a: &Structure, phi: &Formula, asg: &Assignment) -> Result<bool, LogicError> {
    evaluate_with(a, phi, asg, &EvalBudget::default())
}

pub fn evaluate_with(a: &Structure, phi: &Formula, asg: &Assignment, budget: &EvalBudget) -> Result<bool, LogicError> {
    let (free_points, free_sets) = phi.free_vars();
    let mut compiler = Compiler { structure: a, points: Vec::new(), sets: Vec::new(), uses_sets: false };
    let mut point_vals = Vec::new();
    for v in &free_points {
        let e = *asg.points.get(v).ok_or_else(|| LogicError::Unbound(v.clone()))?;
        let idx = a.index_of(e).ok_or_else(|| LogicError::OutsideUniverse(v.clone()))?;
        compiler.points.push(v.clone());
        point_vals.push(idx as u32);
    }
    let mut set_vals = Vec::new();
    for v in &free_sets {
        let elems = asg.sets.get(v).ok_or_else(|| LogicError::Unbound(v.clone()))?;
        let mut mask = 0u64;
        for &e in elems {
            let idx = a.index_of(e).ok_or_else(|| LogicError::OutsideUniverse(v.clone()))?;
            mask |= 1 << idx;
        }
        compiler.sets.push(v.clone());
        set_vals.push(mask);
    }
    let op = compiler.compile(phi)?;
    if compiler.uses_sets {
        let limit = budget.max_set_universe.min(63);
        if a.size() > limit {
            return Err(LogicError::BudgetExceeded { size: a.size(), budget: limit });
        }
    }
    let dense = Dense::new(a);
    let mut env = Env { dense: &dense, ids: a.universe(), points: point_vals, sets: set_vals, scratch: Vec::new() };
    Ok(env.eval(&op))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;
    use std::sync::Arc;

    fn word(letters: &str) -> Structure {
        let vocab = Arc::new(Vocabulary::new([("<=", 2), ("P_a", 1), ("P_b", 1)]).unwrap());
        let n = letters.len() as u32;
        let order = (0..n).flat_map(|i| (i..n).map(move |j| vec![i, j])).collect();
        let pick = |c| letters.chars().enumerate().filter(|&(_, l)| l == c).map(|(i, _)| vec![i as u32]).collect();
        Structure::new(vocab, 0..n, [("<=", order), ("P_a", pick('a')), ("P_b", pick('b'))]).unwrap()
    }

    fn graph(n: u32, edges: &[(u32, u32)]) -> Structure {
        let vocab = Arc::new(Vocabulary::new([("E", 2)]).unwrap());
        let tuples = edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]).collect();
        Structure::new(vocab, 1..=n, [("E", tuples)]).unwrap()
    }

    #[test]
    fn rank_is_per_path_maximum() {
        assert_eq!(Formula::atom("E", &["x", "y"]).rank(), 0);
        let f = parse_formula("(exists x (forall y (atom E x y)))").unwrap();
        assert_eq!(f.rank(), 2);
        let g = parse_formula("(and (exists x (atom P x)) (exists y (exists z (atom E y z))))").unwrap();
        assert_eq!(g.rank(), 2);
        let h = parse_formula("(exists-set X (exists x (in x X)))").unwrap();
        assert_eq!(h.rank(), 2);
        assert_eq!(h.logic(), Logic::Mso);
    }

    #[test]
    fn evaluates_examples() {
        let any = parse_formula("(exists x (= x x))").unwrap();
        assert!(evaluate(&graph(1, &[]), &any, &Assignment::new()).unwrap());
        let first_a = parse_formula("(exists x (and (atom P_a x) (forall y (atom <= x y))))").unwrap();
        assert!(evaluate(&word("ab"), &first_a, &Assignment::new()).unwrap());
        assert!(!evaluate(&word("ba"), &first_a, &Assignment::new()).unwrap());
        let edge = parse_formula("(exists x (exists y (atom E x y)))").unwrap();
        assert!(evaluate(&graph(2, &[(1, 2)]), &edge, &Assignment::new()).unwrap());
        assert!(!evaluate(&graph(2, &[]), &edge, &Assignment::new()).unwrap());
    }

    #[test]
    fn mso_parity_of_two_element_set() {
        // Some set contains exactly one of two adjacent vertices.
        let f =
            parse_formula("(exists-set X (exists x (exists y (and (atom E x y) (in x X) (not (in y X))))))").unwrap();
        assert!(evaluate(&graph(2, &[(1, 2)]), &f, &Assignment::new()).unwrap());
        assert!(!evaluate(&graph(2, &[]), &f, &Assignment::new()).unwrap());
    }

    #[test]
    fn free_variables_and_errors() {
        let f = parse_formula("(atom E x y)").unwrap();
        let k2 = graph(2, &[(1, 2)]);
        assert!(evaluate(&k2, &f, &Assignment::new().point("x", 1).point("y", 2)).unwrap());
        assert_eq!(evaluate(&k2, &f, &Assignment::new().point("x", 1)), Err(LogicError::Unbound("y".into())));
        let g = parse_formula("(exists x (atom F x))").unwrap();
        assert!(matches!(evaluate(&k2, &g, &Assignment::new()), Err(LogicError::UnknownRelation(_))));
        let big = graph(30, &[]);
        let h = parse_formula("(exists-set X true)").unwrap();
        assert!(matches!(evaluate(&big, &h, &Assignment::new()), Err(LogicError::BudgetExceeded { .. })));
        let s = parse_formula("(in x X)").unwrap();
        assert!(evaluate(&k2, &s, &Assignment::new().point("x", 2).set("X", [2])).unwrap());
    }

    #[test]
    fn sentences_ignore_assignment() {
        let f = parse_formula("(forall x (exists y (atom E x y)))").unwrap();
        let k2 = graph(2, &[(1, 2)]);
        let a = evaluate(&k2, &f, &Assignment::new()).unwrap();
        let b = evaluate(&k2, &f, &Assignment::new().point("z", 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn format_round_trip() {
        for text in [
            "true",
            "(not (= x y))",
            "(implies (atom E x y) (or (atom P x) false))",
            "(forall-set X (exists x (and (in x X) (id< x y))))",
            "(atom \"odd name\" x)",
        ] {
            let f = parse_formula(text).unwrap();
            assert_eq!(f.to_string(), text);
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        }
        assert!(parse_formula("(exists x)").is_err());
        assert!(parse_formula("(frobnicate x)").is_err());
        assert!(parse_formula("x").is_err());
    }

    #[test]
    fn rename_respects_binding() {
        let f = parse_formula("(and (atom E x y) (exists x (atom E x y)))").unwrap();
        let map = BTreeMap::from([("x".to_string(), "u".to_string()), ("y".to_string(), "v".to_string())]);
        assert_eq!(f.rename_free(&map).to_string(), "(and (atom E u v) (exists x (atom E x v)))");
    }
}
