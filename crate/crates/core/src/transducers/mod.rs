//! Quantifier-free translation schemes.
//!
//! A scheme of dimension `t` maps a structure `A` to the structure `Ξ*(A)`
//! on the `t`-tuples satisfying the domain formula, and maps formulas back
//! along `Ξ#` so that `A ⊨ Ξ#(φ)` iff `Ξ*(A) ⊨ φ`.

mod builtin;
mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::equivalence::EquivError;
use crate::logic::{formula_from_sexpr, Formula, LogicError};
use crate::sexpr::{self, Spanned, SyntaxError};
use crate::structure::{parse_vocab, Elem, Structure, StructureError, Vocabulary};

pub use builtin::{builtin, OperationDef, BUILTIN_NAMES};
pub use checks::{
    check_substructure_preservation, check_transfer, ebsp_through_scheme, PreservationReport, SchemeWitness,
    SchemeWitnessError, TransferReport, TransferVerdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("scheme formula for {0} is not quantifier-free")]
    NotQuantifierFree(String),
    #[error("{what} of a dimension-{dim} scheme needs a multiple of {dim} variables, got {got}")]
    VarCount { what: String, dim: usize, got: usize },
    #[error("variable {var} in the formula for {what} is not among its variables")]
    StrayVariable { what: String, var: String },
    #[error("relation {0} defined twice")]
    DuplicateRelation(String),
    #[error("scheme reads {rel} with arity {expected}, structure has {found:?}")]
    SourceMismatch { rel: String, expected: usize, found: Option<usize> },
    #[error("set quantifiers need a dimension-1 scheme")]
    MsoDimension,
    #[error("the image has an empty universe")]
    EmptyImage,
    #[error("scheme application needs {size} evaluations, budget is {budget}")]
    BudgetExceeded { size: u128, budget: u128 },
    #[error("unknown operation {0}")]
    UnknownOperation(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
}

/// Defining formula of one target relation. `vars` has `t · arity` entries;
/// block `i` is the tuple standing for argument `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeRelation {
    pub name: String,
    pub vars: Vec<String>,
    pub body: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationScheme {
    name: String,
    dim: usize,
    source: Option<Arc<Vocabulary>>,
    domain_vars: Vec<String>,
    domain: Formula,
    relations: Vec<SchemeRelation>,
    target: Arc<Vocabulary>,
}

/// `Ξ*(A)` with the source tuple behind each element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeImage {
    pub structure: Structure,
    pub tuples: Vec<Vec<Elem>>,
}

impl SchemeImage {
    /// Image element of a source tuple.
    pub fn element_of(&self, tuple: &[Elem]) -> Option<Elem> {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).ok().map(|i| i as Elem)
    }
}

/// Upper bound on formula evaluations per application.
pub const DEFAULT_APPLY_BUDGET: u128 = 1 << 26;

impl TranslationScheme {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        source: Option<Arc<Vocabulary>>,
        domain_vars: Vec<String>,
        domain: Formula,
        relations: Vec<SchemeRelation>,
    ) -> Result<Self, SchemeError> {
        if dim == 0 {
            return Err(SchemeError::Invalid("dimension must be at least 1".into()));
        }
        if domain_vars.len() != dim {
            return Err(SchemeError::VarCount { what: "the domain".into(), dim, got: domain_vars.len() });
        }
        check_body("the domain", &domain_vars, &domain)?;
        let mut target = Vocabulary::default();
        for r in &relations {
            if r.vars.is_empty() || r.vars.len() % dim != 0 {
                return Err(SchemeError::VarCount { what: r.name.clone(), dim, got: r.vars.len() });
            }
            check_body(&r.name, &r.vars, &r.body)?;
            target
                .push(r.name.clone(), r.vars.len() / dim)
                .map_err(|_| SchemeError::DuplicateRelation(r.name.clone()))?;
        }
        let scheme = TranslationScheme {
            name: name.into(),
            dim,
            source,
            domain_vars,
            domain,
            relations,
            target: Arc::new(target),
        };
        if let Some(src) = &scheme.source {
            scheme.check_source(src)?;
        }
        Ok(scheme)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn source(&self) -> Option<&Arc<Vocabulary>> {
        self.source.as_ref()
    }

    pub fn target(&self) -> &Arc<Vocabulary> {
        &self.target
    }

    pub fn domain(&self) -> (&[String], &Formula) {
        (&self.domain_vars, &self.domain)
    }

    pub fn relations(&self) -> &[SchemeRelation] {
        &self.relations
    }

    /// Every source relation the formulas read, with its arity.
    fn reads(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        collect_atoms(&self.domain, &mut out);
        for r in &self.relations {
            collect_atoms(&r.body, &mut out);
        }
        out
    }

    fn check_source(&self, vocab: &Vocabulary) -> Result<(), SchemeError> {
        for (rel, arity) in self.reads() {
            let found = vocab.get(&rel).map(|r| r.arity);
            if found != Some(arity) {
                return Err(SchemeError::SourceMismatch { rel, expected: arity, found });
            }
        }
        Ok(())
    }

    /// `Ξ*(A)`. Elements are the satisfying tuples in lexicographic order,
    /// renumbered from 0.
    pub fn apply(&self, a: &Structure) -> Result<SchemeImage, SchemeError> {
        self.apply_with(a, DEFAULT_APPLY_BUDGET)
    }

    pub fn apply_with(&self, a: &Structure, budget: u128) -> Result<SchemeImage, SchemeError> {
        self.check_source(a.vocab())?;
        let n = a.size() as u128;
        let domain_work = n.saturating_pow(self.dim as u32);
        if domain_work > budget {
            return Err(SchemeError::BudgetExceeded { size: domain_work, budget });
        }
        let domain = Qf::compile(&self.domain, &self.domain_vars, a.vocab());
        let universe = a.universe();
        let mut tuples = Vec::new();
        let mut idx = vec![0usize; self.dim];
        let mut tuple: Vec<Elem> = vec![0; self.dim];
        if !universe.is_empty() {
            loop {
                for (slot, &i) in tuple.iter_mut().zip(&idx) {
                    *slot = universe[i];
                }
                if domain.eval(a, &tuple) {
                    tuples.push(tuple.clone());
                }
                if !advance(&mut idx, universe.len()) {
                    break;
                }
            }
        }
        if tuples.is_empty() {
            return Err(SchemeError::EmptyImage);
        }
        let size = tuples.len();
        let mut tables = Vec::new();
        for r in &self.relations {
            let arity = r.vars.len() / self.dim;
            let work = (size as u128).saturating_pow(arity as u32);
            if work > budget {
                return Err(SchemeError::BudgetExceeded { size: work, budget });
            }
            let body = Qf::compile(&r.body, &r.vars, a.vocab());
            let mut rows = Vec::new();
            let mut idx = vec![0usize; arity];
            let mut flat: Vec<Elem> = vec![0; r.vars.len()];
            loop {
                for (k, &i) in idx.iter().enumerate() {
                    flat[k * self.dim..(k + 1) * self.dim].copy_from_slice(&tuples[i]);
                }
                if body.eval(a, &flat) {
                    rows.push(idx.iter().map(|&i| i as Elem).collect());
                }
                if !advance(&mut idx, size) {
                    break;
                }
            }
            tables.push((r.name.clone(), rows));
        }
        let structure = Structure::new(self.target.clone(), 0..size as Elem, tables)?;
        Ok(SchemeImage { structure, tuples })
    }

    /// Names standing for variable `x` of the target side.
    pub fn expand_var(&self, x: &str) -> Vec<String> {
        if self.dim == 1 {
            vec![x.to_string()]
        } else {
            (1..=self.dim).map(|j| format!("{x}.{j}")).collect()
        }
    }

    /// `Ξ#(φ)`. Free point variables `x` become `x.1..x.t` (unchanged when
    /// `t = 1`); set variables are kept and range over source subsets.
    pub fn apply_formula(&self, phi: &Formula) -> Result<Formula, SchemeError> {
        if self.dim > 1 && uses_sets(phi) {
            return Err(SchemeError::MsoDimension);
        }
        self.translate(phi)
    }

    fn instantiate(&self, vars: &[String], body: &Formula, args: &[&String]) -> Formula {
        let mut map = BTreeMap::new();
        for (k, arg) in args.iter().enumerate() {
            for (j, name) in self.expand_var(arg).into_iter().enumerate() {
                map.insert(vars[k * self.dim + j].clone(), name);
            }
        }
        body.rename_free(&map)
    }

    fn translate(&self, phi: &Formula) -> Result<Formula, SchemeError> {
        Ok(match phi {
            Formula::True | Formula::False => phi.clone(),
            Formula::Atom { rel, args } => {
                let r = self
                    .relations
                    .iter()
                    .find(|r| &r.name == rel)
                    .ok_or_else(|| LogicError::UnknownRelation(rel.clone()))?;
                let arity = r.vars.len() / self.dim;
                if args.len() != arity {
                    return Err(LogicError::Arity { rel: rel.clone(), expected: arity, got: args.len() }.into());
                }
                self.instantiate(&r.vars, &r.body, &args.iter().collect::<Vec<_>>())
            }
            Formula::Eq(x, y) => {
                let (xs, ys) = (self.expand_var(x), self.expand_var(y));
                conj(xs.into_iter().zip(ys).map(|(a, b)| Formula::Eq(a, b)).collect())
            }
            Formula::IdLess(x, y) => {
                let (xs, ys) = (self.expand_var(x), self.expand_var(y));
                let mut cases = Vec::new();
                for j in 0..self.dim {
                    let mut parts: Vec<Formula> = (0..j).map(|i| Formula::Eq(xs[i].clone(), ys[i].clone())).collect();
                    parts.push(Formula::IdLess(xs[j].clone(), ys[j].clone()));
                    cases.push(conj(parts));
                }
                if cases.len() == 1 {
                    cases.pop().unwrap()
                } else {
                    Formula::Or(cases)
                }
            }
            Formula::In(..) => phi.clone(),
            Formula::Not(g) => Formula::not(self.translate(g)?),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| self.translate(g)).collect::<Result<_, _>>()?),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| self.translate(g)).collect::<Result<_, _>>()?),
            Formula::Implies(a, b) => Formula::implies(self.translate(a)?, self.translate(b)?),
            Formula::Exists(x, g) | Formula::Forall(x, g) => {
                let guard = self.instantiate(&self.domain_vars, &self.domain, &[x]);
                let inner = self.translate(g)?;
                let body = if matches!(phi, Formula::Exists(..)) {
                    Formula::and([guard, inner])
                } else {
                    Formula::implies(guard, inner)
                };
                self.expand_var(x).into_iter().rev().fold(body, |acc, v| {
                    if matches!(phi, Formula::Exists(..)) {
                        Formula::exists(v, acc)
                    } else {
                        Formula::forall(v, acc)
                    }
                })
            }
            Formula::ExistsSet(x, g) => Formula::exists_set(x.clone(), self.translate(g)?),
            Formula::ForallSet(x, g) => Formula::forall_set(x.clone(), self.translate(g)?),
        })
    }

    /// Text form, readable by [`parse_scheme`].
    pub fn format(&self) -> String {
        self.to_string()
    }
}

fn conj(mut parts: Vec<Formula>) -> Formula {
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Formula::And(parts)
    }
}

fn uses_sets(phi: &Formula) -> bool {
    match phi {
        Formula::In(..) | Formula::ExistsSet(..) | Formula::ForallSet(..) => true,
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => uses_sets(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().any(uses_sets),
        Formula::Implies(a, b) => uses_sets(a) || uses_sets(b),
        _ => false,
    }
}

fn check_body(what: &str, vars: &[String], body: &Formula) -> Result<(), SchemeError> {
    if !body.is_quantifier_free() || uses_sets(body) {
        return Err(SchemeError::NotQuantifierFree(what.to_string()));
    }
    let (points, _) = body.free_vars();
    if let Some(var) = points.into_iter().find(|v| !vars.contains(v)) {
        return Err(SchemeError::StrayVariable { what: what.to_string(), var });
    }
    Ok(())
}

fn collect_atoms(phi: &Formula, out: &mut BTreeMap<String, usize>) {
    match phi {
        Formula::Atom { rel, args } => {
            out.insert(rel.clone(), args.len());
        }
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => collect_atoms(g, out),
        Formula::ExistsSet(_, g) | Formula::ForallSet(_, g) => collect_atoms(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_atoms(g, out)),
        Formula::Implies(a, b) => {
            collect_atoms(a, out);
            collect_atoms(b, out);
        }
        _ => {}
    }
}

/// Odometer step over `base`-ary digits, last digit fastest.
fn advance(idx: &mut [usize], base: usize) -> bool {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// A quantifier-free formula with variables resolved to slots.
enum Qf {
    Const(bool),
    Atom(usize, Vec<usize>),
    Eq(usize, usize),
    Less(usize, usize),
    Not(Box<Qf>),
    And(Vec<Qf>),
    Or(Vec<Qf>),
    Implies(Box<Qf>, Box<Qf>),
}

impl Qf {
    /// Variables and relations were checked when the scheme was built.
    fn compile(phi: &Formula, vars: &[String], vocab: &Vocabulary) -> Qf {
        let slot = |v: &String| vars.iter().position(|x| x == v).expect("checked variable");
        match phi {
            Formula::True => Qf::Const(true),
            Formula::False => Qf::Const(false),
            Formula::Atom { rel, args } => {
                Qf::Atom(vocab.index_of(rel).expect("checked relation"), args.iter().map(slot).collect())
            }
            Formula::Eq(x, y) => Qf::Eq(slot(x), slot(y)),
            Formula::IdLess(x, y) => Qf::Less(slot(x), slot(y)),
            Formula::Not(g) => Qf::Not(Box::new(Qf::compile(g, vars, vocab))),
            Formula::And(gs) => Qf::And(gs.iter().map(|g| Qf::compile(g, vars, vocab)).collect()),
            Formula::Or(gs) => Qf::Or(gs.iter().map(|g| Qf::compile(g, vars, vocab)).collect()),
            Formula::Implies(a, b) => {
                Qf::Implies(Box::new(Qf::compile(a, vars, vocab)), Box::new(Qf::compile(b, vars, vocab)))
            }
            _ => unreachable!("scheme formulas are quantifier-free"),
        }
    }

    fn eval(&self, a: &Structure, env: &[Elem]) -> bool {
        match self {
            Qf::Const(b) => *b,
            Qf::Atom(r, args) => {
                let tuple: Vec<Elem> = args.iter().map(|&i| env[i]).collect();
                a.holds(*r, &tuple)
            }
            Qf::Eq(x, y) => env[*x] == env[*y],
            Qf::Less(x, y) => env[*x] < env[*y],
            Qf::Not(g) => !g.eval(a, env),
            Qf::And(gs) => gs.iter().all(|g| g.eval(a, env)),
            Qf::Or(gs) => gs.iter().any(|g| g.eval(a, env)),
            Qf::Implies(p, q) => !p.eval(a, env) || q.eval(a, env),
        }
    }
}

impl fmt::Display for TranslationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars = |f: &mut fmt::Formatter<'_>, vs: &[String]| -> fmt::Result {
            f.write_str("(")?;
            for (i, v) in vs.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                sexpr::write_atom(f, v)?;
            }
            f.write_str(")")
        };
        f.write_str("(scheme (name ")?;
        sexpr::write_atom(f, &self.name)?;
        write!(f, ") (dim {})", self.dim)?;
        if let Some(src) = &self.source {
            f.write_str(" (source (vocab")?;
            for r in src.relations() {
                f.write_str(" (")?;
                sexpr::write_atom(f, &r.name)?;
                write!(f, " {})", r.arity)?;
            }
            f.write_str("))")?;
        }
        f.write_str(" (xi ")?;
        vars(f, &self.domain_vars)?;
        write!(f, " {})", self.domain)?;
        for r in &self.relations {
            f.write_str(" (rel ")?;
            sexpr::write_atom(f, &r.name)?;
            f.write_str(" ")?;
            vars(f, &r.vars)?;
            write!(f, " {})", r.body)?;
        }
        f.write_str(")")
    }
}

/// Parses `(scheme (dim t) [(name N)] [(source (vocab ...))] (xi (x…) φ) (rel R (x…) φ)…)`.
pub fn parse_scheme(text: &str) -> Result<TranslationScheme, SchemeError> {
    scheme_from_sexpr(&sexpr::parse(text)?)
}

fn scheme_from_sexpr(node: &Spanned) -> Result<TranslationScheme, SchemeError> {
    let (head, items) = node.expect_form("(scheme ...)")?;
    if head != "scheme" {
        return Err(node.error("expected (scheme ...)").into());
    }
    let var_list = |n: &Spanned| -> Result<Vec<String>, SyntaxError> {
        n.expect_list("variable list")?.iter().map(|v| v.expect_atom("variable").map(str::to_string)).collect()
    };
    let (mut name, mut dim, mut source, mut domain, mut relations) =
        ("scheme".to_string(), None, None, None, Vec::new());
    for item in items {
        let (key, rest) = item.expect_form("scheme clause")?;
        match (key, rest) {
            ("name", [n]) => name = n.expect_atom("scheme name")?.to_string(),
            ("dim", [d]) => {
                let text = d.expect_atom("dimension")?;
                dim = Some(text.parse::<usize>().map_err(|_| d.error("bad dimension"))?);
            }
            ("source", [v]) => source = Some(Arc::new(parse_vocab(v)?)),
            ("xi", [vs, body]) => domain = Some((var_list(vs)?, formula_from_sexpr(body)?)),
            ("rel", [r, vs, body]) => relations.push(SchemeRelation {
                name: r.expect_atom("relation name")?.to_string(),
                vars: var_list(vs)?,
                body: formula_from_sexpr(body)?,
            }),
            _ => return Err(item.error(format!("malformed scheme clause {key:?}")).into()),
        }
    }
    let dim = dim.ok_or_else(|| node.error("scheme needs (dim t)"))?;
    let (domain_vars, domain) = domain.ok_or_else(|| node.error("scheme needs (xi (vars) formula)"))?;
    TranslationScheme::new(name, dim, source, domain_vars, domain, relations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{evaluate, parse_formula, Assignment};
    use crate::structure::{isomorphic, parse_structure};

    fn k2() -> Structure {
        parse_structure("(structure (vocab (E 2)) (universe 0 1) (rel E (0 1) (1 0)))").unwrap()
    }

    #[test]
    fn complement_is_an_involution() {
        let c = builtin("complement", None).unwrap();
        let once = c.apply(&[&k2()]).unwrap();
        assert!(once.table_by_name("E").unwrap().is_empty());
        let twice = c.apply(&[&once]).unwrap();
        assert!(isomorphic(&twice, &k2(), 100).unwrap());
    }

    #[test]
    fn parse_and_format_round_trip() {
        let text = "(scheme (dim 2) (xi (x y) (not (= x y))) (rel E (x1 x2 y1 y2) (and (= x1 y2) (= x2 y1))))";
        let s = parse_scheme(text).unwrap();
        assert_eq!(parse_scheme(&s.format()).unwrap(), s);
        assert_eq!(s.target().get("E").unwrap().arity, 2);
        let img = s.apply(&k2()).unwrap();
        assert_eq!(img.tuples, vec![vec![0, 1], vec![1, 0]]);
        assert!(img.structure.holds(0, &[0, 1]));
    }

    #[test]
    fn quantified_and_malformed_schemes_are_rejected() {
        let q = "(scheme (dim 1) (xi (x) (exists y (atom E x y))) (rel E (x y) (atom E x y)))";
        assert!(matches!(parse_scheme(q), Err(SchemeError::NotQuantifierFree(_))));
        let stray = "(scheme (dim 1) (xi (x) true) (rel E (x y) (atom E x z)))";
        assert!(matches!(parse_scheme(stray), Err(SchemeError::StrayVariable { .. })));
        let odd = "(scheme (dim 2) (xi (x y) true) (rel E (x y z) true))";
        assert!(matches!(parse_scheme(odd), Err(SchemeError::VarCount { .. })));
        let none = "(scheme (dim 1) (xi (x) false))";
        assert_eq!(parse_scheme(none).unwrap().apply(&k2()), Err(SchemeError::EmptyImage));
    }

    #[test]
    fn formula_map_is_adjoint_on_a_small_case() {
        let s = parse_scheme("(scheme (dim 2) (xi (x y) (not (= x y))) (rel E (x1 x2 y1 y2) (= x2 y1)))").unwrap();
        let a = parse_structure("(structure (vocab (E 2)) (universe 0 1 2) (rel E (0 1)))").unwrap();
        let img = s.apply(&a).unwrap().structure;
        for text in [
            "(exists u (exists v (atom E u v)))",
            "(forall u (exists v (and (atom E u v) (not (= u v)))))",
            "(exists u (forall v (or (id< u v) (= u v))))",
            "(forall u (forall v (implies (atom E u v) (not (atom E v u)))))",
        ] {
            let phi = parse_formula(text).unwrap();
            let back = s.apply_formula(&phi).unwrap();
            assert!(back.rank() <= 2 * phi.rank());
            assert_eq!(
                evaluate(&a, &back, &Assignment::new()).unwrap(),
                evaluate(&img, &phi, &Assignment::new()).unwrap(),
                "{text}"
            );
        }
        let mso = parse_formula("(exists-set X (exists u (in u X)))").unwrap();
        assert_eq!(s.apply_formula(&mso), Err(SchemeError::MsoDimension));
    }
}
