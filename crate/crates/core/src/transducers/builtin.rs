use std::sync::Arc;

use super::{SchemeError, SchemeImage, SchemeRelation, TranslationScheme};
use crate::logic::{parse_formula, Formula};
use crate::structure::{disjoint_sum, Elem, Structure, Vocabulary};
use crate::trees::ANCESTOR;

/// An n-ary operation `O(A_1, …, A_n) = Ξ*(A_1 ⊕ … ⊕ A_n)` for a scheme over
/// the base vocabulary plus the summand markers `P_1..P_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationDef {
    pub name: String,
    pub arity: usize,
    pub base: Arc<Vocabulary>,
    pub scheme: TranslationScheme,
    /// Quantifier-free schemes preserve substructures.
    pub monotone: bool,
    /// Rank-`t·m` equivalent arguments give rank-`m` equivalent results.
    pub equivalence_preserving: bool,
}

/// `(argument, element)` pairs behind one image element.
pub type Provenance = Vec<(usize, Elem)>;

pub const BUILTIN_NAMES: [&str; 10] = [
    "complement",
    "transpose",
    "line-graph",
    "disjoint-union",
    "join",
    "ordered-sum",
    "cartesian",
    "tensor",
    "lexicographic",
    "strong",
];

impl OperationDef {
    /// Dimension 1.
    pub fn sum_like(&self) -> bool {
        self.scheme.dim() == 1
    }

    pub fn product_like(&self) -> bool {
        self.scheme.dim() >= 2
    }

    pub fn apply(&self, parts: &[&Structure]) -> Result<Structure, SchemeError> {
        Ok(self.apply_traced(parts)?.0.structure)
    }

    /// The image together with, per element, the `(argument, element)`
    /// pairs its source tuple is made of.
    pub fn apply_traced(&self, parts: &[&Structure]) -> Result<(SchemeImage, Vec<Provenance>), SchemeError> {
        if parts.len() != self.arity {
            return Err(SchemeError::Invalid(format!(
                "{} takes {} arguments, got {}",
                self.name,
                self.arity,
                parts.len()
            )));
        }
        if parts.iter().any(|p| **p.vocab() != *self.base) {
            return Err(SchemeError::Invalid(format!("{} expects arguments over {:?}", self.name, self.base)));
        }
        let (sum, origin) = disjoint_sum(parts)?;
        let image = self.scheme.apply(&sum)?;
        let trace = image.tuples.iter().map(|t| t.iter().map(|&e| origin[e as usize]).collect()).collect();
        Ok((image, trace))
    }
}

fn f(text: &str) -> Formula {
    parse_formula(text).expect("built-in formulas parse")
}

fn vars(names: &str) -> Vec<String> {
    names.split_whitespace().map(str::to_string).collect()
}

fn rel(name: &str, names: &str, body: &str) -> SchemeRelation {
    SchemeRelation { name: name.into(), vars: vars(names), body: f(body) }
}

fn graph_vocab() -> Arc<Vocabulary> {
    Arc::new(Vocabulary::new([("E", 2)]).expect("one relation"))
}

fn markers(base: &Vocabulary, n: usize) -> Arc<Vocabulary> {
    let mut v = base.clone();
    for i in 1..=n {
        let name = v.fresh_name(&format!("P_{i}"));
        v.push(name, 1).expect("fresh name");
    }
    Arc::new(v)
}

/// Looks up a built-in operation. Graph operations need the base `{E}`;
/// `disjoint-union` works over any base and `ordered-sum` over any base
/// with a binary `<=`. The base defaults to `{E}`.
pub fn builtin(name: &str, base: Option<&Arc<Vocabulary>>) -> Result<OperationDef, SchemeError> {
    let base = base.cloned().unwrap_or_else(graph_vocab);
    let is_graph = *base == *graph_vocab();
    let need_graph = || {
        if is_graph {
            Ok(())
        } else {
            Err(SchemeError::Invalid(format!("{name} is defined for graphs over {{E}}")))
        }
    };
    let (arity, dim, domain_vars, domain, relations) = match name {
        "complement" => {
            need_graph()?;
            (1, 1, "x", "true", vec![rel("E", "x y", "(and (not (atom E x y)) (not (= x y)))")])
        }
        "transpose" => {
            need_graph()?;
            (1, 1, "x", "true", vec![rel("E", "x y", "(atom E y x)")])
        }
        "line-graph" => {
            need_graph()?;
            let shared = "(or (= a1 b1) (= a1 b2) (= a2 b1) (= a2 b2))";
            let body = format!("(and {shared} (not (and (= a1 b1) (= a2 b2))))");
            (1, 2, "x1 x2", "(and (atom E x1 x2) (id< x1 x2))", vec![rel("E", "a1 a2 b1 b2", &body)])
        }
        "disjoint-union" | "ordered-sum" => {
            if name == "ordered-sum" && base.get(ANCESTOR).map(|r| r.arity) != Some(2) {
                return Err(SchemeError::Invalid("ordered-sum needs a binary <= relation".into()));
            }
            let source = markers(&base, 2);
            let first = &source.relations()[base.len()].name;
            let second = &source.relations()[base.len() + 1].name;
            let before =
                Formula::and([Formula::atom(first.as_str(), &["x1"]), Formula::atom(second.as_str(), &["x2"])]);
            let rels = base
                .relations()
                .iter()
                .map(|r| {
                    let vs: Vec<String> = (1..=r.arity).map(|i| format!("x{i}")).collect();
                    let own = Formula::Atom { rel: r.name.clone(), args: vs.clone() };
                    let body = if name == "ordered-sum" && r.name == ANCESTOR {
                        Formula::or([own, before.clone()])
                    } else {
                        own
                    };
                    SchemeRelation { name: r.name.clone(), vars: vs, body }
                })
                .collect();
            let scheme = TranslationScheme::new(name, 1, Some(source), vars("x"), Formula::True, rels)?;
            return Ok(OperationDef {
                name: name.into(),
                arity: 2,
                base,
                scheme,
                monotone: true,
                equivalence_preserving: true,
            });
        }
        "join" => {
            need_graph()?;
            let body = "(or (atom E x y) (and (atom P_1 x) (atom P_2 y)) (and (atom P_2 x) (atom P_1 y)))";
            (2, 1, "x", "true", vec![rel("E", "x y", body)])
        }
        "cartesian" | "tensor" | "lexicographic" | "strong" => {
            need_graph()?;
            let cart = "(or (and (atom E a1 b1) (= a2 b2)) (and (= a1 b1) (atom E a2 b2)))";
            let tensor = "(and (atom E a1 b1) (atom E a2 b2))";
            let body = match name {
                "cartesian" => cart.to_string(),
                "tensor" => tensor.to_string(),
                "lexicographic" => "(or (atom E a1 b1) (and (= a1 b1) (atom E a2 b2)))".to_string(),
                _ => format!("(or {cart} {tensor})"),
            };
            (2, 2, "x1 x2", "(and (atom P_1 x1) (atom P_2 x2))", vec![rel("E", "a1 a2 b1 b2", &body)])
        }
        other => return Err(SchemeError::UnknownOperation(other.into())),
    };
    let scheme =
        TranslationScheme::new(name, dim, Some(markers(&base, arity)), vars(domain_vars), f(domain), relations)?;
    Ok(OperationDef { name: name.into(), arity, base, scheme, monotone: true, equivalence_preserving: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::{isomorphic, parse_structure};

    fn graph(n: u32, edges: &[(u32, u32)]) -> Structure {
        let tuples = edges.iter().flat_map(|&(a, b)| [vec![a, b], vec![b, a]]).collect();
        Structure::new(graph_vocab(), 0..n, [("E", tuples)]).unwrap()
    }

    fn op(name: &str, parts: &[&Structure]) -> Structure {
        builtin(name, None).unwrap().apply(parts).unwrap()
    }

    #[test]
    fn join_of_two_points_is_an_edge() {
        let k1 = graph(1, &[]);
        assert!(isomorphic(&op("join", &[&k1, &k1]), &graph(2, &[(0, 1)]), 100).unwrap());
        assert!(isomorphic(&op("disjoint-union", &[&k1, &k1]), &graph(2, &[]), 100).unwrap());
    }

    #[test]
    fn transpose_flips_a_directed_edge() {
        let arc = parse_structure("(structure (vocab (E 2)) (universe 0 1) (rel E (0 1)))").unwrap();
        let t = op("transpose", &[&arc]);
        assert!(t.holds(0, &[1, 0]) && !t.holds(0, &[0, 1]));
    }

    #[test]
    fn products_of_small_graphs() {
        let k2 = graph(2, &[(0, 1)]);
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert!(isomorphic(&op("cartesian", &[&k2, &k2]), &c4, 1000).unwrap());
        let two_edges = graph(4, &[(0, 1), (2, 3)]);
        assert!(isomorphic(&op("tensor", &[&k2, &k2]), &two_edges, 1000).unwrap());
        let k4 = graph(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert!(isomorphic(&op("strong", &[&k2, &k2]), &k4, 1000).unwrap());
        assert!(isomorphic(&op("lexicographic", &[&k2, &k2]), &k4, 1000).unwrap());
        let product = builtin("tensor", None).unwrap();
        assert!(product.product_like() && !product.sum_like());
    }

    #[test]
    fn line_graph_of_a_path_and_a_star() {
        let p3 = graph(4, &[(0, 1), (1, 2), (2, 3)]);
        assert!(isomorphic(&op("line-graph", &[&p3]), &graph(3, &[(0, 1), (1, 2)]), 100).unwrap());
        let star = graph(4, &[(0, 1), (0, 2), (0, 3)]);
        assert!(isomorphic(&op("line-graph", &[&star]), &graph(3, &[(0, 1), (1, 2), (0, 2)]), 100).unwrap());
    }

    #[test]
    fn ordered_sum_concatenates_orders() {
        let v = Arc::new(Vocabulary::new([("<=", 2), ("P_a", 1)]).unwrap());
        let w = Structure::new(v.clone(), [0], [("<=", vec![vec![0, 0]]), ("P_a", vec![vec![0]])]).unwrap();
        let sum = builtin("ordered-sum", Some(&v)).unwrap().apply(&[&w, &w]).unwrap();
        assert!(sum.holds(0, &[0, 1]) && !sum.holds(0, &[1, 0]));
        assert_eq!(sum.table_by_name("P_a").unwrap().len(), 2);
        assert!(builtin("join", Some(&v)).is_err());
        assert!(builtin("nope", None).is_err());
    }
}
