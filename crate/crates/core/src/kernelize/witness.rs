use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::{Kernel, KernelError, Kernelizer};
use crate::equivalence::{equivalent, ClassRegistry, EquivError};
use crate::logic::{evaluate, Assignment, Formula, Logic, LogicError};
use crate::representations::{Rep, TracedStructure};
use crate::structure::{find_embedding, is_embedding, Elem, Structure};
use crate::trees::{NodeId, Tree};

const ISO_BUDGET: usize = 4096;

#[derive(Debug, Clone)]
pub struct FptAnswer {
    pub value: bool,
    pub kernel: Kernel,
}

/// Evaluates a sentence on `Str(t)` through the kernel of `t` at the rank of
/// the sentence.
pub fn evaluate_fpt(t: &Tree, rep: &Rep, phi: &Formula) -> Result<FptAnswer, KernelError> {
    let (points, sets) = phi.free_vars();
    if let Some(v) = points.iter().chain(sets.iter()).next() {
        return Err(LogicError::Unbound(v.clone()).into());
    }
    let kernel = Kernelizer::new(rep.clone(), phi.rank(), phi.logic()).kernelize(t)?;
    let value = evaluate(&rep.str_image(&kernel.tree), phi, &Assignment::new())?;
    Ok(FptAnswer { value, kernel })
}

/// For each element of `small`, in universe order, the element of `base`
/// with the same trace once node ids are mapped through `origin`.
pub fn lift_elements(
    base: &TracedStructure,
    small: &TracedStructure,
    origin: &[NodeId],
) -> Result<Vec<Elem>, KernelError> {
    let index = base.index();
    small
        .trace
        .iter()
        .map(|trace| {
            let lifted: Vec<_> = trace.iter().map(|&(n, slot)| (origin[n], slot)).collect();
            index
                .get(&lifted)
                .copied()
                .ok_or_else(|| KernelError::Invalid(format!("element with trace {trace:?} has no counterpart")))
        })
        .collect()
}

/// The four conditions on a bounded equivalent substructure `B` of `A`.
#[derive(Debug, Clone, Serialize)]
pub struct EbspWitness {
    #[serde(skip)]
    pub substructure: Structure,
    #[serde(skip)]
    pub kernel: Kernel,
    /// Elements of `A` kept in `B`.
    pub elements: Vec<Elem>,
    /// `B` is the image of a feasible tree.
    pub in_class: bool,
    /// `B` is an induced substructure of `A`.
    pub induced: bool,
    pub size_bound: u64,
    pub within_size_bound: bool,
    /// `B ≡_m A`, or `None` when the oracle is out of budget.
    pub equivalent: Option<bool>,
}

impl EbspWitness {
    pub fn holds(&self) -> bool {
        self.in_class && self.induced && self.within_size_bound && self.equivalent != Some(false)
    }
}

/// Builds `B ⊆ A` from the kernel of a tree `t` with `Str(t) ≅ A`.
pub fn ebsp_witness(
    a: &Structure,
    rep: &Rep,
    t: &Tree,
    m: usize,
    logic: Logic,
    registry: &mut ClassRegistry,
) -> Result<EbspWitness, KernelError> {
    let image = rep.str_checked(t)?;
    let iso: BTreeMap<Elem, Elem> = if image.structure == *a {
        a.universe().iter().map(|&e| (e, e)).collect()
    } else {
        let found = if image.structure.size() == a.size() && image.structure.tuple_count() == a.tuple_count() {
            find_embedding(&image.structure, a, ISO_BUDGET)?
        } else {
            None
        };
        found.ok_or_else(|| KernelError::Invalid("the tree does not represent the structure".into()))?
    };
    let kernel = Kernelizer::new(rep.clone(), m, logic).kernelize(t)?;
    let small = rep.str_traced(&kernel.tree);
    let map: Vec<Elem> = lift_elements(&image, &small, &kernel.origin)?.into_iter().map(|e| iso[&e]).collect();
    let elements: BTreeSet<Elem> = map.iter().copied().collect();
    let substructure = a.induced_substructure(elements.iter().copied())?;
    let positions: BTreeMap<Elem, usize> =
        small.structure.universe().iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let embeds =
        elements.len() == map.len() && is_embedding(&small.structure, a, |e| positions.get(&e).map(|&i| map[i]));
    let in_class = embeds && rep.check(&kernel.tree).is_empty();
    let size_bound = kernel.report.size_bound.saturating_mul(rep.elements_per_node() as u64);
    let within_size_bound = substructure.size() as u64 <= size_bound;
    let equivalent = oracle(registry, a, &substructure, m, logic)?;
    Ok(EbspWitness {
        substructure,
        kernel,
        elements: elements.into_iter().collect(),
        in_class,
        induced: true,
        size_bound,
        within_size_bound,
        equivalent,
    })
}

fn oracle(
    registry: &mut ClassRegistry,
    a: &Structure,
    b: &Structure,
    m: usize,
    logic: Logic,
) -> Result<Option<bool>, KernelError> {
    match equivalent(registry, a, b, m, logic) {
        Ok(v) => Ok(Some(v)),
        Err(EquivError::BudgetExceeded { .. }) | Err(EquivError::SetsTooLarge) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// For a purely unary vocabulary: keeps, per colour (set of predicates an
/// element satisfies), the `c` smallest elements, with `c = m` for FO and
/// `c = m·2^m` for MSO.
pub fn unary_color_cap(a: &Structure, m: usize, logic: Logic) -> Result<Structure, KernelError> {
    if let Some(r) = a.vocab().relations().iter().find(|r| r.arity != 1) {
        return Err(KernelError::Invalid(format!("{} is not unary", r.name)));
    }
    let cap = match logic {
        Logic::Fo => m,
        Logic::Mso => m.saturating_mul(1usize.checked_shl(m as u32).unwrap_or(usize::MAX)),
    }
    .max(1);
    let rels = a.vocab().len();
    let mut seen: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
    let mut keep = Vec::new();
    for &e in a.universe() {
        let colour: Vec<bool> = (0..rels).map(|r| a.holds(r, &[e])).collect();
        let count = seen.entry(colour).or_insert(0);
        if *count < cap {
            *count += 1;
            keep.push(e);
        }
    }
    Ok(a.induced_substructure(keep)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct PathsWitness {
    #[serde(skip)]
    pub substructure: Structure,
    /// Path lengths (in edges) of the components kept.
    pub kept: Vec<usize>,
    /// Paths at least this long are interchangeable.
    pub long: usize,
}

/// For a disjoint union of undirected paths: keeps at most `m` paths of each
/// length below `3^m`, and at most `m` initial segments of length `3^m` of
/// the longer ones.
pub fn paths_witness(a: &Structure, m: usize) -> Result<PathsWitness, KernelError> {
    let edge = match a.vocab().relations() {
        [r] if r.arity == 2 => 0,
        _ => return Err(KernelError::Invalid("expected a graph over a single binary relation".into())),
    };
    let mut adjacent: BTreeMap<Elem, Vec<Elem>> = a.universe().iter().map(|&e| (e, Vec::new())).collect();
    for t in a.table(edge) {
        if t[0] == t[1] || !a.holds(edge, &[t[1], t[0]]) {
            return Err(KernelError::Invalid("edges must be symmetric and loop-free".into()));
        }
        adjacent.get_mut(&t[0]).expect("in universe").push(t[1]);
    }
    let mut components = Vec::new();
    let mut done = BTreeSet::new();
    for &start in a.universe() {
        if done.contains(&start) || adjacent[&start].len() > 1 {
            continue;
        }
        let mut path = vec![start];
        done.insert(start);
        let mut previous = None;
        let mut current = start;
        while let Some(&next) = adjacent[&current].iter().find(|&&x| Some(x) != previous) {
            if !done.insert(next) {
                break;
            }
            path.push(next);
            previous = Some(current);
            current = next;
        }
        components.push(path);
    }
    if done.len() != a.size() || adjacent.values().any(|n| n.len() > 2) {
        return Err(KernelError::Invalid("not a disjoint union of paths".into()));
    }
    let long = 3usize.saturating_pow(m as u32);
    let cap = m.max(1);
    let mut per_length: BTreeMap<usize, usize> = BTreeMap::new();
    let mut keep = Vec::new();
    let mut kept = Vec::new();
    for path in &components {
        let length = (path.len() - 1).min(long);
        let count = per_length.entry(length).or_insert(0);
        if *count < cap {
            *count += 1;
            keep.extend_from_slice(&path[..=length]);
            kept.push(length);
        }
    }
    Ok(PathsWitness { substructure: a.induced_substructure(keep)?, kept, long })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_formula;
    use crate::representations::rep_by_name;
    use crate::structure::parse_structure;
    use crate::trees::parse_tree;

    fn paths(lengths: &[usize]) -> Structure {
        let mut next = 0;
        let mut universe = Vec::new();
        let mut edges = Vec::new();
        for &l in lengths {
            for i in 0..=l {
                universe.push((next + i).to_string());
                if i < l {
                    edges.push(format!("({} {}) ({} {})", next + i, next + i + 1, next + i + 1, next + i));
                }
            }
            next += l + 1;
        }
        parse_structure(&format!(
            "(structure (vocab (E 2)) (universe {}) (rel E {}))",
            universe.join(" "),
            edges.join(" ")
        ))
        .unwrap()
    }

    #[test]
    fn paths_witness_at_rank_one() {
        let a = paths(&[0, 0, 5, 7, 1, 1, 2]);
        let w = paths_witness(&a, 1).unwrap();
        assert_eq!(w.long, 3);
        assert_eq!(w.kept, vec![0, 3, 1, 2]);
        assert_eq!(w.substructure.size(), 1 + 4 + 2 + 3);
        let mut reg = ClassRegistry::new();
        assert!(equivalent(&mut reg, &a, &w.substructure, 1, Logic::Fo).unwrap());
    }

    #[test]
    fn paths_witness_rejects_cycles() {
        let c3 =
            parse_structure("(structure (vocab (E 2)) (universe 0 1 2) (rel E (0 1) (1 0) (1 2) (2 1) (2 0) (0 2)))")
                .unwrap();
        assert!(paths_witness(&c3, 1).is_err());
    }

    #[test]
    fn colour_cap_keeps_m_per_colour() {
        let a = parse_structure(
            "(structure (vocab (R 1) (S 1)) (universe 0 1 2 3 4 5 6) (rel R (0) (1) (2) (3)) (rel S (3) (4)))",
        )
        .unwrap();
        let b = unary_color_cap(&a, 2, Logic::Fo).unwrap();
        assert_eq!(b.universe(), &[0, 1, 3, 4, 5, 6]);
        let mut reg = ClassRegistry::new();
        assert!(equivalent(&mut reg, &a, &b, 2, Logic::Fo).unwrap());
        assert_eq!(unary_color_cap(&a, 1, Logic::Mso).unwrap().size(), 6);
    }

    #[test]
    fn fpt_on_a_word() {
        let rep = rep_by_name("words", None).unwrap();
        let t = parse_tree("(node ∘ (leaf a) (leaf b) (leaf a) (leaf a) (leaf a) (leaf a) (leaf b))").unwrap();
        let phi = parse_formula("(exists x (atom P_b x))").unwrap();
        assert!(evaluate_fpt(&t, &rep, &phi).unwrap().value);
        assert!(evaluate_fpt(&t, &rep, &parse_formula("(atom P_b x)").unwrap()).is_err());
    }

    #[test]
    fn witness_of_a_word() {
        let rep = rep_by_name("words", None).unwrap();
        let t = parse_tree("(node ∘ (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf b))")
            .unwrap();
        let a = rep.str_image(&t);
        let mut reg = ClassRegistry::new();
        let w = ebsp_witness(&a, &rep, &t, 1, Logic::Fo, &mut reg).unwrap();
        assert!(w.holds(), "{w:?}");
        assert_eq!(w.equivalent, Some(true));
        assert!(w.substructure.size() < a.size());
    }
}
