//! Seedable random instances: structures, trees, formulas and schemes.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::{Formula, Logic};
use crate::structure::{Elem, Structure, Vocabulary};
use crate::transducers::{SchemeRelation, TranslationScheme};
use crate::trees::{Label, Tree, TreeAlphabet};

/// Each tuple over `0..size` is in each relation with probability `density`.
pub fn random_structure<R: Rng>(rng: &mut R, vocab: &Arc<Vocabulary>, size: u32, density: f64) -> Structure {
    let tables: Vec<(String, Vec<Vec<Elem>>)> = vocab
        .relations()
        .iter()
        .map(|r| {
            let mut tuples = Vec::new();
            let total = (size as u64).pow(r.arity as u32);
            for code in 0..total {
                if rng.gen_bool(density) {
                    let mut rest = code;
                    let tuple = (0..r.arity)
                        .map(|_| {
                            let e = (rest % size as u64) as Elem;
                            rest /= size as u64;
                            e
                        })
                        .collect();
                    tuples.push(tuple);
                }
            }
            (r.name.clone(), tuples)
        })
        .collect();
    Structure::new(vocab.clone(), 0..size, tables).expect("tuples are in range")
}

/// Undirected loop-free graph over `{E}`.
pub fn random_graph<R: Rng>(rng: &mut R, size: u32, density: f64) -> Structure {
    let mut edges = Vec::new();
    for a in 0..size {
        for b in a + 1..size {
            if rng.gen_bool(density) {
                edges.push(vec![a, b]);
                edges.push(vec![b, a]);
            }
        }
    }
    let vocab = Arc::new(Vocabulary::new([("E", 2)]).expect("one relation"));
    Structure::new(vocab, 0..size, [("E", edges)]).expect("edges are in range")
}

/// Unary predicates `P_1..P_k`, each element in each with probability ½.
pub fn random_unary<R: Rng>(rng: &mut R, predicates: usize, size: u32) -> Structure {
    let names: Vec<String> = (1..=predicates).map(|i| format!("P_{i}")).collect();
    let vocab = Arc::new(Vocabulary::new(names.iter().map(|n| (n.as_str(), 1))).expect("distinct names"));
    random_structure(rng, &vocab, size, 0.5)
}

/// A tree over `alphabet` that passes the alphabet's labeling and ranking
/// rules. The size is drawn uniformly from `1..=max_nodes` and met exactly
/// unless the ranked arities leave no label that fits the remaining nodes.
pub fn random_tree<R: Rng>(rng: &mut R, alphabet: &TreeAlphabet, max_nodes: usize) -> Tree {
    let target = rng.gen_range(1..=max_nodes.max(1));
    random_tree_of_size(rng, alphabet, target)
}

/// As [`random_tree`] with the target size fixed.
pub fn random_tree_of_size<R: Rng>(rng: &mut R, alphabet: &TreeAlphabet, nodes: usize) -> Tree {
    let leaves = alphabet.leaf.enumerate();
    let internal = alphabet.internal.enumerate();
    assert!(!leaves.is_empty(), "the alphabet needs a leaf label");
    grow(rng, alphabet, &leaves, &internal, nodes.max(1))
}

fn grow<R: Rng>(rng: &mut R, alphabet: &TreeAlphabet, leaves: &[Label], internal: &[Label], budget: usize) -> Tree {
    let fitting: Vec<&Label> =
        internal.iter().filter(|l| alphabet.ranked().get(*l).is_none_or(|&k| k < budget)).collect();
    if budget == 1 || fitting.is_empty() {
        return Tree::leaf(leaves.choose(rng).expect("nonempty").clone());
    }
    let label = (*fitting.choose(rng).expect("nonempty")).clone();
    let count = match alphabet.ranked().get(&label) {
        Some(&k) => k,
        None => rng.gen_range(1..=(budget - 1).min(5)),
    };
    let mut shares = vec![1; count];
    for _ in 0..budget - 1 - count {
        let i = rng.gen_range(0..count);
        shares[i] += 1;
    }
    let children: Vec<Tree> = shares.into_iter().map(|b| grow(rng, alphabet, leaves, internal, b)).collect();
    Tree::node(label, children)
}

/// A formula of rank exactly `rank` whose free point variables are among
/// `free`; a sentence when `free` is empty.
pub fn random_formula<R: Rng>(rng: &mut R, vocab: &Vocabulary, rank: usize, logic: Logic, free: &[String]) -> Formula {
    let mut scope = Scope { points: free.to_vec(), sets: Vec::new(), fresh: 0 };
    formula(rng, vocab, rank, logic, &mut scope)
}

struct Scope {
    points: Vec<String>,
    sets: Vec<String>,
    fresh: usize,
}

fn formula<R: Rng>(rng: &mut R, vocab: &Vocabulary, rank: usize, logic: Logic, scope: &mut Scope) -> Formula {
    if rank == 0 {
        return combination(rng, vocab, &scope.points, &scope.sets, 2);
    }
    match rng.gen_range(0..10) {
        0 => Formula::not(formula(rng, vocab, rank, logic, scope)),
        1 | 2 => {
            let low = rng.gen_range(0..rank);
            let (a, b) = (formula(rng, vocab, rank, logic, scope), formula(rng, vocab, low, logic, scope));
            let parts = if rng.gen_bool(0.5) { [a, b] } else { [b, a] };
            if rng.gen_bool(0.5) {
                Formula::and(parts)
            } else {
                Formula::or(parts)
            }
        }
        _ => {
            scope.fresh += 1;
            let set_move = logic == Logic::Mso && rng.gen_bool(0.4);
            let name = format!("{}{}", if set_move { "X" } else { "x" }, scope.fresh);
            let universal = rng.gen_bool(0.5);
            let body = if set_move {
                scope.sets.push(name.clone());
                let body = formula(rng, vocab, rank - 1, logic, scope);
                scope.sets.pop();
                body
            } else {
                scope.points.push(name.clone());
                let body = formula(rng, vocab, rank - 1, logic, scope);
                scope.points.pop();
                body
            };
            match (set_move, universal) {
                (false, false) => Formula::exists(name, body),
                (false, true) => Formula::forall(name, body),
                (true, false) => Formula::exists_set(name, body),
                (true, true) => Formula::forall_set(name, body),
            }
        }
    }
}

fn atom<R: Rng>(rng: &mut R, vocab: &Vocabulary, points: &[String], sets: &[String]) -> Formula {
    if points.is_empty() {
        return if rng.gen_bool(0.5) { Formula::True } else { Formula::False };
    }
    let pick = |rng: &mut R| points.choose(rng).expect("nonempty").clone();
    let choice = rng.gen_range(0..6);
    if choice == 0 {
        return Formula::Eq(pick(rng), pick(rng));
    }
    if choice == 1 && !sets.is_empty() {
        return Formula::In(pick(rng), sets.choose(rng).expect("nonempty").clone());
    }
    match vocab.relations().choose(rng) {
        Some(r) => Formula::Atom { rel: r.name.clone(), args: (0..r.arity).map(|_| pick(rng)).collect() },
        None => Formula::Eq(pick(rng), pick(rng)),
    }
}

fn combination<R: Rng>(rng: &mut R, vocab: &Vocabulary, points: &[String], sets: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.4) {
        let a = atom(rng, vocab, points, sets);
        return if rng.gen_bool(0.3) { Formula::not(a) } else { a };
    }
    let parts = [combination(rng, vocab, points, sets, depth - 1), combination(rng, vocab, points, sets, depth - 1)];
    match rng.gen_range(0..3) {
        0 => Formula::and(parts),
        1 => Formula::or(parts),
        _ => {
            let [a, b] = parts;
            Formula::implies(a, b)
        }
    }
}

/// A quantifier-free formula over the given point variables.
pub fn random_qf_formula<R: Rng>(rng: &mut R, vocab: &Vocabulary, vars: &[String]) -> Formula {
    combination(rng, vocab, vars, &[], 3)
}

/// A dimension-`dim` scheme from `source` defining the relations `target`.
/// The domain formula is `true` half of the time; otherwise the image may be
/// empty.
pub fn random_scheme<R: Rng>(
    rng: &mut R,
    source: &Arc<Vocabulary>,
    dim: usize,
    target: &[(&str, usize)],
) -> TranslationScheme {
    let domain_vars: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    let domain = if rng.gen_bool(0.5) { Formula::True } else { random_qf_formula(rng, source, &domain_vars) };
    let relations = target
        .iter()
        .map(|&(name, arity)| {
            let vars: Vec<String> = (0..arity * dim).map(|i| format!("v{i}")).collect();
            SchemeRelation { name: name.into(), vars: vars.clone(), body: random_qf_formula(rng, source, &vars) }
        })
        .collect();
    TranslationScheme::new("random", dim, Some(source.clone()), domain_vars, domain, relations)
        .expect("quantifier-free")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::{default_ranked_alphabet, rep_by_name, REPRESENTATION_NAMES};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trees_are_feasible_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in REPRESENTATION_NAMES.iter().map(|n| n.replace("<n>", "2")) {
            let rep = rep_by_name(&name, None).unwrap();
            for _ in 0..50 {
                let t = random_tree(&mut rng, rep.alphabet(), 12);
                assert!(t.size() <= 12);
                assert!(rep.check(&t).is_empty(), "{name}: {t}");
            }
        }
        let t = random_tree(&mut rng, &default_ranked_alphabet(), 1);
        assert_eq!(t.size(), 1);
    }

    #[test]
    fn formulas_have_the_requested_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let vocab = Vocabulary::new([("E", 2), ("P", 1)]).unwrap();
        for rank in 0..3 {
            for logic in [Logic::Fo, Logic::Mso] {
                let phi = random_formula(&mut rng, &vocab, rank, logic, &[]);
                assert_eq!(phi.rank(), rank);
                let (points, sets) = phi.free_vars();
                assert!(points.is_empty() && sets.is_empty());
                if logic == Logic::Fo {
                    assert_eq!(phi.logic(), Logic::Fo);
                }
            }
        }
    }

    #[test]
    fn structures_respect_the_vocabulary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 6, 0.5);
        assert!(g.table(0).iter().all(|t| t[0] != t[1] && g.holds(0, &[t[1], t[0]])));
        let u = random_unary(&mut rng, 2, 10);
        assert_eq!((u.size(), u.vocab().len()), (10, 2));
        let s = random_scheme(&mut rng, g.vocab(), 2, &[("E", 2)]);
        assert_eq!(s.dim(), 2);
    }
}
