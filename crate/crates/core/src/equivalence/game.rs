//! Ehrenfeucht–Fraïssé games played out by exhaustive search.
//!
//! Kept independent of the type-code engine so the two can check each other.

use rustc_hash::FxHashMap;
use serde::Serialize;

use super::EquivError;
use crate::logic::Logic;
use crate::structure::{Dense, PointedStructure, Structure};

/// Caps the estimated number of game positions explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GameBudget {
    pub max_work: u64,
}

impl Default for GameBudget {
    fn default() -> Self {
        GameBudget { max_work: 100_000_000 }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Pebbles {
    points: Vec<(u32, u32)>,
    sets: Vec<(u64, u64)>,
}

struct Game {
    a: Dense,
    b: Dense,
    mso: bool,
    memo: FxHashMap<(usize, Pebbles), bool>,
}

impl Game {
    /// Whether adding the point pair `(x, y)` keeps the pebbles a partial isomorphism.
    fn point_ok(&self, pebbles: &Pebbles, x: u32, y: u32) -> bool {
        for &(p, q) in &pebbles.points {
            if (p == x) != (q == y) {
                return false;
            }
        }
        for &(s, t) in &pebbles.sets {
            if (s >> x & 1) != (t >> y & 1) {
                return false;
            }
        }
        let k = pebbles.points.len();
        let left: Vec<u32> = pebbles.points.iter().map(|p| p.0).chain([x]).collect();
        let right: Vec<u32> = pebbles.points.iter().map(|p| p.1).chain([y]).collect();
        let mut ta = Vec::new();
        let mut tb = Vec::new();
        for r in 0..self.a.rels.len() {
            let arity = self.a.arity(r);
            for code in 0..(k + 1).pow(arity as u32) {
                let mut c = code;
                let mut fresh = false;
                ta.clear();
                tb.clear();
                for _ in 0..arity {
                    let i = c % (k + 1);
                    c /= k + 1;
                    fresh |= i == k;
                    ta.push(left[i]);
                    tb.push(right[i]);
                }
                if fresh && self.a.holds(r, &ta) != self.b.holds(r, &tb) {
                    return false;
                }
            }
        }
        true
    }

    fn set_ok(pebbles: &Pebbles, s: u64, t: u64) -> bool {
        pebbles.points.iter().all(|&(p, q)| (s >> p & 1) == (t >> q & 1))
    }

    /// Duplicator wins the remaining `rounds` from a partial isomorphism.
    fn duplicator_wins(&mut self, pebbles: &mut Pebbles, rounds: usize) -> bool {
        if rounds == 0 {
            return true;
        }
        let key = (rounds, pebbles.clone());
        if rounds >= 2 {
            if let Some(&w) = self.memo.get(&key) {
                return w;
            }
        }
        let wins = self.point_rounds(pebbles, rounds, false)
            && self.point_rounds(pebbles, rounds, true)
            && (!self.mso || (self.set_rounds(pebbles, rounds, false) && self.set_rounds(pebbles, rounds, true)));
        if rounds >= 2 {
            self.memo.insert(key, wins);
        }
        wins
    }

    fn point_rounds(&mut self, pebbles: &mut Pebbles, rounds: usize, spoiler_in_b: bool) -> bool {
        let (ns, nd) = if spoiler_in_b { (self.b.n, self.a.n) } else { (self.a.n, self.b.n) };
        'spoiler: for s in 0..ns as u32 {
            for d in 0..nd as u32 {
                let (x, y) = if spoiler_in_b { (d, s) } else { (s, d) };
                if !self.point_ok(pebbles, x, y) {
                    continue;
                }
                pebbles.points.push((x, y));
                let w = self.duplicator_wins(pebbles, rounds - 1);
                pebbles.points.pop();
                if w {
                    continue 'spoiler;
                }
            }
            return false;
        }
        true
    }

    fn set_rounds(&mut self, pebbles: &mut Pebbles, rounds: usize, spoiler_in_b: bool) -> bool {
        let (ns, nd) = if spoiler_in_b { (self.b.n, self.a.n) } else { (self.a.n, self.b.n) };
        'spoiler: for s in 0..(1u64 << ns) {
            if rounds == 1 {
                // Copying the choice through the pebbles is the only candidate
                // that can match, and it matches whenever the pebbles agree on
                // equality.
                let mut d = 0u64;
                for &(p, q) in &pebbles.points {
                    let (from, to) = if spoiler_in_b { (q, p) } else { (p, q) };
                    d |= (s >> from & 1) << to;
                }
                let (x, y) = if spoiler_in_b { (d, s) } else { (s, d) };
                if Self::set_ok(pebbles, x, y) {
                    continue;
                }
                return false;
            }
            for d in 0..(1u64 << nd) {
                let (x, y) = if spoiler_in_b { (d, s) } else { (s, d) };
                if !Self::set_ok(pebbles, x, y) {
                    continue;
                }
                pebbles.sets.push((x, y));
                let w = self.duplicator_wins(pebbles, rounds - 1);
                pebbles.sets.pop();
                if w {
                    continue 'spoiler;
                }
            }
            return false;
        }
        true
    }
}

fn game_work(n: usize, m: usize, logic: Logic) -> f64 {
    let branch = match logic {
        Logic::Fo => n as f64,
        Logic::Mso => n as f64 + 2f64.powf(n as f64),
    };
    (2.0 * branch * branch).powi(m as i32)
}

/// Decides `a ≡_m b` by playing the m-round game (point moves only for FO,
/// point and set moves for MSO). Distinguished points are pre-placed pebbles.
pub fn ef_game_decide(
    a: &PointedStructure,
    b: &PointedStructure,
    m: usize,
    logic: Logic,
    budget: &GameBudget,
) -> Result<bool, EquivError> {
    if !a.base.same_vocab(&b.base) {
        return Err(EquivError::VocabularyMismatch);
    }
    let n = a.base.size().max(b.base.size());
    let work = game_work(n, m, logic);
    if work > budget.max_work as f64 {
        return Err(EquivError::BudgetExceeded {
            logic,
            m,
            size: n,
            reason: format!("game search of about {work:.3e} positions, limit {}", budget.max_work),
        });
    }
    if a.points.len() != b.points.len() || a.sets.len() != b.sets.len() {
        return Ok(false);
    }
    if (logic == Logic::Mso || !a.sets.is_empty()) && n > 64 {
        return Err(EquivError::SetsTooLarge);
    }
    let mut game =
        Game { a: Dense::new(&a.base), b: Dense::new(&b.base), mso: logic == Logic::Mso, memo: FxHashMap::default() };
    let mut pebbles = Pebbles { points: Vec::new(), sets: Vec::new() };
    let mask = |s: &Structure, set: &std::collections::BTreeSet<u32>| {
        set.iter().fold(0u64, |m, &e| m | 1 << s.index_of(e).expect("set inside universe"))
    };
    for (sa, sb) in a.sets.iter().zip(&b.sets) {
        let (x, y) = (mask(&a.base, sa), mask(&b.base, sb));
        pebbles.sets.push((x, y));
    }
    for (&pa, &pb) in a.points.iter().zip(&b.points) {
        let x = a.base.index_of(pa).expect("point in universe") as u32;
        let y = b.base.index_of(pb).expect("point in universe") as u32;
        if !game.point_ok(&pebbles, x, y) {
            return Ok(false);
        }
        pebbles.points.push((x, y));
    }
    Ok(game.duplicator_wins(&mut pebbles, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::Vocabulary;
    use std::sync::Arc;

    fn graph(n: u32, edges: &[(u32, u32)]) -> PointedStructure {
        let vocab = Arc::new(Vocabulary::new([("E", 2)]).unwrap());
        let tuples = edges.iter().flat_map(|&(u, v)| [vec![u, v], vec![v, u]]).collect();
        PointedStructure::plain(Structure::new(vocab, 0..n, [("E", tuples)]).unwrap())
    }

    fn decide(a: &PointedStructure, b: &PointedStructure, m: usize, logic: Logic) -> bool {
        ef_game_decide(a, b, m, logic, &GameBudget::default()).unwrap()
    }

    #[test]
    fn edge_versus_no_edge() {
        let k2 = graph(2, &[(0, 1)]);
        let empty = graph(2, &[]);
        assert!(decide(&k2, &empty, 1, Logic::Fo));
        assert!(!decide(&k2, &empty, 2, Logic::Fo));
    }

    #[test]
    fn cycle_versus_matching() {
        let c4 = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let two_edges = graph(4, &[(0, 1), (2, 3)]);
        assert!(decide(&c4, &two_edges, 2, Logic::Fo));
        assert!(!decide(&c4, &two_edges, 3, Logic::Fo));
    }

    #[test]
    fn budget_applies() {
        let big = graph(10, &[]);
        let res = ef_game_decide(&big, &big, 2, Logic::Mso, &GameBudget::default());
        assert!(matches!(res, Err(EquivError::BudgetExceeded { .. })));
    }
}
