//! The ten acceptance suites. Each is seeded, exact, and reports the number of
//! instances it checked together with every failure it saw.

use std::fmt::Display;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ebsp_core::equivalence::{Budget, EquivError, GameBudget};
use ebsp_core::fractal::{fractal_chain, ScalePlan};
use ebsp_core::gen::{
    random_formula, random_graph, random_scheme, random_structure, random_tree, random_tree_of_size, random_unary,
};
use ebsp_core::kernelize::{evaluate_fpt, learn_composition, lift_elements, unary_color_cap, Kernelizer};
use ebsp_core::representations::{
    default_ranked_alphabet, nested_concat, nested_insert, rep_by_name, NestedWord, NestedWordsRep, Rep,
    Representation, CONCAT,
};
use ebsp_core::structure::isomorphic;
use ebsp_core::transducers::{builtin, check_substructure_preservation, check_transfer, SchemeError, TransferVerdict};
use ebsp_core::trees::{Tree, TreeAlphabet};
use ebsp_core::{
    ef_game_decide, equivalent, evaluate, is_embedding, Assignment, ClassId, ClassRegistry, Logic, PointedStructure,
    Structure, Vocabulary,
};

pub const TITLES: [&str; 10] = [
    "type equality agrees with the game oracle",
    "long paths are equivalent",
    "unary colour-cap witness",
    "composition lemmas",
    "kernelization soundness",
    "fpt evaluation agrees with direct evaluation",
    "translation schemes",
    "cograph and nested-word goldens",
    "fractal chains",
    "kernelization visits grow linearly",
];

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Settings {
    pub seed: u64,
    /// Budget for the type engine.
    pub budget: Budget,
    /// Budget for the game oracle.
    pub game: GameBudget,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 2024,
            budget: Budget { max_work: 2_000_000_000, ..Budget::default() },
            game: GameBudget { max_work: 200_000_000 },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub failures: Vec<String>,
    pub seconds: f64,
}

impl Outcome {
    /// `PASS|FAIL <id> <title>: <summary>`.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} [{:>2}] {}: {} ({:.1}s)", self.id, self.title, self.summary, self.seconds)
    }
}

/// Failures collected by a suite. A suite returns its summary line; an error
/// ends it early and counts as a failure.
#[derive(Default)]
struct Log {
    failures: Vec<String>,
}

impl Log {
    fn fail(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }

    fn expect(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.fail(message());
        }
    }
}

type Step<T> = Result<T, String>;

trait Context<T> {
    fn ctx(self, what: &str) -> Step<T>;
}

impl<T, E: Display> Context<T> for Result<T, E> {
    fn ctx(self, what: &str) -> Step<T> {
        self.map_err(|e| format!("{what}: {e}"))
    }
}

pub fn run(id: usize, settings: &Settings) -> Outcome {
    let start = Instant::now();
    let mut log = Log::default();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed.wrapping_mul(1000).wrapping_add(id as u64));
    let result = match id {
        1 => oracle_cross_validation(settings, &mut rng, &mut log),
        2 => long_paths(settings, &mut log),
        3 => unary_witness(settings, &mut rng, &mut log),
        4 => composition_lemmas(settings, &mut rng, &mut log),
        5 => kernel_soundness(settings, &mut rng, &mut log),
        6 => fpt_pipeline(settings, &mut rng, &mut log),
        7 => translation_schemes(settings, &mut rng, &mut log),
        8 => goldens(&mut log),
        9 => fractal_chains(settings, &mut rng, &mut log),
        10 => linearity(&mut rng, &mut log),
        _ => Err(format!("no acceptance criterion {id}")),
    };
    let summary = match result {
        Ok(summary) => summary,
        Err(e) => {
            log.fail(e.clone());
            format!("aborted: {e}")
        }
    };
    Outcome {
        id,
        title: TITLES.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed: log.failures.is_empty(),
        summary,
        failures: log.failures,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(settings: &Settings) -> Vec<Outcome> {
    (1..=TITLES.len()).map(|id| run(id, settings)).collect()
}

fn registry(settings: &Settings) -> ClassRegistry {
    ClassRegistry::with_budget(settings.budget)
}

fn vocab(rels: &[(&str, usize)]) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::new(rels.iter().copied()).expect("distinct names"))
}

fn plain(s: &Structure) -> PointedStructure {
    PointedStructure::plain(s.clone())
}

fn permuted<R: Rng>(rng: &mut R, s: &Structure) -> Structure {
    let mut perm: Vec<u32> = s.universe().to_vec();
    perm.shuffle(rng);
    let universe = s.universe().to_vec();
    s.relabel(|e| perm[universe.binary_search(&e).expect("element of the universe")])
}

fn oracle_cross_validation(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let mut reg = registry(settings);
    let mixed = vocab(&[("E", 2), ("P", 1)]);
    let (mut pairs, mut equal, mut interesting) = (0, 0, 0);
    for i in 0..600 {
        let logic = if i < 400 { Logic::Fo } else { Logic::Mso };
        let (max_size, max_rank) = if logic == Logic::Fo { (8, 3) } else { (6, 2) };
        let m = rng.gen_range(0..=max_rank);
        let n = rng.gen_range(1..=max_size);
        let a = match i % 3 {
            0 => random_graph(rng, n, 0.4),
            1 => random_structure(rng, &mixed, n, 0.3),
            _ => random_unary(rng, 1, n),
        };
        let copy = rng.gen_range(0..3) == 0;
        let b = match copy {
            true => permuted(rng, &a),
            false => {
                let other = rng.gen_range(1..=max_size);
                match i % 3 {
                    0 => random_graph(rng, other, 0.4),
                    1 => random_structure(rng, &mixed, other, 0.3),
                    _ => random_unary(rng, 1, other),
                }
            }
        };
        let by_type = reg.mtype(&plain(&a), m, logic).ctx("type")? == reg.mtype(&plain(&b), m, logic).ctx("type")?;
        let by_game = ef_game_decide(&plain(&a), &plain(&b), m, logic, &settings.game).ctx("game")?;
        pairs += 1;
        equal += by_type as usize;
        interesting += (by_type && !copy && m > 0) as usize;
        log.expect(by_type == by_game, || {
            format!("{logic} m={m}: types say {by_type}, game says {by_game} on {a} vs {b}")
        });
    }
    Ok(format!(
        "{pairs} pairs, {equal} equivalent ({interesting} at m > 0 and not copies), {} disagreements",
        log.failures.len()
    ))
}

/// The undirected path with `edges` edges.
fn path(edges: usize) -> Structure {
    let n = edges as u32 + 1;
    let mut e = Vec::new();
    for i in 0..n - 1 {
        e.push(vec![i, i + 1]);
        e.push(vec![i + 1, i]);
    }
    Structure::new(vocab(&[("E", 2)]), 0..n, [("E", e)]).expect("well formed")
}

fn long_paths(settings: &Settings, log: &mut Log) -> Step<String> {
    let mut reg = registry(settings);
    let mut compared = 0;
    for m in 1..=2u32 {
        let p = 3usize.pow(m);
        let paths: Vec<Structure> = (p..=p + 4).map(path).collect();
        for (i, a) in paths.iter().enumerate() {
            for (j, b) in paths.iter().enumerate().skip(i + 1) {
                compared += 1;
                let same = equivalent(&mut reg, a, b, m as usize, Logic::Fo).ctx("type")?;
                let game = ef_game_decide(&plain(a), &plain(b), m as usize, Logic::Fo, &settings.game).ctx("game")?;
                log.expect(same && game, || {
                    format!("m={m}: P_{} and P_{} differ (types {same}, game {game})", p + i, p + j)
                });
            }
        }
        let short = path(0);
        let same = equivalent(&mut reg, &short, &paths[0], m as usize, Logic::Fo).ctx("type")?;
        let game =
            ef_game_decide(&plain(&short), &plain(&paths[0]), m as usize, Logic::Fo, &settings.game).ctx("game")?;
        compared += 1;
        log.expect(!same && !game, || {
            format!("m={m}: P_0 and P_{p} agree on every rank-{m} sentence (types {same}, game {game})")
        });
    }
    Ok(format!("{compared} comparisons, {} failed", log.failures.len()))
}

fn unary_witness(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let mut reg = registry(settings);
    let (mut by_oracle, mut by_projection) = (0, 0);
    for i in 0..150 {
        let (logic, m, predicates, size) = if i < 100 {
            (Logic::Fo, rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=30))
        } else {
            (Logic::Mso, 1, rng.gen_range(1..=2), rng.gen_range(1..=8))
        };
        let a = random_unary(rng, predicates, size);
        let b = unary_color_cap(&a, m, logic).ctx("colour cap")?;
        let cap = match logic {
            Logic::Fo => m << predicates,
            Logic::Mso => m << (predicates + m),
        };
        log.expect(b.size() <= cap, || format!("{logic} m={m}: witness of size {} exceeds {cap}", b.size()));
        let induced = a.induced_substructure(b.universe().iter().copied()).ctx("induced")?;
        log.expect(induced == b, || format!("{logic}: witness is not induced"));
        let same = equivalent(&mut reg, &a, &b, m, logic).ctx("type")?;
        log.expect(same, || format!("{logic} m={m}: witness differs from {a}"));
        if size <= 12 {
            by_oracle += 1;
            let game = ef_game_decide(&plain(&a), &plain(&b), m, logic, &settings.game).ctx("game")?;
            log.expect(game, || format!("{logic} m={m}: game separates {a} from its witness"));
        } else {
            by_projection += 1;
            for colour in colours(&a) {
                let keep = |s: &Structure| -> Vec<u32> {
                    s.universe().iter().copied().filter(|&e| colour_of(s, e) == colour).collect()
                };
                let (ka, kb) = (keep(&a), keep(&b));
                if ka.is_empty() {
                    continue;
                }
                let pa = a.induced_substructure(ka).ctx("projection")?;
                let pb = b.induced_substructure(kb).ctx("projection")?;
                let game = ef_game_decide(&plain(&pa), &plain(&pb), m, logic, &settings.game).ctx("game")?;
                log.expect(game, || format!("{logic} m={m}: colour {colour:?} projection separated"));
            }
        }
    }
    Ok(format!("150 structures, {by_oracle} by the game on the whole, {by_projection} by colour projections"))
}

fn colour_of(s: &Structure, e: u32) -> Vec<bool> {
    (0..s.vocab().len()).map(|r| s.holds(r, &[e])).collect()
}

fn colours(s: &Structure) -> Vec<Vec<bool>> {
    let mut out: Vec<Vec<bool>> = s.universe().iter().map(|&e| colour_of(s, e)).collect();
    out.sort();
    out.dedup();
    out
}

/// Random trees grouped by class, to draw equivalent partners from.
struct Pool {
    rep: Rep,
    m: usize,
    logic: Logic,
    trees: Vec<Tree>,
    classes: Vec<ClassId>,
    /// Larger trees serve only as equivalent partners.
    max_pick: usize,
}

impl Pool {
    fn new(
        rep: &Rep,
        m: usize,
        logic: Logic,
        rng: &mut ChaCha8Rng,
        count: usize,
        mut draw: impl FnMut(&mut ChaCha8Rng) -> Tree,
        reg: &mut ClassRegistry,
    ) -> Step<Pool> {
        let mut pool =
            Pool { rep: rep.clone(), m, logic, trees: Vec::new(), classes: Vec::new(), max_pick: usize::MAX };
        while pool.trees.len() < count {
            let t = draw(rng);
            if let Some(c) = pool.class(&t, reg)? {
                pool.trees.push(t);
                pool.classes.push(c);
            }
        }
        Ok(pool)
    }

    /// `None` when the type engine is over budget.
    fn class(&self, t: &Tree, reg: &mut ClassRegistry) -> Step<Option<ClassId>> {
        match reg.class_of(&self.rep.str_image(t), self.m, self.logic) {
            Ok(c) => Ok(Some(c)),
            Err(EquivError::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng, keep: impl Fn(&Tree) -> bool) -> Option<Tree> {
        let eligible: Vec<&Tree> = self.trees.iter().filter(|t| t.size() <= self.max_pick && keep(t)).collect();
        eligible.choose(rng).map(|t| (*t).clone())
    }

    /// A pool tree in the class of `t` passing `keep`, different from `t`
    /// when there is one; `t` itself otherwise.
    fn partner(
        &self,
        rng: &mut ChaCha8Rng,
        t: &Tree,
        reg: &mut ClassRegistry,
        keep: impl Fn(&Tree) -> bool,
    ) -> Step<Option<Tree>> {
        let Some(c) = self.class(t, reg)? else { return Ok(None) };
        let same: Vec<&Tree> = self
            .trees
            .iter()
            .zip(&self.classes)
            .filter(|(u, &d)| d == c && *u != t && keep(u))
            .map(|(u, _)| u)
            .collect();
        Ok(Some(same.choose(rng).map(|u| (*u).clone()).unwrap_or_else(|| t.clone())))
    }

    /// `Some(x ≡ y)`, or `None` when over budget.
    fn same(&self, x: &Tree, y: &Tree, reg: &mut ClassRegistry) -> Step<Option<bool>> {
        Ok(match (self.class(x, reg)?, self.class(y, reg)?) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        })
    }
}

#[derive(Default)]
struct Tally {
    checked: usize,
    nontrivial: usize,
    skipped: usize,
}

impl Tally {
    fn record(&mut self, log: &mut Log, verdict: Option<bool>, nontrivial: bool, what: impl FnOnce() -> String) {
        match verdict {
            None => self.skipped += 1,
            Some(ok) => {
                self.checked += 1;
                self.nontrivial += nontrivial as usize;
                log.expect(ok, what);
            }
        }
    }
}

fn unranked_root(rep: &Rep) -> impl Fn(&Tree) -> bool + '_ {
    move |t: &Tree| !t.is_leaf(0) && !rep.alphabet().is_ranked(t.label(0))
}

/// Replacing a subtree by an equivalent one; merging equivalent trees with a
/// common tree; appending equivalent last children to equivalent trees.
fn tree_parts(
    pool: &Pool,
    rng: &mut ChaCha8Rng,
    reg: &mut ClassRegistry,
    per_part: usize,
    log: &mut Log,
) -> Step<Tally> {
    let rep = &pool.rep;
    let mut tally = Tally::default();
    let name = rep.name().to_string();
    let (m, logic) = (pool.m, pool.logic);
    let mut attempts = 0;
    while tally.checked < per_part && attempts < 20 * per_part {
        attempts += 1;
        let Some(t) = pool.pick(rng, |t| t.size() > 1) else { break };
        let a = rng.gen_range(1..t.size());
        let sub = t.subtree_at(a).ctx("subtree")?.tree;
        let Some(s) = pool.partner(rng, &sub, reg, |_| true)? else { continue };
        let z = t.replace(a, &s).ctx("replace")?.tree;
        if !rep.check(&z).is_empty() {
            continue;
        }
        tally.record(log, pool.same(&z, &t, reg)?, s != sub, || {
            format!("{name} {logic} m={m}: replacing {sub} by {s} in {t}")
        });
    }
    let root_ok = unranked_root(rep);
    for part in [2, 3] {
        let target = tally.checked + per_part;
        let mut attempts = 0;
        while tally.checked < target && attempts < 20 * per_part {
            attempts += 1;
            let Some(s1) = pool.pick(rng, &root_ok) else { break };
            let label = s1.label(0).clone();
            let Some(s2) = pool.partner(rng, &s1, reg, |u| *u.label(0) == label)? else { continue };
            let (z1, z2, nontrivial) = if part == 2 {
                let Some(t) = pool.pick(rng, |u| *u.label(0) == label) else { continue };
                (s1.merge(&t).ctx("merge")?.tree, s2.merge(&t).ctx("merge")?.tree, s1 != s2)
            } else {
                let Some(t1) = pool.pick(rng, |_| true) else { continue };
                let Some(t2) = pool.partner(rng, &t1, reg, |_| true)? else { continue };
                let last = |s: &Tree, t: &Tree| s.merge(&Tree::node(label.clone(), [t.clone()])).map(|x| x.tree);
                (last(&s1, &t1).ctx("append")?, last(&s2, &t2).ctx("append")?, s1 != s2 || t1 != t2)
            };
            if !rep.check(&z1).is_empty() || !rep.check(&z2).is_empty() {
                continue;
            }
            tally.record(log, pool.same(&z1, &z2, reg)?, nontrivial, || {
                format!("{name} {logic} m={m} part {part}: {z1} vs {z2}")
            });
        }
    }
    Ok(tally)
}

/// Merging pairwise equivalent trees that share a root label.
fn merge_part(pool: &Pool, rng: &mut ChaCha8Rng, reg: &mut ClassRegistry, count: usize, log: &mut Log) -> Step<Tally> {
    let rep = &pool.rep;
    let mut tally = Tally::default();
    let root_ok = unranked_root(rep);
    let mut attempts = 0;
    while tally.checked < count && attempts < 20 * count {
        attempts += 1;
        let Some(t1) = pool.pick(rng, &root_ok) else { break };
        let label = t1.label(0).clone();
        let with_label = |u: &Tree| *u.label(0) == label;
        let Some(s1) = pool.pick(rng, with_label) else { continue };
        let Some(t2) = pool.partner(rng, &t1, reg, with_label)? else { continue };
        let Some(s2) = pool.partner(rng, &s1, reg, with_label)? else { continue };
        let z1 = t1.merge(&s1).ctx("merge")?.tree;
        let z2 = t2.merge(&s2).ctx("merge")?.tree;
        tally.record(log, pool.same(&z1, &z2, reg)?, t1 != t2 || s1 != s2, || {
            format!("{} {} m={}: merging {t1}, {s1} vs {t2}, {s2}", rep.name(), pool.logic, pool.m)
        });
    }
    Ok(tally)
}

/// Both parts of the nested-word composition lemma: insertion at equivalent
/// pointed positions, and concatenation.
fn nested_parts(
    settings: &Settings,
    m: usize,
    logic: Logic,
    max_nodes: usize,
    rng: &mut ChaCha8Rng,
    count: usize,
    log: &mut Log,
) -> Step<Tally> {
    let words = NestedWordsRep::new(&["a", "b"]);
    let vocab = words.vocabulary().clone();
    let mut reg = registry(settings);
    let class = |w: &NestedWord, point: Option<usize>, reg: &mut ClassRegistry| -> Step<Option<ClassId>> {
        let s = w.to_structure(&vocab);
        let pointed = match point {
            Some(e) => PointedStructure::with_points(s, vec![e as u32]).ctx("point")?,
            None => PointedStructure::plain(s),
        };
        match reg.mtype(&pointed, m, logic) {
            Ok(c) => Ok(Some(c)),
            Err(EquivError::BudgetExceeded { .. }) => Ok(None),
            Err(e) => Err(e.to_string()),
        }
    };
    let mut pool: Vec<(NestedWord, ClassId)> = Vec::new();
    let mut pointed: Vec<(NestedWord, usize, ClassId)> = Vec::new();
    let mut tries = 0;
    while pool.len() < 60 && tries < 600 {
        tries += 1;
        let (w, _) = words.word_of(&random_tree(rng, words.alphabet(), max_nodes));
        if let Some(c) = class(&w, None, &mut reg)? {
            for e in 0..w.len() {
                if let Some(pc) = class(&w, Some(e), &mut reg)? {
                    pointed.push((w.clone(), e, pc));
                }
            }
            pool.push((w, c));
        }
    }
    let mut tally = Tally::default();
    let partner = |rng: &mut ChaCha8Rng, i: usize| -> usize {
        let same: Vec<usize> = (0..pool.len()).filter(|&j| j != i && pool[j].1 == pool[i].1).collect();
        same.choose(rng).copied().unwrap_or(i)
    };
    for k in 0..2 * count {
        let (v1, v2) = {
            let i = rng.gen_range(0..pool.len());
            (i, partner(rng, i))
        };
        let (w1, w2, nontrivial) = if k % 2 == 0 {
            let i = rng.gen_range(0..pointed.len());
            let same: Vec<usize> = (0..pointed.len()).filter(|&j| j != i && pointed[j].2 == pointed[i].2).collect();
            let j = same.choose(rng).copied().unwrap_or(i);
            let ((u1, e1, _), (u2, e2, _)) = (&pointed[i], &pointed[j]);
            let w1 = nested_insert(u1, *e1, &pool[v1].0).ctx("insert")?;
            let w2 = nested_insert(u2, *e2, &pool[v2].0).ctx("insert")?;
            (w1, w2, i != j || v1 != v2)
        } else {
            let u1 = rng.gen_range(0..pool.len());
            let u2 = partner(rng, u1);
            let w1 = nested_concat(&pool[u1].0, &pool[v1].0).ctx("concat")?;
            let w2 = nested_concat(&pool[u2].0, &pool[v2].0).ctx("concat")?;
            (w1, w2, u1 != u2 || v1 != v2)
        };
        let verdict = match (class(&w1, None, &mut reg)?, class(&w2, None, &mut reg)?) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        };
        let part = if k % 2 == 0 { "insert" } else { "concatenation" };
        tally.record(log, verdict, nontrivial, || format!("nested words {logic} m={m} {part}: {w1} vs {w2}"));
    }
    Ok(tally)
}

fn composition_lemmas(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let mut lines = Vec::new();
    let mut table_keys = 0;
    let mut learn = |pool: &Pool, reg: &mut ClassRegistry, log: &mut Log| -> Step<()> {
        match learn_composition(&pool.trees, &pool.rep, pool.m, pool.logic, reg) {
            Ok(table) => table_keys += table.len(),
            Err(e) => log.fail(format!("{} {} m={}: composition table: {e}", pool.rep.name(), pool.logic, pool.m)),
        }
        Ok(())
    };

    let ordered = rep_by_name("ranked-trees", None).ctx("rep")?;
    let mut reg = registry(settings);
    let alphabet = default_ranked_alphabet();
    let draw = |rng: &mut ChaCha8Rng| {
        let kind = rng.gen_range(0..3);
        kernel_input(rng, &alphabet, 12, kind)
    };
    let mut pool = Pool::new(&ordered, 3, Logic::Fo, rng, 300, draw, &mut reg)?;
    pool.max_pick = 8;
    let tally = tree_parts(&pool, rng, &mut reg, 200, log)?;
    learn(&pool, &mut reg, log)?;
    lines.push(format!("ordered FO3 {}({})", tally.checked, tally.nontrivial));

    for logic in [Logic::Fo, Logic::Mso] {
        for m in 1..=2 {
            let small = if logic == Logic::Mso && m == 2 { 4 } else { 6 };
            let mut reg = registry(settings);
            let unordered = rep_by_name("unordered-trees", None).ctx("rep")?;
            let draw = |rng: &mut ChaCha8Rng| random_tree(rng, unordered.alphabet(), small);
            let pool = Pool::new(&unordered, m, logic, rng, 80, draw, &mut reg)?;
            let tally = tree_parts(&pool, rng, &mut reg, 30, log)?;
            learn(&pool, &mut reg, log)?;
            lines.push(format!("unordered {logic}{m} {}({})", tally.checked, tally.nontrivial));

            for name in ["cograph", "npartite:2"] {
                let rep = rep_by_name(name, None).ctx("rep")?;
                let draw = |rng: &mut ChaCha8Rng| random_tree(rng, rep.alphabet(), small);
                let pool = Pool::new(&rep, m, logic, rng, 80, draw, &mut reg)?;
                let tally = merge_part(&pool, rng, &mut reg, 40, log)?;
                learn(&pool, &mut reg, log)?;
                lines.push(format!("{name} {logic}{m} {}({})", tally.checked, tally.nontrivial));
            }

            let tally = nested_parts(settings, m, logic, if logic == Logic::Mso { 3 } else { 6 }, rng, 30, log)?;
            lines.push(format!("nested {logic}{m} {}({})", tally.checked, tally.nontrivial));
        }
    }
    Ok(format!("checked(nontrivial): {}; {table_keys} composition-table keys learned", lines.join(", ")))
}

/// A root `∘` over a few small random trees repeated periodically, so that
/// equal children and prefixes recur.
fn repetitive_tree(rng: &mut ChaCha8Rng, alphabet: &TreeAlphabet, nodes: usize) -> Tree {
    let kinds: Vec<Tree> = (0..rng.gen_range(1..=3)).map(|_| random_tree(rng, alphabet, 4)).collect();
    let mut children = Vec::new();
    let mut size = 1;
    while size < nodes {
        let c = kinds[children.len() % kinds.len()].clone();
        if size + c.size() > nodes {
            break;
        }
        size += c.size();
        children.push(c);
    }
    if children.is_empty() {
        return Tree::leaf("a");
    }
    Tree::node(CONCAT, children)
}

/// A unary `∘` chain above a random tree.
fn chain_tree(rng: &mut ChaCha8Rng, alphabet: &TreeAlphabet, nodes: usize) -> Tree {
    let depth = rng.gen_range(0..nodes.max(1));
    let mut t = random_tree_of_size(rng, alphabet, (nodes - depth).max(1));
    for _ in 0..depth {
        t = Tree::node(CONCAT, [t]);
    }
    t
}

fn kernel_input(rng: &mut ChaCha8Rng, alphabet: &TreeAlphabet, max_nodes: usize, i: usize) -> Tree {
    let nodes = rng.gen_range(1..=max_nodes);
    match i % 3 {
        0 => random_tree_of_size(rng, alphabet, nodes),
        1 => repetitive_tree(rng, alphabet, nodes),
        _ => chain_tree(rng, alphabet, nodes),
    }
}

fn kernel_soundness(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let rep = rep_by_name("ranked-trees", None).ctx("rep")?;
    let alphabet = default_ranked_alphabet();
    let mut shrunk = 0;
    let mut kernelizers: Vec<Kernelizer> = [(1, Logic::Fo), (2, Logic::Fo), (1, Logic::Mso)]
        .into_iter()
        .map(|(m, logic)| Kernelizer::new(rep.clone(), m, logic).with_registry(registry(settings)))
        .collect();
    for i in 0..250 {
        let (k, max_nodes) = if i < 200 { (&mut kernelizers[i % 2], 60) } else { (&mut kernelizers[2], 12) };
        let (m, logic) = (k.rank(), k.logic());
        let t = kernel_input(rng, &alphabet, max_nodes, i);
        let kernel = k.kernelize(&t).ctx("kernelize")?;
        shrunk += (kernel.tree.size() < t.size()) as usize;
        let base = rep.str_traced(&t);
        let small = rep.str_traced(&kernel.tree);
        let elements = lift_elements(&base, &small, &kernel.origin).ctx("provenance")?;
        let embeds =
            is_embedding(&small.structure, &base.structure, |e| small.structure.index_of(e).map(|i| elements[i]));
        log.expect(embeds, || format!("{logic} m={m}: kernel {} does not embed in {t}", kernel.tree));
        let same = equivalent(k.registry_mut(), &base.structure, &small.structure, m, logic).ctx("oracle")?;
        log.expect(same, || format!("{logic} m={m}: kernel {} differs from {t}", kernel.tree));
        let colouring = k.colour(&kernel.tree).ctx("colour")?;
        let (_, cuts) = k.reduce_degree(&kernel.tree, &colouring).ctx("reduce degree")?;
        let (_, replacements) = k.reduce_height(&kernel.tree, &colouring.colour).ctx("reduce height")?;
        log.expect(cuts == 0 && replacements == 0, || {
            format!("{logic} m={m}: kernel {} still reduces ({cuts} cuts, {replacements} replacements)", kernel.tree)
        });
        log.expect(kernel.report.within_bounds(), || format!("{logic} m={m}: bounds exceeded: {:?}", kernel.report));
    }
    Ok(format!("250 trees (200 FO up to 60 nodes, 50 MSO up to 12), {shrunk} shrunk"))
}

fn fpt_pipeline(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let _ = settings;
    let names = ["ranked-trees", "unordered-trees", "words", "nested-words", "cograph", "npartite:2"];
    let mut truths = 0;
    let per_rep = 17;
    for name in names {
        let rep = rep_by_name(name, None).ctx("rep")?;
        for _ in 0..per_rep {
            let t = random_tree(rng, rep.alphabet(), 25);
            let rank = rng.gen_range(0..=2);
            let phi = random_formula(rng, rep.vocabulary(), rank, Logic::Fo, &[]);
            let fast = evaluate_fpt(&t, &rep, &phi).ctx("fpt")?.value;
            let direct = evaluate(&rep.str_image(&t), &phi, &Assignment::new()).ctx("evaluate")?;
            truths += direct as usize;
            log.expect(fast == direct, || format!("{name}: {phi} on {t}: kernel says {fast}, direct says {direct}"));
        }
    }
    Ok(format!("{} instances, {truths} true, {} disagreements", per_rep * names.len(), log.failures.len()))
}

fn translation_schemes(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let source = vocab(&[("E", 2), ("P", 1)]);
    let targets: [(&str, usize); 2] = [("E", 2), ("P", 1)];
    let target = vocab(&targets);
    let mut adjunction = 0;
    while adjunction < 100 {
        let dim = rng.gen_range(1..=2);
        let scheme = random_scheme(rng, &source, dim, &targets);
        let size = rng.gen_range(1..=5);
        let a = random_structure(rng, &source, size, 0.35);
        let image = match scheme.apply(&a) {
            Ok(image) => image.structure,
            Err(SchemeError::EmptyImage) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let rank = rng.gen_range(0..=2);
        let phi = random_formula(rng, &target, rank, Logic::Fo, &[]);
        let pulled = scheme.apply_formula(&phi).ctx("pull back")?;
        let there = evaluate(&image, &phi, &Assignment::new()).ctx("evaluate")?;
        let here = evaluate(&a, &pulled, &Assignment::new()).ctx("evaluate")?;
        adjunction += 1;
        log.expect(here == there, || format!("{phi} through {scheme} on {a}: {here} vs {there}"));
    }

    let mut reg = registry(settings);
    let (mut holds, mut vacuous) = (0, 0);
    for _ in 0..50 {
        let dim = rng.gen_range(1..=2);
        let m = rng.gen_range(1..=2);
        let scheme = random_scheme(rng, &source, dim, &targets);
        let (a, b) = equivalent_pair(rng, &source, dim * m);
        match check_transfer(&mut reg, &a, &b, &scheme, m, Logic::Fo) {
            Ok(r) => match r.verdict {
                TransferVerdict::Holds => holds += 1,
                TransferVerdict::Vacuous => vacuous += 1,
                TransferVerdict::Falsified => log.fail(format!("transfer falsified by {scheme} on {a} and {b}")),
            },
            Err(SchemeError::EmptyImage) => vacuous += 1,
            Err(e) => return Err(e.to_string()),
        }
    }

    let mut preserved = 0;
    while preserved < 50 {
        let dim = rng.gen_range(1..=2);
        let scheme = random_scheme(rng, &source, dim, &targets);
        let size = rng.gen_range(1..=5);
        let a = random_structure(rng, &source, size, 0.35);
        let keep: Vec<u32> = a.universe().iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
        if keep.is_empty() {
            continue;
        }
        let b = a.induced_substructure(keep).ctx("induced")?;
        match check_substructure_preservation(&scheme, &a, &b) {
            Ok(r) => log.expect(r.holds(), || format!("{scheme} does not preserve {b} inside {a}: {r:?}")),
            Err(SchemeError::EmptyImage) => continue,
            Err(e) => return Err(e.to_string()),
        }
        preserved += 1;
    }

    let graph = vocab(&[("E", 2)]);
    let cartesian = builtin("cartesian", Some(&graph)).ctx("builtin")?;
    let p2 = path(1);
    let grid = cartesian.apply(&[&p2, &p2]).ctx("cartesian")?;
    let c4 = Structure::new(
        graph.clone(),
        0..4,
        [("E", (0..4u32).flat_map(|i| [vec![i, (i + 1) % 4], vec![(i + 1) % 4, i]]).collect::<Vec<_>>())],
    )
    .ctx("C4")?;
    let iso = isomorphic(&grid, &c4, 10_000).ctx("isomorphism")?;
    log.expect(iso, || format!("P_2 × P_2 is {grid}, not C_4"));
    Ok(format!(
        "{adjunction} adjunction instances, transfer {holds} held and {vacuous} vacuous, {preserved} preservation pairs, grid ≅ C_4: {iso}"
    ))
}

/// Two structures, usually `≡_rank`: a unary structure with a colour class of
/// at least `rank` elements, and the same with one more element of that
/// colour. The binary relation stays empty.
fn equivalent_pair(rng: &mut ChaCha8Rng, source: &Arc<Vocabulary>, rank: usize) -> (Structure, Structure) {
    let size = rng.gen_range(rank..=rank + 3) as u32;
    let colour: Vec<bool> = (0..size).map(|e| e < rank as u32 || rng.gen_bool(0.5)).collect();
    let build = |n: u32| {
        let members: Vec<Vec<u32>> =
            (0..n).filter(|&e| colour.get(e as usize).copied().unwrap_or(true)).map(|e| vec![e]).collect();
        Structure::new(source.clone(), 0..n, [("E", Vec::new()), ("P", members)]).expect("well formed")
    };
    let a = build(size);
    let b = if rng.gen_bool(0.8) { build(size + 1) } else { permuted(rng, &a) };
    (a, b)
}

/// All ordered trees whose internal nodes have at least two children, with
/// `leaves` leaves, as shapes (leaf label `1`, internal label `∘`).
fn shapes(leaves: usize) -> Vec<Tree> {
    if leaves == 1 {
        return vec![Tree::leaf("1")];
    }
    let mut out = Vec::new();
    for split in compositions(leaves) {
        let mut acc: Vec<Vec<Tree>> = vec![Vec::new()];
        for part in split {
            let subs = shapes(part);
            acc = acc
                .into_iter()
                .flat_map(|pre| subs.iter().map(move |s| [pre.clone(), vec![s.clone()]].concat()))
                .collect();
        }
        out.extend(acc.into_iter().map(|kids| Tree::node(CONCAT, kids)));
    }
    out
}

/// Ordered splits of `n` into at least two positive parts.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0..1u32 << (n - 1) {
        let mut parts = vec![1];
        for bit in 0..n - 1 {
            if mask >> bit & 1 == 1 {
                parts.push(1);
            } else {
                *parts.last_mut().expect("nonempty") += 1;
            }
        }
        if parts.len() >= 2 {
            out.push(parts);
        }
    }
    out
}

/// Every labeling of `shape` with internal labels from `internal` and leaf
/// colours `1..=parts`.
fn labelings(shape: &Tree, internal: &[String], parts: usize) -> Vec<Tree> {
    fn go(shape: &Tree, node: usize, internal: &[String], parts: usize) -> Vec<Tree> {
        if shape.is_leaf(node) {
            return (1..=parts).map(|c| Tree::leaf(c.to_string().as_str())).collect();
        }
        let mut acc: Vec<Vec<Tree>> = vec![Vec::new()];
        for &c in shape.children(node) {
            let subs = go(shape, c, internal, parts);
            acc = acc
                .into_iter()
                .flat_map(|pre| subs.iter().map(move |s| [pre.clone(), vec![s.clone()]].concat()))
                .collect();
        }
        acc.into_iter().flat_map(|kids| internal.iter().map(move |l| Tree::node(l.as_str(), kids.clone()))).collect()
    }
    go(shape, 0, internal, parts)
}

/// Adjacency by composing children bottom up: inside a child it is the
/// child's own, across two children it is the node's function at the
/// colours of the earlier and later vertex.
fn cograph_edges(t: &Tree, node: usize, parts: usize) -> (Vec<usize>, Vec<(usize, usize)>) {
    if t.is_leaf(node) {
        return (vec![t.label(node).as_str().parse().expect("colour")], Vec::new());
    }
    let label = t.label(node).as_str();
    let bit = |i: usize, j: usize| match label {
        "union" => false,
        "join" => true,
        text => text.as_bytes()[1 + (i - 1) * parts + (j - 1)] == b'1',
    };
    let mut colours: Vec<usize> = Vec::new();
    let mut edges = Vec::new();
    for &c in t.children(node) {
        let (cc, ce) = cograph_edges(t, c, parts);
        let offset = colours.len();
        for (x, &ci) in colours.iter().enumerate() {
            for (y, &cj) in cc.iter().enumerate() {
                if bit(ci, cj) {
                    edges.push((x, offset + y));
                }
            }
        }
        edges.extend(ce.into_iter().map(|(x, y)| (x + offset, y + offset)));
        colours.extend(cc);
    }
    (colours, edges)
}

fn goldens(log: &mut Log) -> Step<String> {
    let mut trees = 0;
    for (name, parts) in [("cograph", 1), ("npartite:1", 1), ("npartite:2", 2)] {
        let rep = rep_by_name(name, None).ctx("rep")?;
        let internal: Vec<String> = if name == "cograph" {
            vec!["union".into(), "join".into()]
        } else {
            (0..1u32 << (parts * parts))
                .map(|bits| {
                    let text: String = (0..parts * parts).map(|b| if bits >> b & 1 == 1 { '1' } else { '0' }).collect();
                    format!("f{text}")
                })
                .collect()
        };
        for leaves in 1..=4 {
            for shape in shapes(leaves) {
                for t in labelings(&shape, &internal, parts) {
                    trees += 1;
                    if !rep.check(&t).is_empty() {
                        log.fail(format!("{name}: {t} rejected"));
                        continue;
                    }
                    let image = rep.str_image(&t);
                    let (colours, edges) = cograph_edges(&t, 0, parts);
                    let mut expected: Vec<Vec<u32>> =
                        edges.iter().flat_map(|&(x, y)| [vec![x as u32, y as u32], vec![y as u32, x as u32]]).collect();
                    expected.sort();
                    let actual: Vec<Vec<u32>> =
                        image.table_by_name("E").expect("edge relation").iter().cloned().collect();
                    let colours_ok = (1..=parts).all(|i| {
                        let members: Vec<Vec<u32>> =
                            (0..colours.len()).filter(|&x| colours[x] == i).map(|x| vec![x as u32]).collect();
                        image.table_by_name(&format!("P_{i}")).expect("colour").iter().cloned().collect::<Vec<_>>()
                            == members
                    });
                    log.expect(actual == expected && colours_ok && image.size() == colours.len(), || {
                        format!("{name}: {t} gives {image}, expected edges {expected:?}")
                    });
                }
            }
        }
    }
    let words = NestedWordsRep::new(&["a", "b"]);
    let t = ebsp_core::trees::parse_tree("(node ∘ (leaf a) (node b:b (leaf a) (leaf a:b)) (leaf a))").ctx("parse")?;
    let (w, _) = words.word_of(&t);
    let golden = NestedWord::from_text("abaabba", &[(2, 6), (4, 5)]);
    log.expect(w == golden, || format!("nested-word golden: got {w}"));
    log.expect(words.check(&t).is_empty(), || "nested-word golden tree rejected".into());
    Ok(format!("{trees} cotrees with at most 4 leaves, nested-word golden {w}"))
}

fn word_tree(rng: &mut ChaCha8Rng, len: usize) -> Tree {
    Tree::node(CONCAT, (0..len).map(|_| Tree::leaf(if rng.gen_bool(0.5) { "a" } else { "b" })))
}

fn fractal_chains(settings: &Settings, rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let words = rep_by_name("words", None).ctx("rep")?;
    let trees = rep_by_name("ranked-trees", None).ctx("rep")?;
    let alphabet = default_ranked_alphabet();
    let (mut elements, mut steps) = (0, 0);
    for i in 0..50 {
        let (rep, t) = if i % 2 == 0 {
            {
                let len = rng.gen_range(20..=79);
                (&words, word_tree(rng, len))
            }
        } else {
            (&trees, kernel_input(rng, &alphabet, 80, i / 2 % 3 + 3))
        };
        let mut k = Kernelizer::new(rep.clone(), 1, Logic::Fo).with_registry(registry(settings));
        let plan = ScalePlan::fitted(&mut k, &t).ctx("plan")?;
        let chain = match fractal_chain(&mut k, &t, &plan, 1) {
            Ok(chain) => chain,
            Err(e) => {
                log.fail(format!("{}: chain from {t}: {e}", rep.name()));
                continue;
            }
        };
        elements += chain.elements.len();
        steps += chain.steps.len();
        log.expect(chain.gaps_within_bounds(), || format!("{}: a gap exceeds its bound on {t}", rep.name()));
        log.expect(chain.covers_all_scales(), || format!("{}: scales missed on {t}", rep.name()));
        for e in &chain.elements {
            log.expect(e.embeds && e.equivalent == Some(true), || {
                format!(
                    "{}: scale {} element of size {} (embeds {}, equivalent {:?})",
                    rep.name(),
                    e.scale,
                    e.size,
                    e.embeds,
                    e.equivalent
                )
            });
        }
    }
    Ok(format!("50 chains, {steps} reductions, {elements} scale representatives"))
}

fn linearity(rng: &mut ChaCha8Rng, log: &mut Log) -> Step<String> {
    let rep = rep_by_name("ranked-trees", None).ctx("rep")?;
    let alphabet = default_ranked_alphabet();
    let mut k = Kernelizer::new(rep, 1, Logic::Fo);
    let mut points: Vec<(usize, u64)> = Vec::new();
    for size in (10..=200).step_by(10) {
        for i in 0..3 {
            let t = match i {
                0 => random_tree_of_size(rng, &alphabet, size),
                1 => repetitive_tree(rng, &alphabet, size),
                _ => chain_tree(rng, &alphabet, size),
            };
            let kernel = k.kernelize(&t).ctx("kernelize")?;
            points.push((t.size(), kernel.report.visits));
        }
    }
    let (lower, upper): (Vec<_>, Vec<_>) = points.iter().partition(|(n, _)| *n <= 100);
    let c = lower.iter().map(|&&(n, v)| v as f64 / n as f64).fold(0.0, f64::max);
    for &&(n, v) in &upper {
        log.expect(v as f64 <= c * n as f64, || format!("{v} visits on {n} nodes exceed {c:.2}·n"));
    }
    let overall = points.iter().map(|&(n, v)| v as f64 / n as f64).fold(0.0, f64::max);
    Ok(format!("c = {c:.2} fitted on sizes 10..100, max ratio {overall:.2} over 10..200, {} points", points.len()))
}
