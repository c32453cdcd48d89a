//! The subcommands. Each returns a [`Report`] whose exit code is
//! [`exit::OK`] unless the command has a negative verdict.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use ebsp_core::equivalence::{Budget, ClassRegistry, GameBudget};
use ebsp_core::fractal::{fractal_chain, ScalePlan};
use ebsp_core::kernelize::{KernelError, Kernelizer};
use ebsp_core::logic::{evaluate, format_formula, parse_formula, Assignment, Logic, LogicError};
use ebsp_core::representations::{rep_by_name, Rep};
use ebsp_core::structure::{parse_structure, Structure};
use ebsp_core::transducers::{builtin, parse_scheme, BUILTIN_NAMES};
use ebsp_core::trees::{parse_alphabet, parse_tree, Tree, TreeError};

use crate::acceptance::{self, Settings};
use crate::error::{exit, CliError};

pub const SENTINEL: &str = "---- machine-readable ----";

/// Global flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Config {
    pub logic: Logic,
    pub m: usize,
    pub repr: String,
    pub alphabet: Option<PathBuf>,
    pub budget_fo: Option<usize>,
    pub budget_mso: Option<usize>,
    pub max_work: Option<u64>,
    pub seed: u64,
    pub report: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            logic: Logic::Fo,
            m: 2,
            repr: "ranked-trees".into(),
            alphabet: None,
            budget_fo: None,
            budget_mso: None,
            max_work: None,
            seed: 2024,
            report: None,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        let zero = [
            ("--budget-fo", self.budget_fo.map(|b| b as u64)),
            ("--budget-mso", self.budget_mso.map(|b| b as u64)),
            ("--max-work", self.max_work),
        ]
        .into_iter()
        .find(|(_, v)| *v == Some(0));
        match zero {
            Some((flag, _)) => Err(CliError::Usage(format!("{flag} must be positive"))),
            None => Ok(()),
        }
    }

    /// `base` with the budget flags applied.
    pub fn budget_over(&self, base: Budget) -> Budget {
        Budget {
            fo_max_universe: self.budget_fo.unwrap_or(base.fo_max_universe),
            mso_max_universe: self.budget_mso.unwrap_or(base.mso_max_universe),
            max_work: self.max_work.unwrap_or(base.max_work),
        }
    }

    pub fn registry(&self) -> ClassRegistry {
        ClassRegistry::with_budget(self.budget_over(Budget::default()))
    }

    pub fn rep(&self) -> Result<Rep, CliError> {
        let alphabet = match &self.alphabet {
            Some(path) => {
                Some(parse_alphabet(&read(path)?).map_err(|e| CliError::input(path.display().to_string(), e))?)
            }
            None => None,
        };
        Ok(rep_by_name(&self.repr, alphabet.as_ref())?)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub text: String,
    pub data: Value,
    pub code: u8,
}

impl Report {
    fn ok(text: String, data: Value) -> Self {
        Report { text, data, code: exit::OK }
    }

    /// Human text, the sentinel line, then pretty JSON.
    pub fn render(&self) -> String {
        let json = serde_json::to_string_pretty(&self.data).expect("reports are plain JSON");
        format!("{}\n{SENTINEL}\n{json}\n", self.text.trim_end())
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_tree(path: &Path) -> Result<Tree, CliError> {
    parse_tree(&read(path)?).map_err(|e| match e {
        TreeError::Syntax(_) => CliError::input(path.display().to_string(), e),
        other => other.into(),
    })
}

fn read_structure(path: &Path) -> Result<Structure, CliError> {
    parse_structure(&read(path)?).map_err(|e| CliError::input(path.display().to_string(), e))
}

/// A structure file, or a tree file read through the configured
/// representation.
fn read_structure_or_tree(path: &Path, config: &Config) -> Result<Structure, CliError> {
    let text = read(path)?;
    if text.trim_start().starts_with("(structure") {
        return parse_structure(&text).map_err(|e| CliError::input(path.display().to_string(), e));
    }
    let tree = parse_tree(&text).map_err(|e| CliError::input(path.display().to_string(), e))?;
    Ok(config.rep()?.str_checked(&tree)?.structure)
}

pub fn equiv(config: &Config, a: &Path, b: &Path) -> Result<Report, CliError> {
    let left = read_structure_or_tree(a, config)?;
    let right = read_structure_or_tree(b, config)?;
    let mut registry = config.registry();
    let verdict = ebsp_core::equivalent(&mut registry, &left, &right, config.m, config.logic)?;
    let word = if verdict { "equivalent" } else { "inequivalent" };
    let text = format!(
        "{word}\n{} rank {}: {} ({} elements) vs {} ({} elements)\n",
        config.logic,
        config.m,
        a.display(),
        left.size(),
        b.display(),
        right.size()
    );
    let data = json!({
        "command": "equiv",
        "verdict": word,
        "equivalent": verdict,
        "logic": config.logic,
        "m": config.m,
        "sizes": [left.size(), right.size()],
        "budget": registry.budget(),
        "registry": registry.stats(),
    });
    Ok(Report { text, data, code: if verdict { exit::OK } else { exit::NEGATIVE } })
}

/// Rejects trees the representation does not accept, listing every
/// violation.
fn feasible(rep: &Rep, tree: &Tree) -> Result<(), CliError> {
    let violations = rep.check(tree);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(TreeError::Infeasible(violations).into())
    }
}

pub fn kernel(config: &Config, tree_path: &Path, out: Option<&Path>) -> Result<Report, CliError> {
    let tree = read_tree(tree_path)?;
    let rep = config.rep()?;
    feasible(&rep, &tree)?;
    let mut kernelizer = Kernelizer::new(rep, config.m, config.logic).with_registry(config.registry());
    let kernel = kernelizer.kernelize(&tree)?;
    let r = &kernel.report;
    let mut text = format!(
        "kernel of {} under {} at {} rank {} (working rank {})\n\
         input: {} nodes, degree {}, height {}\n\
         kernel: {} nodes, degree {}, height {}\n\
         classes {}, degree bound {}, height bound {}, size bound {}\n\
         degree cuts {}, height replacements {}\n",
        tree_path.display(),
        r.representation,
        r.logic,
        r.rank,
        r.working_rank,
        r.input.size,
        r.input.degree,
        r.input.height,
        r.kernel.size,
        r.kernel.degree,
        r.kernel.height,
        r.classes,
        r.degree_bound,
        r.height_bound,
        r.size_bound,
        r.degree_cuts,
        r.height_replacements,
    );
    let rendered = format!("{}\n", kernel.tree);
    match out {
        Some(path) => {
            write(path, &rendered)?;
            text.push_str(&format!("written to {}\n", path.display()));
        }
        None => text.push_str(&rendered),
    }
    let data = json!({
        "command": "kernel",
        "kernel": kernel.tree.to_string(),
        "origin": kernel.origin,
        "report": kernel.report,
        "within_bounds": kernel.report.within_bounds(),
    });
    Ok(Report::ok(text, data))
}

pub fn mc(config: &Config, formula_path: &Path, tree_path: &Path, check: bool) -> Result<Report, CliError> {
    let phi =
        parse_formula(&read(formula_path)?).map_err(|e| CliError::input(formula_path.display().to_string(), e))?;
    if phi.logic() == Logic::Mso && config.logic == Logic::Fo {
        return Err(LogicError::NotFirstOrder.into());
    }
    let (points, sets) = phi.free_vars();
    if let Some(v) = points.iter().chain(sets.iter()).next() {
        return Err(LogicError::Unbound(v.clone()).into());
    }
    let tree = read_tree(tree_path)?;
    let rep = config.rep()?;
    feasible(&rep, &tree)?;
    let rank = phi.rank();
    let mut kernelizer = Kernelizer::new(rep.clone(), rank, config.logic).with_registry(config.registry());
    let kernel = kernelizer.kernelize(&tree)?;
    let value = evaluate(&rep.str_image(&kernel.tree), &phi, &Assignment::new())?;
    let direct = if check { Some(evaluate(&rep.str_image(&tree), &phi, &Assignment::new())?) } else { None };
    let mut text = format!(
        "{value}\n{} sentence of rank {rank} on {} ({} nodes, kernel {} nodes)\n",
        config.logic,
        tree_path.display(),
        tree.size(),
        kernel.tree.size()
    );
    if let Some(d) = direct {
        text.push_str(&format!("direct evaluation: {d}\n"));
    }
    let data = json!({
        "command": "mc",
        "value": value,
        "direct": direct,
        "formula": format_formula(&phi),
        "rank": rank,
        "logic": config.logic,
        "report": kernel.report,
    });
    if direct.is_some_and(|d| d != value) {
        return Err(KernelError::Invalid("kernel evaluation disagrees with direct evaluation".into()).into());
    }
    let code = if value { exit::OK } else { exit::NEGATIVE };
    Ok(Report { text, data, code })
}

pub fn apply_scheme(scheme: &str, inputs: &[PathBuf], out: Option<&Path>) -> Result<Report, CliError> {
    let parts = inputs.iter().map(|p| read_structure(p)).collect::<Result<Vec<_>, _>>()?;
    let Some(first) = parts.first() else {
        return Err(CliError::Usage("apply-scheme needs at least one structure".into()));
    };
    let refs: Vec<&Structure> = parts.iter().collect();
    let (name, image) = if BUILTIN_NAMES.contains(&scheme) {
        let op = builtin(scheme, Some(first.vocab()))?;
        (op.name.clone(), op.apply(&refs)?)
    } else {
        let path = Path::new(scheme);
        let parsed = parse_scheme(&read(path)?).map_err(|e| CliError::input(path.display().to_string(), e))?;
        if parts.len() != 1 {
            return Err(CliError::Usage(format!("a scheme file takes one structure, got {}", parts.len())));
        }
        let image = parsed.apply(first)?.structure;
        (parsed.name().to_string(), image)
    };
    let rendered = format!("{}\n", image.format());
    let mut text = format!(
        "{name} applied to {} structure(s): image has {} elements and {} tuples\n",
        parts.len(),
        image.size(),
        image.tuple_count()
    );
    match out {
        Some(path) => {
            write(path, &rendered)?;
            text.push_str(&format!("written to {}\n", path.display()));
        }
        None => text.push_str(&rendered),
    }
    let data = json!({
        "command": "apply-scheme",
        "scheme": name,
        "inputs": parts.iter().map(Structure::size).collect::<Vec<_>>(),
        "size": image.size(),
        "tuples": image.tuple_count(),
        "image": image.format(),
    });
    Ok(Report::ok(text, data))
}

/// `start,w1,w2,...`.
pub fn parse_scales(text: &str) -> Result<(usize, Vec<usize>), CliError> {
    let numbers = text
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("--scales: {e}")))?;
    match numbers.split_first() {
        Some((&start, widths)) if !widths.is_empty() => Ok((start, widths.to_vec())),
        _ => Err(CliError::Usage("--scales needs f(1) followed by at least one width".into())),
    }
}

pub fn fractal(
    config: &Config,
    tree_path: &Path,
    scales: Option<&str>,
    out_dir: Option<&Path>,
) -> Result<Report, CliError> {
    let tree = read_tree(tree_path)?;
    let rep = config.rep()?;
    feasible(&rep, &tree)?;
    let mut kernelizer = Kernelizer::new(rep, config.m, config.logic).with_registry(config.registry());
    let plan = match scales {
        Some(s) => {
            let (start, widths) = parse_scales(s)?;
            ScalePlan::new(start, widths)?
        }
        None => ScalePlan::fitted(&mut kernelizer, &tree)?,
    };
    let chain = fractal_chain(&mut kernelizer, &tree, &plan, config.m)?;
    let mut text = format!(
        "fractal chain of {} at {} rank {}: input image has {} elements at scale {}\n",
        tree_path.display(),
        config.logic,
        config.m,
        chain.input_size,
        chain.input_scale
    );
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    for (i, element) in chain.elements.iter().enumerate() {
        let verdict = match element.equivalent {
            Some(true) => "equivalent",
            Some(false) => "INEQUIVALENT",
            None => "not checked",
        };
        text.push_str(&format!(
            "  #{:02} scale {}: {} elements, {} nodes, embeds {}, {verdict}\n",
            i + 1,
            element.scale,
            element.size,
            element.tree_size,
            element.embeds
        ));
        if let Some(dir) = out_dir {
            let path = dir.join(format!("{:02}-scale-{}.structure", i + 1, element.scale));
            write(&path, &format!("{}\n", element.structure.format()))?;
            files.push(path.display().to_string());
        }
    }
    text.push_str(&format!(
        "covers all scales: {}, gaps within bounds: {}\n",
        chain.covers_all_scales(),
        chain.gaps_within_bounds()
    ));
    let data = json!({
        "command": "fractal-chain",
        "plan": plan,
        "chain": chain,
        "covers_all_scales": chain.covers_all_scales(),
        "gaps_within_bounds": chain.gaps_within_bounds(),
        "files": files,
    });
    Ok(Report::ok(text, data))
}

/// Runs the acceptance criteria `ids` (all when empty). Budget flags
/// override the runner's own budgets.
pub fn selftest(config: &Config, ids: &[usize]) -> Result<Report, CliError> {
    if let Some(bad) = ids.iter().find(|&&id| !(1..=acceptance::TITLES.len()).contains(&id)) {
        return Err(CliError::Usage(format!("no acceptance criterion {bad}")));
    }
    let defaults = Settings::default();
    let settings = Settings {
        seed: config.seed,
        budget: config.budget_over(defaults.budget),
        game: GameBudget { max_work: config.max_work.unwrap_or(defaults.game.max_work) },
    };
    let ids: Vec<usize> = if ids.is_empty() { (1..=acceptance::TITLES.len()).collect() } else { ids.to_vec() };
    let outcomes: Vec<_> = ids.iter().map(|&id| acceptance::run(id, &settings)).collect();
    let mut text = String::new();
    for outcome in &outcomes {
        text.push_str(&outcome.line());
        text.push('\n');
        for failure in outcome.failures.iter().take(5) {
            text.push_str(&format!("    {failure}\n"));
        }
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    text.push_str(&format!("{} of {} criteria passed\n", outcomes.len() - failed, outcomes.len()));
    let data = json!({
        "command": "selftest",
        "seed": config.seed,
        "outcomes": outcomes,
        "failed": failed,
    });
    Ok(Report { text, data, code: if failed == 0 { exit::OK } else { exit::SELFTEST } })
}
