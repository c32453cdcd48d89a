use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ebsp_cli::{exit, SENTINEL};
use serde_json::Value;

const STAR: &str = "(node ∘ (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf a) (leaf b))";
const PATH3: &str = "(structure (vocab (E 2)) (universe 0 1 2) (rel E (0 1) (1 0) (1 2) (2 1)))";

fn scratch(test: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(test);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn put(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn ebsp(args: &[&str], files: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ebsp"));
    cmd.args(args);
    for f in files {
        cmd.arg(f);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> u8 {
    out.status.code().expect("exited normally") as u8
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn machine(out: &Output) -> Value {
    let text = stdout(out);
    let (_, json) = text.split_once(&format!("\n{SENTINEL}\n")).expect("sentinel line");
    serde_json::from_str(json).unwrap()
}

#[test]
fn same_file_twice_is_equivalent() {
    let dir = scratch("same");
    let a = put(&dir, "p3.structure", PATH3);
    let out = ebsp(&["equiv", "--logic", "mso", "-m", "2"], &[&a, &a]);
    assert_eq!(code(&out), exit::OK);
    assert!(stdout(&out).starts_with("equivalent\n"));
    assert_eq!(machine(&out)["equivalent"], Value::Bool(true));
}

#[test]
fn single_letter_words_differ_at_rank_one() {
    let dir = scratch("letters");
    let a = put(&dir, "a.tree", "(leaf a)");
    let b = put(&dir, "b.tree", "(leaf b)");
    let out = ebsp(&["equiv", "--repr", "words", "-m", "1"], &[&a, &b]);
    assert_eq!(code(&out), exit::NEGATIVE);
    assert!(stdout(&out).starts_with("inequivalent\n"));
    let zero = ebsp(&["equiv", "--repr", "words", "-m", "0"], &[&a, &b]);
    assert_eq!(code(&zero), exit::OK);
}

#[test]
fn over_budget_mso_reports_the_budget_code() {
    let dir = scratch("budget");
    let a = put(&dir, "p3.structure", PATH3);
    let out = ebsp(&["equiv", "--logic", "mso", "-m", "2", "--budget-mso", "2"], &[&a, &a]);
    assert_eq!(code(&out), exit::BUDGET);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    let star = put(&dir, "star.tree", STAR);
    let kernel = ebsp(&["kernel", "--logic", "mso", "-m", "1", "--max-work", "10"], &[&star]);
    assert_eq!(code(&kernel), exit::BUDGET);
}

#[test]
fn zero_budget_is_a_usage_error() {
    let dir = scratch("zero");
    let a = put(&dir, "p3.structure", PATH3);
    assert_eq!(code(&ebsp(&["equiv", "--budget-fo", "0"], &[&a, &a])), exit::USAGE);
    assert_eq!(code(&ebsp(&["frobnicate"], &[])), exit::USAGE);
    assert_eq!(code(&ebsp(&["selftest", "11"], &[])), exit::USAGE);
}

#[test]
fn kernel_of_a_kernel_is_identical() {
    let dir = scratch("fixpoint");
    let star = put(&dir, "star.tree", STAR);
    let first = dir.join("k1.tree");
    let second = dir.join("k2.tree");
    let out = ebsp(&["kernel", "-m", "1", "-o"], &[&first, &star]);
    assert_eq!(code(&out), exit::OK);
    let again = ebsp(&["kernel", "-m", "1", "-o"], &[&second, &first]);
    assert_eq!(code(&again), exit::OK);
    assert_eq!(fs::read_to_string(&first).unwrap(), fs::read_to_string(&second).unwrap());
    let report = machine(&again);
    assert_eq!(report["report"]["degree_cuts"], 0);
    assert_eq!(report["report"]["height_replacements"], 0);
}

#[test]
fn star_kernel_matches_the_recorded_report() {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let out = ebsp(&["kernel", "-m", "1"], &[&golden.join("star.tree")]);
    assert_eq!(code(&out), exit::OK);
    let recorded: Value = serde_json::from_str(&fs::read_to_string(golden.join("star.kernel.json")).unwrap()).unwrap();
    assert_eq!(machine(&out), recorded);
}

#[test]
fn infeasible_tree_lists_its_violations() {
    let dir = scratch("infeasible");
    let bad = put(&dir, "bad.tree", "(node f (node f (leaf b)) (node f (leaf a) (leaf a) (leaf a)))");
    let out = ebsp(&["kernel"], &[&bad]);
    assert_eq!(code(&out), exit::INFEASIBLE);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("node 1") && err.contains("node 3"), "{err}");
}

#[test]
fn unreadable_and_malformed_inputs_have_their_own_codes() {
    let dir = scratch("inputs");
    let missing = dir.join("missing.structure");
    assert_eq!(code(&ebsp(&["equiv"], &[&missing, &missing])), exit::IO);
    let broken = put(&dir, "broken.structure", "(structure (vocab (E 2)) (universe 0) (rel E (0 5)))");
    assert_eq!(code(&ebsp(&["equiv"], &[&broken, &broken])), exit::INPUT);
    let unary = put(&dir, "unary.structure", "(structure (vocab (P 1)) (universe 0) (rel P 0))");
    let path = put(&dir, "p3.structure", PATH3);
    assert_eq!(code(&ebsp(&["equiv"], &[&unary, &path])), exit::INPUT);
}

#[test]
fn model_checking_reports_truth_through_the_exit_code() {
    let dir = scratch("mc");
    let star = put(&dir, "star.tree", STAR);
    let has_b = put(&dir, "has_b", "(exists x (atom P_b x))");
    let all_a = put(&dir, "all_a", "(forall x (or (atom P_a x) (not (atom P_a x))))");
    let no_c = put(&dir, "no_a", "(forall x (atom P_a x))");
    let set = put(&dir, "set", "(exists-set X (exists x (in x X)))");
    assert_eq!(code(&ebsp(&["mc", "--check", "-m", "1"], &[&has_b, &star])), exit::OK);
    assert_eq!(code(&ebsp(&["mc", "--check"], &[&all_a, &star])), exit::OK);
    assert_eq!(code(&ebsp(&["mc", "--check"], &[&no_c, &star])), exit::NEGATIVE);
    assert_eq!(code(&ebsp(&["mc"], &[&set, &star])), exit::INPUT);
    assert_eq!(code(&ebsp(&["mc", "--logic", "mso"], &[&set, &star])), exit::OK);
}

#[test]
fn complement_twice_round_trips() {
    let dir = scratch("complement");
    let path = put(&dir, "p3.structure", PATH3);
    let once = dir.join("once.structure");
    let twice = dir.join("twice.structure");
    assert_eq!(code(&ebsp(&["apply-scheme", "complement", "-o"], &[&once, &path])), exit::OK);
    assert_eq!(code(&ebsp(&["apply-scheme", "complement", "-o"], &[&twice, &once])), exit::OK);
    let original = ebsp_core::structure::parse_structure(PATH3).unwrap();
    let back = ebsp_core::structure::parse_structure(&fs::read_to_string(&twice).unwrap()).unwrap();
    assert_eq!(back, original);
}

#[test]
fn scheme_files_apply_and_empty_images_fail() {
    let dir = scratch("scheme");
    let path = put(&dir, "p3.structure", PATH3);
    let squares = put(
        &dir,
        "square.scheme",
        "(scheme (dim 2) (xi (x y) true) (rel E (x1 x2 y1 y2) (or (and (= x1 y1) (atom E x2 y2)) (and (= x2 y2) (atom E x1 y1)))))",
    );
    let out = ebsp(&["apply-scheme"], &[&squares, &path]);
    assert_eq!(code(&out), exit::OK);
    assert_eq!(machine(&out)["size"], 9);
    let empty = put(&dir, "empty.scheme", "(scheme (dim 1) (xi (x) false))");
    assert_eq!(code(&ebsp(&["apply-scheme"], &[&empty, &path])), exit::SCHEME);
}

#[test]
fn fractal_chain_writes_numbered_structures() {
    let dir = scratch("fractal");
    let word = format!("(node ∘ {})", "(leaf a) ".repeat(12));
    let tree = put(&dir, "word.tree", &word);
    let chain_dir = dir.join("chain");
    let out =
        ebsp(&["fractal-chain", "--repr", "words", "-m", "1", "--scales", "8,2", "--out-dir"], &[&chain_dir, &tree]);
    assert_eq!(code(&out), exit::OK, "{}", String::from_utf8_lossy(&out.stderr));
    let data = machine(&out);
    let files = data["files"].as_array().unwrap();
    assert!(!files.is_empty());
    assert_eq!(data["covers_all_scales"], Value::Bool(true));
    for (i, f) in files.iter().enumerate() {
        let name = Path::new(f.as_str().unwrap()).file_name().unwrap().to_string_lossy().into_owned();
        assert!(name.starts_with(&format!("{:02}-scale-", i + 1)), "{name}");
        ebsp_core::structure::parse_structure(&fs::read_to_string(f.as_str().unwrap()).unwrap()).unwrap();
    }
    assert_eq!(files.len(), 2);
    let bad = ebsp(&["fractal-chain", "--repr", "words", "--scales", "0,2"], &[&tree]);
    assert_eq!(code(&bad), exit::FRACTAL);
    let unreachable = ebsp(&["fractal-chain", "--repr", "words", "-m", "1", "--scales", "2,2"], &[&tree]);
    assert_eq!(code(&unreachable), exit::FRACTAL);
}

#[test]
fn report_file_mirrors_stdout_and_runs_are_deterministic() {
    let dir = scratch("report");
    let star = put(&dir, "star.tree", STAR);
    let report = dir.join("report.txt");
    let out = ebsp(&["kernel", "-m", "2", "--report"], &[&report, &star]);
    assert_eq!(code(&out), exit::OK);
    assert_eq!(fs::read_to_string(&report).unwrap(), stdout(&out));
    let again = ebsp(&["kernel", "-m", "2"], &[&star]);
    assert_eq!(stdout(&again), stdout(&out));
}
