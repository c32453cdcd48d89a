use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ebsp_cli::commands::{self, Config, Report};
use ebsp_cli::{exit, CliError};
use ebsp_core::Logic;

#[derive(Parser)]
#[command(
    name = "ebsp",
    version,
    about = "Rank-m equivalence, kernels and logical fractals of tree-represented structures"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogicArg {
    Fo,
    Mso,
}

#[derive(Args)]
struct Global {
    #[arg(long, value_enum, default_value = "fo", global = true)]
    logic: LogicArg,
    /// Quantifier rank.
    #[arg(short, default_value_t = 2, global = true)]
    m: usize,
    /// ranked-trees, unordered-trees, words, nested-words, cograph or npartite:<n>.
    #[arg(long, default_value = "ranked-trees", global = true)]
    repr: String,
    #[arg(long, global = true)]
    alphabet: Option<PathBuf>,
    /// Largest universe for FO type computations.
    #[arg(long, global = true)]
    budget_fo: Option<usize>,
    /// Largest universe for MSO type computations.
    #[arg(long, global = true)]
    budget_mso: Option<usize>,
    /// Largest estimated number of game positions per type computation.
    #[arg(long, global = true)]
    max_work: Option<u64>,
    #[arg(long, default_value_t = 2024, global = true)]
    seed: u64,
    /// Also write the report here.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide rank-m equivalence of two structures (or trees under --repr).
    Equiv { a: PathBuf, b: PathBuf },
    /// Kernelize a tree.
    Kernel {
        tree: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a sentence on the image of a tree through its kernel.
    Mc {
        formula: PathBuf,
        tree: PathBuf,
        /// Also evaluate on the full image and fail on disagreement.
        #[arg(long)]
        check: bool,
    },
    /// Apply a scheme file or a built-in operation to structures.
    ApplyScheme {
        scheme: String,
        #[arg(required = true)]
        structures: Vec<PathBuf>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Produce one substructure per scale below the input's.
    FractalChain {
        tree: PathBuf,
        /// f(1) followed by scale widths, e.g. 4,2. Fitted to the tree when absent.
        #[arg(long)]
        scales: Option<String>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run acceptance criteria (all when none are given).
    Selftest { ids: Vec<usize> },
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let g = cli.global;
    let config = Config {
        logic: match g.logic {
            LogicArg::Fo => Logic::Fo,
            LogicArg::Mso => Logic::Mso,
        },
        m: g.m,
        repr: g.repr,
        alphabet: g.alphabet,
        budget_fo: g.budget_fo,
        budget_mso: g.budget_mso,
        max_work: g.max_work,
        seed: g.seed,
        report: g.report,
    };
    config.validate()?;
    let report = match cli.command {
        Command::Equiv { a, b } => commands::equiv(&config, &a, &b)?,
        Command::Kernel { tree, out } => commands::kernel(&config, &tree, out.as_deref())?,
        Command::Mc { formula, tree, check } => commands::mc(&config, &formula, &tree, check)?,
        Command::ApplyScheme { scheme, structures, out } => {
            commands::apply_scheme(&scheme, &structures, out.as_deref())?
        }
        Command::FractalChain { tree, scales, out_dir } => {
            commands::fractal(&config, &tree, scales.as_deref(), out_dir.as_deref())?
        }
        Command::Selftest { ids } => commands::selftest(&config, &ids)?,
    };
    if let Some(path) = &config.report {
        commands::write(path, &report.render())?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{}", report.render());
            ExitCode::from(report.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
