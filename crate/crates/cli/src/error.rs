use std::path::PathBuf;

use thiserror::Error;

use ebsp_core::equivalence::EquivError;
use ebsp_core::fractal::FractalError;
use ebsp_core::kernelize::KernelError;
use ebsp_core::logic::LogicError;
use ebsp_core::representations::ReprError;
use ebsp_core::structure::StructureError;
use ebsp_core::transducers::SchemeError;
use ebsp_core::trees::TreeError;

/// Process exit codes.
pub mod exit {
    /// Success; for `equiv` and `mc`, a positive verdict.
    pub const OK: u8 = 0;
    /// Negative verdict of `equiv` (inequivalent) or `mc` (false).
    pub const NEGATIVE: u8 = 1;
    /// Bad command line.
    pub const USAGE: u8 = 2;
    /// An input or output file could not be read or written.
    pub const IO: u8 = 3;
    /// An input file is malformed or inconsistent (syntax, vocabulary, arity,
    /// unbound variables).
    pub const INPUT: u8 = 4;
    /// A type computation, game, evaluation or scheme application exceeded
    /// its budget.
    pub const BUDGET: u8 = 5;
    /// The tree is not feasible for the representation.
    pub const INFEASIBLE: u8 = 6;
    /// The scheme cannot be applied (empty image, source mismatch, set
    /// quantifiers in higher dimension).
    pub const SCHEME: u8 = 7;
    /// Kernelization failed (a composition conflict or a missing class
    /// representative).
    pub const KERNEL: u8 = 8;
    /// The scale plan is invalid or the chain cannot reach a requested scale.
    pub const FRACTAL: u8 = 9;
    /// At least one acceptance criterion failed.
    pub const SELFTEST: u8 = 10;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{what}: {message}")]
    Input { what: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Repr(#[from] ReprError),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("{0} acceptance criteria failed")]
    Selftest(usize),
}

impl CliError {
    pub fn input(what: impl Into<String>, message: impl ToString) -> Self {
        CliError::Input { what: what.into(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Input { .. } => exit::INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::Equiv(e) => equiv_code(e),
            CliError::Kernel(e) => kernel_code(e),
            CliError::Scheme(e) => scheme_code(e),
            CliError::Fractal(e) => match e {
                FractalError::Kernel(k) => kernel_code(k),
                FractalError::Equiv(q) => equiv_code(q),
                _ => exit::FRACTAL,
            },
            CliError::Repr(e) => repr_code(e),
            CliError::Logic(e) => logic_code(e),
            CliError::Structure(e) => structure_code(e),
            CliError::Tree(e) => tree_code(e),
            CliError::Selftest(_) => exit::SELFTEST,
        }
    }
}

fn equiv_code(e: &EquivError) -> u8 {
    match e {
        EquivError::BudgetExceeded { .. } | EquivError::SetsTooLarge => exit::BUDGET,
        EquivError::VocabularyMismatch => exit::INPUT,
    }
}

fn tree_code(e: &TreeError) -> u8 {
    match e {
        TreeError::Infeasible(_) => exit::INFEASIBLE,
        _ => exit::INPUT,
    }
}

fn repr_code(e: &ReprError) -> u8 {
    match e {
        ReprError::Tree(t) => tree_code(t),
        _ => exit::INPUT,
    }
}

fn logic_code(e: &LogicError) -> u8 {
    match e {
        LogicError::BudgetExceeded { .. } => exit::BUDGET,
        _ => exit::INPUT,
    }
}

fn structure_code(e: &StructureError) -> u8 {
    match e {
        StructureError::BudgetExceeded { .. } => exit::BUDGET,
        _ => exit::INPUT,
    }
}

fn kernel_code(e: &KernelError) -> u8 {
    match e {
        KernelError::AtNode { source, .. } => equiv_code(source),
        KernelError::Equiv(q) => equiv_code(q),
        KernelError::Tree(t) => tree_code(t),
        KernelError::Repr(r) => repr_code(r),
        KernelError::Logic(l) => logic_code(l),
        KernelError::Structure(s) => structure_code(s),
        KernelError::Conflict { .. } | KernelError::MissingRepresentative(_) | KernelError::Invalid(_) => exit::KERNEL,
    }
}

fn scheme_code(e: &SchemeError) -> u8 {
    match e {
        SchemeError::BudgetExceeded { .. } => exit::BUDGET,
        SchemeError::Equiv(q) => equiv_code(q),
        SchemeError::Logic(l) => logic_code(l),
        SchemeError::Structure(s) => structure_code(s),
        SchemeError::EmptyImage | SchemeError::SourceMismatch { .. } | SchemeError::MsoDimension => exit::SCHEME,
        _ => exit::INPUT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ebsp_core::Logic;

    #[test]
    fn budget_errors_share_a_code_wherever_they_surface() {
        let budget = EquivError::BudgetExceeded { logic: Logic::Mso, m: 3, size: 40, reason: "test".into() };
        let wrapped = KernelError::AtNode { node: 0, source: budget.clone() };
        assert_eq!(CliError::from(budget.clone()).exit_code(), exit::BUDGET);
        assert_eq!(CliError::from(wrapped).exit_code(), exit::BUDGET);
        assert_eq!(CliError::from(FractalError::Equiv(budget)).exit_code(), exit::BUDGET);
    }

    #[test]
    fn codes_are_distinct() {
        let mut codes = [
            exit::OK,
            exit::NEGATIVE,
            exit::USAGE,
            exit::IO,
            exit::INPUT,
            exit::BUDGET,
            exit::INFEASIBLE,
            exit::SCHEME,
            exit::KERNEL,
            exit::FRACTAL,
            exit::SELFTEST,
        ];
        codes.sort();
        assert!(codes.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(CliError::from(TreeError::Infeasible(Vec::new())).exit_code(), exit::INFEASIBLE);
        assert_eq!(CliError::from(SchemeError::EmptyImage).exit_code(), exit::SCHEME);
    }
}
