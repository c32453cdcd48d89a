//! The `ebsp` command line and its acceptance runner.
//!
//! # File formats
//!
//! Every artifact is one S-expression in UTF-8. Labels and names are bare
//! tokens or double-quoted strings; `;` starts a comment.
//!
//! ```text
//! structure := (structure (vocab (NAME ARITY)...) (universe ELEM...) rel...)
//! rel       := (rel NAME ELEM...)              ; unary: one tuple per element
//!            | (rel NAME (ELEM...)...)          ; tuples
//! tree      := (leaf LABEL) | (node LABEL tree...)
//! formula   := true | false | (= x y) | (in x X) | (id< x y) | (atom REL x...)
//!            | (not f) | (and f...) | (or f...) | (implies f g)
//!            | (exists x f) | (forall x f) | (exists-set X f) | (forall-set X f)
//! scheme    := (scheme (dim T) [(name N)] [(source (vocab ...))]
//!                (xi (x1..xT) formula) (rel R (v...) formula)...)
//! alphabet  := (alphabet (int item...) (leaf item...) [(rank (LABEL K)...)] [(rho (LABEL D)...)])
//! item      := LABEL | (edge-functions N) | (pairs LETTER...) | (colours N LETTER...)
//! ```
//!
//! # Output
//!
//! Every command prints human-readable text, the line
//! [`commands::SENTINEL`], then a JSON object. `--report` writes the same
//! to a file.

pub mod acceptance;
pub mod commands;
pub mod error;

pub use commands::{Config, Report, SENTINEL};
pub use error::{exit, CliError};
