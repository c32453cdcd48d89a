pub mod equivalence;
pub mod fractal;
pub mod gen;
pub mod kernelize;
pub mod logic;
pub mod representations;
pub mod sexpr;
pub mod structure;
pub mod transducers;
pub mod trees;

pub use equivalence::{ef_game_decide, equivalent, realized_classes, ClassId, ClassRegistry};
pub use logic::{evaluate, parse_formula, Assignment, Formula, Logic};
pub use structure::{disjoint_sum, is_embedding, Elem, PointedStructure, Structure, Vocabulary};
