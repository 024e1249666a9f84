//! Termination analysis of logic programs with cut.
//!
//! A program and a moded query are turned into a termination graph over
//! abstract states, from which a cut-free definite program is extracted.
//! If that program terminates for the query class, so does the original.

pub mod abstract_machine;
pub mod graph;
pub mod groundness;
pub mod harness;
pub mod interpreter;
pub mod parser;
pub mod program;
pub mod state;
pub mod subst;
pub mod synth;
pub mod term;
pub mod unify;

pub use parser::{parse_goal, parse_program, parse_query, print_program, Mode, QuerySpec};
pub use program::{Clause, Program};
pub use state::{Element, State};
pub use subst::Subst;
pub use term::{Term, Var};
