//! Decompose ordinary safe Petri nets into networks of sequential components.
//!
//! The pipeline: parse a place/transition net, compute which places can be
//! marked simultaneously (the concurrency relation), encode "partition the
//! places into `n` conflict-free units" as an SMT-LIB 2.6 formula in one of
//! six quantifier-free logic fragments, run external solvers on the result,
//! and turn returned models into validated flat unit-safe NUPN decompositions.
//! A separate module curates solver-timing records into benchmark families.

pub mod bench;
pub mod color;
pub mod decomp;
pub mod model;
pub mod net;
pub mod reach;
pub mod sexp;
pub mod smt;
pub mod solver;

pub use net::{numbering, parse_net, PetriNet, PlaceNumbering};
pub use reach::{concurrency_relation, explore_reachable, ConcurrencyRelation, Marking};
pub use smt::{encode, formula_stats, print_smtlib, EncodingConfig, Fragment, SmtScript};
