//! Boolean basis analysis and succinctness-preserving translation of modal
//! formulae.
//!
//! The library is organised around a small pipeline:
//!
//! * [`boolfn`] — truth tables, classification predicates (per-argument and
//!   local monotonicity, affinity), Post completeness, basis files.
//! * [`formula`] — modal formulae over a basis, concrete syntax, metrics,
//!   substitution, E/O sets.
//! * [`repr`] — synthesis of basis formulae for a target function and the
//!   single-occurrence representations that drive translation.
//! * [`translate`] — derivatives, rank, elimination of basis functions, and
//!   the end-to-end basis-to-basis translation with size reporting.
//! * [`semantics`] — Kripke models, model checking, and satisfiability /
//!   equivalence deciders for the frame classes K, T, and S5.
//! * [`s5`] — depth balancing over S5: splitting, prefix reduction, and
//!   bi-implication elimination on balanced formulae.
//! * [`cli`] — the `basisml` command-line interface.

pub mod boolfn;
pub mod cli;
pub mod formula;
pub mod repr;
pub mod s5;
pub mod semantics;
pub mod translate;
