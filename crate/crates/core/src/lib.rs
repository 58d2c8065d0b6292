//! Stream constraint satisfaction: models over infinite streams on finite
//! integer alphabets, compiled into deterministic Büchi automata that
//! describe every solution.
//!
//! The pipeline is [`parse`] → [`normalize`] → [`solve`] →
//! [`BuchiAutomaton::prune`]. [`oracle`] and [`unroll`] provide independent
//! ground truth and a horizon-unrolling baseline; [`benchgen`] generates
//! benchmark instances.

pub mod automaton;
pub mod benchgen;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod parser;
pub mod rng;
pub mod solver;
pub mod unroll;

pub use automaton::{AutomatonError, BuchiAutomaton, Run, StateId};
pub use model::*;
pub use normalize::{alpha_equivalent, count_temporal_keywords, normalize, NormalForm, Strategy};
pub use parser::{parse, parse_str, unparse, ModelSource, ParseDiagnostic, Severity};
pub use solver::{
    are_equal, solve, DynItem, SearchNode, SolveError, SolveOptions, SolveStats, Solver,
};

/// Normalizes, solves and prunes; returns the raw and pruned automata.
pub fn compile(
    p: &StCsp,
    opts: &SolveOptions,
) -> Result<(BuchiAutomaton, BuchiAutomaton, SolveStats), SolveError> {
    let (nf, _) = normalize(p, Strategy::default());
    let (raw, stats) = solve(&nf, opts)?;
    let pruned = raw.prune();
    Ok((raw, pruned, stats))
}
