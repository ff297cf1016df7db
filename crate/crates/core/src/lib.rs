//! An adaptive functional language with a store-based self-adjusting
//! evaluator, change propagation over execution traces, and a pure
//! reference semantics to check it against.

pub mod engine;
pub mod harness;
pub mod propagate;
pub mod pure;
pub mod store;
pub mod syntax;
pub mod trace;

/// Runs `f`, first moving to a fresh stack segment if the current one is
/// nearly exhausted. Evaluation, lifting and substitution recurse on the
/// shape of terms and derivations, which user programs control.
pub(crate) fn grow<R>(f: impl FnOnce() -> R) -> R {
    stacker::maybe_grow(1024 * 1024, 8 * 1024 * 1024, f)
}
