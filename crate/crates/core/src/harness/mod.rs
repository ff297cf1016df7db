//! Random testing of the engine against its metatheory.

mod checks;
mod gen;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checks::{
    check_given, check_invariants, check_program, choose_edits, garbage_store, invariant_violations, lift_equal,
    outer_mod_labels, run_incremental, CheckKind, CheckOutcome, CheckResult, IncrementalError, IncrementalReport,
    Verdict, Witness,
};
pub use gen::{gen_case, gen_program, perturb_value, Case, GenConfig, Ty, Weights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub n: u64,
    /// Program `i` is generated from seed `seed + i`.
    pub seed: u64,
    pub gen: GenConfig,
    pub checks: Vec<CheckKind>,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            n: 100,
            seed: 0,
            gen: GenConfig { input_cells: 2, ..GenConfig::default() },
            checks: CheckKind::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
    pub discarded: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.pass + self.fail + self.discarded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzSummary {
    /// Ordered by seed.
    pub outcomes: Vec<CheckOutcome>,
    pub tallies: BTreeMap<CheckKind, Tally>,
}

impl FuzzSummary {
    pub fn failures(&self) -> u64 {
        self.tallies.values().map(|t| t.fail).sum()
    }

    pub fn failing_seeds(&self) -> Vec<u64> {
        self.outcomes.iter().filter(|o| o.failed()).map(|o| o.seed).collect()
    }

    /// One line per check: name, pass, fail and discard counts.
    pub fn table(&self) -> String {
        let mut s = format!("{:<14} {:>7} {:>7} {:>9}\n", "check", "pass", "fail", "discarded");
        for (k, t) in &self.tallies {
            s.push_str(&format!("{:<14} {:>7} {:>7} {:>9}\n", k.name(), t.pass, t.fail, t.discarded));
        }
        s
    }
}

/// Checks `n` generated programs in parallel. The result does not depend on
/// the number of worker threads.
pub fn run_fuzz(cfg: &FuzzConfig) -> FuzzSummary {
    let outcomes: Vec<CheckOutcome> = (0..cfg.n)
        .into_par_iter()
        .map(|i| check_program(&cfg.gen.with_seed(cfg.seed.wrapping_add(i)), &cfg.checks))
        .collect();
    let mut tallies: BTreeMap<CheckKind, Tally> = cfg.checks.iter().map(|k| (*k, Tally::default())).collect();
    for o in &outcomes {
        for c in &o.checks {
            let t = tallies.entry(c.name).or_default();
            match c.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail(_) => t.fail += 1,
                Verdict::Discarded(_) => t.discarded += 1,
            }
        }
    }
    FuzzSummary { outcomes, tallies }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run() {
        let s = run_fuzz(&FuzzConfig { n: 0, ..FuzzConfig::default() });
        assert!(s.outcomes.is_empty());
        assert_eq!(s.failures(), 0);
    }

    #[test]
    fn most_programs_complete_at_depth_six() {
        use crate::engine::{run_stable, FreshAllocator, NullOracle};
        let cfg = GenConfig::default();
        let completed = (0..1000)
            .filter(|&seed| {
                let p = gen_program(&cfg.with_seed(seed));
                run_stable(&crate::store::Store::new(), &p.root, &mut NullOracle, &mut FreshAllocator::new(), cfg.fuel).is_ok()
            })
            .count();
        assert!(completed >= 500, "only {completed} of 1000 completed");
    }

    #[test]
    fn seeded_runs_are_deterministic() {
        let cfg = FuzzConfig { n: 12, seed: 1, ..FuzzConfig::default() };
        let a = run_fuzz(&cfg);
        let b = run_fuzz(&cfg);
        assert_eq!(a, b);
        assert_eq!(a.outcomes.iter().map(|o| o.seed).collect::<Vec<_>>(), (1..13).collect::<Vec<_>>());
    }
}
