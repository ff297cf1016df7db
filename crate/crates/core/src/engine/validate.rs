//! Post-hoc audit of a finished run: the validity conditions on allocation
//! and target, plus the store-growth and frame invariants.

use thiserror::Error;

use crate::store::{fmt_locset, LocSet, Location};
use crate::trace::{duplicate_labels, Alloc};

use super::{Outcome, RunReport};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ValidityError {
    #[error("{0} is allocated but was reachable before the run")]
    AllocReachable(Location),
    #[error("target {0} was reachable before the run")]
    TargetReachable(Location),
    #[error("target {0} is allocated by the run itself")]
    TargetAllocated(Location),
    #[error("store domain mismatch at {0}: dom(after) must equal dom(before) plus the allocated set")]
    StoreGrowth(Location),
    #[error("{0} changed but was neither allocated nor the target")]
    Frame(Location),
    #[error("{0} labels more than one mod node")]
    DuplicateLabel(Location),
    #[error("reported alloc set {reported} differs from the trace's {actual}")]
    AllocMismatch { reported: String, actual: String },
    #[error("target {0} holds no value after the run")]
    TargetUnwritten(Location),
}

fn first(set: LocSet) -> Option<Location> {
    set.into_iter().next()
}

/// `extra` joins the expected domain: a changeable run also binds its target.
fn common(report: &RunReport, extra: Option<Location>) -> Result<LocSet, ValidityError> {
    let actual = report.trace.alloc();
    if actual != report.alloc_set {
        return Err(ValidityError::AllocMismatch {
            reported: fmt_locset(&report.alloc_set),
            actual: fmt_locset(&actual),
        });
    }
    if let Some(l) = first(duplicate_labels(&report.trace)) {
        return Err(ValidityError::DuplicateLabel(l));
    }
    if let Some(l) = first(actual.intersection(&report.reach_before).copied().collect()) {
        return Err(ValidityError::AllocReachable(l));
    }
    let mut expected_dom = report.initial_store.dom();
    expected_dom.extend(actual.iter().copied());
    expected_dom.extend(extra);
    let dom = report.final_store.dom();
    if let Some(l) = first(dom.symmetric_difference(&expected_dom).copied().collect()) {
        return Err(ValidityError::StoreGrowth(l));
    }
    Ok(actual)
}

/// Audits a stable run.
pub fn validate_s(report: &RunReport) -> Result<(), ValidityError> {
    let alloc = common(report, None)?;
    let changed = report.initial_store.changed_locations(&report.final_store);
    if let Some(l) = changed.into_iter().find(|l| !alloc.contains(l)) {
        return Err(ValidityError::Frame(l));
    }
    Ok(())
}

/// Audits a changeable run that wrote to `target`.
pub fn validate_c(report: &RunReport, target: Location) -> Result<(), ValidityError> {
    let alloc = common(report, Some(target))?;
    if report.reach_before.contains(&target) {
        return Err(ValidityError::TargetReachable(target));
    }
    if alloc.contains(&target) {
        return Err(ValidityError::TargetAllocated(target));
    }
    if !report.final_store.contains(target) {
        return Err(ValidityError::TargetUnwritten(target));
    }
    let changed = report.initial_store.changed_locations(&report.final_store);
    if let Some(l) = changed.into_iter().find(|l| !alloc.contains(l) && *l != target) {
        return Err(ValidityError::Frame(l));
    }
    Ok(())
}

/// Dispatches on the kind of run.
pub fn validate(report: &RunReport) -> Result<(), ValidityError> {
    match report.outcome {
        Outcome::Value(_) => validate_s(report),
        Outcome::Target(l) => validate_c(report, l),
    }
}
