//! The decision chain from condition reports to a classification.

use crate::arcs::ArcSet;
use crate::conditions::{bounded_im_threshold, ConditionReport};
use crate::continuity::ContinuityReport;
use crate::index::{KernelReport, KernelStatus};
use crate::spectrum::ImSet;
use crate::tower::{Perfectness, Tower};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomotopyClass {
    FiniteSets,
    MCircles { m: usize },
    Annulus,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MilnorSpecial {
    ExtZero,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    LiftExistsC0,
    LiftExistsDyadic,
    ObstructedIndex,
    Inconclusive,
}

impl Classification {
    pub fn exit_code(self) -> i32 {
        match self {
            Classification::LiftExistsC0 | Classification::LiftExistsDyadic => 0,
            Classification::ObstructedIndex => 2,
            Classification::Inconclusive => 3,
        }
    }

    pub fn is_lift(self) -> bool {
        matches!(self, Classification::LiftExistsC0 | Classification::LiftExistsDyadic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    SurjectiveConnectingMaps,
    MilnorSpecialCase,
    IndexObstruction,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectnessReport {
    pub value: Perfectness,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub classification: Classification,
    pub route: Route,
    pub kernel_status: KernelStatus,
    /// Reported under `levels[]` and `continuity` at the top of the report.
    #[serde(skip_serializing)]
    pub per_level: Vec<ConditionReport>,
    #[serde(skip_serializing)]
    pub continuity: ContinuityReport,
    pub perfectness: PerfectnessReport,
    pub homotopy_class: HomotopyClass,
    pub milnor_special: MilnorSpecial,
    /// Conditions verified for `n₀ ≤ n ≤ N`.
    pub certified_from_level: Option<u32>,
    pub verified_through_level: u32,
    pub blocking: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerdictError {
    #[error("inputs disagree on depth: tower {tower}, conditions {conditions}, continuity {continuity}")]
    DepthMismatch { tower: u32, conditions: usize, continuity: u32 },
}

/// Every nonempty raster row is a full circle and the nonempty rows form
/// `groups` runs of consecutive rows.
fn full_row_groups(t: &Tower) -> Option<Vec<usize>> {
    t.levels
        .iter()
        .map(|level| {
            let r = &level.omega;
            if r.contains_zero {
                return None;
            }
            let mut groups = 0;
            let mut prev_filled = false;
            for row in r.row_range() {
                let empty = r.row_is_empty(row);
                if !empty && !r.row_is_full(row) {
                    return None;
                }
                if !empty && !prev_filled {
                    groups += 1;
                }
                prev_filled = !empty;
            }
            Some(groups)
        })
        .collect()
}

pub fn classify_homotopy(t: &Tower) -> HomotopyClass {
    if t.all_finite() {
        return HomotopyClass::FiniteSets;
    }
    let all_full = t
        .levels
        .iter()
        .all(|l| l.images.iter().all(|img| matches!(img.theta, ArcSet::Full)));
    if !all_full || t.bounds.eta == f64::NEG_INFINITY {
        return HomotopyClass::Other;
    }
    let Some(groups) = full_row_groups(t) else {
        return HomotopyClass::Other;
    };
    if let Some(values) = t.spec.finite_re_values() {
        return HomotopyClass::MCircles { m: values.len() };
    }
    let proj = t.spec.re_projection();
    if proj.len() == 1 && groups.iter().all(|&g| g == 1) {
        return HomotopyClass::Annulus;
    }
    HomotopyClass::Other
}

pub fn milnor_special(hc: HomotopyClass) -> MilnorSpecial {
    match hc {
        HomotopyClass::FiniteSets | HomotopyClass::MCircles { .. } | HomotopyClass::Annulus => MilnorSpecial::ExtZero,
        HomotopyClass::Other => MilnorSpecial::Unknown,
    }
}

/// Smallest `n₀ < N` such that every tested level from `n₀` on satisfies
/// separation and one of the two sufficient conditions.
pub fn surjective_from(conditions: &[ConditionReport]) -> Option<u32> {
    let last = conditions.len().checked_sub(1)?;
    let mut n0 = None;
    for (n, c) in conditions.iter().enumerate().rev() {
        if !c.surjective() {
            break;
        }
        n0 = Some(n);
    }
    n0.filter(|&n| n < last).map(|n| n as u32)
}

fn stability_notes(t: &Tower) -> Vec<String> {
    let mut notes = Vec::new();
    if let Some(n) = bounded_im_threshold(&t.spec) {
        notes.push(format!(
            "Im σ(A) is bounded: for every n ≥ {n} the level lies in the open right half-plane, so A(Ω_n) = ∅ and the direction π is omitted beyond the tested depth"
        ));
    }
    if t.all_finite() && t.spec.primitives.iter().any(|p| matches!(p.im_set(), ImSet::Lattice { .. })) {
        notes.push("lattice levels halve their spacing at each step, so the finite pattern repeats at every depth".into());
    }
    notes
}

pub fn decide(
    t: &Tower,
    conditions: &[ConditionReport],
    kernel: &KernelReport,
    continuity: &ContinuityReport,
    perfectness: (Perfectness, String),
) -> Result<Verdict, VerdictError> {
    if conditions.len() != t.levels.len() || continuity.tower_depth != t.depth {
        return Err(VerdictError::DepthMismatch {
            tower: t.depth,
            conditions: conditions.len(),
            continuity: continuity.tower_depth,
        });
    }
    let homotopy_class = classify_homotopy(t);
    let milnor = milnor_special(homotopy_class);
    let n0 = surjective_from(conditions);
    let mut blocking = Vec::new();
    let mut notes = stability_notes(t);
    notes.extend(kernel.notes.iter().cloned());
    let (mut classification, route, certified) = match &kernel.status {
        KernelStatus::Obstructed { lambda, level, index } => {
            blocking.push(format!("index {index} at λ = {lambda} on level {level}"));
            if milnor == MilnorSpecial::ExtZero {
                notes.push("Ext(Δ) = 0 for this homotopy class, so the declared model cannot come from a normal semigroup with this spectrum".into());
            }
            (Classification::ObstructedIndex, Route::IndexObstruction, None)
        }
        KernelStatus::ObstructedUnknown if milnor == MilnorSpecial::ExtZero => {
            notes.push("Ext(Δ) = 0 for this homotopy class, so the extension is trivial without the kernel condition".into());
            (Classification::LiftExistsDyadic, Route::MilnorSpecialCase, n0)
        }
        KernelStatus::ObstructedUnknown => {
            blocking.push("kernel condition not established: no operator model and no normal-lift assumption".into());
            (Classification::Inconclusive, Route::None, None)
        }
        KernelStatus::Passes | KernelStatus::Assumed => {
            if milnor == MilnorSpecial::ExtZero {
                if let Some(n) = n0 {
                    notes.push(format!("the surjective-connecting-maps route also applies from level {n}"));
                }
                (Classification::LiftExistsDyadic, Route::MilnorSpecialCase, n0)
            } else if let Some(n) = n0 {
                (Classification::LiftExistsDyadic, Route::SurjectiveConnectingMaps, Some(n))
            } else {
                let failing: Vec<u32> = conditions.iter().filter(|c| !c.surjective()).map(|c| c.level).collect();
                blocking.push(format!(
                    "homotopy class {homotopy_class:?} has no Milnor special case, and separation with an empty direction or cross retract fails at levels {failing:?}"
                ));
                (Classification::Inconclusive, Route::None, None)
            }
        }
    };
    if classification == Classification::LiftExistsDyadic {
        if perfectness.0 == Perfectness::Yes && !continuity.necessary.fails() {
            classification = Classification::LiftExistsC0;
        } else {
            if perfectness.0 != Perfectness::Yes {
                notes.push(format!("no C₀ upgrade: perfectness is {:?}", perfectness.0));
            }
            if continuity.necessary.fails() {
                notes.push("no C₀ upgrade: the necessary continuity condition fails".into());
            }
        }
    }
    Ok(Verdict {
        classification,
        route,
        kernel_status: kernel.status.clone(),
        per_level: conditions.to_vec(),
        continuity: continuity.clone(),
        perfectness: PerfectnessReport {
            value: perfectness.0,
            reason: perfectness.1,
        },
        homotopy_class,
        milnor_special: milnor,
        certified_from_level: certified,
        verified_through_level: t.depth,
        blocking,
        notes,
    })
}
