//! Three-case trial scoring with time grading, press-and-hold timing and
//! per-item session totals.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{JointOrientation, TargetPoint};

/// Frame rate of the tracked streams.
pub const FPS: f64 = 30.0;
pub const DEFAULT_BEST_TIME: f64 = 2.0;
pub const DEFAULT_MAX_TIME: f64 = 10.0;
/// Hand deviation tolerated during a press-and-hold, metres.
pub const DEFAULT_STEADY_RADIUS: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("best time {best} must be positive and below max time {max}")]
    InvalidTimes { best: f64, max: f64 },
    #[error("{0:?} outcome without a completion time")]
    MissingTime(TrialResult),
    #[error("completion time must be positive, got {0}")]
    InvalidCompletionTime(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialResult {
    Successful,
    PartiallySuccessful,
    NotSuccessful,
}

impl TrialResult {
    pub fn base_score(self) -> f64 {
        match self {
            TrialResult::Successful => 1.0,
            TrialResult::PartiallySuccessful => 0.5,
            TrialResult::NotSuccessful => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub result: TrialResult,
    /// Seconds; absent when the target was never reached.
    pub completion_time: Option<f64>,
    /// Required press-and-hold duration, 0 for grasp trials.
    pub hold_required: f64,
    pub hold_steady: bool,
}

impl TrialOutcome {
    /// Reach-grasp-release outcome (no hold component).
    pub fn reach(result: TrialResult, completion_time: Option<f64>) -> Self {
        Self {
            result,
            completion_time,
            hold_required: 0.0,
            hold_steady: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialScore {
    pub base: f64,
    pub time_multiplier: f64,
    pub value: f64,
}

/// Linear time credit: 1 at `best_time`, 0 at `max_time`, clamped outside.
pub fn time_multiplier(t: f64, best_time: f64, max_time: f64) -> f64 {
    ((max_time - t) / (max_time - best_time)).clamp(0.0, 1.0)
}

pub fn score_trial(
    outcome: &TrialOutcome,
    best_time: f64,
    max_time: f64,
) -> Result<TrialScore, ScoringError> {
    if !(best_time > 0.0 && best_time < max_time && max_time.is_finite()) {
        return Err(ScoringError::InvalidTimes {
            best: best_time,
            max: max_time,
        });
    }
    let base = outcome.result.base_score();
    let time_multiplier = match outcome.result {
        TrialResult::Successful => {
            let t = outcome
                .completion_time
                .ok_or(ScoringError::MissingTime(outcome.result))?;
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
            if !(t > 0.0) {
                return Err(ScoringError::InvalidCompletionTime(t));
            }
            time_multiplier(t, best_time, max_time)
        }
        // partial attempts are not time graded
        TrialResult::PartiallySuccessful => 1.0,
        TrialResult::NotSuccessful => 0.0,
    };
    Ok(TrialScore {
        base,
        time_multiplier,
        value: base * time_multiplier,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoldProgress {
    /// Seconds of uninterrupted steady hold at the end of the stream.
    pub elapsed_hold: f64,
    /// Times a running hold timer was restarted by an unsteady frame.
    pub resets: u32,
    pub result: TrialResult,
    /// Frames consumed before the hold completed (the whole stream otherwise).
    pub frames_used: usize,
}

/// Runs the press-and-hold timer over a 30 fps steadiness stream.
pub fn hold_trial_progress(steady: &[bool], hold_required: f64) -> HoldProgress {
    let required_frames = (hold_required * FPS - 1e-9).ceil().max(0.0) as usize;
    let progress = |run: usize, resets, result, frames_used| HoldProgress {
        elapsed_hold: run as f64 / FPS,
        resets,
        result,
        frames_used,
    };
    if required_frames == 0 {
        return progress(0, 0, TrialResult::Successful, 0);
    }
    let mut run = 0usize;
    let mut resets = 0u32;
    for (i, &ok) in steady.iter().enumerate() {
        if ok {
            run += 1;
            if run >= required_frames {
                return progress(run, resets, TrialResult::Successful, i + 1);
            }
        } else if run > 0 {
            run = 0;
            resets += 1;
        }
    }
    progress(run, resets, TrialResult::NotSuccessful, steady.len())
}

/// Per-frame steadiness: hand within `radius` of the press point.
pub fn steadiness(positions: &[TargetPoint], anchor: &TargetPoint, radius: f64) -> Vec<bool> {
    positions.iter().map(|p| p.distance(anchor) < radius).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MasItem {
    UpperArmFunction,
    HandMovements,
    AdvancedHandActivities,
    PosturalBalance,
}

impl MasItem {
    pub const ALL: [MasItem; 4] = [
        MasItem::UpperArmFunction,
        MasItem::HandMovements,
        MasItem::AdvancedHandActivities,
        MasItem::PosturalBalance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MasItem::UpperArmFunction => "upper_arm_function",
            MasItem::HandMovements => "hand_movements",
            MasItem::AdvancedHandActivities => "advanced_hand_activities",
            MasItem::PosturalBalance => "postural_balance",
        }
    }
}

/// Fraction of the joint range below which a reach counts as a plain
/// grasp-and-release near the body.
const NEAR_BODY_FRACTION: f64 = 0.2;

/// Tags a trial with the MAS item it exercises. Press-and-hold trials test
/// postural control; reaches are tagged by their dominant joint demand.
pub fn classify_trial(orient: &JointOrientation, hold_required: f64) -> MasItem {
    if hold_required > 0.0 {
        return MasItem::PosturalBalance;
    }
    let a = orient.to_array();
    let shoulder = (a[0].abs() / 90.0).max(a[1].abs() / 90.0).max(a[2].abs() / 90.0);
    let elbow = a[3].abs() / 120.0;
    if shoulder.max(elbow) < NEAR_BODY_FRACTION {
        MasItem::AdvancedHandActivities
    } else if elbow > shoulder {
        MasItem::HandMovements
    } else {
        MasItem::UpperArmFunction
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionScore {
    pub total: f64,
    pub per_mas_item: BTreeMap<MasItem, f64>,
}

pub fn session_score(scores: &[(MasItem, TrialScore)]) -> SessionScore {
    let mut per_mas_item = BTreeMap::new();
    for (item, score) in scores {
        *per_mas_item.entry(*item).or_insert(0.0) += score.value;
    }
    SessionScore {
        total: scores.iter().map(|(_, s)| s.value).sum(),
        per_mas_item,
    }
}
