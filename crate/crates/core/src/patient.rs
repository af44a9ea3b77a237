//! Parametric simulated patient.
//!
//! Success probability is a product of per-joint logistic comfort curves:
//! a joint demand well inside its comfort limit costs nothing, one well past
//! it drives the probability to zero. Demands are absolute angles measured
//! from the rest pose (all four angles zero).

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::JointOrientation;
use crate::scoring::{TrialOutcome, TrialResult};
use crate::taskgen::grid::{ActionGrid, Cell, DIMS};

/// Standard deviation of the completion-time noise, seconds.
pub const TIME_NOISE_SD: f64 = 0.2;
/// Completion times are never reported below one frame at 30 fps.
pub const MIN_COMPLETION_TIME: f64 = 1.0 / 30.0;

const PRESET_MILD: &str = include_str!("../presets/mild.json");
const PRESET_MODERATE: &str = include_str!("../presets/moderate.json");
const PRESET_SEVERE: &str = include_str!("../presets/severe.json");

pub const PRESET_NAMES: [&str; 3] = ["mild", "moderate", "severe"];

#[derive(Debug, Error)]
pub enum PatientError {
    #[error("invalid patient profile: {0}")]
    Invalid(String),
    #[error("cannot read patient profile {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed patient profile: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown patient preset {0:?}")]
    UnknownPreset(String),
}

/// A value per orientation dimension, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointValues {
    pub sh_yaw: f64,
    pub sh_pitch: f64,
    pub sh_roll: f64,
    pub elbow: f64,
}

impl JointValues {
    pub fn splat(v: f64) -> Self {
        Self::from_array([v; DIMS])
    }

    pub fn from_array(a: [f64; DIMS]) -> Self {
        Self {
            sh_yaw: a[0],
            sh_pitch: a[1],
            sh_roll: a[2],
            elbow: a[3],
        }
    }

    pub fn to_array(self) -> [f64; DIMS] {
        [self.sh_yaw, self.sh_pitch, self.sh_roll, self.elbow]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientProfile {
    /// Largest comfortable demand per joint, degrees from rest.
    pub comfort_limits: JointValues,
    /// Width of the comfort transition per joint, degrees.
    pub softness: JointValues,
    /// Success probability at rest.
    pub p_max: f64,
    /// Completion time for a rest-pose target, seconds.
    pub base_time: f64,
    /// Additional completion time per degree of total demand.
    pub time_per_deg: f64,
    /// Share of failed reaches that still end in a partial attempt.
    pub partial_fraction: f64,
    /// Per-trial multiplicative decay of `p_max`.
    pub fatigue_rate: f64,
}

/// Maximum demand per joint over the admissible orientation ranges.
const MAX_DEMAND: [f64; DIMS] = [90.0, 90.0, 90.0, 120.0];

impl PatientProfile {
    pub fn validate(&self) -> Result<(), PatientError> {
        let bad = |m: String| Err(PatientError::Invalid(m));
        for (d, (&lim, &soft)) in self
            .comfort_limits
            .to_array()
            .iter()
            .zip(self.softness.to_array().iter())
            .enumerate()
        {
            if !(0.0..=MAX_DEMAND[d]).contains(&lim) {
                return bad(format!("comfort limit {lim} outside [0, {}]", MAX_DEMAND[d]));
            }
            if !(soft > 0.0 && soft.is_finite()) {
                return bad(format!("softness must be positive, got {soft}"));
            }
        }
        if !(self.p_max > 0.0 && self.p_max <= 1.0) {
            return bad(format!("p_max must lie in (0, 1], got {}", self.p_max));
        }
        if !(self.base_time > 0.0 && self.base_time.is_finite()) {
            return bad(format!("base_time must be positive, got {}", self.base_time));
        }
        if !(self.time_per_deg >= 0.0 && self.time_per_deg.is_finite()) {
            return bad(format!("time_per_deg must be non-negative, got {}", self.time_per_deg));
        }
        if !(0.0..=1.0).contains(&self.partial_fraction) {
            return bad(format!("partial_fraction must lie in [0, 1], got {}", self.partial_fraction));
        }
        if !(0.0..=1.0).contains(&self.fatigue_rate) {
            return bad(format!("fatigue_rate must lie in [0, 1], got {}", self.fatigue_rate));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, PatientError> {
        let profile: Self = serde_json::from_str(text)?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    pub fn preset(name: &str) -> Result<Self, PatientError> {
        let text = match name {
            "mild" => PRESET_MILD,
            "moderate" => PRESET_MODERATE,
            "severe" => PRESET_SEVERE,
            other => return Err(PatientError::UnknownPreset(other.to_string())),
        };
        Self::from_json(text)
    }

    /// Loads a profile from a JSON file. A path that does not exist but names
    /// a shipped preset (`moderate` or `moderate.json`) resolves to the preset.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PatientError> {
        let path = path.as_ref();
        if path.exists() {
            let text = std::fs::read_to_string(path).map_err(|source| PatientError::Io {
                path: path.display().to_string(),
                source,
            })?;
            return Self::from_json(&text);
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        if PRESET_NAMES.contains(&stem) {
            return Self::preset(stem);
        }
        Err(PatientError::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or preset"),
        })
    }

    pub fn with_p_max(&self, p_max: f64) -> Self {
        Self {
            p_max,
            ..self.clone()
        }
    }
}

/// Absolute joint demands from the rest pose.
pub fn demands(orient: &JointOrientation) -> [f64; DIMS] {
    orient.to_array().map(f64::abs)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn predict_success(profile: &PatientProfile, orient: &JointOrientation) -> f64 {
    let limits = profile.comfort_limits.to_array();
    let soft = profile.softness.to_array();
    demands(orient)
        .iter()
        .enumerate()
        .fold(profile.p_max, |p, (d, demand)| {
            p * sigmoid((limits[d] - demand) / soft[d])
        })
}

/// Anything that can predict a success probability for an orientation.
pub trait SuccessModel {
    fn success_probability(&self, orient: &JointOrientation) -> f64;
}

impl SuccessModel for PatientProfile {
    fn success_probability(&self, orient: &JointOrientation) -> f64 {
        predict_success(self, orient)
    }
}

/// Outcome probabilities (success, partial, fail) for one attempt.
pub fn outcome_distribution(profile: &PatientProfile, orient: &JointOrientation) -> [f64; 3] {
    let p = predict_success(profile, orient);
    let partial = (1.0 - p) * profile.partial_fraction;
    [p, partial, 1.0 - p - partial]
}

/// A profile plus the fatigue it has accumulated over a session.
#[derive(Debug, Clone)]
pub struct SimulatedPatient {
    profile: PatientProfile,
    trials: u32,
}

impl SimulatedPatient {
    pub fn new(profile: PatientProfile) -> Self {
        Self { profile, trials: 0 }
    }

    pub fn profile(&self) -> &PatientProfile {
        &self.profile
    }

    pub fn trials(&self) -> u32 {
        self.trials
    }

    pub fn effective_p_max(&self) -> f64 {
        let decay = (1.0 - self.profile.fatigue_rate).max(0.0);
        (self.profile.p_max * decay.powi(self.trials as i32)).max(0.0)
    }

    /// Profile with the current fatigue applied; what a generator should plan against.
    pub fn snapshot(&self) -> PatientProfile {
        self.profile.with_p_max(self.effective_p_max())
    }

    pub fn predict(&self, orient: &JointOrientation) -> f64 {
        predict_success(&self.snapshot(), orient)
    }

    pub fn attempt<R: Rng + ?Sized>(&mut self, orient: &JointOrientation, rng: &mut R) -> TrialOutcome {
        let current = self.snapshot();
        let p = predict_success(&current, orient);
        let u: f64 = rng.random();
        let result = if u < p {
            TrialResult::Successful
        } else if u < p + (1.0 - p) * current.partial_fraction {
            TrialResult::PartiallySuccessful
        } else {
            TrialResult::NotSuccessful
        };
        let noise = Normal::new(0.0, TIME_NOISE_SD)
            .expect("valid sd")
            .sample(rng);
        let completion_time = match result {
            TrialResult::NotSuccessful => None,
            _ => {
                let demand: f64 = demands(orient).iter().sum();
                Some((current.base_time + current.time_per_deg * demand + noise).max(MIN_COMPLETION_TIME))
            }
        };
        self.trials += 1;
        TrialOutcome::reach(result, completion_time)
    }
}

/// Running success/attempt counts per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    grid: ActionGrid,
    cells: BTreeMap<Cell, CellStats>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellStats {
    pub successes: u32,
    pub attempts: u32,
}

/// Laplace smoothing constant.
pub const LAPLACE_ALPHA: f64 = 1.0;

impl CellStats {
    pub fn estimate(&self) -> f64 {
        (self.successes as f64 + LAPLACE_ALPHA) / (self.attempts as f64 + 2.0 * LAPLACE_ALPHA)
    }
}

impl PerformanceRecord {
    pub fn new(grid: ActionGrid) -> Self {
        Self {
            grid,
            cells: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    pub fn update(&mut self, orient: &JointOrientation, outcome: &TrialOutcome) {
        let cell = self.grid.nearest_cell(orient);
        let stats = self.cells.entry(cell).or_default();
        stats.attempts += 1;
        if outcome.result == TrialResult::Successful {
            stats.successes += 1;
        }
    }

    pub fn stats(&self, cell: &Cell) -> Option<CellStats> {
        self.cells.get(cell).copied()
    }

    pub fn visited(&self) -> impl Iterator<Item = (&Cell, &CellStats)> {
        self.cells.iter()
    }

    /// Smoothed success estimate for the cell containing `orient`. Unvisited
    /// cells borrow the nearest visited cell's estimate; an empty record
    /// returns the prior 1/2.
    pub fn estimate(&self, orient: &JointOrientation) -> f64 {
        let cell = self.grid.nearest_cell(orient);
        if let Some(stats) = self.cells.get(&cell) {
            return stats.estimate();
        }
        let target = self.grid.orientation(&cell).to_array();
        self.cells
            .iter()
            .map(|(c, s)| {
                let o = self.grid.orientation(c).to_array();
                let d2: f64 = o.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, s)
            })
            // first minimum in key order keeps ties deterministic
            .fold(None, |best: Option<(f64, &CellStats)>, (d2, s)| match best {
                Some((bd, _)) if bd <= d2 => best,
                _ => Some((d2, s)),
            })
            .map(|(_, s)| s.estimate())
            .unwrap_or(LAPLACE_ALPHA / (2.0 * LAPLACE_ALPHA))
    }
}

impl SuccessModel for PerformanceRecord {
    fn success_probability(&self, orient: &JointOrientation) -> f64 {
        self.estimate(orient)
    }
}

/// Functional form of [`PerformanceRecord::update`].
pub fn record_update(
    mut rec: PerformanceRecord,
    orient: &JointOrientation,
    outcome: &TrialOutcome,
) -> PerformanceRecord {
    rec.update(orient, outcome);
    rec
}
