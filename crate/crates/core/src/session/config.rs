//! Session configuration and the flat key = value override file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::kinematics::ArmModel;
use crate::scoring::{DEFAULT_BEST_TIME, DEFAULT_MAX_TIME};
use crate::taskgen::{ActionGrid, UctConfig, DEFAULT_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Mcts,
    Rog,
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcts" => Ok(Policy::Mcts),
            "rog" => Ok(Policy::Rog),
            other => Err(format!("unknown policy '{other}' (expected mcts or rog)")),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Policy::Mcts => "mcts",
            Policy::Rog => "rog",
        })
    }
}

/// What the tree search plans against: the patient's current profile, or
/// the smoothed per-cell success counts logged so far this session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Planner {
    #[default]
    Profile,
    History,
}

impl std::str::FromStr for Planner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "profile" => Ok(Planner::Profile),
            "history" => Ok(Planner::History),
            other => Err(format!("unknown planner '{other}' (expected profile or history)")),
        }
    }
}

/// Requested success rate, moved linearly from `start` on the first trial to
/// `end` on the last: easy tasks first, then out of the comfort zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSchedule {
    pub start: f64,
    pub end: f64,
}

impl Default for TargetSchedule {
    fn default() -> Self {
        Self { start: 0.9, end: 0.6 }
    }
}

impl TargetSchedule {
    pub fn constant(p: f64) -> Self {
        Self { start: p, end: p }
    }

    pub fn at(&self, trial: usize, trials: usize) -> f64 {
        if trials <= 1 {
            return self.start;
        }
        let f = trial.min(trials - 1) as f64 / (trials - 1) as f64;
        self.start + (self.end - self.start) * f
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub policy: Policy,
    pub planner: Planner,
    pub trials: usize,
    /// Search settings; `target_success` is overwritten per trial from `schedule`.
    pub uct: UctConfig,
    pub schedule: TargetSchedule,
    pub grid: ActionGrid,
    pub arm: ArmModel,
    /// Patient profile JSON path, or a preset name.
    pub patient: String,
    pub best_time: f64,
    pub max_time: f64,
    pub hss_levels: u32,
    /// Drives every random stream in the session.
    pub seed: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            session_id: "session-0".into(),
            policy: Policy::Mcts,
            planner: Planner::Profile,
            trials: 200,
            uct: UctConfig::default(),
            schedule: TargetSchedule::default(),
            grid: ActionGrid::default(),
            arm: ArmModel::default(),
            patient: "moderate".into(),
            best_time: DEFAULT_BEST_TIME,
            max_time: DEFAULT_MAX_TIME,
            hss_levels: DEFAULT_LEVELS,
            seed: 0,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.session_id.is_empty()
            || self.session_id.contains(['/', '\\'])
            || self.session_id.starts_with('.')
        {
            return bad(format!("session id '{}' is not a usable file name", self.session_id));
        }
        if self.hss_levels == 0 {
            return bad("hss_levels must be at least 1".into());
        }
        if !(self.best_time > 0.0 && self.best_time < self.max_time && self.max_time.is_finite()) {
            return bad(format!(
                "need 0 < best_time < max_time, got {} and {}",
                self.best_time, self.max_time
            ));
        }
        for p in [self.schedule.start, self.schedule.end] {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("target success {p} outside (0, 1)"));
            }
        }
        let probe = UctConfig {
            target_success: self.schedule.start,
            ..self.uct
        };
        probe.validate().map_err(|e| SessionError::Config(e.to_string()))?;
        self.grid.validate().map_err(|e| SessionError::Config(e.to_string()))?;
        Ok(())
    }

    /// Applies every field that is set in `o`.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.session_id {
            self.session_id = v.clone();
        }
        if let Some(v) = o.policy {
            self.policy = v;
        }
        if let Some(v) = o.planner {
            self.planner = v;
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.iterations {
            self.uct.iterations = v;
        }
        if let Some(v) = o.cp {
            self.uct.cp = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
            self.uct.seed = v;
        }
        if let Some(v) = &o.patient {
            self.patient = v.clone();
        }
        if let Some(v) = o.best_time {
            self.best_time = v;
        }
        if let Some(v) = o.max_time {
            self.max_time = v;
        }
        if let Some(v) = o.target_start {
            self.schedule.start = v;
        }
        if let Some(v) = o.target_end {
            self.schedule.end = v;
        }
        if let Some(v) = o.hss_levels {
            self.hss_levels = v;
        }
    }
}

/// Optional settings from one source (file, environment or command line).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub session_id: Option<String>,
    pub policy: Option<Policy>,
    pub planner: Option<Planner>,
    pub trials: Option<usize>,
    pub iterations: Option<usize>,
    pub cp: Option<f64>,
    pub seed: Option<u64>,
    pub patient: Option<String>,
    pub best_time: Option<f64>,
    pub max_time: Option<f64>,
    pub target_start: Option<f64>,
    pub target_end: Option<f64>,
    pub hss_levels: Option<u32>,
    pub out: Option<String>,
}

impl Overrides {
    pub fn parse(text: &str) -> Result<Self, SessionError> {
        toml::from_str(text).map_err(|e| SessionError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SessionError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set here win; unset ones fall through to `lower`.
    pub fn over(self, lower: Overrides) -> Overrides {
        Overrides {
            session_id: self.session_id.or(lower.session_id),
            policy: self.policy.or(lower.policy),
            planner: self.planner.or(lower.planner),
            trials: self.trials.or(lower.trials),
            iterations: self.iterations.or(lower.iterations),
            cp: self.cp.or(lower.cp),
            seed: self.seed.or(lower.seed),
            patient: self.patient.or(lower.patient),
            best_time: self.best_time.or(lower.best_time),
            max_time: self.max_time.or(lower.max_time),
            target_start: self.target_start.or(lower.target_start),
            target_end: self.target_end.or(lower.target_end),
            hss_levels: self.hss_levels.or(lower.hss_levels),
            out: self.out.or(lower.out),
        }
    }
}
