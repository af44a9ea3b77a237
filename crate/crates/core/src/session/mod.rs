//! Closed-loop training sessions: generate a target, spawn it, let the
//! simulated patient attempt it, score, update the level and log.

mod config;
mod log;
mod report;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{Overrides, Planner, Policy, SessionConfig, TargetSchedule};
pub use log::{read_log, write_log, LogHeader, SessionLog, TrialRecord, LOG_FORMAT, LOG_VERSION};
pub use report::{LevelStats, LogReport};

use crate::kinematics::{spawn_position, KinematicsError};
use crate::patient::{PatientError, PatientProfile, PerformanceRecord, SimulatedPatient};
use crate::scoring::{classify_trial, score_trial, ScoringError, TrialResult};
use crate::taskgen::{mcts_generate, rog_generate, HssState, UctConfig};

/// Stream ids carved out of the session seed.
const GENERATOR_STREAM: u64 = 0;
const PATIENT_STREAM: u64 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("invalid session config: {0}")]
    Config(String),
    #[error(transparent)]
    Patient(#[from] PatientError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("unsupported log schema: {found}")]
    SchemaMismatch { found: String },
    #[error("log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("json: {0}")]
    Json(serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Loads the configured patient and runs the session.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionLog, SessionError> {
    cfg.validate()?;
    let profile = PatientProfile::load(&cfg.patient)?;
    run_session_with(cfg, profile)
}

pub fn run_session_with(cfg: &SessionConfig, profile: PatientProfile) -> Result<SessionLog, SessionError> {
    cfg.validate()?;
    profile.validate()?;
    let mut gen_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    gen_rng.set_stream(GENERATOR_STREAM);
    let mut patient_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    patient_rng.set_stream(PATIENT_STREAM);

    let mut patient = SimulatedPatient::new(profile);
    let mut hss = HssState::new(cfg.hss_levels);
    let mut history = PerformanceRecord::new(cfg.grid);
    let mut clock = 0.0;
    let mut records = Vec::with_capacity(cfg.trials);

    for trial_idx in 0..cfg.trials {
        let level = hss.level();
        let (orient, target_success) = match cfg.policy {
            Policy::Mcts => {
                let target = cfg.schedule.at(trial_idx, cfg.trials);
                let uct = UctConfig {
                    target_success: target,
                    ..cfg.uct
                };
                let orient = match cfg.planner {
                    Planner::Profile => mcts_generate(&cfg.grid, &patient.snapshot(), &uct, &mut gen_rng),
                    Planner::History => mcts_generate(&cfg.grid, &history, &uct, &mut gen_rng),
                };
                (orient, Some(target))
            }
            Policy::Rog => (rog_generate(&cfg.grid, &hss, &mut gen_rng), None),
        };
        let target = spawn_position(&cfg.arm, &orient)?;
        let outcome = patient.attempt(&orient, &mut patient_rng);
        let score = score_trial(&outcome, cfg.best_time, cfg.max_time)?;
        hss.update(&score);
        history.update(&orient, &outcome);
        clock += outcome.completion_time.unwrap_or(cfg.max_time);
        records.push(TrialRecord {
            session_id: cfg.session_id.clone(),
            trial_idx,
            orientation: orient.to_array(),
            target_xyz: [target.x, target.y, target.z],
            outcome: outcome.result,
            completion_time_s: outcome.completion_time,
            score_value: score.value,
            hss_level: level,
            timestamp: clock,
            target_success,
            mas_item: classify_trial(&orient, outcome.hold_required),
        });
    }
    Ok(SessionLog {
        header: LogHeader::new(&cfg.session_id, cfg.policy, cfg.seed, cfg.best_time, cfg.max_time),
        records,
    })
}

/// Fraction of fully successful trials.
pub fn success_rate(records: &[TrialRecord]) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    let hits = records.iter().filter(|r| r.outcome == TrialResult::Successful).count();
    hits as f64 / records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionSummary {
    pub trials: usize,
    pub mean_score: f64,
    pub success_rate: f64,
    pub final_level: u32,
}

impl SessionSummary {
    pub fn of(records: &[TrialRecord]) -> Self {
        let n = records.len();
        Self {
            trials: n,
            mean_score: if n == 0 {
                f64::NAN
            } else {
                records.iter().map(|r| r.score_value).sum::<f64>() / n as f64
            },
            success_rate: success_rate(records),
            final_level: records.last().map_or(1, |r| r.hss_level),
        }
    }
}

impl std::fmt::Display for SessionSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trials={} mean_score={:.3} success_rate={:.3} final_hss_level={}",
            self.trials, self.mean_score, self.success_rate, self.final_level
        )
    }
}
