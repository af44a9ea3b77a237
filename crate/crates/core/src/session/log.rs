//! JSON-lines trial logs: one header line, then one record per trial.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Policy, SessionError};
use crate::scoring::{score_trial, MasItem, TrialOutcome, TrialResult};

pub const LOG_FORMAT: &str = "rehab-session-log";
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub format: String,
    pub version: u32,
    pub session_id: String,
    pub policy: Policy,
    pub seed: u64,
    pub best_time: f64,
    pub max_time: f64,
}

impl LogHeader {
    pub fn new(session_id: &str, policy: Policy, seed: u64, best_time: f64, max_time: f64) -> Self {
        Self {
            format: LOG_FORMAT.into(),
            version: LOG_VERSION,
            session_id: session_id.into(),
            policy,
            seed,
            best_time,
            max_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session_id: String,
    pub trial_idx: usize,
    /// Yaw, pitch, roll, elbow in degrees.
    pub orientation: [f64; 4],
    /// Spawned target in metres.
    pub target_xyz: [f64; 3],
    pub outcome: TrialResult,
    pub completion_time_s: Option<f64>,
    pub score_value: f64,
    /// Level the trial was played at.
    pub hss_level: u32,
    /// Simulated session clock at the end of the trial, seconds.
    pub timestamp: f64,
    /// Success rate the generator aimed for; absent for the random generator.
    pub target_success: Option<f64>,
    pub mas_item: MasItem,
}

impl TrialRecord {
    pub fn outcome(&self) -> TrialOutcome {
        TrialOutcome::reach(self.outcome, self.completion_time_s)
    }

    /// Recomputes the score from the logged outcome.
    pub fn rescore(&self, best_time: f64, max_time: f64) -> Result<f64, SessionError> {
        Ok(score_trial(&self.outcome(), best_time, max_time)?.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub records: Vec<TrialRecord>,
}

impl SessionLog {
    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<(), SessionError> {
        serde_json::to_writer(&mut w, &self.header).map_err(SessionError::Json)?;
        w.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(SessionError::Json)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self, SessionError> {
        let mut lines = BufReader::new(r).lines();
        let first = match lines.next() {
            Some(l) => l?,
            None => {
                return Err(SessionError::Corrupt {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        };
        let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| SessionError::Corrupt {
            line: 1,
            message: e.to_string(),
        })?;
        let format = raw.get("format").and_then(|v| v.as_str()).unwrap_or_default();
        let version = raw.get("version").and_then(|v| v.as_u64());
        if format != LOG_FORMAT || version != Some(LOG_VERSION as u64) {
            return Err(SessionError::SchemaMismatch {
                found: format!("{format} v{}", version.map_or("?".into(), |v| v.to_string())),
            });
        }
        let header: LogHeader = serde_json::from_value(raw).map_err(|e| SessionError::Corrupt {
            line: 1,
            message: e.to_string(),
        })?;
        let mut records = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            let record: TrialRecord = serde_json::from_str(&line).map_err(|e| SessionError::Corrupt {
                line: n + 2,
                message: e.to_string(),
            })?;
            records.push(record);
        }
        Ok(Self { header, records })
    }
}

/// Writes the log next to `path` and renames it into place, so a reader never
/// sees a half-written record.
pub fn write_log(path: impl AsRef<Path>, log: &SessionLog) -> Result<(), SessionError> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let file = std::fs::File::create(&tmp)?;
        log.to_writer(std::io::BufWriter::new(file))?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_log(path: impl AsRef<Path>) -> Result<SessionLog, SessionError> {
    let file = std::fs::File::open(path)?;
    SessionLog::from_reader(file)
}
