//! Summaries of a logged session, for the `report` command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{success_rate, SessionError, SessionLog, SessionSummary, TrialRecord};
use crate::scoring::MasItem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReport {
    pub session_id: String,
    pub policy: String,
    pub trials: usize,
    pub mean_score: f64,
    pub success_rate: f64,
    pub final_level: u32,
    pub highest_level: u32,
    pub level_changes: usize,
    pub duration_s: f64,
    pub per_level: Vec<LevelStats>,
    /// Summed trial scores per MAS item.
    pub per_mas_item: BTreeMap<MasItem, f64>,
    /// Records whose logged score does not match a re-score of their outcome.
    pub rescore_mismatches: Vec<usize>,
}

impl LogReport {
    pub fn from_log(log: &SessionLog) -> Result<Self, SessionError> {
        let rs = &log.records;
        let summary = SessionSummary::of(rs);
        let mut by_level: BTreeMap<u32, Vec<TrialRecord>> = BTreeMap::new();
        let mut per_mas_item = BTreeMap::new();
        let mut rescore_mismatches = Vec::new();
        for r in rs {
            by_level.entry(r.hss_level).or_default().push(r.clone());
            *per_mas_item.entry(r.mas_item).or_insert(0.0) += r.score_value;
            if r.rescore(log.header.best_time, log.header.max_time)? != r.score_value {
                rescore_mismatches.push(r.trial_idx);
            }
        }
        let per_level = by_level
            .into_iter()
            .map(|(level, recs)| LevelStats {
                level,
                trials: recs.len(),
                success_rate: success_rate(&recs),
                mean_score: recs.iter().map(|r| r.score_value).sum::<f64>() / recs.len() as f64,
            })
            .collect();
        Ok(Self {
            session_id: log.header.session_id.clone(),
            policy: log.header.policy.to_string(),
            trials: summary.trials,
            mean_score: summary.mean_score,
            success_rate: summary.success_rate,
            final_level: summary.final_level,
            highest_level: rs.iter().map(|r| r.hss_level).max().unwrap_or(1),
            level_changes: rs.windows(2).filter(|w| w[0].hss_level != w[1].hss_level).count(),
            duration_s: rs.last().map_or(0.0, |r| r.timestamp),
            per_level,
            per_mas_item,
            rescore_mismatches,
        })
    }

    /// Writes `summary.json`, `levels.csv` and a flat `trials.csv`.
    pub fn write(&self, log: &SessionLog, dir: impl AsRef<Path>) -> Result<(), SessionError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(SessionError::Json)?;
        std::fs::write(dir.join("summary.json"), json + "\n")?;

        let csv_err = |e: csv::Error| SessionError::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(dir.join("levels.csv")).map_err(csv_err)?;
        w.write_record(["level", "trials", "success_rate", "mean_score"]).map_err(csv_err)?;
        for l in &self.per_level {
            w.write_record([
                l.level.to_string(),
                l.trials.to_string(),
                l.success_rate.to_string(),
                l.mean_score.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(dir.join("trials.csv")).map_err(csv_err)?;
        w.write_record([
            "trial_idx", "sh_yaw", "sh_pitch", "sh_roll", "elbow", "x", "y", "z", "outcome",
            "completion_time_s", "score_value", "hss_level", "timestamp", "target_success", "mas_item",
        ])
        .map_err(csv_err)?;
        for r in &log.records {
            let mut row = vec![r.trial_idx.to_string()];
            row.extend(r.orientation.iter().map(f64::to_string));
            row.extend(r.target_xyz.iter().map(f64::to_string));
            row.push(serde_json::to_value(r.outcome).map_err(SessionError::Json)?.as_str().unwrap_or_default().into());
            row.push(r.completion_time_s.map_or(String::new(), |t| t.to_string()));
            row.push(r.score_value.to_string());
            row.push(r.hss_level.to_string());
            row.push(r.timestamp.to_string());
            row.push(r.target_success.map_or(String::new(), |t| t.to_string()));
            row.push(r.mas_item.name().into());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}
