use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rehab_core::session::{Overrides, Planner, Policy};

#[derive(Debug, Parser)]
#[command(name = "rehabsim", version, about = "Adaptive reach-training simulator and rating-scale analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run simulated training sessions and write JSON-lines trial logs.
    Simulate(SimulateArgs),
    /// Fit the rating scale model to a questionnaire response matrix.
    Analyze(AnalyzeArgs),
    /// Summarise a session log.
    Report(ReportArgs),
    /// Resample a recorded signal to a fixed rate and smooth it.
    Signal(SignalArgs),
}

/// Every setting can also come from a `REHAB_*` environment variable or the
/// config file; the command line wins over the environment, which wins over
/// the file.
#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// key = value settings file.
    #[arg(long, env = "REHAB_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, env = "REHAB_POLICY")]
    pub policy: Option<Policy>,
    /// Model the tree search plans against.
    #[arg(long, env = "REHAB_PLANNER")]
    pub planner: Option<Planner>,
    #[arg(long, env = "REHAB_TRIALS")]
    pub trials: Option<usize>,
    /// Tree search iterations per trial.
    #[arg(long, env = "REHAB_ITERATIONS")]
    pub iterations: Option<usize>,
    /// UCT exploration constant.
    #[arg(long, env = "REHAB_CP")]
    pub cp: Option<f64>,
    #[arg(long, env = "REHAB_SEED")]
    pub seed: Option<u64>,
    /// Patient profile JSON, or one of mild / moderate / severe.
    #[arg(long, env = "REHAB_PATIENT")]
    pub patient: Option<String>,
    /// Log file (`*.jsonl`) or directory for `<session_id>.jsonl`.
    #[arg(long, env = "REHAB_OUT")]
    pub out: Option<String>,
    #[arg(long, env = "REHAB_SESSION_ID")]
    pub session_id: Option<String>,
    /// Success rate requested on the first trial.
    #[arg(long, env = "REHAB_TARGET_START")]
    pub target_start: Option<f64>,
    /// Success rate requested on the last trial.
    #[arg(long, env = "REHAB_TARGET_END")]
    pub target_end: Option<f64>,
    #[arg(long, env = "REHAB_BEST_TIME")]
    pub best_time: Option<f64>,
    #[arg(long, env = "REHAB_MAX_TIME")]
    pub max_time: Option<f64>,
    #[arg(long, env = "REHAB_HSS_LEVELS")]
    pub hss_levels: Option<u32>,
    /// Independent sessions to run in parallel, seeded seed, seed+1, ...
    #[arg(long, env = "REHAB_SESSIONS", default_value_t = 1)]
    pub sessions: usize,
}

impl SimulateArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            session_id: self.session_id.clone(),
            policy: self.policy,
            planner: self.planner,
            trials: self.trials,
            iterations: self.iterations,
            cp: self.cp,
            seed: self.seed,
            patient: self.patient.clone(),
            best_time: self.best_time,
            max_time: self.max_time,
            target_start: self.target_start,
            target_end: self.target_end,
            hss_levels: self.hss_levels,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with columns item_1..item_k (optional leading person id), cells 0-4, blank = missing.
    #[arg(long, env = "REHAB_RESPONSES")]
    pub responses: PathBuf,
    #[arg(long, env = "REHAB_OUT")]
    pub out: PathBuf,
    /// Highest rating category.
    #[arg(long, default_value_t = 4)]
    pub max_category: u8,
    /// Wright map bin width, logits.
    #[arg(long, default_value_t = 0.25)]
    pub bin_width: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, env = "REHAB_LOG")]
    pub log: PathBuf,
    #[arg(long, env = "REHAB_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SignalArgs {
    /// CSV with columns t, v.
    #[arg(long = "in", env = "REHAB_IN")]
    pub input: PathBuf,
    #[arg(long, env = "REHAB_OUT")]
    pub out: PathBuf,
    /// Output sampling rate, Hz.
    #[arg(long, env = "REHAB_RATE", default_value_t = 30.0)]
    pub rate: f64,
    /// Moving-average window, samples; 1 disables smoothing.
    #[arg(long, env = "REHAB_WINDOW", default_value_t = 5)]
    pub window: usize,
}
