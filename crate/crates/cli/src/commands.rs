use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rehab_core::psychometrics::{analyze, AnalysisOptions, ResponseMatrix};
use rehab_core::session::{
    read_log, run_session, write_log, LogReport, Overrides, SessionConfig, SessionError, SessionSummary,
};
use rehab_core::signal::{resample_uniform, smooth, TimeSeries};

use crate::args::{AnalyzeArgs, Cli, Command, ReportArgs, SignalArgs, SimulateArgs};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn data_at(path: &Path) -> impl Fn(String) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

pub fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Analyze(a) => analyze_cmd(&a),
        Command::Report(a) => report(&a),
        Command::Signal(a) => signal(&a),
    }
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    if args.sessions == 0 {
        return Err(Failure::Usage("--sessions must be at least 1".into()));
    }
    let file = match &args.config {
        Some(path) => Overrides::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Overrides::default(),
    };
    let settings = args.overrides().over(file);
    let mut base = SessionConfig::default();
    base.apply(&settings);
    if settings.session_id.is_none() {
        base.session_id = format!("{}-seed{}", base.policy, base.seed);
    }
    let configs: Vec<SessionConfig> = (0..args.sessions)
        .map(|k| {
            let mut c = base.clone();
            if args.sessions > 1 {
                c.seed = base.seed.wrapping_add(k as u64);
                c.uct.seed = c.seed;
                c.session_id = format!("{}-{k}", base.session_id);
            }
            c
        })
        .collect();
    for c in &configs {
        c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let out = settings.out.unwrap_or_else(|| "out".into());
    let paths = log_paths(&out, &configs)?;

    let results: Vec<Result<SessionSummary, SessionError>> = configs
        .par_iter()
        .zip(&paths)
        .map(|(c, path)| {
            let log = run_session(c)?;
            write_log(path, &log)?;
            Ok(SessionSummary::of(&log.records))
        })
        .collect();
    for ((c, path), res) in configs.iter().zip(&paths).zip(results) {
        let summary = res.map_err(|e| match e {
            SessionError::Config(m) => Failure::Usage(m),
            other => data(other),
        })?;
        println!("{}: {summary} log={}", c.session_id, path.display());
    }
    Ok(())
}

/// `*.jsonl` names the log file itself (suffixed per session when several
/// run); anything else is a directory holding `<session_id>.jsonl`.
fn log_paths(out: &str, configs: &[SessionConfig]) -> Result<Vec<PathBuf>, Failure> {
    let out = PathBuf::from(out);
    let is_file = out.extension().is_some_and(|e| e == "jsonl");
    let dir = if is_file {
        out.parent().map(Path::to_path_buf).unwrap_or_default()
    } else {
        out.clone()
    };
    if !dir.as_os_str().is_empty() {
        std::fs::create_dir_all(&dir).map_err(|e| data_at(&dir)(e.to_string()))?;
    }
    Ok(configs
        .iter()
        .enumerate()
        .map(|(k, c)| match (is_file, configs.len()) {
            (true, 1) => out.clone(),
            (true, _) => {
                let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("session");
                dir.join(format!("{stem}-{k}.jsonl"))
            }
            (false, _) => dir.join(format!("{}.jsonl", c.session_id)),
        })
        .collect())
}

fn analyze_cmd(args: &AnalyzeArgs) -> Result<(), Failure> {
    if !(args.bin_width > 0.0 && args.bin_width.is_finite()) {
        return Err(Failure::Usage(format!("--bin-width must be positive, got {}", args.bin_width)));
    }
    let at = data_at(&args.responses);
    let file = File::open(&args.responses).map_err(|e| at(e.to_string()))?;
    let matrix = ResponseMatrix::read_csv(file, args.max_category).map_err(|e| at(e.to_string()))?;
    let opts = AnalysisOptions {
        bin_width: args.bin_width,
        ..Default::default()
    };
    let analysis = analyze(&matrix, &opts).map_err(|e| at(e.to_string()))?;
    analysis.write_report(&args.out).map_err(data)?;
    let misfit = analysis.misfitting_items();
    println!(
        "persons={} items={} person_reliability={:.3} item_reliability={:.3} misfitting={} report={}",
        matrix.persons(),
        matrix.items(),
        analysis.reliability.person_separation_reliability,
        analysis.reliability.item_separation_reliability,
        if misfit.is_empty() { "none".to_string() } else { misfit.join(",") },
        args.out.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<(), Failure> {
    let log = read_log(&args.log).map_err(|e| data_at(&args.log)(e.to_string()))?;
    let rep = LogReport::from_log(&log).map_err(|e| data_at(&args.log)(e.to_string()))?;
    rep.write(&log, &args.out).map_err(data)?;
    println!(
        "{}: trials={} mean_score={:.3} success_rate={:.3} final_hss_level={} rescore_mismatches={} report={}",
        rep.session_id,
        rep.trials,
        rep.mean_score,
        rep.success_rate,
        rep.final_level,
        rep.rescore_mismatches.len(),
        args.out.display()
    );
    Ok(())
}

fn signal(args: &SignalArgs) -> Result<(), Failure> {
    if !(args.rate > 0.0 && args.rate.is_finite()) {
        return Err(Failure::Usage(format!("--rate must be positive, got {}", args.rate)));
    }
    if args.window == 0 || args.window.is_multiple_of(2) {
        return Err(Failure::Usage(format!("--window must be odd and positive, got {}", args.window)));
    }
    let at = data_at(&args.input);
    let file = File::open(&args.input).map_err(|e| at(e.to_string()))?;
    let series = TimeSeries::read_csv(file).map_err(|e| at(e.to_string()))?;
    let resampled = resample_uniform(&series, args.rate).map_err(|e| at(e.to_string()))?;
    let cleaned = if args.window > 1 {
        smooth(&resampled, args.window).map_err(|e| at(e.to_string()))?
    } else {
        resampled
    };
    let out = File::create(&args.out).map_err(|e| data_at(&args.out)(e.to_string()))?;
    cleaned.write_csv(BufWriter::new(out)).map_err(data)?;
    println!(
        "samples_in={} samples_out={} rate_hz={} window={} out={}",
        series.len(),
        cleaned.len(),
        args.rate,
        args.window,
        args.out.display()
    );
    Ok(())
}
