use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rehab_core::psychometrics::simulate_responses;

fn rehabsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rehabsim"))
        .args(args)
        .current_dir(dir)
        .env_clear()
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn simulate_writes_log_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--policy", "mcts", "--trials", "200", "--seed", "7", "--patient", "moderate.json", "--out",
        "s1.jsonl",
    ];
    let o = rehabsim(dir.path(), &args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o);
    assert!(line.contains("trials=200") && line.contains("mean_score=") && line.contains("final_hss_level="));
    let first = std::fs::read(dir.path().join("s1.jsonl")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 201);

    // the seed fully determines the log
    std::fs::rename(dir.path().join("s1.jsonl"), dir.path().join("s0.jsonl")).unwrap();
    assert_eq!(rehabsim(dir.path(), &args).status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("s1.jsonl")).unwrap(), first);
}

#[test]
fn analyze_writes_the_report_directory() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(200).collect();
    let delta: Vec<f64> = (0..16).map(|i| -1.02 + 2.27 * i as f64 / 15.0).collect();
    let m = simulate_responses(&theta, &delta, &[-1.5, -0.5, 0.5, 1.5], &mut rng);
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    std::fs::write(dir.path().join("eq.csv"), buf).unwrap();

    let o = rehabsim(dir.path(), &["analyze", "--responses", "eq.csv", "--out", "rep/"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = dir.path().join("rep");
    for f in [
        "items.csv", "persons.csv", "reliability.csv", "wright_map.csv", "category_curves.csv", "wright_map.svg",
        "category_curves.svg",
    ] {
        assert!(rep.join(f).is_file(), "{f} missing");
    }
    let items = std::fs::read_to_string(rep.join("items.csv")).unwrap();
    assert_eq!(items.lines().next().unwrap(), "item,difficulty_logit,infit_msq,outfit_msq,rmsr");
}

#[test]
fn usage_errors_exit_one_and_data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = rehabsim(dir.path(), &["simulate", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    assert_eq!(rehabsim(dir.path(), &[]).status.code(), Some(1));
    assert_eq!(rehabsim(dir.path(), &["simulate", "--trials", "0"]).status.code(), Some(1));

    std::fs::write(dir.path().join("bad.csv"), "item_1,item_2\n1,9\n").unwrap();
    let o = rehabsim(dir.path(), &["analyze", "--responses", "bad.csv", "--out", "rep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.csv"));

    assert_eq!(rehabsim(dir.path(), &["report", "--log", "missing.jsonl", "--out", "r"]).status.code(), Some(2));
}

#[test]
fn help_has_no_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["--help"][..], &["simulate", "--help"][..]] {
        let o = rehabsim(dir.path(), args);
        assert_eq!(o.status.code(), Some(0));
        assert!(stdout(&o).contains("Usage"));
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn flag_beats_environment_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "trials = 4\nseed = 1\npolicy = \"rog\"\niterations = 50\n").unwrap();
    let run = |env: &[(&str, &str)], extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_rehabsim"));
        cmd.current_dir(dir.path()).env_clear().args(["simulate", "--config", "run.toml", "--out", "logs"]);
        cmd.args(extra);
        for (k, v) in env {
            cmd.env(k, v);
        }
        let o = cmd.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    assert!(run(&[], &[]).contains("trials=4"));
    assert!(run(&[("REHAB_TRIALS", "6")], &[]).contains("trials=6"));
    assert!(run(&[("REHAB_TRIALS", "6")], &["--trials", "9"]).contains("trials=9"));
    assert!(dir.path().join("logs/rog-seed1.jsonl").is_file());
}

#[test]
fn parallel_sessions_get_their_own_logs() {
    let dir = tempfile::tempdir().unwrap();
    let o = rehabsim(
        dir.path(),
        &["simulate", "--policy", "rog", "--trials", "20", "--sessions", "3", "--seed", "5", "--out", "many"],
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 3);
    let logs: Vec<Vec<u8>> = (0..3)
        .map(|k| std::fs::read(dir.path().join(format!("many/rog-seed5-{k}.jsonl"))).unwrap())
        .collect();
    assert_ne!(logs[0], logs[1]);
}

#[test]
fn signal_resamples_and_smooths() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,v\n");
    for (t, v) in [(0.0, 0.0), (0.05, 1.0), (0.12, 0.5), (0.2, 2.0), (0.31, 1.0)] {
        csv.push_str(&format!("{t},{v}\n"));
    }
    std::fs::write(dir.path().join("raw.csv"), csv).unwrap();
    let o = rehabsim(dir.path(), &["signal", "--in", "raw.csv", "--out", "clean.csv", "--rate", "30", "--window", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = std::fs::read_to_string(dir.path().join("clean.csv")).unwrap();
    assert_eq!(out.lines().next(), Some("t,v"));
    assert_eq!(out.lines().count(), 1 + 10);
    assert_eq!(rehabsim(dir.path(), &["signal", "--in", "raw.csv", "--out", "c.csv", "--window", "4"]).status.code(), Some(1));
}
