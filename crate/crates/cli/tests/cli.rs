use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use persuasion::presets;
use persuasion::{GameSpec, TypeDistribution};
use persuasion_cli::{parse_game_file, parse_game_str, run_command, CliError, Command, Options, RunReport, BUNDLED};

fn games() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("games")
}

fn run(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_persuasion")).args(args).output().unwrap()
}

fn game_arg(name: &str) -> String {
    games().join(name).display().to_string()
}

fn close(a: &GameSpec, b: &GameSpec) -> bool {
    let rows = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter().flatten().zip(y.iter().flatten()).all(|(p, q)| (p - q).abs() < 1e-15)
    };
    a.states() == b.states()
        && a.actions() == b.actions()
        && a.prior() == b.prior()
        && rows(a.receiver_utility(), b.receiver_utility())
        && rows(a.sender_utility(), b.sender_utility())
        && a.type_dist() == b.type_dist()
}

#[test]
fn bundled_games_match_presets() {
    let expected = [
        presets::product_adoption(0.5).unwrap(),
        presets::state_dependent(TypeDistribution::deterministic(2).unwrap()).unwrap(),
        presets::majority_vs_state(3).unwrap(),
        presets::no_punishment(0.01).unwrap(),
        presets::three_action_transparent(TypeDistribution::explicit_with_zero(vec![(0, 0.2), (2, 0.8)]).unwrap())
            .unwrap(),
    ];
    for ((name, text), preset) in BUNDLED.iter().zip(&expected) {
        let parsed = parse_game_str(text, name).unwrap();
        assert!(close(&parsed, preset), "bundled game {name} drifted from its preset");
    }
    let ex1 = parse_game_file(&games().join("example1.json")).unwrap();
    assert_eq!(ex1.receiver_utility()[1], vec![-3.0, 1.0]);
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn invalid_files_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let base: serde_json::Value = serde_json::from_str(BUNDLED[0].1).unwrap();

    let mut bad_prior = base.clone();
    bad_prior["prior"] = serde_json::json!([0.4, 0.5]);
    let path = write_temp(&dir, "prior.json", &bad_prior.to_string());
    let err = parse_game_file(&path).unwrap_err();
    assert!(err.to_string().contains("prior not normalized"), "{err}");
    assert_eq!(err.exit_code(), 2);

    let mut zero = base.clone();
    zero["nu"] = serde_json::json!({"kind": "explicit", "masses": [[0, 0.3], [1, 0.7]]});
    let err = parse_game_str(&zero.to_string(), "zero").unwrap_err();
    assert!(err.to_string().contains("zero type mass requires robustness mode"), "{err}");
    zero["allow_zero"] = serde_json::json!(true);
    assert!(parse_game_str(&zero.to_string(), "zero").is_ok());

    let text = BUNDLED[0].1.replacen("\"prior\"", "\"priors\"", 1);
    match parse_game_str(&text, "typo").unwrap_err() {
        CliError::Schema { line, message, .. } => {
            assert!(line > 1);
            assert!(message.contains("priors"), "{message}");
        }
        other => panic!("{other}"),
    }

    let out = run(&["bp", "--game", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prior not normalized"));
}

#[test]
fn bundled_examples_pass() {
    for id in ["1", "2", "3", "4"] {
        let out = run(&["example", id, "--seed", "7"]);
        let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
        let example = report.example.as_ref().unwrap();
        assert!(example.passed, "example {id}: {:?}", example.checks);
        assert_eq!(out.status.code(), Some(0), "example {id}");
    }
}

#[test]
fn benchmark_of_the_majority_game() {
    let opts = Options {
        game: Some(games().join("example3.json")),
        ..Options::default()
    };
    let report = run_command(&Command::Bp, &opts).unwrap();
    let bp = report.bp.unwrap();
    let mut beliefs: Vec<f64> = bp.posteriors.iter().map(|b| b[1]).collect();
    beliefs.sort_by(f64::total_cmp);
    assert!((beliefs[0] - 1.0 / 3.0).abs() < 1e-9);
    assert!((beliefs[1] - 2.0 / 3.0).abs() < 1e-9);
    assert!(report.certificate.is_none());
}

#[test]
fn synthesized_certificate_round_trips_through_verify_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("ex2.json");
    let out = run(&[
        "synthesize",
        "--game",
        &game_arg("example2.json"),
        "--max-iters",
        "20000",
        "--out",
        &cert_path.display().to_string(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = RunReport::from_json(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
    assert!(report.fixpoint.as_ref().unwrap().residual < 1e-6);
    assert!(report.verification.as_ref().unwrap().passed());

    let cert = cert_path.display().to_string();
    let out = run(&["verify", "--cert", &cert, "--tol", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["simulate", "--cert", &cert, "--seed", "42", "--episodes", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let sim = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap().simulation.unwrap();
    assert_eq!(sim.episodes, 20_000);
    assert!(sim.passed);
}

#[test]
fn reports_are_reproducible_and_lossless() {
    let args = ["example", "1", "--seed", "3"];
    let first = run(&args).stdout;
    let second = run(&args).stdout;
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    let report = RunReport::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert_eq!(RunReport::from_json(&report.to_json()).unwrap(), report);
    assert_eq!(report.input_digest.len(), 64);
    let trunc = report.truncation.as_ref().unwrap();
    assert!(trunc.max_k.is_some() && trunc.discarded_mass < trunc.tail_tol);
    assert!(report.timings.is_none());
    assert!(text.contains("\"sender_value\": 6.6666666666666"));
}

#[test]
fn thread_cap_does_not_change_reports() {
    let args = ["example", "3"];
    let free = run(&args).stdout;
    let capped = Process::new(env!("CARGO_BIN_EXE_persuasion"))
        .args(args)
        .env("PERSUASION_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(free, capped.stdout);
}

#[test]
fn exit_codes_follow_failure_classes() {
    let out = run(&["synthesize", "--game", &game_arg("example4.json")]);
    assert_eq!(out.status.code(), Some(3), "no punishing action");

    let out = run(&["robustness", "--game", &game_arg("desk.json")]);
    assert_eq!(out.status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let mut desk: serde_json::Value = serde_json::from_str(BUNDLED[4].1).unwrap();
    desk["nu"]["masses"] = serde_json::json!([[0, 0.4], [2, 0.6]]);
    let path = write_temp(&dir, "desk.json", &desk.to_string());
    let out = run(&["robustness", "--game", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(3), "infeasible robustness");
    let report = RunReport::from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(!report.robustness.unwrap().feasible);

    let out = run(&["synthesize", "--game", &game_arg("example3.json"), "--max-iters", "2"]);
    assert_eq!(out.status.code(), Some(4), "iteration budget");

    let out = run(&["synthesize", "--game", &game_arg("example1.json")]);
    let mut report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    report["certificate"]["experiment"]["matrix"] = serde_json::json!([[0.5, 0.5], [0.5, 0.5]]);
    let path = write_temp(&dir, "tampered.json", &report.to_string());
    let out = run(&["verify", "--cert", &path.display().to_string()]);
    assert_eq!(out.status.code(), Some(5), "tampered certificate");

    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(2));
}
