//! End-to-end tests of the `fqavc` binary and the argument parser.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use serde_json::Value;
use tempfile::TempDir;

use fqavc::channels::{fixtures, ChannelJson, LoadedChannel};
use fqavc::linalg;
use fqavc::qstate::{tensor, DensityMatrix};
use fqavc::random;
use fqavc_cli::{load_channel, parse_args, CliError, Format};

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn write_json<T: serde::Serialize>(dir: &TempDir, name: &str, value: &T) -> PathBuf {
    write(dir, name, &serde_json::to_string(value).unwrap())
}

fn fqavc(args: &[&str], env: Option<(&str, &Path)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fqavc"));
    cmd.args(args).env_remove(fqavc_cli::NUMERIC_CONFIG_ENV);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn parse_fills_defaults() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::identity_on_a(2, 2)));
    let cfg = parse_args(["fqavc", "capacity-ea", "--channel", p(&ch)]).unwrap();
    assert_eq!((cfg.tol, cfg.max_iter, cfg.seed, cfg.n, cfg.messages), (1e-4, 5000, 0, 1, 2));
    assert_eq!(cfg.format, Format::Json);
    assert!(cfg.output.is_none());
}

#[test]
fn parse_reads_eps_and_seed() {
    let dir = TempDir::new().unwrap();
    let a = write_json(&dir, "a.json", &DensityMatrix::maximally_mixed(2));
    let cfg = parse_args(["fqavc", "divergence-dh", "--rho", p(&a), "--sigma", p(&a), "--eps", "0.1"]).unwrap();
    assert_eq!(cfg.eps, Some(0.1));

    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::controlled_identity_dephasing()));
    let args = ["fqavc", "game-verify", "--channel", p(&ch), "--messages", "2", "--n", "1", "--seed", "7"];
    assert_eq!(parse_args(args).unwrap().seed, 7);
    let out = fqavc(&args[1..], None);
    assert_eq!(stdout_json(&out)["config"]["seed"], 7);
}

#[test]
fn usage_errors() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::identity_on_a(2, 1)));
    assert!(matches!(parse_args(["fqavc", "capacity-xyz"]), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(["fqavc", "capacity-ea", "--channel", p(&ch), "--tol", "abc"]), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(["fqavc", "capacity-ea", "--channel", p(&ch), "--tol", "-1"]), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(["fqavc", "game-classical", "--channel", p(&ch), "--messages", "1"]), Err(CliError::Usage(_))));
    assert_eq!(fqavc(&["capacity-xyz"], None).status.code(), Some(2));
    assert_eq!(fqavc(&["capacity-ea", "--channel", p(&ch), "--max-iter", "x"], None).status.code(), Some(2));
    assert_eq!(fqavc(&["capacity-ea", "--channel", p(&ch), "--format", "csv"], None).status.code(), Some(2));
    assert_eq!(fqavc(&["--help"], None).status.code(), Some(0));
}

#[test]
fn missing_file_exits_66() {
    let out = fqavc(&["capacity-ea", "--channel", "/nonexistent/ch.json"], None);
    assert_eq!(out.status.code(), Some(66));
}

#[test]
fn loads_kraus_dephasing() {
    let dir = TempDir::new().unwrap();
    let text = r#"{"kind": "kraus", "dims": {"A": 2, "E": 1, "B": 2},
        "kraus": [ [[[0.9486832980505138,0],[0,0]],[[0,0],[0.9486832980505138,0]]],
                   [[[0.31622776601683794,0],[0,0]],[[0,0],[-0.31622776601683794,0]]] ]}"#;
    let path = write(&dir, "deph.json", text);
    let LoadedChannel::Quantum(chan) = load_channel(&path).unwrap() else { panic!("expected quantum") };
    assert!(chan.tp_deviation() < 1e-12);
}

#[test]
fn bad_table_exits_65_citing_pair() {
    let dir = TempDir::new().unwrap();
    // W[y][x][e]; the column x=1, e=0 sums to 0.9
    let text = r#"{"kind": "classical", "dims": {"A": 2, "E": 2, "B": 2},
        "W": [[[1.0, 0.5], [0.4, 0.5]], [[0.0, 0.5], [0.5, 0.5]]]}"#;
    let path = write(&dir, "bad.json", text);
    let out = fqavc(&["game-classical", "--channel", p(&path)], None);
    assert_eq!(out.status.code(), Some(65));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x=1") && err.contains("e=0"), "{err}");
}

#[test]
fn schema_errors_exit_65() {
    let dir = TempDir::new().unwrap();
    let extra = write(&dir, "extra.json", r#"{"kind": "choi", "dims": {"A": 1, "E": 1, "B": 1}, "choi": [[[1,0]]], "note": 1}"#);
    assert_eq!(fqavc(&["capacity-ea", "--channel", p(&extra)], None).status.code(), Some(65));
    let kind = write(&dir, "kind.json", r#"{"kind": "mystery"}"#);
    assert_eq!(fqavc(&["capacity-ea", "--channel", p(&kind)], None).status.code(), Some(65));
    let not_tp = write(&dir, "ntp.json", r#"{"kind": "choi", "dims": {"A": 1, "E": 1, "B": 1}, "choi": [[[0.5,0]]]}"#);
    let out = fqavc(&["capacity-ea", "--channel", p(&not_tp)], None);
    assert_eq!(out.status.code(), Some(65));
    assert!(String::from_utf8_lossy(&out.stderr).contains("5e-1"));
}

#[test]
fn jammer_swap_choi_ignores_a() {
    let dir = TempDir::new().unwrap();
    let path = write_json(&dir, "swap.json", &ChannelJson::from_channel(&fixtures::jammer_swap(2)));
    let chan = load_channel(&path).unwrap().quantum();
    let mut rng = random::seeded(3);
    for _ in 0..10 {
        let sigma = DensityMatrix::new(random::ginibre_state(2, 2, &mut rng)).unwrap();
        let r1 = DensityMatrix::new(random::ginibre_state(2, 2, &mut rng)).unwrap();
        let r2 = DensityMatrix::new(random::ginibre_state(2, rng.random_range(1..=2), &mut rng)).unwrap();
        let o1 = chan.apply(&tensor(&r1, &sigma).unwrap()).unwrap();
        let o2 = chan.apply(&tensor(&r2, &sigma).unwrap()).unwrap();
        assert!(linalg::max_abs(&(o1.matrix() - o2.matrix())) < 1e-12);
        assert!(linalg::max_abs(&(o1.matrix() - sigma.matrix())) < 1e-12);
    }
}

#[test]
fn capacity_ea_identity() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::identity_on_a(2, 2)));
    let out = fqavc(&["capacity-ea", "--channel", p(&ch)], None);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!((doc["result"]["value"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert_eq!(doc["converged"], true);
    assert_eq!(doc["command"], "capacity-ea");
    assert!(doc["wall_time_seconds"].is_number());
    assert_eq!(doc["tolerances"]["psd_tol"], 1e-10);
}

#[test]
fn game_classical_flipped_identity() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "flip.json", &ChannelJson::from_table(&fixtures::jammer_flipped_identity()));
    let out = fqavc(&["game-classical", "--channel", p(&ch)], None);
    assert_eq!(out.status.code(), Some(0));
    let doc = stdout_json(&out);
    assert!((doc["result"]["value"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    assert!(doc["result"]["gap"].as_f64().unwrap().abs() <= 1e-10);

    let csv = fqavc(&["game-classical", "--channel", p(&ch), "--format", "csv"], None);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("round,inf_sup,sup_inf,gap"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn divergence_commands() {
    let dir = TempDir::new().unwrap();
    let mut rng = random::seeded(5);
    let rho = write_json(&dir, "rho.json", &DensityMatrix::new(random::ginibre_state(3, 3, &mut rng)).unwrap());
    let out = fqavc(&["divergence-dh", "--rho", p(&rho), "--sigma", p(&rho), "--eps", "0.5"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!((stdout_json(&out)["result"]["value"].as_f64().unwrap() - 1.0).abs() < 1e-10);

    let pure = write_json(&dir, "pure.json", &DensityMatrix::basis(3, 0));
    let mixed = write_json(&dir, "mixed.json", &DensityMatrix::maximally_mixed(3));
    let out = fqavc(&["divergence", "--rho", p(&mixed), "--sigma", p(&pure), "--eps", "0.2"], None);
    let doc = stdout_json(&out);
    assert_eq!(doc["result"]["relative_entropy"], "inf");
    assert!((doc["result"]["dmax"].as_str().unwrap()) == "inf");
    let out = fqavc(&["divergence", "--rho", p(&pure), "--sigma", p(&mixed)], None);
    let doc = stdout_json(&out);
    assert!((doc["result"]["relative_entropy"].as_f64().unwrap() - 3f64.log2()).abs() < 1e-12);
    assert!(doc["result"].get("dh").is_none());
}

#[test]
fn output_is_deterministic_apart_from_wall_time() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::controlled_identity_dephasing()));
    let run = |name: &str| {
        let out_path = dir.path().join(name);
        let out = fqavc(&["game-verify", "--channel", p(&ch), "--messages", "3", "--seed", "9", "--output", p(&out_path)], None);
        assert!(out.stdout.is_empty());
        let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
        doc.as_object_mut().unwrap().remove("wall_time_seconds");
        doc["config"]["output"] = Value::Null;
        serde_json::to_string(&doc).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn non_convergence_exits_1_with_result() {
    let dir = TempDir::new().unwrap();
    let mut rng = random::seeded(21);
    let kraus = random::kraus_set(2, 4, 3, &mut rng);
    let chan = fqavc::channels::QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&chan));
    let args = ["game-verify", "--channel", p(&ch), "--max-rounds", "1", "--tol", "1e-12", "--restarts", "1"];
    let out = fqavc(&args, None);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
    let doc = stdout_json(&out);
    assert_eq!(doc["converged"], false);
    assert!(doc["result"]["value"].is_number());
}

#[test]
fn numeric_config_override() {
    let dir = TempDir::new().unwrap();
    let ch = write_json(&dir, "ch.json", &ChannelJson::from_channel(&fixtures::identity_on_a(2, 1)));
    let cfg = write(&dir, "num.json", r#"{"psd_tol": 1e-6}"#);
    let out = fqavc(&["capacity-ea", "--channel", p(&ch)], Some((fqavc_cli::NUMERIC_CONFIG_ENV, &cfg)));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["tolerances"]["psd_tol"], 1e-6);
    let bad = write(&dir, "bad.json", r#"{"psd_tolerance": 1e-6}"#);
    let out = fqavc(&["capacity-ea", "--channel", p(&ch)], Some((fqavc_cli::NUMERIC_CONFIG_ENV, &bad)));
    assert_eq!(out.status.code(), Some(65));
}
