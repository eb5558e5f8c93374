use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use lee_zk::problems::InstanceFile;
use lee_zk::protocol::run_session;
use lee_zk::Witness;

const BIN: &str = env!("CARGO_BIN_EXE_lee-zk");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

struct Files {
    _dir: tempfile::TempDir,
    instance: PathBuf,
    witness: PathBuf,
    transcript: PathBuf,
}

fn generate(seed: &str) -> Files {
    let dir = tempfile::tempdir().unwrap();
    let instance = dir.path().join("inst.json");
    let witness = dir.path().join("wit.json");
    let transcript = dir.path().join("session.bin");
    let o = run(&[
        "gen", "--n", "20", "--k", "10", "--m", "7", "--w", "20", "--seed", seed, "--out",
        s(&instance), "--witness-out", s(&witness),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    Files {
        _dir: dir,
        instance,
        witness,
        transcript,
    }
}

#[test]
fn transcript_round_trip_and_tamper() {
    let f = generate("1");
    let o = run(&[
        "prove", "--instance", s(&f.instance), "--witness", s(&f.witness), "--rounds", "16",
        "--transcript-out", s(&f.transcript), "--seed", "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let sidecar: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.json", s(&f.transcript))).unwrap()).unwrap();
    assert_eq!(sidecar["rounds_run"], 16);
    assert_eq!(sidecar["accepted"], true);

    let o = run(&["verify", "--instance", s(&f.instance), "--rounds", "16", "--transcript-in", s(&f.transcript)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("accept"));

    // flip one byte inside the first response body
    let mut bytes = std::fs::read(&f.transcript).unwrap();
    let first_response = 2 * (6 + 37) + (6 + 256) + (6 + 1);
    assert_eq!(bytes[first_response + 1], 2, "response frame type");
    bytes[first_response + 6 + 40] ^= 0x10;
    let tampered = f.transcript.with_extension("tampered");
    std::fs::write(&tampered, &bytes).unwrap();
    let o = run(&["verify", "--instance", s(&f.instance), "--transcript-in", s(&tampered)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(
        ["opening", "range", "malformed", "a1", "a2", "b1", "b2", "c1", "c2"].iter().any(|c| err.contains(c)),
        "{err}"
    );

    // a broken frame header is a protocol error
    bytes[0] = 9;
    std::fs::write(&tampered, &bytes).unwrap();
    let o = run(&["verify", "--instance", s(&f.instance), "--transcript-in", s(&tampered)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn tcp_session_matches_in_process_run() {
    let f = generate("2");
    let mut prover = Command::new(BIN)
        .args([
            "prove", "--instance", s(&f.instance), "--witness", s(&f.witness), "--rounds", "16",
            "--listen", "127.0.0.1:0", "--seed", "77", "--max-sessions", "1",
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(prover.stderr.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").expect("listen banner").to_string();

    let o = run(&["verify", "--instance", s(&f.instance), "--rounds", "16", "--connect", &addr, "--seed", "77"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(prover.wait().unwrap().success());

    // same seed in-process
    let file = InstanceFile::from_json(&std::fs::read_to_string(&f.witness).unwrap()).unwrap();
    let inst = file.instance().unwrap();
    let wit = Witness::new(file.witness().unwrap().unwrap());
    let report = run_session(&inst, &wit, 16, &mut ChaCha20Rng::seed_from_u64(77)).unwrap();
    assert!(report.accepted);
    let challenges: String = report.rounds.iter().map(|r| r.challenge.to_string()).collect();
    assert_eq!(stdout(&o).trim(), format!("accept: 16 rounds ({challenges})"));
}

#[test]
fn mismatched_rounds_abort_with_protocol_error() {
    let f = generate("3");
    let mut prover = Command::new(BIN)
        .args([
            "prove", "--instance", s(&f.instance), "--witness", s(&f.witness), "--rounds", "8",
            "--listen", "127.0.0.1:0", "--max-sessions", "1",
        ])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(prover.stderr.as_mut().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let o = run(&["verify", "--instance", s(&f.instance), "--rounds", "16", "--connect", &addr]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(prover.wait().unwrap().code(), Some(3));
}

#[test]
fn bench_reports_about_one_megabit() {
    let o = run(&["bench", "--n", "425", "--k", "229", "--m", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bits = v["formula_bits"].as_f64().unwrap();
    assert!((1.00e6..1.02e6).contains(&bits), "{bits}");

    let o = run(&["bench", "--n", "20", "--k", "10", "--m", "7", "--measure", "--seed", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["measured"]["ratio_to_formula"].as_f64().unwrap() <= 1.25);
}

#[test]
fn reduce_oracle_and_simulate() {
    let f = generate("4");
    let dir = f.instance.parent().unwrap();
    let tern = dir.join("tern.json");
    let o = run(&["reduce", "--in", s(&f.witness), "--mode", "ternary", "--out", s(&tern)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let file = InstanceFile::from_json(&std::fs::read_to_string(&tern).unwrap()).unwrap();
    let inst = file.instance().unwrap();
    assert!(lee_zk::problems::check_witness(&inst, &file.witness().unwrap().unwrap()).unwrap());

    // a tiny general instance, reduced to balanced form
    let general = dir.join("general.json");
    std::fs::write(
        &general,
        r#"{"variant":"general","m":5,"n":3,"k":1,"w":2,"H":[1,2,0,1,-2,-1],"s":[1,2],"e":null}"#,
    )
    .unwrap();
    let o = run(&["oracle", "--in", s(&general)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["decision"] == "yes" || v["decision"] == "no");
    let o = run(&["reduce", "--in", s(&general), "--mode", "balanced"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"balanced\""));
    let o = run(&["oracle", "--in", s(&f.instance), "--budget", "100"]);
    assert!(stdout(&o).contains("budget_exceeded"));

    let o = run(&[
        "simulate", "--instance", s(&f.instance), "--challenge", "c", "--samples", "200",
        "--witness", s(&f.witness), "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["accepted"], 200);
    assert_eq!(v["f_pi_shape_ok"], 200);
    assert!(v["real_vs_simulated"]["p_value"].as_f64().is_some());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["verify", "--instance", "x.json"]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--n", "4"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"variant\": \"balanced\"}").unwrap();
    assert_eq!(run(&["oracle", "--in", s(&bad)]).status.code(), Some(2));
    let out = dir.path().join("i.json");
    let o = run(&["gen", "--n", "4", "--k", "2", "--m", "3", "--w", "2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}
