use std::process::{Command, Output};

use relbc_core::config::ScenarioConfig;
use serde_json::Value;

fn relbc(args: &[&str]) -> Output {
    relbc_env(args, &[])
}

fn relbc_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_relbc"));
    cmd.args(args).env_remove("RELBC_SEED");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_str(&stdout(out)).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

#[test]
fn honest_json_report_is_dominated_by_revealed() {
    let out = relbc(&[
        "run", "--variant", "symmetric", "--l", "16", "--d", "3e8", "--adversary", "honest",
        "--trials", "20000", "--seed", "7", "--output", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let counts = &v["outcome_counts"];
    let revealed = counts["revealed_0"].as_u64().unwrap() + counts["revealed_1"].as_u64().unwrap();
    assert!(revealed >= 19_990);
    assert_eq!(counts["cheat_detected"], 0);
    assert_eq!(v["trials"], 20000);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["expected_rate"]["exact_fraction"], "1/65535");
    assert_eq!(v["expected_rate"]["paper_approximation_fraction"], "1/2^16");
}

#[test]
fn midpoint_station_appears_at_half_the_span() {
    let out = relbc(&["run", "--variant", "symmetric", "--l", "8", "--adversary", "bob-b3:mid", "--emit-transcript"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    // d = 3e8 m at the physical c: d/(2c) = 75000000/149896229 s
    assert!(text.contains("0.500346142797 | B3 | recv:cross<B1"), "{text}");
    assert!(text.contains("0.500346142797 | B3 | intercept:"), "{text}");
    assert!(text.contains("knowledge time B3: earliest 75000000/149896229 s"), "{text}");

    let unit = relbc(&["run", "--l", "8", "--c", "3e8", "--adversary", "bob-b3:mid", "--emit-transcript"]);
    assert!(stdout(&unit).contains("0.5 | B3 | recv:cross<B2"));
}

#[test]
fn transcript_in_json_output() {
    let out = relbc(&["run", "--l", "4", "--output", "json", "--emit-transcript", "--c", "3e8"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let entries = v["transcript"]["entries"].as_array().unwrap();
    assert!(!entries.is_empty());
    assert!(v["outcome_counts"].is_object());
}

#[test]
fn zero_length_is_a_usage_error() {
    let out = relbc(&["run", "--l", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(relbc(&["run", "--adversary", "eve"]).status.code(), Some(1));
    assert_eq!(relbc(&["run", "--delta", "0.5"]).status.code(), Some(1));
    assert_eq!(relbc(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(relbc(&["run", "--config", "/nonexistent/relbc.cfg"]).status.code(), Some(1));
    assert_eq!(relbc(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(relbc(&["--help"]).status.code(), Some(0));
}

#[test]
fn embedded_config_round_trips_through_a_file() {
    let args = [
        "run", "--variant", "subordinate", "--l", "12", "--d", "1.5e8", "--c", "299792458",
        "--delta", "1/1000", "--adversary", "alice-diff-key", "--bit", "1", "--seed", "42",
        "--trials", "300", "--output", "json", "--emit-transcript",
    ];
    let first = relbc(&args);
    assert_eq!(first.status.code(), Some(0));
    let v = json(&first);
    let cfg: ScenarioConfig = serde_json::from_value(v["config"].clone()).unwrap();
    assert_eq!(cfg.l, 12);
    assert_eq!(cfg.seed, 42);
    assert!(cfg.emit_transcript);
    assert_eq!(cfg.adversary.to_string(), "alice-diff-key");

    let dir = std::env::temp_dir().join(format!("relbc-roundtrip-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, cfg.to_kv()).unwrap();
    let second = relbc(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(stdout(&second), stdout(&first));
    assert_eq!(ScenarioConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);

    // flags win over the file
    let third = relbc(&["run", "--config", path.to_str().unwrap(), "--seed", "43"]);
    assert_eq!(json(&third)["seed"], 43);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn seed_falls_back_to_environment() {
    let from_env = relbc_env(&["run", "--l", "6", "--output", "json", "--trials", "50"], &[("RELBC_SEED", "5")]);
    assert_eq!(json(&from_env)["seed"], 5);
    let flag = relbc_env(&["run", "--l", "6", "--output", "json", "--trials", "50", "--seed", "6"], &[("RELBC_SEED", "5")]);
    assert_eq!(json(&flag)["seed"], 6);
    let bad = relbc_env(&["run", "--l", "6"], &[("RELBC_SEED", "five")]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn json_and_csv_carry_the_same_numbers() {
    let base = ["run", "--l", "6", "--trials", "4000", "--seed", "9", "--adversary", "alice-diff-bit:1,0"];
    let j = json(&relbc(&[&base[..], &["--output", "json"]].concat()));
    let csv_out = stdout(&relbc(&[&base[..], &["--output", "csv"]].concat()));
    let mut reader = csv::Reader::from_reader(csv_out.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let row = reader.records().next().unwrap().unwrap();
    let field = |name: &str| row[headers.iter().position(|h| h == name).unwrap()].to_string();

    for kind in ["revealed_0", "revealed_1", "ambiguous", "cheat_detected"] {
        assert_eq!(field(kind), j["outcome_counts"][kind].to_string());
    }
    assert_eq!(field("trials"), j["trials"].to_string());
    assert_eq!(field("seed"), j["seed"].to_string());
    assert_eq!(field("adversary"), "alice-diff-bit:1,0");
    assert_eq!(field("ambiguity_rate").parse::<f64>().unwrap(), j["ambiguity_rate"].as_f64().unwrap());
    assert_eq!(
        field("expected_exact").parse::<f64>().unwrap(),
        j["expected_rate"]["exact"].as_f64().unwrap()
    );
    assert_eq!(
        field("paper_approximation").parse::<f64>().unwrap(),
        j["expected_rate"]["paper_approximation"].as_f64().unwrap()
    );
    assert_eq!(field("consistent"), j["consistent"].to_string());
    assert_eq!(field("b1_never"), j["knowledge_times"]["B1"]["never"].to_string());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = ["run", "--l", "10", "--trials", "3000", "--seed", "11", "--output", "json", "--emit-transcript"];
    let a = relbc(&args);
    let b = relbc(&args);
    let c = relbc(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
}

#[test]
fn degenerate_verify_passes() {
    let out = relbc(&["verify", "--max-l", "1", "--mc-l", "4", "--seeds", "1", "--trials", "500"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS  exhaustive symmetric honest l=1"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn fault_injection_fails_verify() {
    let out = relbc(&["verify", "--max-l", "2", "--mc-l", "4", "--seeds", "1", "--trials", "500", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL"));
}
