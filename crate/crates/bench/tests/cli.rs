use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpe_bench::harness::{run_experiment, run_sweep, SUMMARY_COLUMNS, TRIAL_COLUMNS};
use cpe_bench::ExperimentConfig;

const CONFIG: &str = r#"
name = "disj"
trials = 6
seed = 40
[class]
kind = "disj_set"
arms = 6
size = 2
[mu.homogeneous]
star = "analytic-first"
gap = 0.5
[algorithm]
name = "fixed-confidence"
failure_prob = 0.1
[disagreement]
backend = "brute_force"
[output]
traces = true
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cpe-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn cpe(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cpe"));
    cmd.args(args).env_remove("CPE_SEED");
    if let Some(seed) = seed_env {
        cmd.env("CPE_SEED", seed);
    }
    cmd.output().unwrap()
}

fn summary_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// Drops the wall-time column so files from different runs compare equal.
fn without_wall_time(csv_text: &str) -> String {
    csv_text.lines().map(|l| l.rsplit_once(',').unwrap().0).collect::<Vec<_>>().join("\n")
}

#[test]
fn run_writes_schema_stable_outputs() {
    let dir = scratch("run");
    let cfg = write_config(&dir, CONFIG);
    let out = dir.join("out");
    let json = summary_json(&cpe(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None));
    assert_eq!(json["trials"], 6);
    assert_eq!(json["base_seed"], 40);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next().unwrap(), SUMMARY_COLUMNS.join(","));
    assert_eq!(summary.lines().count(), 2);
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().next().unwrap(), TRIAL_COLUMNS.join(","));
    let seeds: Vec<&str> = trials.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(seeds, ["40", "41", "42", "43", "44", "45"]);

    let traces = fs::read_to_string(out.join("traces.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = traces.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.iter().filter(|l| l.get("result").is_some()).count(), 6);
    assert!(lines.iter().all(|l| l["seed"].as_u64().unwrap() == 40 + l["trial"].as_u64().unwrap()));
    assert!(lines.iter().any(|l| l["event"]["event"] == "fixed_confidence_round"));
}

#[test]
fn output_is_identical_across_worker_counts() {
    let cfg = ExperimentConfig::from_toml_str(CONFIG).unwrap();
    let mut files = Vec::new();
    for workers in [1, 4] {
        let dir = scratch(&format!("workers-{workers}"));
        run_experiment(&cfg, workers, Some(&dir)).unwrap();
        files.push((
            fs::read_to_string(dir.join("summary.csv")).unwrap(),
            without_wall_time(&fs::read_to_string(dir.join("trials.csv")).unwrap()),
            fs::read_to_string(dir.join("traces.jsonl")).unwrap(),
        ));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn noiseless_single_trial_is_deterministic() {
    let dir = scratch("noiseless");
    let text = CONFIG.replace("trials = 6", "trials = 1").replace("[output]", "[noise]\nkind = \"noiseless\"\n[output]");
    let cfg = write_config(&dir, &text);
    let args = ["run", "--config", cfg.to_str().unwrap()];
    let first = summary_json(&cpe(&args, None));
    let second = summary_json(&cpe(&args, None));
    assert_eq!(first, second);
    assert_eq!(first["success_rate"], 1.0);
}

#[test]
fn seed_precedence_is_flag_then_environment_then_config() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, CONFIG);
    let path = cfg.to_str().unwrap();
    let seed_of = |out: Output| summary_json(&out)["base_seed"].as_u64().unwrap();
    assert_eq!(seed_of(cpe(&["run", "--config", path], None)), 40);
    assert_eq!(seed_of(cpe(&["run", "--config", path], Some("7"))), 7);
    assert_eq!(seed_of(cpe(&["run", "--config", path, "--seed", "9"], Some("7"))), 9);
    let bad = cpe(&["run", "--config", path], Some("seven"));
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("CPE_SEED"));
}

#[test]
fn invalid_configs_fail_with_the_field_name() {
    let dir = scratch("invalid");
    let cfg = write_config(&dir, &CONFIG.replace("failure_prob = 0.1", "failure_prob = 2.0"));
    let out = cpe(&["run", "--config", cfg.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("algorithm.failure_prob"));

    let cfg = write_config(&dir, &CONFIG.replace("size = 2", "size = 4"));
    let out = cpe(&["run", "--config", cfg.to_str().unwrap()], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("class"));

    let out = cpe(&["run", "--config", dir.join("missing.toml").to_str().unwrap()], None);
    assert!(!out.status.success());
}

#[test]
fn complexity_report_examples() {
    let dir = scratch("complexity");
    let measure = |class: &str| {
        let cfg = write_config(&dir, &format!("[class]\n{class}\n"));
        summary_json(&cpe(&["complexity", "--config", cfg.to_str().unwrap()], None))
    };
    assert_eq!(measure("kind = \"matching\"\nside = 3")["psi"], 4);
    assert_eq!(measure("kind = \"biclique\"\narms = 16\nsize = 4")["psi"], 4);
    let phi = measure("kind = \"disj_set\"\narms = 6\nsize = 2")["phi"].as_f64().unwrap();
    assert!((phi - std::f64::consts::LN_2 / 4.0).abs() < 1e-12);

    let cfg = write_config(&dir, "[class]\nkind = \"top_k\"\narms = 4\nsize = 2\n[mu]\nexplicit = [0.6, 0.2, -0.1, -0.5]\n");
    let report = summary_json(&cpe(&["complexity", "--config", cfg.to_str().unwrap()], None));
    let instance = &report["instance"];
    assert_eq!(instance["star"], serde_json::json!([1, 1, 0, 0]));
    assert_eq!(instance["hypothesis_gaps"].as_array().unwrap().len(), 5);
    let gaps: Vec<f64> = instance["arm_gaps"].as_array().unwrap().iter().map(|g| g.as_f64().unwrap()).collect();
    for (g, expected) in gaps.iter().zip([0.35, 0.15, 0.15, 0.35]) {
        assert!((g - expected).abs() < 1e-12, "{gaps:?}");
    }
    let h: f64 = gaps.iter().map(|g| 1.0 / (g * g)).sum();
    assert!((instance["h"].as_f64().unwrap() - h).abs() < 1e-9);
    assert_eq!(instance["refined"].as_array().unwrap().len(), 4);
    assert_eq!(instance["complement_gaps"].as_array().unwrap().len(), 4);
}

#[test]
fn audits_report_against_their_bounds() {
    let dir = scratch("audit");
    let cfg = write_config(
        &dir,
        "trials = 200\nseed = 3\n[class]\nkind = \"top_k\"\narms = 6\nsize = 2\n[mu]\nexplicit = [0.7, 0.5, 0.2, 0.0, -0.3, -0.6]\n[algorithm]\nname = \"mle\"\nbudget = 600\nfailure_prob = 0.1\n",
    );
    let path = cfg.to_str().unwrap();
    for flag in ["--lemma1", "--ftpl-regret"] {
        let report = summary_json(&cpe(&["audit", flag, "--config", path, "--rounds", "100"], None));
        assert_eq!(report["passed"], true, "{flag}: {report}");
    }
    // The martingale audit needs a fixed-confidence algorithm section.
    let out = cpe(&["audit", "--lemma3", "--config", path], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("algorithm.name"));
    // Exactly one audit must be chosen.
    assert!(!cpe(&["audit", "--config", path], None).status.success());
}

#[test]
fn sweep_over_set_size_reduces_queries() {
    let text = CONFIG
        .replace("arms = 6", "arms = 12")
        .replace("trials = 6", "trials = 20")
        .replace("[output]\ntraces = true", "[sweep]\n\"class.size\" = [2, 4, 6]");
    let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
    let dir = scratch("sweep");
    let summaries = run_sweep(&cfg, 0, Some(&dir)).unwrap();
    assert_eq!(summaries.len(), 3);
    let means: Vec<f64> = summaries.iter().map(|s| s.mean_total_queries).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    assert!(summaries[1].label.contains("class.size=4"));
    let csv = fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(dir.join("point-2").join("trials.csv").exists());
}
