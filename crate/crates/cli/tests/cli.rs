//! End-to-end checks of the `biot-split` binary: argument handling, exit
//! codes, and the stability of the CSV artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biot-split"))
}

fn work_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("biot-split-cli-{}-{tag}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn help_documents_the_unused_env_var() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("BIOT_SPLIT_SEEDLESS"), "{text}");
    assert!(text.contains("deterministic"), "{text}");
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_config_error() {
    let dir = work_dir("missing");
    let out = bin()
        .args(["converge", "--config"])
        .arg(dir.join("nope.json"))
        .args(["--out"])
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.json"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_named_in_the_error() {
    let dir = work_dir("unknown-key");
    let cfg = write_config(
        &dir,
        "bad.json",
        r#"{
            "experiment": "converge",
            "discretization": "mini",
            "scheme": { "kind": "explicit_fixed_stress" },
            "physics": { "mu": 2.0, "lambda": 1.0, "alpha": 1.0, "c0": 0.01, "k": 1.0 },
            "levels": [ { "nx": 4, "tau": 0.5 } ],
            "typo_field": true
        }"#,
    );
    let out = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("typo_field"), "{}", stderr(&out));
}

#[test]
fn experiment_must_match_the_subcommand() {
    let dir = work_dir("mismatch");
    let out = bin()
        .args(["barry-mercer", "--config"])
        .arg(repo_config("table1.json"))
        .args(["--out"])
        .arg(dir.join("out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("converge") && err.contains("barry_mercer"), "{err}");
}

#[test]
fn missing_output_path_is_a_config_error() {
    let out = bin()
        .args(["converge", "--config"])
        .arg(repo_config("table1.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--out"), "{}", stderr(&out));
}

const SMALL_CONVERGE: &str = r#"{
    "experiment": "converge",
    "discretization": "mini",
    "scheme": { "kind": "explicit_fixed_stress", "omega": 1.0 },
    "physics": { "mu": 2.0, "lambda": 1.0, "alpha": 1.0, "c0": 0.01, "k": 1.0 },
    "t_final": 1.0,
    "levels": [ { "nx": 4, "tau": 0.5 }, { "nx": 8, "tau": 0.25 } ]
}"#;

#[test]
fn converge_writes_a_stable_table() {
    let dir = work_dir("converge");
    let cfg = write_config(&dir, "small.json", SMALL_CONVERGE);
    let out1 = dir.join("a.csv");
    let out2 = dir.join("b.csv");
    for out_path in [&out1, &out2] {
        let out = bin()
            .args(["converge", "--config"])
            .arg(&cfg)
            .args(["--out"])
            .arg(out_path)
            .args(["--threads", "2"])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let a = fs::read_to_string(&out1).unwrap();
    let b = fs::read(&out2).unwrap();
    assert_eq!(a.as_bytes(), b.as_slice(), "repeated runs must be byte-identical");

    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(
        lines[0],
        "h,tau,p_err_fully,p_err_dec,p_rate,u_err_fully,u_err_dec,u_rate"
    );
    let first: Vec<&str> = lines[1].split(',').collect();
    let second: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first[0], "2.50000e-01");
    assert!(first[4].is_empty() && first[7].is_empty());
    assert!(!second[4].is_empty());
    for cell in [first[2], first[3], second[2], second[3], second[4]] {
        let v: f64 = cell.parse().unwrap();
        assert!(v.is_finite());
    }
}

#[test]
fn output_path_can_come_from_the_config() {
    let dir = work_dir("out-field");
    let target = dir.join("from-config.csv");
    let cfg_text = SMALL_CONVERGE.replacen(
        "{\n",
        &format!("{{\n    \"output\": {:?},\n", target.to_str().unwrap()),
        1,
    );
    let cfg = write_config(&dir, "with-output.json", &cfg_text);
    let out = bin().args(["converge", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(target.exists());
}

#[test]
fn snapshot_dump_has_the_documented_layout() {
    let dir = work_dir("run");
    let out_path = dir.join("dump.csv");
    let out = bin()
        .args(["run", "--config"])
        .arg(repo_config("single_run.json"))
        .args(["--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "step,time,dof,index,value");
    // nx = 8 MINI: 2*81 vertex + 2*128 bubble displacement dofs plus 81
    // pressure dofs per level; 5 levels: (418 + 81) * 5 rows.
    assert_eq!(lines.len() - 1, 499 * 5);
    assert!(lines[1].starts_with("0,0.00000e+00,u,0,"));
    assert!(lines.last().unwrap().starts_with("4,1.00000e+00,p,80,"));
}

#[test]
fn naive_blowup_surfaces_as_exit_code_4_and_a_tagged_row() {
    let dir = work_dir("instability");
    let cfg = write_config(
        &dir,
        "naive.json",
        r#"{
            "experiment": "converge",
            "discretization": "mini",
            "scheme": { "kind": "explicit_naive", "inner_max": 2000 },
            "physics": { "mu": 2.0, "lambda": 1.0, "alpha": 1.0, "c0": 0.0, "k": 1.0 },
            "t_final": 0.025,
            "levels": [ { "nx": 16, "tau": 1e-4 } ]
        }"#,
    );
    let out_path = dir.join("unstable.csv");
    let out = bin()
        .args(["converge", "--config"])
        .arg(&cfg)
        .args(["--out"])
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("unstable(step="), "{text}");
    assert!(!text.contains("NaN") && !text.contains("inf"), "{text}");
}
