use std::path::Path;
use std::process::{Command, Output};

fn qudesign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qudesign"))
        .args(args)
        .env_remove("QUDESIGN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = qudesign(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows split into fields, header dropped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s}"))
}

#[test]
fn welch_phase_states_pass_at_two() {
    let r = rows(&stdout(&["welch", "--ensemble", "phase:6:7", "--t", "2"]));
    assert_eq!(r[0][7], "true");
    assert!((num(&r[0][6]) - 1.0).abs() < 1e-9);
}

#[test]
fn welch_qubit_sic_fails_at_three() {
    let r = rows(&stdout(&["welch", "--ensemble", "sic2", "--t", "3"]));
    assert_eq!(r[0][7], "false");
    assert!((num(&r[0][6]) - 10.0 / 9.0).abs() < 1e-9);
}

#[test]
fn welch_wootters_ratio_one() {
    let r = rows(&stdout(&["welch", "--ensemble", "wf:3", "--t", "1"]));
    assert!((num(&r[0][6]) - 1.0).abs() < 1e-9);
    assert_eq!(r[0][7], "true");
}

#[test]
fn frame_cyclic_ratio() {
    let d = 4.0_f64;
    for r in rows(&stdout(&["frame", "--group", "cyclic:4", "--t-grid", "1:3:1"])) {
        let t = num(&r[0]);
        let fact: f64 = (1..=t as u32).map(f64::from).product();
        let want = d.powf(2.0 * t - 1.0) / fact;
        assert!((num(&r[3]) / want - 1.0).abs() < 1e-9, "t={t}");
    }
}

#[test]
fn frame_sl2f5_is_five_design() {
    let r = rows(&stdout(&["frame", "--group", "sl2f5", "--t-grid", "1:6:1"]));
    assert_eq!(r.len(), 6);
    for row in &r[..5] {
        assert!((num(&row[3]) - 1.0).abs() < 1e-9, "{row:?}");
    }
    assert!(num(&r[5][3]) > 1.0 + 1e-6);
}

#[test]
fn frame_qubit_clifford_two() {
    let r = rows(&stdout(&["frame", "--group", "clifford:2", "--t-grid", "2:2:1"]));
    assert!((num(&r[0][1]) - 2.0).abs() < 1e-9);
}

fn fitted_rates(dir: &Path, args: &[&str]) -> Vec<(f64, f64)> {
    let out = dir.join("rb.csv");
    let mut full = args.to_vec();
    let out_s = out.to_str().unwrap();
    full.extend(["--out", out_s]);
    stdout(&full);
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rb.csv.fit.json")).unwrap()).unwrap();
    fit["oracle"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["fitted"].as_f64().unwrap(), c["oracle"].as_f64().unwrap()))
        .collect()
}

#[test]
fn rb_clifford_six_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["rb", "--group", "clifford:6", "--noise", "depol:0.01", "--lengths", "1,2,4,8,16,32"];
    let rates = fitted_rates(dir.path(), &args);
    assert_eq!(rates.len(), 4);
    for (f, o) in rates {
        assert!((f - o).abs() <= 0.02, "{f} vs {o}");
    }
    assert!(dir.path().join("rb.csv.manifest.json").exists());
}

#[test]
fn rb_spin_one_three_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["rb", "--group", "su2:1", "--noise", "depol:0.02", "--lengths", "1,2,4,8,16"];
    let rates = fitted_rates(dir.path(), &args);
    assert_eq!(rates.len(), 3);
    for (f, o) in rates {
        assert!((f - o).abs() <= 0.02, "{f} vs {o}");
    }
}

#[test]
fn rb_without_noise_does_not_decay() {
    let dir = tempfile::tempdir().unwrap();
    for (f, _) in fitted_rates(dir.path(), &["rb", "--group", "clifford:3", "--noise", "none"]) {
        assert!((f - 1.0).abs() < 1e-9);
    }
}

#[test]
fn unknown_specs_exit_two() {
    for args in [
        vec!["welch", "--ensemble", "nope:3", "--t", "1"],
        vec!["frame", "--group", "clifford", "--t-grid", "1:2:1"],
        vec!["rb", "--group", "cyclic:3"],
        vec!["frame", "--group", "pauli:2", "--t-grid", "2:1"],
        vec!["bogus"],
    ] {
        assert_eq!(qudesign(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn oversized_input_exits_three() {
    let out = qudesign(&["welch", "--ensemble", "stab:4", "--t", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seeded_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        vec!["circuit", "--d", "3", "--t", "2", "--depth", "4", "--samples", "128"],
        vec!["haar-mc", "--d", "3", "--t-grid", "1:3:1", "--samples", "5000"],
        vec!["spacing", "--samples", "10000"],
        vec!["frame", "--group", "su2mc:1", "--t-grid", "1:2:1", "--samples", "10000"],
        vec!["rb", "--group", "clifford:2", "--noise", "depol:0.05", "--mode", "shots", "--shots", "100"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let a = dir.path().join(format!("{i}a.csv"));
        let b = dir.path().join(format!("{i}b.csv"));
        for (p, threads) in [(&a, "1"), (&b, "2")] {
            let mut full = args.clone();
            full.extend(["--seed", "11", "--threads", threads, "--out", p.to_str().unwrap()]);
            stdout(&full);
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{args:?}");
    }
}

#[test]
fn replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    stdout(&["circuit", "--d", "2", "--t", "2", "--depth", "3", "--samples", "64", "--seed", "5", "--out", out.to_str().unwrap()]);
    let first = std::fs::read(&out).unwrap();
    std::fs::remove_file(&out).unwrap();
    let manifest = dir.path().join("c.csv.manifest.json");
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 5);
    assert_eq!(m["command"], "circuit");
    assert_eq!(m["parameters"]["depth"], 3);
    stdout(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn json_output_carries_manifest() {
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&["welch", "--ensemble", "mub:3", "--t", "2", "--format", "json"])).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["manifest"]["command"], "welch");
    assert_eq!(v["data"]["pass"], true);
}
