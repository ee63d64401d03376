// Copyright 2026 The sapa-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use sapa_cli::output::{config_hash, Header};
use sapa_cli::{execute, Config, Scenario};

const SMALL_MAP: &str = r#"
[rabi_map]
probe_offset_mhz = { start = -40.0, stop = 40.0, points = 41 }
epsilon_uev = { start = -60.0, stop = 60.0, points = 31 }
"#;

fn sapa(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sapa"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("SAPA_WORKERS", w),
        None => cmd.env_remove("SAPA_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn unknown_key_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[system.cavity]\nkapa_hz = 1e6\n");
    let out = sapa(&["noise-budget", "--config", &cfg], None);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("system.cavity") && err.contains("kapa_hz"), "{err}");
}

#[test]
fn out_of_range_value_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[readout]\nrepeats = 1\n");
    let out = sapa(&["noise-budget", "--config", &cfg], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("readout.repeats"));
}

#[test]
fn missing_config_file_is_reported() {
    let out = sapa(&["noise-budget", "--config", "/nonexistent/sapa.toml"], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/sapa.toml"));
}

#[test]
fn header_round_trips_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "nb.toml", "[noise_budget]\nn_sapa = 2.0\nnoise_rise = 3.5\n");
    let out = sapa(&["noise-budget", "--config", &cfg, "--seed", "9"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header = Header::parse(&text);
    assert_eq!(header.get("tool"), Some(sapa_cli::output::TOOL));
    assert_eq!(header.seed(), Some(9));
    assert_eq!(header.scenario(), Some(Scenario::NoiseBudget));
    let recovered = header.config().unwrap();
    assert_eq!(recovered.noise_budget.n_sapa, 2.0);
    assert_eq!(header.get("config_hash"), Some(config_hash(Scenario::NoiseBudget, &recovered).as_str()));
    assert_eq!(execute(Scenario::NoiseBudget, &recovered, 9).unwrap(), text);
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "map.toml", SMALL_MAP);
    let mut files = Vec::new();
    for (k, workers) in [Some("1"), Some("1"), Some("3"), None].into_iter().enumerate() {
        let out = dir.path().join(format!("map{k}.csv"));
        let o = sapa(&["rabi-map", "--config", &cfg, "--out", out.to_str().unwrap()], workers);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        files.push(std::fs::read(out).unwrap());
    }
    assert!(files.iter().all(|f| f == &files[0]));
}

#[test]
fn noisy_readout_depends_on_seed_only() {
    let mut cfg = Config::from_toml(
        r#"
[[system.dqd]]
gap_hz = 5.32e9

[[system.dqd]]
gap_hz = 5.8e9

[readout]
pump_power_dbm = -118.886
probe_offset_mhz = -4.82
repeats = 4
epsilon2_uev = { start = -20.0, stop = 20.0, points = 3 }
"#,
    )
    .unwrap();
    let a = execute(Scenario::Readout, &cfg, 1).unwrap();
    let b = execute(Scenario::Readout, &cfg, 2).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, execute(Scenario::Readout, &cfg, 1).unwrap());
    cfg.readout.repeats = 5;
    assert_ne!(Header::parse(&a).get("config_hash"), Header::parse(&execute(Scenario::Readout, &cfg, 1).unwrap()).get("config_hash"));
}

#[test]
fn fit_reads_a_rabi_map_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "map.toml", SMALL_MAP);
    let map = dir.path().join("map.csv");
    assert!(sapa(&["rabi-map", "--config", &cfg, "--out", map.to_str().unwrap()], None).status.success());
    let fit_cfg = write(dir.path(), "fit.toml", &format!("[fit]\ndata = {:?}\n", map.to_str().unwrap()));
    let out = sapa(&["fit", "--config", &fit_cfg], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let truth = Config::default().system_params().unwrap().dqds[0];
    let mut checked = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let expected = match (&rec[0], &rec[1]) {
            ("coupled", "g_c") => truth.g_c,
            ("coupled", "gamma_2") => truth.gamma_2(),
            _ => continue,
        };
        let v: f64 = rec[2].parse().unwrap();
        assert!((v - expected).abs() < 1e-6 * expected, "{} = {v}, expected {expected}", &rec[1]);
        checked += 1;
    }
    assert_eq!(checked, 2);
}

#[test]
fn fit_rejects_data_without_required_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "d.csv", "probe_hz,amplitude\n1,2\n");
    let cfg = write(dir.path(), "fit.toml", &format!("[fit]\ndata = {data:?}\n"));
    let out = sapa(&["fit", "--config", &cfg], None);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon_uev"));
}
