// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const SMALL: &str = r#"
seed = 3

[model]
mass = 1.0
potential = { kind = "harmonic", stiffness = 1.0 }
caldeira_leggett = { gamma = 0.5, kbt = 2.0 }

[grid]
tau = 1.0
dt = 0.01

[ensemble]
n_traj = 32
record_every = 10
initial = { kind = "point", x0 = 1.0, v0 = 0.0 }

[wigner]
state = { kind = "coherent", alpha_re = 1.0, alpha_im = 0.0, omega = 1.0, mass = 1.0, hbar = 1.0 }
n_points = 2000
times = [0.0, 0.5]
dt = 0.01
window = { x_min = -4.0, x_max = 4.0, p_min = -4.0, p_max = 4.0, nx = 8, np = 8 }

[inverse]
y0 = [1.0]
tau = [1.0]
dt = 0.01
"#;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn qisd(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qisd"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn unknown_key_is_exit_2_naming_the_key() {
    let dir = scratch("unknown_key");
    let cfg = write_config(&dir, &SMALL.replace("n_traj = 32", "n_traj = 32\nn_trajs = 4"));
    let o = qisd(&["simulate"], &cfg, &dir.join("out"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("n_trajs") && err.contains("line"), "{err}");
}

#[test]
fn missing_seed_is_exit_2_unless_given_on_the_command_line() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, &SMALL.replace("seed = 3", ""));
    assert_eq!(qisd(&["inverse"], &cfg, &dir.join("a")).status.code(), Some(2));
    let o = qisd(&["inverse", "--seed", "9"], &cfg, &dir.join("b"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = fs::read_to_string(dir.join("b/manifest.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(manifest.lines().last().unwrap()).unwrap();
    assert_eq!(rec["seed"], 9);
}

#[test]
fn missing_section_and_bad_parameters_have_distinct_codes() {
    let dir = scratch("codes");
    let no_grid = SMALL.replace("[grid]\ntau = 1.0\ndt = 0.01\n", "");
    let cfg = write_config(&dir, &no_grid);
    assert_eq!(qisd(&["simulate"], &cfg, &dir.join("a")).status.code(), Some(2));
    let cfg = write_config(&dir, &SMALL.replace("mass = 1.0", "mass = -1.0"));
    assert_eq!(qisd(&["simulate"], &cfg, &dir.join("b")).status.code(), Some(3));
    let free = SMALL.replace("kind = \"harmonic\", stiffness = 1.0", "kind = \"free\"");
    let cfg = write_config(&dir, &free);
    assert_eq!(qisd(&["validate"], &cfg, &dir.join("c")).status.code(), Some(3));
}

#[test]
fn shipped_config_validates() {
    let dir = scratch("validate");
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/caldeira_leggett.toml");
    let o = qisd(&["validate"], &cfg, &dir);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.matches("PASS").count(), 5, "{out}");
    assert!(!out.contains("FAIL"));
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn manifest_alone_regenerates_outputs() {
    let dir = scratch("manifest");
    let cfg = write_config(&dir, SMALL);
    for sub in ["simulate", "action", "wigner", "inverse"] {
        let o = qisd(&[sub, "--seed", "17"], &cfg, &dir.join("first"));
        assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let manifest = fs::read_to_string(dir.join("first/manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    for (k, line) in manifest.lines().enumerate() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let replay_dir = dir.join(format!("replay{k}"));
        fs::create_dir_all(&replay_dir).unwrap();
        let replay_cfg = replay_dir.join("config.toml");
        fs::write(&replay_cfg, rec["config"].as_str().unwrap()).unwrap();
        assert_eq!(sha(&replay_cfg), rec["config_sha256"].as_str().unwrap());
        let seed = rec["seed"].as_u64().unwrap().to_string();
        let o = qisd(&[rec["subcommand"].as_str().unwrap(), "--seed", &seed], &replay_cfg, &replay_dir.join("out"));
        assert!(o.status.success());
        for out in rec["outputs"].as_array().unwrap() {
            let name = out["path"].as_str().unwrap();
            assert_eq!(sha(&replay_dir.join("out").join(name)), out["sha256"].as_str().unwrap(), "{name}");
        }
    }
}

#[test]
fn plot_descriptions_name_existing_columns() {
    let dir = scratch("plots");
    let cfg = write_config(&dir, SMALL);
    for sub in ["simulate", "action", "wigner", "inverse"] {
        assert!(qisd(&[sub], &cfg, &dir).status.success());
    }
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if !(name.starts_with("plot_") && name.ends_with(".json")) {
            continue;
        }
        seen += 1;
        let plot: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let data = fs::read_to_string(dir.join(plot["data"].as_str().unwrap())).unwrap();
        let header: Vec<&str> = data.lines().next().unwrap().split(',').collect();
        let mut columns = vec![plot["x"].as_str().unwrap()];
        for key in ["y", "value", "group_by"] {
            if let Some(c) = plot[key].as_str() {
                columns.push(c);
            }
        }
        for s in plot["series"].as_array().into_iter().flatten() {
            columns.push(s["y"].as_str().unwrap());
            if let Some(e) = s["error"].as_str() {
                columns.push(e);
            }
        }
        for c in columns {
            assert!(header.contains(&c), "{name}: column {c} not in {header:?}");
        }
    }
    assert!(seen >= 6);
}
