use std::fs;
use std::path::{Path, PathBuf};

use polariton_gate::cli::{main_with_args, read_manifest, RunConfig, MANIFEST_NAME};
use polariton_gate::output::{write_snapshot, SNAPSHOT_HEADER, SWEEP_HEADER};
use serde_json::Value;
use tempfile::TempDir;

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["polariton-gate"];
    full.extend_from_slice(args);
    main_with_args(full)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_variant(dir: &Path, base: &str, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut v = json(&config(base));
    edit(&mut v);
    let path = dir.join("variant.json");
    fs::write(&path, v.to_string()).unwrap();
    path
}

/// Every file in `dir` other than the manifest appears exactly once in it.
fn assert_manifest_complete(dir: &Path) {
    let m = read_manifest(dir).unwrap();
    let mut listed: Vec<String> = m.artifacts.iter().map(|a| a.path.clone()).collect();
    let mut on_disk: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != MANIFEST_NAME)
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    listed.dedup();
    assert_eq!(listed.len(), m.artifacts.len());
}

#[test]
fn phase_reports_reference_values() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("phase");
    assert_eq!(
        run(&[
            "phase",
            "--config",
            s(&config("reference.json")),
            "--out",
            s(&out)
        ]),
        0
    );
    let r = json(&out.join("report.json"));
    assert!((r["delta_phi"].as_f64().unwrap() - 1.25).abs() < 1e-11);
    assert!((r["interaction_time_T"].as_f64().unwrap() - 4e-5).abs() < 1e-16);
    assert_manifest_complete(&out);
    let m = read_manifest(&out).unwrap();
    assert_eq!(m.command, "phase");
    assert!(m.config["derived"]["medium"]["v_gr"].as_f64().is_some());
}

#[test]
fn phase_without_cross_scattering_is_zero() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_variant(tmp.path(), "reference.json", |v| {
        v["scattering_length_a_pm"] = 0.0.into()
    });
    let out = tmp.path().join("o");
    assert_eq!(run(&["phase", "--config", s(&cfg), "--out", s(&out)]), 0);
    assert_eq!(
        json(&out.join("report.json"))["delta_phi"]
            .as_f64()
            .unwrap(),
        0.0
    );
}

#[test]
fn error_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"wavelength_lambda\": 8e-7,").unwrap();
    assert_eq!(run(&["phase", "--config", s(&bad), "--out", s(&out)]), 2);
    let unknown = write_variant(tmp.path(), "reference.json", |v| v["confinement"] = 3.0.into());
    assert_eq!(
        run(&["phase", "--config", s(&unknown), "--out", s(&out)]),
        2
    );
    let negative = write_variant(tmp.path(), "reference.json", |v| {
        v["beam_area_A"] = (-1.0).into()
    });
    assert_eq!(
        run(&["phase", "--config", s(&negative), "--out", s(&out)]),
        2
    );
    assert_eq!(
        run(&[
            "phase",
            "--config",
            s(&tmp.path().join("missing.json")),
            "--out",
            s(&out)
        ]),
        4
    );
    assert_eq!(run(&["frobnicate"]), 2);
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            s(&config("reference.json")),
            "--solver",
            "fd",
            "--courant",
            "1.5",
            "--out",
            s(&out)
        ]),
        3
    );
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            s(&config("reference.json")),
            "--solver",
            "fd",
            "--epsilon",
            "1e-9",
            "--out",
            s(&out)
        ]),
        3
    );
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            s(&config("reference.json")),
            "--axis",
            "q",
            "--range",
            "1:2",
            "--out",
            s(&out)
        ]),
        2
    );
    assert!(!out.exists());
}

#[test]
fn evolve_pi_collision_flips_sign() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fig2");
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            s(&config("fig2.json")),
            "--out",
            s(&out)
        ]),
        0
    );
    for i in 0..5 {
        let text = fs::read_to_string(out.join(format!("snapshot_{i:03}.csv"))).unwrap();
        assert_eq!(text.lines().next().unwrap(), SNAPSHOT_HEADER);
        assert_eq!(text.lines().count(), 1 + 48 * 512);
    }
    let r = json(&out.join("report.json"));
    assert!((r["measured_delta_phi"].as_f64().unwrap() - std::f64::consts::PI).abs() < 1e-9);
    assert!(r["homogeneity"].as_f64().unwrap() < 1e-6);
    assert_manifest_complete(&out);
}

#[test]
fn snapshot_at_zero_is_the_initial_condition() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t0");
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            s(&config("fig2.json")),
            "--snapshots",
            "0",
            "--out",
            s(&out)
        ]),
        0
    );
    let cfg = RunConfig::load(&config("fig2.json")).unwrap();
    let ic = cfg.sections.initial_condition.unwrap();
    let (gr, gx) = ic.grids(48, 512).unwrap();
    let mut expected = Vec::new();
    write_snapshot(&mut expected, &ic.sample(gr, gx).unwrap()).unwrap();
    assert_eq!(fs::read(out.join("snapshot_000.csv")).unwrap(), expected);
}

#[test]
fn fd_phase_matches_configured_value() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("fd");
    assert_eq!(
        run(&[
            "evolve",
            "--config",
            s(&config("reference.json")),
            "--solver",
            "fd",
            "--snapshots",
            "0,0.00024",
            "--r-points",
            "8",
            "--out",
            s(&out)
        ]),
        0
    );
    let r = json(&out.join("report.json"));
    assert!((r["measured_delta_phi"].as_f64().unwrap() - 1.25).abs() < 1e-2);
}

#[test]
fn outputs_are_deterministic_and_checkable() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = |o: &Path| {
        vec![
            "evolve".to_string(),
            "--config".into(),
            s(&config("fig2.json")).into(),
            "--snapshots".into(),
            "0,6e-5,2.4e-4".into(),
            "--gamma-q".into(),
            "1000".into(),
            "--out".into(),
            s(o).into(),
        ]
    };
    for o in [&a, &b] {
        let mut v = vec!["polariton-gate".to_string()];
        v.extend(args(o));
        assert_eq!(main_with_args(v), 0);
    }
    let (ma, mb) = (read_manifest(&a).unwrap(), read_manifest(&b).unwrap());
    assert_eq!(ma.artifacts, mb.artifacts);
    for art in &ma.artifacts {
        assert_eq!(
            fs::read(a.join(&art.path)).unwrap(),
            fs::read(b.join(&art.path)).unwrap()
        );
    }

    assert_eq!(run(&["check", "--out", s(&a)]), 0);
    let mut v = vec!["polariton-gate".to_string()];
    v.extend(args(&a));
    v.push("--check".into());
    assert_eq!(main_with_args(v.clone()), 0);

    let victim = a.join("snapshot_001.csv");
    let mut bytes = fs::read(&victim).unwrap();
    let last = bytes.len() - 2;
    bytes[last] = if bytes[last] == b'1' { b'2' } else { b'1' };
    fs::write(&victim, bytes).unwrap();
    assert_eq!(run(&["check", "--out", s(&a)]), 4);
    assert_eq!(
        main_with_args(v),
        0,
        "--check recomputes; the manifest itself is untouched"
    );
}

#[test]
fn check_detects_a_different_run() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    assert_eq!(
        run(&[
            "phase",
            "--config",
            s(&config("reference.json")),
            "--out",
            s(&out)
        ]),
        0
    );
    assert_eq!(
        run(&[
            "phase",
            "--config",
            s(&config("fig2.json")),
            "--out",
            s(&out),
            "--check"
        ]),
        4
    );
    assert_eq!(
        run(&[
            "phase",
            "--config",
            s(&config("reference.json")),
            "--out",
            s(&out),
            "--check"
        ]),
        0
    );
}

#[test]
fn sweeps_locate_pi_crossings() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("v");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            s(&config("reference.json")),
            "--axis",
            "v_gr",
            "--range",
            "0.01:0.2",
            "--samples",
            "40",
            "--out",
            s(&out)
        ]),
        0
    );
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), SWEEP_HEADER);
    assert_eq!(
        text.lines().filter(|l| l.starts_with("sample,")).count(),
        40
    );
    let crossing: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("crossing,"))
        .collect();
    assert_eq!(crossing.len(), 1);
    let v: f64 = crossing[0].split(',').nth(2).unwrap().parse().unwrap();
    assert!((v / 0.039_788_735_772_973_834 - 1.0).abs() < 1e-3);

    let out = tmp.path().join("f");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            s(&config("reference.json")),
            "--axis",
            "f",
            "--range",
            "5:20",
            "--out",
            s(&out)
        ]),
        0
    );
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let row = text.lines().find(|l| l.starts_with("crossing,")).unwrap();
    let f: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((f / 13.596_066_702_210_858 - 1.0).abs() < 1e-3);

    let out = tmp.path().join("none");
    assert_eq!(
        run(&[
            "sweep",
            "--config",
            s(&config("reference.json")),
            "--axis",
            "a_pm",
            "--range",
            "1e-9:2e-9",
            "--out",
            s(&out)
        ]),
        0
    );
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(!text.contains("crossing,"));
}

fn residual_columns(csv: &str) -> Vec<(f64, f64)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (c[9], c[10])
        })
        .collect()
}

#[test]
fn verify_adiabatic_ramp_zero_and_ladder() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("ramp");
    assert_eq!(
        run(&[
            "verify-adiabatic",
            "--config",
            s(&config("verify_ramp.json")),
            "--out",
            s(&out)
        ]),
        0
    );
    let summary = json(&out.join("summary.json"));
    assert!(summary["residuals"]["q_residual_rel"].as_f64().unwrap() <= 1e-8);
    assert!(summary["residuals"]["e_residual_rel"].as_f64().unwrap() <= 1e-8);
    assert_manifest_complete(&out);

    let out = tmp.path().join("zero");
    let zero = config("drives/zero.json");
    assert_eq!(
        run(&[
            "verify-adiabatic",
            "--config",
            s(&config("verify_ramp.json")),
            "--drive",
            s(&zero),
            "--out",
            s(&out)
        ]),
        0
    );
    let rows = residual_columns(&fs::read_to_string(out.join("trajectory.csv")).unwrap());
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|&(q, e)| q == 0.0 && e == 0.0));

    let cfg = write_variant(tmp.path(), "verify_gaussian.json", |v| {
        v["verify"]["eta_ladder"] = serde_json::json!([0.1, 0.01]);
    });
    let out = tmp.path().join("ladder");
    assert_eq!(
        run(&["verify-adiabatic", "--config", s(&cfg), "--out", s(&out)]),
        0
    );
    let summary = json(&out.join("summary.json"));
    assert!(summary["eta_exponent"].as_f64().unwrap() >= 1.0);
}

#[test]
fn verify_adiabatic_rejects_coarse_steps() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_variant(tmp.path(), "verify_ramp.json", |v| {
        v["verify"]["step_phase"] = 5.0.into()
    });
    assert_eq!(
        run(&[
            "verify-adiabatic",
            "--config",
            s(&cfg),
            "--out",
            s(&tmp.path().join("o"))
        ]),
        3
    );
    let missing = write_variant(tmp.path(), "reference.json", |_| {});
    assert_eq!(
        run(&[
            "verify-adiabatic",
            "--config",
            s(&missing),
            "--out",
            s(&tmp.path().join("o"))
        ]),
        2
    );
}
