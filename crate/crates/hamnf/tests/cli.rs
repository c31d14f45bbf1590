//! End-to-end runs of the `hamnf` binary: exit codes, artifact layout,
//! byte-level determinism, and manifest self-description.

use std::path::Path;
use std::process::{Command, Output};

fn hamnf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamnf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn nf_exercise_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "exercise.toml",
        r#"
        [model]
        frequencies = "explicit"
        omega = [1.0, 1.4142135623730951]
        terms = ["1 0 : 1 -2 -2"]
        [nf]
        order = 3
        [run]
        radii = [0.01, 0.001]
        samples_per_radius = 5
        [output]
        dir = "out"
        "#,
    );
    let out = hamnf(&["nf", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let z = std::fs::read_to_string(tmp.path().join("out/nf/Z.poly")).unwrap();
    let z_poly = hamnf::poly::Polynomial::from_text(&z).unwrap();
    assert!(z_poly.is_zero());
    let chi = std::fs::read_to_string(tmp.path().join("out/nf/chi3.poly")).unwrap();
    let chi_poly = hamnf::poly::Polynomial::from_text(&chi).unwrap();
    assert_eq!(chi_poly.len(), 1);
    assert!(tmp.path().join("out/manifest.json").exists());
    assert!(tmp.path().join("out/residuals.csv").exists());
}

#[test]
fn nf_zero_perturbation_empty_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "zero.toml",
        r#"
        [model]
        omega = [1.0, 1.4142135623730951]
        [nf]
        order = 4
        "#,
    );
    let out = hamnf(&["nf", "--config", &cfg], tmp.path());
    assert!(out.status.success());
    let z = std::fs::read_to_string(tmp.path().join("out/nf/Z.poly")).unwrap();
    assert!(hamnf::poly::Polynomial::from_text(&z).unwrap().is_zero());
}

#[test]
fn nf_resonant_cubic_exits_3_with_offender() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "resonant.toml",
        r#"
        [model]
        omega = [1.0, 2.0]
        q_terms = [[1.0, [1, 1, 2]]]
        [nf]
        order = 3
        strategy = "nonresonant_kill"
        "#,
    );
    let out = hamnf(&["nf", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("xi_1^2 eta_2") || stderr.contains("xi_2 eta_1^2"), "{}", stderr);
}

#[test]
fn nf_missing_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hamnf(&["nf"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let cfg = write_config(tmp.path(), "bad.toml", "[model]\nomega = [1.0]\nwhatever = 3\n");
    let out = hamnf(&["nf", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("whatever"));
}

#[test]
fn resonance_scan_positive_and_resonant_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "nlw.toml",
        r#"
        [model]
        frequencies = "nlw"
        mass = 1.0
        [resonance]
        r = 2
        mu_max = 4
        tail_max = 24
        [output]
        dir = "out_nlw"
        "#,
    );
    let out = hamnf(&["resonance", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out_nlw/divisors.csv")).unwrap();
    assert!(csv.starts_with("N,k_encoding,divisor,mu,scaled_divisor"));
    assert_eq!(csv.lines().count(), 5); // header + one row per head size

    // pure squares resonate: exit 3 and a witness in the manifest
    let cfg = write_config(
        tmp.path(),
        "squares.toml",
        r#"
        [model]
        frequencies = "convolution"
        decay = 2
        seeds = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        [resonance]
        r = 2
        mu_max = 4
        tail_max = 24
        [output]
        dir = "out_sq"
        "#,
    );
    let out = hamnf(&["resonance", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let manifest = std::fs::read_to_string(tmp.path().join("out_sq/manifest.json")).unwrap();
    assert!(manifest.contains("resonance"));
}

#[test]
fn measure_csv_deterministic_and_self_describing() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
        [model]
        frequencies = "convolution"
        decay = 2
        seed_count = 8
        [resonance]
        r = 2
        mu_max = 2
        tail_max = 8
        measure = { gammas = [0.05, 0.1], beta = 5.0, n_list = [4], samples = 500 }
        [run]
        seed = 1234
        [output]
        dir = "OUTDIR"
        "#;
    let cfg_a = write_config(tmp.path(), "a.toml", &body.replace("OUTDIR", "out_a"));
    let cfg_b = write_config(tmp.path(), "b.toml", &body.replace("OUTDIR", "out_b"));
    let out = hamnf(&["resonance", "--config", &cfg_a], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    // single worker: results must not depend on the thread count
    assert!(hamnf(&["resonance", "--config", &cfg_b, "--threads", "1"], tmp.path())
        .status
        .success());
    let a = std::fs::read(tmp.path().join("out_a/measure.csv")).unwrap();
    let b = std::fs::read(tmp.path().join("out_b/measure.csv")).unwrap();
    assert_eq!(a, b, "identical config + seed must give identical CSV bytes");

    // manifest embeds the resolved config; re-running from it reproduces the run
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out_a/manifest.json")).unwrap())
            .unwrap();
    let embedded = manifest["config_toml"].as_str().unwrap();
    let replay_cfg = write_config(tmp.path(), "replay.toml", embedded);
    let out = hamnf(
        &["resonance", "--config", &replay_cfg, "--out", "out_replay"],
        tmp.path(),
    );
    assert!(out.status.success());
    let c = std::fs::read(tmp.path().join("out_replay/measure.csv")).unwrap();
    assert_eq!(a, c, "replay from the embedded manifest config must reproduce outputs");
}

#[test]
fn simulate_writes_report_and_flags_bad_dt() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.toml",
        r#"
        [model]
        omega = [1.0, 1.4142135623730951]
        q_terms = [[1.0, [1, 1, 2]], [1.0, [1, 2, 2]]]
        [nf]
        order = 3
        [run]
        eps = [0.1, 0.05]
        t_cap = 30.0
        seed = 5
        [output]
        dir = "out_sim"
        "#,
    );
    let out = hamnf(&["simulate", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out_sim/stability.csv")).unwrap();
    assert!(csv.starts_with("eps,horizon,t_reached,horizon_usage,max_norm_ratio"));
    assert_eq!(csv.lines().count(), 3);

    // absurd step size: midpoint cannot converge, exit 4 with diagnostics
    let cfg = write_config(
        tmp.path(),
        "bad_dt.toml",
        r#"
        [model]
        omega = [1.0]
        q_terms = [[5.0, [1, 1, 1, 1]]]
        [nf]
        order = 4
        [run]
        eps = [0.9]
        dt = 1.5
        t_cap = 10.0
        [output]
        dir = "out_bad"
        "#,
    );
    let out = hamnf(&["simulate", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("midpoint"));
}

#[test]
fn simulate_trajectory_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "traj.toml",
        r#"
        [model]
        omega = [1.0, 1.4142135623730951]
        q_terms = [[0.5, [1, 1, 2]]]
        [nf]
        order = 3
        [run]
        trajectory_eps = 0.05
        t_final = 5.0
        seed = 9
        [output]
        dir = "out_traj"
        formats = ["csv"]
        "#,
    );
    let out = hamnf(&["simulate", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out_traj/trajectory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header, "t,q_1,q_2,p_1,p_2,I_1,I_2,H");
}

#[test]
fn galerkin_flat_potential_report() {
    let tmp = tempfile::tempdir().unwrap();
    // constant potential V = 1 supplied as a two-column samples file
    let mut samples = String::new();
    for i in 0..=128 {
        let x = -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / 128.0;
        samples.push_str(&format!("{} 1.0\n", x));
    }
    std::fs::write(tmp.path().join("V.csv"), samples).unwrap();
    let cfg = write_config(
        tmp.path(),
        "flat.toml",
        r#"
        [model]
        basis = "sturm_liouville"
        n_modes = 2
        grid = 128
        v_file = "V.csv"
        [[model.nonlinearity]]
        degree = 4
        constant = 1.0
        [checks]
        localization_orders = [0, 2]
        [output]
        dir = "out_gal"
        "#,
    );
    let out = hamnf(&["galerkin", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eigenvalues"), "{}", stdout);
    // V = 1 shifts the flat spectrum: lambda_1 near 2
    let manifest = std::fs::read_to_string(tmp.path().join("out_gal/manifest.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    let omega_1 = parsed["summary"]["model"]["omega"][0].as_f64().unwrap();
    assert!((omega_1 - 2.0).abs() < 0.05, "lambda_1 = {}", omega_1);
    assert!(tmp.path().join("out_gal/model/p.poly").exists());
    assert!(tmp.path().join("out_gal/localization.csv").exists());

    // exponential-basis phi-bound check
    let cfg = write_config(
        tmp.path(),
        "phi.toml",
        r#"
        [model]
        basis = "exponential"
        n_modes = 8
        [checks]
        phi_bound = { k = 3, n_exponent = 2, j_max = 8 }
        [output]
        dir = "out_phi"
        "#,
    );
    let out = hamnf(&["galerkin", "--config", &cfg], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("out_phi/phi_bound.csv")).unwrap();
    assert!(csv.starts_with("k,N,nu,j_max,scanned,nonzero,constant,worst"));
}

#[test]
fn seed_and_format_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "ovr.toml",
        r#"
        [model]
        frequencies = "convolution"
        decay = 2
        seed_count = 6
        [resonance]
        r = 1
        mu_max = 2
        tail_max = 6
        measure = { gammas = [0.1], beta = 5.0, n_list = [2], samples = 200 }
        [run]
        seed = 1
        [output]
        dir = "out_ovr"
        formats = ["csv", "json"]
        "#,
    );
    let out = hamnf(&["resonance", "--config", &cfg, "--seed", "77", "--format", "json"], tmp.path());
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!tmp.path().join("out_ovr/measure.csv").exists());
    assert!(tmp.path().join("out_ovr/measure.json").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out_ovr/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"].as_u64(), Some(77));
}
