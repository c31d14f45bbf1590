//! Command drivers behind the `hamnf` binary.
//!
//! Exit-code contract: 0 success, 2 config error, 3 mathematical
//! precondition violated (resonances, enumeration guards, degenerate
//! inputs), 4 numerical failure (non-convergent integration, eigensolver or
//! cross-check failures).

use std::fmt;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{ConfigError, ExperimentConfig};
use crate::dynamics::{self, DynError, StabilityOptions, State};
use crate::frequencies::{FreqError, FrequencyModel};
use crate::galerkin::{self, Basis, GalerkinError, ModelFlavor};
use crate::normal_form::{self, NfError};
use crate::poly::Polynomial;
use crate::report::{fmt_f64, write_csv, Manifest};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Math(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Math(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {}", m),
            CliError::Math(m) => write!(f, "precondition violated: {}", m),
            CliError::Numeric(m) => write!(f, "numerical failure: {}", m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {}", e))
    }
}

impl From<FreqError> for CliError {
    fn from(e: FreqError) -> Self {
        match e {
            FreqError::EnumerationGuard { .. } => CliError::Math(e.to_string()),
            FreqError::OutOfRange { .. } => CliError::Config(e.to_string()),
            FreqError::BadParameter(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<NfError> for CliError {
    fn from(e: NfError) -> Self {
        match e {
            NfError::NearResonantNonAction { .. }
            | NfError::DegenerateLowGrades { .. }
            | NfError::OrderTooSmall { .. }
            | NfError::GeneratorDegreeTooLow { .. } => CliError::Math(e.to_string()),
            NfError::Freq(inner) => CliError::from(inner),
            NfError::Dyn(inner) => CliError::from(inner),
            NfError::IdentityResidual { .. } => CliError::Numeric(e.to_string()),
            NfError::Poly(inner) => CliError::Config(inner.to_string()),
            NfError::Io(inner) => CliError::Numeric(format!("io error: {}", inner)),
            NfError::Artifact(m) => CliError::Numeric(m),
        }
    }
}

impl From<DynError> for CliError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::BadParameter(_) => CliError::Config(e.to_string()),
            DynError::Poly(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<GalerkinError> for CliError {
    fn from(e: GalerkinError) -> Self {
        match e {
            GalerkinError::BadParameter(_) | GalerkinError::Unsupported(_) => {
                CliError::Config(e.to_string())
            }
            GalerkinError::PathMismatch { .. }
            | GalerkinError::EigenFailure(_)
            | GalerkinError::Io(_) => CliError::Numeric(e.to_string()),
        }
    }
}

fn prepare_out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let dir = cfg.output.dir.clone();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json_report<T: serde::Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    manifest: &mut Manifest,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("serialize {}: {}", name, e)))?;
    std::fs::write(&path, json)?;
    manifest.record_output(&path, dir);
    Ok(())
}

/// Compute a normal form and write its artifact directory.
pub fn cmd_nf(cfg: &ExperimentConfig, base_dir: &Path) -> Result<(), CliError> {
    let nf_section = cfg
        .nf
        .as_ref()
        .ok_or_else(|| CliError::Config("cmd nf needs an [nf] section".into()))?;
    let model = cfg.frequency_model()?;
    let p = cfg.perturbation(nf_section.order, base_dir)?;
    let dir = prepare_out_dir(cfg)?;
    let mut manifest = Manifest::new("nf", cfg.run.seed, cfg.to_toml());

    let result = normal_form::birkhoff_normal_form(
        &model,
        &p,
        nf_section.order,
        nf_section.strategy,
        nf_section.divisor_floor,
    )?;

    let nf_dir = dir.join("nf");
    result.write_dir(&nf_dir).map_err(CliError::from)?;
    manifest.outputs.push("nf/Z.poly".into());
    for d in 3..=result.order {
        manifest.outputs.push(format!("nf/chi{}.poly", d));
    }
    manifest.outputs.push("nf/manifest.json".into());

    println!("normal form: order {}, strategy {}", result.order, result.strategy);
    match result.stats.min_killed_divisor {
        Some(d) => println!("  min |divisor| killed: {:.6e}", d),
        None => println!("  min |divisor| killed: (nothing killed)"),
    }
    for d in 3..=result.order {
        println!(
            "  grade {}: Z terms {}, generator terms {}",
            d,
            result.z.grade(d).len(),
            result.generator(d).map_or(0, |g| g.len())
        );
    }

    let mut residual_summary = json!(null);
    if !cfg.run.radii.is_empty() {
        let rep = normal_form::verify_normal_form(
            &result,
            &model,
            &p,
            &cfg.run.radii,
            cfg.run.samples_per_radius,
            cfg.run.seed,
        )?;
        if cfg.emit_csv() {
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| vec![fmt_f64(r.rho), fmt_f64(r.max_residual), fmt_f64(r.mean_residual)])
                .collect();
            let path = dir.join("residuals.csv");
            write_csv(&path, &["rho", "max_residual", "mean_residual"], &rows)?;
            manifest.record_output(&path, &dir);
        }
        if cfg.emit_json() {
            write_json_report(&dir, "residuals.json", &rep, &mut manifest)?;
        }
        match rep.fit {
            Some(fit) => println!("  residual slope {:.3} (r² {:.4})", fit.slope, fit.r2),
            None => println!("  residuals at machine zero (series terminates exactly)"),
        }
        residual_summary = serde_json::to_value(&rep).unwrap_or(json!(null));
    }

    // Offending resonant monomials: non-action terms kept in Z.
    let offenders: Vec<String> = result
        .z
        .terms()
        .filter(|(m, _)| !m.is_action())
        .map(|(m, _)| m.to_string())
        .collect();

    manifest.summary = json!({
        "order": result.order,
        "strategy": result.strategy,
        "min_killed_divisor": result.stats.min_killed_divisor,
        "z_terms": result.z.len(),
        "resonant_non_action": offenders,
        "residuals": residual_summary,
    });
    manifest.write(&dir)?;

    if !offenders.is_empty() {
        return Err(CliError::Math(format!(
            "normal form kept resonant non-action monomials: {}",
            offenders.join(", ")
        )));
    }
    Ok(())
}

/// Nonresonance scans, diophantine margins, and the Monte-Carlo measure
/// estimate.
pub fn cmd_resonance(cfg: &ExperimentConfig, _base_dir: &Path) -> Result<(), CliError> {
    let rs = cfg
        .resonance
        .as_ref()
        .ok_or_else(|| CliError::Config("cmd resonance needs a [resonance] section".into()))?;
    let model = cfg.frequency_model()?;
    let dir = prepare_out_dir(cfg)?;
    let mut manifest = Manifest::new("resonance", cfg.run.seed, cfg.to_toml());

    let report = crate::frequencies::scan_strong_nonresonance(&model, rs.r, rs.mu_max, rs.tail_max)?;
    if cfg.emit_csv() {
        let rows: Vec<Vec<String>> = report
            .per_n
            .iter()
            .map(|c| {
                vec![
                    c.n_head.to_string(),
                    c.encode(),
                    fmt_f64(c.divisor),
                    c.n_head.to_string(),
                    fmt_f64(c.divisor.abs() * (c.n_head as f64).powf(report.alpha)),
                ]
            })
            .collect();
        let path = dir.join("divisors.csv");
        write_csv(&path, &["N", "k_encoding", "divisor", "mu", "scaled_divisor"], &rows)?;
        manifest.record_output(&path, &dir);
    }
    if cfg.emit_json() {
        write_json_report(&dir, "scan.json", &report, &mut manifest)?;
    }
    println!(
        "strong-nonresonance scan (r = {}, mu_max = {}, tail_max = {}):",
        rs.r, rs.mu_max, rs.tail_max
    );
    println!("  gamma = {:.6e} at alpha = {}", report.gamma, report.alpha);
    println!(
        "  worst combination: {} (divisor {:.6e}, N = {})",
        report.worst.encode(),
        report.worst.divisor,
        report.worst.n_head
    );

    let mut min_divisor_summary = json!(null);
    if let Some(k_max) = rs.k_max {
        let n = match &model {
            FrequencyModel::Explicit(l) => l.len(),
            _ => rs.mu_max as usize,
        };
        let omega = model.first_n(n)?;
        let (value, witness) = crate::frequencies::min_divisor_order_r(&omega, k_max)?;
        println!("  min |k·omega| over the box |k|_inf <= {}: {:.6e} at k = {:?}", k_max, value, witness);
        min_divisor_summary = json!({ "value": value, "witness": witness, "k_max": k_max });
    }

    let mut dio_summary = json!(null);
    if let Some(spec) = &rs.diophantine {
        let n = spec.n_modes.map(|n| n as usize).unwrap_or(match &model {
            FrequencyModel::Explicit(l) => l.len(),
            _ => rs.mu_max as usize,
        });
        let omega = model.first_n(n)?;
        let margin =
            crate::frequencies::diophantine_check(&omega, spec.gamma, spec.alpha, spec.k_max)?;
        println!(
            "  diophantine margin (gamma = {}, alpha = {}, k_max = {}): {:.6e}",
            spec.gamma, spec.alpha, spec.k_max, margin
        );
        dio_summary = json!({
            "gamma": spec.gamma, "alpha": spec.alpha, "k_max": spec.k_max, "margin": margin,
        });
    }

    let mut measure_summary = json!(null);
    if let Some(spec) = &rs.measure {
        let decay = cfg
            .model
            .decay
            .ok_or_else(|| CliError::Config("measure estimate needs model.decay".into()))?;
        let rep = crate::frequencies::monte_carlo_resonance_measure(
            decay,
            rs.r,
            &spec.gammas,
            spec.beta,
            &spec.n_list,
            spec.k_budget,
            spec.samples,
            cfg.run.seed,
        )?;
        if cfg.emit_csv() {
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.gamma),
                        r.n.to_string(),
                        r.samples.to_string(),
                        r.failures.to_string(),
                        fmt_f64(r.fraction),
                        fmt_f64(r.std_error),
                    ]
                })
                .collect();
            let path = dir.join("measure.csv");
            write_csv(&path, &["gamma", "N", "samples", "failures", "fraction", "std_error"], &rows)?;
            manifest.record_output(&path, &dir);
        }
        if cfg.emit_json() {
            write_json_report(&dir, "measure.json", &rep, &mut manifest)?;
        }
        println!("  measure fit: failing fraction ≈ {:.4} · gamma", rep.fit_slope);
        measure_summary = serde_json::to_value(&rep).unwrap_or(json!(null));
    }

    manifest.summary = json!({
        "gamma": report.gamma,
        "alpha": report.alpha,
        "r": rs.r,
        "mu_max": rs.mu_max,
        "tail_max": rs.tail_max,
        "resonance": report.resonance.as_ref().map(|c| c.encode()),
        "min_divisor": min_divisor_summary,
        "diophantine": dio_summary,
        "measure": measure_summary,
    });
    manifest.write(&dir)?;

    if let Some(witness) = &report.resonance {
        return Err(CliError::Math(format!(
            "exact resonance found: {} (divisor {:.3e})",
            witness.encode(),
            witness.divisor
        )));
    }
    Ok(())
}

/// Stability sweep (and optional single-trajectory export).
pub fn cmd_simulate(cfg: &ExperimentConfig, base_dir: &Path) -> Result<(), CliError> {
    let nf_section = cfg
        .nf
        .as_ref()
        .ok_or_else(|| CliError::Config("cmd simulate needs an [nf] section".into()))?;
    if cfg.run.eps.is_empty() && cfg.run.trajectory_eps.is_none() {
        return Err(CliError::Config("cmd simulate needs run.eps or run.trajectory_eps".into()));
    }
    let model = cfg.frequency_model()?;
    let p = cfg.perturbation(nf_section.order, base_dir)?;
    let n = p.max_mode() as usize;
    if n == 0 {
        return Err(CliError::Config("perturbation has no modes to integrate".into()));
    }
    let omegas = model.first_n(n)?;
    let h = Polynomial::harmonic(&omegas, nf_section.order).add(&p);
    let dir = prepare_out_dir(cfg)?;
    let mut manifest = Manifest::new("simulate", cfg.run.seed, cfg.to_toml());

    let nf = normal_form::birkhoff_normal_form(
        &model,
        &p,
        nf_section.order,
        nf_section.strategy,
        nf_section.divisor_floor,
    )?;

    let mut failures: Vec<String> = Vec::new();
    let mut stability_summary = json!(null);
    if !cfg.run.eps.is_empty() {
        let opts = StabilityOptions {
            dt: cfg.run.dt,
            t_cap: cfg.run.t_cap,
            method: cfg.run.method,
            seed: cfg.run.seed,
        };
        let rep = dynamics::stability_experiment(
            &h,
            &nf,
            nf_section.order as u32,
            &cfg.run.eps,
            cfg.run.s_weight,
            &opts,
        )?;
        if cfg.emit_csv() {
            let mut header: Vec<String> = [
                "eps",
                "horizon",
                "t_reached",
                "horizon_usage",
                "max_norm_ratio",
                "max_weighted_drift",
                "max_energy_drift",
                "error",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            for j in 1..=n {
                header.push(format!("action_drift_{}", j));
            }
            let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| {
                    let mut row = vec![
                        fmt_f64(r.eps),
                        fmt_f64(r.horizon),
                        fmt_f64(r.t_reached),
                        fmt_f64(r.horizon_usage),
                        fmt_f64(r.max_norm_ratio),
                        fmt_f64(r.max_weighted_drift),
                        fmt_f64(r.max_energy_drift),
                        r.error.clone().unwrap_or_default(),
                    ];
                    for d in &r.max_action_drift {
                        row.push(fmt_f64(*d));
                    }
                    row
                })
                .collect();
            let path = dir.join("stability.csv");
            write_csv(&path, &header_refs, &rows)?;
            manifest.record_output(&path, &dir);
        }
        if cfg.emit_json() {
            write_json_report(&dir, "stability.json", &rep, &mut manifest)?;
        }
        println!("stability sweep over {} epsilon value(s), dt = {}", rep.rows.len(), rep.dt);
        for row in &rep.rows {
            match &row.error {
                None => println!(
                    "  eps {:.4e}: horizon {:.3e}, sup|z|/eps = {:.4}, max drift {:.4e}",
                    row.eps, row.horizon, row.max_norm_ratio, row.max_weighted_drift
                ),
                Some(e) => {
                    println!("  eps {:.4e}: FAILED ({})", row.eps, e);
                    failures.push(format!("eps {:.4e}: {}", row.eps, e));
                }
            }
        }
        if let Some(fit) = rep.drift_fit {
            println!("  drift exponent {:.3} (r² {:.4})", fit.slope, fit.r2);
        }
        stability_summary = serde_json::to_value(&rep).unwrap_or(json!(null));
    }

    let mut trajectory_summary = json!(null);
    if let Some(eps) = cfg.run.trajectory_eps {
        let t_final = cfg.run.t_final.unwrap_or(100.0);
        let dt = cfg.run.dt.unwrap_or(0.01);
        let share = eps / (2.0 * n as f64).sqrt();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.run.seed);
        let xi: Vec<num_complex::Complex64> = (0..n)
            .map(|_| num_complex::Complex64::from_polar(share, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let z0 = State::real_slice(xi);
        match dynamics::integrate(&h, &z0, dt, t_final, cfg.run.method) {
            Ok(traj) => {
                if cfg.emit_csv() {
                    let mut header = vec!["t".to_string()];
                    for j in 1..=n {
                        header.push(format!("q_{}", j));
                    }
                    for j in 1..=n {
                        header.push(format!("p_{}", j));
                    }
                    for j in 1..=n {
                        header.push(format!("I_{}", j));
                    }
                    header.push("H".into());
                    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
                    let rows: Vec<Vec<String>> = traj
                        .times
                        .iter()
                        .enumerate()
                        .map(|(i, &t)| {
                            let state = &traj.states[i];
                            let mut row = vec![fmt_f64(t)];
                            for j in 0..n {
                                row.push(fmt_f64(state.q(j)));
                            }
                            for j in 0..n {
                                row.push(fmt_f64(state.p(j)));
                            }
                            for a in &traj.actions[i] {
                                row.push(fmt_f64(*a));
                            }
                            row.push(fmt_f64(traj.energy[i]));
                            row
                        })
                        .collect();
                    let path = dir.join("trajectory.csv");
                    write_csv(&path, &header_refs, &rows)?;
                    manifest.record_output(&path, &dir);
                }
                trajectory_summary = json!({
                    "eps": eps,
                    "t_final": traj.summary.t_final,
                    "max_energy_drift": traj.summary.max_energy_drift,
                    "max_slice_defect": traj.summary.max_slice_defect,
                });
            }
            Err(e) => failures.push(format!("trajectory at eps {:.4e}: {}", eps, e)),
        }
    }

    manifest.summary = json!({
        "order": nf_section.order,
        "stability": stability_summary,
        "trajectory": trajectory_summary,
        "failures": failures,
    });
    manifest.write(&dir)?;

    if !failures.is_empty() {
        return Err(CliError::Numeric(format!(
            "{} integration failure(s): {}",
            failures.len(),
            failures.join("; ")
        )));
    }
    Ok(())
}

/// Build a Galerkin model and run the hypothesis checks.
pub fn cmd_galerkin(cfg: &ExperimentConfig, base_dir: &Path) -> Result<(), CliError> {
    let dir = prepare_out_dir(cfg)?;
    let mut manifest = Manifest::new("galerkin", cfg.run.seed, cfg.to_toml());

    let kind = cfg.model.basis.as_deref().unwrap_or("sine");
    let n_modes = cfg
        .model
        .n_modes
        .ok_or_else(|| CliError::Config("cmd galerkin needs model.n_modes".into()))?;
    let basis = match kind {
        "sine" => Basis::Sine { n_modes },
        "exponential" => Basis::Exponential { n_modes },
        "sturm_liouville" => {
            let grid = cfg.model.grid.unwrap_or(2048);
            let v = cfg.potential(base_dir)?;
            let b = galerkin::eigenbasis(&v, grid, n_modes)?;
            if let Basis::SturmLiouville(inner) = &b {
                if inner.parity_warning {
                    eprintln!("warning: potential is not even; the Dirichlet symmetry assumptions do not hold");
                }
                println!("eigenvalues: {:?}", inner.eigenvalues);
            }
            b
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown basis `{}` (expected sine, exponential, sturm_liouville)",
                other
            )))
        }
    };

    let taylor = cfg.taylor_terms(base_dir)?;
    let mut model_summary = json!(null);
    if !taylor.is_empty() {
        let flavor = cfg.model.flavor.unwrap_or(ModelFlavor::Schrodinger);
        let cutoff = cfg
            .nf
            .as_ref()
            .map(|s| s.order)
            .unwrap_or_else(|| taylor.iter().map(|t| t.degree).max().unwrap_or(3));
        let gm = galerkin::GalerkinModel::build(
            basis.clone(),
            flavor,
            &taylor,
            n_modes,
            cutoff,
            cfg.run.s_weight,
        )?;
        let model_dir = dir.join("model");
        std::fs::create_dir_all(&model_dir)?;
        std::fs::write(model_dir.join("p.poly"), gm.p.to_text())?;
        manifest.outputs.push("model/p.poly".into());
        let omega = gm.omega.first_n(n_modes)?;
        println!(
            "built {} model: {} modes, {} perturbation terms",
            basis.kind(),
            n_modes,
            gm.p.len()
        );
        model_summary = json!({
            "basis": basis.kind(),
            "flavor": flavor,
            "n_modes": n_modes,
            "omega": omega,
            "p_terms": gm.p.len(),
            "p_reality_defect": gm.p.reality_defect(),
        });
    }

    let mut checks_summary = serde_json::Map::new();
    if let Some(checks) = &cfg.checks {
        if let Some(spec) = &checks.phi_bound {
            let rep = galerkin::verify_phi_bound(&basis, spec.k, spec.n_exponent, spec.nu, spec.j_max)?;
            if cfg.emit_csv() {
                let rows = vec![vec![
                    rep.k.to_string(),
                    rep.n_exponent.to_string(),
                    fmt_f64(rep.nu),
                    rep.j_max.to_string(),
                    rep.scanned.to_string(),
                    rep.nonzero.to_string(),
                    fmt_f64(rep.constant),
                    format!("{:?}", rep.worst),
                ]];
                let path = dir.join("phi_bound.csv");
                write_csv(
                    &path,
                    &["k", "N", "nu", "j_max", "scanned", "nonzero", "constant", "worst"],
                    &rows,
                )?;
                manifest.record_output(&path, &dir);
            }
            if cfg.emit_json() {
                write_json_report(&dir, "phi_bound.json", &rep, &mut manifest)?;
            }
            println!(
                "phi-bound scan: C = {:.6} over {} multisets ({} nonzero)",
                rep.constant, rep.scanned, rep.nonzero
            );
            checks_summary.insert("phi_bound".into(), serde_json::to_value(&rep).unwrap());
        }
        if let Some(orders) = &checks.localization_orders {
            let Basis::SturmLiouville(b) = &basis else {
                return Err(CliError::Config(
                    "localization check needs basis = \"sturm_liouville\"".into(),
                ));
            };
            let cs = galerkin::well_localized_check(b, orders);
            if cfg.emit_csv() {
                let rows: Vec<Vec<String>> =
                    cs.iter().map(|(n, c)| vec![n.to_string(), fmt_f64(*c)]).collect();
                let path = dir.join("localization.csv");
                write_csv(&path, &["order", "c_n"], &rows)?;
                manifest.record_output(&path, &dir);
            }
            for (n, c) in &cs {
                println!("localization c_{} = {:.6e}", n, c);
            }
            checks_summary.insert("localization".into(), serde_json::to_value(&cs).unwrap());
        }
        if let Some(spec) = &checks.tame {
            let mut built = Vec::new();
            for &n in &spec.n_list {
                let b = Basis::Sine { n_modes: n };
                let p = galerkin::build_perturbation(&b, &taylor, n, spec.degree, None)?;
                if p.is_zero() {
                    return Err(CliError::Config(
                        "tame probe needs a nonlinearity producing nonzero terms".into(),
                    ));
                }
                built.push((n, p));
            }
            let rep = galerkin::tame_probe(
                &built,
                spec.degree,
                spec.s,
                spec.s0,
                &spec.rhos,
                spec.samples,
                cfg.run.seed,
            )?;
            if cfg.emit_csv() {
                let rows: Vec<Vec<String>> = rep
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.n_modes.to_string(),
                            fmt_f64(r.rho),
                            fmt_f64(r.max_ratio),
                            fmt_f64(r.mean_ratio),
                        ]
                    })
                    .collect();
                let path = dir.join("tame.csv");
                write_csv(&path, &["n_modes", "rho", "max_ratio", "mean_ratio"], &rows)?;
                manifest.record_output(&path, &dir);
            }
            if cfg.emit_json() {
                write_json_report(&dir, "tame.json", &rep, &mut manifest)?;
            }
            println!("tame probe: ratio spread {:.3}", rep.spread);
            checks_summary.insert("tame".into(), serde_json::to_value(&rep).unwrap());
        }
    }

    manifest.summary = json!({
        "basis": basis.kind(),
        "model": model_summary,
        "checks": checks_summary,
    });
    manifest.write(&dir)?;
    Ok(())
}
