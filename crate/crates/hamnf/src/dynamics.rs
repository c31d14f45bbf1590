//! Numerical integration of polynomial Hamiltonians and the stability
//! experiments.
//!
//! States live in the complex coordinates `(ξ, η)`. Real trajectories keep
//! `η_j = conj(ξ_j)`; the integrators re-project onto that slice each step
//! and log the pre-projection defect. Generator flows are complex-analytic
//! and never projected.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::fit::{fit_linear, LinearFit};
use crate::normal_form::NormalFormResult;
use crate::poly::{Polynomial, PolyError};

#[derive(Debug, Clone, PartialEq)]
pub enum DynError {
    /// Implicit-midpoint fixed point did not reach the step tolerance.
    MidpointNotConverged { step: usize, residual: f64, dt: f64 },
    /// The unit-time generator flow left the guard ball.
    FlowEscaped { norm: f64, start_norm: f64 },
    /// Step-doubling did not converge for the generator flow.
    FlowNotConverged { steps: usize, diff: f64 },
    BadParameter(String),
    Poly(PolyError),
}

impl fmt::Display for DynError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynError::MidpointNotConverged { step, residual, dt } => write!(
                f,
                "implicit midpoint failed to converge at step {} (residual {:.3e}, dt {}); reduce the step size",
                step, residual, dt
            ),
            DynError::FlowEscaped { norm, start_norm } => write!(
                f,
                "flow escaped: norm grew from {:.3e} to {:.3e} (over 10x)",
                start_norm, norm
            ),
            DynError::FlowNotConverged { steps, diff } => write!(
                f,
                "generator flow not dt-converged after {} substeps (endpoint diff {:.3e})",
                steps, diff
            ),
            DynError::BadParameter(m) => write!(f, "bad integration parameter: {}", m),
            DynError::Poly(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for DynError {}

impl From<PolyError> for DynError {
    fn from(e: PolyError) -> Self {
        DynError::Poly(e)
    }
}

/// Phase point in complex coordinates; `xi[j-1] = ξ_j`, `eta[j-1] = η_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub xi: Vec<Complex64>,
    pub eta: Vec<Complex64>,
}

impl State {
    pub fn zero(n: usize) -> Self {
        State { xi: vec![Complex64::new(0.0, 0.0); n], eta: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// Real-slice point `η = conj(ξ)`.
    pub fn real_slice(xi: Vec<Complex64>) -> Self {
        let eta = xi.iter().map(|z| z.conj()).collect();
        State { xi, eta }
    }

    /// From real canonical coordinates: `ξ_j = (q_j + i p_j)/√2`.
    pub fn from_qp(q: &[f64], p: &[f64]) -> Self {
        let s = 1.0 / 2f64.sqrt();
        let xi = q
            .iter()
            .zip(p)
            .map(|(&qj, &pj)| Complex64::new(qj * s, pj * s))
            .collect();
        State::real_slice(xi)
    }

    pub fn n_modes(&self) -> usize {
        self.xi.len()
    }

    pub fn q(&self, j: usize) -> f64 {
        2f64.sqrt() * self.xi[j].re
    }

    pub fn p(&self, j: usize) -> f64 {
        2f64.sqrt() * self.xi[j].im
    }

    /// `‖z‖² = Σ |ξ_j|² + |η_j|²`, equal to `Σ q_j² + p_j²` on the real slice.
    pub fn norm(&self) -> f64 {
        self.xi
            .iter()
            .zip(&self.eta)
            .map(|(x, e)| x.norm_sqr() + e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Actions `I_j = |ξ_j|²` (real-slice form of `ξ_j η_j`).
    pub fn actions(&self) -> Vec<f64> {
        self.xi.iter().map(|x| x.norm_sqr()).collect()
    }

    /// Largest deviation from the real slice, `max_j |η_j − conj(ξ_j)|`.
    pub fn slice_defect(&self) -> f64 {
        self.xi
            .iter()
            .zip(&self.eta)
            .map(|(x, e)| (e - x.conj()).norm())
            .fold(0.0, f64::max)
    }

    fn project_real_slice(&mut self) {
        for (x, e) in self.xi.iter_mut().zip(self.eta.iter_mut()) {
            *e = x.conj();
        }
    }

    fn axpy(&mut self, a: f64, other: &State) {
        for (x, o) in self.xi.iter_mut().zip(&other.xi) {
            *x += a * o;
        }
        for (e, o) in self.eta.iter_mut().zip(&other.eta) {
            *e += a * o;
        }
    }

    /// Largest componentwise deviation from another state.
    pub fn max_diff(&self, other: &State) -> f64 {
        self.xi
            .iter()
            .zip(&other.xi)
            .chain(self.eta.iter().zip(&other.eta))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn field(h: &Polynomial, z: &State) -> Result<State, DynError> {
    let (xi_dot, eta_dot) = h.hamiltonian_field_slices(&z.xi, &z.eta)?;
    Ok(State { xi: xi_dot, eta: eta_dot })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ImplicitMidpoint,
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::ImplicitMidpoint => write!(f, "implicit_midpoint"),
            Method::Rk4 => write!(f, "rk4"),
        }
    }
}

const MIDPOINT_TOL: f64 = 1e-13;
const MIDPOINT_MAX_ITER: usize = 50;

/// Running extrema recorded on every step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub steps: usize,
    pub t_final: f64,
    /// Largest pre-projection real-slice defect.
    pub max_slice_defect: f64,
    pub max_energy_drift: f64,
    pub max_norm: f64,
    pub initial_actions: Vec<f64>,
    /// Per-mode sup of `|I_j(t) − I_j(0)|` over every step.
    pub max_action_drift: Vec<f64>,
}

/// Time series of a Hamiltonian trajectory plus derived observables.
///
/// `states` holds decimated samples (the summary tracks every step).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub energy: Vec<f64>,
    pub actions: Vec<Vec<f64>>,
    pub summary: TrajectorySummary,
}

/// Integrate `ż = X_H(z)` from a real-slice point over `[0, t_final]`.
///
/// Implicit midpoint iterates the step fixed point to `1e-13`; both methods
/// re-project onto the real slice after each step and log the defect.
pub fn integrate(
    h: &Polynomial,
    z0: &State,
    dt: f64,
    t_final: f64,
    method: Method,
) -> Result<Trajectory, DynError> {
    integrate_recorded(h, z0, dt, t_final, method, 2048)
}

pub fn integrate_recorded(
    h: &Polynomial,
    z0: &State,
    dt: f64,
    t_final: f64,
    method: Method,
    max_records: usize,
) -> Result<Trajectory, DynError> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(DynError::BadParameter(format!("dt must be positive, got {}", dt)));
    }
    if t_final < 0.0 {
        return Err(DynError::BadParameter("t_final must be nonnegative".into()));
    }
    let steps = (t_final / dt).ceil() as usize;
    let stride = (steps / max_records.max(1)).max(1);

    let mut z = z0.clone();
    z.project_real_slice();
    let e0 = h.evaluate_slices(&z.xi, &z.eta)?.re;
    let initial_actions = z.actions();

    let mut times = vec![0.0];
    let mut states = vec![z.clone()];
    let mut energy = vec![e0];
    let mut actions = vec![initial_actions.clone()];
    let mut summary = TrajectorySummary {
        steps,
        t_final: steps as f64 * dt,
        max_slice_defect: 0.0,
        max_energy_drift: 0.0,
        max_norm: z.norm(),
        initial_actions: initial_actions.clone(),
        max_action_drift: vec![0.0; z.n_modes()],
    };

    for step in 1..=steps {
        match method {
            Method::Rk4 => rk4_step(h, &mut z, dt)?,
            Method::ImplicitMidpoint => midpoint_step(h, &mut z, dt, step)?,
        }
        summary.max_slice_defect = summary.max_slice_defect.max(z.slice_defect());
        z.project_real_slice();

        let e = h.evaluate_slices(&z.xi, &z.eta)?.re;
        summary.max_energy_drift = summary.max_energy_drift.max((e - e0).abs());
        summary.max_norm = summary.max_norm.max(z.norm());
        for (j, x) in z.xi.iter().enumerate() {
            let drift = (x.norm_sqr() - initial_actions[j]).abs();
            if drift > summary.max_action_drift[j] {
                summary.max_action_drift[j] = drift;
            }
        }
        if step % stride == 0 || step == steps {
            times.push(step as f64 * dt);
            states.push(z.clone());
            energy.push(e);
            actions.push(z.actions());
        }
    }
    Ok(Trajectory { times, states, energy, actions, summary })
}

fn rk4_step(h: &Polynomial, z: &mut State, dt: f64) -> Result<(), DynError> {
    let k1 = field(h, z)?;
    let mut z2 = z.clone();
    z2.axpy(dt / 2.0, &k1);
    let k2 = field(h, &z2)?;
    let mut z3 = z.clone();
    z3.axpy(dt / 2.0, &k2);
    let k3 = field(h, &z3)?;
    let mut z4 = z.clone();
    z4.axpy(dt, &k3);
    let k4 = field(h, &z4)?;
    z.axpy(dt / 6.0, &k1);
    z.axpy(dt / 3.0, &k2);
    z.axpy(dt / 3.0, &k3);
    z.axpy(dt / 6.0, &k4);
    Ok(())
}

fn midpoint_step(h: &Polynomial, z: &mut State, dt: f64, step: usize) -> Result<(), DynError> {
    let mut w = z.clone();
    // explicit Euler predictor
    let f0 = field(h, z)?;
    w.axpy(dt, &f0);
    for _ in 0..MIDPOINT_MAX_ITER {
        let mut mid = z.clone();
        for (m, wn) in mid.xi.iter_mut().zip(&w.xi) {
            *m = (*m + wn) * 0.5;
        }
        for (m, wn) in mid.eta.iter_mut().zip(&w.eta) {
            *m = (*m + wn) * 0.5;
        }
        let fm = field(h, &mid)?;
        let mut w_next = z.clone();
        w_next.axpy(dt, &fm);
        let residual = w_next.max_diff(&w);
        w = w_next;
        if residual <= MIDPOINT_TOL {
            *z = w;
            return Ok(());
        }
    }
    let mut mid = z.clone();
    for (m, wn) in mid.xi.iter_mut().zip(&w.xi) {
        *m = (*m + wn) * 0.5;
    }
    let fm = field(h, &mid)?;
    let mut w_next = z.clone();
    w_next.axpy(dt, &fm);
    Err(DynError::MidpointNotConverged { step, residual: w_next.max_diff(&w), dt })
}

const FLOW_TOL: f64 = 1e-11;
const FLOW_GUARD_FACTOR: f64 = 10.0;
const FLOW_MAX_SUBSTEPS: usize = 1 << 16;

/// Time-`direction` (±1) flow of the Hamiltonian vector field of `chi`.
///
/// RK4 with step doubling until the endpoint is converged to `1e-11`.
/// The flow is complex-analytic: no real-slice projection. Errs when the
/// norm grows past 10× the starting norm.
pub fn flow_of_generator(chi: &Polynomial, z: &State, direction: f64) -> Result<State, DynError> {
    if direction != 1.0 && direction != -1.0 {
        return Err(DynError::BadParameter(format!("direction must be ±1, got {}", direction)));
    }
    if chi.is_zero() {
        return Ok(z.clone());
    }
    let start_norm = z.norm();
    let guard = FLOW_GUARD_FACTOR * start_norm;
    let mut n_steps = 4usize;
    let mut prev: Option<State> = None;
    loop {
        let result = flow_fixed_steps(chi, z, direction, n_steps, guard, start_norm)?;
        if let Some(p) = &prev {
            let diff = p.max_diff(&result);
            if diff <= FLOW_TOL {
                return Ok(result);
            }
        }
        prev = Some(result);
        n_steps *= 2;
        if n_steps > FLOW_MAX_SUBSTEPS {
            let p = prev.unwrap();
            let again = flow_fixed_steps(chi, z, direction, n_steps, guard, start_norm)?;
            return Err(DynError::FlowNotConverged { steps: n_steps, diff: p.max_diff(&again) });
        }
    }
}

fn flow_fixed_steps(
    chi: &Polynomial,
    z: &State,
    direction: f64,
    n_steps: usize,
    guard: f64,
    start_norm: f64,
) -> Result<State, DynError> {
    let dt = direction / n_steps as f64;
    let mut w = z.clone();
    for _ in 0..n_steps {
        rk4_step(chi, &mut w, dt)?;
        let norm = w.norm();
        if norm > guard && norm > 0.0 {
            return Err(DynError::FlowEscaped { norm, start_norm });
        }
    }
    Ok(w)
}

/// One ε-row of the stability sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityRow {
    pub eps: f64,
    pub horizon: f64,
    pub t_reached: f64,
    pub horizon_usage: f64,
    /// `sup_t ‖z(t)‖ / ε`
    pub max_norm_ratio: f64,
    pub max_action_drift: Vec<f64>,
    /// `max_j j^{2s} sup_t |I_j(t) − I_j(0)|`
    pub max_weighted_drift: f64,
    pub max_energy_drift: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
    /// Fit of `log(max weighted drift)` against `log ε`.
    pub drift_fit: Option<LinearFit>,
    pub order: u32,
    pub s_weight: f64,
    pub dt: f64,
    pub t_cap: f64,
    pub seed: u64,
    pub method: Method,
}

pub struct StabilityOptions {
    pub dt: Option<f64>,
    pub t_cap: f64,
    pub method: Method,
    pub seed: u64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions { dt: None, t_cap: 1e6, method: Method::ImplicitMidpoint, seed: 0 }
    }
}

/// Long-time action-stability sweep for `H = H₀ + P` whose normal form at
/// order `r` is `nf`: integrate from random points of norm ε up to
/// `min(ε^{-(r-2)}, t_cap)` and record norm containment and action drift.
///
/// Integration failures are recorded per row, not fatal. Rows are sorted by
/// ε and the drift exponent is fitted over the successful rows.
pub fn stability_experiment(
    h: &Polynomial,
    nf: &NormalFormResult,
    r: u32,
    eps_list: &[f64],
    s_weight: f64,
    opts: &StabilityOptions,
) -> Result<StabilityReport, DynError> {
    if nf.order != r as usize {
        return Err(DynError::BadParameter(format!(
            "normal form was computed at order {}, experiment requests r = {}",
            nf.order, r
        )));
    }
    if eps_list.is_empty() {
        return Err(DynError::BadParameter("empty epsilon list".into()));
    }
    let n = h.max_mode() as usize;
    if n == 0 {
        return Err(DynError::BadParameter("Hamiltonian has no modes".into()));
    }
    let max_omega = max_linear_frequency(h);
    let dt = opts.dt.unwrap_or_else(|| (0.01f64).min(2.0 * std::f64::consts::PI / (50.0 * max_omega.max(1e-9))));

    let mut eps_sorted = eps_list.to_vec();
    eps_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let rows: Vec<StabilityRow> = eps_sorted
        .par_iter()
        .enumerate()
        .map(|(row_idx, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((row_idx as u64 + 1) * 0x517c_c1b7_2722_0a95));
            let share = eps / (2.0 * n as f64).sqrt();
            let xi: Vec<Complex64> = (0..n)
                .map(|_| {
                    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                    Complex64::from_polar(share, theta)
                })
                .collect();
            let z0 = State::real_slice(xi);
            let horizon = eps.powi(-(r as i32 - 2)).min(opts.t_cap);
            match integrate_recorded(h, &z0, dt, horizon, opts.method, 256) {
                Ok(traj) => {
                    let max_weighted_drift = traj
                        .summary
                        .max_action_drift
                        .iter()
                        .enumerate()
                        .map(|(j, d)| ((j + 1) as f64).powf(2.0 * s_weight) * d)
                        .fold(0.0, f64::max);
                    StabilityRow {
                        eps,
                        horizon,
                        t_reached: traj.summary.t_final,
                        horizon_usage: traj.summary.t_final / horizon,
                        max_norm_ratio: traj.summary.max_norm / eps,
                        max_action_drift: traj.summary.max_action_drift.clone(),
                        max_weighted_drift,
                        max_energy_drift: traj.summary.max_energy_drift,
                        error: None,
                    }
                }
                Err(e) => StabilityRow {
                    eps,
                    horizon,
                    t_reached: 0.0,
                    horizon_usage: 0.0,
                    max_norm_ratio: f64::NAN,
                    max_action_drift: vec![f64::NAN; n],
                    max_weighted_drift: f64::NAN,
                    max_energy_drift: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let good: Vec<&StabilityRow> =
        rows.iter().filter(|r| r.error.is_none() && r.max_weighted_drift > 0.0).collect();
    let drift_fit = fit_loglog_rows(&good);

    Ok(StabilityReport {
        rows,
        drift_fit,
        order: r,
        s_weight,
        dt,
        t_cap: opts.t_cap,
        seed: opts.seed,
        method: opts.method,
    })
}

fn fit_loglog_rows(rows: &[&StabilityRow]) -> Option<LinearFit> {
    let x: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.max_weighted_drift.ln()).collect();
    fit_linear(&x, &y)
}

/// Largest `ω_j` read off the quadratic diagonal `ω_j ξ_j η_j` of `h`.
fn max_linear_frequency(h: &Polynomial) -> f64 {
    h.terms()
        .filter(|(m, _)| m.degree() == 2 && m.is_action())
        .map(|(_, c)| c.re.abs())
        .fold(0.0, f64::max)
}

/// Upper bound on the weighted distance of a trajectory to the torus with
/// actions `reference`: `d(t) = [Σ_j j^{2s'} (√I_j(t) − √Ī_j)²]^{1/2}`.
///
/// Requires `s' < s_weight − 1` so the mode sum converges as the truncation
/// grows.
pub fn torus_distance(
    traj: &Trajectory,
    reference: &[f64],
    s_prime: f64,
    s_weight: f64,
) -> Result<Vec<f64>, DynError> {
    if s_prime >= s_weight - 1.0 {
        return Err(DynError::BadParameter(format!(
            "torus distance weight s' = {} must satisfy s' < s − 1 (s = {})",
            s_prime, s_weight
        )));
    }
    if reference.len() != traj.summary.initial_actions.len() {
        return Err(DynError::BadParameter("reference action count mismatch".into()));
    }
    Ok(traj
        .actions
        .iter()
        .map(|acts| {
            acts.iter()
                .zip(reference)
                .enumerate()
                .map(|(j, (a, r))| {
                    let w = ((j + 1) as f64).powf(2.0 * s_prime);
                    let d = a.max(0.0).sqrt() - r.max(0.0).sqrt();
                    w * d * d
                })
                .sum::<f64>()
                .sqrt()
        })
        .collect())
}
