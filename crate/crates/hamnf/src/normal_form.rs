//! Homological equations, Lie transforms, and the normal-form iteration.
//!
//! The conventions are locked once and asserted by the test suite:
//!
//! * the bracket is `{F,G} = i Σ ∂F/∂ξ ∂G/∂η − ∂F/∂η ∂G/∂ξ`, under which
//!   `{H₀, ξ^{(j)}η^{(l)}} = −i Ω(j,l) ξ^{(j)}η^{(l)}` with
//!   `Ω = Σ sign(index)·ω`;
//! * the Hamilton equations are `ż = {H, z}` (equivalently
//!   `ξ̇_j = −i ∂H/∂η_j`, `η̇_j = +i ∂H/∂ξ_j`);
//! * consequently `Σ_k (1/k!) {·,χ}^k P` equals `P ∘ φ₋₁`, the composition
//!   with the time-(−1) flow of `X_χ`, and the full change of coordinates
//!   realized by generators `χ₃ … χ_r` is
//!   `τ = φ³₋₁ ∘ φ⁴₋₁ ∘ … ∘ φʳ₋₁` (apply the χ_r flow first).
//!
//! Each homological solve enforces `{H₀, χ} + Q = Z` coefficient-wise; the
//! generator coefficient for a killed monomial is `a/(iΩ)`.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{flow_of_generator, DynError, State};
use crate::fit::{fit_loglog, LinearFit};
use crate::frequencies::{FreqError, FrequencyModel};
use crate::poly::{poisson, Monomial, PolyError, Polynomial};

#[derive(Debug)]
pub enum NfError {
    /// Input polynomial has grades 0–2; the quadratic part must already be
    /// the harmonic oscillator.
    DegenerateLowGrades { grades: Vec<usize> },
    OrderTooSmall { r: usize },
    GeneratorDegreeTooLow { degree: usize },
    /// ActionKernel asked to divide by a small divisor on a non-action
    /// monomial.
    NearResonantNonAction { offenders: Vec<(Monomial, f64)>, floor: f64 },
    /// The solved homological identity failed its internal residual check.
    IdentityResidual { residual: f64, tolerance: f64 },
    Freq(FreqError),
    Dyn(DynError),
    Poly(PolyError),
    Io(std::io::Error),
    Artifact(String),
}

impl fmt::Display for NfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NfError::DegenerateLowGrades { grades } => write!(
                f,
                "perturbation must vanish to order 3: found grades {:?}",
                grades
            ),
            NfError::OrderTooSmall { r } => write!(f, "normal-form order must be >= 3, got {}", r),
            NfError::GeneratorDegreeTooLow { degree } => write!(
                f,
                "generator must have a zero of order >= 3 (min grade {}), the Lie series need not terminate per grade",
                degree
            ),
            NfError::NearResonantNonAction { offenders, floor } => {
                write!(f, "near-resonant non-action monomial(s), |divisor| < {:.3e}:", floor)?;
                for (m, d) in offenders {
                    write!(f, " [{} : {:.6e}]", m, d)?;
                }
                Ok(())
            }
            NfError::IdentityResidual { residual, tolerance } => write!(
                f,
                "homological identity residual {:.3e} exceeds tolerance {:.3e}",
                residual, tolerance
            ),
            NfError::Freq(e) => write!(f, "{}", e),
            NfError::Dyn(e) => write!(f, "{}", e),
            NfError::Poly(e) => write!(f, "{}", e),
            NfError::Io(e) => write!(f, "io error: {}", e),
            NfError::Artifact(m) => write!(f, "artifact error: {}", m),
        }
    }
}

impl std::error::Error for NfError {}

impl From<FreqError> for NfError {
    fn from(e: FreqError) -> Self {
        NfError::Freq(e)
    }
}
impl From<DynError> for NfError {
    fn from(e: DynError) -> Self {
        NfError::Dyn(e)
    }
}
impl From<PolyError> for NfError {
    fn from(e: PolyError) -> Self {
        NfError::Poly(e)
    }
}
impl From<std::io::Error> for NfError {
    fn from(e: std::io::Error) -> Self {
        NfError::Io(e)
    }
}

/// How the homological solve splits monomials between χ and Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Kill every monomial whose divisor exceeds the floor; keep the rest.
    NonresonantKill,
    /// Keep exactly the action monomials; killing a non-action monomial
    /// below the floor is an error.
    ActionKernel,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::NonresonantKill => write!(f, "nonresonant_kill"),
            Strategy::ActionKernel => write!(f, "action_kernel"),
        }
    }
}

pub const DEFAULT_DIVISOR_FLOOR: f64 = 1e-10;

/// Outcome of the divisor decision for one monomial.
#[derive(Debug, Clone)]
pub struct DivisorRecord {
    pub monomial: Monomial,
    /// `Ω = Σ sign(index)·ω_{|index|}`
    pub omega_sum: f64,
    pub killed: bool,
    /// Kept in the normalized part.
    pub resonant: bool,
}

/// Signed frequency sum of a monomial's index multiset.
pub fn small_divisor(model: &FrequencyModel, m: &Monomial) -> Result<f64, FreqError> {
    let mut sum = 0.0;
    for &i in m.indices() {
        let w = model.eval(i.unsigned_abs())?;
        sum += if i > 0 { w } else { -w };
    }
    Ok(sum)
}

#[derive(Debug, Clone)]
pub struct HomologicalSolution {
    pub chi: Polynomial,
    pub z: Polynomial,
    pub records: Vec<DivisorRecord>,
    /// Max coefficient of `{H₀,χ} + Q − Z` relative to `‖Q‖∞`.
    pub residual: f64,
}

const IDENTITY_TOL: f64 = 1e-12;

/// Solve `{H₀, χ} + Q = Z` for a homogeneous `Q`.
///
/// A killed monomial with coefficient `a` and divisor `Ω` contributes
/// `a/(iΩ)` to χ. The identity is re-verified coefficient-wise before
/// returning. Reality of `Q` propagates to χ and Z.
pub fn solve_homological(
    q: &Polynomial,
    model: &FrequencyModel,
    strategy: Strategy,
    divisor_floor: f64,
) -> Result<HomologicalSolution, NfError> {
    let cutoff = q.max_degree();
    let mut chi = Polynomial::zero(cutoff);
    let mut z = Polynomial::zero(cutoff);
    let mut records = Vec::with_capacity(q.len());
    let mut offenders: Vec<(Monomial, f64)> = Vec::new();

    for (m, &a) in q.terms() {
        let omega_sum = small_divisor(model, m)?;
        let keep = match strategy {
            Strategy::NonresonantKill => omega_sum.abs() < divisor_floor,
            Strategy::ActionKernel => {
                let action = m.is_action();
                if !action && omega_sum.abs() < divisor_floor {
                    offenders.push((m.clone(), omega_sum));
                    continue;
                }
                action
            }
        };
        if keep {
            z.add_term(m.clone(), a);
            records.push(DivisorRecord { monomial: m.clone(), omega_sum, killed: false, resonant: true });
        } else {
            // a / (iΩ)
            let coeff = a * Complex64::new(0.0, -1.0 / omega_sum);
            chi.add_term(m.clone(), coeff);
            records.push(DivisorRecord { monomial: m.clone(), omega_sum, killed: true, resonant: false });
        }
    }
    if !offenders.is_empty() {
        return Err(NfError::NearResonantNonAction { offenders, floor: divisor_floor });
    }

    let n = q.max_mode() as usize;
    let h0 = Polynomial::harmonic(&model.first_n(n)?, cutoff.max(2));
    let residual_poly = poisson(&h0, &chi, cutoff).add(q).sub(&z);
    let scale = q.max_coeff();
    let residual = if scale > 0.0 { residual_poly.max_coeff() / scale } else { residual_poly.max_coeff() };
    if residual > IDENTITY_TOL {
        return Err(NfError::IdentityResidual { residual, tolerance: IDENTITY_TOL });
    }
    Ok(HomologicalSolution { chi, z, records, residual })
}

/// Truncated Lie series `Σ_{k≥0} (1/k!) P^{(k)}` with
/// `P^{(k+1)} = {P^{(k)}, χ}`, graded at `cutoff`.
///
/// Requires the generator to vanish to order 3 so every bracket raises the
/// minimum grade; the series then terminates at the cutoff.
pub fn lie_transform_poly(
    p: &Polynomial,
    chi: &Polynomial,
    cutoff: usize,
) -> Result<Polynomial, NfError> {
    if let Some(g) = chi.min_grade() {
        if g <= 2 {
            return Err(NfError::GeneratorDegreeTooLow { degree: g });
        }
    }
    let mut acc = p.truncated(cutoff);
    if chi.is_zero() || p.is_zero() {
        return Ok(acc);
    }
    let mut term = acc.clone();
    let mut k = 1.0;
    while !term.is_zero() {
        term = poisson(&term, chi, cutoff).scale(Complex64::new(1.0 / k, 0.0));
        acc = acc.add(&term);
        k += 1.0;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DegreeStats {
    pub degree: usize,
    pub killed: usize,
    pub resonant: usize,
    pub min_killed_divisor: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DivisorStats {
    pub per_degree: Vec<DegreeStats>,
    pub min_killed_divisor: Option<f64>,
}

impl DivisorStats {
    fn absorb(&mut self, degree: usize, records: &[DivisorRecord]) {
        let mut stats = DegreeStats { degree, ..Default::default() };
        for rec in records {
            if rec.killed {
                stats.killed += 1;
                let mag = rec.omega_sum.abs();
                stats.min_killed_divisor =
                    Some(stats.min_killed_divisor.map_or(mag, |m: f64| m.min(mag)));
            } else {
                stats.resonant += 1;
            }
        }
        if let Some(m) = stats.min_killed_divisor {
            self.min_killed_divisor = Some(self.min_killed_divisor.map_or(m, |g: f64| g.min(m)));
        }
        self.per_degree.push(stats);
    }
}

/// Normalized part, generator chain, and divisor diagnostics of one
/// normal-form computation.
#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub z: Polynomial,
    /// `χ₃, …, χ_r` (zero polynomials where nothing was killed).
    pub generators: Vec<Polynomial>,
    pub order: usize,
    pub strategy: Strategy,
    pub divisor_floor: f64,
    pub stats: DivisorStats,
}

impl NormalFormResult {
    pub fn generator(&self, degree: usize) -> Option<&Polynomial> {
        degree.checked_sub(3).and_then(|i| self.generators.get(i))
    }
}

/// Iterate the normal-form construction to order `r`: at each grade
/// `k = 3..=r` solve the homological equation for the grade-`k` part and
/// push the Hamiltonian through the Lie transform of the solved generator.
///
/// On return, transforming `H₀ + P` by the generator chain equals
/// `H₀ + Z` at every grade `≤ r` (asserted internally to `1e-12` relative).
pub fn birkhoff_normal_form(
    model: &FrequencyModel,
    p: &Polynomial,
    r: usize,
    strategy: Strategy,
    divisor_floor: f64,
) -> Result<NormalFormResult, NfError> {
    if r < 3 {
        return Err(NfError::OrderTooSmall { r });
    }
    let low: Vec<usize> = (0..=2).filter(|&d| !p.grade(d).is_zero()).collect();
    if !low.is_empty() {
        return Err(NfError::DegenerateLowGrades { grades: low });
    }

    let n = p.max_mode() as usize;
    let p_trunc = p.truncated(r);
    let omegas = model.first_n(n)?;
    let h0 = Polynomial::harmonic(&omegas, r);
    let mut h = h0.add(&p_trunc);
    let mut z_acc = Polynomial::zero(r);
    let mut generators = Vec::with_capacity(r - 2);
    let mut stats = DivisorStats::default();
    let scale = p_trunc.max_coeff().max(1e-300);

    for k in 3..=r {
        let q_k = h.grade(k);
        let sol = solve_homological(&q_k, model, strategy, divisor_floor)?;
        if !sol.chi.is_zero() {
            h = lie_transform_poly(&h, &sol.chi, r)?;
        }
        let after = h.grade(k).sub(&sol.z).max_coeff();
        if after > IDENTITY_TOL * scale.max(q_k.max_coeff()) {
            return Err(NfError::IdentityResidual {
                residual: after / scale,
                tolerance: IDENTITY_TOL,
            });
        }
        z_acc = z_acc.add(&sol.z);
        stats.absorb(k, &sol.records);
        generators.push(sol.chi);
    }

    // Final grading audit: H transformed equals H₀ + Z through grade r.
    let defect = h.sub(&h0.add(&z_acc)).max_coeff();
    if defect > 10.0 * IDENTITY_TOL * scale {
        return Err(NfError::IdentityResidual { residual: defect / scale, tolerance: IDENTITY_TOL });
    }

    Ok(NormalFormResult { z: z_acc, generators, order: r, strategy, divisor_floor, stats })
}

/// The coordinate change realized by the generator chain: maps normalized
/// coordinates to original ones (`H ∘ τ = H₀ + Z + O(r+1)`).
///
/// Numerically `τ = φ³₋₁ ∘ … ∘ φʳ₋₁`: the χ_r flow runs first, each for
/// time −1.
pub fn transform_from_normal(generators: &[Polynomial], z: &State) -> Result<State, DynError> {
    let mut w = z.clone();
    for chi in generators.iter().rev() {
        w = flow_of_generator(chi, &w, -1.0)?;
    }
    Ok(w)
}

/// Inverse change `τ⁻¹`: original coordinates to normalized ones.
pub fn transform_to_normal(generators: &[Polynomial], z: &State) -> Result<State, DynError> {
    let mut w = z.clone();
    for chi in generators.iter() {
        w = flow_of_generator(chi, &w, 1.0)?;
    }
    Ok(w)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRow {
    pub rho: f64,
    pub max_residual: f64,
    pub mean_residual: f64,
}

/// Numerical certificate that the remainder has the promised order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
    /// Log-log slope of max residual vs radius (`None` when residuals are
    /// at machine zero).
    pub fit: Option<LinearFit>,
    pub samples_per_radius: usize,
    pub seed: u64,
}

/// Evaluate `|H(τ(z)) − H₀(z) − Z(z)|` on random real-slice points of norm
/// ρ for each radius, with τ computed by composing generator flows. For a
/// normal form of order `r` the fitted slope approaches `r + 1`.
pub fn verify_normal_form(
    result: &NormalFormResult,
    model: &FrequencyModel,
    p: &Polynomial,
    radii: &[f64],
    samples_per_radius: usize,
    seed: u64,
) -> Result<ResidualReport, NfError> {
    if radii.is_empty() || samples_per_radius == 0 {
        return Err(NfError::Artifact("need at least one radius and one sample".into()));
    }
    let n = p
        .max_mode()
        .max(result.z.max_mode())
        .max(result.generators.iter().map(|g| g.max_mode()).max().unwrap_or(0))
        .max(1) as usize;
    let omegas = model.first_n(n)?;
    let cutoff = p.max_degree().max(result.order);
    let h0 = Polynomial::harmonic(&omegas, cutoff);
    let h = h0.add(&p.truncated(cutoff));

    let mut rows = Vec::with_capacity(radii.len());
    for (ri, &rho) in radii.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((ri as u64 + 1) * 0x2545_f491_4f6c_dd1d));
        let mut max_res: f64 = 0.0;
        let mut sum_res = 0.0;
        for _ in 0..samples_per_radius {
            let mut xi: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let norm: f64 = xi.iter().map(|v| 2.0 * v.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            for v in xi.iter_mut() {
                *v *= rho / norm;
            }
            let z = State::real_slice(xi);
            let mapped = transform_from_normal(&result.generators, &z)?;
            let h_val = h.evaluate_slices(&mapped.xi, &mapped.eta)?;
            let h0_val = h0.evaluate_slices(&z.xi, &z.eta)?;
            let z_val = result.z.evaluate_slices(&z.xi, &z.eta)?;
            let res = (h_val - h0_val - z_val).norm();
            max_res = max_res.max(res);
            sum_res += res;
        }
        rows.push(ResidualRow {
            rho,
            max_residual: max_res,
            mean_residual: sum_res / samples_per_radius as f64,
        });
    }
    // Rows at the evaluation noise floor (residual ≪ rounding of the
    // H-values, which scale like ρ²) carry no slope information; when the
    // series terminates exactly every row sits there and no fit is made.
    let signal: Vec<&ResidualRow> =
        rows.iter().filter(|r| r.max_residual > 1e-13 * r.rho * r.rho).collect();
    let xs: Vec<f64> = signal.iter().map(|r| r.rho).collect();
    let ys: Vec<f64> = signal.iter().map(|r| r.max_residual).collect();
    let fit = if xs.len() >= 2 { fit_loglog(&xs, &ys) } else { None };
    Ok(ResidualReport { rows, fit, samples_per_radius, seed })
}

// ---------------------------------------------------------------------------
// Artifact directory: Z.poly, chi3.poly … chir.poly, manifest.json
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactManifest {
    order: usize,
    strategy: Strategy,
    divisor_floor: f64,
    min_killed_divisor: Option<f64>,
    z_terms_per_degree: Vec<(usize, usize)>,
    stats: DivisorStats,
}

impl NormalFormResult {
    pub fn write_dir(&self, dir: &Path) -> Result<(), NfError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("Z.poly"), self.z.to_text())?;
        for (i, chi) in self.generators.iter().enumerate() {
            std::fs::write(dir.join(format!("chi{}.poly", i + 3)), chi.to_text())?;
        }
        let z_terms_per_degree = (3..=self.order)
            .map(|d| (d, self.z.grade(d).len()))
            .collect();
        let manifest = ArtifactManifest {
            order: self.order,
            strategy: self.strategy,
            divisor_floor: self.divisor_floor,
            min_killed_divisor: self.stats.min_killed_divisor,
            z_terms_per_degree,
            stats: self.stats.clone(),
        };
        let json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| NfError::Artifact(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self, NfError> {
        let manifest: ArtifactManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)
                .map_err(|e| NfError::Artifact(format!("bad manifest: {}", e)))?;
        let z = Polynomial::from_text(&std::fs::read_to_string(dir.join("Z.poly"))?)?;
        let mut generators = Vec::new();
        for d in 3..=manifest.order {
            let text = std::fs::read_to_string(dir.join(format!("chi{}.poly", d)))?;
            generators.push(Polynomial::from_text(&text)?);
        }
        Ok(NormalFormResult {
            z,
            generators,
            order: manifest.order,
            strategy: manifest.strategy,
            divisor_floor: manifest.divisor_floor,
            stats: manifest.stats,
        })
    }
}
