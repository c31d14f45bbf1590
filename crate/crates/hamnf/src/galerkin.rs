//! Finite-mode Hamiltonians for 1-d wave/Schrödinger-type models.
//!
//! Everything integrates over the full circle `(−π, π)`; the Dirichlet
//! eigenproblem is solved on `(0, π)` and eigenfunctions extend oddly. Sine
//! and exponential bases are used unnormalized (`sin jx`, `e^{ijx}`) so the
//! product-integral constants come out as plain multiples of π;
//! Sturm–Liouville modes are scaled to match (`‖φ_j‖²_{L²(0,π)} = π/2`,
//! which reproduces `sin jx` exactly at `V = 0`).

use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frequencies::FrequencyModel;
use crate::poly::{mu_s_of_abs, Polynomial};

#[derive(Debug)]
pub enum GalerkinError {
    BadParameter(String),
    /// Exact and quadrature coefficient paths disagree.
    PathMismatch { exact: f64, quadrature: f64, context: String },
    EigenFailure(String),
    Unsupported(String),
    Io(std::io::Error),
}

impl fmt::Display for GalerkinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GalerkinError::BadParameter(m) => write!(f, "bad parameter: {}", m),
            GalerkinError::PathMismatch { exact, quadrature, context } => write!(
                f,
                "exact/quadrature mismatch for {}: {} vs {}",
                context, exact, quadrature
            ),
            GalerkinError::EigenFailure(m) => write!(f, "eigensolver failure: {}", m),
            GalerkinError::Unsupported(m) => write!(f, "unsupported: {}", m),
            GalerkinError::Io(e) => write!(f, "io error: {}", e),
        }
    }
}

impl std::error::Error for GalerkinError {}

impl From<std::io::Error> for GalerkinError {
    fn from(e: std::io::Error) -> Self {
        GalerkinError::Io(e)
    }
}

// ---------------------------------------------------------------------------
// Exact trigonometric product integrals over (−π, π)
// ---------------------------------------------------------------------------

/// One factor of a trigonometric product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigFactor {
    Sin(u32),
    Cos(u32),
    Exp(i32),
}

/// Exact multiple of π, possibly complex when `Exp` factors are mixed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrigIntegral {
    /// Real part divided by π.
    pub re: Rational64,
    /// Imaginary part divided by π.
    pub im: Rational64,
}

impl TrigIntegral {
    pub fn zero() -> Self {
        TrigIntegral { re: Rational64::zero(), im: Rational64::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn re_f64(&self) -> f64 {
        ratio_to_f64(self.re) * std::f64::consts::PI
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(ratio_to_f64(self.re), ratio_to_f64(self.im)) * std::f64::consts::PI
    }
}

fn ratio_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact `∫_{−π}^{π} Π factors dx` by product-to-sum expansion: each factor
/// splits into `e^{±ijx}` channels with rational weights and only the
/// zero-frequency channel survives (contributing 2π).
pub fn trig_product_integral(factors: &[TrigFactor]) -> TrigIntegral {
    // channel map: frequency -> (re, im) rational coefficient
    let mut channels: Vec<(i64, (Rational64, Rational64))> =
        vec![(0, (Rational64::new(1, 1), Rational64::zero()))];
    for factor in factors {
        let parts: Vec<(i64, (Rational64, Rational64))> = match factor {
            TrigFactor::Exp(j) => vec![(*j as i64, (Rational64::new(1, 1), Rational64::zero()))],
            TrigFactor::Cos(j) => {
                if *j == 0 {
                    vec![(0, (Rational64::new(1, 1), Rational64::zero()))]
                } else {
                    let half = Rational64::new(1, 2);
                    vec![(*j as i64, (half, Rational64::zero())), (-(*j as i64), (half, Rational64::zero()))]
                }
            }
            TrigFactor::Sin(j) => {
                if *j == 0 {
                    return TrigIntegral::zero();
                }
                // sin jx = (e^{ijx} − e^{−ijx}) / (2i): weights ∓ i/2
                let mi_half = Rational64::new(-1, 2);
                let pi_half = Rational64::new(1, 2);
                vec![
                    (*j as i64, (Rational64::zero(), mi_half)),
                    (-(*j as i64), (Rational64::zero(), pi_half)),
                ]
            }
        };
        let mut next: Vec<(i64, (Rational64, Rational64))> = Vec::with_capacity(channels.len() * parts.len());
        for &(f0, (a, b)) in &channels {
            for &(f1, (c, d)) in &parts {
                let freq = f0 + f1;
                let re = a * c - b * d;
                let im = a * d + b * c;
                match next.iter_mut().find(|e| e.0 == freq) {
                    Some(e) => {
                        e.1 .0 += re;
                        e.1 .1 += im;
                    }
                    None => next.push((freq, (re, im))),
                }
            }
        }
        channels = next;
    }
    let zero = channels.iter().find(|e| e.0 == 0);
    match zero {
        Some(&(_, (re, im))) => TrigIntegral { re: re * 2, im: im * 2 },
        None => TrigIntegral::zero(),
    }
}

/// Periodic-trapezoid quadrature of a trig product on `(−π, π)`.
pub fn trig_product_quadrature(factors: &[TrigFactor], points: usize) -> Complex64 {
    let h = std::f64::consts::TAU / points as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..points {
        let x = -std::f64::consts::PI + i as f64 * h;
        let mut prod = Complex64::new(1.0, 0.0);
        for factor in factors {
            prod *= match factor {
                TrigFactor::Sin(j) => Complex64::new((*j as f64 * x).sin(), 0.0),
                TrigFactor::Cos(j) => Complex64::new((*j as f64 * x).cos(), 0.0),
                TrigFactor::Exp(j) => Complex64::from_polar(1.0, *j as f64 * x),
            };
        }
        sum += prod;
    }
    sum * h
}

// ---------------------------------------------------------------------------
// Potentials and nonlinearity coefficients on the circle
// ---------------------------------------------------------------------------

/// Real function on the circle, given exactly as a trig series or as samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    TrigSeries {
        constant: f64,
        /// cos(1·x), cos(2·x), …
        #[serde(default)]
        cos: Vec<f64>,
        /// sin(1·x), sin(2·x), …
        #[serde(default)]
        sin: Vec<f64>,
    },
    /// Two-column samples (x, V(x)) on (−π, π); evaluated by linear
    /// interpolation, clamped at the ends.
    Samples(Vec<(f64, f64)>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::TrigSeries { constant: 0.0, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Potential::TrigSeries { constant: c, cos: Vec::new(), sin: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::TrigSeries { constant, cos, sin } => {
                *constant == 0.0 && cos.iter().all(|c| *c == 0.0) && sin.iter().all(|c| *c == 0.0)
            }
            Potential::Samples(s) => s.iter().all(|(_, v)| *v == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::TrigSeries { constant, cos, sin } => {
                let mut v = *constant;
                for (i, c) in cos.iter().enumerate() {
                    v += c * ((i as f64 + 1.0) * x).cos();
                }
                for (i, c) in sin.iter().enumerate() {
                    v += c * ((i as f64 + 1.0) * x).sin();
                }
                v
            }
            Potential::Samples(samples) => {
                if samples.is_empty() {
                    return 0.0;
                }
                let mut lo = 0usize;
                let mut hi = samples.len() - 1;
                if x <= samples[lo].0 {
                    return samples[lo].1;
                }
                if x >= samples[hi].0 {
                    return samples[hi].1;
                }
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if samples[mid].0 <= x {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (x0, v0) = samples[lo];
                let (x1, v1) = samples[hi];
                if x1 == x0 {
                    v0
                } else {
                    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Largest deviation from evenness, `max |V(x) − V(−x)|` on a probe grid.
    pub fn evenness_defect(&self) -> f64 {
        match self {
            Potential::TrigSeries { sin, .. } => sin.iter().map(|c| 2.0 * c.abs()).sum(),
            Potential::Samples(_) => {
                let mut worst: f64 = 0.0;
                for i in 0..=256 {
                    let x = std::f64::consts::PI * i as f64 / 256.0;
                    worst = worst.max((self.eval(x) - self.eval(-x)).abs());
                }
                worst
            }
        }
    }

    /// Exact trig factors when available (constant → `Cos(0)` channel).
    fn trig_terms(&self) -> Option<Vec<(f64, TrigFactor)>> {
        match self {
            Potential::TrigSeries { constant, cos, sin } => {
                let mut terms = Vec::new();
                if *constant != 0.0 {
                    terms.push((*constant, TrigFactor::Cos(0)));
                }
                for (i, c) in cos.iter().enumerate() {
                    if *c != 0.0 {
                        terms.push((*c, TrigFactor::Cos(i as u32 + 1)));
                    }
                }
                for (i, c) in sin.iter().enumerate() {
                    if *c != 0.0 {
                        terms.push((*c, TrigFactor::Sin(i as u32 + 1)));
                    }
                }
                Some(terms)
            }
            Potential::Samples(_) => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Dirichlet eigenbasis of −∂ₓₓ + V on (0, π)
// ---------------------------------------------------------------------------

/// Sampled eigenpairs of the discretized operator, modes scaled like
/// `sin jx` (`Σ φ² h = π/2` on the interior grid, first sample positive).
#[derive(Debug, Clone)]
pub struct SturmLiouvilleBasis {
    pub grid_size: usize,
    /// Interior grid `x_i = (i+1)·π/(G+1)` on (0, π).
    pub xs: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    /// Set when the supplied potential fails the evenness assumption.
    pub parity_warning: bool,
}

#[derive(Debug, Clone)]
pub enum Basis {
    Sine { n_modes: usize },
    Exponential { n_modes: usize },
    SturmLiouville(SturmLiouvilleBasis),
}

impl Basis {
    pub fn n_modes(&self) -> usize {
        match self {
            Basis::Sine { n_modes } | Basis::Exponential { n_modes } => *n_modes,
            Basis::SturmLiouville(b) => b.eigenvalues.len(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Basis::Sine { .. } => "sine",
            Basis::Exponential { .. } => "exponential",
            Basis::SturmLiouville(_) => "sturm_liouville",
        }
    }

    /// Linear eigenvalues λ_j of −∂ₓₓ + V for the carried modes.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, GalerkinError> {
        match self {
            Basis::Sine { n_modes } => {
                Ok((1..=*n_modes).map(|j| (j * j) as f64).collect())
            }
            Basis::Exponential { n_modes } => {
                Ok((1..=*n_modes).map(|j| (j * j) as f64).collect())
            }
            Basis::SturmLiouville(b) => Ok(b.eigenvalues.clone()),
        }
    }
}

/// Count of eigenvalues of the symmetric tridiagonal matrix below `lambda`
/// (Sturm sequence, off-diagonal constant `e`).
fn sturm_count(diag: &[f64], e: f64, lambda: f64) -> usize {
    let e2 = e * e;
    let mut count = 0;
    let mut q = 1.0f64;
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 { d - lambda } else { (d - lambda) - e2 / q };
        // an exact zero pivot marks an eigenvalue of a leading submatrix;
        // count it below and continue with a tiny negative pivot
        if q <= 0.0 {
            count += 1;
        }
        if q.abs() < 1e-300 {
            q = if q <= 0.0 { -1e-300 } else { 1e-300 };
        }
    }
    count
}

fn thomas_solve(diag: &[f64], e: f64, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];
    let floor = 1e-30;
    let mut pivot = diag[0] - shift;
    if pivot.abs() < floor {
        pivot = floor.copysign(if pivot == 0.0 { 1.0 } else { pivot });
    }
    c_prime[0] = e / pivot;
    d_prime[0] = rhs[0] / pivot;
    for i in 1..n {
        let mut p = (diag[i] - shift) - e * c_prime[i - 1];
        if p.abs() < floor {
            p = floor.copysign(if p == 0.0 { 1.0 } else { p });
        }
        c_prime[i] = e / p;
        d_prime[i] = (rhs[i] - e * d_prime[i - 1]) / p;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    x
}

/// Dirichlet eigenpairs of `−u'' + V u` on `(0, π)` by second-order central
/// differences, Sturm bisection for eigenvalues, and inverse iteration for
/// eigenvectors.
pub fn eigenbasis(v: &Potential, grid: usize, n_modes: usize) -> Result<Basis, GalerkinError> {
    if n_modes == 0 {
        return Err(GalerkinError::BadParameter("need at least one mode".into()));
    }
    if grid < 8 * n_modes {
        return Err(GalerkinError::BadParameter(format!(
            "grid size {} too small: need G >= 8n = {}",
            grid,
            8 * n_modes
        )));
    }
    let parity_warning = v.evenness_defect() > 1e-8;
    let h = std::f64::consts::PI / (grid as f64 + 1.0);
    let xs: Vec<f64> = (1..=grid).map(|i| i as f64 * h).collect();
    let diag: Vec<f64> = xs.iter().map(|&x| 2.0 / (h * h) + v.eval(x)).collect();
    let off = -1.0 / (h * h);

    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for d in &diag {
        lo = lo.min(d - 2.0 * off.abs());
        hi = hi.max(d + 2.0 * off.abs());
    }

    let mut eigenvalues = Vec::with_capacity(n_modes);
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n_modes);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba51);
    for j in 0..n_modes {
        // bisection for the (j+1)-th smallest eigenvalue
        let (mut a, mut b) = (lo, hi);
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if sturm_count(&diag, off, mid) <= j {
                a = mid;
            } else {
                b = mid;
            }
            if (b - a) <= 1e-14 * b.abs().max(1.0) {
                break;
            }
        }
        let lambda = 0.5 * (a + b);

        // inverse iteration
        let mut vcur: Vec<f64> = (0..grid).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let shift = lambda * (1.0 + 1e-12) + 1e-12;
        let mut converged = false;
        for _ in 0..8 {
            let mut next = thomas_solve(&diag, off, shift, &vcur);
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                vcur = (0..grid).map(|_| rng.gen_range(-1.0..1.0)).collect();
                continue;
            }
            for x in next.iter_mut() {
                *x /= norm;
            }
            // deflate against already-found modes (relevant only for clusters)
            for prev in &modes {
                let dot: f64 = next.iter().zip(prev as &Vec<f64>).map(|(a, b)| a * b).sum();
                let pn: f64 = prev.iter().map(|x: &f64| x * x).sum();
                for (x, p) in next.iter_mut().zip(prev) {
                    *x -= dot / pn * p;
                }
            }
            let residual: f64 = residual_norm(&diag, off, lambda, &next);
            vcur = next;
            if residual <= 1e-8 * lambda.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(GalerkinError::EigenFailure(format!(
                "inverse iteration did not converge for eigenvalue {} (λ ≈ {})",
                j + 1,
                lambda
            )));
        }
        // scale to the sin-convention: Σ φ² h = π/2, first sample positive
        let norm2: f64 = vcur.iter().map(|x| x * x).sum::<f64>() * h;
        let scale = (std::f64::consts::PI / 2.0 / norm2).sqrt();
        let sign = if vcur[0] < 0.0 { -1.0 } else { 1.0 };
        for x in vcur.iter_mut() {
            *x *= scale * sign;
        }
        eigenvalues.push(lambda);
        modes.push(vcur);
    }
    Ok(Basis::SturmLiouville(SturmLiouvilleBasis {
        grid_size: grid,
        xs,
        eigenvalues,
        modes,
        parity_warning,
    }))
}

fn residual_norm(diag: &[f64], e: f64, lambda: f64, v: &[f64]) -> f64 {
    let n = diag.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let mut r = (diag[i] - lambda) * v[i];
        if i > 0 {
            r += e * v[i - 1];
        }
        if i + 1 < n {
            r += e * v[i + 1];
        }
        worst = worst.max(r.abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// Perturbation assembly
// ---------------------------------------------------------------------------

/// One Taylor coefficient `g_k(x)` of the nonlinearity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorTerm {
    pub degree: usize,
    pub g: Potential,
}

/// How mode amplitudes enter the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFlavor {
    /// Schrödinger-type: `u = Σ q_j φ_j`, frequencies `ω_j = λ_j`.
    Schrodinger,
    /// Wave-type: each basis factor carries `ω_j^{−1/2}`, `ω_j = √λ_j`.
    Wave,
}

const CROSS_CHECK_TOL: f64 = 1e-8;
const QUADRATURE_POINTS: usize = 4096;

/// Assemble `P(ξ, η) = Σ_k (1/k!) ∫ g_k(x) u(x)^k dx` for
/// `u = Σ_j w_j q_j φ_j`, substituting `q_j = (ξ_j + η_j)/√2`.
///
/// The coefficient of the monomial `Π q_j^{m_j}` is
/// `(Π w_j^{m_j} / Π m_j!) ∫ g_k Π φ_j dx`. For the sine basis with trig
/// `g_k` the integral is exact and cross-checked against quadrature;
/// Sturm–Liouville bases integrate on their own grid with odd extension.
/// The exponential basis is not supported here (its index set is ℤ̄ while
/// signed indices encode the ξ/η split); use it with `verify_phi_bound`.
pub fn build_perturbation(
    basis: &Basis,
    g_taylor: &[TaylorTerm],
    n_modes: usize,
    cutoff: usize,
    weights: Option<&[f64]>,
) -> Result<Polynomial, GalerkinError> {
    if n_modes == 0 || n_modes > basis.n_modes() {
        return Err(GalerkinError::BadParameter(format!(
            "mode count {} unavailable in basis of {}",
            n_modes,
            basis.n_modes()
        )));
    }
    if let Some(w) = weights {
        if w.len() < n_modes {
            return Err(GalerkinError::BadParameter("weight vector shorter than mode count".into()));
        }
    }
    if matches!(basis, Basis::Exponential { .. }) {
        return Err(GalerkinError::Unsupported(
            "perturbation assembly needs a real odd basis (sine or sturm_liouville)".into(),
        ));
    }
    let mut p = Polynomial::zero(cutoff);
    for term in g_taylor {
        let k = term.degree;
        if k < 3 {
            return Err(GalerkinError::BadParameter(format!(
                "nonlinearity degree {} below 3",
                k
            )));
        }
        if k > cutoff || term.g.is_zero() {
            continue;
        }
        let mut multiset = Some(vec![1u32; k]);
        while let Some(ms) = multiset.take() {
            let integral = mode_product_integral(basis, &term.g, &ms)?;
            if integral.abs() > 1e-14 {
                let mut denom = 1.0;
                let mut run = 1;
                for i in 1..k {
                    if ms[i] == ms[i - 1] {
                        run += 1;
                        denom *= run as f64;
                    } else {
                        run = 1;
                    }
                }
                let mut coeff = integral / denom;
                if let Some(w) = weights {
                    for &m in &ms {
                        coeff *= w[m as usize - 1];
                    }
                }
                p = p.add(&Polynomial::from_q_product(coeff, &ms, cutoff));
            }
            multiset = next_multiset(ms, n_modes as u32);
        }
    }
    Ok(p)
}

/// Next nondecreasing tuple over `1..=max`, or `None` past the last.
fn next_multiset(mut ms: Vec<u32>, max: u32) -> Option<Vec<u32>> {
    let k = ms.len();
    let mut pos = k;
    while pos > 0 {
        pos -= 1;
        if ms[pos] < max {
            let v = ms[pos] + 1;
            for item in ms[pos..].iter_mut() {
                *item = v;
            }
            return Some(ms);
        }
    }
    None
}

/// `∫ g(x) Π φ_{m_i}(x) dx` over (−π, π).
fn mode_product_integral(
    basis: &Basis,
    g: &Potential,
    modes: &[u32],
) -> Result<f64, GalerkinError> {
    match basis {
        Basis::Sine { .. } => {
            let sin_factors: Vec<TrigFactor> = modes.iter().map(|&m| TrigFactor::Sin(m)).collect();
            match g.trig_terms() {
                Some(terms) => {
                    let mut exact = 0.0;
                    for (c, factor) in &terms {
                        let mut factors = vec![*factor];
                        factors.extend_from_slice(&sin_factors);
                        exact += c * trig_product_integral(&factors).re_f64();
                    }
                    // quadrature cross-check while both paths are available
                    let quad = sine_quadrature(g, modes);
                    if (exact - quad).abs() > CROSS_CHECK_TOL * (1.0 + exact.abs()) {
                        return Err(GalerkinError::PathMismatch {
                            exact,
                            quadrature: quad,
                            context: format!("sine modes {:?}", modes),
                        });
                    }
                    Ok(exact)
                }
                None => Ok(sine_quadrature(g, modes)),
            }
        }
        Basis::SturmLiouville(b) => {
            // Odd extension: Π φ has parity (−1)^k, g is (assumed) even.
            let h = std::f64::consts::PI / (b.grid_size as f64 + 1.0);
            let mut positive = 0.0;
            for (i, &x) in b.xs.iter().enumerate() {
                let mut prod = g.eval(x);
                for &m in modes {
                    prod *= b.modes[m as usize - 1][i];
                }
                positive += prod;
            }
            positive *= h;
            let mut negative = 0.0;
            let parity = if modes.len() % 2 == 0 { 1.0 } else { -1.0 };
            for (i, &x) in b.xs.iter().enumerate() {
                let mut prod = g.eval(-x) * parity;
                for &m in modes {
                    prod *= b.modes[m as usize - 1][i];
                }
                negative += prod;
            }
            negative *= h;
            Ok(positive + negative)
        }
        Basis::Exponential { .. } => Err(GalerkinError::Unsupported(
            "exponential basis has no q-mode product integral".into(),
        )),
    }
}

fn sine_quadrature(g: &Potential, modes: &[u32]) -> f64 {
    let n = QUADRATURE_POINTS;
    let h = std::f64::consts::TAU / n as f64;
    let mut sum = 0.0;
    for i in 0..n {
        let x = -std::f64::consts::PI + i as f64 * h;
        let mut prod = g.eval(x);
        for &m in modes {
            prod *= (m as f64 * x).sin();
        }
        sum += prod;
    }
    sum * h
}

// ---------------------------------------------------------------------------
// Hypothesis checks: product-integral decay, localization, tame estimate
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiBoundReport {
    pub k: usize,
    pub n_exponent: u32,
    pub nu: f64,
    pub j_max: u32,
    pub scanned: usize,
    pub nonzero: usize,
    /// `max |∫ Π φ| · S^N / μ^{N+ν}` over nonzero integrals.
    pub constant: f64,
    /// Index multiset attaining the constant.
    pub worst: Vec<i64>,
}

/// Scan all ordered index multisets with entries up to `j_max` and return
/// the best constant of the decay bound `|∫ Π φ| ≤ C μ^{N+ν}/S^N`.
pub fn verify_phi_bound(
    basis: &Basis,
    k: usize,
    n_exponent: u32,
    nu: f64,
    j_max: u32,
) -> Result<PhiBoundReport, GalerkinError> {
    if k < 3 {
        return Err(GalerkinError::BadParameter("product length k must be >= 3".into()));
    }
    let mut report = PhiBoundReport {
        k,
        n_exponent,
        nu,
        j_max,
        scanned: 0,
        nonzero: 0,
        constant: 0.0,
        worst: Vec::new(),
    };
    let domain: Vec<i64> = match basis {
        Basis::Exponential { .. } => {
            let mut d: Vec<i64> = (1..=j_max as i64).flat_map(|j| [j, -j]).collect();
            d.sort_unstable();
            d
        }
        _ => (1..=j_max as i64).collect(),
    };
    let mut stack = vec![0usize; k];
    loop {
        let multiset: Vec<i64> = stack.iter().map(|&i| domain[i]).collect();
        report.scanned += 1;
        let value = match basis {
            Basis::Exponential { .. } => {
                if multiset.iter().sum::<i64>() == 0 {
                    std::f64::consts::TAU
                } else {
                    0.0
                }
            }
            Basis::Sine { .. } => {
                let factors: Vec<TrigFactor> =
                    multiset.iter().map(|&j| TrigFactor::Sin(j as u32)).collect();
                trig_product_integral(&factors).re_f64()
            }
            Basis::SturmLiouville(_) => {
                let modes: Vec<u32> = multiset.iter().map(|&j| j as u32).collect();
                mode_product_integral(basis, &Potential::constant(1.0), &modes)?
            }
        };
        if value.abs() > 1e-12 {
            report.nonzero += 1;
            let abs: Vec<u32> = multiset.iter().map(|j| j.unsigned_abs() as u32).collect();
            let ms = mu_s_of_abs(&abs);
            let scaled = value.abs() * (ms.s as f64).powi(n_exponent as i32)
                / (ms.mu as f64).powf(n_exponent as f64 + nu);
            if scaled > report.constant {
                report.constant = scaled;
                report.worst = multiset.clone();
            }
        }
        // next nondecreasing index tuple
        let mut pos = k;
        loop {
            if pos == 0 {
                return Ok(report);
            }
            pos -= 1;
            if stack[pos] + 1 < domain.len() {
                let v = stack[pos] + 1;
                for item in stack.iter_mut().skip(pos) {
                    *item = v;
                }
                break;
            }
        }
    }
}

/// Per-order localization constants of a discretized eigenbasis:
/// `c_n = max_{j,l} |φ_j^l| · min_±(1 + |l ± j|)^n`, with `φ_j^l` the
/// exponential-basis coefficients of the odd extension.
pub fn well_localized_check(
    basis: &SturmLiouvilleBasis,
    orders: &[u32],
) -> Vec<(u32, f64)> {
    let h = std::f64::consts::PI / (basis.grid_size as f64 + 1.0);
    let l_max = basis.grid_size / 4;
    // |φ_j^l| = (1/π) |∫₀^π φ_j sin(lx) dx| for the odd extension
    let mut coefficient = vec![vec![0.0f64; l_max + 1]; basis.modes.len()];
    for (j, mode) in basis.modes.iter().enumerate() {
        for (l, slot) in coefficient[j].iter_mut().enumerate().skip(1) {
            let mut sum = 0.0;
            for (i, &x) in basis.xs.iter().enumerate() {
                sum += mode[i] * (l as f64 * x).sin();
            }
            *slot = (sum * h / std::f64::consts::PI).abs();
        }
    }
    orders
        .iter()
        .map(|&n| {
            let mut c_n: f64 = 0.0;
            for (j, row) in coefficient.iter().enumerate() {
                let jj = (j + 1) as f64;
                for (l, &mag) in row.iter().enumerate().skip(1) {
                    let ll = l as f64;
                    let weight = (1.0 + (ll - jj).abs()).min(1.0 + (ll + jj).abs());
                    c_n = c_n.max(mag * weight.powi(n as i32));
                }
            }
            (n, c_n)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TameRow {
    pub n_modes: usize,
    pub rho: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TameReport {
    pub degree: usize,
    pub s: f64,
    pub s0: f64,
    pub rows: Vec<TameRow>,
    /// max over rows of max_ratio divided by min over rows.
    pub spread: f64,
}

/// Probe the tame bound on random points with `|z_j| = ρ j^{−s}`: for a
/// homogeneous `P` of degree `d` the vector field has degree `d − 1` and
/// the bound reads `‖X_P(z)‖_s ≤ C ‖z‖_s ‖z‖_{s₀}^{d−2}`, so the ratio is
/// exactly ρ-invariant and should stay flat across mode counts too.
pub fn tame_probe(
    perturbations: &[(usize, Polynomial)],
    degree: usize,
    s: f64,
    s0: f64,
    rhos: &[f64],
    samples: usize,
    seed: u64,
) -> Result<TameReport, GalerkinError> {
    if degree < 3 {
        return Err(GalerkinError::BadParameter("degree must be >= 3".into()));
    }
    let mut rows = Vec::new();
    for (row_idx, (n_modes, p)) in perturbations.iter().enumerate() {
        for (rho_idx, &rho) in rhos.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed ^ ((row_idx as u64 + 1) * 0x9e37_79b9) ^ ((rho_idx as u64 + 1) << 32),
            );
            let mut max_ratio: f64 = 0.0;
            let mut sum_ratio = 0.0;
            for _ in 0..samples {
                let xi: Vec<Complex64> = (1..=*n_modes)
                    .map(|j| {
                        let amp = rho * (j as f64).powf(-s);
                        Complex64::from_polar(amp, rng.gen_range(0.0..std::f64::consts::TAU))
                    })
                    .collect();
                let eta: Vec<Complex64> = xi.iter().map(|z| z.conj()).collect();
                let (xd, ed) = p
                    .hamiltonian_field_slices(&xi, &eta)
                    .map_err(|e| GalerkinError::BadParameter(e.to_string()))?;
                let xs_norm = weighted_norm(&xd, &ed, s);
                let zs = weighted_norm(&xi, &eta, s);
                let zs0 = weighted_norm(&xi, &eta, s0);
                let ratio = xs_norm / (zs * zs0.powi(degree as i32 - 2));
                max_ratio = max_ratio.max(ratio);
                sum_ratio += ratio;
            }
            rows.push(TameRow {
                n_modes: *n_modes,
                rho,
                max_ratio,
                mean_ratio: sum_ratio / samples as f64,
            });
        }
    }
    let hi = rows.iter().map(|r| r.max_ratio).fold(f64::NEG_INFINITY, f64::max);
    let lo = rows.iter().map(|r| r.max_ratio).fold(f64::INFINITY, f64::min);
    Ok(TameReport { degree, s, s0, rows, spread: hi / lo })
}

fn weighted_norm(xi: &[Complex64], eta: &[Complex64], s: f64) -> f64 {
    xi.iter()
        .zip(eta)
        .enumerate()
        .map(|(j, (x, e))| ((j + 1) as f64).powf(2.0 * s) * (x.norm_sqr() + e.norm_sqr()))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Assembled model
// ---------------------------------------------------------------------------

/// Finite-mode polynomial Hamiltonian `H₀ + P` for a 1-d model.
#[derive(Debug, Clone)]
pub struct GalerkinModel {
    pub basis: Basis,
    pub omega: FrequencyModel,
    pub p: Polynomial,
    /// Smoothness weight used by the norms in the stability experiments.
    pub s: f64,
}

impl GalerkinModel {
    /// Build the truncated model: frequencies from the basis eigenvalues
    /// (`√λ` for wave flavor, `λ` for Schrödinger), wave flavor additionally
    /// weighting each basis factor by `ω^{−1/2}`.
    pub fn build(
        basis: Basis,
        flavor: ModelFlavor,
        g_taylor: &[TaylorTerm],
        n_modes: usize,
        cutoff: usize,
        s: f64,
    ) -> Result<Self, GalerkinError> {
        let lambda = basis.eigenvalues()?;
        let omega: Vec<f64> = match flavor {
            ModelFlavor::Schrodinger => lambda.iter().take(n_modes).copied().collect(),
            ModelFlavor::Wave => {
                if let Some(bad) = lambda.iter().take(n_modes).find(|l| **l <= 0.0) {
                    return Err(GalerkinError::BadParameter(format!(
                        "wave flavor needs positive eigenvalues, found {}",
                        bad
                    )));
                }
                lambda.iter().take(n_modes).map(|l| l.sqrt()).collect()
            }
        };
        let weights: Option<Vec<f64>> = match flavor {
            ModelFlavor::Schrodinger => None,
            ModelFlavor::Wave => Some(omega.iter().map(|w| w.powf(-0.5)).collect()),
        };
        let p = build_perturbation(&basis, g_taylor, n_modes, cutoff, weights.as_deref())?;
        Ok(GalerkinModel { basis, omega: FrequencyModel::explicit(&omega), p, s })
    }
}
