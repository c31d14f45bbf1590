//! Frequency models and nonresonance diagnostics.
//!
//! A [`FrequencyModel`] produces the linear frequencies `ω_j` for `j ≥ 1`.
//! The scans in this module measure how far a frequency vector is from
//! resonance: an exhaustive small-divisor minimum over integer combinations,
//! a strong-nonresonance scan over combinations with at most two large
//! indices (reported as the best `(γ, α)` pair with `|divisor| ≥ γ/N^α`),
//! a diophantine margin check, and a Monte-Carlo estimate of the measure of
//! near-resonant random convolution potentials.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Box-enumeration guard shared by the exhaustive scans.
const ENUM_GUARD: f64 = 1e8;

/// The α grid over which the strong-nonresonance scan fits γ.
pub const ALPHA_GRID: [f64; 6] = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0];

#[derive(Debug, Clone, PartialEq)]
pub enum FreqError {
    OutOfRange { index: u32, len: usize },
    BadParameter(String),
    EnumerationGuard { needed: f64, limit: f64, hint: String },
}

impl fmt::Display for FreqError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreqError::OutOfRange { index, len } => {
                write!(f, "frequency index {} out of range (explicit list has {} entries)", index, len)
            }
            FreqError::BadParameter(msg) => write!(f, "bad frequency parameter: {}", msg),
            FreqError::EnumerationGuard { needed, limit, hint } => write!(
                f,
                "enumeration guard exceeded ({:.3e} > {:.3e}); {}",
                needed, limit, hint
            ),
        }
    }
}

impl std::error::Error for FreqError {}

/// Rule producing the frequency `ω_j` for each mode `j ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyModel {
    /// Explicit finite list, `ω_j = list[j-1]`.
    Explicit(Vec<f64>),
    /// Wave-type dispersion `ω_j = √(j² + m)` with mass `m > 0`.
    Nlw { mass: f64 },
    /// Convolution-potential frequencies `ω_j = j² + v_j/(1+j)^m` with
    /// seeds `v_j ∈ [-1/2, 1/2]`.
    Convolution { m: u32, seeds: Vec<f64> },
}

impl FrequencyModel {
    pub fn explicit(list: &[f64]) -> Self {
        FrequencyModel::Explicit(list.to_vec())
    }

    pub fn nlw(mass: f64) -> Result<Self, FreqError> {
        if mass <= 0.0 || !mass.is_finite() {
            return Err(FreqError::BadParameter(format!("NLW mass must be positive, got {}", mass)));
        }
        Ok(FrequencyModel::Nlw { mass })
    }

    pub fn convolution(m: u32, seeds: Vec<f64>) -> Result<Self, FreqError> {
        if m < 1 {
            return Err(FreqError::BadParameter("convolution decay exponent m must be >= 1".into()));
        }
        if let Some(bad) = seeds.iter().find(|v| !(-0.5..=0.5).contains(*v)) {
            return Err(FreqError::BadParameter(format!(
                "convolution seed {} outside [-1/2, 1/2]",
                bad
            )));
        }
        Ok(FrequencyModel::Convolution { m, seeds })
    }

    /// Seeds drawn uniformly from `[-1/2, 1/2]` with a fixed RNG seed.
    pub fn convolution_random(m: u32, count: usize, seed: u64) -> Result<Self, FreqError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds = (0..count).map(|_| rng.gen_range(-0.5..=0.5)).collect();
        FrequencyModel::convolution(m, seeds)
    }

    /// `ω_j`, exact to double rounding.
    pub fn eval(&self, j: u32) -> Result<f64, FreqError> {
        if j == 0 {
            return Err(FreqError::BadParameter("mode index must be >= 1".into()));
        }
        match self {
            FrequencyModel::Explicit(list) => list
                .get(j as usize - 1)
                .copied()
                .ok_or(FreqError::OutOfRange { index: j, len: list.len() }),
            FrequencyModel::Nlw { mass } => Ok(((j as f64) * (j as f64) + mass).sqrt()),
            FrequencyModel::Convolution { m, seeds } => {
                let v = seeds
                    .get(j as usize - 1)
                    .copied()
                    .ok_or(FreqError::OutOfRange { index: j, len: seeds.len() })?;
                Ok((j as f64) * (j as f64) + v / (1.0 + j as f64).powi(*m as i32))
            }
        }
    }

    /// First `n` frequencies as a dense vector.
    pub fn first_n(&self, n: usize) -> Result<Vec<f64>, FreqError> {
        (1..=n as u32).map(|j| self.eval(j)).collect()
    }

    pub fn label(&self) -> String {
        match self {
            FrequencyModel::Explicit(l) => format!("explicit[{}]", l.len()),
            FrequencyModel::Nlw { mass } => format!("nlw(m={})", mass),
            FrequencyModel::Convolution { m, seeds } => {
                format!("convolution(m={}, seeds={})", m, seeds.len())
            }
        }
    }
}

/// Exhaustive small-divisor minimum over the integer box `max_i |k_i| ≤ r`.
///
/// The reported witness is sign-normalized so that `k·ω ≥ 0`; among exact
/// ties the first combination in lexicographic iteration order wins.
pub fn min_divisor_order_r(omega: &[f64], r: u32) -> Result<(f64, Vec<i64>), FreqError> {
    let n = omega.len();
    if n == 0 {
        return Err(FreqError::BadParameter("empty frequency vector".into()));
    }
    let count = (2.0 * r as f64 + 1.0).powi(n as i32);
    if count > ENUM_GUARD {
        return Err(FreqError::EnumerationGuard {
            needed: count,
            limit: ENUM_GUARD,
            hint: "use the strong-nonresonance scan for large mode counts".into(),
        });
    }
    let mut k = vec![-(r as i64); n];
    let mut best: Option<(f64, Vec<i64>)> = None;
    loop {
        if k.iter().any(|&ki| ki != 0) {
            let sum: f64 = k.iter().zip(omega).map(|(&ki, &w)| ki as f64 * w).sum();
            let mag = sum.abs();
            if best.as_ref().map_or(true, |(b, _)| mag < *b) {
                let witness = if sum < 0.0 { k.iter().map(|&x| -x).collect() } else { k.clone() };
                best = Some((mag, witness));
            }
        }
        // odometer increment
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.expect("nonempty enumeration"));
            }
            pos -= 1;
            if k[pos] < r as i64 {
                k[pos] += 1;
                for item in k.iter_mut().skip(pos + 1) {
                    *item = -(r as i64);
                }
                break;
            }
        }
    }
}

/// Diophantine margin `min_{0 < |k|₁ ≤ k_max} |k·ω|·|k|₁^α − γ`.
///
/// A nonnegative margin certifies `|k·ω| ≥ γ/|k|^α` up to the scanned order.
pub fn diophantine_check(omega: &[f64], gamma: f64, alpha: f64, k_max: u32) -> Result<f64, FreqError> {
    let n = omega.len();
    if n == 0 {
        return Err(FreqError::BadParameter("empty frequency vector".into()));
    }
    let count = (2.0 * k_max as f64 + 1.0).powi(n as i32);
    if count > ENUM_GUARD {
        return Err(FreqError::EnumerationGuard {
            needed: count,
            limit: ENUM_GUARD,
            hint: "reduce k_max or the mode count".into(),
        });
    }
    let mut k = vec![-(k_max as i64); n];
    let mut margin = f64::INFINITY;
    loop {
        let l1: i64 = k.iter().map(|ki| ki.abs()).sum();
        if l1 > 0 && l1 <= k_max as i64 {
            let sum: f64 = k.iter().zip(omega).map(|(&ki, &w)| ki as f64 * w).sum();
            let scaled = sum.abs() * (l1 as f64).powf(alpha) - gamma;
            if scaled < margin {
                margin = scaled;
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(margin);
            }
            pos -= 1;
            if k[pos] < k_max as i64 {
                k[pos] += 1;
                for item in k.iter_mut().skip(pos + 1) {
                    *item = -(k_max as i64);
                }
                break;
            }
        }
    }
}

/// One scanned divisor combination: head coefficients on modes `1..=N` plus
/// up to two tail modes above `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub n_head: u32,
    /// Sparse head: (mode, coefficient), mode ≤ n_head.
    pub head: Vec<(u32, i64)>,
    /// Tail: (mode, coefficient) with mode > n_head, Σ|coeff| ≤ 2.
    pub tail: Vec<(u32, i64)>,
    pub divisor: f64,
}

impl Combination {
    pub fn encode(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        for (m, c) in &self.head {
            parts.push(format!("{:+}w{}", c, m));
        }
        for (m, c) in &self.tail {
            parts.push(format!("{:+}w{}", c, m));
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("")
        }
    }
}

/// Result of the strong-nonresonance scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NonresonanceReport {
    pub r: u32,
    pub mu_max: u32,
    pub tail_max: u32,
    /// Minimal |divisor| combination per head size N.
    pub per_n: Vec<Combination>,
    /// γ(α) = min over combinations of |divisor|·N^α, per α on the grid.
    pub gamma_by_alpha: Vec<(f64, f64)>,
    /// Pair maximizing γ over the α grid (smallest α among ties).
    pub gamma: f64,
    pub alpha: f64,
    /// Combination attaining γ at the selected α.
    pub worst: Combination,
    /// Exact-zero divisor at a non-excluded combination, when one exists.
    pub resonance: Option<Combination>,
}

impl NonresonanceReport {
    pub fn is_resonant(&self) -> bool {
        self.resonance.is_some()
    }
}

const RESONANCE_TOL: f64 = 1e-12;

/// Scan all divisors `Σ_{m≤N} k_m ω_m + c₁ ω_{l₁} + c₂ ω_{l₂}` with
/// `N ≤ mu_max`, `Σ|k_m| ≤ r`, tail modes `N < l ≤ tail_max`,
/// `|c₁|+|c₂| ≤ 2`, excluding the identically-zero combination. Reports the
/// per-α best bound constant `γ(α)` and the grid pair maximizing γ.
pub fn scan_strong_nonresonance(
    model: &FrequencyModel,
    r: u32,
    mu_max: u32,
    tail_max: u32,
) -> Result<NonresonanceReport, FreqError> {
    if r < 1 {
        return Err(FreqError::BadParameter("scan order r must be >= 1".into()));
    }
    if tail_max <= mu_max {
        return Err(FreqError::BadParameter("tail_max must exceed mu_max".into()));
    }
    let omegas = model.first_n(tail_max as usize)?;

    let per_n: Vec<Combination> = (1..=mu_max)
        .into_par_iter()
        .map(|n_head| scan_one_head(&omegas, r, n_head, tail_max))
        .collect();

    let mut gamma_by_alpha = Vec::with_capacity(ALPHA_GRID.len());
    for &alpha in &ALPHA_GRID {
        let gamma = per_n
            .iter()
            .map(|c| c.divisor.abs() * (c.n_head as f64).powf(alpha))
            .fold(f64::INFINITY, f64::min);
        gamma_by_alpha.push((alpha, gamma));
    }
    let (alpha, gamma) = gamma_by_alpha
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.partial_cmp(&a.0).unwrap()))
        .expect("nonempty alpha grid");
    let worst = per_n
        .iter()
        .min_by(|a, b| {
            let sa = a.divisor.abs() * (a.n_head as f64).powf(alpha);
            let sb = b.divisor.abs() * (b.n_head as f64).powf(alpha);
            sa.partial_cmp(&sb).unwrap().then(a.n_head.cmp(&b.n_head))
        })
        .expect("nonempty scan")
        .clone();
    let resonance = per_n.iter().find(|c| c.divisor.abs() < RESONANCE_TOL).cloned();

    Ok(NonresonanceReport {
        r,
        mu_max,
        tail_max,
        per_n,
        gamma_by_alpha,
        gamma,
        alpha,
        worst,
        resonance,
    })
}

/// Minimal |divisor| combination for one head size, via sorted tail sums and
/// binary search around each head sum.
fn scan_one_head(omegas: &[f64], r: u32, n_head: u32, tail_max: u32) -> Combination {
    // Tail configurations: none; one mode with coefficient ±1/±2; two
    // distinct modes with coefficients ±1 each.
    let mut tails: Vec<(f64, Vec<(u32, i64)>)> = vec![(0.0, Vec::new())];
    for l in (n_head + 1)..=tail_max {
        let w = omegas[l as usize - 1];
        for c in [-2i64, -1, 1, 2] {
            tails.push((c as f64 * w, vec![(l, c)]));
        }
    }
    for l1 in (n_head + 1)..=tail_max {
        for l2 in (l1 + 1)..=tail_max {
            let w1 = omegas[l1 as usize - 1];
            let w2 = omegas[l2 as usize - 1];
            for c1 in [-1i64, 1] {
                for c2 in [-1i64, 1] {
                    tails.push((c1 as f64 * w1 + c2 as f64 * w2, vec![(l1, c1), (l2, c2)]));
                }
            }
        }
    }
    tails.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let tail_values: Vec<f64> = tails.iter().map(|t| t.0).collect();

    let mut best: Option<(f64, Vec<(u32, i64)>, usize)> = None;
    let mut heads: Vec<(f64, Vec<(u32, i64)>)> = Vec::new();
    enumerate_heads(omegas, n_head, r as i64, 1, 0.0, &mut Vec::new(), &mut heads);

    for (head_sum, head) in &heads {
        let target = -head_sum;
        let lo = tail_values.partition_point(|&t| t < target);
        for idx in [lo.wrapping_sub(1), lo, lo + 1] {
            let Some(&tval) = tail_values.get(idx) else { continue };
            if head.is_empty() && tails[idx].1.is_empty() {
                continue; // the identically-zero combination is excluded
            }
            let mag = (head_sum + tval).abs();
            let better = match &best {
                None => true,
                Some((b, _, _)) => mag < *b,
            };
            if better {
                best = Some((mag, head.clone(), idx));
            }
        }
    }
    let (mag, head, tail_idx) = best.expect("at least one combination per head size");
    let head_sum: f64 = head.iter().map(|(m, c)| *c as f64 * omegas[*m as usize - 1]).sum();
    let divisor = head_sum + tail_values[tail_idx];
    let _ = mag;
    Combination { n_head, head, tail: tails[tail_idx].1.clone(), divisor }
}

/// Enumerate sparse head vectors with Σ|k| ≤ budget over modes `mode..=n`.
fn enumerate_heads(
    omegas: &[f64],
    n_head: u32,
    budget: i64,
    mode: u32,
    sum: f64,
    current: &mut Vec<(u32, i64)>,
    out: &mut Vec<(f64, Vec<(u32, i64)>)>,
) {
    if mode > n_head {
        out.push((sum, current.clone()));
        return;
    }
    let w = omegas[mode as usize - 1];
    enumerate_heads(omegas, n_head, budget, mode + 1, sum, current, out);
    for c in 1..=budget {
        for sign in [1i64, -1] {
            let k = sign * c;
            current.push((mode, k));
            enumerate_heads(omegas, n_head, budget - c, mode + 1, sum + k as f64 * w, current, out);
            current.pop();
        }
    }
}

/// One Monte-Carlo row: failing fraction for a given γ and head size N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureRow {
    pub gamma: f64,
    pub n: u32,
    pub samples: u64,
    pub failures: u64,
    pub fraction: f64,
    /// Binomial standard error of the fraction.
    pub std_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureReport {
    pub m: u32,
    pub r: u32,
    pub beta: f64,
    pub seed: u64,
    pub rows: Vec<MeasureRow>,
    /// Through-origin linear fit of the overall failing fraction vs γ.
    pub fit_slope: f64,
    /// Per-γ fraction over all N (a sample fails if any N fails).
    pub overall: Vec<(f64, f64)>,
}

/// Monte-Carlo estimate of the measure of convolution seeds violating
/// `|Σ_{j≤N} k_j ω_j − b| ≥ γ/N^β` for some `0 < |k|₁ ≤ r`, `b ∈ ℤ` with
/// `|b| ≤ 1 + (1+N²)·r`.
///
/// One enumeration of `k` serves every γ: per sample and N the minimal
/// distance of `Σ k_j ω_j` to the admissible integers is compared against
/// each threshold. Deterministic for a fixed seed regardless of thread
/// count (per-sample RNG streams).
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_resonance_measure(
    m: u32,
    r: u32,
    gammas: &[f64],
    beta: f64,
    n_list: &[u32],
    k_budget: usize,
    samples: u64,
    seed: u64,
) -> Result<MeasureReport, FreqError> {
    if samples < 100 {
        return Err(FreqError::BadParameter("need at least 100 samples".into()));
    }
    if gammas.iter().any(|g| !(0.0..0.5).contains(g) || *g <= 0.0) {
        return Err(FreqError::BadParameter("gamma values must lie in (0, 1/2)".into()));
    }
    if m < 1 {
        return Err(FreqError::BadParameter("convolution decay exponent m must be >= 1".into()));
    }
    let &n_max = n_list
        .iter()
        .max()
        .ok_or_else(|| FreqError::BadParameter("empty N list".into()))?;

    // All head vectors 0 < |k|₁ ≤ r over modes 1..=N, reused across samples.
    let mut k_vectors: Vec<Vec<(u32, i64)>> = Vec::new();
    let mut heads = Vec::new();
    enumerate_heads(&vec![0.0; n_max as usize], n_max, r as i64, 1, 0.0, &mut Vec::new(), &mut heads);
    for (_, head) in heads {
        if !head.is_empty() {
            k_vectors.push(head);
        }
    }
    if k_vectors.len() > k_budget {
        return Err(FreqError::EnumerationGuard {
            needed: k_vectors.len() as f64,
            limit: k_budget as f64,
            hint: "raise k_budget or reduce r/N".into(),
        });
    }

    // failures[gi][ni]
    let counts: Vec<Vec<u64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(s + 1)));
            let v: Vec<f64> = (0..n_max).map(|_| rng.gen_range(-0.5..=0.5)).collect();
            let omega: Vec<f64> = (1..=n_max)
                .map(|j| (j as f64) * (j as f64) + v[j as usize - 1] / (1.0 + j as f64).powi(m as i32))
                .collect();
            // last column counts samples failing at any N
            let mut local = vec![vec![0u64; n_list.len() + 1]; gammas.len()];
            for (ni, &n) in n_list.iter().enumerate() {
                let mut min_dist = f64::INFINITY;
                for k in &k_vectors {
                    if k.iter().any(|(mode, _)| *mode > n) {
                        continue;
                    }
                    let sum: f64 = k.iter().map(|(mode, c)| *c as f64 * omega[*mode as usize - 1]).sum();
                    let b = sum.round();
                    if b.abs() <= 1.0 + (1.0 + (n as f64) * (n as f64)) * r as f64 {
                        min_dist = min_dist.min((sum - b).abs());
                    }
                }
                for (gi, &gamma) in gammas.iter().enumerate() {
                    if min_dist < gamma / (n as f64).powf(beta) {
                        local[gi][ni] += 1;
                    }
                }
            }
            for row in local.iter_mut() {
                let any = row[..n_list.len()].iter().any(|&c| c > 0);
                if any {
                    *row.last_mut().unwrap() = 1;
                }
            }
            local
        })
        .reduce(
            || vec![vec![0u64; n_list.len() + 1]; gammas.len()],
            |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(&b) {
                    for (ca, cb) in ra.iter_mut().zip(rb) {
                        *ca += cb;
                    }
                }
                a
            },
        );

    let mut rows = Vec::new();
    let mut overall = Vec::new();
    for (gi, &gamma) in gammas.iter().enumerate() {
        for (ni, &n) in n_list.iter().enumerate() {
            let failures = counts[gi][ni];
            let fraction = failures as f64 / samples as f64;
            let std_error = (fraction * (1.0 - fraction) / samples as f64).sqrt();
            rows.push(MeasureRow { gamma, n, samples, failures, fraction, std_error });
        }
        let union_failures = counts[gi][n_list.len()];
        overall.push((gamma, union_failures as f64 / samples as f64));
    }
    let num: f64 = overall.iter().map(|(g, f)| g * f).sum();
    let den: f64 = overall.iter().map(|(g, _)| g * g).sum();
    let fit_slope = if den > 0.0 { num / den } else { 0.0 };

    Ok(MeasureReport { m, r, beta, seed, rows, fit_slope, overall })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let nlw = FrequencyModel::nlw(1.0).unwrap();
        assert!((nlw.eval(2).unwrap() - 5f64.sqrt()).abs() < 1e-12);
        let conv = FrequencyModel::convolution(2, vec![0.3]).unwrap();
        assert!((conv.eval(1).unwrap() - 1.075).abs() < 1e-15);
        let expl = FrequencyModel::explicit(&[1.0, 2f64.sqrt()]);
        assert_eq!(expl.eval(2).unwrap(), 2f64.sqrt());
        assert!(expl.eval(3).is_err());
    }

    #[test]
    fn convolution_seed_validation() {
        assert!(FrequencyModel::convolution(2, vec![0.6]).is_err());
        assert!(FrequencyModel::convolution(0, vec![0.1]).is_err());
    }

    #[test]
    fn min_divisor_examples() {
        // exact resonance of (1, 2)
        let (v, k) = min_divisor_order_r(&[1.0, 2.0], 2).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(k, vec![-2, 1]);

        // (1, √2), box of half-width 3: |3 − 2√2| at k = (3, −2)
        let (v, k) = min_divisor_order_r(&[1.0, 2f64.sqrt()], 3).unwrap();
        assert!((v - (3.0 - 2.0 * 2f64.sqrt()).abs()).abs() < 1e-14);
        assert_eq!(k, vec![3, -2]);

        // single frequency
        let (v, k) = min_divisor_order_r(&[1.0], 5).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(k, vec![1]);
    }

    #[test]
    fn min_divisor_monotone_in_r() {
        let omega = [1.0, 2f64.sqrt(), 3f64.sqrt()];
        let mut prev = f64::INFINITY;
        for r in 1..=5 {
            let (v, _) = min_divisor_order_r(&omega, r).unwrap();
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn min_divisor_guard() {
        let omega = vec![1.0; 12];
        assert!(matches!(
            min_divisor_order_r(&omega, 10),
            Err(FreqError::EnumerationGuard { .. })
        ));
    }

    #[test]
    fn min_divisor_scaling() {
        let omega = [1.0, 2f64.sqrt()];
        let scaled: Vec<f64> = omega.iter().map(|w| 3.5 * w).collect();
        let (v1, k1) = min_divisor_order_r(&omega, 3).unwrap();
        let (v2, k2) = min_divisor_order_r(&scaled, 3).unwrap();
        assert_eq!(k1, k2);
        assert!((v2 - 3.5 * v1).abs() < 1e-12);
    }

    #[test]
    fn diophantine_examples() {
        let m = diophantine_check(&[1.0, 2f64.sqrt()], 0.1, 2.0, 10).unwrap();
        assert!(m > 0.0, "margin {}", m);

        let m = diophantine_check(&[1.0, 1.0], 0.05, 2.0, 4).unwrap();
        assert!(m < 0.0);

        let m = diophantine_check(&[1.0], 1.0, 0.0, 3).unwrap();
        assert!(m.abs() < 1e-15);
    }

    #[test]
    fn scan_flags_pure_squares() {
        let model = FrequencyModel::convolution(2, vec![0.0; 64]).unwrap();
        let report = scan_strong_nonresonance(&model, 2, 8, 64).unwrap();
        assert!(report.is_resonant());
        let witness = report.resonance.unwrap();
        assert!(witness.divisor.abs() < 1e-12);
    }

    #[test]
    fn scan_nlw_strictly_positive() {
        let model = FrequencyModel::nlw(1.0).unwrap();
        let report = scan_strong_nonresonance(&model, 2, 8, 64).unwrap();
        assert!(!report.is_resonant());
        assert!(report.worst.divisor.abs() > 0.0);
        assert!(report.gamma > 0.0);
        // γ(α) is the min over scanned combinations, so every per-N row obeys it
        for c in &report.per_n {
            assert!(
                c.divisor.abs() * (c.n_head as f64).powf(report.alpha) >= report.gamma - 1e-15
            );
        }
    }

    #[test]
    fn scan_degenerate_single_mode() {
        // One head mode, no tail small enough to interfere: γ at α grid is ω₁-scale.
        let model = FrequencyModel::explicit(&[1.0, 100.0, 200.0]);
        let report = scan_strong_nonresonance(&model, 3, 1, 3).unwrap();
        assert!(!report.is_resonant());
        assert!((report.per_n[0].divisor.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scan_scaling_invariance() {
        let base = FrequencyModel::explicit((1..=16).map(|j| (j as f64).sqrt() + j as f64).collect::<Vec<_>>().as_slice());
        let scaled = match &base {
            FrequencyModel::Explicit(l) => {
                FrequencyModel::explicit(&l.iter().map(|w| 2.0 * w).collect::<Vec<_>>())
            }
            _ => unreachable!(),
        };
        let r1 = scan_strong_nonresonance(&base, 2, 4, 16).unwrap();
        let r2 = scan_strong_nonresonance(&scaled, 2, 4, 16).unwrap();
        assert!((r2.gamma - 2.0 * r1.gamma).abs() < 1e-9 * r1.gamma.max(1.0));
        assert_eq!(r1.worst.head, r2.worst.head);
        assert_eq!(r1.worst.tail, r2.worst.tail);
    }

    #[test]
    fn measure_vanishing_gamma_limit() {
        // As γ shrinks the violating set shrinks toward the exact resonances,
        // which have measure zero.
        let tiny = monte_carlo_resonance_measure(2, 2, &[1e-9], 2.0, &[4], 100_000, 2000, 7).unwrap();
        assert_eq!(tiny.rows[0].failures, 0);
    }

    #[test]
    fn measure_fraction_increases_with_gamma() {
        let gammas = [0.02, 0.05, 0.1];
        let rep =
            monte_carlo_resonance_measure(2, 2, &gammas, 2.0, &[4], 100_000, 2000, 42).unwrap();
        let f: Vec<f64> = rep.overall.iter().map(|(_, f)| *f).collect();
        assert!(f[0] <= f[1] + 1e-12 && f[1] <= f[2] + 1e-12, "{:?}", f);
        assert!(rep.fit_slope >= 0.0);
    }

    #[test]
    fn measure_deterministic_given_seed() {
        let a = monte_carlo_resonance_measure(2, 2, &[0.05], 2.0, &[4], 100_000, 500, 9).unwrap();
        let b = monte_carlo_resonance_measure(2, 2, &[0.05], 2.0, &[4], 100_000, 500, 9).unwrap();
        assert_eq!(a.rows[0].failures, b.rows[0].failures);
    }

    #[test]
    fn measure_validates_parameters() {
        assert!(monte_carlo_resonance_measure(2, 2, &[0.6], 2.0, &[4], 100, 200, 1).is_err());
        assert!(monte_carlo_resonance_measure(2, 2, &[0.1], 2.0, &[4], 100, 50, 1).is_err());
    }
}
