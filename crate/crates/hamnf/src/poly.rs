//! Sparse polynomial algebra in conjugate complex coordinates.
//!
//! Phase-space variables are indexed by nonzero integers: a positive index
//! `j` stands for the factor `ξ_j`, a negative index `-j` for `η_j`. On the
//! real slice `η_j = conj(ξ_j)` these come from the real canonical pair via
//! `ξ_j = (q_j + i p_j)/√2`, `η_j = (q_j - i p_j)/√2`, so the action is
//! `I_j = ξ_j η_j`.
//!
//! Polynomials are degree-graded sparse maps from canonical monomials to
//! complex coefficients. Every arithmetic operation carries the grading
//! cutoff, so terms above the cutoff are never materialized. The Poisson
//! bracket uses the complex-coordinate form
//!
//! ```text
//! {F, G} = i Σ_j ∂F/∂ξ_j ∂G/∂η_j − ∂F/∂η_j ∂G/∂ξ_j
//! ```
//!
//! and accumulates pair contributions in canonical key order, which makes
//! antisymmetry hold coefficient-exactly in floating point.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use smallvec::SmallVec;

/// Coefficients at or below this magnitude are dropped after arithmetic.
pub const COEFF_PRUNE: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyError {
    /// A monomial index was zero.
    ZeroIndex,
    /// Evaluation point does not supply a needed index.
    MissingIndex(i32),
    /// Parse failure for the text format.
    Parse { line: usize, message: String },
}

impl fmt::Display for PolyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolyError::ZeroIndex => write!(f, "monomial index must be nonzero"),
            PolyError::MissingIndex(i) => {
                let var = if *i > 0 { "xi" } else { "eta" };
                write!(f, "evaluation point missing index {} ({}_{})", i, var, i.abs())
            }
            PolyError::Parse { line, message } => {
                write!(f, "polynomial text parse error at line {}: {}", line, message)
            }
        }
    }
}

impl std::error::Error for PolyError {}

/// Nonzero signed mode index: `+j` is a `ξ_j` factor, `-j` an `η_j` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedIndex(i32);

impl SignedIndex {
    pub fn new(value: i32) -> Result<Self, PolyError> {
        if value == 0 {
            Err(PolyError::ZeroIndex)
        } else {
            Ok(SignedIndex(value))
        }
    }

    pub fn get(self) -> i32 {
        self.0
    }

    /// The mode number `|value|`.
    pub fn mode(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_xi(self) -> bool {
        self.0 > 0
    }

    /// Swap ξ ↔ η for this factor.
    pub fn conjugate(self) -> Self {
        SignedIndex(-self.0)
    }
}

impl fmt::Display for SignedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 > 0 {
            write!(f, "xi_{}", self.0)
        } else {
            write!(f, "eta_{}", -self.0)
        }
    }
}

type IndexVec = SmallVec<[i32; 8]>;

/// Canonical multiset of signed indices: sorted descending by value.
///
/// The empty monomial is the constant term.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    indices: IndexVec,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { indices: IndexVec::new() }
    }

    /// Canonicalize an arbitrary factor sequence; order does not matter.
    pub fn new(indices: &[i32]) -> Result<Self, PolyError> {
        if indices.iter().any(|&i| i == 0) {
            return Err(PolyError::ZeroIndex);
        }
        let mut v: IndexVec = indices.iter().copied().collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Monomial { indices: v })
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[i32] {
        &self.indices
    }

    /// Multiplicity of a signed index among the factors.
    pub fn multiplicity(&self, index: i32) -> usize {
        self.indices.iter().filter(|&&i| i == index).count()
    }

    /// Negate every index (swap ξ ↔ η everywhere).
    pub fn conjugate(&self) -> Self {
        let mut v: IndexVec = self.indices.iter().map(|&i| -i).collect();
        v.reverse();
        Monomial { indices: v }
    }

    /// True when the ξ-index multiset equals the η-index multiset, i.e. the
    /// monomial is a product of actions `I_j = ξ_j η_j`.
    pub fn is_action(&self) -> bool {
        let pos: Vec<u32> = self.indices.iter().filter(|&&i| i > 0).map(|&i| i as u32).collect();
        let mut neg: Vec<u32> =
            self.indices.iter().filter(|&&i| i < 0).map(|&i| i.unsigned_abs()).collect();
        neg.sort_unstable();
        let mut pos_sorted = pos;
        pos_sorted.sort_unstable();
        pos_sorted == neg
    }

    /// Third-largest absolute index and index spread `(μ, S)` of the factor
    /// multiset; `(1, 1)` for degree ≤ 2.
    pub fn mu_s(&self) -> MuS {
        let abs: Vec<u32> = self.indices.iter().map(|i| i.unsigned_abs()).collect();
        mu_s_of_abs(&abs)
    }

    /// Distinct modes with their (ξ-count, η-count), descending by mode.
    fn mode_profile(&self) -> SmallVec<[(u32, u16, u16); 8]> {
        let mut out: SmallVec<[(u32, u16, u16); 8]> = SmallVec::new();
        for &i in &self.indices {
            let mode = i.unsigned_abs();
            match out.iter_mut().find(|e| e.0 == mode) {
                Some(e) => {
                    if i > 0 {
                        e.1 += 1
                    } else {
                        e.2 += 1
                    }
                }
                None => out.push((mode, (i > 0) as u16, (i < 0) as u16)),
            }
        }
        out
    }

    /// Merge two factor multisets, removing one `+mode` and one `-mode`.
    fn merge_removing(&self, other: &Monomial, mode: u32) -> Monomial {
        let mut v = IndexVec::with_capacity(self.degree() + other.degree() - 2);
        v.extend(self.indices.iter().copied());
        v.extend(other.indices.iter().copied());
        v.sort_unstable_by(|a, b| b.cmp(a));
        let plus = mode as i32;
        let minus = -(mode as i32);
        if let Some(p) = v.iter().position(|&i| i == plus) {
            v.remove(p);
        }
        if let Some(p) = v.iter().position(|&i| i == minus) {
            v.remove(p);
        }
        Monomial { indices: v }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.indices.cmp(&other.indices))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.indices.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        let mut i = 0;
        while i < self.indices.len() {
            let idx = self.indices[i];
            let mut count = 1;
            while i + count < self.indices.len() && self.indices[i + count] == idx {
                count += 1;
            }
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let var = if idx > 0 { "xi" } else { "eta" };
            if count == 1 {
                write!(f, "{}_{}", var, idx.abs())?;
            } else {
                write!(f, "{}_{}^{}", var, idx.abs(), count)?;
            }
            i += count;
        }
        Ok(())
    }
}

/// `(μ, S)` combinatorics of an index multiset: μ is the third-largest
/// absolute index and `S = largest − second largest + μ`. Fixed to `(1, 1)`
/// for fewer than three factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MuS {
    pub mu: u32,
    pub s: u32,
}

/// `(μ, S)` of a list of absolute index values.
pub fn mu_s_of_abs(abs: &[u32]) -> MuS {
    if abs.len() <= 2 {
        return MuS { mu: 1, s: 1 };
    }
    let mut sorted: Vec<u32> = abs.to_vec();
    sorted.sort_unstable();
    let k = sorted.len();
    let mu = sorted[k - 3];
    let s = sorted[k - 1] - sorted[k - 2] + mu;
    MuS { mu, s }
}

/// Degree-graded sparse polynomial with complex coefficients.
///
/// Grades above `max_degree` are an implicit remainder: they are discarded by
/// every operation before being computed where possible.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Complex64>,
    max_degree: usize,
}

impl Polynomial {
    pub fn zero(max_degree: usize) -> Self {
        Polynomial { terms: BTreeMap::new(), max_degree }
    }

    pub fn constant(c: Complex64, max_degree: usize) -> Self {
        let mut p = Polynomial::zero(max_degree);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn monomial(c: Complex64, indices: &[i32], max_degree: usize) -> Result<Self, PolyError> {
        let mut p = Polynomial::zero(max_degree);
        p.add_term(Monomial::new(indices)?, c);
        Ok(p)
    }

    /// The harmonic part `Σ_j ω_j ξ_j η_j` over modes `1..=omega.len()`.
    pub fn harmonic(omega: &[f64], max_degree: usize) -> Self {
        let mut p = Polynomial::zero(max_degree);
        for (j, &w) in omega.iter().enumerate() {
            let j = (j + 1) as i32;
            p.add_term(Monomial::new(&[j, -j]).expect("nonzero"), Complex64::new(w, 0.0));
        }
        p
    }

    /// Expand a real product of position coordinates `c · q_{m_1} … q_{m_k}`
    /// via `q_j = (ξ_j + η_j)/√2`. The result is real-symmetric.
    pub fn from_q_product(c: f64, modes: &[u32], max_degree: usize) -> Self {
        let mut p = Polynomial::zero(max_degree);
        if modes.len() > max_degree {
            return p;
        }
        let k = modes.len();
        let scale = c / 2f64.powi(k as i32 / 2) / if k % 2 == 1 { 2f64.sqrt() } else { 1.0 };
        let n_branches = 1usize << k;
        for branch in 0..n_branches {
            let mut idx: IndexVec = IndexVec::with_capacity(k);
            for (bit, &m) in modes.iter().enumerate() {
                let sign = if branch >> bit & 1 == 0 { 1 } else { -1 };
                idx.push(sign * m as i32);
            }
            idx.sort_unstable_by(|a, b| b.cmp(a));
            p.add_term(Monomial { indices: idx }, Complex64::new(scale, 0.0));
        }
        p
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Complex64 {
        self.terms.get(m).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Accumulate a term, respecting the grading cutoff and pruning.
    pub fn add_term(&mut self, m: Monomial, c: Complex64) {
        use std::collections::btree_map::Entry;
        if m.degree() > self.max_degree || (c.re == 0.0 && c.im == 0.0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                if c.norm() > COEFF_PRUNE {
                    slot.insert(c);
                }
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().norm() <= COEFF_PRUNE {
                    slot.remove();
                }
            }
        }
    }

    fn prune(&mut self) {
        self.terms.retain(|m, c| c.norm() > COEFF_PRUNE && m.degree() <= self.max_degree);
    }

    /// Largest mode number appearing in any stored term.
    pub fn max_mode(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|m| m.indices.iter().map(|i| i.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn min_grade(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.degree()).min()
    }

    pub fn max_grade(&self) -> Option<usize> {
        self.terms.keys().map(|m| m.degree()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        match (self.min_grade(), self.max_grade()) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        }
    }

    /// The homogeneous part of the given degree.
    pub fn grade(&self, degree: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() == degree)
            .map(|(m, c)| (m.clone(), *c))
            .collect();
        Polynomial { terms, max_degree: self.max_degree }
    }

    pub fn truncated(&self, max_degree: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() <= max_degree)
            .map(|(m, c)| (m.clone(), *c))
            .collect();
        Polynomial { terms, max_degree }
    }

    /// Re-grade without dropping stored terms (cutoff must not shrink).
    pub fn with_max_degree(&self, max_degree: usize) -> Polynomial {
        assert!(max_degree >= self.max_grade().unwrap_or(0));
        Polynomial { terms: self.terms.clone(), max_degree }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let cutoff = self.max_degree.min(other.max_degree);
        let mut out = self.truncated(cutoff);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Polynomial {
        let mut out = Polynomial::zero(self.max_degree);
        for (m, a) in &self.terms {
            out.add_term(m.clone(), a * c);
        }
        out.prune();
        out
    }

    /// Product truncated at `cutoff`, accumulated in canonical key order.
    pub fn mul(&self, other: &Polynomial, cutoff: usize) -> Polynomial {
        let mut contribs: Vec<(Monomial, Complex64)> = Vec::new();
        for (m1, a1) in &self.terms {
            for (m2, a2) in &other.terms {
                if m1.degree() + m2.degree() > cutoff {
                    continue;
                }
                let mut v = IndexVec::with_capacity(m1.degree() + m2.degree());
                v.extend(m1.indices.iter().copied());
                v.extend(m2.indices.iter().copied());
                v.sort_unstable_by(|a, b| b.cmp(a));
                contribs.push((Monomial { indices: v }, a1 * a2));
            }
        }
        collect_sorted(contribs, cutoff)
    }

    /// Maximum coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Polynomial with conjugated monomials and conjugated coefficients.
    /// Equal to `self` exactly when the reality symmetry holds.
    pub fn conjugate(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.max_degree);
        for (m, c) in &self.terms {
            out.add_term(m.conjugate(), c.conj());
        }
        out
    }

    /// Largest violation of `coeff(conj m) = conj(coeff m)` over all terms.
    pub fn reality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (m, c) in &self.terms {
            let partner = self.coefficient(&m.conjugate());
            worst = worst.max((partner - c.conj()).norm());
        }
        worst
    }

    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    /// Best constant of the coefficient-decay bound: the supremum over stored
    /// monomials of `|a| · S^N / μ^{N+ν}`.
    pub fn decay_norm(&self, n: u32, nu: f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let MuS { mu, s } = m.mu_s();
                c.norm() * (s as f64).powi(n as i32) / (mu as f64).powf(n as f64 + nu)
            })
            .fold(0.0, f64::max)
    }

    /// Exact sum of monomial values at a (possibly partial) point.
    pub fn evaluate(&self, z: &BTreeMap<SignedIndex, Complex64>) -> Result<Complex64, PolyError> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut prod = *c;
            for &i in m.indices() {
                let key = SignedIndex(i);
                match z.get(&key) {
                    Some(v) => prod *= v,
                    None => return Err(PolyError::MissingIndex(i)),
                }
            }
            total += prod;
        }
        Ok(total)
    }

    /// Fast evaluation against dense mode vectors (`xi[j-1] = ξ_j`).
    pub fn evaluate_slices(&self, xi: &[Complex64], eta: &[Complex64]) -> Result<Complex64, PolyError> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut prod = *c;
            for &i in m.indices() {
                prod *= fetch(xi, eta, i)?;
            }
            total += prod;
        }
        Ok(total)
    }

    /// Gradient with respect to every variable: returns `(∂P/∂ξ_j, ∂P/∂η_j)`
    /// as dense vectors of length `n`.
    pub fn gradient_slices(
        &self,
        xi: &[Complex64],
        eta: &[Complex64],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>), PolyError> {
        let n = xi.len();
        let mut dxi = vec![Complex64::new(0.0, 0.0); n];
        let mut deta = vec![Complex64::new(0.0, 0.0); n];
        let mut values: SmallVec<[Complex64; 8]> = SmallVec::new();
        let mut prefix: SmallVec<[Complex64; 9]> = SmallVec::new();
        let mut suffix: SmallVec<[Complex64; 9]> = SmallVec::new();
        for (m, c) in &self.terms {
            let k = m.degree();
            if k == 0 {
                continue;
            }
            values.clear();
            for &i in m.indices() {
                values.push(fetch(xi, eta, i)?);
            }
            prefix.clear();
            prefix.push(Complex64::new(1.0, 0.0));
            for v in values.iter() {
                let last = *prefix.last().unwrap();
                prefix.push(last * v);
            }
            suffix.clear();
            suffix.resize(k + 1, Complex64::new(1.0, 0.0));
            for p in (0..k).rev() {
                suffix[p] = suffix[p + 1] * values[p];
            }
            // Group runs of the same index: d/dv (v^c · rest) = c v^{c-1} · rest.
            let mut p = 0;
            while p < k {
                let idx = m.indices[p];
                let mut run = 1;
                while p + run < k && m.indices[p + run] == idx {
                    run += 1;
                }
                // remove one factor at position p; multiply by run count
                let without = prefix[p] * suffix[p + 1];
                let contrib = c * Complex64::new(run as f64, 0.0) * without;
                let slot = (idx.unsigned_abs() - 1) as usize;
                if idx > 0 {
                    dxi[slot] += contrib;
                } else {
                    deta[slot] += contrib;
                }
                p += run;
            }
        }
        Ok((dxi, deta))
    }

    /// Right-hand side of the Hamilton equations in complex coordinates:
    /// `ξ̇_j = −i ∂H/∂η_j`, `η̇_j = +i ∂H/∂ξ_j`.
    pub fn hamiltonian_field_slices(
        &self,
        xi: &[Complex64],
        eta: &[Complex64],
    ) -> Result<(Vec<Complex64>, Vec<Complex64>), PolyError> {
        let (dxi, deta) = self.gradient_slices(xi, eta)?;
        let i = Complex64::new(0.0, 1.0);
        let xi_dot = deta.iter().map(|d| -i * d).collect();
        let eta_dot = dxi.iter().map(|d| i * d).collect();
        Ok((xi_dot, eta_dot))
    }

    /// Map-based Hamiltonian vector field over modes `1..=n` where `n` covers
    /// both the polynomial and the supplied point.
    pub fn hamiltonian_vector_field(
        &self,
        z: &BTreeMap<SignedIndex, Complex64>,
    ) -> Result<BTreeMap<SignedIndex, Complex64>, PolyError> {
        let n = self
            .max_mode()
            .max(z.keys().map(|k| k.mode()).max().unwrap_or(0)) as usize;
        let mut xi = vec![Complex64::new(0.0, 0.0); n];
        let mut eta = vec![Complex64::new(0.0, 0.0); n];
        for j in 1..=n {
            if let Some(v) = z.get(&SignedIndex(j as i32)) {
                xi[j - 1] = *v;
            }
            if let Some(v) = z.get(&SignedIndex(-(j as i32))) {
                eta[j - 1] = *v;
            }
        }
        // Report a missing index only if the polynomial actually depends on it.
        for m in self.terms.keys() {
            for &i in m.indices() {
                if !z.contains_key(&SignedIndex(i)) {
                    return Err(PolyError::MissingIndex(i));
                }
            }
        }
        let (xi_dot, eta_dot) = self.hamiltonian_field_slices(&xi, &eta)?;
        let mut out = BTreeMap::new();
        for j in 1..=n {
            out.insert(SignedIndex(j as i32), xi_dot[j - 1]);
            out.insert(SignedIndex(-(j as i32)), eta_dot[j - 1]);
        }
        Ok(out)
    }
}

fn fetch(xi: &[Complex64], eta: &[Complex64], index: i32) -> Result<Complex64, PolyError> {
    let slot = (index.unsigned_abs() as usize).wrapping_sub(1);
    let arr = if index > 0 { xi } else { eta };
    arr.get(slot).copied().ok_or(PolyError::MissingIndex(index))
}

/// Fold a contribution list into a polynomial in canonical key order, so the
/// result does not depend on the generation order of the contributions.
fn collect_sorted(mut contribs: Vec<(Monomial, Complex64)>, cutoff: usize) -> Polynomial {
    contribs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
    let mut out = Polynomial::zero(cutoff);
    let mut iter = contribs.into_iter();
    let mut current: Option<(Monomial, Complex64)> = iter.next();
    while let Some((m, mut acc)) = current.take() {
        loop {
            match iter.next() {
                Some((m2, c2)) if m2 == m => acc += c2,
                next => {
                    if acc.norm() > COEFF_PRUNE && m.degree() <= cutoff {
                        out.terms.insert(m, acc);
                    }
                    current = next;
                    break;
                }
            }
        }
    }
    out
}

/// Poisson bracket `{F, G} = i Σ_j (∂F/∂ξ_j ∂G/∂η_j − ∂F/∂η_j ∂G/∂ξ_j)`,
/// coefficient-exact, graded at `cutoff`.
///
/// Contributions are grouped by unordered term pair and summed in canonical
/// order. Within a pair the two bracket channels negate exactly under
/// argument swap, so `poisson(F, G) == poisson(G, F).scale(-1)` holds
/// bit-for-bit and `poisson(F, F)` is exactly empty.
pub fn poisson(f: &Polynomial, g: &Polynomial, cutoff: usize) -> Polynomial {
    // (result, pair-lo, pair-hi) -> value; grouping keeps the fold canonical.
    let mut contribs: Vec<(Monomial, Monomial, Monomial, Complex64)> = Vec::new();
    let i_unit = Complex64::new(0.0, 1.0);
    let f_profiles: Vec<(&Monomial, &Complex64, SmallVec<[(u32, u16, u16); 8]>)> =
        f.terms.iter().map(|(m, c)| (m, c, m.mode_profile())).collect();
    let g_profiles: Vec<(&Monomial, &Complex64, SmallVec<[(u32, u16, u16); 8]>)> =
        g.terms.iter().map(|(m, c)| (m, c, m.mode_profile())).collect();
    for (m1, a1, p1) in &f_profiles {
        if m1.degree() == 0 {
            continue;
        }
        for (m2, a2, p2) in &g_profiles {
            if m2.degree() == 0 || m1.degree() + m2.degree() - 2 > cutoff {
                continue;
            }
            for &(mode, c1x, c1e) in p1.iter() {
                let Some(&(_, c2x, c2e)) = p2.iter().find(|e| e.0 == mode) else {
                    continue;
                };
                let factor = c1x as i32 * c2e as i32 - c1e as i32 * c2x as i32;
                if factor == 0 {
                    continue;
                }
                let value = i_unit * (*a1 * *a2) * Complex64::new(factor as f64, 0.0);
                let result = m1.merge_removing(m2, mode);
                let (lo, hi) = if *m1 <= *m2 {
                    ((*m1).clone(), (*m2).clone())
                } else {
                    ((*m2).clone(), (*m1).clone())
                };
                contribs.push((result, lo, hi, value));
            }
        }
    }
    contribs.sort_unstable_by(|a, b| {
        a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)).then_with(|| a.2.cmp(&b.2))
    });
    let mut out = Polynomial::zero(cutoff);
    let mut idx = 0;
    while idx < contribs.len() {
        let result = contribs[idx].0.clone();
        let mut acc = Complex64::new(0.0, 0.0);
        while idx < contribs.len() && contribs[idx].0 == result {
            // sum the unordered-pair group first (1 or 2 entries)
            let (lo, hi) = (contribs[idx].1.clone(), contribs[idx].2.clone());
            let mut group = Complex64::new(0.0, 0.0);
            while idx < contribs.len()
                && contribs[idx].0 == result
                && contribs[idx].1 == lo
                && contribs[idx].2 == hi
            {
                group += contribs[idx].3;
                idx += 1;
            }
            acc += group;
        }
        if acc.norm() > COEFF_PRUNE && result.degree() <= cutoff {
            out.terms.insert(result, acc);
        }
    }
    out
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i) {}", c.re, c.im, m)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Text format: header "degree_cutoff D", then one term per line,
// "re im : i1 i2 ... ik" (empty index list = constant term).
// ---------------------------------------------------------------------------

impl Polynomial {
    pub fn to_text(&self) -> String {
        let mut out = format!("degree_cutoff {}\n", self.max_degree);
        for (m, c) in &self.terms {
            out.push_str(&format!("{} {} :", c.re, c.im));
            for &i in m.indices() {
                out.push_str(&format!(" {}", i));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PolyError> {
        let mut lines = text.lines().enumerate();
        let (first_no, first) = loop {
            match lines.next() {
                Some((no, l)) if !l.trim().is_empty() => break (no + 1, l.trim()),
                Some(_) => continue,
                None => {
                    return Err(PolyError::Parse { line: 0, message: "empty input".into() })
                }
            }
        };
        let cutoff = first
            .strip_prefix("degree_cutoff")
            .map(str::trim)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or(PolyError::Parse {
                line: first_no,
                message: "expected header `degree_cutoff D`".into(),
            })?;
        let mut poly = Polynomial::zero(cutoff);
        for (no, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (coeff_part, index_part) = line.split_once(':').ok_or(PolyError::Parse {
                line: no + 1,
                message: "expected `re im : indices`".into(),
            })?;
            let mut coeffs = coeff_part.split_whitespace();
            let re = coeffs
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or(PolyError::Parse { line: no + 1, message: "bad real part".into() })?;
            let im = coeffs
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or(PolyError::Parse { line: no + 1, message: "bad imaginary part".into() })?;
            if coeffs.next().is_some() {
                return Err(PolyError::Parse {
                    line: no + 1,
                    message: "extra tokens before `:`".into(),
                });
            }
            let mut indices = Vec::new();
            for tok in index_part.split_whitespace() {
                let i = tok.parse::<i32>().map_err(|_| PolyError::Parse {
                    line: no + 1,
                    message: format!("bad index `{}`", tok),
                })?;
                if i == 0 {
                    return Err(PolyError::Parse {
                        line: no + 1,
                        message: "zero index".into(),
                    });
                }
                indices.push(i);
            }
            let m = Monomial::new(&indices).map_err(|e| PolyError::Parse {
                line: no + 1,
                message: e.to_string(),
            })?;
            poly.add_term(m, Complex64::new(re, im));
        }
        Ok(poly)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn mono(idx: &[i32]) -> Monomial {
        Monomial::new(idx).unwrap()
    }

    #[test]
    fn canonicalize_sorts_descending() {
        assert_eq!(mono(&[-2, 1, -2]).indices(), &[1, -2, -2]);
        assert_eq!(mono(&[]).degree(), 0);
        let m = mono(&[3, -3]);
        assert_eq!(m.indices(), &[3, -3]);
        assert_eq!(m.degree(), 2);
        assert!(m.is_action());
        assert_eq!(Monomial::new(&[0, 1]), Err(PolyError::ZeroIndex));
    }

    #[test]
    fn permutations_collapse() {
        assert_eq!(mono(&[1, -2, 3]), mono(&[3, 1, -2]));
        assert_eq!(mono(&[1, -2, 3]), mono(&[-2, 3, 1]));
    }

    #[test]
    fn conjugate_swaps_xi_eta() {
        assert_eq!(mono(&[1, -2, -2]).conjugate(), mono(&[2, 2, -1]));
        assert_eq!(mono(&[3, -3]).conjugate(), mono(&[3, -3]));
    }

    #[test]
    fn mu_s_examples() {
        assert_eq!(mono(&[1, 2, 3]).mu_s(), MuS { mu: 1, s: 2 });
        assert_eq!(mono(&[5, 5, 5]).mu_s(), MuS { mu: 5, s: 5 });
        assert_eq!(mono(&[7, -7]).mu_s(), MuS { mu: 1, s: 1 });
        assert_eq!(mono(&[]).mu_s(), MuS { mu: 1, s: 1 });
    }

    #[test]
    fn decay_norm_examples() {
        let p = Polynomial::monomial(c(1.0, 0.0), &[1, 2, 3], 4).unwrap();
        assert_eq!(p.decay_norm(1, 0.0), 2.0);
        assert_eq!(p.decay_norm(0, 0.0), 1.0);
        let q = Polynomial::monomial(c(-2.5, 0.5), &[1, -1], 4).unwrap();
        let mag = c(-2.5, 0.5).norm();
        assert!((q.decay_norm(3, 1.5) - mag).abs() < 1e-15);
        assert_eq!(Polynomial::zero(4).decay_norm(2, 0.0), 0.0);
    }

    #[test]
    fn bracket_single_term() {
        // {ξ₁η₁, ξ₁} = −i ξ₁
        let f = Polynomial::monomial(c(1.0, 0.0), &[1, -1], 4).unwrap();
        let g = Polynomial::monomial(c(1.0, 0.0), &[1], 4).unwrap();
        let b = poisson(&f, &g, 4);
        assert_eq!(b.len(), 1);
        let got = b.coefficient(&mono(&[1]));
        assert_eq!(got, c(0.0, -1.0));
    }

    #[test]
    fn bracket_h0_eigenvalue() {
        // {H₀, ξ₁η₂²} = −i(ω₁ − 2ω₂) ξ₁η₂²
        let omega = [1.0, 2f64.sqrt()];
        let h0 = Polynomial::harmonic(&omega, 4);
        let m = Polynomial::monomial(c(1.0, 0.0), &[1, -2, -2], 4).unwrap();
        let b = poisson(&h0, &m, 4);
        let want = -(omega[0] - 2.0 * omega[1]);
        let got = b.coefficient(&mono(&[1, -2, -2]));
        assert!((got - c(0.0, want)).norm() < 1e-15);
        assert_eq!(b.len(), 1);
    }

    #[test]
    fn bracket_self_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_poly(&mut rng, 3, 4);
        let b = poisson(&f, &f, 6);
        assert!(b.is_zero());
    }

    #[test]
    fn bracket_antisymmetry_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let f = random_poly(&mut rng, 3, 4);
            let g = random_poly(&mut rng, 3, 4);
            let fg = poisson(&f, &g, 6);
            let gf = poisson(&g, &f, 6);
            assert_eq!(fg.len(), gf.len());
            for (m, cv) in fg.terms() {
                assert_eq!(*cv, -gf.coefficient(m), "monomial {}", m);
            }
        }
    }

    #[test]
    fn bracket_grading() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let f = random_homogeneous(&mut rng, 3, 3);
            let g = random_homogeneous(&mut rng, 3, 4);
            let b = poisson(&f, &g, 8);
            if !b.is_zero() {
                assert_eq!(b.min_grade(), Some(5));
                assert_eq!(b.max_grade(), Some(5));
            }
        }
    }

    #[test]
    fn bracket_leibniz() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let f = random_poly(&mut rng, 2, 3);
            let g = random_poly(&mut rng, 2, 3);
            let h = random_poly(&mut rng, 2, 3);
            let cutoff = 10;
            let lhs = poisson(&f.mul(&g, cutoff), &h, cutoff);
            let rhs = f
                .mul(&poisson(&g, &h, cutoff), cutoff)
                .add(&poisson(&f, &h, cutoff).mul(&g, cutoff));
            let diff = lhs.sub(&rhs).max_coeff();
            let scale = lhs.max_coeff().max(rhs.max_coeff()).max(1e-30);
            assert!(diff / scale < 1e-12, "relative defect {}", diff / scale);
        }
    }

    #[test]
    fn bracket_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let f = random_poly(&mut rng, 2, 3);
            let g = random_poly(&mut rng, 2, 3);
            let h = random_poly(&mut rng, 2, 3);
            let cutoff = 12;
            let s = poisson(&f, &poisson(&g, &h, cutoff), cutoff)
                .add(&poisson(&g, &poisson(&h, &f, cutoff), cutoff))
                .add(&poisson(&h, &poisson(&f, &g, cutoff), cutoff));
            assert!(s.max_coeff() < 1e-12, "jacobi defect {}", s.max_coeff());
        }
    }

    #[test]
    fn bracket_preserves_reality() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let f = random_real_poly(&mut rng, 3, 4);
            let g = random_real_poly(&mut rng, 3, 4);
            assert!(f.is_real_symmetric(0.0));
            let b = poisson(&f, &g, 6);
            assert!(
                b.is_real_symmetric(1e-13 * b.max_coeff().max(1.0)),
                "defect {}",
                b.reality_defect()
            );
        }
    }

    #[test]
    fn evaluate_examples() {
        let p = Polynomial::monomial(c(1.0, 0.0), &[1, -2, -2], 4).unwrap();
        let mut z = BTreeMap::new();
        z.insert(SignedIndex::new(1).unwrap(), c(2.0, 0.0));
        z.insert(SignedIndex::new(-2).unwrap(), c(3.0, 0.0));
        assert_eq!(p.evaluate(&z).unwrap(), c(18.0, 0.0));
        assert_eq!(Polynomial::zero(4).evaluate(&z).unwrap(), c(0.0, 0.0));

        // H₀ with ω = (1, √2) on the real slice ξ₁ = ξ₂ = 1
        let h0 = Polynomial::harmonic(&[1.0, 2f64.sqrt()], 4);
        let mut z = BTreeMap::new();
        for j in [1i32, 2] {
            z.insert(SignedIndex::new(j).unwrap(), c(1.0, 0.0));
            z.insert(SignedIndex::new(-j).unwrap(), c(1.0, 0.0));
        }
        let v = h0.evaluate(&z).unwrap();
        assert!((v - c(1.0 + 2f64.sqrt(), 0.0)).norm() < 1e-15);

        let missing = p.evaluate(&BTreeMap::new());
        assert_eq!(missing, Err(PolyError::MissingIndex(1)));
    }

    #[test]
    fn hamiltonian_field_examples() {
        // H₀ one mode: ξ̇₁ = −iω ξ₁, η̇₁ = +iω η₁
        let h0 = Polynomial::harmonic(&[1.0], 4);
        let xi = [c(1.0, 0.0)];
        let eta = [c(1.0, 0.0)];
        let (xd, ed) = h0.hamiltonian_field_slices(&xi, &eta).unwrap();
        assert_eq!(xd[0], c(0.0, -1.0));
        assert_eq!(ed[0], c(0.0, 1.0));

        // Constant Hamiltonian: zero field.
        let k = Polynomial::constant(c(5.0, 0.0), 4);
        let (xd, ed) = k.hamiltonian_field_slices(&xi, &eta).unwrap();
        assert_eq!(xd[0], c(0.0, 0.0));
        assert_eq!(ed[0], c(0.0, 0.0));

        // H = ξ₁η₁ξ₂η₂ at the all-ones point: (−i, −i, +i, +i).
        let h = Polynomial::monomial(c(1.0, 0.0), &[1, -1, 2, -2], 4).unwrap();
        let xi = [c(1.0, 0.0), c(1.0, 0.0)];
        let eta = [c(1.0, 0.0), c(1.0, 0.0)];
        let (xd, ed) = h.hamiltonian_field_slices(&xi, &eta).unwrap();
        assert_eq!(xd, vec![c(0.0, -1.0), c(0.0, -1.0)]);
        assert_eq!(ed, vec![c(0.0, 1.0), c(0.0, 1.0)]);
    }

    #[test]
    fn field_agrees_with_bracket_sign_convention() {
        // ż = {H, z} under the implemented bracket.
        let h0 = Polynomial::harmonic(&[1.0], 4);
        let xi1 = Polynomial::monomial(c(1.0, 0.0), &[1], 4).unwrap();
        let br = poisson(&h0, &xi1, 4);
        // {H₀, ξ₁} = −i ω ξ₁ matches ξ̇₁
        assert_eq!(br.coefficient(&mono(&[1])), c(0.0, -1.0));
    }

    #[test]
    fn bracket_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let f = random_poly(&mut rng, 2, 4);
        let g = random_poly(&mut rng, 2, 4);
        let b = poisson(&f, &g, 8);
        let h = 1e-5;
        for _ in 0..20 {
            let xi: Vec<Complex64> =
                (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let eta: Vec<Complex64> =
                (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let exact = b.evaluate_slices(&xi, &eta).unwrap();
            let mut fd = c(0.0, 0.0);
            for j in 0..2 {
                let dfx = central_diff(&f, &xi, &eta, j, true, h);
                let dfe = central_diff(&f, &xi, &eta, j, false, h);
                let dgx = central_diff(&g, &xi, &eta, j, true, h);
                let dge = central_diff(&g, &xi, &eta, j, false, h);
                fd += c(0.0, 1.0) * (dfx * dge - dfe * dgx);
            }
            let scale = exact.norm().max(1.0);
            assert!((exact - fd).norm() / scale < 1e-6, "{} vs {}", exact, fd);
        }
    }

    fn central_diff(
        p: &Polynomial,
        xi: &[Complex64],
        eta: &[Complex64],
        j: usize,
        is_xi: bool,
        h: f64,
    ) -> Complex64 {
        let mut xp = xi.to_vec();
        let mut ep = eta.to_vec();
        let mut xm = xi.to_vec();
        let mut em = eta.to_vec();
        if is_xi {
            xp[j] += c(h, 0.0);
            xm[j] -= c(h, 0.0);
        } else {
            ep[j] += c(h, 0.0);
            em[j] -= c(h, 0.0);
        }
        (p.evaluate_slices(&xp, &ep).unwrap() - p.evaluate_slices(&xm, &em).unwrap())
            / c(2.0 * h, 0.0)
    }

    #[test]
    fn q_product_expansion() {
        // q₁² = (ξ₁+η₁)²/2 = (ξ₁² + 2ξ₁η₁ + η₁²)/2
        let p = Polynomial::from_q_product(1.0, &[1, 1], 4);
        assert_eq!(p.coefficient(&mono(&[1, 1])), c(0.5, 0.0));
        assert_eq!(p.coefficient(&mono(&[1, -1])), c(1.0, 0.0));
        assert_eq!(p.coefficient(&mono(&[-1, -1])), c(0.5, 0.0));
        assert!(p.is_real_symmetric(0.0));
        // Odd power keeps the √2 factor: q₁³ coefficient of ξ₁³ is 2^{-3/2}.
        let p3 = Polynomial::from_q_product(1.0, &[1, 1, 1], 4);
        let want = 1.0 / 2f64.powf(1.5);
        assert!((p3.coefficient(&mono(&[1, 1, 1])).re - want).abs() < 1e-15);
    }

    #[test]
    fn text_roundtrip_lossless() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let p = random_poly(&mut rng, 3, 4);
            let q = Polynomial::from_text(&p.to_text()).unwrap();
            assert_eq!(p, q);
        }
        // constant term line has an empty index list
        let p = Polynomial::constant(c(0.1, -0.25), 3);
        let q = Polynomial::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn text_parse_errors_have_line_numbers() {
        let bad = "degree_cutoff 3\n1.0 0.0 : 1\nx y : 2\n";
        match Polynomial::from_text(bad) {
            Err(PolyError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    pub fn random_poly(rng: &mut ChaCha8Rng, n_modes: u32, max_deg: usize) -> Polynomial {
        let mut p = Polynomial::zero(max_deg);
        let terms = rng.gen_range(3..10);
        for _ in 0..terms {
            let deg = rng.gen_range(0..=max_deg);
            let idx: Vec<i32> = (0..deg)
                .map(|_| {
                    let m = rng.gen_range(1..=n_modes) as i32;
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            p.add_term(
                Monomial::new(&idx).unwrap(),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        p
    }

    fn random_homogeneous(rng: &mut ChaCha8Rng, n_modes: u32, deg: usize) -> Polynomial {
        let mut p = Polynomial::zero(deg + 4);
        for _ in 0..6 {
            let idx: Vec<i32> = (0..deg)
                .map(|_| {
                    let m = rng.gen_range(1..=n_modes) as i32;
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            p.add_term(
                Monomial::new(&idx).unwrap(),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
        }
        p
    }

    fn random_real_poly(rng: &mut ChaCha8Rng, n_modes: u32, max_deg: usize) -> Polynomial {
        let base = random_poly(rng, n_modes, max_deg);
        let mut p = Polynomial::zero(max_deg);
        for (m, cv) in base.terms() {
            p.add_term(m.clone(), *cv * c(0.5, 0.0));
            p.add_term(m.conjugate(), cv.conj() * c(0.5, 0.0));
        }
        p
    }
}
