//! Sparse bracket algebra basics: building polynomials in the conjugate
//! coordinates, Poisson brackets, reality symmetry, and the decay norm.

use hamnf::poly::{poisson, Monomial, Polynomial};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() {
    // H₀ = ω₁ ξ₁η₁ + ω₂ ξ₂η₂ with ω = (1, √2)
    let omega = [1.0, 2f64.sqrt()];
    let h0 = Polynomial::harmonic(&omega, 6);
    println!("H0 = {}", h0);

    // A single monomial ξ₁η₂² and its bracket with H₀:
    // {H₀, ξ^{(j)}η^{(l)}} = −iΩ ξ^{(j)}η^{(l)} with Ω = ω₁ − 2ω₂.
    let m = Polynomial::monomial(c(1.0, 0.0), &[1, -2, -2], 6).unwrap();
    let bracket = poisson(&h0, &m, 6);
    println!("{{H0, xi_1 eta_2^2}} = {}", bracket);
    println!("  expected factor -i(w1 - 2w2) = {:+.6}i", -(omega[0] - 2.0 * omega[1]));

    // Brackets of real polynomials stay real: f = q₁²q₂ and g = I₁·q₂
    // (position-only polynomials commute, so g mixes in an action factor).
    let f = Polynomial::from_q_product(1.0, &[1, 1, 2], 6);
    let action = Polynomial::monomial(c(1.0, 0.0), &[1, -1], 6).unwrap();
    let g = action.mul(&Polynomial::from_q_product(0.5, &[2], 6), 6);
    println!("\nq1^2 q2 has {} monomials, reality defect {:.1e}", f.len(), f.reality_defect());
    let fg = poisson(&f, &g, 6);
    println!("{{f, g}} has {} monomials, reality defect {:.1e}", fg.len(), fg.reality_defect());

    // Antisymmetry holds bit-for-bit.
    let gf = poisson(&g, &f, 6);
    let exact = fg.terms().all(|(m, cv)| *cv == -gf.coefficient(m));
    println!("antisymmetry exact: {}", exact);

    // Decay norm: sup |a| S^N / mu^{N+nu} over stored monomials.
    let mono = Monomial::new(&[1, 2, 3]).unwrap();
    let ms = mono.mu_s();
    println!("\nmu/S of {}: mu = {}, S = {}", mono, ms.mu, ms.s);
    let p = Polynomial::monomial(c(1.0, 0.0), &[1, 2, 3], 6).unwrap();
    println!("decay norm (N=1, nu=0) = {}", p.decay_norm(1, 0.0));

    // The text format round-trips losslessly.
    let text = fg.to_text();
    let back = Polynomial::from_text(&text).unwrap();
    println!("\ntext round-trip lossless: {}", back == fg);
    println!("--- serialized bracket ---\n{}", text);
}
