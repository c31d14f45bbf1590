//! The cubic warm-up: remove Q = ξ₁η₂² from H₀ + Q at order 3.
//!
//! For this single monomial the generator is proportional to Q itself, so
//! the Lie series terminates and H∘τ = H₀ exactly. Adding the conjugate
//! monomial (making Q real) produces a genuine order-4 remainder whose
//! log-log slope comes out ≈ 4.

use hamnf::frequencies::FrequencyModel;
use hamnf::normal_form::{
    birkhoff_normal_form, small_divisor, verify_normal_form, Strategy,
};
use hamnf::poly::{Monomial, Polynomial};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn main() {
    let omega = [1.0, 2f64.sqrt()];
    let model = FrequencyModel::explicit(&omega);

    // --- single-monomial case ---------------------------------------------
    let q = Polynomial::monomial(c(1.0, 0.0), &[1, -2, -2], 3).unwrap();
    let m = Monomial::new(&[1, -2, -2]).unwrap();
    let div = small_divisor(&model, &m).unwrap();
    println!("Q = xi_1 eta_2^2, divisor = w1 - 2 w2 = {:.7}", div);

    let nf = birkhoff_normal_form(&model, &q, 3, Strategy::ActionKernel, 1e-10).unwrap();
    println!("Z = {} (empty: no cubic action monomials)", nf.z);
    println!("chi_3 = {}", nf.generators[0]);

    let radii = [1e-2, 10f64.powf(-2.5), 1e-3];
    let rep = verify_normal_form(&nf, &model, &q, &radii, 20, 42).unwrap();
    println!("residuals |H(tau(z)) - H0(z) - Z(z)|:");
    for row in &rep.rows {
        println!("  rho {:8.1e}: max {:.3e}", row.rho, row.max_residual);
    }
    println!("  -> at machine zero: the Lie series terminates for this Q\n");

    // --- reality-symmetrized case ------------------------------------------
    let mut q_real = q.clone();
    q_real.add_term(m.conjugate(), c(1.0, 0.0));
    println!("Q' = xi_1 eta_2^2 + xi_2^2 eta_1 (real), {} terms", q_real.len());
    let nf = birkhoff_normal_form(&model, &q_real, 3, Strategy::ActionKernel, 1e-10).unwrap();
    let rep = verify_normal_form(&nf, &model, &q_real, &radii, 20, 42).unwrap();
    for row in &rep.rows {
        println!("  rho {:8.1e}: max {:.3e}", row.rho, row.max_residual);
    }
    let fit = rep.fit.expect("nonzero residuals");
    println!("  fitted slope {:.3} (r^2 {:.5}) — remainder is O(rho^4)", fit.slope, fit.r2);
}
