//! Quartic normal form of H₀ + (q₁+q₂)⁴ at order 4: the normalized part
//! holds exactly the action monomials and commutes with every action.

use hamnf::frequencies::FrequencyModel;
use hamnf::normal_form::{birkhoff_normal_form, verify_normal_form, Strategy};
use hamnf::poly::{poisson, Polynomial};
use num_complex::Complex64;

fn q_sum_power(coeff: f64, k: usize, cutoff: usize) -> Polynomial {
    let mut p = Polynomial::zero(cutoff);
    for pattern in 0..(1usize << k) {
        let modes: Vec<u32> = (0..k).map(|b| if pattern >> b & 1 == 0 { 1 } else { 2 }).collect();
        p = p.add(&Polynomial::from_q_product(coeff, &modes, cutoff));
    }
    p
}

fn main() {
    let omega = [1.0, 2f64.sqrt()];
    let model = FrequencyModel::explicit(&omega);
    let p = q_sum_power(1.0, 4, 4);
    println!("P = (q1+q2)^4 expanded: {} monomials", p.len());

    let nf = birkhoff_normal_form(&model, &p, 4, Strategy::ActionKernel, 1e-10).unwrap();
    println!("\nnormalized part Z ({} terms):", nf.z.len());
    println!("{}", nf.z);
    let all_action = nf.z.terms().all(|(m, _)| m.is_action());
    println!("every Z monomial depends only on actions: {}", all_action);

    // {Z, I_j} = 0 exactly for each mode
    for j in [1i32, 2] {
        let action = Polynomial::monomial(Complex64::new(1.0, 0.0), &[j, -j], 4).unwrap();
        let bracket = poisson(&nf.z, &action, 4);
        println!("{{Z, I_{}}} = {} (exactly zero: {})", j, bracket, bracket.is_zero());
    }

    println!("\ndivisor statistics:");
    for d in &nf.stats.per_degree {
        println!(
            "  grade {}: killed {}, kept {}, min killed |divisor| {:?}",
            d.degree, d.killed, d.resonant, d.min_killed_divisor
        );
    }

    // The remainder after the quartic step is O(rho^6): an even Hamiltonian
    // has no grade-5 part, so the first surviving remainder grade is 6.
    let radii = [1e-2, 10f64.powf(-2.5), 1e-3];
    let rep = verify_normal_form(&nf, &model, &p, &radii, 20, 7).unwrap();
    for row in &rep.rows {
        println!("rho {:8.1e}: max residual {:.3e}", row.rho, row.max_residual);
    }
    if let Some(fit) = rep.fit {
        println!("fitted remainder order {:.2}", fit.slope);
    }

    // Persist the artifact directory (Z.poly, chi3.poly, chi4.poly, manifest).
    let dir = std::env::temp_dir().join("hamnf-quartic-artifact");
    nf.write_dir(&dir).unwrap();
    println!("\nartifact written to {}", dir.display());
}
