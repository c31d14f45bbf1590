//! Shared generators for the integration suites.

use hamnf::poly::{Monomial, Polynomial};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random real-symmetric homogeneous polynomial of the given degree.
pub fn random_real_homogeneous(
    rng: &mut ChaCha8Rng,
    n_modes: u32,
    degree: usize,
    terms: usize,
) -> Polynomial {
    let mut p = Polynomial::zero(degree);
    for _ in 0..terms {
        let idx: Vec<i32> = (0..degree)
            .map(|_| {
                let m = rng.gen_range(1..=n_modes) as i32;
                if rng.gen_bool(0.5) {
                    m
                } else {
                    -m
                }
            })
            .collect();
        let a = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let m = Monomial::new(&idx).unwrap();
        p.add_term(m.clone(), a * c(0.5, 0.0));
        p.add_term(m.conjugate(), a.conj() * c(0.5, 0.0));
    }
    p
}

/// `(q₁ + q₂)^k` expanded in the conjugate coordinates.
pub fn q_sum_power(coeff: f64, k: usize, cutoff: usize) -> Polynomial {
    let mut p = Polynomial::zero(cutoff);
    let mut modes = vec![1u32; k];
    loop {
        // multinomial count of this nondecreasing pattern
        let ones = modes.iter().filter(|&&m| m == 1).count();
        let count = binomial(k, ones);
        p = p.add(&Polynomial::from_q_product(coeff * count as f64, &modes, cutoff));
        let mut pos = k;
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            if modes[pos] < 2 {
                let v = modes[pos] + 1;
                for item in modes[pos..].iter_mut() {
                    *item = v;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    p
}

fn binomial(n: usize, k: usize) -> usize {
    let mut r = 1usize;
    for i in 0..k.min(n - k) {
        r = r * (n - i) / (i + 1);
    }
    r
}
