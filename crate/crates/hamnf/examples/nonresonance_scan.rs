//! Nonresonance diagnostics for wave-type frequencies ω_j = √(j² + 1):
//! the strong-nonresonance scan over combinations with at most two large
//! indices, the exhaustive small-divisor box minimum, and a diophantine
//! margin certificate.

use hamnf::frequencies::{
    diophantine_check, min_divisor_order_r, scan_strong_nonresonance, FrequencyModel,
};

fn main() {
    let model = FrequencyModel::nlw(1.0).unwrap();

    let report = scan_strong_nonresonance(&model, 2, 8, 64).unwrap();
    println!("strong-nonresonance scan, r = 2, mu_max = 8, tail_max = 64");
    println!("per head size N, the worst combination:");
    for combo in &report.per_n {
        println!(
            "  N = {}: {}  divisor {:+.6e}",
            combo.n_head,
            combo.encode(),
            combo.divisor
        );
    }
    println!("gamma(alpha) table:");
    for (alpha, gamma) in &report.gamma_by_alpha {
        println!("  alpha {:5}: gamma = {:.6e}", alpha, gamma);
    }
    println!(
        "selected bound: |divisor| >= {:.6e} / N^{} over the scanned window",
        report.gamma, report.alpha
    );
    println!("exact resonance found: {}\n", report.is_resonant());

    // Exhaustive minimum over the integer box |k|_inf <= r for a truncation.
    let omega = model.first_n(4).unwrap();
    for r in [1, 2, 3] {
        let (value, k) = min_divisor_order_r(&omega, r).unwrap();
        println!("min |k·omega| over box half-width {}: {:.6e} at k = {:?}", r, value, k);
    }

    // Diophantine margin for the first four frequencies.
    let margin = diophantine_check(&omega, 0.05, 2.0, 8).unwrap();
    println!(
        "\ndiophantine margin (gamma = 0.05, alpha = 2, |k| <= 8): {:.6e} ({})",
        margin,
        if margin >= 0.0 { "certified" } else { "violated" }
    );

    // Pure squares are resonant: the scan flags a witness.
    let squares = FrequencyModel::convolution(2, vec![0.0; 64]).unwrap();
    let resonant = scan_strong_nonresonance(&squares, 2, 8, 64).unwrap();
    match &resonant.resonance {
        Some(w) => println!("\npure squares: exact resonance {} (divisor {:e})", w.encode(), w.divisor),
        None => println!("\npure squares: unexpectedly nonresonant"),
    }
}
