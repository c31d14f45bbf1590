//! Monte-Carlo estimate of the measure of near-resonant convolution
//! potentials: draw seeds v uniformly, count draws where some integer
//! combination Σ k_j ω_j lands within γ/N^β of an integer, and fit the
//! failing fraction against γ.

use hamnf::frequencies::monte_carlo_resonance_measure;

fn main() {
    let gammas = [0.02, 0.05, 0.1];
    let report =
        monte_carlo_resonance_measure(2, 2, &gammas, 5.0, &[4], 1_000_000, 20_000, 2024).unwrap();

    println!("convolution frequencies w_j = j^2 + v_j/(1+j)^2, |k| <= 2, N = 4");
    println!("{:>8} {:>8} {:>10} {:>10} {:>10}", "gamma", "fails", "fraction", "stderr", "fit");
    for row in &report.rows {
        println!(
            "{:>8} {:>8} {:>10.5} {:>10.5} {:>10.5}",
            row.gamma,
            row.failures,
            row.fraction,
            row.std_error,
            report.fit_slope * row.gamma
        );
    }
    println!("\nthrough-origin fit: failing fraction ≈ {:.4} · gamma", report.fit_slope);
    println!("(the near-resonant set shrinks linearly with gamma, so almost");
    println!(" every potential in the family is strongly nonresonant)");
}
