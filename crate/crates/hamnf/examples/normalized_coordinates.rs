//! Moving a trajectory through the normal-form coordinate change: in the
//! new coordinates the actions freeze to the remainder order, and the
//! inverse chain maps them back onto the raw wobbling actions.

use hamnf::dynamics::{integrate, Method, State};
use hamnf::frequencies::FrequencyModel;
use hamnf::normal_form::{birkhoff_normal_form, transform_to_normal, Strategy};
use hamnf::poly::Polynomial;
use num_complex::Complex64;

fn main() {
    let omega = [1.0, 2f64.sqrt()];
    let model = FrequencyModel::explicit(&omega);
    let mut p = Polynomial::zero(4);
    for pattern in 0..8usize {
        let modes: Vec<u32> = (0..3).map(|b| if pattern >> b & 1 == 0 { 1 } else { 2 }).collect();
        p = p.add(&Polynomial::from_q_product(0.7, &modes, 4));
    }
    let r = 4;
    let nf = birkhoff_normal_form(&model, &p, r, Strategy::ActionKernel, 1e-10).unwrap();
    let h = Polynomial::harmonic(&omega, 4).add(&p);

    let eps = 0.05;
    let share = eps / 2.0;
    let z0 = State::real_slice(vec![
        Complex64::new(share, 0.3 * share),
        Complex64::new(-0.4 * share, 0.8 * share),
    ]);
    let traj = integrate(&h, &z0, 0.005, 60.0, Method::ImplicitMidpoint).unwrap();

    println!("eps = {}, horizon 60, order {}", eps, r);
    println!("{:>6} {:>13} {:>13}", "t", "raw drift", "normalized drift");
    let raw0 = traj.actions[0].clone();
    let norm0 = transform_to_normal(&nf.generators, &traj.states[0]).unwrap().actions();
    for idx in (0..traj.times.len()).step_by(traj.times.len() / 8) {
        let raw: f64 = traj.actions[idx]
            .iter()
            .zip(&raw0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let w = transform_to_normal(&nf.generators, &traj.states[idx]).unwrap();
        let norm: f64 = w
            .actions()
            .iter()
            .zip(&norm0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("{:>6.1} {:>13.3e} {:>13.3e}", traj.times[idx], raw, norm);
    }
    println!(
        "\nthe normalized actions are conserved to the remainder order O(eps^{}),",
        r + 1
    );
    println!("several orders below the O(eps^3) wobble of the raw actions");
}
