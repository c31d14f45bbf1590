//! Symbolic-numeric toolkit for Birkhoff normal forms of perturbed
//! harmonic-oscillator chains.
//!
//! The crate computes normal forms of `H = H₀ + P` to arbitrary finite
//! order by exact sparse Poisson-bracket algebra, checks nonresonance and
//! coefficient-decay hypotheses for concrete Galerkin truncations of 1-d
//! wave- and Schrödinger-type models, and verifies the long-time
//! action-stability consequences by symplectic integration.
//!
//! Start with the runnable programs under `examples/`; the `hamnf` binary
//! drives the same machinery from TOML experiment configs.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod fit;
pub mod frequencies;
pub mod galerkin;
pub mod normal_form;
pub mod poly;
pub mod report;

pub use dynamics::{flow_of_generator, integrate, Method, State, Trajectory};
pub use frequencies::FrequencyModel;
pub use normal_form::{
    birkhoff_normal_form, lie_transform_poly, small_divisor, solve_homological, NormalFormResult,
    Strategy,
};
pub use poly::{poisson, Monomial, MuS, Polynomial, SignedIndex};
