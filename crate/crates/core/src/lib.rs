//! Numerical laboratory for 2-D semilinear wave equations with
//! scale-invariant damping `u_tt - Δu + (μ/t) u_t = |u|^p` and their
//! generalized Tricomi reformulations `u_tt - t^m Δu = t^α |u|^p`.
//!
//! The crate is organized around the objects these equations carry:
//! critical/conformal exponents and threshold roots ([`exponents`]),
//! Strichartz index systems ([`admissibility`]), exact parameter and field
//! maps between the two forms ([`transforms`]), linear Tricomi propagators
//! with a hypergeometric validation oracle ([`propagator`]), a pseudo-spectral
//! semilinear solver with blowup detection ([`simulator`]), weighted
//! space-time and polar mixed norms ([`norms`]), and the Picard iteration
//! schemes with contraction monitors ([`picard`]).

pub mod admissibility;
pub mod cli;
pub mod exponents;
pub mod field;
pub mod norms;
pub mod picard;
pub mod propagator;
pub mod simulator;
pub mod transforms;

mod dd;
mod rootfind;

pub use exponents::{ExponentReport, ModelForm, ModelParams, Regime, RegimeLabel};
pub use field::{Field2D, Grid, Space};
pub use simulator::{SimConfig, SimOutcome, SimTrace};
