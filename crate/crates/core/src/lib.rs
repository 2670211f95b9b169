//! Extended Hamiltonians with high-degree first integrals, their
//! coupling-constant metamorphosis, and symbolic/numeric verification of the
//! resulting conservation laws.
//!
//! The layers, bottom up:
//!
//! * [`symexpr`]: exact symbolic expressions in canonical polynomial form;
//! * [`mechanics`]: canonical charts, Poisson brackets, Hamiltonian vector fields;
//! * [`extension`]: the operator-power construction of first integrals;
//! * [`ccm`]: coupling-constant metamorphosis of Hamiltonians and integrals;
//! * [`catalog`]: the built-in TTW, Post–Winternitz and caged-oscillator systems;
//! * [`verify`]: sampled bracket residuals, flow integration and drift reports.

pub mod catalog;
pub mod ccm;
pub mod error;
pub mod extension;
pub mod mechanics;
pub mod par;
pub mod rng;
pub mod symexpr;
pub mod verify;

pub use error::{Error, Result};
