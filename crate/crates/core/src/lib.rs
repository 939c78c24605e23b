//! Landau-Zener-Stückelberg-Majorana dynamics of a driven spin-1 system.
//!
//! The crate couples exact time propagation of the three-level model
//! `H = αt·Sᶻ + f(t)·Sˣ + D·(Sᶻ)²` (and its photon-dressed 4, 5 and 9 level
//! relatives) to closed-form Fresnel-integral predictions and to the
//! asymptotic crossing-chain solutions. The `runner` module wires everything
//! into scenario presets, sweeps and CSV output used by the `lzsm` binary.

pub mod adiabatic;
pub mod analytic;
pub mod error;
pub mod models;
pub mod propagate;
pub mod runner;
pub mod specfun;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
