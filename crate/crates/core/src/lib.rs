//! Thermodynamics of the osp(1|2) integrable spin chain by the quantum
//! transfer matrix (QTM) method.
//!
//! The crate is organised around one pipeline:
//!
//! * [`spectral`] — the elementary building blocks of the analytic Bethe
//!   ansatz: the half-chain powers `phi`, the root polynomial `Q`, the three
//!   box functions and the QTM eigenvalue they sum to.
//! * [`bae`] — Newton solver for the Bethe ansatz equations in the sectors
//!   giving the largest and second-largest QTM eigenvalues, seeded from
//!   string patterns.
//! * [`fusion`] — the fusion hierarchy `T_m` as tableau sums, the
//!   `Y`-functions, verification of the T- and Y-systems, and zero location
//!   by the argument principle.
//! * [`qtm`] — brute-force oracle: dense QTM of dimension `3^N`, its top
//!   eigenvalues, and exact free energy of small periodic chains.
//! * [`tba`] — truncated nonlinear integral equations for the free energy
//!   (largest eigenvalue) and the correlation length (second eigenvalue).
//!
//! All spectral quantities are plain functions of immutable inputs and can be
//! evaluated concurrently.

pub mod bae;
pub mod fusion;
pub mod params;
pub mod qtm;
pub mod spectral;
pub mod tba;
pub mod util;

pub use fusion::{FusionIndex, Tableau};
pub use params::ModelParams;
pub use spectral::{BetheState, Letter, PhiSign};
pub use tba::{GridFunction, TbaConfig, TbaSolution};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
