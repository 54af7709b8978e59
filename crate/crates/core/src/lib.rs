//! Dressed two-level atom lasing into a microcavity embedded in a photonic
//! band-gap material.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every numerical piece:
//!
//! - [`dressed`]: bare drive parameters to dressed-state rates and coupling.
//! - [`specfun`]: log-Gamma and the Kummer function `1F1(1, b; z)`.
//! - [`ladder`]: steady state and time evolution of the photon-number ladder,
//!   field observables, and the closed-form/asymptotic photon statistics.
//! - [`liouvillian`]: the full master equation on the dressed-atom ⊗ Fock
//!   space, its null space, regression-theorem correlations.
//! - [`spectrum`]: half-line Fourier transform of the correlation, peak and
//!   linewidth extraction.
//!
//! All rates share one (arbitrary) unit; the conventional choice is the bare
//! atomic decay rate `gamma = 1`.
#![no_std]

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod banded;
pub mod block;
pub mod dressed;
mod error;
pub mod ladder;
pub mod liouvillian;
pub mod sparse;
pub mod specfun;
pub mod spectrum;

pub use dressed::{
    dressed_rates, mix_angle, pump_sweep_grid, DressedRates, Drive, GapConfig, GapFlags,
    MixAngle, SweepPoint, SystemParams,
};
pub use error::{Error, Result};
pub use ladder::{FieldObservables, PhotonLadder};
pub use liouvillian::{DensityMatrix, FockAtomSpace, Liouvillian};
pub use spectrum::SpectrumResult;
