//! Simulation and tomography of space-dependent SU(2) polarization gates.
//!
//! A gate is described per pixel by a rotation angle and axis ([`AxisAngle`]). The crate
//! simulates the five polarimetric images `{I_LL, I_LH, I_LD, I_HH, I_HD}` such a gate
//! produces, generates synthetic training processes and patterned-waveplate devices, and
//! recovers the gate from its images by per-pixel maximum likelihood or a genetic-algorithm
//! baseline.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases at the crate
//! root fix the scalar to `f64`.

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod forward;
pub mod generate;
pub mod parallel;
pub mod reconstruct;
pub mod rng;
pub mod scalar;
pub mod su2;

pub use error::{Error, Result};
pub use forward::{MeasurementStack, StokesState};
pub use scalar::Real;
pub use su2::{AxisAngle, ProcessMap, SphericalAxis, Su2Matrix};

pub type Su2Matrix64 = Su2Matrix<f64>;
pub type AxisAngle64 = AxisAngle<f64>;
pub type ProcessMap64 = ProcessMap<f64>;
pub type MeasurementStack64 = MeasurementStack<f64>;

pub type Su2Matrix32 = Su2Matrix<f32>;
pub type ProcessMap32 = ProcessMap<f32>;
pub type MeasurementStack32 = MeasurementStack<f32>;
