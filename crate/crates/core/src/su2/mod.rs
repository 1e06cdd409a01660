//! SU(2) algebra: gates, axis-angle parameters, process maps and fidelities.

mod axis;
mod map;
mod matrix;

pub(crate) use axis::norm3;
pub use axis::{spherical_from_axis, AxisAngle, SphericalAxis, DEGENERATE_SIN};
pub use map::{canonicalize_sign, map_fidelity, pixel_fidelity, ProcessMap};
pub use matrix::{axis_angle_from_su2, compose, su2_from_axis_angle, waveplate, Su2Matrix};
