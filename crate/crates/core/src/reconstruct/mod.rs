//! Recovering a [`ProcessMap`](crate::ProcessMap) from its five polarimetric images.

mod cost;
mod ga;
mod mle;
mod stitch;

pub use cost::{pixel_cost, representative, PixelObservation};
pub use ga::{ga_pixel, reconstruct_map_ga, GaConfig, GaFit};
pub use mle::{
    invert_map_unstitched, invert_pixel, reconstruct_map_mle, MleConfig, MleSolver, PixelFit,
};
pub use stitch::stitch_signs;
