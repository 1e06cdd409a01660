//! Synthetic processes: random Fourier fields, patterned-plate devices and dataset samples.

mod fourier;
mod plates;
mod process;

use serde::{Deserialize, Serialize};

pub use fourier::{sample_fourier_field, FourierFieldSpec, MAX_OMEGA, MAX_OMEGA_PLATE};
pub use plates::{
    plate_gates, plate_process, random_plate_gates, random_plate_stack, single_plate_random,
    PlateSpec, RandomPlate, Window,
};
pub use process::{
    random_process, random_process_from, rotate_frame, GeneratorConfig, ProcessFields,
    DEFAULT_XI_MAX,
};

use crate::error::{Error, Result};
use crate::forward::{add_noise, measurement_stack, MeasurementStack};
use crate::rng::derive_seed;
use crate::scalar::Real;
use crate::su2::ProcessMap;

/// Which process family a corpus is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Fourier,
    Plate,
    Mixed,
}

impl std::str::FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(Self::Fourier),
            "plate" => Ok(Self::Plate),
            "mixed" => Ok(Self::Mixed),
            other => Err(Error::invalid(
                "generator kind",
                format!("unknown kind {other:?}"),
            )),
        }
    }
}

/// 6000 plate samples on top of 50000 general ones.
pub const DEFAULT_PLATE_FRACTION: f64 = 6000.0 / 56000.0;

/// Recipe for the `index`-th sample of a corpus. Samples depend only on `(root_seed, index)`,
/// so corpora can be generated in parallel and in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecipe {
    pub kind: GeneratorKind,
    pub n_pixels: usize,
    pub sigma: f64,
    pub xi_max: f64,
    pub root_seed: u64,
    /// Fraction of plate samples in a `Mixed` corpus.
    pub plate_fraction: f64,
}

impl SampleRecipe {
    pub fn new(kind: GeneratorKind, n_pixels: usize, sigma: f64, root_seed: u64) -> Self {
        Self {
            kind,
            n_pixels,
            sigma,
            xi_max: DEFAULT_XI_MAX,
            root_seed,
            plate_fraction: DEFAULT_PLATE_FRACTION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels < 2 {
            return Err(Error::invalid(
                "sample recipe",
                "n_pixels must be at least 2",
            ));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::invalid(
                "sample recipe",
                "sigma must be finite and >= 0",
            ));
        }
        if !(0.0..=1.0).contains(&self.plate_fraction) {
            return Err(Error::invalid(
                "sample recipe",
                "plate fraction must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    /// Ground-truth process of sample `index`.
    pub fn process<T: Real>(&self, index: u64) -> Result<ProcessMap<T>> {
        let seed = derive_seed(self.root_seed, 2 * index);
        let plate = match self.kind {
            GeneratorKind::Fourier => false,
            GeneratorKind::Plate => true,
            GeneratorKind::Mixed => {
                let u = (derive_seed(seed, u64::MAX) >> 11) as f64 / (1u64 << 53) as f64;
                u < self.plate_fraction
            }
        };
        if plate {
            single_plate_random(seed, self.n_pixels)
        } else {
            let cfg = GeneratorConfig {
                n_pixels: self.n_pixels,
                xi_max: self.xi_max,
                max_omega: MAX_OMEGA,
                seed,
            };
            random_process(&cfg)
        }
    }

    /// `(stack, process)` for sample `index`, with noise when `sigma > 0`.
    pub fn sample<T: Real>(&self, index: u64) -> Result<(MeasurementStack<T>, ProcessMap<T>)> {
        self.validate()?;
        let process = self.process::<T>(index)?;
        let clean = measurement_stack(&process);
        let stack = if self.sigma > 0.0 {
            add_noise(
                &clean,
                T::lit(self.sigma),
                derive_seed(self.root_seed, 2 * index + 1),
            )?
        } else {
            clean
        };
        Ok((stack, process))
    }
}
