use rand::Rng;

use super::fourier::{FourierFieldSpec, MAX_OMEGA};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::su2::{canonicalize_sign, norm3, AxisAngle, ProcessMap};

/// Frame-rotation bound used for training data: 5°.
pub const DEFAULT_XI_MAX: f64 = 5.0 * std::f64::consts::PI / 180.0;

/// Field ranges narrower than this are treated as constant.
const CONSTANT_RANGE: f64 = 1e-12;
/// Axis vectors shorter than this after rescaling make a draw degenerate.
const MIN_AXIS_NORM: f64 = 1e-9;
/// Redraws allowed before giving up on a configuration.
const MAX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_pixels: usize,
    /// Frame rotations are drawn from `[-xi_max, xi_max]` (radians).
    pub xi_max: f64,
    /// Frequencies are drawn from `0..=max_omega`.
    pub max_omega: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn new(n_pixels: usize, seed: u64) -> Self {
        Self {
            n_pixels,
            xi_max: DEFAULT_XI_MAX,
            max_omega: MAX_OMEGA,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels < 2 {
            return Err(Error::invalid(
                "generator config",
                "n_pixels must be at least 2",
            ));
        }
        if !(self.xi_max >= 0.0) || !self.xi_max.is_finite() {
            return Err(Error::invalid(
                "generator config",
                "xi_max must be finite and >= 0",
            ));
        }
        if self.max_omega > MAX_OMEGA {
            return Err(Error::invalid(
                "generator config",
                format!("max_omega exceeds {MAX_OMEGA}"),
            ));
        }
        Ok(())
    }
}

/// The four parameter fields and frame rotation behind one random process.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessFields {
    pub theta: FourierFieldSpec,
    pub axis: [FourierFieldSpec; 3],
    /// Frame rotation (radians).
    pub xi: f64,
}

impl ProcessFields {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> Self {
        let n = cfg.n_pixels;
        let theta = FourierFieldSpec::random(rng, cfg.max_omega, n);
        let axis = std::array::from_fn(|_| FourierFieldSpec::random(rng, cfg.max_omega, n));
        let xi = if cfg.xi_max > 0.0 {
            rng.random_range(-cfg.xi_max..=cfg.xi_max)
        } else {
            0.0
        };
        Self { theta, axis, xi }
    }

    /// Raw field values on the rotated grid, before any rescaling.
    pub fn raw_fields<T: Real>(&self, n: usize) -> [Vec<T>; 4] {
        let center = T::lit((n as f64 - 1.0) / 2.0);
        let xi = T::lit(self.xi);
        let coords: Vec<(T, T)> = (0..n * n)
            .map(|i| {
                let (x, y) = (T::lit((i % n) as f64), T::lit((i / n) as f64));
                let (xr, yr) = rotate_frame(x - center, y - center, xi);
                (xr + center, yr + center)
            })
            .collect();
        let eval = |f: &FourierFieldSpec| coords.iter().map(|&(x, y)| f.evaluate(x, y)).collect();
        [
            eval(&self.theta),
            eval(&self.axis[0]),
            eval(&self.axis[1]),
            eval(&self.axis[2]),
        ]
    }

    /// Rescales, normalizes and canonicalizes into a process map.
    ///
    /// Fails when some pixel's rescaled axis has (near-)zero length.
    pub fn to_process<T: Real>(&self, n: usize) -> Result<ProcessMap<T>> {
        let [theta, nx, ny, nz] = self.raw_fields::<T>(n);
        let theta = rescale(&theta, T::zero(), T::PI());
        let axes = [nx, ny, nz].map(|f| rescale(&f, -T::one(), T::one()));
        let mut params = Vec::with_capacity(n * n);
        for (i, &t) in theta.iter().enumerate() {
            let v = [axes[0][i], axes[1][i], axes[2][i]];
            if norm3(v) < T::lit(MIN_AXIS_NORM) {
                return Err(Error::DegenerateProcess);
            }
            params.push(AxisAngle::new(t, v)?);
        }
        Ok(canonicalize_sign(&ProcessMap::new(n, params)?))
    }
}

/// Counter-clockwise rotation of `(x, y)` by `xi` about the origin.
#[inline]
pub fn rotate_frame<T: Real>(x: T, y: T, xi: T) -> (T, T) {
    let (s, c) = xi.sin_cos();
    (c * x - s * y, s * x + c * y)
}

/// Min-max rescale onto `[lo, hi]`; a constant field maps to the midpoint.
fn rescale<T: Real>(values: &[T], lo: T, hi: T) -> Vec<T> {
    let (min, max) = values
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let range = max - min;
    if !(range >= T::lit(CONSTANT_RANGE)) {
        let mid = (lo + hi) * T::lit(0.5);
        return vec![mid; values.len()];
    }
    values
        .iter()
        .map(|&v| (lo + (v - min) / range * (hi - lo)).max(lo).min(hi))
        .collect()
}

/// Random smooth process: four Fourier fields for `(Θ, n_x, n_y, n_z)`, rescaled,
/// normalized, frame-rotated and sign-canonicalized.
///
/// Degenerate draws are redrawn from a seed derived from `cfg.seed` and the attempt number.
pub fn random_process<T: Real>(cfg: &GeneratorConfig) -> Result<ProcessMap<T>> {
    random_process_from(cfg, None)
}

/// Like [`random_process`], but tries `first` before any random draw.
pub fn random_process_from<T: Real>(
    cfg: &GeneratorConfig,
    first: Option<ProcessFields>,
) -> Result<ProcessMap<T>> {
    cfg.validate()?;
    if let Some(fields) = first {
        match fields.to_process(cfg.n_pixels) {
            Err(Error::DegenerateProcess) => {}
            other => return other,
        }
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(cfg.seed, attempt);
        let fields = ProcessFields::random(&mut rng, cfg);
        match fields.to_process(cfg.n_pixels) {
            Err(Error::DegenerateProcess) => continue,
            other => return other,
        }
    }
    Err(Error::DegenerateProcess)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotate_frame_examples() {
        assert_eq!(rotate_frame(0.3, -0.7, 0.0), (0.3, -0.7));
        let (x, y) = rotate_frame(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        assert!(x.abs() < 1e-15 && (y - 1.0).abs() < 1e-15);
        let (x, y) = rotate_frame(1.0, 0.0, 5f64.to_radians());
        assert!((x - 0.99619).abs() < 5e-6 && (y - 0.08716).abs() < 5e-6);
    }

    #[test]
    fn all_zero_override_is_redrawn() {
        let cfg = GeneratorConfig::new(8, 17);
        let zero = ProcessFields {
            theta: FourierFieldSpec::zero(8),
            axis: std::array::from_fn(|_| FourierFieldSpec::zero(8)),
            xi: 0.0,
        };
        assert!(matches!(
            zero.to_process::<f64>(8),
            Err(Error::DegenerateProcess)
        ));
        let m = random_process_from::<f64>(&cfg, Some(zero)).unwrap();
        assert_eq!(m, random_process::<f64>(&cfg).unwrap());
    }

    #[test]
    fn constant_field_maps_to_midpoint() {
        let v = rescale(&[0.25_f64; 6], 0.0, std::f64::consts::PI);
        assert!(v.iter().all(|&x| x == std::f64::consts::FRAC_PI_2));
        let v = rescale(&[2.0_f64, 4.0, 3.0], -1.0, 1.0);
        assert_eq!(v, vec![-1.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_axis_pixel_is_degenerate() {
        let n = 4;
        let mut nz = vec![[0.0; 4]; 2];
        nz[1] = [0.0, 0.0, 1.0, 0.0];
        let fields = ProcessFields {
            theta: FourierFieldSpec::zero(n),
            axis: [
                FourierFieldSpec::zero(n),
                FourierFieldSpec::zero(n),
                FourierFieldSpec::new(1, 0, nz, n).unwrap(),
            ],
            xi: 0.0,
        };
        // n_z = sin(2πx/4) spans [-1, 1]: columns 1 and 3 give ±z, columns 0 and 2 vanish.
        assert!(matches!(
            fields.to_process::<f64>(n),
            Err(Error::DegenerateProcess)
        ));
    }

    #[test]
    fn deterministic_and_canonical() {
        let cfg = GeneratorConfig::new(16, 99);
        let a = random_process::<f64>(&cfg).unwrap();
        let b = random_process::<f64>(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.is_canonicalized());
        assert!(a.get(0, 0).axis()[2] >= 0.0);
        let c = random_process::<f64>(&GeneratorConfig::new(16, 100)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn theta_spans_full_range() {
        let m = random_process::<f64>(&GeneratorConfig::new(16, 5)).unwrap();
        // canonicalization may reflect Θ → π − Θ, which keeps the range [0, π]
        let (lo, hi) = m.params().iter().fold((f64::MAX, f64::MIN), |(a, b), p| {
            (a.min(p.theta()), b.max(p.theta()))
        });
        assert!(lo.abs() < 1e-12 && (hi - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = GeneratorConfig::new(1, 0);
        assert!(cfg.validate().is_err());
        cfg.n_pixels = 8;
        cfg.xi_max = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn f32_generation_works() {
        let m = random_process::<f32>(&GeneratorConfig::new(8, 1)).unwrap();
        assert_eq!(m.params().len(), 64);
    }
}
