use rand::Rng;
use serde::{Deserialize, Serialize};

use super::fourier::{FourierFieldSpec, MAX_OMEGA_PLATE};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::su2::{
    axis_angle_from_su2, canonicalize_sign, compose, waveplate, ProcessMap, Su2Matrix,
};

/// A patterned waveplate. Lengths (`lambda`) share the unit of the [`Window`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PlateSpec {
    /// Optic axis fixed at `alpha0`.
    Uniform {
        delta: f64,
        #[serde(default)]
        alpha0: f64,
    },
    /// Polarization grating along x: `α = alpha0 + πx/Λ`.
    GPlateX {
        delta: f64,
        lambda: f64,
        #[serde(default)]
        alpha0: f64,
    },
    /// Polarization grating along y: `α = alpha0 + πy/Λ`.
    GPlateY {
        delta: f64,
        lambda: f64,
        #[serde(default)]
        alpha0: f64,
    },
    /// Azimuthal pattern `α = alpha0 + q·atan2(y, x)`, singular at the window center.
    QPlate {
        delta: f64,
        q: f64,
        #[serde(default)]
        alpha0: f64,
    },
}

impl PlateSpec {
    pub fn uniform(delta: f64) -> Self {
        Self::Uniform { delta, alpha0: 0.0 }
    }

    pub fn g_plate_x(delta: f64, lambda: f64) -> Self {
        Self::GPlateX {
            delta,
            lambda,
            alpha0: 0.0,
        }
    }

    pub fn g_plate_y(delta: f64, lambda: f64) -> Self {
        Self::GPlateY {
            delta,
            lambda,
            alpha0: 0.0,
        }
    }

    pub fn q_plate(delta: f64, q: f64) -> Self {
        Self::QPlate {
            delta,
            q,
            alpha0: 0.0,
        }
    }

    /// The uniform quarter-wave plate `W = (σ0 + iσx)/√2`.
    pub fn w() -> Self {
        Self::uniform(std::f64::consts::FRAC_PI_2)
    }

    pub fn validate(&self) -> Result<()> {
        let (delta, alpha0) = match *self {
            Self::Uniform { delta, alpha0 } => (delta, alpha0),
            Self::GPlateX {
                delta,
                lambda,
                alpha0,
            }
            | Self::GPlateY {
                delta,
                lambda,
                alpha0,
            } => {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::invalid(
                        "plate",
                        format!("g-plate period {lambda} must be positive"),
                    ));
                }
                (delta, alpha0)
            }
            Self::QPlate { delta, q, alpha0 } => {
                if !q.is_finite() || (2.0 * q).fract() != 0.0 {
                    return Err(Error::invalid(
                        "plate",
                        format!("q-plate charge {q} must be a half-integer"),
                    ));
                }
                (delta, alpha0)
            }
        };
        if !delta.is_finite() || !alpha0.is_finite() {
            return Err(Error::invalid(
                "plate",
                "retardance and offset must be finite",
            ));
        }
        Ok(())
    }

    pub fn delta(&self) -> f64 {
        match *self {
            Self::Uniform { delta, .. }
            | Self::GPlateX { delta, .. }
            | Self::GPlateY { delta, .. }
            | Self::QPlate { delta, .. } => delta,
        }
    }

    /// Optic-axis angle at physical coordinates `(x, y)`.
    pub fn alpha(&self, x: f64, y: f64) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Self::Uniform { alpha0, .. } => alpha0,
            Self::GPlateX { lambda, alpha0, .. } => alpha0 + PI * x / lambda,
            Self::GPlateY { lambda, alpha0, .. } => alpha0 + PI * y / lambda,
            Self::QPlate { q, alpha0, .. } => alpha0 + q * y.atan2(x),
        }
    }

    pub fn gate<T: Real>(&self, x: f64, y: f64) -> Su2Matrix<T> {
        waveplate(T::lit(self.delta()), T::lit(self.alpha(x, y)))
    }
}

/// Square physical region `[-h, h]²` imaged onto the pixel grid.
///
/// Pixel `(row, col)` samples its center; `x` grows with `col`, `y` grows upward (against
/// `row`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub half_extent: f64,
}

impl Window {
    pub fn new(half_extent: f64) -> Result<Self> {
        if !(half_extent > 0.0) || !half_extent.is_finite() {
            return Err(Error::invalid("window", "half extent must be positive"));
        }
        Ok(Self { half_extent })
    }

    /// Window in pixel units: lengths are measured in pixels.
    pub fn pixels(n: usize) -> Self {
        Self {
            half_extent: n as f64 / 2.0,
        }
    }

    /// `[-2Λ, 2Λ]²` for the longest g-plate period in the stack; unit half-extent otherwise.
    pub fn default_for(plates: &[PlateSpec]) -> Self {
        let lambda = plates
            .iter()
            .filter_map(|p| match *p {
                PlateSpec::GPlateX { lambda, .. } | PlateSpec::GPlateY { lambda, .. } => {
                    Some(lambda)
                }
                _ => None,
            })
            .fold(0.0_f64, f64::max);
        Self {
            half_extent: if lambda > 0.0 { 2.0 * lambda } else { 1.0 },
        }
    }

    /// Physical coordinates of the center of pixel `(row, col)`.
    pub fn coords(&self, n: usize, row: usize, col: usize) -> (f64, f64) {
        let step = 2.0 * self.half_extent / n as f64;
        let x = -self.half_extent + (col as f64 + 0.5) * step;
        let y = self.half_extent - (row as f64 + 0.5) * step;
        (x, y)
    }
}

/// Process map of a stack of plates given in optical order (first plate hit first).
pub fn plate_process<T: Real>(
    plates: &[PlateSpec],
    n: usize,
    window: Window,
) -> Result<ProcessMap<T>> {
    plate_gates(plates, n, window).map(|gates| gates_to_map(n, &gates))
}

/// Per-pixel composed gates, row-major, before any sign canonicalization.
pub fn plate_gates<T: Real>(
    plates: &[PlateSpec],
    n: usize,
    window: Window,
) -> Result<Vec<Su2Matrix<T>>> {
    if plates.is_empty() {
        return Err(Error::EmptyComposition);
    }
    if n == 0 {
        return Err(Error::invalid("plate process", "n_pixels must be positive"));
    }
    for p in plates {
        p.validate()?;
    }
    let mut gates = Vec::with_capacity(n * n);
    let mut scratch = Vec::with_capacity(plates.len());
    for row in 0..n {
        for col in 0..n {
            let (x, y) = window.coords(n, row, col);
            scratch.clear();
            scratch.extend(plates.iter().map(|p| p.gate::<T>(x, y)));
            gates.push(compose(&scratch)?);
        }
    }
    Ok(gates)
}

fn gates_to_map<T: Real>(n: usize, gates: &[Su2Matrix<T>]) -> ProcessMap<T> {
    let params = gates.iter().map(axis_angle_from_su2).collect();
    canonicalize_sign(&ProcessMap::new(n, params).expect("n² gates"))
}

/// One random waveplate with a Fourier-patterned optic axis.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomPlate {
    pub delta: f64,
    /// `α(x, y)` on pixel coordinates `x = col`, `y = row`.
    pub alpha: FourierFieldSpec,
}

/// One- or two-plate stack with random retardances in `[0, 2π)` and optic-axis fields of
/// frequency at most 3.
pub fn random_plate_stack(seed: u64, n: usize) -> Vec<RandomPlate> {
    let mut rng = stream_rng(seed, 0);
    let count = rng.random_range(1..=2);
    (0..count)
        .map(|_| RandomPlate {
            delta: rng.random_range(0.0..std::f64::consts::TAU),
            alpha: FourierFieldSpec::random(&mut rng, MAX_OMEGA_PLATE, n),
        })
        .collect()
}

/// Per-pixel composed gates of a random plate stack.
pub fn random_plate_gates<T: Real>(plates: &[RandomPlate], n: usize) -> Result<Vec<Su2Matrix<T>>> {
    if plates.is_empty() {
        return Err(Error::EmptyComposition);
    }
    let alphas: Vec<Vec<T>> = plates.iter().map(|p| p.alpha.sample::<T>()).collect();
    (0..n * n)
        .map(|i| {
            let gates: Vec<_> = plates
                .iter()
                .zip(&alphas)
                .map(|(p, a)| waveplate(T::lit(p.delta), a[i]))
                .collect();
            compose(&gates)
        })
        .collect()
}

/// Random single- or two-plate process, canonicalized.
pub fn single_plate_random<T: Real>(seed: u64, n: usize) -> Result<ProcessMap<T>> {
    if n == 0 {
        return Err(Error::invalid("plate process", "n_pixels must be positive"));
    }
    let plates = random_plate_stack(seed, n);
    let gates = random_plate_gates::<T>(&plates, n)?;
    Ok(gates_to_map(n, &gates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::{map_fidelity, su2_from_axis_angle, AxisAngle};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn uniform_w_plate() {
        let m = plate_process::<f64>(&[PlateSpec::w()], 4, Window::pixels(4)).unwrap();
        let w = ProcessMap::uniform(4, AxisAngle::new(PI / 4.0, [-1.0, 0.0, 0.0]).unwrap());
        assert!((map_fidelity(&m, &w).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_stack_is_an_error() {
        assert!(matches!(
            plate_process::<f64>(&[], 4, Window::pixels(4)),
            Err(Error::EmptyComposition)
        ));
    }

    #[test]
    fn q_plate_axis_follows_azimuth() {
        let n = 16;
        let window = Window::pixels(n);
        let m = plate_process::<f64>(&[PlateSpec::q_plate(PI, 0.5)], n, window).unwrap();
        for row in 0..n {
            for col in 0..n {
                let p = m.get(row, col);
                let (x, y) = window.coords(n, row, col);
                let phi = y.atan2(x);
                assert!((p.theta() - FRAC_PI_2).abs() < 1e-12);
                assert!(p.axis()[2].abs() < 1e-12);
                // the axis is ±(cos φ, sin φ, 0)
                let dot = p.axis()[0] * phi.cos() + p.axis()[1] * phi.sin();
                assert!((dot.abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_plate_winds_around_center() {
        let n = 16;
        let m = plate_process::<f64>(&[PlateSpec::q_plate(PI, 0.5)], n, Window::pixels(n)).unwrap();
        let c = n / 2;
        let mut az: Vec<f64> = [(c - 1, c - 1), (c - 1, c), (c, c - 1), (c, c)]
            .iter()
            .map(|&(r, k)| m.get(r, k).spherical().azimuth)
            .collect();
        az.sort_by(f64::total_cmp);
        assert!(az[3] - az[0] > PI);
    }

    #[test]
    fn g_plate_is_periodic() {
        let n = 32;
        // lambda = 8 px, so a shift of 8 columns advances α by π
        let window = Window::pixels(n);
        let gates = plate_gates::<f64>(&[PlateSpec::g_plate_x(FRAC_PI_2, 8.0)], n, window).unwrap();
        for row in 0..n {
            for col in 0..n - 16 {
                for shift in [8, 16] {
                    let a = gates[row * n + col];
                    let b = gates[row * n + col + shift];
                    assert!((a.trace_overlap(&b).re - 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_plates_have_equatorial_axes() {
        let n = 12;
        let mut singles = 0;
        for seed in 0..40 {
            let plates = random_plate_stack(seed, n);
            if plates.len() != 1 {
                continue;
            }
            singles += 1;
            assert!((0.0..std::f64::consts::TAU).contains(&plates[0].delta));
            for g in random_plate_gates::<f64>(&plates, n).unwrap() {
                assert_eq!(axis_angle_from_su2(&g).axis()[2], 0.0);
            }
        }
        assert!(singles > 5);
    }

    #[test]
    fn two_plates_leave_the_equator() {
        let n = 12;
        let stack = [
            RandomPlate {
                delta: 1.0,
                alpha: FourierFieldSpec::new(0, 0, vec![[0.1, 0.0, 0.0, 0.0]], n).unwrap(),
            },
            RandomPlate {
                delta: 2.0,
                alpha: FourierFieldSpec::new(0, 0, vec![[0.7, 0.0, 0.0, 0.0]], n).unwrap(),
            },
        ];
        let g = random_plate_gates::<f64>(&stack, n).unwrap()[0];
        assert!(axis_angle_from_su2(&g).axis()[2].abs() > 1e-3);
    }

    #[test]
    fn single_plate_random_is_deterministic() {
        let a = single_plate_random::<f64>(8, 16).unwrap();
        let b = single_plate_random::<f64>(8, 16).unwrap();
        assert_eq!(a, b);
        assert!(a.is_canonicalized());
        let u = su2_from_axis_angle(&a.get(3, 3));
        assert!(u.unitarity_error() < 1e-12);
    }

    #[test]
    fn plate_spec_json() {
        let spec: PlateSpec =
            serde_json::from_str(r#"{"kind":"g_plate_y","delta":1.0,"lambda":2.5}"#).unwrap();
        assert_eq!(spec, PlateSpec::g_plate_y(1.0, 2.5));
        assert!(serde_json::from_str::<PlateSpec>(r#"{"kind":"g_plate_x","delta":1.0}"#).is_err());
        assert!(PlateSpec::g_plate_x(1.0, 0.0).validate().is_err());
        assert!(PlateSpec::q_plate(1.0, 0.3).validate().is_err());
    }

    #[test]
    fn default_window_covers_two_periods() {
        let w = Window::default_for(&[
            PlateSpec::w(),
            PlateSpec::g_plate_x(1.0, 2.5),
            PlateSpec::g_plate_y(1.0, 1.25),
        ]);
        assert_eq!(w.half_extent, 5.0);
        assert_eq!(
            Window::default_for(&[PlateSpec::q_plate(PI, 0.5)]).half_extent,
            1.0
        );
    }
}
