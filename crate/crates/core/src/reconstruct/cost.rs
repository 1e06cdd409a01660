use crate::error::{Error, Result};
use crate::forward::{axis_angle_intensities, IntensityForms, MeasurementStack};
use crate::scalar::Real;
use crate::su2::{AxisAngle, DEGENERATE_SIN};

/// The five measured intensities at one pixel, in stack order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelObservation<T>(pub [T; 5]);

impl<T: Real> PixelObservation<T> {
    pub fn new(values: [T; 5]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("pixel observation", "non-finite intensity"));
        }
        Ok(Self(values))
    }

    pub fn from_stack(stack: &MeasurementStack<T>, row: usize, col: usize) -> Self {
        Self(stack.pixel(row, col))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Squared distance between observed and predicted intensities.
pub fn pixel_cost<T: Real>(candidate: &AxisAngle<T>, obs: &PixelObservation<T>) -> T {
    let predicted = axis_angle_intensities(candidate);
    squared_distance(&predicted, &obs.0)
}

#[inline]
pub(crate) fn squared_distance<T: Real>(a: &[T; 5], b: &[T; 5]) -> T {
    let mut acc = T::zero();
    for k in 0..5 {
        let d = a[k] - b[k];
        acc += d * d;
    }
    acc
}

/// [`pixel_cost`] evaluated on a unit quaternion through the quadratic forms.
#[inline]
pub(crate) fn quaternion_cost<T: Real>(forms: &IntensityForms<T>, q: &[T; 4], obs: &[T; 5]) -> T {
    squared_distance(&forms.intensities(q), obs)
}

/// Tie tolerance for choosing the `n_z ≥ 0` representative.
const TIE_TOL: f64 = 1e-6;

/// Of the pair `{q, −q}`, the one whose axis has `n_z > 0`, or on a tie `n_x > 0`, then
/// `n_y > 0`. A degenerate pair (`±I`) resolves to the identity side.
pub fn representative<T: Real>(q: [T; 4]) -> AxisAngle<T> {
    let p = AxisAngle::from_quaternion(q);
    if p.is_degenerate(T::lit(DEGENERATE_SIN)) {
        return if p.theta() > T::FRAC_PI_2() {
            p.negated()
        } else {
            p
        };
    }
    let tie = T::lit(TIE_TOL);
    let [x, y, z] = p.axis();
    let flip = if z.abs() > tie {
        z < T::zero()
    } else if x.abs() > tie {
        x < T::zero()
    } else {
        y < T::zero()
    };
    if flip {
        p.negated()
    } else {
        p
    }
}
