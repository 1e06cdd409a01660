use num_complex::Complex;

use super::{su2_from_axis_angle, AxisAngle, Su2Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A space-dependent gate: one [`AxisAngle`] per pixel of an `N×N` grid.
///
/// Pixels are stored row-major; row index `y` grows downward, so pixel `(0, 0)` is the
/// top-left corner and is the "first pixel" used by [`canonicalize_sign`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMap<T> {
    n: usize,
    params: Vec<AxisAngle<T>>,
    canonicalized: bool,
}

impl<T: Real> ProcessMap<T> {
    pub fn new(n: usize, params: Vec<AxisAngle<T>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid(
                "process map",
                "side length must be positive",
            ));
        }
        if params.len() != n * n {
            return Err(Error::invalid(
                "process map",
                format!("expected {} pixels, got {}", n * n, params.len()),
            ));
        }
        Ok(Self {
            n,
            params,
            canonicalized: false,
        })
    }

    pub fn uniform(n: usize, p: AxisAngle<T>) -> Self {
        Self {
            n,
            params: vec![p; n * n],
            canonicalized: false,
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> AxisAngle<T>) -> Self {
        let mut params = Vec::with_capacity(n * n);
        for row in 0..n {
            for col in 0..n {
                params.push(f(row, col));
            }
        }
        Self {
            n,
            params,
            canonicalized: false,
        }
    }

    #[inline]
    pub fn n_pixels(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> AxisAngle<T> {
        self.params[row * self.n + col]
    }

    pub fn params(&self) -> &[AxisAngle<T>] {
        &self.params
    }

    pub fn into_params(self) -> Vec<AxisAngle<T>> {
        self.params
    }

    pub fn is_canonicalized(&self) -> bool {
        self.canonicalized
    }

    pub fn gates(&self) -> impl Iterator<Item = Su2Matrix<T>> + '_ {
        self.params.iter().map(su2_from_axis_angle)
    }

    /// Every pixel replaced by its `−U` representative.
    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            params: self.params.iter().map(AxisAngle::negated).collect(),
            canonicalized: false,
        }
    }

    pub(crate) fn with_params(n: usize, params: Vec<AxisAngle<T>>, canonicalized: bool) -> Self {
        debug_assert_eq!(params.len(), n * n);
        Self {
            n,
            params,
            canonicalized,
        }
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::SizeMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    fn traces<'a>(&'a self, other: &'a Self) -> impl Iterator<Item = Complex<T>> + 'a {
        self.gates()
            .zip(other.gates())
            .map(|(a, b)| a.trace_overlap(&b))
    }
}

/// Removes the global `±U` ambiguity: if the first pixel has `n_z < 0`, every pixel becomes
/// `(π − Θ, −n)`. Idempotent.
pub fn canonicalize_sign<T: Real>(m: &ProcessMap<T>) -> ProcessMap<T> {
    if m.params[0].axis()[2] < T::zero() {
        ProcessMap::with_params(m.n, m.negated().params, true)
    } else {
        ProcessMap::with_params(m.n, m.params.clone(), true)
    }
}

/// `|Σ Tr(U_a† U_b)| / 2N²`: sensitive to relative signs between pixels.
pub fn map_fidelity<T: Real>(a: &ProcessMap<T>, b: &ProcessMap<T>) -> Result<T> {
    a.check_same_size(b)?;
    let sum = a
        .traces(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, t| acc + t);
    Ok(clamp_unit(sum.norm() / normalizer(a.n)))
}

/// `Σ |Tr(U_a† U_b)| / 2N²`: blind to relative signs between pixels.
pub fn pixel_fidelity<T: Real>(a: &ProcessMap<T>, b: &ProcessMap<T>) -> Result<T> {
    a.check_same_size(b)?;
    let sum = a.traces(b).fold(T::zero(), |acc, t| acc + t.norm());
    Ok(clamp_unit(sum / normalizer(a.n)))
}

fn normalizer<T: Real>(n: usize) -> T {
    T::lit(2.0 * (n * n) as f64)
}

// Rounding can push a perfect match a few ulps past 1.
fn clamp_unit<T: Real>(x: T) -> T {
    x.min(T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sample_map() -> ProcessMap<f64> {
        ProcessMap::from_fn(2, |r, c| {
            AxisAngle::new(
                0.3 + 0.5 * r as f64 + 0.2 * c as f64,
                [0.2, -0.3 * c as f64, 0.9],
            )
            .unwrap()
        })
    }

    #[test]
    fn canonicalize_examples() {
        let m = ProcessMap::uniform(3, AxisAngle::new(1.0, [0.0, 0.866, 0.5]).unwrap());
        let out = canonicalize_sign(&m);
        assert_eq!(out.params(), m.params());
        assert!(out.is_canonicalized());

        let m = ProcessMap::uniform(2, AxisAngle::new(PI / 3.0, [0.0, 0.0, -1.0]).unwrap());
        let out = canonicalize_sign(&m);
        for p in out.params() {
            assert!((p.theta() - 2.0 * PI / 3.0).abs() < 1e-15);
            assert_eq!(p.axis(), [0.0, 0.0, 1.0]);
        }

        let m = ProcessMap::uniform(2, AxisAngle::new(1.0, [1.0, 0.0, 0.0]).unwrap());
        assert_eq!(canonicalize_sign(&m).params(), m.params());
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let m = sample_map().negated();
        let once = canonicalize_sign(&m);
        assert_eq!(canonicalize_sign(&once), once);
        assert!(once.get(0, 0).axis()[2] >= 0.0);
    }

    #[test]
    fn fidelity_examples() {
        let m = sample_map();
        assert!((map_fidelity(&m, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((pixel_fidelity(&m, &m).unwrap() - 1.0).abs() < 1e-15);
        assert!((map_fidelity(&m, &m.negated()).unwrap() - 1.0).abs() < 1e-15);

        let mut params = m.params().to_vec();
        params[1] = params[1].negated();
        params[2] = params[2].negated();
        let half = ProcessMap::new(2, params).unwrap();
        assert!(map_fidelity(&m, &half).unwrap() < 1e-15);
        assert!((pixel_fidelity(&m, &half).unwrap() - 1.0).abs() < 1e-15);

        let id = ProcessMap::uniform(4, AxisAngle::identity());
        // iσx = −i(−σx): Θ = π/2, n = (−1, 0, 0)
        let x = ProcessMap::uniform(4, AxisAngle::new(FRAC_PI_2, [-1.0, 0.0, 0.0]).unwrap());
        assert!(pixel_fidelity(&id, &x).unwrap() < 1e-15);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = ProcessMap::<f64>::uniform(2, AxisAngle::identity());
        let b = ProcessMap::<f64>::uniform(3, AxisAngle::identity());
        assert!(matches!(
            map_fidelity(&a, &b),
            Err(Error::SizeMismatch { left: 2, right: 3 })
        ));
        assert!(pixel_fidelity(&a, &b).is_err());
    }

    #[test]
    fn new_checks_pixel_count() {
        assert!(ProcessMap::<f64>::new(2, vec![AxisAngle::identity(); 3]).is_err());
        assert!(ProcessMap::<f64>::new(0, vec![]).is_err());
    }
}
