use std::ops::{Mul, Neg};

use num_complex::Complex;

use super::AxisAngle;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Drift threshold above which products are projected back onto SU(2).
const DRIFT_TOL: f64 = 1e-12;

/// A 2×2 special unitary matrix in the circular basis `{|L⟩, |R⟩}`.
///
/// Every SU(2) element can be written `q0·σ0 − i(q1·σx + q2·σy + q3·σz)` with a real unit
/// quaternion `q`; [`Su2Matrix::quaternion`] exposes that representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su2Matrix<T> {
    m: [[Complex<T>; 2]; 2],
}

#[inline]
fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

impl<T: Real> Su2Matrix<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[c(o, z), c(z, z)], [c(z, z), c(o, z)]],
        }
    }

    /// Builds a matrix from row-major entries, checking the SU(2) invariants.
    pub fn from_rows(m: [[Complex<T>; 2]; 2]) -> Result<Self> {
        let u = Self { m };
        let tol = T::tol(DRIFT_TOL) * T::lit(16.0);
        if u.unitarity_error() > tol {
            return Err(Error::invalid("SU(2) matrix", "not unitary"));
        }
        if u.det_error() > tol {
            return Err(Error::invalid("SU(2) matrix", "determinant is not 1"));
        }
        Ok(u)
    }

    /// Matrix from the quaternion `(q0, q1, q2, q3)`, normalized to unit length.
    pub fn from_quaternion(q: [T; 4]) -> Self {
        let norm = q.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        let [q0, q1, q2, q3] = q.map(|x| x / norm);
        Self {
            m: [[c(q0, -q3), c(-q2, -q1)], [c(q2, -q1), c(q0, q3)]],
        }
    }

    /// Real quaternion coordinates `(q0, q1, q2, q3)` with `U = q0σ0 − i q·σ`.
    ///
    /// For a matrix that has drifted off SU(2) this is the orthogonal projection onto the
    /// quaternion subspace, so normalizing it gives the Frobenius-nearest SU(2) element.
    pub fn quaternion(&self) -> [T; 4] {
        let [[a, b], [d, e]] = self.m;
        let half = T::lit(0.5);
        [
            (a.re + e.re) * half,
            -(b.im + d.im) * half,
            (d.re - b.re) * half,
            (e.im - a.im) * half,
        ]
    }

    pub fn entries(&self) -> [[Complex<T>; 2]; 2] {
        self.m
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [d, e]] = self.m;
        Self {
            m: [[a.conj(), d.conj()], [b.conj(), e.conj()]],
        }
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    /// `Tr(self† · other)`.
    pub fn trace_overlap(&self, other: &Self) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for r in 0..2 {
            for k in 0..2 {
                acc += self.m[r][k].conj() * other.m[r][k];
            }
        }
        acc
    }

    /// `max |U†U − I|` over entries.
    pub fn unitarity_error(&self) -> T {
        let p = self.adjoint().raw_mul(self);
        let mut err = T::zero();
        for r in 0..2 {
            for k in 0..2 {
                let target = if r == k { T::one() } else { T::zero() };
                err = err.max((p.m[r][k] - c(target, T::zero())).norm());
            }
        }
        err
    }

    pub fn det_error(&self) -> T {
        (self.det() - c(T::one(), T::zero())).norm()
    }

    /// Projects onto the nearest SU(2) element.
    pub fn reproject(&self) -> Self {
        Self::from_quaternion(self.quaternion())
    }

    /// `|⟨b|U|a⟩|²` for circular-basis amplitudes.
    #[inline]
    pub fn transition_probability(&self, a: &[Complex<T>; 2], b: &[Complex<T>; 2]) -> T {
        let ua0 = self.m[0][0] * a[0] + self.m[0][1] * a[1];
        let ua1 = self.m[1][0] * a[0] + self.m[1][1] * a[1];
        (b[0].conj() * ua0 + b[1].conj() * ua1).norm_sqr()
    }

    fn raw_mul(&self, rhs: &Self) -> Self {
        let mut m = [[c(T::zero(), T::zero()); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (k, out) in row.iter_mut().enumerate() {
                *out = self.m[r][0] * rhs.m[0][k] + self.m[r][1] * rhs.m[1][k];
            }
        }
        Self { m }
    }
}

impl<T: Real> Mul for Su2Matrix<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        self.raw_mul(&rhs)
    }
}

impl<T: Real> Neg for Su2Matrix<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            m: self.m.map(|row| row.map(|z| -z)),
        }
    }
}

/// `cos Θ σ0 − i sin Θ (n·σ)`.
pub fn su2_from_axis_angle<T: Real>(p: &AxisAngle<T>) -> Su2Matrix<T> {
    Su2Matrix::from_quaternion(p.quaternion())
}

/// Inverse of [`su2_from_axis_angle`] with `Θ ∈ [0, π]` and `sin Θ ≥ 0`.
pub fn axis_angle_from_su2<T: Real>(u: &Su2Matrix<T>) -> AxisAngle<T> {
    AxisAngle::from_quaternion(u.quaternion())
}

/// Waveplate with retardance `delta` and optic axis at `alpha` from horizontal.
pub fn waveplate<T: Real>(delta: T, alpha: T) -> Su2Matrix<T> {
    let delta = crate::scalar::wrap_two_pi(delta);
    let alpha = crate::scalar::wrap_two_pi(alpha);
    let half = delta * T::lit(0.5);
    let (s, co) = half.sin_cos();
    let two_alpha = alpha + alpha;
    let (s2, c2) = two_alpha.sin_cos();
    // i s e^{∓2iα} = s (±sin 2α + i cos 2α)
    Su2Matrix {
        m: [
            [c(co, T::zero()), c(s * s2, s * c2)],
            [c(-s * s2, s * c2), c(co, T::zero())],
        ],
    }
}

/// Cascades plates in optical order: the first plate in the slice acts first.
pub fn compose<T: Real>(plates: &[Su2Matrix<T>]) -> Result<Su2Matrix<T>> {
    let (first, rest) = plates.split_first().ok_or(Error::EmptyComposition)?;
    let tol = T::tol(DRIFT_TOL);
    let mut acc = *first;
    for plate in rest {
        acc = plate.raw_mul(&acc);
        if acc.unitarity_error() > tol || acc.det_error() > tol {
            acc = acc.reproject();
        }
    }
    Ok(acc)
}
