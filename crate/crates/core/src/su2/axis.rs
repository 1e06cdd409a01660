use crate::error::{Error, Result};
use crate::scalar::{wrap_two_pi, Real};

/// Below this `sin Θ` the rotation axis is unidentifiable and stored as `(0, 0, 1)`.
pub const DEGENERATE_SIN: f64 = 1e-9;

/// Rotation angle `Θ` and unit axis `n` of `exp(−iΘ n·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle<T> {
    theta: T,
    axis: [T; 3],
}

/// Polar/azimuthal angles of a unit axis on the Poincaré sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalAxis<T> {
    pub polar: T,
    pub azimuth: T,
}

impl<T: Real> AxisAngle<T> {
    /// Validates `theta ∈ [0, π]`, normalizes `axis`.
    ///
    /// `Θ = π` is accepted since it names `−I`, which is distinct from the identity.
    pub fn new(theta: T, axis: [T; 3]) -> Result<Self> {
        if !theta.is_finite() || axis.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("axis-angle", "non-finite component"));
        }
        let slack = T::tol(1e-12);
        if theta < -slack || theta > T::PI() + slack {
            return Err(Error::invalid(
                "axis-angle",
                format!("theta {theta} outside [0, π]"),
            ));
        }
        let theta = theta.max(T::zero()).min(T::PI());
        let norm = norm3(axis);
        if theta.sin() < T::lit(DEGENERATE_SIN) {
            return Ok(Self::degenerate(theta));
        }
        if norm < T::tol(1e-12) {
            return Err(Error::invalid("axis-angle", "zero-length axis"));
        }
        Ok(Self {
            theta,
            axis: axis.map(|a| a / norm),
        })
    }

    pub fn identity() -> Self {
        Self::degenerate(T::zero())
    }

    fn degenerate(theta: T) -> Self {
        Self {
            theta,
            axis: [T::zero(), T::zero(), T::one()],
        }
    }

    /// From any nonzero quaternion `(q0, q)`; the result has `sin Θ ≥ 0`.
    pub fn from_quaternion(q: [T; 4]) -> Self {
        let v = [q[1], q[2], q[3]];
        let vn = norm3(v);
        let theta = vn.atan2(q[0]);
        if theta.sin() < T::lit(DEGENERATE_SIN) {
            return Self::degenerate(theta);
        }
        Self {
            theta,
            axis: v.map(|a| a / vn),
        }
    }

    pub fn from_spherical(theta: T, s: SphericalAxis<T>) -> Result<Self> {
        Self::new(theta, s.to_axis())
    }

    #[inline]
    pub fn theta(&self) -> T {
        self.theta
    }

    #[inline]
    pub fn axis(&self) -> [T; 3] {
        self.axis
    }

    #[inline]
    pub fn quaternion(&self) -> [T; 4] {
        let (s, c) = self.theta.sin_cos();
        [c, s * self.axis[0], s * self.axis[1], s * self.axis[2]]
    }

    /// The measurement-equivalent representative of `−U`: `(π − Θ, −n)`.
    pub fn negated(&self) -> Self {
        let theta = T::PI() - self.theta;
        if theta.sin() < T::lit(DEGENERATE_SIN) {
            return Self::degenerate(theta);
        }
        Self {
            theta,
            axis: self.axis.map(|a| -a),
        }
    }

    pub fn spherical(&self) -> SphericalAxis<T> {
        spherical_from_axis(self.axis)
    }

    pub fn is_degenerate(&self, sin_threshold: T) -> bool {
        self.theta.sin() < sin_threshold
    }
}

impl<T: Real> SphericalAxis<T> {
    pub fn to_axis(&self) -> [T; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }
}

/// `polar = arccos n_z`, `azimuth = atan2(n_y, n_x) mod 2π`; azimuth is 0 at the poles.
pub fn spherical_from_axis<T: Real>(n: [T; 3]) -> SphericalAxis<T> {
    let polar = n[2].max(-T::one()).min(T::one()).acos();
    let azimuth = if n[0] == T::zero() && n[1] == T::zero() {
        T::zero()
    } else {
        wrap_two_pi(n[1].atan2(n[0]))
    };
    SphericalAxis { polar, azimuth }
}

#[inline]
pub(crate) fn norm3<T: Real>(v: [T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn spherical_examples() {
        let s = spherical_from_axis([0.0, 0.0, 1.0]);
        assert_eq!((s.polar, s.azimuth), (0.0, 0.0));
        let s = spherical_from_axis([-1.0, 0.0, 0.0]);
        assert!((s.polar - FRAC_PI_2).abs() < 1e-15 && (s.azimuth - PI).abs() < 1e-15);
        let s = spherical_from_axis([0.0, -1.0, 0.0]);
        assert!((s.polar - FRAC_PI_2).abs() < 1e-15 && (s.azimuth - 1.5 * PI).abs() < 1e-15);
        let s = spherical_from_axis([0.0, 0.0, -1.0]);
        assert_eq!((s.polar, s.azimuth), (PI, 0.0));
    }

    #[test]
    fn degenerate_angles_use_conventional_axis() {
        let p = AxisAngle::new(0.0, [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.axis(), [0.0, 0.0, 1.0]);
        let p = AxisAngle::new(PI, [0.0, 1.0, 0.0]).unwrap();
        assert_eq!(p.axis(), [0.0, 0.0, 1.0]);
        let p = AxisAngle::from_quaternion([-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.theta(), PI);
        assert_eq!(p.axis(), [0.0, 0.0, 1.0]);
        assert!(!p.axis().iter().any(|a| a.is_nan()));
    }

    #[test]
    fn rejects_invalid() {
        assert!(AxisAngle::new(-0.1, [0.0, 0.0, 1.0]).is_err());
        assert!(AxisAngle::new(3.5, [0.0, 0.0, 1.0]).is_err());
        assert!(AxisAngle::new(1.0, [0.0, 0.0, 0.0]).is_err());
        assert!(AxisAngle::new(f64::NAN, [0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn negation_flips_quaternion() {
        let p = AxisAngle::new(0.7_f64, [0.2, -0.4, 0.8]).unwrap();
        let q = p.quaternion();
        let nq = p.negated().quaternion();
        for k in 0..4 {
            assert!((q[k] + nq[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn spherical_round_trip() {
        let p = AxisAngle::new(1.2_f64, [0.3, -0.5, -0.2]).unwrap();
        let back = AxisAngle::from_spherical(p.theta(), p.spherical()).unwrap();
        for k in 0..3 {
            assert!((back.axis()[k] - p.axis()[k]).abs() < 1e-14);
        }
    }
}
