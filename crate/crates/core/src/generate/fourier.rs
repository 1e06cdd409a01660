use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest frequency used for general training fields.
pub const MAX_OMEGA: usize = 5;
/// Largest frequency used for random optic-axis patterns of plate processes.
pub const MAX_OMEGA_PLATE: usize = 3;

/// Random band-limited field on an `N`-periodic grid:
///
/// `f(x,y) = Σ_{i≤Ωx, j≤Ωy} c1 cos(kx i) cos(ky j) + c2 cos sin + c3 sin cos + c4 sin sin`
/// with `k = 2π/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFieldSpec {
    omega_x: usize,
    omega_y: usize,
    /// `(Ωx+1)(Ωy+1)` quadruples, indexed `i * (Ωy+1) + j`.
    coeffs: Vec<[f64; 4]>,
    n: usize,
}

impl FourierFieldSpec {
    pub fn new(omega_x: usize, omega_y: usize, coeffs: Vec<[f64; 4]>, n: usize) -> Result<Self> {
        if omega_x > MAX_OMEGA || omega_y > MAX_OMEGA {
            return Err(Error::invalid(
                "fourier field",
                format!("frequencies ({omega_x}, {omega_y}) exceed {MAX_OMEGA}"),
            ));
        }
        if coeffs.len() != (omega_x + 1) * (omega_y + 1) {
            return Err(Error::invalid(
                "fourier field",
                format!(
                    "expected {} coefficient sets, got {}",
                    (omega_x + 1) * (omega_y + 1),
                    coeffs.len()
                ),
            ));
        }
        if coeffs.iter().flatten().any(|c| !(c.abs() <= 1.0)) {
            return Err(Error::invalid(
                "fourier field",
                "coefficients must lie in [-1, 1]",
            ));
        }
        if n == 0 {
            return Err(Error::invalid("fourier field", "period must be positive"));
        }
        Ok(Self {
            omega_x,
            omega_y,
            coeffs,
            n,
        })
    }

    /// All coefficients zero.
    pub fn zero(n: usize) -> Self {
        Self {
            omega_x: 0,
            omega_y: 0,
            coeffs: vec![[0.0; 4]],
            n,
        }
    }

    /// Draws `Ωx, Ωy` uniformly from `0..=max_omega` and every coefficient from `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_omega: usize, n: usize) -> Self {
        let max_omega = max_omega.min(MAX_OMEGA);
        let omega_x = rng.random_range(0..=max_omega);
        let omega_y = rng.random_range(0..=max_omega);
        let coeffs = (0..(omega_x + 1) * (omega_y + 1))
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
            .collect();
        Self {
            omega_x,
            omega_y,
            coeffs,
            n,
        }
    }

    pub fn omegas(&self) -> (usize, usize) {
        (self.omega_x, self.omega_y)
    }

    pub fn coeffs(&self) -> &[[f64; 4]] {
        &self.coeffs
    }

    pub fn period(&self) -> usize {
        self.n
    }

    /// Evaluates the series at continuous coordinates (pixel units).
    pub fn evaluate<T: Real>(&self, x: T, y: T) -> T {
        let k = T::TAU() / T::lit(self.n as f64);
        let ys: Vec<(T, T)> = (0..=self.omega_y)
            .map(|j| (k * T::lit(j as f64) * y).sin_cos())
            .collect();
        let mut acc = T::zero();
        for i in 0..=self.omega_x {
            let (sx, cx) = (k * T::lit(i as f64) * x).sin_cos();
            for (j, &(sy, cy)) in ys.iter().enumerate() {
                let [c1, c2, c3, c4] = self.coeffs[i * (self.omega_y + 1) + j].map(T::lit);
                acc += c1 * cx * cy + c2 * cx * sy + c3 * sx * cy + c4 * sx * sy;
            }
        }
        acc
    }

    /// Values on the `N×N` grid, row-major with `x = col`, `y = row`.
    pub fn sample<T: Real>(&self) -> Vec<T> {
        let n = self.n;
        (0..n * n)
            .map(|i| self.evaluate(T::lit((i % n) as f64), T::lit((i / n) as f64)))
            .collect()
    }
}

/// Same as [`FourierFieldSpec::sample`].
pub fn sample_fourier_field<T: Real>(spec: &FourierFieldSpec) -> Vec<T> {
    spec.sample()
}
