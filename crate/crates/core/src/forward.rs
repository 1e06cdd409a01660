//! Polarimetric forward model: the five-image measurement stack of a process map.

use num_complex::Complex;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::su2::{AxisAngle, ProcessMap, Su2Matrix};

/// Default Gaussian noise level on synthetic intensities.
pub const DEFAULT_SIGMA: f64 = 0.02;

/// The six Stokes polarization states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StokesState {
    L,
    R,
    H,
    V,
    D,
    A,
}

impl StokesState {
    pub const ALL: [StokesState; 6] = [Self::L, Self::R, Self::H, Self::V, Self::D, Self::A];

    /// Amplitudes in the circular basis `|L⟩ = (1,0)ᵀ`, `|R⟩ = (0,1)ᵀ`.
    pub fn amplitudes<T: Real>(self) -> [Complex<T>; 2] {
        let z = T::zero();
        let o = T::one();
        let h = T::FRAC_1_SQRT_2();
        match self {
            Self::L => [Complex::new(o, z), Complex::new(z, z)],
            Self::R => [Complex::new(z, z), Complex::new(o, z)],
            Self::H => [Complex::new(h, z), Complex::new(h, z)],
            Self::V => [Complex::new(h, z), Complex::new(-h, z)],
            Self::D => [Complex::new(h, z), Complex::new(z, h)],
            Self::A => [Complex::new(h, z), Complex::new(z, -h)],
        }
    }

    /// The orthogonal partner within the same basis.
    pub fn orthogonal(self) -> Self {
        match self {
            Self::L => Self::R,
            Self::R => Self::L,
            Self::H => Self::V,
            Self::V => Self::H,
            Self::D => Self::A,
            Self::A => Self::D,
        }
    }
}

/// One of the five measurements `I_ab`: prepare `a`, project on `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measurement {
    LL,
    LH,
    LD,
    HH,
    HD,
}

impl Measurement {
    /// Stack order.
    pub const ALL: [Measurement; 5] = [Self::LL, Self::LH, Self::LD, Self::HH, Self::HD];

    pub fn states(self) -> (StokesState, StokesState) {
        use StokesState::*;
        match self {
            Self::LL => (L, L),
            Self::LH => (L, H),
            Self::LD => (L, D),
            Self::HH => (H, H),
            Self::HD => (H, D),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::LL => "LL",
            Self::LH => "LH",
            Self::LD => "LD",
            Self::HH => "HH",
            Self::HD => "HD",
        }
    }
}

/// `|⟨b|U|a⟩|²`.
pub fn projective_intensity<T: Real>(u: &Su2Matrix<T>, a: StokesState, b: StokesState) -> T {
    u.transition_probability(&a.amplitudes(), &b.amplitudes())
}

/// The five intensities of a single gate, in stack order.
pub fn pixel_intensities<T: Real>(u: &Su2Matrix<T>) -> [T; 5] {
    Measurement::ALL.map(|m| {
        let (a, b) = m.states();
        projective_intensity(u, a, b)
    })
}

/// The five intensities as quadratic forms in the gate quaternion.
///
/// With `U = q0σ0 − i q·σ` linear in `q`, each intensity is `qᵀ M q / qᵀq` for a fixed
/// real symmetric `M`. The reconstructors evaluate costs and gradients through these forms.
#[derive(Debug, Clone, Copy)]
pub struct IntensityForms<T> {
    forms: [[[T; 4]; 4]; 5],
}

impl<T: Real> IntensityForms<T> {
    pub fn new() -> Self {
        let basis: [Su2Matrix<T>; 4] = std::array::from_fn(|k| {
            let mut q = [T::zero(); 4];
            q[k] = T::one();
            Su2Matrix::from_quaternion(q)
        });
        let forms = Measurement::ALL.map(|m| {
            let (a, b) = m.states();
            let (a, b) = (a.amplitudes::<T>(), b.amplitudes::<T>());
            let z: [Complex<T>; 4] = basis.map(|g| {
                let ga = [
                    g.get(0, 0) * a[0] + g.get(0, 1) * a[1],
                    g.get(1, 0) * a[0] + g.get(1, 1) * a[1],
                ];
                b[0].conj() * ga[0] + b[1].conj() * ga[1]
            });
            let mut form = [[T::zero(); 4]; 4];
            for (j, row) in form.iter_mut().enumerate() {
                for (k, entry) in row.iter_mut().enumerate() {
                    *entry = (z[j] * z[k].conj()).re;
                }
            }
            form
        });
        Self { forms }
    }

    pub fn form(&self, index: usize) -> &[[T; 4]; 4] {
        &self.forms[index]
    }

    /// Intensities of the unit quaternion `q`.
    #[inline]
    pub fn intensities(&self, q: &[T; 4]) -> [T; 5] {
        self.forms.map(|m| quad(&m, q))
    }
}

impl<T: Real> Default for IntensityForms<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[inline]
pub(crate) fn quad<T: Real>(m: &[[T; 4]; 4], q: &[T; 4]) -> T {
    let mut acc = T::zero();
    for j in 0..4 {
        let mut row = T::zero();
        for k in 0..4 {
            row += m[j][k] * q[k];
        }
        acc += q[j] * row;
    }
    acc
}

/// Five `N×N` intensity images ordered `(I_LL, I_LH, I_LD, I_HH, I_HD)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStack<T> {
    n: usize,
    images: [Vec<T>; 5],
    sigma: Option<T>,
}

impl<T: Real> MeasurementStack<T> {
    /// Wraps raw images, which must all hold `n²` finite values.
    pub fn from_images(n: usize, images: [Vec<T>; 5], sigma: Option<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid(
                "measurement stack",
                "side length must be positive",
            ));
        }
        for (img, m) in images.iter().zip(Measurement::ALL) {
            if img.len() != n * n {
                return Err(Error::invalid(
                    "measurement stack",
                    format!(
                        "image {} has {} values, expected {}",
                        m.label(),
                        img.len(),
                        n * n
                    ),
                ));
            }
            if img.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(
                    "measurement stack",
                    format!("image {} has non-finite values", m.label()),
                ));
            }
        }
        if let Some(s) = sigma {
            if !(s >= T::zero()) {
                return Err(Error::invalid(
                    "measurement stack",
                    "sigma must be non-negative",
                ));
            }
        }
        Ok(Self { n, images, sigma })
    }

    #[cfg(test)]
    pub(crate) fn from_images_unchecked(n: usize, images: [Vec<T>; 5]) -> Self {
        Self {
            n,
            images,
            sigma: None,
        }
    }

    #[inline]
    pub fn n_pixels(&self) -> usize {
        self.n
    }

    pub fn images(&self) -> &[Vec<T>; 5] {
        &self.images
    }

    pub fn image(&self, m: Measurement) -> &[T] {
        &self.images[m as usize]
    }

    pub fn is_noisy(&self) -> bool {
        self.sigma.is_some()
    }

    pub fn sigma(&self) -> Option<T> {
        self.sigma
    }

    /// The five values at one pixel, in stack order.
    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> [T; 5] {
        let i = row * self.n + col;
        std::array::from_fn(|p| self.images[p][i])
    }

    /// Copy with every value clamped to `[0, 1]`, for image export.
    pub fn clamped(&self) -> Self {
        Self {
            n: self.n,
            images: self.images.clone().map(|img| {
                img.into_iter()
                    .map(|v| v.max(T::zero()).min(T::one()))
                    .collect()
            }),
            sigma: self.sigma,
        }
    }
}

/// Noiseless five-image stack of a process map.
pub fn measurement_stack<T: Real>(m: &ProcessMap<T>) -> MeasurementStack<T> {
    let n = m.n_pixels();
    let per_pixel: Vec<[T; 5]> = m
        .params()
        .par_iter()
        .map(|p| pixel_intensities(&crate::su2::su2_from_axis_angle(p)))
        .collect();
    let images = std::array::from_fn(|k| per_pixel.iter().map(|v| v[k]).collect());
    MeasurementStack {
        n,
        images,
        sigma: None,
    }
}

/// Intensities of a single axis-angle gate, in stack order.
pub fn axis_angle_intensities<T: Real>(p: &AxisAngle<T>) -> [T; 5] {
    pixel_intensities(&crate::su2::su2_from_axis_angle(p))
}

/// Adds i.i.d. `N(0, sigma)` noise to every value; values are not clamped.
///
/// Each image row draws from its own stream derived from `seed`, so the result is
/// independent of thread count.
pub fn add_noise<T: Real>(
    s: &MeasurementStack<T>,
    sigma: T,
    seed: u64,
) -> Result<MeasurementStack<T>> {
    if s.is_noisy() {
        return Err(Error::invalid("add_noise", "stack already carries noise"));
    }
    if !(sigma >= T::zero()) || !sigma.is_finite() {
        return Err(Error::invalid(
            "add_noise",
            format!("sigma {sigma} must be finite and >= 0"),
        ));
    }
    if sigma == T::zero() {
        return Ok(MeasurementStack {
            sigma: Some(sigma),
            ..s.clone()
        });
    }
    let n = s.n;
    let normal = Normal::new(0.0, sigma.as_f64()).expect("validated sigma");
    let images = std::array::from_fn(|p| {
        let mut img = s.images[p].clone();
        img.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let mut rng = stream_rng(seed, (p * n + row) as u64);
            for v in chunk {
                *v += T::lit(normal.sample(&mut rng));
            }
        });
        img
    });
    Ok(MeasurementStack {
        n,
        images,
        sigma: Some(sigma),
    })
}

/// `Σ_p Σ_xy |I_a − I_b|² / 5N²`.
pub fn polarimetric_infidelity<T: Real>(
    a: &MeasurementStack<T>,
    b: &MeasurementStack<T>,
) -> Result<T> {
    if a.n != b.n {
        return Err(Error::SizeMismatch {
            left: a.n,
            right: b.n,
        });
    }
    let mut acc = T::zero();
    for (ia, ib) in a.images.iter().zip(&b.images) {
        for (&x, &y) in ia.iter().zip(ib) {
            let d = x - y;
            acc += d * d;
        }
    }
    Ok(acc / T::lit((5 * a.n * a.n) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::su2::waveplate;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn identity_map(n: usize) -> ProcessMap<f64> {
        ProcessMap::uniform(n, AxisAngle::identity())
    }

    fn x_map(n: usize) -> ProcessMap<f64> {
        ProcessMap::uniform(n, AxisAngle::new(FRAC_PI_2, [-1.0, 0.0, 0.0]).unwrap())
    }

    #[test]
    fn stokes_states_are_unit_and_orthogonal() {
        for s in StokesState::ALL {
            let a = s.amplitudes::<f64>();
            assert!((a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs() < 1e-15);
            let b = s.orthogonal().amplitudes::<f64>();
            assert!((a[0].conj() * b[0] + a[1].conj() * b[1]).norm() < 1e-15);
        }
    }

    #[test]
    fn projective_intensity_examples() {
        use StokesState::*;
        let id = Su2Matrix::<f64>::identity();
        assert!((projective_intensity(&id, L, L) - 1.0).abs() < 1e-15);
        let x = waveplate(PI, 0.0);
        assert!(projective_intensity(&x, L, L).abs() < 1e-15);
        assert!((projective_intensity(&x, H, H) - 1.0).abs() < 1e-15);
        let w = waveplate(FRAC_PI_2, 0.0);
        assert!((projective_intensity(&w, L, L) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stack_examples() {
        let s = measurement_stack(&identity_map(3));
        for (img, want) in s.images().iter().zip([1.0, 0.5, 0.5, 1.0, 0.5]) {
            assert!(img.iter().all(|v| (v - want).abs() < 1e-15));
        }
        let s = measurement_stack(&x_map(3));
        for (img, want) in s.images().iter().zip([0.0, 0.5, 0.5, 1.0, 0.5]) {
            assert!(img.iter().all(|v| (v - want).abs() < 1e-15));
        }
        assert!(!s.is_noisy());
    }

    #[test]
    fn stack_is_sign_blind() {
        let m = ProcessMap::from_fn(4, |r, c| {
            AxisAngle::new(
                0.2 + 0.6 * r as f64,
                [0.3 * c as f64 - 0.5, 0.7, 0.1 * r as f64 - 0.2],
            )
            .unwrap()
        });
        let a = measurement_stack(&m);
        let b = measurement_stack(&m.negated());
        for (x, y) in a.images().iter().zip(b.images()) {
            for (u, v) in x.iter().zip(y) {
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadratic_forms_match_matrix_route() {
        let forms = IntensityForms::<f64>::new();
        let p = AxisAngle::new(1.1, [0.3, -0.6, 0.7]).unwrap();
        let direct = axis_angle_intensities(&p);
        let via = forms.intensities(&p.quaternion());
        for k in 0..5 {
            assert!((direct[k] - via[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn noise_examples() {
        let clean = measurement_stack(&identity_map(8));
        let same = add_noise(&clean, 0.0, 3).unwrap();
        assert_eq!(same.images(), clean.images());
        assert!(same.is_noisy());
        let a = add_noise(&clean, 0.02, 11).unwrap();
        let b = add_noise(&clean, 0.02, 11).unwrap();
        assert_eq!(a, b);
        let c = add_noise(&clean, 0.02, 12).unwrap();
        assert_ne!(a, c);
        assert!(add_noise(&a, 0.02, 1).is_err());
        assert!(add_noise(&clean, -1.0, 1).is_err());
    }

    #[test]
    fn noise_is_unbiased() {
        let clean = measurement_stack(&x_map(64));
        let sigma = 0.02;
        let noisy = add_noise(&clean, sigma, 5).unwrap();
        let count = 5.0 * 64.0 * 64.0;
        let mean: f64 = noisy
            .images()
            .iter()
            .zip(clean.images())
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y))
            .sum::<f64>()
            / count;
        assert!(mean.abs() <= 4.0 * sigma / f64::sqrt(count), "mean {mean}");
        // unclamped: an all-zero image must pick up negative values
        assert!(noisy.image(Measurement::LL).iter().any(|&v| v < 0.0));
    }

    #[test]
    fn noise_is_thread_count_independent() {
        let clean = measurement_stack(&identity_map(16));
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| add_noise(&clean, 0.02, 9).unwrap());
        let b = four.install(|| add_noise(&clean, 0.02, 9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn infidelity_examples() {
        let a = measurement_stack(&identity_map(4));
        let b = measurement_stack(&x_map(4));
        assert_eq!(polarimetric_infidelity(&a, &a).unwrap(), 0.0);
        assert!((polarimetric_infidelity(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(
            polarimetric_infidelity(&a, &b).unwrap(),
            polarimetric_infidelity(&b, &a).unwrap()
        );
        let c = measurement_stack(&identity_map(5));
        assert!(polarimetric_infidelity(&a, &c).is_err());
    }

    #[test]
    fn from_images_validates() {
        let ok = [
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 4],
        ];
        assert!(MeasurementStack::<f64>::from_images(2, ok.clone(), None).is_ok());
        let mut short = ok.clone();
        short[3].pop();
        assert!(MeasurementStack::<f64>::from_images(2, short, None).is_err());
        let mut nan = ok;
        nan[0][1] = f64::NAN;
        assert!(MeasurementStack::<f64>::from_images(2, nan, None).is_err());
    }
}
