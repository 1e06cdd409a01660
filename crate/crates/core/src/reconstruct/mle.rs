use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cost::{quaternion_cost, representative, squared_distance, PixelObservation};
use super::stitch::stitch_signs;
use crate::error::{Error, Result};
use crate::forward::{IntensityForms, MeasurementStack};
use crate::scalar::Real;
use crate::su2::{canonicalize_sign, AxisAngle, ProcessMap};

/// Maximum-likelihood inversion settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    /// Distinct coarse-grid minima refined per pixel.
    pub n_starts: usize,
    /// Iteration cap of each local refinement.
    pub max_iters: usize,
    /// Refinement stops once an accepted step lowers the cost by less than this fraction.
    pub tolerance: f64,
    /// Coarse grid over `(Θ, polar, azimuth)`.
    pub grid: [usize; 3],
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            n_starts: 8,
            max_iters: 200,
            tolerance: 1e-12,
            grid: [24, 24, 48],
        }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_starts == 0 {
            return Err(Error::invalid("MLE config", "n_starts must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("MLE config", "tolerance must be positive"));
        }
        if self.grid.contains(&0) {
            return Err(Error::invalid(
                "MLE config",
                "grid dimensions must be positive",
            ));
        }
        Ok(())
    }
}

/// Result of a single-pixel inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFit<T> {
    /// The `n_z ≥ 0` representative of the fitted `±U` pair.
    pub params: AxisAngle<T>,
    pub cost: T,
    pub iterations: usize,
}

/// Per-pixel least-squares solver with a precomputed coarse grid.
///
/// The grid's predicted intensities do not depend on the data, so they are tabulated once
/// and reused for every pixel.
#[derive(Debug, Clone)]
pub struct MleSolver<T> {
    cfg: MleConfig,
    forms: IntensityForms<T>,
    grid_q: Vec<[T; 4]>,
    grid_i: Vec<[T; 5]>,
}

impl<T: Real> MleSolver<T> {
    pub fn new(cfg: MleConfig) -> Result<Self> {
        cfg.validate()?;
        let forms = IntensityForms::new();
        let [nt, np, na] = cfg.grid;
        let mut grid_q = Vec::with_capacity(nt * np * na);
        for it in 0..nt {
            let theta = T::PI() * T::lit(it as f64 / nt as f64);
            for ip in 0..np {
                let polar = T::PI() * T::lit((ip as f64 + 0.5) / np as f64);
                for ia in 0..na {
                    let azimuth = T::TAU() * T::lit(ia as f64 / na as f64);
                    let (st, ct) = theta.sin_cos();
                    let (sp, cp) = polar.sin_cos();
                    let (sa, ca) = azimuth.sin_cos();
                    grid_q.push([ct, st * sp * ca, st * sp * sa, st * cp]);
                }
            }
            if it == 0 {
                // Θ = 0 is the identity for every axis
                grid_q.truncate(1);
            }
        }
        let grid_i = grid_q.iter().map(|q| forms.intensities(q)).collect();
        Ok(Self {
            cfg,
            forms,
            grid_q,
            grid_i,
        })
    }

    pub fn config(&self) -> &MleConfig {
        &self.cfg
    }

    pub fn invert(&self, obs: &PixelObservation<T>) -> Result<PixelFit<T>> {
        if !obs.is_finite() {
            return Err(Error::invalid("pixel observation", "non-finite intensity"));
        }
        let starts = self.best_grid_points(&obs.0);
        let mut best: Option<([T; 4], T, usize)> = None;
        for q0 in starts {
            let (q, cost, iters) = self.refine(q0, &obs.0);
            if best.is_none_or(|(_, c, _)| cost < c) {
                best = Some((q, cost, iters));
            }
        }
        let (q, cost, iterations) = best.expect("at least one start");
        Ok(PixelFit {
            params: representative(q),
            cost,
            iterations,
        })
    }

    /// The `n_starts` lowest-cost grid points that are not `±` duplicates of each other.
    fn best_grid_points(&self, obs: &[T; 5]) -> Vec<[T; 4]> {
        let pool = 4 * self.cfg.n_starts;
        let mut top: Vec<(T, usize)> = Vec::with_capacity(pool + 1);
        for (idx, pred) in self.grid_i.iter().enumerate() {
            let c = squared_distance(pred, obs);
            if top.len() == pool && c >= top[pool - 1].0 {
                continue;
            }
            let at = top.partition_point(|&(tc, _)| tc <= c);
            top.insert(at, (c, idx));
            top.truncate(pool);
        }
        let close = T::lit(0.999);
        let mut chosen: Vec<[T; 4]> = Vec::with_capacity(self.cfg.n_starts);
        for (_, idx) in top {
            let q = self.grid_q[idx];
            if chosen.iter().all(|c| dot4(c, &q).abs() < close) {
                chosen.push(q);
                if chosen.len() == self.cfg.n_starts {
                    break;
                }
            }
        }
        chosen
    }

    /// Levenberg-Marquardt on the unit 3-sphere of quaternions.
    fn refine(&self, start: [T; 4], obs: &[T; 5]) -> ([T; 4], T, usize) {
        let two = T::lit(2.0);
        let tol = T::lit(self.cfg.tolerance);
        let mut q = start;
        let mut cost = quaternion_cost(&self.forms, &q, obs);
        let mut lambda = T::lit(1e-3);
        let mut iters = 0;
        while iters < self.cfg.max_iters && cost > T::min_positive_value() {
            iters += 1;
            let predicted = self.forms.intensities(&q);
            let mut jac = [[T::zero(); 4]; 5];
            let mut res = [T::zero(); 5];
            for p in 0..5 {
                res[p] = predicted[p] - obs[p];
                let m = self.forms.form(p);
                for j in 0..4 {
                    let mq = m[j][0] * q[0] + m[j][1] * q[1] + m[j][2] * q[2] + m[j][3] * q[3];
                    jac[p][j] = two * (mq - predicted[p] * q[j]);
                }
            }
            let mut h = [[T::zero(); 4]; 4];
            let mut g = [T::zero(); 4];
            for p in 0..5 {
                for j in 0..4 {
                    g[j] += jac[p][j] * res[p];
                    for k in 0..4 {
                        h[j][k] += jac[p][j] * jac[p][k];
                    }
                }
            }
            let mut accepted = false;
            while lambda < T::lit(1e12) {
                let mut damped = h;
                for (j, row) in damped.iter_mut().enumerate() {
                    row[j] += lambda;
                }
                let Some(step) = solve_spd(damped, g.map(|v| -v)) else {
                    lambda *= T::lit(10.0);
                    continue;
                };
                let trial = normalize4([
                    q[0] + step[0],
                    q[1] + step[1],
                    q[2] + step[2],
                    q[3] + step[3],
                ]);
                let trial_cost = quaternion_cost(&self.forms, &trial, obs);
                if trial_cost < cost {
                    let decrease = cost - trial_cost;
                    q = trial;
                    let old = cost;
                    cost = trial_cost;
                    lambda = (lambda * T::lit(0.3)).max(T::lit(1e-15));
                    accepted = true;
                    if decrease <= tol * old {
                        return (q, cost, iters);
                    }
                    break;
                }
                lambda *= T::lit(10.0);
            }
            if !accepted {
                break;
            }
        }
        (q, cost, iters)
    }
}

#[inline]
fn dot4<T: Real>(a: &[T; 4], b: &[T; 4]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

#[inline]
fn normalize4<T: Real>(q: [T; 4]) -> [T; 4] {
    let n = dot4(&q, &q).sqrt();
    q.map(|v| v / n)
}

/// Cholesky solve of a 4×4 symmetric positive-definite system.
#[allow(clippy::needless_range_loop)]
fn solve_spd<T: Real>(a: [[T; 4]; 4], b: [T; 4]) -> Option<[T; 4]> {
    let mut l = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = [T::zero(); 4];
    for i in 0..4 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [T::zero(); 4];
    for i in (0..4).rev() {
        let mut s = y[i];
        for k in i + 1..4 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

/// Inverts one pixel: coarse grid search, then local refinement from the best grid points.
/// Returns the `n_z ≥ 0` representative.
pub fn invert_pixel<T: Real>(obs: &PixelObservation<T>, cfg: &MleConfig) -> Result<AxisAngle<T>> {
    Ok(MleSolver::new(*cfg)?.invert(obs)?.params)
}

/// Per-pixel maximum likelihood (in parallel), then sign stitching and canonicalization.
pub fn reconstruct_map_mle<T: Real>(
    stack: &MeasurementStack<T>,
    cfg: &MleConfig,
) -> Result<ProcessMap<T>> {
    let raw = invert_map_unstitched(stack, cfg)?;
    Ok(canonicalize_sign(&stitch_signs(&raw)))
}

/// Per-pixel maximum likelihood without any inter-pixel sign resolution.
pub fn invert_map_unstitched<T: Real>(
    stack: &MeasurementStack<T>,
    cfg: &MleConfig,
) -> Result<ProcessMap<T>> {
    let solver = MleSolver::new(*cfg)?;
    let n = stack.n_pixels();
    let params = (0..n * n)
        .into_par_iter()
        .map(|i| {
            let (row, col) = (i / n, i % n);
            let obs = PixelObservation::from_stack(stack, row, col);
            solver
                .invert(&obs)
                .map(|fit| fit.params)
                .map_err(|_| Error::NonFiniteObservation { row, col })
        })
        .collect::<Result<Vec<_>>>()?;
    ProcessMap::new(n, params)
}
