//! Time-discretized trajectories, velocities, exit times and quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{chi, IndicatorSmoothing, TargetSet};

/// `steps` equally spaced samples of `[0, horizon]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        let grid = Self { horizon, steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("grid.horizon", "must be > 0"));
        }
        if self.steps < 2 {
            return Err(Error::invalid("grid.steps", "need at least 2 samples"));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / (self.steps - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Index of the sample closest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let k = (t / self.dt()).round();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.steps - 1)
        }
    }
}

/// A path sampled on a [`TimeGrid`]. Points are stored row-major, `dim` coordinates each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    coords: Vec<f64>,
}

impl Trajectory {
    pub fn from_points(grid: TimeGrid, points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("trajectory", "points have mixed dimensions"));
        }
        Self::from_flat(grid, dim, points.concat())
    }

    pub fn from_flat(grid: TimeGrid, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("trajectory", "dimension must be positive"));
        }
        if coords.len() != dim * grid.steps {
            return Err(Error::invalid(
                "trajectory",
                format!(
                    "expected {} points of dimension {dim}, got {} coordinates",
                    grid.steps,
                    coords.len()
                ),
            ));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("trajectory", "non-finite coordinate"));
        }
        Ok(Self { grid, dim, coords })
    }

    /// The trajectory that stays at `x` for the whole horizon.
    pub fn constant(grid: TimeGrid, x: &[f64]) -> Self {
        Self {
            grid,
            dim: x.len(),
            coords: x.repeat(grid.steps),
        }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.steps
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn start(&self) -> &[f64] {
        self.point(0)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinates of points `1..steps`, the free variables of a best response.
    pub fn free_coords(&self) -> &[f64] {
        &self.coords[self.dim..]
    }

    /// Same start point, new free coordinates.
    pub fn with_free_coords(&self, free: &[f64]) -> Self {
        assert_eq!(free.len(), self.coords.len() - self.dim);
        let mut coords = Vec::with_capacity(self.coords.len());
        coords.extend_from_slice(self.start());
        coords.extend_from_slice(free);
        Self {
            grid: self.grid,
            dim: self.dim,
            coords,
        }
    }

    pub fn velocity(&self) -> VelocityProfile {
        velocity(self)
    }

    /// Position at continuous time `t`, linearly interpolated and clamped to `[0, T]`.
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let dt = self.grid.dt();
        let s = (t / dt).clamp(0.0, (self.grid.steps - 1) as f64);
        let k = (s.floor() as usize).min(self.grid.steps - 2);
        let frac = s - k as f64;
        self.point(k)
            .iter()
            .zip(self.point(k + 1))
            .map(|(a, b)| a + frac * (b - a))
            .collect()
    }

    /// Time-reparametrized copy: point `k` becomes the position at time `factor * t_k`.
    /// Factors above 1 run the same path faster and then wait at its end point.
    pub fn retimed(&self, factor: f64) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        coords.extend_from_slice(self.start());
        for k in 1..self.grid.steps {
            coords.extend(self.sample(factor * self.grid.time(k)));
        }
        Self {
            grid: self.grid,
            dim: self.dim,
            coords,
        }
    }
}

/// Forward-difference velocities, one per grid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityProfile {
    dim: usize,
    values: Vec<f64>,
}

impl VelocityProfile {
    pub fn get(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }
}

pub fn velocity(traj: &Trajectory) -> VelocityProfile {
    let dt = traj.grid.dt();
    let d = traj.dim;
    let values = (0..(traj.grid.steps - 1) * d)
        .map(|i| (traj.coords[i + d] - traj.coords[i]) / dt)
        .collect();
    VelocityProfile { dim: d, values }
}

/// `chi` at the first `steps - 1` samples (the left-endpoint nodes).
pub fn indicator_samples(traj: &Trajectory, target: &TargetSet, s: IndicatorSmoothing) -> Vec<f64> {
    traj.points()
        .take(traj.grid.steps - 1)
        .map(|x| chi(target, s, x))
        .collect()
}

/// Left-endpoint rectangle rule for `∫ chi(γ(t)) dt` over `[0, T]`.
pub fn smoothed_exit_time(traj: &Trajectory, target: &TargetSet, s: IndicatorSmoothing) -> f64 {
    quadrature(&indicator_samples(traj, target, s), traj.grid.dt())
}

/// Running minimum of the indicator samples: the soft "not yet exited" weight.
pub fn survival_weight(traj: &Trajectory, target: &TargetSet, s: IndicatorSmoothing) -> Vec<f64> {
    running_min(&indicator_samples(traj, target, s))
}

pub fn running_min(values: &[f64]) -> Vec<f64> {
    let mut acc = f64::INFINITY;
    values
        .iter()
        .map(|v| {
            acc = acc.min(*v);
            acc
        })
        .collect()
}

/// Straight line at constant speed from `x0` to its nearest target point, arriving at `T`.
pub fn straight_line_init(x0: &[f64], target: &TargetSet, grid: TimeGrid) -> Trajectory {
    let end = target.nearest_point(x0);
    let last = (grid.steps - 1) as f64;
    let mut coords = Vec::with_capacity(grid.steps * x0.len());
    for k in 0..grid.steps {
        let s = k as f64 / last;
        coords.extend(x0.iter().zip(&end).map(|(a, b)| a + s * (b - a)));
    }
    // pin both endpoints exactly
    coords[..x0.len()].copy_from_slice(x0);
    let tail = coords.len() - x0.len();
    coords[tail..].copy_from_slice(&end);
    Trajectory {
        grid,
        dim: x0.len(),
        coords,
    }
}

/// `dt * Σ values`.
pub fn quadrature(values: &[f64], dt: f64) -> f64 {
    dt * values.iter().sum::<f64>()
}
