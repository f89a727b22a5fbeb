//! Running, arrival and interaction costs, and the per-trajectory functionals
//! `L(γ)` and `H(γ, γ̃)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{IndicatorSmoothing, TargetSet};
use crate::trajectory::{indicator_samples, running_min, Trajectory, VelocityProfile};

/// Largest value of `z (1 - tanh z)`, i.e. the sup-norm gap between
/// `smooth_pos(·, 1)` and `max(0, ·)`.
pub const SMOOTH_POS_GAP: f64 = 0.2785;

/// Below this separation the approach-rate term is taken as zero.
const MIN_SEPARATION: f64 = 1e-12;

/// Smooth stand-in for `max(0, x)`: `x tanh(beta x)` for `x > 0`, zero otherwise.
///
/// Nonnegative, continuously differentiable, exactly zero at the origin, and
/// within `SMOOTH_POS_GAP / beta` of `max(0, x)` everywhere.
#[inline]
pub fn smooth_pos(x: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (beta * x).tanh()
    }
}

/// `ℓ(t, x, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunningCost {
    /// `(coefficient / 2) |p|^2`
    Quadratic { coefficient: f64 },
}

impl Default for RunningCost {
    fn default() -> Self {
        RunningCost::Quadratic { coefficient: 1.0 }
    }
}

impl RunningCost {
    #[inline]
    pub fn eval(&self, _t: f64, _x: &[f64], p: &[f64]) -> f64 {
        match self {
            RunningCost::Quadratic { coefficient } => {
                0.5 * coefficient * p.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }

    /// Coercivity constant in `ℓ >= alpha |p|^theta`.
    pub fn alpha(&self) -> f64 {
        match self {
            RunningCost::Quadratic { coefficient } => 0.5 * coefficient,
        }
    }

    pub fn theta(&self) -> f64 {
        match self {
            RunningCost::Quadratic { .. } => 2.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RunningCost::Quadratic { coefficient } => {
                if !(coefficient.is_finite() && *coefficient > 0.0) {
                    return Err(Error::invalid("cost.running.coefficient", "must be > 0"));
                }
            }
        }
        Ok(())
    }
}

/// `Ψ(τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArrivalCost {
    Linear { slope: f64, offset: f64 },
}

impl Default for ArrivalCost {
    fn default() -> Self {
        ArrivalCost::Linear {
            slope: 1.0,
            offset: 0.0,
        }
    }
}

impl ArrivalCost {
    pub fn linear(slope: f64, offset: f64) -> Result<Self> {
        let psi = ArrivalCost::Linear { slope, offset };
        psi.validate()?;
        Ok(psi)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ArrivalCost::Linear { slope, offset } => slope * t + offset,
        }
    }

    /// `(a, b)` with `Ψ(t) >= a t - b`.
    pub fn growth_constants(&self) -> (f64, f64) {
        match self {
            ArrivalCost::Linear { slope, .. } => (*slope, 0.0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ArrivalCost::Linear { slope, offset } => {
                if !(slope.is_finite() && *slope > 0.0) {
                    return Err(Error::invalid(
                        "cost.arrival.slope",
                        "must be > 0 (arrival cost must be increasing)",
                    ));
                }
                if !(offset.is_finite() && *offset >= 0.0) {
                    return Err(Error::invalid("cost.arrival.offset", "must be >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// `h(t, x, x̃, p, p̃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionKernel {
    /// Gaussian-weighted penalty on the rate at which two agents approach each
    /// other, blended towards `|p - p̃|` inside separation `delta`.
    CuckerSmaleAvoidance {
        amplitude: f64,
        sigma: f64,
        delta: f64,
        beta_s: f64,
    },
}

impl Default for InteractionKernel {
    fn default() -> Self {
        InteractionKernel::CuckerSmaleAvoidance {
            amplitude: 8.0,
            sigma: 0.25,
            delta: 0.2,
            beta_s: 50.0,
        }
    }
}

impl InteractionKernel {
    pub fn eval(&self, x: &[f64], xt: &[f64], p: &[f64], pt: &[f64]) -> f64 {
        match *self {
            InteractionKernel::CuckerSmaleAvoidance {
                amplitude,
                sigma,
                delta,
                beta_s,
            } => {
                if amplitude == 0.0 {
                    return 0.0;
                }
                let mut r2 = 0.0;
                let mut approach = 0.0;
                let mut dp2 = 0.0;
                for k in 0..x.len() {
                    let dx = x[k] - xt[k];
                    let dp = p[k] - pt[k];
                    r2 += dx * dx;
                    approach += dp * dx;
                    dp2 += dp * dp;
                }
                let dist = r2.sqrt();
                let closing = if dist < MIN_SEPARATION {
                    0.0
                } else {
                    -approach / dist
                };
                let near = smooth_pos(1.0 - dist / delta, beta_s);
                let far = 1.0 - near;
                let gauss = (-r2 / (2.0 * sigma * sigma)).exp();
                amplitude * gauss * smooth_pos(far * closing + near * dp2.sqrt(), beta_s)
            }
        }
    }

    /// `C` in `h <= C (|p|^beta + |p̃|^beta)`.
    pub fn bound_constant(&self) -> f64 {
        match self {
            InteractionKernel::CuckerSmaleAvoidance { amplitude, .. } => *amplitude,
        }
    }

    pub fn bound_exponent(&self) -> f64 {
        1.0
    }

    /// Additive allowance on the growth bound due to smoothing.
    pub fn smoothing_slack(&self) -> f64 {
        match self {
            InteractionKernel::CuckerSmaleAvoidance {
                amplitude, beta_s, ..
            } => amplitude * SMOOTH_POS_GAP / beta_s,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InteractionKernel::CuckerSmaleAvoidance {
                amplitude,
                sigma,
                delta,
                beta_s,
            } => {
                let checks = [
                    ("cost.kernel.amplitude", *amplitude >= 0.0, "must be >= 0"),
                    ("cost.kernel.sigma", *sigma > 0.0, "must be > 0"),
                    ("cost.kernel.delta", *delta > 0.0, "must be > 0"),
                    ("cost.kernel.beta_s", *beta_s > 0.0, "must be > 0"),
                ];
                for (field, ok, why) in checks {
                    if !ok {
                        return Err(Error::invalid(field, why));
                    }
                }
                if ![amplitude, sigma, delta, beta_s]
                    .iter()
                    .all(|v| v.is_finite())
                {
                    return Err(Error::invalid("cost.kernel", "non-finite parameter"));
                }
            }
        }
        Ok(())
    }
}

/// Everything needed to price a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostModel {
    #[serde(default)]
    pub running: RunningCost,
    #[serde(default)]
    pub arrival: ArrivalCost,
    #[serde(default)]
    pub kernel: InteractionKernel,
    #[serde(default)]
    pub smoothing: IndicatorSmoothing,
}

/// A trajectory with its velocities, indicator samples and survival weights computed once.
#[derive(Debug, Clone)]
pub struct PreparedPath<'a> {
    pub trajectory: &'a Trajectory,
    pub velocity: VelocityProfile,
    pub indicator: Vec<f64>,
    pub survival: Vec<f64>,
}

impl CostModel {
    pub fn new(
        running: RunningCost,
        arrival: ArrivalCost,
        kernel: InteractionKernel,
        smoothing: IndicatorSmoothing,
    ) -> Result<Self> {
        let model = Self {
            running,
            arrival,
            kernel,
            smoothing,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.running.validate()?;
        self.arrival.validate()?;
        self.kernel.validate()?;
        self.smoothing.validate()?;
        if self.kernel.bound_exponent() > self.running.theta() {
            return Err(Error::invalid(
                "cost.kernel",
                "kernel growth exponent exceeds running-cost exponent",
            ));
        }
        Ok(())
    }

    /// The same model with the interaction switched off.
    pub fn without_interaction(mut self) -> Self {
        let InteractionKernel::CuckerSmaleAvoidance { amplitude, .. } = &mut self.kernel;
        *amplitude = 0.0;
        self
    }

    #[inline]
    pub fn eval_h(&self, x: &[f64], xt: &[f64], p: &[f64], pt: &[f64]) -> f64 {
        self.kernel.eval(x, xt, p, pt)
    }

    pub fn prepare<'a>(&self, trajectory: &'a Trajectory, target: &TargetSet) -> PreparedPath<'a> {
        let indicator = indicator_samples(trajectory, target, self.smoothing);
        PreparedPath {
            trajectory,
            velocity: trajectory.velocity(),
            survival: running_min(&indicator),
            indicator,
        }
    }

    pub fn individual_cost_prepared(&self, path: &PreparedPath<'_>) -> f64 {
        let grid = path.trajectory.grid();
        let dt = grid.dt();
        let running: f64 = path
            .velocity
            .iter()
            .enumerate()
            .map(|(k, v)| self.running.eval(grid.time(k), path.trajectory.point(k), v))
            .sum();
        let exit_time = dt * path.indicator.iter().sum::<f64>();
        dt * running + self.arrival.eval(exit_time)
    }

    pub fn pairwise_cost_prepared(
        &self,
        a: &PreparedPath<'_>,
        b: &PreparedPath<'_>,
    ) -> Result<f64> {
        let (ga, gb) = (a.trajectory.grid(), b.trajectory.grid());
        if ga != gb || a.trajectory.dim() != b.trajectory.dim() {
            return Err(Error::GridMismatch(ga, gb));
        }
        let mut total = 0.0;
        for k in 0..ga.steps - 1 {
            let weight = a.survival[k] * b.survival[k];
            if weight == 0.0 {
                continue;
            }
            total += self.eval_h(
                a.trajectory.point(k),
                b.trajectory.point(k),
                a.velocity.get(k),
                b.velocity.get(k),
            ) * weight;
        }
        Ok(ga.dt() * total)
    }

    /// `L(γ) = ∫ ℓ dt + Ψ(τ)` with the smoothed exit time.
    pub fn individual_cost(&self, traj: &Trajectory, target: &TargetSet) -> f64 {
        self.individual_cost_prepared(&self.prepare(traj, target))
    }

    /// `H(γ, γ̃)`: the interaction integral cut off by both agents' survival weights.
    pub fn pairwise_cost(
        &self,
        traj: &Trajectory,
        target: &TargetSet,
        other: &Trajectory,
        other_target: &TargetSet,
    ) -> Result<f64> {
        self.pairwise_cost_prepared(
            &self.prepare(traj, target),
            &self.prepare(other, other_target),
        )
    }
}

pub fn eval_h(model: &CostModel, x: &[f64], xt: &[f64], p: &[f64], pt: &[f64]) -> f64 {
    model.eval_h(x, xt, p, pt)
}

pub fn individual_cost_l(model: &CostModel, traj: &Trajectory, target: &TargetSet) -> f64 {
    model.individual_cost(traj, target)
}

pub fn pairwise_cost_h(
    model: &CostModel,
    traj: &Trajectory,
    target: &TargetSet,
    other: &Trajectory,
    other_target: &TargetSet,
) -> Result<f64> {
    model.pairwise_cost(traj, target, other, other_target)
}

/// Structural constants of a cost model and the outcome of randomized checks
/// of symmetry, sign, self-interaction and growth bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub alpha: f64,
    pub theta: f64,
    pub kernel_c: f64,
    pub kernel_beta: f64,
    pub arrival_a: f64,
    pub arrival_b: f64,
    pub samples: usize,
    pub symmetry_violations: usize,
    pub negativity_violations: usize,
    pub self_interaction_violations: usize,
    pub kernel_bound_violations: usize,
    pub running_bound_violations: usize,
    pub arrival_violations: usize,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.kernel_beta <= self.theta
            && self.symmetry_violations == 0
            && self.negativity_violations == 0
            && self.self_interaction_violations == 0
            && self.kernel_bound_violations == 0
            && self.running_bound_violations == 0
            && self.arrival_violations == 0
    }
}

/// Spot-checks the structural assumptions on `model` at `samples` random points in `dim` dimensions.
pub fn validate_hypotheses(
    model: &CostModel,
    samples: usize,
    dim: usize,
    seed: u64,
) -> HypothesisReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (arrival_a, arrival_b) = model.arrival.growth_constants();
    let mut report = HypothesisReport {
        alpha: model.running.alpha(),
        theta: model.running.theta(),
        kernel_c: model.kernel.bound_constant(),
        kernel_beta: model.kernel.bound_exponent(),
        arrival_a,
        arrival_b,
        samples,
        symmetry_violations: 0,
        negativity_violations: 0,
        self_interaction_violations: 0,
        kernel_bound_violations: 0,
        running_bound_violations: 0,
        arrival_violations: 0,
    };
    let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
    for _ in 0..samples {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        // a share of near-coincident pairs exercises the blended regime
        let spread = if rng.gen_bool(0.3) { 0.05 } else { 1.0 };
        let xt: Vec<f64> = x
            .iter()
            .map(|c| c + spread * (rng.gen::<f64>() - 0.5))
            .collect();
        let p: Vec<f64> = (0..dim)
            .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let pt: Vec<f64> = (0..dim)
            .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
            .collect();

        let h = model.eval_h(&x, &xt, &p, &pt);
        if h != model.eval_h(&xt, &x, &pt, &p) {
            report.symmetry_violations += 1;
        }
        if h.is_nan() || h < 0.0 {
            report.negativity_violations += 1;
        }
        if model.eval_h(&x, &x, &p, &p) != 0.0 {
            report.self_interaction_violations += 1;
        }
        let bound = report.kernel_c
            * (norm(&p).powf(report.kernel_beta) + norm(&pt).powf(report.kernel_beta))
            + model.kernel.smoothing_slack();
        if h > bound {
            report.kernel_bound_violations += 1;
        }
        if model.running.eval(0.0, &x, &p)
            < report.alpha * norm(&p).powf(report.theta) * (1.0 - 1e-12)
        {
            report.running_bound_violations += 1;
        }
        let (t1, t2) = (10.0 * rng.gen::<f64>(), 10.0 * rng.gen::<f64>());
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        if model.arrival.eval(lo) > model.arrival.eval(hi)
            || model.arrival.eval(lo) < arrival_a * lo - arrival_b
        {
            report.arrival_violations += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SlabSide;
    use crate::trajectory::{smoothed_exit_time, TimeGrid};
    use proptest::prelude::*;

    fn slab_right() -> TargetSet {
        TargetSet::Slab {
            coord: 0,
            threshold: 1.0,
            side: SlabSide::Above,
        }
    }

    fn kernel(beta_s: f64) -> CostModel {
        CostModel {
            kernel: InteractionKernel::CuckerSmaleAvoidance {
                amplitude: 8.0,
                sigma: 0.25,
                delta: 0.2,
                beta_s,
            },
            ..CostModel::default()
        }
    }

    /// The kernel with exact `max`/`min`, written directly from its definition.
    fn exact_kernel(x: [f64; 2], xt: [f64; 2], p: [f64; 2], pt: [f64; 2]) -> f64 {
        let (sigma, delta) = (0.25, 0.2);
        let diff = [x[0] - xt[0], x[1] - xt[1]];
        let dist = (diff[0] * diff[0] + diff[1] * diff[1]).sqrt();
        let dp = [p[0] - pt[0], p[1] - pt[1]];
        let unit = [diff[0] / dist, diff[1] / dist];
        let closing = -(dp[0] * unit[0] + dp[1] * unit[1]);
        let w = (dist / delta).min(1.0);
        let inner = w * closing + (1.0 - dist / delta).max(0.0) * (dp[0].hypot(dp[1]));
        8.0 * (-dist * dist / (2.0 * sigma * sigma)).exp() * inner.max(0.0)
    }

    #[test]
    fn smooth_pos_examples() {
        assert_eq!(smooth_pos(0.0, 3.0), 0.0);
        assert!((smooth_pos(10.0, 50.0) - 10.0).abs() < 1e-6);
        assert!(smooth_pos(-10.0, 50.0).abs() < 1e-6);
    }

    #[test]
    fn smooth_pos_gap_bound() {
        for beta in [1.0, 7.0, 50.0] {
            let worst = (0..200_000)
                .map(|i| -2.0 + 4.0 * i as f64 / 200_000.0)
                .map(|x| (smooth_pos(x, beta) - x.max(0.0)).abs())
                .fold(0.0, f64::max);
            assert!(worst <= SMOOTH_POS_GAP / beta, "beta {beta}: {worst}");
            assert!(worst >= 0.27 / beta);
        }
    }

    #[test]
    fn smooth_pos_is_c1() {
        let beta = 5.0;
        let h = 1e-6;
        let deriv = |x: f64| (smooth_pos(x + h, beta) - smooth_pos(x - h, beta)) / (2.0 * h);
        assert!(deriv(0.0).abs() < 1e-5);
        for x in [-0.3, 0.01, 0.2, 1.0] {
            assert!((deriv(x) - deriv(x + 1e-4)).abs() < 1e-2);
        }
    }

    #[test]
    fn self_interaction_is_exactly_zero() {
        let m = kernel(50.0);
        assert_eq!(
            m.eval_h(&[0.3, 0.4], &[0.3, 0.4], &[1.0, -2.0], &[1.0, -2.0]),
            0.0
        );
    }

    #[test]
    fn head_on_point_value_converges() {
        let expected = 16.0 * (-2.0f64).exp();
        assert!((expected - 2.1654).abs() < 1e-4);
        let oracle = exact_kernel([0.0, 0.0], [0.5, 0.0], [1.0, 0.0], [-1.0, 0.0]);
        assert!((oracle - expected).abs() < 1e-12);
        let mut last_err = f64::INFINITY;
        for beta in [50.0, 500.0, 5000.0] {
            let h = kernel(beta).eval_h(&[0.0, 0.0], &[0.5, 0.0], &[1.0, 0.0], &[-1.0, 0.0]);
            let err = (h - expected).abs();
            assert!(err <= last_err);
            last_err = err;
        }
        assert!(last_err / expected < 0.01);
    }

    #[test]
    fn separating_agents_cost_nothing() {
        let m = kernel(50.0);
        let h = m.eval_h(&[0.0, 0.0], &[0.3, 0.0], &[-1.0, 0.0], &[1.0, 0.0]);
        assert!(h <= 8.0 * SMOOTH_POS_GAP / 50.0);
        assert!(h >= 0.0);
    }

    #[test]
    fn individual_cost_examples() {
        let m = CostModel::default();
        let g = TimeGrid::new(3.0, 50).unwrap();
        let parked = Trajectory::constant(g, &[1.0, 0.4]);
        assert_eq!(m.individual_cost(&parked, &slab_right()), 0.0);

        // (0, 0.5) -> (1, 0.5) at unit speed over T = 1, target reached exactly at T.
        let g = TimeGrid::new(1.0, 401).unwrap();
        let pts: Vec<Vec<f64>> = (0..g.steps).map(|k| vec![g.time(k), 0.5]).collect();
        let line = Trajectory::from_points(g, &pts).unwrap();
        for rho in [1e-3, 1e-4] {
            let m = CostModel {
                smoothing: IndicatorSmoothing { rho },
                ..CostModel::default()
            };
            let l = m.individual_cost(&line, &slab_right());
            assert!((l - 1.5).abs() < 1e-9 + rho, "rho {rho}: {l}");
        }
    }

    #[test]
    fn doubling_speed_quadruples_running_cost() {
        let m = CostModel {
            arrival: ArrivalCost::Linear {
                slope: 1e-300,
                offset: 0.0,
            },
            ..CostModel::default()
        };
        let far = TargetSet::Ball {
            center: vec![9.0, 9.0],
            radius: 0.1,
        };
        let g = TimeGrid::new(2.0, 11).unwrap();
        let pts: Vec<Vec<f64>> = (0..11)
            .map(|k| vec![0.02 * k as f64, 0.01 * (k * k) as f64])
            .collect();
        let fast: Vec<Vec<f64>> = pts.iter().map(|p| vec![2.0 * p[0], 2.0 * p[1]]).collect();
        let l1 = m.individual_cost(&Trajectory::from_points(g, &pts).unwrap(), &far);
        let l2 = m.individual_cost(&Trajectory::from_points(g, &fast).unwrap(), &far);
        assert!((l2 - 4.0 * l1).abs() < 1e-12 * l2);
    }

    #[test]
    fn running_coefficient_scales_linearly() {
        let g = TimeGrid::new(2.0, 9).unwrap();
        let far = TargetSet::Ball {
            center: vec![5.0, 5.0],
            radius: 0.1,
        };
        let pts: Vec<Vec<f64>> = (0..9).map(|k| vec![0.1 * k as f64, 0.3]).collect();
        let t = Trajectory::from_points(g, &pts).unwrap();
        let base = CostModel::default();
        // Ψ ≡ 0 is emulated by subtracting it; the exit time here is T.
        let psi = base
            .arrival
            .eval(smoothed_exit_time(&t, &far, base.smoothing));
        let l1 = base.individual_cost(&t, &far) - psi;
        let scaled = CostModel {
            running: RunningCost::Quadratic { coefficient: 3.5 },
            ..base
        };
        let l2 = scaled.individual_cost(&t, &far) - psi;
        assert!((l2 - 3.5 * l1).abs() < 1e-12 * l2);
    }

    #[test]
    fn pairwise_cost_examples() {
        let m = CostModel::default();
        let g = TimeGrid::new(3.0, 30).unwrap();
        let pts: Vec<Vec<f64>> = (0..30).map(|k| vec![0.03 * k as f64, 0.5]).collect();
        let t = Trajectory::from_points(g, &pts).unwrap();
        assert_eq!(
            m.pairwise_cost(&t, &slab_right(), &t, &slab_right())
                .unwrap(),
            0.0
        );

        // far apart: Gaussian decay makes the cost negligible
        let a = Trajectory::from_points(g, &pts).unwrap();
        let b_pts: Vec<Vec<f64>> = pts.iter().map(|p| vec![1.0 - p[0], p[1] + 1.3]).collect();
        let b = Trajectory::from_points(g, &b_pts).unwrap();
        let other = TargetSet::Slab {
            coord: 0,
            threshold: 0.0,
            side: SlabSide::Below,
        };
        let h = m.pairwise_cost(&a, &slab_right(), &b, &other).unwrap();
        assert!(h <= 8.0 * (-12.5f64).exp() * 2.0 * 3.0);

        // two-point grid: one quadrature node
        let g2 = TimeGrid::new(0.5, 2).unwrap();
        let a = Trajectory::from_points(g2, &[vec![0.2, 0.5], vec![0.4, 0.5]]).unwrap();
        let b = Trajectory::from_points(g2, &[vec![0.5, 0.5], vec![0.35, 0.55]]).unwrap();
        let sm = m.smoothing;
        let u0 = crate::geometry::chi(&slab_right(), sm, a.point(0));
        let ub0 = crate::geometry::chi(&other, sm, b.point(0));
        let expected =
            0.5 * m.eval_h(
                a.point(0),
                b.point(0),
                a.velocity().get(0),
                b.velocity().get(0),
            ) * u0
                * ub0;
        let h = m.pairwise_cost(&a, &slab_right(), &b, &other).unwrap();
        assert_eq!(h, expected);
        assert!(h > 0.0);

        let g3 = TimeGrid::new(0.5, 3).unwrap();
        let c = Trajectory::constant(g3, &[0.1, 0.1]);
        assert!(matches!(
            m.pairwise_cost(&a, &slab_right(), &c, &other),
            Err(Error::GridMismatch(..))
        ));
    }

    #[test]
    fn builtin_model_passes_hypothesis_checks() {
        let report = validate_hypotheses(&CostModel::default(), 10_000, 2, 7);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.theta, 2.0);
        assert_eq!(report.kernel_beta, 1.0);
        assert_eq!(report.alpha, 0.5);
        assert_eq!(report.kernel_c, 8.0);
    }

    #[test]
    fn bad_parameters_are_rejected() {
        assert!(ArrivalCost::linear(-1.0, 0.0).is_err());
        assert!(ArrivalCost::linear(1.0, -0.5).is_err());
        let bad_sigma = CostModel {
            kernel: InteractionKernel::CuckerSmaleAvoidance {
                amplitude: 8.0,
                sigma: -0.25,
                delta: 0.2,
                beta_s: 50.0,
            },
            ..CostModel::default()
        };
        match bad_sigma.validate() {
            Err(Error::Invalid { field, .. }) => assert_eq!(field, "cost.kernel.sigma"),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn vec2() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 2)
    }

    proptest! {
        #[test]
        fn kernel_symmetric_nonnegative_bounded(x in vec2(), xt in vec2(), p in vec2(), pt in vec2(), beta in 1.0f64..500.0) {
            let m = kernel(beta);
            let h = m.eval_h(&x, &xt, &p, &pt);
            prop_assert_eq!(h, m.eval_h(&xt, &x, &pt, &p));
            prop_assert!(h >= 0.0);
            let n = |v: &[f64]| v[0].hypot(v[1]);
            prop_assert!(h <= 8.0 * (n(&p) + n(&pt)) + m.kernel.smoothing_slack());
        }

        #[test]
        fn pairwise_cost_is_symmetric(a in prop::collection::vec(0.0f64..1.0, 16), b in prop::collection::vec(0.0f64..1.0, 16)) {
            let m = CostModel::default();
            let g = TimeGrid::new(1.0, 8).unwrap();
            let ta = Trajectory::from_flat(g, 2, a).unwrap();
            let tb = Trajectory::from_flat(g, 2, b).unwrap();
            let other = TargetSet::Slab { coord: 1, threshold: 0.0, side: SlabSide::Below };
            let h1 = m.pairwise_cost(&ta, &slab_right(), &tb, &other).unwrap();
            let h2 = m.pairwise_cost(&tb, &other, &ta, &slab_right()).unwrap();
            prop_assert_eq!(h1, h2);
            prop_assert!(h1 >= 0.0);
        }
    }
}
