//! Finitely supported probability measures on trajectories and the
//! functionals `𝓛`, `𝓗`, `𝓙` built from `L` and `H`.
//!
//! All sums run sequentially in atom order, so results are reproducible bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cost::{CostModel, PreparedPath};
use crate::error::{Error, Result};
use crate::geometry::{SlabSide, TargetSet};
use crate::trajectory::{TimeGrid, Trajectory};

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub trajectory: Trajectory,
    pub target: TargetSet,
}

impl Atom {
    pub fn new(trajectory: Trajectory, target: TargetSet) -> Self {
        Self { trajectory, target }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEmpiricalMeasure {
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl WeightedEmpiricalMeasure {
    pub fn new(atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::invalid(
                "measure",
                "need one weight per atom and at least one atom",
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("measure.weights", "weights must be >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(
                "measure.weights",
                format!("weights sum to {total}, not 1"),
            ));
        }
        let grid = atoms[0].trajectory.grid();
        if let Some(bad) = atoms.iter().find(|a| a.trajectory.grid() != grid) {
            return Err(Error::GridMismatch(grid, bad.trajectory.grid()));
        }
        Ok(Self { atoms, weights })
    }

    pub fn dirac(atom: Atom) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    /// The empirical measure `(1/N) Σ δ_{γ_j}`.
    pub fn uniform(atoms: Vec<Atom>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn grid(&self) -> TimeGrid {
        self.atoms[0].trajectory.grid()
    }

    /// `(1 - t) self + t other` over the concatenated atom lists.
    pub fn mixture(&self, other: &Self, t: f64) -> Result<Self> {
        let atoms = self.atoms.iter().chain(&other.atoms).cloned().collect();
        let weights = self
            .weights
            .iter()
            .map(|w| (1.0 - t) * w)
            .chain(other.weights.iter().map(|w| t * w))
            .collect();
        Self::new(atoms, weights)
    }
}

fn prepare_all<'a>(model: &CostModel, atoms: &'a [Atom]) -> Vec<PreparedPath<'a>> {
    atoms
        .iter()
        .map(|a| model.prepare(&a.trajectory, &a.target))
        .collect()
}

fn check_grids(q: &WeightedEmpiricalMeasure, qt: &WeightedEmpiricalMeasure) -> Result<()> {
    if q.grid() != qt.grid() {
        return Err(Error::GridMismatch(q.grid(), qt.grid()));
    }
    Ok(())
}

/// Matrix of `H(γ_a, γ̃_b)`.
fn pair_matrix(
    model: &CostModel,
    rows: &[PreparedPath<'_>],
    cols: &[PreparedPath<'_>],
) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|a| {
            cols.iter()
                .map(|b| model.pairwise_cost_prepared(a, b))
                .collect()
        })
        .collect()
}

fn bilinear(matrix: &[Vec<f64>], left: &[f64], right: &[f64]) -> f64 {
    let mut total = 0.0;
    for (row, wl) in matrix.iter().zip(left) {
        for (h, wr) in row.iter().zip(right) {
            total += wl * wr * h;
        }
    }
    total
}

/// `𝓛(Q) = Σ w_i L(γ_i)`.
pub fn functional_l(q: &WeightedEmpiricalMeasure, model: &CostModel) -> f64 {
    q.atoms
        .iter()
        .zip(&q.weights)
        .map(|(a, w)| w * model.individual_cost(&a.trajectory, &a.target))
        .sum()
}

/// `𝓗(Q, Q̃) = Σ_i Σ_j w_i w̃_j H(γ_i, γ̃_j)`.
pub fn functional_h(
    q: &WeightedEmpiricalMeasure,
    qt: &WeightedEmpiricalMeasure,
    model: &CostModel,
) -> Result<f64> {
    check_grids(q, qt)?;
    let rows = prepare_all(model, &q.atoms);
    let cols = prepare_all(model, &qt.atoms);
    Ok(bilinear(
        &pair_matrix(model, &rows, &cols)?,
        &q.weights,
        &qt.weights,
    ))
}

/// `𝓙(Q) = 2𝓛(Q) + 𝓗(Q, Q)`.
pub fn functional_j(q: &WeightedEmpiricalMeasure, model: &CostModel) -> Result<f64> {
    Ok(2.0 * functional_l(q, model) + functional_h(q, q, model)?)
}

/// `𝓙(Q)` as the double integral of `J(γ, γ̃) = L(γ) + L(γ̃) + H(γ, γ̃)`.
pub fn functional_j_direct(q: &WeightedEmpiricalMeasure, model: &CostModel) -> Result<f64> {
    let paths = prepare_all(model, &q.atoms);
    let costs: Vec<f64> = paths
        .iter()
        .map(|p| model.individual_cost_prepared(p))
        .collect();
    let mut total = 0.0;
    for (i, a) in paths.iter().enumerate() {
        for (j, b) in paths.iter().enumerate() {
            let pair = costs[i] + costs[j] + model.pairwise_cost_prepared(a, b)?;
            total += q.weights[i] * q.weights[j] * pair;
        }
    }
    Ok(total)
}

/// `F(γ, Q) = L(γ) + Σ_j w_j H(γ, γ_j)`.
pub fn mean_field_cost_f(
    traj: &Trajectory,
    target: &TargetSet,
    q: &WeightedEmpiricalMeasure,
    model: &CostModel,
) -> Result<f64> {
    if traj.grid() != q.grid() {
        return Err(Error::GridMismatch(traj.grid(), q.grid()));
    }
    let me = model.prepare(traj, target);
    let mut interaction = 0.0;
    for (atom, w) in q.atoms.iter().zip(&q.weights) {
        let other = model.prepare(&atom.trajectory, &atom.target);
        interaction += w * model.pairwise_cost_prepared(&me, &other)?;
    }
    Ok(model.individual_cost_prepared(&me) + interaction)
}

/// Both sides of the exact second-order expansion of `𝓙` along `Q0 + t (Q - Q0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeResidual {
    /// `𝓙(Q0 + t(Q - Q0)) - 𝓙(Q0) - t ⟨2F(·, Q0), Q - Q0⟩`
    pub lhs: f64,
    /// `t² 𝓗(Q - Q0, Q - Q0)`
    pub rhs: f64,
}

impl DerivativeResidual {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

pub fn derivative_residual(
    q0: &WeightedEmpiricalMeasure,
    q: &WeightedEmpiricalMeasure,
    t: f64,
    model: &CostModel,
) -> Result<DerivativeResidual> {
    check_grids(q0, q)?;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::invalid("t", "must lie in (0, 1]"));
    }
    let mixed = q0.mixture(q, t)?;
    let j_mixed = functional_j(&mixed, model)?;
    let j_base = functional_j(q0, model)?;

    // ⟨2F(·, Q0), Q - Q0⟩ over the disjoint union of atoms
    let union: Vec<&Atom> = q0.atoms.iter().chain(&q.atoms).collect();
    let signed: Vec<f64> = q0
        .weights
        .iter()
        .map(|w| -w)
        .chain(q.weights.iter().copied())
        .collect();
    let mut first_order = 0.0;
    for (atom, s) in union.iter().zip(&signed) {
        first_order += 2.0 * mean_field_cost_f(&atom.trajectory, &atom.target, q0, model)? * s;
    }

    // 𝓗(Q - Q0, Q - Q0) = 𝓗(Q, Q) - 2𝓗(Q, Q0) + 𝓗(Q0, Q0)
    let curvature = functional_h(q, q, model)? - 2.0 * functional_h(q, q0, model)?
        + functional_h(q0, q0, model)?;

    Ok(DerivativeResidual {
        lhs: j_mixed - j_base - t * first_order,
        rhs: t * t * curvature,
    })
}

/// Largest residuals seen by [`identity_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub trials: usize,
    /// max of `|lhs - rhs| / (1 + |rhs|)` for the second-order expansion
    pub derivative: f64,
    /// max relative gap between `2𝓛 + 𝓗` and the direct double sum
    pub j_split: f64,
    /// max relative gap of `∫ F(·, Q) dQ` against `𝓛 + 𝓗(Q, Q)`
    pub mean_cost: f64,
    /// max relative gap of weight-linearity of `𝓛` and `𝓗(·, Q̃)`
    pub linearity: f64,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Random trajectory wandering in the unit square.
pub fn random_atom(rng: &mut impl Rng, grid: TimeGrid) -> Atom {
    let mut x = [rng.gen::<f64>(), rng.gen::<f64>()];
    let drift = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5];
    let mut pts = Vec::with_capacity(grid.steps);
    for _ in 0..grid.steps {
        pts.push(x.to_vec());
        for c in 0..2 {
            x[c] = (x[c] + 0.3 * drift[c] + 0.1 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);
        }
    }
    let target = TargetSet::Slab {
        coord: rng.gen_range(0..2),
        threshold: rng.gen::<f64>(),
        side: if rng.gen_bool(0.5) {
            SlabSide::Above
        } else {
            SlabSide::Below
        },
    };
    Atom::new(
        Trajectory::from_points(grid, &pts).expect("finite points"),
        target,
    )
}

pub fn random_measure(
    rng: &mut impl Rng,
    grid: TimeGrid,
    atoms: usize,
) -> WeightedEmpiricalMeasure {
    let raw: Vec<f64> = (0..atoms).map(|_| 0.05 + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..atoms - 1].iter().sum();
    weights[atoms - 1] = 1.0 - head;
    let atoms = (0..atoms).map(|_| random_atom(rng, grid)).collect();
    WeightedEmpiricalMeasure::new(atoms, weights).expect("normalized weights")
}

/// Runs the exact identities on `trials` random pairs of 3 to 5 atom measures.
pub fn identity_check(trials: usize, seed: u64, model: &CostModel) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = TimeGrid::new(1.0, 12)?;
    let mut report = IdentityReport {
        trials,
        derivative: 0.0,
        j_split: 0.0,
        mean_cost: 0.0,
        linearity: 0.0,
    };
    for _ in 0..trials {
        let n0 = rng.gen_range(3..=5);
        let n1 = rng.gen_range(3..=5);
        let q0 = random_measure(&mut rng, grid, n0);
        let q = random_measure(&mut rng, grid, n1);
        let t = if rng.gen_bool(0.3) {
            1e-3
        } else {
            rng.gen_range(1e-3..=1.0)
        };

        let d = derivative_residual(&q0, &q, t, model)?;
        report.derivative = report.derivative.max(d.residual() / (1.0 + d.rhs.abs()));

        let split = functional_j(&q0, model)?;
        let direct = functional_j_direct(&q0, model)?;
        report.j_split = report.j_split.max(relative_gap(split, direct));

        let mut integrated = 0.0;
        for (atom, w) in q0.atoms().iter().zip(q0.weights()) {
            integrated += w * mean_field_cost_f(&atom.trajectory, &atom.target, &q0, model)?;
        }
        let expected = functional_l(&q0, model) + functional_h(&q0, &q0, model)?;
        report.mean_cost = report.mean_cost.max(relative_gap(integrated, expected));

        let mix = q0.mixture(&q, t)?;
        let l_mix = functional_l(&mix, model);
        let l_comb = (1.0 - t) * functional_l(&q0, model) + t * functional_l(&q, model);
        let h_mix = functional_h(&mix, &q0, model)?;
        let h_comb = (1.0 - t) * functional_h(&q0, &q0, model)? + t * functional_h(&q, &q0, model)?;
        report.linearity = report
            .linearity
            .max(relative_gap(l_mix, l_comb))
            .max(relative_gap(h_mix, h_comb));
    }
    Ok(report)
}
