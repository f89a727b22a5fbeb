//! The N-player game: per-player cost `F_N`, potential `J_N`, best responses,
//! and the Gauss–Seidel sweep over players.

mod certify;
pub mod objective;
pub mod optim;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use certify::{certify_epsilon_nash, EquilibriumCertificate, PlayerGap};
pub use objective::PlayerObjective;
pub use optim::{nelder_mead, projected_gradient, Bounds, Objective, OptimResult};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::geometry::{Domain, TargetSet};
use crate::measure::{Atom, WeightedEmpiricalMeasure};
use crate::scenario::GameSpec;
use crate::trajectory::{straight_line_init, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct PlayerState {
    pub index: usize,
    pub population: usize,
    pub x0: Vec<f64>,
    pub target: TargetSet,
    pub trajectory: Trajectory,
}

/// All players' current trajectories together with the shared domain and costs.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub domain: Domain,
    pub model: CostModel,
    pub players: Vec<PlayerState>,
}

impl GameState {
    /// Straight-line initialization of every player in `spec`.
    pub fn initialize(spec: &GameSpec) -> Result<Self> {
        spec.validate()?;
        let players = spec
            .initial_positions()
            .into_iter()
            .enumerate()
            .map(|(index, (population, x0))| {
                let target = spec.populations[population].target.clone();
                let trajectory = straight_line_init(&x0, &target, spec.grid);
                PlayerState {
                    index,
                    population,
                    x0,
                    target,
                    trajectory,
                }
            })
            .collect();
        Ok(Self {
            domain: spec.domain.clone(),
            model: spec.cost,
            players,
        })
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    /// `F_N(γ_i, γ_{-i}) = L(γ_i) + (1/N) Σ_j H(γ_i, γ_j)`.
    pub fn player_cost(&self, i: usize) -> f64 {
        self.player_cost_with(i, &self.players[i].trajectory)
    }

    /// `F_N` of player `i` if it switched to `candidate`.
    pub fn player_cost_with(&self, i: usize, candidate: &Trajectory) -> f64 {
        let me = self.model.prepare(candidate, &self.players[i].target);
        let mut interaction = 0.0;
        for (j, other) in self.players.iter().enumerate() {
            let h = if j == i {
                self.model.pairwise_cost_prepared(&me, &me)
            } else {
                self.model.pairwise_cost_prepared(
                    &me,
                    &self.model.prepare(&other.trajectory, &other.target),
                )
            };
            interaction += h.expect("players share one grid");
        }
        self.model.individual_cost_prepared(&me) + interaction / self.len() as f64
    }

    /// `(L(γ_i))_i` and the symmetric matrix `H(γ_i, γ_j)`.
    pub fn cost_tables(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let paths: Vec<_> = self
            .players
            .iter()
            .map(|p| self.model.prepare(&p.trajectory, &p.target))
            .collect();
        let n = paths.len();
        let individual = paths
            .iter()
            .map(|p| self.model.individual_cost_prepared(p))
            .collect();
        let mut pair = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let h = self
                    .model
                    .pairwise_cost_prepared(&paths[i], &paths[j])
                    .expect("players share one grid");
                pair[i][j] = h;
                pair[j][i] = h;
            }
        }
        (individual, pair)
    }

    /// `J_N = (2/N) Σ L(γ_i) + (1/N²) Σ_i Σ_j H(γ_i, γ_j)`.
    pub fn potential(&self) -> f64 {
        let (individual, pair) = self.cost_tables();
        let n = self.len() as f64;
        let l: f64 = individual.iter().sum();
        let h: f64 = pair.iter().flatten().sum();
        2.0 * l / n + h / (n * n)
    }

    /// `J_N` via `(1/N) Σ_i [L(γ_i) + F_N(γ_i, γ_{-i})]`.
    pub fn potential_via_costs(&self) -> f64 {
        let (individual, pair) = self.cost_tables();
        let n = self.len() as f64;
        individual
            .iter()
            .zip(&pair)
            .map(|(l, row)| l + (l + row.iter().sum::<f64>() / n))
            .sum::<f64>()
            / n
    }

    /// The uniform empirical measure over the players' trajectories.
    pub fn empirical_measure(&self) -> WeightedEmpiricalMeasure {
        WeightedEmpiricalMeasure::uniform(
            self.players
                .iter()
                .map(|p| Atom::new(p.trajectory.clone(), p.target.clone()))
                .collect(),
        )
        .expect("at least one player on a shared grid")
    }

    pub fn exit_times(&self) -> Vec<f64> {
        self.players
            .iter()
            .map(|p| {
                crate::trajectory::smoothed_exit_time(
                    &p.trajectory,
                    &p.target,
                    self.model.smoothing,
                )
            })
            .collect()
    }

    pub(crate) fn bounds(&self) -> Bounds {
        let me = &self.players[0].trajectory;
        let steps = me.len() - 1;
        Bounds::new(self.domain.lo.repeat(steps), self.domain.hi.repeat(steps))
    }

    /// Per-free-coordinate multiple of the domain extent.
    pub(crate) fn scaled_steps(&self, scale: f64) -> Vec<f64> {
        let steps = self.players[0].trajectory.len() - 1;
        (0..self.domain.dim())
            .map(|k| scale * self.domain.extent(k))
            .collect::<Vec<_>>()
            .repeat(steps)
    }
}

pub fn player_cost_fn(i: usize, state: &GameState) -> f64 {
    state.player_cost(i)
}

pub fn potential_jn(state: &GameState) -> f64 {
    state.potential()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertificationConfig {
    pub restarts: usize,
    /// Relative tolerance: a player passes if its best improvement is at most `epsilon (1 + |F_N|)`.
    pub epsilon: f64,
    /// Standard deviation of restart perturbations, as a fraction of the domain extent.
    pub perturbation: f64,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        Self {
            restarts: 3,
            epsilon: 1e-2,
            perturbation: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_sweeps: usize,
    /// Stop when a sweep lowers `J_N` by at most `sweep_tol (1 + |J_N|)`.
    pub sweep_tol: f64,
    /// Accept a best response only if it lowers `F_N` by more than `accept_tol (1 + |F_N|)`.
    pub accept_tol: f64,
    pub simplex_evals: usize,
    /// Initial simplex edge, as a fraction of the domain extent.
    pub simplex_step: f64,
    pub gradient_iters: usize,
    /// Finite-difference step, as a fraction of the domain extent.
    pub fd_step: f64,
    pub rng_seed: u64,
    /// Omit wall-clock timings from reports so repeated runs are bitwise identical.
    pub deterministic: bool,
    pub certification: CertificationConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            sweep_tol: 1e-6,
            accept_tol: 1e-10,
            simplex_evals: 1000,
            simplex_step: 0.02,
            gradient_iters: 400,
            fd_step: 1e-6,
            rng_seed: 0,
            deterministic: false,
            certification: CertificationConfig::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.sweep_tol", self.sweep_tol),
            ("solver.accept_tol", self.accept_tol),
            ("solver.simplex_step", self.simplex_step),
            ("solver.fd_step", self.fd_step),
            ("solver.certification.epsilon", self.certification.epsilon),
            (
                "solver.certification.perturbation",
                self.certification.perturbation,
            ),
        ];
        for (field, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::invalid(field, "must be > 0"));
            }
        }
        let counts = [
            ("solver.max_sweeps", self.max_sweeps),
            ("solver.simplex_evals", self.simplex_evals),
            ("solver.gradient_iters", self.gradient_iters),
        ];
        for (field, v) in counts {
            if v == 0 {
                return Err(Error::invalid(field, "must be >= 1"));
            }
        }
        Ok(())
    }
}

/// Time-reparametrization factors tried before the local searches.
fn retime_factors() -> impl Iterator<Item = f64> {
    (-12..=18).map(|j| 2f64.powf(j as f64 / 6.0))
}

/// Minimizes player `i`'s cost starting from `start`, other players fixed.
/// Returns the candidate and its objective value.
pub(crate) fn optimize_player(
    state: &GameState,
    i: usize,
    start: &Trajectory,
    config: &SolverConfig,
) -> (Trajectory, f64) {
    let objective = PlayerObjective::new(state, i);
    let bounds = state.bounds();

    // Warm start over time reparametrizations of the start path. The smoothed exit
    // term has no gradient once the agent is farther than `rho` from the target,
    // so local searches alone cannot move the arrival time by whole grid steps.
    let mut best = start.free_coords().to_vec();
    let mut best_value = objective.value(&best);
    for factor in retime_factors() {
        let mut cand = start.retimed(factor).free_coords().to_vec();
        bounds.project(&mut cand);
        let v = objective.value(&cand);
        if v < best_value {
            best = cand;
            best_value = v;
        }
    }

    let simplex = nelder_mead(
        &objective,
        &best,
        config.simplex_evals,
        &bounds,
        &state.scaled_steps(config.simplex_step),
    );
    let polished = projected_gradient(
        &objective,
        &simplex.x,
        config.gradient_iters,
        &state.scaled_steps(config.fd_step),
        &bounds,
    );
    (start.with_free_coords(&polished.x), polished.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub trajectory: Trajectory,
    pub improved: bool,
    /// `F_N(new) - F_N(old)`; zero when the incumbent is kept.
    pub delta_cost: f64,
}

/// One inner step of the coordinate descent: player `i` moves to an (approximate)
/// best response if that lowers its cost by more than the acceptance tolerance.
pub fn best_response(state: &GameState, i: usize, config: &SolverConfig) -> BestResponse {
    let incumbent = &state.players[i].trajectory;
    let current = state.player_cost(i);
    let (candidate, _) = optimize_player(state, i, incumbent, config);
    let new_cost = state.player_cost_with(i, &candidate);
    if current - new_cost > config.accept_tol * (1.0 + current.abs()) {
        BestResponse {
            trajectory: candidate,
            improved: true,
            delta_cost: new_cost - current,
        }
    } else {
        BestResponse {
            trajectory: incumbent.clone(),
            improved: false,
            delta_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateRecord {
    pub player: usize,
    pub delta_cost: f64,
    pub potential_before: f64,
    pub potential_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub sweep: usize,
    pub potential_before: f64,
    pub potential_after: f64,
    pub accepted: Vec<bool>,
    pub delta_costs: Vec<f64>,
    pub updates: Vec<UpdateRecord>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_secs")]
    pub wall_time: Option<Duration>,
}

mod opt_secs {
    use serde::Serializer;
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_f64(d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub state: GameState,
    pub reports: Vec<SweepReport>,
    /// `J_N` at initialization and after each sweep.
    pub potential_history: Vec<f64>,
    pub converged: bool,
}

/// Straight-line initialization followed by [`solve_from`].
pub fn solve(spec: &GameSpec, config: &SolverConfig) -> Result<SolveOutcome> {
    config.validate()?;
    Ok(solve_from(GameState::initialize(spec)?, config))
}

/// Sweeps over players in index order, replacing each by its best response,
/// until a sweep barely lowers the potential or `max_sweeps` is reached.
pub fn solve_from(mut state: GameState, config: &SolverConfig) -> SolveOutcome {
    let mut potential = state.potential();
    let mut history = vec![potential];
    let mut reports = Vec::new();
    let mut converged = false;
    for sweep in 0..config.max_sweeps {
        let started = Instant::now();
        let before = potential;
        let mut accepted = Vec::with_capacity(state.len());
        let mut delta_costs = Vec::with_capacity(state.len());
        let mut updates = Vec::new();
        for i in 0..state.len() {
            let br = best_response(&state, i, config);
            accepted.push(br.improved);
            delta_costs.push(br.delta_cost);
            if br.improved {
                state.players[i].trajectory = br.trajectory;
                let after = state.potential();
                updates.push(UpdateRecord {
                    player: i,
                    delta_cost: br.delta_cost,
                    potential_before: potential,
                    potential_after: after,
                });
                potential = after;
            }
        }
        history.push(potential);
        reports.push(SweepReport {
            sweep,
            potential_before: before,
            potential_after: potential,
            accepted,
            delta_costs,
            updates,
            wall_time: (!config.deterministic).then(|| started.elapsed()),
        });
        if before - potential <= config.sweep_tol * (1.0 + potential.abs()) {
            converged = true;
            break;
        }
    }
    SolveOutcome {
        state,
        reports,
        potential_history: history,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SlabSide;
    use crate::measure::{functional_j, mean_field_cost_f};
    use crate::scenario::{build_demo_scenario, GameSpec, Placement, PopulationSpec};
    use crate::trajectory::TimeGrid;

    fn slab(threshold: f64, side: SlabSide) -> TargetSet {
        TargetSet::Slab {
            coord: 0,
            threshold,
            side,
        }
    }

    fn single_agent(x0: Vec<f64>) -> GameSpec {
        GameSpec {
            populations: vec![PopulationSpec {
                count: 1,
                placement: Placement::Points { points: vec![x0] },
                target: slab(1.0, SlabSide::Above),
            }],
            cost: CostModel::default().without_interaction(),
            ..build_demo_scenario(1, TimeGrid::new(3.0, 50).unwrap())
        }
    }

    fn bent_demo(n: usize) -> GameState {
        let spec = build_demo_scenario(n, TimeGrid::new(3.0, 16).unwrap());
        let mut state = GameState::initialize(&spec).unwrap();
        for (j, p) in state.players.iter_mut().enumerate() {
            let free: Vec<f64> = p
                .trajectory
                .free_coords()
                .iter()
                .enumerate()
                .map(|(k, v)| (v + 0.05 * ((2 * k + j) as f64).cos()).clamp(0.0, 1.0))
                .collect();
            p.trajectory = p.trajectory.with_free_coords(&free);
        }
        state
    }

    #[test]
    fn single_player_cost_is_individual_cost() {
        let state = GameState::initialize(&single_agent(vec![0.0, 0.5])).unwrap();
        let p = &state.players[0];
        assert_eq!(
            state.player_cost(0),
            state.model.individual_cost(&p.trajectory, &p.target)
        );
    }

    #[test]
    fn player_cost_matches_mean_field_cost() {
        let state = bent_demo(2);
        let q = state.empirical_measure();
        for i in 0..state.len() {
            let p = &state.players[i];
            let f = mean_field_cost_f(&p.trajectory, &p.target, &q, &state.model).unwrap();
            assert!((f - state.player_cost(i)).abs() <= 1e-13 * f.abs());
        }
    }

    #[test]
    fn two_player_hand_assembly() {
        let state = bent_demo(1);
        let m = &state.model;
        let (a, b) = (&state.players[0], &state.players[1]);
        let h = m
            .pairwise_cost(&a.trajectory, &a.target, &b.trajectory, &b.target)
            .unwrap();
        assert!(h > 0.0);
        let la = m.individual_cost(&a.trajectory, &a.target);
        let lb = m.individual_cost(&b.trajectory, &b.target);
        assert!((state.player_cost(0) - (la + 0.5 * h)).abs() < 1e-14);
        assert!((state.player_cost(1) - (lb + 0.5 * h)).abs() < 1e-14);
        // brute-force double loop for the potential
        let trajs = [a, b];
        let mut brute = 0.0;
        for x in trajs {
            brute += 2.0 / 2.0 * m.individual_cost(&x.trajectory, &x.target);
            for y in trajs {
                brute += m
                    .pairwise_cost(&x.trajectory, &x.target, &y.trajectory, &y.target)
                    .unwrap()
                    / 4.0;
            }
        }
        assert!((state.potential() - brute).abs() < 1e-14);
    }

    #[test]
    fn potential_agrees_with_measure_functional() {
        let state = bent_demo(3);
        let j = state.potential();
        let via_measure = functional_j(&state.empirical_measure(), &state.model).unwrap();
        assert!((j - via_measure).abs() <= 1e-12 * j.abs());
        assert!((j - state.potential_via_costs()).abs() <= 1e-12 * j.abs());
    }

    #[test]
    fn parked_players_have_zero_potential() {
        let mut spec = build_demo_scenario(2, TimeGrid::new(3.0, 20).unwrap());
        spec.populations[0].placement = Placement::Points {
            points: vec![vec![1.0, 0.2], vec![1.0, 0.7]],
        };
        spec.populations[1].placement = Placement::Points {
            points: vec![vec![0.0, 0.3], vec![0.0, 0.9]],
        };
        let state = GameState::initialize(&spec).unwrap();
        assert_eq!(state.potential(), 0.0);
    }

    #[test]
    fn parked_agent_keeps_constant_trajectory() {
        let state = GameState::initialize(&single_agent(vec![1.0, 0.5])).unwrap();
        let br = best_response(&state, 0, &SolverConfig::default());
        assert!(!br.improved);
        assert_eq!(br.trajectory, state.players[0].trajectory);
    }

    #[test]
    fn single_agent_reaches_analytic_optimum() {
        // minimize d²/(2τ) + τ: τ* = d/√2, cost d√2
        let state = GameState::initialize(&single_agent(vec![0.0, 0.5])).unwrap();
        let br = best_response(&state, 0, &SolverConfig::default());
        assert!(br.improved);
        let mut solved = state.clone();
        solved.players[0].trajectory = br.trajectory;
        let cost = solved.player_cost(0);
        let tau = solved.exit_times()[0];
        assert!(
            (cost - 2f64.sqrt()).abs() <= 0.02 * 2f64.sqrt(),
            "cost {cost}"
        );
        assert!(
            (tau - 0.5f64.sqrt()).abs() <= 0.05 * 0.5f64.sqrt(),
            "tau {tau}"
        );
        assert_eq!(solved.players[0].trajectory.start(), &[0.0, 0.5]);
    }

    #[test]
    fn potential_changes_by_scaled_cost_change() {
        let state = bent_demo(2);
        let config = SolverConfig {
            simplex_evals: 200,
            gradient_iters: 50,
            ..SolverConfig::default()
        };
        let n = state.len() as f64;
        let br = best_response(&state, 2, &config);
        assert!(br.improved);
        let before = state.potential();
        let mut after_state = state.clone();
        after_state.players[2].trajectory = br.trajectory;
        let delta_j = after_state.potential() - before;
        assert!((delta_j - 2.0 / n * br.delta_cost).abs() <= 1e-10 * (1.0 + delta_j.abs()));
    }

    fn game_cost_alone(state: &GameState) -> f64 {
        state
            .model
            .individual_cost(&state.players[0].trajectory, &state.players[0].target)
    }

    #[test]
    fn zero_interaction_game_decouples() {
        let mut spec = build_demo_scenario(2, TimeGrid::new(3.0, 30).unwrap());
        spec.cost = spec.cost.without_interaction();
        let config = SolverConfig {
            max_sweeps: 5,
            ..SolverConfig::default()
        };
        let outcome = solve(&spec, &config).unwrap();
        assert!(outcome.converged);
        for (i, p) in outcome.state.players.iter().enumerate() {
            let alone = GameState {
                players: vec![PlayerState {
                    index: 0,
                    ..p.clone()
                }],
                ..outcome.state.clone()
            };
            let mut fresh = alone.clone();
            fresh.players[0].trajectory = straight_line_init(&p.x0, &p.target, spec.grid);
            let solo = solve_from(fresh, &config);
            assert_eq!(game_cost_alone(&alone), outcome.state.player_cost(i));
            let solo_cost = solo.state.player_cost(0);
            let game_cost = outcome.state.player_cost(i);
            assert!(
                (game_cost - solo_cost).abs() <= 1e-3 * solo_cost,
                "{game_cost} vs {solo_cost}"
            );
        }
    }

    #[test]
    fn solve_is_monotone_and_keeps_constraints() {
        let spec = build_demo_scenario(2, TimeGrid::new(3.0, 20).unwrap());
        let config = SolverConfig {
            max_sweeps: 4,
            simplex_evals: 300,
            gradient_iters: 100,
            ..SolverConfig::default()
        };
        let outcome = solve(&spec, &config).unwrap();
        for w in outcome.potential_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let initial = GameState::initialize(&spec).unwrap();
        for (p, q) in outcome.state.players.iter().zip(&initial.players) {
            assert_eq!(p.trajectory.start(), q.x0.as_slice());
            assert!(p
                .trajectory
                .points()
                .all(|x| outcome.state.domain.contains(x)));
        }
        assert_eq!(outcome.potential_history.len(), outcome.reports.len() + 1);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            sweep_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            gradient_iters: 0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
