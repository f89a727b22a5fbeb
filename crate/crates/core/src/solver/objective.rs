//! One player's cost `F_N(γ̃_i, γ_{-i})` as a function of the free trajectory points.

use crate::cost::CostModel;
use crate::geometry::{chi, TargetSet};
use crate::solver::optim::Objective;
use crate::solver::GameState;

/// Another player's path, frozen for the duration of a best response.
struct FrozenPath {
    points: Vec<f64>,
    velocity: Vec<f64>,
    survival: Vec<f64>,
}

/// Evaluates `F_N` for player `i` with every other player held fixed.
///
/// Per-interval terms (running cost, indicator sample, summed interaction) are
/// cached, so a finite-difference probe of one coordinate only recomputes the
/// two intervals touching the moved point.
pub struct PlayerObjective {
    model: CostModel,
    target: TargetSet,
    start: Vec<f64>,
    dim: usize,
    steps: usize,
    dt: f64,
    players: usize,
    others: Vec<FrozenPath>,
}

struct Terms {
    coords: Vec<f64>,
    running: Vec<f64>,
    indicator: Vec<f64>,
    interaction: Vec<f64>,
}

impl PlayerObjective {
    pub fn new(state: &GameState, i: usize) -> Self {
        let me = &state.players[i];
        let grid = me.trajectory.grid();
        let model = state.model;
        let others = state
            .players
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| {
                let prepared = model.prepare(&p.trajectory, &p.target);
                FrozenPath {
                    points: p.trajectory.coords().to_vec(),
                    velocity: prepared.velocity.iter().flatten().copied().collect(),
                    survival: prepared.survival,
                }
            })
            .collect();
        Self {
            model,
            target: me.target.clone(),
            start: me.x0.clone(),
            dim: me.trajectory.dim(),
            steps: grid.steps,
            dt: grid.dt(),
            players: state.players.len(),
            others,
        }
    }

    /// Number of free coordinates.
    pub fn len(&self) -> usize {
        self.dim * (self.steps - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn terms(&self, free: &[f64]) -> Terms {
        let mut coords = Vec::with_capacity(self.dim * self.steps);
        coords.extend_from_slice(&self.start);
        coords.extend_from_slice(free);
        let n = self.steps - 1;
        let mut terms = Terms {
            coords,
            running: vec![0.0; n],
            indicator: vec![0.0; n],
            interaction: vec![0.0; n],
        };
        for k in 0..n {
            self.refresh(&mut terms, k);
        }
        terms
    }

    /// Recomputes the cached terms of interval `k` from `terms.coords`.
    fn refresh(&self, terms: &mut Terms, k: usize) {
        let d = self.dim;
        let x = &terms.coords[k * d..(k + 1) * d];
        let next = &terms.coords[(k + 1) * d..(k + 2) * d];
        let mut v = [0.0; 8];
        let mut v_heap;
        let v: &mut [f64] = if d <= 8 {
            &mut v[..d]
        } else {
            v_heap = vec![0.0; d];
            &mut v_heap
        };
        for c in 0..d {
            v[c] = (next[c] - x[c]) / self.dt;
        }
        terms.running[k] = self.model.running.eval(k as f64 * self.dt, x, v);
        terms.indicator[k] = chi(&self.target, self.model.smoothing, x);
        let mut interaction = 0.0;
        for other in &self.others {
            let w = other.survival[k];
            if w == 0.0 {
                continue;
            }
            interaction += self.model.eval_h(
                x,
                &other.points[k * d..(k + 1) * d],
                v,
                &other.velocity[k * d..(k + 1) * d],
            ) * w;
        }
        terms.interaction[k] = interaction;
    }

    fn assemble(&self, terms: &Terms) -> f64 {
        let mut running = 0.0;
        let mut exit = 0.0;
        let mut interaction = 0.0;
        let mut survival = f64::INFINITY;
        for k in 0..self.steps - 1 {
            running += terms.running[k];
            exit += terms.indicator[k];
            survival = survival.min(terms.indicator[k]);
            interaction += terms.interaction[k] * survival;
        }
        self.dt * running
            + self.model.arrival.eval(self.dt * exit)
            + self.dt * interaction / self.players as f64
    }
}

impl Objective for PlayerObjective {
    fn value(&self, x: &[f64]) -> f64 {
        self.assemble(&self.terms(x))
    }

    fn gradient(&self, x: &[f64], steps: &[f64], grad: &mut [f64]) {
        let mut terms = self.terms(x);
        let d = self.dim;
        let last = self.steps - 1;
        for (idx, g) in grad.iter_mut().enumerate() {
            let point = 1 + idx / d;
            let slot = d + idx;
            let original = terms.coords[slot];
            let probe = |value: f64, terms: &mut Terms| {
                terms.coords[slot] = value;
                self.refresh(terms, point - 1);
                if point < last {
                    self.refresh(terms, point);
                }
                self.assemble(terms)
            };
            let up = probe(original + steps[idx], &mut terms);
            let down = probe(original - steps[idx], &mut terms);
            probe(original, &mut terms);
            *g = (up - down) / (2.0 * steps[idx]);
        }
    }
}
