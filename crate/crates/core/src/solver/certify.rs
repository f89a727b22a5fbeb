use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{optimize_player, GameState, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerGap {
    pub player: usize,
    pub population: usize,
    pub cost: f64,
    /// Largest cost decrease found over all restarts (negative if every restart did worse).
    pub best_improvement: f64,
    pub passed: bool,
}

/// Outcome of a bounded search for profitable unilateral deviations.
///
/// Passing means no deviation better than the tolerance was *found*; it is not a
/// proof that none exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumCertificate {
    pub epsilon: f64,
    pub restarts: usize,
    pub players: Vec<PlayerGap>,
    pub passed: bool,
}

impl EquilibriumCertificate {
    pub fn failing_players(&self) -> Vec<usize> {
        self.players
            .iter()
            .filter(|g| !g.passed)
            .map(|g| g.player)
            .collect()
    }
}

/// For each player, reruns the best-response search from `restarts` randomly
/// perturbed copies of its trajectory and records the largest improvement over
/// its current cost. A player passes if that improvement is at most
/// `epsilon (1 + |F_N|)`.
pub fn certify_epsilon_nash(state: &GameState, config: &SolverConfig) -> EquilibriumCertificate {
    let cert = &config.certification;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let dim = state.domain.dim();
    let noise: Vec<Normal<f64>> = (0..dim)
        .map(|k| {
            Normal::new(0.0, cert.perturbation * state.domain.extent(k)).expect("finite scale")
        })
        .collect();
    let bounds = state.bounds();
    // an infinite tolerance cannot fail, so the search is skipped
    let restarts = if cert.epsilon.is_finite() {
        cert.restarts
    } else {
        0
    };

    let players: Vec<PlayerGap> = (0..state.len())
        .map(|i| {
            let player = &state.players[i];
            let cost = state.player_cost(i);
            let mut best_improvement = f64::NEG_INFINITY;
            for _ in 0..restarts {
                let mut free = player.trajectory.free_coords().to_vec();
                for (k, v) in free.iter_mut().enumerate() {
                    *v += noise[k % dim].sample(&mut rng);
                }
                bounds.project(&mut free);
                let start = player.trajectory.with_free_coords(&free);
                let (candidate, _) = optimize_player(state, i, &start, config);
                let improvement = cost - state.player_cost_with(i, &candidate);
                best_improvement = best_improvement.max(improvement);
            }
            if restarts == 0 {
                best_improvement = 0.0;
            }
            PlayerGap {
                player: i,
                population: player.population,
                cost,
                best_improvement,
                passed: best_improvement <= cert.epsilon * (1.0 + cost.abs()),
            }
        })
        .collect();
    EquilibriumCertificate {
        epsilon: cert.epsilon,
        restarts,
        passed: players.iter().all(|g| g.passed),
        players,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostModel;
    use crate::geometry::{SlabSide, TargetSet};
    use crate::scenario::{build_demo_scenario, GameSpec, Placement, PopulationSpec};
    use crate::solver::{best_response, CertificationConfig};
    use crate::trajectory::TimeGrid;

    fn two_agents_apart() -> GameSpec {
        let target = TargetSet::Slab {
            coord: 0,
            threshold: 1.0,
            side: SlabSide::Above,
        };
        GameSpec {
            populations: vec![PopulationSpec {
                count: 2,
                placement: Placement::Points {
                    points: vec![vec![0.0, 0.1], vec![0.0, 0.9]],
                },
                target,
            }],
            cost: CostModel::default().without_interaction(),
            ..build_demo_scenario(1, TimeGrid::new(3.0, 30).unwrap())
        }
    }

    fn converged(spec: &GameSpec, config: &SolverConfig) -> GameState {
        let mut state = GameState::initialize(spec).unwrap();
        for i in 0..state.len() {
            state.players[i].trajectory = best_response(&state, i, config).trajectory;
        }
        state
    }

    #[test]
    fn converged_single_agents_pass() {
        let config = SolverConfig {
            certification: CertificationConfig {
                epsilon: 1e-3,
                ..CertificationConfig::default()
            },
            ..SolverConfig::default()
        };
        let state = converged(&two_agents_apart(), &config);
        let cert = certify_epsilon_nash(&state, &config);
        assert!(cert.passed, "{cert:?}");
        assert_eq!(cert.restarts, 3);
    }

    #[test]
    fn detour_is_flagged() {
        let config = SolverConfig::default();
        let mut state = converged(&two_agents_apart(), &config);
        // push player 1 through a far corner
        let t = &state.players[1].trajectory;
        let mut free = t.free_coords().to_vec();
        for k in 0..6 {
            free[2 * k] = 0.0;
            free[2 * k + 1] = 0.0;
        }
        state.players[1].trajectory = t.with_free_coords(&free);
        let cert = certify_epsilon_nash(&state, &config);
        assert!(!cert.passed);
        assert_eq!(cert.failing_players(), vec![1]);
        assert!(cert.players[1].best_improvement > 0.1);
    }

    #[test]
    fn infinite_epsilon_always_passes() {
        let spec = two_agents_apart();
        let state = GameState::initialize(&spec).unwrap();
        let config = SolverConfig {
            certification: CertificationConfig {
                epsilon: f64::INFINITY,
                ..CertificationConfig::default()
            },
            ..SolverConfig::default()
        };
        assert!(certify_epsilon_nash(&state, &config).passed);
    }
}
