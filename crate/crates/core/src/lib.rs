//! Discrete N-player crowd-motion potential game with free exit time.
//!
//! Agents move on a time grid inside a box, pay a kinetic running cost plus an
//! arrival cost on a smoothed exit time, and interact pairwise through an
//! alignment/avoidance kernel. Because the interaction is symmetric the game has
//! a potential, and Gauss–Seidel best responses decrease it monotonically.

pub mod cost;
pub mod error;
pub mod geometry;
pub mod measure;
pub mod output;
pub mod scenario;
pub mod solver;
pub mod trajectory;

pub use cost::{
    eval_h, individual_cost_l, pairwise_cost_h, validate_hypotheses, ArrivalCost, CostModel,
    HypothesisReport, InteractionKernel, RunningCost,
};
pub use error::{Error, Result};
pub use geometry::{chi, signed_distance, Domain, IndicatorSmoothing, SlabSide, TargetSet};
pub use measure::{
    derivative_residual, functional_h, functional_j, functional_l, identity_check,
    mean_field_cost_f, Atom, IdentityReport, WeightedEmpiricalMeasure,
};
pub use output::{load_state, run, verify, Metrics, RunOutput};
pub use scenario::{build_demo_scenario, load_spec, GameSpec, Placement, PopulationSpec};
pub use solver::{
    best_response, certify_epsilon_nash, potential_jn, solve, solve_from, BestResponse,
    CertificationConfig, EquilibriumCertificate, GameState, SolveOutcome, SolverConfig,
};
pub use trajectory::{
    smoothed_exit_time, straight_line_init, survival_weight, TimeGrid, Trajectory,
};
