//! Scenario description: domain, grid, populations, costs and solver settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{Error, Result};
use crate::geometry::{Domain, SlabSide, TargetSet};
use crate::solver::SolverConfig;
use crate::trajectory::TimeGrid;

/// Snapshot times used for the two-population demo.
pub const DEMO_FRAME_TIMES: [f64; 4] = [0.0, 0.24, 0.36, 0.76];

/// Number of snapshot frames when none are configured.
pub const DEFAULT_FRAME_COUNT: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Placement {
    /// Explicit initial positions, one per agent.
    Points { points: Vec<Vec<f64>> },
    /// `count` agents at the midpoints of `count` equal pieces of the segment.
    Segment { start: Vec<f64>, end: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub count: usize,
    pub placement: Placement,
    pub target: TargetSet,
}

impl PopulationSpec {
    pub fn positions(&self) -> Vec<Vec<f64>> {
        match &self.placement {
            Placement::Points { points } => points.clone(),
            Placement::Segment { start, end } => (0..self.count)
                .map(|j| {
                    let s = (j as f64 + 0.5) / self.count as f64;
                    start
                        .iter()
                        .zip(end)
                        .map(|(a, b)| a + s * (b - a))
                        .collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Times at which SVG snapshots are drawn.
    pub frame_times: Option<Vec<f64>>,
}

impl OutputConfig {
    pub fn resolved_frame_times(&self, grid: TimeGrid) -> Vec<f64> {
        match &self.frame_times {
            Some(times) => times.clone(),
            None => (0..DEFAULT_FRAME_COUNT)
                .map(|k| grid.horizon * k as f64 / (DEFAULT_FRAME_COUNT - 1) as f64)
                .collect(),
        }
    }
}

fn default_grid() -> TimeGrid {
    TimeGrid {
        horizon: 3.0,
        steps: 100,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default = "Domain::unit_square")]
    pub domain: Domain,
    #[serde(default = "default_grid")]
    pub grid: TimeGrid,
    pub populations: Vec<PopulationSpec>,
    #[serde(default)]
    pub cost: CostModel,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.grid.validate()?;
        self.cost.validate()?;
        self.solver.validate()?;
        if self.populations.is_empty() {
            return Err(Error::invalid(
                "populations",
                "need at least one population",
            ));
        }
        let dim = self.domain.dim();
        for (p, pop) in self.populations.iter().enumerate() {
            let field = format!("populations[{p}]");
            if pop.count == 0 {
                return Err(Error::invalid(format!("{field}.count"), "must be >= 1"));
            }
            match &pop.placement {
                Placement::Points { points } if points.len() != pop.count => {
                    return Err(Error::invalid(
                        format!("{field}.placement.points"),
                        format!("{} points given for count {}", points.len(), pop.count),
                    ));
                }
                Placement::Segment { start, end } if start.len() != dim || end.len() != dim => {
                    return Err(Error::invalid(
                        format!("{field}.placement"),
                        "segment endpoints have the wrong dimension",
                    ));
                }
                _ => {}
            }
            for (a, x) in pop.positions().iter().enumerate() {
                if x.len() != dim || !self.domain.contains(x) {
                    return Err(Error::invalid(
                        format!("{field}.placement[{a}]"),
                        "initial position outside the domain",
                    ));
                }
            }
            pop.target
                .validate_in(&self.domain, &format!("{field}.target"))?;
        }
        if let Some(times) = &self.output.frame_times {
            if times.iter().any(|t| !(0.0..=self.grid.horizon).contains(t)) {
                return Err(Error::invalid(
                    "output.frame_times",
                    "times must lie in [0, T]",
                ));
            }
        }
        Ok(())
    }

    /// `(population, x0)` for every agent, populations in order.
    pub fn initial_positions(&self) -> Vec<(usize, Vec<f64>)> {
        self.populations
            .iter()
            .enumerate()
            .flat_map(|(p, pop)| pop.positions().into_iter().map(move |x| (p, x)))
            .collect()
    }

    pub fn player_count(&self) -> usize {
        self.populations.iter().map(|p| p.count).sum()
    }
}

/// Two mirrored populations on the unit square: population 0 starts on the left
/// edge and heads for `x >= 1`, population 1 starts on the right edge and heads
/// for `x <= 0`.
pub fn build_demo_scenario(n_per_pop: usize, grid: TimeGrid) -> GameSpec {
    GameSpec {
        domain: Domain::unit_square(),
        grid,
        populations: vec![
            PopulationSpec {
                count: n_per_pop,
                placement: Placement::Segment {
                    start: vec![0.0, 0.0],
                    end: vec![0.0, 1.0],
                },
                target: TargetSet::Slab {
                    coord: 0,
                    threshold: 1.0,
                    side: SlabSide::Above,
                },
            },
            PopulationSpec {
                count: n_per_pop,
                placement: Placement::Segment {
                    start: vec![1.0, 0.0],
                    end: vec![1.0, 1.0],
                },
                target: TargetSet::Slab {
                    coord: 0,
                    threshold: 0.0,
                    side: SlabSide::Below,
                },
            },
        ],
        cost: CostModel::default(),
        solver: SolverConfig::default(),
        output: OutputConfig {
            frame_times: Some(DEMO_FRAME_TIMES.to_vec()),
        },
    }
}

pub fn parse_spec(text: &str, origin: &Path) -> Result<GameSpec> {
    let spec: GameSpec = serde_json::from_str(text).map_err(|source| Error::Parse {
        path: origin.to_path_buf(),
        source,
    })?;
    spec.validate()?;
    Ok(spec)
}

/// Reads and validates a JSON scenario file.
pub fn load_spec(path: impl AsRef<Path>) -> Result<GameSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text, path)
}
