//! Solving a scenario end to end and reading/writing its artifacts:
//! `trajectories.csv`, `metrics.json`, `config.json` and `frames/frame_<k>.svg`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::scenario::GameSpec;
use crate::solver::{certify_epsilon_nash, solve, EquilibriumCertificate, GameState, SweepReport};
use crate::trajectory::Trajectory;

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const CONFIG_FILE: &str = "config.json";
pub const FRAMES_DIR: &str = "frames";

const FRAME_PX: f64 = 800.0;
const FRAME_MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Contents of `metrics.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub seed: u64,
    pub converged: bool,
    pub potential_history: Vec<f64>,
    pub player_costs: Vec<f64>,
    pub exit_times: Vec<f64>,
    pub sweeps: Vec<SweepReport>,
    pub certificate: EquilibriumCertificate,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub spec: GameSpec,
    pub state: GameState,
    pub metrics: Metrics,
    pub out_dir: PathBuf,
    pub frames: Vec<PathBuf>,
}

impl RunOutput {
    pub fn converged(&self) -> bool {
        self.metrics.converged
    }

    /// Rows in `trajectories.csv`: one per player and grid point.
    pub fn row_count(&self) -> usize {
        self.state.players.iter().map(|p| p.trajectory.len()).sum()
    }
}

/// Solves `spec` with the given certification seed, certifies the result and
/// writes every artifact under `out_dir`.
pub fn run(spec: &GameSpec, out_dir: impl AsRef<Path>, seed: u64) -> Result<RunOutput> {
    let out_dir = out_dir.as_ref();
    let mut spec = spec.clone();
    spec.solver.rng_seed = seed;
    spec.validate()?;

    let outcome = solve(&spec, &spec.solver)?;
    let certificate = certify_epsilon_nash(&outcome.state, &spec.solver);
    let state = outcome.state;
    let metrics = Metrics {
        seed,
        converged: outcome.converged,
        potential_history: outcome.potential_history,
        player_costs: (0..state.len()).map(|i| state.player_cost(i)).collect(),
        exit_times: state.exit_times(),
        sweeps: outcome.reports,
        certificate,
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    write_json(&out_dir.join(CONFIG_FILE), &spec)?;
    write_json(&out_dir.join(METRICS_FILE), &metrics)?;
    write_trajectories(&out_dir.join(TRAJECTORIES_FILE), &spec, &state)?;
    let frames = write_frames(&out_dir.join(FRAMES_DIR), &spec, &state)?;

    Ok(RunOutput {
        spec,
        state,
        metrics,
        out_dir: out_dir.to_path_buf(),
        frames,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("plain data serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Agent index within its population, for every player.
fn agent_indices(state: &GameState) -> Vec<usize> {
    let mut seen = Vec::new();
    state
        .players
        .iter()
        .map(|p| {
            if seen.len() <= p.population {
                seen.resize(p.population + 1, 0);
            }
            seen[p.population] += 1;
            seen[p.population] - 1
        })
        .collect()
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_trajectories(path: &Path, spec: &GameSpec, state: &GameState) -> Result<()> {
    let dim = spec.domain.dim();
    let mut w = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let mut header = vec![
        "population".to_string(),
        "agent".into(),
        "k".into(),
        "t".into(),
    ];
    header.extend((0..dim).map(|c| format!("x{c}")));
    w.write_record(&header).map_err(csv_error(path))?;
    for (p, agent) in state.players.iter().zip(agent_indices(state)) {
        for (k, x) in p.trajectory.points().enumerate() {
            let mut row = vec![
                p.population.to_string(),
                agent.to_string(),
                k.to_string(),
                format!("{:.16e}", spec.grid.time(k)),
            ];
            row.extend(x.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row).map_err(csv_error(path))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Rebuilds the game state of `spec` from a `trajectories.csv` written by [`run`].
pub fn load_state(spec: &GameSpec, state_dir: impl AsRef<Path>) -> Result<GameState> {
    let path = state_dir.as_ref().join(TRAJECTORIES_FILE);
    let corrupt = |reason: String| Error::CorruptState {
        path: path.clone(),
        reason,
    };
    let mut state = GameState::initialize(spec)?;
    let dim = spec.domain.dim();
    let steps = spec.grid.steps;

    let mut reader = csv::Reader::from_path(&path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&path, io),
            _ => unreachable!(),
        },
        _ => csv_error(&path)(e),
    })?;
    let mut expected = vec![
        "population".to_string(),
        "agent".into(),
        "k".into(),
        "t".into(),
    ];
    expected.extend((0..dim).map(|c| format!("x{c}")));
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error(&path))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != expected {
        return Err(corrupt(format!("header {header:?}, expected {expected:?}")));
    }

    let agents = agent_indices(&state);
    let mut coords: Vec<Vec<f64>> = vec![Vec::with_capacity(steps * dim); state.len()];
    let mut player = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error(&path))?;
        let row = line + 2;
        let int = |c: usize| -> Result<usize> {
            record[c]
                .trim()
                .parse()
                .map_err(|_| corrupt(format!("row {row}: bad integer {:?}", &record[c])))
        };
        let (pop, agent, k) = (int(0)?, int(1)?, int(2)?);
        if player < state.len() && coords[player].len() == steps * dim {
            player += 1;
        }
        if player >= state.len() {
            return Err(corrupt(format!(
                "row {row}: more rows than players x grid points"
            )));
        }
        let want_k = coords[player].len() / dim;
        if pop != state.players[player].population || agent != agents[player] || k != want_k {
            return Err(corrupt(format!(
                "row {row}: expected population {}, agent {}, k {want_k}",
                state.players[player].population, agents[player]
            )));
        }
        for c in 0..dim {
            let v: f64 = record[4 + c]
                .trim()
                .parse()
                .map_err(|_| corrupt(format!("row {row}: bad number {:?}", &record[4 + c])))?;
            if !v.is_finite() {
                return Err(corrupt(format!("row {row}: non-finite coordinate")));
            }
            coords[player].push(v);
        }
    }
    for (p, flat) in state.players.iter_mut().zip(coords) {
        if flat.len() != steps * dim {
            return Err(corrupt(format!(
                "player {} has {} points, expected {steps}",
                p.index,
                flat.len() / dim
            )));
        }
        let traj =
            Trajectory::from_flat(spec.grid, dim, flat).map_err(|e| corrupt(e.to_string()))?;
        if traj.start() != p.x0.as_slice() {
            return Err(corrupt(format!(
                "player {} does not start at its initial position",
                p.index
            )));
        }
        if !traj.points().all(|x| spec.domain.contains(x)) {
            return Err(corrupt(format!("player {} leaves the domain", p.index)));
        }
        p.trajectory = traj;
    }
    Ok(state)
}

/// Reloads a previous run and certifies it at tolerance `epsilon` (if given).
pub fn verify(
    spec: &GameSpec,
    state_dir: impl AsRef<Path>,
    epsilon: Option<f64>,
) -> Result<EquilibriumCertificate> {
    let state = load_state(spec, state_dir)?;
    let mut config = spec.solver.clone();
    if let Some(eps) = epsilon {
        config.certification.epsilon = eps;
        config.validate()?;
    }
    Ok(certify_epsilon_nash(&state, &config))
}

fn to_pixels(domain: &Domain, x: &[f64]) -> (f64, f64) {
    let span = FRAME_PX - 2.0 * FRAME_MARGIN;
    let u = (x[0] - domain.lo[0]) / domain.extent(0);
    let v = if domain.dim() > 1 {
        (x[1] - domain.lo[1]) / domain.extent(1)
    } else {
        0.5
    };
    (FRAME_MARGIN + u * span, FRAME_PX - FRAME_MARGIN - v * span)
}

/// One snapshot: each player's path up to `t` and a circle at its position at `t`.
pub fn render_frame(spec: &GameSpec, state: &GameState, t: f64) -> String {
    let domain = &spec.domain;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{FRAME_PX}" height="{FRAME_PX}" viewBox="0 0 {FRAME_PX} {FRAME_PX}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y1) = to_pixels(domain, &domain.lo);
    let (x1, y0) = to_pixels(domain, &domain.hi);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{FRAME_MARGIN}" y="24" font-family="sans-serif" font-size="16">t = {t:.2}</text>"#
    );
    let grid = spec.grid;
    for p in &state.players {
        let color = PALETTE[p.population % PALETTE.len()];
        let mut history: Vec<(f64, f64)> = (0..grid.steps)
            .take_while(|&k| grid.time(k) < t)
            .map(|k| to_pixels(domain, p.trajectory.point(k)))
            .collect();
        let here = to_pixels(domain, &p.trajectory.sample(t));
        history.push(here);
        let points: Vec<String> = history
            .iter()
            .map(|(a, b)| format!("{a:.2},{b:.2}"))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-opacity="0.5" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="7" fill="{color}" stroke="black" stroke-width="0.5"/>"#,
            here.0, here.1
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_frames(dir: &Path, spec: &GameSpec, state: &GameState) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    spec.output
        .resolved_frame_times(spec.grid)
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            let path = dir.join(format!("frame_{k}.svg"));
            fs::write(&path, render_frame(spec, state, t)).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::build_demo_scenario;
    use crate::solver::SolverConfig;
    use crate::trajectory::TimeGrid;

    fn quick_spec() -> GameSpec {
        let mut spec = build_demo_scenario(2, TimeGrid::new(3.0, 12).unwrap());
        spec.solver = SolverConfig {
            max_sweeps: 2,
            simplex_evals: 100,
            gradient_iters: 20,
            deterministic: true,
            ..SolverConfig::default()
        };
        spec.solver.certification.restarts = 1;
        spec
    }

    #[test]
    fn csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let spec = quick_spec();
        let out = run(&spec, dir.path(), 7).unwrap();
        assert_eq!(out.row_count(), 4 * 12);
        let text = fs::read_to_string(dir.path().join(TRAJECTORIES_FILE)).unwrap();
        assert!(text.starts_with("population,agent,k,t,x0,x1\n"));
        assert_eq!(text.lines().count(), 1 + 4 * 12);
        let back = load_state(&out.spec, dir.path()).unwrap();
        for (a, b) in back.players.iter().zip(&out.state.players) {
            assert_eq!(a.trajectory, b.trajectory);
        }
        assert_eq!(out.frames.len(), 4);
        assert_eq!(
            out.metrics.potential_history.len(),
            out.metrics.sweeps.len() + 1
        );
        let metrics: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap())
                .unwrap();
        for key in [
            "potential_history",
            "player_costs",
            "exit_times",
            "sweeps",
            "seed",
            "certificate",
        ] {
            assert!(metrics.get(key).is_some(), "missing {key}");
        }
        assert_eq!(metrics["seed"], 7);
    }

    #[test]
    fn malformed_state_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let spec = quick_spec();
        run(&spec, dir.path(), 0).unwrap();
        let path = dir.path().join(TRAJECTORIES_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let truncated: Vec<&str> = text.lines().take(10).collect();
        fs::write(&path, truncated.join("\n")).unwrap();
        assert!(matches!(
            load_state(&spec, dir.path()),
            Err(Error::CorruptState { .. })
        ));

        fs::write(&path, text.replacen("0,0,3,", "0,0,4,", 1)).unwrap();
        assert!(matches!(
            load_state(&spec, dir.path()),
            Err(Error::CorruptState { .. })
        ));

        let missing = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_state(&spec, missing.path()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn frame_has_one_circle_per_player() {
        let spec = quick_spec();
        let state = GameState::initialize(&spec).unwrap();
        let svg = render_frame(&spec, &state, 0.36);
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains(r#"width="800""#));
        assert!(svg.contains(PALETTE[0]) && svg.contains(PALETTE[1]));
        // initial positions map to the left and right edges of the drawing area
        let start = render_frame(&spec, &state, 0.0);
        assert!(start.contains(r#"cx="40.00""#) && start.contains(r#"cx="760.00""#));
    }
}
