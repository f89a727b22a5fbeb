use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use crowdgame::scenario::build_demo_scenario;
use crowdgame::{
    identity_check, load_spec, run, verify, CostModel, EquilibriumCertificate, RunOutput, TimeGrid,
};

const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_CERTIFICATION_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "crowdgame",
    version,
    about = "Crowd-motion potential game solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write trajectories, metrics and frames.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Certification seed (defaults to solver.rng_seed from the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Leave wall-clock timings out of metrics.json.
        #[arg(long)]
        deterministic: bool,
    },
    /// Reload a previous run and search for profitable deviations.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Output directory of a previous `solve`.
        #[arg(long)]
        state: PathBuf,
        /// Relative tolerance; `inf` always passes.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve the two-population crossing scenario.
    Demo {
        /// Agents per population.
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "demo_out")]
        out: PathBuf,
    },
    /// Check the exact measure identities on random measures and print the largest residuals.
    CheckIdentities {
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Solve {
            config,
            out,
            seed,
            deterministic,
        } => {
            let mut spec = load_spec(&config)?;
            spec.solver.deterministic |= deterministic;
            let seed = seed.unwrap_or(spec.solver.rng_seed);
            let output =
                run(&spec, &out, seed).with_context(|| format!("solving {}", config.display()))?;
            Ok(summarize(&output))
        }
        Command::Verify {
            config,
            state,
            epsilon,
        } => {
            let spec = load_spec(&config)?;
            let cert = verify(&spec, &state, epsilon)?;
            print_certificate(&cert);
            println!("{}", serde_json::to_string_pretty(&cert)?);
            Ok(if cert.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CERTIFICATION_FAILED)
            })
        }
        Command::Demo { n, out } => {
            anyhow::ensure!(n >= 1, "--n must be at least 1");
            let spec = build_demo_scenario(n, TimeGrid::new(3.0, 100)?);
            let output = run(&spec, &out, spec.solver.rng_seed)?;
            Ok(summarize(&output))
        }
        Command::CheckIdentities { trials } => {
            anyhow::ensure!(trials >= 1, "--trials must be at least 1");
            let r = identity_check(trials, 0, &CostModel::default())?;
            println!("trials                       {}", r.trials);
            println!("second-order expansion       {:.3e}", r.derivative);
            println!("J = 2L + H split             {:.3e}", r.j_split);
            println!("mean cost vs L + H           {:.3e}", r.mean_cost);
            println!("linearity in the weights     {:.3e}", r.linearity);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn summarize(output: &RunOutput) -> ExitCode {
    let m = &output.metrics;
    let first = m.potential_history[0];
    let last = m.potential_history[m.potential_history.len() - 1];
    println!(
        "{} players, {} sweeps, J {first:.6} -> {last:.6}, converged: {}",
        output.state.len(),
        m.sweeps.len(),
        m.converged
    );
    let latest = m
        .exit_times
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    println!("latest smoothed exit time {latest:.4}");
    print_certificate(&m.certificate);
    println!("wrote {}", output.out_dir.display());
    if m.converged {
        ExitCode::SUCCESS
    } else {
        eprintln!("warning: no convergence within solver.max_sweeps");
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}

fn print_certificate(cert: &EquilibriumCertificate) {
    println!(
        "certificate (epsilon {}, {} restarts): {}",
        cert.epsilon,
        cert.restarts,
        if cert.passed { "passed" } else { "FAILED" }
    );
    for g in &cert.players {
        println!(
            "  player {:>3} pop {} cost {:.6} best gain {:+.3e}{}",
            g.player,
            g.population,
            g.cost,
            g.best_improvement,
            if g.passed { "" } else { "  <- deviation" }
        );
    }
}
