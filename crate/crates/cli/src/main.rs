//! Command-line front end: run one scenario from a JSON configuration, sweep
//! random instances against the universal identities, or list the named
//! presets the configuration schema accepts.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 for configuration or input errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qfluct_core::scenario::{
    run_scenario_detailed, sweep, write_trajectory_csv, Dims, ModeSpec, ScenarioConfig, SweepConfig,
};
use qfluct_core::tolerance::ToleranceProfile;

#[derive(Parser)]
#[command(
    name = "qfluct",
    version,
    about = "Verify fluctuation relations of bipartite quantum processes \
             by exact enumeration or Monte Carlo sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a JSON configuration file.
    Run {
        /// Path to the scenario configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the configured mode: `exact` or `sample`.
        #[arg(long)]
        mode: Option<String>,
        /// Sample count (sample mode).
        #[arg(long)]
        samples: Option<usize>,
        /// Sampler seed (sample mode).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for sampling; never changes the estimate.
        #[arg(long)]
        workers: Option<usize>,
        /// Write the supported trajectories with their increments as CSV.
        #[arg(long)]
        dump_trajectories: Option<PathBuf>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the universal identities on seeded random instances.
    Sweep {
        /// Number of random instances.
        #[arg(long)]
        n: usize,
        /// Dimensions as `dA,dB,dR`.
        #[arg(long)]
        dims: String,
        /// Inverse temperatures, comma separated, cycled across instances.
        #[arg(long, default_value = "1.0")]
        beta: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON sweep report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect the named presets available in configuration files.
    Presets {
        #[command(subcommand)]
        action: PresetsAction,
    },
}

#[derive(Subcommand)]
enum PresetsAction {
    /// List every named preset with its requirements.
    List,
}

/// Anything that should terminate the process with exit code 2.
struct ConfigFailure(String);

impl<E: std::fmt::Display> From<E> for ConfigFailure {
    fn from(e: E) -> Self {
        ConfigFailure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(ConfigFailure(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, ConfigFailure> {
    match cli.command {
        Command::Run {
            config,
            mode,
            samples,
            seed,
            workers,
            dump_trajectories,
            out,
        } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| ConfigFailure(format!("cannot read {}: {e}", config.display())))?;
            let mut scenario = ScenarioConfig::from_json(&text)?;
            apply_mode_overrides(&mut scenario, mode.as_deref(), samples, seed, workers)?;
            apply_profile_override(&mut scenario)?;

            let output = run_scenario_detailed::<f64>(&scenario)?;
            if let Some(path) = dump_trajectories {
                let mut file = fs::File::create(&path)
                    .map_err(|e| ConfigFailure(format!("cannot create {}: {e}", path.display())))?;
                write_trajectory_csv(&output.frame, &output.ensemble, &mut file)?;
            }
            let json = serde_json::to_string_pretty(&output.report).expect("report serializes");
            emit(out.as_deref(), &json)?;
            for check in &output.report.checks {
                eprintln!(
                    "check {:<20} {}  value {:+.3e}  limit {:.1e}",
                    check.name,
                    if check.passed { "pass" } else { "FAIL" },
                    check.value,
                    check.limit,
                );
            }
            Ok(output.report.passed)
        }
        Command::Sweep {
            n,
            dims,
            beta,
            seed,
            out,
        } => {
            let config = SweepConfig {
                instances: n,
                dims: parse_dims(&dims)?,
                betas: parse_betas(&beta)?,
                seed,
            };
            let profile = ToleranceProfile::from_env()?;
            let report = sweep(&config, profile)?;
            let json = serde_json::to_string_pretty(&report).expect("sweep report serializes");
            emit(out.as_deref(), &json)?;
            eprintln!(
                "sweep: {}/{} instances passed; worst identity deviation {:.3e}, \
                 worst detailed-ratio residual {:.3e}, min inequality slack {:+.3e}",
                report.rows.iter().filter(|r| r.passed).count(),
                report.rows.len(),
                report.summary.worst_ift_deficit,
                report.summary.worst_crooks_residual,
                report.summary.min_inequality_slack,
            );
            Ok(report.passed)
        }
        Command::Presets {
            action: PresetsAction::List,
        } => {
            print!("{}", preset_listing());
            Ok(true)
        }
    }
}

fn apply_mode_overrides(
    scenario: &mut ScenarioConfig,
    mode: Option<&str>,
    samples: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
) -> Result<(), ConfigFailure> {
    match mode {
        Some("exact") => {
            scenario.mode = ModeSpec::Exact;
            if samples.is_some() || seed.is_some() || workers.is_some() {
                return Err(ConfigFailure(
                    "--samples/--seed/--workers have no effect in exact mode".into(),
                ));
            }
            Ok(())
        }
        Some("sample") => {
            let (base_samples, base_seed, base_workers) = match scenario.mode {
                ModeSpec::Sample {
                    samples,
                    seed,
                    workers,
                } => (samples, seed, workers),
                ModeSpec::Exact => (100_000, 0, 1),
            };
            scenario.mode = ModeSpec::Sample {
                samples: samples.unwrap_or(base_samples),
                seed: seed.unwrap_or(base_seed),
                workers: workers.unwrap_or(base_workers),
            };
            Ok(())
        }
        Some(other) => Err(ConfigFailure(format!(
            "unknown mode `{other}`; expected `exact` or `sample`"
        ))),
        None => {
            if samples.is_none() && seed.is_none() && workers.is_none() {
                return Ok(());
            }
            match &mut scenario.mode {
                ModeSpec::Sample {
                    samples: s,
                    seed: sd,
                    workers: w,
                } => {
                    if let Some(x) = samples {
                        *s = x;
                    }
                    if let Some(x) = seed {
                        *sd = x;
                    }
                    if let Some(x) = workers {
                        *w = x;
                    }
                    Ok(())
                }
                ModeSpec::Exact => Err(ConfigFailure(
                    "--samples/--seed/--workers require sample mode \
                     (pass --mode sample or configure it in the file)"
                        .into(),
                )),
            }
        }
    }
}

/// `QFLUCT_TOL`, when set, wins over the profile named in the file.
fn apply_profile_override(scenario: &mut ScenarioConfig) -> Result<(), ConfigFailure> {
    if let Some(text) = std::env::var_os("QFLUCT_TOL") {
        let profile = ToleranceProfile::parse(&text.to_string_lossy()).ok_or_else(|| {
            ConfigFailure(format!(
                "QFLUCT_TOL must be 'default' or 'strict', got '{}'",
                text.to_string_lossy()
            ))
        })?;
        scenario.tolerance_profile = Some(profile.name().to_string());
    }
    Ok(())
}

fn parse_dims(text: &str) -> Result<Dims, ConfigFailure> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| ConfigFailure(format!("--dims must be `dA,dB,dR`: {e}")))?;
    if parts.len() != 3 {
        return Err(ConfigFailure(format!(
            "--dims must have exactly three entries, got {}",
            parts.len()
        )));
    }
    Ok(Dims {
        d_a: parts[0],
        d_b: parts[1],
        d_r: parts[2],
    })
}

fn parse_betas(text: &str) -> Result<Vec<f64>, ConfigFailure> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| ConfigFailure(format!("--beta must be comma-separated numbers: {e}")))
        })
        .collect()
}

fn emit(out: Option<&std::path::Path>, json: &str) -> Result<(), ConfigFailure> {
    match out {
        Some(path) => {
            let mut file = fs::File::create(path)
                .map_err(|e| ConfigFailure(format!("cannot create {}: {e}", path.display())))?;
            writeln!(file, "{json}")?;
            Ok(())
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn preset_listing() -> String {
    "\
initial_state presets:
  bell                       maximally entangled two-qubit state (needs d_a = d_b = 2)
  superposed-toffoli-input   |++><++| x |0><0| on 4x2 (needs d_a = 4, d_b = 2)
  product-mixed              full-rank product of descending-weight mixtures (any dims)
  random {seed, rank}        seeded random state of the given rank on A x B

reservoir_hamiltonian presets:
  zero                       all levels at energy zero
  ladder {step}              equally spaced levels 0, step, 2*step, ...

unitary presets:
  identity                   no evolution
  toffoli                    doubly controlled flip on 4x2, identity on R
  swap-ar {angle}            cos(angle)*1 + i sin(angle)*SWAP between A and R (needs d_a = d_r)
  swap-br {angle}            same between B and R (needs d_b = d_r)
  haar {seed}                seeded Haar-random unitary on the full space

modes: \"exact\" | {\"sample\": {\"samples\": N, \"seed\": S, \"workers\": W}}
checks: ift, crooks, inequality, kl_identity, average_identities,
        normalization, landauer_classical, landauer_quantum
"
    .to_string()
}
