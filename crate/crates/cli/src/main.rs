// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front door: system ingestion, the five subcommands, config
//! handling, and machine-readable output.
//!
//! Every result is a JSON document on stdout (or `--output`), led by a run
//! manifest that pins the tool version, the fully resolved configuration,
//! the SHA-256 digests of every input file, and the seed. Nothing in the
//! body depends on wall-clock time, so identical flags, files, and seed
//! reproduce byte-identical output. Diagnostics and timings go to stderr.
//!
//! Exit codes: 0 on completion (including runs whose target turns out not to
//! be steerable — that verdict is a result, reported in the body), 2 for
//! usage errors, 3 for input validation and IO errors.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use eigensteer::pipeline::PREDICTION_DIVERGENCE_TOL;
use eigensteer::{
    eigenstates, generate_lie_algebra, grover_iterate, make_plan, monte_carlo, optimize_controls,
    orbit_dimension, predicted_amplitude_after, run_seeded, uniform_state, BilinearSystem,
    Controllability, Error as CoreError, ExperimentConfig, ExperimentResult, GroverPlan,
    IterationMode, MonteCarloSummary, OptimizeConfig, PrepMode, QuantumState,
};

const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "eigensteer",
    version,
    about = "Quantum control of not-necessarily-controllable bilinear systems: \
             controllability analysis, Grover-amplified measurement, and pulse steering",
    propagate_version = true
)]
struct Cli {
    /// Write the JSON result to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dynamical-Lie-algebra controllability analysis of a system file.
    Analyze(AnalyzeArgs),
    /// Amplitude amplification on an N-qubit register.
    Grover(GroverArgs),
    /// Steer one drift eigenstate toward a target state.
    Steer(SteerArgs),
    /// One full run of the measurement-based control algorithm.
    Run(RunArgs),
    /// Repeated seeded runs of the algorithm with summary statistics.
    Montecarlo(MonteCarloArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// System file: JSON {n, A, B} with complex entries as [re, im] pairs.
    #[arg(long)]
    system: PathBuf,
    /// Residual norm below which a commutator direction is discarded.
    #[arg(long, default_value_t = 1e-9)]
    closure_tol: f64,
    /// Relative singular-value cutoff for orbit-dimension ranks.
    #[arg(long, default_value_t = 1e-8)]
    rank_cutoff: f64,
}

#[derive(Args)]
struct GroverArgs {
    /// Register size N (dimension 2^N).
    #[arg(long)]
    qubits: usize,
    /// Target basis index k, 1-based.
    #[arg(long)]
    target: usize,
    /// Override the planned iteration count int(pi/4theta).
    #[arg(long)]
    iterations: Option<usize>,
    /// Initial register state: `uniform` or `file:<path>` with a state JSON.
    #[arg(long, default_value = "uniform")]
    initial: String,
}

#[derive(Args)]
struct SteeringFlags {
    /// Piecewise-constant control segments M.
    #[arg(long, default_value_t = 20)]
    segments: usize,
    /// Segment duration.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Seeded random restarts of the control optimizer.
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    /// Gradient-ascent iteration cap per restart.
    #[arg(long, default_value_t = 200)]
    max_iters: usize,
    /// Initial ascent step size.
    #[arg(long, default_value_t = 1.0)]
    step_size: f64,
    /// Control amplitude bound |u| <= u_max.
    #[arg(long, default_value_t = 10.0)]
    u_max: f64,
    /// Stop a restart early once this fidelity is reached.
    #[arg(long, default_value_t = 0.9995)]
    target_fidelity: f64,
}

impl SteeringFlags {
    fn to_config(&self, seed: u64) -> OptimizeConfig {
        OptimizeConfig {
            segments: self.segments,
            dt: self.dt,
            restarts: self.restarts,
            max_iters: self.max_iters,
            step_size: self.step_size,
            u_max: self.u_max,
            seed,
            target_fidelity: self.target_fidelity,
            warm_start: None,
        }
    }
}

#[derive(Args)]
struct SteerArgs {
    /// System file: JSON {n, A, B}.
    #[arg(long)]
    system: PathBuf,
    /// Source eigenstate of the drift Hamiltonian, 1-based, energies ascending.
    #[arg(long)]
    from_eigenstate: usize,
    /// Target state file: JSON array of [re, im] pairs, dimension n.
    #[arg(long)]
    target: PathBuf,
    /// Certificate threshold: reachable means fidelity >= 1 - epsilon.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// RNG seed for the optimizer restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    steering: SteeringFlags,
}

#[derive(Args)]
struct RunCommonArgs {
    /// System file: JSON {n, A, B}.
    #[arg(long)]
    system: PathBuf,
    /// Initial state psi_0 file, dimension n, lab basis.
    #[arg(long)]
    initial: PathBuf,
    /// Target state psi_d file, dimension n, lab basis.
    #[arg(long)]
    target: PathBuf,
    /// Register contents when amplification starts.
    #[arg(long, value_enum, default_value_t = PrepModeArg::AsGiven)]
    prep_mode: PrepModeArg,
    /// Grover iteration count rule.
    #[arg(long, value_enum, default_value_t = IterationModeArg::PlannedJ)]
    iteration_mode: IterationModeArg,
    /// Steering success threshold: success needs fidelity >= 1 - epsilon.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Master seed; every random stream in the experiment derives from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ignore the reachability certificate when steering (cold-start
    /// optimizer benchmark).
    #[arg(long)]
    cold_steering: bool,
    #[command(flatten)]
    steering: SteeringFlags,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: RunCommonArgs,
}

#[derive(Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    common: RunCommonArgs,
    /// Number of independent seeded trials.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Also write per-trial rows (trial, outcome, p_pre, success) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrepModeArg {
    #[value(name = "as_given")]
    AsGiven,
    #[value(name = "uniform_prep")]
    UniformPrep,
}

impl From<PrepModeArg> for PrepMode {
    fn from(value: PrepModeArg) -> Self {
        match value {
            PrepModeArg::AsGiven => PrepMode::AsGiven,
            PrepModeArg::UniformPrep => PrepMode::UniformPrep,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IterationModeArg {
    #[value(name = "planned_j")]
    PlannedJ,
    #[value(name = "exact_opt_j")]
    ExactOptJ,
}

impl From<IterationModeArg> for IterationMode {
    fn from(value: IterationModeArg) -> Self {
        match value {
            IterationModeArg::PlannedJ => IterationMode::PlannedJ,
            IterationModeArg::ExactOptJ => IterationMode::ExactOptJ,
        }
    }
}

/// Input validation or IO failure; maps to exit code 3.
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

type CliResult<T> = Result<T, InputError>;

fn input_err(message: impl Into<String>) -> InputError {
    InputError(message.into())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text =
        fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    Ok(format!("sha256:{}", hex::encode(Sha256::digest(&bytes))))
}

fn digests(paths: &[&Path]) -> CliResult<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), file_digest(p)?)))
        .collect()
}

/// Provenance block emitted with every output.
#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    subcommand: &'static str,
    config: serde_json::Value,
    input_digests: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn emit<T: Serialize>(output: Option<&Path>, value: &T) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value)
        .map_err(|e| input_err(format!("serializing output: {e}")))?;
    body.push('\n');
    match output {
        Some(path) => {
            fs::write(path, body).map_err(|e| input_err(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let output = cli.output.clone();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args, output.as_deref()),
        Command::Grover(args) => cmd_grover(args, output.as_deref()),
        Command::Steer(args) => cmd_steer(args, output.as_deref()),
        Command::Run(args) => cmd_run(args, output.as_deref()),
        Command::Montecarlo(args) => cmd_montecarlo(args, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

#[derive(Serialize)]
struct EigenstateRow {
    index: usize,
    energy: f64,
    orbit_dimension: usize,
}

#[derive(Serialize)]
struct AnalyzeOutput {
    manifest: RunManifest,
    lie_dim: usize,
    classification: Controllability,
    degenerate_spectrum: bool,
    eigenstates: Vec<EigenstateRow>,
}

fn cmd_analyze(args: AnalyzeArgs, output: Option<&Path>) -> CliResult<()> {
    if !(args.closure_tol > 0.0 && args.closure_tol <= 1e-4) {
        return Err(input_err(format!(
            "--closure-tol must lie in (0, 1e-4], got {}",
            args.closure_tol
        )));
    }
    let system: BilinearSystem = read_json(&args.system)?;
    let basis = generate_lie_algebra(&system, args.closure_tol);
    let eigen = eigenstates(&system);
    let rows = eigen
        .states
        .iter()
        .zip(&eigen.energies)
        .enumerate()
        .map(|(idx, (state, &energy))| EigenstateRow {
            index: idx + 1,
            energy,
            orbit_dimension: orbit_dimension(&basis, state, args.rank_cutoff),
        })
        .collect();
    let manifest = RunManifest {
        tool_version: TOOL_VERSION,
        subcommand: "analyze",
        config: serde_json::json!({
            "system": args.system.display().to_string(),
            "closure_tol": args.closure_tol,
            "rank_cutoff": args.rank_cutoff,
        }),
        input_digests: digests(&[&args.system])?,
        seed: None,
    };
    emit(
        output,
        &AnalyzeOutput {
            manifest,
            lie_dim: basis.dim(),
            classification: basis.classification(),
            degenerate_spectrum: eigen.degenerate,
            eigenstates: rows,
        },
    )
}

#[derive(Serialize)]
struct GroverOutput {
    manifest: RunManifest,
    plan: GroverPlan,
    iterations_used: usize,
    initial: QuantumState,
    final_state: QuantumState,
    probabilities: Vec<f64>,
    probability_at_target: f64,
    predicted_probability: f64,
    prediction_divergence: bool,
}

fn cmd_grover(args: GroverArgs, output: Option<&Path>) -> CliResult<()> {
    if args.qubits < 1 || args.qubits > 20 {
        return Err(input_err(format!(
            "--qubits must lie in 1..=20, got {}",
            args.qubits
        )));
    }
    let dim = 1usize << args.qubits;
    let plan = make_plan(args.qubits, args.target).map_err(|e| input_err(e.to_string()))?;
    let mut digest_paths: Vec<PathBuf> = Vec::new();
    let initial = match args.initial.as_str() {
        "uniform" => uniform_state(args.qubits),
        other => match other.strip_prefix("file:") {
            Some(path) => {
                let path = PathBuf::from(path);
                let state: QuantumState = read_json(&path)?;
                if state.dim() != dim {
                    return Err(input_err(format!(
                        "{}: state has dimension {}, the register needs {dim}",
                        path.display(),
                        state.dim()
                    )));
                }
                digest_paths.push(path);
                state
            }
            None => {
                return Err(input_err(format!(
                    "--initial must be `uniform` or `file:<path>`, got `{other}`"
                )))
            }
        },
    };
    let iterations_used = args.iterations.unwrap_or(plan.iterations);
    let final_state = grover_iterate(&initial, args.target, iterations_used)
        .map_err(|e| input_err(e.to_string()))?;
    let probabilities = final_state.born_probabilities();
    let probability_at_target = probabilities[args.target - 1];
    let predicted_probability = predicted_amplitude_after(iterations_used, plan.theta).powi(2);
    let manifest = RunManifest {
        tool_version: TOOL_VERSION,
        subcommand: "grover",
        config: serde_json::json!({
            "qubits": args.qubits,
            "target": args.target,
            "iterations": iterations_used,
            "initial": args.initial,
        }),
        input_digests: digests(
            &digest_paths
                .iter()
                .map(PathBuf::as_path)
                .collect::<Vec<_>>(),
        )?,
        seed: None,
    };
    emit(
        output,
        &GroverOutput {
            manifest,
            plan,
            iterations_used,
            initial,
            final_state,
            probabilities,
            probability_at_target,
            predicted_probability,
            prediction_divergence: (probability_at_target - predicted_probability).abs()
                > PREDICTION_DIVERGENCE_TOL,
        },
    )
}

#[derive(Serialize)]
struct SteerOutput {
    manifest: RunManifest,
    /// Fidelity of `schedule`, re-verified by independent propagation.
    fidelity: f64,
    /// Schedule counts as a reachability certificate: fidelity >= 1 - epsilon.
    certified: bool,
    iterations: usize,
    schedule: eigensteer::ControlSchedule,
}

fn cmd_steer(args: SteerArgs, output: Option<&Path>) -> CliResult<()> {
    let system: BilinearSystem = read_json(&args.system)?;
    let target: QuantumState = read_json(&args.target)?;
    if target.dim() != system.dim() {
        return Err(input_err(format!(
            "{}: target has dimension {}, the system has {}",
            args.target.display(),
            target.dim(),
            system.dim()
        )));
    }
    let eigen = eigenstates(&system);
    if args.from_eigenstate == 0 || args.from_eigenstate > eigen.states.len() {
        return Err(input_err(format!(
            "--from-eigenstate {} out of range 1..={}",
            args.from_eigenstate,
            eigen.states.len()
        )));
    }
    let mut cfg = args.steering.to_config(args.seed);
    cfg.target_fidelity = cfg.target_fidelity.max(1.0 - args.epsilon);
    let source = &eigen.states[args.from_eigenstate - 1];
    let outcome =
        optimize_controls(&system, source, &target, &cfg).map_err(|e| input_err(e.to_string()))?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION,
        subcommand: "steer",
        config: serde_json::json!({
            "system": args.system.display().to_string(),
            "from_eigenstate": args.from_eigenstate,
            "target": args.target.display().to_string(),
            "epsilon": args.epsilon,
            "steering": cfg,
        }),
        input_digests: digests(&[&args.system, &args.target])?,
        seed: Some(args.seed),
    };
    emit(
        output,
        &SteerOutput {
            manifest,
            fidelity: outcome.fidelity,
            certified: outcome.fidelity >= 1.0 - args.epsilon,
            iterations: outcome.iterations,
            schedule: outcome.schedule,
        },
    )
}

fn build_experiment(common: &RunCommonArgs) -> CliResult<ExperimentConfig> {
    let system: BilinearSystem = read_json(&common.system)?;
    let initial: QuantumState = read_json(&common.initial)?;
    let target: QuantumState = read_json(&common.target)?;
    for (path, state) in [(&common.initial, &initial), (&common.target, &target)] {
        if state.dim() != system.dim() {
            return Err(input_err(format!(
                "{}: state has dimension {}, the system has {}",
                path.display(),
                state.dim(),
                system.dim()
            )));
        }
    }
    Ok(ExperimentConfig {
        system,
        initial,
        target,
        prep_mode: common.prep_mode.into(),
        iteration_mode: common.iteration_mode.into(),
        steering: common.steering.to_config(common.seed),
        epsilon: common.epsilon,
        seed: common.seed,
        warm_start_steering: !common.cold_steering,
    })
}

fn run_manifest(
    subcommand: &'static str,
    common: &RunCommonArgs,
    cfg: &ExperimentConfig,
    extra: serde_json::Value,
) -> CliResult<RunManifest> {
    let mut config = serde_json::json!({
        "system": common.system.display().to_string(),
        "initial": common.initial.display().to_string(),
        "target": common.target.display().to_string(),
        "prep_mode": cfg.prep_mode,
        "iteration_mode": cfg.iteration_mode,
        "epsilon": cfg.epsilon,
        "steering": cfg.steering,
        "warm_start_steering": cfg.warm_start_steering,
    });
    if let serde_json::Value::Object(extra_map) = extra {
        if let serde_json::Value::Object(map) = &mut config {
            map.extend(extra_map);
        }
    }
    Ok(RunManifest {
        tool_version: TOOL_VERSION,
        subcommand,
        config,
        input_digests: digests(&[&common.system, &common.initial, &common.target])?,
        seed: Some(common.seed),
    })
}

#[derive(Serialize)]
struct NotSteerableBody {
    kind: &'static str,
    message: String,
}

#[derive(Serialize)]
#[serde(untagged)]
enum RunOutput {
    Done {
        manifest: RunManifest,
        result: ExperimentResult,
    },
    NotSteerable {
        manifest: RunManifest,
        error: NotSteerableBody,
    },
}

fn cmd_run(args: RunArgs, output: Option<&Path>) -> CliResult<()> {
    let cfg = build_experiment(&args.common)?;
    let manifest = run_manifest("run", &args.common, &cfg, serde_json::json!({}))?;
    match run_seeded(&cfg) {
        Ok(result) => emit(output, &RunOutput::Done { manifest, result }),
        Err(CoreError::NotSteerable) => {
            eprintln!("run: target is not steerable under the certified reachable sets");
            emit(
                output,
                &RunOutput::NotSteerable {
                    manifest,
                    error: NotSteerableBody {
                        kind: "not_steerable",
                        message: CoreError::NotSteerable.to_string(),
                    },
                },
            )
        }
        Err(e) => Err(input_err(e.to_string())),
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum MonteCarloOutput {
    Done {
        manifest: RunManifest,
        summary: MonteCarloSummary,
    },
    NotSteerable {
        manifest: RunManifest,
        error: NotSteerableBody,
    },
}

fn cmd_montecarlo(args: MonteCarloArgs, output: Option<&Path>) -> CliResult<()> {
    if args.trials == 0 {
        return Err(input_err("--trials must be at least 1"));
    }
    let cfg = build_experiment(&args.common)?;
    let manifest = run_manifest(
        "montecarlo",
        &args.common,
        &cfg,
        serde_json::json!({ "trials": args.trials }),
    )?;
    match monte_carlo(&cfg, args.trials) {
        Ok((summary, records)) => {
            eprintln!(
                "montecarlo: {} trials, {:.3} ms/trial",
                args.trials,
                summary.wall_clock_per_trial * 1e3
            );
            if let Some(csv_path) = &args.csv {
                let mut rows = String::from("trial,outcome,p_pre,success\n");
                for r in &records {
                    rows.push_str(&format!(
                        "{},{},{},{}\n",
                        r.trial, r.outcome, r.pre_measurement_probability, r.success
                    ));
                }
                fs::write(csv_path, rows)
                    .map_err(|e| input_err(format!("{}: {e}", csv_path.display())))?;
            }
            emit(output, &MonteCarloOutput::Done { manifest, summary })
        }
        Err(CoreError::NotSteerable) => {
            eprintln!("montecarlo: target is not steerable under the certified reachable sets");
            emit(
                output,
                &MonteCarloOutput::NotSteerable {
                    manifest,
                    error: NotSteerableBody {
                        kind: "not_steerable",
                        message: CoreError::NotSteerable.to_string(),
                    },
                },
            )
        }
        Err(e) => Err(input_err(e.to_string())),
    }
}
