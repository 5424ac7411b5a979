// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! The end-to-end control algorithm: embed the initial state, analyze the
//! eigenstate-from reachable sets, amplify the chosen eigenstate's amplitude,
//! measure once, and on a correct collapse steer to the target — plus a
//! Monte Carlo harness for the success statistics.
//!
//! Every trial takes exactly one measurement; a collapse onto the wrong
//! index (including a padding slot above the physical dimension) is recorded
//! as a failure of the probabilistic branch, never retried. All randomness is
//! derived from the experiment seed: the reachability and steering
//! optimizers, and each trial's measurement, get their own deterministic
//! streams, so identical configurations reproduce bit-identical results.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controllability::{
    build_reachability_report, choose_eigenstate, eigenstates, BilinearSystem, EigenstateSet,
    ReachabilityReport, Verdict,
};
use crate::error::{Error, Result};
use crate::grover::{
    grover_iterate, make_plan, predicted_amplitude_after, uniform_state, GroverPlan,
};
use crate::statevec::{embed, project, HilbertEmbedding, QuantumState};
use crate::steering::{optimize_controls, ControlSchedule, OptimizeConfig};

/// Default steering-success threshold: fidelity >= 1 - epsilon.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// |exact probability - closed-form prediction| above this sets the
/// divergence flag on the result.
pub const PREDICTION_DIVERGENCE_TOL: f64 = 1e-6;

/// What the register holds when amplification starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    /// Amplify the embedded initial state as given.
    AsGiven,
    /// Replace the register with the uniform superposition first.
    UniformPrep,
}

/// How many Grover rounds to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationMode {
    /// int(pi / 4 theta), the plan's closed-form count.
    PlannedJ,
    /// Scan j in 0 ..= 2 int(pi/4theta) + 2 and keep the count that
    /// maximizes the exact probability at the chosen index.
    ExactOptJ,
}

/// Full description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub system: BilinearSystem,
    /// Initial state psi_0, dimension n, in the lab basis.
    pub initial: QuantumState,
    /// Target state psi_d, dimension n, in the lab basis.
    pub target: QuantumState,
    pub prep_mode: PrepMode,
    pub iteration_mode: IterationMode,
    /// Budget for the reachability and steering optimizers. Its `seed` field
    /// is ignored here: the pipeline derives all optimizer streams from
    /// [`ExperimentConfig::seed`].
    pub steering: OptimizeConfig,
    /// Steering success threshold (certificates require fidelity >= 1 - epsilon).
    pub epsilon: f64,
    /// Master seed for the whole experiment.
    pub seed: u64,
    /// Warm-start the steering branch with the reachability certificate
    /// (the default); disable for cold-start optimizer benchmarks.
    #[serde(default = "default_warm_start")]
    pub warm_start_steering: bool,
}

fn default_warm_start() -> bool {
    true
}

/// Record of one execution of the algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    /// 1-based eigenstate the algorithm amplified toward.
    pub chosen_eigenstate: usize,
    /// Grover rounds actually applied.
    pub grover_iterations: usize,
    /// Exact probability of measuring the chosen index before collapse.
    pub pre_measurement_probability: f64,
    /// sin^2((2j+1) theta), the closed-form prediction at the used j.
    pub predicted_probability: f64,
    /// Set when exact and predicted probabilities disagree beyond
    /// [`PREDICTION_DIVERGENCE_TOL`] (expected off the uniform start).
    pub prediction_divergence: bool,
    /// 1-based measurement outcome.
    pub outcome: usize,
    /// Outcome landed on the chosen eigenstate.
    pub collapsed_correctly: bool,
    /// Outcome landed on a padding slot above the physical dimension.
    pub padding_outcome: bool,
    /// Fidelity achieved by the steering branch; absent when the
    /// measurement branch already failed.
    pub steering_fidelity: Option<f64>,
    /// Measurement branch succeeded and steering reached 1 - epsilon.
    pub success: bool,
    /// State norms after embedding, after each Grover round, and after
    /// collapse.
    pub norm_trace: Vec<f64>,
}

/// Aggregate statistics over repeated seeded trials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub trials: usize,
    /// Fraction of trials with overall success.
    pub success_rate: f64,
    /// Fraction of trials whose measurement collapsed onto the chosen index.
    pub measurement_success_rate: f64,
    /// Exact pre-measurement probability (deterministic given the config);
    /// the sampled measurement rate should match it within binomial noise.
    pub pre_measurement_probability: f64,
    /// Closed-form prediction at the used iteration count.
    pub closed_form_prediction: f64,
    pub grover_iterations: usize,
    pub chosen_eigenstate: usize,
    pub padding_failures: usize,
    pub steering_failures: usize,
    /// Seconds per trial; excluded from serialized output so identical
    /// configurations produce byte-identical JSON.
    #[serde(skip)]
    pub wall_clock_per_trial: f64,
}

/// One row of the per-trial Monte Carlo record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: usize,
    pub pre_measurement_probability: f64,
    pub success: bool,
}

const STREAM_ANALYSIS: u64 = 0x5eed_0001;
const STREAM_STEER: u64 = 0x5eed_0002;

fn derive_seed(base: u64, tag: u64) -> u64 {
    // splitmix64 of base ^ tag: cheap, well-mixed, reproducible.
    let mut z = base ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn trial_rng(base: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(base, 0x5eed_0003));
    rng.set_stream(trial);
    rng
}

/// Deterministic part of an experiment, shared by every trial: the analysis,
/// the amplified register, and (lazily, since it only matters after a correct
/// collapse) the steering result from the chosen eigenstate.
pub struct PreparedExperiment {
    cfg: ExperimentConfig,
    embedding: HilbertEmbedding,
    eigen: EigenstateSet,
    /// Per-eigenstate reachability analysis for the target.
    pub report: ReachabilityReport,
    /// 1-based eigenstate chosen by the amplitude rule.
    pub chosen: usize,
    certificate: Option<ControlSchedule>,
    /// Closed-form plan for the chosen index.
    pub plan: GroverPlan,
    iterations_used: usize,
    amplified: QuantumState,
    p_pre: f64,
    predicted_probability: f64,
    norm_prefix: Vec<f64>,
    steering_result: OnceLock<Result<f64>>,
}

impl PreparedExperiment {
    /// Runs steps (i)-(iii): embedding, reachability analysis, eigenstate
    /// choice, and amplification. Fails with [`Error::NotSteerable`] when no
    /// eigenstate is certified for the target.
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let sys = &cfg.system;
        let n = sys.dim();
        for state in [&cfg.initial, &cfg.target] {
            if state.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: state.dim(),
                });
            }
        }
        let embedding = HilbertEmbedding::for_levels(n)?;
        let eigen = eigenstates(sys);

        // (i) Express psi_0 in the eigenbasis of H0 and pad to 2^N slots.
        let coefficients: Vec<Complex64> = eigen
            .states
            .iter()
            .map(|e| {
                e.amplitudes()
                    .iter()
                    .zip(cfg.initial.amplitudes())
                    .map(|(a, b)| a.conj() * b)
                    .sum()
            })
            .collect();
        let psi_embedded = embed(&coefficients)?;
        let mut norm_prefix = vec![psi_embedded.norm()];

        // (ii) Reachable-set analysis for the target, then the amplitude rule.
        let mut budget = cfg.steering.clone();
        budget.seed = derive_seed(cfg.seed, STREAM_ANALYSIS);
        let report = build_reachability_report(sys, &cfg.target, &budget, cfg.epsilon)?;
        let chosen = choose_eigenstate(&psi_embedded, &report)?;
        let certificate = report.entry(chosen).and_then(|e| match &e.verdict {
            Verdict::Reachable { certificate, .. } => Some(certificate.clone()),
            Verdict::Unknown => None,
        });

        // (iii) Amplify the chosen index.
        let plan = make_plan(embedding.qubits, chosen)?;
        let register = match cfg.prep_mode {
            PrepMode::AsGiven => psi_embedded,
            PrepMode::UniformPrep => uniform_state(embedding.qubits),
        };
        let iterations_used = match cfg.iteration_mode {
            IterationMode::PlannedJ => plan.iterations,
            IterationMode::ExactOptJ => {
                let mut best = (0usize, register.born_probabilities()[chosen - 1]);
                let mut state = register.clone();
                for j in 1..=(2 * plan.iterations + 2) {
                    state = grover_iterate(&state, chosen, 1)?;
                    let p = state.born_probabilities()[chosen - 1];
                    if p > best.1 {
                        best = (j, p);
                    }
                }
                best.0
            }
        };
        let mut amplified = register;
        for _ in 0..iterations_used {
            amplified = grover_iterate(&amplified, chosen, 1)?;
            norm_prefix.push(amplified.norm());
        }
        let p_pre = amplified.born_probabilities()[chosen - 1];
        let predicted_probability = predicted_amplitude_after(iterations_used, plan.theta).powi(2);

        Ok(Self {
            cfg: cfg.clone(),
            embedding,
            eigen,
            report,
            chosen,
            certificate,
            plan,
            iterations_used,
            amplified,
            p_pre,
            predicted_probability,
            norm_prefix,
            steering_result: OnceLock::new(),
        })
    }

    /// Exact probability that the single measurement collapses correctly.
    pub fn pre_measurement_probability(&self) -> f64 {
        self.p_pre
    }

    pub fn iterations_used(&self) -> usize {
        self.iterations_used
    }

    /// Steering fidelity from the chosen eigenstate to the target, computed
    /// once (warm-started by the reachability certificate) and reused by
    /// every successful trial: the inputs are identical each time.
    fn steering_fidelity(&self) -> Result<f64> {
        self.steering_result
            .get_or_init(|| {
                let mut steering = self.cfg.steering.clone();
                steering.seed = derive_seed(self.cfg.seed, STREAM_STEER);
                steering.warm_start = if self.cfg.warm_start_steering {
                    self.certificate.clone()
                } else {
                    None
                };
                let source = &self.eigen.states[self.chosen - 1];
                optimize_controls(&self.cfg.system, source, &self.cfg.target, &steering)
                    .map(|outcome| outcome.fidelity)
            })
            .clone()
    }

    /// Steps (iv)-(v) for one trial: measure once, and steer on a correct
    /// collapse. The injected RNG is consumed only by the measurement.
    pub fn run_trial<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ExperimentResult> {
        let (outcome, collapsed) = self.amplified.measure(rng);
        let collapsed_correctly = outcome == self.chosen;
        let padding_outcome = outcome > self.embedding.levels;
        let mut norm_trace = self.norm_prefix.clone();
        norm_trace.push(collapsed.norm());

        let steering_fidelity = if collapsed_correctly {
            // Map the register index back to the physical eigenstate: the
            // collapsed state is |k> with zero padding amplitude, so the
            // projection must succeed.
            let projected = project(&collapsed, self.embedding.levels)?;
            debug_assert!((projected.born_probabilities()[self.chosen - 1] - 1.0).abs() < 1e-12);
            Some(self.steering_fidelity()?)
        } else {
            None
        };
        let success =
            collapsed_correctly && steering_fidelity.is_some_and(|f| f >= 1.0 - self.cfg.epsilon);

        Ok(ExperimentResult {
            chosen_eigenstate: self.chosen,
            grover_iterations: self.iterations_used,
            pre_measurement_probability: self.p_pre,
            predicted_probability: self.predicted_probability,
            prediction_divergence: (self.p_pre - self.predicted_probability).abs()
                > PREDICTION_DIVERGENCE_TOL,
            outcome,
            collapsed_correctly,
            padding_outcome,
            steering_fidelity,
            success,
            norm_trace,
        })
    }
}

/// Executes the full algorithm once. The RNG drives only the measurement;
/// everything else is deterministic given the config.
pub fn run_algorithm<R: Rng + ?Sized>(
    cfg: &ExperimentConfig,
    rng: &mut R,
) -> Result<ExperimentResult> {
    PreparedExperiment::new(cfg)?.run_trial(rng)
}

/// [`run_algorithm`] with the trial RNG derived from the config seed.
pub fn run_seeded(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_algorithm(cfg, &mut trial_rng(cfg.seed, 0))
}

/// Runs `trials` independent seeded trials of the prepared experiment and
/// aggregates the outcome statistics.
pub fn monte_carlo(
    cfg: &ExperimentConfig,
    trials: usize,
) -> Result<(MonteCarloSummary, Vec<TrialRecord>)> {
    assert!(trials >= 1, "at least one trial is required");
    let prepared = PreparedExperiment::new(cfg)?;
    let started = Instant::now();
    let mut records = Vec::with_capacity(trials);
    let mut successes = 0usize;
    let mut measurement_successes = 0usize;
    let mut padding_failures = 0usize;
    let mut steering_failures = 0usize;
    for trial in 0..trials {
        let result = prepared.run_trial(&mut trial_rng(cfg.seed, trial as u64))?;
        if result.success {
            successes += 1;
        }
        if result.collapsed_correctly {
            measurement_successes += 1;
            if !result.success {
                steering_failures += 1;
            }
        }
        if result.padding_outcome {
            padding_failures += 1;
        }
        records.push(TrialRecord {
            trial,
            outcome: result.outcome,
            pre_measurement_probability: result.pre_measurement_probability,
            success: result.success,
        });
    }
    let elapsed = started.elapsed().as_secs_f64();
    let summary = MonteCarloSummary {
        trials,
        success_rate: successes as f64 / trials as f64,
        measurement_success_rate: measurement_successes as f64 / trials as f64,
        pre_measurement_probability: prepared.p_pre,
        closed_form_prediction: prepared.predicted_probability,
        grover_iterations: prepared.iterations_used,
        chosen_eigenstate: prepared.chosen,
        padding_failures,
        steering_failures,
        wall_clock_per_trial: elapsed / trials as f64,
    };
    Ok((summary, records))
}
