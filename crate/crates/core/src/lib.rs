// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulator and toolkit for steering bilinear quantum systems that need not
//! be completely controllable.
//!
//! The crate models finite-dimensional bilinear systems
//! |psi_dot> = (A + sum_i u_i(t) B_i)|psi> with skew-Hermitian generators,
//! classifies their controllability through the dynamical Lie algebra rank
//! test, and executes a measurement-based control scheme: express the state
//! over the drift Hamiltonian's eigenbasis on a qubit register, amplify the
//! amplitude of a reachability-certified eigenstate by Grover iteration,
//! collapse onto it with a single projective measurement, then steer from
//! that eigenstate to the target with a piecewise-constant pulse found by
//! gradient ascent.
//!
//! Modules follow the stages of that scheme:
//!
//! - [`statevec`] — state vectors, the n-level to 2^N qubit embedding,
//!   Born-rule measurement and collapse.
//! - [`grover`] — the two reflections, the iteration, and the closed-form
//!   angle/iteration-count bookkeeping.
//! - [`controllability`] — the bilinear model, Lie-algebra closure, rank
//!   classification, and eigenstate-from reachable-set analysis.
//! - [`steering`] — unitary propagation of control schedules and the
//!   fidelity-maximizing optimizer that mints reachability certificates.
//! - [`pipeline`] — the end-to-end algorithm plus a Monte Carlo harness.
//!
//! Dimensions here are desk-scale (dense vectors and matrices, n up to a few
//! dozen); nothing is sparse and nothing needs to be. All operations are
//! pure; measurement takes an explicit seeded RNG, so every experiment is
//! replayable.

pub mod controllability;
pub mod error;
pub mod grover;
pub mod linalg;
pub mod pipeline;
pub mod statevec;
pub mod steering;

pub use controllability::{
    build_reachability_report, choose_eigenstate, eigenstates, generate_lie_algebra,
    is_completely_controllable, orbit_dimension, reachable_membership, BilinearSystem,
    Controllability, EigenstateSet, LieAlgebraBasis, ReachabilityEntry, ReachabilityReport,
    Verdict,
};
pub use error::{Error, Result};
pub use grover::{
    apply_uk, apply_us, grover_iterate, make_plan, predicted_amplitude_after, uniform_state,
    GroverPlan,
};
pub use pipeline::{
    monte_carlo, run_algorithm, run_seeded, ExperimentConfig, ExperimentResult, IterationMode,
    MonteCarloSummary, PrepMode, PreparedExperiment, TrialRecord,
};
pub use statevec::{embed, num_qubits, project, HilbertEmbedding, QuantumState};
pub use steering::{
    fidelity_gradient, fidelity_objective, optimize_controls, propagate, ControlSchedule,
    OptimizeConfig, OptimizeOutcome,
};
