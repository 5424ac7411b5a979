// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A Hilbert-space dimension outside the supported domain.
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    /// An amplitude vector whose norm is too far from one.
    #[error("state is not normalized: |norm^2 - 1| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotNormalized { deviation: f64, tolerance: f64 },

    /// Two states (or a state and an operator) of incompatible dimensions.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A 1-based basis index outside `1..=dim`.
    #[error("basis index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    /// Amplitude found outside the physical subspace during projection.
    #[error("leakage outside the physical subspace: |amplitude| = {magnitude:.3e} at basis index {index}")]
    Leakage { index: usize, magnitude: f64 },

    /// The uniform-superposition reflection needs a power-of-two dimension.
    #[error("dimension {dim} is not a power of two; the uniform-state reflection is undefined")]
    NonPowerOfTwoDim { dim: usize },

    /// A drift or control generator that is not skew-Hermitian.
    #[error("{matrix}[{row}][{col}] violates skew-Hermiticity: |entry + conj(transpose entry)| = {magnitude:.3e}")]
    NotSkewHermitian {
        matrix: String,
        row: usize,
        col: usize,
        magnitude: f64,
    },

    /// A control schedule that fails its structural invariants.
    #[error("invalid control schedule: {reason}")]
    InvalidSchedule { reason: String },

    /// No eigenstate carries a certified reachability verdict for the target.
    #[error("target state lies outside every certified eigenstate-from reachable set")]
    NotSteerable,
}

pub type Result<T> = std::result::Result<T, Error>;
