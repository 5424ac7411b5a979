// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Grover amplitude amplification over a 2^N-dimensional register.
//!
//! The two reflections are applied in O(2^N) vector form: U_s inverts every
//! amplitude about the mean (2<a> - a_i) and U_k flips the sign of the target
//! amplitude. One Grover iteration is U_G = U_s U_k, i.e. the sign flip acts
//! first. Starting from the uniform superposition the target amplitude after
//! j iterations is sin((2j+1)theta) with sin^2(theta) = 2^-N, and iterating
//! int(pi/4theta) times leaves the failure probability at most 2^-N.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::QuantumState;

/// Iteration plan for amplifying basis state `k` on an N-qubit register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroverPlan {
    /// Qubit count.
    #[serde(rename = "N")]
    pub qubits: usize,
    /// Target basis index, 1-based.
    #[serde(rename = "k")]
    pub target: usize,
    /// Rotation angle with sin^2(theta) = 2^-N.
    pub theta: f64,
    /// int(pi / 4 theta).
    pub iterations: usize,
    /// sin((2j+1) theta) at j = `iterations`.
    pub predicted_amplitude: f64,
}

/// Integer part of a non-negative float, with a one-ulp guard so that ratios
/// that are mathematically integers (pi/4theta at N = 1 is exactly 1) do not
/// truncate to the value below after rounding.
fn int_part(x: f64) -> usize {
    debug_assert!(x >= 0.0);
    (x + 1e-9).floor() as usize
}

/// The equally weighted superposition of all 2^N computational basis states.
pub fn uniform_state(qubits: usize) -> QuantumState {
    assert!(qubits >= 1, "the register needs at least one qubit");
    assert!(qubits <= 30, "register size {qubits} is beyond desk scale");
    let dim = 1usize << qubits;
    let amp = num_complex::Complex64::new((dim as f64).powf(-0.5), 0.0);
    QuantumState::from_evolved(vec![amp; dim])
}

/// Inversion about the mean: a_i -> 2<a> - a_i.
///
/// Defined only on power-of-two dimensions, where the uniform state exists.
pub fn apply_us(state: &QuantumState) -> Result<QuantumState> {
    let dim = state.dim();
    if !dim.is_power_of_two() {
        return Err(Error::NonPowerOfTwoDim { dim });
    }
    let mean = state.amplitudes().iter().sum::<num_complex::Complex64>() / dim as f64;
    let twice_mean = 2.0 * mean;
    let amplitudes = state.amplitudes().iter().map(|a| twice_mean - a).collect();
    Ok(QuantumState::from_evolved(amplitudes))
}

/// Sign flip of the amplitude at the 1-based basis index `k`.
pub fn apply_uk(state: &QuantumState, k: usize) -> Result<QuantumState> {
    if k == 0 || k > state.dim() {
        return Err(Error::IndexOutOfRange {
            index: k,
            dim: state.dim(),
        });
    }
    let mut amplitudes = state.amplitudes().to_vec();
    amplitudes[k - 1] = -amplitudes[k - 1];
    Ok(QuantumState::from_evolved(amplitudes))
}

/// j rounds of the Grover iteration U_G = U_s U_k.
pub fn grover_iterate(state: &QuantumState, k: usize, rounds: usize) -> Result<QuantumState> {
    let mut current = state.clone();
    for _ in 0..rounds {
        current = apply_us(&apply_uk(&current, k)?)?;
    }
    Ok(current)
}

/// sin((2j+1) theta), the target amplitude after j iterations from the
/// uniform start.
pub fn predicted_amplitude_after(rounds: usize, theta: f64) -> f64 {
    ((2 * rounds + 1) as f64 * theta).sin()
}

/// Builds the amplification plan for target `k` on an N-qubit register.
pub fn make_plan(qubits: usize, target: usize) -> Result<GroverPlan> {
    assert!(qubits >= 1, "the register needs at least one qubit");
    let dim = 1usize << qubits;
    if target == 0 || target > dim {
        return Err(Error::IndexOutOfRange { index: target, dim });
    }
    let theta = (dim as f64).powf(-0.5).asin();
    let iterations = int_part(std::f64::consts::PI / (4.0 * theta));
    Ok(GroverPlan {
        qubits,
        target,
        theta,
        iterations,
        predicted_amplitude: predicted_amplitude_after(iterations, theta),
    })
}
