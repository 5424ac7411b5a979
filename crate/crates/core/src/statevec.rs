// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Complex state vectors over n-level and 2^N-dimensional Hilbert spaces,
//! the qubit embedding used to run the amplification step, Born-rule
//! measurement, and collapse.
//!
//! Basis indices are 1-based everywhere in the public API: an n-level system
//! occupies basis states |1>..|n>, matching the labelling used throughout the
//! rest of the crate. Internally amplitudes are stored 0-based. Basis label
//! |i> corresponds to the qubit bitstring of i-1 with the first qubit as the
//! most significant bit; nothing observable depends on that choice because
//! every operator here is defined on index labels.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Tolerance on |norm^2 - 1| for a vector to count as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Normalization drift beyond this triggers explicit renormalization and
/// bumps the diagnostic counter; unitary arithmetic should never get here.
pub const RENORM_THRESHOLD: f64 = 1e-8;

/// Amplitude magnitude above this outside the physical subspace is leakage.
pub const LEAKAGE_TOLERANCE: f64 = 1e-8;

static RENORM_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of times an operation chain drifted far enough from unit norm that
/// a state had to be explicitly renormalized. Stays at zero in healthy runs.
pub fn renormalization_events() -> u64 {
    RENORM_EVENTS.load(Ordering::Relaxed)
}

/// A unit-norm complex amplitude vector over computational basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: Vec<Complex64>,
}

impl QuantumState {
    /// Builds a state from raw amplitudes, enforcing dim >= 1 and unit norm
    /// within [`NORM_TOLERANCE`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "a state needs at least one amplitude",
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let deviation = (norm_sq - 1.0).abs();
        if !deviation.is_finite() || deviation > NORM_TOLERANCE {
            return Err(Error::NotNormalized {
                deviation,
                tolerance: NORM_TOLERANCE,
            });
        }
        Ok(Self { amplitudes })
    }

    /// The basis state |k> (1-based) of the given dimension.
    pub fn basis_state(dim: usize, k: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "a state needs at least one amplitude",
            });
        }
        if k == 0 || k > dim {
            return Err(Error::IndexOutOfRange { index: k, dim });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k - 1] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    /// Wraps amplitudes produced by nominally norm-preserving arithmetic.
    ///
    /// Drift within [`RENORM_THRESHOLD`] is left untouched; beyond it the
    /// vector is renormalized and the diagnostic counter incremented.
    pub(crate) fn from_evolved(mut amplitudes: Vec<Complex64>) -> Self {
        debug_assert!(!amplitudes.is_empty());
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > RENORM_THRESHOLD {
            RENORM_EVENTS.fetch_add(1, Ordering::Relaxed);
            let inv = 1.0 / norm_sq.sqrt();
            for a in &mut amplitudes {
                *a *= inv;
            }
        }
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude at the 1-based basis index `k`.
    pub fn amplitude(&self, k: usize) -> Result<Complex64> {
        if k == 0 || k > self.dim() {
            return Err(Error::IndexOutOfRange {
                index: k,
                dim: self.dim(),
            });
        }
        Ok(self.amplitudes[k - 1])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Born probabilities p_k = |a_k|^2.
    pub fn born_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Projective measurement in the computational basis.
    ///
    /// Samples outcome k with probability |a_k|^2 and returns the 1-based
    /// outcome together with the collapsed basis state |k>.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, QuantumState) {
        let u: f64 = rng.gen();
        let mut cumulative = 0.0;
        let mut outcome = 0usize;
        let mut found = false;
        for (i, a) in self.amplitudes.iter().enumerate() {
            cumulative += a.norm_sqr();
            if u < cumulative {
                outcome = i;
                found = true;
                break;
            }
        }
        if !found {
            // Float tail: fall back to the last index with nonzero weight.
            outcome = self
                .amplitudes
                .iter()
                .rposition(|a| a.norm_sqr() > 0.0)
                .unwrap_or(self.dim() - 1);
        }
        let collapsed =
            QuantumState::basis_state(self.dim(), outcome + 1).expect("outcome within dim");
        (outcome + 1, collapsed)
    }

    /// |<self|other>|^2, symmetric and invariant under global phase.
    pub fn fidelity(&self, other: &QuantumState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let overlap: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr().min(1.0))
    }
}

impl Serialize for QuantumState {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amplitudes.iter().map(|a| [a.re, a.im]).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuantumState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        let amplitudes = pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        QuantumState::new(amplitudes).map_err(D::Error::custom)
    }
}

/// Sizes of the qubit register that hosts an n-level system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HilbertEmbedding {
    /// Number of physical eigenstates.
    pub levels: usize,
    /// Qubit count N = int(log2(n-1)) + 1.
    pub qubits: usize,
    /// 2^N.
    pub padded_dim: usize,
}

impl HilbertEmbedding {
    pub fn for_levels(n: usize) -> Result<Self> {
        let qubits = num_qubits(n)?;
        Ok(Self {
            levels: n,
            qubits,
            padded_dim: 1usize << qubits,
        })
    }
}

/// Number of qubits needed for an n-level system: int(log2(n-1)) + 1.
///
/// Computed in integer arithmetic as the bit length of n-1, which equals the
/// same quantity without rounding hazards. Rejects n < 2: the formula is
/// undefined at n = 1 and a one-level system has no control problem.
pub fn num_qubits(n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "the qubit-count formula requires at least two levels",
        });
    }
    let m = n - 1;
    Ok((usize::BITS - m.leading_zeros()) as usize)
}

/// Pads n eigenbasis coefficients into a 2^N-dimensional register state,
/// zero-filling the 2^N - n unused basis slots.
pub fn embed(coefficients: &[Complex64]) -> Result<QuantumState> {
    let n = coefficients.len();
    let embedding = HilbertEmbedding::for_levels(n)?;
    let norm_sq: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let deviation = (norm_sq - 1.0).abs();
    if !deviation.is_finite() || deviation > NORM_TOLERANCE {
        return Err(Error::NotNormalized {
            deviation,
            tolerance: NORM_TOLERANCE,
        });
    }
    let mut amplitudes = coefficients.to_vec();
    amplitudes.resize(embedding.padded_dim, Complex64::new(0.0, 0.0));
    Ok(QuantumState { amplitudes })
}

/// Inverse of [`embed`]: recovers the first n amplitudes, renormalized.
///
/// Fails with a leakage error if any amplitude beyond index n exceeds
/// [`LEAKAGE_TOLERANCE`], which signals that some operator left the
/// physical subspace.
pub fn project(state: &QuantumState, n: usize) -> Result<QuantumState> {
    if n == 0 || n > state.dim() {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "projection target must lie within the state dimension",
        });
    }
    for (i, a) in state.amplitudes.iter().enumerate().skip(n) {
        let magnitude = a.norm();
        if magnitude > LEAKAGE_TOLERANCE {
            return Err(Error::Leakage {
                index: i + 1,
                magnitude,
            });
        }
    }
    let mut amplitudes: Vec<Complex64> = state.amplitudes[..n].to_vec();
    let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amplitudes {
        *a /= norm;
    }
    Ok(QuantumState { amplitudes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn num_qubits_examples() {
        assert_eq!(num_qubits(2).unwrap(), 1);
        assert_eq!(num_qubits(3).unwrap(), 2);
        assert_eq!(num_qubits(4).unwrap(), 2);
        assert_eq!(num_qubits(5).unwrap(), 3);
        assert_eq!(num_qubits(8).unwrap(), 3);
        assert_eq!(num_qubits(9).unwrap(), 4);
        for n in 2..200 {
            let q = num_qubits(n).unwrap();
            assert!(1usize << q >= n, "2^{q} < {n}");
        }
    }

    #[test]
    fn num_qubits_rejects_trivial_systems() {
        assert!(matches!(num_qubits(0), Err(Error::InvalidDimension { .. })));
        assert!(matches!(num_qubits(1), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn embed_pads_with_zeros() {
        let s = embed(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(s.dim(), 4);
        assert_eq!(s.amplitudes()[0], c(1.0, 0.0));
        assert_eq!(s.amplitudes()[3], c(0.0, 0.0));

        let s = embed(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(
            s.amplitudes(),
            &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]
        );
    }

    #[test]
    fn embed_without_padding_when_n_is_a_power_of_two() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let s = embed(&[c(inv, 0.0), c(0.0, inv)]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.amplitudes(), &[c(inv, 0.0), c(0.0, inv)]);
    }

    #[test]
    fn embed_rejects_unnormalized_input() {
        let err = embed(&[c(1.0, 0.0), c(0.5, 0.0)]).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { .. }));
    }

    #[test]
    fn project_round_trips_embed() {
        let coeffs = [c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)];
        let embedded = embed(&coeffs).unwrap();
        let back = project(&embedded, 3).unwrap();
        for (a, b) in back.amplitudes().iter().zip(&coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn project_detects_leakage() {
        let s = QuantumState::basis_state(4, 4).unwrap();
        let err = project(&s, 3).unwrap_err();
        assert_eq!(
            err,
            Error::Leakage {
                index: 4,
                magnitude: 1.0
            }
        );
    }

    #[test]
    fn born_probabilities_examples() {
        let s = QuantumState::basis_state(4, 2).unwrap();
        assert_eq!(s.born_probabilities(), vec![0.0, 1.0, 0.0, 0.0]);

        let u = QuantumState::new(vec![c(0.5, 0.0); 4]).unwrap();
        for p in u.born_probabilities() {
            assert_relative_eq!(p, 0.25, epsilon = 1e-15);
        }

        let inv = 1.0 / 2.0_f64.sqrt();
        let s = QuantumState::new(vec![c(inv, 0.0), c(0.0, inv)]).unwrap();
        let p = s.born_probabilities();
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn measure_is_deterministic_on_basis_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let s = QuantumState::basis_state(4, 2).unwrap();
        for _ in 0..32 {
            let (k, collapsed) = s.measure(&mut rng);
            assert_eq!(k, 2);
            assert_eq!(collapsed, s);
        }
        let s = QuantumState::basis_state(2, 1).unwrap();
        let (k, collapsed) = s.measure(&mut rng);
        assert_eq!(k, 1);
        assert_eq!(collapsed, s);
    }

    #[test]
    fn measure_statistics_match_born_rule() {
        // 1e5 draws on the uniform dim-4 state; each outcome frequency within
        // 4/sqrt(T) of 1/4, which is far beyond 3 sigma of the binomial.
        let trials = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s = QuantumState::new(vec![c(0.5, 0.0); 4]).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            let (k, _) = s.measure(&mut rng);
            counts[k - 1] += 1;
        }
        let bound = 4.0 / (trials as f64).sqrt();
        for (i, &n) in counts.iter().enumerate() {
            let freq = n as f64 / trials as f64;
            assert!(
                (freq - 0.25).abs() < bound,
                "outcome {} frequency {freq} vs 0.25 (bound {bound})",
                i + 1
            );
        }
        // Chi-square against the Born probabilities: 3 degrees of freedom,
        // 99.9% critical value 16.27.
        let expected = trials as f64 / 4.0;
        let chi_sq: f64 = counts
            .iter()
            .map(|&n| (n as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi_sq < 16.27, "chi-square statistic {chi_sq}");
    }

    #[test]
    fn fidelity_examples() {
        let e1 = QuantumState::basis_state(2, 1).unwrap();
        let e2 = QuantumState::basis_state(2, 2).unwrap();
        assert_relative_eq!(e1.fidelity(&e1).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(e1.fidelity(&e2).unwrap(), 0.0, epsilon = 1e-15);

        for phi in [0.3, 1.2, -2.8] {
            let phased = QuantumState::new(vec![C::from_polar(1.0, phi), c(0.0, 0.0)]).unwrap();
            assert_relative_eq!(e1.fidelity(&phased).unwrap(), 1.0, epsilon = 1e-12);
        }

        let d3 = QuantumState::basis_state(3, 1).unwrap();
        assert!(matches!(
            e1.fidelity(&d3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn construction_rejects_bad_vectors() {
        assert!(matches!(
            QuantumState::new(vec![]),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            QuantumState::new(vec![c(1.0, 0.0), c(0.1, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(matches!(
            QuantumState::new(vec![c(f64::NAN, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn drifted_amplitudes_are_renormalized_and_counted() {
        let before = renormalization_events();
        let s = QuantumState::from_evolved(vec![c(1.0 + 1e-4, 0.0)]);
        assert!(renormalization_events() > before);
        assert_relative_eq!(s.norm(), 1.0, epsilon = 1e-12);
        // Drift below the threshold is left untouched.
        let s = QuantumState::from_evolved(vec![c(1.0 + 1e-10, 0.0)]);
        assert!((s.amplitudes()[0].re - (1.0 + 1e-10)).abs() < 1e-16);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let s = QuantumState::new(vec![c(inv, 0.0), c(0.0, -inv)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[0.7071067811865475,0.0],[0.0,-0.7071067811865475]]");
        let back: QuantumState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        let err = serde_json::from_str::<QuantumState>("[[1.0,0.0],[1.0,0.0]]");
        assert!(err.is_err());
    }

    proptest! {
        #[test]
        fn born_probabilities_are_phase_invariant(
            res in proptest::collection::vec(-1.0..1.0f64, 1..6),
            ims in proptest::collection::vec(-1.0..1.0f64, 1..6),
            phi in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let dim = res.len().min(ims.len());
            let raw: Vec<C> = (0..dim).map(|i| c(res[i], ims[i])).collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let amps: Vec<C> = raw.iter().map(|a| a / norm).collect();
            let state = QuantumState::new(amps.clone()).unwrap();
            let phase = C::from_polar(1.0, phi);
            let rotated = QuantumState::new(amps.iter().map(|a| a * phase).collect()).unwrap();
            let p = state.born_probabilities();
            let q = rotated.born_probabilities();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn embed_then_project_is_identity(
            res in proptest::collection::vec(-1.0..1.0f64, 2..9),
            ims in proptest::collection::vec(-1.0..1.0f64, 2..9),
        ) {
            let dim = res.len().min(ims.len()).max(2);
            let raw: Vec<C> = (0..dim).map(|i| c(res[i], ims[i])).collect();
            let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let amps: Vec<C> = raw.iter().map(|a| a / norm).collect();
            let embedded = embed(&amps).unwrap();
            prop_assert!((embedded.norm() - 1.0).abs() < 1e-10);
            let back = project(&embedded, dim).unwrap();
            for (a, b) in back.amplitudes().iter().zip(&amps) {
                prop_assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
