// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Bilinear system model, drift-Hamiltonian eigenstates, dynamical Lie
//! algebra generation, the complete-controllability rank test, and
//! eigenstate-from reachable-set analysis.
//!
//! Units put hbar = 1 throughout, so the internal Hamiltonian is H0 = iA and
//! the control Hamiltonian is i sum_i u_i B_i. The generated Lie algebra is a
//! real subalgebra of u(n); its dimension against n^2 (or n^2 - 1 with
//! traceless generators) decides complete controllability. Reachability
//! verdicts are sound but incomplete: `Reachable` always carries a control
//! schedule that independently re-propagates to the claimed fidelity, while
//! everything else stays `Unknown` — never a claimed "unreachable". All
//! reachability here is the some-time notion (membership in the union of
//! R_t over t > 0); fixed-time reachability is out of numerical reach.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermitian_eigen, hs_inner, hs_norm, max_skew_violation, real_rank, CMatrix,
};
use crate::statevec::QuantumState;
use crate::steering::{optimize_controls, propagate, ControlSchedule, OptimizeConfig};

/// Tolerance on |(M + M^dag)[i][j]| for a generator to count as skew-Hermitian.
pub const SKEW_TOLERANCE: f64 = 1e-10;

/// Default residual-norm threshold below which a commutator direction is
/// discarded during closure.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-9;

/// Default relative singular-value cutoff for numerical ranks.
pub const DEFAULT_RANK_CUTOFF: f64 = 1e-8;

/// |trace| threshold for a generator to count as traceless.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// Default certificate threshold: Reachable requires fidelity >= 1 - epsilon.
pub const DEFAULT_CERT_EPSILON: f64 = 1e-3;

/// A certificate must re-propagate to its claimed fidelity within this.
pub const CERT_REVERIFY_TOL: f64 = 1e-6;

/// Adjacent eigenvalues closer than this (times the spectral scale) flag a
/// degenerate spectrum.
const DEGENERACY_TOL: f64 = 1e-8;

/// The bilinear model |psi_dot> = (A + sum_i u_i(t) B_i)|psi> with
/// skew-Hermitian drift A and control generators B_i.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearSystem {
    drift: CMatrix,
    controls: Vec<CMatrix>,
}

impl BilinearSystem {
    pub fn new(drift: CMatrix, controls: Vec<CMatrix>) -> Result<Self> {
        let n = drift.nrows();
        if drift.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: drift.ncols(),
            });
        }
        if n < 2 {
            return Err(Error::InvalidDimension {
                dim: n,
                reason: "the bilinear model needs at least two levels",
            });
        }
        if controls.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "the bilinear model needs at least one control generator",
            });
        }
        let (violation, row, col) = max_skew_violation(&drift);
        if violation > SKEW_TOLERANCE {
            return Err(Error::NotSkewHermitian {
                matrix: "A".into(),
                row,
                col,
                magnitude: violation,
            });
        }
        for (idx, b) in controls.iter().enumerate() {
            if b.nrows() != n || b.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: b.nrows().max(b.ncols()),
                });
            }
            let (violation, row, col) = max_skew_violation(b);
            if violation > SKEW_TOLERANCE {
                return Err(Error::NotSkewHermitian {
                    matrix: format!("B{}", idx + 1),
                    row,
                    col,
                    magnitude: violation,
                });
            }
        }
        Ok(Self { drift, controls })
    }

    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    pub fn num_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &CMatrix {
        &self.drift
    }

    pub fn controls(&self) -> &[CMatrix] {
        &self.controls
    }
}

fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| [m[(r, c)].re, m[(r, c)].im])
                .collect()
        })
        .collect()
}

fn pairs_to_matrix(
    name: &str,
    n: usize,
    rows: &[Vec<[f64; 2]>],
) -> std::result::Result<CMatrix, String> {
    if rows.len() != n {
        return Err(format!("{name} has {} rows, expected n = {n}", rows.len()));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(format!(
                "{name} row {r} has {} entries, expected n = {n}",
                row.len()
            ));
        }
    }
    Ok(CMatrix::from_fn(n, n, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

impl Serialize for BilinearSystem {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("BilinearSystem", 3)?;
        s.serialize_field("n", &self.dim())?;
        s.serialize_field("A", &matrix_to_pairs(&self.drift))?;
        s.serialize_field(
            "B",
            &self
                .controls
                .iter()
                .map(matrix_to_pairs)
                .collect::<Vec<_>>(),
        )?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for BilinearSystem {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            #[serde(rename = "A")]
            a: Vec<Vec<[f64; 2]>>,
            #[serde(rename = "B")]
            b: Vec<Vec<Vec<[f64; 2]>>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let drift = pairs_to_matrix("A", raw.n, &raw.a).map_err(D::Error::custom)?;
        let controls = raw
            .b
            .iter()
            .enumerate()
            .map(|(i, rows)| pairs_to_matrix(&format!("B{}", i + 1), raw.n, rows))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        BilinearSystem::new(drift, controls).map_err(D::Error::custom)
    }
}

/// Orthonormal eigenbasis of the internal Hamiltonian H0 = iA, energies
/// ascending.
#[derive(Debug, Clone)]
pub struct EigenstateSet {
    /// Eigenstates |psi_1^e> .. |psi_n^e>, each of dimension n.
    pub states: Vec<QuantumState>,
    /// Eigenvalues of H0, ascending.
    pub energies: Vec<f64>,
    /// Set when the spectrum carries a (near-)degenerate pair, in which case
    /// the eigenbasis is not unique and downstream reports are caveated.
    pub degenerate: bool,
}

/// Diagonalizes H0 = iA. The eigenbasis is made deterministic by rotating
/// each vector's largest-magnitude component (lowest index on ties) to the
/// positive real axis.
pub fn eigenstates(sys: &BilinearSystem) -> EigenstateSet {
    let i = Complex64::new(0.0, 1.0);
    let h0 = sys.drift().map(|z| i * z);
    let (energies, vectors) = hermitian_eigen(&h0);
    let states = vectors
        .into_iter()
        .map(|v| {
            let mut pivot = 0;
            let mut best = 0.0;
            for (idx, a) in v.iter().enumerate() {
                let mag = a.norm();
                if mag > best + 1e-12 {
                    best = mag;
                    pivot = idx;
                }
            }
            let phase = {
                let p = v[pivot];
                if p.norm() > 0.0 {
                    p.conj() / p.norm()
                } else {
                    Complex64::new(1.0, 0.0)
                }
            };
            QuantumState::from_evolved(v.iter().map(|a| a * phase).collect())
        })
        .collect();
    let scale = energies.iter().fold(1.0_f64, |m, e| m.max(e.abs()));
    let degenerate = energies
        .windows(2)
        .any(|w| (w[1] - w[0]).abs() < DEGENERACY_TOL * scale);
    EigenstateSet {
        states,
        energies,
        degenerate,
    }
}

/// Basis of the dynamical Lie algebra, orthonormal under the real
/// Hilbert-Schmidt inner product Re tr(X^dag Y).
#[derive(Debug, Clone)]
pub struct LieAlgebraBasis {
    generators: Vec<CMatrix>,
    ambient: usize,
}

impl LieAlgebraBasis {
    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// True when one further full commutator pass adds no direction with
    /// residual norm above `tol`.
    pub fn is_closed(&self, tol: f64) -> bool {
        for i in 0..self.generators.len() {
            for j in 0..i {
                let mut c = commutator(&self.generators[i], &self.generators[j]);
                orthogonalize_against(&mut c, &self.generators);
                if hs_norm(&c) >= tol {
                    return false;
                }
            }
        }
        true
    }

    /// Rank-test classification against u(n) and su(n).
    pub fn classification(&self) -> Controllability {
        let n = self.ambient;
        let dim = self.dim();
        if dim == n * n {
            Controllability::FullUn
        } else if dim == n * n - 1
            && self
                .generators
                .iter()
                .all(|g| g.trace().norm() < TRACE_TOLERANCE)
        {
            Controllability::FullSUn
        } else {
            Controllability::NotFull(dim)
        }
    }
}

/// Outcome of the Lie-rank controllability test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Controllability {
    /// Generated algebra is all of u(n): transitive on the state sphere.
    #[serde(rename = "full_u_n")]
    FullUn,
    /// Generated algebra is su(n) (dimension n^2 - 1, traceless): transitive
    /// on the state sphere.
    #[serde(rename = "full_su_n")]
    FullSUn,
    /// Generated algebra has the given dimension; no transitivity claim.
    #[serde(rename = "not_full")]
    NotFull(usize),
}

fn orthogonalize_against(candidate: &mut CMatrix, basis: &[CMatrix]) {
    // Two projection sweeps keep the residual orthogonal at working precision.
    for _ in 0..2 {
        for b in basis {
            let coeff = hs_inner(b, candidate);
            *candidate -= b.map(|z| z * Complex64::new(coeff, 0.0));
        }
    }
}

fn try_append(basis: &mut Vec<CMatrix>, mut candidate: CMatrix, tol: f64) -> bool {
    orthogonalize_against(&mut candidate, basis);
    let norm = hs_norm(&candidate);
    if norm < tol {
        return false;
    }
    basis.push(candidate.map(|z| z / norm));
    true
}

/// Computes a basis of the smallest real Lie algebra containing
/// {A, B_1, ..., B_m}.
///
/// Seeds with the generators, Gram-Schmidt-orthonormalizes under the
/// Hilbert-Schmidt inner product, then keeps appending commutators of all
/// basis pairs (discarding residuals with norm below `tol`) until every pair
/// has been processed, so the result is stable under one further full pass.
pub fn generate_lie_algebra(sys: &BilinearSystem, tol: f64) -> LieAlgebraBasis {
    assert!(tol > 0.0 && tol <= 1e-4, "closure tolerance out of range");
    let n = sys.dim();
    let max_dim = n * n;
    let mut basis: Vec<CMatrix> = Vec::new();
    try_append(&mut basis, sys.drift().clone(), tol);
    for b in sys.controls() {
        try_append(&mut basis, b.clone(), tol);
    }
    let mut i = 1;
    while i < basis.len() && basis.len() < max_dim {
        for j in 0..i {
            let c = commutator(&basis[i], &basis[j]);
            try_append(&mut basis, c, tol);
            if basis.len() == max_dim {
                break;
            }
        }
        i += 1;
    }
    LieAlgebraBasis {
        generators: basis,
        ambient: n,
    }
}

/// Lie-rank test for complete controllability at the default closure
/// tolerance.
pub fn is_completely_controllable(sys: &BilinearSystem) -> Controllability {
    generate_lie_algebra(sys, DEFAULT_CLOSURE_TOL).classification()
}

/// Real dimension of the tangent space {X|psi> : X in L} at `psi`, computed
/// as the numerical rank of the stacked real and imaginary parts with
/// singular values below `rank_cutoff * sigma_max` counting as zero.
///
/// Upper-bounds the local dimension of the reachable set from `psi`; a
/// transitive algebra gives 2n - 1.
pub fn orbit_dimension(basis: &LieAlgebraBasis, psi: &QuantumState, rank_cutoff: f64) -> usize {
    let n = psi.dim();
    let d = basis.dim();
    let mut stacked = nalgebra::DMatrix::<f64>::zeros(2 * n, d);
    for (col, x) in basis.generators().iter().enumerate() {
        for r in 0..n {
            let mut entry = Complex64::new(0.0, 0.0);
            for c in 0..n {
                entry += x[(r, c)] * psi.amplitudes()[c];
            }
            stacked[(r, col)] = entry.re;
            stacked[(n + r, col)] = entry.im;
        }
    }
    real_rank(&stacked, rank_cutoff)
}

/// Membership verdict for one eigenstate-from reachable set.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// A control schedule from the eigenstate reaches the target with the
    /// recorded fidelity (>= 1 - epsilon, re-verified by propagation).
    Reachable {
        certificate: ControlSchedule,
        fidelity: f64,
    },
    /// The optimizer budget was exhausted without a certificate. Says
    /// nothing about true unreachability.
    Unknown,
}

impl Verdict {
    pub fn is_reachable(&self) -> bool {
        matches!(self, Verdict::Reachable { .. })
    }
}

/// Reachability analysis of one eigenstate.
#[derive(Debug, Clone)]
pub struct ReachabilityEntry {
    /// 1-based eigenstate index.
    pub eigenstate: usize,
    pub orbit_dimension: usize,
    pub verdict: Verdict,
}

/// Per-eigenstate reachability analysis for one target state.
#[derive(Debug, Clone)]
pub struct ReachabilityReport {
    pub entries: Vec<ReachabilityEntry>,
    /// Certificate threshold used: Reachable means fidelity >= 1 - epsilon.
    pub epsilon: f64,
}

impl ReachabilityReport {
    pub fn entry(&self, eigenstate: usize) -> Option<&ReachabilityEntry> {
        self.entries.iter().find(|e| e.eigenstate == eigenstate)
    }
}

/// Runs the steering optimizer from eigenstate `source` (1-based) toward
/// `target` and certifies the result.
pub fn reachable_membership(
    sys: &BilinearSystem,
    source: usize,
    target: &QuantumState,
    budget: &OptimizeConfig,
    epsilon: f64,
) -> Result<Verdict> {
    let eigen = eigenstates(sys);
    if source == 0 || source > eigen.states.len() {
        return Err(Error::IndexOutOfRange {
            index: source,
            dim: eigen.states.len(),
        });
    }
    membership_from_state(sys, &eigen.states[source - 1], target, budget, epsilon)
}

fn membership_from_state(
    sys: &BilinearSystem,
    source: &QuantumState,
    target: &QuantumState,
    budget: &OptimizeConfig,
    epsilon: f64,
) -> Result<Verdict> {
    let mut cfg = budget.clone();
    cfg.target_fidelity = cfg.target_fidelity.max(1.0 - epsilon);
    let outcome = optimize_controls(sys, source, target, &cfg)?;
    if outcome.fidelity < 1.0 - epsilon {
        return Ok(Verdict::Unknown);
    }
    // A certificate must stand on its own: re-propagate and require the
    // claimed fidelity before handing out a Reachable verdict.
    let replayed = propagate(sys, &outcome.schedule, source)?.fidelity(target)?;
    if (replayed - outcome.fidelity).abs() > CERT_REVERIFY_TOL {
        log::warn!(
            "certificate failed re-propagation: claimed {} vs replayed {replayed}; \
             demoting to Unknown",
            outcome.fidelity
        );
        return Ok(Verdict::Unknown);
    }
    Ok(Verdict::Reachable {
        certificate: outcome.schedule,
        fidelity: outcome.fidelity,
    })
}

/// Builds the full per-eigenstate report for one target: orbit dimensions
/// from the generated Lie algebra plus a membership verdict per eigenstate.
///
/// Restart seeds are decorrelated across eigenstates so one unlucky draw is
/// not shared by every row.
pub fn build_reachability_report(
    sys: &BilinearSystem,
    target: &QuantumState,
    budget: &OptimizeConfig,
    epsilon: f64,
) -> Result<ReachabilityReport> {
    let eigen = eigenstates(sys);
    let basis = generate_lie_algebra(sys, DEFAULT_CLOSURE_TOL);
    let entries = eigen
        .states
        .iter()
        .enumerate()
        .map(|(idx, state)| {
            let mut per_eigenstate = budget.clone();
            per_eigenstate.seed = budget.seed.wrapping_add(idx as u64);
            Ok(ReachabilityEntry {
                eigenstate: idx + 1,
                orbit_dimension: orbit_dimension(&basis, state, DEFAULT_RANK_CUTOFF),
                verdict: membership_from_state(sys, state, target, &per_eigenstate, epsilon)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReachabilityReport { entries, epsilon })
}

/// Picks the eigenstate the algorithm will amplify toward: among Reachable
/// entries, the one whose basis slot carries the largest |amplitude| in the
/// embedded initial state, ties broken by smallest index.
pub fn choose_eigenstate(
    psi0_embedded: &QuantumState,
    report: &ReachabilityReport,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for entry in &report.entries {
        if !entry.verdict.is_reachable() {
            continue;
        }
        let magnitude = psi0_embedded.amplitude(entry.eigenstate)?.norm();
        let better = match best {
            None => true,
            Some((_, current)) => magnitude > current,
        };
        if better {
            best = Some((entry.eigenstate, magnitude));
        }
    }
    best.map(|(k, _)| k).ok_or(Error::NotSteerable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64 as C;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn minus_i_sigma_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)])
    }

    fn minus_i_sigma_x() -> CMatrix {
        CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0)],
        )
    }

    fn su2_system() -> BilinearSystem {
        BilinearSystem::new(minus_i_sigma_z(), vec![minus_i_sigma_x()]).unwrap()
    }

    fn u2_system() -> BilinearSystem {
        let minus_i_eye = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
        );
        BilinearSystem::new(minus_i_sigma_z(), vec![minus_i_sigma_x(), minus_i_eye]).unwrap()
    }

    fn diagonal_system() -> BilinearSystem {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -2.0)],
        );
        let b =
            CMatrix::from_row_slice(2, 2, &[c(0.0, -0.5), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.3)]);
        BilinearSystem::new(a, vec![b]).unwrap()
    }

    fn quick_budget(seed: u64) -> OptimizeConfig {
        OptimizeConfig {
            restarts: 4,
            max_iters: 80,
            seed,
            ..OptimizeConfig::default()
        }
    }

    #[test]
    fn system_validation_names_the_offending_entry() {
        let not_skew =
            CMatrix::from_row_slice(2, 2, &[c(0.0, -1.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 1.0)]);
        let err = BilinearSystem::new(not_skew, vec![minus_i_sigma_x()]).unwrap_err();
        match err {
            Error::NotSkewHermitian {
                matrix, row, col, ..
            } => {
                assert_eq!(matrix, "A");
                assert_eq!((row, col), (0, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }

        let err = BilinearSystem::new(
            minus_i_sigma_z(),
            vec![CMatrix::from_row_slice(
                2,
                2,
                &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
            )],
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotSkewHermitian { ref matrix, .. } if matrix == "B1"));

        assert!(BilinearSystem::new(minus_i_sigma_z(), vec![]).is_err());
        assert!(BilinearSystem::new(CMatrix::zeros(1, 1), vec![CMatrix::zeros(1, 1)]).is_err());
    }

    #[test]
    fn system_json_round_trip() {
        let sys = su2_system();
        let json = serde_json::to_string(&sys).unwrap();
        let back: BilinearSystem = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sys);

        let bad = r#"{"n":2,"A":[[[0.0,-1.0],[0.5,0.0]],[[0.0,0.0],[0.0,1.0]]],"B":[[[[0.0,0.0],[0.0,-1.0]],[[0.0,-1.0],[0.0,0.0]]]]}"#;
        let err = serde_json::from_str::<BilinearSystem>(bad).unwrap_err();
        assert!(err.to_string().contains("A[0][1]"), "{err}");
    }

    #[test]
    fn eigenstates_of_a_diagonal_drift() {
        let a =
            CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)]);
        let sys = BilinearSystem::new(a, vec![minus_i_sigma_x()]).unwrap();
        let eig = eigenstates(&sys);
        assert_relative_eq!(eig.energies[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(eig.energies[1], 1.0, epsilon = 1e-12);
        assert!((eig.states[0].amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((eig.states[1].amplitudes()[1] - c(1.0, 0.0)).norm() < 1e-12);
        assert!(!eig.degenerate);
    }

    #[test]
    fn eigenstates_of_a_sigma_x_drift() {
        // A = -i sigma_x, so H0 = sigma_x with eigenpairs (1, (1,1)/sqrt 2)
        // and (-1, (1,-1)/sqrt 2).
        let sys = BilinearSystem::new(minus_i_sigma_x(), vec![minus_i_sigma_z()]).unwrap();
        let eig = eigenstates(&sys);
        assert_relative_eq!(eig.energies[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(eig.energies[1], 1.0, epsilon = 1e-12);
        let inv = 1.0 / 2.0_f64.sqrt();
        let minus = eig.states[0].amplitudes();
        assert!((minus[0] - c(inv, 0.0)).norm() < 1e-10);
        assert!((minus[1] - c(-inv, 0.0)).norm() < 1e-10);
        let plus = eig.states[1].amplitudes();
        assert!((plus[0] - c(inv, 0.0)).norm() < 1e-10);
        assert!((plus[1] - c(inv, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn fully_degenerate_spectrum_is_flagged() {
        // A = -i I has H0 = I: any orthonormal pair is acceptable.
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
        );
        let sys = BilinearSystem::new(a, vec![minus_i_sigma_x()]).unwrap();
        let eig = eigenstates(&sys);
        assert!(eig.degenerate);
        let overlap: C = eig.states[0]
            .amplitudes()
            .iter()
            .zip(eig.states[1].amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(overlap.norm() < 1e-10);

        // A = 0 is the fully degenerate extreme: H0 = 0, any orthonormal
        // pair is acceptable and the flag must be set.
        let sys = BilinearSystem::new(CMatrix::zeros(2, 2), vec![minus_i_sigma_x()]).unwrap();
        let eig = eigenstates(&sys);
        assert!(eig.degenerate);
        assert!(eig.energies.iter().all(|e| e.abs() < 1e-12));
    }

    #[test]
    fn su2_pair_closes_at_dimension_three() {
        let basis = generate_lie_algebra(&su2_system(), DEFAULT_CLOSURE_TOL);
        assert_eq!(basis.dim(), 3);
        assert!(basis.is_closed(DEFAULT_CLOSURE_TOL));
        assert_eq!(basis.classification(), Controllability::FullSUn);
        for g in basis.generators() {
            let (violation, _, _) = max_skew_violation(g);
            assert!(violation < 1e-10);
            assert!((hs_norm(g) - 1.0).abs() < 1e-8);
        }
        for i in 0..basis.dim() {
            for j in 0..i {
                assert!(hs_inner(&basis.generators()[i], &basis.generators()[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn commuting_diagonal_generators_close_immediately() {
        let basis = generate_lie_algebra(&diagonal_system(), DEFAULT_CLOSURE_TOL);
        assert_eq!(basis.dim(), 2);
        assert!(basis.is_closed(DEFAULT_CLOSURE_TOL));
        assert_eq!(basis.classification(), Controllability::NotFull(2));
    }

    #[test]
    fn adding_the_identity_direction_fills_u2() {
        let basis = generate_lie_algebra(&u2_system(), DEFAULT_CLOSURE_TOL);
        assert_eq!(basis.dim(), 4);
        assert_eq!(basis.classification(), Controllability::FullUn);
        assert_eq!(
            is_completely_controllable(&u2_system()),
            Controllability::FullUn
        );
    }

    fn random_skew(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let raw = CMatrix::from_fn(n, n, |_, _| {
            c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        (&raw - raw.adjoint()).scale(0.5)
    }

    fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let h = {
            let raw = CMatrix::from_fn(n, n, |_, _| {
                c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            (&raw + raw.adjoint()).scale(0.5)
        };
        let (_, vecs) = hermitian_eigen(&h);
        CMatrix::from_columns(&vecs)
    }

    #[test]
    fn closure_dimension_is_invariant_under_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for n in 2..=4 {
            let a = random_skew(n, &mut rng);
            let b = random_skew(n, &mut rng);
            let sys = BilinearSystem::new(a.clone(), vec![b.clone()]).unwrap();
            let dim = generate_lie_algebra(&sys, DEFAULT_CLOSURE_TOL).dim();
            for _ in 0..3 {
                let u = random_unitary(n, &mut rng);
                let conj_sys =
                    BilinearSystem::new(&u * &a * u.adjoint(), vec![&u * &b * u.adjoint()])
                        .unwrap();
                let conj_dim = generate_lie_algebra(&conj_sys, DEFAULT_CLOSURE_TOL).dim();
                assert_eq!(conj_dim, dim, "n = {n}");
            }
        }
    }

    #[test]
    fn orbit_dimensions_match_the_geometry() {
        // Transitive su(2) action: every state sees a (2n-1)-dimensional
        // tangent space.
        let basis = generate_lie_algebra(&su2_system(), DEFAULT_CLOSURE_TOL);
        let e1 = QuantumState::basis_state(2, 1).unwrap();
        assert_eq!(orbit_dimension(&basis, &e1, DEFAULT_RANK_CUTOFF), 3);

        // Diagonal algebra at a basis state: only the phase direction.
        let basis = generate_lie_algebra(&diagonal_system(), DEFAULT_CLOSURE_TOL);
        assert_eq!(orbit_dimension(&basis, &e1, DEFAULT_RANK_CUTOFF), 1);

        // Smallest legal analogue of the zero system: B1 = -i I alone.
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
        );
        let sys = BilinearSystem::new(a.clone(), vec![a]).unwrap();
        let basis = generate_lie_algebra(&sys, DEFAULT_CLOSURE_TOL);
        assert_eq!(orbit_dimension(&basis, &e1, DEFAULT_RANK_CUTOFF), 1);
    }

    #[test]
    fn orbit_dimension_ignores_global_phase() {
        let basis = generate_lie_algebra(&su2_system(), DEFAULT_CLOSURE_TOL);
        let inv = 1.0 / 2.0_f64.sqrt();
        let psi = QuantumState::new(vec![c(inv, 0.0), c(0.0, inv)]).unwrap();
        let base = orbit_dimension(&basis, &psi, DEFAULT_RANK_CUTOFF);
        for phi in [0.4, -2.2] {
            let phase = C::from_polar(1.0, phi);
            let rotated =
                QuantumState::new(psi.amplitudes().iter().map(|a| a * phase).collect()).unwrap();
            assert_eq!(orbit_dimension(&basis, &rotated, DEFAULT_RANK_CUTOFF), base);
        }
    }

    #[test]
    fn membership_is_trivial_from_the_eigenstate_itself() {
        let sys = diagonal_system();
        let eig = eigenstates(&sys);
        let verdict = reachable_membership(
            &sys,
            1,
            &eig.states[0],
            &quick_budget(2),
            DEFAULT_CERT_EPSILON,
        )
        .unwrap();
        match verdict {
            Verdict::Reachable {
                certificate,
                fidelity,
            } => {
                assert_eq!(certificate.segments(), 0);
                assert!(fidelity >= 1.0 - 1e-12);
            }
            Verdict::Unknown => panic!("trivial membership must be certified"),
        }
    }

    #[test]
    fn membership_on_a_controllable_system_is_certified() {
        let sys = su2_system();
        let inv = 1.0 / 2.0_f64.sqrt();
        let target = QuantumState::new(vec![c(inv, 0.0), c(0.0, inv)]).unwrap();
        let verdict =
            reachable_membership(&sys, 1, &target, &quick_budget(5), DEFAULT_CERT_EPSILON).unwrap();
        match verdict {
            Verdict::Reachable {
                certificate,
                fidelity,
            } => {
                assert!(fidelity >= 0.999, "fidelity {fidelity}");
                let eig = eigenstates(&sys);
                let replayed = propagate(&sys, &certificate, &eig.states[0])
                    .unwrap()
                    .fidelity(&target)
                    .unwrap();
                assert!((replayed - fidelity).abs() < CERT_REVERIFY_TOL);
            }
            Verdict::Unknown => panic!("su(2) transitivity should certify this target"),
        }
    }

    #[test]
    fn membership_across_a_diagonal_system_stays_unknown() {
        let sys = diagonal_system();
        let target = QuantumState::basis_state(2, 2).unwrap();
        let verdict =
            reachable_membership(&sys, 1, &target, &quick_budget(7), DEFAULT_CERT_EPSILON).unwrap();
        assert_eq!(verdict, Verdict::Unknown);
    }

    fn report_with(verdicts: &[(usize, bool)]) -> ReachabilityReport {
        ReachabilityReport {
            entries: verdicts
                .iter()
                .map(|&(eigenstate, reachable)| ReachabilityEntry {
                    eigenstate,
                    orbit_dimension: 0,
                    verdict: if reachable {
                        Verdict::Reachable {
                            certificate: ControlSchedule::identity(0.1),
                            fidelity: 1.0,
                        }
                    } else {
                        Verdict::Unknown
                    },
                })
                .collect(),
            epsilon: DEFAULT_CERT_EPSILON,
        }
    }

    #[test]
    fn eigenstate_choice_follows_the_amplitude_rule() {
        let report = report_with(&[(1, false), (2, true)]);
        let psi = QuantumState::basis_state(4, 1).unwrap();
        assert_eq!(choose_eigenstate(&psi, &report).unwrap(), 2);

        let report = report_with(&[(1, true), (2, true)]);
        let psi = QuantumState::new(vec![
            c(0.3, 0.0),
            c(0.0, 0.8),
            c((1.0_f64 - 0.09 - 0.64).sqrt(), 0.0),
            c(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(choose_eigenstate(&psi, &report).unwrap(), 2);

        // Equal magnitudes break to the smallest index.
        let inv = 1.0 / 2.0_f64.sqrt();
        let psi =
            QuantumState::new(vec![c(inv, 0.0), c(0.0, -inv), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(choose_eigenstate(&psi, &report).unwrap(), 1);

        let report = report_with(&[(1, false), (2, false)]);
        assert_eq!(
            choose_eigenstate(&psi, &report).unwrap_err(),
            Error::NotSteerable
        );
    }

    #[test]
    fn full_report_on_the_controllable_pair() {
        let sys = su2_system();
        let inv = 1.0 / 2.0_f64.sqrt();
        let target = QuantumState::new(vec![c(inv, 0.0), c(inv, 0.0)]).unwrap();
        let report =
            build_reachability_report(&sys, &target, &quick_budget(13), DEFAULT_CERT_EPSILON)
                .unwrap();
        assert_eq!(report.entries.len(), 2);
        for entry in &report.entries {
            assert_eq!(entry.orbit_dimension, 3);
            assert!(
                entry.verdict.is_reachable(),
                "eigenstate {}",
                entry.eigenstate
            );
        }
    }
}
