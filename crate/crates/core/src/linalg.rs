// Copyright 2026 eigensteer contributors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra helpers shared by the simulation modules.
//!
//! Everything here operates on matrices small enough (n <= a few dozen) that
//! plain dense routines are the right tool. Hermitian eigendecompositions and
//! singular values come from nalgebra; the domain-specific pieces layered on
//! top are the skew-Hermitian matrix exponential and the real Hilbert-Schmidt
//! inner product used by the Lie-closure machinery.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is hermitized as (H + H^dag)/2 first so callers may pass
/// matrices carrying rounding-level asymmetry.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let n = h.nrows();
    assert_eq!(n, h.ncols(), "hermitian_eigen requires a square matrix");
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// exp(G * t) for skew-Hermitian G, computed through the eigendecomposition
/// of the Hermitian matrix H = iG, so the result is unitary to rounding.
pub fn expm_skew_hermitian(g: &CMatrix, t: f64) -> CMatrix {
    let i = Complex64::new(0.0, 1.0);
    let h = g.map(|z| i * z);
    let (vals, vecs) = hermitian_eigen(&h);
    let n = g.nrows();
    // exp(G t) = exp(-i H t) = V diag(exp(-i lambda t)) V^dag
    let mut out = CMatrix::zeros(n, n);
    for (lambda, v) in vals.iter().zip(&vecs) {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        // out += phase * v v^dag
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] += phase * v[r] * v[c].conj();
            }
        }
    }
    out
}

/// Real Hilbert-Schmidt inner product Re tr(X^dag Y).
pub fn hs_inner(x: &CMatrix, y: &CMatrix) -> f64 {
    debug_assert_eq!(x.shape(), y.shape());
    x.iter().zip(y.iter()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Hilbert-Schmidt norm sqrt(Re tr(X^dag X)) = Frobenius norm.
pub fn hs_norm(x: &CMatrix) -> f64 {
    hs_inner(x, x).max(0.0).sqrt()
}

/// Matrix commutator [X, Y] = XY - YX.
pub fn commutator(x: &CMatrix, y: &CMatrix) -> CMatrix {
    x * y - y * x
}

/// Largest |(M + M^dag)[i, j]| together with its position, used to validate
/// skew-Hermiticity and to point at the offending entry on failure.
pub fn max_skew_violation(m: &CMatrix) -> (f64, usize, usize) {
    let s = m + m.adjoint();
    let mut worst = (0.0_f64, 0, 0);
    for r in 0..s.nrows() {
        for c in 0..s.ncols() {
            let mag = s[(r, c)].norm();
            if mag > worst.0 {
                worst = (mag, r, c);
            }
        }
    }
    worst
}

/// Numerical rank of a real matrix: singular values below
/// `rel_cutoff * sigma_max` count as zero.
pub fn real_rank(m: &DMatrix<f64>, rel_cutoff: f64) -> usize {
    let svals = m.singular_values();
    let sigma_max = svals.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max <= 0.0 {
        return 0;
    }
    svals
        .iter()
        .filter(|&&s| s > rel_cutoff * sigma_max)
        .count()
}
