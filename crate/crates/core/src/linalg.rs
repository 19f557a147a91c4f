//! Hermitian eigendecomposition for the dense `nalgebra` matrices used by the
//! oracle.
//!
//! The complex solver is `faer`'s. Its QR iteration occasionally reports no
//! convergence on the highly degenerate probe states; those cases go through
//! the real symmetric embedding
//!
//! ```text
//! A + iB  ↦  [ A  −B ]
//!            [ B   A ]
//! ```
//!
//! whose spectrum is that of `A + iB` with every eigenvalue doubled, solved
//! with `faer`'s real symmetric routine.
//!
//! Both solvers work on the support of the matrix only. A zero row (and
//! column) of a Hermitian matrix splits off as an eigenvalue 0 with a basis
//! vector as eigenvector, so dropping it changes neither the spectrum beyond
//! that zero nor any matrix element of a diagonal operator between the
//! remaining eigenvectors.

use faer::{c64, Mat, Side};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn to_faer(m: &DMatrix<Complex64>) -> Mat<c64> {
    // Hermitian part, so rounding asymmetry never reaches the solver
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        c64::new(z.re, z.im)
    })
}

/// Real symmetric embedding of the Hermitian part of `m`.
fn real_embedding(m: &DMatrix<Complex64>) -> Mat<f64> {
    let d = m.nrows();
    Mat::from_fn(2 * d, 2 * d, |i, j| {
        let z = 0.5 * (m[(i % d, j % d)] + m[(j % d, i % d)].conj());
        match (i / d, j / d) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Ascending eigenvalues and orthonormal eigenvectors of the embedding.
fn embedded_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<f64>) {
    let dim = 2 * m.nrows();
    let eig = real_embedding(m)
        .self_adjoint_eigen(Side::Lower)
        .expect("real symmetric eigendecomposition converges");
    let s = eig.S();
    let u = eig.U();
    let values = (0..dim).map(|i| s[i]).collect();
    (values, DMatrix::from_fn(dim, dim, |i, j| u[(i, j)]))
}

/// Indices of the rows of `m` holding a non-zero entry in the Hermitian
/// part.
fn support(m: &DMatrix<Complex64>) -> Vec<usize> {
    let d = m.nrows();
    (0..d)
        .filter(|&i| (0..d).any(|j| m[(i, j)] + m[(j, i)].conj() != Complex64::new(0.0, 0.0)))
        .collect()
}

fn restrict(m: &DMatrix<Complex64>, rows: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), rows.len(), |i, j| m[(rows[i], rows[j])])
}

/// Ascending eigenvalues of the Hermitian part of `m`.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let rows = support(m);
    let mut values = dense_eigenvalues(&restrict(m, &rows));
    values.resize(m.nrows(), 0.0);
    values.sort_by(f64::total_cmp);
    values
}

fn dense_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    if let Ok(values) = to_faer(m).self_adjoint_eigenvalues(Side::Lower) {
        return values;
    }
    let (doubled, _) = embedded_eigen(m);
    doubled.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
}

/// `Σ_{i>j} w(λ_i, λ_j) |⟨ψ_i|D|ψ_j⟩|²` over an orthonormal eigenbasis
/// `{λ_i, ψ_i}` of the Hermitian part of `m`, for the diagonal matrix `D`.
///
/// `weight` must vanish for equal arguments; the sum is then independent of
/// the basis chosen inside degenerate eigenspaces.
pub fn diagonal_pair_sum(m: &DMatrix<Complex64>, diagonal: &[f64], weight: impl Fn(f64, f64) -> f64) -> f64 {
    let rows = support(m);
    let diagonal: Vec<f64> = rows.iter().map(|&i| diagonal[i]).collect();
    dense_pair_sum(&restrict(m, &rows), &diagonal, weight)
}

fn dense_pair_sum(m: &DMatrix<Complex64>, diagonal: &[f64], weight: impl Fn(f64, f64) -> f64) -> f64 {
    let dim = m.nrows();
    if dim == 0 {
        return 0.0;
    }
    if let Ok(eig) = to_faer(m).self_adjoint_eigen(Side::Lower) {
        let s = eig.S();
        let u = eig.U();
        let lambda: Vec<f64> = (0..dim).map(|i| s[i].re).collect();
        let vectors = DMatrix::from_fn(dim, dim, |i, j| {
            let z = u[(i, j)];
            Complex64::new(z.re, z.im)
        });
        let mut weighted = vectors.clone();
        for (row, &g) in diagonal.iter().enumerate() {
            weighted.row_mut(row).scale_mut(g);
        }
        let elements = vectors.adjoint() * weighted;
        return pair_sum(&lambda, |i, j| elements[(i, j)].norm_sqr(), weight);
    }
    // Each complex pair appears twice in the embedding, once per real
    // partner, so the embedded sum is twice the complex one.
    let (lambda, vectors) = embedded_eigen(m);
    let mut weighted = vectors.clone();
    for row in 0..2 * dim {
        weighted.row_mut(row).scale_mut(diagonal[row % dim]);
    }
    let elements = vectors.transpose() * weighted;
    0.5 * pair_sum(&lambda, |i, j| elements[(i, j)].powi(2), weight)
}

fn pair_sum(lambda: &[f64], element: impl Fn(usize, usize) -> f64, weight: impl Fn(f64, f64) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..lambda.len() {
        for j in 0..i {
            let w = weight(lambda[i], lambda[j]);
            if w != 0.0 {
                total += w * element(i, j);
            }
        }
    }
    total
}
