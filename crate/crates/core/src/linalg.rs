//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Result, TomoError};

pub type CMatrix = DMatrix<Complex64>;

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues and the
/// matching unitary (eigenvectors as columns).
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let eig = SymmetricEigen::try_new(m.clone(), 1e-15, 100_000).ok_or_else(|| {
        TomoError::Numerical("Hermitian eigendecomposition did not converge".into())
    })?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// `V diag(f(λ)) V†`.
pub(crate) fn spectral_map(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let d = vectors.nrows();
    let mut scaled = vectors.clone();
    for (c, &lam) in values.iter().enumerate() {
        let s = f(lam);
        scaled.column_mut(c).scale_mut(s);
    }
    let mut out = CMatrix::zeros(d, d);
    out.gemm(
        Complex64::new(1.0, 0.0),
        &scaled,
        &vectors.adjoint(),
        Complex64::new(0.0, 0.0),
    );
    out
}

/// Symmetrize numerically: `(m + m†) / 2`.
pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub(crate) fn max_hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Real Frobenius inner product `Re tr(a† b)`.
pub(crate) fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}
