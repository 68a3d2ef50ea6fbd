//! Hermitian matrices, density matrices and figures of merit.
//!
//! Basis ordering throughout the crate is the computational basis with the
//! first tensor factor as the most significant bit: `|0…00⟩, |0…01⟩, …, |1…11⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result, TomoError};
use crate::linalg::{self, CMatrix};

/// Numerical tolerances for the matrix invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Largest allowed `|m[i][j] − conj(m[j][i])|`.
    pub hermitian: f64,
    /// Most negative eigenvalue tolerated for a PSD matrix.
    pub psd: f64,
    /// Largest allowed `|tr − 1|` for a state.
    pub trace: f64,
    /// Slack allowed on fidelity above 1 before it is treated as a numerical failure.
    pub fidelity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            psd: 1e-8,
            trace: 1e-8,
            fidelity: 1e-6,
        }
    }
}

/// A Hermitian matrix with no trace or positivity requirement.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(invalid(format!(
                "matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = linalg::max_hermitian_defect(&m);
        if defect > tol.hermitian {
            return Err(TomoError::InvalidState(format!(
                "matrix is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps `(m + m†)/2` without checking.
    pub fn from_hermitian_part(m: &CMatrix) -> Self {
        Self(linalg::hermitian_part(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        linalg::trace_re(&self.0)
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::hermitian_eigen(&self.0)?.0)
    }

    pub fn frobenius_distance(&self, other: &HermitianMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> Self {
        Self(self.0.scale(a) + other.0.scale(b))
    }

    /// Real Frobenius inner product `tr(self · other)`.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        linalg::frobenius_inner(&self.0, &other.0)
    }
}

/// A quantum state: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: CMatrix, tol: &Tolerances) -> Result<Self> {
        let h = HermitianMatrix::with_tolerances(m, tol)?;
        let dim = h.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(invalid(format!(
                "dimension {dim} is not a power of two ≥ 2"
            )));
        }
        let tr = h.trace();
        if (tr - 1.0).abs() > tol.trace {
            return Err(TomoError::InvalidState(format!(
                "trace {tr} differs from 1"
            )));
        }
        let min_eig = h.eigenvalues()?[0];
        if min_eig < -tol.psd {
            return Err(TomoError::InvalidState(format!(
                "minimum eigenvalue {min_eig:e} is negative"
            )));
        }
        Ok(Self(h.0))
    }

    /// Normalizes a PSD matrix by its trace.
    pub fn from_psd(h: &HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(TomoError::InvalidState(format!(
                "cannot normalize matrix with trace {tr}"
            )));
        }
        Self::new(linalg::hermitian_part(&h.0.scale(1.0 / tr)))
    }

    /// The pure state `|ψ⟩⟨ψ|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(invalid("zero state vector"));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim, dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix(self.0.clone())
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(linalg::hermitian_eigen(&self.0)?.0)
    }

    pub fn frobenius_distance(&self, other: &DensityMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

fn check_qubits(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(invalid("qubit count must be at least 1"));
    }
    if n > 12 {
        return Err(invalid(format!(
            "{n} qubits exceeds the dense-matrix limit of 12"
        )));
    }
    Ok(1usize << n)
}

/// `|GHZ⟩ = (|0…0⟩ + |1…1⟩)/√2` as a density matrix.
pub fn ghz_state(n: usize) -> Result<DensityMatrix> {
    dephased_ghz(n, 0.0)
}

/// GHZ state with its coherence (the two corner entries) damped by `1 − lambda`.
pub fn dephased_ghz(n: usize, lambda: f64) -> Result<DensityMatrix> {
    let d = check_qubits(n)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid(format!(
            "dephasing strength {lambda} outside [0, 1]"
        )));
    }
    let mut m = CMatrix::zeros(d, d);
    let half = Complex64::new(0.5, 0.0);
    m[(0, 0)] = half;
    m[(d - 1, d - 1)] = half;
    let coherence = Complex64::new(0.5 * (1.0 - lambda), 0.0);
    m[(0, d - 1)] += coherence;
    m[(d - 1, 0)] += coherence;
    DensityMatrix::new(m)
}

/// Uhlmann fidelity `tr √(√a · b · √a)`, evaluated as the sum of singular
/// values of `√a · √b` so near-zero spectra do not pass through a square root.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    fidelity_with(a, b, &Tolerances::default())
}

pub fn fidelity_with(a: &DensityMatrix, b: &DensityMatrix, tol: &Tolerances) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let root = |m: &CMatrix, which: &str| -> Result<CMatrix> {
        let (values, vectors) = linalg::hermitian_eigen(m)?;
        if values[0] < -tol.psd {
            return Err(TomoError::InvalidState(format!(
                "{which} argument has eigenvalue {:e}",
                values[0]
            )));
        }
        Ok(linalg::spectral_map(&values, &vectors, |x| {
            x.max(0.0).sqrt()
        }))
    };
    let product = root(&a.0, "first")? * root(&b.0, "second")?;
    let svd =
        nalgebra::linalg::SVD::try_new(product, false, false, 1e-15, 100_000).ok_or_else(|| {
            TomoError::Numerical("singular value decomposition did not converge".into())
        })?;
    let f: f64 = svd.singular_values.iter().sum();
    if f > 1.0 + tol.fidelity {
        return Err(TomoError::Numerical(format!("fidelity {f} exceeds 1")));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// `tr(ρ²)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.0.iter().map(|z| z.norm_sqr()).sum()
}

/// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
pub fn project_psd(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (values, vectors) = linalg::hermitian_eigen(&h.0)?;
    Ok(HermitianMatrix(linalg::hermitian_part(
        &linalg::spectral_map(&values, &vectors, |x| x.max(0.0)),
    )))
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        Self {
            dim: d,
            re: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].re).collect())
                .collect(),
            im: (0..d)
                .map(|i| (0..d).map(|j| m[(i, j)].im).collect())
                .collect(),
        }
    }

    fn into_matrix(self) -> std::result::Result<CMatrix, String> {
        let d = self.dim;
        let rows_ok = |rows: &Vec<Vec<f64>>| rows.len() == d && rows.iter().all(|r| r.len() == d);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(format!("re/im must both be {d}x{d}"));
        }
        Ok(CMatrix::from_fn(d, d, |i, j| {
            Complex64::new(self.re[i][j], self.im[i][j])
        }))
    }
}

impl Serialize for HermitianMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = MatrixJson::deserialize(d)?
            .into_matrix()
            .map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ghz_four_qubits_has_four_corner_entries() {
        let g = ghz_state(4).unwrap();
        let m = g.matrix();
        for i in 0..16 {
            for j in 0..16 {
                let corner = (i == 0 || i == 15) && (j == 0 || j == 15);
                let want = if corner { 0.5 } else { 0.0 };
                assert_eq!(m[(i, j)], c(want), "entry ({i},{j})");
            }
        }
        assert_abs_diff_eq!(purity(&g), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn ghz_single_qubit_is_plus_state() {
        let g = ghz_state(1).unwrap();
        assert!(g.matrix().iter().all(|z| *z == c(0.5)));
    }

    #[test]
    fn ghz_rejects_zero_qubits() {
        assert!(matches!(ghz_state(0), Err(TomoError::InvalidArgument(_))));
    }

    #[test]
    fn ghz_has_exactly_four_nonzeros() {
        for n in 1..=6 {
            let g = ghz_state(n).unwrap();
            let nz: Vec<_> = g.matrix().iter().filter(|z| z.norm() > 0.0).collect();
            // n = 1 has all four entries in the corners as well.
            assert_eq!(nz.len(), 4);
            assert!(nz.iter().all(|z| **z == c(0.5)));
        }
    }

    #[test]
    fn dephasing_limits() {
        assert_eq!(dephased_ghz(4, 0.0).unwrap(), ghz_state(4).unwrap());
        let full = dephased_ghz(4, 1.0).unwrap();
        assert_eq!(full.matrix()[(0, 15)], c(0.0));
        assert_eq!(full.matrix()[(0, 0)], c(0.5));
        assert_eq!(full.matrix()[(15, 15)], c(0.5));
        assert_abs_diff_eq!(purity(&full), 0.5, epsilon = 1e-15);
        assert!(dephased_ghz(4, 1.5).is_err());
        assert!(dephased_ghz(4, -0.1).is_err());
    }

    #[test]
    fn dephased_purity_formula() {
        for lam in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let rho = dephased_ghz(4, lam).unwrap();
            let direct: f64 = (rho.matrix() * rho.matrix()).trace().re;
            assert_abs_diff_eq!(purity(&rho), direct, epsilon = 1e-14);
            assert_abs_diff_eq!(
                purity(&rho),
                0.5 + (1.0 - lam).powi(2) / 2.0,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn dephased_half_fidelity() {
        // Pure target: F² = ⟨ψ|ρ|ψ⟩ = (1 + (1 − λ))/2.
        let f = fidelity(&dephased_ghz(4, 0.5).unwrap(), &ghz_state(4).unwrap()).unwrap();
        assert_abs_diff_eq!(f, 0.75f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn fidelity_reference_values() {
        let g = ghz_state(4).unwrap();
        assert_abs_diff_eq!(fidelity(&g, &g).unwrap(), 1.0, epsilon = 1e-10);
        let mixed = DensityMatrix::maximally_mixed(16).unwrap();
        assert_abs_diff_eq!(fidelity(&g, &mixed).unwrap(), 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(fidelity(&mixed, &g).unwrap(), 0.25, epsilon = 1e-10);
        let zero = DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap();
        let one = DensityMatrix::pure(&[c(0.0), c(1.0)]).unwrap();
        assert_abs_diff_eq!(fidelity(&zero, &one).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = ghz_state(1).unwrap();
        let b = ghz_state(2).unwrap();
        assert!(matches!(
            fidelity(&a, &b),
            Err(TomoError::InvalidArgument(_))
        ));
    }

    #[test]
    fn purity_of_mixed() {
        for d in [2, 4, 16] {
            let m = DensityMatrix::maximally_mixed(d).unwrap();
            assert_abs_diff_eq!(purity(&m), 1.0 / d as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn project_psd_examples() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let p = project_psd(&HermitianMatrix::new(m).unwrap()).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)].re, 1.0, epsilon = 1e-12);
        assert!(p.matrix()[(1, 1)].norm() < 1e-12);
        assert!(p.matrix()[(0, 1)].norm() < 1e-12);

        let g = ghz_state(3).unwrap().as_hermitian();
        assert!(project_psd(&g).unwrap().frobenius_distance(&g) < 1e-10);
    }

    #[test]
    fn state_validation() {
        let not_unit = CMatrix::identity(2, 2);
        assert!(matches!(
            DensityMatrix::new(not_unit),
            Err(TomoError::InvalidState(_))
        ));
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.5), c(-0.5)]));
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(TomoError::InvalidState(_))
        ));
        let mut non_herm = CMatrix::identity(2, 2).scale(0.5);
        non_herm[(0, 1)] = c(0.1);
        assert!(DensityMatrix::new(non_herm).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(3, 3).scale(1.0 / 3.0)).is_err());
    }

    #[test]
    fn json_layout() {
        let g = ghz_state(1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&g).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["re"][0][1], 0.5);
        assert_eq!(v["im"][1][0], 0.0);
        let back: DensityMatrix = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }
}
