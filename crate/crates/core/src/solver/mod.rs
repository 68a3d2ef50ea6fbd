//! Trace-minimizing reconstruction, feasibility checks and the maximum
//! likelihood baseline.
//!
//! All solvers work in orthonormal Pauli coordinates, where the sensing map
//! of a Pauli-product plan has a diagonal Gram matrix. Counts are rescaled by
//! the largest shot number so that the data-fit ball is well conditioned; the
//! ball radius is rescaled accordingly and every reported quantity is in raw
//! count units.

mod admm;
mod feasibility;
mod mle;

pub use admm::{reconstruct, ReconstructionResult, SolverStatus};
pub use feasibility::{check_feasible, FeasibilityReport};
pub use mle::{mle_estimate, MleConfig, MleResult};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::linalg;
use crate::measurement::SensingOperator;
use crate::pauli::PauliBasis;

/// Settings for the splitting solver and the feasibility check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative stopping threshold on the primal and dual residuals.
    pub primal_tolerance: f64,
    /// Allowed violation of the data-fit ball in squared counts; `None`
    /// means `1e-6 · ε`.
    pub constraint_tolerance: Option<f64>,
    /// Initial penalty (step size) of the splitting; adapted by residual balancing.
    pub penalty_parameter: f64,
    /// Iteration cap of the projected-gradient feasibility check.
    pub feasibility_max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            primal_tolerance: 1e-9,
            constraint_tolerance: None,
            penalty_parameter: 1.0,
            feasibility_max_iterations: 20_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 || self.feasibility_max_iterations == 0 {
            return Err(invalid("iteration limits must be positive"));
        }
        if !(self.primal_tolerance > 0.0) || !(self.penalty_parameter > 0.0) {
            return Err(invalid("tolerances and penalty must be positive"));
        }
        if let Some(t) = self.constraint_tolerance {
            if !(t > 0.0) {
                return Err(invalid("constraint tolerance must be positive"));
            }
        }
        Ok(())
    }

    pub fn constraint_tolerance_for(&self, epsilon: f64) -> f64 {
        self.constraint_tolerance.unwrap_or(1e-6 * epsilon)
    }
}

/// Strict `‖A(χ) − Y‖² < ε` realized as `≤ ε (1 − 1e-9)`.
pub(crate) fn strict_radius(epsilon: f64) -> f64 {
    epsilon * (1.0 - 1e-9)
}

/// A dataset prepared for first-order solvers.
pub(crate) struct Problem {
    pub op: SensingOperator,
    pub basis: PauliBasis,
    /// Count scale `s`; scaled data is `Y/s`, scaled operator `A/s`.
    pub scale: f64,
    pub y: Vec<f64>,
    /// Diagonal of `(A/s)ᵀ(A/s)`.
    pub gram: Vec<f64>,
    /// Least-squares point `(AᵀA)⁺AᵀY`; uncovered labels are zero.
    pub least_squares: Vec<f64>,
    /// `‖Y/s − (A/s)ξ_ls‖²`, the part of the data no matrix can explain.
    pub ls_residual: f64,
}

impl Problem {
    pub fn new(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(invalid("dataset has no records"));
        }
        let op = data.operator();
        let scale = op.shots().iter().copied().fold(0.0, f64::max);
        let y: Vec<f64> = data.count_table().iter().map(|c| c / scale).collect();
        let gram: Vec<f64> = op
            .gram_diagonal()
            .iter()
            .map(|g| g / (scale * scale))
            .collect();
        let aty = adjoint_scaled(&op, scale, &y);
        let least_squares: Vec<f64> = aty
            .iter()
            .zip(&gram)
            .map(|(a, g)| if *g > 0.0 { a / g } else { 0.0 })
            .collect();
        let basis = PauliBasis::new(data.n_qubits());
        let mut p = Self {
            op,
            basis,
            scale,
            y,
            gram,
            least_squares,
            ls_residual: 0.0,
        };
        p.ls_residual = p.scaled_residual(&p.least_squares.clone());
        Ok(p)
    }

    pub fn forward(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut v = self.op.forward(coeffs);
        v.iter_mut().for_each(|x| *x /= self.scale);
        v
    }

    pub fn adjoint(&self, data: &[f64]) -> Vec<f64> {
        adjoint_scaled(&self.op, self.scale, data)
    }

    /// `‖(A/s)ξ − Y/s‖²`.
    pub fn scaled_residual(&self, coeffs: &[f64]) -> f64 {
        self.forward(coeffs)
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    /// Residual in raw squared counts.
    pub fn residual(&self, coeffs: &[f64]) -> f64 {
        self.scaled_residual(coeffs) * self.scale * self.scale
    }

    /// Scaled residual via the diagonal Gram identity
    /// `‖Aξ − Y‖² = ‖Aξ_ls − Y‖² + Σ_l D_l (ξ_l − ξ_ls,l)²`.
    pub fn residual_from_gram(&self, coeffs: &[f64]) -> f64 {
        self.ls_residual
            + coeffs
                .iter()
                .zip(&self.least_squares)
                .zip(&self.gram)
                .map(|((x, l), g)| g * (x - l) * (x - l))
                .sum::<f64>()
    }

    pub fn trace(&self, coeffs: &[f64]) -> f64 {
        coeffs[0] * (self.basis.dim() as f64).sqrt()
    }

    /// Projects Pauli coordinates onto the PSD cone; also returns the
    /// eigenvalues of the projected matrix.
    pub fn project_psd(&self, coeffs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let m = self.basis.matrix(coeffs);
        let (values, vectors) = linalg::hermitian_eigen(&m)?;
        let projected = linalg::spectral_map(&values, &vectors, |x| x.max(0.0));
        Ok((
            self.basis.coefficients(&projected),
            values.iter().map(|x| x.max(0.0)).collect(),
        ))
    }
}

fn adjoint_scaled(op: &SensingOperator, scale: f64, data: &[f64]) -> Vec<f64> {
    let mut v = op.adjoint(data);
    v.iter_mut().for_each(|x| *x /= scale);
    v
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}
