use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::linalg::CMatrix;
use crate::pauli::PauliBasis;
use crate::state::{DensityMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    pub max_iterations: usize,
    /// Stop when successive accepted iterates differ by less than this in Frobenius norm.
    pub tolerance: f64,
    /// Factor applied to the dilution step after a likelihood decrease.
    pub dilution_factor: f64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tolerance: 1e-10,
            dilution_factor: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MleResult {
    pub estimate: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when the iteration limit was hit; `estimate` is then the best iterate.
    pub converged: bool,
}

fn log_likelihood(counts: &[f64], probs: &[f64]) -> f64 {
    counts
        .iter()
        .zip(probs)
        .filter(|(y, _)| **y > 0.0)
        .map(|(y, p)| y * p.max(1e-300).ln())
        .sum()
}

/// Maximum-likelihood state by the diluted `R ρ R` fixed-point iteration.
///
/// `R(ρ) = Σ_{j,k} (y_{jk} / p_{jk}(ρ)) Π_{jk} / Σ_j N_j`; the update is
/// `ρ ← (I + tR) ρ (I + tR) / tr(·)` with `t = ∞` (plain `RρR`) until the
/// log-likelihood decreases, after which `t` is diluted.
pub fn mle_estimate(data: &Dataset, config: &MleConfig) -> Result<MleResult> {
    if data.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    if config.max_iterations == 0
        || !(config.tolerance > 0.0)
        || !(0.0..1.0).contains(&config.dilution_factor)
    {
        return Err(invalid("invalid MLE configuration"));
    }
    let op = data.operator();
    let basis = PauliBasis::new(data.n_qubits());
    let d = data.dim();
    let counts = data.count_table();
    let shots = op.shots().to_vec();
    let total: f64 = shots.iter().sum();

    let probabilities = |rho: &CMatrix| -> Vec<f64> {
        let mut p = op.forward(&basis.coefficients(rho));
        for (j, row) in p.chunks_exact_mut(d).enumerate() {
            row.iter_mut().for_each(|x| *x = (*x / shots[j]).max(0.0));
        }
        p
    };

    let mut rho = CMatrix::identity(d, d).scale(1.0 / d as f64);
    let mut probs = probabilities(&rho);
    let mut ll = log_likelihood(&counts, &probs);
    let mut t = f64::INFINITY;
    let identity = CMatrix::identity(d, d);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        iterations += 1;
        // Weights y/(p·N_j) so that the adjoint's N_j factor cancels.
        let weights: Vec<f64> = counts
            .iter()
            .zip(&probs)
            .enumerate()
            .map(|(i, (y, p))| {
                if *y > 0.0 {
                    y / (p.max(1e-300) * shots[i / d])
                } else {
                    0.0
                }
            })
            .collect();
        let mut r_coeffs = op.adjoint(&weights);
        r_coeffs.iter_mut().for_each(|c| *c /= total);
        let r = basis.matrix(&r_coeffs);

        loop {
            let step = if t.is_infinite() {
                r.clone()
            } else {
                &identity + r.scale(t)
            };
            let mut next = &step * &rho * &step;
            next = (&next + next.adjoint()).scale(0.5);
            let tr: f64 = next.diagonal().iter().map(|z| z.re).sum();
            next.scale_mut(1.0 / tr);
            let next_probs = probabilities(&next);
            let next_ll = log_likelihood(&counts, &next_probs);
            if next_ll >= ll - 1e-12 * ll.abs() {
                let change = (&next - &rho).norm();
                rho = next;
                probs = next_probs;
                ll = next_ll.max(ll);
                if !t.is_infinite() {
                    t *= 2.0;
                    if t > 1e8 {
                        t = f64::INFINITY;
                    }
                }
                if change < config.tolerance {
                    converged = true;
                }
                break;
            }
            t = if t.is_infinite() {
                1.0
            } else {
                t * config.dilution_factor
            };
            if t < 1e-12 {
                // No ascent direction left at machine precision.
                converged = true;
                break;
            }
        }
        if converged {
            break;
        }
    }

    let estimate = DensityMatrix::from_psd(&crate::state::project_psd(
        &HermitianMatrix::from_hermitian_part(&rho),
    )?)?;
    Ok(MleResult {
        estimate,
        log_likelihood: ll,
        iterations,
        converged,
    })
}
