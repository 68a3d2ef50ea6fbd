use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::feasibility::{decide, min_residual_psd, StopRule};
use super::{norm_sq, strict_radius, Problem, SolverConfig};
use crate::data::Dataset;
use crate::error::{invalid, Result, TomoError};
use crate::state::{DensityMatrix, HermitianMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Converged,
    Infeasible,
    IterationLimit,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Converged => "converged",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReconstructionResult {
    /// Renormalized estimate `χ̂ / tr χ̂`. For infeasible problems this is the
    /// normalized best-fitting PSD matrix.
    pub estimate: DensityMatrix,
    /// `tr χ̂` before renormalization.
    pub raw_trace: f64,
    pub epsilon: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    /// `‖A(χ̂) − Y‖²` in squared counts.
    pub residual: f64,
    /// Eigenvalues of the unnormalized `χ̂`, ascending.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub raw_eigenvalues: Vec<f64>,
}

impl ReconstructionResult {
    pub fn is_feasible(&self) -> bool {
        self.status != SolverStatus::Infeasible
    }

    /// Number of eigenvalues of `χ̂` above `threshold`.
    pub fn rank(&self, threshold: f64) -> usize {
        self.raw_eigenvalues
            .iter()
            .filter(|&&x| x > threshold)
            .count()
    }
}

/// Minimizes `tr χ` over `χ ⪰ 0` with `‖A(χ) − Y‖² < ε`, then renormalizes.
///
/// Feasibility is decided first by [`check_feasible`](super::check_feasible)'s
/// projected-gradient minimization; its minimizer also serves as a witness
/// that pulls the final iterate strictly inside the ball. The trace
/// minimization itself is an alternating-direction splitting of `χ` against
/// a PSD copy `W` and the data variable `z = A(χ)`:
///
/// ```text
/// min tr χ + 1_{⪰0}(W) + 1_{‖z−Y‖²≤ε}(z)   s.t.  χ = W,  A(χ) = z
/// ```
///
/// The χ-update solves `(I + AᵀA) χ = rhs`, which is diagonal in Pauli
/// coordinates.
pub fn reconstruct(
    data: &Dataset,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<ReconstructionResult> {
    config.validate()?;
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(invalid(format!(
            "epsilon must be a nonnegative number, got {epsilon}"
        )));
    }
    if data.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    if epsilon >= data.squared_norm() {
        return Err(TomoError::DegenerateSolution { trace: 0.0 });
    }
    let problem = Problem::new(data)?;
    let s2 = problem.scale * problem.scale;
    let radius_sq = strict_radius(epsilon) / s2;

    // The deepest witness keeps the final blend toward it small.
    let stop = StopRule {
        gap_tolerance: 1e-6,
        above: Some(radius_sq),
    };
    let witness = min_residual_psd(&problem, config.feasibility_max_iterations, stop)?;
    let report = decide(&problem, &witness, epsilon)?;
    if !report.feasible {
        return infeasible_result(
            &problem,
            &witness.coeffs,
            epsilon,
            report.min_residual,
            witness.iterations,
        );
    }

    let mut admm = Admm::new(&problem, radius_sq, config);
    let converged = admm.run()?;
    let mut chi = admm.w().to_vec();

    let a_chi = problem.forward(&chi);
    let r_chi = residual_vec(&a_chi, &problem.y);
    if norm_sq(&r_chi) > radius_sq {
        let a_wit = problem.forward(&witness.coeffs);
        let r_wit = residual_vec(&a_wit, &problem.y);
        let t = blend_fraction(&r_chi, &r_wit, radius_sq);
        chi = chi
            .iter()
            .zip(&witness.coeffs)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
    }

    let raw_trace = problem.trace(&chi);
    if raw_trace < 1e-6 {
        return Err(TomoError::DegenerateSolution { trace: raw_trace });
    }
    let residual = problem.residual(&chi);
    let matrix = HermitianMatrix::from_hermitian_part(&problem.basis.matrix(&chi));
    let raw_eigenvalues = matrix.eigenvalues()?;
    let estimate = DensityMatrix::from_psd(&clip_negative(&matrix)?)?;
    let status = if converged && residual <= epsilon + config.constraint_tolerance_for(epsilon) {
        SolverStatus::Converged
    } else {
        SolverStatus::IterationLimit
    };
    Ok(ReconstructionResult {
        estimate,
        raw_trace,
        epsilon,
        status,
        iterations: admm.iterations,
        residual,
        raw_eigenvalues,
    })
}

fn clip_negative(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    // Blending and coordinate round trips leave eigenvalues at the 1e-15 level.
    crate::state::project_psd(m)
}

fn infeasible_result(
    problem: &Problem,
    coeffs: &[f64],
    epsilon: f64,
    residual: f64,
    iterations: usize,
) -> Result<ReconstructionResult> {
    let matrix = HermitianMatrix::from_hermitian_part(&problem.basis.matrix(coeffs));
    let raw_trace = matrix.trace();
    let estimate = if raw_trace > 1e-12 {
        DensityMatrix::from_psd(&clip_negative(&matrix)?)?
    } else {
        DensityMatrix::maximally_mixed(problem.basis.dim())?
    };
    Ok(ReconstructionResult {
        estimate,
        raw_trace,
        epsilon,
        status: SolverStatus::Infeasible,
        iterations,
        residual,
        raw_eigenvalues: matrix.eigenvalues()?,
    })
}

fn residual_vec(a: &[f64], y: &[f64]) -> Vec<f64> {
    a.iter().zip(y).map(|(x, y)| x - y).collect()
}

/// Smallest `t ∈ [0, 1]` with `‖(1−t)·a + t·b‖² ≤ r²`, given `‖b‖² < r²`.
fn blend_fraction(a: &[f64], b: &[f64], radius_sq: f64) -> f64 {
    let aa = norm_sq(a);
    let bb = norm_sq(b);
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    // q(t) = aa (1−t)² + 2ab t(1−t) + bb t² = c2 t² + c1 t + c0.
    let c2 = aa - 2.0 * ab + bb;
    let c1 = 2.0 * (ab - aa);
    let c0 = aa - radius_sq;
    if c0 <= 0.0 {
        return 0.0;
    }
    if c2 <= 1e-300 {
        return if c1 < 0.0 {
            (-c0 / c1).clamp(0.0, 1.0)
        } else {
            1.0
        };
    }
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0);
    let t = (-c1 - disc.sqrt()) / (2.0 * c2);
    // Nudge inward against rounding.
    (t * (1.0 + 1e-9) + 1e-15).clamp(0.0, 1.0)
}

struct Admm<'a> {
    problem: &'a Problem,
    radius_sq: f64,
    config: &'a SolverConfig,
    rho: f64,
    /// Stacked iterate `[W, U_w, z, u_z]`.
    state: Vec<f64>,
    iterations: usize,
}

struct Residuals {
    primal: f64,
    dual: f64,
    primal_scale: f64,
    dual_scale: f64,
}

const RELAXATION: f64 = 1.6;
const CHECK_EVERY: usize = 5;
const ANDERSON_MEMORY: usize = 8;

impl<'a> Admm<'a> {
    fn new(problem: &'a Problem, radius_sq: f64, config: &'a SolverConfig) -> Self {
        let n = problem.gram.len();
        let z = problem.forward(&vec![0.0; n]);
        let mut state = vec![0.0; 2 * n + 2 * z.len()];
        state[2 * n..2 * n + z.len()].copy_from_slice(&z);
        Self {
            problem,
            radius_sq,
            config,
            rho: config.penalty_parameter,
            state,
            iterations: 0,
        }
    }

    fn w(&self) -> &[f64] {
        &self.state[..self.problem.gram.len()]
    }

    fn project_ball(&self, v: &mut [f64]) {
        let y = &self.problem.y;
        let dist_sq: f64 = v.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist_sq > self.radius_sq {
            let s = (self.radius_sq / dist_sq).sqrt();
            v.iter_mut().zip(y).for_each(|(a, b)| *a = b + s * (*a - b));
        }
    }

    /// One over-relaxed splitting step from `u`, optionally with the
    /// primal and dual residuals of that step.
    fn step(&self, u: &[f64], with_residuals: bool) -> Result<(Vec<f64>, Option<Residuals>)> {
        let p = self.problem;
        let n = p.gram.len();
        let (w, rest) = u.split_at(n);
        let (uw, rest) = rest.split_at(n);
        let (z, uz) = rest.split_at(rest.len() / 2);

        // χ-update: (I + AᵀA) χ = W − U_w + Aᵀ(z − u_z) − c/ρ.
        let atzu = p.adjoint(&sub(z, uz));
        let mut x: Vec<f64> = (0..n)
            .map(|l| (w[l] - uw[l] + atzu[l]) / (1.0 + p.gram[l]))
            .collect();
        x[0] -= (p.basis.dim() as f64).sqrt() / (self.rho * (1.0 + p.gram[0]));
        let ax = p.forward(&x);

        let xr: Vec<f64> = x
            .iter()
            .zip(w)
            .map(|(a, b)| RELAXATION * a + (1.0 - RELAXATION) * b)
            .collect();
        let axr: Vec<f64> = ax
            .iter()
            .zip(z)
            .map(|(a, b)| RELAXATION * a + (1.0 - RELAXATION) * b)
            .collect();

        let w_in: Vec<f64> = xr.iter().zip(uw).map(|(a, b)| a + b).collect();
        let (w_new, _) = p.project_psd(&w_in)?;
        let mut z_new: Vec<f64> = axr.iter().zip(uz).map(|(a, b)| a + b).collect();
        self.project_ball(&mut z_new);
        let uw_new: Vec<f64> = (0..n).map(|l| uw[l] + xr[l] - w_new[l]).collect();
        let uz_new: Vec<f64> = (0..z.len()).map(|i| uz[i] + axr[i] - z_new[i]).collect();

        let residuals = with_residuals.then(|| {
            let primal = (norm_sq(&sub(&x, &w_new)) + norm_sq(&sub(&ax, &z_new))).sqrt();
            let at_dz = p.adjoint(&sub(&z_new, z));
            let dual = self.rho
                * w_new
                    .iter()
                    .zip(w)
                    .zip(&at_dz)
                    .map(|((a, b), c)| (a - b + c).powi(2))
                    .sum::<f64>()
                    .sqrt();
            let primal_scale = (norm_sq(&x) + norm_sq(&ax))
                .sqrt()
                .max((norm_sq(&w_new) + norm_sq(&z_new)).sqrt());
            let at_uz = p.adjoint(&uz_new);
            let dual_scale = self.rho
                * uw_new
                    .iter()
                    .zip(&at_uz)
                    .map(|(a, b)| (a + b).powi(2))
                    .sum::<f64>()
                    .sqrt();
            Residuals {
                primal,
                dual,
                primal_scale,
                dual_scale,
            }
        });

        let mut out = w_new;
        out.extend(uw_new);
        out.extend(z_new);
        out.extend(uz_new);
        Ok((out, residuals))
    }

    /// Runs to convergence; returns whether the residual criteria were met.
    ///
    /// Steps are extrapolated by Anderson acceleration over the stacked
    /// iterate. An extrapolated point is kept only if its own step shrinks
    /// the fixed-point residual; otherwise the plain step is restored and the
    /// history cleared. On return `state` is always a plain step output.
    fn run(&mut self) -> Result<bool> {
        let n = self.problem.gram.len();
        let m = self.problem.y.len();
        let tol = self.config.primal_tolerance;
        let abs_tol = tol * ((n + m) as f64).sqrt();
        let mut anderson = Anderson::new(ANDERSON_MEMORY);
        // Plain step output and its residual norm, kept while an extrapolated point is on trial.
        let mut fallback: Option<(Vec<f64>, f64)> = None;
        let mut plain = self.state.clone();

        for it in 1..=self.config.max_iterations {
            self.iterations = it;
            let (f, residuals) = self.step(&self.state, it % CHECK_EVERY == 0)?;
            let g = sub(&f, &self.state);
            let g_norm = norm_sq(&g).sqrt();
            if let Some((prev, prev_norm)) = fallback.take() {
                if g_norm > prev_norm {
                    anderson.reset();
                    self.state = prev;
                    continue;
                }
            }
            plain.clone_from(&f);

            if let Some(r) = residuals {
                if r.primal <= abs_tol + tol * r.primal_scale
                    && r.dual <= abs_tol + tol * r.dual_scale
                {
                    self.state = plain;
                    return Ok(true);
                }
                // Residual balancing on the normalized residuals.
                let ratio = (r.primal / r.primal_scale.max(1e-300))
                    / (r.dual / r.dual_scale.max(1e-300)).max(1e-300);
                let factor = ratio.sqrt();
                if !(0.5..=2.0).contains(&factor) {
                    self.state = f;
                    self.rescale_penalty(factor.clamp(1e-3, 1e3));
                    plain.clone_from(&self.state);
                    anderson.reset();
                    continue;
                }
            }

            match anderson.extrapolate(&f, &g) {
                Some(candidate) => {
                    fallback = Some((f, g_norm));
                    self.state = candidate;
                }
                None => self.state = f,
            }
        }
        self.state = plain;
        Ok(false)
    }

    fn rescale_penalty(&mut self, factor: f64) {
        self.rho *= factor;
        let n = self.problem.gram.len();
        let m = self.problem.y.len();
        let (_, rest) = self.state.split_at_mut(n);
        let (uw, rest) = rest.split_at_mut(n);
        let (_, uz) = rest.split_at_mut(m);
        uw.iter_mut()
            .chain(uz.iter_mut())
            .for_each(|u| *u /= factor);
    }
}

/// Type-II Anderson acceleration of a fixed-point map `u ↦ f(u)` from the
/// last few differences of `f` and of the residual `g = f(u) − u`.
struct Anderson {
    memory: usize,
    dg: VecDeque<Vec<f64>>,
    df: VecDeque<Vec<f64>>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            dg: VecDeque::new(),
            df: VecDeque::new(),
            last: None,
        }
    }

    fn reset(&mut self) {
        self.dg.clear();
        self.df.clear();
        self.last = None;
    }

    fn extrapolate(&mut self, f: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        if let Some((g_prev, f_prev)) = self.last.take() {
            if self.dg.len() == self.memory {
                self.dg.pop_front();
                self.df.pop_front();
            }
            self.dg.push_back(sub(g, &g_prev));
            self.df.push_back(sub(f, &f_prev));
        }
        self.last = Some((g.to_vec(), f.to_vec()));
        let k = self.dg.len();
        if k == 0 {
            return None;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut gram = DMatrix::from_fn(k, k, |i, j| dot(&self.dg[i], &self.dg[j]));
        let reg = 1e-10 * gram.trace().max(1e-300);
        for i in 0..k {
            gram[(i, i)] += reg;
        }
        let rhs = DVector::from_fn(k, |i, _| dot(&self.dg[i], g));
        let gamma = gram.cholesky()?.solve(&rhs);
        if gamma.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut out = f.to_vec();
        for (c, df) in gamma.iter().zip(&self.df) {
            out.iter_mut().zip(df).for_each(|(o, d)| *o -= c * d);
        }
        Some(out)
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
