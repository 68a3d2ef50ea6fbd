use serde::{Deserialize, Serialize};

use super::{strict_radius, Problem, SolverConfig};
use crate::data::Dataset;
use crate::error::{invalid, Result, TomoError};

/// Outcome of minimizing `‖A(χ) − Y‖²` over PSD matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Smallest residual found, in squared counts.
    pub min_residual: f64,
    pub iterations: usize,
}

const STALL_ITERATIONS: usize = 500;

/// Minimizer state shared with the reconstruction solver, which uses the
/// minimizing matrix as a feasibility witness.
pub(crate) struct Witness {
    pub coeffs: Vec<f64>,
    /// Certified lower bound on the scaled minimal residual.
    pub lower_bound: f64,
    pub iterations: usize,
    /// The duality gap closed to tolerance.
    pub converged: bool,
}

/// When to stop the residual minimization early.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StopRule {
    /// Relative duality-gap tolerance.
    pub gap_tolerance: f64,
    /// Stop once the certified lower bound reaches this value.
    pub above: Option<f64>,
}

/// Accelerated projected gradient on `f(ξ) = ‖Aξ − Y‖²` over the PSD cone,
/// using `f(ξ) = f(ξ_ls) + Σ_l D_l (ξ_l − ξ_ls,l)²` with function-value restarts.
///
/// Progress is certified with a Frank–Wolfe bound. Every PSD `X` with
/// `f(X) ≤ f(ξ_k)` has identity coordinate at most
/// `ξ_ls,I + sqrt((f(ξ_k) − f(ξ_ls)) / D_I)`, hence trace at most `T_k`, and
/// convexity gives `f* ≥ f(ξ_k) − ⟨∇f, ξ_k⟩ + T_k · min(0, λ_min(∇f))`.
pub(crate) fn min_residual_psd(
    problem: &Problem,
    max_iterations: usize,
    stop: StopRule,
) -> Result<Witness> {
    let lipschitz = 2.0 * problem.gram.iter().copied().fold(0.0, f64::max);
    let step = 1.0 / lipschitz;
    let sqrt_d = (problem.basis.dim() as f64).sqrt();
    let (mut x, _) = problem.project_psd(&problem.least_squares)?;
    let mut fx = problem.residual_from_gram(&x);
    let mut best = (x.clone(), fx);
    let mut lower = problem.ls_residual;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut last_improvement = 0;

    let gradient = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .zip(&problem.least_squares)
            .zip(&problem.gram)
            .map(|((vi, l), g)| 2.0 * g * (vi - l))
            .collect()
    };

    for it in 0..=max_iterations {
        if it % 5 == 0 {
            let (xb, fb) = (&best.0, best.1);
            let g = gradient(xb);
            let (values, _) = crate::linalg::hermitian_eigen(&problem.basis.matrix(&g))?;
            let trace_cap = sqrt_d
                * (problem.least_squares[0]
                    + ((fb - problem.ls_residual).max(0.0) / problem.gram[0]).sqrt());
            let g_dot_x: f64 = g.iter().zip(xb).map(|(a, b)| a * b).sum();
            let bound = fb - g_dot_x + trace_cap.max(0.0) * values[0].min(0.0);
            lower = lower.max(bound);
            // The bound is limited by eigensolver accuracy; a long stall counts as converged.
            let stalled = it - last_improvement > STALL_ITERATIONS;
            let done = stalled
                || fb - lower <= stop.gap_tolerance * fb.max(1e-300)
                || stop.above.is_some_and(|a| lower >= a);
            if done {
                let converged = stalled || fb - lower <= stop.gap_tolerance * fb.max(1e-300);
                return Ok(Witness {
                    coeffs: best.0,
                    lower_bound: lower,
                    iterations: it,
                    converged,
                });
            }
        }
        if it == max_iterations {
            break;
        }
        let g = gradient(&y);
        let trial: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        let (next, _) = problem.project_psd(&trial)?;
        let f_next = problem.residual_from_gram(&next);
        if f_next < best.1 {
            if f_next < best.1 * (1.0 - 1e-12) {
                last_improvement = it;
            }
            best = (next.clone(), f_next);
        }
        if f_next > fx {
            // Restart momentum from the last iterate.
            t = 1.0;
            y = x.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        y = next
            .iter()
            .zip(&x)
            .map(|(n, o)| n + beta * (n - o))
            .collect();
        t = t_next;
        x = next;
        fx = f_next;
    }
    Ok(Witness {
        coeffs: best.0,
        lower_bound: lower,
        iterations: max_iterations,
        converged: false,
    })
}

/// Decides whether some PSD matrix fits the data strictly inside the ε-ball.
///
/// The reported `min_residual` is the minimum to a relative duality gap of 1e-6.
pub fn check_feasible(
    data: &Dataset,
    epsilon: f64,
    config: &SolverConfig,
) -> Result<FeasibilityReport> {
    config.validate()?;
    if !(epsilon >= 0.0) {
        return Err(invalid(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    let problem = Problem::new(data)?;
    let stop = StopRule {
        gap_tolerance: 1e-6,
        above: None,
    };
    let w = min_residual_psd(&problem, config.feasibility_max_iterations, stop)?;
    decide(&problem, &w, epsilon)
}

pub(crate) fn decide(problem: &Problem, w: &Witness, epsilon: f64) -> Result<FeasibilityReport> {
    let s2 = problem.scale * problem.scale;
    // Evaluate the witness residual directly rather than through the Gram identity.
    let residual = problem.residual(&w.coeffs);
    let radius = strict_radius(epsilon);
    let feasible = epsilon > 0.0 && residual <= radius;
    let certified_infeasible = epsilon == 0.0 || w.lower_bound * s2 >= radius || w.converged;
    if !feasible && !certified_infeasible {
        return Err(TomoError::FeasibilityUndetermined {
            iterations: w.iterations,
            residual,
            epsilon,
        });
    }
    Ok(FeasibilityReport {
        feasible,
        min_residual: residual,
        iterations: w.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::sample_counts;
    use crate::measurement::{apply_sensing, SettingsPlan};
    use crate::rng::RandomSource;
    use crate::state::{dephased_ghz, DensityMatrix};

    #[test]
    fn noiseless_data_is_feasible_for_any_epsilon() {
        let rho = dephased_ghz(2, 0.3).unwrap();
        let data = Dataset::expected(&rho, &SettingsPlan::complete(2, 500).unwrap()).unwrap();
        for eps in [1e-6, 1.0, 100.0] {
            let r = check_feasible(&data, eps, &SolverConfig::default()).unwrap();
            assert!(r.feasible, "eps {eps}: {r:?}");
            assert!(r.min_residual < 1e-8);
        }
    }

    #[test]
    fn noisy_data_with_zero_epsilon_is_infeasible() {
        let rho = dephased_ghz(2, 0.3).unwrap();
        let data = sample_counts(
            &rho,
            &SettingsPlan::complete(2, 500).unwrap(),
            RandomSource::new(5),
        )
        .unwrap();
        let r = check_feasible(&data, 0.0, &SolverConfig::default()).unwrap();
        assert!(!r.feasible);
        assert!(r.min_residual > 0.0);
    }

    #[test]
    fn mixed_state_witness() {
        let rho = dephased_ghz(2, 0.3).unwrap();
        let plan = SettingsPlan::complete(2, 500).unwrap();
        let data = sample_counts(&rho, &plan, RandomSource::new(6)).unwrap();
        let mixed = apply_sensing(
            &DensityMatrix::maximally_mixed(4).unwrap().as_hermitian(),
            &plan,
        )
        .unwrap();
        let dist: f64 = data
            .count_table()
            .iter()
            .zip(mixed.transpose().iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let r = check_feasible(&data, 2.0 * dist, &SolverConfig::default()).unwrap();
        assert!(r.feasible);
        assert!(r.min_residual <= dist);
    }
}
