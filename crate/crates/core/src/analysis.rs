//! Batch experiments: parametric bootstrap, the settings-count sweep and the
//! `(m, ε)` grid study.
//!
//! Every task draws from its own substream of the caller's [`RandomSource`],
//! keyed by cell and repetition index, and results are gathered by index, so
//! reports are identical for any thread count.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{draw_settings, restrict_dataset, sample_counts, Dataset};
use crate::error::{invalid, Result};
use crate::measurement::SettingsPlan;
use crate::pauli::PauliWord;
use crate::rng::RandomSource;
use crate::selection::{epsilon_hat, mean_std};
use crate::solver::{reconstruct, SolverConfig};
use crate::state::{dephased_ghz, fidelity, DensityMatrix};

/// Dephasing of the surrogate experimental state: `1 − √0.2`, which gives
/// purity `1/2 + (1−λ)²/2 = 0.60` and GHZ fidelity `√((2−λ)/2) ≈ 0.851`.
pub const SURROGATE_DEPHASING: f64 = 0.552_786_404_500_042;

/// Partially dephased GHZ state standing in for an experimental source.
pub fn surrogate_state(n: usize) -> Result<DensityMatrix> {
    dephased_ghz(n, SURROGATE_DEPHASING)
}

/// How the data-fit radius is chosen for a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonRule {
    /// `ε̂` of the dataset.
    EpsilonHat,
    /// A multiple of `ε̂`.
    Multiple(f64),
    /// A fixed value in squared counts.
    Fixed(f64),
}

impl EpsilonRule {
    pub fn epsilon(&self, data: &Dataset) -> Result<f64> {
        match *self {
            EpsilonRule::EpsilonHat => epsilon_hat(data),
            EpsilonRule::Multiple(m) => Ok(m * epsilon_hat(data)?),
            EpsilonRule::Fixed(e) => Ok(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub repetitions: usize,
    pub fidelity_mean: f64,
    pub fidelity_std: f64,
    pub target_label: String,
    /// Repetitions whose reconstruction was infeasible (scored as fidelity 0).
    pub infeasible: usize,
}

/// Parametric bootstrap of the reconstruction fidelity.
///
/// Each repetition simulates a dataset from `estimate` under `plan`,
/// reconstructs it at the radius given by `rule` and scores the result
/// against `target`.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_fidelity(
    estimate: &DensityMatrix,
    plan: &SettingsPlan,
    target: &DensityMatrix,
    target_label: &str,
    rule: EpsilonRule,
    repetitions: usize,
    source: RandomSource,
    config: &SolverConfig,
) -> Result<BootstrapReport> {
    if repetitions < 2 {
        return Err(invalid("bootstrap needs at least two repetitions"));
    }
    let outcomes: Vec<Result<(f64, bool)>> = (0..repetitions)
        .into_par_iter()
        .map(|rep| {
            let data = sample_counts(estimate, plan, source.substream(rep as u64))?;
            let eps = rule.epsilon(&data)?;
            let result = reconstruct(&data, eps, config)
                .map_err(|e| invalid(format!("bootstrap repetition {rep}: {e}")))?;
            if !result.is_feasible() {
                return Ok((0.0, false));
            }
            Ok((fidelity(&result.estimate, target)?, true))
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let (fidelity_mean, fidelity_std) = mean_std(&values);
    Ok(BootstrapReport {
        repetitions,
        fidelity_mean,
        fidelity_std,
        target_label: target_label.to_string(),
        infeasible: outcomes.iter().filter(|o| !o.1).count(),
    })
}

/// One `(m, ε-multiplier)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub m: usize,
    pub epsilon_multiplier: f64,
    pub fidelity_mean: f64,
    /// Standard deviation over draws (and, for grid sweeps, simulated datasets).
    pub fidelity_std: f64,
    pub infeasible_fraction: f64,
    /// Parametric-bootstrap standard deviation, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_std: Option<f64>,
    pub samples: usize,
    pub failures: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub cells: Vec<SweepCell>,
    /// Fidelity of the complete-data reconstruction with the target
    /// (settings sweep), or 1 for grid sweeps scored against their generator.
    pub reference_fidelity: f64,
}

impl SweepReport {
    pub fn cell(&self, m: usize, multiplier: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.m == m && c.epsilon_multiplier == multiplier)
    }

    /// CSV with columns
    /// `m,epsilon_multiplier,fidelity_mean,fidelity_std,infeasible_fraction,bootstrap_std,samples,failures,status`;
    /// `bootstrap_std` is empty when not computed.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "m,epsilon_multiplier,fidelity_mean,fidelity_std,infeasible_fraction,bootstrap_std,samples,failures,status"
        )?;
        for c in &self.cells {
            let boot = c.bootstrap_std.map(|b| b.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                c.m,
                c.epsilon_multiplier,
                c.fidelity_mean,
                c.fidelity_std,
                c.infeasible_fraction,
                boot,
                c.samples,
                c.failures,
                c.status
            )?;
        }
        Ok(())
    }
}

/// Outcome of one reconstruction inside a sweep: fidelity (0 when infeasible)
/// and feasibility, or an error message.
type Trial = std::result::Result<(f64, bool), String>;

fn score(data: &Dataset, multiplier: f64, target: &DensityMatrix, config: &SolverConfig) -> Trial {
    let run = || -> Result<(f64, bool)> {
        let eps = multiplier * epsilon_hat(data)?;
        let result = reconstruct(data, eps, config)?;
        if !result.is_feasible() {
            return Ok((0.0, false));
        }
        Ok((fidelity(&result.estimate, target)?, true))
    };
    run().map_err(|e| e.to_string())
}

fn summarize(m: usize, multiplier: f64, trials: &[&Trial]) -> SweepCell {
    let ok: Vec<(f64, bool)> = trials
        .iter()
        .filter_map(|t| t.as_ref().ok().copied())
        .collect();
    let failures = trials.len() - ok.len();
    let values: Vec<f64> = ok.iter().map(|o| o.0).collect();
    let (mean, std) = mean_std(&values);
    let status = if ok.is_empty() {
        let first = trials
            .iter()
            .find_map(|t| t.as_ref().err())
            .cloned()
            .unwrap_or_default();
        format!("failed: {first}")
    } else if failures > 0 {
        format!("partial: {failures} failed")
    } else {
        "ok".to_string()
    };
    SweepCell {
        m,
        epsilon_multiplier: multiplier,
        fidelity_mean: mean,
        fidelity_std: std,
        infeasible_fraction: if ok.is_empty() {
            0.0
        } else {
            ok.iter().filter(|o| !o.1).count() as f64 / ok.len() as f64
        },
        bootstrap_std: None,
        samples: ok.len(),
        failures,
        status,
    }
}

/// Draws `m` settings and restricts `data` to them, keeping the dataset's
/// own record order so that a full draw reproduces the dataset exactly.
fn draw_subset(
    data: &Dataset,
    all: &[PauliWord],
    m: usize,
    source: RandomSource,
) -> Result<Dataset> {
    let mut words = draw_settings(all, m, source)?;
    words.sort_by_key(|w| all.iter().position(|a| a == w));
    restrict_dataset(data, &words)
}

fn check_m_values(m_values: &[usize], max: usize) -> Result<()> {
    if m_values.is_empty() {
        return Err(invalid("no m values given"));
    }
    if let Some(&bad) = m_values.iter().find(|&&m| m == 0 || m > max) {
        return Err(invalid(format!("m = {bad} outside [1, {max}]")));
    }
    Ok(())
}

/// Options of [`sweep_settings`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub draws_per_m: usize,
    /// Parametric-bootstrap repetitions per `m` for the `bootstrap_std`
    /// column; 0 disables it.
    pub bootstrap_repetitions: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            draws_per_m: 50,
            bootstrap_repetitions: 0,
        }
    }
}

/// Fidelity with `target` as a function of the number of settings, at
/// `ε = ε̂` of each restricted dataset.
///
/// For each `m`, `draws_per_m` random subsets are drawn from `data`. With
/// bootstrapping enabled, each repetition also simulates a fresh complete
/// dataset from the complete-data estimate, draws `m` settings from it and
/// reconstructs; the spread of those fidelities is the `bootstrap_std` column.
pub fn sweep_settings(
    data: &Dataset,
    m_values: &[usize],
    target: &DensityMatrix,
    options: SweepOptions,
    source: RandomSource,
    config: &SolverConfig,
) -> Result<SweepReport> {
    if options.draws_per_m == 0 {
        return Err(invalid("draws_per_m must be at least 1"));
    }
    check_m_values(m_values, data.len())?;
    let all = data.words();
    let reference = reconstruct(data, epsilon_hat(data)?, config)?;
    let reference_fidelity = fidelity(&reference.estimate, target)?;

    let draw_source = source.substream(0);
    let tasks: Vec<(usize, usize)> = (0..m_values.len())
        .flat_map(|mi| (0..options.draws_per_m).map(move |r| (mi, r)))
        .collect();
    let trials: Vec<Trial> = tasks
        .par_iter()
        .map(|&(mi, rep)| {
            draw_subset(
                data,
                &all,
                m_values[mi],
                draw_source.substream_path(&[mi as u64, rep as u64]),
            )
            .map_err(|e| e.to_string())
            .and_then(|subset| score(&subset, 1.0, target, config))
        })
        .collect();

    let boot_trials: Vec<Trial> = if options.bootstrap_repetitions > 0 {
        let plan = data.plan()?;
        let boot_source = source.substream(1);
        let boot_tasks: Vec<(usize, usize)> = (0..m_values.len())
            .flat_map(|mi| (0..options.bootstrap_repetitions).map(move |r| (mi, r)))
            .collect();
        boot_tasks
            .par_iter()
            .map(|&(mi, rep)| {
                let stream = boot_source.substream_path(&[mi as u64, rep as u64]);
                sample_counts(&reference.estimate, &plan, stream.substream(0))
                    .and_then(|sim| draw_subset(&sim, &all, m_values[mi], stream.substream(1)))
                    .map_err(|e| e.to_string())
                    .and_then(|subset| score(&subset, 1.0, target, config))
            })
            .collect()
    } else {
        Vec::new()
    };

    let cells = m_values
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let mine: Vec<&Trial> = trials
                [mi * options.draws_per_m..(mi + 1) * options.draws_per_m]
                .iter()
                .collect();
            let mut cell = summarize(m, 1.0, &mine);
            if options.bootstrap_repetitions > 0 {
                let b = options.bootstrap_repetitions;
                let values: Vec<f64> = boot_trials[mi * b..(mi + 1) * b]
                    .iter()
                    .filter_map(|t| t.as_ref().ok().map(|o| o.0))
                    .collect();
                cell.bootstrap_std = Some(mean_std(&values).1);
            }
            cell
        })
        .collect();
    Ok(SweepReport {
        cells,
        reference_fidelity,
    })
}

/// Fidelity with the generating state over an `(m, ε-multiplier)` grid.
///
/// Each repetition simulates a complete dataset from `generator`, draws `m`
/// settings and reconstructs at every multiplier of that subset's `ε̂`;
/// infeasible reconstructions score fidelity 0.
pub fn sweep_grid(
    generator: &DensityMatrix,
    plan_full: &SettingsPlan,
    m_values: &[usize],
    epsilon_multipliers: &[f64],
    repetitions: usize,
    source: RandomSource,
    config: &SolverConfig,
) -> Result<SweepReport> {
    if repetitions == 0 {
        return Err(invalid("repetitions must be at least 1"));
    }
    if epsilon_multipliers.is_empty() {
        return Err(invalid("no epsilon multipliers given"));
    }
    if let Some(&bad) = epsilon_multipliers.iter().find(|&&x| !(x > 0.0)) {
        return Err(invalid(format!(
            "epsilon multiplier {bad} must be positive"
        )));
    }
    check_m_values(m_values, plan_full.len())?;
    let all = plan_full.words().to_vec();
    let n_mult = epsilon_multipliers.len();
    let tasks: Vec<(usize, usize)> = (0..m_values.len())
        .flat_map(|mi| (0..repetitions).map(move |r| (mi, r)))
        .collect();

    // One simulated subset per (m, repetition), reused across multipliers.
    let trials: Vec<Vec<Trial>> = tasks
        .par_iter()
        .map(|&(mi, rep)| {
            let stream = source.substream_path(&[mi as u64, rep as u64]);
            let subset = sample_counts(generator, plan_full, stream.substream(0))
                .and_then(|sim| draw_subset(&sim, &all, m_values[mi], stream.substream(1)));
            match subset {
                Ok(subset) => epsilon_multipliers
                    .iter()
                    .map(|&e| score(&subset, e, generator, config))
                    .collect(),
                Err(e) => vec![Err(e.to_string()); n_mult],
            }
        })
        .collect();

    let mut cells = Vec::with_capacity(m_values.len() * n_mult);
    for (mi, &m) in m_values.iter().enumerate() {
        for (ei, &mult) in epsilon_multipliers.iter().enumerate() {
            let mine: Vec<&Trial> = trials[mi * repetitions..(mi + 1) * repetitions]
                .iter()
                .map(|t| &t[ei])
                .collect();
            cells.push(summarize(m, mult, &mine));
        }
    }
    Ok(SweepReport {
        cells,
        reference_fidelity: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::purity;
    use approx::assert_abs_diff_eq;

    #[test]
    fn surrogate_matches_calibration() {
        let s = surrogate_state(4).unwrap();
        assert_abs_diff_eq!(purity(&s), 0.60, epsilon = 1e-12);
        let f = fidelity(&s, &crate::state::ghz_state(4).unwrap()).unwrap();
        assert!((f - 0.855).abs() < 0.005, "{f}");
        assert_abs_diff_eq!(SURROGATE_DEPHASING, 1.0 - 0.2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn argument_validation() {
        let g = surrogate_state(2).unwrap();
        let plan = SettingsPlan::complete(2, 100).unwrap();
        let cfg = SolverConfig::default();
        let src = RandomSource::new(1);
        assert!(
            bootstrap_fidelity(&g, &plan, &g, "x", EpsilonRule::EpsilonHat, 1, src, &cfg).is_err()
        );
        assert!(sweep_grid(&g, &plan, &[10], &[1.0], 1, src, &cfg).is_err());
        assert!(sweep_grid(&g, &plan, &[3], &[], 1, src, &cfg).is_err());
        assert!(sweep_grid(&g, &plan, &[3], &[1.0], 0, src, &cfg).is_err());
    }
}
