//! Choosing the data-fit radius ε: the plug-in multinomial noise estimate and
//! k-fold cross-validation of the prediction error.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{draw_settings, restrict_dataset, split_folds, Dataset};
use crate::error::{invalid, Result};
use crate::measurement::{born_probabilities, SettingsPlan};
use crate::rng::RandomSource;
use crate::solver::{reconstruct, SolverConfig};
use crate::state::DensityMatrix;

/// `ε̂ = Σ_j Σ_k y_{jk} (1 − y_{jk}/N_j)`, in squared counts.
pub fn epsilon_hat(data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    Ok(data
        .records()
        .iter()
        .map(|r| {
            let n = r.shots();
            r.counts.iter().map(|y| y * (1.0 - y / n)).sum::<f64>()
        })
        .sum())
}

/// `E‖N(ρ)‖² = Σ_j Σ_k N_j p_{jk} (1 − p_{jk})` with exact probabilities.
pub fn expected_noise(rho: &DensityMatrix, plan: &SettingsPlan) -> Result<f64> {
    if rho.dim() != plan.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match plan dimension {}",
            rho.dim(),
            plan.dim()
        )));
    }
    plan.words()
        .iter()
        .zip(plan.shots())
        .try_fold(0.0, |acc, (w, &n)| {
            let p = born_probabilities(rho, w)?;
            Ok(acc + n as f64 * p.iter().map(|x| x * (1.0 - x)).sum::<f64>())
        })
}

/// Held-out error of one training/testing split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// `‖A_test(ρ̂) − Y_test‖₂`, or `‖Y_test‖₂` when training was infeasible.
    pub error: f64,
    pub feasible: bool,
}

/// Reconstructs on `train` at `epsilon_train` and scores the estimate on `test`.
pub fn prediction_error(
    train: &Dataset,
    test: &Dataset,
    epsilon_train: f64,
    config: &SolverConfig,
) -> Result<Prediction> {
    if train.n_qubits() != test.n_qubits() {
        return Err(invalid(
            "training and testing data have different qubit counts",
        ));
    }
    let train_words: HashSet<_> = train.records().iter().map(|r| &r.word).collect();
    if let Some(r) = test
        .records()
        .iter()
        .find(|r| train_words.contains(&r.word))
    {
        return Err(invalid(format!(
            "setting {} appears in both training and testing data",
            r.word
        )));
    }
    let result = reconstruct(train, epsilon_train, config)?;
    if !result.is_feasible() {
        return Ok(Prediction {
            error: test.squared_norm().sqrt(),
            feasible: false,
        });
    }
    Ok(Prediction {
        error: test_error(&result.estimate, test)?,
        feasible: true,
    })
}

/// `‖A_test(ρ) − Y_test‖₂`.
pub fn test_error(rho: &DensityMatrix, test: &Dataset) -> Result<f64> {
    let mut total = 0.0;
    for r in test.records() {
        let p = born_probabilities(rho, &r.word)?;
        let n = r.shots();
        total += r
            .counts
            .iter()
            .zip(&p)
            .map(|(y, p)| (n * p - y).powi(2))
            .sum::<f64>();
    }
    Ok(total.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValCell {
    pub m: usize,
    pub epsilon_multiplier: f64,
    /// Mean of the fold errors over all repetitions and folds.
    pub mean_error: f64,
    /// Sample standard deviation of the fold errors.
    pub std_error: f64,
    pub infeasible_fraction: f64,
    /// Mean of `sqrt(ε̂)` over the testing folds: the error floor set by
    /// counting noise in the held-out data itself.
    pub noise_floor: f64,
    /// Fold evaluations that failed with an error and were left out.
    pub failures: usize,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValReport {
    pub grid: Vec<CrossValCell>,
    pub folds: usize,
    pub repetitions: usize,
}

impl CrossValReport {
    pub fn cell(&self, m: usize, multiplier: f64) -> Option<&CrossValCell> {
        self.grid
            .iter()
            .find(|c| c.m == m && c.epsilon_multiplier == multiplier)
    }

    /// Multiplier with the smallest mean error at `m`.
    pub fn argmin_multiplier(&self, m: usize) -> Option<f64> {
        self.grid
            .iter()
            .filter(|c| c.m == m && c.mean_error.is_finite())
            .min_by(|a, b| a.mean_error.total_cmp(&b.mean_error))
            .map(|c| c.epsilon_multiplier)
    }

    /// Long-format CSV: `m,epsilon_multiplier,mean_error,std_error,infeasible_fraction,noise_floor,failures,status`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "m,epsilon_multiplier,mean_error,std_error,infeasible_fraction,noise_floor,failures,status")?;
        for c in &self.grid {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.m,
                c.epsilon_multiplier,
                c.mean_error,
                c.std_error,
                c.infeasible_fraction,
                c.noise_floor,
                c.failures,
                c.status
            )?;
        }
        Ok(())
    }
}

/// Settings of a cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValConfig {
    pub m_values: Vec<usize>,
    pub epsilon_multipliers: Vec<f64>,
    pub folds: usize,
    pub repetitions: usize,
}

impl Default for CrossValConfig {
    fn default() -> Self {
        Self {
            m_values: vec![10, 15, 20, 40, 60, 80],
            epsilon_multipliers: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0],
            folds: 5,
            repetitions: 50,
        }
    }
}

struct FoldOutcome {
    cell: usize,
    result: Result<Prediction>,
    noise_floor: f64,
}

/// Fivefold-style cross-validation over an `(m, ε-multiplier)` grid.
///
/// For every `m` and repetition, `m` settings are drawn without replacement
/// and split into folds; every multiplier is then evaluated on that same draw.
/// Each held-out fold is scored after training on the union of the other
/// folds at `multiplier · ε̂(training records)`. Random substreams are keyed by
/// `(m index, repetition)`, so the report does not depend on scheduling.
pub fn cross_validate(
    data: &Dataset,
    cv: &CrossValConfig,
    source: RandomSource,
    solver: &SolverConfig,
) -> Result<CrossValReport> {
    if cv.repetitions == 0 {
        return Err(invalid("repetitions must be at least 1"));
    }
    if cv.folds < 2 {
        return Err(invalid("need at least two folds"));
    }
    if cv.epsilon_multipliers.is_empty() || cv.m_values.is_empty() {
        return Err(invalid("empty cross-validation grid"));
    }
    if let Some(&bad) = cv.epsilon_multipliers.iter().find(|&&x| !(x > 0.0)) {
        return Err(invalid(format!(
            "epsilon multiplier {bad} must be positive"
        )));
    }
    for &m in &cv.m_values {
        if m < cv.folds || m > data.len() {
            return Err(invalid(format!(
                "m = {m} must lie in [{}, {}]",
                cv.folds,
                data.len()
            )));
        }
    }
    let all_words = data.words();
    let n_mult = cv.epsilon_multipliers.len();

    let draws: Vec<(usize, usize)> = (0..cv.m_values.len())
        .flat_map(|mi| (0..cv.repetitions).map(move |rep| (mi, rep)))
        .collect();

    let outcomes: Vec<FoldOutcome> = draws
        .par_iter()
        .flat_map_iter(|&(mi, rep)| {
            let m = cv.m_values[mi];
            let stream = source.substream_path(&[mi as u64, rep as u64]);
            let folds = draw_settings(&all_words, m, stream.substream(0))
                .and_then(|words| restrict_dataset(data, &words))
                .and_then(|subset| split_folds(&subset, cv.folds, stream.substream(1)));
            let mut out = Vec::with_capacity(cv.folds * n_mult);
            match folds {
                Err(e) => {
                    let msg = e.to_string();
                    for ei in 0..n_mult {
                        out.push(FoldOutcome {
                            cell: mi * n_mult + ei,
                            result: Err(invalid(msg.clone())),
                            noise_floor: f64::NAN,
                        });
                    }
                }
                Ok(folds) => {
                    for q in 0..folds.len() {
                        let test = &folds[q];
                        let train = folds
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != q)
                            .try_fold(None::<Dataset>, |acc, (_, f)| match acc {
                                None => Ok(Some(f.clone())),
                                Some(a) => a.concat(f).map(Some),
                            })
                            .map(|t| t.expect("at least one training fold"));
                        let noise_floor = epsilon_hat(test).map(f64::sqrt).unwrap_or(f64::NAN);
                        for (ei, &mult) in cv.epsilon_multipliers.iter().enumerate() {
                            let result = match &train {
                                Ok(train) => epsilon_hat(train).and_then(|eps| {
                                    prediction_error(train, test, mult * eps, solver)
                                }),
                                Err(e) => Err(invalid(e.to_string())),
                            };
                            out.push(FoldOutcome {
                                cell: mi * n_mult + ei,
                                result,
                                noise_floor,
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut grid = Vec::with_capacity(cv.m_values.len() * n_mult);
    for (mi, &m) in cv.m_values.iter().enumerate() {
        for (ei, &mult) in cv.epsilon_multipliers.iter().enumerate() {
            let cell = mi * n_mult + ei;
            let mine: Vec<&FoldOutcome> = outcomes.iter().filter(|o| o.cell == cell).collect();
            let ok: Vec<Prediction> = mine
                .iter()
                .filter_map(|o| o.result.as_ref().ok().copied())
                .collect();
            let failures = mine.len() - ok.len();
            let errors: Vec<f64> = ok.iter().map(|p| p.error).collect();
            let (mean_error, std_error) = mean_std(&errors);
            let infeasible = ok.iter().filter(|p| !p.feasible).count();
            let floors: Vec<f64> = mine
                .iter()
                .map(|o| o.noise_floor)
                .filter(|x| x.is_finite())
                .collect();
            let status = match (ok.is_empty(), failures) {
                (true, _) => {
                    let first = mine
                        .iter()
                        .find_map(|o| o.result.as_ref().err())
                        .map(|e| e.to_string());
                    format!("failed: {}", first.unwrap_or_default())
                }
                (false, 0) => "ok".to_string(),
                (false, n) => format!("partial: {n} failed"),
            };
            grid.push(CrossValCell {
                m,
                epsilon_multiplier: mult,
                mean_error: if ok.is_empty() { 0.0 } else { mean_error },
                std_error: if ok.is_empty() { 0.0 } else { std_error },
                infeasible_fraction: if ok.is_empty() {
                    0.0
                } else {
                    infeasible as f64 / ok.len() as f64
                },
                noise_floor: mean_std(&floors).0,
                failures,
                status,
            });
        }
    }
    Ok(CrossValReport {
        grid,
        folds: cv.folds,
        repetitions: cv.repetitions,
    })
}

/// Mean and sample standard deviation; `(0, 0)` for an empty slice and a
/// zero deviation for a single value.
pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
