//! Direct fidelity estimation with respect to a pure target state.
//!
//! A state has Pauli coefficients `ξ_l = tr(ρ O_l)/√d`. For a pure target,
//! `F² = ⟨ψ|ρ|ψ⟩ = Σ_l ξ_T^l ξ_ρ^l`. Each coefficient is linear in the outcome
//! frequencies of any setting covering its label, so `F²` is a linear function
//! of the frequencies and its variance follows from the multinomial covariance
//! `Cov(p̂_{jk}, p̂_{jl}) = (p̂_{jk} δ_{kl} − p̂_{jk} p̂_{jl}) / N_j`, with
//! independent settings.
//!
//! When several settings cover a label, their estimates are combined with
//! inverse-variance weights. Under the multinomial model each estimate has
//! variance `(1 − ⟨O_l⟩²)/(d N_j)`, and the numerator is common to all
//! settings, so the weights reduce to `N_j / Σ N` and the combination stays
//! exactly unbiased.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{invalid, Result, TomoError};
use crate::measurement::enumerate_settings;
use crate::pauli::{PauliLabel, PauliWord};
use crate::state::{ghz_state, DensityMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliCoefficients {
    pub n_qubits: usize,
    pub terms: BTreeMap<PauliLabel, f64>,
}

impl PauliCoefficients {
    pub fn get(&self, label: &PauliLabel) -> f64 {
        self.terms.get(label).copied().unwrap_or(0.0)
    }

    /// Labels with `|ξ| > threshold`.
    pub fn nonzero(&self, threshold: f64) -> Vec<(&PauliLabel, f64)> {
        self.terms
            .iter()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(l, v)| (l, *v))
            .collect()
    }

    /// Exact coefficients `tr(ρ O_l)/√d` of a state over all `4ⁿ` labels.
    pub fn of_state(rho: &DensityMatrix) -> Self {
        let n = rho.n_qubits();
        let basis = crate::pauli::PauliBasis::new(n);
        let coeffs = basis.coefficients(rho.matrix());
        Self {
            n_qubits: n,
            terms: coeffs
                .into_iter()
                .enumerate()
                .map(|(i, c)| (PauliLabel::from_index(i, n), c))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    #[serde(rename = "f2")]
    pub f_squared: f64,
    pub f: f64,
    #[serde(rename = "std_f2")]
    pub std_f_squared: f64,
    #[serde(rename = "settings")]
    pub settings_used: Vec<PauliWord>,
}

/// The `2ⁿ` labels diagonal in `word`'s eigenbasis: every way of replacing
/// letters with `I`, in mask order (`I…I` first, the word itself last).
pub fn estimable_labels(word: &PauliWord) -> Vec<PauliLabel> {
    crate::measurement::covered_labels(word)
}

#[inline]
fn outcome_sign(mask: usize, k: usize) -> f64 {
    if (mask & k).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Per-setting frequencies and shots, the inputs of every estimator here.
struct Frequencies<'a> {
    words: Vec<&'a PauliWord>,
    shots: Vec<f64>,
    freqs: Vec<Vec<f64>>,
}

impl<'a> Frequencies<'a> {
    fn from_dataset(data: &'a Dataset) -> Self {
        let words = data.records().iter().map(|r| &r.word).collect();
        let shots: Vec<f64> = data.shots();
        let freqs = data
            .records()
            .iter()
            .zip(&shots)
            .map(|(r, n)| r.counts.iter().map(|y| y / n).collect())
            .collect();
        Self {
            words,
            shots,
            freqs,
        }
    }

    /// For each covered label: the `(setting, mask)` pairs that estimate it.
    fn coverage(&self) -> BTreeMap<PauliLabel, Vec<(usize, usize)>> {
        let mut map: BTreeMap<PauliLabel, Vec<(usize, usize)>> = BTreeMap::new();
        for (j, w) in self.words.iter().enumerate() {
            for mask in 0..w.dim() {
                map.entry(w.sublabel(mask)).or_default().push((j, mask));
            }
        }
        map
    }
}

/// Estimated Pauli coefficients of every label covered by the dataset.
pub fn pauli_coefficients(data: &Dataset) -> Result<PauliCoefficients> {
    if data.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    let f = Frequencies::from_dataset(data);
    let norm = 1.0 / (data.dim() as f64).sqrt();
    let terms = f
        .coverage()
        .into_iter()
        .map(|(label, sources)| {
            let total: f64 = sources.iter().map(|&(j, _)| f.shots[j]).sum();
            let xi: f64 = sources
                .iter()
                .map(|&(j, mask)| {
                    let single: f64 = f.freqs[j]
                        .iter()
                        .enumerate()
                        .map(|(k, p)| outcome_sign(mask, k) * p)
                        .sum();
                    f.shots[j] / total * single * norm
                })
                .sum();
            (label, xi)
        })
        .collect();
    Ok(PauliCoefficients {
        n_qubits: data.n_qubits(),
        terms,
    })
}

/// Exact Pauli decomposition of the four-qubit GHZ state.
pub fn ghz_pauli_decomposition(n: usize) -> Result<PauliCoefficients> {
    if n != 4 {
        return Err(TomoError::Unsupported(format!(
            "GHZ decomposition is provided for 4 qubits, not {n}"
        )));
    }
    let mut c = PauliCoefficients::of_state(&ghz_state(n)?);
    c.terms.retain(|_, v| v.abs() > 1e-12);
    Ok(c)
}

/// A small set of settings covering every non-identity label with nonzero
/// target coefficient: greedy set cover over all `3ⁿ` settings, ties broken
/// by the lexicographically smallest word.
pub fn required_settings(target: &PauliCoefficients) -> Result<Vec<PauliWord>> {
    if target.terms.is_empty() {
        return Err(invalid("target has no coefficients"));
    }
    let mut uncovered: BTreeSet<&PauliLabel> = target
        .terms
        .iter()
        .filter(|(l, v)| v.abs() > 1e-12 && !l.is_identity())
        .map(|(l, _)| l)
        .collect();
    let candidates = enumerate_settings(target.n_qubits)?;
    let mut chosen = Vec::new();
    while !uncovered.is_empty() {
        let (best, gain) = candidates
            .iter()
            .map(|w| (w, uncovered.iter().filter(|l| w.covers(l)).count()))
            .fold(
                (None, 0),
                |acc, (w, g)| if g > acc.1 { (Some(w), g) } else { acc },
            );
        let Some(best) = best.filter(|_| gain > 0) else {
            return Err(TomoError::Numerical(format!(
                "labels without a covering setting: {}",
                uncovered
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        };
        uncovered.retain(|l| !best.covers(l));
        chosen.push(best.clone());
    }
    Ok(chosen)
}

/// Which settings the estimator may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingSelection {
    /// Every setting in the dataset that covers a target label.
    #[default]
    All,
    /// Only the settings returned by [`required_settings`].
    Minimal,
}

/// `F² = Σ_l ξ_T^l ξ̂^l` with its linearly propagated standard deviation.
pub fn direct_fidelity(data: &Dataset, target: &PauliCoefficients) -> Result<FidelityEstimate> {
    direct_fidelity_with(data, target, SettingSelection::All)
}

pub fn direct_fidelity_with(
    data: &Dataset,
    target: &PauliCoefficients,
    selection: SettingSelection,
) -> Result<FidelityEstimate> {
    if data.is_empty() {
        return Err(invalid("dataset has no records"));
    }
    if target.n_qubits != data.n_qubits() {
        return Err(invalid("target and data have different qubit counts"));
    }
    let data = match selection {
        SettingSelection::All => data.clone(),
        SettingSelection::Minimal => {
            let needed = required_settings(target)?;
            let present: Vec<PauliWord> = data.words();
            let missing: Vec<String> = needed
                .iter()
                .filter(|w| !present.contains(w))
                .map(|w| w.to_string())
                .collect();
            if !missing.is_empty() {
                return Err(TomoError::MissingSettings(missing));
            }
            crate::data::restrict_dataset(data, &needed)?
        }
    };
    let f = Frequencies::from_dataset(&data);
    let coverage = f.coverage();
    let d = data.dim();
    let norm = 1.0 / (d as f64).sqrt();

    // F² = constant + Σ_{j,k} c_{jk} p̂_{jk}.
    let mut weights: Vec<Vec<f64>> = vec![vec![0.0; d]; f.words.len()];
    let mut constant = 0.0;
    let mut missing = Vec::new();
    let mut used: BTreeSet<usize> = BTreeSet::new();
    for (label, &xi_t) in &target.terms {
        if xi_t == 0.0 {
            continue;
        }
        if label.is_identity() {
            constant += xi_t * norm;
            continue;
        }
        let Some(sources) = coverage.get(label) else {
            missing.push(label.to_string());
            continue;
        };
        let total: f64 = sources.iter().map(|&(j, _)| f.shots[j]).sum();
        for &(j, mask) in sources {
            used.insert(j);
            let w = xi_t * f.shots[j] / total * norm;
            for (k, c) in weights[j].iter_mut().enumerate() {
                *c += w * outcome_sign(mask, k);
            }
        }
    }
    if !missing.is_empty() {
        return Err(TomoError::MissingSettings(missing));
    }

    let mut f_squared = constant;
    let mut variance = 0.0;
    for ((p, c), n) in f.freqs.iter().zip(&weights).zip(&f.shots) {
        let mean: f64 = c.iter().zip(p).map(|(c, p)| c * p).sum();
        let second: f64 = c.iter().zip(p).map(|(c, p)| c * c * p).sum();
        f_squared += mean;
        variance += ((second - mean * mean) / n).max(0.0);
    }
    Ok(FidelityEstimate {
        f_squared,
        f: f_squared.max(0.0).sqrt(),
        std_f_squared: variance.sqrt(),
        settings_used: used.into_iter().map(|j| f.words[j].clone()).collect(),
    })
}
