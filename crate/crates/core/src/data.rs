//! Count datasets: multinomial simulation, persistence, subselection and folds.

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Result, TomoError};
use crate::measurement::{born_probabilities, SensingOperator, SettingsPlan};
use crate::pauli::PauliWord;
use crate::rng::RandomSource;
use crate::state::DensityMatrix;

/// Counts observed for one measurement setting.
///
/// Sampled data is integral; expected-count tables (noiseless data) use the
/// same type with fractional entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub word: PauliWord,
    #[serde(serialize_with = "serialize_counts")]
    pub counts: Vec<f64>,
}

impl Record {
    /// `N_j`, the number of copies measured.
    pub fn shots(&self) -> f64 {
        self.counts.iter().sum()
    }
}

fn serialize_counts<S: Serializer>(counts: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(counts.len()))?;
    for &c in counts {
        if c.fract() == 0.0 && c.abs() < 9.0e15 {
            seq.serialize_element(&(c as i64))?;
        } else {
            seq.serialize_element(&c)?;
        }
    }
    seq.end()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetJson")]
pub struct Dataset {
    n_qubits: usize,
    records: Vec<Record>,
}

#[derive(Deserialize)]
struct DatasetJson {
    n_qubits: usize,
    records: Vec<Record>,
}

impl TryFrom<DatasetJson> for Dataset {
    type Error = TomoError;

    fn try_from(d: DatasetJson) -> Result<Self> {
        Dataset::new(d.n_qubits, d.records)
    }
}

impl Dataset {
    pub fn new(n_qubits: usize, records: Vec<Record>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(invalid("dataset needs at least one qubit"));
        }
        let d = 1usize << n_qubits;
        let mut seen = HashSet::new();
        for r in &records {
            if r.word.n_qubits() != n_qubits {
                return Err(invalid(format!(
                    "word {} does not have {n_qubits} qubits",
                    r.word
                )));
            }
            if !seen.insert(&r.word) {
                return Err(invalid(format!("duplicate record for {}", r.word)));
            }
            if r.counts.len() != d {
                return Err(invalid(format!(
                    "record {} has {} counts, expected {d}",
                    r.word,
                    r.counts.len()
                )));
            }
            if r.counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
                return Err(invalid(format!(
                    "record {} has negative or non-finite counts",
                    r.word
                )));
            }
            if r.shots() < 1.0 {
                return Err(invalid(format!(
                    "record {} has fewer than one count",
                    r.word
                )));
            }
        }
        Ok(Self { n_qubits, records })
    }

    /// Noiseless data: every count equals its expectation `N_j · p_k`.
    pub fn expected(rho: &DensityMatrix, plan: &SettingsPlan) -> Result<Self> {
        let records = plan
            .words()
            .iter()
            .zip(plan.shots())
            .map(|(w, &n)| {
                let p = born_probabilities(rho, w)?;
                Ok(Record {
                    word: w.clone(),
                    counts: p.iter().map(|x| x * n as f64).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(plan.n_qubits(), records)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn words(&self) -> Vec<PauliWord> {
        self.records.iter().map(|r| r.word.clone()).collect()
    }

    pub fn shots(&self) -> Vec<f64> {
        self.records.iter().map(Record::shots).collect()
    }

    /// Row-major `m×d` count table.
    pub fn count_table(&self) -> Vec<f64> {
        self.records
            .iter()
            .flat_map(|r| r.counts.iter().copied())
            .collect()
    }

    /// Squared two-norm of all counts.
    pub fn squared_norm(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| &r.counts)
            .map(|c| c * c)
            .sum()
    }

    /// The sensing operator matching this dataset's settings and shot counts.
    pub fn operator(&self) -> SensingOperator {
        SensingOperator::new(
            self.n_qubits,
            self.records
                .iter()
                .map(|r| (r.word.clone(), r.shots()))
                .collect(),
        )
    }

    /// A settings plan with this dataset's words and (rounded) shot counts.
    pub fn plan(&self) -> Result<SettingsPlan> {
        SettingsPlan::new(
            self.words(),
            self.records
                .iter()
                .map(|r| r.shots().round().max(1.0) as u64)
                .collect(),
        )
    }

    /// Concatenates two datasets with disjoint words.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.n_qubits != other.n_qubits {
            return Err(invalid(
                "cannot concatenate datasets of different qubit counts",
            ));
        }
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Dataset::new(self.n_qubits, records)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// CSV with header `word,outcome,count`, one row per (word, outcome).
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "word,outcome,count")?;
        for r in &self.records {
            for (k, &c) in r.counts.iter().enumerate() {
                if c.fract() == 0.0 {
                    writeln!(out, "{},{},{}", r.word, k, c as i64)?;
                } else {
                    writeln!(out, "{},{},{}", r.word, k, c)?;
                }
            }
        }
        Ok(())
    }
}

/// Draws `n` outcomes from `Multinomial(n, p)` by sequential binomial conditioning.
pub fn sample_multinomial<R: Rng + ?Sized>(rng: &mut R, n: u64, p: &[f64]) -> Vec<u64> {
    let mut out = vec![0u64; p.len()];
    let mut remaining = n;
    let mut mass = 1.0f64;
    let last = p.len() - 1;
    for (k, &pk) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            out[k] = remaining;
            break;
        }
        let q = if mass > 0.0 {
            (pk / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = if q <= 0.0 {
            0
        } else if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("valid binomial")
                .sample(rng)
        };
        out[k] = x;
        remaining -= x;
        mass -= pk;
    }
    out
}

/// Simulates one multinomial count vector per setting.
pub fn sample_counts(
    rho: &DensityMatrix,
    plan: &SettingsPlan,
    source: RandomSource,
) -> Result<Dataset> {
    if rho.dim() != plan.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match plan dimension {}",
            rho.dim(),
            plan.dim()
        )));
    }
    let mut rng = source.rng();
    let records = plan
        .words()
        .iter()
        .zip(plan.shots())
        .map(|(w, &n)| {
            let p = born_probabilities(rho, w)?;
            let counts = sample_multinomial(&mut rng, n, &p)
                .into_iter()
                .map(|c| c as f64)
                .collect();
            Ok(Record {
                word: w.clone(),
                counts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(plan.n_qubits(), records)
}

/// A uniformly random `m`-subset of `all_words`, in random order.
pub fn draw_settings(
    all_words: &[PauliWord],
    m: usize,
    source: RandomSource,
) -> Result<Vec<PauliWord>> {
    if m == 0 || m > all_words.len() {
        return Err(invalid(format!(
            "cannot draw {m} settings out of {}",
            all_words.len()
        )));
    }
    let mut pool = all_words.to_vec();
    let mut rng = source.rng();
    let (chosen, _) = pool.partial_shuffle(&mut rng, m);
    Ok(chosen.to_vec())
}

/// Keeps the records for `words`, in the requested order.
pub fn restrict_dataset(data: &Dataset, words: &[PauliWord]) -> Result<Dataset> {
    let index: HashMap<&PauliWord, &Record> = data.records.iter().map(|r| (&r.word, r)).collect();
    let records = words
        .iter()
        .map(|w| {
            index
                .get(w)
                .map(|r| (*r).clone())
                .ok_or_else(|| TomoError::NotFound(w.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(data.n_qubits, records)
}

/// Random partition of the records into `folds` datasets whose sizes differ
/// by at most one; the larger folds come first.
pub fn split_folds(data: &Dataset, folds: usize, source: RandomSource) -> Result<Vec<Dataset>> {
    if folds < 2 {
        return Err(invalid("need at least two folds"));
    }
    if folds > data.len() {
        return Err(invalid(format!(
            "{folds} folds but only {} records",
            data.len()
        )));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut source.rng());
    let base = data.len() / folds;
    let extra = data.len() % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for q in 0..folds {
        let size = base + usize::from(q < extra);
        let records = order[start..start + size]
            .iter()
            .map(|&i| data.records[i].clone())
            .collect();
        out.push(Dataset::new(data.n_qubits, records)?);
        start += size;
    }
    Ok(out)
}
