//! Pauli measurement settings, their eigenprojectors, Born probabilities and
//! the linear sensing map from states to expected count tables.
//!
//! Outcome `k` of a setting enumerates eigenvalue sign patterns with `+ ↦ 0`
//! and `− ↦ 1`, first qubit most significant. Single-qubit eigenvectors are
//! `Z: |0⟩, |1⟩`, `X: (|0⟩ ± |1⟩)/√2`, `Y: (|0⟩ ± i|1⟩)/√2`.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, LazyLock, RwLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::CMatrix;
use crate::pauli::{walsh_hadamard, Pauli, PauliLabel, PauliWord};
use crate::state::{DensityMatrix, HermitianMatrix};

/// The `d` rank-1 eigenprojectors of one measurement setting.
#[derive(Clone, Debug)]
pub struct ProjectorSet {
    word: PauliWord,
    vectors: Vec<DVector<Complex64>>,
    projectors: Vec<CMatrix>,
}

impl ProjectorSet {
    pub fn word(&self) -> &PauliWord {
        &self.word
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }
}

fn single_qubit_vector(p: Pauli, minus: bool) -> [Complex64; 2] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let s = if minus { -1.0 } else { 1.0 };
    match p {
        Pauli::Z if !minus => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        Pauli::Z => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        Pauli::X => [Complex64::new(r, 0.0), Complex64::new(s * r, 0.0)],
        Pauli::Y => [Complex64::new(r, 0.0), Complex64::new(0.0, s * r)],
        Pauli::I => unreachable!("settings never contain identities"),
    }
}

fn build_projectors(word: &PauliWord) -> ProjectorSet {
    let n = word.n_qubits();
    let d = word.dim();
    let mut vectors = Vec::with_capacity(d);
    for k in 0..d {
        let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
        for (i, &p) in word.letters().iter().enumerate() {
            let minus = k >> (n - 1 - i) & 1 == 1;
            let [a, b] = single_qubit_vector(p, minus);
            v = v.kronecker(&DVector::from_vec(vec![a, b]));
        }
        vectors.push(v);
    }
    let projectors = vectors.iter().map(|v| v * v.adjoint()).collect();
    ProjectorSet {
        word: word.clone(),
        vectors,
        projectors,
    }
}

static PROJECTOR_CACHE: LazyLock<RwLock<HashMap<PauliWord, Arc<ProjectorSet>>>> =
    LazyLock::new(|| RwLock::new(HashMap::new()));

/// Eigenprojectors of a setting; computed once per word and shared.
pub fn eigenprojectors(word: &PauliWord) -> Arc<ProjectorSet> {
    if let Some(set) = PROJECTOR_CACHE
        .read()
        .expect("projector cache poisoned")
        .get(word)
    {
        return Arc::clone(set);
    }
    let built = Arc::new(build_projectors(word));
    let mut cache = PROJECTOR_CACHE.write().expect("projector cache poisoned");
    Arc::clone(cache.entry(word.clone()).or_insert(built))
}

/// Outcome probabilities `p_k = tr(Π_k ρ)`, clipped at zero and renormalized.
pub fn born_probabilities(rho: &DensityMatrix, word: &PauliWord) -> Result<Vec<f64>> {
    if rho.dim() != word.dim() {
        return Err(invalid(format!(
            "state dimension {} does not match word {word} (dimension {})",
            rho.dim(),
            word.dim()
        )));
    }
    let set = eigenprojectors(word);
    let m = rho.matrix();
    let mut p: Vec<f64> = set
        .vectors
        .iter()
        .map(|v| (v.adjoint() * m * v)[(0, 0)].re.max(0.0))
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// All `3ⁿ` settings in lexicographic order over `X < Y < Z`.
pub fn enumerate_settings(n: usize) -> Result<Vec<PauliWord>> {
    if n == 0 {
        return Err(invalid("qubit count must be at least 1"));
    }
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    Ok((0..3usize.pow(n as u32))
        .map(|mut idx| {
            let mut w = vec![Pauli::X; n];
            for slot in w.iter_mut().rev() {
                *slot = letters[idx % 3];
                idx /= 3;
            }
            PauliWord::new(w).expect("letters are valid")
        })
        .collect())
}

/// An ordered list of distinct settings with the number of copies measured in each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanJson")]
pub struct SettingsPlan {
    words: Vec<PauliWord>,
    shots: Vec<u64>,
}

#[derive(Deserialize)]
struct PlanJson {
    words: Vec<PauliWord>,
    shots: Vec<u64>,
}

impl TryFrom<PlanJson> for SettingsPlan {
    type Error = crate::error::TomoError;

    fn try_from(p: PlanJson) -> Result<Self> {
        SettingsPlan::new(p.words, p.shots)
    }
}

impl SettingsPlan {
    pub fn new(words: Vec<PauliWord>, shots: Vec<u64>) -> Result<Self> {
        if words.is_empty() {
            return Err(invalid("a settings plan needs at least one word"));
        }
        if words.len() != shots.len() {
            return Err(invalid(format!(
                "{} words but {} shot counts",
                words.len(),
                shots.len()
            )));
        }
        let n = words[0].n_qubits();
        let mut seen = HashSet::new();
        for w in &words {
            if w.n_qubits() != n {
                return Err(invalid(format!(
                    "word {w} has {} qubits, expected {n}",
                    w.n_qubits()
                )));
            }
            if !seen.insert(w) {
                return Err(invalid(format!("duplicate setting {w}")));
            }
        }
        if shots.contains(&0) {
            return Err(invalid("every setting needs at least one shot"));
        }
        Ok(Self { words, shots })
    }

    pub fn uniform(words: Vec<PauliWord>, shots: u64) -> Result<Self> {
        let n = words.len();
        Self::new(words, vec![shots; n])
    }

    /// All `3ⁿ` settings with `shots` copies each.
    pub fn complete(n: usize, shots: u64) -> Result<Self> {
        Self::uniform(enumerate_settings(n)?, shots)
    }

    pub fn words(&self) -> &[PauliWord] {
        &self.words
    }

    pub fn shots(&self) -> &[u64] {
        &self.shots
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn n_qubits(&self) -> usize {
        self.words[0].n_qubits()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn operator(&self) -> SensingOperator {
        SensingOperator::new(
            self.n_qubits(),
            self.words
                .iter()
                .cloned()
                .zip(self.shots.iter().map(|&n| n as f64))
                .collect(),
        )
    }
}

/// The sensing map `A` in Pauli-basis coordinates.
///
/// For a setting `j`, the `d` labels it covers are indexed by the masks of
/// [`PauliWord::sublabel`], and `tr(Π_k O_l) = (−1)^{popcount(mask & k)}`, so
/// the forward map of one setting is a Walsh–Hadamard transform of the
/// covered coordinates. Distinct covered labels of a setting give orthogonal
/// sign vectors, which makes `AᵀA` diagonal with entries `Σ_{j covers l} N_j²`.
#[derive(Clone, Debug)]
pub struct SensingOperator {
    n_qubits: usize,
    words: Vec<PauliWord>,
    shots: Vec<f64>,
    labels: Vec<Vec<usize>>,
    gram_diag: Vec<f64>,
}

impl SensingOperator {
    pub fn new(n_qubits: usize, settings: Vec<(PauliWord, f64)>) -> Self {
        let d = 1usize << n_qubits;
        let mut gram_diag = vec![0.0; d * d];
        let mut labels = Vec::with_capacity(settings.len());
        let mut words = Vec::with_capacity(settings.len());
        let mut shots = Vec::with_capacity(settings.len());
        for (word, n) in settings {
            let idx: Vec<usize> = (0..d).map(|mask| word.sublabel(mask).index()).collect();
            for &l in &idx {
                gram_diag[l] += n * n;
            }
            labels.push(idx);
            words.push(word);
            shots.push(n);
        }
        Self {
            n_qubits,
            words,
            shots,
            labels,
            gram_diag,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn n_settings(&self) -> usize {
        self.words.len()
    }

    pub fn words(&self) -> &[PauliWord] {
        &self.words
    }

    pub fn shots(&self) -> &[f64] {
        &self.shots
    }

    /// Diagonal of `AᵀA` in Pauli coordinates.
    pub fn gram_diagonal(&self) -> &[f64] {
        &self.gram_diag
    }

    /// Label indices covered by setting `j`, in mask order.
    pub fn covered_labels(&self, j: usize) -> &[usize] {
        &self.labels[j]
    }

    /// `A(ξ)` as a row-major `m×d` table.
    pub fn forward(&self, coeffs: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let norm = 1.0 / (d as f64).sqrt();
        let mut out = vec![0.0; self.words.len() * d];
        for (j, row) in out.chunks_exact_mut(d).enumerate() {
            for (slot, &l) in row.iter_mut().zip(&self.labels[j]) {
                *slot = coeffs[l];
            }
            walsh_hadamard(row);
            let s = self.shots[j] * norm;
            row.iter_mut().for_each(|x| *x *= s);
        }
        out
    }

    /// `Aᵀ(Y)` in Pauli coordinates for a row-major `m×d` table.
    pub fn adjoint(&self, data: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let norm = 1.0 / (d as f64).sqrt();
        let mut out = vec![0.0; d * d];
        let mut buf = vec![0.0; d];
        for (j, row) in data.chunks_exact(d).enumerate() {
            buf.copy_from_slice(row);
            walsh_hadamard(&mut buf);
            let s = self.shots[j] * norm;
            for (&l, &v) in self.labels[j].iter().zip(&buf) {
                out[l] += s * v;
            }
        }
        out
    }
}

fn check_plan_dim(dim: usize, plan: &SettingsPlan) -> Result<()> {
    if dim != plan.dim() {
        return Err(invalid(format!(
            "matrix dimension {dim} does not match plan dimension {}",
            plan.dim()
        )));
    }
    Ok(())
}

/// Expected count table: entry `(j, k) = N_j · tr(Π_k^{(j)} ρ)`.
pub fn apply_sensing(rho: &HermitianMatrix, plan: &SettingsPlan) -> Result<DMatrix<f64>> {
    check_plan_dim(rho.dim(), plan)?;
    let d = plan.dim();
    let m = rho.matrix();
    Ok(DMatrix::from_fn(plan.len(), d, |j, k| {
        let v = &eigenprojectors(&plan.words[j]).vectors[k];
        plan.shots[j] as f64 * (v.adjoint() * m * v)[(0, 0)].re
    }))
}

/// `Σ_{j,k} data[j][k] · N_j · Π_k^{(j)}`.
pub fn apply_sensing_adjoint(data: &DMatrix<f64>, plan: &SettingsPlan) -> Result<HermitianMatrix> {
    let d = plan.dim();
    if data.nrows() != plan.len() || data.ncols() != d {
        return Err(invalid(format!(
            "data shape {}x{} does not match plan shape {}x{d}",
            data.nrows(),
            data.ncols(),
            plan.len()
        )));
    }
    let mut out = CMatrix::zeros(d, d);
    for (j, word) in plan.words.iter().enumerate() {
        let set = eigenprojectors(word);
        let nj = plan.shots[j] as f64;
        for (k, p) in set.projectors.iter().enumerate() {
            let w = data[(j, k)] * nj;
            if w != 0.0 {
                out += p.scale(w);
            }
        }
    }
    Ok(HermitianMatrix::from_hermitian_part(&out))
}

/// Every full label diagonal in `word`'s eigenbasis, in mask order
/// (`I…I`, `I…IZ`-style, …, the word itself).
pub fn covered_labels(word: &PauliWord) -> Vec<PauliLabel> {
    (0..word.dim()).map(|mask| word.sublabel(mask)).collect()
}
