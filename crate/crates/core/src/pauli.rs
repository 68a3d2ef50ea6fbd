//! Pauli words (measurement settings), Pauli labels (operators including the
//! identity) and the orthonormal Pauli basis `O_l / √d` of Hermitian matrices.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result, TomoError};
use crate::linalg::CMatrix;

/// Single-qubit Pauli operator. The discriminant is the base-4 digit used in
/// label indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn from_digit(d: usize) -> Self {
        [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][d & 3]
    }
}

/// A measurement setting: a tensor product of X, Y, Z (no identities).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliWord(Vec<Pauli>);

impl PauliWord {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(invalid("Pauli word must have at least one letter"));
        }
        if letters.contains(&Pauli::I) {
            return Err(invalid(
                "measurement settings may not contain identity letters",
            ));
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.0.len()
    }

    /// The label obtained by keeping the letters selected by `mask` (bit
    /// `n−1−i` selects qubit `i`) and replacing the others with `I`.
    pub fn sublabel(&self, mask: usize) -> PauliLabel {
        let n = self.0.len();
        PauliLabel(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    if mask >> (n - 1 - i) & 1 == 1 {
                        p
                    } else {
                        Pauli::I
                    }
                })
                .collect(),
        )
    }

    /// Whether `label` is diagonal in this setting's eigenbasis.
    pub fn covers(&self, label: &PauliLabel) -> bool {
        label.0.len() == self.0.len()
            && label
                .0
                .iter()
                .zip(&self.0)
                .all(|(l, w)| *l == Pauli::I || l == w)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

impl FromStr for PauliWord {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| invalid(format!("bad Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

/// A Pauli operator over {I, X, Y, Z}^n.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliLabel(Vec<Pauli>);

impl PauliLabel {
    pub fn new(letters: Vec<Pauli>) -> Result<Self> {
        if letters.is_empty() {
            return Err(invalid("Pauli label must have at least one letter"));
        }
        Ok(Self(letters))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Self(
            (0..n)
                .map(|i| Pauli::from_digit(index >> (2 * (n - 1 - i))))
                .collect(),
        )
    }

    /// Base-4 index with the first qubit most significant.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &p| acc * 4 + p as usize)
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Dense `d×d` matrix of the operator.
    pub fn to_matrix(&self) -> CMatrix {
        let op = PauliOp::from_label(self);
        let d = 1usize << self.0.len();
        let mut m = CMatrix::zeros(d, d);
        for b in 0..d {
            m[(b ^ op.flip, b)] = op.phase(b);
        }
        m
    }
}

impl fmt::Display for PauliLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.as_char()))
    }
}

impl FromStr for PauliLabel {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        let letters = s
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| invalid(format!("bad Pauli letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(letters)
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(PauliWord);
string_serde!(PauliLabel);

/// A Pauli operator in the form `i^{#Y} X^flip Z^phase_mask`, acting on
/// computational basis states as `O|b⟩ = phase(b)·|b ⊕ flip⟩`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PauliOp {
    pub flip: usize,
    pub sign_mask: usize,
    pub global: Complex64,
}

impl PauliOp {
    pub fn from_label(label: &PauliLabel) -> Self {
        let n = label.0.len();
        let mut flip = 0;
        let mut sign_mask = 0;
        let mut n_y = 0;
        for (i, &p) in label.0.iter().enumerate() {
            let bit = 1 << (n - 1 - i);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        let global = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ][n_y % 4];
        Self {
            flip,
            sign_mask,
            global,
        }
    }

    #[inline]
    pub fn phase(&self, b: usize) -> Complex64 {
        if (b & self.sign_mask).count_ones().is_multiple_of(2) {
            self.global
        } else {
            -self.global
        }
    }
}

/// The orthonormal basis `{O_l/√d}` of `d×d` Hermitian matrices, indexed by
/// base-4 label index. Coordinates in this basis are `ξ_l = tr(M O_l)/√d`.
#[derive(Clone, Debug)]
pub struct PauliBasis {
    n_qubits: usize,
    ops: Vec<PauliOp>,
    /// `parity[b]` is 1.0 for even popcount, −1.0 for odd.
    parity: Vec<f64>,
}

impl PauliBasis {
    pub fn new(n_qubits: usize) -> Self {
        let ops = (0..1usize << (2 * n_qubits))
            .map(|l| PauliOp::from_label(&PauliLabel::from_index(l, n_qubits)))
            .collect();
        let parity = (0..1usize << n_qubits)
            .map(|b| if b.count_ones() % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        Self {
            n_qubits,
            ops,
            parity,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Coordinates `ξ_l = Re tr(M O_l)/√d` of a Hermitian matrix.
    pub fn coefficients(&self, m: &CMatrix) -> Vec<f64> {
        let d = self.dim();
        let norm = 1.0 / (d as f64).sqrt();
        self.ops
            .iter()
            .map(|op| {
                let mut acc = Complex64::new(0.0, 0.0);
                for b in 0..d {
                    acc += m[(b, b ^ op.flip)] * self.parity[b & op.sign_mask];
                }
                (acc * op.global).re * norm
            })
            .collect()
    }

    /// Inverse of [`coefficients`](Self::coefficients).
    pub fn matrix(&self, coeffs: &[f64]) -> CMatrix {
        let d = self.dim();
        let norm = 1.0 / (d as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for (op, &c) in self.ops.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            let g = op.global * (c * norm);
            for b in 0..d {
                m[(b ^ op.flip, b)] += g * self.parity[b & op.sign_mask];
            }
        }
        m
    }
}

/// In-place unnormalized Walsh–Hadamard transform:
/// `out[k] = Σ_m (−1)^{popcount(m & k)} in[m]`.
pub(crate) fn walsh_hadamard(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        a.kronecker(b)
    }

    fn single(p: Pauli) -> CMatrix {
        match p {
            Pauli::I => CMatrix::identity(2, 2),
            Pauli::X => {
                CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
            }
            Pauli::Y => {
                CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
            }
            Pauli::Z => {
                CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
            }
        }
    }

    #[test]
    fn label_matrix_matches_kronecker_products() {
        for n in 1..=3 {
            for l in 0..1usize << (2 * n) {
                let label = PauliLabel::from_index(l, n);
                assert_eq!(label.index(), l);
                let mut want = CMatrix::identity(1, 1);
                for &p in label.letters() {
                    want = kron(&want, &single(p));
                }
                assert!((label.to_matrix() - want).norm() < 1e-14, "{label}");
            }
        }
    }

    #[test]
    fn coefficient_round_trip() {
        let basis = PauliBasis::new(2);
        let coeffs: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let m = basis.matrix(&coeffs);
        let back = basis.coefficients(&m);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
        // Orthonormality: Frobenius norm equals the Euclidean norm of coordinates.
        let fro2: f64 = m.iter().map(|z| z.norm_sqr()).sum();
        let euc2: f64 = coeffs.iter().map(|x| x * x).sum();
        assert!((fro2 - euc2).abs() < 1e-12);
    }

    #[test]
    fn word_parsing() {
        let w: PauliWord = "ZZXY".parse().unwrap();
        assert_eq!(w.to_string(), "ZZXY");
        assert!("ZIZ".parse::<PauliWord>().is_err());
        assert!("".parse::<PauliWord>().is_err());
        assert!("ZQ".parse::<PauliWord>().is_err());
        assert_eq!(serde_json::to_string(&w).unwrap(), "\"ZZXY\"");
    }

    #[test]
    fn sublabels_follow_mask_order() {
        let w: PauliWord = "XYZ".parse().unwrap();
        assert_eq!(w.sublabel(0).to_string(), "III");
        assert_eq!(w.sublabel(1).to_string(), "IIZ");
        assert_eq!(w.sublabel(4).to_string(), "XII");
        assert_eq!(w.sublabel(7).to_string(), "XYZ");
        assert!(w.covers(&"IYZ".parse().unwrap()));
        assert!(!w.covers(&"ZII".parse().unwrap()));
    }

    #[test]
    fn walsh_hadamard_matches_definition() {
        let input: Vec<f64> = (0..8).map(|i| i as f64 * 1.5 - 2.0).collect();
        let mut fast = input.clone();
        walsh_hadamard(&mut fast);
        for (k, fk) in fast.iter().enumerate() {
            let slow: f64 = (0..8)
                .map(|m: usize| {
                    if (m & k).count_ones().is_multiple_of(2) {
                        input[m]
                    } else {
                        -input[m]
                    }
                })
                .sum();
            assert!((fk - slow).abs() < 1e-12);
        }
    }
}
