//! Independent oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use cstomo::{DensityMatrix, HermitianMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type CMatrix = DMatrix<Complex64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn gaussian_vector(d: usize, rng: &mut impl Rng) -> DVector<Complex64> {
    DVector::from_fn(d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Haar-random pure state.
pub fn random_pure(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let v = gaussian_vector(d, rng);
    let v = &v / c(v.norm(), 0.0);
    DensityMatrix::new(&v * v.adjoint()).unwrap()
}

/// `G G† / tr` for a `d × rank` complex Gaussian `G`.
pub fn random_mixed(d: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = CMatrix::from_fn(d, rank, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = m / c(tr, 0.0);
    DensityMatrix::new((&m + m.adjoint()) * c(0.5, 0.0)).unwrap()
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> HermitianMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    HermitianMatrix::new((&g + g.adjoint()) * c(0.5, 0.0)).unwrap()
}

/// Single-qubit Pauli matrix by letter.
pub fn pauli_2x2(letter: char) -> CMatrix {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    let v = match letter {
        'I' => [l, o, o, l],
        'X' => [o, l, l, o],
        'Y' => [o, -i, i, o],
        'Z' => [l, o, o, -l],
        _ => panic!("bad letter {letter}"),
    };
    CMatrix::from_row_slice(2, 2, &v)
}

/// Explicit Kronecker product of single-qubit Paulis, first letter most significant.
pub fn pauli_matrix(label: &str) -> CMatrix {
    label
        .chars()
        .fold(CMatrix::from_element(1, 1, c(1.0, 0.0)), |acc, ch| {
            acc.kronecker(&pauli_2x2(ch))
        })
}

/// Eigenvector of a single-qubit Pauli with eigenvalue `+1` (bit 0) or `−1` (bit 1).
pub fn eigenvector_2(letter: char, bit: usize) -> DVector<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    let v = match letter {
        'Z' if bit == 0 => [c(1.0, 0.0), c(0.0, 0.0)],
        'Z' => [c(0.0, 0.0), c(1.0, 0.0)],
        'X' => [c(s, 0.0), c(sign * s, 0.0)],
        'Y' => [c(s, 0.0), c(0.0, sign * s)],
        _ => panic!("bad letter {letter}"),
    };
    DVector::from_row_slice(&v)
}

/// Explicit projector for outcome `k` of a word, built by Kronecker products.
pub fn projector(word: &str, k: usize) -> CMatrix {
    let n = word.len();
    let v = word
        .chars()
        .enumerate()
        .fold(DVector::from_element(1, c(1.0, 0.0)), |acc, (q, ch)| {
            acc.kronecker(&eigenvector_2(ch, (k >> (n - 1 - q)) & 1))
        });
    &v * v.adjoint()
}

/// `tr(Π ρ)` evaluated by matrix multiplication.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    (a * b).trace()
}

pub fn frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// All words of length `n` over XYZ, lexicographic.
pub fn all_words(n: usize) -> Vec<String> {
    (0..3usize.pow(n as u32))
        .map(|mut i| {
            let mut s = vec![' '; n];
            for q in (0..n).rev() {
                s[q] = ['X', 'Y', 'Z'][i % 3];
                i /= 3;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// All labels of length `n` over IXYZ.
pub fn all_labels(n: usize) -> Vec<String> {
    (0..4usize.pow(n as u32))
        .map(|mut i| {
            let mut s = vec![' '; n];
            for q in (0..n).rev() {
                s[q] = ['I', 'X', 'Y', 'Z'][i % 4];
                i /= 4;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// GHZ density matrix built from its state vector.
pub fn ghz_oracle(n: usize) -> CMatrix {
    let d = 1 << n;
    let mut v = DVector::from_element(d, c(0.0, 0.0));
    v[0] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    v[d - 1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    &v * v.adjoint()
}
