//! Nonnegative-matrix algebra: projective distance, subrectangularity and
//! Birkhoff contraction coefficients.
//!
//! These are the analytic tools behind the forgetfulness certificates in
//! [`crate::hmm`]: products of observation matrices contract posteriors in
//! the projective metric at a rate governed by their Birkhoff coefficients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entries with magnitude below this are treated as structural zeros.
///
/// Floating-point products of strictly positive inputs never round to zero,
/// so zeros only arise structurally; the threshold guards against underflow
/// on long unnormalized products.
pub const ZERO_TOL: f64 = 1e-15;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ContractionError {
    #[error("projective distance undefined: vector supports differ")]
    SupportMismatch,
    #[error("phi undefined: matrix is zero or not subrectangular")]
    NotSubrectangular,
}

/// Dense nonnegative matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl NonnegMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        assert!(data.iter().all(|&v| v >= 0.0), "entries must be nonnegative");
        NonnegMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        NonnegMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Single-entry selector matrix: 1 at `(a, a)`, zero elsewhere.
    pub fn selector(n: usize, a: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.data[a * n + a] = 1.0;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(v >= 0.0);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> NonnegMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn matmul(&self, other: &NonnegMatrix) -> NonnegMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &NonnegMatrix) -> NonnegMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        NonnegMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: f64) -> NonnegMatrix {
        assert!(c >= 0.0);
        NonnegMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v <= ZERO_TOL)
    }

    /// Boolean support pattern with the structural-zero threshold applied.
    pub fn support_pattern(&self) -> Vec<bool> {
        self.data.iter().map(|&v| v > ZERO_TOL).collect()
    }

    /// Left action of a row vector: `x^T M`.
    pub fn left_mul(&self, x: &NonnegVector) -> NonnegVector {
        assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x.entries()[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                out[j] += xi * self.get(i, j);
            }
        }
        NonnegVector::new(out)
    }
}

/// Nonnegative vector with its support tracked via the structural-zero rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegVector {
    entries: Vec<f64>,
}

impl NonnegVector {
    pub fn new(entries: Vec<f64>) -> Self {
        assert!(entries.iter().all(|&v| v >= 0.0));
        NonnegVector { entries }
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        NonnegVector { entries: e }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > ZERO_TOL)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.entries.iter().sum()
    }
}

/// Projective distance between two nonnegative vectors with equal supports:
/// `max_{j,l in supp} ln((x_j/y_j)/(x_l/y_l))`. Two all-zero vectors are at
/// distance zero.
pub fn projective_distance(x: &NonnegVector, y: &NonnegVector) -> Result<f64, ContractionError> {
    if x.len() != y.len() {
        return Err(ContractionError::SupportMismatch);
    }
    let sx = x.support();
    if sx != y.support() {
        return Err(ContractionError::SupportMismatch);
    }
    if sx.is_empty() {
        return Ok(0.0);
    }
    let ratios: Vec<f64> = sx.iter().map(|&i| x.entries[i] / y.entries[i]).collect();
    let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    Ok((max / min).ln())
}

/// A matrix is subrectangular when every zero entry lies in an all-zero row
/// or an all-zero column; equivalently, its nonzero pattern is a combinatorial
/// rectangle (nonzero rows × nonzero columns).
pub fn is_subrectangular(m: &NonnegMatrix) -> bool {
    let row_nonzero: Vec<bool> =
        (0..m.rows()).map(|i| (0..m.cols()).any(|j| m.get(i, j) > ZERO_TOL)).collect();
    let col_nonzero: Vec<bool> =
        (0..m.cols()).map(|j| (0..m.rows()).any(|i| m.get(i, j) > ZERO_TOL)).collect();
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m.get(i, j) <= ZERO_TOL && row_nonzero[i] && col_nonzero[j] {
                return false;
            }
        }
    }
    true
}

/// Minimum cross-ratio `[M]_{i,j}[M]_{k,l} / ([M]_{i,l}[M]_{k,j})` over the
/// positive core (all-zero rows/columns deleted first). Defined for nonzero
/// subrectangular matrices; always in `(0, 1]`.
pub fn phi(m: &NonnegMatrix) -> Result<f64, ContractionError> {
    if m.is_zero() || !is_subrectangular(m) {
        return Err(ContractionError::NotSubrectangular);
    }
    let rows: Vec<usize> =
        (0..m.rows()).filter(|&i| (0..m.cols()).any(|j| m.get(i, j) > ZERO_TOL)).collect();
    let cols: Vec<usize> =
        (0..m.cols()).filter(|&j| (0..m.rows()).any(|i| m.get(i, j) > ZERO_TOL)).collect();
    let mut min = 1.0f64;
    for &i in &rows {
        for &k in &rows {
            for &j in &cols {
                for &l in &cols {
                    let r = (m.get(i, j) * m.get(k, l)) / (m.get(i, l) * m.get(k, j));
                    if r < min {
                        min = r;
                    }
                }
            }
        }
    }
    Ok(min)
}

/// Birkhoff contraction coefficient: `0` for the zero matrix, `1` for a
/// nonzero non-subrectangular matrix, and `(1 - sqrt(phi)) / (1 + sqrt(phi))`
/// otherwise. Invariant under transposition.
pub fn birkhoff(m: &NonnegMatrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    match phi(m) {
        Ok(p) => {
            let s = p.sqrt();
            (1.0 - s) / (1.0 + s)
        }
        Err(_) => 1.0,
    }
}

/// Uniform contraction budget for a product of subrectangular matrices:
/// `4 ln((1+β(M₁))/(1−β(M₁))) · Π_{ℓ≥2} β(M_ℓ)`.
pub fn contraction_budget(ms: &[NonnegMatrix]) -> Result<f64, ContractionError> {
    if ms.is_empty() {
        return Err(ContractionError::NotSubrectangular);
    }
    for m in ms {
        if m.is_zero() || !is_subrectangular(m) {
            return Err(ContractionError::NotSubrectangular);
        }
    }
    let b1 = birkhoff(&ms[0]);
    let head = 4.0 * ((1.0 + b1) / (1.0 - b1)).ln();
    let tail: f64 = ms[1..].iter().map(birkhoff).product();
    Ok(head * tail)
}

/// Matrix carrying a separate natural-log scale, for long products that would
/// otherwise underflow. Supports and cross-ratios are scale-invariant, so the
/// renormalization is exact for everything this crate derives from products.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    pub mat: NonnegMatrix,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn new(mat: NonnegMatrix) -> Self {
        ScaledMatrix { mat, log_scale: 0.0 }.normalized()
    }

    pub fn identity(n: usize) -> Self {
        ScaledMatrix { mat: NonnegMatrix::identity(n), log_scale: 0.0 }
    }

    fn normalized(mut self) -> Self {
        let m = self.mat.max_entry();
        if m > 0.0 && (m < 1e-100 || m > 1e100) {
            self.mat = self.mat.scale(1.0 / m);
            self.log_scale += m.ln();
        }
        self
    }

    pub fn matmul(&self, other: &NonnegMatrix) -> ScaledMatrix {
        ScaledMatrix {
            mat: self.mat.matmul(other),
            log_scale: self.log_scale,
        }
        .normalized()
    }

    pub fn matmul_scaled(&self, other: &ScaledMatrix) -> ScaledMatrix {
        ScaledMatrix {
            mat: self.mat.matmul(&other.mat),
            log_scale: self.log_scale + other.log_scale,
        }
        .normalized()
    }

    /// Sum of two scaled matrices, aligning the scales first.
    pub fn add(&self, other: &ScaledMatrix) -> ScaledMatrix {
        if self.mat.is_zero() {
            return other.clone();
        }
        if other.mat.is_zero() {
            return self.clone();
        }
        let m = self.log_scale.max(other.log_scale);
        let a = self.mat.scale((self.log_scale - m).exp());
        let b = other.mat.scale((other.log_scale - m).exp());
        ScaledMatrix { mat: a.add(&b), log_scale: m }.normalized()
    }

    /// `ln(x^T P y)` where `P` is the represented product and `y` is all-ones.
    pub fn log_weight(&self, x: &NonnegVector) -> f64 {
        self.log_l1_of_left_mul(x)
    }

    /// `ln ||x^T P||_1` where `P` is the represented (unscaled) product.
    pub fn log_l1_of_left_mul(&self, x: &NonnegVector) -> f64 {
        let v = self.mat.left_mul(x);
        v.l1_norm().ln() + self.log_scale
    }
}
