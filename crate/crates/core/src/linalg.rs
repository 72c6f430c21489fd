//! Dense complex matrices for qubit registers of at most five qubits.
//!
//! Basis convention, fixed across the crate: a single qubit is ordered
//! `(|e⟩, |g⟩)`, so `σ_z = diag(1, −1)`, `σ⁺ = |e⟩⟨g|` sits at (0, 1) and
//! `σ⁻ = |g⟩⟨e|` at (1, 0). Multi-qubit registers are ordered
//! `(probe, reservoir 1, …, reservoir N)` with the probe as the most
//! significant factor of the Kronecker product.
//!
//! Superoperators use column stacking: `vec(ρ)[i + d·j] = ρ[i][j]`, hence
//! `vec(A ρ B) = (Bᵀ ⊗ A) vec(ρ)`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Tolerance on `|ρ − ρ†|` for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-9;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-9;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(invalid("matrix dimensions must be positive"));
        }
        if rows * cols != data.len() {
            return Err(invalid(format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a Hermitian matrix, rejecting inputs that are not conjugate
    /// symmetric within [`HERMITIAN_TOL`].
    pub fn new_hermitian(rows: usize, data: Vec<Complex64>) -> Result<Self> {
        let m = Self::new(rows, rows, data)?;
        let err = m.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(invalid(format!("matrix is not Hermitian (max |A - A†| = {err:e})")));
        }
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Convenience constructor for 2×2 matrices.
    pub fn from_2x2(a: [[Complex64; 2]; 2]) -> Self {
        Self { rows: 2, cols: 2, data: vec![a[0][0], a[0][1], a[1][0], a[1][1]] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols != rhs.rows {
            return Err(invalid(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, rhs.rows, rhs.cols)));
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, s: Complex64) -> CMatrix {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest entrywise modulus of `self − other`. Panics on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `A − A†`; infinite for non-square input.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &CMatrix) -> Result<CMatrix> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// Column-stacked vectorization.
    pub fn vectorize(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                v.push(self[(i, j)]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vectorize`] for a `d×d` matrix.
    pub fn unvectorize(v: &[Complex64], d: usize) -> Result<CMatrix> {
        if v.len() != d * d {
            return Err(invalid(format!("vector of length {} is not {d}x{d}", v.len())));
        }
        let mut m = CMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                m[(i, j)] = v[i + d * j];
            }
        }
        Ok(m)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(invalid(format!("vector length {} does not match {} columns", v.len(), self.cols)));
        }
        Ok((0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    /// Panics on shape mismatch; use [`CMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Single-qubit operators in the `(|e⟩, |g⟩)` basis.
pub mod ops {
    use super::*;

    pub fn sigma_plus() -> CMatrix {
        CMatrix::from_2x2([[ZERO, ONE], [ZERO, ZERO]])
    }

    pub fn sigma_minus() -> CMatrix {
        CMatrix::from_2x2([[ZERO, ZERO], [ONE, ZERO]])
    }

    pub fn sigma_x() -> CMatrix {
        CMatrix::from_2x2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn sigma_y() -> CMatrix {
        CMatrix::from_2x2([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma_z() -> CMatrix {
        CMatrix::from_2x2([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// Embeds a single-qubit operator at `site` of an `n`-qubit register.
    pub fn embed(op: &CMatrix, site: usize, n: usize) -> CMatrix {
        assert!(site < n, "site {site} outside register of {n} qubits");
        let id = CMatrix::identity(2);
        let mut out = if site == 0 { op.clone() } else { id.clone() };
        for k in 1..n {
            out = kron(&out, if k == site { op } else { &id });
        }
        out
    }
}

/// Kronecker product; the dimensions multiply.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues (ascending)
/// and the unitary whose columns are the matching eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !h.is_square() {
        return Err(invalid("eigendecomposition needs a square matrix"));
    }
    let err = h.hermiticity_error();
    if err > HERMITIAN_TOL {
        return Err(invalid(format!("matrix is not Hermitian (max |A - A†| = {err:e})")));
    }
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..h.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(h.rows, h.rows);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..h.rows {
            vectors[(row, col)] = eig.eigenvectors[(row, k)];
        }
    }
    Ok((values, vectors))
}

/// Exact propagator `exp(−i H t)` of a Hermitian `H`.
pub fn herm_unitary(h: &CMatrix, t: f64) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let phases: Vec<Complex64> = values.iter().map(|&e| Complex64::from_polar(1.0, -e * t)).collect();
    let scaled = vectors.matmul(&CMatrix::from_diag(&phases))?;
    scaled.matmul(&vectors.dagger())
}

/// Deviation of a matrix from being a valid density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Physicality {
    /// max |ρ − ρ†|
    pub hermiticity: f64,
    /// |Tr ρ − 1|
    pub trace: f64,
    /// Smallest eigenvalue of the Hermitian part.
    pub min_eigenvalue: f64,
}

impl Physicality {
    pub fn of(m: &CMatrix) -> Physicality {
        let hermiticity = m.hermiticity_error();
        let trace = (m.trace() - ONE).norm();
        let min_eigenvalue = min_eigenvalue(m);
        Physicality { hermiticity, trace, min_eigenvalue }
    }

    pub fn is_valid(&self) -> bool {
        self.hermiticity <= HERMITIAN_TOL && self.trace <= TRACE_TOL && self.min_eigenvalue >= PSD_TOL
    }

    /// Worst-case merge of two reports.
    pub fn merge(self, other: Physicality) -> Physicality {
        Physicality {
            hermiticity: self.hermiticity.max(other.hermiticity),
            trace: self.trace.max(other.trace),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }

    /// Report of an exactly valid state, the identity for [`Physicality::merge`].
    pub fn ideal() -> Physicality {
        Physicality { hermiticity: 0.0, trace: 0.0, min_eigenvalue: f64::INFINITY }
    }
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::NEG_INFINITY;
    }
    if m.rows == 2 {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        return mean - half_gap;
    }
    let herm = (m + &m.dagger()).scale(c(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(herm.to_nalgebra());
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// A validated density matrix on `dim_log2` qubits.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    dim_log2: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim_log2 = qubit_count(&matrix)?;
        let report = Physicality::of(&matrix);
        if report.hermiticity > HERMITIAN_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian: {:e}", report.hermiticity)));
        }
        if report.trace > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace off by {:e}", report.trace)));
        }
        if report.min_eigenvalue < PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {:e}", report.min_eigenvalue)));
        }
        Ok(Self { matrix, dim_log2 })
    }

    /// Wraps a matrix the caller knows to be physical. The shape is still checked.
    pub(crate) fn new_unchecked(matrix: CMatrix) -> Self {
        let dim_log2 = qubit_count(&matrix).expect("density matrix shape");
        Self { matrix, dim_log2 }
    }

    /// Maximally mixed state on `n` qubits.
    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1usize << n;
        Self::new_unchecked(CMatrix::identity(d).scale(c(1.0 / d as f64, 0.0)))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    pub fn dim_log2(&self) -> usize {
        self.dim_log2
    }

    pub fn physicality(&self) -> Physicality {
        Physicality::of(&self.matrix)
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).expect("square").trace().re
    }

    /// Determinant of a single-qubit state.
    pub fn det2(&self) -> f64 {
        assert_eq!(self.dim(), 2, "det2 needs a single-qubit state");
        let m = &self.matrix;
        (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re
    }

    /// Expectation value Tr(ρ O).
    pub fn expect(&self, op: &CMatrix) -> Result<Complex64> {
        Ok(self.matrix.matmul(op)?.trace())
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix({} qubits) {:?}", self.dim_log2, self.matrix)
    }
}

fn qubit_count(m: &CMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::InvalidDensityMatrix(format!("{}x{} is not square", m.rows, m.cols)));
    }
    if !m.rows.is_power_of_two() {
        return Err(Error::InvalidDensityMatrix(format!("dimension {} is not a power of two", m.rows)));
    }
    Ok(m.rows.trailing_zeros() as usize)
}

/// Reduced state of subsystem `keep` for a register with subsystem
/// dimensions `dims` (most significant first).
pub fn partial_trace(rho: &DensityMatrix, keep: usize, dims: &[usize]) -> Result<DensityMatrix> {
    let total: usize = dims.iter().product();
    if dims.is_empty() || total != rho.dim() {
        return Err(invalid(format!("subsystem dims {dims:?} do not match dimension {}", rho.dim())));
    }
    if keep >= dims.len() {
        return Err(invalid(format!("subsystem {keep} out of range for {} subsystems", dims.len())));
    }
    let dk = dims[keep];
    let inner: usize = dims[keep + 1..].iter().product();
    let outer: usize = dims[..keep].iter().product();
    let m = rho.matrix();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for o in 0..outer {
                for n in 0..inner {
                    let row = (o * dk + a) * inner + n;
                    let col = (o * dk + b) * inner + n;
                    acc += m[(row, col)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(out)
}

/// Superoperator of `ρ ↦ A ρ` (column stacking: `I ⊗ A`).
pub fn spre(a: &CMatrix) -> CMatrix {
    kron(&CMatrix::identity(a.rows), a)
}

/// Superoperator of `ρ ↦ ρ B` (column stacking: `Bᵀ ⊗ I`).
pub fn spost(b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), &CMatrix::identity(b.rows))
}

/// Superoperator of `ρ ↦ A ρ B`.
pub fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// Relative threshold under which a singular value counts as zero.
const NULL_SPACE_RTOL: f64 = 1e-10;

/// Steady state of a single-qubit Liouvillian (4×4, column stacking).
///
/// The null vector is found by SVD; it is reshaped, normalized to unit
/// trace and validated as a density matrix.
pub fn liouvillian_steady_state(l: &CMatrix) -> Result<DensityMatrix> {
    if l.rows != 4 || l.cols != 4 {
        return Err(invalid(format!("expected a 4x4 Liouvillian, got {}x{}", l.rows, l.cols)));
    }
    let svd = l.to_nalgebra().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sigma = &svd.singular_values;
    let largest = sigma.iter().copied().fold(0.0, f64::max);
    let threshold = NULL_SPACE_RTOL * largest;
    let null_dim = sigma.iter().filter(|&&s| s <= threshold).count();
    if largest == 0.0 || null_dim != 1 {
        return Err(Error::DegenerateSteadyState(if largest == 0.0 { 4 } else { null_dim }));
    }
    let k = (0..sigma.len()).min_by(|&a, &b| sigma[a].total_cmp(&sigma[b])).expect("nonempty");
    // rows of V^T are conjugated right singular vectors
    let v: Vec<Complex64> = (0..4).map(|j| v_t[(k, j)].conj()).collect();
    let mut m = CMatrix::unvectorize(&v, 2)?;
    let tr = m.trace();
    if tr.norm() < 1e-14 {
        return Err(Error::DegenerateSteadyState(0));
    }
    m = m.scale(tr.inv());
    // strip the roundoff-level anti-Hermitian part left by the SVD
    let m = (&m + &m.dagger()).scale(c(0.5, 0.0));
    DensityMatrix::new(m)
}
