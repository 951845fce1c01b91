//! Dense complex matrices and the tolerance policy shared by every module.
//!
//! Vectorisation is row-major throughout: `vec(A)[r * cols + c] = A[r, c]`.
//! With that convention `<vec A, vec B> = Tr(A^dagger B)`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Numeric comparison policy.
///
/// `atol` is the absolute tolerance used by every equality gate; `rank_rel`
/// is the relative cutoff below which an eigenvalue counts as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub atol: f64,
    pub rank_rel: f64,
}

impl Tolerance {
    pub const DEFAULT_ATOL: f64 = 1e-9;
    pub const DEFAULT_RANK_REL: f64 = 1e-10;

    pub fn new(atol: f64, rank_rel: f64) -> Result<Self> {
        if !(atol.is_finite() && atol > 0.0) {
            return Err(Error::InvalidParameter(format!("atol must be positive, got {atol}")));
        }
        if !(rank_rel.is_finite() && rank_rel > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rank_rel must be positive, got {rank_rel}"
            )));
        }
        Ok(Self { atol, rank_rel })
    }

    pub fn with_atol(self, atol: f64) -> Result<Self> {
        Self::new(atol, self.rank_rel)
    }

    /// Eigenvalues at or below this value are treated as zero.
    pub fn rank_cutoff(&self, largest: f64) -> f64 {
        self.rank_rel * largest.max(self.atol)
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            atol: Self::DEFAULT_ATOL,
            rank_rel: Self::DEFAULT_RANK_REL,
        }
    }
}

/// A dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// Build from row-major entries, rejecting wrong lengths and NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &data)))
    }

    /// Real row-major convenience constructor.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_row_major(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_dmatrix(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    /// `||self - other||_F`; panics on shape mismatch.
    pub fn distance(&self, other: &CMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// `||A - A^dagger||_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        (&self.0 - self.0.adjoint()).norm()
    }

    /// Column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    /// Columns side by side.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    /// Product with a shape check instead of a panic.
    pub fn try_mul(&self, rhs: &CMatrix) -> Result<CMatrix> {
        if self.cols() != rhs.rows() {
            return Err(mismatch("matrix product", self.cols(), rhs.rows()));
        }
        Ok(Self(&self.0 * &rhs.0))
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list()
            .entries((0..self.rows()).map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect::<Vec<_>>()))
            .finish()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

impl Mul<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 * &rhs.0)
    }
}

impl Add<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 + &rhs.0)
    }
}

impl Sub<&CMatrix> for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix(&self.0 - &rhs.0)
    }
}

/// Wire form: `{"rows": n, "cols": m, "data": [[re, im], ...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for CMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRecord {
            rows: self.rows(),
            cols: self.cols(),
            data: self.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rec = MatrixRecord::deserialize(deserializer)?;
        let data = rec.data.iter().map(|&[re, im]| C64::new(re, im)).collect();
        CMatrix::from_row_major(rec.rows, rec.cols, data).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product: `(a ⊗ b)[i*rb + k, j*cb + l] = a[i, j] * b[k, l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    CMatrix(a.0.kronecker(&b.0))
}

/// Which tensor factor to trace out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Partial trace of an operator on `A ⊗ B`.
pub fn partial_trace(m: &CMatrix, which: Side, dims: (usize, usize)) -> Result<CMatrix> {
    let (da, db) = dims;
    if !m.is_square() || m.rows() != da * db {
        return Err(mismatch(
            "partial_trace",
            format!("{}x{}", da * db, da * db),
            format!("{}x{}", m.rows(), m.cols()),
        ));
    }
    Ok(match which {
        Side::B => CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()),
        Side::A => CMatrix::from_fn(db, db, |k, l| (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()),
    })
}

/// Row-major vectorisation.
pub fn vec(a: &CMatrix) -> Vec<C64> {
    a.row_major()
}

/// Inverse of [`vec`].
pub fn unvec(v: &[C64], rows: usize, cols: usize) -> Result<CMatrix> {
    CMatrix::from_row_major(rows, cols, v.to_vec())
}

/// `<u, v> = sum conj(u_i) v_i`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Hilbert-Schmidt inner product `Tr(A^dagger B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::diag(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    /// `||U^dagger U - I||_F`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.vectors.cols();
        (&self.vectors.adjoint() * &self.vectors).distance(&CMatrix::identity(n))
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }
}

/// Hermitian eigendecomposition.
///
/// Input passing the Hermiticity gate is symmetrised as `(a + a^dagger)/2`
/// before solving.
pub fn eigh(a: &CMatrix, tol: Tolerance) -> Result<Eigensystem> {
    if !a.is_square() {
        return Err(mismatch("eigh", "square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let residual = a.hermiticity_residual();
    if residual > tol.atol * (1.0 + a.frobenius_norm()) {
        return Err(Error::NotHermitian { residual });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Eigensystem {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let sym = (&a.0 + a.0.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::EigenNoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(Eigensystem { values, vectors })
}

/// Number of values strictly above `rank_rel * max(values[0], atol)`.
pub fn numerical_rank(values: &[f64], tol: Tolerance) -> usize {
    let largest = values.iter().copied().fold(0.0_f64, f64::max);
    let cutoff = tol.rank_cutoff(largest);
    values.iter().filter(|&&v| v > cutoff).count()
}

/// Deterministic generator used by every seeded routine.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian entries, `E|z|^2 = 1`.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed isometry `C^in_dim -> C^out_dim`.
///
/// Ginibre sample followed by QR, with the phases of `R`'s diagonal moved
/// into `Q` so the result is invariant under left and right unitary rotation.
pub fn haar_isometry<R: Rng + ?Sized>(out_dim: usize, in_dim: usize, rng: &mut R) -> Result<CMatrix> {
    if out_dim < in_dim {
        return Err(Error::InvalidDimension(format!(
            "isometry needs out_dim >= in_dim, got {out_dim} < {in_dim}"
        )));
    }
    if in_dim == 0 {
        return Ok(CMatrix::zeros(out_dim, 0));
    }
    let g = ginibre(out_dim, in_dim, rng);
    let qr = g.0.qr();
    let q = qr.q();
    let r = qr.r();
    let phases: Vec<C64> = (0..in_dim)
        .map(|j| {
            let d = r[(j, j)];
            if d.norm() > 0.0 {
                d / d.norm()
            } else {
                ONE
            }
        })
        .collect();
    Ok(CMatrix::from_fn(out_dim, in_dim, |i, j| q[(i, j)] * phases[j]))
}

/// Seeded convenience wrapper around [`haar_isometry`].
pub fn haar_isometry_seeded(out_dim: usize, in_dim: usize, seed: u64) -> Result<CMatrix> {
    haar_isometry(out_dim, in_dim, &mut seeded_rng(seed))
}

pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    haar_isometry(n, n, rng).expect("square isometry is always feasible")
}

/// `||V^dagger V - I||_F`.
pub fn isometry_residual(v: &CMatrix) -> f64 {
    (&v.adjoint() * v).distance(&CMatrix::identity(v.cols()))
}

/// Minimum over a global phase of `||a - e^{i phi} b||_F`.
pub fn phase_aligned_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap = hs_inner(b, a);
    let r = overlap.norm();
    let phase = if r > 0.0 { overlap / r } else { ONE };
    a.distance(&b.scale(phase))
}

/// Permutation matrix swapping the factors of `C^da ⊗ C^db`.
pub fn swap_matrix(da: usize, db: usize) -> CMatrix {
    let n = da * db;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..da {
        for j in 0..db {
            m.0[(j * da + i, i * db + j)] = ONE;
        }
    }
    m
}

/// Ket `|i>` in `C^n` as an `n x 1` matrix.
pub fn basis_ket(n: usize, i: usize) -> CMatrix {
    CMatrix::from_fn(n, 1, |r, _| if r == i { ONE } else { ZERO })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let g = ginibre(n, n, &mut seeded_rng(seed));
        (&g + &g.adjoint()).scale_real(0.5)
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&CMatrix::identity(2), &CMatrix::identity(3)), CMatrix::identity(6));
        let x = CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let k = kron(&x, &CMatrix::identity(2));
        let expected = CMatrix::from_real(
            4,
            4,
            &[
                0., 0., 1., 0., //
                0., 0., 0., 1., //
                1., 0., 0., 0., //
                0., 1., 0., 0.,
            ],
        )
        .unwrap();
        assert_eq!(k, expected);
    }

    #[test]
    fn kron_is_associative_and_mixed_product() {
        let mut rng = seeded_rng(1);
        let (a, b, cm, d) = (
            ginibre(2, 2, &mut rng),
            ginibre(2, 2, &mut rng),
            ginibre(2, 2, &mut rng),
            ginibre(2, 2, &mut rng),
        );
        let left = kron(&kron(&a, &b), &cm);
        let right = kron(&a, &kron(&b, &cm));
        assert!(left.distance(&right) <= 1e-12);
        let mixed = &kron(&a, &b) * &kron(&cm, &d);
        assert!(mixed.distance(&kron(&(&a * &cm), &(&b * &d))) <= 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        let a = CMatrix::from_real(2, 2, &[1., 2., 3., 4.]).unwrap();
        let m = kron(&a, &CMatrix::identity(2));
        let pt = partial_trace(&m, Side::B, (2, 2)).unwrap();
        assert_eq!(pt, CMatrix::from_real(2, 2, &[2., 4., 6., 8.]).unwrap());

        // Choi of the identity channel on C^2, written out entrywise.
        let mut j = CMatrix::zeros(4, 4);
        for (r, col) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            j.0[(r, col)] = c(1.0);
        }
        let reduced = partial_trace(&j, Side::B, (2, 2)).unwrap();
        assert_eq!(reduced, CMatrix::identity(2));

        let h = random_hermitian(4, 7);
        let ta = partial_trace(&h, Side::A, (2, 2)).unwrap();
        assert_abs_diff_eq!((ta.trace() - h.trace()).norm(), 0.0, epsilon = 1e-12);

        assert!(partial_trace(&h, Side::A, (3, 2)).is_err());
    }

    #[test]
    fn partial_trace_of_product_scales_by_trace() {
        let mut rng = seeded_rng(3);
        let a = ginibre(3, 3, &mut rng);
        let b = ginibre(2, 2, &mut rng);
        let pt = partial_trace(&kron(&a, &b), Side::B, (3, 2)).unwrap();
        assert!(pt.distance(&a.scale(b.trace())) <= 1e-12);
        let pa = partial_trace(&kron(&a, &b), Side::A, (3, 2)).unwrap();
        assert!(pa.distance(&b.scale(a.trace())) <= 1e-12);
    }

    #[test]
    fn vec_conventions() {
        let a = CMatrix::from_real(2, 2, &[1., 2., 3., 4.]).unwrap();
        assert_eq!(vec(&a), vec![c(1.), c(2.), c(3.), c(4.)]);
        let i2 = vec(&CMatrix::identity(2));
        assert_eq!(inner(&i2, &i2), c(2.0));

        let m = ginibre(3, 5, &mut seeded_rng(9));
        assert_eq!(unvec(&vec(&m), 3, 5).unwrap(), m);
        assert!(matches!(unvec(&vec(&m), 4, 4), Err(Error::LengthMismatch { .. })));

        let b = ginibre(3, 5, &mut seeded_rng(10));
        let lhs = inner(&vec(&m), &vec(&b));
        let rhs = (&m.adjoint() * &b).trace();
        assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn non_finite_entries_rejected() {
        let err = CMatrix::from_row_major(1, 2, vec![c(1.0), C64::new(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn eigh_examples() {
        let tol = Tolerance::default();
        let e = eigh(&CMatrix::diag(&[2.0, 1.0]), tol).unwrap();
        assert_eq!(e.values, vec![2.0, 1.0]);
        assert!(e.vectors.distance(&CMatrix::identity(2)) <= 1e-15);

        let p = CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let e = eigh(&p, tol).unwrap();
        assert_abs_diff_eq!(e.values[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.values[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let tol = Tolerance::default();
        for n in [1, 2, 6, 11, 16] {
            let h = random_hermitian(n, 100 + n as u64);
            let e = eigh(&h, tol).unwrap();
            assert!(e.reconstruct().distance(&h) <= 1e-10);
            assert!(e.orthonormality_residual() <= 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let a = CMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        match eigh(&a, Tolerance::default()) {
            Err(Error::NotHermitian { residual }) => assert_abs_diff_eq!(residual, 2f64.sqrt()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn numerical_rank_examples() {
        let tol = Tolerance::default();
        assert_eq!(numerical_rank(&[1.0, 1e-15], tol), 1);
        assert_eq!(numerical_rank(&[0.5, 0.5, 0.0, 0.0], tol), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], tol), 0);
        // Choi of the completely depolarising channel on C^2 is I_4 / 2.
        let e = eigh(&CMatrix::identity(4).scale_real(0.5), tol).unwrap();
        assert_eq!(numerical_rank(&e.values, tol), 4);
    }

    #[test]
    fn haar_isometry_contract() {
        let u = haar_isometry_seeded(2, 2, 5).unwrap();
        assert!(isometry_residual(&u) <= 1e-12);
        assert!((&u * &u.adjoint()).distance(&CMatrix::identity(2)) <= 1e-12);
        let v = haar_isometry_seeded(4, 2, 5).unwrap();
        assert_eq!(v.shape(), (4, 2));
        assert!(isometry_residual(&v) <= 1e-12);
        assert_eq!(
            haar_isometry_seeded(4, 2, 77).unwrap(),
            haar_isometry_seeded(4, 2, 77).unwrap()
        );
        assert!(haar_isometry_seeded(2, 4, 1).is_err());
    }

    #[test]
    fn swap_exchanges_factors() {
        let mut rng = seeded_rng(4);
        let a = ginibre(2, 2, &mut rng);
        let b = ginibre(3, 3, &mut rng);
        let s = swap_matrix(2, 3);
        let lhs = &(&s * &kron(&a, &b)) * &s.adjoint();
        assert!(lhs.distance(&kron(&b, &a)) <= 1e-12);
    }

    #[test]
    fn tolerance_validation() {
        assert!(Tolerance::new(0.0, 1e-10).is_err());
        assert!(Tolerance::new(1e-9, -1.0).is_err());
        assert_eq!(Tolerance::default().atol, 1e-9);
    }

    #[test]
    fn matrix_json_roundtrip() {
        let m = ginibre(2, 3, &mut seeded_rng(2));
        let s = serde_json::to_string(&m).unwrap();
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let bad = r#"{"rows": 2, "cols": 2, "data": [[1, 0]]}"#;
        assert!(serde_json::from_str::<CMatrix>(bad).is_err());
    }
}
