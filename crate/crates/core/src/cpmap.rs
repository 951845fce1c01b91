//! Completely positive maps between finite-dimensional spaces.
//!
//! A [`CPMap`] is stored as a Kraus family. Its Choi matrix uses the
//! input ⊗ output ordering,
//!
//! ```text
//! choi = sum_{i,j} |i><j| ⊗ Φ(|i><j|) = sum_a w_a w_a^dagger,
//! w_a[i * out_dim + o] = K_a[o, i],
//! ```
//!
//! and is computed on first use. Two maps are equal when their Choi
//! matrices agree in Frobenius norm; Kraus lists are never compared.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{mismatch, Error, Result};
use crate::tensor::{eigh, hs_inner, kron, numerical_rank, CMatrix, Tolerance, C64, ONE, ZERO};

/// Above this Choi side length, distances are computed from the Kraus
/// vectors instead of materialising the Choi matrices.
const DIRECT_CHOI_LIMIT: usize = 256;

#[derive(Debug, Clone)]
pub struct CPMap {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMatrix>,
    choi: OnceLock<CMatrix>,
}

impl CPMap {
    pub fn new(in_dim: usize, out_dim: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidParameter("Kraus family must be nonempty".into()));
        }
        for k in &kraus {
            if k.shape() != (out_dim, in_dim) {
                return Err(mismatch(
                    "Kraus operator",
                    format!("{out_dim}x{in_dim}"),
                    format!("{}x{}", k.rows(), k.cols()),
                ));
            }
        }
        Ok(Self::from_parts(in_dim, out_dim, kraus))
    }

    fn from_parts(in_dim: usize, out_dim: usize, kraus: Vec<CMatrix>) -> Self {
        Self {
            in_dim,
            out_dim,
            kraus,
            choi: OnceLock::new(),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    /// Side length of the Choi matrix.
    pub fn choi_dim(&self) -> usize {
        self.in_dim * self.out_dim
    }

    pub fn choi(&self) -> &CMatrix {
        self.choi.get_or_init(|| {
            let w = self.choi_vectors();
            &w * &w.adjoint()
        })
    }

    /// The vectors `w_a` as columns of a `choi_dim x num_kraus` matrix.
    pub fn choi_vectors(&self) -> CMatrix {
        let out = self.out_dim;
        CMatrix::from_fn(self.choi_dim(), self.kraus.len(), |r, a| {
            self.kraus[a][(r % out, r / out)]
        })
    }

    /// `G[a, b] = Tr(K_a^dagger K_b)`; shares its nonzero spectrum with the Choi matrix.
    pub fn kraus_gram(&self) -> CMatrix {
        let r = self.kraus.len();
        CMatrix::from_fn(r, r, |a, b| hs_inner(&self.kraus[a], &self.kraus[b]))
    }

    /// `||choi||_F`, via whichever of Choi or Kraus Gram is smaller.
    pub fn choi_norm(&self) -> f64 {
        if self.kraus.len() <= self.choi_dim() {
            self.kraus_gram().frobenius_norm()
        } else {
            self.choi().frobenius_norm()
        }
    }

    /// Nonzero part of the Choi spectrum, descending.
    pub fn choi_spectrum(&self, tol: Tolerance) -> Result<Vec<f64>> {
        if self.kraus.len() <= self.choi_dim() {
            Ok(eigh(&self.kraus_gram(), tol)?.values)
        } else {
            Ok(eigh(self.choi(), tol)?.values)
        }
    }

    /// Image of an input operator, `sum_a K_a rho K_a^dagger`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.in_dim, self.in_dim) {
            return Err(mismatch(
                "apply",
                format!("{0}x{0}", self.in_dim),
                format!("{}x{}", rho.rows(), rho.cols()),
            ));
        }
        let mut acc = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            acc = &acc + &(&(k * rho) * &k.adjoint());
        }
        Ok(acc)
    }

    /// Multiply by a CP scalar `c >= 0`; the Choi matrix scales by `c`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "CP scalar must be a non-negative real, got {c}"
            )));
        }
        let s = c.sqrt();
        Ok(Self::from_parts(
            self.in_dim,
            self.out_dim,
            self.kraus.iter().map(|k| k.scale_real(s)).collect(),
        ))
    }

    pub fn is_pure(&self, tol: Tolerance) -> Result<PurityVerdict> {
        is_pure(self, tol)
    }

    pub fn purify(&self) -> Purification {
        purify(self)
    }

    pub fn check_isometry(&self, tol: Tolerance) -> Result<IsometryCheck> {
        check_isometry(self, tol)
    }

    pub fn to_record(&self) -> CPMapRecord {
        CPMapRecord {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            kraus: self.kraus.clone(),
            choi: None,
        }
    }

    /// Validate a deserialised record; a supplied Choi matrix must match the Kraus family.
    pub fn from_record(rec: CPMapRecord, tol: Tolerance) -> Result<Self> {
        let map = Self::new(rec.in_dim, rec.out_dim, rec.kraus)?;
        if let Some(choi) = rec.choi {
            let n = map.choi_dim();
            if choi.shape() != (n, n) {
                return Err(mismatch(
                    "choi",
                    format!("{n}x{n}"),
                    format!("{}x{}", choi.rows(), choi.cols()),
                ));
            }
            let residual = choi.distance(map.choi());
            if residual > tol.atol * (1.0 + map.choi_norm()) {
                return Err(Error::ChoiMismatch { residual });
            }
        }
        Ok(map)
    }
}

/// JSON form: `{"in_dim": n, "out_dim": m, "kraus": [Matrix, ...], "choi"?: Matrix}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CPMapRecord {
    pub in_dim: usize,
    pub out_dim: usize,
    pub kraus: Vec<CMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<CMatrix>,
}

impl Serialize for CPMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

/// `ρ ↦ k ρ k^dagger`.
pub fn double(k: &CMatrix) -> CPMap {
    CPMap::from_parts(k.cols(), k.rows(), vec![k.clone()])
}

pub fn identity(n: usize) -> Result<CPMap> {
    check_nonzero(n)?;
    Ok(double(&CMatrix::identity(n)))
}

/// The trace `H -> C`.
pub fn discard(n: usize) -> Result<CPMap> {
    check_nonzero(n)?;
    let kraus = (0..n)
        .map(|i| CMatrix::from_fn(1, n, |_, j| if i == j { ONE } else { ZERO }))
        .collect();
    Ok(CPMap::from_parts(n, 1, kraus))
}

/// `c ↦ c·I_n`, the dagger of [`discard`].
pub fn prepare(n: usize) -> Result<CPMap> {
    Ok(dagger(&discard(n)?))
}

fn check_nonzero(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidDimension("space dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `g ∘ f`.
pub fn compose(g: &CPMap, f: &CPMap) -> Result<CPMap> {
    if f.out_dim != g.in_dim {
        return Err(mismatch("compose", f.out_dim, g.in_dim));
    }
    let mut kraus = Vec::with_capacity(g.kraus.len() * f.kraus.len());
    for gb in &g.kraus {
        for fa in &f.kraus {
            kraus.push(gb * fa);
        }
    }
    Ok(CPMap::from_parts(f.in_dim, g.out_dim, kraus))
}

/// `f ⊗ g`.
pub fn tensor(f: &CPMap, g: &CPMap) -> CPMap {
    let mut kraus = Vec::with_capacity(f.kraus.len() * g.kraus.len());
    for fa in &f.kraus {
        for gb in &g.kraus {
            kraus.push(kron(fa, gb));
        }
    }
    CPMap::from_parts(f.in_dim * g.in_dim, f.out_dim * g.out_dim, kraus)
}

pub fn dagger(f: &CPMap) -> CPMap {
    CPMap::from_parts(f.out_dim, f.in_dim, f.kraus.iter().map(CMatrix::adjoint).collect())
}

/// `sum_t c_t · f_t` with CP scalars `c_t >= 0`; Kraus lists are concatenated.
pub fn sum(terms: &[(f64, &CPMap)]) -> Result<CPMap> {
    let (_, first) = terms
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty sum of CP maps".into()))?;
    let (in_dim, out_dim) = (first.in_dim, first.out_dim);
    let mut kraus = Vec::new();
    for (c, f) in terms {
        if (f.in_dim, f.out_dim) != (in_dim, out_dim) {
            return Err(mismatch(
                "sum",
                format!("{in_dim}->{out_dim}"),
                format!("{}->{}", f.in_dim, f.out_dim),
            ));
        }
        kraus.extend(f.scale(*c)?.kraus);
    }
    Ok(CPMap::from_parts(in_dim, out_dim, kraus))
}

/// Choi-Frobenius distance `||choi(a) - choi(b)||_F`.
pub fn choi_distance(a: &CPMap, b: &CPMap) -> Result<f64> {
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim) {
        return Err(mismatch(
            "choi_distance",
            format!("{}->{}", a.in_dim, a.out_dim),
            format!("{}->{}", b.in_dim, b.out_dim),
        ));
    }
    let n = a.choi_dim();
    let cached = a.choi.get().is_some() && b.choi.get().is_some();
    if n <= DIRECT_CHOI_LIMIT || cached {
        return Ok(a.choi().distance(b.choi()));
    }
    // choi(a) - choi(b) = Q (R_a R_a^† - R_b R_b^†) Q^† with [W_a W_b] = Q [R_a R_b].
    let wa = a.choi_vectors();
    let wb = b.choi_vectors();
    let (ra, rb) = (wa.cols(), wb.cols());
    let stacked = CMatrix::from_fn(n, ra + rb, |i, j| if j < ra { wa[(i, j)] } else { wb[(i, j - ra)] });
    let r = stacked.into_dmatrix().qr().r();
    let r_a = r.columns(0, ra);
    let r_b = r.columns(ra, rb);
    let diff = r_a * r_a.adjoint() - r_b * r_b.adjoint();
    Ok(diff.norm())
}

/// Result of a purity test. `operator` is present when the map is pure.
#[derive(Debug, Clone)]
pub struct PurityVerdict {
    pub pure: bool,
    pub rank: usize,
    pub operator: Option<CMatrix>,
}

/// Pure iff the Choi numerical rank is 1; the extracted `k` satisfies
/// `double(k) ≈ f` with its largest-magnitude entry made real positive.
pub fn is_pure(f: &CPMap, tol: Tolerance) -> Result<PurityVerdict> {
    let (rank, operator) = if f.kraus.len() <= f.choi_dim() {
        let e = eigh(&f.kraus_gram(), tol)?;
        let rank = numerical_rank(&e.values, tol);
        let op = (rank == 1).then(|| {
            let u = e.vector(0);
            let mut k = CMatrix::zeros(f.out_dim, f.in_dim);
            for (ka, ua) in f.kraus.iter().zip(&u) {
                k = &k + &ka.scale(*ua);
            }
            k
        });
        (rank, op)
    } else {
        let e = eigh(f.choi(), tol)?;
        let rank = numerical_rank(&e.values, tol);
        let op = (rank == 1).then(|| {
            let v: Vec<C64> = e.vector(0).iter().map(|z| z * e.values[0].sqrt()).collect();
            operator_from_choi_vector(&v, f.in_dim, f.out_dim)
        });
        (rank, op)
    };
    Ok(PurityVerdict {
        pure: rank == 1,
        rank,
        operator: operator.map(|k| fix_phase(&k)),
    })
}

/// Rescale by a unit phase so the first largest-magnitude entry (row-major)
/// is real and positive.
pub fn fix_phase(k: &CMatrix) -> CMatrix {
    let entries = k.row_major();
    let largest = entries.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return k.clone();
    }
    let pivot = entries
        .iter()
        .find(|z| z.norm() >= largest * (1.0 - 1e-9))
        .copied()
        .unwrap_or(ONE);
    k.scale(pivot.conj() / pivot.norm())
}

/// Inverse of the Choi-vector embedding: `K[o, i] = v[i * out_dim + o]`.
pub fn operator_from_choi_vector(v: &[C64], in_dim: usize, out_dim: usize) -> CMatrix {
    CMatrix::from_fn(out_dim, in_dim, |o, i| v[i * out_dim + o])
}

/// The Choi-vector embedding of a single operator.
pub fn choi_vector(k: &CMatrix) -> Vec<C64> {
    let out = k.rows();
    (0..k.rows() * k.cols()).map(|r| k[(r % out, r / out)]).collect()
}

/// Canonical Kraus family from a Choi matrix via its eigendecomposition.
pub fn kraus_from_choi(choi: &CMatrix, in_dim: usize, out_dim: usize, tol: Tolerance) -> Result<CPMap> {
    let n = in_dim * out_dim;
    if choi.shape() != (n, n) {
        return Err(mismatch(
            "kraus_from_choi",
            format!("{n}x{n}"),
            format!("{}x{}", choi.rows(), choi.cols()),
        ));
    }
    let e = eigh(choi, tol)?;
    let largest = e.values.first().copied().unwrap_or(0.0);
    let smallest = e.values.last().copied().unwrap_or(0.0);
    if smallest < -tol.atol * largest.abs().max(1.0) {
        return Err(Error::NotPsd {
            min_eigenvalue: smallest,
        });
    }
    let cutoff = tol.rank_cutoff(largest);
    let mut kraus: Vec<CMatrix> = e
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &v)| v > cutoff)
        .map(|(i, &v)| {
            let scaled: Vec<C64> = e.vector(i).iter().map(|z| z * v.sqrt()).collect();
            operator_from_choi_vector(&scaled, in_dim, out_dim)
        })
        .collect();
    if kraus.is_empty() {
        kraus.push(CMatrix::zeros(out_dim, in_dim));
    }
    CPMap::new(in_dim, out_dim, kraus)
}

/// A pure dilation `w: H -> K ⊗ E` of a CP map, with `E = C^(#Kraus)`.
#[derive(Debug, Clone)]
pub struct Purification {
    pub base: CPMap,
    pub env_dim: usize,
    pub w: CMatrix,
}

impl Purification {
    /// `(I_K ⊗ discard_E) ∘ double(w)`.
    pub fn discard_environment(&self) -> CPMap {
        let trace_env = tensor(
            &identity(self.base.out_dim).expect("out_dim >= 1"),
            &discard(self.env_dim).expect("env_dim >= 1"),
        );
        compose(&trace_env, &double(&self.w)).expect("dimensions agree by construction")
    }

    pub fn residual(&self) -> f64 {
        choi_distance(&self.discard_environment(), &self.base).expect("same dimensions")
    }

    /// `K_a = (I_K ⊗ <a|) w`.
    pub fn environment_component(&self, a: usize) -> CMatrix {
        let env = self.env_dim;
        CMatrix::from_fn(self.base.out_dim, self.base.in_dim, |o, i| self.w[(o * env + a, i)])
    }
}

/// `w = sum_a K_a ⊗ |a>`, environment index following the Kraus order.
pub fn purify(f: &CPMap) -> Purification {
    let env = f.kraus.len();
    let w = CMatrix::from_fn(f.out_dim * env, f.in_dim, |r, i| f.kraus[r % env][(r / env, i)]);
    Purification {
        base: f.clone(),
        env_dim: env,
        w,
    }
}

/// Coefficient `p >= 0` with `psi = p · f` for pure `psi`, `f`.
pub fn pure_proportionality(psi: &CPMap, f: &CPMap, tol: Tolerance) -> Result<f64> {
    if (psi.in_dim, psi.out_dim) != (f.in_dim, f.out_dim) {
        return Err(mismatch(
            "pure_proportionality",
            format!("{}->{}", f.in_dim, f.out_dim),
            format!("{}->{}", psi.in_dim, psi.out_dim),
        ));
    }
    let pv = is_pure(psi, tol)?;
    let fv = is_pure(f, tol)?;
    let psi_op = pv.operator.ok_or(Error::NotPure { rank: pv.rank })?;
    let f_op = fv.operator.ok_or(Error::NotPure { rank: fv.rank })?;
    let f_norm_sq = f_op.frobenius_norm().powi(2);
    let c = hs_inner(&f_op, &psi_op) / f_norm_sq;
    let residual = psi_op.distance(&f_op.scale(c));
    if residual > tol.atol * psi_op.frobenius_norm().max(1.0) {
        return Err(Error::NotProportional { residual });
    }
    Ok(c.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsometryCheck {
    pub passed: bool,
    pub residual: f64,
}

/// `||choi(f^† ∘ f) - choi(id)||_F` against `atol · in_dim`.
pub fn check_isometry(f: &CPMap, tol: Tolerance) -> Result<IsometryCheck> {
    let ff = compose(&dagger(f), f)?;
    let residual = choi_distance(&ff, &identity(f.in_dim.max(1))?)?;
    Ok(IsometryCheck {
        passed: residual <= tol.atol * f.in_dim as f64,
        residual,
    })
}

/// Completely depolarising channel on `C^n` with the generalised Pauli Kraus set.
pub fn depolarizing(n: usize) -> Result<CPMap> {
    check_nonzero(n)?;
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64);
    let scale = 1.0 / n as f64;
    let mut kraus = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            // X^a Z^b
            kraus.push(CMatrix::from_fn(n, n, |r, c| {
                if r == (c + a) % n {
                    omega(b * c) * scale
                } else {
                    ZERO
                }
            }));
        }
    }
    CPMap::new(n, n, kraus)
}
