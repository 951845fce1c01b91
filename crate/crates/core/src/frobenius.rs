//! Isometric comonoids in the category of CP maps.
//!
//! A comonoid `(δ: H -> H ⊗ H, ε: H -> C)` is checked against the
//! coassociativity, counit and isometry laws. Every structure passing them
//! has pure `δ` and `ε`, so it is the doubling of an operator-level
//! comonoid; [`canonicity_check`] reports that verdict and extracts the
//! operators, and [`proof_trace`] records the numerical intermediates of
//! the argument (counit components, `l`/`r` coefficients, `t` tensor and
//! coassociativity witnesses).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cpmap::{self, choi_distance, compose, dagger, double, identity, is_pure, tensor, CPMap, CPMapRecord};
use crate::error::{mismatch, Error, Result};
use crate::isometry::decompose;
use crate::tensor::{
    eigh, haar_unitary, isometry_residual, kron, phase_aligned_distance, swap_matrix, CMatrix, Tolerance, C64, ONE,
    ZERO,
};

#[derive(Debug, Clone)]
pub struct ComonoidCPM {
    pub dim: usize,
    pub delta: CPMap,
    pub epsilon: CPMap,
}

/// JSON form: `{"dim": n, "delta": CPMap, "epsilon": CPMap}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComonoidRecord {
    pub dim: usize,
    pub delta: CPMapRecord,
    pub epsilon: CPMapRecord,
}

impl ComonoidCPM {
    pub fn new(dim: usize, delta: CPMap, epsilon: CPMap) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(
                "comonoid carrier must have dimension >= 1".into(),
            ));
        }
        if (delta.in_dim(), delta.out_dim()) != (dim, dim * dim) {
            return Err(mismatch(
                "comultiplication",
                format!("{dim}->{}", dim * dim),
                format!("{}->{}", delta.in_dim(), delta.out_dim()),
            ));
        }
        if (epsilon.in_dim(), epsilon.out_dim()) != (dim, 1) {
            return Err(mismatch(
                "counit",
                format!("{dim}->1"),
                format!("{}->{}", epsilon.in_dim(), epsilon.out_dim()),
            ));
        }
        Ok(Self { dim, delta, epsilon })
    }

    /// Doubling of an operator pair `(d, e)`.
    pub fn from_operators(d: &CMatrix, e: &CMatrix) -> Result<Self> {
        Self::new(d.cols(), double(d), double(e))
    }

    pub fn to_record(&self) -> ComonoidRecord {
        ComonoidRecord {
            dim: self.dim,
            delta: self.delta.to_record(),
            epsilon: self.epsilon.to_record(),
        }
    }

    pub fn from_record(rec: ComonoidRecord, tol: Tolerance) -> Result<Self> {
        Self::new(
            rec.dim,
            CPMap::from_record(rec.delta, tol)?,
            CPMap::from_record(rec.epsilon, tol)?,
        )
    }

    /// Comonoid on `H ⊗ K`: `δ = (id ⊗ swap ⊗ id) ∘ (δ_H ⊗ δ_K)`, `ε = ε_H ⊗ ε_K`.
    pub fn tensor(&self, other: &ComonoidCPM) -> ComonoidCPM {
        let (h, k) = (self.dim, other.dim);
        let shuffle = double(&kron(
            &kron(&CMatrix::identity(h), &swap_matrix(h, k)),
            &CMatrix::identity(k),
        ));
        let delta = compose(&shuffle, &tensor(&self.delta, &other.delta)).expect("dimensions agree");
        let epsilon = tensor(&self.epsilon, &other.epsilon);
        ComonoidCPM {
            dim: h * k,
            delta,
            epsilon,
        }
    }

    /// Multiply `δ` by a CP scalar.
    pub fn scale_delta(&self, s: f64) -> Result<ComonoidCPM> {
        Ok(ComonoidCPM {
            dim: self.dim,
            delta: self.delta.scale(s)?,
            epsilon: self.epsilon.clone(),
        })
    }
}

impl Serialize for ComonoidCPM {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(serializer)
    }
}

/// Choi-Frobenius distances between the two sides of each law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawResiduals {
    pub coassoc: f64,
    pub counit_left: f64,
    pub counit_right: f64,
    pub isometry: f64,
}

impl LawResiduals {
    pub fn max(&self) -> f64 {
        self.coassoc
            .max(self.counit_left)
            .max(self.counit_right)
            .max(self.isometry)
    }

    /// Pass threshold is `atol · dim`.
    pub fn pass(&self, dim: usize, tol: Tolerance) -> bool {
        self.max() <= law_bound(dim, tol)
    }
}

pub fn law_bound(dim: usize, tol: Tolerance) -> f64 {
    tol.atol * dim as f64
}

/// The four laws as `(name, lhs, rhs)` CP maps.
pub fn law_sides(c: &ComonoidCPM) -> Result<Vec<(&'static str, CPMap, CPMap)>> {
    let id = identity(c.dim)?;
    let (delta, eps) = (&c.delta, &c.epsilon);
    Ok(vec![
        (
            "coassoc",
            compose(&tensor(delta, &id), delta)?,
            compose(&tensor(&id, delta), delta)?,
        ),
        ("counit_left", compose(&tensor(eps, &id), delta)?, id.clone()),
        ("counit_right", compose(&tensor(&id, eps), delta)?, id.clone()),
        ("isometry", compose(&dagger(delta), delta)?, id),
    ])
}

pub fn law_residuals(c: &ComonoidCPM, _tol: Tolerance) -> Result<LawResiduals> {
    let sides = law_sides(c)?;
    let d: Vec<f64> = sides
        .iter()
        .map(|(_, l, r)| choi_distance(l, r))
        .collect::<Result<_>>()?;
    Ok(LawResiduals {
        coassoc: d[0],
        counit_left: d[1],
        counit_right: d[2],
        isometry: d[3],
    })
}

/// Optional extra: `(δ^† ⊗ id) ∘ (id ⊗ δ)` against `δ ∘ δ^†`. Not part of the canonicity verdict.
pub fn frobenius_law_residual(c: &ComonoidCPM) -> Result<f64> {
    let id = identity(c.dim)?;
    let lhs = compose(&tensor(&dagger(&c.delta), &id), &tensor(&id, &c.delta))?;
    let rhs = compose(&c.delta, &dagger(&c.delta))?;
    choi_distance(&lhs, &rhs)
}

/// Copying operators `(d, e)` of an orthonormal basis given as columns.
pub fn classical_operators(basis: &CMatrix) -> (CMatrix, CMatrix) {
    let n = basis.rows();
    let mut d = CMatrix::zeros(n * n, n);
    let mut e = CMatrix::zeros(1, n);
    for i in 0..n {
        let u = CMatrix::from_fn(n, 1, |r, _| basis[(r, i)]);
        d = &d + &(&kron(&u, &u) * &u.adjoint());
        e = &e + &u.adjoint();
    }
    (d, e)
}

fn unitary_gate(basis: &CMatrix, tol: Tolerance) -> Result<()> {
    if !basis.is_square() {
        return Err(mismatch(
            "basis",
            "square matrix",
            format!("{}x{}", basis.rows(), basis.cols()),
        ));
    }
    let residual = isometry_residual(basis);
    if residual > tol.atol * basis.rows().max(1) as f64 {
        return Err(Error::NonUnitaryBasis { residual });
    }
    Ok(())
}

/// The basis-copying comonoid of an orthonormal basis, doubled.
pub fn classical_structure(basis: &CMatrix, tol: Tolerance) -> Result<ComonoidCPM> {
    unitary_gate(basis, tol)?;
    let (d, e) = classical_operators(basis);
    ComonoidCPM::from_operators(&d, &e)
}

pub fn random_classical_structure<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComonoidCPM> {
    classical_structure(&haar_unitary(n, rng), Tolerance::default())
}

/// Operators of the special comultiplication on the `n x n` matrix algebra,
/// carried by `C^(n^2)` with basis `E_ab` at index `a*n + b`.
///
/// The raw comultiplication `E_ad ↦ sum_b E_ab ⊗ E_bd` is rescaled so that
/// `d^† d = I`, and the trace functional is rescaled so that the counit law
/// holds; both constants are measured rather than assumed.
pub fn matrix_algebra_operators(n: usize) -> Result<(CMatrix, CMatrix)> {
    if n == 0 {
        return Err(Error::InvalidDimension("matrix algebra needs n >= 1".into()));
    }
    let dim = n * n;
    let mut d = CMatrix::zeros(dim * dim, dim);
    for a in 0..n {
        for dd in 0..n {
            for b in 0..n {
                d[((a * n + b) * dim + (b * n + dd), a * n + dd)] = ONE;
            }
        }
    }
    let dd_gram = &d.adjoint() * &d;
    let s = dd_gram.trace().re / dim as f64;
    let speciality = dd_gram.distance(&CMatrix::identity(dim).scale_real(s));
    if speciality > 1e-12 * s {
        return Err(Error::ProportionalityFailed {
            step: "matrix algebra speciality".into(),
            residual: speciality,
        });
    }
    let d = d.scale_real(1.0 / s.sqrt());

    let e = CMatrix::from_fn(1, dim, |_, j| if j % (n + 1) == 0 { ONE } else { ZERO });
    let x = &kron(&e, &CMatrix::identity(dim)) * &d;
    let c = x.trace() / dim as f64;
    let unit = x.distance(&CMatrix::identity(dim).scale(c));
    if unit > 1e-12 {
        return Err(Error::ProportionalityFailed {
            step: "matrix algebra counit".into(),
            residual: unit,
        });
    }
    Ok((d, e.scale(ONE / c)))
}

pub fn matrix_algebra_structure(n: usize) -> Result<ComonoidCPM> {
    let (d, e) = matrix_algebra_operators(n)?;
    ComonoidCPM::from_operators(&d, &e)
}

/// Distance between two bases after the best per-column phase and column
/// matching.
pub fn basis_distance(b1: &CMatrix, b2: &CMatrix) -> f64 {
    let overlap = &b1.adjoint() * b2;
    (0..b2.cols())
        .map(|j| {
            let best = (0..b1.cols()).map(|i| overlap[(i, j)].norm()).fold(0.0, f64::max);
            2.0 * (1.0 - best).max(0.0)
        })
        .sum::<f64>()
        .sqrt()
}

/// `w · double(d_1) + (1 - w) · double(d_2)`, and likewise for the counit.
///
/// A negative instance: for `w < 1` the laws fail.
pub fn mixture_structure(b1: &CMatrix, b2: &CMatrix, w: f64, tol: Tolerance) -> Result<ComonoidCPM> {
    unitary_gate(b1, tol)?;
    unitary_gate(b2, tol)?;
    if b1.shape() != b2.shape() {
        return Err(mismatch("mixture bases", b1.rows(), b2.rows()));
    }
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mixture weight must lie in (0, 1], got {w}"
        )));
    }
    let distance = basis_distance(b1, b2);
    if distance <= 0.1 {
        return Err(Error::BasesCoincide { distance });
    }
    let (d1, e1) = classical_operators(b1);
    let (d2, e2) = classical_operators(b2);
    let delta = cpmap::sum(&[(w, &double(&d1)), (1.0 - w, &double(&d2))])?;
    let epsilon = cpmap::sum(&[(w, &double(&e1)), (1.0 - w, &double(&e2))])?;
    ComonoidCPM::new(b1.rows(), delta, epsilon)
}

/// Operator-level law residuals of a pair `(d, e)` in fHilb.
pub fn operator_law_residual(d: &CMatrix, e: &CMatrix) -> f64 {
    let n = d.cols();
    let id = CMatrix::identity(n);
    let coassoc = (&kron(d, &id) * d).distance(&(&kron(&id, d) * d));
    let left = (&kron(e, &id) * d).distance(&id);
    let right = (&kron(&id, e) * d).distance(&id);
    coassoc.max(left).max(right).max(isometry_residual(d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Canonical,
    LawsFailed,
    /// Laws pass but a Choi rank exceeds one.
    LawsPassedImpure,
}

#[derive(Debug, Clone, Serialize)]
pub struct CanonicityReport {
    pub laws: LawResiduals,
    pub law_bound: f64,
    pub laws_pass: bool,
    pub delta_choi_rank: usize,
    pub epsilon_choi_rank: usize,
    pub canonical: bool,
    pub verdict: Verdict,
    pub extracted_d: Option<CMatrix>,
    pub extracted_e: Option<CMatrix>,
    pub extraction_residual: Option<f64>,
    pub operator_law_residual: Option<f64>,
    pub frobenius_law_residual: f64,
}

pub fn canonicity_check(c: &ComonoidCPM, tol: Tolerance) -> Result<CanonicityReport> {
    let laws = law_residuals(c, tol)?;
    let bound = law_bound(c.dim, tol);
    let laws_pass = laws.max() <= bound;
    let dv = is_pure(&c.delta, tol)?;
    let ev = is_pure(&c.epsilon, tol)?;
    let (mut extracted_d, mut extracted_e, mut extraction_residual, mut operator_residual) = (None, None, None, None);
    if let (Some(d), Some(e)) = (dv.operator, ev.operator) {
        let x = &kron(&e, &CMatrix::identity(c.dim)) * &d;
        let tr = x.trace();
        let e = if tr.norm() > 0.0 {
            e.scale(tr.conj() / tr.norm())
        } else {
            e
        };
        let residual = choi_distance(&double(&d), &c.delta)?.max(choi_distance(&double(&e), &c.epsilon)?);
        operator_residual = Some(operator_law_residual(&d, &e));
        extraction_residual = Some(residual);
        extracted_d = Some(d);
        extracted_e = Some(e);
    }
    let pure = dv.rank == 1 && ev.rank == 1;
    let canonical = pure && laws_pass;
    let verdict = match (laws_pass, pure) {
        (false, _) => Verdict::LawsFailed,
        (true, true) => Verdict::Canonical,
        (true, false) => Verdict::LawsPassedImpure,
    };
    Ok(CanonicityReport {
        laws,
        law_bound: bound,
        laws_pass,
        delta_choi_rank: dv.rank,
        epsilon_choi_rank: ev.rank,
        canonical,
        verdict,
        extracted_d,
        extracted_e,
        extraction_residual,
        operator_law_residual: operator_residual,
        frobenius_law_residual: frobenius_law_residual(c)?,
    })
}

/// A weighted pure effect `ν · double(e)` with `||e|| = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct EffectComponent {
    pub weight: f64,
    pub effect: CMatrix,
}

/// Coassociativity witness: `(I ⊗ V_j) V_i ≈ (V_i' ⊗ I) V_j'` up to phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DaggerWitness {
    pub i: usize,
    pub j: usize,
    pub i_prime: usize,
    pub j_prime: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProofTrace {
    pub q: Vec<f64>,
    pub v: Vec<CMatrix>,
    pub epsilon_components: Vec<EffectComponent>,
    /// `l[i][k] = ν_k |c|^2` with `(e_k ⊗ I) V_i = c I`.
    pub l: Vec<Vec<f64>>,
    /// `r[i][k] = ν_k |c|^2` with `(I ⊗ e_k) V_i = c I`.
    pub r: Vec<Vec<f64>>,
    pub l_row: Vec<f64>,
    pub r_row: Vec<f64>,
    /// `t[i][j][k][l] = |c|^2` with `((V_k ⊗ I) V_l)^† (I ⊗ V_j) V_i = c I`.
    pub t: Vec<Vec<Vec<Vec<f64>>>>,
    pub dagger_witnesses: Vec<DaggerWitness>,
    /// Largest proportionality residual met in any step.
    pub max_proportionality_residual: f64,
    pub q_dot_l: f64,
    pub q_dot_r: f64,
}

/// Scalar `c` with `x ≈ c I`, gated on the residual.
fn proportional_to_identity(
    x: &CMatrix,
    step: impl FnOnce() -> String,
    tol: Tolerance,
    worst: &mut f64,
) -> Result<C64> {
    let n = x.rows();
    let c = x.trace() / n as f64;
    let residual = x.distance(&CMatrix::identity(n).scale(c));
    *worst = worst.max(residual);
    if residual > tol.atol * n as f64 * x.frobenius_norm().max(1.0) {
        return Err(Error::ProportionalityFailed { step: step(), residual });
    }
    Ok(c)
}

pub fn proof_trace(c: &ComonoidCPM, tol: Tolerance) -> Result<ProofTrace> {
    let laws = law_residuals(c, tol)?;
    let bound = law_bound(c.dim, tol);
    if laws.max() > bound {
        return Err(Error::LawsFailed {
            max_residual: laws.max(),
            bound,
        });
    }
    let n = c.dim;
    let id = CMatrix::identity(n);
    let gate = tol.atol * n as f64;
    let mut worst = 0.0_f64;

    // Decompose the comultiplication into doubled isometries.
    let dec = decompose(&c.delta, tol)?;
    let (q, v) = (dec.q, dec.v);
    let m = q.len();

    // Counit as a sum of non-zero pure effects.
    let eps = eigh(c.epsilon.choi(), tol)?;
    let cutoff = tol.rank_cutoff(eps.values.first().copied().unwrap_or(0.0));
    let components: Vec<EffectComponent> = eps
        .values
        .iter()
        .enumerate()
        .take_while(|(_, &nu)| nu > cutoff)
        .map(|(k, &nu)| {
            let u = eps.vector(k);
            EffectComponent {
                weight: nu,
                effect: CMatrix::from_fn(1, n, |_, j| u[j]),
            }
        })
        .collect();

    let mut l = vec![vec![0.0; components.len()]; m];
    let mut r = vec![vec![0.0; components.len()]; m];
    for (i, vi) in v.iter().enumerate() {
        for (k, comp) in components.iter().enumerate() {
            let left = &kron(&comp.effect, &id) * vi;
            let cl = proportional_to_identity(&left, || format!("left counit (i={i}, k={k})"), tol, &mut worst)?;
            l[i][k] = comp.weight * cl.norm_sqr();
            let right = &kron(&id, &comp.effect) * vi;
            let cr = proportional_to_identity(&right, || format!("right counit (i={i}, k={k})"), tol, &mut worst)?;
            r[i][k] = comp.weight * cr.norm_sqr();
        }
    }
    let l_row: Vec<f64> = l.iter().map(|row| row.iter().sum()).collect();
    let r_row: Vec<f64> = r.iter().map(|row| row.iter().sum()).collect();
    let q_dot_l: f64 = q.iter().zip(&l_row).map(|(a, b)| a * b).sum();
    let q_dot_r: f64 = q.iter().zip(&r_row).map(|(a, b)| a * b).sum();

    // Both sides of coassociativity, term by term.
    let lhs: Vec<Vec<CMatrix>> = v
        .iter()
        .map(|vi| v.iter().map(|vj| &kron(&id, vj) * vi).collect())
        .collect();
    let rhs: Vec<Vec<CMatrix>> = v
        .iter()
        .map(|vk| v.iter().map(|vl| &kron(vk, &id) * vl).collect())
        .collect();

    let mut t = vec![vec![vec![vec![0.0; m]; m]; m]; m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for ll in 0..m {
                    let overlap = &rhs[k][ll].adjoint() * &lhs[i][j];
                    let coeff = proportional_to_identity(
                        &overlap,
                        || format!("t tensor (i={i}, j={j}, k={k}, l={ll})"),
                        tol,
                        &mut worst,
                    )?;
                    t[i][j][k][ll] = coeff.norm_sqr();
                }
            }
        }
    }

    let mut witnesses = Vec::with_capacity(m * m);
    for (i, lhs_row) in lhs.iter().enumerate() {
        for (j, target) in lhs_row.iter().enumerate() {
            let mut best = (0, 0, f64::INFINITY);
            for (ip, rhs_row) in rhs.iter().enumerate() {
                for (jp, candidate) in rhs_row.iter().enumerate() {
                    let d = phase_aligned_distance(target, candidate);
                    if d < best.2 {
                        best = (ip, jp, d);
                    }
                }
            }
            witnesses.push(DaggerWitness {
                i,
                j,
                i_prime: best.0,
                j_prime: best.1,
                residual: best.2,
            });
        }
    }

    let trace = ProofTrace {
        q,
        v,
        epsilon_components: components,
        l,
        r,
        l_row,
        r_row,
        t,
        dagger_witnesses: witnesses,
        max_proportionality_residual: worst,
        q_dot_l,
        q_dot_r,
    };
    trace.check_invariants(gate, tol)?;
    Ok(trace)
}

impl ProofTrace {
    fn check_invariants(&self, gate: f64, tol: Tolerance) -> Result<()> {
        let fail = |which: String, value: f64| Err(Error::TraceInvariant { which, value });
        if (self.q_dot_l - 1.0).abs() > gate {
            return fail("sum_i q_i l_i = 1".into(), self.q_dot_l);
        }
        if (self.q_dot_r - 1.0).abs() > gate {
            return fail("sum_i q_i r_i = 1".into(), self.q_dot_r);
        }
        for (i, (l, r)) in self.l_row.iter().zip(&self.r_row).enumerate() {
            if (l - r).abs() > gate {
                return fail(format!("l_{i} = r_{i}"), (l - r).abs());
            }
            if *r <= tol.rank_rel {
                return fail(format!("r_{i} > 0"), *r);
            }
        }
        for (i, block) in self.t.iter().enumerate() {
            for (j, kl) in block.iter().enumerate() {
                let largest = kl.iter().flatten().copied().fold(0.0, f64::max);
                if largest <= tol.rank_cutoff(1.0) {
                    return fail(format!("t_{i}{j}kl not all zero"), largest);
                }
            }
        }
        for w in &self.dagger_witnesses {
            if w.i_prime != w.i || w.j_prime != w.j || w.residual > gate {
                return fail(
                    format!("witness ({}, {}) -> ({}, {})", w.i, w.j, w.i_prime, w.j_prime),
                    w.residual,
                );
            }
        }
        Ok(())
    }
}
