//! Decomposition of CP isometries into pure isometries with orthogonal images.
//!
//! Every CP map `Φ` with `Φ^† ∘ Φ = id` equals `sum_i q_i · double(V_i)` with
//! `V_i^† V_j = δ_ij I`, `q_i > 0` and `sum_i q_i^2 = 1`. Two independent
//! routes recover the decomposition:
//!
//! * [`decompose`] purifies `Φ`, forms the normalised Gram matrix of the
//!   environment operators and diagonalises it;
//! * [`decompose_oracle`] diagonalises the Choi matrix directly.

use rand::Rng;
use serde::Serialize;

use crate::cpmap::{self, check_isometry, choi_vector, double, operator_from_choi_vector, purify, CPMap, Purification};
use crate::error::{Error, Result};
use crate::tensor::{
    eigh, haar_isometry, haar_unitary, hs_inner, isometry_residual, kron, seeded_rng, swap_matrix, CMatrix, Tolerance,
    C64,
};

/// The operator `g` underlying the purifying map on the environment.
#[derive(Debug, Clone)]
pub struct EnvironmentGram {
    /// `g[a, b] = Tr(K_b^† K_a) / in_dim`.
    pub g: CMatrix,
    /// `max_{a,b} ||K_b^† K_a - g[a, b] I||_F`.
    pub block_residual: f64,
}

pub fn environment_gram(p: &Purification, _tol: Tolerance) -> EnvironmentGram {
    let n = p.base.in_dim();
    let kraus = p.base.kraus();
    let r = p.env_dim;
    let g = CMatrix::from_fn(r, r, |a, b| hs_inner(&kraus[b], &kraus[a]) / n as f64);
    let id = CMatrix::identity(n);
    let mut block_residual = 0.0_f64;
    for a in 0..r {
        for b in 0..r {
            let block = &kraus[b].adjoint() * &kraus[a];
            block_residual = block_residual.max(block.distance(&id.scale(g[(a, b)])));
        }
    }
    EnvironmentGram { g, block_residual }
}

/// `M = (W^† ⊗ I_E) · swap_{E,E} · (W ⊗ I_E)` as an operator on `H ⊗ E`.
///
/// For a CP isometry this equals `I_H ⊗ g`.
pub fn purity_principle_operator(p: &Purification) -> CMatrix {
    let e = p.env_dim;
    let k = p.base.out_dim();
    let id_e = CMatrix::identity(e);
    let lift = kron(&p.w, &id_e);
    let swap = kron(&CMatrix::identity(k), &swap_matrix(e, e));
    &(&kron(&p.w.adjoint(), &id_e) * &swap) * &lift
}

/// `||M - I_H ⊗ g||_F`.
pub fn purity_principle_residual(p: &Purification, gram: &EnvironmentGram) -> f64 {
    let expected = kron(&CMatrix::identity(p.base.in_dim()), &gram.g);
    purity_principle_operator(p).distance(&expected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Gram,
    Choi,
}

#[derive(Debug, Clone)]
pub struct IsometryDecomposition {
    /// Positive coefficients, descending.
    pub q: Vec<f64>,
    pub v: Vec<CMatrix>,
    pub source: CPMap,
    pub reconstruction_residual: f64,
    pub orthogonality_residual: f64,
    pub route: Route,
}

impl IsometryDecomposition {
    pub fn sum_q_sq(&self) -> f64 {
        self.q.iter().map(|q| q * q).sum()
    }

    /// `sum_i q_i · double(V_i)`.
    pub fn reconstruction(&self) -> CPMap {
        let doubled: Vec<CPMap> = self.v.iter().map(double).collect();
        let terms: Vec<(f64, &CPMap)> = self.q.iter().copied().zip(doubled.iter()).collect();
        cpmap::sum(&terms).expect("terms share dimensions")
    }

    pub fn report(&self) -> DecompositionReport {
        DecompositionReport {
            q: self.q.clone(),
            v: self.v.clone(),
            sum_q_sq: self.sum_q_sq(),
            orthogonality_residual: self.orthogonality_residual,
            reconstruction_residual: self.reconstruction_residual,
            route: self.route,
        }
    }
}

/// JSON report of a decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub q: Vec<f64>,
    pub v: Vec<CMatrix>,
    pub sum_q_sq: f64,
    pub orthogonality_residual: f64,
    pub reconstruction_residual: f64,
    pub route: Route,
}

/// `max_{i,j} ||V_i^† V_j - δ_ij I||_F`.
pub fn orthogonality_residual(v: &[CMatrix]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, vi) in v.iter().enumerate() {
        for (j, vj) in v.iter().enumerate() {
            let gram = &vi.adjoint() * vj;
            let target = if i == j {
                CMatrix::identity(vi.cols())
            } else {
                CMatrix::zeros(vi.cols(), vj.cols())
            };
            worst = worst.max(gram.distance(&target));
        }
    }
    worst
}

fn gate_isometry(f: &CPMap, tol: Tolerance) -> Result<()> {
    let check = check_isometry(f, tol)?;
    if check.passed {
        Ok(())
    } else {
        Err(Error::NotIsometry {
            residual: check.residual,
        })
    }
}

fn lexicographic(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord.is_ne() {
            return ord;
        }
    }
    std::cmp::Ordering::Equal
}

/// Sort by descending `q`; within `atol`, by eigenvector entries.
fn order_components(mut parts: Vec<(f64, Vec<C64>, CMatrix)>, tol: Tolerance) -> (Vec<f64>, Vec<CMatrix>) {
    parts.sort_by(|a, b| {
        if (a.0 - b.0).abs() > tol.atol {
            b.0.total_cmp(&a.0)
        } else {
            lexicographic(&a.1, &b.1)
        }
    });
    parts.into_iter().map(|(q, _, v)| (q, v)).unzip()
}

fn finish(source: &CPMap, q: Vec<f64>, v: Vec<CMatrix>, route: Route, tol: Tolerance) -> Result<IsometryDecomposition> {
    let n = source.in_dim() as f64;
    let mut out = IsometryDecomposition {
        q,
        v,
        source: source.clone(),
        reconstruction_residual: 0.0,
        orthogonality_residual: 0.0,
        route,
    };
    out.orthogonality_residual = orthogonality_residual(&out.v);
    out.reconstruction_residual = cpmap::choi_distance(&out.reconstruction(), source)?;
    let sum_gap = (out.sum_q_sq() - 1.0).abs();
    if sum_gap > tol.atol {
        return Err(Error::DecompositionInvariant {
            which: "sum_q_sq",
            value: sum_gap,
        });
    }
    if out.orthogonality_residual > tol.atol * n {
        return Err(Error::DecompositionInvariant {
            which: "orthogonality",
            value: out.orthogonality_residual,
        });
    }
    if out.reconstruction_residual > tol.atol * (1.0 + source.choi_norm()) {
        return Err(Error::DecompositionInvariant {
            which: "reconstruction",
            value: out.reconstruction_residual,
        });
    }
    Ok(out)
}

/// Environment-operator route.
///
/// Purify, diagonalise `g = sum_i q_i |φ_i><φ_i|`, keep `q_i` above the rank
/// cutoff and set `V_i = q_i^{-1/2} sum_a <φ_i|a> K_a`.
pub fn decompose(f: &CPMap, tol: Tolerance) -> Result<IsometryDecomposition> {
    gate_isometry(f, tol)?;
    let p = purify(f);
    let gram = environment_gram(&p, tol);
    let bound = tol.atol * (1.0 + gram.g.frobenius_norm());
    if gram.block_residual > bound {
        return Err(Error::GramBlockFailure {
            residual: gram.block_residual,
            bound,
        });
    }
    let e = eigh(&gram.g, tol)?;
    let cutoff = tol.rank_cutoff(e.values.first().copied().unwrap_or(0.0));
    let parts = e
        .values
        .iter()
        .enumerate()
        .filter(|(_, &lambda)| lambda > cutoff)
        .map(|(i, &lambda)| {
            let phi = e.vector(i);
            let mut v = CMatrix::zeros(f.out_dim(), f.in_dim());
            for (a, k) in f.kraus().iter().enumerate() {
                v = &v + &k.scale(phi[a].conj());
            }
            (lambda, phi, v.scale_real(1.0 / lambda.sqrt()))
        })
        .collect();
    let (q, v) = order_components(parts, tol);
    finish(f, q, v, Route::Gram, tol)
}

/// Choi-spectral route: the Choi matrix of `sum_i q_i double(V_i)` has
/// eigenvalues `in_dim · q_i` with eigenvectors the Choi vectors of `V_i / sqrt(in_dim)`.
pub fn decompose_oracle(f: &CPMap, tol: Tolerance) -> Result<IsometryDecomposition> {
    gate_isometry(f, tol)?;
    let n = f.in_dim() as f64;
    let e = eigh(f.choi(), tol)?;
    let cutoff = tol.rank_cutoff(e.values.first().copied().unwrap_or(0.0));
    let mut parts = Vec::new();
    for (i, &lambda) in e.values.iter().enumerate() {
        if lambda <= cutoff {
            break;
        }
        let u = e.vector(i);
        let scaled: Vec<C64> = u.iter().map(|z| z * n.sqrt()).collect();
        let v = operator_from_choi_vector(&scaled, f.in_dim(), f.out_dim());
        let residual = isometry_residual(&v);
        if residual > tol.atol * n {
            return Err(Error::ReshapeNotIsometry { index: i, residual });
        }
        parts.push((lambda / n, u, v));
    }
    let (q, v) = order_components(parts, tol);
    finish(f, q, v, Route::Choi, tol)
}

/// Agreement between two decompositions of the same map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouteAgreement {
    /// Max difference between the sorted `q` lists (infinite when lengths differ).
    pub q_residual: f64,
    /// Choi distance between the two reconstructions.
    pub choi_residual: f64,
}

pub fn route_agreement(a: &IsometryDecomposition, b: &IsometryDecomposition) -> Result<RouteAgreement> {
    let q_residual = if a.q.len() == b.q.len() {
        sorted_desc(&a.q)
            .iter()
            .zip(sorted_desc(&b.q))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let choi_residual = cpmap::choi_distance(&a.reconstruction(), &b.reconstruction())?;
    Ok(RouteAgreement {
        q_residual,
        choi_residual,
    })
}

fn sorted_desc(q: &[f64]) -> Vec<f64> {
    let mut s = q.to_vec();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// A generated CP isometry with its planted decomposition.
#[derive(Debug, Clone)]
pub struct CpIsometryInstance {
    pub map: CPMap,
    pub q: Vec<f64>,
    pub v: Vec<CMatrix>,
}

impl CpIsometryInstance {
    /// Smallest gap between distinct planted coefficients (infinite for one term).
    pub fn min_q_gap(&self) -> f64 {
        let s = sorted_desc(&self.q);
        s.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min)
    }
}

/// Random CP isometry `C^in_dim -> C^out_dim` with `terms` orthogonal components.
///
/// The `V_i` are consecutive column blocks of one Haar isometry, `q` is
/// uniform on the positive orthant of the unit sphere, and the Kraus list is
/// a Haar-random unitary mixture of the `sqrt(q_i) V_i` so the decomposition
/// is not readable off the representation.
pub fn random_cp_isometry(in_dim: usize, out_dim: usize, terms: usize, seed: u64) -> Result<CpIsometryInstance> {
    random_cp_isometry_with(in_dim, out_dim, terms, &mut seeded_rng(seed))
}

pub fn random_cp_isometry_with<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    terms: usize,
    rng: &mut R,
) -> Result<CpIsometryInstance> {
    if in_dim == 0 || terms == 0 {
        return Err(Error::Infeasible("in_dim and terms must be at least 1".into()));
    }
    if out_dim < terms * in_dim {
        return Err(Error::Infeasible(format!(
            "{terms} orthogonal images of C^{in_dim} need out_dim >= {}, got {out_dim}",
            terms * in_dim
        )));
    }
    let u = haar_isometry(out_dim, terms * in_dim, rng)?;
    let v: Vec<CMatrix> = (0..terms)
        .map(|i| CMatrix::from_fn(out_dim, in_dim, |r, c| u[(r, i * in_dim + c)]))
        .collect();
    let mut q: Vec<f64> = (0..terms)
        .map(|_| {
            rng.sample::<f64, _>(rand_distr::StandardNormal)
                .abs()
                .max(f64::MIN_POSITIVE)
        })
        .collect();
    let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.iter_mut().for_each(|x| *x /= norm);

    let mix = haar_unitary(terms, rng);
    let kraus = (0..terms)
        .map(|a| {
            let mut k = CMatrix::zeros(out_dim, in_dim);
            for i in 0..terms {
                k = &k + &v[i].scale(mix[(a, i)] * q[i].sqrt());
            }
            k
        })
        .collect();
    Ok(CpIsometryInstance {
        map: CPMap::new(in_dim, out_dim, kraus)?,
        q,
        v,
    })
}

/// Orthogonal projector onto `span{V_i}` inside operator space, assuming
/// `<V_i, V_j> = in_dim · δ_ij`.
pub fn span_projector(v: &[CMatrix]) -> CMatrix {
    let first = &v[0];
    let n = first.cols() as f64;
    let dim = first.rows() * first.cols();
    let mut p = CMatrix::zeros(dim, dim);
    for vi in v {
        let w = choi_vector(vi);
        p = &p + &CMatrix::from_fn(dim, dim, |r, c| w[r] * w[c].conj() / n);
    }
    p
}

/// Group descending coefficients into blocks separated by more than `gap`.
pub fn q_blocks(q: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..q.len()).collect();
    idx.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in idx {
        match blocks.last_mut() {
            Some(block) if (q[*block.last().unwrap()] - q[i]).abs() <= gap => block.push(i),
            _ => blocks.push(vec![i]),
        }
    }
    for block in &mut blocks {
        block.sort_unstable();
    }
    blocks
}

/// Recovery of a planted decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecoveryResidual {
    pub q_residual: f64,
    pub span_residual: f64,
}

/// Compare a decomposition to planted `(q, V)` using only gauge-invariant
/// quantities: sorted coefficients and per-block span projectors.
pub fn recovery_residual(
    dec: &IsometryDecomposition,
    truth_q: &[f64],
    truth_v: &[CMatrix],
    block_gap: f64,
) -> RecoveryResidual {
    if dec.q.len() != truth_q.len() {
        return RecoveryResidual {
            q_residual: f64::INFINITY,
            span_residual: f64::INFINITY,
        };
    }
    let found = q_blocks(&dec.q, block_gap);
    let planted = q_blocks(truth_q, block_gap);
    let q_residual = sorted_desc(&dec.q)
        .iter()
        .zip(sorted_desc(truth_q))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if found.iter().map(Vec::len).ne(planted.iter().map(Vec::len)) {
        return RecoveryResidual {
            q_residual,
            span_residual: f64::INFINITY,
        };
    }
    let span_residual = found
        .iter()
        .zip(&planted)
        .map(|(fb, pb)| {
            let fv: Vec<CMatrix> = fb.iter().map(|&i| dec.v[i].clone()).collect();
            let pv: Vec<CMatrix> = pb.iter().map(|&i| truth_v[i].clone()).collect();
            span_projector(&fv).distance(&span_projector(&pv))
        })
        .fold(0.0, f64::max);
    RecoveryResidual {
        q_residual,
        span_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpmap::{depolarizing, identity, sum};
    use crate::tensor::{ONE, ZERO};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn block_embeddings() -> (CMatrix, CMatrix) {
        let v0 = CMatrix::from_fn(4, 2, |r, c| if r == c { ONE } else { ZERO });
        let v1 = CMatrix::from_fn(4, 2, |r, c| if r == c + 2 { ONE } else { ZERO });
        (v0, v1)
    }

    #[test]
    fn gram_of_orthogonal_family_is_diagonal() {
        let (v0, v1) = block_embeddings();
        let f = CPMap::new(2, 4, vec![v0.scale_real(0.8f64.sqrt()), v1.scale_real(0.6f64.sqrt())]).unwrap();
        let gram = environment_gram(&purify(&f), tol());
        assert!(gram.g.distance(&CMatrix::diag(&[0.8, 0.6])) <= 1e-15);
        assert!(gram.block_residual <= 1e-15);

        let gram = environment_gram(&purify(&identity(2).unwrap()), tol());
        assert_eq!(gram.g, CMatrix::identity(1));
        assert_eq!(gram.block_residual, 0.0);
    }

    #[test]
    fn depolarizing_gram_blocks_are_not_scalar() {
        // Pauli Kraus set K_a = P_a / 2: K_X^† K_Z = XZ / 4 is traceless with norm sqrt(2)/4.
        let gram = environment_gram(&purify(&depolarizing(2).unwrap()), tol());
        assert_abs_diff_eq!(gram.block_residual, 2f64.sqrt() / 4.0, epsilon = 1e-12);
        assert!(gram.block_residual > 0.1);
    }

    #[test]
    fn decompose_identity() {
        for dec in [
            decompose(&identity(2).unwrap(), tol()).unwrap(),
            decompose_oracle(&identity(2).unwrap(), tol()).unwrap(),
        ] {
            assert_eq!(dec.q.len(), 1);
            assert_abs_diff_eq!(dec.q[0], 1.0, epsilon = 1e-12);
            assert!(crate::tensor::phase_aligned_distance(&dec.v[0], &CMatrix::identity(2)) <= 1e-12);
        }
    }

    #[test]
    fn decompose_two_block_embedding() {
        let (v0, v1) = block_embeddings();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = sum(&[(s, &double(&v0)), (s, &double(&v1))]).unwrap();
        let gram = decompose(&phi, tol()).unwrap();
        let choi = decompose_oracle(&phi, tol()).unwrap();
        for dec in [&gram, &choi] {
            assert_eq!(dec.q.len(), 2);
            for q in &dec.q {
                assert_abs_diff_eq!(*q, s, epsilon = 1e-12);
            }
            assert!(dec.orthogonality_residual <= 1e-12);
            assert!(dec.reconstruction_residual <= 1e-12);
        }
        let agree = route_agreement(&gram, &choi).unwrap();
        assert!(agree.q_residual <= 1e-12 && agree.choi_residual <= 1e-12);
    }

    #[test]
    fn depolarizing_is_rejected() {
        assert!(matches!(
            decompose(&depolarizing(2).unwrap(), tol()),
            Err(Error::NotIsometry { .. })
        ));
        assert!(matches!(
            decompose_oracle(&depolarizing(2).unwrap(), tol()),
            Err(Error::NotIsometry { .. })
        ));
    }

    #[test]
    fn generator_examples() {
        let inst = random_cp_isometry(2, 4, 2, 9).unwrap();
        let check = check_isometry(&inst.map, tol()).unwrap();
        assert!(check.passed && check.residual <= 1e-10);

        let inst = random_cp_isometry(2, 2, 1, 9).unwrap();
        assert_abs_diff_eq!(inst.q[0], 1.0, epsilon = 1e-15);
        let pure = inst.map.is_pure(tol()).unwrap();
        assert!(pure.pure);
        assert!(isometry_residual(&pure.operator.unwrap()) <= 1e-12);

        assert!(matches!(random_cp_isometry(3, 6, 3, 0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn recovers_planted_decomposition() {
        let mut checked = 0;
        for seed in 0..20 {
            let inst = random_cp_isometry(2, 6, 3, seed).unwrap();
            if inst.min_q_gap() <= 1e-3 {
                continue;
            }
            checked += 1;
            let dec = decompose(&inst.map, tol()).unwrap();
            let rec = recovery_residual(&dec, &inst.q, &inst.v, 1e-6);
            assert!(rec.q_residual <= 1e-8, "seed {seed}: {rec:?}");
            assert!(rec.span_residual <= 1e-7, "seed {seed}: {rec:?}");
        }
        assert!(checked > 10);
    }

    #[test]
    fn purity_operator_matches_gram() {
        for seed in 0..5 {
            let inst = random_cp_isometry(2, 8, 3, seed).unwrap();
            let p = purify(&inst.map);
            let gram = environment_gram(&p, tol());
            assert!(purity_principle_residual(&p, &gram) <= 1e-12);
        }
        // Not an isometry: the identity fails.
        let p = purify(&depolarizing(2).unwrap());
        let gram = environment_gram(&p, tol());
        assert!(purity_principle_residual(&p, &gram) > 0.1);
    }

    #[test]
    fn q_blocks_groups_ties() {
        assert_eq!(q_blocks(&[0.5, 0.7, 0.5 + 1e-12], 1e-9), vec![vec![1], vec![0, 2]]);
    }

    #[test]
    fn report_shape() {
        let dec = decompose(&identity(2).unwrap(), tol()).unwrap();
        let json = serde_json::to_value(dec.report()).unwrap();
        assert_eq!(json["route"], "gram");
        assert_eq!(json["q"].as_array().unwrap().len(), 1);
        assert!(json["sum_q_sq"].is_number());
    }
}
