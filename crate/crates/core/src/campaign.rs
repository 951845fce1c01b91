//! Seeded randomized verification campaigns.
//!
//! Each trial draws its own generator from `trial_seed(base_seed, index)`,
//! so trials are independent and can run in any order or concurrently. The
//! report lists trials sorted by index.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cpmap::{self, choi_distance, double, pure_proportionality, CPMap};
use crate::error::{Error, Result};
use crate::frobenius::{canonicity_check, law_residuals, proof_trace, random_classical_structure};
use crate::isometry::{
    decompose, decompose_oracle, environment_gram, purity_principle_residual, random_cp_isometry_with,
    recovery_residual, route_agreement,
};
use crate::parallel::{map_indexed, Execution};
use crate::tensor::{ginibre, seeded_rng, CMatrix, Tolerance, C64};

/// Largest admissible product of dimensions in a campaign.
pub const DIMENSION_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignKind {
    /// `theorem1`: CP isometries decompose into orthogonal doubled isometries.
    #[serde(rename = "theorem1")]
    IsometryDecomposition,
    /// `theorem2`: isometric comonoids are canonical.
    #[serde(rename = "theorem2")]
    ComonoidCanonicity,
    PurityPrinciple,
}

impl FromStr for CampaignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem1" => Ok(Self::IsometryDecomposition),
            "theorem2" => Ok(Self::ComonoidCanonicity),
            "purity-principle" => Ok(Self::PurityPrinciple),
            other => Err(Error::InvalidParameter(format!(
                "unknown campaign `{other}` (expected theorem1, theorem2 or purity-principle)"
            ))),
        }
    }
}

impl fmt::Display for CampaignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IsometryDecomposition => "theorem1",
            Self::ComonoidCanonicity => "theorem2",
            Self::PurityPrinciple => "purity-principle",
        })
    }
}

/// `(in, out, terms)` for CP-isometry campaigns, `(in, out, env)` for the
/// purity campaign, `n` for comonoid campaigns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimSpec {
    Triple(usize, usize, usize),
    Single(usize),
}

impl fmt::Display for DimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimSpec::Triple(a, b, c) => write!(f, "{a},{b},{c}"),
            DimSpec::Single(n) => write!(f, "{n}"),
        }
    }
}

/// Parse `"2,4,2;3,6,2"` or `"2;3;4"`; `;` and whitespace separate specs.
pub fn parse_dims(s: &str) -> Result<Vec<DimSpec>> {
    s.split(|c: char| c == ';' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|part| {
            let nums: std::result::Result<Vec<usize>, _> = part.split(',').map(|x| x.trim().parse::<usize>()).collect();
            match nums.map_err(|_| Error::InvalidParameter(format!("bad dimension spec `{part}`")))?[..] {
                [n] => Ok(DimSpec::Single(n)),
                [a, b, c] => Ok(DimSpec::Triple(a, b, c)),
                _ => Err(Error::InvalidParameter(format!(
                    "dimension spec `{part}` needs 1 or 3 entries"
                ))),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    pub kind: CampaignKind,
    pub trials: usize,
    pub dims: Vec<DimSpec>,
    pub seed: u64,
    pub tol: Tolerance,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one dimension spec is required".into(),
            ));
        }
        for d in &self.dims {
            let ok = match (self.kind, *d) {
                (CampaignKind::IsometryDecomposition, DimSpec::Triple(i, o, t)) => {
                    i >= 1 && t >= 1 && i * o <= DIMENSION_CAP && o >= i * t
                }
                (CampaignKind::PurityPrinciple, DimSpec::Triple(i, o, e)) => {
                    i >= 1 && o >= 1 && e >= 1 && i * o * e <= DIMENSION_CAP
                }
                (CampaignKind::ComonoidCanonicity, DimSpec::Single(n)) => n >= 1 && n * n <= DIMENSION_CAP,
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "dimension spec `{d}` is not valid for campaign {} (cap {DIMENSION_CAP})",
                    self.kind
                )));
            }
        }
        Ok(())
    }
}

/// Pass thresholds applied to every trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub sum_q_sq: f64,
    pub orthogonality: f64,
    pub reconstruction: f64,
    pub route_q: f64,
    pub route_choi: f64,
    pub recovery_gap: f64,
    pub recovery_q: f64,
    pub recovery_span: f64,
    /// Multiplied by the side length of the purity-principle operator.
    pub purity_operator_per_dim: f64,
    pub proportionality_sum: f64,
    pub laws: f64,
    pub extraction: f64,
    pub trace_identities: f64,
    pub r_positive: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sum_q_sq: 1e-9,
            orthogonality: 1e-8,
            reconstruction: 1e-8,
            route_q: 1e-8,
            route_choi: 1e-9,
            recovery_gap: 1e-3,
            recovery_q: 1e-8,
            recovery_span: 1e-7,
            purity_operator_per_dim: 1e-9,
            proportionality_sum: 1e-9,
            laws: 1e-9,
            extraction: 1e-9,
            trace_identities: 1e-8,
            r_positive: 1e-10,
        }
    }
}

/// splitmix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `trial_seed = mix64(base_seed ^ mix64(trial_index))`.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    mix64(base_seed ^ mix64(trial_index))
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub dims: DimSpec,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignReport {
    pub kind: CampaignKind,
    pub base_seed: u64,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failing_seed: Option<u64>,
    pub thresholds: Thresholds,
    /// Maximum of each metric over all trials.
    pub max: BTreeMap<String, f64>,
    /// Minimum of each metric over all trials.
    pub min: BTreeMap<String, f64>,
    pub results: Vec<TrialOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<u64>,
}

impl CampaignReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "campaign {}: {}/{} trials passed (base seed {})\n",
            self.kind, self.passed, self.trials, self.base_seed
        );
        if let Some(seed) = self.first_failing_seed {
            s.push_str(&format!("first failing trial seed: {seed}\n"));
        }
        for (k, v) in &self.max {
            s.push_str(&format!("  max {k:<28} {v:.3e}\n"));
        }
        s
    }
}

struct Trial {
    metrics: BTreeMap<String, f64>,
    failures: Vec<String>,
}

impl Trial {
    fn new() -> Self {
        Self {
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    /// Record `value` and fail unless `value <= bound`.
    fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.metrics.insert(name.to_string(), value);
        if value.is_nan() || value > bound {
            self.failures.push(format!("{name} = {value:.3e} exceeds {bound:.1e}"));
        }
    }

    fn at_least(&mut self, name: &str, value: f64, bound: f64) {
        self.metrics.insert(name.to_string(), value);
        if value.is_nan() || value <= bound {
            self.failures
                .push(format!("{name} = {value:.3e} not above {bound:.1e}"));
        }
    }

    fn require(&mut self, what: &str, ok: bool) {
        if !ok {
            self.failures.push(what.to_string());
        }
    }
}

pub fn run_campaign(config: &CampaignConfig, exec: Execution) -> Result<CampaignReport> {
    config.validate()?;
    let thresholds = Thresholds::default();
    let results = map_indexed(config.trials, exec, |index| {
        let seed = trial_seed(config.seed, index as u64);
        let dims = config.dims[index % config.dims.len()];
        let mut trial = Trial::new();
        let outcome = match config.kind {
            CampaignKind::IsometryDecomposition => decomposition_trial(dims, seed, config.tol, &thresholds, &mut trial),
            CampaignKind::ComonoidCanonicity => canonicity_trial(dims, seed, config.tol, &thresholds, &mut trial),
            CampaignKind::PurityPrinciple => purity_trial(dims, seed, config.tol, &thresholds, &mut trial),
        };
        if let Err(e) = outcome {
            trial.failures.push(e.to_string());
        }
        TrialOutcome {
            index,
            seed,
            dims,
            passed: trial.failures.is_empty(),
            metrics: trial.metrics,
            failure: (!trial.failures.is_empty()).then(|| trial.failures.join("; ")),
        }
    });

    let mut max: BTreeMap<String, f64> = BTreeMap::new();
    let mut min: BTreeMap<String, f64> = BTreeMap::new();
    for r in &results {
        for (k, &v) in &r.metrics {
            max.entry(k.clone()).and_modify(|m| *m = m.max(v)).or_insert(v);
            min.entry(k.clone()).and_modify(|m| *m = m.min(v)).or_insert(v);
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    Ok(CampaignReport {
        kind: config.kind,
        base_seed: config.seed,
        trials: config.trials,
        passed,
        failed: config.trials - passed,
        first_failing_seed: results.iter().find(|r| !r.passed).map(|r| r.seed),
        thresholds,
        max,
        min,
        results,
        generated_at: None,
    })
}

fn decomposition_trial(dims: DimSpec, seed: u64, tol: Tolerance, th: &Thresholds, t: &mut Trial) -> Result<()> {
    let DimSpec::Triple(in_dim, out_dim, terms) = dims else {
        return Err(Error::InvalidParameter(
            "theorem1 campaign needs (in, out, terms)".into(),
        ));
    };
    let inst = random_cp_isometry_with(in_dim, out_dim, terms, &mut seeded_rng(seed))?;
    let check = inst.map.check_isometry(tol)?;
    t.at_most("isometry_residual", check.residual, tol.atol * in_dim as f64);

    let gram = decompose(&inst.map, tol)?;
    t.at_most("sum_q_sq_gap", (gram.sum_q_sq() - 1.0).abs(), th.sum_q_sq);
    t.at_most("orthogonality", gram.orthogonality_residual, th.orthogonality);
    t.at_most("reconstruction", gram.reconstruction_residual, th.reconstruction);

    let oracle = decompose_oracle(&inst.map, tol)?;
    let agree = route_agreement(&gram, &oracle)?;
    t.at_most("route_q", agree.q_residual, th.route_q);
    t.at_most("route_choi", agree.choi_residual, th.route_choi);

    let p = inst.map.purify();
    let g = environment_gram(&p, tol);
    let side = (in_dim * p.env_dim) as f64;
    t.at_most(
        "purity_operator",
        purity_principle_residual(&p, &g),
        th.purity_operator_per_dim * side,
    );

    if inst.min_q_gap() > th.recovery_gap {
        let rec = recovery_residual(&gram, &inst.q, &inst.v, 0.5 * th.recovery_gap);
        t.at_most("recovery_q", rec.q_residual, th.recovery_q);
        t.at_most("recovery_span", rec.span_residual, th.recovery_span);
    }
    Ok(())
}

fn canonicity_trial(dims: DimSpec, seed: u64, tol: Tolerance, th: &Thresholds, t: &mut Trial) -> Result<()> {
    let DimSpec::Single(n) = dims else {
        return Err(Error::InvalidParameter("theorem2 campaign needs n".into()));
    };
    let c = random_classical_structure(n, &mut seeded_rng(seed))?;
    let laws = law_residuals(&c, tol)?;
    t.at_most("coassoc", laws.coassoc, th.laws);
    t.at_most("counit_left", laws.counit_left, th.laws);
    t.at_most("counit_right", laws.counit_right, th.laws);
    t.at_most("isometry", laws.isometry, th.laws);

    let report = canonicity_check(&c, tol)?;
    t.metrics
        .insert("delta_choi_rank".into(), report.delta_choi_rank as f64);
    t.metrics
        .insert("epsilon_choi_rank".into(), report.epsilon_choi_rank as f64);
    t.require("canonical verdict", report.canonical);
    t.require(
        "laws passed but structure impure",
        !(report.laws_pass && !report.canonical),
    );
    t.at_most(
        "extraction",
        report.extraction_residual.unwrap_or(f64::INFINITY),
        th.extraction,
    );
    t.at_most(
        "operator_laws",
        report.operator_law_residual.unwrap_or(f64::INFINITY),
        th.extraction,
    );

    let trace = proof_trace(&c, tol)?;
    t.at_most("q_dot_l_gap", (trace.q_dot_l - 1.0).abs(), th.trace_identities);
    t.at_most("q_dot_r_gap", (trace.q_dot_r - 1.0).abs(), th.trace_identities);
    let lr = trace
        .l_row
        .iter()
        .zip(&trace.r_row)
        .map(|(l, r)| (l - r).abs())
        .fold(0.0, f64::max);
    t.at_most("l_minus_r", lr, th.trace_identities);
    let r_min = trace.r_row.iter().copied().fold(f64::INFINITY, f64::min);
    t.at_least("r_min", r_min, th.r_positive);
    let witness = trace.dagger_witnesses.iter().map(|w| w.residual).fold(0.0, f64::max);
    t.at_most("witness_residual", witness, th.trace_identities);
    t.require(
        "witness indices",
        trace
            .dagger_witnesses
            .iter()
            .all(|w| w.i == w.i_prime && w.j == w.j_prime),
    );
    Ok(())
}

/// One instance of the sums form of the purity principle.
#[derive(Debug, Clone)]
pub struct PurityInstance {
    pub f: CMatrix,
    /// `w = f ⊗ φ`, a pure dilation whose discarded environment leaves `double(f)`.
    pub w: CMatrix,
    pub env_dim: usize,
    /// `|φ_a|^2`.
    pub planted: Vec<f64>,
}

impl PurityInstance {
    pub fn component(&self, a: usize) -> CPMap {
        let (out, inn) = (self.f.rows(), self.f.cols());
        let e = self.env_dim;
        double(&CMatrix::from_fn(out, inn, |o, i| self.w[(o * e + a, i)]))
    }

    /// Choi distance between `sum_a component(a)` and `double(f)`.
    pub fn hypothesis_residual(&self) -> Result<f64> {
        let parts: Vec<CPMap> = (0..self.env_dim).map(|a| self.component(a)).collect();
        let terms: Vec<(f64, &CPMap)> = parts.iter().map(|p| (1.0, p)).collect();
        choi_distance(&cpmap::sum(&terms)?, &double(&self.f))
    }
}

pub fn random_purity_instance<R: Rng + ?Sized>(
    in_dim: usize,
    out_dim: usize,
    env_dim: usize,
    rng: &mut R,
) -> PurityInstance {
    let f = ginibre(out_dim, in_dim, rng);
    let raw = ginibre(env_dim, 1, rng);
    let norm = raw.frobenius_norm();
    let phi: Vec<C64> = (0..env_dim).map(|a| raw[(a, 0)] / norm).collect();
    let w = CMatrix::from_fn(out_dim * env_dim, in_dim, |r, i| f[(r / env_dim, i)] * phi[r % env_dim]);
    PurityInstance {
        f,
        w,
        env_dim,
        planted: phi.iter().map(|z| z.norm_sqr()).collect(),
    }
}

fn purity_trial(dims: DimSpec, seed: u64, tol: Tolerance, th: &Thresholds, t: &mut Trial) -> Result<()> {
    let DimSpec::Triple(in_dim, out_dim, env_dim) = dims else {
        return Err(Error::InvalidParameter("purity-principle needs (in, out, env)".into()));
    };
    let inst = random_purity_instance(in_dim, out_dim, env_dim, &mut seeded_rng(seed));
    let f = double(&inst.f);
    t.at_most(
        "hypothesis",
        inst.hypothesis_residual()?,
        tol.atol * (1.0 + f.choi_norm()),
    );
    let mut total = 0.0;
    let mut worst = 0.0_f64;
    for a in 0..env_dim {
        let p = pure_proportionality(&inst.component(a), &f, tol)?;
        worst = worst.max((p - inst.planted[a]).abs());
        total += p;
    }
    t.at_most("p_sum_gap", (total - 1.0).abs(), th.proportionality_sum);
    t.at_most("p_recovery", worst, th.proportionality_sum);
    Ok(())
}
