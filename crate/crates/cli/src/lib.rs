//! Command-line driver for `cpmkit`.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | I/O, schema, configuration, parse or evaluation error |
//! | 2 | `decompose`: input is not a CP isometry or a decomposition gate failed |
//! | 3 | `canonicity`: comonoid laws fail |
//! | 4 | `canonicity`: laws pass but the structure is impure |
//! | 5 | `verify`: at least one trial failed |
//! | 6 | `eval --against`/`--equation`: the equation does not hold |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cpmkit::campaign::{parse_dims, run_campaign, CampaignConfig, CampaignKind};
use cpmkit::cpmap::{depolarizing, CPMapRecord};
use cpmkit::dsl::{self, BindingRecord, Environment, EquationFile};
use cpmkit::frobenius::{
    canonicity_check, matrix_algebra_structure, mixture_structure, proof_trace, random_classical_structure,
    ComonoidCPM, ComonoidRecord, Verdict,
};
use cpmkit::isometry::{decompose, decompose_oracle, random_cp_isometry, route_agreement, IsometryDecomposition};
use cpmkit::parallel::Execution;
use cpmkit::tensor::{haar_unitary, seeded_rng};
use cpmkit::{CPMap, Error, Tolerance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_ISOMETRY: i32 = 2;
pub const EXIT_LAWS_FAILED: i32 = 3;
pub const EXIT_LAWS_PASSED_IMPURE: i32 = 4;
pub const EXIT_TRIAL_FAILED: i32 = 5;
pub const EXIT_EQUATION_FAILED: i32 = 6;

/// Environment variable overriding the default absolute tolerance.
pub const TOL_ENV: &str = "CPMKIT_TOL";

#[derive(Debug, Parser)]
#[command(
    name = "cpmkit",
    version,
    about = "Decompose CP isometries and check isometric comonoids"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Absolute tolerance (overrides CPMKIT_TOL).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Omit the `generated_at` field from reports.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a CP isometry into a weighted sum of doubled isometries.
    Decompose(DecomposeArgs),
    /// Check whether an isometric comonoid is canonical.
    Canonicity(CanonicityArgs),
    /// Run a seeded randomized verification campaign.
    Verify(VerifyArgs),
    /// Evaluate a diagram expression or check an equation.
    Eval(EvalArgs),
    /// Generate instances.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Gram,
    Choi,
    Both,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// CP map JSON file.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = RouteArg::Gram)]
    pub route: RouteArg,
}

#[derive(Debug, Args)]
pub struct CanonicityArgs {
    /// Comonoid JSON file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Include the proof trace.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// theorem1, theorem2 or purity-principle.
    #[arg(long)]
    pub campaign: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dimension specs, e.g. "2,4,2;3,6,2" or "2;3;4".
    #[arg(long)]
    pub dims: Option<String>,
    /// Report file (same as --out).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Run trials on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, conflicts_with_all = ["file", "equation"])]
    pub expr: Option<String>,
    /// File containing the expression.
    #[arg(long, conflicts_with = "equation")]
    pub file: Option<PathBuf>,
    /// Equation file `{"lhs": ..., "rhs": ...}`.
    #[arg(long)]
    pub equation: Option<PathBuf>,
    /// Environment JSON file.
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// File containing a right-hand side to compare against.
    #[arg(long, conflicts_with = "equation")]
    pub against: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Classical,
    MatrixAlgebra,
    CpIsometry,
    Mixture,
    Depolarizing,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub what: GenKind,
    /// Dimension for comonoids and channels.
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// `in,out,terms` for cp-isometry.
    #[arg(long)]
    pub dims: Option<String>,
    /// Weight of the first basis in a mixture.
    #[arg(long, default_value_t = 0.5)]
    pub weight: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the standard basis instead of a random one (classical).
    #[arg(long)]
    pub standard_basis: bool,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn error(message: impl Into<String>) -> Self {
        Self::new(EXIT_ERROR, message)
    }
}

type Outcome = std::result::Result<i32, Failure>;

/// Resolve the tolerance from the flag, then `CPMKIT_TOL`, then the default.
pub fn resolve_tolerance(flag: Option<f64>, env_value: Option<&str>) -> std::result::Result<Tolerance, Failure> {
    let atol = match (flag, env_value) {
        (Some(t), _) => Some(t),
        (None, Some(s)) => Some(
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::error(format!("{TOL_ENV}={s:?} is not a number")))?,
        ),
        (None, None) => None,
    };
    match atol {
        Some(a) => Tolerance::default()
            .with_atol(a)
            .map_err(|e| Failure::error(e.to_string())),
        None => Ok(Tolerance::default()),
    }
}

/// Parse `std::env::args`, run, print diagnostics; returns the exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: Cli) -> Outcome {
    let env_tol = std::env::var(TOL_ENV).ok();
    let tol = resolve_tolerance(cli.common.tol, env_tol.as_deref())?;
    let common = cli.common;
    match cli.command {
        Command::Decompose(a) => cmd_decompose(&a, &common, tol),
        Command::Canonicity(a) => cmd_canonicity(&a, &common, tol),
        Command::Verify(a) => cmd_verify(&a, &common, tol),
        Command::Eval(a) => cmd_eval(&a, &common, tol),
        Command::Gen(a) => cmd_gen(&a, &common),
    }
}

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::error(format!("cannot read {}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> std::result::Result<T, Failure> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Failure::error(format!("invalid JSON in {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| Failure::error(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::error(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

/// Serialise a JSON report, stamping it unless `--no-timestamp` is set.
fn render_json(mut value: Value, common: &Common) -> String {
    if !common.no_timestamp {
        if let Value::Object(map) = &mut value {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            map.insert("generated_at".into(), json!(secs));
        }
    }
    let mut s = serde_json::to_string_pretty(&value).expect("reports serialize");
    s.push('\n');
    s
}

fn emit(
    value: Value,
    text: impl FnOnce() -> String,
    common: &Common,
    path: Option<&Path>,
) -> std::result::Result<(), Failure> {
    let content = match common.format {
        Format::Json => render_json(value, common),
        Format::Text => text(),
    };
    write_output(path, &content)
}

fn decomposition_text(d: &IsometryDecomposition) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "route: {}", to_value(&d.route).as_str().unwrap_or_default());
    let _ = writeln!(s, "terms: {}", d.q.len());
    for (i, q) in d.q.iter().enumerate() {
        let _ = writeln!(s, "  q[{i}] = {q:.12}");
    }
    let _ = writeln!(s, "sum q^2 = {:.12}", d.sum_q_sq());
    let _ = writeln!(s, "orthogonality residual = {:.3e}", d.orthogonality_residual);
    let _ = writeln!(s, "reconstruction residual = {:.3e}", d.reconstruction_residual);
    s
}

fn decomposition_failure(e: Error) -> Failure {
    match e {
        Error::NotIsometry { .. }
        | Error::GramBlockFailure { .. }
        | Error::ReshapeNotIsometry { .. }
        | Error::DecompositionInvariant { .. } => Failure::new(EXIT_NOT_ISOMETRY, e.to_string()),
        other => Failure::error(other.to_string()),
    }
}

fn cmd_decompose(args: &DecomposeArgs, common: &Common, tol: Tolerance) -> Outcome {
    let rec: CPMapRecord = read_json(&args.input)?;
    let map = CPMap::from_record(rec, tol).map_err(|e| Failure::error(e.to_string()))?;
    let (value, text) = match args.route {
        RouteArg::Gram | RouteArg::Choi => {
            let d = if args.route == RouteArg::Gram {
                decompose(&map, tol)
            } else {
                decompose_oracle(&map, tol)
            }
            .map_err(decomposition_failure)?;
            (to_value(&d.report()), decomposition_text(&d))
        }
        RouteArg::Both => {
            let g = decompose(&map, tol).map_err(decomposition_failure)?;
            let c = decompose_oracle(&map, tol).map_err(decomposition_failure)?;
            let agree = route_agreement(&g, &c).map_err(|e| Failure::error(e.to_string()))?;
            let mut v = to_value(&g.report());
            v["oracle"] = to_value(&c.report());
            v["route_agreement"] = to_value(&agree);
            let text = format!(
                "{}cross-route q residual = {:.3e}\ncross-route Choi residual = {:.3e}\n",
                decomposition_text(&g),
                agree.q_residual,
                agree.choi_residual
            );
            (v, text)
        }
    };
    emit(value, || text, common, common.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_canonicity(args: &CanonicityArgs, common: &Common, tol: Tolerance) -> Outcome {
    let rec: ComonoidRecord = read_json(&args.input)?;
    let c = ComonoidCPM::from_record(rec, tol).map_err(|e| Failure::error(e.to_string()))?;
    let report = canonicity_check(&c, tol).map_err(|e| Failure::error(e.to_string()))?;
    let code = match report.verdict {
        Verdict::Canonical => EXIT_OK,
        Verdict::LawsFailed => EXIT_LAWS_FAILED,
        Verdict::LawsPassedImpure => EXIT_LAWS_PASSED_IMPURE,
    };
    let mut value = to_value(&report);
    let mut text = format!(
        "verdict: {}\nlaw residuals: coassoc {:.3e}, counit left {:.3e}, counit right {:.3e}, isometry {:.3e} (bound {:.1e})\nChoi ranks: delta {}, epsilon {}\n",
        to_value(&report.verdict).as_str().unwrap_or_default(),
        report.laws.coassoc,
        report.laws.counit_left,
        report.laws.counit_right,
        report.laws.isometry,
        report.law_bound,
        report.delta_choi_rank,
        report.epsilon_choi_rank,
    );
    if args.trace {
        if report.laws_pass {
            let trace = proof_trace(&c, tol).map_err(|e| Failure::error(e.to_string()))?;
            let _ = writeln!(
                text,
                "trace: q.l = {:.12}, q.r = {:.12}, {} witnesses",
                trace.q_dot_l,
                trace.q_dot_r,
                trace.dagger_witnesses.len()
            );
            value["trace"] = to_value(&trace);
        } else {
            value["trace"] = Value::Null;
            text.push_str("trace: skipped (laws fail)\n");
        }
    }
    emit(value, || text, common, common.out.as_deref())?;
    if code == EXIT_LAWS_PASSED_IMPURE {
        eprintln!("error: comonoid laws pass but the structure is not canonical");
    }
    Ok(code)
}

fn default_dims(kind: CampaignKind) -> &'static str {
    match kind {
        CampaignKind::IsometryDecomposition => "2,2,1;2,4,2;2,6,3;3,6,2;4,8,2",
        CampaignKind::ComonoidCanonicity => "2;3;4;5;6;7;8",
        CampaignKind::PurityPrinciple => "2,3,4;3,2,5;2,2,2",
    }
}

fn cmd_verify(args: &VerifyArgs, common: &Common, tol: Tolerance) -> Outcome {
    let config_err = |e: Error| Failure::error(e.to_string());
    let kind: CampaignKind = args.campaign.parse().map_err(config_err)?;
    let dims = parse_dims(args.dims.as_deref().unwrap_or(default_dims(kind))).map_err(config_err)?;
    let config = CampaignConfig {
        kind,
        trials: args.trials,
        dims,
        seed: args.seed,
        tol,
    };
    config.validate().map_err(config_err)?;
    let exec = if args.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let report = run_campaign(&config, exec).map_err(config_err)?;
    let path = args.report.as_deref().or(common.out.as_deref());
    emit(to_value(&report), || report.to_text(), common, path)?;
    match report.first_failing_seed {
        None => Ok(EXIT_OK),
        Some(seed) => {
            let first = report.results.iter().find(|r| !r.passed);
            let why = first.and_then(|r| r.failure.clone()).unwrap_or_default();
            eprintln!(
                "error: {} of {} trials failed; first failing seed {seed}: {why}",
                report.failed, report.trials
            );
            Ok(EXIT_TRIAL_FAILED)
        }
    }
}

fn load_environment(path: Option<&Path>, tol: Tolerance) -> std::result::Result<Environment, Failure> {
    match path {
        None => Ok(Environment::new()),
        Some(p) => {
            let records: BTreeMap<String, BindingRecord> = read_json(p)?;
            Environment::from_records(records, tol).map_err(|e| Failure::error(e.to_string()))
        }
    }
}

fn cmd_eval(args: &EvalArgs, common: &Common, tol: Tolerance) -> Outcome {
    let env = load_environment(args.env.as_deref(), tol)?;
    let dsl_err = |e: dsl::DslError| Failure::error(e.to_string());
    let (lhs, rhs) = if let Some(path) = &args.equation {
        let eq: EquationFile = read_json(path)?;
        (eq.lhs, Some(eq.rhs))
    } else {
        let lhs = match (&args.expr, &args.file) {
            (Some(e), _) => e.clone(),
            (None, Some(p)) => read_text(p)?,
            (None, None) => return Err(Failure::error("one of --expr, --file or --equation is required")),
        };
        let rhs = args.against.as_deref().map(read_text).transpose()?;
        (lhs, rhs)
    };
    match rhs {
        None => {
            let expr = dsl::parse(&lhs).map_err(|e| dsl_err(e.into()))?;
            let map = dsl::evaluate(&expr, &env).map_err(dsl_err)?;
            let text = format!(
                "{} -> {} with {} Kraus operators, Choi norm {:.6e}\n",
                map.in_dim(),
                map.out_dim(),
                map.num_kraus(),
                map.choi_norm()
            );
            emit(to_value(&map.to_record()), || text, common, common.out.as_deref())?;
            Ok(EXIT_OK)
        }
        Some(rhs) => {
            let check = dsl::check_equation(&lhs, &rhs, &env, tol).map_err(dsl_err)?;
            let text = format!(
                "holds: {}\nresidual: {:.3e}\nbound: {:.3e}\n",
                check.holds, check.residual, check.bound
            );
            emit(to_value(&check), || text, common, common.out.as_deref())?;
            Ok(if check.holds { EXIT_OK } else { EXIT_EQUATION_FAILED })
        }
    }
}

fn parse_triple(s: &str) -> std::result::Result<(usize, usize, usize), Failure> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Failure::error(format!("bad dimension triple `{s}`")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Failure::error(format!("expected `in,out,terms`, found `{s}`"))),
    }
}

fn truth_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".truth.json");
    PathBuf::from(name)
}

fn cmd_gen(args: &GenArgs, common: &Common) -> Outcome {
    let numeric = |e: Error| Failure::error(e.to_string());
    let mut rng = seeded_rng(args.seed);
    let tol = Tolerance::default();
    let out = common.out.as_deref();
    let stamp = |v: Value| {
        render_json(
            v,
            &Common {
                no_timestamp: true,
                ..common.clone()
            },
        )
    };
    let value = match args.what {
        GenKind::Classical => {
            let c = if args.standard_basis {
                cpmkit::frobenius::classical_structure(&cpmkit::CMatrix::identity(args.n), tol)
            } else {
                random_classical_structure(args.n, &mut rng)
            }
            .map_err(numeric)?;
            to_value(&c.to_record())
        }
        GenKind::MatrixAlgebra => to_value(&matrix_algebra_structure(args.n).map_err(numeric)?.to_record()),
        GenKind::Mixture => {
            if args.n < 1 {
                return Err(Failure::error("n must be at least 1"));
            }
            let b1 = haar_unitary(args.n, &mut rng);
            let b2 = haar_unitary(args.n, &mut rng);
            to_value(
                &mixture_structure(&b1, &b2, args.weight, tol)
                    .map_err(numeric)?
                    .to_record(),
            )
        }
        GenKind::Depolarizing => to_value(&depolarizing(args.n).map_err(numeric)?.to_record()),
        GenKind::CpIsometry => {
            let (i, o, t) = parse_triple(args.dims.as_deref().unwrap_or("2,4,2"))?;
            let inst = random_cp_isometry(i, o, t, args.seed).map_err(numeric)?;
            let truth = json!({ "q": inst.q, "v": inst.v });
            if let Some(p) = out {
                write_output(Some(&truth_path(p)), &stamp(truth))?;
            }
            to_value(&inst.map.to_record())
        }
    };
    // Instances are inputs, not reports: never stamped.
    write_output(out, &stamp(value))?;
    Ok(EXIT_OK)
}
