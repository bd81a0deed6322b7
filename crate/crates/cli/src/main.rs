//! Batch front end: one experiment per invocation, one JSON report per run.
//!
//! Exit status: 0 on success, 2 when a verified property fails, 1 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cotci::ci_engine::{
    jump_dimension, jump_experiment, jump_parameters_generic, nonvanishing_witness, omega_cohomology, plane_curve_descent,
    structure_sheaf_cohomology, tilde_cohomology, CompleteIntersection, EngineError,
};
use cotci::fermat::{
    affine_form_from_numerator, base_locus_scan, genericity_probes, membership_negative_control, verify_glue,
    verify_kernel_membership, FermatError, FermatSystem, DEFAULT_SCAN_CAP,
};
use cotci::field::parse_scalar;
use cotci::poly::{parse_homog, parse_poly_file, HomogPoly};
use cotci::{Field, Fp, LambdaSetting, Rational as Q};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "cotci", version, about = "Exact cohomology experiments on complete intersections")]
struct Cli {
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Include basis vectors and classes in the report.
    #[arg(long, global = true)]
    basis: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(untagged)]
enum Command {
    /// Genus of a Fermat plane curve and the descent data of a holomorphic form.
    Curve(CurveArgs),
    /// Dimension of a cohomology group on a Fermat-type complete intersection.
    Cohomology(CohomologyArgs),
    /// Builds and checks the explicit nonvanishing class.
    Witness(WitnessArgs),
    /// Dimension jump in the two-parameter family of surfaces in P^4.
    Jump(JumpArgs),
    /// Checks the determinantal forms of a Fermat-type system.
    FermatVerify(FermatArgs),
    /// Finite-field scan of the base locus of the determinantal forms.
    Baselocus(BaselocusArgs),
    /// Monte Carlo rank checks over a large prime field.
    Probes(ProbesArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Curve(_) => "curve",
            Command::Cohomology(_) => "cohomology",
            Command::Witness(_) => "witness",
            Command::Jump(_) => "jump",
            Command::FermatVerify(_) => "fermat-verify",
            Command::Baselocus(_) => "baselocus",
            Command::Probes(_) => "probes",
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct CurveArgs {
    /// Degree of the Fermat curve Z0^e + Z1^e + Z2^e.
    #[arg(long, default_value_t = 4)]
    e: u32,
    /// Numerator of degree e - 3 (inline or a file path); defaults to Z0^(e-3).
    #[serde(rename = "P")]
    #[arg(long = "P")]
    p: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum GroupKind {
    /// Tilde-cotangent setting given by --sigma or --ell.
    Tilde,
    /// Symmetric powers of the cotangent bundle, --ell.
    Omega,
    /// Middle cohomology of the structure sheaf.
    Structure,
}

#[derive(Args, Debug, Serialize)]
struct CohomologyArgs {
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 2)]
    n: usize,
    /// Codimension; ignored when --degrees or --equations is given.
    #[arg(long, default_value_t = 1)]
    c: usize,
    /// Common degree of the Fermat-type equations.
    #[arg(long, default_value_t = 4)]
    e: u32,
    /// Per-equation degrees, overriding --c and --e.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<u32>>,
    /// File with one homogeneous equation per line, overriding the Fermat-type system.
    #[arg(long)]
    equations: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GroupKind::Tilde)]
    kind: GroupKind,
    /// Symmetric powers on the last level.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ell: Vec<u32>,
    /// Full setting in text form, e.g. "(N=4; e=5,5; L0=; L1=; L2=2)".
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    a: i64,
}

#[derive(Args, Debug, Serialize)]
struct WitnessArgs {
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long, default_value_t = 5)]
    e: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    a: i64,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    ell: Vec<u32>,
    #[arg(long)]
    sigma: Option<String>,
    /// Numerator (inline or a file path); defaults to 1.
    #[serde(rename = "P")]
    #[arg(long = "P")]
    p: Option<String>,
}

#[derive(Args, Debug, Serialize)]
struct JumpArgs {
    #[arg(long, default_value_t = 5)]
    e: u32,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fermat coefficients a0..a4.
    #[arg(long, value_delimiter = ',', num_args = 5, default_value = "1,2,3,4,5", allow_hyphen_values = true)]
    avec: Vec<i64>,
    /// Evaluate one parameter point (alpha1,alpha2) instead of the random experiment.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Option<Vec<String>>,
}

#[derive(Args, Debug, Serialize)]
struct FermatArgs {
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long, default_value_t = 1)]
    epsilon: u32,
    /// Exponent; defaults to the smallest allowed value.
    #[arg(long)]
    e: Option<u32>,
    #[arg(long, default_value_t = 0)]
    a: u32,
    /// Equation indices, 1-based, N - c of them; defaults to 1..N-c.
    #[serde(rename = "I")]
    #[arg(long = "I", value_delimiter = ',')]
    indices: Option<Vec<usize>>,
    /// Numerator (inline or a file path); defaults to Z0^deg.
    #[serde(rename = "P")]
    #[arg(long = "P")]
    p: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct BaselocusArgs {
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    c: usize,
    #[arg(long, default_value_t = 1)]
    epsilon: u32,
    #[arg(long)]
    e: Option<u32>,
    /// One of 11, 13, 31.
    #[arg(long, default_value_t = 11)]
    prime: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Replace the second coefficient tuple by the first.
    #[arg(long)]
    negative_control: bool,
}

#[derive(Args, Debug, Serialize)]
struct ProbesArgs {
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

/// Failure classes, mapped to exit codes 1 and 2.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Assertion(String, Value),
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::MembershipFailure(_) | EngineError::Identity(_) => Failure::Assertion(e.to_string(), Value::Null),
            other => usage(other),
        }
    }
}

impl From<FermatError> for Failure {
    fn from(e: FermatError) -> Self {
        match e {
            FermatError::Engine(inner) => inner.into(),
            other => usage(other),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn read_text(arg: &str) -> anyhow::Result<String> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        Ok(std::fs::read_to_string(path)?)
    } else {
        Ok(arg.to_string())
    }
}

fn parse_numerator(arg: Option<&str>, nvars: usize, degree: i64) -> Result<HomogPoly<Q>, Failure> {
    if degree < 0 {
        return Err(usage(anyhow!("the numerator would need negative degree {degree}")));
    }
    let p = match arg {
        Some(text) => parse_homog::<Q>(read_text(text).map_err(usage)?.trim(), Some(nvars)).map_err(usage)?,
        None => HomogPoly::monomial(cotci::poly::MultiIndex::unit(nvars, 0).with(0, degree as u32), Q::from_i64(1)),
    };
    if !p.is_zero() && p.degree() as i64 != degree {
        return Err(usage(anyhow!("numerator has degree {}, expected {degree}", p.degree())));
    }
    Ok(p)
}

fn check(ok: bool, what: &str, payload: &Value) -> Result<(), Failure> {
    if ok {
        Ok(())
    } else {
        Err(Failure::Assertion(what.to_string(), payload.clone()))
    }
}

fn run_curve(args: &CurveArgs) -> Outcome {
    if args.e < 3 {
        return Err(usage(anyhow!("--e must be at least 3")));
    }
    let ci = CompleteIntersection::<Q>::fermat_with_degrees(2, &[args.e])?;
    let sigma = LambdaSetting::top_level(2, vec![args.e], vec![1]).map_err(usage)?;
    let res = tilde_cohomology(&ci, &sigma, 0)?;
    let p = parse_numerator(args.p.as_deref(), 3, args.e as i64 - 3)?;
    let f = ci.equations()[0].clone();
    let descent = plane_curve_descent(&f, &p)?;
    let genus = (args.e as usize - 1) * (args.e as usize - 2) / 2;
    let out = json!({
        "equation": f.to_text(),
        "numerator": p.to_text(),
        "h0_dim": res.dim(),
        "expected_genus": genus,
        "descent": descent.to_json(),
        "all_verified": descent.all_verified(),
    });
    check(res.dim() == genus, "dimension differs from the genus", &out)?;
    check(descent.all_verified(), "a descent identity failed", &out)?;
    Ok(out)
}

fn load_equations(args: &CohomologyArgs) -> Result<CompleteIntersection<Q>, Failure> {
    if let Some(path) = &args.equations {
        let text = std::fs::read_to_string(path).map_err(usage)?;
        let eqs = parse_poly_file::<Q>(&text, Some(args.n + 1)).map_err(usage)?;
        return Ok(CompleteIntersection::new(args.n, eqs).map_err(usage)?);
    }
    let degrees = args.degrees.clone().unwrap_or_else(|| vec![args.e; args.c]);
    Ok(CompleteIntersection::fermat_with_degrees(args.n, &degrees).map_err(usage)?)
}

fn run_cohomology(args: &CohomologyArgs, with_basis: bool) -> Outcome {
    let ci = load_equations(args)?;
    let result = match args.kind {
        GroupKind::Structure => structure_sheaf_cohomology(&ci, args.a)?,
        GroupKind::Omega => {
            let sigma = LambdaSetting::top_level(ci.n_ambient(), ci.degrees(), args.ell.clone()).map_err(usage)?;
            if sigma.q() < 0 {
                return Err(usage(anyhow!("q = {} is negative for this setting; the method gives no information", sigma.q())));
            }
            omega_cohomology(&ci, &args.ell, args.a)?
        }
        GroupKind::Tilde => {
            let sigma = match &args.sigma {
                Some(text) => LambdaSetting::parse(text).map_err(usage)?,
                None => LambdaSetting::top_level(ci.n_ambient(), ci.degrees(), args.ell.clone()).map_err(usage)?,
            };
            if sigma.q() < 0 {
                return Err(usage(anyhow!("q = {} is negative for {sigma}; the method gives no information", sigma.q())));
            }
            tilde_cohomology(&ci, &sigma, args.a)?
        }
    };
    let mut out = result.to_json(with_basis)?;
    out["equations"] = json!(ci.equations().iter().map(|f| f.to_text()).collect::<Vec<_>>());
    let reverified = result.reverify(&ci)?;
    out["reverified"] = json!(reverified);
    check(reverified, "a basis vector fails a recorded constraint", &out)?;
    Ok(out)
}

fn run_witness(args: &WitnessArgs, with_basis: bool) -> Outcome {
    let ci = CompleteIntersection::<Q>::fermat_generic(args.n, args.c, args.e)?;
    let sigma = match &args.sigma {
        Some(text) => LambdaSetting::parse(text).map_err(usage)?,
        None => LambdaSetting::top_level(args.n, vec![args.e; args.c], args.ell.clone()).map_err(usage)?,
    };
    if sigma.q() < 0 {
        return Err(usage(anyhow!("q = {} is negative for {sigma}", sigma.q())));
    }
    let degree = cotci::ci_engine::witness_numerator_degree(&sigma, args.e, args.a)?;
    let p = match &args.p {
        Some(_) => parse_numerator(args.p.as_deref(), args.n + 1, degree)?,
        None if degree == 0 => HomogPoly::constant(args.n + 1, Q::from_i64(1)),
        None => parse_numerator(None, args.n + 1, degree)?,
    };
    let rep = nonvanishing_witness(&ci, &sigma, args.a, &p)?;
    let mut out = rep.to_json(with_basis)?;
    out["setting"] = json!(sigma.to_string());
    out["numerator"] = json!(p.to_text());
    check(!rep.degenerate, "the witness class is zero", &out)?;
    Ok(out)
}

fn parse_pair(values: &[String], flag: &str) -> Result<[Q; 2], Failure> {
    if values.len() != 2 {
        return Err(usage(anyhow!("--{flag} takes two comma-separated values")));
    }
    let parse = |s: &str| parse_scalar::<Q>(s).ok_or_else(|| usage(anyhow!("cannot parse {s:?} as a rational number")));
    Ok([parse(&values[0])?, parse(&values[1])?])
}

fn run_jump(args: &JumpArgs) -> Outcome {
    let avec: [i64; 5] = args.avec.clone().try_into().map_err(|_| usage(anyhow!("--avec takes five integers")))?;
    match (&args.alpha, &args.beta) {
        (Some(alpha), Some(beta)) => {
            let alpha = parse_pair(alpha, "alpha")?;
            let beta = parse_pair(beta, "beta")?;
            let av = avec.map(Q::from_i64);
            let generic = jump_parameters_generic(&alpha, &beta, &av);
            let (ambient, dim) = jump_dimension(args.e, alpha.clone(), beta.clone(), &av)?;
            Ok(json!({
                "e": args.e,
                "avec": avec,
                "alpha": alpha.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "beta": beta.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "generic": generic,
                "ambient_dim": ambient,
                "dim": dim,
            }))
        }
        (None, None) => {
            let rep = jump_experiment::<Q>(args.e, avec, args.trials, args.seed)?;
            let out = serde_json::to_value(&rep).map_err(usage)?;
            check(rep.dim_at_origin >= 1, "no jump at the origin", &out)?;
            check(rep.dims_at_random_parameters.iter().all(|p| p.dim == 0), "nonzero dimension at a random parameter", &out)?;
            Ok(out)
        }
        _ => Err(usage(anyhow!("--alpha and --beta must be given together"))),
    }
}

fn fermat_exponent(n: usize, epsilon: u32, a: u32, e: Option<u32>) -> u32 {
    e.unwrap_or_else(|| FermatSystem::<Q>::min_exponent(n, epsilon, a))
}

fn zero_based(indices: &[usize]) -> Result<Vec<usize>, Failure> {
    indices.iter().map(|&i| i.checked_sub(1).ok_or_else(|| usage(anyhow!("indices are 1-based")))).collect()
}

fn run_fermat(args: &FermatArgs) -> Outcome {
    if args.c == 0 || args.c >= args.n {
        return Err(usage(anyhow!("need 1 <= c <= N - 1")));
    }
    let e = fermat_exponent(args.n, args.epsilon, args.a, args.e);
    let sys = FermatSystem::<Q>::seeded(args.n, args.c, args.epsilon, e, args.seed)?;
    let n = sys.form_degree();
    let indices = match &args.indices {
        Some(list) => zero_based(list)?,
        None => (0..n).collect(),
    };
    let p = parse_numerator(args.p.as_deref(), args.n + 1, sys.numerator_degree(args.a))?;
    let membership = verify_kernel_membership(&sys, &indices, &p, args.a)?;
    let control = if membership.class_nonzero { Some(membership_negative_control(&sys, &indices, &p, args.a)?) } else { None };
    let glue = verify_glue(&sys, &indices, &p, args.a)?;
    let form = affine_form_from_numerator(&sys, &indices, &p, args.a)?;
    let w = form.vanishes_on_w();
    let glue_ok = glue.iter().all(|g| g.holds);
    let out = json!({
        "N": args.n,
        "c": args.c,
        "n": n,
        "epsilon": args.epsilon,
        "e": e,
        "a": args.a,
        "seed": args.seed,
        "indices": indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "numerator": p.to_text(),
        "coefficients": sys.coeffs().iter().map(|row| row.iter().map(|s| s.to_text()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "membership": membership,
        "negative_control": control,
        "glue": glue,
        "glue_all": glue_ok,
        "affine_form": {
            "terms": form.poly.num_terms(),
            "xi_degree": form.degree,
            "xi_homogeneous": form.is_xi_homogeneous(),
            "vanishes_on_w": w,
        },
    });
    check(membership.in_kernel, "kernel membership failed", &out)?;
    check(membership.class_nonzero, "the class is zero", &out)?;
    check(control.is_some_and(|c| !c.in_kernel), "the perturbed system still passes membership", &out)?;
    check(glue_ok, "overlap agreement failed", &out)?;
    check(w.iter().all(|&v| v) && form.is_xi_homogeneous(), "affine form does not vanish on W", &out)?;
    Ok(out)
}

fn scan_with<const P: u64>(args: &BaselocusArgs, e: u32) -> Outcome {
    let mut sys = FermatSystem::<Fp<P>>::seeded(args.n, args.c, args.epsilon, e, args.seed)?;
    if args.negative_control {
        if args.c < 2 {
            return Err(usage(anyhow!("the negative control needs c >= 2")));
        }
        let mut coeffs = sys.coeffs().to_vec();
        coeffs[1] = coeffs[0].clone();
        sys = FermatSystem::new(args.n, args.epsilon, e, coeffs)?;
    }
    let rep = base_locus_scan(&sys, args.seed, DEFAULT_SCAN_CAP)?;
    let out = serde_json::to_value(&rep).map_err(usage)?;
    check(rep.w_points_with_nonzero_form == 0, "a form is nonzero on W", &out)?;
    check(rep.nonzero_spot_failures == 0, "a NONZERO point has all forms vanishing", &out)?;
    Ok(out)
}

fn run_baselocus(args: &BaselocusArgs) -> Outcome {
    let e = fermat_exponent(args.n, args.epsilon, 0, args.e);
    match args.prime {
        11 => scan_with::<11>(args, e),
        13 => scan_with::<13>(args, e),
        31 => scan_with::<31>(args, e),
        p => Err(usage(anyhow!("--prime must be 11, 13 or 31, got {p}"))),
    }
}

fn run_probes(args: &ProbesArgs) -> Outcome {
    let rep = genericity_probes(args.trials, args.seed);
    let out = serde_json::to_value(&rep).map_err(usage)?;
    let clean = rep.determinantal.degeneracies == 0 && rep.claim_rank.degeneracies == 0 && rep.k_matrices.degeneracies == 0;
    check(clean, "a probe recorded a degeneracy", &out)?;
    Ok(out)
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Curve(a) => run_curve(a),
        Command::Cohomology(a) => run_cohomology(a, cli.basis),
        Command::Witness(a) => run_witness(a, cli.basis),
        Command::Jump(a) => run_jump(a),
        Command::FermatVerify(a) => run_fermat(a),
        Command::Baselocus(a) => run_baselocus(a),
        Command::Probes(a) => run_probes(a),
    }
}

fn emit(cli: &Cli, report: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let outcome = dispatch(&cli);
    let mut report = json!({
        "artifact_version": ARTIFACT_VERSION,
        "command": cli.command.name(),
        "parameters": serde_json::to_value(&cli.command).unwrap_or(Value::Null),
        "wall_time": 0.0,
    });
    let code = match outcome {
        Ok(result) => {
            report["status"] = json!("ok");
            report["result"] = result;
            0
        }
        Err(Failure::Assertion(msg, payload)) => {
            eprintln!("assertion failed: {msg}");
            report["status"] = json!("assertion_failed");
            report["message"] = json!(msg);
            report["result"] = if payload.is_null() { json!({}) } else { payload };
            2
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    report["wall_time"] = json!(start.elapsed().as_secs_f64());
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: cannot write the report: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
