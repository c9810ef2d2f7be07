//! The `fpnoise` command line.
//!
//! Four subcommands: `sample`, `attack`, `verify` and `complexity`. Each
//! writes one JSON document or a CSV table to standard output (or `--out`).
//!
//! Exit codes:
//!
//! | code | meaning                                               |
//! |------|-------------------------------------------------------|
//! | 0    | success; attack identified its target; checks passed  |
//! | 1    | runtime failure (entropy, I/O)                        |
//! | 2    | attack did not identify; a verification check failed |
//! | 64   | usage error or refused request                        |
//!
//! Without `--seed` all randomness comes from the secure source; with a
//! seed every command is byte-for-byte reproducible.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::attack::{
    brute_force_single_gaussian, expected_checks, gaussian_pair_attack, mironov_attack, AttackConfig,
    AttackStatus, QueryOracle, TraceStep, DEFAULT_CONFIRMATIONS, DEFAULT_MAX_QUERIES, DEFAULT_WINDOW,
    MAX_BRUTE_FORCE_PRECISION,
};
use crate::dist::{cdf, DistributionSpec};
use crate::error::Error;
use crate::sampler::{box_muller_pair, Family, Sampler, SamplerMethod};
use crate::stats::{ks_test, moments, Alpha, KsReport, MomentSummary};
use crate::urand::{BitSource, Precision, UniformSource};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Relative tolerance on the sample variance in `verify`.
pub const VARIANCE_TOLERANCE: f64 = 0.03;

#[derive(Debug, Parser)]
#[command(name = "fpnoise", version, about = "Floating-point-aware DP noise: sampling, attacks, verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw noise samples.
    Sample(SampleArgs),
    /// Run a candidate-elimination attack against a simulated mechanism.
    Attack(AttackArgs),
    /// Goodness-of-fit and moment checks for a sampler.
    Verify(VerifyArgs),
    /// Brute-force search cost for a single Box-Muller output.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Random bits per uniform variate (1..=53).
    #[arg(long, default_value_t = 53)]
    pub p: u32,
    /// Seed for a deterministic run. Omit for the secure source.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write output to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Sampler: naive-laplace, laplace-expdiff, laplace-sqsum, laplace-proddiff,
    /// laplace-theorem, laplace-theorem-symmetric, box-muller, secure-gaussian.
    #[arg(long)]
    pub method: String,
    /// Divisibility: n for secure-gaussian, m for laplace-sqsum/-proddiff.
    #[arg(long, visible_alias = "m")]
    pub n: Option<u32>,
    /// Privacy parameter; the noise scale becomes 1/epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackKind {
    Mironov,
    GaussianPair,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(value_enum)]
    pub attack: AttackKind,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Hidden value the simulated mechanism protects.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub target: f64,
    /// Comma-separated candidate values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,1")]
    pub candidates: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_QUERIES)]
    pub max_queries: u64,
    /// Queries the last survivor must pass before it is reported.
    #[arg(long, default_value_t = DEFAULT_CONFIRMATIONS)]
    pub confirmations: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Against {
    Laplace,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long, default_value_t = 100_000)]
    pub count: usize,
    /// Reference distribution. Defaults to the sampler's own family.
    #[arg(long, value_enum)]
    pub against: Option<Against>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Number of seeded Gaussian outputs to brute-force.
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: u64,
    /// Report only 2^(p - 1/2), skipping the search.
    #[arg(long)]
    pub theoretical_only: bool,
    #[command(flatten)]
    pub common: Common,
}

/// Failures mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(Error::Entropy(_)) | CliError::Io(_) => EXIT_FAILURE,
            CliError::Runtime(_) => EXIT_USAGE,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Rendered command output plus the exit code it implies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub text: String,
    pub exit_code: i32,
}

/// Parses `args` (program name first), runs the command and writes output.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let out_path = match &cli.command {
        Command::Sample(a) => a.common.out.clone(),
        Command::Attack(a) => a.common.out.clone(),
        Command::Verify(a) => a.common.out.clone(),
        Command::Complexity(a) => a.common.out.clone(),
    };
    let result = execute(&cli.command).and_then(|rendered| {
        match out_path {
            Some(path) => File::create(path)?.write_all(rendered.text.as_bytes())?,
            None => stdout.write_all(rendered.text.as_bytes())?,
        }
        Ok(rendered.exit_code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "fpnoise: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and renders its report.
pub fn execute(command: &Command) -> Result<Rendered, CliError> {
    match command {
        Command::Sample(args) => run_sample(args),
        Command::Attack(args) => run_attack(args),
        Command::Verify(args) => run_verify(args),
        Command::Complexity(args) => run_complexity(args),
    }
}

fn precision(bits: u32) -> Result<Precision, CliError> {
    Precision::new(bits).map_err(|e| usage(e.to_string()))
}

fn resolve_method(args: &MethodArgs) -> Result<SamplerMethod, CliError> {
    SamplerMethod::parse(&args.method, args.n).map_err(|e| match e {
        Error::UnknownMethod(m) => {
            usage(format!("unknown method `{m}`; expected one of {}", SamplerMethod::NAMES.join(", ")))
        }
        other => usage(format!("--n: {other}")),
    })
}

fn scale(epsilon: Option<f64>) -> Result<f64, CliError> {
    match epsilon {
        None => Ok(1.0),
        Some(e) if e > 0.0 && e.is_finite() => Ok(1.0 / e),
        Some(e) => Err(usage(format!("--epsilon must be positive and finite, got {e}"))),
    }
}

fn source(seed: Option<u64>) -> Result<BitSource, CliError> {
    Ok(BitSource::from_seed_option(seed)?)
}

fn noise_spec(family: Family, scale: f64) -> DistributionSpec {
    match family {
        Family::Laplace => DistributionSpec::Laplace { mu: 0.0, b: scale },
        Family::Gaussian => DistributionSpec::Gaussian { mu: 0.0, sigma: scale },
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// Shortest decimal that parses back to the same bits.
fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Serialize)]
pub struct SampleReport {
    pub command: &'static str,
    pub method: &'static str,
    pub family: Family,
    pub p: u32,
    pub n: Option<u32>,
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub scale: f64,
    pub count: usize,
    pub draws: Vec<f64>,
}

/// `fpnoise sample`.
pub fn run_sample(args: &SampleArgs) -> Result<Rendered, CliError> {
    let method = resolve_method(&args.method)?;
    let p = precision(args.common.p)?;
    let scale = scale(args.method.epsilon)?;
    let spec = noise_spec(method.family(), scale);
    let mut src = source(args.common.seed)?;
    let mut sampler = Sampler::new(method, p);
    let draws = (0..args.count)
        .map(|_| crate::dist::standardize(&spec, sampler.draw(&mut src)))
        .collect::<Result<Vec<_>, _>>()?;

    let report = SampleReport {
        command: "sample",
        method: method.name(),
        family: method.family(),
        p: p.bits(),
        n: method.divisibility(),
        seed: args.common.seed,
        epsilon: args.method.epsilon,
        scale,
        count: args.count,
        draws,
    };
    let text = match args.common.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = format!(
                "# method={},p={},n={},seed={},epsilon={}\nindex,value\n",
                report.method,
                report.p,
                fmt_opt(report.n),
                fmt_opt(report.seed),
                fmt_opt(report.epsilon.map(fmt_f64)),
            );
            for (i, x) in report.draws.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", fmt_f64(*x));
            }
            s
        }
    };
    Ok(Rendered { text, exit_code: EXIT_OK })
}

#[derive(Debug, Serialize)]
pub struct AttackReport {
    pub command: &'static str,
    pub attack: &'static str,
    pub method: &'static str,
    pub p: u32,
    pub n: Option<u32>,
    pub seed: Option<u64>,
    pub scale: f64,
    pub window: u64,
    pub confirmations: u64,
    pub max_queries: u64,
    pub candidates: Vec<f64>,
    pub identified: bool,
    #[serde(flatten)]
    pub status: AttackStatus,
    pub queries_used: u64,
    pub trace: Vec<TraceStep>,
}

/// `fpnoise attack`. Exits 0 when the target is identified, 2 otherwise.
pub fn run_attack(args: &AttackArgs) -> Result<Rendered, CliError> {
    let method = resolve_method(&args.method)?;
    let p = precision(args.common.p)?;
    let scale = scale(args.method.epsilon)?;
    if args.candidates.is_empty() || args.candidates.iter().any(|c| !c.is_finite()) {
        return Err(usage("--candidates needs one or more finite values"));
    }
    if !args.target.is_finite() {
        return Err(usage("--target must be finite"));
    }
    let config = AttackConfig {
        precision: p,
        window: args.window,
        max_queries: args.max_queries,
        confirmations: args.confirmations,
        scale,
    };
    let mut oracle = QueryOracle::new(args.target, method, p, scale, source(args.common.seed)?)?;
    let (name, outcome) = match args.attack {
        AttackKind::Mironov => ("mironov", mironov_attack(&mut oracle, &args.candidates, &config)?),
        AttackKind::GaussianPair => ("gaussian-pair", gaussian_pair_attack(&mut oracle, &args.candidates, &config)?),
    };
    let identified = outcome.identified().is_some();
    let report = AttackReport {
        command: "attack",
        attack: name,
        method: method.name(),
        p: p.bits(),
        n: method.divisibility(),
        seed: args.common.seed,
        scale,
        window: args.window,
        confirmations: args.confirmations,
        max_queries: args.max_queries,
        candidates: args.candidates.clone(),
        identified,
        status: outcome.status,
        queries_used: outcome.queries_used,
        trace: outcome.trace,
    };
    let text = match args.common.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let status = match report.status {
                AttackStatus::Identified { candidate } => format!("identified:{}", fmt_f64(candidate)),
                AttackStatus::AllEliminated => "all_eliminated".into(),
                AttackStatus::BudgetExhausted => "budget_exhausted".into(),
            };
            let mut s = format!(
                "# attack={},method={},p={},seed={},status={},queries_used={}\nstep,query,eliminated,remaining\n",
                report.attack,
                report.method,
                report.p,
                fmt_opt(report.seed),
                status,
                report.queries_used
            );
            for (i, step) in report.trace.iter().enumerate() {
                let join = |xs: &[f64]| xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";");
                let _ = writeln!(s, "{i},{},{},{}", join(&step.query), join(&step.eliminated), step.remaining);
            }
            s
        }
    };
    Ok(Rendered { text, exit_code: if identified { EXIT_OK } else { EXIT_NEGATIVE } })
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub command: &'static str,
    pub method: &'static str,
    pub against: &'static str,
    pub p: u32,
    pub n: Option<u32>,
    pub seed: Option<u64>,
    pub scale: f64,
    pub count: usize,
    pub ks: KsReport,
    pub moments: MomentSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// `fpnoise verify`. Exits 0 iff the KS test and the variance check pass.
pub fn run_verify(args: &VerifyArgs) -> Result<Rendered, CliError> {
    const MIN_COUNT: usize = 4;
    if args.count < MIN_COUNT {
        return Err(usage(format!("--count must be at least {MIN_COUNT} for moment checks")));
    }
    let method = resolve_method(&args.method)?;
    let p = precision(args.common.p)?;
    let scale = scale(args.method.epsilon)?;
    let family = match args.against {
        Some(Against::Laplace) => Family::Laplace,
        Some(Against::Gaussian) => Family::Gaussian,
        None => method.family(),
    };
    let sample_spec = noise_spec(method.family(), scale);
    let reference = noise_spec(family, scale);

    let mut src = source(args.common.seed)?;
    let mut sampler = Sampler::new(method, p);
    let mut xs = (0..args.count)
        .map(|_| crate::dist::standardize(&sample_spec, sampler.draw(&mut src)))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = moments(&xs)?;
    let ks = ks_test(&mut xs, |x| cdf(&reference, x).expect("valid spec"), Alpha::OnePercent)?;

    let expected = reference.variance();
    let (lower, upper) = (expected * (1.0 - VARIANCE_TOLERANCE), expected * (1.0 + VARIANCE_TOLERANCE));
    let checks = vec![
        Check { name: "ks", value: ks.statistic, lower: 0.0, upper: ks.critical, pass: ks.pass },
        Check {
            name: "variance",
            value: summary.variance,
            lower,
            upper,
            pass: (lower..=upper).contains(&summary.variance),
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        command: "verify",
        method: method.name(),
        against: match family {
            Family::Laplace => "laplace",
            Family::Gaussian => "gaussian",
        },
        p: p.bits(),
        n: method.divisibility(),
        seed: args.common.seed,
        scale,
        count: args.count,
        ks,
        moments: summary,
        checks,
        pass,
    };
    let text = match args.common.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = format!(
                "# method={},against={},p={},seed={},count={}\ncheck,value,lower,upper,pass\n",
                report.method,
                report.against,
                report.p,
                fmt_opt(report.seed),
                report.count
            );
            for c in &report.checks {
                let _ = writeln!(s, "{},{},{},{},{}", c.name, fmt_f64(c.value), fmt_f64(c.lower), fmt_f64(c.upper), c.pass);
            }
            s
        }
    };
    Ok(Rendered { text, exit_code: if pass { EXIT_OK } else { EXIT_NEGATIVE } })
}

#[derive(Debug, Serialize)]
pub struct EmpiricalChecks {
    pub draws: usize,
    pub window: u64,
    pub mean_checks: f64,
    pub ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct ComplexityReport {
    pub command: &'static str,
    pub p: u32,
    pub seed: Option<u64>,
    pub theoretical_checks: f64,
    pub theoretical_log2: f64,
    pub empirical: Option<EmpiricalChecks>,
}

/// Mean brute-force check count over `draws` cosine-branch outputs at `p`.
pub fn mean_brute_force_checks<S: UniformSource + ?Sized>(
    src: &mut S,
    p: Precision,
    draws: usize,
    window: u64,
) -> Result<f64, Error> {
    let mut total = 0u64;
    for _ in 0..draws {
        let u1 = src.next_uniform(p).value();
        let u2 = src.next_uniform(p).value();
        let n1 = box_muller_pair(u1, u2).0;
        total += brute_force_single_gaussian(n1, p, window)?.checks;
    }
    Ok(total as f64 / draws as f64)
}

/// `fpnoise complexity`.
pub fn run_complexity(args: &ComplexityArgs) -> Result<Rendered, CliError> {
    let p = precision(args.common.p)?;
    let theoretical = expected_checks(p);
    let empirical = if args.theoretical_only {
        None
    } else {
        if p.bits() > MAX_BRUTE_FORCE_PRECISION {
            return Err(usage(format!(
                "refusing an exhaustive search at p = {}: the limit is {MAX_BRUTE_FORCE_PRECISION}; \
                 use --theoretical-only",
                p.bits()
            )));
        }
        if args.count == 0 {
            return Err(usage("--count must be positive"));
        }
        let mut src = source(args.common.seed)?;
        let mean = mean_brute_force_checks(&mut src, p, args.count, args.window)?;
        Some(EmpiricalChecks { draws: args.count, window: args.window, mean_checks: mean, ratio: mean / theoretical })
    };
    let report = ComplexityReport {
        command: "complexity",
        p: p.bits(),
        seed: args.common.seed,
        theoretical_checks: theoretical,
        theoretical_log2: p.bits() as f64 - 0.5,
        empirical,
    };
    let text = match args.common.format {
        Format::Json => to_json(&report),
        Format::Csv => {
            let e = report.empirical.as_ref();
            format!(
                "p,seed,theoretical_checks,theoretical_log2,draws,mean_checks,ratio\n{},{},{},{},{},{},{}\n",
                report.p,
                fmt_opt(report.seed),
                fmt_f64(report.theoretical_checks),
                fmt_f64(report.theoretical_log2),
                fmt_opt(e.map(|e| e.draws)),
                fmt_opt(e.map(|e| fmt_f64(e.mean_checks))),
                fmt_opt(e.map(|e| fmt_f64(e.ratio))),
            )
        }
    };
    Ok(Rendered { text, exit_code: EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("fpnoise").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_method_is_usage_error() {
        let (code, _, err) = run_str(&["sample", "--method", "gauss", "--seed", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("unknown method"), "{err}");
    }

    #[test]
    fn zero_divisibility_is_usage_error() {
        let (code, _, _) = run_str(&["sample", "--method", "secure-gaussian", "--n", "0"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(run_str(&["sample"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["sample", "--method", "naive-laplace", "--p", "0"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["sample", "--method", "naive-laplace", "--epsilon", "-1"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["attack", "mironov", "--method", "naive-laplace", "--candidates", "0,x"]).0, EXIT_USAGE);
        assert_eq!(run_str(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn negative_candidates_parse() {
        let (code, out, _) = run_str(&[
            "attack", "mironov", "--method", "naive-laplace", "--candidates", "-1,2.5", "--target", "-1", "--seed", "3",
        ]);
        assert_eq!(code, EXIT_OK, "{out}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["candidate"], -1.0);
    }

    #[test]
    fn csv_round_trips_bits() {
        let (code, out, _) =
            run_str(&["sample", "--method", "laplace-theorem", "--count", "50", "--seed", "7", "--format", "csv"]);
        assert_eq!(code, EXIT_OK);
        let (_, json, _) = run_str(&["sample", "--method", "laplace-theorem", "--count", "50", "--seed", "7"]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        let from_json: Vec<f64> = v["draws"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        let from_csv: Vec<f64> =
            out.lines().skip(2).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(from_csv.len(), 50);
        for (a, b) in from_csv.iter().zip(&from_json) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
