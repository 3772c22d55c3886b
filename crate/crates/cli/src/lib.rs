pub mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use bfstab_core::fixtures::{generate, FixtureKind, FixtureSpec};
use bfstab_core::io::{parse_group, parse_tensor, tensor_to_json, AnyTensor, JsonScalar};
use bfstab_core::jumping::{detect, elementary_transform, DetectOptions, Kind, V0Rule};
use bfstab_core::nondegeneracy::{nondegenerate, Method, NondegeneracyOptions, Status};
use bfstab_core::scalar::parse_rational;
use bfstab_core::stabilizer::{classify, ClassifyOptions, StabClass};
use bfstab_core::{BoundaryTensor, Error, Format, Rational};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use report::{
    Consistency, InputInfo, JumpingOut, Report, StabOut, Timings, Tool, VerdictOut, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MALFORMED: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "bfstab",
    version,
    about = "Stabilizers, nondegeneracy and jumping hyperplanes of boundary-format tensors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Multistart budget of the numeric searches.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Acceptance tolerance of the numeric searches.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MethodArg {
    Exact,
    Numeric,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ModeArg {
    Strong,
    Weak,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Stabilizer dimension and class (checks nondegeneracy first).
    Classify {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Hyperdeterminant / fiber-map surjectivity verdict.
    Nondegenerate {
        file: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Strong or weak jumping hyperplanes.
    Jumping {
        file: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        slot: Option<usize>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Elementary transformation at a weak jumping hyperplane.
    Transform {
        file: PathBuf,
        /// Comma-separated covector, entries as `n/d` or decimals.
        #[arg(long)]
        xi: String,
        #[arg(long)]
        slot: usize,
    },
    /// Applies a group element file slot-wise.
    Act {
        file: PathBuf,
        #[arg(long)]
        group: PathBuf,
    },
    /// Generates a fixture tensor with its expectations.
    Make {
        /// identity, vandermonde, diagonal, nilpotent, random, degenerate_at_point or zero_slice.
        kind: String,
        #[arg(long)]
        k: String,
        #[arg(long)]
        nodes: Option<String>,
        /// Diagonal entries on the support, in storage order.
        #[arg(long)]
        entries: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Every analysis at once, with the cross-certificate check.
    Report {
        file: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
}

/// JSON for stdout plus the process exit code.
#[derive(Debug)]
pub struct Outcome {
    pub json: Value,
    pub code: i32,
}

impl Outcome {
    fn ok(json: Value) -> Self {
        Self {
            json,
            code: EXIT_OK,
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Malformed(_)
        | Error::Format(_)
        | Error::Shape(_)
        | Error::Singular { .. }
        | Error::Json(_) => EXIT_MALFORMED,
        Error::Precondition(_) | Error::ClassificationViolated(_) | Error::Infeasible(_) => {
            EXIT_PRECONDITION
        }
        Error::CanonicalizationUnverified(_) | Error::DiagonalizationFailed(_) => EXIT_INCONCLUSIVE,
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Error> {
    std::fs::read(path)
        .map_err(|e| Error::Malformed(format!("cannot read {}: {e}", path.display())))
}

fn text(bytes: &[u8]) -> Result<&str, Error> {
    std::str::from_utf8(bytes).map_err(|_| Error::Malformed("input is not UTF-8".into()))
}

/// Parses `n/d`, an integer, or a finite decimal such as `-0.125`, exactly.
pub fn parse_exact(s: &str) -> Option<Rational> {
    if let Some(q) = parse_rational(s) {
        return Some(q);
    }
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.')?;
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: num_bigint::BigInt = digits.parse().ok()?;
    let d = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
    let q = Rational::new(n, d);
    Some(if neg { -q } else { q })
}

fn parse_csv(s: &str) -> Result<Vec<Rational>, Error> {
    s.split(',')
        .map(|x| parse_exact(x).ok_or_else(|| Error::Malformed(format!("bad number {x:?}"))))
        .collect()
}

fn parse_k(s: &str) -> Result<Vec<usize>, Error> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::Malformed(format!("bad k entry {x:?}")))
        })
        .collect()
}

fn nondeg_options(search: &SearchArgs, method: Method) -> NondegeneracyOptions {
    let d = NondegeneracyOptions::default();
    NondegeneracyOptions {
        method,
        restarts: search.restarts.unwrap_or(d.restarts),
        tol_zero: search.tol.unwrap_or(d.tol_zero),
        seed: search.seed,
        ..d
    }
}

fn detect_options(search: &SearchArgs) -> DetectOptions {
    let d = DetectOptions::default();
    DetectOptions {
        restarts: search.restarts.unwrap_or(d.restarts),
        tol: search.tol.unwrap_or(d.tol),
        seed: search.seed,
        ..d
    }
}

macro_rules! dispatch {
    ($t:expr, $a:ident => $body:expr) => {
        match $t {
            AnyTensor::Rational($a) => $body,
            AnyTensor::Complex($a) => $body,
        }
    };
}

pub fn run(cli: &Cli) -> Result<Outcome, Error> {
    match &cli.command {
        Command::Classify { file, search } => {
            let t = parse_tensor(text(&read(file)?)?)?;
            dispatch!(t, a => classify_cmd(&a, search))
        }
        Command::Nondegenerate {
            file,
            method,
            search,
        } => {
            let t = parse_tensor(text(&read(file)?)?)?;
            let method = match method {
                None => Method::Auto,
                Some(MethodArg::Exact) => Method::Exact,
                Some(MethodArg::Numeric) => Method::Numeric,
            };
            dispatch!(t, a => nondegenerate_cmd(&a, &nondeg_options(search, method)))
        }
        Command::Jumping {
            file,
            mode,
            slot,
            search,
        } => {
            let t = parse_tensor(text(&read(file)?)?)?;
            let kind = match (mode, slot) {
                (ModeArg::Strong, _) => Kind::Strong,
                (ModeArg::Weak, Some(j)) => Kind::Weak(*j),
                (ModeArg::Weak, None) => {
                    return Err(Error::Malformed("--mode weak needs --slot".into()))
                }
            };
            let opts = detect_options(search);
            dispatch!(t, a => Ok(Outcome::ok(serde_json::to_value(JumpingOut::new(&detect(&a, kind, &opts)?))?)))
        }
        Command::Transform { file, xi, slot } => {
            let t = parse_tensor(text(&read(file)?)?)?;
            let xi = parse_csv(xi)?;
            dispatch!(t, a => transform_cmd(&a, &xi, *slot))
        }
        Command::Act { file, group } => {
            let t = parse_tensor(text(&read(file)?)?)?;
            let gtext = read(group)?;
            let gtext = text(&gtext)?;
            dispatch!(t, a => Ok(Outcome::ok(tensor_to_json(&a.act(&parse_group(gtext)?)?))))
        }
        Command::Make {
            kind,
            k,
            nodes,
            entries,
            seed,
        } => make_cmd(kind, k, nodes.as_deref(), entries.as_deref(), *seed),
        Command::Report { file, search } => {
            let bytes = read(file)?;
            let t = parse_tensor(text(&bytes)?)?;
            let report = dispatch!(t, a => build_report(&bytes, &a, search))?;
            let code = if !report.consistency.is_consistent() {
                EXIT_PRECONDITION
            } else if report.nondegeneracy.status == Status::Inconclusive.name() {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            Ok(Outcome {
                json: serde_json::to_value(report)?,
                code,
            })
        }
    }
}

fn classify_cmd<T: JsonScalar>(
    a: &BoundaryTensor<T>,
    search: &SearchArgs,
) -> Result<Outcome, Error> {
    let opts = ClassifyOptions {
        nondegeneracy: Some(nondeg_options(search, Method::Auto)),
    };
    let r = classify(a, &opts)?;
    let code = if r.nondegeneracy == Some(Status::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        json: serde_json::to_value(StabOut::new(&r))?,
        code,
    })
}

fn nondegenerate_cmd<T: JsonScalar>(
    a: &BoundaryTensor<T>,
    opts: &NondegeneracyOptions,
) -> Result<Outcome, Error> {
    let v = nondegenerate(a, opts)?;
    let code = if v.status == Status::Inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    Ok(Outcome {
        json: serde_json::to_value(VerdictOut::new(&v))?,
        code,
    })
}

fn transform_cmd<T: JsonScalar>(
    a: &BoundaryTensor<T>,
    xi: &[Rational],
    slot: usize,
) -> Result<Outcome, Error> {
    if xi.len() != a.format().dim(0) {
        return Err(Error::Malformed(format!(
            "--xi has {} entries, slot 0 has dimension {}",
            xi.len(),
            a.format().dim(0)
        )));
    }
    let xi: Vec<T> = xi.iter().map(T::from_rational).collect();
    let tr = elementary_transform(a, &xi, slot, V0Rule::default())?;
    let mut out = tensor_to_json(&tr.tensor);
    let vec = |v: &[T]| v.iter().map(JsonScalar::to_json).collect::<Vec<_>>();
    out["transform"] = json!({
        "slot": tr.j,
        "v0": vec(&tr.v0),
        "vj": vec(&tr.vj),
        "h": vec(&tr.h),
    });
    Ok(Outcome::ok(out))
}

fn make_cmd(
    kind: &str,
    k: &str,
    nodes: Option<&str>,
    entries: Option<&str>,
    seed: u64,
) -> Result<Outcome, Error> {
    let kind = FixtureKind::parse(kind)
        .ok_or_else(|| Error::Malformed(format!("unknown fixture kind {kind:?}")))?;
    let mut spec = FixtureSpec::new(kind, Format::new(parse_k(k)?)?, seed);
    spec.nodes = nodes.map(parse_csv).transpose()?;
    spec.entries = entries.map(parse_csv).transpose()?;
    let fx = generate(&spec)?;
    let mut out = tensor_to_json(&fx.tensor);
    out["expected"] = serde_json::to_value(&fx.expected)?;
    out["fixture"] = json!({ "kind": kind.name(), "k": spec.format.k(), "seed": seed });
    Ok(Outcome::ok(out))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn build_report<T: JsonScalar>(
    bytes: &[u8],
    a: &BoundaryTensor<T>,
    search: &SearchArgs,
) -> Result<Report, Error> {
    let start = Instant::now();
    a.format().require_unreduced()?;
    let t = Instant::now();
    let verdict = nondegenerate(a, &nondeg_options(search, Method::Auto))?;
    let nondegeneracy_ms = ms(t);

    let t = Instant::now();
    let (stabilizer, stabilizer_error) = if verdict.status.is_degenerate() {
        (
            None,
            Some(format!("input is degenerate ({})", verdict.status.name())),
        )
    } else {
        let mut r = classify(a, &ClassifyOptions::default())?;
        r.nondegeneracy = Some(verdict.status);
        r.warnings.retain(|w| w != "nondegeneracy not checked");
        if verdict.status == Status::NondegenerateProbable {
            r.warnings
                .push("nondegeneracy is probable (numeric), not certified".into());
        }
        (Some(r), None)
    };
    let stabilizer_ms = ms(t);

    let t = Instant::now();
    let opts = detect_options(search);
    let strong = detect(a, Kind::Strong, &opts)?;
    let mut jumping = vec![JumpingOut::new(&strong)];
    for j in 1..=a.format().p() {
        jumping.push(JumpingOut::new(&detect(a, Kind::Weak(j), &opts)?));
    }
    let jumping_ms = ms(t);

    let identity_flag = strong.identity_flag.unwrap_or(false);
    let class_is_sl2 = match (&stabilizer, verdict.status.is_nondegenerate()) {
        (Some(r), true) => Some(r.class == StabClass::SL2),
        _ => None,
    };
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: Tool::default(),
        input: InputInfo::new(bytes, a),
        seed: search.seed,
        nondegeneracy: VerdictOut::new(&verdict),
        stabilizer: stabilizer.as_ref().map(StabOut::new),
        stabilizer_error,
        jumping,
        consistency: Consistency::new(identity_flag, class_is_sl2),
        timings: Timings {
            nondegeneracy_ms,
            stabilizer_ms,
            jumping_ms,
            total_ms: ms(start),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_decimals() {
        assert_eq!(
            parse_exact("-0.125").unwrap(),
            Rational::new((-1).into(), 8.into())
        );
        assert_eq!(
            parse_exact("3/6").unwrap(),
            Rational::new(1.into(), 2.into())
        );
        assert_eq!(parse_exact("7").unwrap(), Rational::from_integer(7.into()));
        assert!(parse_exact("1e3").is_none());
        assert!(parse_exact(".").is_none());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Malformed(String::new())), EXIT_MALFORMED);
        assert_eq!(
            exit_code(&Error::Precondition(String::new())),
            EXIT_PRECONDITION
        );
        assert_eq!(
            exit_code(&Error::CanonicalizationUnverified(String::new())),
            EXIT_INCONCLUSIVE
        );
    }

    #[test]
    fn k_lists() {
        assert_eq!(parse_k("3, 1,2").unwrap(), vec![3, 1, 2]);
        assert!(parse_k("3,a").is_err());
    }
}
