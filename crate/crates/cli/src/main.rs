//! `kuznetsov`: batch evaluation of the SL(3) Kuznetsov kernels and the
//! verification suite.
//!
//! Output is JSON lines on stdout, one record per result, in a fixed order.
//! Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.

mod config;
mod record;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use kuznetsov_core::kernel::{evaluate, KernelKind, Route};
use kuznetsov_core::kloosterman::{s_weyl, CharIndex, Modulus};
use kuznetsov_core::kuznetsov::{geometric_sum, GeometricConfig, KernelForm, TestFunction, TransformConfig};
use kuznetsov_core::mb::whittaker_wstar;
use kuznetsov_core::series::SeriesPolicy;
use kuznetsov_core::verify::{self, Suite};
use kuznetsov_core::{Error, SpectralParams, WeylElement};
use rayon::prelude::*;
use serde_json::{json, Value};

use config::{parse_precision, FileConfig};
use record::ResultRecord;

#[derive(Parser)]
#[command(name = "kuznetsov", version, about = "SL(3) Kuznetsov weight kernels and Kloosterman sums")]
struct Cli {
    /// Worker threads; defaults to the config file, then KUZNETSOV_THREADS, then all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with tolerances and quadrature settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Report measured wall times. Off by default so reruns are byte-identical.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a kernel at one point or on a grid.
    Kernel(KernelArgs),
    /// Run verification suites; exit 1 if any check fails.
    Verify {
        /// One of the suite names, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Evaluate a Kloosterman sum S_w(ψ_m, ψ_n; c).
    Kloosterman {
        #[arg(long)]
        w: String,
        #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
        m: (i64, i64),
        #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
        n: (i64, i64),
        #[arg(long, value_parser = parse_moduli)]
        c: (u64, u64),
    },
    /// Evaluate the completed Whittaker function W*(y, μ).
    Whittaker {
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        y: (f64, f64),
        #[command(flatten)]
        mu: MuArgs,
    },
    /// Truncated geometric sum with one record per (c, ε) term.
    Geometric(GeometricArgs),
}

#[derive(Args)]
struct MuArgs {
    /// Imaginary parts (t1, t2) of a tempered μ = (i t1, i t2, −i(t1 + t2)).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0.4,0.1")]
    mu: (f64, f64),
    /// General μ as re1,im1,re2,im2; overrides --mu.
    #[arg(long, value_parser = parse_quad, allow_hyphen_values = true)]
    mu_complex: Option<[f64; 4]>,
}

impl MuArgs {
    fn params(&self) -> SpectralParams {
        match self.mu_complex {
            Some(a) => SpectralParams::from_array(a),
            None => SpectralParams::imaginary(self.mu.0, self.mu.1),
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    /// jwl, jw4, kwl, kwl-signed or kw4.
    #[arg(long)]
    kind: String,
    /// series, mb or auto.
    #[arg(long, default_value = "auto")]
    route: String,
    #[command(flatten)]
    mu: MuArgs,
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    y: Option<(f64, f64)>,
    #[arg(long, allow_hyphen_values = true)]
    y1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y2: Option<f64>,
    /// start,stop,count with linear spacing; grids run y1-major.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    y1_range: Option<Axis>,
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    y2_range: Option<Axis>,
    /// Relative truncation tolerance of the series.
    #[arg(long)]
    tolerance: Option<f64>,
    /// auto, double or dd.
    #[arg(long)]
    precision: Option<String>,
    /// Write CSV instead of JSON lines.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct GeometricArgs {
    /// wl, w4 or w5.
    #[arg(long)]
    w: String,
    #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
    m: (i64, i64),
    #[arg(long, value_parser = parse_ints, allow_hyphen_values = true)]
    n: (i64, i64),
    #[arg(long)]
    cmax: u64,
    /// Gaussian center (t1, t2) of the test function; repeatable.
    #[arg(long = "center", value_parser = parse_pair, allow_hyphen_values = true)]
    centers: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 0.5)]
    width: f64,
    /// Weight representation: j or k.
    #[arg(long, default_value = "j")]
    form: String,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    fn numeric(message: impl Into<String>) -> Failure {
        Failure { code: 1, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::Domain(_)
            | Error::Constraint(_)
            | Error::SignMismatch(_)
            | Error::DegenerateMu(_)
            | Error::Pole(_)
            | Error::Divisibility(..)
            | Error::UnsupportedWeyl(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<Vec<_>, _>>().and_then(|v| {
        if v.iter().all(|x| x.is_finite()) {
            Ok(v)
        } else {
            Err("values must be finite".into())
        }
    })
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_floats(s)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn parse_quad(s: &str) -> Result<[f64; 4], String> {
    parse_floats(s)?.try_into().map_err(|_| format!("expected re1,im1,re2,im2, got {s:?}"))
}

fn parse_ints(s: &str) -> Result<(i64, i64), String> {
    let v: Vec<i64> = s.split(',').map(|p| p.trim().parse().map_err(|e| format!("{p:?}: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => Err(format!("expected two comma-separated integers, got {s:?}")),
    }
}

fn parse_moduli(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = parse_ints(s)?;
    if a < 1 || b < 1 {
        return Err(format!("moduli must be positive, got {s:?}"));
    }
    Ok((a as u64, b as u64))
}

/// Grid coordinates along one axis.
#[derive(Clone, Debug)]
struct Axis(Vec<f64>);

/// Expands start,stop,count into `count` evenly spaced values.
fn parse_range(s: &str) -> Result<Axis, String> {
    let v = parse_floats(s)?;
    let [a, b, n] = v[..] else {
        return Err(format!("expected start,stop,count, got {s:?}"));
    };
    if n < 1.0 || n.fract() != 0.0 || n > 1e6 {
        return Err(format!("count must be a positive integer, got {n}"));
    }
    let n = n as usize;
    if n == 1 {
        return Ok(Axis(vec![a]));
    }
    Ok(Axis((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()))
}

fn mu_json(mu: &SpectralParams) -> Value {
    json!(mu.to_array())
}

struct Context {
    file: FileConfig,
    timing: bool,
}

impl Context {
    fn stamp(&self, mut r: ResultRecord, start: Instant) -> ResultRecord {
        if self.timing {
            r.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        }
        r
    }
}

/// Buffered output that refuses to write a record holding NaN.
struct Output {
    buf: Vec<u8>,
}

impl Output {
    fn record(&mut self, r: &ResultRecord) -> Result<(), Failure> {
        if let Some(msg) = r.non_finite() {
            return Err(Failure::numeric(msg));
        }
        writeln!(self.buf, "{}", r.to_json()).expect("writing to memory");
        Ok(())
    }

    fn line(&mut self, v: &Value) {
        writeln!(self.buf, "{v}").expect("writing to memory");
    }
}

fn kernel_points(a: &KernelArgs, kind: KernelKind) -> Result<Vec<(f64, f64)>, Failure> {
    let y1s = match (&a.y1_range, a.y1, a.y) {
        (Some(r), None, None) => r.0.clone(),
        (None, Some(v), None) => vec![v],
        (None, None, Some(p)) => vec![p.0],
        (None, None, None) => return Err(Failure::usage("give y1 through --y, --y1 or --y1-range")),
        _ => return Err(Failure::usage("--y, --y1 and --y1-range are mutually exclusive")),
    };
    if kind.is_w4() {
        if a.y2.is_some() || a.y2_range.is_some() {
            return Err(Failure::usage(format!("kernel {kind} depends on y1 only")));
        }
        return Ok(y1s.into_iter().map(|v| (v, 0.0)).collect());
    }
    let y2s = match (&a.y2_range, a.y2, a.y) {
        (Some(r), None, None) => r.0.clone(),
        (None, Some(v), None) => vec![v],
        (None, None, Some(p)) => vec![p.1],
        (None, None, None) => return Err(Failure::usage("give y2 through --y, --y2 or --y2-range")),
        _ => return Err(Failure::usage("--y, --y2 and --y2-range are mutually exclusive")),
    };
    Ok(y1s.iter().flat_map(|&u| y2s.iter().map(move |&v| (u, v))).collect())
}

fn cmd_kernel(a: &KernelArgs, ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let kind = KernelKind::parse(&a.kind).ok_or_else(|| Failure::usage(format!("unknown kernel kind {:?}", a.kind)))?;
    let route = Route::parse(&a.route).ok_or_else(|| Failure::usage(format!("unknown route {:?}", a.route)))?;
    let mut policy = ctx.file.series_policy().map_err(Failure::usage)?;
    if let Some(t) = a.tolerance {
        policy.rel_tol = t;
    }
    if let Some(p) = &a.precision {
        policy.precision = parse_precision(p).map_err(Failure::usage)?;
    }
    policy.validate()?;
    let mb = ctx.file.mb_config();
    let mu = a.mu.params();
    let points = kernel_points(a, kind)?;

    let results: Vec<_> = points
        .par_iter()
        .map(|&y| {
            let start = Instant::now();
            evaluate(kind, route, y, &mu, &policy, &mb).map(|r| (r, start))
        })
        .collect();

    let mut csv = a.csv.then(|| csv::Writer::from_writer(Vec::new()));
    if let Some(w) = csv.as_mut() {
        w.write_record(["kind", "route", "mu_re1", "mu_im1", "mu_re2", "mu_im2", "y1", "y2", "re", "im", "err_estimate", "representation"])
            .expect("writing to memory");
    }
    let mut outcome = Ok(());
    for (&y, res) in points.iter().zip(results) {
        let (r, start) = match res {
            Ok(v) => v,
            Err(e) => {
                let mut f = Failure::from(e);
                f.message = format!("kernel {kind} at y = ({}, {}): {}", y.0, y.1, f.message);
                outcome = Err(f);
                break;
            }
        };
        let inputs = if kind.is_w4() {
            json!({"kind": kind.name(), "route": route.name(), "mu": mu_json(&mu), "y1": y.0, "tolerance": policy.rel_tol})
        } else {
            json!({"kind": kind.name(), "route": route.name(), "mu": mu_json(&mu), "y": [y.0, y.1], "tolerance": policy.rel_tol})
        };
        let rec =
            ctx.stamp(ResultRecord::new("kernel", inputs, [r.value.re, r.value.im], r.err_estimate, &r.representation.to_string()), start);
        if let Some(w) = csv.as_mut() {
            if let Some(msg) = rec.non_finite() {
                outcome = Err(Failure::numeric(msg));
                break;
            }
            let m = mu.to_array();
            let y2 = if kind.is_w4() { String::new() } else { y.1.to_string() };
            w.write_record([
                kind.name().to_string(),
                route.name().to_string(),
                m[0].to_string(),
                m[1].to_string(),
                m[2].to_string(),
                m[3].to_string(),
                y.0.to_string(),
                y2,
                r.value.re.to_string(),
                r.value.im.to_string(),
                r.err_estimate.to_string(),
                rec.representation.clone(),
            ])
            .expect("writing to memory");
        } else if let Err(f) = out.record(&rec) {
            outcome = Err(f);
            break;
        }
    }
    if let Some(w) = csv {
        out.buf.extend(w.into_inner().expect("flushing to memory"));
    }
    outcome
}

fn cmd_verify(suite: &str, ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(suite).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
            Failure::usage(format!("unknown suite {suite:?}; expected one of {} or all", names.join(", ")))
        })?]
    };
    let mut failed = 0;
    for s in suites {
        let report = verify::run(s);
        for c in &report.checks {
            out.line(&json!({
                "suite": s.name(),
                "check": c.name,
                "tolerance": c.tolerance,
                "residual": c.residual.filter(|r| r.is_finite()),
                "passed": c.passed(),
                "error": c.error,
            }));
        }
        let mut summary = json!({
            "suite": s.name(),
            "checks": report.checks.len(),
            "failures": report.failures(),
            "max_residual": report.max_residual(),
            "passed": report.passed(),
        });
        if ctx.timing {
            summary["wall_time_ms"] = json!(report.elapsed.as_secs_f64() * 1e3);
        }
        out.line(&summary);
        failed += report.failures();
    }
    if failed > 0 {
        return Err(Failure::numeric(format!("{failed} verification checks failed")));
    }
    Ok(())
}

fn parse_weyl(s: &str, allowed: &[WeylElement]) -> Result<WeylElement, Failure> {
    WeylElement::parse(s).filter(|w| allowed.contains(w)).ok_or_else(|| {
        let names: Vec<&str> = allowed.iter().map(|w| w.label()).collect();
        Failure::usage(format!("Weyl element must be one of {}, got {s:?}", names.join(", ")))
    })
}

fn cmd_kloosterman(w: &str, m: (i64, i64), n: (i64, i64), c: (u64, u64), ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let w = parse_weyl(w, &[WeylElement::Wl, WeylElement::W4, WeylElement::W5])?;
    let start = Instant::now();
    let s = s_weyl(w, CharIndex::new(m.0, m.1), CharIndex::new(n.0, n.1), Modulus::new(c.0, c.1)?)?;
    // At most c1·c2·max(c1, c2) unit-modulus terms, each exact to an ulp.
    let terms = (c.0 * c.1 * c.0.max(c.1)) as f64;
    let inputs = json!({"w": w.label(), "m": [m.0, m.1], "n": [n.0, n.1], "c": [c.0, c.1]});
    out.record(&ctx.stamp(ResultRecord::new("kloosterman", inputs, [s.re, s.im], terms * f64::EPSILON, "finite_sum"), start))
}

fn cmd_whittaker(y: (f64, f64), mu: &MuArgs, ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let mu = mu.params();
    let start = Instant::now();
    let r = whittaker_wstar(y, &mu, &ctx.file.mb_config())?;
    let inputs = json!({"y": [y.0, y.1], "mu": mu_json(&mu)});
    out.record(
        &ctx.stamp(ResultRecord::new("whittaker", inputs, [r.value.re, r.value.im], r.err_estimate, &r.representation.to_string()), start),
    )
}

fn cmd_geometric(a: &GeometricArgs, ctx: &Context, out: &mut Output) -> Result<(), Failure> {
    let w = parse_weyl(&a.w, &[WeylElement::Wl, WeylElement::W4, WeylElement::W5])?;
    let form = match a.form.as_str() {
        "j" => KernelForm::J,
        "k" => KernelForm::K,
        other => return Err(Failure::usage(format!("form must be j or k, got {other:?}"))),
    };
    let centers = if a.centers.is_empty() { vec![(1.5, 0.5)] } else { a.centers.clone() };
    let f = TestFunction::gaussian(centers.iter().map(|&(s, t)| SpectralParams::imaginary(s, t)).collect(), a.width)?;
    let mut cfg = GeometricConfig::new(a.cmax);
    cfg.form = form;
    let policy = ctx.file.series_policy().map_err(Failure::usage)?;
    // The geometric side keeps its own wide series domain unless the file sets one.
    let bound = ctx.file.series.series_domain_bound.unwrap_or(cfg.transform.policy.series_domain_bound);
    cfg.transform = TransformConfig { grid: ctx.file.grid_config(), policy: SeriesPolicy { series_domain_bound: bound, ..policy } };
    cfg.transform.grid.validate()?;
    cfg.transform.policy.validate()?;

    let start = Instant::now();
    let sum = geometric_sum(w, &f, CharIndex::new(a.m.0, a.m.1), CharIndex::new(a.n.0, a.n.1), &cfg)?;
    for t in &sum.terms {
        let weight = t.weight.map(|h| json!({"value": [h.value.re, h.value.im], "err_estimate": h.err_estimate, "nodes": h.nodes}));
        let inputs = json!({
            "w": w.label(),
            "m": [a.m.0, a.m.1],
            "n": [a.n.0, a.n.1],
            "c": [t.c1, t.c2],
            "eps": [t.eps.0, t.eps.1],
            "y": [t.y.0, t.y.1],
            "kloosterman": [t.kloosterman.re, t.kloosterman.im],
            "weight": weight,
        });
        out.record(&ResultRecord::new("geometric", inputs, [t.contribution.re, t.contribution.im], t.err_estimate, "term"))?;
    }
    let inputs = json!({
        "w": w.label(),
        "m": [a.m.0, a.m.1],
        "n": [a.n.0, a.n.1],
        "cmax": a.cmax,
        "centers": centers.iter().map(|&(s, t)| [s, t]).collect::<Vec<_>>(),
        "width": a.width,
        "form": a.form,
        "terms": sum.terms.len(),
    });
    out.record(&ctx.stamp(ResultRecord::new("geometric", inputs, [sum.value.re, sum.value.im], sum.err_estimate, "partial_sum"), start))
}

fn thread_count(cli: &Cli, file: &FileConfig) -> Result<Option<usize>, Failure> {
    let n = match (cli.threads, file.threads) {
        (Some(n), _) | (None, Some(n)) => Some(n),
        (None, None) => match std::env::var("KUZNETSOV_THREADS") {
            Ok(s) => Some(s.trim().parse().map_err(|_| Failure::usage(format!("KUZNETSOV_THREADS={s:?} is not a count")))?),
            Err(_) => None,
        },
    };
    if n == Some(0) {
        return Err(Failure::usage("thread count must be positive"));
    }
    Ok(n)
}

fn run(cli: &Cli, out: &mut Output) -> Result<(), Failure> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(Failure::usage)?,
        None => FileConfig::default(),
    };
    if let Some(n) = thread_count(cli, &file)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    let ctx = Context { timing: cli.timing || file.timing.unwrap_or(false), file };
    match &cli.command {
        Command::Kernel(a) => cmd_kernel(a, &ctx, out),
        Command::Verify { suite } => cmd_verify(suite, &ctx, out),
        Command::Kloosterman { w, m, n, c } => cmd_kloosterman(w, *m, *n, *c, &ctx, out),
        Command::Whittaker { y, mu } => cmd_whittaker(*y, mu, &ctx, out),
        Command::Geometric(a) => cmd_geometric(a, &ctx, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Output { buf: Vec::new() };
    let result = run(&cli, &mut out);
    let mut stdout = std::io::stdout().lock();
    if stdout.write_all(&out.buf).and_then(|_| stdout.flush()).is_err() {
        return ExitCode::from(1);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_are_inclusive_and_even() {
        assert_eq!(parse_range("0,1,3").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("0.2,9,1").unwrap().0, vec![0.2]);
        assert!(parse_range("0,1,0").is_err());
        assert!(parse_range("0,1,2.5").is_err());
        assert!(parse_range("0,1").is_err());
    }

    #[test]
    fn pairs_reject_junk() {
        assert_eq!(parse_pair("-0.05, 2").unwrap(), (-0.05, 2.0));
        assert!(parse_pair("1").is_err());
        assert!(parse_pair("1,nan").is_err());
        assert!(parse_moduli("0,1").is_err());
        assert_eq!(parse_ints("-1,3").unwrap(), (-1, 3));
    }

    #[test]
    fn precondition_errors_map_to_usage() {
        assert_eq!(Failure::from(Error::Domain("x".into())).code, 2);
        assert_eq!(Failure::from(Error::DegenerateMu(0.0)).code, 2);
        assert_eq!(Failure::from(Error::NonConvergence(5)).code, 1);
        assert_eq!(Failure::from(Error::Convergence("x".into())).code, 1);
    }
}
