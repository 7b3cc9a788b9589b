//! The `avg` command-line front end.
//!
//! Exit codes: 0 all verdicts pass, 1 usage or configuration error
//! (including violated theorem hypotheses), 2 computation error, 3 at least
//! one failed verdict, 4 inconclusive verdicts only.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::arith::{gcd, mod_inverse};
use crate::bounds::{f_delta_scan, scan_levels, verify_theorem, write_scan_csv, SigmaRule, StepStatus, Verdict};
use crate::characters::DirichletCharacter;
use crate::error::Error;
use crate::kloosterman::{kloosterman_sum, twisted_sum_bounds, twisted_sum_closed, twisted_sum_direct, weil_bound, KloostermanKey};
use crate::petersson::{
    geometric_sums, inner_product, inner_product_bound, AveragingParams, SumWithTail, TruncationMode, TruncationPolicy, DEFAULT_B_MAX, DEFAULT_TAIL_B, SCAN_REL_TOL,
    THEOREM_REL_TOL,
};
use crate::special::{bessel_j1, bessel_j1_oracle, j1_minus_half, one_minus_exp_ratio, zeta_enclosure};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_COMPUTE: i32 = 2;
pub const EXIT_FAIL: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

/// Environment variable overriding the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "AVG_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "avg", version, about = "Averaged twisted special values on the geometric side, with certified error bounds")]
struct Cli {
    /// Output format (default: csv for `scan`, text otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: $AVG_WORKERS, else all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ModeArg {
    Shared,
    Adaptive,
}

#[derive(Args, Debug, Clone)]
struct CharArgs {
    /// Modulus of χ.
    #[arg(long, default_value_t = 1)]
    q: u64,
    /// Index of χ among the characters modulo q (0 is principal).
    #[arg(long, default_value_t = 0)]
    chi_index: usize,
}

#[derive(Args, Debug, Clone)]
struct SigmaArgs {
    /// Fixed σ.
    #[arg(long, conflicts_with = "sigma_rule")]
    sigma: Option<f64>,
    /// q-squared, max-window, floor, or a number (default q-squared).
    #[arg(long)]
    sigma_rule: Option<String>,
}

impl SigmaArgs {
    fn rule(&self) -> Result<SigmaRule, Error> {
        match (&self.sigma, &self.sigma_rule) {
            (Some(s), _) => Ok(SigmaRule::Fixed(*s)),
            (None, Some(r)) => r.parse(),
            (None, None) => Ok(SigmaRule::QSquared),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct PolicyArgs {
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_B_MAX)]
    b_max: u64,
    /// Largest b of the resummed E^{(3)} (adaptive mode; default b_max).
    #[arg(long)]
    closed_b_max: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TAIL_B)]
    tail_b: u64,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Adaptive)]
    mode: ModeArg,
}

impl PolicyArgs {
    fn policy(&self, default_tol: f64) -> TruncationPolicy {
        TruncationPolicy {
            n_max: self.n_max,
            b_max: self.b_max,
            mode: match self.mode {
                ModeArg::Shared => TruncationMode::Shared,
                ModeArg::Adaptive => TruncationMode::Adaptive,
            },
            rel_tol: self.rel_tol.unwrap_or(default_tol),
            closed_b_max: self.closed_b_max.unwrap_or(self.b_max),
            tail_b: self.tail_b,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Kloosterman sum S(m, n; c) and its Weil bound.
    Kloosterman {
        #[arg(long, allow_hyphen_values = true)]
        m: i64,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long)]
        c: u64,
    },
    /// A Dirichlet character: value at n, or its full table.
    Char {
        #[command(flatten)]
        chi: CharArgs,
        #[arg(long, allow_hyphen_values = true)]
        n: Option<i64>,
    },
    /// Inner product (a_m, a_n) at level N with its envelope.
    Innerprod {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        level: u64,
        #[arg(long, default_value_t = DEFAULT_B_MAX)]
        b_max: u64,
    },
    /// Certificate for the main theorem at one parameter point.
    Theorem {
        #[arg(long)]
        level: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[command(flatten)]
        chi: CharArgs,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Deviation |(a_m, A) - main term| over a list of levels.
    Scan {
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<u64>,
        #[arg(long, default_value_t = 1)]
        m: u64,
        #[command(flatten)]
        chi: CharArgs,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Largest m with |(a_m, L_χ) - 4πχ(m)| certified ≤ δ.
    Fdelta {
        #[arg(long)]
        level: u64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 20)]
        m_limit: u64,
        #[command(flatten)]
        chi: CharArgs,
        #[command(flatten)]
        sigma: SigmaArgs,
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Runs the invariant suite with fixed seeds.
    Selftest,
}

/// Pretty JSON with every float written with 17 significant digits.
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17-significant-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

fn complex(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn with_tail(s: &SumWithTail) -> Value {
    json!({"value": complex(s.value), "tail_radius": s.tail_radius})
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn verdict_exit(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

/// Plain decimal rendering for text output: 12 decimals, trailing zeros
/// dropped.
fn plain(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn error_exit(e: &Error) -> i32 {
    match e {
        Error::QuadratureBudget { .. } | Error::DivergentDenominator { .. } => EXIT_COMPUTE,
        _ => EXIT_USAGE,
    }
}

/// What a subcommand produced.
struct Outcome {
    results: Value,
    verdicts: Value,
    text: String,
    csv: Option<Vec<u8>>,
    exit: i32,
}

fn worker_count(flag: Option<usize>) -> Result<usize, String> {
    if let Some(w) = flag {
        return Ok(w);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}")),
        Err(_) => Ok(0),
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let workers = match worker_count(cli.workers) {
        Ok(w) => w,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_COMPUTE;
        }
    };
    let format = cli.format.unwrap_or(match cli.command {
        Command::Scan { .. } => Format::Csv,
        _ => Format::Text,
    });
    let args: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();

    let start = Instant::now();
    let outcome = pool.install(|| execute(&cli.command));
    let elapsed = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return error_exit(&e);
        }
    };

    let body: Vec<u8> = match format {
        Format::Json => {
            let doc = json!({
                "config": {
                    "args": args,
                    "subcommand": subcommand_name(&cli.command),
                    "format": format,
                    "workers": workers,
                },
                "results": outcome.results,
                "verdicts": outcome.verdicts,
                "timings": {"total_seconds": elapsed},
            });
            to_json_string(&doc).into_bytes()
        }
        Format::Csv => match outcome.csv {
            Some(b) => b,
            None => {
                eprintln!("error: csv output is only available for scan");
                return EXIT_USAGE;
            }
        },
        Format::Text => outcome.text.into_bytes(),
    };
    let written = match &cli.output {
        Some(path) => File::create(path).and_then(|mut f| f.write_all(&body)),
        None => io::stdout().write_all(&body),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    outcome.exit
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Kloosterman { .. } => "kloosterman",
        Command::Char { .. } => "char",
        Command::Innerprod { .. } => "innerprod",
        Command::Theorem { .. } => "theorem",
        Command::Scan { .. } => "scan",
        Command::Fdelta { .. } => "fdelta",
        Command::Selftest => "selftest",
    }
}

fn execute(cmd: &Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Kloosterman { m, n, c } => {
            let v = kloosterman_sum(*m, *n, *c)?;
            let key = KloostermanKey::new(*m, *n, *c)?;
            let w = weil_bound(m.unsigned_abs(), n.unsigned_abs(), *c)?;
            Ok(Outcome {
                results: json!({"m": m, "n": n, "c": c, "value": v, "weil_bound": w,
                                "key": {"m_red": key.m_red, "n_red": key.n_red, "c": key.c}}),
                verdicts: json!({}),
                text: format!("{}\n", plain(v)),
                csv: None,
                exit: EXIT_OK,
            })
        }
        Command::Char { chi, n } => {
            let c = DirichletCharacter::new(chi.q, chi.chi_index)?;
            let info = json!({
                "modulus": c.modulus(), "index": c.index(), "conductor": c.conductor(),
                "order": c.order(), "primitive": c.is_primitive(), "real": c.is_real(),
            });
            let (results, text) = match n {
                Some(n) => {
                    let v = c.eval(*n);
                    (json!({"character": info, "n": n, "value": complex(v)}), format!("{} {}\n", plain(v.re), plain(v.im)))
                }
                None => {
                    let table = c.value_table();
                    let mut text = format!("modulus {} index {} conductor {} order {}\n", c.modulus(), c.index(), c.conductor(), c.order());
                    for (k, v) in table.iter().enumerate() {
                        text.push_str(&format!("{k} {} {}\n", plain(v.re), plain(v.im)));
                    }
                    (json!({"character": info, "table": table.iter().map(|&z| complex(z)).collect::<Vec<_>>()}), text)
                }
            };
            Ok(Outcome {
                results,
                verdicts: json!({}),
                text,
                csv: None,
                exit: EXIT_OK,
            })
        }
        Command::Innerprod { m, n, level, b_max } => {
            let policy = TruncationPolicy::shared(None, *b_max);
            let ip = inner_product(*m, *n, *level, &policy)?;
            let bound = inner_product_bound(*m, *n, *level)?;
            let diag = if m == n { 4.0 * PI * ((m * n) as f64).sqrt() } else { 0.0 };
            let dev = (ip.value.re - diag).abs();
            let verdict = Verdict::judge((dev - ip.tail_radius).max(0.0), dev + ip.tail_radius, bound, bound);
            Ok(Outcome {
                results: json!({"m": m, "n": n, "level": level, "b_max": b_max,
                                "inner_product": with_tail(&ip), "envelope": bound}),
                verdicts: json!({"envelope": verdict_str(verdict)}),
                text: format!(
                    "(a_{m}, a_{n}) = {} ± {}\n|correction| = {} vs envelope {}: {}\n",
                    plain(ip.value.re),
                    plain(ip.tail_radius),
                    plain(dev),
                    plain(bound),
                    verdict_str(verdict)
                ),
                csv: None,
                exit: verdict_exit(verdict),
            })
        }
        Command::Theorem { level, m, chi, sigma, policy } => {
            let c = DirichletCharacter::new(chi.q, chi.chi_index)?;
            let s = sigma.rule()?.sigma(*level, chi.q);
            let params = AveragingParams::theorem(*level, *m, c, s)?;
            let policy = policy.policy(THEOREM_REL_TOL);
            let cert = verify_theorem(&params, &policy)?;
            let terms: Vec<Value> = cert
                .terms
                .iter()
                .map(|t| {
                    json!({"name": t.name, "value": t.value, "tail_radius": t.tail_radius,
                           "bound": t.bound, "bound_upper": t.bound_upper, "verdict": verdict_str(t.verdict)})
                })
                .collect();
            let b = cert.bounds;
            let results = json!({
                "level": cert.level, "m": cert.m, "modulus": cert.modulus, "chi_index": cert.chi_index,
                "conductor": cert.conductor, "sigma": cert.sigma, "scale": cert.scale,
                "policy": {"n_max": cert.n_max, "b_loop": cert.b_loop, "b_upper": cert.b_upper,
                           "tail_b": policy.tail_b, "rel_tol": policy.rel_tol, "mode": policy.mode},
                "main_term": complex(cert.main),
                "approx_average": with_tail(&cert.approx),
                "terms": terms,
                "proposition_bounds": {"b_functional": b.b_functional, "e1": b.e1, "e2": b.e2, "e3": b.e3,
                    "e3_upper": {"lower": b.e3_upper.lower, "upper": b.e3_upper.upper},
                    "e2_intermediate": b.e2_intermediate},
                "identity_residual": cert.identity_residual,
                "identity_tolerance": cert.identity_tolerance,
                "e2_self_check": cert.e2_self_check,
                "zero_coverage": cert.zero_coverage,
                "l_value": {"value": complex(cert.l_value), "radius": cert.l_radius},
                "deviation_bound": cert.deviation_bound,
            });
            let mut verdicts = serde_json::Map::new();
            for t in &cert.terms {
                verdicts.insert(t.name.to_string(), json!(verdict_str(t.verdict)));
            }
            verdicts.insert("identity".into(), json!(verdict_str(cert.identity_verdict)));
            verdicts.insert("overall".into(), json!(verdict_str(cert.verdict)));
            let mut text = format!(
                "N = {} m = {} q = {} chi = {} sigma = {} A = {}\n",
                cert.level,
                cert.m,
                cert.modulus,
                cert.chi_index,
                plain(cert.sigma),
                plain(cert.scale)
            );
            text.push_str(&format!("approx average = {} ± {}\n", plain(cert.approx.value.re), plain(cert.approx.tail_radius)));
            text.push_str(&format!("main term      = {}\n", plain(cert.main.re)));
            for t in &cert.terms {
                text.push_str(&format!(
                    "{:<8} {:.6e} + {:.3e} <= {:.6e}: {}\n",
                    t.name,
                    t.value,
                    t.tail_radius,
                    t.bound,
                    verdict_str(t.verdict)
                ));
            }
            text.push_str(&format!(
                "identity residual {:.3e} (tolerance {:.3e}): {}\noverall: {}\n",
                cert.identity_residual,
                cert.identity_tolerance,
                verdict_str(cert.identity_verdict),
                verdict_str(cert.verdict)
            ));
            Ok(Outcome {
                results,
                verdicts: Value::Object(verdicts),
                text,
                csv: None,
                exit: verdict_exit(cert.verdict),
            })
        }
        Command::Scan { levels, m, chi, sigma, policy } => {
            let c = DirichletCharacter::new(chi.q, chi.chi_index)?;
            let rule = sigma.rule()?;
            let rows = scan_levels(levels, *m, &c, rule, &policy.policy(SCAN_REL_TOL));
            let mut csv = Vec::new();
            write_scan_csv(&rows, &mut csv).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            let mut text = String::new();
            for r in &rows {
                match &r.error {
                    Some(e) => text.push_str(&format!("N = {}: error: {e}\n", r.level)),
                    None => text.push_str(&format!(
                        "N = {} deviation {:.6e} radius {:.3e} N*deviation {:.6e}\n",
                        r.level, r.deviation, r.radius, r.scaled_deviation
                    )),
                }
            }
            let exit = if rows.iter().any(|r| r.verdict == Some(Verdict::Fail)) {
                EXIT_FAIL
            } else if rows.iter().any(|r| r.error.is_some()) {
                EXIT_USAGE
            } else if rows.iter().any(|r| r.verdict == Some(Verdict::Inconclusive)) {
                EXIT_INCONCLUSIVE
            } else {
                EXIT_OK
            };
            let verdicts: Vec<Value> = rows.iter().map(|r| json!({"level": r.level, "verdict": r.verdict.map(verdict_str)})).collect();
            Ok(Outcome {
                results: json!({"rows": serde_json::to_value(&rows).expect("rows serialize")}),
                verdicts: json!(verdicts),
                text,
                csv: Some(csv),
                exit,
            })
        }
        Command::Fdelta { level, delta, m_limit, chi, sigma, policy } => {
            let c = DirichletCharacter::new(chi.q, chi.chi_index)?;
            let r = f_delta_scan(*level, *delta, &c, sigma.rule()?, &policy.policy(THEOREM_REL_TOL), *m_limit)?;
            let mut text = format!("N = {} delta = {}: m* = {}", r.level, plain(r.delta), r.m_star);
            if let Some(b) = r.inconclusive_beyond {
                text.push_str(&format!(" (inconclusive beyond m = {b})"));
            }
            text.push('\n');
            for s in &r.trail {
                text.push_str(&format!("m = {} |center| {:.6e} radius {:.3e}: {:?}\n", s.m, s.center, s.radius, s.status));
            }
            let exit = if r.inconclusive_beyond.is_some() { EXIT_INCONCLUSIVE } else { EXIT_OK };
            let last = r.trail.last().map(|s| match s.status {
                StepStatus::Certified => "certified",
                StepStatus::Violated => "violated",
                StepStatus::Inconclusive => "inconclusive",
            });
            Ok(Outcome {
                results: serde_json::to_value(&r).expect("f-delta result serializes"),
                verdicts: json!({"last_step": last}),
                text,
                csv: None,
                exit,
            })
        }
        Command::Selftest => {
            let checks = selftest();
            let mut text = String::new();
            let mut all = true;
            let mut verdicts = serde_json::Map::new();
            for (name, ok, detail) in &checks {
                all &= ok;
                text.push_str(&format!("{} {name}: {detail}\n", if *ok { "PASS" } else { "FAIL" }));
                verdicts.insert(name.to_string(), json!(if *ok { "pass" } else { "fail" }));
            }
            Ok(Outcome {
                results: json!({"checks": checks.iter().map(|(n, ok, d)| json!({"name": n, "pass": ok, "detail": d})).collect::<Vec<_>>()}),
                verdicts: Value::Object(verdicts),
                text,
                csv: None,
                exit: if all { EXIT_OK } else { EXIT_FAIL },
            })
        }
    }
}

const SELFTEST_SEED: u64 = 0x5eed_2024;

type Check = (&'static str, bool, String);

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String), Error>) -> Check {
    match f() {
        Ok((ok, detail)) => (name, ok, detail),
        Err(e) => (name, false, format!("error: {e}")),
    }
}

/// Invariant suite at reduced size; the full-size versions live in the
/// test suite.
fn selftest() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(check("weil_symmetry_periodicity", || {
        let mut worst = f64::NEG_INFINITY;
        let mut exact = true;
        for c in 1..=120u64 {
            for m in 1..=12i64 {
                for n in 1..=12i64 {
                    let s = kloosterman_sum(m, n, c)?;
                    worst = worst.max(s.abs() - weil_bound(m as u64, n as u64, c)?);
                    exact &= s.to_bits() == kloosterman_sum(n, m, c)?.to_bits();
                    exact &= s.to_bits() == kloosterman_sum(m + c as i64, n, c)?.to_bits();
                }
            }
        }
        Ok((worst <= 1e-8 && exact, format!("max(|S| - weil) = {worst:.3e}, exact symmetry {exact}")))
    }));
    out.push(check("mod_inverse", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SELFTEST_SEED);
        let mut ok = true;
        for _ in 0..2000 {
            let c = rng.gen_range(2..100_000u64);
            let x = rng.gen_range(0..c);
            if gcd(x, c) == 1 {
                let y = mod_inverse(x as i64, c)?;
                ok &= (x as u128 * y as u128) % c as u128 == 1;
            }
        }
        Ok((ok, "2000 random residues".into()))
    }));
    out.push(check("ez_ratio", || {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..200 {
            for j in 0..200 {
                let re = -TAU / 30.0 * i as f64 / 199.0;
                let im = -PI + TAU * j as f64 / 199.0;
                if re == 0.0 && im == 0.0 {
                    continue;
                }
                let r = one_minus_exp_ratio(Complex64::new(re, im))?;
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        Ok((lo >= 0.5 && hi <= 1.0, format!("ratio in [{lo:.6}, {hi:.6}]")))
    }));
    out.push(check("bessel", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SELFTEST_SEED + 1);
        let mut ok = true;
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(0.0..50.0);
            let j = bessel_j1(a)?;
            ok &= j1_minus_half(a).abs() <= a * a * a / 16.0 + 1e-15;
            ok &= j.abs() <= 1.0f64.min(a / 2.0) + 1e-15;
        }
        for _ in 0..20 {
            let a: f64 = rng.gen_range(0.0..200.0);
            worst = worst.max((bessel_j1(a)? - bessel_j1_oracle(a, 1e-13)?).abs());
        }
        Ok((ok && worst <= 1e-10, format!("oracle deviation {worst:.3e}")))
    }));
    out.push(check("zeta", || {
        let z2 = zeta_enclosure(2.0, 1e-9)?;
        let z32 = zeta_enclosure(1.5, 1e-9)?;
        Ok((z2.contains(PI * PI / 6.0) && z32.width() <= 1e-9, format!("zeta(3/2) in [{:.12}, {:.12}]", z32.lower, z32.upper)))
    }));
    out.push(check("twisted_cross_method", || {
        let mut worst = f64::NEG_INFINITY;
        for (level, q, index, c) in [(401u64, 1u64, 0usize, 401u64), (405, 4, 1, 405)] {
            let chi = DirichletCharacter::new(q, index)?;
            let sigma = (q * q) as f64;
            let p = AveragingParams::new(level, 1, chi, sigma)?;
            let n_max = TruncationPolicy::theorem().n_cutoff(p.scale());
            let d = twisted_sum_direct(c, &p, n_max)?;
            let cl = twisted_sum_closed(c, &p)?;
            let (small, large) = twisted_sum_bounds(c, &p)?;
            worst = worst.max((d.value - cl.value).norm() - d.tail_radius - 1e-9);
            if cl.value.norm() > small.min(large) {
                return Ok((false, format!("bound violated at c = {c}")));
            }
        }
        Ok((worst <= 0.0, format!("max excess {worst:.3e}")))
    }));
    out.push(check("identity_n400", || {
        let p = AveragingParams::theorem(400, 1, DirichletCharacter::principal(1)?, 1.0)?;
        let s = geometric_sums(&p, &TruncationPolicy::shared(None, 4))?;
        let r = s.identity_residual();
        Ok((r <= 1e-9 * (1.0 + s.main.norm()), format!("residual {r:.3e}")))
    }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_have_17_digits() {
        let s = to_json_string(&json!({"x": 0.1, "n": 3, "nan": f64::NAN}));
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("null"));
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn plain_rendering() {
        assert_eq!(plain(-0.9999999999999998), "-1");
        assert_eq!(plain(2.5), "2.5");
        assert_eq!(plain(-1e-15), "0");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["avg", "kloosterman", "--m", "1", "--n", "1", "--c", "3"]), EXIT_OK);
        assert_eq!(run(["avg", "theorem", "--level", "200", "--m", "1", "--q", "1", "--sigma", "1"]), EXIT_USAGE);
        assert_eq!(run(["avg", "kloosterman", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["avg", "char", "--q", "5", "--chi-index", "9"]), EXIT_USAGE);
    }
}
