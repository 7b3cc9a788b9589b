//! Truncated error terms E1, E2, E3, E^{(3)}, the closed-form bounds they
//! are compared against, and the certificates and scans built from them.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{divisor_count, euler_phi, ScaledDivisorCounter};
use crate::characters::DirichletCharacter;
use crate::error::{Error, Hypothesis, Result};
use crate::petersson::{b_functional_bound, geometric_sums, AveragingParams, GeometricSums, SumWithTail, TruncationPolicy};
use crate::special::{zeta_seven_halves, zeta_three, zeta_three_halves, CompensatedSum, Enclosure};

const SEGMENT: u64 = 1 << 16;

/// The summand of the E^{(3)} bound without the 16π³m prefactor, split by
/// branch: (2/π) φ(q) c^{-1} log c and (1/6) A m^{1/2} c^{-3/2} d(c).
pub fn branch_values(params: &AveragingParams, c: u64) -> Result<(f64, f64)> {
    let phi_q = euler_phi(params.modulus())? as f64;
    let cf = c as f64;
    let small = 2.0 / PI * phi_q * cf.ln() / cf;
    let large = params.scale() / 6.0 * (params.m() as f64).sqrt() * cf.powf(-1.5) * divisor_count(c)? as f64;
    Ok((small, large))
}

/// Σ_{N | c} min(small, large) evaluated exactly for c = N b with b ≤ B1,
/// plus an analytic bound on b > B1.
#[derive(Debug, Clone, Copy)]
pub struct MinBranch {
    level: u64,
    small_coef: f64,
    large_coef: f64,
    b1: u64,
    head: f64,
    upper_tail: f64,
}

type HeadKey = (u64, u64, u64, u64, u64);

fn head_memo() -> &'static Mutex<HashMap<HeadKey, f64>> {
    static MEMO: OnceLock<Mutex<HashMap<HeadKey, f64>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

impl MinBranch {
    pub fn new(params: &AveragingParams, b1: u64) -> Result<Self> {
        if b1 == 0 {
            return Err(Error::Zero("tail_b"));
        }
        let level = params.level();
        let small_coef = 2.0 / PI * euler_phi(params.modulus())? as f64;
        let large_coef = params.scale() / 6.0 * (params.m() as f64).sqrt();
        let mut me = Self {
            level,
            small_coef,
            large_coef,
            b1,
            head: 0.0,
            upper_tail: 0.0,
        };
        let key = (level, params.m(), params.modulus(), params.sigma().to_bits(), b1);
        let cached = head_memo().lock().expect("memo lock").get(&key).copied();
        me.head = match cached {
            Some(h) => h,
            None => {
                let h = me.head_range(1, b1)?;
                head_memo().lock().expect("memo lock").insert(key, h);
                h
            }
        };
        me.upper_tail = me.analytic_tail(b1)?;
        Ok(me)
    }

    #[inline]
    fn term(&self, b: u64, d: u32) -> f64 {
        let c = (self.level * b) as f64;
        let small = self.small_coef * c.ln() / c;
        let large = self.large_coef * d as f64 * c.powf(-1.5);
        small.min(large)
    }

    /// Σ_{lo ≤ b ≤ hi} min(small, large), in fixed segment order.
    fn head_range(&self, lo: u64, hi: u64) -> Result<f64> {
        if hi < lo {
            return Ok(0.0);
        }
        let counter = ScaledDivisorCounter::new(self.level, hi + 1)?;
        let starts: Vec<u64> = (lo..=hi).step_by(SEGMENT as usize).collect();
        let parts: Vec<f64> = starts
            .par_iter()
            .map(|&s| {
                let e = (s + SEGMENT).min(hi + 1);
                let d = counter.counts(s, e);
                let mut sum = CompensatedSum::new();
                for (i, &dv) in d.iter().enumerate() {
                    sum.add(self.term(s + i as u64, dv));
                }
                sum.value()
            })
            .collect();
        let mut sum = CompensatedSum::new();
        for p in parts {
            sum.add(p);
        }
        Ok(sum.value())
    }

    /// Bound on Σ_{b > B} min(small, large): the small branch up to some
    /// b2 ≥ B by an integral of log(Nt)/(Nt), the large branch beyond b2
    /// through d(Nb) ≤ d(N) d(b) and Σ_{b > X} d(b) b^{-3/2} ≤ (3 log X + 9)/√X.
    fn analytic_tail(&self, b: u64) -> Result<f64> {
        let n = self.level as f64;
        let d_n = divisor_count(self.level)? as f64;
        let lb = (n * b as f64).ln();
        let mut best = f64::INFINITY;
        for k in 0..=160 {
            let b2 = b as f64 * 2f64.powf(k as f64 / 4.0);
            let l2 = (n * b2).ln();
            let small = self.small_coef / n * (l2 * l2 - lb * lb) / 2.0;
            let large = self.large_coef * n.powf(-1.5) * d_n * (3.0 * b2.ln() + 9.0) / b2.sqrt();
            best = best.min(small + large);
        }
        Ok(best)
    }

    /// Exact part Σ_{b ≤ B1}.
    pub fn head(&self) -> f64 {
        self.head
    }

    /// Analytic bound on Σ_{b > B1}.
    pub fn upper_tail(&self) -> f64 {
        self.upper_tail
    }

    pub fn b1(&self) -> u64 {
        self.b1
    }

    /// Σ_{b ≤ B} min(small, large).
    pub fn head_upto(&self, b: u64) -> Result<f64> {
        self.head_range(1, b.min(self.b1))
    }

    /// Rigorous bound on Σ_{b > B} min(small, large).
    pub fn tail_after(&self, b: u64) -> Result<f64> {
        if b >= self.b1 {
            return self.analytic_tail(b);
        }
        let middle = (self.head - self.head_upto(b)?).max(0.0);
        // Both partial sums are compensated; pad for their rounding.
        Ok(middle + 1e-12 * self.head + self.upper_tail)
    }

    /// [head, head + tail] for the whole sum.
    pub fn enclosure(&self) -> Enclosure {
        Enclosure::new(self.head, self.head + self.upper_tail)
    }
}

/// The five closed-form bounds of the main theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PropositionBounds {
    /// Bound on |(a_m, B(A))|.
    pub b_functional: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    /// 16π³m Σ min(...): [exact head, head + analytic tail].
    pub e3_upper: Enclosure,
    /// The E2 bound before the final simplification,
    /// 32π⁵√3 ζ(3) m^{5/2} N^{-7/2} e^{-2π/A} (1 - e^{-2π/A})^{-2}.
    pub e2_intermediate: f64,
}

fn check_bound_hypotheses(params: &AveragingParams) -> Result<()> {
    if params.level() < 400 {
        return Err(Error::Hypothesis(Hypothesis::LevelAtLeast400));
    }
    let q = params.modulus() as f64;
    if !(params.sigma() > q * q / TAU) {
        return Err(Error::Hypothesis(Hypothesis::SigmaStrictlyAboveLower));
    }
    if params.modulus() % params.level() == 0 {
        return Err(Error::Hypothesis(Hypothesis::LevelNotDividingModulus));
    }
    Ok(())
}

/// Evaluates the five bounds. ζ constants enter through the lower endpoint
/// of their enclosures, so each value is at most the exact bound.
pub fn proposition_bounds(params: &AveragingParams, tail_b: u64) -> Result<PropositionBounds> {
    check_bound_hypotheses(params)?;
    let n = params.level() as f64;
    let m = params.m() as f64;
    let sigma = params.sigma();
    let log_n = n.ln();
    let d_n = divisor_count(params.level())? as f64;
    let pi3 = PI.powi(3);
    let decay = (-n / (TAU * m * sigma * log_n)).exp();

    let e1 = 16.0 / 3.0 * pi3 * m.powf(1.5) * sigma * log_n * decay;
    let z72 = zeta_seven_halves().square().lower;
    let e2 = 8.0 / 9.0 * PI.powi(5) * z72 * m.powf(2.5) * sigma * sigma * n.powf(-1.5) * log_n * log_n;
    let z32 = zeta_three_halves().square().lower;
    let e3 = 8.0 / 3.0 * z32 * pi3 * sigma * m.powf(1.5) / n.sqrt() * log_n * d_n * decay;
    let branch = MinBranch::new(params, tail_b)?;
    let e3_upper = branch.enclosure().scale(16.0 * pi3 * m);
    let x = TAU / params.scale();
    let one_minus = -(-x).exp_m1();
    let e2_intermediate = 32.0 * PI.powi(5) * 3f64.sqrt() * zeta_three().lower * m.powf(2.5) * n.powf(-3.5) * (-x).exp() / (one_minus * one_minus);
    Ok(PropositionBounds {
        b_functional: b_functional_bound(params)?,
        e1,
        e2,
        e3,
        e3_upper,
        e2_intermediate,
    })
}

/// The truncated error terms with their radii.
#[derive(Debug, Clone)]
pub struct ErrorTermReport {
    pub e1: SumWithTail,
    pub e2: SumWithTail,
    pub e3: SumWithTail,
    pub e3_upper: SumWithTail,
    /// E^{(2)} = E^{(3)} - E3 on the shared index set.
    pub e2_sum: Complex64,
    /// E^{(1)} = E^{(2)} + E2.
    pub e1_sum: Complex64,
    /// |E2 from the Bessel remainder - (E^{(1)} - E^{(2)})|, with E^{(1)}
    /// summed directly from the Bessel terms.
    pub e2_self_check: f64,
    pub zero_coverage: bool,
    pub sums: GeometricSums,
}

pub fn error_terms(params: &AveragingParams, policy: &TruncationPolicy) -> Result<ErrorTermReport> {
    params.check_theorem()?;
    let sums = geometric_sums(params, policy)?;
    let e2_sum = sums.e3_upper_shared.value - sums.e3.value;
    let e1_sum = e2_sum + sums.e2.value;
    Ok(ErrorTermReport {
        e1: sums.e1,
        e2: sums.e2,
        e3: sums.e3,
        e3_upper: sums.e3_upper,
        e2_sum,
        e1_sum,
        e2_self_check: (sums.e2.value - sums.e2_algebraic()).norm(),
        zero_coverage: sums.zero_coverage,
        sums,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    /// Compares an enclosure [lower, upper] of a magnitude with a bound
    /// known to lie in [bound_lower, bound_upper].
    pub fn judge(lower: f64, upper: f64, bound_lower: f64, bound_upper: f64) -> Self {
        if upper <= bound_lower {
            Verdict::Pass
        } else if lower > bound_upper {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Pass;
        for v in verdicts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermCheck {
    pub name: &'static str,
    pub value: f64,
    pub tail_radius: f64,
    pub bound: f64,
    pub bound_upper: f64,
    pub verdict: Verdict,
}

impl TermCheck {
    fn new(name: &'static str, s: &SumWithTail, bound: Enclosure) -> Self {
        Self {
            name,
            value: s.value.norm(),
            tail_radius: s.tail_radius,
            bound: bound.lower,
            bound_upper: bound.upper,
            verdict: Verdict::judge(s.lower(), s.upper(), bound.lower, bound.upper),
        }
    }
}

pub const IDENTITY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BoundCertificate {
    pub level: u64,
    pub m: u64,
    pub modulus: u64,
    pub chi_index: usize,
    pub conductor: u64,
    pub sigma: f64,
    pub scale: f64,
    pub n_max: u64,
    pub b_loop: u64,
    pub b_upper: u64,
    pub main: Complex64,
    pub approx: SumWithTail,
    pub bounds: PropositionBounds,
    pub terms: Vec<TermCheck>,
    pub identity_residual: f64,
    pub identity_tolerance: f64,
    pub identity_verdict: Verdict,
    pub e2_self_check: f64,
    pub zero_coverage: bool,
    /// (a_m, L_χ) enclosed as approx ± (tails + B-functional bound).
    pub l_value: Complex64,
    pub l_radius: f64,
    /// Σ (|E_i| + tail) + B-functional bound: an enclosure radius for
    /// (a_m, L_χ) around the main term.
    pub deviation_bound: f64,
    pub verdict: Verdict,
}

pub fn verify_theorem(params: &AveragingParams, policy: &TruncationPolicy) -> Result<BoundCertificate> {
    params.check_theorem()?;
    let bounds = proposition_bounds(params, policy.tail_b)?;
    let report = error_terms(params, policy)?;
    let s = &report.sums;
    let terms = vec![
        TermCheck::new("E1", &report.e1, Enclosure::point(bounds.e1)),
        TermCheck::new("E2", &report.e2, Enclosure::point(bounds.e2)),
        TermCheck::new("E3", &report.e3, Enclosure::point(bounds.e3)),
        TermCheck::new("E3_upper", &report.e3_upper, bounds.e3_upper),
    ];
    let identity_tolerance = IDENTITY_REL_TOL * (1.0 + s.main.norm());
    let identity_residual = s.identity_residual();
    let identity_verdict = if identity_residual <= identity_tolerance {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let verdict = Verdict::combine(terms.iter().map(|t| t.verdict).chain([identity_verdict]));
    let deviation_bound = report.e1.upper() + report.e2.upper() + report.e3.upper() + report.e3_upper.upper() + bounds.b_functional;
    Ok(BoundCertificate {
        level: params.level(),
        m: params.m(),
        modulus: params.modulus(),
        chi_index: params.chi().index(),
        conductor: params.chi().conductor(),
        sigma: params.sigma(),
        scale: params.scale(),
        n_max: s.n_max,
        b_loop: s.b_loop,
        b_upper: s.b_upper,
        main: s.main,
        approx: s.approx,
        bounds,
        terms,
        identity_residual,
        identity_tolerance,
        identity_verdict,
        e2_self_check: report.e2_self_check,
        zero_coverage: report.zero_coverage,
        l_value: s.approx.value,
        l_radius: s.approx.tail_radius + bounds.b_functional,
        deviation_bound,
        verdict,
    })
}

/// How σ is chosen from (N, q).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaRule {
    Fixed(f64),
    /// σ = q².
    QSquared,
    /// σ = N q / log N.
    MaxWindow,
    /// σ = max(1.01 q²/2π, 1).
    Floor,
}

impl SigmaRule {
    pub fn sigma(&self, level: u64, q: u64) -> f64 {
        let qf = q as f64;
        match *self {
            SigmaRule::Fixed(s) => s,
            SigmaRule::QSquared => qf * qf,
            SigmaRule::MaxWindow => level as f64 * qf / (level as f64).ln(),
            SigmaRule::Floor => (qf * qf / TAU * 1.01).max(1.0),
        }
    }
}

impl std::str::FromStr for SigmaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q-squared" => Ok(SigmaRule::QSquared),
            "max-window" => Ok(SigmaRule::MaxWindow),
            "floor" => Ok(SigmaRule::Floor),
            other => other
                .parse::<f64>()
                .map(SigmaRule::Fixed)
                .map_err(|_| Error::InvalidParameter(format!("unknown sigma rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub level: u64,
    pub sigma: f64,
    /// |approx_average - main_term|.
    pub deviation: f64,
    pub radius: f64,
    /// Sum of the five proposition bounds (upper end for E^{(3)}).
    pub bound_total: f64,
    pub scaled_deviation: f64,
    pub verdict: Option<Verdict>,
    pub error: Option<String>,
}

fn scan_row(level: u64, m: u64, chi: &DirichletCharacter, rule: SigmaRule, policy: &TruncationPolicy) -> Result<ScanRow> {
    let sigma = rule.sigma(level, chi.modulus());
    let params = AveragingParams::theorem(level, m, chi.clone(), sigma)?;
    let cert = verify_theorem(&params, policy)?;
    let deviation = (cert.approx.value - cert.main).norm();
    let b = cert.bounds;
    Ok(ScanRow {
        level,
        sigma,
        deviation,
        radius: cert.approx.tail_radius,
        bound_total: b.b_functional + b.e1 + b.e2 + b.e3 + b.e3_upper.upper,
        scaled_deviation: level as f64 * deviation,
        verdict: Some(cert.verdict),
        error: None,
    })
}

/// One row per level, in input order; per-row errors are recorded in the
/// row and the scan continues.
pub fn scan_levels(levels: &[u64], m: u64, chi: &DirichletCharacter, rule: SigmaRule, policy: &TruncationPolicy) -> Vec<ScanRow> {
    levels
        .iter()
        .map(|&level| {
            scan_row(level, m, chi, rule, policy).unwrap_or_else(|e| ScanRow {
                level,
                sigma: rule.sigma(level, chi.modulus()),
                deviation: f64::NAN,
                radius: f64::NAN,
                bound_total: f64::NAN,
                scaled_deviation: f64::NAN,
                verdict: None,
                error: Some(e.to_string()),
            })
        })
        .collect()
}

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["level", "sigma", "deviation", "radius", "bound_total", "scaled_deviation", "verdict", "error"])?;
    for r in rows {
        let num = |x: f64| if x.is_nan() { String::new() } else { format!("{x:.16e}") };
        let verdict = match r.verdict {
            Some(Verdict::Pass) => "pass",
            Some(Verdict::Fail) => "fail",
            Some(Verdict::Inconclusive) => "inconclusive",
            None => "",
        };
        w.write_record([
            r.level.to_string(),
            num(r.sigma),
            num(r.deviation),
            num(r.radius),
            num(r.bound_total),
            num(r.scaled_deviation),
            verdict.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Certified,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct FDeltaStep {
    pub m: u64,
    /// |(a_m, A) - 4πχ(m)| at the computed value.
    pub center: f64,
    /// Radius of the (a_m, L_χ) enclosure.
    pub radius: f64,
    pub lower: f64,
    pub upper: f64,
    pub status: StepStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct FDeltaResult {
    pub level: u64,
    pub delta: f64,
    /// Largest m* with every m ≤ m* certified within δ.
    pub m_star: u64,
    /// Set when the scan stopped at an inconclusive enclosure: the value is
    /// the last certified m.
    pub inconclusive_beyond: Option<u64>,
    /// True when every m up to the limit was certified.
    pub exhausted: bool,
    pub trail: Vec<FDeltaStep>,
}

/// Walks m = 1, 2, ..., m_limit while |(a_m, L_χ) - 4πχ(m)| is certified
/// to be at most δ.
pub fn f_delta_scan(level: u64, delta: f64, chi: &DirichletCharacter, rule: SigmaRule, policy: &TruncationPolicy, m_limit: u64) -> Result<FDeltaResult> {
    if !(delta > 0.0) {
        return Err(Error::OutOfRange {
            what: "delta",
            value: delta,
        });
    }
    let sigma = rule.sigma(level, chi.modulus());
    let mut trail = Vec::new();
    let mut m_star = 0;
    let mut inconclusive_beyond = None;
    for m in 1..=m_limit {
        let params = AveragingParams::theorem(level, m, chi.clone(), sigma)?;
        let sums = geometric_sums(&params, policy)?;
        let b = b_functional_bound(&params)?;
        let target = params.chi_at(m) * (4.0 * PI);
        let center = (sums.approx.value - target).norm();
        let radius = sums.approx.tail_radius + b;
        let lower = (center - radius).max(0.0);
        let upper = center + radius;
        let status = if upper <= delta {
            StepStatus::Certified
        } else if lower > delta {
            StepStatus::Violated
        } else {
            StepStatus::Inconclusive
        };
        trail.push(FDeltaStep {
            m,
            center,
            radius,
            lower,
            upper,
            status,
        });
        match status {
            StepStatus::Certified => m_star = m,
            StepStatus::Violated => break,
            StepStatus::Inconclusive => {
                inconclusive_beyond = Some(m_star);
                break;
            }
        }
    }
    Ok(FDeltaResult {
        level,
        delta,
        m_star,
        inconclusive_beyond,
        exhausted: m_star == m_limit,
        trail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(level: u64, m: u64, q: u64, index: usize, sigma: f64) -> AveragingParams {
        AveragingParams::new(level, m, DirichletCharacter::new(q, index).unwrap(), sigma).unwrap()
    }

    #[test]
    fn closed_form_bounds() {
        let p = params(400, 1, 1, 0, 1.0);
        let b = proposition_bounds(&p, 1 << 16).unwrap();
        let ln = 400f64.ln();
        let decay = (-400.0 / (TAU * ln)).exp();
        assert!((b.e1 - 16.0 / 3.0 * PI.powi(3) * ln * decay).abs() < 1e-12);
        assert!((b.e1 - 0.024).abs() < 1e-3);
        let z72 = zeta_seven_halves().midpoint().powi(2);
        let e2 = 8.0 / 9.0 * PI.powi(5) * z72 * 400f64.powf(-1.5) * ln * ln;
        assert!((b.e2 - e2).abs() < 1e-9 * e2);
        let z32 = zeta_three_halves().midpoint().powi(2);
        let e3 = 8.0 / 3.0 * z32 * PI.powi(3) / 20.0 * ln * 15.0 * decay;
        assert!((b.e3 - e3).abs() < 1e-9 * e3);
        assert!(b.e3_upper.lower > 0.0 && b.e3_upper.upper >= b.e3_upper.lower);
    }

    #[test]
    fn hypotheses_are_named() {
        let p = params(399, 1, 1, 0, 1.0);
        assert!(matches!(
            proposition_bounds(&p, 1024),
            Err(Error::Hypothesis(Hypothesis::LevelAtLeast400))
        ));
        let p = params(400, 1, 800, 0, 1e6);
        assert!(matches!(
            proposition_bounds(&p, 1024),
            Err(Error::Hypothesis(Hypothesis::LevelNotDividingModulus))
        ));
    }

    #[test]
    fn branch_crossover() {
        let p = params(400, 1, 1, 0, 1.0);
        let (small, large) = branch_values(&p, 400).unwrap();
        assert!(small < large);
        let (small, large) = branch_values(&p, 400_000_000).unwrap();
        assert!(large < small);
    }

    #[test]
    fn min_branch_tail_dominates_exact_sum() {
        let p = params(400, 1, 1, 0, 1.0);
        let coarse = MinBranch::new(&p, 1 << 10).unwrap();
        let fine = MinBranch::new(&p, 1 << 18).unwrap();
        let exact_part = fine.head() - coarse.head();
        assert!(exact_part <= coarse.upper_tail());
        assert!(fine.enclosure().upper <= coarse.enclosure().upper * (1.0 + 1e-12));
        let mid = coarse.tail_after(100).unwrap();
        assert!(mid >= coarse.head() - coarse.head_upto(100).unwrap());
    }

    #[test]
    fn divisor_tail_inequality() {
        let table = crate::arith::divisor_count_table(2_000_000);
        for x in [1usize, 10, 1000, 100_000] {
            let partial: f64 = table[x + 1..].iter().enumerate().map(|(i, &d)| d as f64 * ((x + 1 + i) as f64).powf(-1.5)).sum();
            let xf = x as f64;
            assert!(partial <= (3.0 * xf.ln() + 9.0) / xf.sqrt());
        }
    }

    #[test]
    fn sigma_rules() {
        assert_eq!(SigmaRule::QSquared.sigma(400, 3), 9.0);
        assert_eq!(SigmaRule::Floor.sigma(400, 1), 1.0);
        assert!((SigmaRule::Floor.sigma(400, 5) - 25.0 / TAU * 1.01).abs() < 1e-12);
        assert_eq!("2.5".parse::<SigmaRule>().unwrap(), SigmaRule::Fixed(2.5));
        assert!("bogus".parse::<SigmaRule>().is_err());
    }

    #[test]
    fn verdict_rules() {
        assert_eq!(Verdict::judge(0.5, 1.0, 1.0, 1.0), Verdict::Pass);
        assert_eq!(Verdict::judge(1.5, 2.0, 1.0, 1.0), Verdict::Fail);
        assert_eq!(Verdict::judge(0.5, 1.5, 1.0, 1.0), Verdict::Inconclusive);
        assert_eq!(Verdict::combine([Verdict::Pass, Verdict::Inconclusive]), Verdict::Inconclusive);
        assert_eq!(Verdict::combine([Verdict::Inconclusive, Verdict::Fail]), Verdict::Fail);
    }
}
