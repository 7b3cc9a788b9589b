//! The geometric side of the Petersson formula for weight 2 and level N,
//! used as the definition of the inner products (a_m, a_n), together with
//! the exponentially weighted functional (a_m, A(x)) and its main term.
//!
//! All truncated sums are reported with a rigorous radius bounding the
//! discarded terms.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{divisor_count, divisor_count_table, gcd};
use crate::bounds::MinBranch;
use crate::characters::DirichletCharacter;
use crate::error::{Error, Hypothesis, Result};
use crate::kloosterman::{closed_form, geometric_tail, weighted_geometric_tail, KloostermanCache};
use crate::special::{j1, j1_minus_half, zeta_seven_halves, zeta_three_halves, CompensatedSum, ComplexSum};

/// (N, m, χ, σ) with A = σ N log N.
#[derive(Debug, Clone)]
pub struct AveragingParams {
    level: u64,
    m: u64,
    chi: DirichletCharacter,
    sigma: f64,
    chi_table: Arc<Vec<Complex64>>,
}

impl AveragingParams {
    pub fn new(level: u64, m: u64, chi: DirichletCharacter, sigma: f64) -> Result<Self> {
        if level < 2 {
            return Err(Error::InvalidParameter(format!(
                "level N = {level} must be at least 2 so that log N > 0"
            )));
        }
        if m == 0 {
            return Err(Error::Zero("m"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::OutOfRange {
                what: "sigma",
                value: sigma,
            });
        }
        let chi_table = Arc::new(chi.value_table());
        Ok(Self {
            level,
            m,
            chi,
            sigma,
            chi_table,
        })
    }

    /// Constructs and checks every hypothesis of the main theorem.
    pub fn theorem(level: u64, m: u64, chi: DirichletCharacter, sigma: f64) -> Result<Self> {
        let p = Self::new(level, m, chi, sigma)?;
        p.check_theorem()?;
        Ok(p)
    }

    /// N ≥ 400, N ∤ q, q²/2π ≤ σ ≤ N q / log N and A ≥ 300, in that order.
    pub fn check_theorem(&self) -> Result<()> {
        let n = self.level as f64;
        let q = self.modulus();
        if self.level < 400 {
            return Err(Error::Hypothesis(Hypothesis::LevelAtLeast400));
        }
        if q % self.level == 0 {
            return Err(Error::Hypothesis(Hypothesis::LevelNotDividingModulus));
        }
        let qf = q as f64;
        if self.sigma < qf * qf / TAU {
            return Err(Error::Hypothesis(Hypothesis::SigmaLowerWindow));
        }
        if self.sigma > n * qf / n.ln() {
            return Err(Error::Hypothesis(Hypothesis::SigmaUpperWindow));
        }
        if self.scale() < 300.0 {
            return Err(Error::Hypothesis(Hypothesis::ScaleAtLeast300));
        }
        Ok(())
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn chi(&self) -> &DirichletCharacter {
        &self.chi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// The modulus q of χ.
    pub fn modulus(&self) -> u64 {
        self.chi.modulus()
    }

    /// A = σ N log N.
    pub fn scale(&self) -> f64 {
        self.sigma * self.level as f64 * (self.level as f64).ln()
    }

    /// M = q² N.
    pub fn big_m(&self) -> u64 {
        let q = self.modulus();
        q * q * self.level
    }

    /// χ(0), ..., χ(q - 1).
    pub fn chi_table(&self) -> &[Complex64] {
        &self.chi_table
    }

    pub fn chi_at(&self, n: u64) -> Complex64 {
        self.chi_table[(n % self.modulus()) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// One index set (n ≤ n_max, b ≤ b_max) for every sum.
    Shared,
    /// As shared for the Bessel sums; E^{(3)} is resummed exactly in n and
    /// runs over b ≤ closed_b_max.
    Adaptive,
}

/// Cutoffs for the n- and c-sums, with c = N b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationPolicy {
    /// Explicit n cutoff; derived from `rel_tol` when absent.
    pub n_max: Option<u64>,
    /// Largest b of the Bessel sums. Raised automatically to cover the
    /// range c ≤ 2π√(m n_max).
    pub b_max: u64,
    pub mode: TruncationMode,
    pub rel_tol: f64,
    /// Largest b of the resummed E^{(3)} in adaptive mode.
    pub closed_b_max: u64,
    /// Where the min-branch sum switches from exact terms to the analytic
    /// tail.
    pub tail_b: u64,
}

pub const THEOREM_REL_TOL: f64 = 1e-18;
pub const SCAN_REL_TOL: f64 = 1e-12;
pub const DEFAULT_B_MAX: u64 = 16;
pub const DEFAULT_TAIL_B: u64 = 1 << 24;

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self::theorem()
    }
}

impl TruncationPolicy {
    pub fn theorem() -> Self {
        Self {
            n_max: None,
            b_max: DEFAULT_B_MAX,
            mode: TruncationMode::Adaptive,
            rel_tol: THEOREM_REL_TOL,
            closed_b_max: DEFAULT_B_MAX,
            tail_b: DEFAULT_TAIL_B,
        }
    }

    pub fn shared(n_max: Option<u64>, b_max: u64) -> Self {
        Self {
            n_max,
            b_max,
            mode: TruncationMode::Shared,
            rel_tol: THEOREM_REL_TOL,
            closed_b_max: b_max,
            tail_b: DEFAULT_TAIL_B,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_max == 0 {
            return Err(Error::Zero("b_max"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::OutOfRange {
                what: "rel_tol",
                value: self.rel_tol,
            });
        }
        if self.n_max == Some(0) {
            return Err(Error::Zero("n_max"));
        }
        Ok(())
    }

    /// The n cutoff for a weight scale A: the first n with e^{-2πn/A} < rel_tol,
    /// unless fixed explicitly.
    pub fn n_cutoff(&self, scale: f64) -> u64 {
        match self.n_max {
            Some(n) => n,
            None => (scale * (1.0 / self.rel_tol).ln() / TAU).floor() as u64 + 1,
        }
    }
}

/// A truncated sum and a bound on the discarded part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumWithTail {
    pub value: Complex64,
    pub tail_radius: f64,
}

impl SumWithTail {
    pub fn new(value: Complex64, tail_radius: f64) -> Self {
        Self { value, tail_radius }
    }

    pub fn real(value: f64, tail_radius: f64) -> Self {
        Self::new(Complex64::new(value, 0.0), tail_radius)
    }

    /// |value| + tail_radius.
    pub fn upper(&self) -> f64 {
        self.value.norm() + self.tail_radius
    }

    /// max(|value| - tail_radius, 0).
    pub fn lower(&self) -> f64 {
        (self.value.norm() - self.tail_radius).max(0.0)
    }
}

/// The shared "small c" predicate c ≤ 2π√(mn), as c² ≤ 4π² m n.
#[inline]
pub fn is_small_modulus(c: u64, m: u64, n: u64) -> bool {
    let c = c as f64;
    c * c <= 4.0 * PI * PI * m as f64 * n as f64
}

/// 4π χ(m) e^{-2πm/A}.
pub fn main_term(params: &AveragingParams) -> Complex64 {
    let w = (-TAU * params.m() as f64 / params.scale()).exp();
    params.chi_at(params.m()) * (4.0 * PI * w)
}

/// Σ_{b ≤ B} d(b) b^{-s}.
pub(crate) fn divisor_dirichlet_partial(s: f64, b: u64) -> f64 {
    let table = divisor_count_table(b as usize);
    let mut sum = CompensatedSum::new();
    for k in (1..=b as usize).rev() {
        sum.add(table[k] as f64 * (k as f64).powf(-s));
    }
    sum.value()
}

/// Bound on Σ_{b > B} (Nb)^{-3/2} d(Nb) via d(Nb) ≤ d(N) d(b) and the
/// enclosure of ζ(3/2)².
pub fn c_tail_three_halves(level: u64, b: u64) -> Result<f64> {
    let z2 = zeta_three_halves().square().upper;
    let rest = z2 - divisor_dirichlet_partial(1.5, b);
    // The partial sum is accurate to a few ulp; keep the bracket non-negative.
    let rest = rest.max(0.0) + 1e-12;
    Ok((level as f64).powf(-1.5) * divisor_count(level)? as f64 * rest)
}

/// The inner product on the geometric side,
///
/// (a_m, a_n) = 4π√(mn) δ_{mn} - 8π²√(mn) Σ_{b ≤ b_max} (Nb)^{-1} S(m, n; Nb) J_1(4π√(mn)/Nb).
pub fn inner_product(m: u64, n: u64, level: u64, policy: &TruncationPolicy) -> Result<SumWithTail> {
    if m == 0 || n == 0 {
        return Err(Error::Zero("coefficient index"));
    }
    if level == 0 {
        return Err(Error::Zero("level"));
    }
    policy.validate()?;
    let (lo, hi) = (m.min(n), m.max(n));
    let root = ((m * n) as f64).sqrt();
    let cache = KloostermanCache::global();
    let terms: Vec<f64> = (1..=policy.b_max)
        .into_par_iter()
        .map(|b| -> Result<f64> {
            let c = level * b;
            let s = cache.row(lo as i64, c)?[(hi % c) as usize];
            let cf = c as f64;
            Ok(s / cf * j1(4.0 * PI * root / cf))
        })
        .collect::<Result<_>>()?;
    let mut sum = CompensatedSum::new();
    for t in terms {
        sum.add(t);
    }
    let diag = if m == n { 4.0 * PI * root } else { 0.0 };
    let value = diag - 8.0 * PI * PI * root * sum.value();
    let g = (gcd(m, n) as f64).sqrt();
    let tail = 16.0 * PI.powi(3) * (m * n) as f64 * g * c_tail_three_halves(level, policy.b_max)?;
    Ok(SumWithTail::real(value, tail))
}

/// 8 ζ(3/2)² π² (m, n)^{1/2} m n N^{-3/2} d(N), with the upper endpoint of
/// the ζ enclosure.
pub fn inner_product_bound(m: u64, n: u64, level: u64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::Zero("coefficient index"));
    }
    let z2 = zeta_three_halves().square().upper;
    let g = (gcd(m, n) as f64).sqrt();
    Ok(8.0 * z2 * PI * PI * g * (m * n) as f64 * (level as f64).powf(-1.5) * divisor_count(level)? as f64)
}

/// 30 (400/399)³ e^{2π} q² m^{3/2} N^{-1/2} d(N) N^{-2πσ/q²}.
pub fn b_functional_bound(params: &AveragingParams) -> Result<f64> {
    if params.level() < 400 {
        return Err(Error::Hypothesis(Hypothesis::LevelAtLeast400));
    }
    let q = params.modulus() as f64;
    if !(params.sigma() > q * q / TAU) {
        return Err(Error::Hypothesis(Hypothesis::SigmaStrictlyAboveLower));
    }
    let n = params.level() as f64;
    let m = params.m() as f64;
    let d = divisor_count(params.level())? as f64;
    Ok(30.0 * (400.0f64 / 399.0).powi(3) * TAU.exp() * q * q * m.powf(1.5) / n.sqrt() * d * n.powf(-TAU * params.sigma() / (q * q)))
}

/// Every truncated sum of the geometric side for one parameter set, on one
/// index set.
#[derive(Debug, Clone)]
pub struct GeometricSums {
    pub n_max: u64,
    /// Largest b of the Bessel sums.
    pub b_loop: u64,
    /// Largest b of the E^{(3)} sum reported in `e3_upper`.
    pub b_upper: u64,
    pub mode: TruncationMode,
    pub main: Complex64,
    /// (a_m, A(σ N log N)).
    pub approx: SumWithTail,
    pub e1: SumWithTail,
    pub e2: SumWithTail,
    pub e3: SumWithTail,
    /// E^{(3)} on the Bessel index set, as used by the identity.
    pub e3_upper_shared: SumWithTail,
    /// E^{(3)} as reported: equal to the shared one in shared mode, resummed
    /// in n in adaptive mode.
    pub e3_upper: SumWithTail,
    /// Bessel-loop sum of t·J over every term, so that
    /// approx_shared = main - bessel_total.
    pub approx_shared: Complex64,
    /// E^{(1)} = Σ over c > 2π√(mn) of the full Bessel terms.
    pub e1_sum: Complex64,
    /// E1 and E3 are supported on n ≥ N²/(4π²m); set when n_max is below that.
    pub zero_coverage: bool,
}

impl GeometricSums {
    /// approx_shared - (main - E^{(3)} + E3 - E2 - E1) on the shared index set.
    pub fn identity_residual(&self) -> f64 {
        let rhs = self.main - self.e3_upper_shared.value + self.e3.value - self.e2.value - self.e1.value;
        (self.approx_shared - rhs).norm()
    }

    /// E2 recomputed as E^{(1)} - (E^{(3)} - E3).
    pub fn e2_algebraic(&self) -> Complex64 {
        self.e1_sum - (self.e3_upper_shared.value - self.e3.value)
    }
}

#[derive(Default, Clone, Copy)]
struct Partial {
    bessel: ComplexSum,
    e1: ComplexSum,
    e2: ComplexSum,
    e3: ComplexSum,
    e3up: ComplexSum,
    e1sum: ComplexSum,
}

/// Support threshold for E1 and E3: the least n with N ≤ 2π√(mn).
pub fn support_threshold(level: u64, m: u64) -> u64 {
    let mut n = ((level * level) as f64 / (4.0 * PI * PI * m as f64)).floor() as u64;
    while n > 1 && is_small_modulus(level, m, n - 1) {
        n -= 1;
    }
    while !is_small_modulus(level, m, n) {
        n += 1;
    }
    n.max(1)
}

/// Evaluates the truncated geometric side for `params` under `policy`.
pub fn geometric_sums(params: &AveragingParams, policy: &TruncationPolicy) -> Result<GeometricSums> {
    policy.validate()?;
    let level = params.level();
    let m = params.m();
    let mf = m as f64;
    let a_scale = params.scale();
    let x = TAU / a_scale;
    let n_max = policy.n_cutoff(a_scale).max(m);
    let reach = (TAU * (mf * n_max as f64).sqrt() / level as f64).floor() as u64;
    let b_loop = policy.b_max.max(reach);
    let b_upper = match policy.mode {
        TruncationMode::Shared => b_loop,
        TruncationMode::Adaptive => policy.closed_b_max.max(b_loop),
    };
    let threshold = support_threshold(level, m);
    let zero_coverage = n_max < threshold;

    // Per-n factor 8π²√m n^{-1/2} χ(n) e^{-2πn/A}; zero entries skipped.
    let coef: Vec<(u64, Complex64)> = (1..=n_max)
        .filter_map(|n| {
            let v = params.chi_at(n);
            if v.re == 0.0 && v.im == 0.0 {
                return None;
            }
            let w = (-x * n as f64).exp();
            Some((n, v * (8.0 * PI * PI * mf.sqrt() * w / (n as f64).sqrt())))
        })
        .collect();

    let cache = KloostermanCache::global();
    let partials: Vec<Partial> = (1..=b_loop)
        .into_par_iter()
        .map(|b| -> Result<Partial> {
            let c = level * b;
            let cf = c as f64;
            let row = cache.row(m as i64, c)?;
            let mut p = Partial::default();
            for &(n, k) in &coef {
                let s = row[(n % c) as usize];
                let t = k * (s / cf);
                let a = 4.0 * PI * (mf * n as f64).sqrt() / cf;
                let half = 0.5 * a;
                if is_small_modulus(c, m, n) {
                    let j = j1(a);
                    let tj = t * j;
                    p.bessel.add(tj);
                    p.e1.add(tj);
                    let t3 = t * half;
                    p.e3.add(t3);
                    p.e3up.add(t3);
                } else {
                    let r = j1_minus_half(a);
                    let tj = t * (r + half);
                    p.bessel.add(tj);
                    p.e1sum.add(tj);
                    p.e2.add(t * r);
                    p.e3up.add(t * half);
                }
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;

    let mut total = Partial::default();
    for p in &partials {
        total.bessel.add(p.bessel.value());
        total.e1.add(p.e1.value());
        total.e2.add(p.e2.value());
        total.e3.add(p.e3.value());
        total.e3up.add(p.e3up.value());
        total.e1sum.add(p.e1sum.value());
    }

    let main = main_term(params);
    let level_f = level as f64;
    let d_level = divisor_count(level)? as f64;
    let pi3 = PI.powi(3);
    let z32 = zeta_three_halves().square().upper;
    let z72 = zeta_seven_halves().square().upper;

    let support_tail = geometric_tail(x, n_max.max(threshold - 1));
    let e1_tail = 16.0 * pi3 * mf / level_f * support_tail;
    let e3_tail = 16.0 * pi3 * mf.powf(1.5) * level_f.powf(-1.5) * d_level * z32 * support_tail;
    let e2_coef = 32.0 * PI.powi(5) * mf.powf(2.5) * level_f.powf(-3.5) * d_level;
    let c_rest = (z72 - divisor_dirichlet_partial(3.5, b_loop)).max(0.0) + 1e-15;
    let e2_tail = e2_coef * (z72 * weighted_geometric_tail(x, n_max) + c_rest * weighted_geometric_tail(x, 0));
    let n_tail_up = 16.0 * pi3 * mf.powf(1.5) * level_f.powf(-1.5) * d_level * z32 * geometric_tail(x, n_max);

    let branch = MinBranch::new(params, policy.tail_b)?;
    let c_tail_shared = 16.0 * pi3 * mf * branch.tail_after(b_loop)?;
    let e3_upper_shared = SumWithTail::new(total.e3up.value(), 2.0 * n_tail_up + c_tail_shared);

    let e3_upper = match policy.mode {
        TruncationMode::Shared => e3_upper_shared,
        TruncationMode::Adaptive => {
            let chi = params.chi_table();
            let parts: Vec<Complex64> = (1..=b_upper)
                .into_par_iter()
                .map(|b| -> Result<Complex64> {
                    let c = level * b;
                    let s = closed_form(m, c, chi, a_scale)?;
                    Ok(s * (16.0 * pi3 * mf / (c as f64 * c as f64)))
                })
                .collect::<Result<_>>()?;
            let mut sum = ComplexSum::new();
            for p in parts {
                sum.add(p);
            }
            SumWithTail::new(sum.value(), 16.0 * pi3 * mf * branch.tail_after(b_upper)?)
        }
    };

    let e1 = SumWithTail::new(total.e1.value(), e1_tail);
    let e2 = SumWithTail::new(total.e2.value(), e2_tail);
    let e3 = SumWithTail::new(total.e3.value(), e3_tail);
    let approx_shared = main - total.bessel.value();
    let approx_value = match policy.mode {
        TruncationMode::Shared => approx_shared,
        TruncationMode::Adaptive => main - e3_upper.value + e3.value - e2.value - e1.value,
    };
    let approx = SumWithTail::new(
        approx_value,
        e1.tail_radius + e2.tail_radius + e3.tail_radius + e3_upper.tail_radius,
    );

    Ok(GeometricSums {
        n_max,
        b_loop,
        b_upper,
        mode: policy.mode,
        main,
        approx,
        e1,
        e2,
        e3,
        e3_upper_shared,
        e3_upper,
        approx_shared,
        e1_sum: total.e1sum.value(),
        zero_coverage,
    })
}

/// (a_m, A(σ N log N)) with its enclosure radius.
pub fn approx_average(params: &AveragingParams, policy: &TruncationPolicy) -> Result<SumWithTail> {
    Ok(geometric_sums(params, policy)?.approx)
}
