//! Kloosterman sums S(m, n; c), the Weil bound, and the character-twisted,
//! exponentially weighted sums
//!
//! S(c) = Σ_{n ≥ 1} χ(n) e^{-2πn/A} S(m, n; c)
//!
//! evaluated either by truncating the n-series or by resumming over residues
//! with a geometric series.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::arith::{divisor_count, euler_phi, factorize, gcd};
use crate::error::{Error, Result};
use crate::petersson::AveragingParams;
use crate::special::{CompensatedSum, ComplexSum};

/// Largest modulus accepted by the row and closed-form evaluators (products
/// of residues must fit in a u64).
pub const MAX_C: u64 = 1 << 32;

/// (m mod c, n mod c, c), with the two residues sorted so that the key of
/// (m, n, c) equals the key of (n, m, c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KloostermanKey {
    pub m_red: u64,
    pub n_red: u64,
    pub c: u64,
}

impl KloostermanKey {
    pub fn new(m: i64, n: i64, c: u64) -> Result<Self> {
        if c == 0 {
            return Err(Error::Zero("c"));
        }
        let a = m.rem_euclid(c as i64) as u64;
        let b = n.rem_euclid(c as i64) as u64;
        Ok(Self {
            m_red: a.min(b),
            n_red: a.max(b),
            c,
        })
    }
}

/// Units x modulo c paired with their inverses, x ascending. For c = 1 the
/// single residue 0 is its own inverse.
pub(crate) fn unit_inverse_pairs(c: u64) -> Result<Vec<(u64, u64)>> {
    if c == 0 {
        return Err(Error::Zero("c"));
    }
    if c > MAX_C {
        return Err(Error::TooLarge {
            what: "c",
            value: c,
            limit: MAX_C,
        });
    }
    if c == 1 {
        return Ok(vec![(0, 0)]);
    }
    let mut is_unit = vec![true; c as usize];
    is_unit[0] = false;
    for &(p, _) in factorize(c)?.factors() {
        let mut k = p;
        while k < c {
            is_unit[k as usize] = false;
            k += p;
        }
    }
    let units: Vec<u64> = (1..c).filter(|&x| is_unit[x as usize]).collect();

    // Montgomery batch inversion: one extended gcd for the whole group.
    let mut prefix = Vec::with_capacity(units.len());
    let mut acc = 1u64;
    for &u in &units {
        acc = acc * u % c;
        prefix.push(acc);
    }
    let mut inv_acc = crate::arith::mod_inverse(acc as i64, c)?;
    let mut pairs = vec![(0u64, 0u64); units.len()];
    for i in (0..units.len()).rev() {
        let before = if i == 0 { 1 } else { prefix[i - 1] };
        pairs[i] = (units[i], inv_acc * before % c);
        inv_acc = inv_acc * units[i] % c;
    }
    Ok(pairs)
}

thread_local! {
    static COS_TABLE: RefCell<(u64, Vec<f64>)> = const { RefCell::new((0, Vec::new())) };
}

/// S(m, n; c) = Σ_{x ∈ (Z/c)^*} cos(2π(m x + n x̄)/c).
pub fn kloosterman_sum(m: i64, n: i64, c: u64) -> Result<f64> {
    let key = KloostermanKey::new(m, n, c)?;
    kloosterman_sum_key(key)
}

pub fn kloosterman_sum_key(key: KloostermanKey) -> Result<f64> {
    let KloostermanKey { m_red, n_red, c } = key;
    if c == 1 {
        return Ok(1.0);
    }
    let pairs = unit_inverse_pairs(c)?;
    COS_TABLE.with(|cell| {
        let mut cell = cell.borrow_mut();
        if cell.0 != c {
            let table = (0..c).map(|k| (TAU * k as f64 / c as f64).cos()).collect();
            *cell = (c, table);
        }
        let table = &cell.1;
        let mut sum = CompensatedSum::new();
        for &(x, y) in &pairs {
            let k = ((m_red as u128 * x as u128 + n_red as u128 * y as u128) % c as u128) as usize;
            sum.add(table[k]);
        }
        Ok(sum.value())
    })
}

/// (m, n, c)^{1/2} d(c) c^{1/2}.
pub fn weil_bound(m: u64, n: u64, c: u64) -> Result<f64> {
    if c == 0 {
        return Err(Error::Zero("c"));
    }
    let g = gcd(gcd(m, n), c);
    let d = divisor_count(c)?;
    Ok(((g as f64) * (c as f64)).sqrt() * d as f64)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// The row r ↦ S(m, r; c) for r = 0, ..., c - 1.
///
/// With g[x̄] = e(m x / c) summed over units x, S(m, r; c) is the
/// unnormalized inverse DFT of g evaluated at r.
pub fn kloosterman_row(m: i64, c: u64) -> Result<Vec<f64>> {
    if c == 1 {
        return Ok(vec![1.0]);
    }
    let pairs = unit_inverse_pairs(c)?;
    let m_red = m.rem_euclid(c as i64) as u64;
    let mut g = vec![Complex64::new(0.0, 0.0); c as usize];
    for &(x, y) in &pairs {
        let k = (m_red as u128 * x as u128 % c as u128) as f64;
        let (s, co) = (TAU * k / c as f64).sin_cos();
        g[y as usize] += Complex64::new(co, s);
    }
    PLANNER.with(|p| {
        let fft = p.borrow_mut().plan_fft_inverse(c as usize);
        fft.process(&mut g);
    });
    Ok(g.into_iter().map(|z| z.re).collect())
}

/// Bounded, thread-safe cache of Kloosterman rows keyed by (m mod c, c).
///
/// Capacity counts stored residues. When full, the least recently used rows
/// are evicted. Concurrent misses on the same row may both compute it; the
/// first insert wins.
pub struct KloostermanCache {
    capacity: usize,
    inner: Mutex<CacheInner>,
}

#[derive(Default)]
struct CacheInner {
    rows: HashMap<(u64, u64), (Arc<Vec<f64>>, u64)>,
    stored: usize,
    tick: u64,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 22;

impl KloostermanCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            inner: Mutex::new(CacheInner::default()),
        }
    }

    /// The process-wide cache used by the evaluators in this crate.
    pub fn global() -> &'static KloostermanCache {
        static CACHE: OnceLock<KloostermanCache> = OnceLock::new();
        CACHE.get_or_init(|| KloostermanCache::new(DEFAULT_CACHE_CAPACITY))
    }

    pub fn row(&self, m: i64, c: u64) -> Result<Arc<Vec<f64>>> {
        if c == 0 {
            return Err(Error::Zero("c"));
        }
        let key = (m.rem_euclid(c as i64) as u64, c);
        {
            let mut inner = self.inner.lock().expect("cache lock");
            inner.tick += 1;
            let tick = inner.tick;
            if let Some(entry) = inner.rows.get_mut(&key) {
                entry.1 = tick;
                return Ok(entry.0.clone());
            }
        }
        let row = Arc::new(kloosterman_row(key.0 as i64, c)?);
        if row.len() > self.capacity {
            return Ok(row);
        }
        let mut inner = self.inner.lock().expect("cache lock");
        if let Some(entry) = inner.rows.get(&key) {
            return Ok(entry.0.clone());
        }
        while inner.stored + row.len() > self.capacity {
            let oldest = inner
                .rows
                .iter()
                .min_by_key(|(_, (_, t))| *t)
                .map(|(k, _)| *k)
                .expect("non-empty while over capacity");
            let (old, _) = inner.rows.remove(&oldest).expect("present");
            inner.stored -= old.len();
        }
        inner.tick += 1;
        let tick = inner.tick;
        inner.stored += row.len();
        inner.rows.insert(key, (row.clone(), tick));
        Ok(row)
    }

    pub fn get(&self, m: i64, n: i64, c: u64) -> Result<f64> {
        let row = self.row(m, c)?;
        Ok(row[n.rem_euclid(c as i64) as usize])
    }

    /// Number of residues currently stored.
    pub fn stored(&self) -> usize {
        self.inner.lock().expect("cache lock").stored
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistedSumValue {
    pub c: u64,
    pub value: Complex64,
    pub method: Method,
    pub tail_radius: f64,
}

fn check_multiple(c: u64, params: &AveragingParams) -> Result<()> {
    if c == 0 || c % params.level() != 0 {
        return Err(Error::NotMultipleOfLevel {
            c,
            level: params.level(),
        });
    }
    Ok(())
}

/// Σ_{n > n0} e^{-x n} = e^{-x(n0+1)} / (1 - e^{-x}).
pub fn geometric_tail(x: f64, n0: u64) -> f64 {
    (-x * (n0 as f64 + 1.0)).exp() / -(-x).exp_m1()
}

/// Σ_{n > n0} n e^{-x n}.
pub fn weighted_geometric_tail(x: f64, n0: u64) -> f64 {
    let r = (-x).exp();
    let k = n0 as f64 + 1.0;
    let one_minus_r = -(-x).exp_m1();
    (-x * k).exp() * (k - (k - 1.0) * r) / (one_minus_r * one_minus_r)
}

/// Direct truncation of S(c) at n ≤ n_max. The tail radius bounds the
/// discarded terms by the Weil bound times the geometric tail of the weights.
pub fn twisted_sum_direct(c: u64, params: &AveragingParams, n_max: u64) -> Result<TwistedSumValue> {
    check_multiple(c, params)?;
    let m = params.m();
    let x = TAU / params.scale();
    let chi = params.chi_table();
    let q = chi.len() as u64;
    let row = KloostermanCache::global().row(m as i64, c)?;
    let mut sum = ComplexSum::new();
    for n in 1..=n_max {
        let v = chi[(n % q) as usize];
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let w = (-x * n as f64).exp();
        sum.add(v * (w * row[(n % c) as usize]));
    }
    let tail = weil_bound(m, 0, c)? * geometric_tail(x, n_max);
    Ok(TwistedSumValue {
        c,
        value: sum.value(),
        method: Method::Direct,
        tail_radius: tail,
    })
}

/// S(c) = Σ_{y ∈ (Z/c)^*} e(m ȳ / c) Σ_{α=1}^{q} χ(α) e^{α ε_y} / (1 - e^{q ε_y})
/// with ε_y = 2π(-1/A + i y / c).
pub fn twisted_sum_closed(c: u64, params: &AveragingParams) -> Result<TwistedSumValue> {
    check_multiple(c, params)?;
    let value = closed_form(params.m(), c, &params.chi_table(), params.scale())?;
    Ok(TwistedSumValue {
        c,
        value,
        method: Method::ClosedForm,
        tail_radius: 0.0,
    })
}

/// Resummed S(c) for modulus c, weight scale `a` and character values
/// χ(0), ..., χ(q - 1).
pub(crate) fn closed_form(m: u64, c: u64, chi: &[Complex64], a: f64) -> Result<Complex64> {
    let q = chi.len() as u64;
    let pairs = unit_inverse_pairs(c)?;
    let roots: Vec<Complex64> = (0..c)
        .map(|k| {
            let (s, co) = (TAU * k as f64 / c as f64).sin_cos();
            Complex64::new(co, s)
        })
        .collect();
    let decay: Vec<f64> = (0..=q).map(|al| (-TAU * al as f64 / a).exp()).collect();
    let one_minus_rho = -(-TAU * q as f64 / a).exp_m1();
    let rho = decay[q as usize];
    let m_red = m % c;
    let mut sum = ComplexSum::new();
    for &(x, y) in &pairs {
        let mut num = Complex64::new(0.0, 0.0);
        for al in 1..=q {
            let v = chi[(al % q) as usize];
            if v.re == 0.0 && v.im == 0.0 {
                continue;
            }
            let k = (al as u128 * y as u128 % c as u128) as usize;
            num += v * roots[k] * decay[al as usize];
        }
        // 1 - ρ e(qy/c), with the real part assembled from non-negative pieces.
        let k = (q as u128 * y as u128 % c as u128) as usize;
        let e = roots[k];
        let den = Complex64::new(one_minus_rho + rho * (1.0 - e.re), -rho * e.im);
        if den.norm() < 1e-15 {
            return Err(Error::DivergentDenominator { c, y });
        }
        let phase = roots[(m_red as u128 * x as u128 % c as u128) as usize];
        sum.add(phase * num / den);
    }
    Ok(sum.value())
}

/// ((2/π) φ(q) c log c, (1/6) A m^{1/2} c^{1/2} d(c)): the small- and
/// large-range bounds on |S(c)|, valid for c > 400.
pub fn twisted_sum_bounds(c: u64, params: &AveragingParams) -> Result<(f64, f64)> {
    check_multiple(c, params)?;
    if c <= 400 {
        return Err(Error::BelowDerivationRange { c });
    }
    let phi_q = euler_phi(params.modulus())? as f64;
    let cf = c as f64;
    let small = 2.0 / PI * phi_q * cf * cf.ln();
    let large = params.scale() / 6.0 * (params.m() as f64).sqrt() * cf.sqrt() * divisor_count(c)? as f64;
    Ok((small, large))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characters::DirichletCharacter;

    fn brute(m: i64, n: i64, c: u64) -> f64 {
        (0..c)
            .filter(|&x| gcd(x, c) == 1)
            .map(|x| {
                let y = crate::arith::mod_inverse(x as i64, c).unwrap();
                let arg = (m as f64 * x as f64 + n as f64 * y as f64) / c as f64;
                (TAU * arg).cos()
            })
            .sum()
    }

    #[test]
    fn examples() {
        assert_eq!(kloosterman_sum(5, 7, 1).unwrap(), 1.0);
        assert!((kloosterman_sum(1, 1, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!((kloosterman_sum(1, 1, 3).unwrap() + 1.0).abs() < 1e-14);
        assert!(kloosterman_sum(1, 1, 0).is_err());
        assert_eq!(weil_bound(1, 1, 100).unwrap(), 90.0);
        assert_eq!(weil_bound(1, 1, 1).unwrap(), 1.0);
        assert!((weil_bound(4, 6, 8).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn against_brute_force() {
        for c in [1u64, 2, 7, 12, 30, 97, 128, 210] {
            for (m, n) in [(1, 1), (2, 5), (6, 4), (13, 17), (-3, 8)] {
                let v = kloosterman_sum(m, n, c).unwrap();
                assert!((v - brute(m, n, c)).abs() < 1e-11, "{m} {n} {c}");
            }
        }
    }

    #[test]
    fn rows_match_scalar() {
        for c in [1u64, 2, 9, 60, 401, 1000] {
            for m in [1i64, 3, 10] {
                let row = kloosterman_row(m, c).unwrap();
                for n in [0i64, 1, 2, 5, 77, 399] {
                    let r = n.rem_euclid(c as i64) as usize;
                    let s = kloosterman_sum(m, n, c).unwrap();
                    assert!((row[r] - s).abs() < 1e-10, "m={m} n={n} c={c}");
                }
            }
        }
    }

    #[test]
    fn ramanujan_sum_at_zero() {
        // S(m, 0; c) is the Ramanujan sum c_c(m); for m coprime to c it is μ(c).
        assert!((kloosterman_sum(1, 0, 30).unwrap() + 1.0).abs() < 1e-12);
        assert!((kloosterman_sum(1, 0, 12).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cache_eviction_keeps_values() {
        let cache = KloostermanCache::new(500);
        for c in [100u64, 200, 300, 100, 400] {
            let v = cache.get(3, 7, c).unwrap();
            assert!((v - kloosterman_sum(3, 7, c).unwrap()).abs() < 1e-10);
            assert!(cache.stored() <= 500);
        }
    }

    #[test]
    fn geometric_tails() {
        let x = 0.01;
        let direct: f64 = (11..20000).map(|n| (-x * n as f64).exp()).sum();
        assert!((geometric_tail(x, 10) - direct).abs() < 1e-10);
        let direct1: f64 = (11..20000).map(|n| n as f64 * (-x * n as f64).exp()).sum();
        assert!((weighted_geometric_tail(x, 10) - direct1).abs() < 1e-7 * direct1);
        let all: f64 = (1..20000).map(|n| n as f64 * (-x * n as f64).exp()).sum();
        assert!((weighted_geometric_tail(x, 0) - all).abs() < 1e-7 * all);
    }

    #[test]
    fn direct_matches_closed() {
        let params = AveragingParams::new(400, 1, DirichletCharacter::principal(1).unwrap(), 1.0).unwrap();
        let closed = twisted_sum_closed(400, &params).unwrap();
        let direct = twisted_sum_direct(400, &params, 16_000).unwrap();
        assert!((closed.value - direct.value).norm() <= direct.tail_radius + 1e-9);
        assert!(closed.value.im.abs() < 1e-10);

        let empty = twisted_sum_direct(400, &params, 0).unwrap();
        assert_eq!(empty.value, Complex64::new(0.0, 0.0));
        let full = weil_bound(1, 0, 400).unwrap() * geometric_tail(TAU / params.scale(), 0);
        assert!((empty.tail_radius - full).abs() < 1e-9 * full);
    }

    #[test]
    fn bounds_guards() {
        let params = AveragingParams::new(400, 1, DirichletCharacter::principal(1).unwrap(), 1.0).unwrap();
        assert!(matches!(
            twisted_sum_bounds(400, &params),
            Err(Error::BelowDerivationRange { .. })
        ));
        assert!(twisted_sum_bounds(600, &params).is_err());
        let (_, large) = twisted_sum_bounds(800, &params).unwrap();
        let expect = params.scale() / 6.0 * 800f64.sqrt() * 18.0;
        assert!((large - expect).abs() < 1e-9 * expect);
        let p401 = AveragingParams::new(401, 1, DirichletCharacter::principal(1).unwrap(), 1.0).unwrap();
        let (small, _) = twisted_sum_bounds(401, &p401).unwrap();
        assert!((small - 2.0 / PI * 401.0 * 401f64.ln()).abs() < 1e-9);
        assert!(twisted_sum_closed(401, &params).is_err());
    }
}
