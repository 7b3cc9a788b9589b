//! Exact integer arithmetic: gcd, modular inverses, factorization by trial
//! division, the divisor count d(n), Euler's totient, unit groups, primitive
//! roots and a segmented sieve for d(N b) over long ranges of b.

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Extended Euclid on signed inputs: returns (g, s, t) with a s + b t = g ≥ 0.
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// The inverse of `x` modulo `c`, in `[0, c)`.
///
/// For `c = 1` the unique residue `0` is returned. Inputs sharing a factor
/// with `c` are rejected.
pub fn mod_inverse(x: i64, c: u64) -> Result<u64> {
    if c == 0 {
        return Err(Error::Zero("modulus"));
    }
    if c == 1 {
        return Ok(0);
    }
    let c_i = c as i128;
    let (g, s, _) = ext_gcd((x as i128).rem_euclid(c_i), c_i);
    if g != 1 {
        return Err(Error::NotInvertible { x, modulus: c });
    }
    Ok(s.rem_euclid(c_i) as u64)
}

/// Prime factorization, primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn value(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e))
            .product::<u64>()
    }

    pub fn divisor_count(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    pub fn euler_phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| (p - 1) * p.pow(e - 1))
            .product()
    }

    /// Exponent of `p` in the factored integer.
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    /// All positive divisors, ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        divs
    }
}

/// Trial division with a 2-3-5 wheel.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::Zero("n"));
    }
    let mut factors = Vec::new();
    let mut rest = n;
    for p in [2u64, 3, 5] {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
    }
    const WHEEL: [u64; 8] = [4, 2, 4, 2, 4, 6, 2, 6];
    let mut p = 7u64;
    let mut i = 0;
    while p.saturating_mul(p) <= rest {
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            factors.push((p, e));
        }
        p += WHEEL[i];
        i = (i + 1) % WHEEL.len();
    }
    if rest > 1 {
        factors.push((rest, 1));
    }
    Ok(Factorization { factors })
}

pub fn divisor_count(n: u64) -> Result<u64> {
    Ok(factorize(n)?.divisor_count())
}

pub fn euler_phi(n: u64) -> Result<u64> {
    Ok(factorize(n)?.euler_phi())
}

/// Residues in `[1, c]` coprime to `c`, ascending. `units_mod(1) == [1]`.
pub fn units_mod(c: u64) -> Result<Vec<u64>> {
    if c == 0 {
        return Err(Error::Zero("c"));
    }
    Ok((1..=c).filter(|&x| gcd(x, c) == 1).collect())
}

pub fn pow_mod(base: u64, mut exp: u64, modulus: u64) -> u64 {
    if modulus == 1 {
        return 0;
    }
    let m = modulus as u128;
    let mut acc: u128 = 1;
    let mut b = (base % modulus) as u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Multiplicative order of `g` modulo `n` (requires gcd(g, n) = 1).
pub fn multiplicative_order(g: u64, n: u64) -> Result<u64> {
    if gcd(g, n) != 1 {
        return Err(Error::NotInvertible {
            x: g as i64,
            modulus: n,
        });
    }
    let phi = factorize(n)?;
    let mut order = phi.euler_phi();
    for &(p, _) in factorize(order)?.factors() {
        while order % p == 0 && pow_mod(g, order / p, n) == 1 {
            order /= p;
        }
    }
    Ok(order)
}

/// Smallest generator of the cyclic group (Z/p^k)^* for an odd prime p.
pub fn primitive_root(p: u64, k: u32) -> Result<u64> {
    if p == 2 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "no cyclic primitive root computed for {p}^{k}"
        )));
    }
    let pk = p.pow(k);
    let phi = (p - 1) * p.pow(k - 1);
    let prime_divs: Vec<u64> = factorize(phi)?.factors().iter().map(|f| f.0).collect();
    (2..pk)
        .find(|&g| gcd(g, p) == 1 && prime_divs.iter().all(|&q| pow_mod(g, phi / q, pk) != 1))
        .ok_or_else(|| Error::InvalidParameter(format!("no primitive root mod {pk}")))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            primes.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    primes
}

/// d(b) for b in [0, limit] (index 0 unused and set to 0).
pub fn divisor_count_table(limit: usize) -> Vec<u32> {
    let mut d = vec![0u32; limit + 1];
    for k in 1..=limit {
        let mut j = k;
        while j <= limit {
            d[j] += 1;
            j += k;
        }
    }
    d
}

/// Segmented evaluation of d(N b) for consecutive b, using the factorization
/// of N and a prime list that covers sqrt of the largest b requested.
#[derive(Debug, Clone)]
pub struct ScaledDivisorCounter {
    level: Factorization,
    primes: Vec<u64>,
    covered: u64,
}

impl ScaledDivisorCounter {
    /// Prepares a counter valid for all b < `b_limit`.
    pub fn new(level: u64, b_limit: u64) -> Result<Self> {
        let level = factorize(level)?;
        let root = (b_limit as f64).sqrt() as u64 + 2;
        let mut primes = primes_up_to(root);
        for &(p, _) in level.factors() {
            if !primes.contains(&p) {
                primes.push(p);
            }
        }
        primes.sort_unstable();
        Ok(Self {
            level,
            primes,
            covered: root * root,
        })
    }

    /// d(N b) for b in [lo, hi), lo ≥ 1.
    pub fn counts(&self, lo: u64, hi: u64) -> Vec<u32> {
        assert!(lo >= 1 && hi >= lo && hi <= self.covered);
        let len = (hi - lo) as usize;
        let base = self.level.divisor_count() as u32;
        let mut rest: Vec<u64> = (lo..hi).collect();
        let mut count = vec![base; len];
        for &p in &self.primes {
            let v = self.level.valuation(p);
            if p * p >= hi && v == 0 {
                continue;
            }
            let mut b = lo.div_ceil(p) * p;
            while b < hi {
                let i = (b - lo) as usize;
                let mut e = 0u32;
                while rest[i] % p == 0 {
                    rest[i] /= p;
                    e += 1;
                }
                count[i] = count[i] / (v + 1) * (v + e + 1);
                b += p;
            }
        }
        for (c, &r) in count.iter_mut().zip(&rest) {
            if r > 1 {
                *c *= 2;
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_divisors(n: u64) -> u64 {
        (1..=n).filter(|k| n % k == 0).count() as u64
    }

    fn brute_phi(n: u64) -> u64 {
        (1..=n).filter(|&k| gcd(k, n) == 1).count() as u64
    }

    #[test]
    fn mod_inverse_examples() {
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert_eq!(mod_inverse(1, 12).unwrap(), 1);
        assert_eq!(
            mod_inverse(2, 4),
            Err(Error::NotInvertible { x: 2, modulus: 4 })
        );
        assert_eq!(mod_inverse(5, 1).unwrap(), 0);
        assert_eq!(mod_inverse(-1, 7).unwrap(), 6);
        assert!(mod_inverse(1, 0).is_err());
    }

    #[test]
    fn mod_inverse_round_trip() {
        for c in 1..=500u64 {
            for x in units_mod(c).unwrap() {
                let y = mod_inverse(x as i64, c).unwrap();
                assert!(y < c);
                assert_eq!((x * y) % c, 1 % c, "x={x} c={c}");
            }
        }
    }

    #[test]
    fn divisor_and_phi_examples() {
        assert_eq!(divisor_count(1).unwrap(), 1);
        assert_eq!(divisor_count(12).unwrap(), brute_divisors(12));
        assert_eq!(divisor_count(12).unwrap(), 6);
        assert_eq!(divisor_count(400).unwrap(), brute_divisors(400));
        assert_eq!(divisor_count(400).unwrap(), 15);
        assert_eq!(euler_phi(1).unwrap(), 1);
        assert_eq!(euler_phi(7).unwrap(), 6);
        assert_eq!(euler_phi(400).unwrap(), brute_phi(400));
        assert_eq!(euler_phi(400).unwrap(), 160);
        assert_eq!(divisor_count(0), Err(Error::Zero("n")));
        assert_eq!(euler_phi(0), Err(Error::Zero("n")));
    }

    #[test]
    fn matches_brute_force_up_to_ten_thousand() {
        let table = divisor_count_table(10_000);
        for n in 1..=10_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(f.value(), n);
            assert_eq!(f.divisor_count(), table[n as usize] as u64);
            for &(p, _) in f.factors() {
                assert_eq!(factorize(p).unwrap().factors(), &[(p, 1)]);
            }
        }
        for n in (1..=10_000u64).step_by(7) {
            assert_eq!(divisor_count(n).unwrap(), brute_divisors(n));
            assert_eq!(euler_phi(n).unwrap(), brute_phi(n));
        }
    }

    #[test]
    fn units_examples() {
        assert_eq!(units_mod(1).unwrap(), vec![1]);
        assert_eq!(units_mod(8).unwrap(), vec![1, 3, 5, 7]);
        assert_eq!(units_mod(5).unwrap(), vec![1, 2, 3, 4]);
        assert!(units_mod(0).is_err());
        for c in 1..200 {
            assert_eq!(units_mod(c).unwrap().len() as u64, euler_phi(c).unwrap());
        }
    }

    #[test]
    fn primitive_roots_generate() {
        for (p, k) in [(3u64, 1u32), (3, 3), (5, 1), (5, 2), (7, 2), (11, 1), (13, 2)] {
            let g = primitive_root(p, k).unwrap();
            let pk = p.pow(k);
            assert_eq!(multiplicative_order(g, pk).unwrap(), euler_phi(pk).unwrap());
        }
        assert_eq!(primitive_root(5, 1).unwrap(), 2);
        assert!(primitive_root(2, 3).is_err());
    }

    #[test]
    fn divisors_listing() {
        assert_eq!(factorize(12).unwrap().divisors(), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(factorize(1).unwrap().divisors(), vec![1]);
    }

    #[test]
    fn scaled_divisor_counts_match_direct() {
        for level in [1u64, 400, 401, 500, 997, 1200] {
            let counter = ScaledDivisorCounter::new(level, 20_000).unwrap();
            for (lo, hi) in [(1u64, 300u64), (9_000, 9_500), (19_000, 20_000)] {
                let got = counter.counts(lo, hi);
                for (i, b) in (lo..hi).enumerate() {
                    assert_eq!(got[i] as u64, divisor_count(level * b).unwrap(), "N={level} b={b}");
                }
            }
        }
    }
}
