//! Dirichlet characters modulo q, built from the CRT decomposition of the
//! unit group. Values are kept as exact exponents k meaning e(k / φ(q)) and
//! turned into floating complex numbers only on evaluation.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::arith::{factorize, gcd, primitive_root};
use crate::error::{Error, Result};

/// Largest modulus accepted by the constructors.
pub const MAX_MODULUS: u64 = 1_000_000;

const NOT_A_UNIT: u32 = u32::MAX;

/// One cyclic factor of (Z/q)^*: a generator's discrete logs for every
/// residue mod q and the factor's order.
#[derive(Debug)]
struct CyclicFactor {
    order: u64,
    scale: u64,
}

#[derive(Debug)]
struct ModulusData {
    modulus: u64,
    phi: u64,
    factors: Vec<CyclicFactor>,
    /// `logs[n * k + i]` is the discrete log of n in factor i.
    logs: Vec<u32>,
}

impl ModulusData {
    fn build(q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::Zero("q"));
        }
        if q > MAX_MODULUS {
            return Err(Error::TooLarge {
                what: "q",
                value: q,
                limit: MAX_MODULUS,
            });
        }
        let fact = factorize(q)?;
        let phi = fact.euler_phi();
        // Per prime power: (modulus p^k, list of (generator log table, order)).
        let mut parts: Vec<(u64, Vec<(Vec<u32>, u64)>)> = Vec::new();
        for &(p, k) in fact.factors() {
            let pk = p.pow(k);
            let mut tables = Vec::new();
            if p == 2 {
                if k == 2 {
                    let mut t = vec![NOT_A_UNIT; 4];
                    t[1] = 0;
                    t[3] = 1;
                    tables.push((t, 2));
                } else if k >= 3 {
                    // r = ±5^e: one factor for the sign, one for ⟨5⟩.
                    let half = pk / 4;
                    let mut sign = vec![NOT_A_UNIT; pk as usize];
                    let mut five = vec![NOT_A_UNIT; pk as usize];
                    let mut g = 1u64;
                    for e in 0..half {
                        sign[g as usize] = 0;
                        five[g as usize] = e as u32;
                        let neg = (pk - g) as usize;
                        sign[neg] = 1;
                        five[neg] = e as u32;
                        g = g * 5 % pk;
                    }
                    tables.push((sign, 2));
                    tables.push((five, half));
                }
            } else {
                let g = primitive_root(p, k)?;
                let order = (p - 1) * p.pow(k - 1);
                let mut t = vec![NOT_A_UNIT; pk as usize];
                let mut x = 1u64;
                for e in 0..order {
                    t[x as usize] = e as u32;
                    x = x * g % pk;
                }
                tables.push((t, order));
            }
            parts.push((pk, tables));
        }
        let factors: Vec<CyclicFactor> = parts
            .iter()
            .flat_map(|(_, ts)| ts.iter())
            .map(|&(_, order)| CyclicFactor {
                order,
                scale: phi / order,
            })
            .collect();
        let k = factors.len().max(1);
        let mut logs = vec![0u32; q as usize * k];
        for n in 0..q {
            let row = &mut logs[n as usize * k..(n as usize + 1) * k];
            if gcd(n, q) != 1 {
                row[0] = NOT_A_UNIT;
                continue;
            }
            let mut i = 0;
            for (pk, tables) in &parts {
                let r = (n % pk) as usize;
                for (t, _) in tables {
                    row[i] = t[r];
                    i += 1;
                }
            }
        }
        Ok(Self {
            modulus: q,
            phi,
            factors,
            logs,
        })
    }

    fn count(&self) -> u64 {
        self.factors.iter().map(|f| f.order).product()
    }

    fn digits_of(&self, index: usize) -> Vec<u64> {
        let mut digits = vec![0u64; self.factors.len()];
        let mut rest = index as u64;
        for (d, f) in digits.iter_mut().zip(&self.factors).rev() {
            *d = rest % f.order;
            rest /= f.order;
        }
        digits
    }
}

/// A Dirichlet character modulo q.
#[derive(Clone)]
pub struct DirichletCharacter {
    data: Arc<ModulusData>,
    index: usize,
    digits: Vec<u64>,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirichletCharacter")
            .field("modulus", &self.data.modulus)
            .field("index", &self.index)
            .field("digits", &self.digits)
            .finish()
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.data.modulus == other.data.modulus && self.digits == other.digits
    }
}

impl DirichletCharacter {
    /// The character with stable index `index` modulo `q`; index 0 is
    /// principal. Indices are mixed-radix over the cyclic factors, the
    /// factor of the smallest prime being most significant.
    pub fn new(q: u64, index: usize) -> Result<Self> {
        let data = Arc::new(ModulusData::build(q)?);
        Self::from_data(data, index)
    }

    pub fn principal(q: u64) -> Result<Self> {
        Self::new(q, 0)
    }

    fn from_data(data: Arc<ModulusData>, index: usize) -> Result<Self> {
        let count = data.count();
        if index as u64 >= count {
            return Err(Error::CharacterIndex {
                index,
                count: count as usize,
                modulus: data.modulus,
            });
        }
        let digits = data.digits_of(index);
        Ok(Self {
            data,
            index,
            digits,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.data.modulus
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Exponent k with χ(n) = e(k / φ(q)), or `None` when gcd(n, q) > 1.
    pub fn exponent(&self, n: i64) -> Option<u64> {
        let q = self.data.modulus;
        let r = n.rem_euclid(q as i64) as usize;
        let k = self.data.factors.len().max(1);
        let row = &self.data.logs[r * k..(r + 1) * k];
        if row[0] == NOT_A_UNIT {
            return None;
        }
        let phi = self.data.phi;
        let mut e = 0u64;
        for ((&log, &d), f) in row.iter().zip(&self.digits).zip(&self.data.factors) {
            e = (e + (d * log as u64 % f.order) * f.scale) % phi;
        }
        Some(e)
    }

    pub fn eval(&self, n: i64) -> Complex64 {
        match self.exponent(n) {
            None => Complex64::new(0.0, 0.0),
            Some(e) => root_of_unity(e, self.data.phi),
        }
    }

    /// χ(0), χ(1), ..., χ(q - 1).
    pub fn value_table(&self) -> Vec<Complex64> {
        (0..self.data.modulus as i64).map(|n| self.eval(n)).collect()
    }

    pub fn is_principal(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// Order of χ in the character group.
    pub fn order(&self) -> u64 {
        self.digits
            .iter()
            .zip(&self.data.factors)
            .map(|(&d, f)| f.order / gcd(d, f.order))
            .fold(1, |acc, o| acc / gcd(acc, o) * o)
    }

    pub fn is_real(&self) -> bool {
        self.order() <= 2
    }

    pub fn conductor(&self) -> u64 {
        conductor(self)
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus()
    }
}

/// e(k / den) with exact values at multiples of a quarter turn.
fn root_of_unity(k: u64, den: u64) -> Complex64 {
    let k = k % den;
    if (4 * k) % den == 0 {
        return match 4 * k / den {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let angle = std::f64::consts::TAU * k as f64 / den as f64;
    let (s, c) = angle.sin_cos();
    Complex64::new(c, s)
}

/// All φ(q) characters modulo q, in index order.
pub fn enumerate_characters(q: u64) -> Result<Vec<DirichletCharacter>> {
    let data = Arc::new(ModulusData::build(q)?);
    let count = data.count() as usize;
    (0..count)
        .map(|i| DirichletCharacter::from_data(Arc::clone(&data), i))
        .collect()
}

pub fn char_eval(chi: &DirichletCharacter, n: i64) -> Complex64 {
    chi.eval(n)
}

/// Smallest divisor d of q such that χ(n) = 1 for every unit n ≡ 1 (mod d).
pub fn conductor(chi: &DirichletCharacter) -> u64 {
    let q = chi.modulus();
    let divisors = factorize(q).map(|f| f.divisors()).unwrap_or_else(|_| vec![q]);
    for d in divisors {
        let induced = (0..q / d)
            .map(|t| 1 + t * d)
            .filter(|&n| gcd(n, q) == 1)
            .all(|n| chi.exponent(n as i64) == Some(0));
        if induced {
            return d;
        }
    }
    q
}
