//! Exact integer and rational arithmetic.
//!
//! Everything here is arbitrary precision. Rationals are `num_rational::BigRational`,
//! which is always stored reduced with a positive denominator.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> BigInt {
    BigInt::from(n)
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn rat_int(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

/// Fractional part, always in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

/// Formats as `p/q`, including `/1` for integers so every value has one shape.
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `p/q`, `p`, or `-p/q`. Whitespace around the parts is ignored.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let err = || Error::Parse {
        what: "rational",
        input: s.to_string(),
    };
    let mut parts = s.trim().splitn(2, '/');
    let numer: BigInt = parts.next().unwrap_or("").trim().parse().map_err(|_| err())?;
    let denom: BigInt = match parts.next() {
        Some(d) => d.trim().parse().map_err(|_| err())?,
        None => BigInt::one(),
    };
    if denom.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(numer, denom))
}

/// The pairwise co-prime exponents `(m_1, ..., m_r)` of the torus endomorphism.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct Moduli(Vec<u64>);

impl Moduli {
    pub fn new(values: Vec<u64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("moduli"));
        }
        for &m in &values {
            if m < 2 {
                return Err(Error::ModulusTooSmall {
                    min: 2,
                    got: m.to_string(),
                });
            }
        }
        for (i, &a) in values.iter().enumerate() {
            for &b in &values[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(Error::ModuliNotCoprime(a.to_string(), b.to_string()));
                }
            }
        }
        Ok(Moduli(values))
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    /// Torus dimension `r`.
    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, i: usize) -> u64 {
        self.0[i]
    }

    pub fn max(&self) -> u64 {
        *self.0.iter().max().expect("moduli are non-empty")
    }

    /// `m_1 * ... * m_r`.
    pub fn product(&self) -> BigInt {
        self.0.iter().map(|&m| BigInt::from(m)).product()
    }

    /// `m_i^n` as a big integer.
    pub fn power(&self, i: usize, n: u32) -> BigInt {
        num_traits::pow(BigInt::from(self.0[i]), n as usize)
    }

    /// `prod_i m_i^n`.
    pub fn product_power(&self, n: u32) -> BigInt {
        num_traits::pow(self.product(), n as usize)
    }
}

impl TryFrom<Vec<u64>> for Moduli {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Moduli::new(v)
    }
}

impl From<Moduli> for Vec<u64> {
    fn from(m: Moduli) -> Self {
        m.0
    }
}

impl fmt::Display for Moduli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `s = m^alpha * q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MAdicDecomposition {
    pub alpha: u32,
    pub q: BigInt,
}

/// Least non-negative `x` with `x = residues[i] (mod moduli[i])` for every `i`.
///
/// Moduli must be pairwise co-prime and positive. Built pairwise with the
/// extended Euclidean algorithm.
pub fn crt_solve(residues: &[BigInt], moduli: &[BigInt]) -> Result<BigInt> {
    if residues.len() != moduli.len() {
        return Err(Error::LengthMismatch {
            residues: residues.len(),
            moduli: moduli.len(),
        });
    }
    if moduli.is_empty() {
        return Err(Error::Empty("moduli"));
    }
    for m in moduli {
        if !m.is_positive() {
            return Err(Error::ModulusTooSmall {
                min: 1,
                got: m.to_string(),
            });
        }
    }
    for (i, a) in moduli.iter().enumerate() {
        for b in &moduli[i + 1..] {
            if !a.gcd(b).is_one() {
                return Err(Error::ModuliNotCoprime(a.to_string(), b.to_string()));
            }
        }
    }

    let mut x = residues[0].mod_floor(&moduli[0]);
    let mut modulus = moduli[0].clone();
    for (r, m) in residues.iter().zip(moduli).skip(1) {
        // x + modulus * t = r (mod m)  =>  t = (r - x) * modulus^{-1} (mod m)
        let inv = mod_inverse(&modulus, m).expect("co-prime moduli have inverses");
        let t = ((r - &x) * inv).mod_floor(m);
        x += &modulus * t;
        modulus *= m;
        x = x.mod_floor(&modulus);
    }
    Ok(x)
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Largest `k` with `m^k | s`. `s` must be non-zero and `m >= 2`.
fn max_power_dividing(s: &BigInt, m: u64) -> (u32, BigInt) {
    let m = BigInt::from(m);
    let mut q = s.clone();
    let mut k = 0;
    loop {
        let (d, r) = q.div_rem(&m);
        if !r.is_zero() {
            return (k, q);
        }
        q = d;
        k += 1;
    }
}

/// Writes `s = m^alpha * q` with `gcd(q, m) = 1`.
///
/// Only the largest power of `m` dividing `s` can work; when the leftover
/// cofactor still shares a factor with `m` (e.g. `s = 2, m = 4`) there is no
/// such decomposition and `NoDecomposition` is returned.
pub fn m_adic_decomposition(s: &BigInt, m: u64) -> Result<MAdicDecomposition> {
    if s.is_zero() {
        return Err(Error::Zero("s"));
    }
    if m < 2 {
        return Err(Error::ModulusTooSmall {
            min: 2,
            got: m.to_string(),
        });
    }
    let (alpha, q) = max_power_dividing(s, m);
    if q.gcd(&BigInt::from(m)).is_one() {
        Ok(MAdicDecomposition { alpha, q })
    } else {
        Err(Error::NoDecomposition {
            s: s.to_string(),
            m,
        })
    }
}

/// True iff `gcd(s, m^(n+1))` divides `m^n`, i.e. iff `s*k = j*m^n (mod m^(n+1))`
/// is solvable in `k` for every `j`.
pub fn gcd_certificate_condition(s: &BigInt, m: u64, n: u32) -> bool {
    let mn = num_traits::pow(BigInt::from(m), n as usize);
    let mn1 = &mn * BigInt::from(m);
    let g = s.gcd(&mn1);
    mn.is_multiple_of(&g)
}

/// `lcm` over a list of positive integers (1 for an empty list).
pub fn lcm_all<'a>(values: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v))
}
