//! Special numbers and functions.
//!
//! Bernoulli and Cauchy numbers are computed exactly from their generating
//! function recurrences and cached once per process. The floating-point
//! functions (`zeta`, `polylog`) work on the real line only.
//!
//! Conventions: `t/(e^t - 1) = sum B_k t^k/k!` (so `B_1 = -1/2`) and
//! `t/log(1 + t) = sum C_k t^k/k!`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::numeric::NeumaierSum;

/// Exact arbitrary-precision fraction, always kept in lowest terms.
pub type Rational = BigRational;

/// Largest index served by [`bernoulli_number`] and [`cauchy_number`].
pub const MAX_EXACT_INDEX: usize = 128;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialError {
    #[error("index {n} exceeds the supported maximum {max}")]
    IndexOutOfRange { n: usize, max: usize },
    #[error("zeta({0}) is undefined here: the series needs k >= 2")]
    ZetaDomain(u32),
    #[error("polylog order must be >= 1, got {0}")]
    PolylogOrder(u32),
    #[error("polylog argument {0} outside [0, 1)")]
    PolylogArgument(f64),
    #[error("argument {0} is not finite")]
    NonFinite(f64),
}

pub(crate) fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[cfg(test)]
pub(crate) fn rat_int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Lossy conversion used when exact coefficients enter floating-point code.
pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // numerator or denominator too wide for direct conversion
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub(crate) fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub(crate) fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn check_index(n: usize) -> Result<(), SpecialError> {
    if n > MAX_EXACT_INDEX {
        Err(SpecialError::IndexOutOfRange {
            n,
            max: MAX_EXACT_INDEX,
        })
    } else {
        Ok(())
    }
}

fn bernoulli_table() -> &'static [Rational] {
    static TABLE: OnceLock<Vec<Rational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // sum_{j=0}^{n} binom(n+1, j) B_j = 0 for n >= 1
        let mut b: Vec<Rational> = Vec::with_capacity(MAX_EXACT_INDEX + 1);
        b.push(Rational::one());
        for n in 1..=MAX_EXACT_INDEX {
            let mut acc = Rational::zero();
            for (j, bj) in b.iter().enumerate() {
                if !bj.is_zero() {
                    acc += Rational::from_integer(binomial(n + 1, j)) * bj;
                }
            }
            b.push(-acc / Rational::from_integer(BigInt::from(n + 1)));
        }
        b
    })
}

fn cauchy_table() -> &'static [Rational] {
    static TABLE: OnceLock<Vec<Rational>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // a_n = C_n/n! solves (sum a_i t^i) * (sum (-1)^m t^m/(m+1)) = 1
        let mut a: Vec<Rational> = Vec::with_capacity(MAX_EXACT_INDEX + 1);
        a.push(Rational::one());
        for n in 1..=MAX_EXACT_INDEX {
            let mut acc = Rational::zero();
            for (i, ai) in a.iter().enumerate() {
                let m = n - i;
                let sign = if m % 2 == 0 { 1 } else { -1 };
                acc += ai * rat(sign, (m + 1) as i64);
            }
            a.push(-acc);
        }
        a.iter()
            .enumerate()
            .map(|(n, an)| an * Rational::from_integer(factorial(n)))
            .collect()
    })
}

/// Exact Bernoulli number `B_n` with `B_1 = -1/2`.
pub fn bernoulli_number(n: usize) -> Result<Rational, SpecialError> {
    check_index(n)?;
    Ok(bernoulli_table()[n].clone())
}

/// Exact Cauchy number of the first kind (Bernoulli number of the second kind).
pub fn cauchy_number(n: usize) -> Result<Rational, SpecialError> {
    check_index(n)?;
    Ok(cauchy_table()[n].clone())
}

/// `B_n(y) = sum_k binom(n, k) B_k y^(n-k)`, evaluated in floating point.
pub fn bernoulli_polynomial(n: usize, y: f64) -> Result<f64, SpecialError> {
    check_index(n)?;
    if !y.is_finite() {
        return Err(SpecialError::NonFinite(y));
    }
    // Horner in y over the coefficients binom(n, k) B_k of y^(n-k)
    let table = bernoulli_table();
    let mut acc = 0.0;
    for (k, b) in table.iter().enumerate().take(n + 1) {
        let c = rational_to_f64(&(Rational::from_integer(binomial(n, k)) * b));
        acc = acc * y + c;
    }
    Ok(acc)
}

/// Exact `B_n(y)` for rational `y`.
pub fn bernoulli_polynomial_exact(n: usize, y: &Rational) -> Result<Rational, SpecialError> {
    check_index(n)?;
    let table = bernoulli_table();
    let mut acc = Rational::zero();
    for (k, b) in table.iter().enumerate().take(n + 1) {
        acc = acc * y + Rational::from_integer(binomial(n, k)) * b;
    }
    Ok(acc)
}

/// Riemann zeta at integer `k >= 2`.
///
/// Partial sum to `N = 10` with an Euler-Maclaurin tail in Bernoulli numbers;
/// the neglected tail term is below `1e-17` relative for every `k >= 2`.
pub fn zeta(k: u32) -> Result<f64, SpecialError> {
    if k < 2 {
        return Err(SpecialError::ZetaDomain(k));
    }
    const N: u32 = 10;
    const TAIL_TERMS: usize = 8;
    let s = f64::from(k);
    let nf = f64::from(N);
    let mut tail = 0.0;
    // rising factorial s (s+1) ... (s+2j-2)
    let mut rising = s;
    let mut npow = nf.powf(-s - 1.0);
    let mut fact = 2.0_f64;
    for j in 1..=TAIL_TERMS {
        let b2j = rational_to_f64(&bernoulli_table()[2 * j]);
        tail += b2j / fact * rising * npow;
        rising *= (s + (2 * j) as f64 - 1.0) * (s + (2 * j) as f64);
        npow /= nf * nf;
        fact *= ((2 * j + 1) * (2 * j + 2)) as f64;
    }
    let mut sum = NeumaierSum::default();
    sum.add(tail);
    sum.add(nf.powf(-s) / 2.0);
    sum.add(nf.powf(1.0 - s) / (s - 1.0));
    for n in (1..N).rev() {
        sum.add(f64::from(n).powf(-s));
    }
    Ok(sum.value())
}

/// Polylogarithm `Li_k(lambda)` on `0 <= lambda < 1`.
///
/// `k = 1` uses `log(1/(1 - lambda))`; higher orders sum the series until
/// the geometric tail bound `lambda^(n+1) / ((n+1)^k (1 - lambda))` drops
/// below `1e-16` of the partial sum.
pub fn polylog(k: u32, lambda: f64) -> Result<f64, SpecialError> {
    if k < 1 {
        return Err(SpecialError::PolylogOrder(k));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(SpecialError::PolylogArgument(lambda));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    if k == 1 {
        return Ok(-(-lambda).ln_1p());
    }
    let kf = f64::from(k);
    let one_minus = 1.0 - lambda;
    let mut sum = NeumaierSum::default();
    let mut power = 1.0;
    let mut n = 1_u64;
    loop {
        power *= lambda;
        let nf = n as f64;
        sum.add(power / nf.powf(kf));
        let next = (nf + 1.0).powf(kf);
        let tail = power * lambda / (next * one_minus);
        if tail < 1e-16 * sum.value() || power == 0.0 {
            break;
        }
        n += 1;
    }
    Ok(sum.value())
}

/// Euler-Mascheroni constant.
pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}
