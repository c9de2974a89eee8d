//! Truncated series in `u = 1 - lambda` whose coefficients are polynomials
//! of degree at most two in `L = log(1/(1 - lambda))`.
//!
//! A [`LogLaurentSeries`] stores the coefficients of `u^n` for
//! `n_min <= n < order`; everything from `u^order` on is unknown. Arithmetic
//! propagates the truncation order and never extends it.

mod constant;
mod h_expansion;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use constant::{ConstExpr, Monomial};
pub use h_expansion::{HExpansion, HExpansionJson, HTermJson, IntegralConstant};

use crate::exact::TrafficIntensity;
use crate::special::{cauchy_number, factorial, rational_to_f64, Rational, SpecialError};

/// Highest power of `L` a coefficient may carry.
pub const MAX_LOG_DEGREE: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("log-degree {0} exceeds the cap of {MAX_LOG_DEGREE}")]
    LogDegreeOverflow(usize),
    #[error("n_min {n_min} is above the truncation order {order}")]
    InvalidRange { n_min: i32, order: i32 },
    #[error("power {power} lies outside [{n_min}, {order})")]
    PowerOutOfRange { power: i32, n_min: i32, order: i32 },
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("series parameter out of range: {0}")]
    Parameter(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Scalar type usable as a series coefficient.
pub trait Coefficient:
    Clone
    + fmt::Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(q: &Rational) -> Self;
    fn to_real(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl Coefficient for f64 {
    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }
    fn to_real(&self) -> f64 {
        *self
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Coefficient for ConstExpr {
    fn from_rational(q: &Rational) -> Self {
        ConstExpr::rational(q.clone())
    }
    fn to_real(&self) -> f64 {
        self.value()
    }
    fn is_finite(&self) -> bool {
        true
    }
}

/// `c0 + c1 L + c2 L^2`, trailing zeros trimmed.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPoly<C = f64> {
    coeffs: Vec<C>,
}

impl<C: Coefficient> LogPoly<C> {
    pub fn new(coeffs: Vec<C>) -> Result<Self, SeriesError> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(SeriesError::NonFinite);
        }
        let mut p = LogPoly { coeffs };
        p.trim();
        if p.coeffs.len() > MAX_LOG_DEGREE + 1 {
            return Err(SeriesError::LogDegreeOverflow(p.coeffs.len() - 1));
        }
        Ok(p)
    }

    pub fn zero() -> Self {
        LogPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: C) -> Self {
        let mut p = LogPoly { coeffs: vec![c] };
        p.trim();
        p
    }

    /// `c * L^degree`.
    pub fn monomial(c: C, degree: usize) -> Result<Self, SeriesError> {
        let mut coeffs = vec![C::zero(); degree];
        coeffs.push(c);
        Self::new(coeffs)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in `L`; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `L^d`.
    pub fn coeff(&self, d: usize) -> C {
        self.coeffs.get(d).cloned().unwrap_or_else(C::zero)
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn eval(&self, log_value: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * log_value + c.to_real())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut p = LogPoly {
            coeffs: self.coeffs.iter().map(|x| x.clone() * c.clone()).collect(),
        };
        p.trim();
        p
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero());
        }
        let degree = self.degree() + other.degree();
        if degree > MAX_LOG_DEGREE {
            return Err(SeriesError::LogDegreeOverflow(degree));
        }
        let mut coeffs = vec![C::zero(); degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].clone() + a.clone() * b.clone();
            }
        }
        let mut p = LogPoly { coeffs };
        p.trim();
        Ok(p)
    }

    pub fn to_real(&self) -> LogPoly<f64> {
        let mut p = LogPoly {
            coeffs: self.coeffs.iter().map(Coefficient::to_real).collect(),
        };
        p.trim();
        p
    }
}

impl<C: Coefficient> Add for &LogPoly<C> {
    type Output = LogPoly<C>;
    fn add(self, rhs: &LogPoly<C>) -> LogPoly<C> {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut p = LogPoly {
            coeffs: (0..n).map(|d| self.coeff(d) + rhs.coeff(d)).collect(),
        };
        p.trim();
        p
    }
}

impl<C: Coefficient> Neg for &LogPoly<C> {
    type Output = LogPoly<C>;
    fn neg(self) -> LogPoly<C> {
        LogPoly {
            coeffs: self.coeffs.iter().map(|c| -c.clone()).collect(),
        }
    }
}

impl<C: Coefficient> LogPoly<C> {
    /// Human-readable form, highest power of the log first.
    pub fn render(&self, fmt_coeff: &dyn Fn(&C) -> String) -> String {
        const LOG: &str = "log(1/(1-λ))";
        const LOG2: &str = "log²(1/(1-λ))";
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for d in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[d];
            if c.is_zero() {
                continue;
            }
            let text = fmt_coeff(c);
            let compound = |t: &str| t.contains(" + ") || t.contains(" - ");
            let (negative, body) = match text.strip_prefix('-') {
                // a trailing constant can be appended term by term
                Some(rest) if d == 0 || !compound(rest) => (true, rest.to_string()),
                Some(_) => {
                    let flipped = fmt_coeff(&-c.clone());
                    if flipped.starts_with('-') {
                        (false, text)
                    } else {
                        (true, flipped)
                    }
                }
                None => (false, text),
            };
            if !out.is_empty() {
                out.push_str(if negative { " - " } else { " + " });
            } else if negative {
                out.push('-');
            }
            let factor = if d == 1 { LOG } else { LOG2 };
            match (d, body.as_str()) {
                (0, _) => out.push_str(&body),
                (_, "1") => out.push_str(factor),
                _ if compound(&body) || body.contains('/') => {
                    out.push_str(&format!("({body})·{factor}"))
                }
                _ => out.push_str(&format!("{body}·{factor}")),
            }
        }
        out
    }
}

impl<C: Coefficient + fmt::Display> fmt::Display for LogPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|c: &C| c.to_string()))
    }
}

/// Truncated series `sum_{n_min <= n < order} P_n(L) u^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogLaurentSeries<C = f64> {
    n_min: i32,
    order: i32,
    coeffs: BTreeMap<i32, LogPoly<C>>,
}

impl<C: Coefficient> LogLaurentSeries<C> {
    /// Series with no nonzero terms, known up to `u^order`.
    pub fn zero(order: i32) -> Self {
        LogLaurentSeries {
            n_min: order,
            order,
            coeffs: BTreeMap::new(),
        }
    }

    /// The constant `1`, known up to `u^order` (`order >= 1`).
    pub fn one(order: i32) -> Self {
        Self::constant(C::from_rational(&Rational::from_integer(1.into())), order)
    }

    pub fn constant(c: C, order: i32) -> Self {
        let mut s = LogLaurentSeries {
            n_min: 0.min(order),
            order,
            coeffs: BTreeMap::new(),
        };
        if order > 0 {
            s.insert(0, LogPoly::constant(c));
        }
        s
    }

    pub fn from_terms<I>(n_min: i32, order: i32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (i32, LogPoly<C>)>,
    {
        if n_min > order {
            return Err(SeriesError::InvalidRange { n_min, order });
        }
        let mut s = LogLaurentSeries {
            n_min,
            order,
            coeffs: BTreeMap::new(),
        };
        for (power, p) in terms {
            if power < n_min || power >= order {
                return Err(SeriesError::PowerOutOfRange {
                    power,
                    n_min,
                    order,
                });
            }
            let merged = &s.coefficient(power) + &p;
            s.insert(power, merged);
        }
        Ok(s)
    }

    fn insert(&mut self, power: i32, p: LogPoly<C>) {
        if p.is_zero() {
            self.coeffs.remove(&power);
        } else {
            self.coeffs.insert(power, p);
        }
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// Lowest power with a nonzero coefficient.
    pub fn leading_power(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn coefficient(&self, power: i32) -> LogPoly<C> {
        self.coeffs.get(&power).cloned().unwrap_or_else(LogPoly::zero)
    }

    /// Nonzero terms in increasing power.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &LogPoly<C>)> {
        self.coeffs.iter().map(|(&k, v)| (k, v))
    }

    pub fn max_log_degree(&self) -> usize {
        self.coeffs.values().map(LogPoly::degree).max().unwrap_or(0)
    }

    /// Drops terms at or above `order`; never raises the order.
    pub fn truncate(&self, order: i32) -> Self {
        let order = order.min(self.order);
        LogLaurentSeries {
            n_min: self.n_min.min(order),
            order,
            coeffs: self
                .coeffs
                .range(..order)
                .map(|(&k, v)| (k, v.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = LogLaurentSeries {
            n_min: self.n_min,
            order: self.order,
            coeffs: BTreeMap::new(),
        };
        for (&k, p) in &self.coeffs {
            out.insert(k, p.scale(c));
        }
        out
    }

    /// Multiplies by `P(L)`, a polynomial in the log variable with no `u` dependence.
    pub fn mul_log_poly(&self, p: &LogPoly<C>) -> Result<Self, SeriesError> {
        let mut out = LogLaurentSeries {
            n_min: self.n_min,
            order: self.order,
            coeffs: BTreeMap::new(),
        };
        for (&k, q) in &self.coeffs {
            out.insert(k, q.checked_mul(p)?);
        }
        Ok(out)
    }

    /// Truncated Cauchy product.
    ///
    /// The result is known up to `min(a.n_min + b.order, b.n_min + a.order)`.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        let order = (self.n_min.saturating_add(other.order))
            .min(other.n_min.saturating_add(self.order));
        let n_min = (self.n_min + other.n_min).min(order);
        let mut acc: BTreeMap<i32, LogPoly<C>> = BTreeMap::new();
        for (&i, a) in &self.coeffs {
            for (&j, b) in &other.coeffs {
                let power = i + j;
                if power >= order {
                    continue;
                }
                let prod = a.checked_mul(b)?;
                let entry = acc.entry(power).or_insert_with(LogPoly::zero);
                *entry = &*entry + &prod;
            }
        }
        let mut out = LogLaurentSeries {
            n_min,
            order,
            coeffs: BTreeMap::new(),
        };
        for (k, p) in acc {
            out.insert(k, p);
        }
        Ok(out)
    }

    /// Repeated multiplication; `power >= 1`.
    pub fn checked_pow(&self, power: u32) -> Result<Self, SeriesError> {
        if power == 0 {
            return Err(SeriesError::Parameter("power must be >= 1".into()));
        }
        let mut out = self.clone();
        for _ in 1..power {
            out = out.checked_mul(self)?;
        }
        Ok(out)
    }

    /// Value of the stored terms at `u`, with `L = log(1/u)`.
    pub fn evaluate_at_u(&self, u: f64) -> f64 {
        let log_value = -u.ln();
        self.coeffs
            .iter()
            .map(|(&n, p)| p.eval(log_value) * u.powi(n))
            .sum()
    }

    /// Value of the truncated series at `lambda` (no remainder estimate).
    pub fn evaluate(&self, lambda: TrafficIntensity) -> f64 {
        self.evaluate_at_u(lambda.u())
    }

    pub fn to_real(&self) -> LogLaurentSeries<f64> {
        let mut out = LogLaurentSeries {
            n_min: self.n_min,
            order: self.order,
            coeffs: BTreeMap::new(),
        };
        for (&k, p) in &self.coeffs {
            out.insert(k, p.to_real());
        }
        out
    }
}

impl<C: Coefficient> Add for &LogLaurentSeries<C> {
    type Output = LogLaurentSeries<C>;
    fn add(self, rhs: &LogLaurentSeries<C>) -> LogLaurentSeries<C> {
        let order = self.order.min(rhs.order);
        let mut out = LogLaurentSeries {
            n_min: self.n_min.min(rhs.n_min).min(order),
            order,
            coeffs: BTreeMap::new(),
        };
        for (&k, p) in self.coeffs.range(..order) {
            out.insert(k, p.clone());
        }
        for (&k, p) in rhs.coeffs.range(..order) {
            let merged = &out.coefficient(k) + p;
            out.insert(k, merged);
        }
        out
    }
}

impl<C: Coefficient> Neg for &LogLaurentSeries<C> {
    type Output = LogLaurentSeries<C>;
    fn neg(self) -> LogLaurentSeries<C> {
        LogLaurentSeries {
            n_min: self.n_min,
            order: self.order,
            coeffs: self.coeffs.iter().map(|(&k, p)| (k, -p)).collect(),
        }
    }
}

impl<C: Coefficient> Sub for &LogLaurentSeries<C> {
    type Output = LogLaurentSeries<C>;
    fn sub(self, rhs: &LogLaurentSeries<C>) -> LogLaurentSeries<C> {
        self + &(-rhs)
    }
}

impl<C: Coefficient> LogLaurentSeries<C> {
    /// One line per power of `(1-λ)`, ascending, ending with the order term.
    pub fn render(&self, fmt_coeff: &dyn Fn(&C) -> String) -> String {
        let mut lines: Vec<String> = self
            .coeffs
            .iter()
            .map(|(&n, p)| {
                let body = p.render(fmt_coeff);
                match n {
                    0 => format!("[{body}]"),
                    1 => format!("[{body}]·(1-λ)"),
                    _ => format!("[{body}]·(1-λ)^{n}"),
                }
            })
            .collect();
        lines.push(format!("O((1-λ)^{})", self.order));
        lines.join("\n  + ")
    }
}

impl<C: Coefficient + fmt::Display> fmt::Display for LogLaurentSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(&|c: &C| c.to_string()))
    }
}

/// One term of the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTermJson {
    pub power: i32,
    pub log_coeffs: [f64; 3],
}

/// JSON form of a [`LogLaurentSeries`]: `{n_min, order, terms: [{power, log_coeffs}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub n_min: i32,
    pub order: i32,
    pub terms: Vec<SeriesTermJson>,
}

impl<C: Coefficient> From<&LogLaurentSeries<C>> for SeriesJson {
    fn from(s: &LogLaurentSeries<C>) -> Self {
        SeriesJson {
            n_min: s.n_min,
            order: s.order,
            terms: s
                .coeffs
                .iter()
                .map(|(&power, p)| {
                    let p = p.to_real();
                    SeriesTermJson {
                        power,
                        log_coeffs: [p.coeff(0), p.coeff(1), p.coeff(2)],
                    }
                })
                .collect(),
        }
    }
}

impl TryFrom<SeriesJson> for LogLaurentSeries<f64> {
    type Error = SeriesError;
    fn try_from(j: SeriesJson) -> Result<Self, SeriesError> {
        let terms = j
            .terms
            .into_iter()
            .map(|t| LogPoly::new(t.log_coeffs.to_vec()).map(|p| (t.power, p)))
            .collect::<Result<Vec<_>, _>>()?;
        LogLaurentSeries::from_terms(j.n_min, j.order, terms)
    }
}

impl Serialize for LogLaurentSeries<f64> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SeriesJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LogLaurentSeries<f64> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let j = SeriesJson::deserialize(deserializer)?;
        LogLaurentSeries::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// `1/h` with `h = -log(1 - u)`: `(1/u) sum_{n < order} (-1)^n C_n u^n / n!`.
///
/// `order` counts terms, so the result is known up to `u^(order - 1)`.
pub fn inv_h_series<C: Coefficient>(order: usize) -> Result<LogLaurentSeries<C>, SeriesError> {
    if order == 0 {
        return Err(SeriesError::Parameter("inv_h_series needs order >= 1".into()));
    }
    let terms = (0..order)
        .map(|n| {
            let c = cauchy_number(n)? / Rational::from_integer(factorial(n));
            let c = if n % 2 == 1 { -c } else { c };
            Ok((n as i32 - 1, LogPoly::constant(C::from_rational(&c))))
        })
        .collect::<Result<Vec<_>, SeriesError>>()?;
    LogLaurentSeries::from_terms(-1, order as i32 - 1, terms)
}

/// `h^(-power)` as a product of [`inv_h_series`] factors; `power >= 1`.
pub fn inv_h_power<C: Coefficient>(
    power: u32,
    order: usize,
) -> Result<LogLaurentSeries<C>, SeriesError> {
    if power == 0 {
        return Err(SeriesError::Parameter("inv_h_power needs power >= 1".into()));
    }
    inv_h_series(order)?.checked_pow(power)
}

/// `h = -log(1 - u) = sum_{1 <= m < order} u^m / m`, known up to `u^order`.
pub fn h_series<C: Coefficient>(order: usize) -> Result<LogLaurentSeries<C>, SeriesError> {
    if order < 2 {
        return Err(SeriesError::Parameter("h_series needs order >= 2".into()));
    }
    let terms = (1..order).map(|m| {
        let c = Rational::new(1.into(), (m as i64).into());
        (m as i32, LogPoly::constant(C::from_rational(&c)))
    });
    LogLaurentSeries::from_terms(1, order as i32, terms)
}

/// `(1 - lambda)/lambda = sum_{1 <= n < order} u^n`; `order >= 2`.
pub fn prefactor_series<C: Coefficient>(order: usize) -> Result<LogLaurentSeries<C>, SeriesError> {
    if order < 2 {
        return Err(SeriesError::Parameter("prefactor_series needs order >= 2".into()));
    }
    let one = C::from_rational(&Rational::from_integer(1.into()));
    let terms = (1..order).map(|n| (n as i32, LogPoly::constant(one.clone())));
    LogLaurentSeries::from_terms(1, order as i32, terms)
}


#[cfg(test)]
mod rational_coefficients {
    //! Exact coefficients for test oracles.
    use super::*;
    use num_traits::ToPrimitive;

    impl Coefficient for Rational {
        fn from_rational(q: &Rational) -> Self {
            q.clone()
        }
        fn to_real(&self) -> f64 {
            self.to_f64().unwrap_or(f64::NAN)
        }
        fn is_finite(&self) -> bool {
            true
        }
    }
}
