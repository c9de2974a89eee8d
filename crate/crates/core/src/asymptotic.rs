//! Heavy-traffic expansions of the Lambert sums and of the moments of `L`.
//!
//! For `g(x) = sum_{m>=1} f(m x)` with `f(x) = sum b_n x^n` analytic at zero
//! and integrable derivatives, Euler-Maclaurin gives
//!
//! ```text
//! g(x) ~ I_f / x + sum_n b_n B_{n+1} (-1)^n x^n / (n + 1),   I_f = ∫_0^∞ f.
//! ```
//!
//! With `λ = e^{-h}`, `S_j(λ) = g(h) / h^j` for `f(x) = x^j/(e^x - 1)`, and
//! `S_0` splits off `(1/h) log(1/(1-λ))` so the remainder `f*(x) = 1/(e^x-1) - e^{-x}/x`
//! is analytic. Substituting the Cauchy-number series for `1/h` turns these
//! into series in `u = 1 - λ` with `log(1/u)` coefficients.
//!
//! Coefficients stay exact ([`ConstExpr`]: rationals, `γ`, `ζ(k)`) until the
//! final conversion to floats.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::ExactError;
use crate::series::{
    h_series, inv_h_power, inv_h_series, prefactor_series, ConstExpr, HExpansion,
    IntegralConstant, LogLaurentSeries, LogPoly, SeriesError,
};
use crate::special::{bernoulli_number, binomial, factorial, Rational, SpecialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Taylor data has {have} coefficients, expansion needs {need}")]
    TooFewCoefficients { have: usize, need: usize },
    #[error("could not reach truncation order {requested} (best {reached})")]
    OrderNotReached { requested: i32, reached: i32 },
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Taylor coefficients `b_n` of a summand together with its integral `I_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoeffs {
    values: Vec<Rational>,
    integral: IntegralConstant,
}

impl TaylorCoeffs {
    pub fn new(values: Vec<Rational>, integral: IntegralConstant) -> Result<Self, AsymptoticError> {
        if values.is_empty() {
            return Err(AsymptoticError::InvalidArgument(
                "Taylor data needs at least one coefficient".into(),
            ));
        }
        Ok(TaylorCoeffs { values, integral })
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn integral(&self) -> &IntegralConstant {
        &self.integral
    }

    /// Smallest exponent with a nonzero coefficient.
    pub fn lowest_exponent(&self) -> Option<usize> {
        self.values.iter().position(|b| !b.is_zero())
    }
}

fn rational_factorial(n: usize) -> Rational {
    Rational::from_integer(factorial(n))
}

/// `f(x) = x^j / (e^x - 1) = sum_n B_n x^(n+j-1) / n!`, with `I_f = j! ζ(j+1)`.
///
/// Returns the first `n_terms` coefficients (exponents `0..n_terms`).
pub fn taylor_coeffs_f_j(j: u32, n_terms: usize) -> Result<TaylorCoeffs, AsymptoticError> {
    if j == 0 {
        return Err(AsymptoticError::InvalidArgument(
            "x^0/(e^x - 1) has a pole; use taylor_coeffs_f_star".into(),
        ));
    }
    if n_terms == 0 {
        return Err(AsymptoticError::InvalidArgument("n_terms >= 1".into()));
    }
    let shift = j as usize - 1;
    let values = (0..n_terms)
        .map(|m| {
            if m < shift {
                Ok(Rational::zero())
            } else {
                let n = m - shift;
                Ok(bernoulli_number(n)? / rational_factorial(n))
            }
        })
        .collect::<Result<Vec<_>, SpecialError>>()?;
    TaylorCoeffs::new(values, IntegralConstant::FactorialZeta(j))
}

/// `f*(x) = 1/(e^x - 1) - e^{-x}/x`, with `b_n = (B_{n+1} - (-1)^{n+1}) / (n+1)!`
/// and `I_{f*} = γ`.
pub fn taylor_coeffs_f_star(n_terms: usize) -> Result<TaylorCoeffs, AsymptoticError> {
    if n_terms == 0 {
        return Err(AsymptoticError::InvalidArgument("n_terms >= 1".into()));
    }
    let values = (0..n_terms)
        .map(|n| {
            let sign = if (n + 1) % 2 == 0 { Rational::one() } else { -Rational::one() };
            Ok((bernoulli_number(n + 1)? - sign) / rational_factorial(n + 1))
        })
        .collect::<Result<Vec<_>, SpecialError>>()?;
    TaylorCoeffs::new(values, IntegralConstant::EulerGamma)
}

/// Asymptotic expansion of `g(x) = sum_{m>=1} f(m x)` as `x -> 0`.
///
/// Keeps `x^n` for `n < order`; the table's truncation order is `order`.
pub fn zagier_expansion(f: &TaylorCoeffs, order: usize) -> Result<HExpansion, AsymptoticError> {
    if order == 0 {
        return Err(AsymptoticError::InvalidArgument("order >= 1".into()));
    }
    if f.values.len() < order {
        return Err(AsymptoticError::TooFewCoefficients {
            have: f.values.len(),
            need: order,
        });
    }
    let mut coeffs = BTreeMap::new();
    for (n, b) in f.values.iter().take(order).enumerate() {
        if b.is_zero() {
            continue;
        }
        let mut c = b * bernoulli_number(n + 1)? / Rational::from_integer((n as i64 + 1).into());
        if n % 2 == 1 {
            c = -c;
        }
        coeffs.insert(n as i32, c);
    }
    Ok(HExpansion::new(
        -1,
        order as i32,
        coeffs,
        Some((-1, f.integral.clone())),
        None,
        false,
    )?)
}

/// Expansion of `S_j(e^{-h})` for `j >= 1`:
/// `j! ζ(j+1) / h^(j+1) + sum_{n<order} (-1)^(n+j-1) B_n B_{n+j} h^(n-1) / (n! (n+j))`.
///
/// Complete through `h^(order-2)`. For odd `j` the expansion terminates and
/// the table is flagged finite.
pub fn s_j_h_expansion(j: u32, order: usize) -> Result<HExpansion, AsymptoticError> {
    if j == 0 {
        return Err(AsymptoticError::InvalidArgument(
            "j = 0 needs s_0_h_expansion".into(),
        ));
    }
    if order == 0 {
        return Err(AsymptoticError::InvalidArgument("order >= 1".into()));
    }
    let terms = order + j as usize - 1;
    let f = taylor_coeffs_f_j(j, terms)?;
    let g = zagier_expansion(&f, terms)?.shifted(-(j as i32))?;
    let finite = j % 2 == 1;
    Ok(HExpansion::new(
        g.n_min(),
        g.order(),
        g.powers()
            .into_iter()
            .map(|p| (p, g.rational_coefficient(p)))
            .collect(),
        g.integral().cloned(),
        None,
        finite,
    )?)
}

/// Expansion of `S_0(e^{-h})`:
/// `(1/h) log(1/(1-λ)) + γ/h + sum_n (-1)^n B_{n+1} (B_{n+1} - (-1)^{n+1}) h^n / ((n+1) (n+1)!)`.
///
/// `order` counts the table entries from `h^{-1}` on, so the result is
/// complete through `h^(order-2)`.
pub fn s_0_h_expansion(order: usize) -> Result<HExpansion, AsymptoticError> {
    if order == 0 {
        return Err(AsymptoticError::InvalidArgument("order >= 1".into()));
    }
    let g = if order >= 2 {
        zagier_expansion(&taylor_coeffs_f_star(order - 1)?, order - 1)?
    } else {
        HExpansion::new(
            -1,
            0,
            BTreeMap::new(),
            Some((-1, IntegralConstant::EulerGamma)),
            None,
            false,
        )?
    };
    Ok(HExpansion::new(
        -1,
        g.order(),
        g.powers()
            .into_iter()
            .map(|p| (p, g.rational_coefficient(p)))
            .collect(),
        g.integral().cloned(),
        Some(Rational::one()),
        false,
    )?)
}

/// `h^power` as a series in `u`, with `terms` controlling how far it is known.
fn h_power_series(power: i32, terms: usize) -> Result<LogLaurentSeries<ConstExpr>, SeriesError> {
    match power {
        p if p < 0 => inv_h_power(p.unsigned_abs(), terms),
        0 => Ok(LogLaurentSeries::one(terms as i32)),
        p => h_series(terms + 1)?.checked_pow(p as u32),
    }
}

/// Re-expands an `h`-table in powers of `u = 1 - λ`, exactly.
///
/// The result's order is the smaller of what the substituted series support
/// and the table's own truncation order.
pub fn h_expansion_to_u(
    table: &HExpansion,
    terms: usize,
) -> Result<LogLaurentSeries<ConstExpr>, AsymptoticError> {
    let mut acc = LogLaurentSeries::<ConstExpr>::zero(table.order());
    for power in table.powers() {
        let c = table.coefficient(power);
        acc = &acc + &h_power_series(power, terms)?.scale(&c);
    }
    if let Some(q) = table.log_over_h() {
        let log = LogPoly::monomial(ConstExpr::rational(q.clone()), 1)?;
        acc = &acc + &inv_h_series(terms)?.mul_log_poly(&log)?;
    }
    Ok(acc.truncate(table.order()))
}

/// Signed weights `binom(k, j) (-1)^(k-1-j)` of `S_j` in `Ex[L^k]`.
fn moment_weights(k: u32) -> Vec<Rational> {
    (0..k)
        .map(|j| {
            let b = Rational::from_integer(binomial(k as usize, j as usize));
            if (k - 1 - j).is_multiple_of(2) {
                b
            } else {
                -b
            }
        })
        .collect()
}

/// `S_j` expansion in `h` with truncation order at least `h_order`.
fn lambert_h_expansion(j: u32, h_order: i32) -> Result<HExpansion, AsymptoticError> {
    let order = (h_order + 1).max(1) as usize;
    if j == 0 {
        s_0_h_expansion(order)
    } else {
        s_j_h_expansion(j, order)
    }
}

const MAX_SLACK: i32 = 16;

/// Exact-coefficient expansion of `Ex[L^k]` in `u = 1 - λ`, known through `u^(order-1)`.
pub fn moment_expansion_exact(
    k: u32,
    order: i32,
) -> Result<LogLaurentSeries<ConstExpr>, AsymptoticError> {
    if k == 0 {
        return Err(AsymptoticError::InvalidArgument("moment order k >= 1".into()));
    }
    let lowest = if k == 1 { 0 } else { -(k as i32 - 1) };
    if order <= lowest {
        return Err(AsymptoticError::InvalidArgument(format!(
            "order {order} leaves no terms; the expansion starts at (1-λ)^{lowest}"
        )));
    }
    let weights = moment_weights(k);
    let mut reached = i32::MIN;
    for slack in 0..MAX_SLACK {
        // the prefactor starts at u^1 and the worst pole is u^-k
        let h_order = order + slack;
        let terms = (order + k as i32 + 1 + slack) as usize;
        let mut bracket = LogLaurentSeries::<ConstExpr>::zero(h_order);
        for (j, w) in weights.iter().enumerate() {
            let table = lambert_h_expansion(j as u32, h_order)?;
            let s = h_expansion_to_u(&table, terms)?;
            bracket = &bracket + &s.scale(&ConstExpr::rational(w.clone()));
        }
        let prefactor = prefactor_series::<ConstExpr>(terms + 1)?;
        let series = prefactor.checked_mul(&bracket)?;
        if series.order() >= order {
            return Ok(series.truncate(order));
        }
        reached = reached.max(series.order());
    }
    Err(AsymptoticError::OrderNotReached {
        requested: order,
        reached,
    })
}

/// Floating-point form of [`moment_expansion_exact`].
pub fn moment_expansion(k: u32, order: i32) -> Result<LogLaurentSeries, AsymptoticError> {
    Ok(moment_expansion_exact(k, order)?.to_real())
}

/// `Var[L] = Ex[L^2] - Ex[L]^2` in `u`, exact coefficients, known through `u^(order-1)`.
pub fn variance_expansion_exact(order: i32) -> Result<LogLaurentSeries<ConstExpr>, AsymptoticError> {
    if order < 2 {
        return Err(AsymptoticError::InvalidArgument("variance needs order >= 2".into()));
    }
    let m1 = moment_expansion_exact(1, order)?;
    let m2 = moment_expansion_exact(2, order)?;
    Ok(&m2 - &m1.checked_mul(&m1)?)
}

pub fn variance_expansion(order: i32) -> Result<LogLaurentSeries, AsymptoticError> {
    Ok(variance_expansion_exact(order)?.to_real())
}

/// Measured convergence of one truncation of an expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    /// Powers `>= truncation` were dropped.
    pub truncation: i32,
    pub errors: Vec<f64>,
    /// Least-squares slope of `log|error|` against `log h`; `None` when the
    /// error sequence is not monotone and no fit is made.
    pub slope: Option<f64>,
}

fn is_monotone(errors: &[f64]) -> bool {
    const WIGGLE: f64 = 1e-6;
    let down = errors.windows(2).all(|w| w[1] <= w[0] * (1.0 + WIGGLE));
    let up = errors.windows(2).all(|w| w[1] >= w[0] * (1.0 - WIGGLE));
    down || up
}

fn fit_slope(hs: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Fits the empirical order of `|exact(h) - truncated expansion(h)|` in `h`.
///
/// `h_sequence` must be strictly decreasing with at least three points.
/// Each entry of `truncations` keeps the powers below it.
pub fn order_of_accuracy_check(
    expansion: &HExpansion,
    exact: &dyn Fn(f64) -> Result<f64, ExactError>,
    h_sequence: &[f64],
    truncations: &[i32],
) -> Result<Vec<OrderFit>, AsymptoticError> {
    if h_sequence.len() < 3 {
        return Err(AsymptoticError::InvalidArgument(
            "need at least three step sizes".into(),
        ));
    }
    if h_sequence.windows(2).any(|w| w[1] >= w[0]) || h_sequence[h_sequence.len() - 1] <= 0.0 {
        return Err(AsymptoticError::InvalidArgument(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    let exact_values = h_sequence
        .iter()
        .map(|&h| exact(h))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(truncations
        .iter()
        .map(|&truncation| {
            let table = expansion.truncated(truncation);
            let errors: Vec<f64> = h_sequence
                .iter()
                .zip(&exact_values)
                .map(|(&h, &v)| (v - table.evaluate(h)).abs())
                .collect();
            let usable = errors.iter().all(|&e| e > 0.0) && is_monotone(&errors);
            OrderFit {
                truncation,
                slope: usable.then(|| fit_slope(h_sequence, &errors)),
                errors,
            }
        })
        .collect())
}
