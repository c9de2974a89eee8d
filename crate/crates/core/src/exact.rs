//! Exact (non-asymptotic) quantities for the busy-period maximum `L`.
//!
//! `Pr[L > l] = (1 - λ) λ^l / (1 - λ^(l+1))`, and the moments follow from
//! summation by parts as a signed combination of the Lambert sums
//! `S_j(λ) = sum_m m^j λ^m / (1 - λ^m)`. Every infinite sum here stops on an
//! analytic tail bound relative to the partial sum, never on term size alone.
//!
//! A note on the `L = 1` probability: a busy period has `L = 1` exactly when
//! the first event after the opening arrival is a departure, which happens
//! with probability `1/(1 + λ)` ([`pmf`] at `l = 1`). Some texts misprint this
//! as `1/(1 - λ)`, which exceeds one.

use num_traits::{One, Pow};
use thiserror::Error;

use crate::numeric::NeumaierSum;
use crate::special::{factorial, polylog, rational_to_f64, Rational, SpecialError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("traffic intensity {0} outside (0, 1)")]
    LambdaOutOfRange(f64),
    #[error("λ = {0} > 1: the busy period is infinite with positive probability")]
    Supercritical(f64),
    #[error("λ = 1 is only admitted by the tail law; this quantity diverges there")]
    Critical,
    #[error("tolerance {0} outside (0, 1)")]
    InvalidTolerance(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tail bound {bound:e} exceeds the requested precision with l_max = {l_max}")]
    TailBoundNotMet { bound: f64, l_max: u64 },
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// Ratio `λ` of arrival rate to service rate.
///
/// Stores `u = 1 - λ` alongside `λ`; when built with [`TrafficIntensity::from_u`]
/// the `u` value is authoritative, which avoids cancellation for `λ` near one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficIntensity {
    lambda: f64,
    u: f64,
}

impl TrafficIntensity {
    /// `0 < λ < 1`.
    pub fn new(lambda: f64) -> Result<Self, ExactError> {
        if lambda > 1.0 {
            return Err(ExactError::Supercritical(lambda));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(ExactError::LambdaOutOfRange(lambda));
        }
        Ok(TrafficIntensity {
            lambda,
            u: 1.0 - lambda,
        })
    }

    /// `0 < λ <= 1`; only [`tail_probability`] and [`pmf`] accept `λ = 1`.
    pub fn with_critical(lambda: f64) -> Result<Self, ExactError> {
        if lambda == 1.0 {
            Ok(TrafficIntensity { lambda, u: 0.0 })
        } else {
            Self::new(lambda)
        }
    }

    /// From `u = 1 - λ` with `0 < u < 1`.
    pub fn from_u(u: f64) -> Result<Self, ExactError> {
        if !(u > 0.0 && u < 1.0) {
            return Err(ExactError::LambdaOutOfRange(1.0 - u));
        }
        Ok(TrafficIntensity { lambda: 1.0 - u, u })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `1 - λ`.
    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn is_critical(&self) -> bool {
        self.u == 0.0
    }

    /// `h = -log λ`, from whichever of `λ` and `u` is the accurate one.
    pub fn h(&self) -> f64 {
        if self.lambda < 0.5 {
            -self.lambda.ln()
        } else {
            -(-self.u).ln_1p()
        }
    }

    /// `log(1/(1 - λ))`.
    pub fn log_inv_u(&self) -> f64 {
        -self.u.ln()
    }

    fn require_subcritical(&self) -> Result<(), ExactError> {
        if self.is_critical() {
            Err(ExactError::Critical)
        } else {
            Ok(())
        }
    }
}

/// Relative truncation tolerance for infinite sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(f64);

impl Tolerance {
    pub fn new(rel_tol: f64) -> Result<Self, ExactError> {
        if rel_tol > 0.0 && rel_tol < 1.0 {
            Ok(Tolerance(rel_tol))
        } else {
            Err(ExactError::InvalidTolerance(rel_tol))
        }
    }

    pub fn rel_tol(&self) -> f64 {
        self.0
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance(1e-12)
    }
}

/// `Pr[L > l]`; `1/(l + 1)` at `λ = 1`.
pub fn tail_probability(lambda: TrafficIntensity, l: u64) -> f64 {
    if lambda.is_critical() {
        return 1.0 / (l as f64 + 1.0);
    }
    let log_lambda = -lambda.h();
    let lf = l as f64;
    // (1 - λ) λ^l / (1 - λ^(l+1))
    lambda.u() * (lf * log_lambda).exp() / -((lf + 1.0) * log_lambda).exp_m1()
}

/// Exact `Pr[L > l]` for rational `0 < λ <= 1`.
pub fn tail_probability_exact(lambda: &Rational, l: u32) -> Rational {
    if lambda.is_one() {
        return Rational::new(1.into(), (i64::from(l) + 1).into());
    }
    let one = Rational::one();
    (&one - lambda) * Pow::pow(lambda, l) / (&one - Pow::pow(lambda, l + 1))
}

/// `Pr[L = l]` for `l >= 1`.
///
/// Uses the simplified difference `(1-λ)² λ^(l-1) / ((1-λ^l)(1-λ^(l+1)))`,
/// which avoids cancellation between neighbouring tails.
pub fn pmf(lambda: TrafficIntensity, l: u64) -> Result<f64, ExactError> {
    if l == 0 {
        return Err(ExactError::InvalidArgument(
            "L >= 1, so Pr[L = 0] is not a pmf entry".into(),
        ));
    }
    let lf = l as f64;
    if lambda.is_critical() {
        return Ok(1.0 / (lf * (lf + 1.0)));
    }
    let log_lambda = -lambda.h();
    let u = lambda.u();
    let a = -(lf * log_lambda).exp_m1();
    let b = -((lf + 1.0) * log_lambda).exp_m1();
    Ok(u * u * ((lf - 1.0) * log_lambda).exp() / (a * b))
}

/// Probability that `Q` is ruined when `P` starts with `v`, `Q` with `w`, and
/// `P` wins each round with probability `p`. `w = 0` gives 1.
pub fn gamblers_ruin_prob(p: f64, v: u64, w: u64) -> Result<f64, ExactError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ExactError::InvalidArgument(format!(
            "win probability {p} outside (0, 1)"
        )));
    }
    if v == 0 {
        return Err(ExactError::InvalidArgument("P's stake must be positive".into()));
    }
    if w == 0 {
        // Q starts ruined
        return Ok(1.0);
    }
    let (vf, wf) = (v as f64, w as f64);
    let log_ratio = ((1.0 - p) / p).ln();
    if log_ratio == 0.0 {
        return Ok(vf / (vf + wf));
    }
    // ((q/p)^v - 1) / ((q/p)^(v+w) - 1)
    Ok((vf * log_ratio).exp_m1() / ((vf + wf) * log_ratio).exp_m1())
}

/// `Δ_k(m) = m^k - (m-1)^k`.
pub fn backward_difference(k: u32, m: u64) -> Result<u128, ExactError> {
    if k == 0 || m == 0 {
        return Err(ExactError::InvalidArgument("k >= 1 and m >= 1 required".into()));
    }
    let overflow = || ExactError::Overflow(format!("{m}^{k}"));
    let m = u128::from(m);
    let value = m
        .checked_pow(k)
        .ok_or_else(overflow)?
        - (m - 1).checked_pow(k).ok_or_else(overflow)?;
    debug_assert_eq!(
        Some(value as i128),
        backward_difference_binomial(k, m as u64),
        "closed forms disagree"
    );
    Ok(value)
}

/// `sum_{j<k} binom(k, j) (-1)^(k-1-j) m^j`, the expanded form of `Δ_k(m)`.
pub fn backward_difference_binomial(k: u32, m: u64) -> Option<i128> {
    let m = i128::from(m);
    let mut acc: i128 = 0;
    let mut binom: i128 = 1;
    for j in 0..k {
        let sign = if (k - 1 - j).is_multiple_of(2) { 1 } else { -1 };
        acc = acc.checked_add(sign * binom.checked_mul(m.checked_pow(j)?)?)?;
        binom = binom.checked_mul(i128::from(k - j))? / i128::from(j + 1);
    }
    Some(acc)
}

/// `σ_k(n)` for `0 <= n <= n_max` (entry 0 is 0), by a divisor sieve.
pub fn sigma_k_sieve(k: u32, n_max: usize) -> Result<Vec<u128>, ExactError> {
    if n_max == 0 {
        return Err(ExactError::InvalidArgument("n_max >= 1 required".into()));
    }
    // σ_k(n) <= n^(k+1)
    (n_max as u128)
        .checked_pow(k + 1)
        .ok_or_else(|| ExactError::Overflow(format!("σ_{k} up to {n_max} exceeds 128 bits")))?;
    let mut sigma = vec![0u128; n_max + 1];
    for d in 1..=n_max {
        let dk = (d as u128).pow(k);
        for multiple in (d..=n_max).step_by(d) {
            sigma[multiple] += dk;
        }
    }
    Ok(sigma)
}

/// Bound on `sum_{m > M} m^k e^(-m h) / (1 - e^(-(M+1) h))`, or infinity when
/// the term ratio has not yet dropped below one.
fn lambert_tail_bound(k: u32, h: f64, m: u64) -> f64 {
    let next = (m + 1) as f64;
    let ratio = (k as f64 * ((next + 1.0) / next).ln() - h).exp();
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let lead = (k as f64 * next.ln() - next * h).exp();
    lead / ((1.0 - ratio) * -(-next * h).exp_m1())
}

/// `S_k(λ) = sum_{m>=1} m^k λ^m / (1 - λ^m)` by direct summation.
pub fn lambert_s_direct(k: u32, lambda: TrafficIntensity, tol: Tolerance) -> Result<f64, ExactError> {
    lambda.require_subcritical()?;
    let h = lambda.h();
    let kf = f64::from(k);
    let mut sum = NeumaierSum::default();
    let mut m: u64 = 1;
    loop {
        let mf = m as f64;
        // m^k λ^m / (1 - λ^m) = m^k / (e^(m h) - 1)
        sum.add(mf.powf(kf) / (mf * h).exp_m1());
        if lambert_tail_bound(k, h, m) <= tol.rel_tol() * sum.value() {
            break;
        }
        m += 1;
    }
    Ok(sum.value())
}

/// Smallest `N` such that `sum_{n > N} n^(k+1) λ^n` is below `target`.
fn divisor_horizon(k: u32, h: f64, target: f64) -> usize {
    let e = f64::from(k + 1);
    let mut n: u64 = 1;
    loop {
        let next = (n + 1) as f64;
        let ratio = (e * ((next + 1.0) / next).ln() - h).exp();
        if ratio < 1.0 {
            let lead = (e * next.ln() - next * h).exp();
            if lead / (1.0 - ratio) < target {
                return n as usize;
            }
        }
        n += 1;
    }
}

/// `S_k(λ) = sum_{n>=1} σ_k(n) λ^n`, using the sieve.
///
/// The horizon comes from `σ_k(n) <= n^(k+1)` and the lower bound
/// `S_k(λ) >= λ/(1-λ)`.
pub fn lambert_s_divisor(k: u32, lambda: TrafficIntensity, tol: Tolerance) -> Result<f64, ExactError> {
    lambda.require_subcritical()?;
    let h = lambda.h();
    let lower = lambda.lambda() / lambda.u();
    let n_max = divisor_horizon(k, h, tol.rel_tol() * lower);
    let sigma = sigma_k_sieve(k, n_max)?;
    let sum: NeumaierSum = sigma
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, &s)| s as f64 * (-(n as f64) * h).exp())
        .collect();
    Ok(sum.value())
}

fn signed_binomial_weights(k: u32) -> Vec<f64> {
    (0..k)
        .map(|j| {
            let b = rational_to_f64(&Rational::from_integer(crate::special::binomial(
                k as usize,
                j as usize,
            )));
            if (k - 1 - j).is_multiple_of(2) {
                b
            } else {
                -b
            }
        })
        .collect()
}

/// `Ex[L^k] = ((1-λ)/λ) sum_{j<k} binom(k,j) (-1)^(k-1-j) S_j(λ)`.
pub fn moment(k: u32, lambda: TrafficIntensity, tol: Tolerance) -> Result<f64, ExactError> {
    if k == 0 {
        return Err(ExactError::InvalidArgument("moment order k >= 1".into()));
    }
    lambda.require_subcritical()?;
    let weights = signed_binomial_weights(k);
    let mut sum = NeumaierSum::default();
    for (j, w) in weights.iter().enumerate() {
        sum.add(w * lambert_s_direct(j as u32, lambda, tol)?);
    }
    Ok(lambda.u() / lambda.lambda() * sum.value())
}

/// Bound on `sum_{l > l_max} l^k Pr[L = l]`, or infinity when not yet decaying.
pub fn brute_force_tail_bound(k: u32, lambda: TrafficIntensity, l_max: u64) -> f64 {
    let h = lambda.h();
    let next = (l_max + 1) as f64;
    let kf = f64::from(k);
    let ratio = (kf * ((next + 1.0) / next).ln() - h).exp();
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    let u = lambda.u();
    // Pr[L = l] <= u² λ^(l-1) / (1 - λ^(l_max+1))² for l > l_max
    let lead = (kf * next.ln() - (next - 1.0) * h).exp();
    let denom = -(-next * h).exp_m1();
    u * u * lead / ((1.0 - ratio) * denom * denom)
}

/// Smallest horizon whose [`brute_force_tail_bound`] is below `tol` (moments are >= 1).
pub fn brute_force_l_max(k: u32, lambda: TrafficIntensity, tol: Tolerance) -> Result<u64, ExactError> {
    lambda.require_subcritical()?;
    let mut l: u64 = 1;
    while brute_force_tail_bound(k, lambda, l) >= tol.rel_tol() {
        l += 1;
    }
    Ok(l)
}

/// `sum_{l=1}^{l_max} l^k Pr[L = l]`, the direct definition of the moment.
///
/// Fails when the analytic bound on the omitted tail exceeds `tol` times the sum.
pub fn brute_force_moment(
    k: u32,
    lambda: TrafficIntensity,
    l_max: u64,
    tol: Tolerance,
) -> Result<f64, ExactError> {
    if k == 0 || l_max == 0 {
        return Err(ExactError::InvalidArgument("k >= 1 and l_max >= 1 required".into()));
    }
    lambda.require_subcritical()?;
    let kf = f64::from(k);
    let mut sum = NeumaierSum::default();
    for l in (1..=l_max).rev() {
        sum.add((l as f64).powf(kf) * pmf(lambda, l)?);
    }
    let bound = brute_force_tail_bound(k, lambda, l_max);
    if bound > tol.rel_tol() * sum.value() {
        return Err(ExactError::TailBoundNotMet { bound, l_max });
    }
    Ok(sum.value())
}

/// `I_j(λ) = ∫_1^∞ x^j λ^x / (1 - λ^x) dx` in closed form.
pub fn integral_i(j: u32, lambda: TrafficIntensity) -> Result<f64, ExactError> {
    lambda.require_subcritical()?;
    let h = lambda.h();
    if j == 0 {
        return Ok(lambda.log_inv_u() / h);
    }
    let mut sum = NeumaierSum::default();
    for i in 0..=j {
        let coeff = crate::special::binomial(j as usize, i as usize) * factorial(i as usize);
        let li = if i == 0 {
            lambda.log_inv_u()
        } else {
            polylog(i + 1, lambda.lambda())?
        };
        sum.add(rational_to_f64(&Rational::from_integer(coeff)) * li / h.powi(i as i32 + 1));
    }
    Ok(sum.value())
}

/// `ψ_q(x) = -log(1-q) + log q * sum_{n>=0} q^(n+x) / (1 - q^(n+x))`.
pub fn q_digamma(q: f64, x: f64, tol: Tolerance) -> Result<f64, ExactError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(ExactError::InvalidArgument(format!("q = {q} outside (0, 1)")));
    }
    if !(x > 0.0 && x.is_finite()) {
        return Err(ExactError::InvalidArgument(format!("x = {x} must be positive")));
    }
    let a = -q.ln();
    let mut sum = NeumaierSum::default();
    let mut n: u64 = 0;
    loop {
        let t = (n as f64 + x) * a;
        sum.add(1.0 / t.exp_m1());
        let next = t + a;
        let bound = (-next).exp() / (-(-a).exp_m1() * -(-next).exp_m1());
        if bound <= tol.rel_tol() * sum.value() {
            break;
        }
        n += 1;
    }
    Ok(-(-q).ln_1p() + q.ln() * sum.value())
}

/// `Ex[K] = λ/(1-λ)`, the time-average queue length in equilibrium.
pub fn equilibrium_mean(lambda: TrafficIntensity) -> Result<f64, ExactError> {
    lambda.require_subcritical()?;
    Ok(lambda.lambda() / lambda.u())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{euler_gamma, rat};

    fn at(lambda: f64) -> TrafficIntensity {
        TrafficIntensity::new(lambda).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// Adaptive Simpson on [a, b].
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, eps, 25)
    }

    fn quadrature_i(j: i32, lambda: f64) -> f64 {
        let h = -lambda.ln();
        let f = move |x: f64| x.powi(j) / (x * h).exp_m1();
        // integrand below 1e-30 past x = 1 + 80/h
        let upper = 1.0 + 80.0 / h;
        let mut total = 0.0;
        let mut a = 1.0;
        while a < upper {
            let b = (a * 2.0).min(upper);
            total += simpson(&f, a, b, 1e-14);
            a = b;
        }
        total
    }

    #[test]
    fn constructors_validate() {
        assert!(TrafficIntensity::new(0.0).is_err());
        assert!(TrafficIntensity::new(1.0).is_err());
        assert_eq!(TrafficIntensity::new(1.5), Err(ExactError::Supercritical(1.5)));
        assert!(TrafficIntensity::with_critical(1.0).unwrap().is_critical());
        let t = TrafficIntensity::from_u(1e-9).unwrap();
        assert_eq!(t.u(), 1e-9);
        assert!((t.h() - (1e-9 + 0.5e-18)).abs() < 1e-24);
        assert!(Tolerance::new(0.0).is_err());
        assert!(Tolerance::new(1.0).is_err());
    }

    #[test]
    fn tail_examples() {
        for lambda in [0.1, 0.5, 0.99] {
            assert!((tail_probability(at(lambda), 0) - 1.0).abs() < 1e-15);
        }
        let crit = TrafficIntensity::with_critical(1.0).unwrap();
        assert_eq!(tail_probability(crit, 3), 0.25);
        assert!((tail_probability(at(0.5), 1) - 1.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn tail_matches_exact_rational() {
        let lambda = rat(3, 7);
        for l in 0..30 {
            let exact = rational_to_f64(&tail_probability_exact(&lambda, l));
            let float = tail_probability(at(3.0 / 7.0), u64::from(l));
            assert!((exact - float).abs() <= 1e-14 * exact, "l = {l}");
        }
        assert_eq!(tail_probability_exact(&rat(1, 1), 3), rat(1, 4));
    }

    #[test]
    fn tail_is_strictly_decreasing() {
        for lambda in [0.1, 0.5, 0.9, 0.999] {
            let t = at(lambda);
            for l in 0..200 {
                assert!(tail_probability(t, l + 1) < tail_probability(t, l));
            }
        }
    }

    #[test]
    fn tail_continuous_at_critical_boundary() {
        let t = TrafficIntensity::from_u(1e-8).unwrap();
        for l in 0..50u64 {
            assert!((tail_probability(t, l) - 1.0 / (l as f64 + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn pmf_examples() {
        assert!((pmf(at(0.01), 1).unwrap() - 1.0 / 1.01).abs() < 1e-15);
        assert!((pmf(at(0.01), 1).unwrap() - 0.990_099).abs() < 1e-6);
        assert!((pmf(at(0.5), 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let total: f64 = (1..=200).map(|l| pmf(at(0.5), l).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(pmf(at(0.5), 0).is_err());
        let crit = TrafficIntensity::with_critical(1.0).unwrap();
        assert_eq!(pmf(crit, 1).unwrap(), 0.5);
    }

    #[test]
    fn pmf_equals_tail_difference() {
        for lambda in [0.1, 0.5, 0.9] {
            let t = at(lambda);
            assert!((pmf(t, 1).unwrap() - 1.0 / (1.0 + lambda)).abs() < 1e-14);
            for l in 1..60 {
                let diff = tail_probability(t, l - 1) - tail_probability(t, l);
                assert!((pmf(t, l).unwrap() - diff).abs() < 1e-14, "λ={lambda} l={l}");
            }
        }
    }

    #[test]
    fn normalization_over_grid() {
        for lambda in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95] {
            let t = at(lambda);
            let l_max = 2000u64;
            let s: NeumaierSum = (1..=l_max).map(|l| pmf(t, l).unwrap()).collect();
            // the omitted mass is exactly Pr[L > l_max]
            let tail = tail_probability(t, l_max);
            assert!(tail < 1e-40);
            assert!((s.value() - 1.0).abs() < 1e-12, "λ = {lambda}");
        }
    }

    #[test]
    fn gamblers_ruin_examples() {
        assert_eq!(gamblers_ruin_prob(0.5, 1, 1).unwrap(), 0.5);
        let r: f64 = 2.0 / 3.0;
        let expected = (r.powi(2) - 1.0) / (r.powi(5) - 1.0);
        assert!((gamblers_ruin_prob(0.6, 2, 3).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 135.0 / 211.0).abs() < 1e-15);
        assert!(gamblers_ruin_prob(1.0, 1, 1).is_err());
        assert!(gamblers_ruin_prob(0.3, 0, 1).is_err());
        assert_eq!(gamblers_ruin_prob(0.3, 1, 0).unwrap(), 1.0);
    }

    #[test]
    fn gamblers_ruin_reproduces_tail_law() {
        for lambda in [0.1, 0.3, 0.5, 0.7, 0.9, 0.95] {
            let p = lambda / (1.0 + lambda);
            for l in 1..=20 {
                let g = gamblers_ruin_prob(p, 1, l).unwrap();
                assert!((g - tail_probability(at(lambda), l)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn backward_difference_forms() {
        for m in 1..20 {
            assert_eq!(backward_difference(1, m).unwrap(), 1);
        }
        assert_eq!(backward_difference(2, 3).unwrap(), 5);
        assert_eq!(backward_difference(3, 2).unwrap(), 7);
        for k in 1..10 {
            for m in 1..50u64 {
                assert_eq!(
                    backward_difference(k, m).unwrap() as i128,
                    backward_difference_binomial(k, m).unwrap()
                );
            }
        }
        assert!(backward_difference(0, 3).is_err());
        assert!(backward_difference(40, u64::MAX).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s0 = sigma_k_sieve(0, 6).unwrap();
        assert_eq!(s0[6], 4);
        assert_eq!(sigma_k_sieve(1, 6).unwrap()[6], 12);
        assert_eq!(sigma_k_sieve(2, 4).unwrap()[4], 21);
        assert_eq!(s0[1], 1);
        assert!(sigma_k_sieve(1, 0).is_err());
        assert!(matches!(sigma_k_sieve(60, 1000), Err(ExactError::Overflow(_))));
    }

    #[test]
    fn sigma_matches_trial_division() {
        let table = sigma_k_sieve(3, 300).unwrap();
        for n in 1..=300u128 {
            let brute: u128 = (1..=n).filter(|d| n % d == 0).map(|d| d.pow(3)).sum();
            assert_eq!(table[n as usize], brute);
        }
    }

    #[test]
    fn lambert_small_lambda() {
        let s = lambert_s_direct(0, at(1e-6), tol()).unwrap();
        assert!((s - 1e-6).abs() / 1e-6 < 3e-6);
        // S_0(λ) = λ + 2λ² + O(λ³)
        assert!((s - (1e-6 + 2e-12)).abs() / s < 1e-11);
        let d = lambert_s_divisor(3, at(1e-6), tol()).unwrap();
        assert!((d - 1e-6).abs() / 1e-6 < 1e-5);
    }

    #[test]
    fn lambert_matches_fixed_horizon_brute_force() {
        let brute: f64 = (1..=200)
            .map(|m| f64::from(m) * 0.5f64.powi(m) / (1.0 - 0.5f64.powi(m)))
            .sum();
        let s = lambert_s_direct(1, at(0.5), tol()).unwrap();
        assert!((s - brute).abs() / brute < 1e-12);
    }

    #[test]
    fn lambert_dual_routes() {
        for k in 0..=4 {
            for lambda in [0.1, 0.3, 0.5, 0.7, 0.9] {
                let a = lambert_s_direct(k, at(lambda), tol()).unwrap();
                let b = lambert_s_divisor(k, at(lambda), tol()).unwrap();
                assert!((a - b).abs() <= 1e-10 * a, "k={k} λ={lambda}: {a} vs {b}");
            }
        }
        let crit = TrafficIntensity::with_critical(1.0).unwrap();
        assert_eq!(lambert_s_direct(0, crit, tol()), Err(ExactError::Critical));
    }

    #[test]
    fn moment_matches_brute_force() {
        for k in 1..=4 {
            for lambda in [0.1, 0.5, 0.8, 0.9, 0.95] {
                let t = at(lambda);
                let m = moment(k, t, tol()).unwrap();
                let l_max = brute_force_l_max(k, t, tol()).unwrap();
                let b = brute_force_moment(k, t, l_max, tol()).unwrap();
                assert!((m - b).abs() <= 1e-9 * b, "k={k} λ={lambda}: {m} vs {b}");
            }
        }
        let b2 = brute_force_moment(2, at(0.9), 2000, tol()).unwrap();
        assert!((moment(2, at(0.9), tol()).unwrap() - b2).abs() < 1e-8);
    }

    #[test]
    fn moment_limits() {
        let m = moment(1, at(1e-4), tol()).unwrap();
        assert!((m - 1.0).abs() < 1e-3);
        assert!(moment(0, at(0.5), tol()).is_err());
        let s0 = lambert_s_direct(0, at(0.5), tol()).unwrap();
        assert!((moment(1, at(0.5), tol()).unwrap() - s0).abs() < 1e-15);
    }

    #[test]
    fn brute_force_self_consistency() {
        let a = brute_force_moment(1, at(0.5), 200, tol()).unwrap();
        let b = brute_force_moment(1, at(0.5), 400, tol()).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(brute_force_tail_bound(1, at(0.5), 200) < 1e-50);
        assert!(matches!(
            brute_force_moment(2, at(0.99), 50, tol()),
            Err(ExactError::TailBoundNotMet { .. })
        ));
    }

    #[test]
    fn integral_matches_quadrature() {
        let lambda = 1.0 - (-1.0f64).exp();
        let q0 = quadrature_i(0, lambda);
        let i0 = integral_i(0, at(lambda)).unwrap();
        assert!((q0 - i0).abs() < 1e-12 * i0, "{q0} vs {i0}");
        let q1 = quadrature_i(1, 0.5);
        assert!((q1 - integral_i(1, at(0.5)).unwrap()).abs() < 1e-8);
        let q3 = quadrature_i(3, 0.8);
        assert!((q3 - integral_i(3, at(0.8)).unwrap()).abs() < 1e-8 * q3);
    }

    #[test]
    fn total_variation_bounds() {
        for lambda in [0.1, 0.5, 0.9, 0.99] {
            let t = at(lambda);
            let s0 = lambert_s_direct(0, t, tol()).unwrap();
            assert!((s0 - integral_i(0, t).unwrap()).abs() <= lambda / (1.0 - lambda));
            for j in 1..=4u32 {
                let sj = lambert_s_direct(j, t, tol()).unwrap();
                let ij = integral_i(j, t).unwrap();
                let bound = 2.0 * rational_to_f64(&Rational::from_integer(factorial(j as usize)))
                    / t.h().powi(j as i32);
                assert!((sj - ij).abs() <= bound, "j={j} λ={lambda}");
            }
        }
    }

    #[test]
    fn q_digamma_identity() {
        for (lambda, eps) in [(0.5, 1e-10), (0.9, 1e-9)] {
            let psi = q_digamma(lambda, 1.0, tol()).unwrap();
            let lhs = (psi + (1.0 - lambda).ln()) / lambda.ln();
            let s0 = lambert_s_direct(0, at(lambda), tol()).unwrap();
            assert!((lhs - s0).abs() < eps * s0.max(1.0));
        }
        assert!(q_digamma(1e-8, 1.0, tol()).unwrap().abs() < 1e-6);
        assert!(q_digamma(1.0, 1.0, tol()).is_err());
        assert!(q_digamma(0.5, 0.0, tol()).is_err());
    }

    #[test]
    fn q_digamma_is_log_derivative_of_q_gamma() {
        let log_q_gamma = |q: f64, x: f64| {
            let mut total = (1.0 - x) * (-q).ln_1p();
            for n in 0..2000 {
                let n = f64::from(n);
                total += (-q.powf(n + 1.0)).ln_1p() - (-q.powf(n + x)).ln_1p();
            }
            total
        };
        for (q, x) in [(0.5, 1.0), (0.9, 1.0), (0.7, 2.5)] {
            let d = |s: f64| (log_q_gamma(q, x + s) - log_q_gamma(q, x - s)) / (2.0 * s);
            let oracle = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
            let psi = q_digamma(q, x, Tolerance::new(1e-15).unwrap()).unwrap();
            assert!((psi - oracle).abs() < 1e-9 * psi.abs().max(1.0), "q={q} x={x}: {psi} vs {oracle}");
        }
    }

    #[test]
    fn q_digamma_recurrence() {
        // ψ_q(x+1) - ψ_q(x) = -log q · q^x / (1 - q^x)
        let (q, x) = (0.7f64, 0.6f64);
        let fine = Tolerance::new(1e-15).unwrap();
        let d = q_digamma(q, x + 1.0, fine).unwrap() - q_digamma(q, x, fine).unwrap();
        let expected = -q.ln() * q.powf(x) / (1.0 - q.powf(x));
        assert!((d - expected).abs() < 1e-12, "{d} vs {expected}");
    }

    #[test]
    fn equilibrium_mean_dwarfs_busy_period_maximum() {
        assert!((equilibrium_mean(at(0.5)).unwrap() - 1.0).abs() < 1e-15);
        assert!((equilibrium_mean(at(0.9)).unwrap() - 9.0).abs() < 1e-12);
        let eq = equilibrium_mean(at(0.99)).unwrap();
        let ex = moment(1, at(0.99), tol()).unwrap();
        assert!((eq - 99.0).abs() < 1e-9);
        assert!((ex - (100f64.ln() + euler_gamma())).abs() < 0.1);
        assert!(eq > 10.0 * ex);
    }
}
