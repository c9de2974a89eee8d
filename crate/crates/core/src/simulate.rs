//! Monte Carlo busy periods on the embedded jump chain.
//!
//! `L` depends only on the order of events, and the next event is an arrival
//! with probability `λ/(1+λ)`, so no exponential clocks are drawn. Every
//! replicate owns a ChaCha stream keyed by `(seed, replicate index)`; together
//! with exact integer moment sums this makes summaries independent of how
//! replicates are spread over threads.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::TrafficIntensity;

pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulateError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(
        "busy period exceeded {step_cap} steps (maximum so far {partial_max}{}); λ is too close to 1 for this cap",
        replicate.map(|r| format!(", replicate {r}")).unwrap_or_default()
    )]
    StepCapExceeded {
        step_cap: u64,
        partial_max: u64,
        replicate: Option<u64>,
    },
    #[error("moment sums overflowed")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// Generator for replicate `index`: stream `index` of the ChaCha8 key derived from `seed`.
pub fn replicate_rng(seed: RngSeed, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(index);
    rng
}

/// Runs one busy period from a queue of length one and returns its maximum.
pub fn simulate_busy_period<R: Rng + ?Sized>(
    lambda: TrafficIntensity,
    rng: &mut R,
    step_cap: u64,
) -> Result<u64, SimulateError> {
    if lambda.is_critical() {
        return Err(SimulateError::InvalidArgument(
            "λ = 1 has no almost surely finite busy-period maximum to sample".into(),
        ));
    }
    if step_cap == 0 {
        return Err(SimulateError::InvalidArgument("step_cap >= 1".into()));
    }
    let p = lambda.lambda() / (1.0 + lambda.lambda());
    let mut queue: u64 = 1;
    let mut max = 1;
    for _ in 0..step_cap {
        if rng.gen::<f64>() < p {
            queue += 1;
            max = max.max(queue);
        } else {
            queue -= 1;
            if queue == 0 {
                return Ok(max);
            }
        }
    }
    Err(SimulateError::StepCapExceeded {
        step_cap,
        partial_max: max,
        replicate: None,
    })
}

/// Histogram and exact power sums of observed maxima.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EmpiricalSummary {
    n: u64,
    histogram: BTreeMap<u64, u64>,
    moment_sums: [u128; 4],
    max_observed: u64,
}

impl EmpiricalSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, l: u64) -> Result<(), SimulateError> {
        let mut power = 1u128;
        let mut sums = self.moment_sums;
        for s in sums.iter_mut() {
            power = power.checked_mul(u128::from(l)).ok_or(SimulateError::Overflow)?;
            *s = s.checked_add(power).ok_or(SimulateError::Overflow)?;
        }
        self.moment_sums = sums;
        self.n += 1;
        *self.histogram.entry(l).or_insert(0) += 1;
        self.max_observed = self.max_observed.max(l);
        Ok(())
    }

    /// Combines two summaries; associative and commutative.
    pub fn merge(&self, other: &Self) -> Result<Self, SimulateError> {
        let mut out = self.clone();
        out.n += other.n;
        for (&l, &c) in &other.histogram {
            *out.histogram.entry(l).or_insert(0) += c;
        }
        for (a, b) in out.moment_sums.iter_mut().zip(other.moment_sums) {
            *a = a.checked_add(b).ok_or(SimulateError::Overflow)?;
        }
        out.max_observed = out.max_observed.max(other.max_observed);
        Ok(out)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn histogram(&self) -> &BTreeMap<u64, u64> {
        &self.histogram
    }

    /// `sum L^k` for `k = 1..=4`.
    pub fn moment_sums(&self) -> [u128; 4] {
        self.moment_sums
    }

    pub fn max_observed(&self) -> u64 {
        self.max_observed
    }

    pub fn count(&self, l: u64) -> u64 {
        self.histogram.get(&l).copied().unwrap_or(0)
    }

    /// True when the counts and power sums agree with the histogram exactly.
    pub fn is_consistent(&self) -> bool {
        let mut sums = [0u128; 4];
        let mut n = 0u64;
        for (&l, &c) in &self.histogram {
            n += c;
            let mut power = 1u128;
            for s in sums.iter_mut() {
                power *= u128::from(l);
                *s += power * u128::from(c);
            }
        }
        n == self.n
            && sums == self.moment_sums
            && self.histogram.keys().next_back().copied().unwrap_or(0) == self.max_observed
    }

    /// Sample mean of `L^k`, `1 <= k <= 4`.
    pub fn raw_moment(&self, k: usize) -> f64 {
        assert!((1..=4).contains(&k), "raw moments are tracked for k = 1..=4");
        self.moment_sums[k - 1] as f64 / self.n as f64
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// Standard error of the sample mean of `L^k`, `k` in `{1, 2}`.
    pub fn stderr_moment(&self, k: usize) -> f64 {
        assert!(k == 1 || k == 2, "standard errors need the 2k-th power sum");
        let n = self.n as f64;
        let m = self.raw_moment(k);
        let var = (self.raw_moment(2 * k) - m * m).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    pub fn stderr_mean(&self) -> f64 {
        self.stderr_moment(1)
    }
}

/// `n` independent busy periods, run in parallel.
///
/// On a step-cap failure the error names the smallest failing replicate
/// among those that ran; remaining work is abandoned.
pub fn simulate_many(
    lambda: TrafficIntensity,
    n: u64,
    seed: RngSeed,
    step_cap: u64,
) -> Result<EmpiricalSummary, SimulateError> {
    if n == 0 {
        return Err(SimulateError::InvalidArgument("n >= 1".into()));
    }
    if lambda.is_critical() {
        return Err(SimulateError::InvalidArgument(
            "λ = 1 has no almost surely finite busy-period maximum to sample".into(),
        ));
    }
    let failed = AtomicBool::new(false);
    type Partial = (EmpiricalSummary, Option<SimulateError>);
    let pick = |a: Option<SimulateError>, b: Option<SimulateError>| match (a, b) {
        (Some(x), Some(y)) => {
            let index = |e: &SimulateError| match e {
                SimulateError::StepCapExceeded { replicate, .. } => replicate.unwrap_or(u64::MAX),
                _ => u64::MAX,
            };
            Some(if index(&y) < index(&x) { y } else { x })
        }
        (x, y) => x.or(y),
    };
    let (summary, error) = (0..n)
        .into_par_iter()
        .fold(
            || (EmpiricalSummary::new(), None),
            |(mut acc, err): Partial, i| {
                if err.is_some() || failed.load(Ordering::Relaxed) {
                    return (acc, err);
                }
                let mut rng = replicate_rng(seed, i);
                let outcome = simulate_busy_period(lambda, &mut rng, step_cap)
                    .map_err(|e| match e {
                        SimulateError::StepCapExceeded {
                            step_cap,
                            partial_max,
                            ..
                        } => SimulateError::StepCapExceeded {
                            step_cap,
                            partial_max,
                            replicate: Some(i),
                        },
                        other => other,
                    })
                    .and_then(|l| acc.record(l));
                match outcome {
                    Ok(()) => (acc, None),
                    Err(e) => {
                        failed.store(true, Ordering::Relaxed);
                        (acc, Some(e))
                    }
                }
            },
        )
        .reduce(
            || (EmpiricalSummary::new(), None),
            |(a, ea), (b, eb)| match a.merge(&b) {
                Ok(m) => (m, pick(ea, eb)),
                Err(e) => (a, pick(pick(ea, eb), Some(e))),
            },
        );
    match error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

/// Estimate with its binomial or normal-approximation standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// `#{L > l} / n` with standard error `sqrt(p (1 - p) / n)`.
pub fn empirical_tail(summary: &EmpiricalSummary, l: u64) -> Result<Estimate, SimulateError> {
    if summary.n == 0 {
        return Err(SimulateError::InvalidArgument("empty summary".into()));
    }
    let above: u64 = summary.histogram.range(l + 1..).map(|(_, c)| c).sum();
    let n = summary.n as f64;
    let p = above as f64 / n;
    Ok(Estimate {
        value: p,
        stderr: (p * (1.0 - p) / n).sqrt(),
    })
}

/// JSON dump of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub n: u64,
    pub lambda: f64,
    pub seed: u64,
    pub histogram: Vec<(u64, u64)>,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub stderr_mean: f64,
}

impl SimulationReport {
    pub fn new(summary: &EmpiricalSummary, lambda: TrafficIntensity, seed: RngSeed) -> Self {
        SimulationReport {
            n: summary.n,
            lambda: lambda.lambda(),
            seed: seed.0,
            histogram: summary.histogram.iter().map(|(&l, &c)| (l, c)).collect(),
            mean: summary.mean(),
            m2: summary.raw_moment(2),
            m3: summary.raw_moment(3),
            m4: summary.raw_moment(4),
            stderr_mean: summary.stderr_mean(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{gamblers_ruin_prob, moment, tail_probability, Tolerance};

    fn at(lambda: f64) -> TrafficIntensity {
        TrafficIntensity::new(lambda).unwrap()
    }

    fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(f)
    }

    #[test]
    fn light_traffic_is_almost_always_one() {
        let s = simulate_many(at(1e-6), 100_000, RngSeed(7), DEFAULT_STEP_CAP).unwrap();
        assert!(s.count(1) as f64 / s.n() as f64 > 0.999);
    }

    #[test]
    fn tail_at_one_half() {
        let s = simulate_many(at(0.5), 1_000_000, RngSeed(1), DEFAULT_STEP_CAP).unwrap();
        let est = empirical_tail(&s, 1).unwrap();
        assert!((est.value - 1.0 / 3.0).abs() < 4.0 * est.stderr, "{est:?}");
        assert_eq!(empirical_tail(&s, 0).unwrap().value, 1.0);
        assert_eq!(empirical_tail(&s, s.max_observed()).unwrap().value, 0.0);
    }

    #[test]
    fn single_periods_are_reproducible() {
        let run = || {
            let mut rng = replicate_rng(RngSeed(3), 0);
            (0..1000)
                .map(|_| simulate_busy_period(at(0.7), &mut rng, 1_000_000).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn summary_basics() {
        assert!(simulate_many(at(0.5), 0, RngSeed(0), 10).is_err());
        let s = simulate_many(at(0.5), 1, RngSeed(0), 1_000).unwrap();
        assert_eq!(s.histogram().len(), 1);
        assert!(s.is_consistent());
    }

    #[test]
    fn step_cap_is_reported() {
        // with one step allowed, only an opening arrival overruns the cap
        let mut rng = replicate_rng(RngSeed(0), 0);
        let outcomes: Vec<_> = (0..64)
            .map(|_| simulate_busy_period(at(0.999_999), &mut rng, 1))
            .collect();
        assert!(outcomes.contains(&Ok(1)));
        assert!(outcomes.iter().any(|o| matches!(
            o,
            Err(SimulateError::StepCapExceeded { partial_max: 2, replicate: None, .. })
        )));
        let err = simulate_many(at(0.9), 1_000, RngSeed(0), 3).unwrap_err();
        assert!(matches!(err, SimulateError::StepCapExceeded { replicate: Some(_), .. }));
        assert!(simulate_busy_period(at(0.5), &mut rng, 0).is_err());
    }

    #[test]
    fn mean_at_point_eight() {
        let s = simulate_many(at(0.8), 1_000_000, RngSeed(11), DEFAULT_STEP_CAP).unwrap();
        let m1 = moment(1, at(0.8), Tolerance::default()).unwrap();
        assert!((s.mean() - m1).abs() < 4.0 * s.stderr_mean());
        let m2 = moment(2, at(0.8), Tolerance::default()).unwrap();
        assert!((s.raw_moment(2) - m2).abs() < 4.0 * s.stderr_moment(2));
        assert!(s.is_consistent());
    }

    #[test]
    fn distribution_agreement() {
        for lambda in [0.3, 0.5, 0.8] {
            let s = simulate_many(at(lambda), 1_000_000, RngSeed(5), DEFAULT_STEP_CAP).unwrap();
            let n = s.n() as f64;
            for l in 0.. {
                let p = tail_probability(at(lambda), l);
                if p * n < 25.0 {
                    break;
                }
                let est = empirical_tail(&s, l).unwrap();
                assert!((est.value - p).abs() <= 4.0 * est.stderr.max(1e-12), "λ={lambda} l={l}");
            }
            // Pr[L = 1] = 1/(1+λ)
            let p1 = s.count(1) as f64 / n;
            let q = 1.0 / (1.0 + lambda);
            assert!((p1 - q).abs() < 4.0 * (q * (1.0 - q) / n).sqrt(), "λ={lambda}");
        }
    }

    #[test]
    fn partitioning_does_not_change_the_summary() {
        let lambda = at(0.9);
        let one = in_pool(1, || simulate_many(lambda, 20_000, RngSeed(42), DEFAULT_STEP_CAP).unwrap());
        let four = in_pool(4, || simulate_many(lambda, 20_000, RngSeed(42), DEFAULT_STEP_CAP).unwrap());
        assert_eq!(one, four);
        let mut serial = EmpiricalSummary::new();
        for i in 0..20_000 {
            let l = simulate_busy_period(lambda, &mut replicate_rng(RngSeed(42), i), DEFAULT_STEP_CAP).unwrap();
            serial.record(l).unwrap();
        }
        assert_eq!(one, serial);
    }

    #[test]
    fn merge_adds_counts_exactly() {
        let a = simulate_many(at(0.6), 5_000, RngSeed(1), DEFAULT_STEP_CAP).unwrap();
        let b = simulate_many(at(0.6), 5_000, RngSeed(2), DEFAULT_STEP_CAP).unwrap();
        let ab = a.merge(&b).unwrap();
        assert_eq!(ab, b.merge(&a).unwrap());
        assert_eq!(ab.n(), 10_000);
        for (l, c) in ab.histogram() {
            assert_eq!(*c, a.count(*l) + b.count(*l));
        }
        assert!(ab.is_consistent());
        let c = simulate_many(at(0.6), 100, RngSeed(3), DEFAULT_STEP_CAP).unwrap();
        assert_eq!(ab.merge(&c).unwrap(), a.merge(&b.merge(&c).unwrap()).unwrap());
    }

    #[test]
    fn gamblers_ruin_by_random_walk() {
        // P holds 2 and wins each round with probability 0.6; Q holds 3
        let mut rng = replicate_rng(RngSeed(9), 0);
        let trials = 1_000_000u32;
        let mut q_ruined = 0u32;
        for _ in 0..trials {
            let mut fortune = 2i32;
            while fortune > 0 && fortune < 5 {
                fortune += if rng.gen::<f64>() < 0.6 { 1 } else { -1 };
            }
            if fortune == 5 {
                q_ruined += 1;
            }
        }
        let p_hat = f64::from(q_ruined) / f64::from(trials);
        let exact = gamblers_ruin_prob(0.6, 2, 3).unwrap();
        let sigma = (exact * (1.0 - exact) / f64::from(trials)).sqrt();
        assert!((p_hat - exact).abs() < 4.0 * sigma, "{p_hat} vs {exact}");
    }

    #[test]
    fn report_json_shape() {
        let s = simulate_many(at(0.5), 10, RngSeed(0), 1_000).unwrap();
        let report = SimulationReport::new(&s, at(0.5), RngSeed(0));
        let v: serde_json::Value = serde_json::to_value(&report).unwrap();
        for key in ["n", "lambda", "seed", "histogram", "mean", "m2", "m3", "m4", "stderr_mean"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["histogram"][0].as_array().unwrap().len() == 2);
        let back: SimulationReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
    }
}
