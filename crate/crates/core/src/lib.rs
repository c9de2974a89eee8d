//! Maximum queue length during an M/M/1 busy period.
//!
//! The crate computes the law of the busy-period maximum `L` exactly, its
//! moments through Lambert series, and complete asymptotic expansions of
//! those moments as the traffic intensity approaches one. A Monte Carlo
//! simulator of the embedded random walk serves as an independent check.
//!
//! Modules, bottom up:
//!
//! - [`special`]: exact Bernoulli and Cauchy numbers, zeta, polylogarithm.
//! - [`series`]: truncated series in `u = 1 - lambda` with `log(1/u)` coefficients.
//! - [`exact`]: distribution, Lambert sums, moments, comparison integrals.
//! - [`asymptotic`]: Euler-Maclaurin expansions in `h = -log(lambda)` and their
//!   re-expansion in `u`.
//! - [`simulate`]: reproducible busy-period simulation.
//! - [`cli`]: the command-line driver behind the `busymax` binary.

pub mod asymptotic;
pub mod cli;
pub mod exact;
mod numeric;
pub mod series;
pub mod simulate;
pub mod special;

pub use exact::{Tolerance, TrafficIntensity};
pub use series::{LogLaurentSeries, LogPoly};
pub use special::Rational;
