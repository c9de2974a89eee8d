use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{ConstExpr, Monomial, SeriesError};
use crate::special::{euler_gamma, factorial, rational_to_f64, zeta, Rational};

/// Value of `I_f`, the integral of the summand over `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegralConstant {
    Rational(Rational),
    /// `j! * zeta(j + 1)`.
    FactorialZeta(u32),
    EulerGamma,
}

impl IntegralConstant {
    pub fn to_const_expr(&self) -> ConstExpr {
        match self {
            IntegralConstant::Rational(q) => ConstExpr::rational(q.clone()),
            IntegralConstant::FactorialZeta(j) => ConstExpr::term(
                Rational::from_integer(factorial(*j as usize)),
                Monomial::zeta(j + 1),
            ),
            IntegralConstant::EulerGamma => ConstExpr::gamma(),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            IntegralConstant::Rational(q) => rational_to_f64(q),
            IntegralConstant::FactorialZeta(j) => {
                let fact = rational_to_f64(&Rational::from_integer(factorial(*j as usize)));
                fact * zeta(j + 1).expect("j + 1 >= 2")
            }
            IntegralConstant::EulerGamma => euler_gamma(),
        }
    }
}

/// Expansion in powers of `h = -log(lambda)` with exact coefficients.
///
/// Besides the rational coefficients it carries at most one symbolic
/// integral term `I_f h^p` and, for the zeroth Lambert sum, a term
/// `c * (1/h) * log(1/(1 - lambda))`. Powers `>= order` are truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct HExpansion {
    n_min: i32,
    order: i32,
    coeffs: BTreeMap<i32, Rational>,
    integral: Option<(i32, IntegralConstant)>,
    log_over_h: Option<Rational>,
    finite: bool,
}

impl HExpansion {
    pub fn new(
        n_min: i32,
        order: i32,
        coeffs: BTreeMap<i32, Rational>,
        integral: Option<(i32, IntegralConstant)>,
        log_over_h: Option<Rational>,
        finite: bool,
    ) -> Result<Self, SeriesError> {
        if n_min > order {
            return Err(SeriesError::InvalidRange { n_min, order });
        }
        let in_range = |power: i32| power >= n_min && power < order;
        for &power in coeffs.keys().chain(integral.iter().map(|(p, _)| p)) {
            if !in_range(power) {
                return Err(SeriesError::PowerOutOfRange {
                    power,
                    n_min,
                    order,
                });
            }
        }
        if log_over_h.is_some() && (n_min != -1 || order <= -1) {
            return Err(SeriesError::Parameter(
                "a log(1/(1-λ))/h term requires n_min = -1".into(),
            ));
        }
        Ok(HExpansion {
            n_min,
            order,
            coeffs: coeffs.into_iter().filter(|(_, q)| !q.is_zero()).collect(),
            integral,
            log_over_h: log_over_h.filter(|q| !q.is_zero()),
            finite,
        })
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    /// True when every omitted term vanishes identically.
    pub fn is_finite(&self) -> bool {
        self.finite
    }

    pub fn integral(&self) -> Option<&(i32, IntegralConstant)> {
        self.integral.as_ref()
    }

    pub fn log_over_h(&self) -> Option<&Rational> {
        self.log_over_h.as_ref()
    }

    /// Rational part of the coefficient of `h^power`.
    pub fn rational_coefficient(&self, power: i32) -> Rational {
        self.coeffs.get(&power).cloned().unwrap_or_else(Rational::zero)
    }

    /// Full coefficient of `h^power`, including the integral constant.
    pub fn coefficient(&self, power: i32) -> ConstExpr {
        let mut c = ConstExpr::rational(self.rational_coefficient(power));
        if let Some((p, constant)) = &self.integral {
            if *p == power {
                c = c + constant.to_const_expr();
            }
        }
        c
    }

    /// Powers with a nonzero coefficient, ascending.
    pub fn powers(&self) -> Vec<i32> {
        let mut p: Vec<i32> = self.coeffs.keys().copied().collect();
        if let Some((q, _)) = &self.integral {
            p.push(*q);
        }
        p.sort_unstable();
        p.dedup();
        p
    }

    /// Multiplies by `h^shift`.
    pub fn shifted(&self, shift: i32) -> Result<Self, SeriesError> {
        if self.log_over_h.is_some() && shift != 0 {
            return Err(SeriesError::Parameter(
                "cannot shift an expansion carrying a log term".into(),
            ));
        }
        HExpansion::new(
            self.n_min + shift,
            self.order + shift,
            self.coeffs.iter().map(|(&k, q)| (k + shift, q.clone())).collect(),
            self.integral.clone().map(|(p, c)| (p + shift, c)),
            None,
            self.finite,
        )
    }

    /// Keeps only the powers below `order`.
    pub fn truncated(&self, order: i32) -> Self {
        let order = order.min(self.order);
        let n_min = self.n_min.min(order);
        HExpansion {
            n_min,
            order,
            coeffs: self
                .coeffs
                .range(..order)
                .map(|(&k, q)| (k, q.clone()))
                .collect(),
            integral: self.integral.clone().filter(|(p, _)| *p < order),
            log_over_h: self.log_over_h.clone().filter(|_| order > -1),
            finite: self.finite && order == self.order,
        }
    }

    /// Value at `h > 0` of the retained terms.
    pub fn evaluate(&self, h: f64) -> f64 {
        let mut value: f64 = self
            .coeffs
            .iter()
            .map(|(&p, q)| rational_to_f64(q) * h.powi(p))
            .sum();
        if let Some((p, c)) = &self.integral {
            value += c.value() * h.powi(*p);
        }
        if let Some(q) = &self.log_over_h {
            let log_inv_u = -(-(-h).exp_m1()).ln();
            value += rational_to_f64(q) * log_inv_u / h;
        }
        value
    }

    pub fn to_json(&self) -> HExpansionJson {
        let log_over_h = self.log_over_h.as_ref().map(|q| q.to_string());
        HExpansionJson {
            n_min: self.n_min,
            order: self.order,
            finite: self.finite,
            log_over_h,
            terms: self
                .powers()
                .into_iter()
                .map(|power| {
                    let c = self.coefficient(power);
                    HTermJson {
                        power,
                        exact: c.to_string(),
                        value: c.value(),
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for HExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        if let Some(q) = &self.log_over_h {
            if q.is_one() {
                write!(f, "log(1/(1-λ))/h")?;
            } else {
                write!(f, "({q})·log(1/(1-λ))/h")?;
            }
            first = false;
        }
        for power in self.powers() {
            let c = self.coefficient(power);
            if !first {
                write!(f, "\n  + ")?;
            }
            first = false;
            match power {
                0 => write!(f, "[{c}]")?,
                1 => write!(f, "[{c}]·h")?,
                _ => write!(f, "[{c}]·h^{power}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        if self.finite {
            write!(f, "\n  (finite: all further terms vanish)")
        } else {
            write!(f, "\n  + O(h^{})", self.order)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HTermJson {
    pub power: i32,
    pub exact: String,
    pub value: f64,
}

/// JSON form of an [`HExpansion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HExpansionJson {
    pub n_min: i32,
    pub order: i32,
    pub finite: bool,
    pub log_over_h: Option<String>,
    pub terms: Vec<HTermJson>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{rat, rat_int};

    #[test]
    fn log_term_requires_pole_start() {
        let e = HExpansion::new(0, 2, BTreeMap::new(), None, Some(rat_int(1)), false);
        assert!(e.is_err());
        let ok = HExpansion::new(-1, 2, BTreeMap::new(), None, Some(rat_int(1)), false);
        assert!(ok.is_ok());
    }

    #[test]
    fn coefficient_merges_integral() {
        let coeffs = BTreeMap::from([(-2, rat(1, 2)), (0, rat(1, 24))]);
        let e = HExpansion::new(
            -2,
            1,
            coeffs,
            Some((-2, IntegralConstant::FactorialZeta(1))),
            None,
            true,
        )
        .unwrap();
        assert_eq!(e.coefficient(-2).to_string(), "ζ(2) + 1/2");
        assert_eq!(e.powers(), vec![-2, 0]);
        let h = 0.1;
        let expected = (std::f64::consts::PI.powi(2) / 6.0 + 0.5) / (h * h) + 1.0 / 24.0;
        assert!((e.evaluate(h) - expected).abs() < 1e-12);
        let t = e.truncated(0);
        assert_eq!(t.powers(), vec![-2]);
        assert!(!t.is_finite());
    }
}
