//! Exact constants built from rationals, the Euler-Mascheroni constant and
//! zeta values at integers.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use crate::special::{euler_gamma, rational_to_f64, zeta, Rational};

/// A product `gamma^gamma_power * zeta(z_1) * zeta(z_2) * ...`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    gamma_power: u32,
    zeta_args: Vec<u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn gamma() -> Self {
        Monomial {
            gamma_power: 1,
            zeta_args: Vec::new(),
        }
    }

    /// `zeta(s)`; `s` must be at least 2.
    pub fn zeta(s: u32) -> Self {
        assert!(s >= 2, "zeta({s}) is not a finite constant");
        Monomial {
            gamma_power: 0,
            zeta_args: vec![s],
        }
    }

    pub fn degree(&self) -> usize {
        self.gamma_power as usize + self.zeta_args.len()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        let mut zeta_args: Vec<u32> = self
            .zeta_args
            .iter()
            .chain(&other.zeta_args)
            .copied()
            .collect();
        zeta_args.sort_unstable();
        Monomial {
            gamma_power: self.gamma_power + other.gamma_power,
            zeta_args,
        }
    }

    pub fn value(&self) -> f64 {
        let g = euler_gamma().powi(self.gamma_power as i32);
        self.zeta_args
            .iter()
            .map(|&s| zeta(s).expect("zeta argument validated at construction"))
            .fold(g, |acc, z| acc * z)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (i, s) in self.zeta_args.iter().enumerate() {
            if i > 0 && self.zeta_args[i - 1] == *s {
                continue;
            }
            let count = self.zeta_args.iter().filter(|&&t| t == *s).count();
            parts.push(match count {
                1 => format!("ζ({s})"),
                2 => format!("ζ({s})²"),
                c => format!("ζ({s})^{c}"),
            });
        }
        match self.gamma_power {
            0 => {}
            1 => parts.push("γ".to_string()),
            2 => parts.push("γ²".to_string()),
            p => parts.push(format!("γ^{p}")),
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

/// Rational linear combination of [`Monomial`]s.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstExpr {
    terms: BTreeMap<Monomial, Rational>,
}

impl ConstExpr {
    pub fn rational(q: Rational) -> Self {
        Self::term(q, Monomial::one())
    }

    pub fn term(q: Rational, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(m, q);
        }
        ConstExpr { terms }
    }

    pub fn gamma() -> Self {
        Self::term(Rational::one(), Monomial::gamma())
    }

    pub fn zeta(s: u32) -> Self {
        Self::term(Rational::one(), Monomial::zeta(s))
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn value(&self) -> f64 {
        self.terms
            .iter()
            .map(|(m, q)| rational_to_f64(q) * m.value())
            .sum()
    }

    fn insert_add(&mut self, m: Monomial, q: Rational) {
        let entry = self.terms.entry(m).or_insert_with(Rational::zero);
        *entry += q;
        if entry.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// Terms ordered for display: higher degree first, zeta before gamma.
    fn display_order(&self) -> Vec<(&Monomial, &Rational)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|(a, _), (b, _)| {
            b.degree()
                .cmp(&a.degree())
                .then_with(|| b.zeta_args.len().cmp(&a.zeta_args.len()))
                .then_with(|| a.cmp(b))
        });
        v
    }
}

impl fmt::Display for ConstExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, q)) in self.display_order().into_iter().enumerate() {
            let negative = q.is_negative();
            let mag = q.abs();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let is_unit = *m == Monomial::one();
            if is_unit {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else if mag.is_integer() {
                write!(f, "{mag}{m}")?;
            } else {
                write!(f, "({mag})·{m}")?;
            }
        }
        Ok(())
    }
}

impl Add for ConstExpr {
    type Output = ConstExpr;
    fn add(mut self, rhs: ConstExpr) -> ConstExpr {
        for (m, q) in rhs.terms {
            self.insert_add(m, q);
        }
        self
    }
}

impl Sub for ConstExpr {
    type Output = ConstExpr;
    fn sub(self, rhs: ConstExpr) -> ConstExpr {
        self + (-rhs)
    }
}

impl Neg for ConstExpr {
    type Output = ConstExpr;
    fn neg(self) -> ConstExpr {
        ConstExpr {
            terms: self.terms.into_iter().map(|(m, q)| (m, -q)).collect(),
        }
    }
}

impl Mul for ConstExpr {
    type Output = ConstExpr;
    fn mul(self, rhs: ConstExpr) -> ConstExpr {
        let mut out = ConstExpr::default();
        for (ma, qa) in &self.terms {
            for (mb, qb) in &rhs.terms {
                out.insert_add(ma.times(mb), qa * qb);
            }
        }
        out
    }
}

impl Zero for ConstExpr {
    fn zero() -> Self {
        ConstExpr::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{rat, rat_int};

    #[test]
    fn arithmetic_collects_like_terms() {
        let g = ConstExpr::gamma();
        let one = ConstExpr::rational(rat_int(1));
        let sq = (g.clone() + one.clone()) * (g.clone() + one.clone());
        assert_eq!(sq.coefficient(&Monomial::gamma()), rat_int(2));
        assert_eq!(sq.coefficient(&Monomial::one()), rat_int(1));
        assert!((sq.value() - (euler_gamma() + 1.0).powi(2)).abs() < 1e-15);
        assert!((g.clone() - g).is_zero());
    }

    #[test]
    fn display_forms() {
        let g = ConstExpr::gamma();
        let e = g.clone() - ConstExpr::rational(rat_int(1));
        assert_eq!(e.to_string(), "γ - 1");
        let v = -(g.clone() * g.clone()) - g.clone() - ConstExpr::rational(rat_int(1));
        assert_eq!(v.to_string(), "-γ² - γ - 1");
        let z = ConstExpr::term(rat_int(2), Monomial::zeta(2));
        assert_eq!(z.to_string(), "2ζ(2)");
        let h = ConstExpr::term(rat(-1, 2), Monomial::zeta(3)) + ConstExpr::rational(rat(1, 24));
        assert_eq!(h.to_string(), "-(1/2)·ζ(3) + 1/24");
        assert_eq!(ConstExpr::zero().to_string(), "0");
    }
}
