//! Increasing transforms φ for the smooth and second-order models.

use super::divergence::RealFn;
use crate::error::{Error, Result};
use crate::numerics::{finite_diff, Interval};
use std::fmt;

#[derive(Clone)]
pub enum PhiFamily {
    Identity,
    /// `−e^{−θx}/θ`.
    ExpNeg(f64),
    /// `e^{θx}/θ`.
    Exp(f64),
    Log,
    /// `x^γ/γ` on `x > 0`.
    Power(f64),
    /// `Σ c_j x^j`.
    Poly(Vec<f64>),
    Custom { name: String, phi: RealFn, d1: Option<RealFn> },
}

#[derive(Clone)]
pub struct PhiSpec {
    pub family: PhiFamily,
    pub domain: Interval,
}

impl fmt::Debug for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PhiSpec({} on [{}, {}])", self.name(), self.domain.lo, self.domain.hi)
    }
}

impl PhiSpec {
    pub fn new(family: PhiFamily) -> Result<Self> {
        let domain = match &family {
            PhiFamily::Log | PhiFamily::Power(_) => Interval { lo: 0.0, hi: f64::INFINITY },
            _ => Interval::REAL,
        };
        match family {
            PhiFamily::ExpNeg(t) | PhiFamily::Exp(t) | PhiFamily::Power(t) if t == 0.0 || !t.is_finite() => {
                return Err(Error::Domain(format!("φ parameter {t} must be finite and nonzero")))
            }
            _ => {}
        }
        Ok(PhiSpec { family, domain })
    }

    pub fn identity() -> Self {
        PhiSpec { family: PhiFamily::Identity, domain: Interval::REAL }
    }

    pub fn with_domain(mut self, domain: Interval) -> Result<Self> {
        let natural = PhiSpec::new(self.family.clone())?.domain;
        if domain.lo < natural.lo || domain.hi > natural.hi {
            return Err(Error::Domain(format!(
                "domain [{}, {}] exceeds the natural domain of {}",
                domain.lo,
                domain.hi,
                self.name()
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    /// Parses `identity`, `log`, `exp_neg(θ)`, `exp(θ)`, `power(γ)`, `poly(c0, c1, …)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, args) = match s.find('(') {
            Some(i) => {
                if !s.ends_with(')') {
                    return Err(Error::Parse(format!("unbalanced parentheses in {s:?}")));
                }
                let args: std::result::Result<Vec<f64>, _> = s[i + 1..s.len() - 1]
                    .split(',')
                    .filter(|a| !a.trim().is_empty())
                    .map(|a| a.trim().parse::<f64>())
                    .collect();
                (&s[..i], args.map_err(|e| Error::Parse(format!("{s:?}: {e}")))?)
            }
            None => (s, vec![]),
        };
        let one = |args: &[f64]| -> Result<f64> {
            match args {
                [x] => Ok(*x),
                _ => Err(Error::Parse(format!("{head} takes exactly one parameter"))),
            }
        };
        let family = match head {
            "identity" | "linear" => PhiFamily::Identity,
            "log" | "ln" => PhiFamily::Log,
            "exp_neg" => PhiFamily::ExpNeg(if args.is_empty() { 1.0 } else { one(&args)? }),
            "exp" => PhiFamily::Exp(if args.is_empty() { 1.0 } else { one(&args)? }),
            "power" => PhiFamily::Power(one(&args)?),
            "poly" => {
                if args.is_empty() {
                    return Err(Error::Parse("poly needs coefficients".into()));
                }
                PhiFamily::Poly(args)
            }
            other => return Err(Error::Parse(format!("unknown φ family {other:?}"))),
        };
        PhiSpec::new(family)
    }

    pub fn name(&self) -> String {
        match &self.family {
            PhiFamily::Identity => "identity".into(),
            PhiFamily::ExpNeg(t) => format!("exp_neg({t})"),
            PhiFamily::Exp(t) => format!("exp({t})"),
            PhiFamily::Log => "log".into(),
            PhiFamily::Power(g) => format!("power({g})"),
            PhiFamily::Poly(c) => format!(
                "poly({})",
                c.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
            PhiFamily::Custom { name, .. } => name.clone(),
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match &self.family {
            PhiFamily::Identity => x,
            PhiFamily::ExpNeg(t) => -(-t * x).exp() / t,
            PhiFamily::Exp(t) => (t * x).exp() / t,
            PhiFamily::Log => x.ln(),
            PhiFamily::Power(g) => x.powf(*g) / g,
            PhiFamily::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            PhiFamily::Custom { phi, .. } => phi(x),
        }
    }

    /// `φ(x)`; errors outside the domain.
    pub fn value(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) || (self.open_at_zero() && x <= 0.0) {
            return Err(Error::component(
                format!("φ = {}", self.name()),
                format!("argument {x} outside the domain [{}, {}]", self.domain.lo, self.domain.hi),
            ));
        }
        Ok(self.raw(x))
    }

    fn open_at_zero(&self) -> bool {
        matches!(self.family, PhiFamily::Log) || matches!(self.family, PhiFamily::Power(g) if g < 0.0)
    }

    /// Analytic derivative of order 1..=3 when the family provides one.
    pub fn analytic(&self, order: u8, x: f64) -> Option<f64> {
        let n = order as i32;
        Some(match &self.family {
            PhiFamily::Identity => {
                if order == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiFamily::ExpNeg(t) => (-t).powi(n - 1) * (-t * x).exp(),
            PhiFamily::Exp(t) => t.powi(n - 1) * (t * x).exp(),
            PhiFamily::Log => match order {
                1 => 1.0 / x,
                2 => -1.0 / (x * x),
                _ => 2.0 / (x * x * x),
            },
            PhiFamily::Power(g) => {
                let c = match order {
                    1 => 1.0,
                    2 => g - 1.0,
                    _ => (g - 1.0) * (g - 2.0),
                };
                c * x.powf(g - n as f64)
            }
            PhiFamily::Poly(c) => c
                .iter()
                .enumerate()
                .skip(order as usize)
                .map(|(j, &cj)| {
                    let fall: f64 = (0..order as usize).map(|m| (j - m) as f64).product();
                    cj * fall * x.powi((j - order as usize) as i32)
                })
                .sum(),
            PhiFamily::Custom { d1, .. } => match (order, d1) {
                (1, Some(d)) => d(x),
                _ => return None,
            },
        })
    }

    /// Analytic derivative, or a central difference.
    pub fn derivative(&self, order: u8, x: f64) -> f64 {
        self.analytic(order, x)
            .unwrap_or_else(|| finite_diff(|t| self.raw(t), x, order, 1e-4).unwrap_or(f64::NAN))
    }

    /// Sampled check that φ is strictly increasing on a bounded part of the domain.
    pub fn check_increasing(&self) -> Result<()> {
        let lo = if self.domain.lo.is_finite() { self.domain.lo } else { -10.0 };
        let hi = if self.domain.hi.is_finite() { self.domain.hi } else { lo.max(0.0) + 10.0 };
        let pad = if self.open_at_zero() { 1e-3 } else { 0.0 };
        let xs = Interval { lo: lo + pad, hi }.grid(200);
        for w in xs.windows(2) {
            if !(self.raw(w[1]) > self.raw(w[0])) {
                return Err(Error::component(
                    format!("φ = {}", self.name()),
                    format!("not increasing between {} and {}", w[0], w[1]),
                ));
            }
        }
        Ok(())
    }
}
