//! Maxmin over the prior set `{p ∈ Δ : Σ f(p_i) ≤ K}`, evaluated through its
//! dual `sup_{λ>0, β} (−λK + β − λ Σ f*((β − y_i)/λ))`.

use super::divergence::RealFn;
use crate::error::{Error, Result};
use crate::numerics::{bisect_decreasing, maximize_concave_1d, Interval, SimplexPoint};
use std::fmt;

#[derive(Clone)]
pub enum LevelKFamily {
    /// `f(q) = q ln q`, `f*(x) = e^{x−1}`.
    Entropy,
    /// `f(q) = q ln(kq)`: the relative-entropy ball around the uniform prior.
    EntropyBall,
    /// `f(q) = q^p / p`, `f*(x) = ((p−1)/p) x₊^{p/(p−1)}`.
    PNorm(f64),
    Custom {
        f: RealFn,
        fstar: RealFn,
        fstar_d1: RealFn,
        /// `f*` is finite for `x < fstar_sup`.
        fstar_sup: f64,
    },
}

#[derive(Clone)]
pub struct LevelKSpec {
    pub family: LevelKFamily,
    pub bound: f64,
    pub k: usize,
}

impl fmt::Debug for LevelKSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fam = match self.family {
            LevelKFamily::Entropy => "entropy".to_string(),
            LevelKFamily::EntropyBall => "entropy_ball".to_string(),
            LevelKFamily::PNorm(p) => format!("pnorm({p})"),
            LevelKFamily::Custom { .. } => "custom".to_string(),
        };
        write!(f, "LevelKSpec({fam}, K={}, k={})", self.bound, self.k)
    }
}

impl LevelKSpec {
    pub fn new(family: LevelKFamily, bound: f64, k: usize) -> Result<Self> {
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::Domain(format!("level-K bound {bound} must be finite and ≥ 0")));
        }
        if let LevelKFamily::PNorm(p) = family {
            if !(p > 1.0) {
                return Err(Error::Domain(format!("p-norm exponent {p} must exceed 1")));
            }
        }
        let spec = LevelKSpec { family, bound, k };
        let vertex = spec.f(1.0) + (k as f64 - 1.0) * spec.f(0.0);
        let bary = k as f64 * spec.f(1.0 / k as f64);
        if !(vertex <= bound) && !(bary < bound) {
            return Err(Error::component(
                "meu_levelk",
                format!("prior set is empty: Σf at barycenter = {bary}, at a vertex = {vertex}, K = {bound}"),
            ));
        }
        Ok(spec)
    }

    pub fn f(&self, q: f64) -> f64 {
        if q < 0.0 {
            return f64::INFINITY;
        }
        match &self.family {
            LevelKFamily::Entropy => {
                if q == 0.0 {
                    0.0
                } else {
                    q * q.ln()
                }
            }
            LevelKFamily::EntropyBall => {
                if q == 0.0 {
                    0.0
                } else {
                    q * (self.k as f64 * q).ln()
                }
            }
            LevelKFamily::PNorm(p) => q.powf(*p) / p,
            LevelKFamily::Custom { f, .. } => f(q),
        }
    }

    pub fn fstar_sup(&self) -> f64 {
        match &self.family {
            LevelKFamily::Custom { fstar_sup, .. } => *fstar_sup,
            _ => f64::INFINITY,
        }
    }

    pub fn fstar(&self, x: f64) -> f64 {
        if x >= self.fstar_sup() {
            return f64::INFINITY;
        }
        match &self.family {
            LevelKFamily::Entropy => (x - 1.0).exp(),
            LevelKFamily::EntropyBall => (x - 1.0).exp() / self.k as f64,
            LevelKFamily::PNorm(p) => {
                if x <= 0.0 {
                    0.0
                } else {
                    (p - 1.0) / p * x.powf(p / (p - 1.0))
                }
            }
            LevelKFamily::Custom { fstar, .. } => fstar(x),
        }
    }

    pub fn fstar_d1(&self, x: f64) -> f64 {
        if x >= self.fstar_sup() {
            return f64::INFINITY;
        }
        match &self.family {
            LevelKFamily::Entropy => (x - 1.0).exp(),
            LevelKFamily::EntropyBall => (x - 1.0).exp() / self.k as f64,
            LevelKFamily::PNorm(p) => {
                if x <= 0.0 {
                    0.0
                } else {
                    x.powf(1.0 / (p - 1.0))
                }
            }
            LevelKFamily::Custom { fstar_d1, .. } => fstar_d1(x),
        }
    }

    /// True when a vertex of the simplex is feasible, so the worst case is the
    /// minimal outcome.
    pub fn vertex_feasible(&self) -> bool {
        self.f(1.0) + (self.k as f64 - 1.0) * self.f(0.0) <= self.bound
    }

    fn dual_value(&self, lambda: f64, beta: f64, y: &[f64]) -> f64 {
        -lambda * self.bound + beta
            - lambda * y.iter().map(|yi| self.fstar((beta - yi) / lambda)).sum::<f64>()
    }

    /// Best `β` for fixed `λ` and the dual value there.
    fn inner(&self, lambda: f64, y: &[f64]) -> (f64, f64) {
        let ymin = y.iter().copied().fold(f64::INFINITY, f64::min);
        let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let slope = |b: f64| 1.0 - y.iter().map(|yi| self.fstar_d1((b - yi) / lambda)).sum::<f64>();
        let cap = ymin + lambda * self.fstar_sup();
        let mut lo = ymin - lambda - 1.0;
        let mut step = lambda + 1.0;
        while !(slope(lo) > 0.0) && step < 1e12 {
            lo -= step;
            step *= 2.0;
        }
        let mut hi = (ymax + lambda + 1.0).min(cap - 1e-12 * (1.0 + cap.abs()));
        step = lambda + 1.0;
        while slope(hi) > 0.0 && step < 1e12 && hi.is_finite() {
            hi = (hi + step).min(cap - 1e-12 * (1.0 + cap.abs()));
            step *= 2.0;
        }
        let b = bisect_decreasing(slope, Interval { lo, hi }, 1e-13 * (1.0 + ymax.abs()));
        let v = self.dual_value(lambda, b, y);
        (b, if v.is_finite() { v } else { f64::MIN })
    }

    /// Dual optimum `(λ*, β*, U)`.
    fn solve(&self, y: &[f64]) -> Result<(f64, f64, f64)> {
        let obj = |t: f64| self.inner(t.exp(), y).1;
        let (t, v) = maximize_concave_1d(obj, Interval { lo: 1e-6f64.ln(), hi: 1e6f64.ln() }, 1e-10)?;
        let lambda = t.exp();
        let (beta, _) = self.inner(lambda, y);
        Ok((lambda, beta, v))
    }
}

/// `min{p·u : Σ f(p_i) ≤ K}`.
pub fn levelk_evaluate(spec: &LevelKSpec, utils: &[f64]) -> Result<f64> {
    if utils.len() != spec.k {
        return Err(Error::component("meu_levelk", format!("act has {} states, prior set has {}", utils.len(), spec.k)));
    }
    if spec.vertex_feasible() {
        return Ok(utils.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let (_, _, v) = spec.solve(utils)?;
    // The worst case can never fall below the minimal outcome.
    Ok(v.max(utils.iter().copied().fold(f64::INFINITY, f64::min)))
}

/// Worst-case prior recovered from the dual optimum, `q_i = (f*)′((β* − y_i)/λ*)`.
pub fn levelk_argmin(spec: &LevelKSpec, utils: &[f64]) -> Result<SimplexPoint> {
    if utils.len() != spec.k {
        return Err(Error::component("meu_levelk", "act length mismatch"));
    }
    if spec.vertex_feasible() {
        let i = (0..utils.len())
            .min_by(|&a, &b| utils[a].total_cmp(&utils[b]).then(a.cmp(&b)))
            .expect("nonempty act");
        return Ok(SimplexPoint::vertex(spec.k, i));
    }
    let (lambda, beta, _) = spec.solve(utils)?;
    SimplexPoint::normalized(utils.iter().map(|y| spec.fstar_d1((beta - y) / lambda)).collect())
}
