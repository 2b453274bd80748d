//! g-divergences, their conjugates, and the optimized-certainty-equivalent
//! evaluation `sup_z (z − Σ P_i g*(z − u_i))`.

use crate::error::{Error, Result};
use crate::numerics::{bisect_decreasing, maximize_concave_1d, Interval, SimplexPoint};
use std::fmt;
use std::sync::Arc;

/// Width below which Cressie–Read switches to its θ → 0 or θ → 1 limit.
const CR_LIMIT_BAND: f64 = 1e-8;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied divergence. Missing derivatives fall back to finite differences.
#[derive(Clone)]
pub struct CustomDivergence {
    pub g: RealFn,
    pub gstar: RealFn,
    pub gstar_d1: Option<RealFn>,
    pub gstar_d3: Option<RealFn>,
    /// `g*` is finite for `s < gstar_sup`.
    pub gstar_sup: f64,
}

#[derive(Clone)]
pub enum DivergenceKind {
    RelativeEntropy,
    Burg,
    Chi2,
    Hellinger,
    CressieRead { theta: f64 },
    Custom(CustomDivergence),
}

#[derive(Clone)]
pub struct DivergenceSpec {
    pub name: String,
    pub kind: DivergenceKind,
}

impl fmt::Debug for DivergenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DivergenceKind::CressieRead { theta } => write!(f, "DivergenceSpec({}, θ={theta})", self.name),
            _ => write!(f, "DivergenceSpec({})", self.name),
        }
    }
}

enum Cr {
    Entropy,
    Burg,
    Generic(f64),
}

fn cr_branch(theta: f64) -> Cr {
    if (theta - 1.0).abs() < CR_LIMIT_BAND {
        Cr::Entropy
    } else if theta.abs() < CR_LIMIT_BAND {
        Cr::Burg
    } else {
        Cr::Generic(theta)
    }
}

impl DivergenceSpec {
    pub fn relative_entropy() -> Self {
        DivergenceSpec { name: "relative_entropy".into(), kind: DivergenceKind::RelativeEntropy }
    }
    pub fn burg() -> Self {
        DivergenceSpec { name: "burg".into(), kind: DivergenceKind::Burg }
    }
    pub fn chi2() -> Self {
        DivergenceSpec { name: "chi2".into(), kind: DivergenceKind::Chi2 }
    }
    pub fn hellinger() -> Self {
        DivergenceSpec { name: "hellinger".into(), kind: DivergenceKind::Hellinger }
    }
    pub fn cressie_read(theta: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::Domain(format!("Cressie–Read θ = {theta} must be finite")));
        }
        Ok(DivergenceSpec { name: "cressie_read".into(), kind: DivergenceKind::CressieRead { theta } })
    }
    pub fn custom(name: impl Into<String>, c: CustomDivergence) -> Self {
        DivergenceSpec { name: name.into(), kind: DivergenceKind::Custom(c) }
    }

    pub fn by_name(name: &str, theta: Option<f64>) -> Result<Self> {
        match name {
            "relative_entropy" => Ok(Self::relative_entropy()),
            "burg" => Ok(Self::burg()),
            "chi2" => Ok(Self::chi2()),
            "hellinger" => Ok(Self::hellinger()),
            "cressie_read" => Self::cressie_read(theta.ok_or_else(|| {
                Error::Parse("cressie_read needs a \"theta\" parameter".into())
            })?),
            other => Err(Error::Parse(format!("unknown divergence {other:?}"))),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self.kind {
            DivergenceKind::CressieRead { theta } => Some(theta),
            _ => None,
        }
    }

    /// `g*` is finite exactly on `s < gstar_sup()`.
    pub fn gstar_sup(&self) -> f64 {
        match &self.kind {
            DivergenceKind::RelativeEntropy => f64::INFINITY,
            DivergenceKind::Burg | DivergenceKind::Chi2 | DivergenceKind::Hellinger => 1.0,
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => f64::INFINITY,
                Cr::Burg => 1.0,
                Cr::Generic(t) if t < 1.0 => 1.0 / (1.0 - t),
                Cr::Generic(_) => f64::INFINITY,
            },
            DivergenceKind::Custom(c) => c.gstar_sup,
        }
    }

    /// The divergence generator `g` on `[0, ∞)`, `+∞` where undefined.
    pub fn g(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return f64::INFINITY;
        }
        match &self.kind {
            DivergenceKind::RelativeEntropy => {
                if x == 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            DivergenceKind::Burg => x - x.ln() - 1.0,
            DivergenceKind::Chi2 => (x - 1.0) * (x - 1.0) / x,
            DivergenceKind::Hellinger => (x.sqrt() - 1.0).powi(2),
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => {
                    if x == 0.0 {
                        1.0
                    } else {
                        x * x.ln() - x + 1.0
                    }
                }
                Cr::Burg => x - x.ln() - 1.0,
                Cr::Generic(t) => (1.0 - t + t * x - x.powf(t)) / (t * (1.0 - t)),
            },
            DivergenceKind::Custom(c) => (c.g)(x),
        }
    }

    /// The conjugate `g*(s) = sup_{x ≥ 0} (s x − g(x))`.
    pub fn gstar(&self, s: f64) -> f64 {
        if s >= self.gstar_sup() {
            return f64::INFINITY;
        }
        match &self.kind {
            DivergenceKind::RelativeEntropy => (s - 1.0).exp(),
            DivergenceKind::Burg => -(1.0 - s).ln(),
            DivergenceKind::Chi2 => 2.0 - 2.0 * (1.0 - s).sqrt(),
            DivergenceKind::Hellinger => s / (1.0 - s),
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => s.exp() - 1.0,
                Cr::Burg => -(1.0 - s).ln(),
                Cr::Generic(t) => {
                    let base = 1.0 - s * (1.0 - t);
                    if base <= 0.0 {
                        // t > 1 and s below −1/(t−1): x = 0 is optimal.
                        -1.0 / t
                    } else {
                        base.powf(t / (t - 1.0)) / t - 1.0 / t
                    }
                }
            },
            DivergenceKind::Custom(c) => (c.gstar)(s),
        }
    }

    /// Analytic `(g*)′`, or a finite difference for custom divergences without one.
    pub fn gstar_d1(&self, s: f64) -> f64 {
        if s >= self.gstar_sup() {
            return f64::INFINITY;
        }
        match &self.kind {
            DivergenceKind::RelativeEntropy => (s - 1.0).exp(),
            DivergenceKind::Burg => 1.0 / (1.0 - s),
            DivergenceKind::Chi2 => 1.0 / (1.0 - s).sqrt(),
            DivergenceKind::Hellinger => (1.0 - s).powi(-2),
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => s.exp(),
                Cr::Burg => 1.0 / (1.0 - s),
                Cr::Generic(t) => {
                    let base = 1.0 - s * (1.0 - t);
                    if base <= 0.0 {
                        0.0
                    } else {
                        base.powf(1.0 / (t - 1.0))
                    }
                }
            },
            DivergenceKind::Custom(c) => match &c.gstar_d1 {
                Some(d) => d(s),
                None => self.fd(s, 1),
            },
        }
    }

    pub fn gstar_d2(&self, s: f64) -> f64 {
        if s >= self.gstar_sup() {
            return f64::INFINITY;
        }
        match &self.kind {
            DivergenceKind::RelativeEntropy => (s - 1.0).exp(),
            DivergenceKind::Burg => (1.0 - s).powi(-2),
            DivergenceKind::Chi2 => 0.5 * (1.0 - s).powf(-1.5),
            DivergenceKind::Hellinger => 2.0 * (1.0 - s).powi(-3),
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => s.exp(),
                Cr::Burg => (1.0 - s).powi(-2),
                Cr::Generic(t) => {
                    let base = 1.0 - s * (1.0 - t);
                    if base <= 0.0 {
                        0.0
                    } else {
                        base.powf((2.0 - t) / (t - 1.0))
                    }
                }
            },
            DivergenceKind::Custom(_) => self.fd(s, 2),
        }
    }

    /// Analytic `(g*)‴` (the last column of the standard table of conjugates).
    pub fn gstar_d3(&self, s: f64) -> f64 {
        if s >= self.gstar_sup() {
            return f64::INFINITY;
        }
        match &self.kind {
            DivergenceKind::RelativeEntropy => (s - 1.0).exp(),
            DivergenceKind::Burg => 2.0 * (1.0 - s).powi(-3),
            DivergenceKind::Chi2 => 0.75 * (1.0 - s).powf(-2.5),
            DivergenceKind::Hellinger => 6.0 * (1.0 - s).powi(-4),
            DivergenceKind::CressieRead { theta } => match cr_branch(*theta) {
                Cr::Entropy => s.exp(),
                Cr::Burg => 2.0 * (1.0 - s).powi(-3),
                Cr::Generic(t) => {
                    let base = 1.0 - s * (1.0 - t);
                    if base <= 0.0 {
                        0.0
                    } else {
                        (2.0 - t) * base.powf((3.0 - 2.0 * t) / (t - 1.0))
                    }
                }
            },
            DivergenceKind::Custom(c) => match &c.gstar_d3 {
                Some(d) => d(s),
                None => self.fd(s, 3),
            },
        }
    }

    pub fn has_analytic_d3(&self) -> bool {
        match &self.kind {
            DivergenceKind::Custom(c) => c.gstar_d3.is_some(),
            _ => true,
        }
    }

    fn fd(&self, s: f64, order: u8) -> f64 {
        let h = 1e-4;
        crate::numerics::finite_diff(|x| self.gstar(x), s, order, h).unwrap_or(f64::NAN)
    }

    /// The two-period reading `f(z) = −g*(−z)`.
    pub fn oce_f(&self, z: f64) -> f64 {
        -self.gstar(-z)
    }

    /// Compares `g*` with a numerical conjugate of `g` on sample points and
    /// returns the largest gap.
    pub fn self_check(&self) -> Result<f64> {
        let hi = (self.gstar_sup() - 0.05).min(2.0);
        let mut worst = 0.0f64;
        for i in 0..=20 {
            let s = -3.0 + (hi + 3.0) * i as f64 / 20.0;
            let xs = self.gstar_d1(s).max(0.0);
            let upper = 2.0 * xs + 1.0;
            let (_, v) = maximize_concave_1d(|x| s * x - self.g(x), Interval { lo: 1e-12, hi: upper }, 1e-13)?;
            let v = v.max(-self.g(0.0));
            let gap = (v - self.gstar(s)).abs();
            worst = worst.max(gap);
            if gap > 1e-6 {
                return Err(Error::Inconsistency(format!(
                    "{}: conjugate mismatch at s = {s}: numeric {v}, closed form {}",
                    self.name,
                    self.gstar(s)
                )));
            }
        }
        Ok(worst)
    }
}

fn check_reference(p: &SimplexPoint, k: usize, who: &str) -> Result<()> {
    if p.k() != k {
        return Err(Error::component(who, format!("reference has {} states, act has {k}", p.k())));
    }
    if p.as_slice().iter().any(|&x| x <= 0.0) {
        return Err(Error::component(who, "reference probabilities must be strictly positive"));
    }
    Ok(())
}

/// Optimal `z` and value of `sup_z (z − Σ P_i g*(z − u_i))`.
pub fn oce_solve(spec: &DivergenceSpec, p: &SimplexPoint, utils: &[f64]) -> Result<(f64, f64)> {
    check_reference(p, utils.len(), &spec.name)?;
    let umin = utils.iter().copied().fold(f64::INFINITY, f64::min);
    let umax = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w = p.as_slice();
    let value = |z: f64| -> f64 {
        z - w.iter().zip(utils).map(|(pi, u)| pi * spec.gstar(z - u)).sum::<f64>()
    };
    let slope = |z: f64| -> f64 {
        1.0 - w.iter().zip(utils).map(|(pi, u)| pi * spec.gstar_d1(z - u)).sum::<f64>()
    };
    let (lo, hi) = oce_bracket(spec, umin, umax, &slope)?;
    let tol = 1e-11 * (1.0 + umax.abs().max(umin.abs()));
    let (z, v) = maximize_concave_1d(value, Interval { lo, hi }, tol).map_err(|e| {
        Error::component(&spec.name, format!("dual search failed: {e}"))
    })?;
    // Golden-section pins z only to about sqrt(eps); the slope root is sharper.
    let zr = bisect_decreasing(slope, Interval { lo, hi }, 1e-15 * (1.0 + z.abs()));
    let vr = value(zr);
    if vr.is_finite() && vr >= v - 1e-13 * (1.0 + v.abs()) {
        return Ok((zr, vr.max(v)));
    }
    Ok((z, v))
}

fn oce_bracket(
    spec: &DivergenceSpec,
    umin: f64,
    umax: f64,
    slope: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let cap = umin + spec.gstar_sup();
    let shrink = 1e-9 * (1.0 + cap.abs());
    let clip = |z: f64| if z >= cap - shrink { cap - shrink } else { z };
    let mut lo = clip(umin - 1.0);
    let mut hi = clip(umax + 1.0);
    let mut step = 1.0;
    let mut tries = 0;
    while !(slope(lo) > 0.0) {
        lo -= step;
        step *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::component(&spec.name, "lower end of the dual bracket not found"));
        }
    }
    step = 1.0;
    tries = 0;
    while slope(hi) > 0.0 && hi < cap - shrink {
        hi = clip(hi + step);
        step *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::component(&spec.name, "upper end of the dual bracket not found"));
        }
    }
    if !(lo < hi) {
        return Err(Error::component(&spec.name, "dual bracket escapes the conjugate's domain"));
    }
    Ok((lo, hi))
}

/// `U = sup_z (z − Σ P_i g*(z − u_i))`.
pub fn divergence_evaluate(spec: &DivergenceSpec, p: &SimplexPoint, utils: &[f64]) -> Result<f64> {
    oce_solve(spec, p, utils).map(|(_, v)| v)
}

/// Worst-case prior `q_i = P_i (g*)′(z* − u_i)`, renormalized.
pub fn divergence_argmin(spec: &DivergenceSpec, p: &SimplexPoint, utils: &[f64]) -> Result<SimplexPoint> {
    let (z, _) = oce_solve(spec, p, utils)?;
    let q = p
        .as_slice()
        .iter()
        .zip(utils)
        .map(|(pi, u)| pi * spec.gstar_d1(z - u))
        .collect();
    SimplexPoint::normalized(q)
}

/// Primal objective `Σ q_i u_i + Σ P_i g(q_i / P_i)`.
pub fn divergence_primal(spec: &DivergenceSpec, p: &SimplexPoint, utils: &[f64], q: &[f64]) -> f64 {
    q.iter()
        .zip(utils)
        .zip(p.as_slice())
        .map(|((qi, u), pi)| qi * u + pi * spec.g(qi / pi))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named() -> Vec<DivergenceSpec> {
        vec![
            DivergenceSpec::relative_entropy(),
            DivergenceSpec::burg(),
            DivergenceSpec::chi2(),
            DivergenceSpec::hellinger(),
        ]
    }

    #[test]
    fn conjugates_self_check() {
        for d in named() {
            d.self_check().unwrap();
        }
        for t in [-1.0, 0.5, 1.0, 1.5, 2.0, 3.0, 0.0, 1.0 + 1e-10] {
            DivergenceSpec::cressie_read(t).unwrap().self_check().unwrap();
        }
    }

    #[test]
    fn relative_entropy_table_value() {
        assert_eq!(DivergenceSpec::relative_entropy().gstar(1.0), 1.0);
        assert!((DivergenceSpec::relative_entropy().oce_f(-1.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cressie_read_special_cases() {
        let t2 = DivergenceSpec::cressie_read(2.0).unwrap();
        for s in [-0.5, 0.0, 1.3] {
            assert!((t2.gstar(s) - (s + s * s / 2.0)).abs() < 1e-12);
        }
        assert!((t2.gstar(-3.0) + 0.5).abs() < 1e-15);
        let th = DivergenceSpec::cressie_read(0.5).unwrap();
        assert!((th.gstar(0.7) - (2.0 / (1.0 - 0.35) - 2.0)).abs() < 1e-12);
        assert_eq!(th.gstar_sup(), 2.0);
        let tm = DivergenceSpec::cressie_read(-1.0).unwrap();
        assert!((tm.gstar(0.2) - (1.0 - (1.0f64 - 0.4).sqrt())).abs() < 1e-12);
        assert!((tm.gstar_d3(0.2) - 3.0 * (0.6f64).powf(-2.5)).abs() < 1e-9);
    }

    #[test]
    fn constant_act_is_certainty_equivalent() {
        let p = SimplexPoint::uniform(3);
        for d in named() {
            let v = divergence_evaluate(&d, &p, &[1.7; 3]).unwrap();
            assert!((v - 1.7).abs() < 1e-9, "{d:?}: {v}");
        }
    }

    #[test]
    fn entropic_two_state_closed_form() {
        let p = SimplexPoint::uniform(2);
        let v = divergence_evaluate(&DivergenceSpec::relative_entropy(), &p, &[0.0, 1.0]).unwrap();
        let closed = -((1.0 + (-1.0f64).exp()) / 2.0).ln();
        assert!((v - closed).abs() < 1e-10);
    }

    #[test]
    fn gibbs_argmin() {
        let y = [0.0, 1.0, 2.0];
        let q = divergence_argmin(&DivergenceSpec::relative_entropy(), &SimplexPoint::uniform(3), &y).unwrap();
        let z: f64 = y.iter().map(|v| (-v).exp()).sum();
        for i in 0..3 {
            assert!((q.as_slice()[i] - (-y[i]).exp() / z).abs() < 1e-8);
        }
    }

    #[test]
    fn nonpositive_reference_is_rejected() {
        let p = SimplexPoint::new(vec![0.0, 1.0]).unwrap();
        let e = divergence_evaluate(&DivergenceSpec::burg(), &p, &[0.0, 1.0]).unwrap_err();
        assert!(e.to_string().contains("burg"));
    }
}
