//! Optimal insurance against a loss with unknown probability, with and
//! without noise on the loss amount, and the ambiguous-insurance example.

use crate::error::{Error, Result};
use crate::models::{ceu_evaluate, oce_solve, DivergenceSpec, PhiSpec, RealFn};
use crate::numerics::{bisect_decreasing, maximize_concave_1d, Interval, SimplexPoint};
use crate::setfn::Capacity;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Distance from `0` or `ℓ` under which an optimum counts as a corner.
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Clone)]
pub enum Premium {
    /// `π(s) = αs + βs²`.
    Quadratic { alpha: f64, beta: f64 },
    Custom { pi: RealFn, d1: Option<RealFn> },
}

impl fmt::Debug for Premium {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Premium::Quadratic { alpha, beta } => write!(f, "Quadratic({alpha}, {beta})"),
            Premium::Custom { .. } => write!(f, "Custom"),
        }
    }
}

impl Premium {
    pub fn quadratic(alpha: f64, beta: f64) -> Self {
        Premium::Quadratic { alpha, beta }
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Premium::Quadratic { alpha, beta } => alpha * s + beta * s * s,
            Premium::Custom { pi, .. } => pi(s),
        }
    }

    /// `π′(s)`, central differences when no derivative was supplied.
    pub fn d1(&self, s: f64) -> f64 {
        match self {
            Premium::Quadratic { alpha, beta } => alpha + 2.0 * beta * s,
            Premium::Custom { d1: Some(d), .. } => d(s),
            Premium::Custom { pi, d1: None } => {
                let h = 1e-6 * (1.0 + s.abs());
                (pi(s + h) - pi(s - h)) / (2.0 * h)
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum InsuranceModel {
    /// Variational preferences with a g-divergence around the uniform prior.
    Divergence(DivergenceSpec),
    /// Second-order expected utility with transform φ.
    Soeu(PhiSpec),
}

#[derive(Clone, Debug)]
pub struct InsuranceProblem {
    /// Initial wealth.
    pub w: f64,
    /// Loss `ℓ`.
    pub loss: f64,
    /// Noise amplitude on the loss; used by the noisy solves.
    pub eps: f64,
    pub k: usize,
    pub premium: Premium,
    pub model: InsuranceModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsuranceSolution {
    pub s_star: f64,
    /// Optimal shift `z̃*` of the dual problem (divergence model only).
    pub z_star: Option<f64>,
    /// Attained objective, including `w` for the divergence model.
    pub value: f64,
    /// Absolute residuals of the first-order conditions at the optimum.
    pub foc_residuals: Vec<f64>,
    pub boundary: bool,
}

impl InsuranceSolution {
    pub fn max_residual(&self) -> f64 {
        self.foc_residuals.iter().copied().fold(0.0, f64::max)
    }
}

impl InsuranceProblem {
    pub fn with_eps(&self, eps: f64) -> Self {
        InsuranceProblem { eps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::component("insurance", m));
        if !(self.loss > 0.0) || !self.loss.is_finite() {
            return bad(format!("loss {} must be positive", self.loss));
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad(format!("noise {} must be nonnegative", self.eps));
        }
        if self.k < 2 {
            return bad(format!("need k ≥ 2 states, got {}", self.k));
        }
        if !self.w.is_finite() {
            return bad("wealth must be finite".into());
        }
        if self.premium.value(0.0) < 0.0 {
            return bad("premium at zero indemnity is negative".into());
        }
        let grid = Interval { lo: 0.0, hi: self.loss }.grid(50);
        let d: Vec<f64> = grid.iter().map(|&s| self.premium.d1(s)).collect();
        if d.iter().any(|&x| !(x >= 0.0)) {
            return bad("premium must be nondecreasing".into());
        }
        if d.windows(2).any(|p| p[1] < p[0] - 1e-9 * (1.0 + p[0].abs())) {
            return bad("premium must be convex (π′ nondecreasing)".into());
        }
        if let InsuranceModel::Soeu(phi) = &self.model {
            if d.iter().any(|&x| x >= 1.0) {
                return bad("SOEU needs π′ < 1 so that s − π(s) increases".into());
            }
            phi.check_increasing()?;
        }
        Ok(())
    }

    /// Loss-state offsets `a_j` and weights: `ℓ` with `1/k`, or `ℓ ± ε` with `1/(2k)` each.
    fn loss_states(&self, with_noise: bool) -> Vec<(f64, f64)> {
        let k = self.k as f64;
        if with_noise {
            vec![(self.loss + self.eps, 0.5 / k), (self.loss - self.eps, 0.5 / k)]
        } else {
            vec![(self.loss, 1.0 / k)]
        }
    }

    fn rest_weight(&self) -> f64 {
        (self.k as f64 - 1.0) / self.k as f64
    }
}

fn divergence_of(problem: &InsuranceProblem) -> Result<&DivergenceSpec> {
    match &problem.model {
        InsuranceModel::Divergence(d) => Ok(d),
        InsuranceModel::Soeu(_) => Err(Error::Precondition("problem uses the SOEU model".into())),
    }
}

/// Inner maximization over `z̃` for a fixed indemnity: `(z̃*, J(s))` with
/// `J(s) = max_z̃ {z̃ − π(s) − Σ_j w_j g*(z̃ + a_j − s) − ((k−1)/k) g*(z̃)}`.
fn inner(spec: &DivergenceSpec, problem: &InsuranceProblem, with_noise: bool, s: f64) -> Result<(f64, f64)> {
    let states = problem.loss_states(with_noise);
    let mut utils: Vec<f64> = states.iter().map(|(a, _)| s - a).collect();
    utils.push(0.0);
    let mut weights: Vec<f64> = states.iter().map(|(_, w)| *w).collect();
    weights.push(problem.rest_weight());
    let p = SimplexPoint::new(weights)?;
    let (z, v) = oce_solve(spec, &p, &utils)?;
    Ok((z, v - problem.premium.value(s)))
}

fn envelope_slope(spec: &DivergenceSpec, problem: &InsuranceProblem, with_noise: bool, s: f64, z: f64) -> f64 {
    -problem.premium.d1(s)
        + problem
            .loss_states(with_noise)
            .iter()
            .map(|(a, w)| w * spec.gstar_d1(z + a - s))
            .sum::<f64>()
}

fn check_concave_path(j: &dyn Fn(f64) -> Result<f64>, loss: f64, what: &str) -> Result<()> {
    let xs = Interval { lo: 0.0, hi: loss }.grid(21);
    let v: Vec<f64> = xs.iter().map(|&s| j(s)).collect::<Result<_>>()?;
    for (i, w) in v.windows(3).enumerate() {
        let d2 = w[0] - 2.0 * w[1] + w[2];
        if d2 > 1e-9 * (1.0 + w[1].abs()) {
            return Err(Error::component(
                what,
                format!("objective is not concave in s near s = {} (second difference {d2})", xs[i + 1]),
            ));
        }
    }
    Ok(())
}

/// Maximizes `J` over `[0, ℓ]` by golden-section and refines with the
/// root of the slope `dj`, which is decreasing for concave `J`.
fn maximize_on_loss(
    j: &dyn Fn(f64) -> Result<f64>,
    dj: &dyn Fn(f64) -> Result<f64>,
    loss: f64,
) -> Result<(f64, f64)> {
    let err = std::cell::RefCell::new(None);
    let jf = |s: f64| match j(s) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let golden = maximize_concave_1d(jf, Interval { lo: 0.0, hi: loss }, 1e-12 * (1.0 + loss));
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    let (sg, vg) = golden?;
    let slope = |s: f64| dj(s).unwrap_or(f64::NAN);
    let sb = bisect_decreasing(slope, Interval { lo: 0.0, hi: loss }, 1e-15 * (1.0 + loss));
    let vb = j(sb)?;
    Ok(if vb >= vg - 1e-13 * (1.0 + vg.abs()) { (sb, vb.max(vg)) } else { (sg, vg) })
}

/// Optimal indemnity for a divergence-preference DM.
pub fn solve_divergence(problem: &InsuranceProblem, with_noise: bool) -> Result<InsuranceSolution> {
    problem.validate()?;
    let spec = divergence_of(problem)?;
    let j = |s: f64| inner(spec, problem, with_noise, s).map(|(_, v)| v);
    let dj = |s: f64| inner(spec, problem, with_noise, s).map(|(z, _)| envelope_slope(spec, problem, with_noise, s, z));
    check_concave_path(&j, problem.loss, &spec.name)?;
    let (s, _) = maximize_on_loss(&j, &dj, problem.loss)?;
    let (z, v) = inner(spec, problem, with_noise, s)?;
    let states = problem.loss_states(with_noise);
    let rest = problem.rest_weight();
    let loss_part: f64 = states.iter().map(|(a, w)| w * spec.gstar_d1(z + a - s)).sum();
    let pd = problem.premium.d1(s);
    let foc_residuals = vec![
        (1.0 - loss_part - rest * spec.gstar_d1(z)).abs(),
        (pd - loss_part).abs(),
        (pd - (1.0 - rest * spec.gstar_d1(z))).abs(),
    ];
    Ok(InsuranceSolution {
        s_star: s,
        z_star: Some(z),
        value: problem.w + v,
        foc_residuals,
        boundary: s < BOUNDARY_TOL || s > problem.loss - BOUNDARY_TOL,
    })
}

/// Optimal indemnity for an SOEU DM with transform φ of final wealth.
pub fn solve_soeu(problem: &InsuranceProblem, with_noise: bool) -> Result<InsuranceSolution> {
    problem.validate()?;
    let phi = match &problem.model {
        InsuranceModel::Soeu(phi) => phi,
        InsuranceModel::Divergence(_) => return Err(Error::Precondition("problem uses a divergence model".into())),
    };
    let states = problem.loss_states(with_noise);
    let rest = problem.rest_weight();
    let (w, pr) = (problem.w, &problem.premium);
    let j = |s: f64| -> Result<f64> {
        let high = w - pr.value(s);
        let mut acc = rest * phi.value(high)?;
        for (a, wt) in &states {
            acc += wt * phi.value(high - a + s)?;
        }
        Ok(acc)
    };
    let dj = |s: f64| -> Result<f64> {
        let high = w - pr.value(s);
        let pd = pr.d1(s);
        let low: f64 = states.iter().map(|(a, wt)| wt * phi.derivative(1, high - a + s)).sum();
        Ok((1.0 - pd) * low - rest * pd * phi.derivative(1, high))
    };
    check_concave_path(&j, problem.loss, &format!("soeu {}", phi.name()))?;
    let (s, v) = maximize_on_loss(&j, &dj, problem.loss)?;
    let residual = problem.k as f64 * dj(s)?.abs();
    Ok(InsuranceSolution {
        s_star: s,
        z_star: None,
        value: v,
        foc_residuals: vec![residual],
        boundary: s < BOUNDARY_TOL || s > problem.loss - BOUNDARY_TOL,
    })
}

pub fn solve(problem: &InsuranceProblem, with_noise: bool) -> Result<InsuranceSolution> {
    match problem.model {
        InsuranceModel::Divergence(_) => solve_divergence(problem, with_noise),
        InsuranceModel::Soeu(_) => solve_soeu(problem, with_noise),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub eps: f64,
    pub solution: InsuranceSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    /// The noise-free solve.
    pub baseline: InsuranceSolution,
    pub rows: Vec<NoiseRow>,
    /// Whether the model satisfies the prudence hypothesis, so that
    /// `s*_ε ≥ s*_0` is predicted.
    pub prudent: bool,
    /// `min_ε (s*_ε − s*_0)`.
    pub min_gain: f64,
}

impl NoiseTable {
    pub fn monotone(&self) -> bool {
        self.min_gain >= -1e-6
    }

    /// True unless the prediction applies and fails.
    pub fn assertion_holds(&self) -> bool {
        !self.prudent || self.monotone()
    }
}

/// Whether `(g*)‴ ≥ 0`, or `φ‴ ≥ 0` for SOEU, on the range the problem visits.
pub fn problem_is_prudent(problem: &InsuranceProblem, max_eps: f64) -> Result<bool> {
    match &problem.model {
        InsuranceModel::Divergence(spec) => {
            let reach = problem.loss + max_eps;
            let sup = spec.gstar_sup();
            let hi = if sup.is_finite() { (sup - 1e-3).min(reach) } else { reach };
            crate::attitudes::divergence_prudence_check(spec, Interval { lo: -reach, hi })
        }
        InsuranceModel::Soeu(phi) => {
            let hi = problem.w;
            let lo = problem.w - problem.premium.value(problem.loss) - problem.loss - max_eps;
            let dom = Interval { lo: lo.max(phi.domain.lo), hi: hi.min(phi.domain.hi) };
            Ok(crate::attitudes::phi_attitude_check(phi, dom)?.third_nonneg)
        }
    }
}

/// `s*_ε` for each noise level, solved in parallel; rows keep input order.
pub fn comparative_static_noise(problem: &InsuranceProblem, eps_list: &[f64]) -> Result<NoiseTable> {
    let baseline = solve(problem, false)?;
    let rows: Vec<NoiseRow> = eps_list
        .par_iter()
        .map(|&eps| Ok(NoiseRow { eps, solution: solve(&problem.with_eps(eps), true)? }))
        .collect::<Result<_>>()?;
    let max_eps = eps_list.iter().copied().fold(0.0, f64::max);
    let prudent = problem_is_prudent(problem, max_eps)?;
    let min_gain = rows.iter().map(|r| r.solution.s_star - baseline.s_star).fold(f64::INFINITY, f64::min);
    Ok(NoiseTable { baseline, rows, prudent, min_gain })
}

/// Brute-force maximizer of the reduced two-variable objective on an
/// `n × n` grid in `(s, z̃)`, followed by a finer grid around the best cell.
pub fn grid_oracle(problem: &InsuranceProblem, with_noise: bool, n: usize) -> Result<(f64, f64, f64)> {
    problem.validate()?;
    let spec = divergence_of(problem)?;
    let states = problem.loss_states(with_noise);
    let rest = problem.rest_weight();
    let f = |s: f64, z: f64| -> f64 {
        let v = z - problem.premium.value(s) - rest * spec.gstar(z)
            - states.iter().map(|(a, w)| w * spec.gstar(z + a - s)).sum::<f64>();
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    // A weighted mean of the increasing (g*)′ equals 1, so the arguments
    // straddle x1 = g′(1), where (g*)′(x1) = 1.
    let x1 = (spec.g(1.0 + 1e-6) - spec.g(1.0 - 1e-6)) / 2e-6;
    let reach = problem.loss + problem.eps;
    let mut zlo = x1 - reach - 0.1;
    let mut zhi = x1 + problem.eps + 0.1;
    let sup = spec.gstar_sup();
    if sup.is_finite() {
        zhi = zhi.min(sup - reach - 1e-9);
        zlo = zlo.min(zhi - 1.0);
    }
    let scan = |s0: f64, s1: f64, z0: f64, z1: f64, n: usize| -> (f64, f64, f64) {
        let mut best = (s0, z0, f64::NEG_INFINITY);
        for i in 0..=n {
            let s = s0 + (s1 - s0) * i as f64 / n as f64;
            for jz in 0..=n {
                let z = z0 + (z1 - z0) * jz as f64 / n as f64;
                let v = f(s, z);
                if v > best.2 {
                    best = (s, z, v);
                }
            }
        }
        best
    };
    let (s, z, _) = scan(0.0, problem.loss, zlo, zhi, n);
    let (ds, dz) = (2.0 * problem.loss / n as f64, 2.0 * (zhi - zlo) / n as f64);
    let (s, z, v) = scan((s - ds).max(0.0), (s + ds).min(problem.loss), z - dz, z + dz, 200);
    Ok((s, z, problem.w + v))
}

/// Monetary noise `(ε1, ε2)` reproducing a util noise `ε̄` at wealth level
/// `x = w − ℓ + s − π(s)`: `u(x + ε1) = u(x) + ε̄` and `u(x − ε2) = u(x) − ε̄`.
pub fn util_noise_to_money(u: &PhiSpec, x: f64, eps_bar: f64) -> Result<(f64, f64)> {
    let ux = u.value(x)?;
    let eval = |t: f64| u.value(t).unwrap_or(f64::NAN);
    let dom = u.domain;
    let mut hi = 1.0;
    while !(eval(x + hi) >= ux + eps_bar) {
        hi *= 2.0;
        if hi > 1e12 || x + hi > dom.hi {
            return Err(Error::component(format!("u = {}", u.name()), format!("cannot raise utility by {eps_bar} above {x}")));
        }
    }
    let e1 = bisect_decreasing(|t| ux + eps_bar - eval(x + t), Interval { lo: 0.0, hi }, 1e-10);
    let floor = if u.value(dom.lo).is_ok() { dom.lo } else { dom.lo + 1e-300 };
    let mut lo = 1.0f64.min(x - floor);
    while !(eval(x - lo) <= ux - eps_bar) {
        if x - 2.0 * lo < floor || lo > 1e12 {
            return Err(Error::component(format!("u = {}", u.name()), format!("cannot lower utility by {eps_bar} below {x}")));
        }
        lo *= 2.0;
    }
    let e2 = bisect_decreasing(|t| eval(x - t) - (ux - eps_bar), Interval { lo: 0.0, hi: lo }, 1e-10);
    Ok((e1, e2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonAffineSolution {
    pub s_star: f64,
    pub value: f64,
    /// Monetary noise at the optimum.
    pub eps1: f64,
    pub eps2: f64,
}

/// Divergence DM with a non-affine utility `u` of money: the util act is
/// `[u(x) − ε̄, u(x) + ε̄, u(w − π(s)), …]` with `x = w − ℓ + s − π(s)`.
pub fn solve_nonaffine(problem: &InsuranceProblem, u: &PhiSpec, eps_bar: f64) -> Result<NonAffineSolution> {
    problem.validate()?;
    let spec = divergence_of(problem)?;
    let k = problem.k as f64;
    let p = SimplexPoint::new(vec![0.5 / k, 0.5 / k, problem.rest_weight()])?;
    let low = |s: f64| problem.w - problem.loss + s - problem.premium.value(s);
    let j = |s: f64| -> Result<f64> {
        let ul = u.value(low(s))?;
        let uh = u.value(problem.w - problem.premium.value(s))?;
        oce_solve(spec, &p, &[ul - eps_bar, ul + eps_bar, uh]).map(|(_, v)| v)
    };
    let err = std::cell::RefCell::new(None);
    let jf = |s: f64| match j(s) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let found = maximize_concave_1d(jf, Interval { lo: 0.0, hi: problem.loss }, 1e-10);
    if let Some(e) = err.borrow_mut().take() {
        return Err(e);
    }
    let (s, value) = found?;
    let (eps1, eps2) = util_noise_to_money(u, low(s), eps_bar)?;
    Ok(NonAffineSolution { s_star: s, value, eps1, eps2 })
}

/// Where the losses fall in the ambiguous-insurance example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemoLayout {
    /// Number of highly unfavorable states carrying the large loss.
    pub w0: usize,
    /// Large loss `K`.
    pub big_loss: f64,
}

impl Default for DemoLayout {
    fn default() -> Self {
        DemoLayout { w0: 0, big_loss: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoResult {
    /// `U` of full insurance, which equals `U` of no insurance by construction of `c`.
    pub u_full: f64,
    pub u_none: f64,
    pub u_ambiguous: f64,
    /// Certainty equivalent of no insurance on the ordinary states.
    pub c: f64,
    /// Compensation making `c − m` indifferent to ambiguous insurance.
    pub m: f64,
    pub supermodular: bool,
}

/// Utilities are money (`u(x) = x`); states 0 and 1 carry the loss `ℓ`,
/// states `2..2+w0` carry `−K`.
pub fn ambiguous_insurance_demo(nu: &Capacity, loss: f64, layout: DemoLayout) -> Result<DemoResult> {
    let k = nu.k();
    let w0 = layout.w0;
    if k < 3 + w0 {
        return Err(Error::Precondition(format!("need k ≥ {} states for w0 = {w0}, got {k}", 3 + w0)));
    }
    if !(loss > 0.0) || (w0 > 0 && !(layout.big_loss > loss)) {
        return Err(Error::Precondition("need ℓ > 0 and K > ℓ".into()));
    }
    let act = |f: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..k).map(|i| if (2..2 + w0).contains(&i) { -layout.big_loss } else { f(i) }).collect()
    };
    let x = act(&|i| if i < 2 { -loss } else { 0.0 });
    let u_none = ceu_evaluate(nu, &x)?;
    let sure = |c: f64| ceu_evaluate(nu, &act(&|_| c));
    let solve_sure = |target: f64| -> Result<f64> {
        let (lo, hi) = (-4.0 * loss, 4.0 * loss);
        let root = bisect_decreasing(|c| target - sure(c).unwrap_or(f64::NAN), Interval { lo, hi }, 1e-12 * loss);
        if (sure(root)? - target).abs() > 1e-9 * loss {
            return Err(Error::component("ambiguous insurance", "certainty equivalent outside the search range"));
        }
        Ok(root)
    };
    let c = solve_sure(u_none)?;
    let y = act(&|i| if i == 0 { c / 2.0 - loss } else { c / 2.0 });
    let u_ambiguous = ceu_evaluate(nu, &y)?;
    let m = c - solve_sure(u_ambiguous)?;
    Ok(DemoResult {
        u_full: sure(c)?,
        u_none,
        u_ambiguous,
        c,
        m,
        supermodular: nu.classify_monotonicity(2)?.holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoProfile {
    pub rows: Vec<(usize, DemoResult)>,
    /// Whether ν has nonnegative third derivatives, so `m` should not increase in `w0`.
    pub third_nonneg: bool,
    pub nonincreasing: bool,
}

/// `m` as a function of the number `w0` of large-loss states.
pub fn ambiguous_insurance_profile(nu: &Capacity, loss: f64, big_loss: f64, w0s: &[usize]) -> Result<DemoProfile> {
    let rows: Vec<(usize, DemoResult)> = w0s
        .iter()
        .map(|&w0| Ok((w0, ambiguous_insurance_demo(nu, loss, DemoLayout { w0, big_loss })?)))
        .collect::<Result<_>>()?;
    let nonincreasing = rows.windows(2).all(|r| r[1].1.m <= r[0].1.m + 1e-9 * loss);
    let (min3, _) = nu.derivative_range(3)?;
    Ok(DemoProfile { rows, third_nonneg: min3 >= -crate::setfn::SIGN_TOL, nonincreasing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::{neo_additive, NeoAdditiveParams};

    fn base(model: InsuranceModel, alpha: f64, beta: f64) -> InsuranceProblem {
        InsuranceProblem { w: 2.0, loss: 1.0, eps: 0.0, k: 2, premium: Premium::quadratic(alpha, beta), model }
    }

    #[test]
    fn relative_entropy_closed_form() {
        // (g*)′ = e^s: the FOCs give π′(s) = e^{ℓ−s}/(e^{ℓ−s} + 1).
        let p = base(InsuranceModel::Divergence(DivergenceSpec::relative_entropy()), 0.3, 0.3);
        let sol = solve_divergence(&p, false).unwrap();
        let want = bisect_decreasing(
            |s| (1.0f64 - s).exp() / ((1.0f64 - s).exp() + 1.0) - 0.3 - 0.6 * s,
            Interval { lo: 0.0, hi: 1.0 },
            1e-15,
        );
        assert!((sol.s_star - want).abs() < 1e-9, "{} vs {want}", sol.s_star);
        assert!(sol.max_residual() < 1e-9 && !sol.boundary);
        let noisy = solve_divergence(&p, true).unwrap();
        assert!((noisy.s_star - sol.s_star).abs() < 1e-8);
    }

    #[test]
    fn expensive_premium_is_a_corner() {
        let p = base(InsuranceModel::Divergence(DivergenceSpec::relative_entropy()), 1.0, 0.2);
        let sol = solve_divergence(&p, false).unwrap();
        assert!(sol.boundary && sol.s_star < 1e-6);
    }

    #[test]
    fn soeu_log_first_order_condition() {
        let p = base(InsuranceModel::Soeu(PhiSpec::parse("log").unwrap()), 0.3, 0.2);
        let s = solve_soeu(&p, false).unwrap();
        assert!(!s.boundary && s.max_residual() < 1e-9);
        let x = s.s_star;
        let pd = 0.3 + 0.4 * x;
        let lhs = 1.0 / (1.0 + x - 0.3 * x - 0.2 * x * x);
        let rhs = pd / (1.0 - pd) / (2.0 - 0.3 * x - 0.2 * x * x);
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn neo_additive_demo() {
        let nu = neo_additive(&NeoAdditiveParams::uniform(0.2, 0.2, 10)).unwrap();
        let r = ambiguous_insurance_demo(&nu, 2000.0, DemoLayout::default()).unwrap();
        assert!((r.c + 720.0).abs() < 1e-6);
        assert!((r.u_ambiguous + 920.0).abs() < 1e-9);
        assert!((r.m - 200.0).abs() < 1e-6);
        let add = Capacity::additive(&[0.1; 10]).unwrap();
        let r = ambiguous_insurance_demo(&add, 2000.0, DemoLayout::default()).unwrap();
        assert!(r.m.abs() < 1e-6);
    }

    #[test]
    fn util_noise_round_trip() {
        let u = PhiSpec::parse("log").unwrap();
        let (e1, e2) = util_noise_to_money(&u, 1.5, 0.1).unwrap();
        assert!(((1.5 + e1).ln() - 1.5f64.ln() - 0.1).abs() < 1e-9);
        assert!((1.5f64.ln() - (1.5 - e2).ln() - 0.1).abs() < 1e-9);
        assert!(e1 > e2);
    }
}
