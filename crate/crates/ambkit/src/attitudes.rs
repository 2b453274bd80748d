//! Behavioral tests of ambiguity aversion and prudence, and the analytic
//! conditions they are compared against.

use crate::acts::{check_symmetry, second_order_pair, third_order_pair, third_order_pair_unequal, Order, TestTriple};
use crate::error::{Error, Result};
use crate::models::{argmin_probabilities, DivergenceSpec, PhiSpec, Preference, PreferenceModel};
use crate::numerics::{check_third_derivative_sign, Interval, SimplexPoint};
use crate::setfn::{Capacity, StateSpace, SIGN_TOL};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackgroundPolicy {
    /// Every split of the other states into a block below and a block above.
    AllSplits,
    /// Only all-below, all-above and one mixed split.
    Representative,
    /// Other states may also sit between the designated levels.
    Unconstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatePolicy {
    /// All ordered tuples for `k ≤ 5`, otherwise 200 random ones.
    Auto,
    All,
    Random { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Values of the lowest designated level `u1`.
    pub levels: Vec<f64>,
    /// Values of the spacing `Δu`.
    pub spacings: Vec<f64>,
    /// `ū` as fractions of its ranking bound.
    pub ubar_fractions: Vec<f64>,
    pub backgrounds: BackgroundPolicy,
    pub states: StatePolicy,
    pub tol: f64,
    /// When set, every act of the sweep is mapped affinely into this interval.
    pub domain: Option<Interval>,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            levels: vec![0.0, 0.5, 1.0],
            spacings: vec![0.5, 1.0, 2.0],
            ubar_fractions: vec![0.1, 0.5, 0.9],
            backgrounds: BackgroundPolicy::AllSplits,
            states: StatePolicy::Auto,
            tol: 1e-8,
            domain: None,
            jobs: 1,
        }
    }
}

impl SweepConfig {
    pub fn within(mut self, domain: Interval) -> Self {
        self.domain = Some(domain);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.spacings.is_empty() || self.ubar_fractions.is_empty() {
            return Err(Error::Precondition("sweep grids must be nonempty".into()));
        }
        if self.spacings.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Precondition("spacings must be positive".into()));
        }
        if self.ubar_fractions.iter().any(|&f| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Precondition("ubar fractions must lie in (0, 1)".into()));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Precondition("tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Whether the sufficiency direction of the characterization theorems applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// The model passed the permutation-symmetry check.
    Symmetric,
    /// Symmetry failed; only the necessity direction is meaningful.
    NecessityOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub triple: TestTriple,
    pub act_a: Vec<f64>,
    pub act_b: Vec<f64>,
    pub u_a: f64,
    pub u_b: f64,
}

impl SweepRow {
    /// `U(X_B) − U(X_A)`.
    pub fn margin(&self) -> f64 {
        self.u_b - self.u_a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttitudeVerdict {
    pub holds: bool,
    pub counterexample: Option<SweepRow>,
    pub evaluated: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    pub verdict: AttitudeVerdict,
}

fn state_tuples(k: usize, arity: usize, policy: StatePolicy) -> Vec<Vec<usize>> {
    let mut all = Vec::new();
    let mut cur = Vec::with_capacity(arity);
    fn rec(k: usize, arity: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == arity {
            out.push(cur.clone());
            return;
        }
        for s in 0..k {
            if !cur.contains(&s) {
                cur.push(s);
                rec(k, arity, cur, out);
                cur.pop();
            }
        }
    }
    let random = |count: usize, seed: u64, all: Vec<Vec<usize>>| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked: Vec<Vec<usize>> = all.choose_multiple(&mut rng, count.min(all.len())).cloned().collect();
        picked.sort();
        picked
    };
    match policy {
        StatePolicy::All => {
            rec(k, arity, &mut cur, &mut all);
            all
        }
        StatePolicy::Auto if k <= 5 => {
            rec(k, arity, &mut cur, &mut all);
            all
        }
        StatePolicy::Auto => random(200, 0, sample_tuples(k, arity, 4000, 0)),
        StatePolicy::Random { count, seed } => random(count, seed, sample_tuples(k, arity, count.max(1) * 20, seed)),
    }
}

fn sample_tuples(k: usize, arity: usize, n: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7475_706c);
    let idx: Vec<usize> = (0..k).collect();
    let mut out: Vec<Vec<usize>> = (0..n).map(|_| idx.choose_multiple(&mut rng, arity).copied().collect()).collect();
    out.sort();
    out.dedup();
    out
}

/// Placement of each non-designated state: 0 = below, `arity` = above,
/// anything between = strictly between the neighbouring designated levels.
fn placements(n_other: usize, arity: usize, policy: BackgroundPolicy) -> Vec<Vec<usize>> {
    let slots: Vec<usize> = match policy {
        BackgroundPolicy::Unconstrained => (0..=arity).collect(),
        _ => vec![0, arity],
    };
    let total = slots.len().pow(n_other as u32);
    let mut all: Vec<Vec<usize>> = (0..total)
        .map(|mut code| {
            (0..n_other)
                .map(|_| {
                    let s = slots[code % slots.len()];
                    code /= slots.len();
                    s
                })
                .collect()
        })
        .collect();
    if policy == BackgroundPolicy::Representative || (policy == BackgroundPolicy::AllSplits && n_other > 8) {
        let low = vec![0; n_other];
        let high = vec![arity; n_other];
        let mixed: Vec<usize> = (0..n_other).map(|i| if i < n_other / 2 { 0 } else { arity }).collect();
        all = vec![low, high, mixed];
        all.dedup();
    }
    all
}

/// Enumerates the sweep's test triples for `order` on `k` states.
pub fn enumerate_triples(k: usize, order: Order, cfg: &SweepConfig, equal_spacing: bool) -> Result<Vec<TestTriple>> {
    cfg.validate()?;
    let arity = order.arity();
    if k < arity {
        return Err(Error::Precondition(format!("{arity} designated states need k ≥ {arity}, got {k}")));
    }
    let spacing_sets: Vec<Vec<f64>> = match (order, equal_spacing) {
        (Order::Second, _) => cfg.spacings.iter().map(|&d| vec![d]).collect(),
        (Order::Third, true) => cfg.spacings.iter().map(|&d| vec![d, d]).collect(),
        (Order::Third, false) => {
            let mut v = Vec::new();
            for &a in &cfg.spacings {
                for &b in &cfg.spacings {
                    if a != b {
                        v.push(vec![a, b]);
                    }
                }
            }
            v
        }
    };
    let mut out = Vec::new();
    for states in state_tuples(k, arity, cfg.states) {
        let others: Vec<usize> = (0..k).filter(|s| !states.contains(s)).collect();
        for place in placements(others.len(), arity, cfg.backgrounds) {
            for &u1 in &cfg.levels {
                for gaps in &spacing_sets {
                    let mut levels = vec![u1];
                    for g in gaps {
                        levels.push(levels.last().unwrap() + g);
                    }
                    let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
                    let bound = match order {
                        Order::Second => min_gap / 2.0,
                        Order::Third => min_gap / 3.0,
                    };
                    let reach = gaps.iter().copied().fold(1.0f64, f64::max);
                    let mut background = vec![0.0; k];
                    let (mut nlow, mut nhigh) = (0usize, 0usize);
                    for (&s, &slot) in others.iter().zip(&place) {
                        background[s] = if slot == 0 {
                            nlow += 1;
                            u1 - reach - 0.5 * (nlow - 1) as f64
                        } else if slot == arity {
                            nhigh += 1;
                            levels[arity - 1] + reach + 0.5 * (nhigh - 1) as f64
                        } else {
                            0.5 * (levels[slot - 1] + levels[slot])
                        };
                    }
                    for &frac in &cfg.ubar_fractions {
                        out.push(TestTriple {
                            states: states.clone(),
                            levels: levels.clone(),
                            ubar: frac * bound,
                            background: background.clone(),
                        });
                    }
                }
            }
        }
    }
    if let Some(dom) = cfg.domain {
        fit_to_domain(&mut out, dom)?;
    }
    Ok(out)
}

fn fit_to_domain(triples: &mut [TestTriple], dom: Interval) -> Result<()> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in triples.iter() {
        for (i, &v) in t.background.iter().enumerate() {
            if !t.states.contains(&i) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        lo = lo.min(t.levels[0] - t.ubar);
        hi = hi.max(t.levels[t.levels.len() - 1] + t.ubar);
    }
    if dom.lo <= lo && hi <= dom.hi && dom.lo < lo {
        return Ok(());
    }
    let (a, b) = match (dom.lo.is_finite(), dom.hi.is_finite()) {
        (true, true) => {
            let pad = 0.02 * dom.width();
            (dom.lo + pad, dom.hi - pad)
        }
        (true, false) => (dom.lo + 0.5, dom.lo + 0.5 + (hi - lo)),
        (false, true) => (dom.hi - 0.5 - (hi - lo), dom.hi - 0.5),
        (false, false) => return Ok(()),
    };
    let scale = (b - a) / (hi - lo);
    let map = |x: f64| a + (x - lo) * scale;
    for t in triples.iter_mut() {
        t.levels.iter_mut().for_each(|x| *x = map(*x));
        t.background.iter_mut().for_each(|x| *x = map(*x));
        t.ubar *= scale;
    }
    Ok(())
}

fn pair_for(t: &TestTriple, equal_spacing: bool) -> Result<(crate::acts::Act, crate::acts::Act)> {
    match (t.order(), equal_spacing) {
        (Some(Order::Second), _) => second_order_pair(t),
        (Some(Order::Third), true) => third_order_pair(t),
        (Some(Order::Third), false) => third_order_pair_unequal(t),
        _ => Err(Error::Precondition("malformed test triple".into())),
    }
}

fn min_key(r: &SweepRow) -> (f64, f64, Vec<usize>) {
    (r.triple.du(), r.triple.ubar, r.triple.states.clone())
}

fn smaller(a: &SweepRow, b: &SweepRow) -> bool {
    let (ka, kb) = (min_key(a), min_key(b));
    ka.0.total_cmp(&kb.0)
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.cmp(&kb.2))
        .then_with(|| {
            a.triple
                .background
                .iter()
                .zip(&b.triple.background)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .then(a.triple.levels[0].total_cmp(&b.triple.levels[0]))
        .is_lt()
}

fn run(model: &PreferenceModel, order: Order, cfg: &SweepConfig, equal_spacing: bool) -> Result<Sweep> {
    let k = model.k();
    let triples = enumerate_triples(k, order, cfg, equal_spacing)?;
    let eval = |t: &TestTriple| -> Result<SweepRow> {
        let (a, b) = pair_for(t, equal_spacing)?;
        let wrap = |e: Error| Error::component("sweep", format!("{e} (states {:?}, levels {:?}, ubar {})", t.states, t.levels, t.ubar));
        let u_a = model.evaluate(a.utils()).map_err(wrap)?;
        let u_b = model.evaluate(b.utils()).map_err(wrap)?;
        Ok(SweepRow { triple: t.clone(), act_a: a.into_utils(), act_b: b.into_utils(), u_a, u_b })
    };
    let rows: Vec<SweepRow> = if cfg.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
        pool.install(|| triples.par_iter().map(eval).collect::<Result<Vec<_>>>())?
    } else {
        triples.iter().map(eval).collect::<Result<Vec<_>>>()?
    };
    let mut counterexample: Option<&SweepRow> = None;
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    for r in &rows {
        let m = r.margin();
        min_margin = min_margin.min(m);
        if m < -cfg.tol {
            failures += 1;
            if counterexample.map_or(true, |c| smaller(r, c)) {
                counterexample = Some(r);
            }
        }
    }
    let regime = if check_symmetry(model, StateSpace::new(k)?, 64, 0)?.holds {
        Regime::Symmetric
    } else {
        Regime::NecessityOnly
    };
    let verdict = AttitudeVerdict {
        holds: failures == 0,
        counterexample: counterexample.cloned(),
        evaluated: rows.len(),
        failures,
        min_margin,
        regime,
    };
    Ok(Sweep { rows, verdict })
}

/// Full sweep with per-triple rows.
pub fn sweep(model: &PreferenceModel, order: Order, cfg: &SweepConfig) -> Result<Sweep> {
    run(model, order, cfg, true)
}

/// Definition 1: `X_B ⪰ X_A` for every second-order pair.
pub fn test_ambiguity_aversion(model: &PreferenceModel, cfg: &SweepConfig) -> Result<AttitudeVerdict> {
    if model.k() < 2 {
        return Err(Error::Precondition("aversion needs k ≥ 2".into()));
    }
    Ok(run(model, Order::Second, cfg, true)?.verdict)
}

/// Definition 2 with equally spaced levels.
pub fn test_ambiguity_prudence(model: &PreferenceModel, cfg: &SweepConfig) -> Result<AttitudeVerdict> {
    if model.k() < 3 {
        return Err(Error::Precondition("prudence needs k ≥ 3".into()));
    }
    Ok(run(model, Order::Third, cfg, true)?.verdict)
}

/// Third-order sweep over unequal spacings, reported on its own.
pub fn test_ambiguity_prudence_unequal(model: &PreferenceModel, cfg: &SweepConfig) -> Result<AttitudeVerdict> {
    if model.k() < 3 {
        return Err(Error::Precondition("prudence needs k ≥ 3".into()));
    }
    Ok(run(model, Order::Third, cfg, false)?.verdict)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossCheck {
    pub agree: bool,
    pub behavioral_holds: bool,
    pub derivative_nonneg: bool,
    pub min_derivative: f64,
    pub symmetric: bool,
    pub verdict: AttitudeVerdict,
}

/// Compares the behavioral verdict with the sign of the capacity's
/// derivatives of the given order. For non-symmetric capacities only
/// "behavior holds ⇒ derivatives nonnegative" is required.
pub fn ceu_characterization_crosscheck(nu: &Capacity, order: Order, cfg: &SweepConfig) -> Result<CrossCheck> {
    let model = PreferenceModel::Ceu(nu.clone());
    let verdict = match order {
        Order::Second => test_ambiguity_aversion(&model, cfg)?,
        Order::Third => test_ambiguity_prudence(&model, cfg)?,
    };
    let (min_derivative, _) = nu.derivative_range(order.arity())?;
    let derivative_nonneg = min_derivative >= -SIGN_TOL;
    let symmetric = nu.is_symmetric(1e-12);
    let agree = if symmetric {
        verdict.holds == derivative_nonneg
    } else {
        !verdict.holds || derivative_nonneg
    };
    Ok(CrossCheck { agree, behavioral_holds: verdict.holds, derivative_nonneg, min_derivative, symmetric, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderingDiagnostic {
    /// Worse outcomes carry weakly larger worst-case probability.
    pub aversion_cond: bool,
    /// Probabilities listed from worst to best outcome are discretely convex.
    pub prudence_cond: bool,
    /// Descending rearrangement `p_(1) ≥ … ≥ p_(k)`.
    pub ordered: Vec<f64>,
    /// Probabilities listed from worst to best outcome.
    pub by_outcome: Vec<f64>,
    pub p: SimplexPoint,
}

pub const ORDERING_TOL: f64 = 1e-6;

pub fn argmin_ordering_diagnostic(model: &PreferenceModel, utils: &[f64]) -> Result<OrderingDiagnostic> {
    let am = argmin_probabilities(model, utils)?;
    let p = am.p.as_slice();
    let k = p.len();
    let mut aversion_cond = true;
    for i in 0..k {
        for j in 0..k {
            if utils[i] < utils[j] && p[i] < p[j] - ORDERING_TOL {
                aversion_cond = false;
            }
        }
    }
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| utils[a].total_cmp(&utils[b]).then(a.cmp(&b)));
    let by_outcome: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
    let prudence_cond = discretely_convex(&by_outcome, ORDERING_TOL);
    Ok(OrderingDiagnostic { aversion_cond, prudence_cond, ordered: am.ordered, by_outcome, p: am.p })
}

fn discretely_convex(v: &[f64], tol: f64) -> bool {
    v.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= -tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexCheck {
    pub ok: bool,
    /// Index of the first vertex whose descending rearrangement is not convex.
    pub witness: Option<usize>,
}

/// Every vertex must have a discretely convex descending rearrangement.
pub fn check_prior_set_vertex_condition(vertices: &[SimplexPoint]) -> Result<VertexCheck> {
    if vertices.iter().any(|v| v.k() < 3) {
        return Err(Error::Precondition("vertex condition needs k ≥ 3".into()));
    }
    let witness = vertices.iter().position(|v| !discretely_convex(&v.sorted_desc(), 1e-12));
    Ok(VertexCheck { ok: witness.is_none(), witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhiAttitude {
    pub concave: bool,
    pub third_nonneg: bool,
}

fn bounded(domain: Interval, open_at_zero: bool) -> Interval {
    let mut lo = if domain.lo.is_finite() { domain.lo } else { -5.0 };
    let hi = if domain.hi.is_finite() { domain.hi } else { lo.max(0.0) + 5.0 };
    if open_at_zero && lo <= 0.0 {
        lo = 1e-2 * hi.min(1.0);
    }
    Interval { lo, hi }
}

/// Concavity and `φ‴ ≥ 0` on `domain`, each by two methods that must agree.
pub fn phi_attitude_check(phi: &PhiSpec, domain: Interval) -> Result<PhiAttitude> {
    let dom = bounded(domain, phi.value(0.0).is_err());
    let f = |x: f64| phi.value(x).unwrap_or(f64::NAN);
    let xs = dom.grid(120);
    let mut sampled_concave = true;
    for (i, &x) in xs.iter().enumerate() {
        for &y in &xs[i + 1..] {
            let (a, b, m) = (f(x), f(y), f(0.5 * (x + y)));
            if m < 0.5 * (a + b) - 1e-12 * (1.0 + a.abs() + b.abs()) {
                sampled_concave = false;
            }
        }
    }
    let d2_max = xs.iter().map(|&x| phi.derivative(2, x)).fold(f64::NEG_INFINITY, f64::max);
    let analytic_concave = d2_max <= 1e-9;
    if phi.analytic(2, xs[0]).is_some() && sampled_concave != analytic_concave {
        return Err(Error::Inconsistency(format!(
            "{}: sampled concavity {sampled_concave} but max φ″ = {d2_max}",
            phi.name()
        )));
    }
    let lemma = check_third_derivative_sign(f, dom, 48)?.nonneg;
    let d3_min = xs.iter().map(|&x| phi.derivative(3, x)).fold(f64::INFINITY, f64::min);
    let analytic_third = d3_min >= -1e-9;
    if lemma != analytic_third {
        return Err(Error::Inconsistency(format!(
            "{}: midpoint inequality says {lemma} but min φ‴ = {d3_min}",
            phi.name()
        )));
    }
    Ok(PhiAttitude { concave: sampled_concave, third_nonneg: lemma })
}

/// A bounded test domain inside the conjugate's domain.
pub fn default_conjugate_domain(spec: &DivergenceSpec) -> Interval {
    let sup = spec.gstar_sup();
    Interval { lo: -3.0, hi: if sup.is_finite() { (sup - 0.1).min(2.0) } else { 2.0 } }
}

/// `(g*)‴ ≥ 0` on `domain`, by the analytic expression and the midpoint inequality.
pub fn divergence_prudence_check(spec: &DivergenceSpec, domain: Interval) -> Result<bool> {
    if !(domain.hi < spec.gstar_sup()) {
        return Err(Error::component(&spec.name, "check domain reaches outside the conjugate's domain"));
    }
    let analytic = domain.grid(400).iter().all(|&s| spec.gstar_d3(s) >= -1e-9);
    let lemma = check_third_derivative_sign(|s| spec.gstar(s), domain, 48)?.nonneg;
    if analytic != lemma {
        return Err(Error::Inconsistency(format!(
            "{:?}: analytic third derivative says {analytic}, midpoint inequality says {lemma}",
            spec
        )));
    }
    Ok(analytic)
}
