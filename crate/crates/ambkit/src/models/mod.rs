//! Preference models on a finite state space behind one evaluation interface.

mod ceu;
pub mod divergence;
pub mod levelk;
pub mod phi;

pub use ceu::ceu_evaluate;
pub use divergence::{
    divergence_argmin, divergence_evaluate, divergence_primal, oce_solve, CustomDivergence,
    DivergenceKind, DivergenceSpec, RealFn,
};
pub use levelk::{levelk_argmin, levelk_evaluate, LevelKFamily, LevelKSpec};
pub use phi::{PhiFamily, PhiSpec};

use crate::acts::Act;
use crate::error::{Error, Result};
use crate::numerics::{minimize_over_simplex, Interval, SimplexMode, SimplexPoint};
use crate::setfn::{validate_probability, Capacity};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Anything that maps a util profile to a real number.
pub trait Preference {
    fn k(&self) -> usize;
    fn evaluate(&self, utils: &[f64]) -> Result<f64>;
    /// Utils outside this interval are rejected by some component.
    fn util_domain(&self) -> Interval {
        Interval::REAL
    }
}

pub type IndexFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `min_q (q·u + c(q))` for a caller-supplied convex ambiguity index `c`.
#[derive(Clone)]
pub struct VariationalModel {
    pub k: usize,
    pub index: IndexFn,
    pub mode: SimplexMode,
    /// Midpoint-convexity failures found on 100 random pairs at construction.
    pub convexity_violations: usize,
}

impl fmt::Debug for VariationalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VariationalModel")
            .field("k", &self.k)
            .field("mode", &self.mode)
            .field("convexity_violations", &self.convexity_violations)
            .finish()
    }
}

impl VariationalModel {
    pub fn new(k: usize, index: IndexFn, mode: SimplexMode) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut violations = 0;
        for _ in 0..100 {
            let a = crate::random::random_simplex_point(k, &mut rng);
            let b = crate::random::random_simplex_point(k, &mut rng);
            let m: Vec<f64> = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| 0.5 * (x + y)).collect();
            let (ca, cb, cm) = (index(a.as_slice()), index(b.as_slice()), index(&m));
            if ca < 0.0 || cb < 0.0 || (cm.is_finite() && cm > 0.5 * (ca + cb) + 1e-9 * (1.0 + cm.abs())) {
                violations += 1;
            }
        }
        VariationalModel { k, index, mode, convexity_violations: violations }
    }
}

/// `min_q (q·u + c(q))` over the simplex.
pub fn vp_evaluate(index: &dyn Fn(&[f64]) -> f64, utils: &[f64], mode: SimplexMode) -> Result<f64> {
    vp_solve(index, utils, mode).map(|(_, v)| v)
}

fn vp_solve(index: &dyn Fn(&[f64]) -> f64, utils: &[f64], mode: SimplexMode) -> Result<(SimplexPoint, f64)> {
    minimize_over_simplex(
        |q| q.iter().zip(utils).map(|(a, b)| a * b).sum::<f64>() + index(q),
        utils.len(),
        mode,
    )
}

/// Minimum of `p·u` over the listed priors, with the winning index
/// (ties go to the lexicographically smallest prior).
pub fn meu_solve(vertices: &[SimplexPoint], utils: &[f64]) -> Result<(usize, f64)> {
    if vertices.is_empty() {
        return Err(Error::component("meu_polytope", "empty vertex list"));
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vertices.iter().enumerate() {
        if v.k() != utils.len() {
            return Err(Error::component("meu_polytope", format!("vertex {i} has {} states", v.k())));
        }
        let e = v.dot(utils);
        best = match best {
            None => Some((i, e)),
            Some((j, b)) => {
                let lexi = vertices[i]
                    .as_slice()
                    .iter()
                    .zip(vertices[j].as_slice())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Less);
                if e < b || (e == b && lexi) {
                    Some((i, e))
                } else {
                    Some((j, b))
                }
            }
        };
    }
    Ok(best.expect("nonempty"))
}

pub fn meu_evaluate(vertices: &[SimplexPoint], utils: &[f64]) -> Result<f64> {
    meu_solve(vertices, utils).map(|(_, v)| v)
}

/// `α·min_M E + (1−α)·max_M E` over `M = {(1−ε)P + εR}`.
pub fn alpha_epsilon_evaluate(alpha: f64, eps: f64, p: &SimplexPoint, utils: &[f64]) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&eps) {
        return Err(Error::component("alpha_epsilon", format!("α = {alpha}, ε = {eps} must lie in [0, 1]")));
    }
    if p.k() != utils.len() {
        return Err(Error::component("alpha_epsilon", "reference length mismatch"));
    }
    let ep = p.dot(utils);
    let lo = utils.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = utils.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((1.0 - eps) * ep + eps * (alpha * lo + (1.0 - alpha) * hi))
}

/// `Σ_j μ_j φ(p_j·u)`.
pub fn sa_evaluate(support: &[SimplexPoint], weights: &[f64], phi: &PhiSpec, utils: &[f64]) -> Result<f64> {
    support
        .iter()
        .zip(weights)
        .map(|(p, w)| Ok(w * phi.value(p.dot(utils))?))
        .sum()
}

/// `Σ_i P_i φ(u_i)`.
pub fn soeu_evaluate(p: &SimplexPoint, phi: &PhiSpec, utils: &[f64]) -> Result<f64> {
    if p.k() != utils.len() {
        return Err(Error::component("soeu", "reference length mismatch"));
    }
    p.as_slice().iter().zip(utils).map(|(pi, u)| Ok(pi * phi.value(*u)?)).sum()
}

#[derive(Debug, Clone)]
pub struct SmoothModel {
    pub support: Vec<SimplexPoint>,
    pub weights: Vec<f64>,
    pub phi: PhiSpec,
}

impl SmoothModel {
    pub fn new(support: Vec<SimplexPoint>, weights: Vec<f64>, phi: PhiSpec) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::component("sa", "support and weights must be nonempty and of equal length"));
        }
        let k = support[0].k();
        if support.iter().any(|p| p.k() != k) {
            return Err(Error::component("sa", "support priors differ in length"));
        }
        validate_probability(&weights).map_err(|e| Error::component("sa", format!("weights: {e}")))?;
        Ok(SmoothModel { support, weights, phi })
    }

    /// Uniform second-order weights over every permutation of every base prior.
    pub fn symmetrized(base: &[SimplexPoint], phi: PhiSpec) -> Result<Self> {
        let support = permutation_orbits(base);
        let n = support.len();
        SmoothModel::new(support, vec![1.0 / n as f64; n], phi)
    }
}

/// Every permutation of every point, duplicates kept.
pub fn permutation_orbits(base: &[SimplexPoint]) -> Vec<SimplexPoint> {
    let mut out = Vec::new();
    for p in base {
        for sigma in permutations(p.k()) {
            out.push(p.permuted(&sigma));
        }
    }
    out
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..k).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

#[derive(Clone)]
pub enum PreferenceModel {
    Ceu(Capacity),
    VpGeneric(VariationalModel),
    VpDivergence { divergence: DivergenceSpec, reference: SimplexPoint },
    MeuPolytope { vertices: Vec<SimplexPoint> },
    MeuLevelK(LevelKSpec),
    AlphaEpsilon { alpha: f64, epsilon: f64, reference: SimplexPoint },
    Smooth(SmoothModel),
    Soeu { reference: SimplexPoint, phi: PhiSpec },
}

impl fmt::Debug for PreferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreferenceModel::Ceu(nu) => write!(f, "Ceu(k={})", nu.k()),
            PreferenceModel::VpGeneric(m) => write!(f, "{m:?}"),
            PreferenceModel::VpDivergence { divergence, reference } => {
                write!(f, "VpDivergence({divergence:?}, P={:?})", reference.as_slice())
            }
            PreferenceModel::MeuPolytope { vertices } => write!(f, "MeuPolytope({} vertices)", vertices.len()),
            PreferenceModel::MeuLevelK(s) => write!(f, "MeuLevelK({s:?})"),
            PreferenceModel::AlphaEpsilon { alpha, epsilon, .. } => write!(f, "AlphaEpsilon(α={alpha}, ε={epsilon})"),
            PreferenceModel::Smooth(m) => write!(f, "Smooth({} priors, {:?})", m.support.len(), m.phi),
            PreferenceModel::Soeu { phi, reference } => write!(f, "Soeu({phi:?}, P={:?})", reference.as_slice()),
        }
    }
}

impl PreferenceModel {
    pub fn variant(&self) -> &'static str {
        match self {
            PreferenceModel::Ceu(_) => "ceu",
            PreferenceModel::VpGeneric(_) => "vp_generic",
            PreferenceModel::VpDivergence { .. } => "vp_divergence",
            PreferenceModel::MeuPolytope { .. } => "meu_polytope",
            PreferenceModel::MeuLevelK(_) => "meu_levelk",
            PreferenceModel::AlphaEpsilon { .. } => "alpha_epsilon",
            PreferenceModel::Smooth(_) => "sa",
            PreferenceModel::Soeu { .. } => "soeu",
        }
    }

    pub fn evaluate_act(&self, act: &Act) -> Result<f64> {
        self.evaluate(act.utils())
    }

    /// Whether the model is a minimum over priors.
    pub fn is_maxmin(&self) -> bool {
        matches!(
            self,
            PreferenceModel::VpGeneric(_)
                | PreferenceModel::VpDivergence { .. }
                | PreferenceModel::MeuPolytope { .. }
                | PreferenceModel::MeuLevelK(_)
        )
    }
}

impl Preference for PreferenceModel {
    fn k(&self) -> usize {
        match self {
            PreferenceModel::Ceu(nu) => nu.k(),
            PreferenceModel::VpGeneric(m) => m.k,
            PreferenceModel::VpDivergence { reference, .. } => reference.k(),
            PreferenceModel::MeuPolytope { vertices } => vertices.first().map_or(0, |v| v.k()),
            PreferenceModel::MeuLevelK(s) => s.k,
            PreferenceModel::AlphaEpsilon { reference, .. } => reference.k(),
            PreferenceModel::Smooth(m) => m.support[0].k(),
            PreferenceModel::Soeu { reference, .. } => reference.k(),
        }
    }

    fn evaluate(&self, utils: &[f64]) -> Result<f64> {
        if utils.len() != self.k() {
            return Err(Error::Domain(format!(
                "act has {} states, {} model has {}",
                utils.len(),
                self.variant(),
                self.k()
            )));
        }
        match self {
            PreferenceModel::Ceu(nu) => ceu_evaluate(nu, utils),
            PreferenceModel::VpGeneric(m) => vp_evaluate(&*m.index, utils, m.mode),
            PreferenceModel::VpDivergence { divergence, reference } => divergence_evaluate(divergence, reference, utils),
            PreferenceModel::MeuPolytope { vertices } => meu_evaluate(vertices, utils),
            PreferenceModel::MeuLevelK(s) => levelk_evaluate(s, utils),
            PreferenceModel::AlphaEpsilon { alpha, epsilon, reference } => {
                alpha_epsilon_evaluate(*alpha, *epsilon, reference, utils)
            }
            PreferenceModel::Smooth(m) => sa_evaluate(&m.support, &m.weights, &m.phi, utils),
            PreferenceModel::Soeu { reference, phi } => soeu_evaluate(reference, phi, utils),
        }
    }

    fn util_domain(&self) -> Interval {
        match self {
            PreferenceModel::Smooth(m) => m.phi.domain,
            PreferenceModel::Soeu { phi, .. } => phi.domain,
            _ => Interval::REAL,
        }
    }
}

/// A worst-case prior and its descending rearrangement.
#[derive(Debug, Clone, PartialEq)]
pub struct Argmin {
    pub p: SimplexPoint,
    /// `p_(1) ≥ … ≥ p_(k)`.
    pub ordered: Vec<f64>,
    /// Other priors attaining the same value (polytope vertices only).
    pub ties: Vec<SimplexPoint>,
}

/// The minimizing prior of a min-over-priors model.
pub fn argmin_probabilities(model: &PreferenceModel, utils: &[f64]) -> Result<Argmin> {
    if utils.len() != model.k() {
        return Err(Error::Domain("act length does not match the model".into()));
    }
    let (p, ties) = match model {
        PreferenceModel::VpGeneric(m) => (vp_solve(&*m.index, utils, m.mode)?.0, vec![]),
        PreferenceModel::VpDivergence { divergence, reference } => {
            (divergence_argmin(divergence, reference, utils)?, vec![])
        }
        PreferenceModel::MeuPolytope { vertices } => {
            let (i, v) = meu_solve(vertices, utils)?;
            let ties = vertices
                .iter()
                .enumerate()
                .filter(|&(j, q)| j != i && (q.dot(utils) - v).abs() <= 1e-12 * (1.0 + v.abs()))
                .map(|(_, q)| q.clone())
                .collect();
            (vertices[i].clone(), ties)
        }
        PreferenceModel::MeuLevelK(s) => (levelk_argmin(s, utils)?, vec![]),
        other => {
            return Err(Error::Precondition(format!(
                "{} is not a min-over-priors model",
                other.variant()
            )))
        }
    };
    let ordered = p.sorted_desc();
    Ok(Argmin { p, ordered, ties })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::{neo_additive, NeoAdditiveParams};

    #[test]
    fn meu_examples() {
        let simplex: Vec<_> = (0..3).map(|i| SimplexPoint::vertex(3, i)).collect();
        assert_eq!(meu_evaluate(&simplex, &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        let two = vec![
            SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap(),
            SimplexPoint::new(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        assert!((meu_evaluate(&two, &[0.0, 1.0, 2.0]).unwrap() - 0.7).abs() < 1e-15);
        assert!(meu_evaluate(&[], &[0.0]).is_err());
    }

    #[test]
    fn alpha_epsilon_is_neo_additive() {
        let p = SimplexPoint::uniform(3);
        let nu = neo_additive(&NeoAdditiveParams::uniform(0.2, 0.2, 3)).unwrap();
        for u in [[0.0, 1.0, 5.0], [3.0, -1.0, 2.0]] {
            let a = alpha_epsilon_evaluate(1.0, 0.2, &p, &u).unwrap();
            assert!((a - ceu_evaluate(&nu, &u).unwrap()).abs() < 1e-12);
        }
        assert_eq!(alpha_epsilon_evaluate(0.3, 0.0, &p, &[0.0, 3.0, 6.0]).unwrap(), 3.0);
    }

    #[test]
    fn sa_and_soeu_basics() {
        let log = PhiSpec::parse("log").unwrap();
        let e = std::f64::consts::E;
        let v = soeu_evaluate(&SimplexPoint::uniform(3), &log, &[1.0, e, e * e]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        let sup = vec![SimplexPoint::new(vec![0.6, 0.4]).unwrap(), SimplexPoint::new(vec![0.1, 0.9]).unwrap()];
        let v = sa_evaluate(&sup, &[0.25, 0.75], &PhiSpec::identity(), &[1.0, 3.0]).unwrap();
        assert!((v - (0.25 * 1.8 + 0.75 * 2.8)).abs() < 1e-15);
        assert!(soeu_evaluate(&SimplexPoint::uniform(2), &log, &[-1.0, 1.0]).is_err());
    }

    #[test]
    fn symmetrized_sa_prefers_mixed_profile() {
        let base = [SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap()];
        let m = SmoothModel::symmetrized(&base, PhiSpec::parse("exp_neg(1)").unwrap()).unwrap();
        assert_eq!(m.support.len(), 6);
        let model = PreferenceModel::Smooth(m);
        let b = model.evaluate(&[60.0, 60.0, 240.0]).unwrap();
        let a = model.evaluate(&[0.0, 180.0, 180.0]).unwrap();
        // Direct six-term sums of −e^{−p·u}/6.
        let direct = |u: [f64; 3]| -> f64 {
            permutations(3)
                .iter()
                .map(|s| {
                    let q = [0.5, 0.3, 0.2];
                    let e: f64 = (0..3).map(|i| q[s[i]] * u[i]).sum();
                    -(-e).exp() / 6.0
                })
                .sum()
        };
        assert!((b - direct([60.0, 60.0, 240.0])).abs() < 1e-15);
        assert!((a - direct([0.0, 180.0, 180.0])).abs() < 1e-15);
        assert!(b > a);
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[1], vec![0, 2, 1]);
        assert_eq!(p[5], vec![2, 1, 0]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn meu_argmin_tie_breaks_lexicographically() {
        let v = vec![
            SimplexPoint::new(vec![0.5, 0.5, 0.0]).unwrap(),
            SimplexPoint::new(vec![0.0, 0.5, 0.5]).unwrap(),
        ];
        let m = PreferenceModel::MeuPolytope { vertices: v };
        let a = argmin_probabilities(&m, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(a.p.as_slice(), &[0.0, 0.5, 0.5]);
        assert_eq!(a.ties.len(), 1);
    }
}
