//! Acts as utility profiles, the second- and third-order transformations, and
//! the permutation-symmetry check.

use crate::error::{Error, Result};
use crate::models::{Preference, PreferenceModel};
use crate::setfn::StateSpace;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute tolerance for util-scale indifference.
pub const INDIFFERENCE_TOL: f64 = 1e-8;

/// One util per state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Act {
    utils: Vec<f64>,
}

impl Act {
    pub fn new(utils: Vec<f64>) -> Result<Self> {
        StateSpace::new(utils.len())?;
        if let Some(i) = utils.iter().position(|u| !u.is_finite()) {
            return Err(Error::Domain(format!("util at state {i} is not finite")));
        }
        Ok(Act { utils })
    }

    pub fn constant(space: StateSpace, c: f64) -> Self {
        Act {
            utils: vec![c; space.k()],
        }
    }

    pub fn k(&self) -> usize {
        self.utils.len()
    }

    pub fn space(&self) -> StateSpace {
        StateSpace::new(self.utils.len()).expect("validated at construction")
    }

    pub fn utils(&self) -> &[f64] {
        &self.utils
    }

    pub fn into_utils(self) -> Vec<f64> {
        self.utils
    }

    /// `(X∘σ)(ω_i) = X(ω_{σ(i)})`.
    pub fn permuted(&self, sigma: &[usize]) -> Act {
        Act {
            utils: sigma.iter().map(|&j| self.utils[j]).collect(),
        }
    }

    pub fn transposed(&self, i: usize, j: usize) -> Act {
        let mut utils = self.utils.clone();
        utils.swap(i, j);
        Act { utils }
    }

    pub fn shifted(&self, c: f64) -> Act {
        Act {
            utils: self.utils.iter().map(|u| u + c).collect(),
        }
    }
}

/// Attitude order: second for aversion, third for prudence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Order {
    Second,
    Third,
}

impl Order {
    pub fn arity(self) -> usize {
        match self {
            Order::Second => 2,
            Order::Third => 3,
        }
    }
}

/// Designated states, their levels, the transfer size `ubar`, and the
/// background utils on every other state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestTriple {
    pub states: Vec<usize>,
    pub levels: Vec<f64>,
    pub ubar: f64,
    /// Utils for all `k` states; entries at `states` are ignored.
    pub background: Vec<f64>,
}

impl TestTriple {
    pub fn pair(states: [usize; 2], u: [f64; 2], ubar: f64, background: Vec<f64>) -> Self {
        TestTriple {
            states: states.to_vec(),
            levels: u.to_vec(),
            ubar,
            background,
        }
    }

    pub fn triple(states: [usize; 3], u: [f64; 3], ubar: f64, background: Vec<f64>) -> Self {
        TestTriple {
            states: states.to_vec(),
            levels: u.to_vec(),
            ubar,
            background,
        }
    }

    pub fn order(&self) -> Option<Order> {
        match self.states.len() {
            2 => Some(Order::Second),
            3 => Some(Order::Third),
            _ => None,
        }
    }

    /// Spacing `u2 − u1`.
    pub fn du(&self) -> f64 {
        self.levels[1] - self.levels[0]
    }

    /// The act with the designated states at their untransformed levels.
    pub fn base(&self) -> Result<Act> {
        self.validate_shape()?;
        let mut utils = self.background.clone();
        for (&s, &u) in self.states.iter().zip(&self.levels) {
            utils[s] = u;
        }
        Act::new(utils)
    }

    fn validate_shape(&self) -> Result<()> {
        let k = self.background.len();
        if self.states.len() != self.levels.len() || !(2..=3).contains(&self.states.len()) {
            return Err(Error::Precondition(
                "a test triple needs two or three states with matching levels".into(),
            ));
        }
        for (n, &s) in self.states.iter().enumerate() {
            if s >= k {
                return Err(Error::Domain(format!("state {s} outside a space of {k} states")));
            }
            if self.states[..n].contains(&s) {
                return Err(Error::Precondition(format!("state {s} repeated")));
            }
        }
        if !(self.ubar > 0.0) {
            return Err(Error::Precondition(format!("ubar = {} must be positive", self.ubar)));
        }
        Ok(())
    }

    fn apply(&self, deltas: &[f64]) -> Result<Act> {
        let mut act = self.base()?;
        for (&s, d) in self.states.iter().zip(deltas) {
            act.utils[s] += d;
        }
        Ok(act)
    }
}

/// `(X_A, X_B)` for Definition-1 style comparisons: `X_A` moves `ubar` from
/// the bad state to the good one, `X_B` moves it back.
pub fn second_order_pair(t: &TestTriple) -> Result<(Act, Act)> {
    if t.order() != Some(Order::Second) {
        return Err(Error::Precondition("second-order pair needs two states".into()));
    }
    t.validate_shape()?;
    let (u1, u2) = (t.levels[0], t.levels[1]);
    if !(u1 < u2) || !(t.ubar < (u2 - u1) / 2.0) {
        return Err(Error::Precondition(format!(
            "need u1 < u2 and ubar < (u2 - u1)/2, got u = ({u1}, {u2}), ubar = {}",
            t.ubar
        )));
    }
    let ub = t.ubar;
    Ok((t.apply(&[-ub, ub])?, t.apply(&[ub, -ub])?))
}

/// `X_A = (u1−ū, u2+2ū, u3−ū)`, `X_B = (u1+ū, u2−2ū, u3+ū)`.
pub fn third_order_pair(t: &TestTriple) -> Result<(Act, Act)> {
    if t.order() != Some(Order::Third) {
        return Err(Error::Precondition("third-order pair needs three states".into()));
    }
    t.validate_shape()?;
    let (u1, u2, u3) = (t.levels[0], t.levels[1], t.levels[2]);
    let du = u2 - u1;
    if !(du > 0.0) || ((u3 - u2) - du).abs() > 1e-12 * (1.0 + du.abs()) {
        return Err(Error::Precondition(format!(
            "third-order levels must be equally spaced and increasing, got ({u1}, {u2}, {u3})"
        )));
    }
    if !(t.ubar <= du / 3.0 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "ubar = {} must not exceed du/3 = {}",
            t.ubar,
            du / 3.0
        )));
    }
    let ub = t.ubar;
    Ok((t.apply(&[-ub, 2.0 * ub, -ub])?, t.apply(&[ub, -2.0 * ub, ub])?))
}

/// Third-order pair without the equal-spacing requirement; ranking is kept by
/// `ubar ≤ min(u2 − u1, u3 − u2)/3`.
pub fn third_order_pair_unequal(t: &TestTriple) -> Result<(Act, Act)> {
    if t.order() != Some(Order::Third) {
        return Err(Error::Precondition("third-order pair needs three states".into()));
    }
    t.validate_shape()?;
    let (u1, u2, u3) = (t.levels[0], t.levels[1], t.levels[2]);
    let gap = (u2 - u1).min(u3 - u2);
    if !(gap > 0.0) || !(t.ubar <= gap / 3.0 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "need increasing levels and ubar below min spacing / 3, got ({u1}, {u2}, {u3}), ubar = {}",
            t.ubar
        )));
    }
    let ub = t.ubar;
    Ok((t.apply(&[-ub, 2.0 * ub, -ub])?, t.apply(&[ub, -2.0 * ub, ub])?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryCheck {
    pub holds: bool,
    /// First violating act, the transposed pair, and `U(X) − U(X∘σ)`.
    pub witness: Option<(Act, (usize, usize), f64)>,
}

/// Samples random acts and transpositions and compares evaluations.
pub fn check_symmetry(
    model: &PreferenceModel,
    space: StateSpace,
    trials: usize,
    seed: u64,
) -> Result<SymmetryCheck> {
    let k = space.k();
    if model.k() != k {
        return Err(Error::Domain(format!(
            "model has {} states, space has {k}",
            model.k()
        )));
    }
    if k < 2 {
        return Ok(SymmetryCheck {
            holds: true,
            witness: None,
        });
    }
    let dom = model.util_domain();
    let lo = if dom.lo.is_finite() { dom.lo } else { -2.0 };
    let hi = if dom.hi.is_finite() { dom.hi } else { lo.max(0.0) + 3.0 };
    let pad = 1e-3 * (hi - lo);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx: Vec<usize> = (0..k).collect();
    for _ in 0..trials {
        let utils: Vec<f64> = (0..k).map(|_| rng.gen_range(lo + pad..hi - pad)).collect();
        let act = Act::new(utils)?;
        let pick: Vec<usize> = idx.choose_multiple(&mut rng, 2).copied().collect();
        let (i, j) = (pick[0], pick[1]);
        let swapped = act.transposed(i, j);
        let diff = model.evaluate(act.utils())? - model.evaluate(swapped.utils())?;
        if diff.abs() > INDIFFERENCE_TOL {
            return Ok(SymmetryCheck {
                holds: false,
                witness: Some((act, (i, j), diff)),
            });
        }
    }
    Ok(SymmetryCheck {
        holds: true,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_substitution() {
        let t = TestTriple::pair([0, 1], [0.0, 1.0], 0.25, vec![0.0; 2]);
        let (a, b) = second_order_pair(&t).unwrap();
        assert_eq!(a.utils(), &[-0.25, 1.25]);
        assert_eq!(b.utils(), &[0.25, 0.75]);
    }

    #[test]
    fn background_passthrough() {
        let t = TestTriple::pair([1, 2], [0.0, 1.0], 0.25, vec![5.0, 0.0, 0.0, 9.0]);
        let (a, b) = second_order_pair(&t).unwrap();
        assert_eq!((a.utils()[0], a.utils()[3]), (5.0, 9.0));
        assert_eq!((b.utils()[0], b.utils()[3]), (5.0, 9.0));
    }

    #[test]
    fn urn_profiles() {
        let t = TestTriple::triple([0, 1, 2], [30.0, 120.0, 210.0], 30.0, vec![0.0; 3]);
        let (a, b) = third_order_pair(&t).unwrap();
        assert_eq!(a.utils(), &[0.0, 180.0, 180.0]);
        assert_eq!(b.utils(), &[60.0, 60.0, 240.0]);
        let t = TestTriple::triple([0, 1, 2], [0.0, 1.0, 2.0], 0.25, vec![0.0; 3]);
        let (a, b) = third_order_pair(&t).unwrap();
        assert_eq!(a.utils(), &[-0.25, 1.5, 1.75]);
        assert_eq!(b.utils(), &[0.25, 0.5, 2.25]);
    }

    #[test]
    fn bounds_are_enforced() {
        let t = TestTriple::pair([0, 1], [0.0, 1.0], 0.5, vec![0.0; 2]);
        assert!(matches!(second_order_pair(&t), Err(Error::Precondition(_))));
        let t = TestTriple::triple([0, 1, 2], [0.0, 1.0, 2.5], 0.1, vec![0.0; 3]);
        assert!(matches!(third_order_pair(&t), Err(Error::Precondition(_))));
        assert!(third_order_pair_unequal(&t).is_ok());
        let t = TestTriple::triple([0, 1, 2], [0.0, 1.0, 2.0], 0.34, vec![0.0; 3]);
        assert!(third_order_pair(&t).is_err());
        let t = TestTriple::pair([0, 0], [0.0, 1.0], 0.1, vec![0.0; 2]);
        assert!(second_order_pair(&t).is_err());
        let t = TestTriple::pair([0, 1], [0.0, 1.0], 0.0, vec![0.0; 2]);
        assert!(second_order_pair(&t).is_err());
    }

    #[test]
    fn third_order_is_two_second_order_moves() {
        let bg = vec![0.0; 3];
        let t = TestTriple::triple([0, 1, 2], [0.0, 1.0, 2.0], 0.2, bg.clone());
        let (_, b) = third_order_pair(&t).unwrap();
        // good move on (0,1): X_B of the pair; bad move on (1,2): X_A of the pair.
        let good = TestTriple::pair([0, 1], [0.0, 1.0], 0.2, vec![0.0, 0.0, 2.0]);
        let (_, g) = second_order_pair(&good).unwrap();
        let bad = TestTriple::pair([1, 2], [g.utils()[1], 2.0], 0.2, g.utils().to_vec());
        let (h, _) = second_order_pair(&bad).unwrap();
        for (x, y) in b.utils().iter().zip(h.utils()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
