//! Finite state spaces, events and capacities.
//!
//! A capacity on `k` states is stored densely: one value per subset, indexed
//! by the subset's bitmask.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Largest supported number of states.
pub const MAX_STATES: usize = 16;

/// Tolerance used by monotonicity and derivative sign checks.
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateSpace {
    k: usize,
}

impl StateSpace {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k > MAX_STATES {
            return Err(Error::Domain(format!(
                "state count {k} outside 1..={MAX_STATES}"
            )));
        }
        Ok(StateSpace { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_events(&self) -> usize {
        1 << self.k
    }

    pub fn full(&self) -> EventSet {
        EventSet((1u32 << self.k) - 1)
    }

    /// All events in increasing mask order.
    pub fn events(&self) -> impl Iterator<Item = EventSet> {
        (0..(1u32 << self.k)).map(EventSet)
    }

    pub fn contains(&self, e: EventSet) -> bool {
        e.0 & !self.full().0 == 0
    }

    pub fn check(&self, e: EventSet) -> Result<()> {
        if self.contains(e) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "event mask {:#b} exceeds a space of {} states",
                e.0, self.k
            )))
        }
    }
}

/// A subset of states, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct EventSet(pub u32);

impl EventSet {
    pub const EMPTY: EventSet = EventSet(0);

    pub fn singleton(i: usize) -> Self {
        EventSet(1 << i)
    }

    pub fn from_states(states: &[usize]) -> Self {
        EventSet(states.iter().fold(0, |m, &i| m | (1 << i)))
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn union(self, o: EventSet) -> Self {
        EventSet(self.0 | o.0)
    }

    pub fn intersection(self, o: EventSet) -> Self {
        EventSet(self.0 & o.0)
    }

    pub fn difference(self, o: EventSet) -> Self {
        EventSet(self.0 & !o.0)
    }

    pub fn with(self, i: usize) -> Self {
        EventSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        EventSet(self.0 & !(1 << i))
    }

    pub fn is_subset(self, o: EventSet) -> bool {
        self.0 & !o.0 == 0
    }

    /// State indices in increasing order.
    pub fn states(self) -> impl Iterator<Item = usize> {
        let m = self.0;
        (0..32).filter(move |i| m >> i & 1 == 1)
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = EventSet> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(EventSet(cur))
        })
    }
}

/// A grounded, normalized, monotone set function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacity {
    space: StateSpace,
    values: Vec<f64>,
}

/// Outcome of [`Capacity::classify_monotonicity`].
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityCheck {
    pub holds: bool,
    /// Smallest `(A, B)` by mask value with `Δ_B ν(A) < -tol`.
    pub witness: Option<(EventSet, EventSet)>,
    pub min_derivative: f64,
}

impl Capacity {
    /// Validates grounding, normalization and monotonicity (to [`SIGN_TOL`]).
    pub fn new(space: StateSpace, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.num_events() {
            return Err(Error::Domain(format!(
                "expected {} capacity values, got {}",
                space.num_events(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("capacity value at mask {i} is not finite")));
        }
        if values[0] != 0.0 {
            return Err(Error::Domain(format!("ν(∅) = {} but must be 0", values[0])));
        }
        let full = space.full().0 as usize;
        if values[full] != 1.0 {
            return Err(Error::Domain(format!("ν(S) = {} but must be 1", values[full])));
        }
        for m in 0..values.len() {
            for i in 0..space.k() {
                let up = m | (1 << i);
                if values[up] < values[m] - SIGN_TOL {
                    return Err(Error::Domain(format!(
                        "not monotone: ν({m:#b}) = {} > ν({up:#b}) = {}",
                        values[m], values[up]
                    )));
                }
            }
        }
        Ok(Capacity { space, values })
    }

    pub fn from_fn(space: StateSpace, f: impl Fn(EventSet) -> f64) -> Result<Self> {
        let values = space.events().map(f).collect();
        Capacity::new(space, values)
    }

    /// The probability measure with point masses `p`.
    pub fn additive(p: &[f64]) -> Result<Self> {
        let space = StateSpace::new(p.len())?;
        let full = space.full();
        Capacity::from_fn(space, |e| {
            if e == full {
                1.0
            } else {
                e.states().map(|i| p[i]).sum()
            }
        })
    }

    /// `ν(A) = f[|A|]`; `f` has length `k + 1`.
    pub fn symmetric(space: StateSpace, f: &[f64]) -> Result<Self> {
        if f.len() != space.k() + 1 {
            return Err(Error::Domain(format!(
                "symmetric profile needs {} entries, got {}",
                space.k() + 1,
                f.len()
            )));
        }
        Capacity::from_fn(space, |e| f[e.len()])
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn k(&self) -> usize {
        self.space.k()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, e: EventSet) -> f64 {
        self.values[e.0 as usize]
    }

    /// `Δ_B ν(A) = Σ_{C⊆B} (−1)^{|B∖C|} ν((A∖B)∪C)`.
    pub fn derivative(&self, a: EventSet, b: EventSet) -> Result<f64> {
        self.space.check(a)?;
        self.space.check(b)?;
        if b.is_empty() {
            return Err(Error::Domain("derivative direction B must be nonempty".into()));
        }
        Ok(self.derivative_unchecked(a, b))
    }

    /// Sums in expansion order: `C = B` first, then smaller subsets, each size
    /// in lexicographic order, so low orders match their written-out forms bit for bit.
    pub(crate) fn derivative_unchecked(&self, a: EventSet, b: EventSet) -> f64 {
        fn combos(states: &[usize], m: usize, start: usize, mask: u32, visit: &mut dyn FnMut(u32)) {
            if m == 0 {
                visit(mask);
                return;
            }
            for i in start..=states.len() - m {
                combos(states, m - 1, i + 1, mask | 1 << states[i], visit);
            }
        }
        let base = a.difference(b);
        let states: Vec<usize> = b.states().collect();
        let nb = states.len();
        let mut total = 0.0;
        for m in (0..=nb).rev() {
            let sign = if (nb - m) % 2 == 0 { 1.0 } else { -1.0 };
            combos(&states, m, 0, 0, &mut |c| total += sign * self.value(base.union(EventSet(c))));
        }
        total
    }

    /// Checks `Δ_B ν(A) ≥ −tol` for every `A` and every `B` with `2 ≤ |B| ≤ n`.
    pub fn classify_monotonicity(&self, n: usize) -> Result<MonotonicityCheck> {
        self.classify_monotonicity_tol(n, SIGN_TOL)
    }

    pub fn classify_monotonicity_tol(&self, n: usize, tol: f64) -> Result<MonotonicityCheck> {
        let k = self.k();
        if n < 2 || n > k {
            return Err(Error::Domain(format!("monotonicity order {n} outside 2..={k}")));
        }
        let mut min_derivative = f64::INFINITY;
        let mut witness = None;
        let nmask = self.space.num_events() as u32;
        // Δ_B ν(A) ignores A∩B, so the smallest violating A is always disjoint from B.
        for a in 0..nmask {
            for b in 0..nmask {
                let bs = EventSet(b);
                if a & b != 0 || bs.len() < 2 || bs.len() > n {
                    continue;
                }
                let d = self.derivative_unchecked(EventSet(a), bs);
                if d < min_derivative {
                    min_derivative = d;
                }
                if witness.is_none() && d < -tol {
                    witness = Some((EventSet(a), bs));
                }
            }
        }
        Ok(MonotonicityCheck {
            holds: witness.is_none(),
            witness,
            min_derivative,
        })
    }

    /// Minimum and maximum of `Δ_B ν(A)` over all `A` and all `|B| = order`.
    pub fn derivative_range(&self, order: usize) -> Result<(f64, f64)> {
        let k = self.k();
        if order == 0 || order > k {
            return Err(Error::Domain(format!("derivative order {order} outside 1..={k}")));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for b in self.space.events().filter(|b| b.len() == order) {
            for a in self.space.full().difference(b).subsets() {
                let d = self.derivative_unchecked(a, b);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        Ok((lo, hi))
    }

    /// The conjugate `ν̄(A) = 1 − ν(S∖A)`.
    pub fn dual(&self) -> Capacity {
        let full = self.space.full();
        let values = self
            .space
            .events()
            .map(|a| {
                if a.is_empty() {
                    0.0
                } else if a == full {
                    1.0
                } else {
                    1.0 - self.value(full.difference(a))
                }
            })
            .collect();
        Capacity {
            space: self.space,
            values,
        }
    }

    /// True when `ν(A)` depends only on `|A|` (within `tol`).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let mut by_size = vec![None; self.k() + 1];
        self.space.events().all(|e| {
            let v = self.value(e);
            match by_size[e.len()] {
                None => {
                    by_size[e.len()] = Some(v);
                    true
                }
                Some(w) => (v - w).abs() <= tol,
            }
        })
    }
}

/// Parameters of a neo-additive capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeoAdditiveParams {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
}

impl NeoAdditiveParams {
    pub fn uniform(a: f64, b: f64, k: usize) -> Self {
        NeoAdditiveParams {
            a,
            b,
            p: vec![1.0 / k as f64; k],
        }
    }
}

/// `ν(E) = (a − b)/2 + (1 − a)P(E)` on proper nonempty events.
pub fn neo_additive(params: &NeoAdditiveParams) -> Result<Capacity> {
    let NeoAdditiveParams { a, b, ref p } = *params;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("neo-additive a = {a} outside [0, 1]")));
    }
    if b < -a || b > a {
        return Err(Error::Domain(format!("neo-additive b = {b} outside [-a, a]")));
    }
    validate_probability(p)?;
    if a > 0.0 && p.iter().any(|&x| x == 0.0) {
        return Err(Error::Domain(
            "neo-additive capacity needs every P_i > 0 when a > 0".into(),
        ));
    }
    let space = StateSpace::new(p.len())?;
    let full = space.full();
    Capacity::from_fn(space, |e| {
        if e.is_empty() {
            0.0
        } else if e == full {
            1.0
        } else if a == 0.0 {
            e.states().map(|i| p[i]).sum()
        } else {
            (a - b) / 2.0 + (1.0 - a) * e.states().map(|i| p[i]).sum::<f64>()
        }
    })
}

pub(crate) fn validate_probability(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Domain("empty probability vector".into()));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("probability vector {p:?} has a negative entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("probability vector sums to {s}, not 1")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(states: &[usize]) -> EventSet {
        EventSet::from_states(states)
    }

    #[test]
    fn subsets_enumerates_all() {
        let b = ev(&[0, 2, 3]);
        let subs: Vec<u32> = b.subsets().map(|e| e.0).collect();
        assert_eq!(subs, vec![0, 1, 4, 5, 8, 9, 12, 13]);
        assert_eq!(EventSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn additive_second_derivative_vanishes() {
        let nu = Capacity::additive(&[1.0 / 3.0; 3]).unwrap();
        assert!(nu.derivative(EventSet::EMPTY, ev(&[0, 1])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_capacities() {
        let s = StateSpace::new(2).unwrap();
        assert!(Capacity::new(s, vec![0.0, 0.6, 0.5, 0.4]).is_err());
        assert!(Capacity::new(s, vec![0.1, 0.2, 0.3, 1.0]).is_err());
        assert!(Capacity::new(s, vec![0.0, 0.2, 0.3, 0.9]).is_err());
        assert!(Capacity::new(s, vec![0.0, 0.2, 0.3]).is_err());
        assert!(StateSpace::new(17).is_err());
        assert!(StateSpace::new(0).is_err());
    }

    #[test]
    fn out_of_range_event_is_domain_error() {
        let nu = Capacity::additive(&[0.5, 0.5]).unwrap();
        assert!(matches!(
            nu.derivative(EventSet(4), ev(&[0])),
            Err(Error::Domain(_))
        ));
        assert!(nu.derivative(EventSet::EMPTY, EventSet::EMPTY).is_err());
    }

    #[test]
    fn neo_additive_values() {
        let nu = neo_additive(&NeoAdditiveParams::uniform(0.2, -0.2, 4)).unwrap();
        assert!((nu.value(ev(&[0, 3])) - 0.6).abs() < 1e-15);
        let nu = neo_additive(&NeoAdditiveParams::uniform(0.2, 0.2, 5)).unwrap();
        assert!((nu.value(ev(&[1])) - 0.8 * 0.2).abs() < 1e-15);
        assert_eq!(nu.value(nu.space().full()), 1.0);
    }

    #[test]
    fn neo_additive_rejects_zero_mass() {
        let p = NeoAdditiveParams {
            a: 0.3,
            b: 0.0,
            p: vec![0.5, 0.5, 0.0],
        };
        assert!(neo_additive(&p).is_err());
        let p = NeoAdditiveParams { a: 0.0, ..p };
        assert!(neo_additive(&p).is_ok());
    }

    #[test]
    fn supermodular_witness_for_unequal_a_b() {
        let nu = neo_additive(&NeoAdditiveParams::uniform(0.3, 0.1, 4)).unwrap();
        let chk = nu.classify_monotonicity(2).unwrap();
        assert!(!chk.holds);
        let (a, b) = chk.witness.unwrap();
        assert_eq!(a, EventSet::EMPTY);
        assert_eq!(b, ev(&[0, 1]));
        assert!((nu.derivative(a, b).unwrap() + 0.1).abs() < 1e-12);
    }

    #[test]
    fn dual_of_measure_is_itself() {
        let nu = Capacity::additive(&[0.2, 0.3, 0.5]).unwrap();
        let d = nu.dual();
        for e in nu.space().events() {
            assert!((d.value(e) - nu.value(e)).abs() < 1e-15);
        }
    }
}
