//! Seedable generators for capacities, priors, acts and prior sets.

use crate::models::permutation_orbits;
use crate::numerics::SimplexPoint;
use crate::setfn::{Capacity, StateSpace};
use rand::Rng;

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draws on proper events, closed upward by max-over-subsets.
pub fn random_capacity(space: StateSpace, rng: &mut impl Rng) -> Capacity {
    let n = space.num_events();
    let full = n - 1;
    let mut v = vec![0.0; n];
    for slot in v.iter_mut().take(full).skip(1) {
        *slot = rng.gen::<f64>();
    }
    for m in 1..full {
        for i in 0..space.k() {
            if m >> i & 1 == 1 {
                let below = v[m & !(1 << i)];
                if below > v[m] {
                    v[m] = below;
                }
            }
        }
    }
    v[full] = 1.0;
    Capacity::new(space, v).expect("monotone by construction")
}

/// Shape constraints for symmetric capacities `ν(A) = f(|A|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetricShape {
    /// Any increasing profile.
    Any,
    /// Convex profile: supermodular capacity.
    Convex,
    /// Convex increments: nonnegative third differences.
    ConvexIncrements,
}

/// Random increasing profile `f(0) = 0 ≤ f(1) ≤ … ≤ f(k) = 1` with the shape.
pub fn random_symmetric_profile(k: usize, shape: SymmetricShape, rng: &mut impl Rng) -> Vec<f64> {
    let mut inc: Vec<f64> = match shape {
        SymmetricShape::Any => (0..k).map(|_| rng.gen::<f64>()).collect(),
        SymmetricShape::Convex => {
            let mut d: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            d.sort_by(f64::total_cmp);
            d
        }
        SymmetricShape::ConvexIncrements => {
            // increments form a convex sequence, shifted to be nonnegative
            let mut slope = rng.gen::<f64>() * 2.0 - 1.0;
            let mut d = vec![0.0];
            for _ in 1..k {
                let next = *d.last().unwrap() + slope;
                d.push(next);
                slope += rng.gen::<f64>();
            }
            let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
            let lift = 0.2 * rng.gen::<f64>();
            d.iter_mut().for_each(|x| *x += lift - lo);
            d
        }
    };
    let total: f64 = inc.iter().sum();
    if total <= 0.0 {
        inc = vec![1.0; k];
    }
    let total: f64 = inc.iter().sum();
    let mut f = vec![0.0];
    let mut acc = 0.0;
    for d in &inc {
        acc += d / total;
        f.push(acc);
    }
    f[k] = 1.0;
    for i in 1..k {
        f[i] = f[i].min(1.0);
    }
    f
}

pub fn random_symmetric_capacity(space: StateSpace, shape: SymmetricShape, rng: &mut impl Rng) -> Capacity {
    let f = random_symmetric_profile(space.k(), shape, rng);
    Capacity::symmetric(space, &f).expect("increasing profile")
}

/// Uniform on the simplex (normalized exponentials).
pub fn random_simplex_point(k: usize, rng: &mut impl Rng) -> SimplexPoint {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    SimplexPoint::normalized(w).expect("positive weights")
}

pub fn random_utils(k: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..k).map(|_| rng.gen_range(lo..hi)).collect()
}

/// A point whose descending rearrangement is discretely convex.
pub fn random_convex_ordered_point(k: usize, rng: &mut impl Rng) -> SimplexPoint {
    // p_(i) = Σ_{j ≥ i} t_j (j − i + 1) with t ≥ 0 gives a convex decreasing sequence.
    let t: Vec<f64> = (0..k).map(|_| rng.gen::<f64>().powi(2)).collect();
    let p: Vec<f64> = (0..k).map(|i| (i..k).map(|j| t[j] * (j - i + 1) as f64).sum()).collect();
    SimplexPoint::normalized(p).expect("positive weights")
}

/// Permutation orbits of `n_base` random points passing the vertex condition.
pub fn random_symmetric_polytope(k: usize, n_base: usize, rng: &mut impl Rng) -> Vec<SimplexPoint> {
    let base: Vec<SimplexPoint> = (0..n_base).map(|_| random_convex_ordered_point(k, rng)).collect();
    permutation_orbits(&base)
}
