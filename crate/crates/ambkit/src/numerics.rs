//! Numeric kernels shared by the models: 1-D concave maximization, root
//! bisection, minimization over the probability simplex, finite differences
//! and the midpoint inequality that characterizes `f‴ ≥ 0`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || !(lo < hi) {
            return Err(Error::Domain(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Evenly spaced points including both ends; both ends must be finite.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        (0..=n)
            .map(|i| self.lo + self.width() * i as f64 / n as f64)
            .collect()
    }
}

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        crate::setfn::validate_probability(&p)?;
        Ok(SimplexPoint(p))
    }

    /// Rescales a nonnegative vector onto the simplex.
    pub fn normalized(mut p: Vec<f64>) -> Result<Self> {
        for x in p.iter_mut() {
            if *x < 0.0 && *x > -1e-12 {
                *x = 0.0;
            }
        }
        let s: f64 = p.iter().sum();
        if !(s > 0.0) || !s.is_finite() || p.iter().any(|&x| x < 0.0) {
            return Err(Error::Domain(format!("cannot normalize {p:?}")));
        }
        p.iter_mut().for_each(|x| *x /= s);
        Ok(SimplexPoint(p))
    }

    pub fn uniform(k: usize) -> Self {
        SimplexPoint(vec![1.0 / k as f64; k])
    }

    pub fn vertex(k: usize, i: usize) -> Self {
        let mut p = vec![0.0; k];
        p[i] = 1.0;
        SimplexPoint(p)
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, u: &[f64]) -> f64 {
        self.0.iter().zip(u).map(|(p, u)| p * u).sum()
    }

    /// `p_(1) ≥ p_(2) ≥ … ≥ p_(k)`.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    pub fn permuted(&self, sigma: &[usize]) -> SimplexPoint {
        SimplexPoint(sigma.iter().map(|&j| self.0[j]).collect())
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a concave `f` on `bracket`.
pub fn maximize_concave_1d(
    f: impl Fn(f64) -> f64,
    bracket: Interval,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    if !bracket.lo.is_finite() || !bracket.hi.is_finite() {
        return Err(Error::Domain("golden-section bracket must be finite".into()));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Evaluation {
                x,
                context: "objective inside the search bracket".into(),
            })
        }
    };
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut iters = 0;
    while b - a > tol && iters < 300 {
        iters += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    // The endpoints are candidates too: a monotone f peaks at the boundary.
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [bracket.lo, bracket.hi] {
        let v = eval(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

/// Root of a nonincreasing `g` on `bracket` by bisection.
///
/// Returns the nearer endpoint when `g` does not change sign.
pub fn bisect_decreasing(g: impl Fn(f64) -> f64, bracket: Interval, tol: f64) -> f64 {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    if g(a) <= 0.0 {
        return a;
    }
    if g(b) >= 0.0 {
        return b;
    }
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SimplexMode {
    /// Exhaustive compositions with this denominator, then a 10× local pass.
    Grid { resolution: usize },
    /// Projected gradient from the barycenter.
    Descent { steps: usize, tol: f64 },
}

impl Default for SimplexMode {
    fn default() -> Self {
        SimplexMode::Grid { resolution: 400 }
    }
}

fn better(a: (f64, &[f64]), b: (f64, &[f64])) -> bool {
    match a.0.partial_cmp(&b.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => a.1.iter().zip(b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()) == Some(Ordering::Less),
    }
}

/// Calls `visit` for each composition of `n` into `k` nonnegative parts.
pub fn for_each_composition(k: usize, n: usize, mut visit: impl FnMut(&[usize])) {
    fn rec(parts: &mut Vec<usize>, left: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
        if parts.len() + 1 == k {
            parts.push(left);
            visit(parts);
            parts.pop();
            return;
        }
        for x in (0..=left).rev() {
            parts.push(x);
            rec(parts, left - x, k, visit);
            parts.pop();
        }
    }
    if k == 0 {
        return;
    }
    rec(&mut Vec::with_capacity(k), n, k, &mut visit);
}

/// Minimizes `objective` over the `k`-simplex. `+∞` is allowed and ranks last.
pub fn minimize_over_simplex(
    objective: impl Fn(&[f64]) -> f64,
    k: usize,
    mode: SimplexMode,
) -> Result<(SimplexPoint, f64)> {
    if k == 0 {
        return Err(Error::Domain("simplex dimension must be positive".into()));
    }
    let obj = |p: &[f64]| {
        let v = objective(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (p, v) = match mode {
        SimplexMode::Grid { resolution } => simplex_grid(&obj, k, resolution)?,
        SimplexMode::Descent { steps, tol } => simplex_descent(&obj, k, steps, tol),
    };
    if !v.is_finite() {
        return Err(Error::Evaluation {
            x: f64::NAN,
            context: "objective is infinite at every simplex candidate".into(),
        });
    }
    Ok((SimplexPoint(p), v))
}

fn simplex_grid(obj: &dyn Fn(&[f64]) -> f64, k: usize, n: usize) -> Result<(Vec<f64>, f64)> {
    if k > 6 {
        return Err(Error::Domain(format!("grid mode supports k ≤ 6, got {k}")));
    }
    if n == 0 {
        return Err(Error::Domain("grid resolution must be positive".into()));
    }
    let mut best = (f64::INFINITY, vec![0.0; k]);
    let mut best_counts = vec![0usize; k];
    let mut p = vec![0.0; k];
    for_each_composition(k, n, |c| {
        for (x, &ci) in p.iter_mut().zip(c) {
            *x = ci as f64 / n as f64;
        }
        let v = obj(&p);
        if better((v, &p), (best.0, &best.1)) {
            best = (v, p.clone());
            best_counts.copy_from_slice(c);
        }
    });
    if !best.0.is_finite() {
        return Ok((best.1, best.0));
    }
    // Local pass on the 10× lattice within one coarse step of the incumbent.
    let fine = 10 * n as i64;
    let radius: i64 = if k <= 4 { 10 } else { 4 };
    let width = (2 * radius + 1) as usize;
    let center: Vec<i64> = best_counts.iter().map(|&c| 10 * c as i64).collect();
    let mut q = vec![0.0; k];
    let mut counts = vec![0i64; k];
    for code in 0..width.pow(k as u32 - 1) {
        let mut rest = code;
        let mut used = 0;
        for i in 0..k - 1 {
            counts[i] = center[i] + (rest % width) as i64 - radius;
            rest /= width;
            used += counts[i];
        }
        counts[k - 1] = fine - used;
        if counts.iter().any(|&c| c < 0) || (counts[k - 1] - center[k - 1]).abs() > radius {
            continue;
        }
        for (x, &c) in q.iter_mut().zip(&counts) {
            *x = c as f64 / fine as f64;
        }
        let v = obj(&q);
        if better((v, &q), (best.0, &best.1)) {
            best = (v, q.clone());
        }
    }
    Ok((best.1, best.0))
}

/// Euclidean projection onto the probability simplex.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn simplex_descent(
    obj: &dyn Fn(&[f64]) -> f64,
    k: usize,
    steps: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let mut p = vec![1.0 / k as f64; k];
    let mut fp = obj(&p);
    let mut best = (fp, p.clone());
    let h = 1e-7;
    let mut eta = 0.5;
    for t in 1..=steps.max(1) {
        // Tangent-space gradient from directional differences along e_i − 1/k.
        let mut g = vec![0.0; k];
        for i in 0..k {
            let mut up = p.clone();
            let mut dn = p.clone();
            for j in 0..k {
                let d = if j == i { 1.0 - 1.0 / k as f64 } else { -1.0 / k as f64 };
                up[j] += h * d;
                dn[j] -= h * d;
            }
            let up_ok = up.iter().all(|&x| x >= 0.0);
            let dn_ok = dn.iter().all(|&x| x >= 0.0);
            g[i] = match (up_ok, dn_ok) {
                (true, true) => (obj(&up) - obj(&dn)) / (2.0 * h),
                (true, false) => (obj(&up) - fp) / h,
                (false, true) => (fp - obj(&dn)) / h,
                (false, false) => 0.0,
            };
            if !g[i].is_finite() {
                g[i] = 0.0;
            }
        }
        let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let mut step = eta / (t as f64).sqrt();
        let mut moved = false;
        while step > 1e-16 {
            let cand: Vec<f64> = project_onto_simplex(
                &p.iter().zip(&g).map(|(x, gi)| x - step * gi / gnorm).collect::<Vec<_>>(),
            );
            let fc = obj(&cand);
            if fc < fp {
                let dist: f64 = cand.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
                p = cand;
                fp = fc;
                moved = dist > tol;
                break;
            }
            step *= 0.5;
        }
        if fp < best.0 {
            best = (fp, p.clone());
        }
        if !moved {
            eta *= 0.5;
            if eta < tol {
                break;
            }
        }
    }
    (best.1, best.0)
}

/// Central-difference estimate of the `order`-th derivative.
pub fn finite_diff(f: impl Fn(f64) -> f64, x: f64, order: u8, h: f64) -> Result<f64> {
    match order {
        1 => Ok((f(x + h) - f(x - h)) / (2.0 * h)),
        2 => Ok((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)),
        3 => Ok((f(x + 2.0 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2.0 * h))
            / (2.0 * h * h * h)),
        _ => Err(Error::Domain(format!("finite_diff supports orders 1..=3, got {order}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThirdDerivativeCheck {
    pub nonneg: bool,
    /// `(x, y, z, δ, lhs − rhs)` of the first violation.
    pub witness: Option<(f64, f64, f64, f64, f64)>,
    pub min_margin: f64,
}

/// Grid check of `f(x+δ)+f(y−2δ)+f(z+δ) ≥ f(x−δ)+f(y+2δ)+f(z−δ)` for
/// `y = (x+z)/2`, `0 < δ ≤ (z−x)/2`, with all six points on the lattice.
pub fn check_third_derivative_sign(
    f: impl Fn(f64) -> f64,
    domain: Interval,
    grid_n: usize,
) -> Result<ThirdDerivativeCheck> {
    if !domain.lo.is_finite() || !domain.hi.is_finite() {
        return Err(Error::Domain("third-derivative check needs a bounded domain".into()));
    }
    let n = grid_n.max(4);
    let xs = domain.grid(n);
    let fx: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    if let Some(i) = fx.iter().position(|v| !v.is_finite()) {
        return Err(Error::Evaluation {
            x: xs[i],
            context: "third-derivative check".into(),
        });
    }
    let mut witness = None;
    let mut min_margin = f64::INFINITY;
    for a in 0..=n {
        for c in (a + 2..=n).step_by(2) {
            let y = (a + c) / 2;
            for d in 1..=(c - a) / 2 {
                if d > a || c + d > n {
                    break;
                }
                let lhs = fx[a + d] + fx[y - 2 * d] + fx[c + d];
                let rhs = fx[a - d] + fx[y + 2 * d] + fx[c - d];
                let margin = lhs - rhs;
                min_margin = min_margin.min(margin);
                if witness.is_none() && margin < -1e-10 {
                    let step = domain.width() / n as f64;
                    witness = Some((xs[a], xs[y], xs[c], d as f64 * step, margin));
                }
            }
        }
    }
    Ok(ThirdDerivativeCheck {
        nonneg: witness.is_none(),
        witness,
        min_margin: if min_margin.is_finite() { min_margin } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_quadratic_and_exp() {
        let (x, v) = maximize_concave_1d(|z| -(z - 3.0) * (z - 3.0), Interval::new(0.0, 10.0).unwrap(), 1e-9).unwrap();
        assert!((x - 3.0).abs() < 1e-8 && v.abs() < 1e-15);
        let (x, v) = maximize_concave_1d(|z| z - (z - 1.0).exp(), Interval::new(-5.0, 5.0).unwrap(), 1e-10).unwrap();
        assert!((x - 1.0).abs() < 1e-6 && v.abs() < 1e-12);
        let (x, v) = maximize_concave_1d(|_| 2.5, Interval::new(-1.0, 1.0).unwrap(), 1e-6).unwrap();
        assert!((-1.0..=1.0).contains(&x) && v == 2.5);
    }

    #[test]
    fn golden_reports_nonfinite() {
        let r = maximize_concave_1d(|z| if z > 0.5 { f64::NAN } else { z }, Interval::new(0.0, 1.0).unwrap(), 1e-6);
        assert!(matches!(r, Err(Error::Evaluation { x, .. }) if x > 0.5));
    }

    #[test]
    fn golden_monotone_objective_hits_endpoint() {
        let (x, _) = maximize_concave_1d(|z| z, Interval::new(0.0, 1.0).unwrap(), 1e-9).unwrap();
        assert_eq!(x, 1.0);
    }

    #[test]
    fn compositions_count() {
        let mut n = 0;
        for_each_composition(3, 10, |c| {
            assert_eq!(c.iter().sum::<usize>(), 10);
            n += 1;
        });
        assert_eq!(n, 66);
    }

    #[test]
    fn linear_simplex_minimum() {
        let (p, v) = minimize_over_simplex(|p| p[0] + 2.0 * p[1] + 3.0 * p[2], 3, SimplexMode::Grid { resolution: 100 }).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0]);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn gibbs_minimum() {
        let y = [0.0, 1.0, 2.0];
        let obj = |p: &[f64]| -> f64 {
            p.iter()
                .zip(&y)
                .map(|(&q, yi)| q * yi + if q > 0.0 { q * (3.0 * q).ln() } else { 0.0 })
                .sum()
        };
        let closed = -((y.iter().map(|v: &f64| (-v).exp()).sum::<f64>()) / 3.0).ln();
        let z: f64 = y.iter().map(|v| (-v).exp()).sum();
        for mode in [SimplexMode::Grid { resolution: 400 }, SimplexMode::Descent { steps: 5000, tol: 1e-12 }] {
            let (p, v) = minimize_over_simplex(obj, 3, mode).unwrap();
            assert!((v - closed).abs() < 1e-4, "{mode:?}: {v} vs {closed}");
            for i in 0..3 {
                assert!((p.as_slice()[i] - (-y[i]).exp() / z).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn all_infinite_is_error() {
        assert!(minimize_over_simplex(|_| f64::INFINITY, 3, SimplexMode::Grid { resolution: 10 }).is_err());
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_onto_simplex(&[0.9, 0.8, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((p[0] - 0.55).abs() < 1e-12 && (p[1] - 0.45).abs() < 1e-12 && p[2] == 0.0);
    }

    #[test]
    fn finite_difference_stencils() {
        assert!((finite_diff(f64::exp, 0.0, 3, 1e-3).unwrap() - 1.0).abs() < 1e-5);
        assert!((finite_diff(|x| x * x * x, 0.7, 3, 1e-2).unwrap() - 6.0).abs() < 1e-9);
        assert!((finite_diff(|x| x.sin(), 0.3, 1, 1e-5).unwrap() - 0.3f64.cos()).abs() < 1e-9);
        assert!(finite_diff(f64::exp, 0.0, 4, 1e-3).is_err());
    }

    #[test]
    fn third_derivative_lemma_examples() {
        let dom = Interval::new(-3.0, 3.0).unwrap();
        assert!(check_third_derivative_sign(f64::exp, dom, 40).unwrap().nonneg);
        let q = check_third_derivative_sign(|x| 2.0 * x * x - x + 1.0, dom, 40).unwrap();
        assert!(q.nonneg && q.min_margin.abs() < 1e-10);
        let c = check_third_derivative_sign(|x| x - 0.05 * x * x * x, Interval::new(0.0, 2.0).unwrap(), 40).unwrap();
        assert!(!c.nonneg);
        let (x, y, z, d, m) = c.witness.unwrap();
        assert!(x < y && y < z && d > 0.0 && m < 0.0);
    }
}
