use ambkit::acts::{second_order_pair, third_order_pair};
use ambkit::attitudes::{sweep, SweepConfig};
use ambkit::insurance::{solve, InsuranceModel, InsuranceProblem, Premium};
use ambkit::models::{
    ceu_evaluate, meu_evaluate, sa_evaluate, vp_evaluate, DivergenceSpec, LevelKFamily, LevelKSpec, PhiSpec,
};
use ambkit::numerics::{maximize_concave_1d, minimize_over_simplex, project_onto_simplex, SimplexMode};
use ambkit::random::{random_capacity, random_symmetric_capacity, random_symmetric_polytope, rng, SymmetricShape};
use ambkit::setfn::{neo_additive, NeoAdditiveParams};
use ambkit::{Capacity, EventSet, Interval, Order, Preference, PreferenceModel, SimplexPoint, StateSpace, TestTriple};
use proptest::prelude::*;

fn capacity(k: usize, seed: u64) -> Capacity {
    random_capacity(StateSpace::new(k).unwrap(), &mut rng(seed))
}

fn simplex(k: usize) -> impl Strategy<Value = SimplexPoint> {
    prop::collection::vec(0.05f64..1.0, k).prop_map(|w| SimplexPoint::normalized(w).unwrap())
}

fn utils(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn first_derivatives_are_nonnegative(k in 1usize..=6, seed in any::<u64>()) {
        let nu = capacity(k, seed);
        for a in 0..1u32 << k {
            for w in 0..k {
                prop_assert!(nu.derivative(EventSet(a), EventSet::singleton(w)).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn second_derivative_is_the_four_term_expansion(k in 2usize..=5, seed in any::<u64>()) {
        let nu = capacity(k, seed);
        let v = |m: u32| nu.value(EventSet(m));
        for i in 0..k {
            for j in i + 1..k {
                let (bi, bj) = (1u32 << i, 1u32 << j);
                for a in 0..1u32 << k {
                    let c = a & !(bi | bj);
                    let four = v(c | bi | bj) - v(c | bi) - v(c | bj) + v(c);
                    let d = nu.derivative(EventSet(a), EventSet(bi | bj)).unwrap();
                    prop_assert_eq!(d, four);
                }
            }
        }
    }

    #[test]
    fn third_derivative_is_the_eight_term_expansion(k in 3usize..=5, seed in any::<u64>()) {
        let nu = capacity(k, seed);
        let v = |m: u32| nu.value(EventSet(m));
        for b in (0..1u32 << k).filter(|b| b.count_ones() == 3) {
            let bits: Vec<u32> = (0..k).filter(|i| b >> i & 1 == 1).map(|i| 1u32 << i).collect();
            let (x, y, z) = (bits[0], bits[1], bits[2]);
            for a in 0..1u32 << k {
                let c = a & !b;
                let eight = v(c | x | y | z) - v(c | x | y) - v(c | x | z) - v(c | y | z)
                    + v(c | x) + v(c | y) + v(c | z) - v(c);
                let d = nu.derivative(EventSet(a), EventSet(b)).unwrap();
                prop_assert_eq!(d, eight);
            }
        }
    }

    #[test]
    fn supermodularity_is_the_sign_of_second_derivatives(k in 2usize..=5, seed in any::<u64>(), shape in 0usize..3) {
        let shape = [SymmetricShape::Any, SymmetricShape::Convex, SymmetricShape::ConvexIncrements][shape];
        let nu = if seed % 2 == 0 {
            capacity(k, seed)
        } else {
            random_symmetric_capacity(StateSpace::new(k).unwrap(), shape, &mut rng(seed))
        };
        let mut min = f64::INFINITY;
        for b in (0..1u32 << k).filter(|b| b.count_ones() == 2) {
            for a in 0..1u32 << k {
                min = min.min(nu.derivative(EventSet(a), EventSet(b)).unwrap());
            }
        }
        let c = nu.classify_monotonicity(2).unwrap();
        prop_assert_eq!(c.holds, min >= -1e-10);
        prop_assert_eq!(c.witness.is_some(), !c.holds);
    }

    #[test]
    fn dual_is_an_involution(k in 1usize..=6, seed in any::<u64>()) {
        let nu = capacity(k, seed);
        let back = nu.dual().dual();
        for (x, y) in nu.values().iter().zip(back.values()) {
            prop_assert!((x - y).abs() <= 1e-15);
        }
        prop_assert!(Capacity::new(nu.space(), nu.dual().values().to_vec()).is_ok());
    }

    #[test]
    fn dual_of_a_measure_is_itself(p in simplex(4)) {
        let nu = Capacity::additive(p.as_slice()).unwrap();
        for (x, y) in nu.values().iter().zip(nu.dual().values()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn dual_swaps_super_and_submodularity(k in 2usize..=5, seed in any::<u64>()) {
        let space = StateSpace::new(k).unwrap();
        let nu = random_symmetric_capacity(space, SymmetricShape::Convex, &mut rng(seed));
        prop_assume!(nu.classify_monotonicity(2).unwrap().holds);
        let dual = nu.dual();
        for b in (0..1u32 << k).filter(|b| b.count_ones() == 2) {
            for a in 0..1u32 << k {
                prop_assert!(dual.derivative(EventSet(a), EventSet(b)).unwrap() <= 1e-10);
            }
        }
    }

    #[test]
    fn transfers_preserve_mean_and_rank(u1 in -5.0f64..5.0, du in 0.1f64..3.0, frac in 0.01f64..0.99, bg in utils(2)) {
        let mut background = vec![0.0, 0.0];
        background.extend(&bg);
        let t = TestTriple::pair([0, 1], [u1, u1 + du], frac * du / 2.0, background.clone());
        let (a, b) = second_order_pair(&t).unwrap();
        let base: f64 = u1 + u1 + du + bg.iter().sum::<f64>();
        prop_assert!((a.utils().iter().sum::<f64>() - base).abs() <= 1e-9);
        prop_assert!((b.utils().iter().sum::<f64>() - base).abs() <= 1e-9);
        prop_assert!(a.utils()[0] < a.utils()[1] && b.utils()[0] < b.utils()[1]);
        prop_assert_eq!(&a.utils()[2..], &bg[..]);

        background.push(0.0);
        let ubar = frac * du / 3.0;
        let t = TestTriple::triple([0, 1, 4], [u1, u1 + du, u1 + 2.0 * du], ubar, background);
        let (a, b) = third_order_pair(&t).unwrap();
        for act in [&a, &b] {
            let u = act.utils();
            prop_assert!((u.iter().sum::<f64>() - (base + u1 + 2.0 * du)).abs() <= 1e-9);
            prop_assert!(u[0] < u[1] && u[1] < u[4]);
        }
        // B is the good transfer on (ω1, ω2) followed by the bad one on (ω2, ω3).
        let mut nested = t.base().unwrap().into_utils();
        nested[0] += ubar;
        nested[1] -= ubar;
        nested[1] -= ubar;
        nested[4] += ubar;
        for (x, y) in nested.iter().zip(b.utils()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_lands_on_the_simplex(v in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let p = project_onto_simplex(&v);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let again = project_onto_simplex(&p);
        for (x, y) in p.iter().zip(&again) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn golden_section_tightens_with_tol(c in -2.0f64..2.0, w in 0.5f64..3.0) {
        let f = |x: f64| -w * (x - c).powi(2) + (x - c).sin() * 0.1;
        let bracket = Interval::new(-4.0, 4.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut tol = 1e-2;
        while tol > 1e-9 {
            let (_, v) = maximize_concave_1d(f, bracket, tol).unwrap();
            prop_assert!(v >= prev - tol, "tol {}: {} after {}", tol, v, prev);
            prev = v;
            tol /= 2.0;
        }
    }

    #[test]
    fn choquet_is_constant_additive(k in 2usize..=5, seed in any::<u64>(), c in -10.0f64..10.0, u in utils(5)) {
        let nu = capacity(k, seed);
        let u = &u[..k];
        let shifted: Vec<f64> = u.iter().map(|x| x + c).collect();
        let lhs = ceu_evaluate(&nu, &shifted).unwrap();
        let rhs = ceu_evaluate(&nu, u).unwrap() + c;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn smooth_model_with_one_prior_and_identity_is_expected_utility(p in simplex(4), u in utils(4)) {
        let v = sa_evaluate(&[p.clone()], &[1.0], &PhiSpec::identity(), &u).unwrap();
        prop_assert_eq!(v, p.dot(&u));
    }
}

fn models(seed: u64) -> Vec<PreferenceModel> {
    let mut r = rng(seed);
    let k = 3;
    vec![
        PreferenceModel::Ceu(random_capacity(StateSpace::new(k).unwrap(), &mut r)),
        PreferenceModel::VpDivergence { divergence: DivergenceSpec::hellinger(), reference: SimplexPoint::uniform(k) },
        PreferenceModel::VpDivergence { divergence: DivergenceSpec::relative_entropy(), reference: SimplexPoint::uniform(k) },
        PreferenceModel::MeuPolytope { vertices: random_symmetric_polytope(k, 2, &mut r) },
        PreferenceModel::MeuLevelK(LevelKSpec::new(LevelKFamily::EntropyBall, 0.3, k).unwrap()),
        PreferenceModel::AlphaEpsilon { alpha: 0.3, epsilon: 0.4, reference: SimplexPoint::uniform(k) },
        PreferenceModel::Soeu { reference: SimplexPoint::uniform(k), phi: PhiSpec::parse("exp_neg(0.5)").unwrap() },
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_model_is_monotone(seed in any::<u64>(), u in utils(3), bump in prop::collection::vec(0.0f64..2.0, 3)) {
        let v: Vec<f64> = u.iter().zip(&bump).map(|(a, b)| a + b).collect();
        for m in models(seed) {
            let (lo, hi) = (m.evaluate(&u).unwrap(), m.evaluate(&v).unwrap());
            prop_assert!(lo <= hi + 1e-9, "{:?}: {} > {}", m, lo, hi);
        }
    }

    #[test]
    fn meu_is_vp_with_an_indicator_index(u in utils(3)) {
        // {q : q_i ≤ 1/2} is the hull of the permutations of (1/2, 1/2, 0).
        let verts = [[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]
            .map(|v| SimplexPoint::new(v.to_vec()).unwrap());
        let index = |q: &[f64]| if q.iter().all(|&x| x <= 0.5 + 1e-12) { 0.0 } else { f64::INFINITY };
        let vp = vp_evaluate(&index, &u, SimplexMode::Grid { resolution: 200 }).unwrap();
        prop_assert!((vp - meu_evaluate(&verts, &u).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn grid_and_descent_agree_on_convex_objectives(c in simplex(3), w in prop::collection::vec(0.5f64..2.0, 3)) {
        let f = |q: &[f64]| (0..3).map(|i| w[i] * (q[i] - c.as_slice()[i]).powi(2)).sum::<f64>() + q[0] * 0.3;
        let n = 100;
        let (_, g) = minimize_over_simplex(f, 3, SimplexMode::Grid { resolution: n }).unwrap();
        let (_, d) = minimize_over_simplex(f, 3, SimplexMode::Descent { steps: 5000, tol: 1e-12 }).unwrap();
        prop_assert!((g - d).abs() <= 2.0 / n as f64, "grid {} descent {}", g, d);
    }

    #[test]
    fn verdicts_ignore_a_common_shift(seed in any::<u64>(), shift in -20.0f64..20.0) {
        let nu = random_symmetric_capacity(StateSpace::new(3).unwrap(), SymmetricShape::Any, &mut rng(seed));
        let model = PreferenceModel::Ceu(nu);
        let base = SweepConfig::default();
        let moved = SweepConfig { levels: base.levels.iter().map(|l| l + shift).collect(), ..SweepConfig::default() };
        for order in [Order::Second, Order::Third] {
            let a = sweep(&model, order, &base).unwrap().verdict;
            let b = sweep(&model, order, &moved).unwrap().verdict;
            prop_assert_eq!(a.holds, b.holds);
        }
    }

    #[test]
    fn preference_gap_vanishes_with_the_transfer(seed in any::<u64>()) {
        let mut r = rng(seed);
        let nu = random_capacity(StateSpace::new(4).unwrap(), &mut r);
        let mut prev = f64::INFINITY;
        for ubar in [0.3, 0.1, 0.03, 0.01, 0.003] {
            let t = TestTriple::triple([0, 1, 2], [0.0, 1.0, 2.0], ubar, vec![0.0, 0.0, 0.0, -1.0]);
            let (a, b) = third_order_pair(&t).unwrap();
            let gap = (ceu_evaluate(&nu, b.utils()).unwrap() - ceu_evaluate(&nu, a.utils()).unwrap()).abs();
            // Choquet sums are Lipschitz with constant 1 in the sup norm.
            prop_assert!(gap <= 4.0 * ubar + 1e-12);
            prop_assert!(gap <= prev + 1e-12);
            prev = gap;
        }
    }

    #[test]
    fn interior_insurance_optima_satisfy_their_focs(
        which in 0usize..4,
        k in 2usize..=4,
        alpha in 0.1f64..0.5,
        beta in 0.0f64..0.6,
        eps in 0.0f64..0.3,
    ) {
        let d = [DivergenceSpec::relative_entropy(), DivergenceSpec::burg(), DivergenceSpec::chi2(), DivergenceSpec::hellinger()][which].clone();
        let p = InsuranceProblem { w: 2.0, loss: 1.0, eps, k, premium: Premium::quadratic(alpha, beta), model: InsuranceModel::Divergence(d) };
        let sol = solve(&p, eps > 0.0).unwrap();
        if !sol.boundary {
            prop_assert!(sol.max_residual() < 1e-6, "{:?}", sol.foc_residuals);
        }
    }
}

#[test]
fn neo_additive_measure_case() {
    let p = vec![0.1, 0.2, 0.3, 0.4];
    let nu = neo_additive(&NeoAdditiveParams { a: 0.0, b: 0.0, p: p.clone() }).unwrap();
    let m = Capacity::additive(&p).unwrap();
    for (x, y) in nu.values().iter().zip(m.values()) {
        assert!((x - y).abs() <= 1e-15);
    }
}
