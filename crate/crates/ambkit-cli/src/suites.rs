//! Cross-checks of behavioral verdicts against the analytic conditions
//! that characterize them, one row per instance.

use crate::output::{g12, Table};
use ambkit::attitudes::{
    check_prior_set_vertex_condition, ceu_characterization_crosscheck, default_conjugate_domain,
    divergence_prudence_check, phi_attitude_check, test_ambiguity_aversion, test_ambiguity_prudence, SweepConfig,
};
use ambkit::models::{DivergenceSpec, PhiSpec, SmoothModel};
use ambkit::random::{random_convex_ordered_point, random_symmetric_capacity, random_symmetric_polytope, rng, SymmetricShape};
use ambkit::{Interval, Order, PreferenceModel, SimplexPoint, StateSpace};
use anyhow::Result;
use rand::Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Ceu,
    Vp,
    Meu,
    Sa,
    Soeu,
    All,
}

pub struct Row {
    pub suite: &'static str,
    pub instance: String,
    pub check: &'static str,
    pub expected: bool,
    pub observed: bool,
    pub detail: String,
}

impl Row {
    pub fn agree(&self) -> bool {
        self.expected == self.observed
    }
}

pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    pub instances: usize,
}

fn sweep_cfg(s: &Settings) -> SweepConfig {
    SweepConfig { tol: s.tol, ..SweepConfig::default() }
}

fn ceu(s: &Settings) -> Result<Vec<Row>> {
    let mut r = rng(s.seed);
    let mut jobs = Vec::new();
    for k in 3..=5 {
        let space = StateSpace::new(k)?;
        for i in 0..s.instances {
            let shape = [SymmetricShape::Any, SymmetricShape::Convex, SymmetricShape::ConvexIncrements][i % 3];
            jobs.push((k, i, random_symmetric_capacity(space, shape, &mut r)));
        }
    }
    let cfg = sweep_cfg(s);
    let rows: Vec<Vec<Row>> = jobs
        .par_iter()
        .map(|(k, i, nu)| {
            let mut out = Vec::new();
            for (order, check) in [(Order::Second, "aversion_vs_second_derivative"), (Order::Third, "prudence_vs_third_derivative")] {
                let c = ceu_characterization_crosscheck(nu, order, &cfg)?;
                out.push(Row {
                    suite: "ceu",
                    instance: format!("k{k}_{i}"),
                    check,
                    expected: c.derivative_nonneg,
                    observed: c.behavioral_holds,
                    detail: format!("min_derivative={}", g12(c.min_derivative)),
                });
            }
            Ok(out)
        })
        .collect::<ambkit::Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn divergences() -> Result<Vec<DivergenceSpec>> {
    let mut v = vec![DivergenceSpec::relative_entropy(), DivergenceSpec::burg(), DivergenceSpec::chi2(), DivergenceSpec::hellinger()];
    for t in [-1.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
        v.push(DivergenceSpec::cressie_read(t)?);
    }
    Ok(v)
}

fn vp(s: &Settings) -> Result<Vec<Row>> {
    let cfg = sweep_cfg(s);
    let rows: Vec<Vec<Row>> = divergences()?
        .par_iter()
        .map(|d| {
            let model = PreferenceModel::VpDivergence { divergence: d.clone(), reference: SimplexPoint::uniform(3) };
            let name = format!("{d:?}");
            let prudent = divergence_prudence_check(d, default_conjugate_domain(d))?;
            let a = test_ambiguity_aversion(&model, &cfg)?;
            let p = test_ambiguity_prudence(&model, &cfg)?;
            Ok(vec![
                Row { suite: "vp", instance: name.clone(), check: "aversion_always", expected: true, observed: a.holds, detail: format!("min_margin={}", g12(a.min_margin)) },
                Row { suite: "vp", instance: name, check: "prudence_vs_gstar_third", expected: prudent, observed: p.holds, detail: format!("min_margin={}", g12(p.min_margin)) },
            ])
        })
        .collect::<ambkit::Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn meu(s: &Settings) -> Result<Vec<Row>> {
    let cfg = sweep_cfg(s);
    let mut r = rng(s.seed ^ 0x6d6575);
    let mut polys = Vec::new();
    for i in 0..s.instances.min(20) {
        let k = 3 + i % 2;
        polys.push((k, random_symmetric_polytope(k, 1 + i % 3, &mut r)));
    }
    let mut rows: Vec<Row> = polys
        .par_iter()
        .enumerate()
        .map(|(i, (k, vertices))| {
            let model = PreferenceModel::MeuPolytope { vertices: vertices.clone() };
            let v = check_prior_set_vertex_condition(vertices)?;
            let p = test_ambiguity_prudence(&model, &cfg)?;
            let a = test_ambiguity_aversion(&model, &cfg)?;
            Ok(vec![
                Row { suite: "meu", instance: format!("polytope{i}_k{k}"), check: "vertex_condition", expected: true, observed: v.ok, detail: String::new() },
                Row { suite: "meu", instance: format!("polytope{i}_k{k}"), check: "prudence_given_vertex_condition", expected: true, observed: p.holds, detail: format!("min_margin={}", g12(p.min_margin)) },
                Row { suite: "meu", instance: format!("polytope{i}_k{k}"), check: "aversion_symmetric_set", expected: true, observed: a.holds, detail: format!("min_margin={}", g12(a.min_margin)) },
            ])
        })
        .collect::<ambkit::Result<Vec<Vec<Row>>>>()?
        .into_iter()
        .flatten()
        .collect();
    let half = [SimplexPoint::new(vec![0.5, 0.5, 0.0])?];
    rows.push(Row {
        suite: "meu",
        instance: "half_half_zero".into(),
        check: "vertex_condition",
        expected: false,
        observed: check_prior_set_vertex_condition(&half)?.ok,
        detail: String::new(),
    });
    for (alpha, eps) in [(1.0, 0.3), (0.5, 0.3), (0.8, 0.6)] {
        let model = PreferenceModel::AlphaEpsilon { alpha, epsilon: eps, reference: SimplexPoint::uniform(4) };
        let a = test_ambiguity_aversion(&model, &cfg)?;
        let p = test_ambiguity_prudence(&model, &cfg)?;
        let name = format!("alpha{alpha}_eps{eps}");
        rows.push(Row { suite: "meu", instance: name.clone(), check: "contamination_aversion_iff_alpha_one", expected: alpha == 1.0, observed: a.holds, detail: String::new() });
        rows.push(Row { suite: "meu", instance: name, check: "contamination_prudence", expected: true, observed: p.holds, detail: String::new() });
    }
    Ok(rows)
}

/// The transforms of the smooth-model checks with the domain they are tested on.
pub fn phi_cases() -> Result<Vec<(PhiSpec, Interval)>> {
    Ok(vec![
        (PhiSpec::parse("log")?.with_domain(Interval::new(0.5, 10.0)?)?, Interval::new(0.5, 10.0)?),
        (PhiSpec::parse("exp_neg(1)")?, Interval::new(-3.0, 6.0)?),
        (PhiSpec::parse("poly(0,1,0,-0.05)")?.with_domain(Interval::new(0.0, 2.0)?)?, Interval::new(0.0, 2.0)?),
        (PhiSpec::identity(), Interval::new(-3.0, 6.0)?),
    ])
}

fn smooth(s: &Settings, soeu: bool) -> Result<Vec<Row>> {
    let suite = if soeu { "soeu" } else { "sa" };
    let mut r = rng(s.seed ^ 0x7361);
    let k = 3;
    let mut supports = Vec::new();
    for _ in 0..if soeu { 1 } else { 3 } {
        let n = r.gen_range(1..=2);
        supports.push((0..n).map(|_| random_convex_ordered_point(k, &mut r)).collect::<Vec<_>>());
    }
    let mut rows = Vec::new();
    for (phi, dom) in phi_cases()? {
        let att = phi_attitude_check(&phi, dom)?;
        let cfg = SweepConfig { domain: Some(dom), ..sweep_cfg(s) };
        for (j, base) in supports.iter().enumerate() {
            let model = if soeu {
                PreferenceModel::Soeu { reference: SimplexPoint::uniform(k), phi: phi.clone() }
            } else {
                PreferenceModel::Smooth(SmoothModel::symmetrized(base, phi.clone())?)
            };
            let name = format!("{}_{j}", phi.name());
            let a = test_ambiguity_aversion(&model, &cfg)?;
            let p = test_ambiguity_prudence(&model, &cfg)?;
            rows.push(Row { suite, instance: name.clone(), check: "aversion_vs_concavity", expected: att.concave, observed: a.holds, detail: format!("min_margin={}", g12(a.min_margin)) });
            rows.push(Row { suite, instance: name, check: "prudence_vs_phi_third", expected: att.third_nonneg, observed: p.holds, detail: format!("min_margin={}", g12(p.min_margin)) });
        }
    }
    Ok(rows)
}

pub fn run(suite: Suite, s: &Settings) -> Result<Table> {
    let mut rows = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Ceu {
        rows.extend(ceu(s)?);
    }
    if all || suite == Suite::Vp {
        rows.extend(vp(s)?);
    }
    if all || suite == Suite::Meu {
        rows.extend(meu(s)?);
    }
    if all || suite == Suite::Sa {
        rows.extend(smooth(s, false)?);
    }
    if all || suite == Suite::Soeu {
        rows.extend(smooth(s, true)?);
    }
    let mut t = Table::new("theorems", &["suite", "instance", "check", "expected", "observed", "agree", "detail"]);
    for r in rows {
        let agree = r.agree();
        t.push(vec![
            r.suite.into(),
            r.instance,
            r.check.into(),
            r.expected.to_string(),
            r.observed.to_string(),
            agree.to_string(),
            r.detail,
        ]);
    }
    Ok(t)
}
