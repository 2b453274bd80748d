//! JSON documents for models, acts and insurance problems.
//!
//! ```
//! use ambkit::io::{parse_act, parse_model};
//! use ambkit::Preference;
//!
//! let m = parse_model(r#"{"variant": "ceu", "capacity": {"neo": {"a": 0.5, "b": 0.5, "P": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]}}}"#).unwrap();
//! let x = parse_act("[60, 60, 240]").unwrap();
//! assert!((m.evaluate(x.utils()).unwrap() - 90.0).abs() < 1e-9);
//! ```

use crate::acts::Act;
use crate::error::{Error, Result};
use crate::insurance::{InsuranceModel, InsuranceProblem, Premium};
use crate::models::{
    DivergenceSpec, LevelKFamily, LevelKSpec, PhiSpec, PreferenceModel, SmoothModel, VariationalModel,
};
use crate::numerics::{Interval, SimplexMode, SimplexPoint};
use crate::setfn::{neo_additive, Capacity, NeoAdditiveParams, StateSpace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapacityValues {
    /// All `2^k` values indexed by bitmask.
    Dense(Vec<f64>),
    /// Values keyed by decimal bitmask; missing events are filled with the
    /// largest value of a listed subset.
    Sparse(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CapacityDoc {
    Neo { neo: NeoAdditiveParams },
    Table { k: usize, values: CapacityValues },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexDoc {
    /// `c(q) = (θ/2) k Σ (q_i − 1/k)²`.
    Quadratic { theta: f64 },
    /// `c(q) = θ Σ q_i ln(k q_i)`.
    RelativeEntropy { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ModelDoc {
    Ceu {
        capacity: CapacityDoc,
    },
    VpDivergence {
        divergence: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        /// Reference prior; uniform on `k` states when absent.
        #[serde(default, rename = "P", skip_serializing_if = "Option::is_none")]
        p: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
    },
    VpGeneric {
        k: usize,
        index: IndexDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
    },
    MeuPolytope {
        vertices: Vec<Vec<f64>>,
    },
    MeuLevelk {
        k: usize,
        /// `entropy`, `entropy_ball` or `pnorm(p)`.
        f: String,
        #[serde(rename = "K")]
        bound: f64,
    },
    AlphaEpsilon {
        alpha: f64,
        epsilon: f64,
        #[serde(rename = "P")]
        p: Vec<f64>,
    },
    Sa {
        support: Vec<Vec<f64>>,
        /// Uniform when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        phi: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
        /// Replace the support by its permutation orbits with uniform weights.
        #[serde(default)]
        symmetrize: bool,
    },
    Soeu {
        #[serde(rename = "P")]
        p: Vec<f64>,
        phi: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
}

fn phi_of(name: &str, domain: Option<[f64; 2]>) -> Result<PhiSpec> {
    let phi = PhiSpec::parse(name)?;
    let phi = match domain {
        Some([lo, hi]) => phi.with_domain(Interval::new(lo, hi)?)?,
        None => phi,
    };
    phi.check_increasing()?;
    Ok(phi)
}

fn points(v: Vec<Vec<f64>>) -> Result<Vec<SimplexPoint>> {
    v.into_iter().map(SimplexPoint::new).collect()
}

fn capacity_of(doc: CapacityDoc) -> Result<Capacity> {
    match doc {
        CapacityDoc::Neo { neo } => neo_additive(&neo),
        CapacityDoc::Table { k, values } => {
            let space = StateSpace::new(k)?;
            match values {
                CapacityValues::Dense(v) => Capacity::new(space, v),
                CapacityValues::Sparse(map) => {
                    let n = space.num_events();
                    let mut v: Vec<Option<f64>> = vec![None; n];
                    v[0] = Some(0.0);
                    v[n - 1] = Some(1.0);
                    for (key, val) in map {
                        let m: usize = key
                            .trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("capacity key {key:?} is not a decimal bitmask")))?;
                        if m >= n {
                            return Err(Error::Parse(format!("bitmask {m} exceeds 2^{k} − 1")));
                        }
                        if (m == 0 && val != 0.0) || (m == n - 1 && val != 1.0) {
                            return Err(Error::Domain(format!("ν({m}) = {val} conflicts with normalization")));
                        }
                        v[m] = Some(val);
                    }
                    let mut out = vec![0.0; n];
                    for m in 0..n {
                        out[m] = match v[m] {
                            Some(x) => x,
                            None => (0..k)
                                .filter(|i| m >> i & 1 == 1)
                                .map(|i| out[m & !(1 << i)])
                                .fold(0.0, f64::max),
                        };
                    }
                    Capacity::new(space, out)
                }
            }
        }
    }
}

fn levelk_family(s: &str) -> Result<LevelKFamily> {
    let s = s.trim();
    match s {
        "entropy" => Ok(LevelKFamily::Entropy),
        "entropy_ball" => Ok(LevelKFamily::EntropyBall),
        _ if s.starts_with("pnorm(") && s.ends_with(')') => s[6..s.len() - 1]
            .trim()
            .parse()
            .map(LevelKFamily::PNorm)
            .map_err(|e| Error::Parse(format!("{s:?}: {e}"))),
        _ => Err(Error::Parse(format!("unknown level-K family {s:?}"))),
    }
}

impl ModelDoc {
    pub fn build(self) -> Result<PreferenceModel> {
        Ok(match self {
            ModelDoc::Ceu { capacity } => PreferenceModel::Ceu(capacity_of(capacity)?),
            ModelDoc::VpDivergence { divergence, theta, p, k } => {
                let reference = match (p, k) {
                    (Some(p), _) => SimplexPoint::new(p)?,
                    (None, Some(k)) => SimplexPoint::uniform(k),
                    (None, None) => return Err(Error::Parse("vp_divergence needs P or k".into())),
                };
                let divergence = DivergenceSpec::by_name(&divergence, theta)?;
                divergence.self_check()?;
                PreferenceModel::VpDivergence { divergence, reference }
            }
            ModelDoc::VpGeneric { k, index, grid } => {
                let kf = k as f64;
                let c: crate::models::IndexFn = match index {
                    IndexDoc::Quadratic { theta } => {
                        Arc::new(move |q: &[f64]| 0.5 * theta * kf * q.iter().map(|x| (x - 1.0 / kf).powi(2)).sum::<f64>())
                    }
                    IndexDoc::RelativeEntropy { theta } => Arc::new(move |q: &[f64]| {
                        theta * q.iter().filter(|&&x| x > 0.0).map(|x| x * (kf * x).ln()).sum::<f64>()
                    }),
                };
                let mode = SimplexMode::Grid { resolution: grid.unwrap_or(400) };
                PreferenceModel::VpGeneric(VariationalModel::new(k, c, mode))
            }
            ModelDoc::MeuPolytope { vertices } => {
                let vertices = points(vertices)?;
                if vertices.is_empty() {
                    return Err(Error::component("meu_polytope", "empty vertex list"));
                }
                PreferenceModel::MeuPolytope { vertices }
            }
            ModelDoc::MeuLevelk { k, f, bound } => PreferenceModel::MeuLevelK(LevelKSpec::new(levelk_family(&f)?, bound, k)?),
            ModelDoc::AlphaEpsilon { alpha, epsilon, p } => {
                if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&epsilon) {
                    return Err(Error::component("alpha_epsilon", "α and ε must lie in [0, 1]"));
                }
                PreferenceModel::AlphaEpsilon { alpha, epsilon, reference: SimplexPoint::new(p)? }
            }
            ModelDoc::Sa { support, weights, phi, domain, symmetrize } => {
                let support = points(support)?;
                let phi = phi_of(&phi, domain)?;
                if symmetrize {
                    PreferenceModel::Smooth(SmoothModel::symmetrized(&support, phi)?)
                } else {
                    let n = support.len();
                    let weights = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
                    PreferenceModel::Smooth(SmoothModel::new(support, weights, phi)?)
                }
            }
            ModelDoc::Soeu { p, phi, domain } => {
                PreferenceModel::Soeu { reference: SimplexPoint::new(p)?, phi: phi_of(&phi, domain)? }
            }
        })
    }
}

pub fn parse_model(json: &str) -> Result<PreferenceModel> {
    let doc: ModelDoc = serde_json::from_str(json).map_err(|e| Error::Parse(format!("model: {e}")))?;
    doc.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ActDoc {
    Bare(Vec<f64>),
    Wrapped { utils: Vec<f64> },
}

/// An act as `[u1, …]` or `{"utils": [u1, …]}`.
pub fn parse_act(json: &str) -> Result<Act> {
    let doc: ActDoc = serde_json::from_str(json).map_err(|e| Error::Parse(format!("act: {e}")))?;
    match doc {
        ActDoc::Bare(u) | ActDoc::Wrapped { utils: u } => Act::new(u),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PremiumDoc {
    pub alpha: f64,
    #[serde(default)]
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InsuranceModelDoc {
    Divergence {
        divergence: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
    },
    Soeu {
        phi: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsuranceDoc {
    pub w: f64,
    pub loss: f64,
    pub k: usize,
    pub premium: PremiumDoc,
    pub model: InsuranceModelDoc,
    /// Noise levels for the comparative static.
    #[serde(default)]
    pub eps_grid: Vec<f64>,
}

impl InsuranceDoc {
    pub fn build(&self) -> Result<InsuranceProblem> {
        let model = match &self.model {
            InsuranceModelDoc::Divergence { divergence, theta } => {
                InsuranceModel::Divergence(DivergenceSpec::by_name(divergence, *theta)?)
            }
            InsuranceModelDoc::Soeu { phi, domain } => InsuranceModel::Soeu(phi_of(phi, *domain)?),
        };
        let p = InsuranceProblem {
            w: self.w,
            loss: self.loss,
            eps: 0.0,
            k: self.k,
            premium: Premium::quadratic(self.premium.alpha, self.premium.beta),
            model,
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn parse_insurance(json: &str) -> Result<InsuranceDoc> {
    serde_json::from_str(json).map_err(|e| Error::Parse(format!("insurance problem: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Preference;

    #[test]
    fn sparse_capacity_is_completed() {
        let m = parse_model(r#"{"variant":"ceu","capacity":{"k":3,"values":{"1":0.2,"3":0.5}}}"#).unwrap();
        let PreferenceModel::Ceu(nu) = m else { panic!() };
        assert_eq!(nu.values(), &[0.0, 0.2, 0.0, 0.5, 0.0, 0.2, 0.0, 1.0]);
    }

    #[test]
    fn bad_documents() {
        assert!(matches!(parse_model(r#"{"variant":"nope"}"#), Err(Error::Parse(_))));
        assert!(parse_model(r#"{"variant":"ceu","capacity":{"k":2,"values":[0,0.7,0.2,0.5]}}"#).is_err());
        assert!(parse_act("[1, \"x\"]").is_err());
        assert!(parse_model(r#"{"variant":"meu_levelk","k":3,"f":"pnorm(1)","K":1}"#).is_err());
    }

    #[test]
    fn model_round_trips() {
        // A constant act of 1 is worth 1, or φ(1) for the smooth models.
        let docs = [
            (r#"{"variant":"vp_divergence","divergence":"cressie_read","theta":0.5,"k":3}"#, 1.0),
            (r#"{"variant":"meu_polytope","vertices":[[1,0,0],[0,1,0],[0,0,1]]}"#, 1.0),
            (r#"{"variant":"meu_levelk","k":3,"f":"entropy_ball","K":0.1}"#, 1.0),
            (r#"{"variant":"alpha_epsilon","alpha":0.7,"epsilon":0.2,"P":[0.5,0.25,0.25]}"#, 1.0),
            (r#"{"variant":"sa","support":[[0.6,0.3,0.1]],"phi":"exp_neg(1)","symmetrize":true}"#, -(-1.0f64).exp()),
            (r#"{"variant":"soeu","P":[0.5,0.5],"phi":"log","domain":[0.5,10]}"#, 0.0),
            (r#"{"variant":"vp_generic","k":3,"index":{"kind":"quadratic","theta":1.0},"grid":60}"#, 1.0),
        ];
        for (d, want) in docs {
            let m = parse_model(d).unwrap_or_else(|e| panic!("{d}: {e}"));
            let u = vec![1.0; m.k()];
            assert!((m.evaluate(&u).unwrap() - want).abs() < 1e-6, "{d}");
        }
    }

    #[test]
    fn insurance_document() {
        let d = parse_insurance(
            r#"{"w":2,"loss":1,"k":2,"premium":{"alpha":0.3,"beta":0.3},"model":{"divergence":"hellinger"},"eps_grid":[0,0.1]}"#,
        )
        .unwrap();
        assert!(matches!(d.build().unwrap().model, InsuranceModel::Divergence(_)));
        let d = parse_insurance(r#"{"w":2,"loss":1,"k":2,"premium":{"alpha":0.3},"model":{"phi":"log"}}"#).unwrap();
        assert!(matches!(d.build().unwrap().model, InsuranceModel::Soeu(_)));
    }
}
