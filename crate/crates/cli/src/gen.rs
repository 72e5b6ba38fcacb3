//! Deterministic random-instance generation.
//!
//! Values live on a quarter-unit grid and probabilities on small rational
//! weights, so support comparisons in the oracles are float-exact and a
//! seed reproduces a corpus byte for byte.

use crate::config::ResolvedConfig;
use anyhow::Result;
use bestguess::io::{DistRef, DistSpec, InstanceSpec, JointOutcomeSpec, ModelSpec};
use bestguess::rng::{self, Stream};
use rand::Rng;
use sha2::{Digest, Sha256};

/// What kind of corpus a suite consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    /// 1-bidder products of per-item discrete distributions.
    OneBidderProducts,
    /// n-bidder instances whose columns are independent (grids, iid models
    /// and explicit column-product joints).
    ItemIndependent,
    /// all n*k cells independent (grids and iid models only).
    FullyIndependent,
    /// anything discrete, including correlated joints.
    Arbitrary,
}

pub fn corpus_kind(suite: &str) -> CorpusKind {
    match suite {
        "theorem1" | "thm61" | "lemma61" | "lemma91" | "lemma92" | "transform" | "phi"
        | "p2" => CorpusKind::OneBidderProducts,
        "theorem2" | "theorem3" | "icir" => CorpusKind::ItemIndependent,
        "theorem4" => CorpusKind::FullyIndependent,
        _ => CorpusKind::Arbitrary,
    }
}

/// Random quarter-grid discrete distribution spec.
pub fn random_dist(stream: &mut Stream, atoms_max: usize, value_max: f64) -> DistSpec {
    let n = stream.gen_range(2..=atoms_max.max(2));
    let levels = (4.0 * value_max) as u32;
    let mut values: Vec<f64> = Vec::new();
    while values.len() < n {
        let v = stream.gen_range(0..=levels) as f64 / 4.0;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values.sort_by(f64::total_cmp);
    let weights: Vec<f64> = (0..n).map(|_| stream.gen_range(1..=8) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let fix: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[n - 1] += fix;
    DistSpec::Discrete {
        atoms: values.into_iter().zip(probs).collect(),
        shift_derived: false,
    }
}

/// Random exclusion thresholds on the half-unit grid (zero included).
pub fn random_beta(stream: &mut Stream, k: usize, value_max: f64) -> Vec<f64> {
    (0..k)
        .map(|_| stream.gen_range(0..=(2.0 * value_max) as u32) as f64 / 2.0)
        .collect()
}

fn one_bidder_product(stream: &mut Stream, cfg: &ResolvedConfig, idx: usize) -> InstanceSpec {
    let k = stream.gen_range(1..=cfg.k_max);
    let cells = vec![(0..k)
        .map(|_| DistRef::Inline(random_dist(stream, cfg.atoms_max, cfg.value_max)))
        .collect()];
    InstanceSpec {
        name: format!("{}-{idx:04}", cfg.suite),
        dists: Default::default(),
        model: ModelSpec::Grid { cells },
        item_independent: Some(true),
    }
}

fn independent_grid(stream: &mut Stream, cfg: &ResolvedConfig, idx: usize) -> InstanceSpec {
    let n = stream.gen_range(1..=cfg.n_max);
    let k = stream.gen_range(1..=cfg.k_max);
    let model = if stream.gen_bool(0.4) {
        ModelSpec::Iid {
            dist: DistRef::Inline(random_dist(stream, cfg.atoms_max, cfg.value_max)),
            n,
            k,
        }
    } else {
        ModelSpec::Grid {
            cells: (0..n)
                .map(|_| {
                    (0..k)
                        .map(|_| {
                            DistRef::Inline(random_dist(stream, cfg.atoms_max, cfg.value_max))
                        })
                        .collect()
                })
                .collect(),
        }
    };
    InstanceSpec {
        name: format!("{}-{idx:04}", cfg.suite),
        dists: Default::default(),
        model,
        item_independent: Some(true),
    }
}

/// A random n-bidder single-column joint: bidders may be correlated within
/// the column.
fn random_column(
    stream: &mut Stream,
    n: usize,
    atoms_max: usize,
    value_max: f64,
) -> Vec<(Vec<f64>, f64)> {
    let outcomes = stream.gen_range(2..=atoms_max.max(2) + 1);
    let levels = (4.0 * value_max) as u32;
    let mut cols: Vec<Vec<f64>> = Vec::new();
    while cols.len() < outcomes {
        let col: Vec<f64> = (0..n)
            .map(|_| stream.gen_range(0..=levels) as f64 / 4.0)
            .collect();
        if !cols.contains(&col) {
            cols.push(col);
        }
    }
    let weights: Vec<f64> = (0..outcomes).map(|_| stream.gen_range(1..=8) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let fix: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[outcomes - 1] += fix;
    cols.into_iter().zip(probs).collect()
}

/// Product of per-column joints: columns independent, bidders possibly
/// correlated within a column.
fn column_product_joint(stream: &mut Stream, cfg: &ResolvedConfig, idx: usize) -> InstanceSpec {
    let n = stream.gen_range(1..=cfg.n_max);
    let k = stream.gen_range(1..=cfg.k_max);
    let columns: Vec<Vec<(Vec<f64>, f64)>> = (0..k)
        .map(|_| random_column(stream, n, cfg.atoms_max, cfg.value_max))
        .collect();
    let mut outcomes: Vec<JointOutcomeSpec> = vec![JointOutcomeSpec {
        matrix: vec![vec![0.0; 0]; n],
        prob: 1.0,
    }];
    for col in &columns {
        let mut next = Vec::with_capacity(outcomes.len() * col.len());
        for base in &outcomes {
            for (col_vals, p) in col {
                let mut matrix = base.matrix.clone();
                for (i, row) in matrix.iter_mut().enumerate() {
                    row.push(col_vals[i]);
                }
                next.push(JointOutcomeSpec {
                    matrix,
                    prob: base.prob * p,
                });
            }
        }
        outcomes = next;
    }
    // renormalize the float product so the sum is exactly 1
    let total: f64 = outcomes.iter().map(|o| o.prob).sum();
    for o in outcomes.iter_mut() {
        o.prob /= total;
    }
    let fix: f64 = 1.0 - outcomes.iter().map(|o| o.prob).sum::<f64>();
    outcomes.last_mut().unwrap().prob += fix;
    InstanceSpec {
        name: format!("{}-{idx:04}", cfg.suite),
        dists: Default::default(),
        model: ModelSpec::Joint { outcomes },
        item_independent: Some(true),
    }
}

/// Fully correlated joint over a handful of random matrices.
fn correlated_joint(stream: &mut Stream, cfg: &ResolvedConfig, idx: usize) -> InstanceSpec {
    let n = stream.gen_range(1..=cfg.n_max);
    let k = stream.gen_range(1..=cfg.k_max);
    let levels = (4.0 * cfg.value_max) as u32;
    let count = stream.gen_range(2..=4);
    let mut matrices: Vec<Vec<Vec<f64>>> = Vec::new();
    while matrices.len() < count {
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..k)
                    .map(|_| stream.gen_range(0..=levels) as f64 / 4.0)
                    .collect()
            })
            .collect();
        if !matrices.contains(&m) {
            matrices.push(m);
        }
    }
    let weights: Vec<f64> = (0..count).map(|_| stream.gen_range(1..=8) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let fix: f64 = 1.0 - probs.iter().sum::<f64>();
    probs[count - 1] += fix;
    InstanceSpec {
        name: format!("{}-{idx:04}", cfg.suite),
        dists: Default::default(),
        model: ModelSpec::Joint {
            outcomes: matrices
                .into_iter()
                .zip(probs)
                .map(|(matrix, prob)| JointOutcomeSpec { matrix, prob })
                .collect(),
        },
        item_independent: None,
    }
}

/// Generates the corpus for a resolved config, deterministically from its
/// seed.
pub fn gen_corpus(cfg: &ResolvedConfig) -> Result<Vec<InstanceSpec>> {
    let kind = corpus_kind(&cfg.suite);
    let mut out = Vec::with_capacity(cfg.n_instances);
    for idx in 0..cfg.n_instances {
        let mut stream = rng::substream(cfg.seed, idx as u64);
        let spec = match kind {
            CorpusKind::OneBidderProducts => one_bidder_product(&mut stream, cfg, idx),
            CorpusKind::FullyIndependent => independent_grid(&mut stream, cfg, idx),
            CorpusKind::ItemIndependent => {
                if stream.gen_bool(0.3) && cfg.n_max > 1 {
                    column_product_joint(&mut stream, cfg, idx)
                } else {
                    independent_grid(&mut stream, cfg, idx)
                }
            }
            CorpusKind::Arbitrary => {
                if stream.gen_bool(0.4) {
                    correlated_joint(&mut stream, cfg, idx)
                } else {
                    independent_grid(&mut stream, cfg, idx)
                }
            }
        };
        out.push(spec);
    }
    Ok(out)
}

/// Canonical corpus hash: SHA-256 over the JSON of every instance spec.
pub fn corpus_hash(corpus: &[InstanceSpec]) -> String {
    let mut hasher = Sha256::new();
    for spec in corpus {
        hasher.update(serde_json::to_vec(spec).expect("serializable spec"));
        hasher.update(b"\n");
    }
    format!("{:x}", hasher.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    #[test]
    fn corpus_is_deterministic() {
        let cfg = ExperimentConfig::new("theorem2", 42).resolve().unwrap();
        let a = gen_corpus(&cfg).unwrap();
        let b = gen_corpus(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(corpus_hash(&a), corpus_hash(&b));
        let other = ExperimentConfig::new("theorem2", 43).resolve().unwrap();
        assert_ne!(corpus_hash(&a), corpus_hash(&gen_corpus(&other).unwrap()));
    }

    #[test]
    fn instances_build_and_respect_guards() {
        let cfg = ExperimentConfig::new("theorem2", 7).resolve().unwrap();
        for spec in gen_corpus(&cfg).unwrap().iter().take(50) {
            let inst = spec.build().unwrap();
            assert!(inst.joint.n() <= 2 && inst.joint.k() <= 2);
            assert!(inst.item_independent);
            // within the dominant-strategy oracle guard
            assert!(bestguess::oracle::rev_dsic(&inst.joint).is_ok());
        }
    }

    #[test]
    fn fully_independent_corpus_has_independent_cells() {
        let cfg = ExperimentConfig::new("theorem4", 3).resolve().unwrap();
        for spec in gen_corpus(&cfg).unwrap().iter().take(30) {
            let inst = spec.build().unwrap();
            assert!(inst.joint.is_bidder_independent());
            assert!(inst.joint.is_item_independent());
        }
    }
}
