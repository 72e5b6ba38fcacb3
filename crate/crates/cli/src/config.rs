//! Experiment configuration: suite name, corpus parameters, seeds,
//! tolerances and output paths. Every report embeds the fully resolved
//! config so any instance can be regenerated in isolation.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SUITES: &[&str] = &[
    "theorem1", "theorem2", "theorem3", "theorem4", "theorem5", "thm51", "thm53", "thm61",
    "thm91", "lemma61", "lemma91", "lemma92", "fact7", "p2", "transform", "phi", "icir",
    "mcexact",
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: String,
    /// Root seed; all corpus and Monte Carlo randomness derives from it.
    pub seed: u64,
    #[serde(default)]
    pub n_instances: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub atoms_max: Option<usize>,
    #[serde(default)]
    pub value_max: Option<f64>,
    #[serde(default)]
    pub betas_per_instance: Option<usize>,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub skip_budget: Option<usize>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Config with every optional field pinned; this is what reports embed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ResolvedConfig {
    pub suite: String,
    pub seed: u64,
    pub n_instances: usize,
    pub n_max: usize,
    pub k_max: usize,
    pub atoms_max: usize,
    pub value_max: f64,
    pub betas_per_instance: usize,
    pub mc_samples: usize,
    pub tolerance: f64,
    pub skip_budget: usize,
}

impl ExperimentConfig {
    pub fn new(suite: &str, seed: u64) -> Self {
        ExperimentConfig {
            suite: suite.to_string(),
            seed,
            n_instances: None,
            n_max: None,
            k_max: None,
            atoms_max: None,
            value_max: None,
            betas_per_instance: None,
            mc_samples: None,
            tolerance: None,
            skip_budget: None,
            out_dir: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = if path.extension().and_then(|e| e.to_str()) == Some("toml")
        {
            toml::from_str(&text).context("parsing TOML config")?
        } else {
            serde_json::from_str(&text).context("parsing JSON config")?
        };
        Ok(cfg)
    }

    /// Pins all defaults for the suite. Unknown suites are rejected here.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if !SUITES.contains(&self.suite.as_str()) {
            bail!(
                "unknown suite '{}'; expected one of {}",
                self.suite,
                SUITES.join(", ")
            );
        }
        let d = SuiteDefaults::for_suite(&self.suite);
        Ok(ResolvedConfig {
            suite: self.suite.clone(),
            seed: self.seed,
            n_instances: self.n_instances.unwrap_or(d.n_instances),
            n_max: self.n_max.unwrap_or(d.n_max),
            k_max: self.k_max.unwrap_or(d.k_max),
            atoms_max: self.atoms_max.unwrap_or(d.atoms_max),
            value_max: self.value_max.unwrap_or(4.0),
            betas_per_instance: self.betas_per_instance.unwrap_or(d.betas_per_instance),
            mc_samples: self.mc_samples.unwrap_or(d.mc_samples),
            tolerance: self.tolerance.unwrap_or(1e-9),
            skip_budget: self.skip_budget.unwrap_or(d.skip_budget),
        })
    }
}

struct SuiteDefaults {
    n_instances: usize,
    n_max: usize,
    k_max: usize,
    atoms_max: usize,
    betas_per_instance: usize,
    mc_samples: usize,
    skip_budget: usize,
}

impl SuiteDefaults {
    fn for_suite(suite: &str) -> Self {
        let mut d = SuiteDefaults {
            n_instances: 200,
            n_max: 2,
            k_max: 2,
            atoms_max: 2,
            betas_per_instance: 1,
            mc_samples: 100_000,
            skip_budget: 0,
        };
        match suite {
            "theorem1" | "thm61" => {
                d.n_instances = 500;
                d.n_max = 1;
                d.k_max = 3;
                d.atoms_max = 3;
            }
            "lemma61" | "transform" | "phi" => {
                d.n_instances = 200;
                d.n_max = 1;
                d.k_max = 3;
                d.atoms_max = 3;
            }
            "lemma91" => {
                d.n_instances = 200;
                d.n_max = 1;
                d.k_max = 3;
                d.atoms_max = 3;
            }
            "lemma92" => {
                d.n_instances = 200;
                d.n_max = 1;
                d.k_max = 2;
                d.atoms_max = 3;
            }
            "thm91" => {
                d.betas_per_instance = 5;
            }
            "theorem5" => {
                d.mc_samples = 20_000;
                d.n_max = 3;
                d.k_max = 6;
                // large dominant-strategy LPs are skipped, not failed
                d.skip_budget = 40;
            }
            "fact7" => {
                d.n_max = 100;
                d.k_max = 100;
            }
            "p2" => {
                d.n_instances = 1000;
            }
            "icir" => {
                d.n_instances = 120;
            }
            "mcexact" => {
                d.n_instances = 8;
                d.mc_samples = 100_000;
            }
            _ => {}
        }
        d
    }
}

/// Default output directory: `$BG_OUT_DIR` or `./out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("BG_OUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_fills_suite_defaults() {
        let cfg = ExperimentConfig::new("theorem1", 42).resolve().unwrap();
        assert_eq!(cfg.n_instances, 500);
        assert_eq!(cfg.n_max, 1);
        assert_eq!(cfg.tolerance, 1e-9);
        assert!(ExperimentConfig::new("nope", 1).resolve().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::new("p2", 7);
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
