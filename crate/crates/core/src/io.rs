//! File formats: distribution specs and instances (JSON or TOML),
//! mechanism descriptors, and JSON views of outcomes, menus, oracle
//! results and estimates.

use crate::dist::{DiscreteDist, Dist1D};
use crate::error::{Error, Result};
use crate::joint::{JointValuation, ValuationMatrix};
use crate::mech::TieRule;
use crate::menu::{Menu, MenuEntry};
use crate::oracle::{LpResult, OracleStatus};
use crate::reduction::MechDescriptor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Discrete {
        atoms: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        shift_derived: bool,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    TruncatedEqualRevenue {
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<f64>,
    },
    PointMass {
        value: f64,
    },
    IidMax {
        base: Box<DistSpec>,
        n: u32,
    },
}

impl DistSpec {
    pub fn build(&self) -> Result<Dist1D> {
        match self {
            DistSpec::Discrete {
                atoms,
                shift_derived,
            } => {
                let d = if *shift_derived {
                    DiscreteDist::new_shift_derived(atoms.clone())?
                } else {
                    DiscreteDist::new(atoms.clone())?
                };
                Ok(Dist1D::Discrete(d))
            }
            DistSpec::Uniform { lo, hi } => Dist1D::uniform(*lo, *hi),
            DistSpec::Exponential { rate } => Dist1D::exponential(*rate),
            DistSpec::TruncatedEqualRevenue { scale, truncation } => {
                Dist1D::equal_revenue(*scale, *truncation)
            }
            DistSpec::PointMass { value } => Dist1D::point_mass(*value),
            DistSpec::IidMax { base, n } => crate::derived::hat_of(&base.build()?, *n),
        }
    }
}

impl From<&Dist1D> for DistSpec {
    fn from(d: &Dist1D) -> Self {
        match d {
            Dist1D::Discrete(d) => DistSpec::Discrete {
                atoms: d.atoms().collect(),
                shift_derived: d.is_shift_derived(),
            },
            Dist1D::Uniform { lo, hi } => DistSpec::Uniform { lo: *lo, hi: *hi },
            Dist1D::Exponential { rate } => DistSpec::Exponential { rate: *rate },
            Dist1D::EqualRevenue { scale, truncation } => DistSpec::TruncatedEqualRevenue {
                scale: *scale,
                truncation: *truncation,
            },
            Dist1D::PointMass { value } => DistSpec::PointMass { value: *value },
            Dist1D::IidMax { base, n } => DistSpec::IidMax {
                base: Box::new(DistSpec::from(base.as_ref())),
                n: *n,
            },
        }
    }
}

/// Either an inline distribution or a reference into the named pool.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DistRef {
    Name(String),
    Inline(DistSpec),
}

impl DistRef {
    fn resolve(&self, pool: &BTreeMap<String, DistSpec>) -> Result<Dist1D> {
        match self {
            DistRef::Name(n) => pool
                .get(n)
                .ok_or_else(|| Error::InvalidInstance(format!("unknown distribution '{n}'")))?
                .build(),
            DistRef::Inline(spec) => spec.build(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JointOutcomeSpec {
    pub matrix: Vec<Vec<f64>>,
    pub prob: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Grid { cells: Vec<Vec<DistRef>> },
    Iid { dist: DistRef, n: usize, k: usize },
    Joint { outcomes: Vec<JointOutcomeSpec> },
}

/// An instance file: a valuation model plus metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dists: BTreeMap<String, DistSpec>,
    pub model: ModelSpec,
    /// Columns are mutually independent (set by generators that know the
    /// construction; recomputed when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_independent: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub joint: JointValuation,
    pub item_independent: bool,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<Instance> {
        let joint = match &self.model {
            ModelSpec::Grid { cells } => {
                let rows = cells
                    .iter()
                    .map(|row| row.iter().map(|c| c.resolve(&self.dists)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                JointValuation::grid(rows)?
            }
            ModelSpec::Iid { dist, n, k } => {
                JointValuation::iid(dist.resolve(&self.dists)?, *n, *k)?
            }
            ModelSpec::Joint { outcomes } => {
                let outcomes = outcomes
                    .iter()
                    .map(|o| Ok((ValuationMatrix::new(o.matrix.clone())?, o.prob)))
                    .collect::<Result<Vec<_>>>()?;
                JointValuation::joint(outcomes)?
            }
        };
        let item_independent = match self.item_independent {
            Some(flag) => flag,
            None => joint.is_item_independent(),
        };
        Ok(Instance {
            name: self.name.clone(),
            joint,
            item_independent,
        })
    }

    pub fn from_str_auto(text: &str) -> Result<InstanceSpec> {
        match serde_json::from_str(text) {
            Ok(spec) => Ok(spec),
            Err(json_err) => toml::from_str(text).map_err(|toml_err| {
                Error::InvalidInstance(format!(
                    "neither JSON ({json_err}) nor TOML ({toml_err})"
                ))
            }),
        }
    }
}

fn default_vickrey_tie() -> TieSpec {
    TieSpec::LowestIndex
}

fn default_spb_tie() -> TieSpec {
    TieSpec::UniformRandom
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum TieSpec {
    LowestIndex,
    UniformRandom,
}

impl From<TieSpec> for TieRule {
    fn from(t: TieSpec) -> TieRule {
        match t {
            TieSpec::LowestIndex => TieRule::LowestIndex,
            TieSpec::UniformRandom => TieRule::UniformRandom,
        }
    }
}

impl From<TieRule> for TieSpec {
    fn from(t: TieRule) -> TieSpec {
        match t {
            TieRule::LowestIndex => TieSpec::LowestIndex,
            TieRule::UniformRandom => TieSpec::UniformRandom,
        }
    }
}

/// CLI-facing mechanism descriptor, e.g. `{"mech":"spb","w":1.5}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mech", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MechSpec {
    Vickrey {
        #[serde(default = "default_vickrey_tie")]
        tie: TieSpec,
    },
    Spb {
        w: f64,
        #[serde(default = "default_spb_tie")]
        tie: TieSpec,
    },
    Dbgr,
    Bg,
    Dbg,
}

impl MechSpec {
    pub fn build(&self) -> MechDescriptor {
        match self {
            MechSpec::Vickrey { tie } => MechDescriptor::Vickrey { tie: (*tie).into() },
            MechSpec::Spb { w, tie } => MechDescriptor::Spb {
                w: *w,
                tie: (*tie).into(),
            },
            MechSpec::Dbgr => MechDescriptor::Dbgr,
            MechSpec::Bg => MechDescriptor::Bg,
            MechSpec::Dbg => MechDescriptor::Dbg,
        }
    }
}

impl From<&MechDescriptor> for MechSpec {
    fn from(d: &MechDescriptor) -> MechSpec {
        match d {
            MechDescriptor::Vickrey { tie } => MechSpec::Vickrey { tie: (*tie).into() },
            MechDescriptor::Spb { w, tie } => MechSpec::Spb {
                w: *w,
                tie: (*tie).into(),
            },
            MechDescriptor::Dbgr => MechSpec::Dbgr,
            MechDescriptor::Bg => MechSpec::Bg,
            MechDescriptor::Dbg => MechSpec::Dbg,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeJson {
    pub q: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub revenue: f64,
}

impl From<&crate::mech::Outcome> for OutcomeJson {
    fn from(o: &crate::mech::Outcome) -> Self {
        OutcomeJson {
            q: o.q.clone(),
            s: o.s.clone(),
            revenue: o.revenue(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MenuEntryJson {
    pub q: Vec<f64>,
    pub price: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MenuJson {
    pub entries: Vec<MenuEntryJson>,
}

impl From<&Menu> for MenuJson {
    fn from(m: &Menu) -> Self {
        MenuJson {
            entries: m
                .entries()
                .iter()
                .map(|e| MenuEntryJson {
                    q: e.alloc.clone(),
                    price: e.price,
                })
                .collect(),
        }
    }
}

impl MenuJson {
    pub fn build(&self, k: usize) -> Result<Menu> {
        Menu::new(
            k,
            self.entries
                .iter()
                .map(|e| MenuEntry {
                    alloc: e.q.clone(),
                    price: e.price,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpResultJson {
    pub value: f64,
    pub status: String,
    pub tolerance: f64,
    pub max_residual: f64,
}

impl From<&LpResult> for LpResultJson {
    fn from(r: &LpResult) -> Self {
        LpResultJson {
            value: r.value,
            status: match r.status {
                OracleStatus::Optimal => "optimal",
                OracleStatus::Infeasible => "infeasible",
                OracleStatus::Unbounded => "unbounded",
            }
            .to_string(),
            tolerance: r.tolerance,
            max_residual: r.max_residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dist_spec_round_trip() {
        let text = r#"{"kind": "discrete", "atoms": [[1, 0.5], [2, 0.5]]}"#;
        let spec: DistSpec = serde_json::from_str(text).unwrap();
        let d = spec.build().unwrap();
        assert_eq!(d.as_discrete().unwrap().values(), &[1.0, 2.0]);
        let back = serde_json::to_string(&DistSpec::from(&d)).unwrap();
        let respec: DistSpec = serde_json::from_str(&back).unwrap();
        assert_eq!(spec, respec);

        let u: DistSpec =
            serde_json::from_str(r#"{"kind": "uniform", "lo": 0, "hi": 1}"#).unwrap();
        assert_eq!(u.build().unwrap(), Dist1D::uniform(0.0, 1.0).unwrap());
    }

    #[test]
    fn instance_with_named_dists() {
        let text = r#"
        {
            "name": "demo",
            "dists": {"F": {"kind": "discrete", "atoms": [[1, 0.5], [2, 0.5]]}},
            "model": {"kind": "iid", "dist": "F", "n": 2, "k": 3}
        }"#;
        let spec = InstanceSpec::from_str_auto(text).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.joint.n(), 2);
        assert_eq!(inst.joint.k(), 3);
        assert!(inst.item_independent);
    }

    #[test]
    fn instance_toml() {
        let text = r#"
            name = "toml-demo"

            [model]
            kind = "iid"
            n = 2
            k = 2

            [model.dist]
            kind = "uniform"
            lo = 0.0
            hi = 1.0
        "#;
        let spec = InstanceSpec::from_str_auto(text).unwrap();
        let inst = spec.build().unwrap();
        assert_eq!(inst.joint.n(), 2);
    }

    #[test]
    fn mech_spec_defaults() {
        let v: MechSpec = serde_json::from_str(r#"{"mech": "vickrey"}"#).unwrap();
        assert_eq!(
            v.build(),
            MechDescriptor::Vickrey {
                tie: TieRule::LowestIndex
            }
        );
        let s: MechSpec = serde_json::from_str(r#"{"mech": "spb", "w": 1.5}"#).unwrap();
        assert_eq!(
            s.build(),
            MechDescriptor::Spb {
                w: 1.5,
                tie: TieRule::UniformRandom
            }
        );
        assert!(serde_json::from_str::<MechSpec>(r#"{"mech": "nope"}"#).is_err());
    }

    #[test]
    fn grid_with_inline_cells() {
        let text = r#"
        {
            "name": "grid",
            "model": {"kind": "grid", "cells": [
                [{"kind": "point-mass", "value": 1}, {"kind": "point-mass", "value": 2}],
                [{"kind": "point-mass", "value": 3}, {"kind": "point-mass", "value": 4}]
            ]}
        }"#;
        let inst = InstanceSpec::from_str_auto(text).unwrap().build().unwrap();
        assert_eq!(inst.joint.n(), 2);
        assert_eq!(inst.joint.k(), 2);
    }
}
