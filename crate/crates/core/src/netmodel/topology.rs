//! Hierarchical machine model.
//!
//! A topology is a tree whose leaves are nodes (machines) with a number of
//! process slots and whose inner vertices are switches. Every switch is tagged
//! with a level; level 0 prices messages between two ranks on the same node.
//! A message between different nodes pays the parameters of the level of the
//! deepest switch both nodes sit under.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::time::ModelTime;

/// Hockney parameters: a message of `n` bytes costs `alpha + n * beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HockneyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl HockneyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let params = Self { alpha, beta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite()
            && self.alpha >= 0.0
            && self.beta.is_finite()
            && self.beta >= 0.0)
        {
            return Err(Error::InvalidTopology(format!(
                "alpha and beta must be finite and non-negative, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    pub fn alpha_exact(&self) -> ModelTime {
        ModelTime::from_f64(self.alpha)
    }

    pub fn beta_exact(&self) -> ModelTime {
        ModelTime::from_f64(self.beta)
    }

    /// Exact cost of one message of `bytes` bytes.
    pub fn message_cost(&self, bytes: u64) -> ModelTime {
        &self.alpha_exact() + &(&self.beta_exact() * bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(default)]
    pub name: String,
    pub alpha: f64,
    pub beta: f64,
}

impl Level {
    pub fn new(name: &str, alpha: f64, beta: f64) -> Self {
        Self {
            name: name.to_string(),
            alpha,
            beta,
        }
    }

    pub fn params(&self) -> HockneyParams {
        HockneyParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// Tree description as written in config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeSpec {
    Switch {
        level: usize,
        children: Vec<TreeSpec>,
    },
    Node {
        slots: usize,
        /// Shorthand for this many identical sibling nodes.
        #[serde(default = "one", skip_serializing_if = "is_one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

fn is_one(n: &usize) -> bool {
    *n == 1
}

/// Config-file form of a [`Topology`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    #[serde(default)]
    pub name: String,
    pub levels: Vec<Level>,
    pub tree: TreeSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Machine {
    pub slots: usize,
    /// Switches from the root down to this machine's parent.
    path: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    name: String,
    levels: Vec<Level>,
    /// Level of every switch, indexed by switch id.
    switch_levels: Vec<usize>,
    machines: Vec<Machine>,
    spec: TreeSpec,
}

impl Topology {
    pub fn from_spec(spec: TopologySpec) -> Result<Self> {
        if spec.levels.is_empty() {
            return Err(Error::InvalidTopology(
                "at least one level is required".into(),
            ));
        }
        for level in &spec.levels {
            level.params().validate()?;
        }
        let mut topology = Topology {
            name: spec.name,
            levels: spec.levels,
            switch_levels: Vec::new(),
            machines: Vec::new(),
            spec: spec.tree.clone(),
        };
        let mut path = Vec::new();
        topology.flatten(&spec.tree, &mut path, usize::MAX)?;
        if topology.machines.is_empty() {
            return Err(Error::InvalidTopology("the tree contains no nodes".into()));
        }
        Ok(topology)
    }

    fn flatten(
        &mut self,
        tree: &TreeSpec,
        path: &mut Vec<usize>,
        parent_level: usize,
    ) -> Result<()> {
        match tree {
            TreeSpec::Node { slots, count } => {
                if *slots == 0 {
                    return Err(Error::InvalidTopology(
                        "every node needs at least one slot".into(),
                    ));
                }
                for _ in 0..*count {
                    self.machines.push(Machine {
                        slots: *slots,
                        path: path.clone(),
                    });
                }
            }
            TreeSpec::Switch { level, children } => {
                if *level >= self.levels.len() {
                    return Err(Error::InvalidTopology(format!(
                        "switch level {level} is undefined ({} levels configured)",
                        self.levels.len()
                    )));
                }
                if *level > parent_level {
                    return Err(Error::InvalidTopology(format!(
                        "switch level {level} sits below a switch of level {parent_level}"
                    )));
                }
                let id = self.switch_levels.len();
                self.switch_levels.push(*level);
                path.push(id);
                for child in children {
                    self.flatten(child, path, *level)?;
                }
                path.pop();
            }
        }
        Ok(())
    }

    /// One node holding `slots` slots; every message pays `params`.
    pub fn uniform(slots: usize, params: HockneyParams) -> Self {
        Self::from_spec(TopologySpec {
            name: "uniform".into(),
            levels: vec![Level::new("uniform", params.alpha, params.beta)],
            tree: TreeSpec::Node {
                slots: slots.max(1),
                count: 1,
            },
        })
        .expect("uniform topology is always valid")
    }

    /// Two-tier tree of the Yahoo cluster: one leaf switch with 5 nodes, one with
    /// 11, joined by a core switch. Nodes have 8 cores and 16 slots (two ranks
    /// per core, 256 in total).
    ///
    /// The α/β values are illustrative placeholders, not measurements; the core
    /// level is 4x the leaf level in both terms.
    pub fn yahoo() -> Self {
        Self::from_spec(TopologySpec {
            name: "yahoo".into(),
            levels: vec![
                Level::new("node", 0.5, 0.000_25),
                Level::new("leaf", 25.0, 0.008),
                Level::new("core", 100.0, 0.032),
            ],
            tree: TreeSpec::Switch {
                level: 2,
                children: vec![
                    TreeSpec::Switch {
                        level: 1,
                        children: vec![TreeSpec::Node {
                            slots: 16,
                            count: 5,
                        }],
                    },
                    TreeSpec::Switch {
                        level: 1,
                        children: vec![TreeSpec::Node {
                            slots: 16,
                            count: 11,
                        }],
                    },
                ],
            },
        })
        .expect("preset is valid")
    }

    /// Flat topology of the Cervino cluster: 5 nodes of 32 cores (64 slots) on
    /// one switch. Placeholder α/β values.
    pub fn cervino() -> Self {
        Self::from_spec(TopologySpec {
            name: "cervino".into(),
            levels: vec![
                Level::new("node", 0.5, 0.000_25),
                Level::new("switch", 10.0, 0.000_2),
            ],
            tree: TreeSpec::Switch {
                level: 1,
                children: vec![TreeSpec::Node {
                    slots: 64,
                    count: 5,
                }],
            },
        })
        .expect("preset is valid")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "yahoo" => Some(Self::yahoo()),
            "cervino" => Some(Self::cervino()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Index of the topmost (core) level.
    pub fn core_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn machines(&self) -> &[Machine] {
        &self.machines
    }

    pub fn num_nodes(&self) -> usize {
        self.machines.len()
    }

    pub fn total_slots(&self) -> usize {
        self.machines.iter().map(|m| m.slots).sum()
    }

    /// Level whose parameters price a message between nodes `a` and `b`.
    pub fn level_between(&self, a: usize, b: usize) -> usize {
        if a == b {
            return 0;
        }
        let (pa, pb) = (&self.machines[a].path, &self.machines[b].path);
        let shared = pa.iter().zip(pb).take_while(|(x, y)| x == y).count();
        // Distinct nodes always share at least the root switch.
        self.switch_levels[pa[shared - 1]]
    }

    pub fn params(&self, level: usize) -> HockneyParams {
        self.levels[level].params()
    }

    pub fn to_spec(&self) -> TopologySpec {
        TopologySpec {
            name: self.name.clone(),
            levels: self.levels.clone(),
            tree: self.spec.clone(),
        }
    }

    /// Parses the JSON form, reporting the offending line on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: TopologySpec = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_spec(spec)
    }
}
