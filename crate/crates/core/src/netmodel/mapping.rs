//! Placement of ranks onto topology slots.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Rank;
use crate::netmodel::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Placement {
    pub node: usize,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    /// Fill every slot of a node before moving on to the next.
    Sequential,
    /// Deal ranks round-robin over nodes, one per node per round.
    Cyclic,
    Explicit(Vec<Placement>),
}

impl MappingKind {
    pub fn name(&self) -> &'static str {
        match self {
            MappingKind::Sequential => "sequential",
            MappingKind::Cyclic => "cyclic",
            MappingKind::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sequential" | "seq" | "block" => Ok(MappingKind::Sequential),
            "cyclic" | "round-robin" | "roundrobin" => Ok(MappingKind::Cyclic),
            other => Err(Error::InvalidMapping(format!(
                "unknown mapping kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMapping {
    kind: MappingKind,
    placements: Vec<Placement>,
}

impl RankMapping {
    pub fn kind(&self) -> &MappingKind {
        &self.kind
    }

    pub fn p(&self) -> usize {
        self.placements.len()
    }

    pub fn placement(&self, rank: Rank) -> Placement {
        self.placements[rank.0]
    }

    pub fn node_of(&self, rank: Rank) -> usize {
        self.placements[rank.0].node
    }

    /// Ranks placed on `node`, in slot order.
    pub fn ranks_on(&self, node: usize) -> Vec<Rank> {
        let mut on: Vec<_> = (0..self.p())
            .filter(|&r| self.placements[r].node == node)
            .collect();
        on.sort_by_key(|&r| self.placements[r].slot);
        on.into_iter().map(Rank).collect()
    }
}

/// Places `p` ranks on `topology`.
pub fn make_mapping(kind: MappingKind, p: usize, topology: &Topology) -> Result<RankMapping> {
    let slots = topology.total_slots();
    if slots < p {
        return Err(Error::InsufficientSlots { slots, p });
    }
    let capacity: Vec<usize> = topology.machines().iter().map(|m| m.slots).collect();
    let placements = match &kind {
        MappingKind::Sequential => capacity
            .iter()
            .enumerate()
            .flat_map(|(node, &n)| (0..n).map(move |slot| Placement { node, slot }))
            .take(p)
            .collect(),
        MappingKind::Cyclic => {
            let mut used = vec![0usize; capacity.len()];
            let mut placements = Vec::with_capacity(p);
            let mut node = 0;
            while placements.len() < p {
                if used[node] < capacity[node] {
                    placements.push(Placement {
                        node,
                        slot: used[node],
                    });
                    used[node] += 1;
                }
                node = (node + 1) % capacity.len();
            }
            placements
        }
        MappingKind::Explicit(list) => {
            if list.len() != p {
                return Err(Error::InvalidMapping(format!(
                    "{} placements given for {p} ranks",
                    list.len()
                )));
            }
            let mut seen = HashSet::new();
            for (rank, place) in list.iter().enumerate() {
                if place.node >= capacity.len() || place.slot >= capacity[place.node] {
                    return Err(Error::InvalidMapping(format!(
                        "rank {rank} placed on nonexistent slot {}:{}",
                        place.node, place.slot
                    )));
                }
                if !seen.insert(*place) {
                    return Err(Error::InvalidMapping(format!(
                        "slot {}:{} assigned twice",
                        place.node, place.slot
                    )));
                }
            }
            list.clone()
        }
    };
    Ok(RankMapping { kind, placements })
}
