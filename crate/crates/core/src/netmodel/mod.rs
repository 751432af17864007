//! Hockney cost model over hierarchical topologies.

mod cost;
mod locality;
mod mapping;
mod time;
mod topology;

pub use cost::{
    block_bytes, closed_form_cost, inter_node_messages, simulate_cost, simulate_cost_with,
    CostOptions, CostProfile, CostReport, StepCost,
};
pub use locality::{locality_profile, peak_weighted_distance, LocalityStep};
pub use mapping::{make_mapping, MappingKind, Placement, RankMapping};
pub use time::ModelTime;
pub use topology::{HockneyParams, Level, Machine, Topology, TopologySpec, TreeSpec};
