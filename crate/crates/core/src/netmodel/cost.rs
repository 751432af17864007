//! Hockney costs: closed forms and schedule-driven simulation.
//!
//! Sends within a step run in parallel, so a step costs as much as its most
//! expensive message and a schedule costs the sum of its steps. There is no
//! contention: messages never slow each other down.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::group::circular_distance;
use crate::netmodel::mapping::RankMapping;
use crate::netmodel::time::ModelTime;
use crate::netmodel::topology::{HockneyParams, Topology};
use crate::schedule::CommSchedule;
use crate::schedules::{ceil_log2, AlgorithmId};

/// Block size for `algorithm` when every rank ends up with `m` bytes.
///
/// Allgathers split `m` into `p` blocks; a broadcast moves `m` as one block.
pub fn block_bytes(algorithm: AlgorithmId, p: usize, m: u64) -> Result<u64> {
    if !algorithm.is_allgather() {
        return Ok(m);
    }
    if !m.is_multiple_of(p as u64) {
        return Err(Error::IndivisibleMessage { m, p });
    }
    Ok(m / p as u64)
}

/// The textbook cost of `algorithm` on `p` processes gathering `m` bytes.
///
/// * Ring: `(p-1)(α + m/p β)`
/// * Neighbor Exchange: `pα/2 + (p-1) m/p β`
/// * Recursive Doubling: `log2(p) α + (p-1) m/p β`
/// * Bruck, Sparbit: `⌈log2 p⌉ α + (p-1) m/p β`
/// * Binomial broadcast of `m` bytes: `⌈log2 p⌉ (α + m β)`
///
/// A single process costs nothing.
pub fn closed_form_cost(
    algorithm: AlgorithmId,
    p: usize,
    m: u64,
    params: &HockneyParams,
) -> Result<ModelTime> {
    algorithm.check_applicable(p)?;
    params.validate()?;
    if p == 1 {
        return Ok(ModelTime::zero());
    }
    let alpha = params.alpha_exact();
    let beta = params.beta_exact();
    let block = block_bytes(algorithm, p, m)?;
    let bandwidth = &beta * ((p as u64 - 1) * block);
    let log = ceil_log2(p) as u64;
    let time = match algorithm {
        AlgorithmId::Ring => &(&alpha + &(&beta * block)) * (p as u64 - 1),
        AlgorithmId::NeighborExchange => &(&alpha * p as u64).halved() + &bandwidth,
        AlgorithmId::RecursiveDoubling | AlgorithmId::Bruck | AlgorithmId::Sparbit => {
            &(&alpha * log) + &bandwidth
        }
        AlgorithmId::BinomialBroadcast => &(&alpha + &(&beta * m)) * log,
    };
    Ok(time)
}

/// Cost of one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepCost {
    pub step: usize,
    pub time: ModelTime,
    /// Largest circular rank distance of any message in the step.
    pub max_distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostReport {
    pub total_time: ModelTime,
    pub per_step: Vec<StepCost>,
    /// Bytes of the messages priced at each level, i.e. whose highest crossing is that level.
    pub per_level_traffic: Vec<u64>,
}

impl CostReport {
    /// Bytes crossing the topmost level of the topology.
    pub fn core_bytes(&self) -> u64 {
        self.per_level_traffic.last().copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostOptions {
    /// Time per byte charged for a schedule's terminal local rotation (Bruck).
    /// The rotation is free by default.
    pub local_copy_beta: f64,
}

/// Size-independent summary of a schedule placed on a topology.
///
/// For a fixed level, the most expensive message is the one with the most
/// blocks, so each step reduces to the largest block count per level. Pricing
/// then takes `O(steps * levels)` for any block size.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    p: usize,
    algorithm: AlgorithmId,
    /// Per step: largest message (in blocks) priced at each level, if any.
    step_maxima: Vec<Vec<Option<usize>>>,
    step_distance: Vec<usize>,
    /// Blocks priced at each level over the whole schedule.
    level_blocks: Vec<u64>,
    has_epilogue: bool,
    level_params: Vec<HockneyParams>,
}

impl CostProfile {
    pub fn new(
        schedule: &CommSchedule,
        topology: &Topology,
        mapping: &RankMapping,
    ) -> Result<Self> {
        let p = schedule.p();
        if mapping.p() < p {
            return Err(Error::InsufficientSlots {
                slots: mapping.p(),
                p,
            });
        }
        let levels = topology.levels().len();
        let mut level_blocks = vec![0u64; levels];
        let mut step_maxima = Vec::with_capacity(schedule.num_steps());
        let mut step_distance = Vec::with_capacity(schedule.num_steps());
        for step in &schedule.steps {
            let mut maxima: Vec<Option<usize>> = vec![None; levels];
            let mut distance = 0;
            for msg in step.messages() {
                let level = topology
                    .level_between(mapping.node_of(msg.sender), mapping.node_of(msg.receiver));
                maxima[level] = Some(maxima[level].map_or(msg.blocks, |b| b.max(msg.blocks)));
                level_blocks[level] += msg.blocks as u64;
                distance = distance.max(circular_distance(msg.sender, msg.receiver, p));
            }
            step_maxima.push(maxima);
            step_distance.push(distance);
        }
        Ok(Self {
            p,
            algorithm: schedule.algorithm,
            step_maxima,
            step_distance,
            level_blocks,
            has_epilogue: schedule.epilogue().is_some(),
            level_params: topology.levels().iter().map(|l| l.params()).collect(),
        })
    }

    /// Prices the schedule for `m` bytes gathered per rank.
    pub fn report(&self, m: u64, options: &CostOptions) -> Result<CostReport> {
        let block = block_bytes(self.algorithm, self.p, m)?;
        let level_costs: Vec<(ModelTime, ModelTime)> = self
            .level_params
            .iter()
            .map(|l| (l.alpha_exact(), l.beta_exact()))
            .collect();

        // Steps with identical per-level maxima cost the same; price each shape once.
        let mut memo: HashMap<&[Option<usize>], ModelTime> = HashMap::new();
        let mut per_step = Vec::with_capacity(self.step_maxima.len() + 1);
        for (index, maxima) in self.step_maxima.iter().enumerate() {
            let time = memo
                .entry(maxima.as_slice())
                .or_insert_with(|| {
                    maxima
                        .iter()
                        .zip(&level_costs)
                        .filter_map(|(blocks, (alpha, beta))| {
                            blocks.map(|b| alpha + &(beta * (b as u64 * block)))
                        })
                        .max()
                        .unwrap_or_default()
                })
                .clone();
            per_step.push(StepCost {
                step: index,
                time,
                max_distance: self.step_distance[index],
            });
        }

        if self.has_epilogue && options.local_copy_beta > 0.0 {
            HockneyParams::new(0.0, options.local_copy_beta)?;
            // Every rank rotates its whole receive buffer in parallel.
            let time = &ModelTime::from_f64(options.local_copy_beta) * (self.p as u64 * block);
            per_step.push(StepCost {
                step: self.step_maxima.len(),
                time,
                max_distance: 0,
            });
        }

        Ok(CostReport {
            total_time: per_step.iter().map(|s| &s.time).sum(),
            per_step,
            per_level_traffic: self.level_blocks.iter().map(|b| b * block).collect(),
        })
    }
}

/// Prices `schedule` on `topology` under `mapping` for `m` bytes gathered per rank.
pub fn simulate_cost(
    schedule: &CommSchedule,
    topology: &Topology,
    mapping: &RankMapping,
    m: u64,
) -> Result<CostReport> {
    simulate_cost_with(schedule, topology, mapping, m, &CostOptions::default())
}

pub fn simulate_cost_with(
    schedule: &CommSchedule,
    topology: &Topology,
    mapping: &RankMapping,
    m: u64,
    options: &CostOptions,
) -> Result<CostReport> {
    CostProfile::new(schedule, topology, mapping)?.report(m, options)
}

/// Number of messages in each step that are priced above node level.
pub fn inter_node_messages(
    schedule: &CommSchedule,
    topology: &Topology,
    mapping: &RankMapping,
) -> Vec<usize> {
    schedule
        .steps
        .iter()
        .map(|step| {
            step.messages()
                .filter(|m| {
                    topology.level_between(mapping.node_of(m.sender), mapping.node_of(m.receiver))
                        > 0
                })
                .count()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;
    use crate::netmodel::mapping::{make_mapping, MappingKind};
    use crate::netmodel::topology::{Level, TopologySpec, TreeSpec};
    use crate::schedules::{bruck_schedule, ring_schedule, sparbit_schedule};

    #[test]
    fn ring_closed_form_example() {
        let params = HockneyParams::new(10.0, 0.01).unwrap();
        let t = closed_form_cost(AlgorithmId::Ring, 4, 4096, &params).unwrap();
        assert_eq!(t.to_f64(), 60.72);
    }

    #[test]
    fn sparbit_pure_latency() {
        let params = HockneyParams::new(1.0, 0.5).unwrap();
        assert_eq!(
            closed_form_cost(AlgorithmId::Sparbit, 8, 0, &params).unwrap(),
            ModelTime::from_int(3)
        );
    }

    #[test]
    fn bruck_equals_sparbit() {
        let params = HockneyParams::new(3.5, 0.125).unwrap();
        for p in 1..40 {
            let m = 64 * p as u64;
            assert_eq!(
                closed_form_cost(AlgorithmId::Bruck, p, m, &params).unwrap(),
                closed_form_cost(AlgorithmId::Sparbit, p, m, &params).unwrap()
            );
        }
    }

    #[test]
    fn closed_form_respects_restrictions() {
        let params = HockneyParams::new(1.0, 0.0).unwrap();
        assert!(closed_form_cost(AlgorithmId::NeighborExchange, 5, 5, &params).is_err());
        assert!(closed_form_cost(AlgorithmId::RecursiveDoubling, 6, 6, &params).is_err());
        assert!(closed_form_cost(AlgorithmId::Ring, 3, 4, &params).is_err());
    }

    #[test]
    fn uniform_simulation_matches_closed_form() {
        let params = HockneyParams::new(2.0, 0.01).unwrap();
        let g = make_group(12, 1).unwrap();
        let topo = Topology::uniform(12, params);
        let map = make_mapping(MappingKind::Sequential, 12, &topo).unwrap();
        for algorithm in [
            AlgorithmId::Ring,
            AlgorithmId::NeighborExchange,
            AlgorithmId::Bruck,
            AlgorithmId::Sparbit,
        ] {
            let schedule = algorithm.build(&g).unwrap();
            let report = simulate_cost(&schedule, &topo, &map, 12 * 1000).unwrap();
            assert_eq!(
                report.total_time,
                closed_form_cost(algorithm, 12, 12_000, &params).unwrap(),
                "{algorithm}"
            );
        }
    }

    #[test]
    fn ring_on_two_nodes_has_two_seam_crossings_per_step() {
        let topo = Topology::from_spec(TopologySpec {
            name: String::new(),
            levels: vec![
                Level::new("node", 1.0, 0.0),
                Level::new("switch", 10.0, 0.0),
            ],
            tree: TreeSpec::Switch {
                level: 1,
                children: vec![TreeSpec::Node { slots: 4, count: 2 }],
            },
        })
        .unwrap();
        let map = make_mapping(MappingKind::Sequential, 8, &topo).unwrap();
        let schedule = ring_schedule(&make_group(8, 1).unwrap());
        assert_eq!(inter_node_messages(&schedule, &topo, &map), vec![2; 7]);
        let report = simulate_cost(&schedule, &topo, &map, 8).unwrap();
        assert_eq!(report.per_level_traffic, vec![6 * 7, 2 * 7]);
    }

    #[test]
    fn single_process_costs_nothing() {
        let params = HockneyParams::new(5.0, 1.0).unwrap();
        let topo = Topology::uniform(1, params);
        let map = make_mapping(MappingKind::Sequential, 1, &topo).unwrap();
        let report = simulate_cost(
            &sparbit_schedule(&make_group(1, 1).unwrap()),
            &topo,
            &map,
            1,
        )
        .unwrap();
        assert!(report.total_time.is_zero());
        assert!(report.per_step.is_empty());
    }

    #[test]
    fn bruck_rotation_is_free_unless_charged() {
        let params = HockneyParams::new(1.0, 0.0).unwrap();
        let topo = Topology::uniform(5, params);
        let map = make_mapping(MappingKind::Sequential, 5, &topo).unwrap();
        let schedule = bruck_schedule(&make_group(5, 1).unwrap());
        let free = simulate_cost(&schedule, &topo, &map, 50).unwrap();
        assert_eq!(free.per_step.len(), 3);
        let charged = simulate_cost_with(
            &schedule,
            &topo,
            &map,
            50,
            &CostOptions {
                local_copy_beta: 0.5,
            },
        )
        .unwrap();
        assert_eq!(charged.per_step.len(), 4);
        assert_eq!(
            charged.total_time,
            &free.total_time + &ModelTime::from_int(25)
        );
        let sum: ModelTime = charged.per_step.iter().map(|s| &s.time).sum();
        assert_eq!(sum, charged.total_time);
    }

    #[test]
    fn indivisible_messages_are_rejected() {
        let params = HockneyParams::new(1.0, 1.0).unwrap();
        let topo = Topology::uniform(3, params);
        let map = make_mapping(MappingKind::Sequential, 3, &topo).unwrap();
        let schedule = ring_schedule(&make_group(3, 1).unwrap());
        assert!(matches!(
            simulate_cost(&schedule, &topo, &map, 10),
            Err(Error::IndivisibleMessage { .. })
        ));
    }
}
