//! Stripe parallel binomial trees.
//!
//! Every rank is the root of its own binomial tree, shifted around the
//! circular rank space, and at the same time an inner node or leaf of the
//! `p - 1` other trees. Distances halve from `2^(⌈log2 p⌉-1)` down to 1 while the
//! amount of data forwarded doubles, so the heavy late steps stay local.
//!
//! For `p` that is not a power of two, the block a rank received as a leaf of
//! another tree must not be forwarded on certain steps; otherwise it would be
//! written twice at its destination. Those steps are encoded as a bit mask
//! over the step distances.

use crate::group::{wrap, ProcessGroup, Rank};
use crate::schedule::{CommSchedule, MessageAction, Step};
use crate::schedules::{ceil_log2, AlgorithmId};

/// Mask of step distances on which one block is withheld.
///
/// Bit `d` set means the step with distance `d` sends `data - 1` blocks. Built
/// by inverting every bit of `p` above its lowest set bit, then keeping only
/// the `⌈log2 p⌉` low bits that correspond to real distances.
pub fn sparbit_ignore_steps(p: usize) -> u64 {
    assert!(p >= 1, "process count must be positive");
    let p = p as u64;
    let tz = p.trailing_zeros();
    let mask = (!(p >> tz) | 1) << tz;
    let levels = ceil_log2(p as usize);
    mask & ((1u64 << levels) - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SparbitStep {
    pub distance: usize,
    pub ignore: bool,
    /// Blocks every rank sends on this step.
    pub blocks_to_send: usize,
    /// Blocks every rank holds once the step completes.
    pub data_after: usize,
}

/// The rank-independent data/ignore progression of the algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparbitPlan {
    pub p: usize,
    pub num_steps: usize,
    pub ignore_steps: u64,
    pub steps: Vec<SparbitStep>,
}

impl SparbitPlan {
    pub fn new(p: usize) -> Self {
        Self::with_options(p, SparbitOptions::default())
    }

    pub fn with_options(p: usize, options: SparbitOptions) -> Self {
        let num_steps = ceil_log2(p) as usize;
        let ignore_steps = if options.force_no_ignore {
            0
        } else {
            sparbit_ignore_steps(p)
        };
        let mut steps = Vec::with_capacity(num_steps);
        let mut data = 1usize;
        for i in 0..num_steps {
            let distance = 1usize << (num_steps - 1 - i);
            let ignore = distance as u64 & ignore_steps != 0;
            let withheld = usize::from(ignore);
            let blocks_to_send = data - withheld;
            data = 2 * data - withheld;
            steps.push(SparbitStep {
                distance,
                ignore,
                blocks_to_send,
                data_after: data,
            });
        }
        Self {
            p,
            num_steps,
            ignore_steps,
            steps,
        }
    }

    pub fn final_data(&self) -> usize {
        self.steps.last().map_or(1, |s| s.data_after)
    }

    pub fn send_counts(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.blocks_to_send).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SparbitOptions {
    /// Forward every held block on every step, ignoring the withheld-block mask.
    /// Only useful to demonstrate the duplicate deliveries the mask prevents.
    pub force_no_ignore: bool,
}

pub fn sparbit_schedule(group: &ProcessGroup) -> CommSchedule {
    sparbit_schedule_with(group, SparbitOptions::default())
}

pub fn sparbit_schedule_with(group: &ProcessGroup, options: SparbitOptions) -> CommSchedule {
    let p = group.size();
    let plan = SparbitPlan::with_options(p, options);
    let mut schedule = CommSchedule::new(AlgorithmId::Sparbit, *group);
    for planned in &plan.steps {
        let d = planned.distance as i64;
        let mut step = Step::new(p);
        for r in group.ranks() {
            let base = r.0 as i64;
            let send_slots = (0..planned.blocks_to_send as i64)
                .map(|j| wrap(base - 2 * j * d, p))
                .collect();
            let recv_slots = (0..planned.blocks_to_send as i64)
                .map(|j| wrap(base - (2 * j + 1) * d, p))
                .collect();
            step.push(r, MessageAction::send(r.shifted(d, p), send_slots));
            step.push(
                r,
                MessageAction::receive(Rank(wrap(base - d, p)), recv_slots),
            );
        }
        schedule.steps.push(step);
    }
    schedule
}
