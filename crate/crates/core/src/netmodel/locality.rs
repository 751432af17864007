//! Rank-space locality of a schedule: how far data travels and how much of it.

use crate::group::circular_distance;
use crate::schedule::CommSchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalityStep {
    pub step: usize,
    /// Sum over all messages of circular distance times blocks.
    pub weighted_distance: u64,
    /// Largest distance-times-blocks product of a single message.
    pub max_weighted: u64,
    /// Largest circular distance of any message.
    pub max_distance: usize,
}

impl LocalityStep {
    /// Average weighted distance per rank.
    pub fn per_rank(&self, p: usize) -> f64 {
        self.weighted_distance as f64 / p as f64
    }
}

pub fn locality_profile(schedule: &CommSchedule) -> Vec<LocalityStep> {
    let p = schedule.p();
    schedule
        .steps
        .iter()
        .enumerate()
        .map(|(step, s)| {
            let mut out = LocalityStep {
                step,
                weighted_distance: 0,
                max_weighted: 0,
                max_distance: 0,
            };
            for msg in s.messages() {
                let distance = circular_distance(msg.sender, msg.receiver, p);
                let weighted = (distance * msg.blocks) as u64;
                out.weighted_distance += weighted;
                out.max_weighted = out.max_weighted.max(weighted);
                out.max_distance = out.max_distance.max(distance);
            }
            out
        })
        .collect()
}

/// Largest single-message distance-times-blocks product over the whole schedule.
pub fn peak_weighted_distance(schedule: &CommSchedule) -> u64 {
    locality_profile(schedule)
        .iter()
        .map(|s| s.max_weighted)
        .max()
        .unwrap_or(0)
}
