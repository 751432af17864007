//! Schedule builders, one per algorithm.
//!
//! Builders are pure functions of the process group: they never look at
//! payloads, so a schedule built for one block size is valid for any other.

mod binomial;
mod bruck;
mod doubling;
mod neighbor;
mod ring;
mod sparbit;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ProcessGroup, Rank};
use crate::schedule::CommSchedule;

pub use binomial::binomial_broadcast_schedule;
pub use bruck::bruck_schedule;
pub use doubling::recursive_doubling_schedule;
pub use neighbor::neighbor_exchange_schedule;
pub use ring::ring_schedule;
pub use sparbit::{
    sparbit_ignore_steps, sparbit_schedule, sparbit_schedule_with, SparbitOptions, SparbitPlan,
    SparbitStep,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Ring,
    NeighborExchange,
    RecursiveDoubling,
    Bruck,
    Sparbit,
    BinomialBroadcast,
}

impl AlgorithmId {
    /// The five Allgather algorithms, in name order.
    pub const ALLGATHER: [AlgorithmId; 5] = [
        AlgorithmId::Bruck,
        AlgorithmId::NeighborExchange,
        AlgorithmId::RecursiveDoubling,
        AlgorithmId::Ring,
        AlgorithmId::Sparbit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::Ring => "ring",
            AlgorithmId::NeighborExchange => "neighbor_exchange",
            AlgorithmId::RecursiveDoubling => "recursive_doubling",
            AlgorithmId::Bruck => "bruck",
            AlgorithmId::Sparbit => "sparbit",
            AlgorithmId::BinomialBroadcast => "binomial_broadcast",
        }
    }

    pub fn is_allgather(self) -> bool {
        self != AlgorithmId::BinomialBroadcast
    }

    /// Ring and Neighbor Exchange have step counts linear in `p`.
    pub fn is_linear(self) -> bool {
        matches!(self, AlgorithmId::Ring | AlgorithmId::NeighborExchange)
    }

    /// Fails when the algorithm cannot run on `p` processes. A single process is
    /// always accepted: every algorithm degenerates to the empty schedule.
    pub fn check_applicable(self, p: usize) -> Result<()> {
        match self {
            AlgorithmId::NeighborExchange if !p.is_multiple_of(2) && p != 1 => {
                Err(Error::OddProcessCount { algorithm: self, p })
            }
            AlgorithmId::RecursiveDoubling if !p.is_power_of_two() => {
                Err(Error::NonPowerOfTwo { algorithm: self, p })
            }
            _ => Ok(()),
        }
    }

    pub fn supports(self, p: usize) -> bool {
        self.check_applicable(p).is_ok()
    }

    /// Number of communication steps on `p` processes, the latency term of the cost formula.
    pub fn expected_steps(self, p: usize) -> usize {
        match self {
            AlgorithmId::Ring => p.saturating_sub(1),
            AlgorithmId::NeighborExchange => p / 2,
            AlgorithmId::RecursiveDoubling
            | AlgorithmId::Bruck
            | AlgorithmId::Sparbit
            | AlgorithmId::BinomialBroadcast => ceil_log2(p) as usize,
        }
    }

    /// Builds the schedule for `group`. Broadcasts are rooted at rank 0.
    pub fn build(self, group: &ProcessGroup) -> Result<CommSchedule> {
        match self {
            AlgorithmId::Ring => Ok(ring_schedule(group)),
            AlgorithmId::NeighborExchange => neighbor_exchange_schedule(group),
            AlgorithmId::RecursiveDoubling => recursive_doubling_schedule(group),
            AlgorithmId::Bruck => Ok(bruck_schedule(group)),
            AlgorithmId::Sparbit => Ok(sparbit_schedule(group)),
            AlgorithmId::BinomialBroadcast => binomial_broadcast_schedule(group, Rank(0)),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect();
        match compact.as_str() {
            "ring" => Ok(AlgorithmId::Ring),
            "neighborexchange" | "ne" => Ok(AlgorithmId::NeighborExchange),
            "recursivedoubling" | "rd" => Ok(AlgorithmId::RecursiveDoubling),
            "bruck" => Ok(AlgorithmId::Bruck),
            "sparbit" => Ok(AlgorithmId::Sparbit),
            "binomialbroadcast" | "binomial" => Ok(AlgorithmId::BinomialBroadcast),
            _ => Err(Error::UnknownAlgorithm(s.to_string())),
        }
    }
}

/// `⌈log2 p⌉`, with `ceil_log2(1) == 0`.
pub fn ceil_log2(p: usize) -> u32 {
    debug_assert!(p >= 1);
    if p <= 1 {
        0
    } else {
        usize::BITS - (p - 1).leading_zeros()
    }
}

/// `⌊log2 p⌋`.
pub fn floor_log2(p: usize) -> u32 {
    debug_assert!(p >= 1);
    usize::BITS - 1 - p.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logarithms() {
        let cases = [
            (1, 0, 0),
            (2, 1, 1),
            (3, 2, 1),
            (4, 2, 2),
            (5, 3, 2),
            (8, 3, 3),
            (21, 5, 4),
            (256, 8, 8),
        ];
        for (p, ceil, floor) in cases {
            assert_eq!(ceil_log2(p), ceil, "ceil p={p}");
            assert_eq!(floor_log2(p), floor, "floor p={p}");
        }
    }

    #[test]
    fn parse_names_and_aliases() {
        for a in AlgorithmId::ALLGATHER {
            assert_eq!(a.name().parse::<AlgorithmId>().unwrap(), a);
        }
        assert_eq!(
            "Neighbor-Exchange".parse::<AlgorithmId>().unwrap(),
            AlgorithmId::NeighborExchange
        );
        assert_eq!(
            "RD".parse::<AlgorithmId>().unwrap(),
            AlgorithmId::RecursiveDoubling
        );
        assert!("bogus".parse::<AlgorithmId>().is_err());
    }

    #[test]
    fn allgather_list_is_in_name_order() {
        let names: Vec<_> = AlgorithmId::ALLGATHER.iter().map(|a| a.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn restrictions() {
        assert!(AlgorithmId::NeighborExchange.check_applicable(5).is_err());
        assert!(AlgorithmId::NeighborExchange.supports(6));
        assert!(AlgorithmId::RecursiveDoubling.check_applicable(6).is_err());
        assert!(AlgorithmId::RecursiveDoubling.supports(8));
        assert!(AlgorithmId::Bruck.supports(7));
        assert!(AlgorithmId::Sparbit.supports(1));
        assert!(AlgorithmId::NeighborExchange.supports(1));
    }
}
