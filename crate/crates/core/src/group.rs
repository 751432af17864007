//! Process groups, ranks and the blocks every Allgather algorithm moves around.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Position of a process inside its group, always in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rank(pub usize);

impl Rank {
    pub fn index(self) -> usize {
        self.0
    }

    /// `(self + offset) mod p` on the circular rank space.
    pub fn shifted(self, offset: i64, p: usize) -> Rank {
        Rank(wrap(self.0 as i64 + offset, p))
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Mathematical modulo: the result is always in `[0, p)`, also for negative `value`.
pub fn wrap(value: i64, p: usize) -> usize {
    value.rem_euclid(p as i64) as usize
}

/// Circular distance between two ranks on a ring of `p` ranks.
pub fn circular_distance(a: Rank, b: Rank, p: usize) -> usize {
    let forward = wrap(b.0 as i64 - a.0 as i64, p);
    forward.min(p - forward)
}

/// A set of `p` processes, each contributing one block of `block_size` bytes.
///
/// The seed drives the payload fill pattern. Two groups with the same
/// `(p, block_size, seed)` produce identical payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProcessGroup {
    p: usize,
    block_size: usize,
    seed: u64,
}

impl ProcessGroup {
    pub fn new(p: usize, block_size: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidGroup(
                "process count must be at least 1".into(),
            ));
        }
        if block_size == 0 {
            return Err(Error::InvalidGroup(
                "block size must be at least 1 byte".into(),
            ));
        }
        Ok(Self {
            p,
            block_size,
            seed: 0,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn size(&self) -> usize {
        self.p
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total bytes every rank holds once the Allgather completes (`m = p * block_size`).
    pub fn total_bytes(&self) -> u64 {
        (self.p * self.block_size) as u64
    }

    pub fn ranks(&self) -> impl Iterator<Item = Rank> {
        (0..self.p).map(Rank)
    }

    pub fn contains(&self, rank: Rank) -> bool {
        rank.0 < self.p
    }

    /// The block contributed by `origin`, filled with its deterministic pattern.
    pub fn block(&self, origin: Rank) -> Block {
        Block {
            origin,
            payload: fill_pattern(self.seed, origin, self.block_size).into(),
        }
    }

    /// Every block of the group, indexed by origin.
    pub fn blocks(&self) -> Vec<Block> {
        self.ranks().map(|r| self.block(r)).collect()
    }
}

/// Shorthand for [`ProcessGroup::new`].
pub fn make_group(p: usize, block_size: usize) -> Result<ProcessGroup> {
    ProcessGroup::new(p, block_size)
}

fn fill_pattern(seed: u64, origin: Rank, len: usize) -> Vec<u8> {
    // Mixing the origin into the seed keeps streams of neighbouring ranks unrelated.
    let mixed = seed
        ^ (origin.0 as u64)
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    let mut payload = vec![0u8; len];
    rng.fill_bytes(&mut payload);
    payload
}

/// A payload tagged with the rank that contributed it.
///
/// Payload bytes are shared: copying a block between buffers never duplicates them.
#[derive(Clone, PartialEq, Eq)]
pub struct Block {
    origin: Rank,
    payload: Arc<[u8]>,
}

impl Block {
    pub fn origin(&self) -> Rank {
        self.origin
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_empty()
    }

    /// Whether the payload still matches the pattern `group` generates for the origin.
    pub fn is_intact(&self, group: &ProcessGroup) -> bool {
        self.payload.len() == group.block_size()
            && *self.payload == *fill_pattern(group.seed(), self.origin, group.block_size())
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Block")
            .field("origin", &self.origin)
            .field("len", &self.payload.len())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_groups_and_blocks() {
        assert!(make_group(0, 8).is_err());
        assert!(make_group(4, 0).is_err());
        let g = make_group(5, 1024).unwrap();
        assert_eq!(g.size(), 5);
        assert_eq!(g.total_bytes(), 5 * 1024);
        let single = make_group(1, 1).unwrap();
        assert_eq!(single.ranks().count(), 1);
    }

    #[test]
    fn wrap_is_mathematical_modulo() {
        assert_eq!(wrap(-1, 5), 4);
        assert_eq!(wrap(-16, 5), 4);
        assert_eq!(wrap(12, 5), 2);
        assert_eq!(Rank(0).shifted(-4, 5), Rank(1));
    }

    #[test]
    fn circular_distance_takes_the_short_way_round() {
        assert_eq!(circular_distance(Rank(0), Rank(7), 8), 1);
        assert_eq!(circular_distance(Rank(0), Rank(4), 8), 4);
        assert_eq!(circular_distance(Rank(3), Rank(1), 5), 2);
    }

    #[test]
    fn payloads_depend_on_origin_and_seed() {
        let g = make_group(4, 64).unwrap();
        let a = g.block(Rank(1));
        let b = g.block(Rank(2));
        assert_ne!(a.payload(), b.payload());
        assert_eq!(a, g.block(Rank(1)));
        let reseeded = g.with_seed(7);
        assert_ne!(a.payload(), reseeded.block(Rank(1)).payload());
        assert!(a.is_intact(&g));
        assert!(!a.is_intact(&reseeded));
    }
}
