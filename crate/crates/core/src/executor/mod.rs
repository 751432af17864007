//! Executes schedules against in-memory receive buffers.
//!
//! [`execute`] is the reference: single-threaded and step-synchronous. Every
//! send of a step reads the buffers as they were when the step began, and the
//! receives commit only after all of the step's sends were captured, so a block
//! received on step `s` can be forwarded on step `s + 1` at the earliest.

mod concurrent;

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::group::{Block, ProcessGroup, Rank};
use crate::schedule::{CommSchedule, Direction, Permutation};

pub use concurrent::{execute_concurrent, execute_concurrent_with_timeout};

/// Default time a concurrent worker waits for a matching message.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("step {step}: rank {rank} sends slot {slot} which it does not hold yet")]
    SendFromEmptySlot {
        step: usize,
        rank: Rank,
        slot: usize,
    },

    #[error("step {step}: rank {rank} slot {slot} holds origin {existing} but receives origin {incoming}")]
    DoubleWrite {
        step: usize,
        rank: Rank,
        slot: usize,
        existing: Rank,
        incoming: Rank,
    },

    #[error("step {step}: rank {rank} addresses slot {slot} outside its buffer")]
    SlotOutOfRange {
        step: usize,
        rank: Rank,
        slot: usize,
    },

    #[error("step {step}: rank {receiver} expects a message from {sender} that is never sent")]
    UnmatchedReceive {
        step: usize,
        receiver: Rank,
        sender: Rank,
    },

    #[error("step {step}: message {sender} -> {receiver} is never received")]
    UnmatchedSend {
        step: usize,
        sender: Rank,
        receiver: Rank,
    },

    #[error(
        "step {step}: {sender} -> {receiver} carries {sent} blocks but {expected} were expected"
    )]
    BlockCountMismatch {
        step: usize,
        sender: Rank,
        receiver: Rank,
        sent: usize,
        expected: usize,
    },

    #[error("step {step}: rank {rank} timed out waiting for rank {peer}")]
    Timeout { step: usize, rank: Rank, peer: Rank },

    #[error("worker for rank {0} panicked")]
    WorkerPanicked(Rank),
}

/// The `p` receive buffers of a group, `p` slots each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GatherState {
    buffers: Vec<Vec<Option<Block>>>,
    cursors: Vec<usize>,
}

impl GatherState {
    fn empty(p: usize) -> Self {
        Self {
            buffers: vec![vec![None; p]; p],
            cursors: vec![0; p],
        }
    }

    /// Initial buffers for `schedule`: each contributing rank holds its own
    /// block in the working slot its layout assigns to it.
    pub fn initial(schedule: &CommSchedule) -> Self {
        let group = &schedule.group;
        let p = group.size();
        let mut state = Self::empty(p);
        for r in group.ranks().filter(|&r| schedule.starts_with_block(r)) {
            state.buffers[r.0][schedule.layout.slot_of(r, r, p)] = Some(group.block(r));
        }
        state
    }

    pub fn p(&self) -> usize {
        self.buffers.len()
    }

    pub fn buffer(&self, rank: Rank) -> &[Option<Block>] {
        &self.buffers[rank.0]
    }

    pub fn slot(&self, rank: Rank, slot: usize) -> Option<&Block> {
        self.buffers[rank.0][slot].as_ref()
    }

    /// Steps each rank has completed.
    pub fn cursor(&self, rank: Rank) -> usize {
        self.cursors[rank.0]
    }

    pub fn is_complete(&self) -> bool {
        self.buffers.iter().all(|b| b.iter().all(Option::is_some))
    }

    /// Whether every filled slot holds the block of its own origin.
    pub fn is_origin_indexed(&self) -> bool {
        self.buffers.iter().all(|b| {
            b.iter()
                .enumerate()
                .all(|(i, s)| s.as_ref().is_none_or(|blk| blk.origin().0 == i))
        })
    }

    pub(crate) fn permute(&mut self, perms: &[Permutation]) {
        for (buffer, perm) in self.buffers.iter_mut().zip(perms) {
            let mut next = vec![None; buffer.len()];
            for (from, to) in perm.iter().enumerate() {
                next[*to] = buffer[from].take();
            }
            *buffer = next;
        }
    }

    pub(crate) fn from_parts(buffers: Vec<Vec<Option<Block>>>, cursors: Vec<usize>) -> Self {
        Self { buffers, cursors }
    }
}

/// One block delivered from `sender` to `receiver`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Delivery {
    pub sender: Rank,
    pub receiver: Rank,
    /// Origin rank of the block, which is also its final slot.
    pub origin_slot: usize,
    pub bytes: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub steps: Vec<Vec<Delivery>>,
    pub blocks_sent: Vec<usize>,
    pub blocks_received: Vec<usize>,
    /// Writes of a block into a slot that already held the same block.
    pub double_writes: usize,
    pub epilogue_applied: bool,
}

impl ExecutionTrace {
    fn new(p: usize) -> Self {
        Self {
            blocks_sent: vec![0; p],
            blocks_received: vec![0; p],
            ..Self::default()
        }
    }

    /// CSV dump, one line per delivered block: `step,sender,receiver,origin_slot,bytes`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,sender,receiver,origin_slot,bytes\n");
        for (step, deliveries) in self.steps.iter().enumerate() {
            for d in deliveries {
                let _ = writeln!(
                    out,
                    "{step},{},{},{},{}",
                    d.sender, d.receiver, d.origin_slot, d.bytes
                );
            }
        }
        out
    }
}

/// Writes `block` into `slot`, tolerating (and counting) identical rewrites.
pub(crate) fn commit(
    buffer: &mut [Option<Block>],
    step: usize,
    rank: Rank,
    slot: usize,
    block: Block,
    double_writes: &mut usize,
) -> Result<(), ExecError> {
    let target = buffer
        .get_mut(slot)
        .ok_or(ExecError::SlotOutOfRange { step, rank, slot })?;
    match target {
        None => *target = Some(block),
        Some(existing) if *existing == block => *double_writes += 1,
        Some(existing) => {
            return Err(ExecError::DoubleWrite {
                step,
                rank,
                slot,
                existing: existing.origin(),
                incoming: block.origin(),
            })
        }
    }
    Ok(())
}

pub(crate) fn read_slots(
    buffer: &[Option<Block>],
    step: usize,
    rank: Rank,
    slots: &[usize],
) -> Result<Vec<Block>, ExecError> {
    slots
        .iter()
        .map(|&slot| match buffer.get(slot) {
            None => Err(ExecError::SlotOutOfRange { step, rank, slot }),
            Some(None) => Err(ExecError::SendFromEmptySlot { step, rank, slot }),
            Some(Some(block)) => Ok(block.clone()),
        })
        .collect()
}

/// Runs `schedule` step-synchronously and applies its epilogue.
pub fn execute(schedule: &CommSchedule) -> Result<(GatherState, ExecutionTrace), ExecError> {
    let (mut state, mut trace) = run_steps(schedule)?;
    if let Some(perms) = schedule.epilogue() {
        state.permute(&perms);
        trace.epilogue_applied = true;
    }
    Ok((state, trace))
}

fn run_steps(schedule: &CommSchedule) -> Result<(GatherState, ExecutionTrace), ExecError> {
    let p = schedule.p();
    let block_size = schedule.group.block_size();
    let mut state = GatherState::initial(schedule);
    let mut trace = ExecutionTrace::new(p);

    for (index, step) in schedule.steps.iter().enumerate() {
        // Capture every send against the pre-step buffers.
        let mut in_flight: HashMap<(Rank, Rank), VecDeque<Vec<Block>>> = HashMap::new();
        for rank in schedule.group.ranks() {
            for action in step
                .actions(rank)
                .iter()
                .filter(|a| a.direction == Direction::Send)
            {
                let blocks =
                    read_slots(&state.buffers[rank.0], index, rank, &action.displacements)?;
                trace.blocks_sent[rank.0] += blocks.len();
                in_flight
                    .entry((rank, action.peer))
                    .or_default()
                    .push_back(blocks);
            }
        }

        let mut deliveries = Vec::new();
        for rank in schedule.group.ranks() {
            for action in step
                .actions(rank)
                .iter()
                .filter(|a| a.direction == Direction::Receive)
            {
                let blocks = in_flight
                    .get_mut(&(action.peer, rank))
                    .and_then(VecDeque::pop_front)
                    .ok_or(ExecError::UnmatchedReceive {
                        step: index,
                        receiver: rank,
                        sender: action.peer,
                    })?;
                if blocks.len() != action.blocks() {
                    return Err(ExecError::BlockCountMismatch {
                        step: index,
                        sender: action.peer,
                        receiver: rank,
                        sent: blocks.len(),
                        expected: action.blocks(),
                    });
                }
                for (block, &slot) in blocks.into_iter().zip(&action.displacements) {
                    deliveries.push(Delivery {
                        sender: action.peer,
                        receiver: rank,
                        origin_slot: block.origin().0,
                        bytes: block_size,
                    });
                    trace.blocks_received[rank.0] += 1;
                    commit(
                        &mut state.buffers[rank.0],
                        index,
                        rank,
                        slot,
                        block,
                        &mut trace.double_writes,
                    )?;
                }
            }
        }

        let mut leftovers: Vec<_> = in_flight
            .into_iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(k, _)| k)
            .collect();
        leftovers.sort();
        if let Some(&(sender, receiver)) = leftovers.first() {
            return Err(ExecError::UnmatchedSend {
                step: index,
                sender,
                receiver,
            });
        }

        state.cursors.iter_mut().for_each(|c| *c += 1);
        trace.steps.push(deliveries);
    }
    Ok((state, trace))
}

/// Ground-truth Allgather result: every rank holds block `i` in slot `i`.
pub fn oracle_allgather(group: &ProcessGroup) -> GatherState {
    let p = group.size();
    let blocks = group.blocks();
    GatherState {
        buffers: vec![blocks.into_iter().map(Some).collect(); p],
        cursors: vec![0; p],
    }
}

/// Ground-truth broadcast result: every rank holds `root`'s block in slot `root`.
pub fn oracle_broadcast(group: &ProcessGroup, root: Rank) -> GatherState {
    let p = group.size();
    let mut state = GatherState::empty(p);
    let block = group.block(root);
    for buffer in &mut state.buffers {
        buffer[root.0] = Some(block.clone());
    }
    state
}

/// The final state `schedule` must produce.
pub fn expected_state(schedule: &CommSchedule) -> GatherState {
    match schedule.root {
        None => oracle_allgather(&schedule.group),
        Some(root) => oracle_broadcast(&schedule.group, root),
    }
}

/// Compares buffer contents only, ignoring step cursors.
pub fn same_contents(a: &GatherState, b: &GatherState) -> bool {
    a.buffers == b.buffers
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub matches_oracle: bool,
    pub double_writes: usize,
    pub error: Option<ExecError>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.matches_oracle && self.error.is_none()
    }
}

/// Runs `schedule` and checks the result against the oracle.
pub fn verify(schedule: &CommSchedule) -> Verification {
    match execute(schedule) {
        Ok((state, trace)) => Verification {
            matches_oracle: same_contents(&state, &expected_state(schedule)),
            double_writes: trace.double_writes,
            error: None,
        },
        Err(error) => Verification {
            matches_oracle: false,
            double_writes: 0,
            error: Some(error),
        },
    }
}
