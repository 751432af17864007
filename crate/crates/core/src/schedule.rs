//! Communication schedules: the common output of every algorithm builder.
//!
//! A schedule is a list of steps. Within a step every rank issues a set of
//! send and receive actions that all happen concurrently. Each action names a
//! peer and a list of buffer displacements, one block per displacement.

use std::collections::HashMap;
use std::fmt;

use crate::group::{wrap, ProcessGroup, Rank};
use crate::schedules::AlgorithmId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Send,
    Receive,
}

/// One send or receive issued by a rank during a step.
///
/// Displacements are buffer slot indices in block units; the byte offset of a
/// slot is `slot * block_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageAction {
    pub direction: Direction,
    pub peer: Rank,
    pub displacements: Vec<usize>,
}

impl MessageAction {
    pub fn send(peer: Rank, displacements: Vec<usize>) -> Self {
        Self {
            direction: Direction::Send,
            peer,
            displacements,
        }
    }

    pub fn receive(peer: Rank, displacements: Vec<usize>) -> Self {
        Self {
            direction: Direction::Receive,
            peer,
            displacements,
        }
    }

    pub fn blocks(&self) -> usize {
        self.displacements.len()
    }
}

/// The actions every rank issues concurrently in one step, indexed by rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    actions: Vec<Vec<MessageAction>>,
}

impl Step {
    pub fn new(p: usize) -> Self {
        Self {
            actions: vec![Vec::new(); p],
        }
    }

    pub fn from_actions(actions: Vec<Vec<MessageAction>>) -> Self {
        Self { actions }
    }

    pub fn push(&mut self, rank: Rank, action: MessageAction) {
        self.actions[rank.0].push(action);
    }

    /// Adds a matching send at `from` and receive at `to`.
    pub fn transfer(
        &mut self,
        from: Rank,
        to: Rank,
        send_slots: Vec<usize>,
        recv_slots: Vec<usize>,
    ) {
        self.push(from, MessageAction::send(to, send_slots));
        self.push(to, MessageAction::receive(from, recv_slots));
    }

    pub fn actions(&self, rank: Rank) -> &[MessageAction] {
        &self.actions[rank.0]
    }

    pub fn actions_mut(&mut self, rank: Rank) -> &mut Vec<MessageAction> {
        &mut self.actions[rank.0]
    }

    pub fn ranks(&self) -> usize {
        self.actions.len()
    }

    /// Every message of the step as seen from the sending side.
    pub fn messages(&self) -> impl Iterator<Item = Message> + '_ {
        self.actions.iter().enumerate().flat_map(|(rank, actions)| {
            actions
                .iter()
                .filter(|a| a.direction == Direction::Send)
                .map(move |a| Message {
                    sender: Rank(rank),
                    receiver: a.peer,
                    blocks: a.blocks(),
                })
        })
    }

    pub fn is_empty(&self) -> bool {
        self.actions.iter().all(Vec::is_empty)
    }
}

/// A point-to-point transfer, derived from a send action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Message {
    pub sender: Rank,
    pub receiver: Rank,
    pub blocks: usize,
}

/// How a rank's working buffer is indexed while the schedule runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferLayout {
    /// Slot `i` holds the block of origin `i` throughout.
    OriginIndexed,
    /// Slot `i` at rank `r` holds the block of origin `(r + i) mod p`; a
    /// terminal local rotation restores origin order.
    Rotated,
}

impl BufferLayout {
    /// Working slot of `origin`'s block at `rank`.
    pub fn slot_of(self, rank: Rank, origin: Rank, p: usize) -> usize {
        match self {
            BufferLayout::OriginIndexed => origin.0,
            BufferLayout::Rotated => wrap(origin.0 as i64 - rank.0 as i64, p),
        }
    }
}

/// Per-rank permutation applied after the last step: working slot `i` moves to
/// final slot `perm[i]`.
pub type Permutation = Vec<usize>;

/// The full communication plan of one collective on one process group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommSchedule {
    pub algorithm: AlgorithmId,
    pub group: ProcessGroup,
    pub steps: Vec<Step>,
    pub layout: BufferLayout,
    /// Source rank for one-to-all schedules; `None` for Allgather.
    pub root: Option<Rank>,
}

impl CommSchedule {
    pub fn new(algorithm: AlgorithmId, group: ProcessGroup) -> Self {
        Self {
            algorithm,
            group,
            steps: Vec::new(),
            layout: BufferLayout::OriginIndexed,
            root: None,
        }
    }

    pub fn p(&self) -> usize {
        self.group.size()
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Whether `rank` starts out holding its own block.
    pub fn starts_with_block(&self, rank: Rank) -> bool {
        self.root.is_none_or(|root| root == rank)
    }

    /// Blocks `rank` must receive over the whole schedule.
    pub fn expected_receives(&self, rank: Rank) -> usize {
        match self.root {
            None => self.p() - 1,
            Some(root) if root == rank => 0,
            Some(_) => 1,
        }
    }

    pub fn blocks_sent_by(&self, rank: Rank) -> usize {
        self.blocks_moved(rank, Direction::Send)
    }

    pub fn blocks_received_by(&self, rank: Rank) -> usize {
        self.blocks_moved(rank, Direction::Receive)
    }

    fn blocks_moved(&self, rank: Rank, direction: Direction) -> usize {
        self.steps
            .iter()
            .flat_map(|s| s.actions(rank))
            .filter(|a| a.direction == direction)
            .map(MessageAction::blocks)
            .sum()
    }

    /// Blocks sent by `rank` in each step.
    pub fn sends_per_step(&self, rank: Rank) -> Vec<usize> {
        self.steps
            .iter()
            .map(|s| {
                s.actions(rank)
                    .iter()
                    .filter(|a| a.direction == Direction::Send)
                    .map(MessageAction::blocks)
                    .sum()
            })
            .collect()
    }

    /// The local rotation that maps the working layout to origin order, if any.
    pub fn epilogue(&self) -> Option<Vec<Permutation>> {
        match self.layout {
            BufferLayout::OriginIndexed => None,
            BufferLayout::Rotated => {
                let p = self.p();
                Some(
                    (0..p)
                        .map(|r| (0..p).map(|i| (r + i) % p).collect())
                        .collect(),
                )
            }
        }
    }
}

/// A broken schedule invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RankCount {
        step: usize,
        expected: usize,
        actual: usize,
    },
    PeerOutOfRange {
        step: usize,
        rank: Rank,
        peer: Rank,
    },
    SelfMessage {
        step: usize,
        rank: Rank,
    },
    SlotOutOfRange {
        step: usize,
        rank: Rank,
        slot: usize,
    },
    DuplicateSlot {
        step: usize,
        rank: Rank,
        slot: usize,
    },
    UnmatchedSend {
        step: usize,
        sender: Rank,
        receiver: Rank,
        blocks: usize,
    },
    UnmatchedReceive {
        step: usize,
        receiver: Rank,
        sender: Rank,
        blocks: usize,
    },
    BlockCountMismatch {
        step: usize,
        sender: Rank,
        receiver: Rank,
        sent: usize,
        received: usize,
    },
    ReceiveTotal {
        rank: Rank,
        expected: usize,
        actual: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RankCount { step, expected, actual } => {
                write!(f, "step {step}: action table covers {actual} ranks, expected {expected}")
            }
            Violation::PeerOutOfRange { step, rank, peer } => {
                write!(f, "step {step}: rank {rank} addresses nonexistent peer {peer}")
            }
            Violation::SelfMessage { step, rank } => write!(f, "step {step}: rank {rank} messages itself"),
            Violation::SlotOutOfRange { step, rank, slot } => {
                write!(f, "step {step}: rank {rank} uses slot {slot} outside the buffer")
            }
            Violation::DuplicateSlot { step, rank, slot } => {
                write!(f, "step {step}: rank {rank} lists slot {slot} twice in one action")
            }
            Violation::UnmatchedSend { step, sender, receiver, blocks } => {
                write!(f, "step {step}: send {sender} -> {receiver} ({blocks} blocks) has no matching receive")
            }
            Violation::UnmatchedReceive { step, receiver, sender, blocks } => {
                write!(f, "step {step}: receive at {receiver} from {sender} ({blocks} blocks) has no matching send")
            }
            Violation::BlockCountMismatch { step, sender, receiver, sent, received } => write!(
                f,
                "step {step}: {sender} -> {receiver} sends {sent} blocks but the receive expects {received}"
            ),
            Violation::ReceiveTotal { rank, expected, actual } => {
                write!(f, "rank {rank} receives {actual} blocks in total, expected {expected}")
            }
        }
    }
}

/// Checks every structural invariant of `schedule`; an empty list means it is well formed.
pub fn validate_schedule(schedule: &CommSchedule) -> Vec<Violation> {
    let p = schedule.p();
    let mut violations = Vec::new();

    for (index, step) in schedule.steps.iter().enumerate() {
        if step.ranks() != p {
            violations.push(Violation::RankCount {
                step: index,
                expected: p,
                actual: step.ranks(),
            });
            continue;
        }
        check_actions(index, step, p, &mut violations);
        check_pairing(index, step, &mut violations);
    }

    for rank in schedule.group.ranks() {
        let expected = schedule.expected_receives(rank);
        let actual = if schedule.steps.iter().all(|s| s.ranks() == p) {
            schedule.blocks_received_by(rank)
        } else {
            continue;
        };
        if actual != expected {
            violations.push(Violation::ReceiveTotal {
                rank,
                expected,
                actual,
            });
        }
    }
    violations
}

fn check_actions(index: usize, step: &Step, p: usize, out: &mut Vec<Violation>) {
    for rank in (0..p).map(Rank) {
        for action in step.actions(rank) {
            if action.peer.0 >= p {
                out.push(Violation::PeerOutOfRange {
                    step: index,
                    rank,
                    peer: action.peer,
                });
            } else if action.peer == rank {
                out.push(Violation::SelfMessage { step: index, rank });
            }
            let mut seen = vec![false; p];
            for &slot in &action.displacements {
                if slot >= p {
                    out.push(Violation::SlotOutOfRange {
                        step: index,
                        rank,
                        slot,
                    });
                } else if std::mem::replace(&mut seen[slot], true) {
                    out.push(Violation::DuplicateSlot {
                        step: index,
                        rank,
                        slot,
                    });
                }
            }
        }
    }
}

/// The i-th send from `s` to `t` pairs with the i-th receive posted at `t` for `s`.
fn check_pairing(index: usize, step: &Step, out: &mut Vec<Violation>) {
    type Link = (Rank, Rank);
    let mut sends: HashMap<Link, Vec<usize>> = HashMap::new();
    let mut receives: HashMap<Link, Vec<usize>> = HashMap::new();
    for rank in (0..step.ranks()).map(Rank) {
        for action in step.actions(rank) {
            match action.direction {
                Direction::Send => sends
                    .entry((rank, action.peer))
                    .or_default()
                    .push(action.blocks()),
                Direction::Receive => receives
                    .entry((action.peer, rank))
                    .or_default()
                    .push(action.blocks()),
            }
        }
    }

    let mut links: Vec<Link> = sends.keys().chain(receives.keys()).copied().collect();
    links.sort();
    links.dedup();
    for (sender, receiver) in links {
        let sent = sends
            .get(&(sender, receiver))
            .map_or(&[][..], Vec::as_slice);
        let received = receives
            .get(&(sender, receiver))
            .map_or(&[][..], Vec::as_slice);
        for (s, r) in sent.iter().zip(received) {
            if s != r {
                out.push(Violation::BlockCountMismatch {
                    step: index,
                    sender,
                    receiver,
                    sent: *s,
                    received: *r,
                });
            }
        }
        for &blocks in sent.iter().skip(received.len()) {
            out.push(Violation::UnmatchedSend {
                step: index,
                sender,
                receiver,
                blocks,
            });
        }
        for &blocks in received.iter().skip(sent.len()) {
            out.push(Violation::UnmatchedReceive {
                step: index,
                receiver,
                sender,
                blocks,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;

    fn two_rank_exchange() -> CommSchedule {
        let g = make_group(2, 4).unwrap();
        let mut s = CommSchedule::new(AlgorithmId::Ring, g);
        let mut step = Step::new(2);
        step.transfer(Rank(0), Rank(1), vec![0], vec![0]);
        step.transfer(Rank(1), Rank(0), vec![1], vec![1]);
        s.steps.push(step);
        s
    }

    #[test]
    fn well_formed_exchange_has_no_violations() {
        assert!(validate_schedule(&two_rank_exchange()).is_empty());
    }

    #[test]
    fn empty_schedule_for_single_process_is_valid() {
        let s = CommSchedule::new(AlgorithmId::Sparbit, make_group(1, 1).unwrap());
        assert!(validate_schedule(&s).is_empty());
    }

    #[test]
    fn unmatched_send_is_reported_once() {
        let mut s = two_rank_exchange();
        // Drop rank 1's receive; the send from 0 is now unmatched and rank 1 is short a block.
        s.steps[0]
            .actions_mut(Rank(1))
            .retain(|a| a.direction == Direction::Send);
        let v = validate_schedule(&s);
        let unmatched: Vec<_> = v
            .iter()
            .filter(|v| matches!(v, Violation::UnmatchedSend { .. }))
            .collect();
        assert_eq!(unmatched.len(), 1);
        assert!(v.contains(&Violation::ReceiveTotal {
            rank: Rank(1),
            expected: 1,
            actual: 0
        }));
    }

    #[test]
    fn single_unmatched_send_without_total_change() {
        // An extra send with no receive leaves receive totals intact: exactly one violation.
        let mut s = two_rank_exchange();
        s.steps[0].push(Rank(0), MessageAction::send(Rank(1), vec![0]));
        assert_eq!(
            validate_schedule(&s),
            vec![Violation::UnmatchedSend {
                step: 0,
                sender: Rank(0),
                receiver: Rank(1),
                blocks: 1
            }]
        );
    }

    #[test]
    fn structural_errors_are_detected() {
        let mut s = two_rank_exchange();
        s.steps[0].push(Rank(0), MessageAction::send(Rank(0), vec![0]));
        s.steps[0].push(Rank(1), MessageAction::receive(Rank(0), vec![1, 1, 5]));
        let v = validate_schedule(&s);
        assert!(v.contains(&Violation::SelfMessage {
            step: 0,
            rank: Rank(0)
        }));
        assert!(v.contains(&Violation::DuplicateSlot {
            step: 0,
            rank: Rank(1),
            slot: 1
        }));
        assert!(v.contains(&Violation::SlotOutOfRange {
            step: 0,
            rank: Rank(1),
            slot: 5
        }));
    }

    #[test]
    fn rotated_layout_epilogue_restores_origin_order() {
        let mut s = CommSchedule::new(AlgorithmId::Bruck, make_group(5, 1).unwrap());
        s.layout = BufferLayout::Rotated;
        let perms = s.epilogue().unwrap();
        assert_eq!(perms[0], vec![0, 1, 2, 3, 4]);
        // Rank 2 stores origins (2,3,4,0,1); working slot i goes to final slot (2+i) mod 5.
        assert_eq!(perms[2], vec![2, 3, 4, 0, 1]);
        assert_eq!(BufferLayout::Rotated.slot_of(Rank(2), Rank(0), 5), 3);
    }
}
