//! One worker thread per rank, point-to-point channels and a barrier per step.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Barrier, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use crate::executor::{
    commit, read_slots, Delivery, ExecError, ExecutionTrace, GatherState, DEFAULT_TIMEOUT,
};
use crate::group::{Block, Rank};
use crate::schedule::{CommSchedule, Direction};

const POLL: Duration = Duration::from_millis(5);

struct Packet {
    step: usize,
    blocks: Vec<Block>,
}

struct WorkerOutput {
    buffer: Vec<Option<Block>>,
    cursor: usize,
    deliveries: Vec<Vec<Delivery>>,
    sent: usize,
    received: usize,
    double_writes: usize,
}

/// Runs `schedule` with one thread per rank. The final buffers equal those of
/// [`execute`](crate::executor::execute); delivery order within a step may differ.
pub fn execute_concurrent(
    schedule: &CommSchedule,
) -> Result<(GatherState, ExecutionTrace), ExecError> {
    execute_concurrent_with_timeout(schedule, DEFAULT_TIMEOUT)
}

pub fn execute_concurrent_with_timeout(
    schedule: &CommSchedule,
    timeout: Duration,
) -> Result<(GatherState, ExecutionTrace), ExecError> {
    let p = schedule.p();
    let initial = GatherState::initial(schedule);

    // One single-producer single-consumer link per (sender, receiver) pair the schedule uses.
    let mut senders: Vec<HashMap<Rank, Sender<Packet>>> = (0..p).map(|_| HashMap::new()).collect();
    let mut receivers: Vec<HashMap<Rank, Receiver<Packet>>> =
        (0..p).map(|_| HashMap::new()).collect();
    for step in &schedule.steps {
        for rank in schedule.group.ranks() {
            for action in step.actions(rank) {
                let (from, to) = match action.direction {
                    Direction::Send => (rank, action.peer),
                    Direction::Receive => (action.peer, rank),
                };
                if from.0 >= p || to.0 >= p || senders[from.0].contains_key(&to) {
                    continue;
                }
                let (tx, rx) = mpsc::channel();
                senders[from.0].insert(to, tx);
                receivers[to.0].insert(from, rx);
            }
        }
    }

    let barrier = Barrier::new(p);
    let abort = AtomicBool::new(false);
    let errors: Mutex<Vec<(usize, Rank, ExecError)>> = Mutex::new(Vec::new());

    let outputs: Vec<Result<WorkerOutput, ExecError>> = thread::scope(|scope| {
        let handles: Vec<_> = senders
            .into_iter()
            .zip(receivers)
            .enumerate()
            .map(|(r, (links_out, links_in))| {
                let rank = Rank(r);
                let buffer = initial.buffer(rank).to_vec();
                let (barrier, abort, errors) = (&barrier, &abort, &errors);
                scope.spawn(move || {
                    let worker = Worker {
                        schedule,
                        rank,
                        timeout,
                        links_out,
                        links_in,
                        barrier,
                        abort,
                    };
                    worker.run(buffer, errors)
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(r, h)| h.join().map_err(|_| ExecError::WorkerPanicked(Rank(r))))
            .collect()
    });

    let mut errors = errors.into_inner().unwrap_or_else(|e| e.into_inner());
    errors.sort_by_key(|(step, rank, _)| (*step, *rank));
    if let Some((_, _, error)) = errors.into_iter().next() {
        return Err(error);
    }

    let mut buffers = Vec::with_capacity(p);
    let mut cursors = Vec::with_capacity(p);
    let mut trace = ExecutionTrace::new(p);
    trace.steps = vec![Vec::new(); schedule.num_steps()];
    for (r, output) in outputs.into_iter().enumerate() {
        let output = output?;
        buffers.push(output.buffer);
        cursors.push(output.cursor);
        trace.blocks_sent[r] = output.sent;
        trace.blocks_received[r] = output.received;
        trace.double_writes += output.double_writes;
        for (step, deliveries) in output.deliveries.into_iter().enumerate() {
            trace.steps[step].extend(deliveries);
        }
    }

    let mut state = GatherState::from_parts(buffers, cursors);
    if let Some(perms) = schedule.epilogue() {
        state.permute(&perms);
        trace.epilogue_applied = true;
    }
    Ok((state, trace))
}

struct Worker<'a> {
    schedule: &'a CommSchedule,
    rank: Rank,
    timeout: Duration,
    links_out: HashMap<Rank, Sender<Packet>>,
    links_in: HashMap<Rank, Receiver<Packet>>,
    barrier: &'a Barrier,
    abort: &'a AtomicBool,
}

impl Worker<'_> {
    fn run(
        self,
        mut buffer: Vec<Option<Block>>,
        errors: &Mutex<Vec<(usize, Rank, ExecError)>>,
    ) -> WorkerOutput {
        let mut out = WorkerOutput {
            buffer: Vec::new(),
            cursor: 0,
            deliveries: Vec::new(),
            sent: 0,
            received: 0,
            double_writes: 0,
        };
        for (index, _) in self.schedule.steps.iter().enumerate() {
            // Flags raised during the previous step are visible to everyone after the barrier.
            if self.abort.load(Ordering::SeqCst) {
                break;
            }
            let result = self.step(index, &mut buffer, &mut out);
            if let Err(error) = result {
                errors
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .push((index, self.rank, error));
                self.abort.store(true, Ordering::SeqCst);
            }
            self.barrier.wait();
            out.cursor += 1;
        }

        if !self.abort.load(Ordering::SeqCst) {
            let mut peers: Vec<_> = self.links_in.keys().copied().collect();
            peers.sort();
            for peer in peers {
                if let Ok(packet) = self.links_in[&peer].try_recv() {
                    let error = ExecError::UnmatchedSend {
                        step: packet.step,
                        sender: peer,
                        receiver: self.rank,
                    };
                    errors.lock().unwrap_or_else(|e| e.into_inner()).push((
                        packet.step,
                        self.rank,
                        error,
                    ));
                }
            }
        }
        out.buffer = buffer;
        out
    }

    fn step(
        &self,
        index: usize,
        buffer: &mut [Option<Block>],
        out: &mut WorkerOutput,
    ) -> Result<(), ExecError> {
        let actions = self.schedule.steps[index].actions(self.rank);
        let block_size = self.schedule.group.block_size();

        for action in actions.iter().filter(|a| a.direction == Direction::Send) {
            let blocks = read_slots(buffer, index, self.rank, &action.displacements)?;
            out.sent += blocks.len();
            if let Some(link) = self.links_out.get(&action.peer) {
                // The receiver may already have aborted and dropped its end.
                let _ = link.send(Packet {
                    step: index,
                    blocks,
                });
            }
        }

        let mut arrived = Vec::new();
        for action in actions.iter().filter(|a| a.direction == Direction::Receive) {
            let Some(packet) = self.wait_for(index, action.peer)? else {
                return Ok(());
            };
            if packet.step != index {
                return Err(ExecError::UnmatchedSend {
                    step: packet.step,
                    sender: action.peer,
                    receiver: self.rank,
                });
            }
            if packet.blocks.len() != action.blocks() {
                return Err(ExecError::BlockCountMismatch {
                    step: index,
                    sender: action.peer,
                    receiver: self.rank,
                    sent: packet.blocks.len(),
                    expected: action.blocks(),
                });
            }
            arrived.push((action, packet.blocks));
        }

        let mut deliveries = Vec::new();
        for (action, blocks) in arrived {
            for (block, &slot) in blocks.into_iter().zip(&action.displacements) {
                deliveries.push(Delivery {
                    sender: action.peer,
                    receiver: self.rank,
                    origin_slot: block.origin().0,
                    bytes: block_size,
                });
                out.received += 1;
                commit(
                    buffer,
                    index,
                    self.rank,
                    slot,
                    block,
                    &mut out.double_writes,
                )?;
            }
        }
        if out.deliveries.len() <= index {
            out.deliveries.resize_with(index + 1, Vec::new);
        }
        out.deliveries[index] = deliveries;
        Ok(())
    }

    /// `Ok(None)` when another worker aborted the run while waiting.
    fn wait_for(&self, index: usize, peer: Rank) -> Result<Option<Packet>, ExecError> {
        let timeout = ExecError::Timeout {
            step: index,
            rank: self.rank,
            peer,
        };
        let Some(link) = self.links_in.get(&peer) else {
            return Err(timeout);
        };
        let deadline = Instant::now() + self.timeout;
        loop {
            match link.recv_timeout(POLL) {
                Ok(packet) => return Ok(Some(packet)),
                Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => {
                    if self.abort.load(Ordering::SeqCst) {
                        return Ok(None);
                    }
                    if Instant::now() >= deadline {
                        return Err(timeout);
                    }
                    if matches!(link.try_recv(), Err(mpsc::TryRecvError::Disconnected)) {
                        return Err(timeout);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{execute, same_contents};
    use crate::group::make_group;
    use crate::schedule::{MessageAction, Step};
    use crate::schedules::{neighbor_exchange_schedule, sparbit_schedule, AlgorithmId};

    #[test]
    fn sparbit_sixteen_matches_reference() {
        let s = sparbit_schedule(&make_group(16, 32).unwrap());
        let (reference, _) = execute(&s).unwrap();
        let (state, trace) = execute_concurrent(&s).unwrap();
        assert_eq!(state, reference);
        assert_eq!(trace.double_writes, 0);
    }

    #[test]
    fn neighbor_exchange_thirty_two_matches_reference() {
        let s = neighbor_exchange_schedule(&make_group(32, 8).unwrap()).unwrap();
        let (reference, reference_trace) = execute(&s).unwrap();
        let (state, trace) = execute_concurrent(&s).unwrap();
        assert_eq!(state, reference);
        assert_eq!(trace.blocks_sent, reference_trace.blocks_sent);
    }

    #[test]
    fn missing_send_times_out() {
        let g = make_group(3, 4).unwrap();
        let mut s = CommSchedule::new(AlgorithmId::Ring, g);
        let mut step = Step::new(3);
        step.transfer(Rank(0), Rank(1), vec![0], vec![0]);
        step.push(Rank(2), MessageAction::receive(Rank(1), vec![1]));
        s.steps.push(step);
        let err = execute_concurrent_with_timeout(&s, Duration::from_millis(100)).unwrap_err();
        assert_eq!(
            err,
            ExecError::Timeout {
                step: 0,
                rank: Rank(2),
                peer: Rank(1)
            }
        );
    }

    #[test]
    fn single_rank_runs_without_threads_blocking() {
        let s = sparbit_schedule(&make_group(1, 4).unwrap());
        let (state, _) = execute_concurrent(&s).unwrap();
        assert!(same_contents(&state, &execute(&s).unwrap().0));
    }
}
