use crate::error::Result;
use crate::group::{ProcessGroup, Rank};
use crate::schedule::{CommSchedule, Step};
use crate::schedules::AlgorithmId;

/// Partner of `r` on step `s`: even ranks go to `r + (-1)^s`, odd ranks to `r - (-1)^s`.
fn partner(r: Rank, s: usize, p: usize) -> Rank {
    let sign: i64 = if s.is_multiple_of(2) { 1 } else { -1 };
    if r.0.is_multiple_of(2) {
        r.shifted(sign, p)
    } else {
        r.shifted(-sign, p)
    }
}

/// Neighbor Exchange for an even number of processes.
///
/// Step 0 swaps own blocks with the pair partner. Step 1 forwards the pair
/// `{own, step-0 receipt}`; every later step forwards the two blocks received
/// on the step before.
pub fn neighbor_exchange_schedule(group: &ProcessGroup) -> Result<CommSchedule> {
    let p = group.size();
    AlgorithmId::NeighborExchange.check_applicable(p)?;
    let mut schedule = CommSchedule::new(AlgorithmId::NeighborExchange, *group);
    if p == 1 {
        return Ok(schedule);
    }

    // Slots each rank forwards on the current step.
    let mut outgoing: Vec<Vec<usize>> = (0..p).map(|r| vec![r]).collect();
    for s in 0..p / 2 {
        let mut step = Step::new(p);
        let mut received: Vec<Vec<usize>> = vec![Vec::new(); p];
        for r in group.ranks() {
            let peer = partner(r, s, p);
            step.transfer(r, peer, outgoing[r.0].clone(), outgoing[r.0].clone());
            received[peer.0] = outgoing[r.0].clone();
        }
        schedule.steps.push(step);

        outgoing = if s == 0 {
            (0..p)
                .map(|r| {
                    let mut pair = vec![r, received[r][0]];
                    pair.sort_unstable();
                    pair
                })
                .collect()
        } else {
            received
        };
    }
    Ok(schedule)
}
