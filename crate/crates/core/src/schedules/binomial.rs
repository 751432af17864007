use crate::error::{Error, Result};
use crate::group::{ProcessGroup, Rank};
use crate::schedule::{CommSchedule, Step};
use crate::schedules::{ceil_log2, AlgorithmId};

/// One-to-all binomial tree broadcast of `root`'s block.
///
/// The tree has size `2^⌈log2 p⌉`; distances halve from `2^(⌈log2 p⌉-1)` to 1,
/// and sends whose relative destination is `>= p` are dropped.
pub fn binomial_broadcast_schedule(group: &ProcessGroup, root: Rank) -> Result<CommSchedule> {
    let p = group.size();
    if !group.contains(root) {
        return Err(Error::RootOutOfRange { root, p });
    }
    let mut schedule = CommSchedule::new(AlgorithmId::BinomialBroadcast, *group);
    schedule.root = Some(root);

    let levels = ceil_log2(p);
    for i in 0..levels {
        let d = 1usize << (levels - 1 - i);
        let mut step = Step::new(p);
        // Relative ranks that hold the block at this point are multiples of 2d.
        for relative in (0..p).step_by(2 * d) {
            if relative + d >= p {
                continue;
            }
            let from = root.shifted(relative as i64, p);
            let to = root.shifted((relative + d) as i64, p);
            step.transfer(from, to, vec![root.0], vec![root.0]);
        }
        schedule.steps.push(step);
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_group;
    use crate::schedule::validate_schedule;

    fn edges(s: &CommSchedule) -> Vec<Vec<(usize, usize)>> {
        s.steps
            .iter()
            .map(|st| {
                let mut e: Vec<_> = st.messages().map(|m| (m.sender.0, m.receiver.0)).collect();
                e.sort();
                e
            })
            .collect()
    }

    #[test]
    fn five_ranks_prune_sends_past_the_end() {
        let s = binomial_broadcast_schedule(&make_group(5, 1).unwrap(), Rank(0)).unwrap();
        assert_eq!(
            edges(&s),
            vec![vec![(0, 4)], vec![(0, 2)], vec![(0, 1), (2, 3)]]
        );
        assert!(validate_schedule(&s).is_empty());
    }

    #[test]
    fn single_rank_has_no_steps() {
        let s = binomial_broadcast_schedule(&make_group(1, 1).unwrap(), Rank(0)).unwrap();
        assert_eq!(s.num_steps(), 0);
    }

    #[test]
    fn other_roots_are_shifted_copies() {
        let g = make_group(8, 1).unwrap();
        let base = edges(&binomial_broadcast_schedule(&g, Rank(0)).unwrap());
        let shifted = edges(&binomial_broadcast_schedule(&g, Rank(3)).unwrap());
        let translated: Vec<Vec<(usize, usize)>> = base
            .iter()
            .map(|st| {
                let mut e: Vec<_> = st
                    .iter()
                    .map(|&(a, b)| ((a + 3) % 8, (b + 3) % 8))
                    .collect();
                e.sort();
                e
            })
            .collect();
        assert_eq!(shifted, translated);
    }

    #[test]
    fn root_must_be_in_group() {
        assert!(binomial_broadcast_schedule(&make_group(4, 1).unwrap(), Rank(4)).is_err());
    }
}
