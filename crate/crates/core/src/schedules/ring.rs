use crate::group::{wrap, ProcessGroup};
use crate::schedule::{CommSchedule, Step};
use crate::schedules::AlgorithmId;

/// Ring: on step `s` rank `r` forwards the block of origin `r - s` to `r + 1`.
pub fn ring_schedule(group: &ProcessGroup) -> CommSchedule {
    let p = group.size();
    let mut schedule = CommSchedule::new(AlgorithmId::Ring, *group);
    for s in 0..p.saturating_sub(1) {
        let mut step = Step::new(p);
        for r in group.ranks() {
            let next = r.shifted(1, p);
            let slot = wrap(r.0 as i64 - s as i64, p);
            step.transfer(r, next, vec![slot], vec![slot]);
        }
        schedule.steps.push(step);
    }
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_group, Rank};
    use crate::schedule::{validate_schedule, Direction, MessageAction};

    #[test]
    fn four_ranks_take_three_single_block_steps() {
        let s = ring_schedule(&make_group(4, 8).unwrap());
        assert_eq!(s.num_steps(), 3);
        for r in s.group.ranks() {
            assert_eq!(s.sends_per_step(r), vec![1, 1, 1]);
        }
        assert!(validate_schedule(&s).is_empty());
    }

    #[test]
    fn single_rank_is_empty() {
        assert_eq!(ring_schedule(&make_group(1, 8).unwrap()).num_steps(), 0);
    }

    #[test]
    fn first_step_of_rank_zero_on_five() {
        let s = ring_schedule(&make_group(5, 1).unwrap());
        let actions = s.steps[0].actions(Rank(0));
        assert!(actions.contains(&MessageAction::send(Rank(1), vec![0])));
        assert!(actions.contains(&MessageAction::receive(Rank(4), vec![4])));
        assert_eq!(
            actions
                .iter()
                .filter(|a| a.direction == Direction::Send)
                .count(),
            1
        );
    }
}
