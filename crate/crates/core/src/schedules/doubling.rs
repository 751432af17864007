use crate::error::Result;
use crate::group::{ProcessGroup, Rank};
use crate::schedule::{CommSchedule, Step};
use crate::schedules::AlgorithmId;

/// Recursive Doubling for a power-of-two number of processes.
///
/// On step `s` rank `r` swaps with `r ^ 2^s` the `2^s` blocks of its aligned
/// group, i.e. the origins sharing `r`'s bits above bit `s`.
pub fn recursive_doubling_schedule(group: &ProcessGroup) -> Result<CommSchedule> {
    let p = group.size();
    AlgorithmId::RecursiveDoubling.check_applicable(p)?;
    let mut schedule = CommSchedule::new(AlgorithmId::RecursiveDoubling, *group);
    let mut width = 1;
    while width < p {
        let mut step = Step::new(p);
        for r in group.ranks() {
            let base = r.0 & !(width - 1);
            let slots: Vec<usize> = (base..base + width).collect();
            step.transfer(r, Rank(r.0 ^ width), slots.clone(), slots);
        }
        schedule.steps.push(step);
        width <<= 1;
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::group::make_group;
    use crate::schedule::validate_schedule;

    #[test]
    fn eight_ranks_double_blocks_every_step() {
        let s = recursive_doubling_schedule(&make_group(8, 4).unwrap()).unwrap();
        assert_eq!(s.num_steps(), 3);
        for r in s.group.ranks() {
            assert_eq!(s.sends_per_step(r), vec![1, 2, 4]);
        }
        assert!(validate_schedule(&s).is_empty());
    }

    #[test]
    fn two_ranks_single_step() {
        assert_eq!(
            recursive_doubling_schedule(&make_group(2, 1).unwrap())
                .unwrap()
                .num_steps(),
            1
        );
    }

    #[test]
    fn rejects_non_powers_of_two() {
        let err = recursive_doubling_schedule(&make_group(6, 1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NonPowerOfTwo { p: 6, .. }));
    }
}
