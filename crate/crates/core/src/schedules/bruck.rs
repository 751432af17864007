use crate::group::ProcessGroup;
use crate::schedule::{BufferLayout, CommSchedule, Step};
use crate::schedules::{floor_log2, AlgorithmId};

/// Bruck's algorithm over the rotated layout (slot `i` at rank `r` holds origin `r + i`).
///
/// Step `s` sends slots `[0, 2^s)` to `r - 2^s` and fills `[2^s, 2^(s+1))` from
/// `r + 2^s`. When `p` is not a power of two a last step moves only the first
/// `p - 2^⌊log2 p⌋` slots. The schedule's epilogue rotates every buffer back to
/// origin order.
pub fn bruck_schedule(group: &ProcessGroup) -> CommSchedule {
    let p = group.size();
    let mut schedule = CommSchedule::new(AlgorithmId::Bruck, *group);
    schedule.layout = BufferLayout::Rotated;
    if p == 1 {
        return schedule;
    }

    let full = 1usize << floor_log2(p);
    let mut held = 1;
    while held < p {
        // Either a full doubling step or the trailing partial one.
        let count = if held < full { held } else { p - full };
        let mut step = Step::new(p);
        for r in group.ranks() {
            let dest = r.shifted(-(held as i64), p);
            step.transfer(
                r,
                dest,
                (0..count).collect(),
                (held..held + count).collect(),
            );
        }
        schedule.steps.push(step);
        held += count;
    }
    schedule
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{make_group, Rank};
    use crate::schedule::validate_schedule;

    #[test]
    fn five_ranks_end_with_a_one_block_step() {
        let s = bruck_schedule(&make_group(5, 2).unwrap());
        assert_eq!(s.num_steps(), 3);
        assert_eq!(s.sends_per_step(Rank(0)), vec![1, 2, 1]);
        assert!(validate_schedule(&s).is_empty());
    }

    #[test]
    fn powers_of_two_have_no_partial_step() {
        let s = bruck_schedule(&make_group(8, 2).unwrap());
        assert_eq!(s.sends_per_step(Rank(3)), vec![1, 2, 4]);
    }

    #[test]
    fn sends_go_down_by_doubling_distances() {
        let s = bruck_schedule(&make_group(8, 2).unwrap());
        let dests: Vec<Rank> = s
            .steps
            .iter()
            .map(|st| {
                st.messages()
                    .find(|m| m.sender == Rank(0))
                    .unwrap()
                    .receiver
            })
            .collect();
        assert_eq!(dests, vec![Rank(7), Rank(6), Rank(4)]);
    }
}
