use allgather_core::executor::{execute, execute_concurrent, GatherState};
use allgather_core::{make_group, AlgorithmId, ProcessGroup, Rank};

/// Every rank holds every origin's block at the slot named after the origin,
/// byte-for-byte equal to a freshly generated copy.
fn is_full_allgather(state: &GatherState, group: &ProcessGroup) -> bool {
    group.ranks().all(|r| {
        let buffer = state.buffer(r);
        buffer.len() == group.size()
            && buffer.iter().enumerate().all(|(slot, b)| {
                b.as_ref().is_some_and(|b| {
                    b.origin() == Rank(slot) && b.payload() == group.block(Rank(slot)).payload()
                })
            })
    })
}

#[test]
fn oracle_matrix() {
    for block_size in [1, 64, 4096] {
        let ps: Vec<usize> = match block_size {
            1 => (1..=256).collect(),
            64 => (1..=64).chain((65..=256).step_by(7)).collect(),
            _ => (1..=40).chain([63, 64, 100, 128]).collect(),
        };
        for p in ps {
            let g = make_group(p, block_size).unwrap();
            for algorithm in AlgorithmId::ALLGATHER.into_iter().filter(|a| a.supports(p)) {
                let (state, trace) = execute(&algorithm.build(&g).unwrap()).unwrap();
                assert!(
                    is_full_allgather(&state, &g),
                    "{algorithm} p={p} bs={block_size}"
                );
                assert_eq!(trace.double_writes, 0, "{algorithm} p={p}");
                assert_eq!(trace.epilogue_applied, algorithm == AlgorithmId::Bruck);
            }
        }
    }
}

#[test]
fn seeds_change_payloads_but_not_correctness() {
    let a = ProcessGroup::new(7, 16).unwrap().with_seed(1);
    let b = ProcessGroup::new(7, 16).unwrap().with_seed(2);
    assert_ne!(a.block(Rank(3)).payload(), b.block(Rank(3)).payload());
    let (state, _) = execute(&AlgorithmId::Sparbit.build(&b).unwrap()).unwrap();
    assert!(is_full_allgather(&state, &b));
}

#[test]
fn both_executors_agree() {
    for p in [1, 2, 3, 5, 8, 12, 17, 32, 33, 48] {
        let g = make_group(p, 8).unwrap();
        for algorithm in AlgorithmId::ALLGATHER.into_iter().filter(|a| a.supports(p)) {
            let s = algorithm.build(&g).unwrap();
            let (reference, ref_trace) = execute(&s).unwrap();
            let (concurrent, trace) = execute_concurrent(&s).unwrap();
            assert_eq!(reference, concurrent, "{algorithm} p={p}");
            assert_eq!(ref_trace.blocks_received, trace.blocks_received);
            assert!(is_full_allgather(&concurrent, &g));
        }
    }
}

#[test]
fn trace_counts_match_the_bandwidth_term() {
    let g = make_group(21, 1).unwrap();
    for algorithm in [AlgorithmId::Sparbit, AlgorithmId::Bruck, AlgorithmId::Ring] {
        let (_, trace) = execute(&algorithm.build(&g).unwrap()).unwrap();
        assert!(
            trace.blocks_received.iter().all(|&n| n == 20),
            "{algorithm}"
        );
        let csv = trace.to_csv();
        assert_eq!(csv.lines().count(), 1 + 21 * 20);
    }
}
