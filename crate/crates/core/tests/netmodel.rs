use allgather_core::netmodel::{
    closed_form_cost, locality_profile, make_mapping, simulate_cost, HockneyParams, MappingKind,
    ModelTime, Topology,
};
use allgather_core::schedules::{ceil_log2, sparbit_schedule};
use allgather_core::{make_group, AlgorithmId};

/// Textbook Hockney costs in plain f64 arithmetic.
fn textbook(algorithm: AlgorithmId, p: usize, m: u64, alpha: f64, beta: f64) -> f64 {
    let (pf, mf) = (p as f64, m as f64);
    let bw = (pf - 1.0) * mf / pf * beta;
    match algorithm {
        AlgorithmId::Ring => (pf - 1.0) * (alpha + mf / pf * beta),
        AlgorithmId::NeighborExchange => pf / 2.0 * alpha + bw,
        AlgorithmId::RecursiveDoubling => pf.log2() * alpha + bw,
        _ => (p as f64).log2().ceil() * alpha + bw,
    }
}

#[test]
fn uniform_simulation_equals_closed_form() {
    // Dyadic parameters keep the f64 textbook arithmetic exact.
    let params = HockneyParams::new(6.5, 0.0078125).unwrap();
    for p in 1..=130 {
        let topology = Topology::uniform(p, params);
        let mapping = make_mapping(MappingKind::Sequential, p, &topology).unwrap();
        let g = make_group(p, 1).unwrap();
        for algorithm in AlgorithmId::ALLGATHER.into_iter().filter(|a| a.supports(p)) {
            let s = algorithm.build(&g).unwrap();
            for m in [p as u64, 64 * p as u64, 4096 * p as u64] {
                let simulated = simulate_cost(&s, &topology, &mapping, m)
                    .unwrap()
                    .total_time;
                let closed = closed_form_cost(algorithm, p, m, &params).unwrap();
                assert_eq!(simulated, closed, "{algorithm} p={p} m={m}");
                if p > 1 {
                    assert_eq!(
                        closed.to_f64(),
                        textbook(algorithm, p, m, 6.5, 0.0078125),
                        "{algorithm} p={p}"
                    );
                }
            }
        }
    }
}

#[test]
fn non_dyadic_parameters_stay_close_to_textbook() {
    let params = HockneyParams::new(10.0, 0.01).unwrap();
    for p in [5, 21, 100, 255] {
        for algorithm in [AlgorithmId::Ring, AlgorithmId::Bruck, AlgorithmId::Sparbit] {
            let m = 1024 * p as u64;
            let got = closed_form_cost(algorithm, p, m, &params).unwrap().to_f64();
            let want = textbook(algorithm, p, m, 10.0, 0.01);
            assert!(
                (got - want).abs() <= 1e-12 * want,
                "{algorithm} p={p}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn binomial_broadcast_closed_form() {
    let params = HockneyParams::new(2.0, 0.5).unwrap();
    for p in [1usize, 2, 5, 9, 64] {
        let got = closed_form_cost(AlgorithmId::BinomialBroadcast, p, 8, &params).unwrap();
        let want = if p == 1 {
            0.0
        } else {
            ceil_log2(p) as f64 * (2.0 + 8.0 * 0.5)
        };
        assert_eq!(got.to_f64(), want);
    }
}

#[test]
fn sparbit_and_bruck_reverse_each_other_in_rank_space() {
    for k in 2..=8 {
        let p = 1usize << k;
        let g = make_group(p, 1).unwrap();
        let sparbit = locality_profile(&sparbit_schedule(&g));
        let bruck = locality_profile(&AlgorithmId::Bruck.build(&g).unwrap());
        // Sparbit: growing payloads over shrinking distances, constant weighted traffic per step.
        assert!(sparbit
            .iter()
            .all(|s| s.weighted_distance == sparbit[0].weighted_distance));
        assert!(sparbit
            .windows(2)
            .all(|w| w[0].max_distance == 2 * w[1].max_distance));
        // Bruck: growing payloads over growing distances.
        assert!(bruck
            .windows(2)
            .all(|w| w[1].weighted_distance == 4 * w[0].weighted_distance));
        assert!(bruck.last().unwrap().max_weighted > sparbit.last().unwrap().max_weighted);
    }
}

fn yahoo_report(
    algorithm: AlgorithmId,
    kind: MappingKind,
    p: usize,
    block: u64,
) -> (ModelTime, u64) {
    let topology = Topology::yahoo();
    let mapping = make_mapping(kind, p, &topology).unwrap();
    let s = algorithm.build(&make_group(p, 1).unwrap()).unwrap();
    let report = simulate_cost(&s, &topology, &mapping, block * p as u64).unwrap();
    let core = report.core_bytes();
    (report.total_time, core)
}

#[test]
fn cyclic_placement_raises_sparbit_core_traffic() {
    for p in (16..=256).step_by(8) {
        let (_, seq) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Sequential, p, 65536);
        let (_, cyc) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Cyclic, p, 65536);
        assert!(seq < cyc, "p={p}: {seq} vs {cyc}");
    }
}

#[test]
fn sequential_is_faster_while_ranks_fit_under_one_leaf_switch() {
    for p in 16..=80 {
        let (seq, _) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Sequential, p, 65536);
        let (cyc, _) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Cyclic, p, 65536);
        assert!(seq < cyc, "p={p}");
    }
}

#[test]
fn sequential_sparbit_pays_core_prices_every_step_once_both_switches_are_used() {
    // Some message of every step crosses the seam between the two leaf switches,
    // and a step costs as much as its dearest message.
    let core = Topology::yahoo().params(2);
    for p in [81, 96, 128, 200, 256] {
        let plan = allgather_core::schedules::SparbitPlan::new(p);
        let block = 65536u64;
        let worst: ModelTime = plan
            .send_counts()
            .iter()
            .map(|&b| core.message_cost(b as u64 * block))
            .sum();
        let (seq, _) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Sequential, p, block);
        assert_eq!(seq, worst, "p={p}");
    }
}

#[test]
fn sparbit_core_traffic_never_exceeds_bruck_under_sequential_placement() {
    for p in (16..=256).step_by(8).chain((21..=253).step_by(8)) {
        let (_, sparbit) = yahoo_report(AlgorithmId::Sparbit, MappingKind::Sequential, p, 65536);
        let (_, bruck) = yahoo_report(AlgorithmId::Bruck, MappingKind::Sequential, p, 65536);
        assert!(sparbit <= bruck, "p={p}: {sparbit} vs {bruck}");
    }
}
