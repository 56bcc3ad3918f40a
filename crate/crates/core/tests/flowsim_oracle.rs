use proptest::prelude::*;

use ringswitch::cost_model::{ring_total_cost, switched_ag_cost, switched_rs_cost};
use ringswitch::flowsim::{build_step_flows, simulate_phase, step_count, Algorithm};
use ringswitch::sweep::{run_grid, write_detail_csv, write_summary_csv, SweepGrid};
use ringswitch::{AgModel, Collective, CostParams, Phase, PhaseChoice};

fn phase_total(phase: Phase, choice: PhaseChoice, p: &CostParams) -> f64 {
    simulate_phase(phase, choice, p)
        .unwrap()
        .iter()
        .map(|s| s.duration_ns())
        .sum()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn bytes_sent_per_node_match_algorithmic_requirement() {
    let m = 3_000_000u64;
    for k in 1..=7 {
        let n = 1usize << k;
        let expected = m as f64 * (n - 1) as f64 / n as f64;
        for (algorithm, phase) in [
            (Algorithm::Ring, Phase::ReduceScatter),
            (Algorithm::Ring, Phase::AllGather),
            (Algorithm::RecursiveDoubling, Phase::ReduceScatter),
            (Algorithm::RecursiveDoubling, Phase::AllGather),
        ] {
            let mut per_node = vec![0.0; n];
            for step in 0..step_count(algorithm, n) {
                let fs = build_step_flows(algorithm, phase, step, n, m).unwrap();
                for (acc, b) in per_node.iter_mut().zip(fs.bytes_sent_per_node()) {
                    *acc += b;
                }
            }
            for sent in per_node {
                assert!(
                    close(sent, expected),
                    "{algorithm:?} {phase:?} n={n}: {sent} vs {expected}"
                );
            }
        }
    }
}

#[test]
fn rd_steps_form_perfect_matchings_and_ring_steps_a_cycle() {
    for k in 1..=6 {
        let n = 1usize << k;
        for phase in [Phase::ReduceScatter, Phase::AllGather] {
            for i in 0..k {
                let fs = build_step_flows(Algorithm::RecursiveDoubling, phase, i, n, 64).unwrap();
                let mut partner = vec![usize::MAX; n];
                for f in &fs.flows {
                    assert_ne!(f.src, f.dst);
                    partner[f.src] = f.dst;
                }
                assert!((0..n).all(|j| partner[partner[j]] == j));
            }
        }
        let fs = build_step_flows(Algorithm::Ring, Phase::ReduceScatter, 0, n, 64).unwrap();
        let mut v = 0;
        for _ in 0..n {
            v = fs.flows.iter().find(|f| f.src == v).unwrap().dst;
        }
        assert_eq!(v, 0);
    }
}

#[test]
fn sweep_csv_is_reproducible() {
    let render = || {
        let recs = run_grid(&SweepGrid::default()).unwrap();
        let mut detail = Vec::new();
        let mut summary = Vec::new();
        write_detail_csv(&recs, &mut detail).unwrap();
        write_summary_csv(&recs, &mut summary).unwrap();
        (detail, summary)
    };
    let (d1, s1) = render();
    let (d2, s2) = render();
    assert_eq!(d1, d2);
    assert_eq!(s1, s2);
    assert_eq!(String::from_utf8(s1).unwrap().lines().count(), 61);
    assert_eq!(String::from_utf8(d1).unwrap().lines().count(), 1 + 60 * 6);
}

#[test]
fn every_sweep_record_is_clamped() {
    for collective in [
        Collective::ReduceScatter,
        Collective::AllGather,
        Collective::AllReduce,
    ] {
        for ag_model in [AgModel::Paper, AgModel::Reverse] {
            let g = SweepGrid {
                collective,
                ag_model,
                ..SweepGrid::default()
            };
            for r in run_grid(&g).unwrap() {
                assert!(r.speedup_pct >= 0.0);
                assert!(r.t_best_ns <= r.t_ring_ns);
            }
        }
    }
}

fn arb_params() -> impl Strategy<Value = CostParams> {
    (
        1usize..=7,
        0u64..(1 << 32),
        0.0..10_000.0f64,
        0.0..500.0f64,
        1.0..3200.0f64,
        0.0..100_000.0f64,
    )
        .prop_map(|(k, m, a, s, b, d)| CostParams::new(1 << k, m, a, s, b, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn simulator_matches_closed_forms(p in arb_params()) {
        let ring = phase_total(Phase::ReduceScatter, PhaseChoice::Ring, &p);
        prop_assert!(close(ring, ring_total_cost(&p).unwrap().total_ns));
        for t in 0..=p.rd_steps() {
            let choice = PhaseChoice::Switched { threshold: t };
            prop_assert!(close(
                phase_total(Phase::ReduceScatter, choice, &p),
                switched_rs_cost(t, &p).unwrap().total_ns
            ));
            prop_assert!(close(
                phase_total(Phase::AllGather, choice, &p),
                switched_ag_cost(t, &p, AgModel::Reverse).unwrap().total_ns
            ));
        }
    }

    #[test]
    fn ring_on_any_node_count_matches_model(n in 2usize..100, m in 0u64..(1 << 30), a in 0.0..1000.0f64) {
        let p = CostParams::new(n, m, a, 10.0, 800.0, 0.0).unwrap();
        prop_assert!(close(
            phase_total(Phase::AllGather, PhaseChoice::Ring, &p),
            ring_total_cost(&p).unwrap().total_ns
        ));
    }
}
