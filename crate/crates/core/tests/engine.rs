//! Engine invariants on random small tasks, checked against the
//! explicit-state oracle and the simulator.

use proptest::prelude::*;

use seqeq::bench::{explore, mutate, random_task, variants, Kind, Size};
use seqeq::sat::SolveResult;
use seqeq::sec::{bmc_cnf, check_sec, Status};
use seqeq::sim::{replay, Trace};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_agrees_with_oracle(seed in 0u64..1_000_000) {
        let s = random_task(seed).unwrap();
        let t = s.task().unwrap();
        let v = check_sec(&t).unwrap();
        prop_assert!(v.status == s.expected || v.status == Status::Inconclusive, "seed {seed}: {} vs {}", v.status, s.expected);
        if let Some(trace) = &v.trace {
            let r = replay(&t.spec, &t.imp, &t.mapping, trace).unwrap();
            prop_assert_eq!(r.first_mismatch.map(|m| m.0), v.cex_cycle);
            prop_assert_eq!(Trace::parse(&trace.to_text()).unwrap(), trace.clone());
        }
    }

    #[test]
    fn swapping_sides_keeps_status(seed in 0u64..1_000_000) {
        let s = random_task(seed).unwrap();
        let t = s.task().unwrap();
        let a = check_sec(&t).unwrap().status;
        let b = check_sec(&t.swapped()).unwrap().status;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn bmc_query_is_sat_exactly_at_first_cex(seed in 0u64..1_000_000) {
        let s = random_task(seed).unwrap();
        let t = s.task().unwrap();
        let o = explore(&t, 1 << 16).unwrap();
        let first = o.cex_cycle.unwrap_or(usize::MAX);
        for k in 0..=first.min(4) {
            let sat = matches!(bmc_cnf(&t, k).unwrap().solve(&[], None), SolveResult::Sat(_));
            prop_assert_eq!(sat, k == first, "seed {} k {}", seed, k);
        }
    }

    #[test]
    fn mutants_differ_and_parse(seed in 0u64..1_000_000) {
        let base = variants(Kind::OpcodeBuckets, 0, Kind::OpcodeBuckets.default_size()).unwrap().remove(0);
        let (m, _) = mutate(&base.imp, seed).unwrap();
        prop_assert_ne!(&m, &base.imp);
        prop_assert!(base.config.task_from_sources(&base.spec, &m).is_ok());
    }
}

#[test]
fn generators_agree_with_engine_at_small_sizes() {
    for kind in Kind::ALL {
        let size = if kind == Kind::OpcodeBuckets { Size { width: 4, depth: 1 } } else { Size { width: 2, depth: 2 } };
        for s in variants(kind, 1, size).unwrap() {
            let v = check_sec(&s.task().unwrap()).unwrap();
            let semantic_gap = kind == Kind::HelperChain && s.variant == "no_helpers";
            if semantic_gap {
                assert_ne!(v.status, Status::NotEquivalent);
            } else {
                assert_eq!(v.status, s.expected, "{kind} {}", s.variant);
            }
        }
    }
}
