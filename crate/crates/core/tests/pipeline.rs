use std::collections::BTreeSet;

use num_bigint::BigInt;
use proptest::prelude::*;

use rqpe_core::circuit::{circuit_from_bit_values, estimate_theta, unitary_count};
use rqpe_core::reduction::{
    default_ladder, exact_replay, qubit_bounds, ReductionTrace, Strategy as Pass,
};
use rqpe_core::simulator::{outcome_distribution, sample_run, verify_perfect_distinguishability};
use rqpe_core::{
    build_circuit, normalize_phase_set, rational_from_float, reduce, remove_phantoms, Circuit,
    PhaseSet, Rational, Theta,
};

fn phase_set() -> impl Strategy<Value = PhaseSet> {
    (1i64..=256).prop_flat_map(|d| {
        let m_max = (2 * d as usize).min(16);
        prop::collection::btree_set(0..2 * d, 1..=m_max).prop_map(move |xs| {
            PhaseSet::from_ints(d, &xs.into_iter().collect::<Vec<_>>()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn generated_circuits_identify_every_phase(ps in phase_set()) {
        let trace = reduce(&ps);
        let circuit = remove_phantoms(&build_circuit(&trace, &ps).unwrap());
        let map = verify_perfect_distinguishability(&circuit, &ps).unwrap();
        prop_assert_eq!(map.len(), ps.len());
        let distinct: BTreeSet<&String> = map.values().collect();
        prop_assert_eq!(distinct.len(), ps.len());
        for (x, s) in &map {
            let bits: Vec<bool> = s.chars().map(|c| c == '1').collect();
            prop_assert_eq!(estimate_theta(&circuit, &bits).unwrap(), ps.phase(x));
        }
    }

    #[test]
    fn line_count_within_bounds(ps in phase_set()) {
        let trace = reduce(&ps);
        let (lower, _) = qubit_bounds(ps.len(), ps.max_numerator());
        prop_assert!(trace.measured_lines() >= lower);
        if trace.fallback_used {
            prop_assert_eq!(trace.strategy, Pass::DefaultLadder);
        }
    }

    #[test]
    fn trace_json_round_trip(ps in phase_set()) {
        let trace = reduce(&ps);
        let back = ReductionTrace::from_json(&trace.to_json()).unwrap();
        prop_assert_eq!(back, trace);
    }

    #[test]
    fn circuit_json_round_trip(ps in phase_set(), keep in any::<bool>()) {
        let c = build_circuit(&reduce(&ps), &ps).unwrap();
        let c = if keep { c } else { remove_phantoms(&c) };
        prop_assert_eq!(Circuit::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn deterministic_sampling_on_hypotheses(ps in phase_set(), seed in any::<u64>()) {
        let c = remove_phantoms(&build_circuit(&reduce(&ps), &ps).unwrap());
        let map = verify_perfect_distinguishability(&c, &ps).unwrap();
        for (x, s) in map {
            let bits = sample_run(&c, &Theta::PiMultiple(ps.phase(&x)), seed, 0);
            let got: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            prop_assert_eq!(got, s);
        }
    }

    #[test]
    fn ladder_always_replays(ps in phase_set()) {
        let ladder = default_ladder(&ps);
        let replay = exact_replay(ps.denominator(), &ladder.gcds(), &ladder.adds(), &ladder.phantoms(), ps.numerators());
        prop_assert!(replay.is_ok());
        if ps.len() > 1 {
            let c = build_circuit(&ladder, &ps).unwrap();
            prop_assert!(unitary_count(&c) < Rational::from_integer(ps.denominator() * 2));
        }
    }

    #[test]
    fn float_phases_normalize_like_rationals(xs in prop::collection::btree_set(0i64..128, 1..8)) {
        let floats: Vec<Rational> = xs
            .iter()
            .map(|&x| rational_from_float(x as f64 / 64.0, 1e-12).unwrap())
            .collect();
        let ps = normalize_phase_set(&floats).unwrap();
        let exact: Vec<Rational> = xs.iter().map(|&x| Rational::new(x, 64)).collect();
        prop_assert_eq!(ps, normalize_phase_set(&exact).unwrap());
    }
}

#[test]
fn ladder_bit_values_invert() {
    for d in [1i64, 2, 4, 8, 16, 32] {
        let ps = PhaseSet::from_ints(d, &(0..2 * d).collect::<Vec<_>>()).unwrap();
        let c = build_circuit(&reduce(&ps), &ps).unwrap();
        let p = circuit_from_bit_values(c.bit_values()).unwrap();
        assert_eq!(p.gcds, c.gcds());
        assert_eq!(p.adds, c.adds());
        assert_eq!(p.subset_sum_phases().unwrap(), ps);
    }
}

#[test]
fn phantom_removal_preserves_distribution_of_measured_lines() {
    let ps = PhaseSet::from_ints(70, &[66, 93, 108, 123, 138]).unwrap();
    let full = build_circuit(&reduce(&ps), &ps).unwrap();
    let removed = remove_phantoms(&full);
    for x in ps.numerators() {
        let t = Theta::PiMultiple(ps.phase(x));
        let a = outcome_distribution(&full, &t).unwrap();
        let b = outcome_distribution(&removed, &t).unwrap();
        // Marginalize the phantom (third of four lines) out of the full string.
        let marginal: Vec<f64> = (0..8)
            .map(|k: usize| {
                let hi = k >> 1;
                let lo = k & 1;
                let with = |bit: usize| a.probabilities[(hi << 2) | (bit << 1) | lo];
                with(0) + with(1)
            })
            .collect();
        assert_eq!(marginal, b.probabilities);
    }
    assert_eq!(full.num_trace_lines(), removed.num_trace_lines());
    assert_eq!(removed.phantom_indices(), vec![2]);
    assert_eq!(removed.denominator(), &BigInt::from(70));
}
