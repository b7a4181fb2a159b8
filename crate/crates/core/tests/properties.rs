//! Property tests for the hard process invariants and generator contracts.

use std::collections::BTreeMap;

use proptest::prelude::*;

use gambler_core::engine::{
    self, deal_tokens, run_direct, run_token_from, sample_schedule, token_state_at, ClockKind,
    MoneyState,
};
use gambler_core::models::{self, MeetingModel};
use gambler_core::rng::stream;
use gambler_core::stats;

/// Random small meeting model: n in [2,7], any subset of pairs, unit rates.
fn arb_model() -> impl Strategy<Value = MeetingModel> {
    (2usize..8, any::<u32>()).prop_map(|(n, mask)| {
        let mut edges = Vec::new();
        let mut bit = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if mask >> (bit % 32) & 1 == 1 {
                    edges.push((i, j));
                }
                bit += 1;
            }
        }
        models::from_edge_list(n, &edges).unwrap()
    })
}

proptest! {
    #[test]
    fn generators_satisfy_model_invariants(n in 1usize..30, rate in 0.01f64..10.0, seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let outputs = vec![
            models::complete_graph(n, rate).unwrap(),
            models::erdos_renyi(n, (n as f64).min(2.5), &mut rng).unwrap(),
        ];
        for m in outputs {
            // re-normalizing through the validating constructor must succeed
            // and be a fixed point
            let again = MeetingModel::new(m.n(), m.edges().to_vec()).unwrap();
            prop_assert_eq!(&again, &m);
            prop_assert!(m.edges().windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        }
    }

    #[test]
    fn ring_is_regular_and_connected(r in 3usize..9, k in 2usize..7) {
        let m = models::ring_of_near_cliques(r, k).unwrap();
        prop_assert_eq!(m.n(), r * k);
        prop_assert!(m.degrees().iter().all(|&d| d == r - 1));
        prop_assert!(models::is_connected(&m));
    }

    #[test]
    fn trees_are_trees(d in 1usize..5, depth in 0usize..5, seed in any::<u64>()) {
        prop_assert!(models::is_tree(&models::dary_tree(d, depth).unwrap()));
        if depth >= 1 && d >= 2 {
            prop_assert!(models::is_tree(&models::regular_tree(d, depth).unwrap()));
        }
        let off = models::GwOffspring::poisson(1.2).unwrap();
        let gw = models::galton_watson_tree(&off, depth, &mut stream(seed, 0)).unwrap();
        prop_assert!(models::is_tree(&gw));
    }

    #[test]
    fn run_invariants_hold(model in arb_model(), seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let schedule = sample_schedule(&model, ClockKind::Exponential, &mut rng).unwrap();
        let init = MoneyState::simple(model.n());
        let result = run_direct(&schedule, &init, &mut rng).unwrap();
        // conservation, permanent bankruptcy, legal transfers, anticlique
        engine::verify_run(&model, &init, &result).unwrap();
        // solvent count bookkeeping
        let n0 = model.n();
        prop_assert_eq!(result.solvent.len(), n0 - result.trajectory.len());
    }

    #[test]
    fn token_partition_consistency(model in arb_model(), seed in any::<u64>()) {
        let mut rng = stream(seed, 1);
        let schedule = sample_schedule(&model, ClockKind::Exponential, &mut rng).unwrap();
        let n = model.n();
        let deal = deal_tokens(n, &mut rng);
        let (result, final_tokens) = run_token_from(&schedule, &deal).unwrap();
        final_tokens.check_partition().unwrap();
        let init = MoneyState::simple(n);
        engine::verify_run(&model, &init, &result).unwrap();
        // |S_i| tracks the fortune at every event time
        for e in &result.trajectory {
            let sets = token_state_at(&deal, &result, e.time);
            sets.check_partition().unwrap();
            let fortunes = engine::fortunes_at(&result, &init, e.time);
            for (set, &x) in sets.sets().iter().zip(&fortunes) {
                prop_assert_eq!(set.len() as u64, x);
            }
        }
    }

    #[test]
    fn uniform_clock_matches_exponential_in_law_of_order(seed in any::<u64>()) {
        // the uniform time-change is monotone, so the event ORDER for a
        // coupled schedule is preserved under t -> 1 - e^{-t}
        let model = models::complete_graph(4, 1.0).unwrap();
        let mut rng = stream(seed, 2);
        let exp = sample_schedule(&model, ClockKind::Exponential, &mut rng).unwrap();
        let mapped: Vec<(u64, usize, usize)> = exp
            .events()
            .iter()
            .map(|&(t, i, j)| ((1.0 - (-t).exp()).to_bits(), i, j))
            .collect();
        let mut sorted = mapped.clone();
        sorted.sort();
        prop_assert_eq!(mapped, sorted);
    }
}

#[test]
fn final_fortune_law_direct_vs_token_path_graph() {
    // coupled on common schedules, the direct and token constructions give
    // the same law of the final fortune vector on the 5-path
    let model = models::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
    let reps = 30_000u64;
    let mut direct_counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let mut token_counts: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    let init = MoneyState::simple(5);
    for rep in 0..reps {
        let mut rng = stream(901, rep);
        let schedule = sample_schedule(&model, ClockKind::Exponential, &mut rng).unwrap();
        let direct = run_direct(&schedule, &init, &mut rng).unwrap();
        let (token, _) = engine::run_token(&schedule, 5, &mut rng).unwrap();
        *direct_counts
            .entry(direct.final_state.fortunes().to_vec())
            .or_insert(0) += 1;
        *token_counts
            .entry(token.final_state.fortunes().to_vec())
            .or_insert(0) += 1;
    }
    let (stat, p) = stats::chi_square_homogeneity(&direct_counts, &token_counts).unwrap();
    assert!(p > 1e-3, "direct vs token differ: stat {stat}, p {p}");
}

#[test]
fn augmented_matches_direct_in_winner_law() {
    let model = models::complete_graph(4, 1.0).unwrap();
    let init = MoneyState::from_weights(vec![1, 2, 3, 4]).unwrap();
    let reps = 40_000u64;
    let mut direct_counts: BTreeMap<usize, u64> = BTreeMap::new();
    let mut augmented_counts: BTreeMap<usize, u64> = BTreeMap::new();
    for rep in 0..reps {
        let mut rng = stream(907, rep);
        let schedule = sample_schedule(&model, ClockKind::Exponential, &mut rng).unwrap();
        let direct = run_direct(&schedule, &init, &mut rng).unwrap();
        let order = engine::size_biased_order(&init, &mut rng).unwrap();
        let augmented = engine::run_augmented(&schedule, &init, &order).unwrap();
        *direct_counts.entry(direct.solvent[0]).or_insert(0) += 1;
        *augmented_counts.entry(augmented.solvent[0]).or_insert(0) += 1;
    }
    // both must follow Pr(L=i) = x_i: check against the exact weights
    for (counts, label) in [(&direct_counts, "direct"), (&augmented_counts, "augmented")] {
        for (i, &w) in [1u64, 2, 3, 4].iter().enumerate() {
            let f = *counts.get(&i).unwrap_or(&0) as f64 / reps as f64;
            let exact = w as f64 / 10.0;
            assert!(
                (f - exact).abs() < 0.01,
                "{label} winner {i}: {f} vs {exact}"
            );
        }
    }
}
