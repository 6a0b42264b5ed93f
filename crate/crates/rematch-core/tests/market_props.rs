//! Properties of the classic (full-awareness) matching layer, checked
//! against randomized markets and matchings.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rematch_core::market::{
    blocking_pairs, collapse_pairs, count_matchings, deferred_acceptance, enumerate_matchings,
    is_stable_classic, mutually_optimal_blocking_pairs, optimal_blocking_pairs, run_deterministic,
    run_perturbed_classic, ClassicMarket, Matching, PlayerId, Policy, RankOrder, Side, Terminal,
};

/// A market with uniformly shuffled rankings; self may land anywhere, so
/// individually irrational matchings and divorce pairs are exercised.
fn random_market(rng: &mut ChaCha8Rng, n_men: usize, n_women: usize) -> ClassicMarket {
    let men: Vec<String> = (1..=n_men).map(|i| format!("m{}", i)).collect();
    let women: Vec<String> = (1..=n_women).map(|i| format!("w{}", i)).collect();
    let mut rank = Vec::new();
    for i in 1..=n_men {
        let owner = PlayerId::man(i);
        let mut order: Vec<PlayerId> = (1..=n_women).map(PlayerId::woman).collect();
        order.push(owner);
        order.shuffle(rng);
        rank.push(RankOrder { owner, order });
    }
    for i in 1..=n_women {
        let owner = PlayerId::woman(i);
        let mut order: Vec<PlayerId> = (1..=n_men).map(PlayerId::man).collect();
        order.push(owner);
        order.shuffle(rng);
        rank.push(RankOrder { owner, order });
    }
    ClassicMarket::from_rankings(men, women, rank).expect("shuffled rankings are permutations")
}

fn random_matching(rng: &mut ChaCha8Rng, n_men: usize, n_women: usize) -> Matching {
    let mut women: Vec<usize> = (1..=n_women).collect();
    women.shuffle(rng);
    let mut pairs = Vec::new();
    for m in 1..=n_men.min(n_women) {
        if rng.gen_bool(0.6) {
            pairs.push((m, women[m - 1]));
        }
    }
    Matching::from_pairs(n_men, n_women, &pairs).expect("distinct pairs")
}

#[test]
fn deferred_acceptance_is_stable_on_random_markets() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..300 {
        let n_men = rng.gen_range(1..=6);
        let n_women = rng.gen_range(1..=5);
        let market = random_market(&mut rng, n_men, n_women);
        for side in [Side::Man, Side::Woman] {
            let mu = deferred_acceptance(&market, side);
            assert!(
                is_stable_classic(&market, &mu),
                "round {} side {:?}: {} has blocking pairs {:?}",
                round,
                side,
                mu.label(),
                blocking_pairs(&market, &mu)
            );
        }
    }
}

#[test]
fn satisfying_a_blocking_pair_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut satisfied_any = false;
    for _ in 0..400 {
        let n = rng.gen_range(2..=5);
        let market = random_market(&mut rng, n, n);
        let mu = random_matching(&mut rng, n, n);
        for pair in blocking_pairs(&market, &mu) {
            satisfied_any = true;
            let next = mu.satisfy(pair).expect("blocking pair is satisfiable");
            let (a, b) = pair;
            if a == b {
                // Divorce: the player ends up single.
                assert_eq!(next.partner(a), None);
            } else {
                assert_eq!(next.partner(a), Some(b));
                assert_eq!(next.partner(b), Some(a));
                // Former partners are abandoned, everyone else untouched.
                for p in market.players() {
                    if p == a || p == b {
                        continue;
                    }
                    match mu.partner(p) {
                        Some(q) if q == a || q == b => assert_eq!(next.partner(p), None),
                        other => assert_eq!(next.partner(p), other),
                    }
                }
            }
        }
    }
    assert!(satisfied_any, "generator never produced a blocking pair");
}

#[test]
fn best_pair_sets_nest() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..400 {
        let n_men = rng.gen_range(1..=5);
        let n_women = rng.gen_range(1..=5);
        let market = random_market(&mut rng, n_men, n_women);
        let mu = random_matching(&mut rng, n_men, n_women);
        let blocking = blocking_pairs(&market, &mu);
        let optimal = collapse_pairs(&optimal_blocking_pairs(&market, &mu));
        let mutual = mutually_optimal_blocking_pairs(&market, &mu);
        assert!(optimal.is_subset(&blocking), "optimal ⊄ blocking");
        assert!(mutual.is_subset(&optimal), "mutual ⊄ optimal");
        if blocking.is_empty() {
            assert!(optimal.is_empty() && mutual.is_empty());
        } else {
            // Every player in some blocking pair owns exactly one optimal pair.
            assert!(!optimal.is_empty());
        }
    }
}

#[test]
fn deterministic_runs_terminate_within_matching_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..60 {
        let n = rng.gen_range(2..=4);
        let market = random_market(&mut rng, n, n);
        let mu = random_matching(&mut rng, n, n);
        let budget = count_matchings(n, n) as usize + 1;
        let res = run_deterministic(&market, &mu, &Policy::MutualOptimalFirst, budget)
            .expect("mutual-optimal-first never errors");
        match res.terminal {
            Terminal::Stable(m) => assert!(is_stable_classic(&market, &m)),
            Terminal::Cycle { entry, period } => {
                assert!(period >= 1);
                assert_eq!(
                    res.path[entry].matching,
                    res.path[entry + period].matching,
                    "cycle endpoints disagree"
                );
            }
            // Pigeonhole: more steps than matchings forces a revisit first.
            Terminal::Exhausted(_) => panic!("budget covers every matching"),
        }
    }
}

#[test]
fn perturbed_classic_paths_satisfy_optimal_pairs_only() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for round in 0..40 {
        let n = rng.gen_range(2..=4);
        let market = random_market(&mut rng, n, n);
        let mu = random_matching(&mut rng, n, n);
        let res = run_perturbed_classic(&market, &mu, 0.3, 1000 + round, 2000)
            .expect("valid epsilon");
        for window in res.path.windows(2) {
            let before = &window[0].matching;
            let after = &window[1];
            let pair = after.satisfied.expect("perturbed steps satisfy a pair");
            let optimal = collapse_pairs(&optimal_blocking_pairs(&market, before));
            assert!(optimal.contains(&pair), "{:?} not optimal at {}", pair, before.label());
            assert_eq!(&before.satisfy(pair).unwrap(), &after.matching);
        }
        if let Terminal::Stable(m) = &res.terminal {
            assert!(is_stable_classic(&market, m));
        }
    }
}

#[test]
fn matching_enumeration_agrees_with_count() {
    for (n_men, n_women) in [(1, 1), (2, 2), (2, 3), (3, 3), (4, 2)] {
        let all = enumerate_matchings(n_men, n_women);
        assert_eq!(all.len() as u128, count_matchings(n_men, n_women));
        let distinct: BTreeSet<Vec<(usize, usize)>> =
            all.iter().map(|m| m.matched_pairs()).collect();
        assert_eq!(distinct.len(), all.len(), "duplicate matchings");
    }
}

#[test]
fn scripted_runs_reject_non_blocking_pairs() {
    let market = ClassicMarket::from_index_lists(
        &[vec![1, 2], vec![1, 2]],
        &[vec![1, 2], vec![1, 2]],
    )
    .unwrap();
    // m1-w1 is matched and mutually top: satisfying it again must fail.
    let mu = Matching::from_pairs(2, 2, &[(1, 1)]).unwrap();
    let script = vec![(PlayerId::man(1), PlayerId::woman(1))];
    let err = run_deterministic(&market, &mu, &Policy::Scripted(script), 10);
    assert!(err.is_err(), "satisfying a matched pair must be rejected");
}
