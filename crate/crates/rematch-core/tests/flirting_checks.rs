//! Communication behavior: hypothetical reasoning, multi-round chains,
//! and the relation between the two perturbed processes.

use rematch_core::awareness::{awareness_level, enumerate_states, Space};
use rematch_core::dynamics::{outcome_key, p_step_distribution, Outcome};
use rematch_core::flirting::{
    communicate, communicate_fixpoint, first_effective_flirt, hypothetical_states,
    q_step_distribution, raised_awareness, run_q_process,
};
use rematch_core::market::enumerate_matchings;
use rematch_core::scenario::{builtin_scenarios, find_builtin, parse_scenario, Scenario};

/// A market where awareness must travel through an intermediary: only w2
/// knows c1; her flirt teaches m1, and only then can m1's own flirt teach
/// w3. One communication round is not enough to reach the fixpoint.
fn chain_scenario() -> Scenario {
    parse_scenario(
        r#"{
  "schema_version": "1",
  "name": "chain",
  "players": { "men": ["m1", "m2"], "women": ["w1", "w2", "w3"] },
  "characteristics": ["c1"],
  "preferences": {
    "m1": { "base": ["w1", "w2", "w3"], "c1": ["w2", "w3", "w1"] },
    "m2": { "base": ["w2", "w1", "w3"], "c1": ["w2", "w1", "w3"] },
    "w1": { "base": ["m1", "m2"], "c1": ["m1", "m2"] },
    "w2": { "base": ["m2", "m1"], "c1": ["m1", "m2"] },
    "w3": { "base": ["m1", "m2"], "c1": ["m1", "m2"] }
  },
  "rules": [],
  "initial": {
    "matching": { "m1": "w1", "m2": "w2" },
    "awareness": { "m1": [], "m2": [], "w1": [], "w2": ["c1"], "w3": [] }
  }
}"#,
    )
    .expect("chain scenario is well formed")
}

#[test]
fn communication_chains_across_rounds() {
    let sc = chain_scenario();
    let o = sc.initial_outcome();
    let m1 = sc.prefs.parse_player("m1").unwrap();
    let w2 = sc.prefs.parse_player("w2").unwrap();
    let w3 = sc.prefs.parse_player("w3").unwrap();

    // One round teaches m1 only; w3 is still in the dark.
    let once = communicate(&sc, &o.state, &o.matching);
    assert_eq!(awareness_level(&sc.prefs, m1, &once), Space(1));
    assert_eq!(awareness_level(&sc.prefs, w3, &once), Space::EMPTY);
    assert_ne!(once, o.state);

    // The fixpoint needs a second effective round: m1 passes c1 on to w3.
    let fix = communicate_fixpoint(&sc, &o.state, &o.matching);
    assert_eq!(fix.rounds, 3, "two changing rounds plus the confirming one");
    assert_eq!(awareness_level(&sc.prefs, w3, &fix.state), Space(1));
    assert_eq!(fix.raised.len(), 2);
    assert_eq!((fix.raised[0].from, fix.raised[0].to, fix.raised[0].round), (w2, m1, 1));
    assert_eq!((fix.raised[1].from, fix.raised[1].to, fix.raised[1].round), (m1, w3, 2));
    assert_eq!(fix.round_states.len(), 2);
    assert_eq!(fix.round_states[0], once);
    assert_eq!(fix.round_states[1], fix.state);

    // m2 and w1 hear nothing: no blocking pair of theirs is conceivable.
    let m2 = sc.prefs.parse_player("m2").unwrap();
    let w1 = sc.prefs.parse_player("w1").unwrap();
    assert_eq!(awareness_level(&sc.prefs, m2, &fix.state), Space::EMPTY);
    assert_eq!(awareness_level(&sc.prefs, w1, &fix.state), Space::EMPTY);
}

#[test]
fn chain_scenario_has_a_unique_communication_terminal() {
    let sc = chain_scenario();
    let o = sc.initial_outcome();
    let expected = sc.parse_matching_arg("m1:w2,m2:w1").unwrap();
    for seed in 0..20u64 {
        let run = run_q_process(&sc, &o, 0.3, seed, 1000).unwrap();
        assert!(run.converged);
        assert_eq!(run.terminal.matching, expected, "seed {}", seed);
        let m1 = sc.prefs.parse_player("m1").unwrap();
        assert_eq!(awareness_level(&sc.prefs, m1, &run.terminal.state), Space(1));
    }
}

#[test]
fn flirts_raise_only_what_the_flirter_conceives() {
    for sc in builtin_scenarios() {
        if sc.prefs.n_players() > 4 {
            continue;
        }
        for mu in enumerate_matchings(sc.prefs.n_men(), sc.prefs.n_women()) {
            for omega in enumerate_states(&sc.prefs, sc.prefs.join_space()) {
                for i in sc.prefs.players() {
                    for j in sc.prefs.side_players(i.side.opposite()) {
                        let own = awareness_level(&sc.prefs, i, &omega);
                        let raise = raised_awareness(&sc, i, &omega, &mu, j).unwrap();
                        assert!(
                            raise.is_subset(own),
                            "{}: {} raised {:?} beyond own level {:?}",
                            sc.name,
                            i,
                            raise,
                            own
                        );
                        // Hypothetical states all live in the flirter's space
                        // and respect what the flirter knows j already knows.
                        let floor = awareness_level(&sc.prefs, j, &omega).intersect(own);
                        for h in hypothetical_states(&sc, i, &omega, &mu, j).unwrap() {
                            assert_eq!(h.space, own);
                            assert!(floor.is_subset(awareness_level(&sc.prefs, j, &h)));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn matched_partners_do_not_flirt_and_sides_are_checked() {
    let sc = find_builtin("example6").unwrap();
    let o = sc.initial_outcome();
    let m1 = sc.prefs.parse_player("m1").unwrap();
    let m2 = sc.prefs.parse_player("m2").unwrap();
    let w1 = sc.prefs.parse_player("w1").unwrap();
    assert!(hypothetical_states(&sc, m1, &o.state, &o.matching, w1).unwrap().is_empty());
    assert!(hypothetical_states(&sc, m1, &o.state, &o.matching, m2).is_err());
}

#[test]
fn example6_witness_is_the_preference_channel_flirt() {
    let sc = find_builtin("example6").unwrap();
    let o = sc.initial_outcome();
    let (from, to, chars) = first_effective_flirt(&sc, &o.state, &o.matching)
        .expect("example6 starts with a live flirt");
    assert_eq!(sc.prefs.label_of(from), "w2");
    assert_eq!(sc.prefs.label_of(to), "m1");
    assert_eq!(chars, Space(1));
}

/// Wherever one communication round changes nothing, the two processes take
/// identical steps.
#[test]
fn q_reduces_to_p_at_communication_fixpoints() {
    for sc in builtin_scenarios() {
        if sc.prefs.n_players() > 4 {
            continue;
        }
        for mu in enumerate_matchings(sc.prefs.n_men(), sc.prefs.n_women()) {
            for omega in enumerate_states(&sc.prefs, sc.prefs.join_space()) {
                if communicate(&sc, &omega, &mu) != omega {
                    continue;
                }
                let p = p_step_distribution(&sc, &omega, &mu, 0.25).unwrap();
                let q = q_step_distribution(&sc, &omega, &mu, 0.25).unwrap();
                assert_eq!(p.entries.len(), q.entries.len());
                for (pe, qe) in p.entries.iter().zip(&q.entries) {
                    let pk = outcome_key(&Outcome { matching: pe.matching.clone(), state: pe.state.clone() });
                    let qk = outcome_key(&Outcome { matching: qe.matching.clone(), state: qe.state.clone() });
                    assert_eq!(pk, qk, "{}", sc.name);
                    assert!((pe.probability - qe.probability).abs() < 1e-12);
                    assert_eq!(pe.pairs, qe.pairs);
                }
            }
        }
    }
}

#[test]
fn fixpoint_round_count_is_bounded() {
    for sc in builtin_scenarios() {
        if sc.prefs.n_players() > 4 {
            continue;
        }
        let cap = (sc.prefs.n_players() * sc.prefs.n_chars() + 2) as u32;
        for mu in enumerate_matchings(sc.prefs.n_men(), sc.prefs.n_women()) {
            for omega in enumerate_states(&sc.prefs, sc.prefs.join_space()) {
                let fix = communicate_fixpoint(&sc, &omega, &mu);
                assert!(fix.rounds <= cap);
                // Applying communication at the fixpoint changes nothing.
                assert_eq!(communicate(&sc, &fix.state, &mu), fix.state);
            }
        }
    }
}
