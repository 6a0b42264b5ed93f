//! Flirting: strategic awareness-raising between potential blocking
//! partners, the communication fixpoint, flirt-proof stability, and the
//! communication-augmented perturbed process.
//!
//! A player `i` flirts at `j` by revealing characteristics. What `i` can
//! raise is limited by `i`'s own picture of the world: `i` considers the
//! hypothetical states within its awareness where the pair `(i, j)` would
//! commonly believe it blocks and where `j` is at least as aware as `i`
//! already believes; the flirt raises `j`'s awareness by everything `j`
//! knows across those states.

use crate::awareness::{
    awareness_level, common_belief, enumerate_states, subspaces, Space, State,
};
use crate::dynamics::{
    is_absorbing, is_stable, merge_choices, run_process_impl, transition, Outcome, ProcessRun,
    StepDistribution,
};
use crate::market::{normalize_pair, Matching, PlayerId};
use crate::scenario::Scenario;
use crate::Error;

// ---------------------------------------------------------------------------
// Hypothetical states and raised awareness
// ---------------------------------------------------------------------------

/// The states `i` can entertain in which flirting at `j` is worthwhile:
/// states within `i`'s awareness where `(i, j)` commonly believe they block
/// `mu`, and where `j`'s awareness contains everything `i` already believes
/// `j` is aware of. Pairs currently matched to each other have none.
pub fn hypothetical_states(
    sc: &Scenario,
    i: PlayerId,
    omega: &State,
    mu: &Matching,
    j: PlayerId,
) -> Result<Vec<State>, Error> {
    if i.side == j.side {
        return Err(Error::InvalidPair(format!(
            "flirting needs opposite sides, got {} and {}",
            i, j
        )));
    }
    if mu.partner(i) == Some(j) {
        return Ok(Vec::new());
    }
    let prefs = &sc.prefs;
    let (m, w) = normalize_pair(i, j);
    let event = crate::dynamics::blocking_event(sc, m, w, mu)?;
    let own = awareness_level(prefs, i, omega);
    let j_floor = awareness_level(prefs, j, omega).intersect(own);
    let mut out = Vec::new();
    for cand in enumerate_states(prefs, own) {
        if !j_floor.is_subset(awareness_level(prefs, j, &cand)) {
            continue;
        }
        if common_belief(prefs, i, j, &event, &cand) {
            out.push(cand);
        }
    }
    Ok(out)
}

/// The awareness `i`'s flirt raises in `j`: the join of `j`'s awareness over
/// all hypothetical states (empty when there are none).
pub fn raised_awareness(
    sc: &Scenario,
    i: PlayerId,
    omega: &State,
    mu: &Matching,
    j: PlayerId,
) -> Result<Space, Error> {
    let states = hypothetical_states(sc, i, omega, mu, j)?;
    let jf = sc.prefs.flat(j);
    Ok(states
        .iter()
        .fold(Space::EMPTY, |acc, s| acc.union(s.awareness[jf])))
}

// ---------------------------------------------------------------------------
// Communication
// ---------------------------------------------------------------------------

/// One round of simultaneous flirting: every player's awareness grows by the
/// join of what the whole opposite side raises in them.
pub fn communicate(sc: &Scenario, omega: &State, mu: &Matching) -> State {
    let prefs = &sc.prefs;
    let mut awareness = omega.awareness.clone();
    for j in prefs.players() {
        let mut gain = Space::EMPTY;
        for i in prefs.side_players(j.side.opposite()) {
            gain = gain.union(
                raised_awareness(sc, i, omega, mu, j).expect("opposite-side pair"),
            );
        }
        let jf = prefs.flat(j);
        awareness[jf] = awareness[jf].union(gain.intersect(omega.space));
    }
    State { space: omega.space, awareness }
}

/// One recorded awareness gain: `from`'s flirt raised `chars` in `to`
/// during the given round.
#[derive(Debug, Clone)]
pub struct RaiseEvent {
    pub to: PlayerId,
    pub from: PlayerId,
    pub chars: Space,
    pub round: u32,
}

/// The result of iterating communication to its fixpoint.
#[derive(Debug, Clone)]
pub struct CommunicationResult {
    /// The fixpoint state.
    pub state: State,
    /// Number of rounds applied, including the final confirming round that
    /// changed nothing. An already-fixed state reports 1.
    pub rounds: u32,
    /// Every awareness gain, in (round, receiver, flirter) order.
    pub raised: Vec<RaiseEvent>,
    /// The state after each changing round (`round_states[r - 1]` is the
    /// state after round `r`).
    pub round_states: Vec<State>,
}

/// Iterate communication until nothing changes. Awareness only grows, so
/// the fixpoint is reached within players x characteristics rounds.
pub fn communicate_fixpoint(sc: &Scenario, omega: &State, mu: &Matching) -> CommunicationResult {
    let prefs = &sc.prefs;
    let cap = (prefs.n_players() * prefs.n_chars() + 2) as u32;
    let mut current = omega.clone();
    let mut raised = Vec::new();
    let mut round_states = Vec::new();
    let mut rounds = 0u32;
    loop {
        rounds += 1;
        assert!(rounds <= cap, "communication failed to reach a fixpoint");
        let mut next_awareness = current.awareness.clone();
        let mut changed = false;
        for j in prefs.players() {
            let jf = prefs.flat(j);
            for i in prefs.side_players(j.side.opposite()) {
                let gain = raised_awareness(sc, i, &current, mu, j)
                    .expect("opposite-side pair")
                    .intersect(current.space);
                let new_bits = Space(gain.0 & !current.awareness[jf].0);
                if !new_bits.is_empty() {
                    raised.push(RaiseEvent { to: j, from: i, chars: new_bits, round: rounds });
                }
                if gain.0 & !next_awareness[jf].0 != 0 {
                    changed = true;
                }
                next_awareness[jf] = next_awareness[jf].union(gain);
            }
        }
        if !changed {
            return CommunicationResult { state: current, rounds, raised, round_states };
        }
        current = State { space: current.space, awareness: next_awareness };
        round_states.push(current.clone());
    }
}

// ---------------------------------------------------------------------------
// Flirt-proofness
// ---------------------------------------------------------------------------

/// Stable and immune to communication: no flirt can raise anyone's
/// awareness at this outcome.
pub fn is_flirt_proof_stable(sc: &Scenario, mu: &Matching, omega: &State) -> bool {
    communicate(sc, omega, mu) == *omega && is_stable(sc, mu, omega)
}

/// Flirt-proof stable and absorbing.
pub fn is_flirt_proof_self_confirming(sc: &Scenario, mu: &Matching, omega: &State) -> bool {
    is_flirt_proof_stable(sc, mu, omega) && is_absorbing(sc, omega, mu)
}

// ---------------------------------------------------------------------------
// The communication-augmented process
// ---------------------------------------------------------------------------

/// One-step distribution of the communication-augmented process: the state
/// first takes the communication fixpoint, then the perturbed step runs
/// from there. When the matching is stable at the communicated state the
/// matching persists with probability one (this covers the flirt-proof
/// stable case, where communication changes nothing).
pub fn q_step_distribution(
    sc: &Scenario,
    omega: &State,
    mu: &Matching,
    epsilon: f64,
) -> Result<StepDistribution, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let comm = communicate_fixpoint(sc, omega, mu);
    let at = comm.state;
    if is_stable(sc, mu, &at) {
        let next = transition(sc, &at, mu);
        return Ok(merge_choices(vec![(
            None,
            1.0,
            Outcome { matching: mu.clone(), state: next },
        )]));
    }
    let hmb = crate::dynamics::mb_hat(sc, mu, &at);
    let b = crate::dynamics::b_set(sc, mu, &at);
    let mut choices = Vec::with_capacity(hmb.len() + b.len());
    for &pair in &hmb {
        let mu2 = mu.satisfy(pair)?;
        let next = transition(sc, &at, &mu2);
        choices.push((
            Some(pair),
            (1.0 - epsilon) / hmb.len() as f64,
            Outcome { matching: mu2, state: next },
        ));
    }
    for &pair in &b {
        let mu2 = mu.satisfy(pair)?;
        let next = transition(sc, &at, &mu2);
        choices.push((
            Some(pair),
            epsilon / b.len() as f64,
            Outcome { matching: mu2, state: next },
        ));
    }
    Ok(merge_choices(choices))
}

/// Run the communication-augmented process from `start`: each step first
/// plays all flirts to their fixpoint (recorded as "flirt" steps), then
/// samples the perturbed step at the communicated state. Stops when the
/// outcome is flirt-proof self-confirming or after `max_steps`
/// satisfaction/experience steps.
pub fn run_q_process(
    sc: &Scenario,
    start: &Outcome,
    epsilon: f64,
    seed: u64,
    max_steps: u64,
) -> Result<ProcessRun, Error> {
    run_process_impl(sc, start, epsilon, seed, max_steps, true)
}

/// Every flirt-proof self-confirming outcome over the join space (a subset
/// of the self-confirming outcomes). Bound semantics match
/// [`crate::dynamics::enumerate_self_confirming`].
pub fn enumerate_flirt_proof(sc: &Scenario, bound: u128) -> Result<Vec<Outcome>, Error> {
    let sc_outcomes = crate::dynamics::enumerate_self_confirming(sc, bound)?;
    let prefs = &sc.prefs;
    let mut out = Vec::new();
    'outcomes: for o in sc_outcomes {
        // Closed form of the flirt: whether i can raise anything new in j
        // depends only on the pair's awareness levels. A hypothetical state
        // contributes j's awareness b exactly when b extends what i already
        // believes j knows and the blocking event holds at a, b, and their
        // intersection, for some own-awareness a within i's level.
        for i in prefs.players() {
            for j in prefs.side_players(i.side.opposite()) {
                if o.matching.partner(i) == Some(j) {
                    continue;
                }
                let (m, w) = normalize_pair(i, j);
                let mu_m = o.matching.partner_or_self(m);
                let mu_w = o.matching.partner_or_self(w);
                let blocked = |s: Space| {
                    prefs.prefers_at(m, s, w, mu_m) && prefs.prefers_at(w, s, m, mu_w)
                };
                let own = awareness_level(prefs, i, &o.state);
                let aw_j = awareness_level(prefs, j, &o.state);
                let floor = aw_j.intersect(own);
                for a in subspaces(own) {
                    if !blocked(a) {
                        continue;
                    }
                    for b in subspaces(own) {
                        if !floor.is_subset(b) || b.is_subset(aw_j) {
                            continue;
                        }
                        if blocked(b) && blocked(a.intersect(b)) {
                            // i raises at least one new characteristic in j
                            continue 'outcomes;
                        }
                    }
                }
            }
        }
        out.push(o);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------

/// Convenience for witnesses: the first flirt that changes anything at an
/// outcome, as `(from, to, chars)`.
pub fn first_effective_flirt(
    sc: &Scenario,
    omega: &State,
    mu: &Matching,
) -> Option<(PlayerId, PlayerId, Space)> {
    let prefs = &sc.prefs;
    for j in prefs.players() {
        let aw_j = awareness_level(prefs, j, omega);
        for i in prefs.side_players(j.side.opposite()) {
            let gain = raised_awareness(sc, i, omega, mu, j).expect("opposite-side pair");
            let fresh = Space(gain.0 & !aw_j.0).intersect(omega.space);
            if !fresh.is_empty() {
                return Some((i, j, fresh));
            }
        }
    }
    None
}
