//! Matching dynamics under evolving awareness: discovery transitions,
//! stability with pairwise common belief of blocking, best blocking sets,
//! the perturbed one-step process, and outcome enumeration.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::awareness::{
    awareness_level, common_belief, subspaces, Event, Space, State,
};
use crate::market::{
    count_matchings, enumerate_matchings, normalize_pair, pair_label, Matching, Pair, PlayerId,
    Side,
};
use crate::scenario::Scenario;
use crate::trace::TraceRecord;
use crate::Error;

// ---------------------------------------------------------------------------
// Discovery rules and transitions
// ---------------------------------------------------------------------------

/// One discovery rule: when the matching satisfies the condition (all listed
/// pairs matched, all listed players single), the named players become aware
/// of the named characteristics. Conditions read only the matching, so the
/// transition commutes with projections by construction.
#[derive(Debug, Clone)]
pub struct DiscoveryRule {
    pub matched: Vec<(PlayerId, PlayerId)>,
    pub single: Vec<PlayerId>,
    pub gains: Vec<(PlayerId, Space)>,
}

impl DiscoveryRule {
    pub fn applies(&self, mu: &Matching) -> bool {
        self.matched.iter().all(|&(m, w)| mu.partner(m) == Some(w))
            && self.single.iter().all(|&p| mu.partner(p).is_none())
    }
}

/// A matching together with the state it lives at.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Outcome {
    pub matching: Matching,
    pub state: State,
}

impl Outcome {
    /// Canonical human-readable label: matching plus awareness profile.
    pub fn label(&self, sc: &Scenario) -> String {
        format!("{} @ {}", self.matching.label(), sc.awareness_label(&self.state))
    }
}

/// Apply every discovery rule whose condition holds under `mu`,
/// simultaneously: each named player's awareness grows by the union of the
/// granted characteristics (cut to the state's space). Awareness never
/// shrinks; states outside the join space grow by what their space can
/// express, which is exactly the projection-commuting extension.
pub fn transition(sc: &Scenario, omega: &State, mu: &Matching) -> State {
    let mut awareness = omega.awareness.clone();
    for rule in &sc.rules {
        if rule.applies(mu) {
            for &(p, gain) in &rule.gains {
                let flat = sc.prefs.flat(p);
                awareness[flat] = awareness[flat].union(gain.intersect(omega.space));
            }
        }
    }
    State { space: omega.space, awareness }
}

/// The state is a fixed point of the transition under `mu`.
pub fn is_absorbing(sc: &Scenario, omega: &State, mu: &Matching) -> bool {
    transition(sc, omega, mu) == *omega
}

// ---------------------------------------------------------------------------
// Blocking and stability
// ---------------------------------------------------------------------------

/// The event that `(m, w)` blocks `mu`: at a state, each ranks the other
/// above their current partner per the rankings of that state's space.
/// Requires `mu(m) != w`.
pub fn blocking_event<'a>(
    sc: &'a Scenario,
    m: PlayerId,
    w: PlayerId,
    mu: &'a Matching,
) -> Result<Event<'a>, Error> {
    if m.side != Side::Man || w.side != Side::Woman {
        return Err(Error::InvalidPair(format!(
            "blocking event needs a man-woman pair, got ({},{})",
            m, w
        )));
    }
    if mu.partner(m) == Some(w) {
        return Err(Error::InvalidPair(format!(
            "({},{}) are matched to each other",
            m, w
        )));
    }
    let prefs = &sc.prefs;
    let mu_m = mu.partner_or_self(m);
    let mu_w = mu.partner_or_self(w);
    Ok(Event::new(format!("blocking {}", pair_label(&(m, w))), move |s: &State| {
        prefs.prefers_at(m, s.space, w, mu_m) && prefs.prefers_at(w, s.space, m, mu_w)
    }))
}

/// Stable at a state: no matched player effectively prefers staying alone,
/// and no man-woman pair has pairwise common belief that it blocks.
pub fn is_stable(sc: &Scenario, mu: &Matching, omega: &State) -> bool {
    let prefs = &sc.prefs;
    for i in prefs.players() {
        if let Some(q) = mu.partner(i) {
            if prefs.prefers_at(i, awareness_level(prefs, i, omega), i, q) {
                return false;
            }
        }
    }
    for m in prefs.side_players(Side::Man) {
        for w in prefs.side_players(Side::Woman) {
            if mu.partner(m) == Some(w) {
                continue;
            }
            let event = blocking_event(sc, m, w, mu).expect("unmatched pair");
            if common_belief(prefs, m, w, &event, omega) {
                return false;
            }
        }
    }
    true
}

/// For `check` output: man-woman pairs that block under the rankings of the
/// state's own space but are not commonly believed to block by the pair.
pub fn latent_blocking_pairs(sc: &Scenario, mu: &Matching, omega: &State) -> Vec<Pair> {
    let prefs = &sc.prefs;
    let mut out = Vec::new();
    for m in prefs.side_players(Side::Man) {
        for w in prefs.side_players(Side::Woman) {
            if mu.partner(m) == Some(w) {
                continue;
            }
            let event = blocking_event(sc, m, w, mu).expect("unmatched pair");
            if event.contains(omega) && !common_belief(prefs, m, w, &event, omega) {
                out.push((m, w));
            }
        }
    }
    out
}

/// Stable and absorbing.
pub fn is_self_confirming(sc: &Scenario, mu: &Matching, omega: &State) -> bool {
    is_stable(sc, mu, omega) && is_absorbing(sc, omega, mu)
}

// ---------------------------------------------------------------------------
// Best blocking sets
// ---------------------------------------------------------------------------

/// Blocking-partner candidate sets at a state: for each woman the men she
/// commonly-believes she blocks with (plus herself when she effectively
/// prefers staying alone), and symmetrically for each man.
#[derive(Debug, Clone, Default)]
pub struct BestSets {
    pub per_woman: BTreeMap<PlayerId, Vec<PlayerId>>,
    pub per_man: BTreeMap<PlayerId, Vec<PlayerId>>,
}

pub fn best_blocking_sets(sc: &Scenario, mu: &Matching, omega: &State) -> BestSets {
    let prefs = &sc.prefs;
    let mut sets = BestSets::default();
    for w in prefs.side_players(Side::Woman) {
        let mut cands = Vec::new();
        for m in prefs.side_players(Side::Man) {
            if mu.partner(m) == Some(w) {
                continue;
            }
            let event = blocking_event(sc, m, w, mu).expect("unmatched pair");
            if common_belief(prefs, m, w, &event, omega) {
                cands.push(m);
            }
        }
        if mu.partner(w).is_some()
            && prefs.prefers_at(w, awareness_level(prefs, w, omega), w, mu.partner_or_self(w))
        {
            cands.push(w);
        }
        if !cands.is_empty() {
            sets.per_woman.insert(w, cands);
        }
    }
    for m in prefs.side_players(Side::Man) {
        let mut cands = Vec::new();
        for w in prefs.side_players(Side::Woman) {
            if mu.partner(m) == Some(w) {
                continue;
            }
            let event = blocking_event(sc, m, w, mu).expect("unmatched pair");
            if common_belief(prefs, m, w, &event, omega) {
                cands.push(w);
            }
        }
        if mu.partner(m).is_some()
            && prefs.prefers_at(m, awareness_level(prefs, m, omega), m, mu.partner_or_self(m))
        {
            cands.push(m);
        }
        if !cands.is_empty() {
            sets.per_man.insert(m, cands);
        }
    }
    sets
}

/// Each player's best satisfiable pair: the best candidate from its blocking
/// set under its effective ranking, as a normalized pair.
pub fn b_set(sc: &Scenario, mu: &Matching, omega: &State) -> BTreeSet<Pair> {
    owner_bests(sc, mu, omega)
        .into_iter()
        .map(|(owner, best)| normalize_pair(owner, best))
        .collect()
}

fn owner_bests(sc: &Scenario, mu: &Matching, omega: &State) -> BTreeMap<PlayerId, PlayerId> {
    let prefs = &sc.prefs;
    let sets = best_blocking_sets(sc, mu, omega);
    let mut out = BTreeMap::new();
    for (owner, cands) in sets.per_woman.iter().chain(sets.per_man.iter()) {
        let level = awareness_level(prefs, *owner, omega);
        let best = cands
            .iter()
            .copied()
            .min_by_key(|&q| prefs.position_at(*owner, level, q))
            .expect("candidate sets are nonempty");
        out.insert(*owner, best);
    }
    out
}

/// Pairs that are best for both members (self pairs are trivially mutual).
pub fn mb_set(sc: &Scenario, mu: &Matching, omega: &State) -> BTreeSet<Pair> {
    let bests = owner_bests(sc, mu, omega);
    let mut out = BTreeSet::new();
    for (&owner, &best) in &bests {
        if owner == best {
            out.insert((owner, owner));
        } else if bests.get(&best) == Some(&owner) {
            out.insert(normalize_pair(owner, best));
        }
    }
    out
}

/// The mutually-best set when nonempty, otherwise the best set.
pub fn mb_hat(sc: &Scenario, mu: &Matching, omega: &State) -> BTreeSet<Pair> {
    let mb = mb_set(sc, mu, omega);
    if mb.is_empty() {
        b_set(sc, mu, omega)
    } else {
        mb
    }
}

// ---------------------------------------------------------------------------
// One-step distribution and process runs
// ---------------------------------------------------------------------------

/// One successor of the one-step process with its probability mass and the
/// satisfied pairs that lead to it (empty for the stable no-satisfaction
/// transition).
#[derive(Debug, Clone)]
pub struct StepEntry {
    pub matching: Matching,
    pub state: State,
    pub probability: f64,
    pub pairs: Vec<Pair>,
}

/// The full one-step distribution at an outcome; entries are merged per
/// successor and canonically ordered.
#[derive(Debug, Clone)]
pub struct StepDistribution {
    pub entries: Vec<StepEntry>,
}

impl StepDistribution {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }

    /// Masses are positive and sum to one (tolerance 1e-12).
    pub fn validate(&self) -> Result<(), Error> {
        if self.entries.iter().any(|e| e.probability <= 0.0 || e.probability > 1.0) {
            return Err(Error::InvalidMatching("step probability out of range".into()));
        }
        if (self.total() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMatching(format!(
                "step distribution sums to {}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Hashable identity of an outcome (used to merge and deduplicate).
pub fn outcome_key(o: &Outcome) -> (Vec<(usize, usize)>, u32, Vec<u32>) {
    (
        o.matching.matched_pairs(),
        o.state.space.0,
        o.state.awareness.iter().map(|a| a.0).collect(),
    )
}

/// Pair-level choices before merging: `(satisfied pair, weight, successor)`.
/// Stable outcomes yield the single no-satisfaction transition.
fn step_choices(
    sc: &Scenario,
    omega: &State,
    mu: &Matching,
    epsilon: f64,
) -> Result<Vec<(Option<Pair>, f64, Outcome)>, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if is_stable(sc, mu, omega) {
        let next = transition(sc, omega, mu);
        return Ok(vec![(None, 1.0, Outcome { matching: mu.clone(), state: next })]);
    }
    let hmb = mb_hat(sc, mu, omega);
    let b = b_set(sc, mu, omega);
    debug_assert!(!b.is_empty(), "unstable outcome without best pairs");
    let mut choices = Vec::with_capacity(hmb.len() + b.len());
    for &pair in &hmb {
        let mu2 = mu.satisfy(pair)?;
        let next = transition(sc, omega, &mu2);
        choices.push((
            Some(pair),
            (1.0 - epsilon) / hmb.len() as f64,
            Outcome { matching: mu2, state: next },
        ));
    }
    for &pair in &b {
        let mu2 = mu.satisfy(pair)?;
        let next = transition(sc, omega, &mu2);
        choices.push((
            Some(pair),
            epsilon / b.len() as f64,
            Outcome { matching: mu2, state: next },
        ));
    }
    Ok(choices)
}

/// The one-step distribution of the perturbed process at `(omega, mu)`:
/// if stable, the matching persists and the state takes its discovery step;
/// otherwise mass `1 - epsilon` spreads uniformly over the mutually-best
/// pairs (or the best set when no mutual pair exists) and mass `epsilon`
/// spreads uniformly over the best set, each satisfaction moving to
/// `(mu', transition(omega, mu'))`.
pub fn p_step_distribution(
    sc: &Scenario,
    omega: &State,
    mu: &Matching,
    epsilon: f64,
) -> Result<StepDistribution, Error> {
    let choices = step_choices(sc, omega, mu, epsilon)?;
    Ok(merge_choices(choices))
}

pub(crate) fn merge_choices(choices: Vec<(Option<Pair>, f64, Outcome)>) -> StepDistribution {
    let mut merged: BTreeMap<(Vec<(usize, usize)>, u32, Vec<u32>), StepEntry> = BTreeMap::new();
    for (pair, weight, outcome) in choices {
        let key = outcome_key(&outcome);
        let entry = merged.entry(key).or_insert_with(|| StepEntry {
            matching: outcome.matching.clone(),
            state: outcome.state.clone(),
            probability: 0.0,
            pairs: Vec::new(),
        });
        entry.probability += weight;
        if let Some(p) = pair {
            if !entry.pairs.contains(&p) {
                entry.pairs.push(p);
            }
        }
    }
    let mut entries: Vec<StepEntry> = merged.into_values().collect();
    for e in &mut entries {
        e.pairs.sort();
    }
    StepDistribution { entries }
}

/// A finished process run.
#[derive(Debug, Clone)]
pub struct ProcessRun {
    pub terminal: Outcome,
    /// False when the step budget ran out first.
    pub converged: bool,
    pub steps: u64,
    pub records: Vec<TraceRecord>,
}

/// Run the perturbed process from `start`, sampling the one-step
/// distribution until the outcome is self-confirming or `max_steps` steps
/// have been taken. A step that changes the matching records as "satisfy",
/// a pure discovery step as "experience"; a uniform draw is consumed (and
/// recorded) only when more than one alternative exists.
pub fn run_p_process(
    sc: &Scenario,
    start: &Outcome,
    epsilon: f64,
    seed: u64,
    max_steps: u64,
) -> Result<ProcessRun, Error> {
    run_process_impl(sc, start, epsilon, seed, max_steps, false)
}

pub(crate) fn run_process_impl(
    sc: &Scenario,
    start: &Outcome,
    epsilon: f64,
    seed: u64,
    max_steps: u64,
    communicate_first: bool,
) -> Result<ProcessRun, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mu = start.matching.clone();
    let mut omega = start.state.clone();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut step: u64 = 0;
    let mut satisfactions: u64 = 0;
    loop {
        let done = if communicate_first {
            crate::flirting::is_flirt_proof_self_confirming(sc, &mu, &omega)
        } else {
            is_self_confirming(sc, &mu, &omega)
        };
        if done {
            step += 1;
            records.push(TraceRecord::snapshot(sc, step, "terminal", None, &mu, &omega, None));
            return Ok(ProcessRun {
                terminal: Outcome { matching: mu, state: omega },
                converged: true,
                steps: satisfactions,
                records,
            });
        }
        if satisfactions >= max_steps {
            return Ok(ProcessRun {
                terminal: Outcome { matching: mu, state: omega },
                converged: false,
                steps: satisfactions,
                records,
            });
        }
        if communicate_first {
            let comm = crate::flirting::communicate_fixpoint(sc, &omega, &mu);
            if comm.state != omega {
                for ev in &comm.raised {
                    step += 1;
                    let snapshot_state = &comm.round_states[(ev.round - 1) as usize];
                    records.push(TraceRecord::flirt(sc, step, &mu, snapshot_state, ev));
                }
                omega = comm.state;
                // The raised awareness may already close the outcome.
                continue;
            }
        }
        let choices = step_choices(sc, &omega, &mu, epsilon)?;
        let (pair, next, draw) = sample_choice(&choices, &mut rng);
        step += 1;
        satisfactions += 1;
        let kind = if next.matching == mu { "experience" } else { "satisfy" };
        records.push(TraceRecord::snapshot(
            sc,
            step,
            kind,
            pair,
            &next.matching,
            &next.state,
            draw,
        ));
        mu = next.matching;
        omega = next.state;
    }
}

fn sample_choice(
    choices: &[(Option<Pair>, f64, Outcome)],
    rng: &mut ChaCha8Rng,
) -> (Option<Pair>, Outcome, Option<f64>) {
    if choices.len() == 1 {
        let (pair, _, outcome) = &choices[0];
        return (*pair, outcome.clone(), None);
    }
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (pair, weight, outcome) in choices {
        acc += weight;
        if u < acc {
            return (*pair, outcome.clone(), Some(u));
        }
    }
    let (pair, _, outcome) = choices.last().expect("nonempty choices");
    (*pair, outcome.clone(), Some(u))
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Number of (join-space state, matching) outcomes, or None on overflow.
pub fn outcome_space_size(sc: &Scenario) -> Option<u128> {
    let per_player = 1u128 << sc.prefs.n_chars();
    let mut states: u128 = 1;
    for _ in 0..sc.prefs.n_players() {
        states = states.checked_mul(per_player)?;
    }
    states.checked_mul(count_matchings(sc.prefs.n_men(), sc.prefs.n_women()))
}

/// Every self-confirming outcome over the join space, in deterministic
/// order. Refuses (with the size estimate) when the outcome space exceeds
/// `bound`.
///
/// The stability check inside the scan uses the closed form of pairwise
/// common belief at canonical states: the pair's type closure consists of
/// the projections to the two awareness levels and their intersection, so a
/// space-determined blocking event is commonly believed exactly when it
/// holds at those three spaces. Equivalence with the literal operator chain
/// is pinned by tests.
pub fn enumerate_self_confirming(sc: &Scenario, bound: u128) -> Result<Vec<Outcome>, Error> {
    let needed = outcome_space_size(sc).unwrap_or(u128::MAX);
    if needed > bound {
        return Err(Error::BoundExceeded { needed, bound });
    }
    let prefs = &sc.prefs;
    let n = prefs.n_players();
    let join = prefs.join_space();
    let spaces = subspaces(join);
    let n_masks = spaces.len();
    let nm = prefs.n_men();
    let nw = prefs.n_women();
    let mut out = Vec::new();

    for mu in enumerate_matchings(nm, nw) {
        // Per-space blocking truth per unmatched pair, and per-space
        // self-preference for matched players.
        let mut blocked = vec![vec![false; nm * nw]; n_masks];
        let mut self_pref = vec![vec![false; n]; n_masks];
        for mask in 0..n_masks {
            let space = Space(mask as u32);
            for m in prefs.side_players(Side::Man) {
                for w in prefs.side_players(Side::Woman) {
                    if mu.partner(m) == Some(w) {
                        continue;
                    }
                    let b = prefs.prefers_at(m, space, w, mu.partner_or_self(m))
                        && prefs.prefers_at(w, space, m, mu.partner_or_self(w));
                    blocked[mask][(m.index - 1) * nw + (w.index - 1)] = b;
                }
            }
            for i in prefs.players() {
                if let Some(q) = mu.partner(i) {
                    self_pref[mask][prefs.flat(i)] = prefs.prefers_at(i, space, i, q);
                }
            }
        }
        // A pair blocked at every space is commonly believed blocked at
        // every state; same for a player preferring self at every space.
        let always_blocked = (0..nm * nw).any(|p| (0..n_masks).all(|s| blocked[s][p]));
        let always_self = (0..n).any(|f| (0..n_masks).all(|s| self_pref[s][f]));
        if always_blocked || always_self {
            continue;
        }
        // Fired effects of this matching (state space is the join).
        let mut effects = vec![Space::EMPTY; n];
        for rule in &sc.rules {
            if rule.applies(&mu) {
                for &(p, gain) in &rule.gains {
                    let f = prefs.flat(p);
                    effects[f] = effects[f].union(gain);
                }
            }
        }
        // Scan all awareness profiles.
        let mut idx = vec![0usize; n];
        'states: loop {
            // absorbing: everyone already aware of what the rules grant
            let mut ok = true;
            for f in 0..n {
                if !effects[f].is_subset(spaces[idx[f]]) {
                    ok = false;
                    break;
                }
            }
            if ok {
                // individual rationality under effective preferences
                for f in 0..n {
                    if self_pref[spaces[idx[f]].0 as usize][f] {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                // no commonly-believed blocking pair
                'pairs: for mi in 0..nm {
                    let aw_m = spaces[idx[mi]];
                    for wi in 0..nw {
                        let pidx = mi * nw + wi;
                        let aw_w = spaces[idx[nm + wi]];
                        if blocked[aw_m.0 as usize][pidx]
                            && blocked[aw_w.0 as usize][pidx]
                            && blocked[aw_m.intersect(aw_w).0 as usize][pidx]
                        {
                            ok = false;
                            break 'pairs;
                        }
                    }
                }
            }
            if ok {
                out.push(Outcome {
                    matching: mu.clone(),
                    state: State {
                        space: join,
                        awareness: idx.iter().map(|&k| spaces[k]).collect(),
                    },
                });
            }
            // odometer
            let mut carry = 0;
            loop {
                if carry == n {
                    break 'states;
                }
                idx[carry] += 1;
                if idx[carry] < n_masks {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Infidelity and welfare
// ---------------------------------------------------------------------------

/// A one-night deviation: the pair matches just long enough for the
/// discovery rules to fire, then the matching snaps back. Returns the
/// original matching at the transited state.
pub fn apply_infidelity(
    sc: &Scenario,
    omega: &State,
    mu: &Matching,
    pair: Pair,
) -> Result<Outcome, Error> {
    let (a, b) = pair;
    if a == b || a.side == b.side {
        return Err(Error::InvalidPair(format!(
            "infidelity takes a man-woman pair, got {}",
            pair_label(&pair)
        )));
    }
    let tentative = mu.satisfy(normalize_pair(a, b))?;
    let state = transition(sc, omega, &tentative);
    Ok(Outcome { matching: mu.clone(), state })
}

/// Direction of a player's welfare change between two matchings, judged by
/// the player's effective ranking at `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Welfare {
    Better,
    Same,
    Worse,
}

impl std::fmt::Display for Welfare {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Welfare::Better => "better",
            Welfare::Same => "same",
            Welfare::Worse => "worse",
        };
        write!(f, "{}", s)
    }
}

pub fn welfare_delta(
    sc: &Scenario,
    i: PlayerId,
    mu_before: &Matching,
    mu_after: &Matching,
    omega: &State,
) -> Welfare {
    let prefs = &sc.prefs;
    let level = awareness_level(prefs, i, omega);
    let before = prefs.position_at(i, level, mu_before.partner_or_self(i));
    let after = prefs.position_at(i, level, mu_after.partner_or_self(i));
    match after.cmp(&before) {
        std::cmp::Ordering::Less => Welfare::Better,
        std::cmp::Ordering::Equal => Welfare::Same,
        std::cmp::Ordering::Greater => Welfare::Worse,
    }
}
