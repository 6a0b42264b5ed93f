//! States with per-player awareness, projections, type maps, belief and
//! pairwise common-belief operators.
//!
//! A state is a space (the set of characteristics expressible at it) plus one
//! awareness subspace per player. The family of all states over all
//! subspaces, with projections that intersect every awareness set with the
//! target space, forms the canonical structure used throughout: every
//! awareness profile is realized exactly once per space (richness), and
//! states of a space that agree on all awareness sets are identical (no
//! redundancies).

use std::collections::HashSet;
use std::fmt;

use crate::market::{PlayerId, RankOrder, Side};
use crate::Error;

// ---------------------------------------------------------------------------
// Spaces
// ---------------------------------------------------------------------------

/// A set of characteristics, as a bitmask over the scenario's characteristic
/// list. The empty space is the base space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Space(pub u32);

impl Space {
    pub const EMPTY: Space = Space(0);

    /// The space containing the first `n` characteristics.
    pub fn full(n: usize) -> Space {
        debug_assert!(n <= 32);
        if n == 32 {
            Space(u32::MAX)
        } else {
            Space((1u32 << n) - 1)
        }
    }

    pub fn union(self, other: Space) -> Space {
        Space(self.0 | other.0)
    }

    pub fn intersect(self, other: Space) -> Space {
        Space(self.0 & other.0)
    }

    pub fn is_subset(self, other: Space) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn contains(self, bit: usize) -> bool {
        self.0 & (1 << bit) != 0
    }

    pub fn with(self, bit: usize) -> Space {
        Space(self.0 | (1 << bit))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Indices of the characteristics in this space, ascending.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&b| self.0 & (1 << b) != 0)
    }
}

/// All subspaces of `space`, ascending by bitmask value.
pub fn subspaces(space: Space) -> Vec<Space> {
    let m = space.0;
    let mut out = Vec::with_capacity(1 << m.count_ones());
    let mut s = 0u32;
    loop {
        out.push(Space(s));
        if s == m {
            break;
        }
        s = (s.wrapping_sub(m)) & m; // next subset of m in ascending order
    }
    out
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// A state: its space, and each player's awareness subspace (indexed by flat
/// player id, men first). Invariant: every awareness set is a subset of the
/// space. States compare by structural equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub space: Space,
    pub awareness: Vec<Space>,
}

impl State {
    pub fn new(space: Space, awareness: Vec<Space>) -> Result<State, Error> {
        for (i, aw) in awareness.iter().enumerate() {
            if !aw.is_subset(space) {
                return Err(Error::BadProjection(format!(
                    "player #{} aware of characteristics outside the state space",
                    i
                )));
            }
        }
        Ok(State { space, awareness })
    }

    /// Everyone aware of everything in `space`.
    pub fn fully_aware(space: Space, n_players: usize) -> State {
        State { space, awareness: vec![space; n_players] }
    }

    /// Everyone's awareness empty.
    pub fn all_unaware(space: Space, n_players: usize) -> State {
        State { space, awareness: vec![Space::EMPTY; n_players] }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .awareness
            .iter()
            .map(|aw| format!("{:b}", aw.0))
            .collect();
        write!(f, "[space {:b}; {}]", self.space.0, parts.join(","))
    }
}

// ---------------------------------------------------------------------------
// Preference maps
// ---------------------------------------------------------------------------

/// Strict rankings for every player at every space, with fast positional
/// lookup. The ranking of a player is over the opposite side plus staying
/// alone, and is constant within each space.
#[derive(Debug, Clone)]
pub struct PreferenceMap {
    pub men: Vec<String>,
    pub women: Vec<String>,
    pub chars: Vec<String>,
    /// `table[flat player][space mask]`
    table: Vec<Vec<RankOrder>>,
    /// `pos[flat player][space mask][flat other]`: 0 = most preferred,
    /// `u8::MAX` for players never ranked (same side).
    pos: Vec<Vec<Vec<u8>>>,
}

impl PreferenceMap {
    /// Build from a complete ranking assignment. Every player needs a
    /// ranking at every one of the `2^k` spaces; each ranking must be a
    /// permutation of the opposite side plus the owner.
    pub fn build(
        men: Vec<String>,
        women: Vec<String>,
        chars: Vec<String>,
        rankings: Vec<(PlayerId, Space, RankOrder)>,
    ) -> Result<PreferenceMap, Error> {
        let n_men = men.len();
        let n_women = women.len();
        let n = n_men + n_women;
        if chars.len() > 8 {
            return Err(Error::Parse(format!(
                "{} characteristics; at most 8 are supported",
                chars.len()
            )));
        }
        let n_masks = 1usize << chars.len();
        let mut slots: Vec<Vec<Option<RankOrder>>> = vec![vec![None; n_masks]; n];
        let shape = Shape { n_men, n_women };
        for (p, space, order) in rankings {
            if p.index == 0 || p.index > shape.side_len(p.side) {
                return Err(Error::UnknownPlayer(p.to_string()));
            }
            if space.0 as usize >= n_masks {
                return Err(Error::UnknownCharacteristic(format!(
                    "space mask {:b} for {}",
                    space.0, p
                )));
            }
            if order.owner != p {
                return Err(Error::MalformedRanking {
                    player: p.to_string(),
                    reason: "ranking owner mismatch".into(),
                });
            }
            let mut expected: std::collections::BTreeSet<PlayerId> = (1..=shape
                .side_len(p.side.opposite()))
                .map(|i| PlayerId { side: p.side.opposite(), index: i })
                .collect();
            expected.insert(p);
            order.validate(&expected)?;
            let slot = &mut slots[shape.flat(p)][space.0 as usize];
            if slot.is_some() {
                return Err(Error::MalformedRanking {
                    player: p.to_string(),
                    reason: "duplicate ranking for one space".into(),
                });
            }
            *slot = Some(order);
        }
        let mut table = Vec::with_capacity(n);
        for (flat, row) in slots.into_iter().enumerate() {
            let p = shape.player(flat);
            let mut full_row = Vec::with_capacity(n_masks);
            for (mask, slot) in row.into_iter().enumerate() {
                match slot {
                    Some(order) => full_row.push(order),
                    None => {
                        return Err(Error::MissingRanking {
                            player: p.to_string(),
                            space: space_label(&chars, Space(mask as u32)),
                        })
                    }
                }
            }
            table.push(full_row);
        }
        let mut pos = vec![vec![vec![u8::MAX; n]; n_masks]; n];
        for flat in 0..n {
            for mask in 0..n_masks {
                for (rank_pos, &q) in table[flat][mask].order.iter().enumerate() {
                    pos[flat][mask][shape.flat(q)] = rank_pos as u8;
                }
            }
        }
        Ok(PreferenceMap { men, women, chars, table, pos })
    }

    pub fn n_men(&self) -> usize {
        self.men.len()
    }

    pub fn n_women(&self) -> usize {
        self.women.len()
    }

    pub fn n_players(&self) -> usize {
        self.men.len() + self.women.len()
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }

    fn shape(&self) -> Shape {
        Shape { n_men: self.men.len(), n_women: self.women.len() }
    }

    /// The join space: every characteristic expressible.
    pub fn join_space(&self) -> Space {
        Space::full(self.chars.len())
    }

    pub fn flat(&self, p: PlayerId) -> usize {
        self.shape().flat(p)
    }

    pub fn player_from_flat(&self, flat: usize) -> PlayerId {
        self.shape().player(flat)
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        let shape = self.shape();
        (0..self.n_players()).map(move |f| shape.player(f))
    }

    pub fn side_players(&self, side: Side) -> impl Iterator<Item = PlayerId> + '_ {
        let n = match side {
            Side::Man => self.n_men(),
            Side::Woman => self.n_women(),
        };
        (1..=n).map(move |i| PlayerId { side, index: i })
    }

    pub fn label_of(&self, p: PlayerId) -> &str {
        match p.side {
            Side::Man => &self.men[p.index - 1],
            Side::Woman => &self.women[p.index - 1],
        }
    }

    /// Parse a player label ("m2", "w1", or a scenario label).
    pub fn parse_player(&self, label: &str) -> Result<PlayerId, Error> {
        if let Some(i) = self.men.iter().position(|l| l == label) {
            return Ok(PlayerId::man(i + 1));
        }
        if let Some(i) = self.women.iter().position(|l| l == label) {
            return Ok(PlayerId::woman(i + 1));
        }
        Err(Error::UnknownPlayer(label.to_string()))
    }

    pub fn space_label(&self, space: Space) -> String {
        space_label(&self.chars, space)
    }

    pub fn parse_space(&self, text: &str) -> Result<Space, Error> {
        if text == "base" || text.is_empty() {
            return Ok(Space::EMPTY);
        }
        let mut space = Space::EMPTY;
        for part in text.split('+') {
            match self.chars.iter().position(|c| c == part) {
                Some(bit) => space = space.with(bit),
                None => return Err(Error::UnknownCharacteristic(part.to_string())),
            }
        }
        Ok(space)
    }

    /// The ranking of `p` at `space`.
    pub fn ranking_at(&self, p: PlayerId, space: Space) -> &RankOrder {
        &self.table[self.flat(p)][space.0 as usize]
    }

    /// Whether `p` at `space` strictly prefers `a` over `b`.
    pub fn prefers_at(&self, p: PlayerId, space: Space, a: PlayerId, b: PlayerId) -> bool {
        let row = &self.pos[self.flat(p)][space.0 as usize];
        let pa = row[self.flat(a)];
        let pb = row[self.flat(b)];
        debug_assert!(pa != u8::MAX && pb != u8::MAX, "comparing unranked players");
        pa < pb
    }

    /// Rank position of `q` in `p`'s ranking at `space` (0 = most preferred).
    pub fn position_at(&self, p: PlayerId, space: Space, q: PlayerId) -> usize {
        let v = self.pos[self.flat(p)][space.0 as usize][self.flat(q)];
        debug_assert!(v != u8::MAX);
        v as usize
    }
}

#[derive(Clone, Copy)]
struct Shape {
    n_men: usize,
    n_women: usize,
}

impl Shape {
    fn side_len(self, side: Side) -> usize {
        match side {
            Side::Man => self.n_men,
            Side::Woman => self.n_women,
        }
    }

    fn flat(self, p: PlayerId) -> usize {
        match p.side {
            Side::Man => p.index - 1,
            Side::Woman => self.n_men + p.index - 1,
        }
    }

    fn player(self, flat: usize) -> PlayerId {
        if flat < self.n_men {
            PlayerId::man(flat + 1)
        } else {
            PlayerId::woman(flat - self.n_men + 1)
        }
    }
}

/// Render a space as "base" or "+"-joined characteristic labels.
pub fn space_label(chars: &[String], space: Space) -> String {
    if space.is_empty() {
        return "base".to_string();
    }
    let parts: Vec<&str> = space.iter().map(|b| chars[b].as_str()).collect();
    parts.join("+")
}

// ---------------------------------------------------------------------------
// Core operators
// ---------------------------------------------------------------------------

/// Project a state down to a subspace of its space: the space shrinks and
/// every player's awareness is intersected with the target.
pub fn project(prefs: &PreferenceMap, omega: &State, target: Space) -> Result<State, Error> {
    if !target.is_subset(omega.space) {
        return Err(Error::BadProjection(format!(
            "target {} is not a subspace of {}",
            prefs.space_label(target),
            prefs.space_label(omega.space)
        )));
    }
    Ok(State {
        space: target,
        awareness: omega.awareness.iter().map(|aw| aw.intersect(target)).collect(),
    })
}

/// Player `i`'s type at `omega`: the projection of the state onto `i`'s own
/// awareness. Within it, `i`'s picture of every player `j` is `j`'s
/// awareness cut down to what `i` can express.
pub fn type_map(prefs: &PreferenceMap, i: PlayerId, omega: &State) -> State {
    let aw_i = omega.awareness[prefs.flat(i)];
    State {
        space: aw_i,
        awareness: omega.awareness.iter().map(|aw| aw.intersect(aw_i)).collect(),
    }
}

/// The space of `i`'s type at `omega`: what `i` is aware of.
pub fn awareness_level(prefs: &PreferenceMap, i: PlayerId, omega: &State) -> Space {
    omega.awareness[prefs.flat(i)]
}

/// The ranking `i` actually acts on at `omega`: the one attached to `i`'s
/// own awareness level.
pub fn effective_preference<'a>(
    prefs: &'a PreferenceMap,
    i: PlayerId,
    omega: &State,
) -> &'a RankOrder {
    prefs.ranking_at(i, awareness_level(prefs, i, omega))
}

/// An event: a decidable set of states.
pub struct Event<'a> {
    pub label: String,
    pred: Box<dyn Fn(&State) -> bool + 'a>,
}

impl<'a> Event<'a> {
    pub fn new<F: Fn(&State) -> bool + 'a>(label: impl Into<String>, pred: F) -> Event<'a> {
        Event { label: label.into(), pred: Box::new(pred) }
    }

    pub fn contains(&self, omega: &State) -> bool {
        (self.pred)(omega)
    }
}

/// Whether `i` believes the event at `omega`: the event holds at `i`'s type.
pub fn believes(prefs: &PreferenceMap, i: PlayerId, event: &Event, omega: &State) -> bool {
    event.contains(&type_map(prefs, i, omega))
}

/// Pairwise common belief between `a` and `b` at `omega`: the event holds at
/// every state reachable by a nonempty sequence of their type maps. Computed
/// as a depth-first closure; the visited set doubles as the memo, so each
/// reachable state is expanded once.
pub fn common_belief(
    prefs: &PreferenceMap,
    a: PlayerId,
    b: PlayerId,
    event: &Event,
    omega: &State,
) -> bool {
    let mut seen: Vec<State> = Vec::with_capacity(4);
    let mut stack = vec![type_map(prefs, a, omega), type_map(prefs, b, omega)];
    while let Some(s) = stack.pop() {
        if seen.contains(&s) {
            continue;
        }
        if !event.contains(&s) {
            return false;
        }
        stack.push(type_map(prefs, a, &s));
        stack.push(type_map(prefs, b, &s));
        seen.push(s);
    }
    true
}

/// All states of a space: every profile of per-player awareness subspaces,
/// in a deterministic odometer order.
pub fn enumerate_states(prefs: &PreferenceMap, space: Space) -> Vec<State> {
    let subs = subspaces(space);
    let n = prefs.n_players();
    let total = subs.len().checked_pow(n as u32).expect("state space too large to enumerate");
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    loop {
        out.push(State {
            space,
            awareness: idx.iter().map(|&k| subs[k]).collect(),
        });
        let mut carry = 0;
        loop {
            if carry == n {
                return out;
            }
            idx[carry] += 1;
            if idx[carry] < subs.len() {
                break;
            }
            idx[carry] = 0;
            carry += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Structure validation
// ---------------------------------------------------------------------------

/// A failed structural check, with a witness.
#[derive(Debug, Clone)]
pub struct Violation {
    pub check: &'static str,
    pub witness: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.check, self.witness)
    }
}

/// Check the structural laws of the state family and preference map:
/// type-map confinement, introspection and projection consistency,
/// projection commutation, uniqueness of states per awareness profile,
/// richness, and monotone agreement of rankings across spaces. Exhaustive
/// while the space is small, deterministically sampled beyond that.
pub fn validate_structure(prefs: &PreferenceMap) -> Vec<Violation> {
    let mut out = Vec::new();
    monotone_agreement(prefs, &mut out);
    for space in subspaces(prefs.join_space()) {
        structure_at_space(prefs, space, &mut out);
        if out.len() > 32 {
            break; // enough witnesses
        }
    }
    out
}

fn monotone_agreement(prefs: &PreferenceMap, out: &mut Vec<Violation>) {
    let spaces = subspaces(prefs.join_space());
    for p in prefs.players() {
        let mut others: Vec<PlayerId> = prefs.side_players(p.side.opposite()).collect();
        others.push(p);
        for &s1 in &spaces {
            for &s2 in &spaces {
                let join = s1.union(s2);
                for &a in &others {
                    for &b in &others {
                        if a == b {
                            continue;
                        }
                        if prefs.prefers_at(p, s1, a, b)
                            && prefs.prefers_at(p, s2, a, b)
                            && !prefs.prefers_at(p, join, a, b)
                        {
                            out.push(Violation {
                                check: "monotone-agreement",
                                witness: format!(
                                    "{} ranks {} over {} at {} and at {}, but not at {}",
                                    p,
                                    a,
                                    b,
                                    prefs.space_label(s1),
                                    prefs.space_label(s2),
                                    prefs.space_label(join)
                                ),
                            });
                            if out.len() > 32 {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn structure_at_space(prefs: &PreferenceMap, space: Space, out: &mut Vec<Violation>) {
    let n = prefs.n_players();
    let per_player = 1usize << space.len();
    // Skip exhaustive enumeration when the space is too big; the bundled
    // scenarios stay far under this.
    let exhaustive = (per_player as u128).pow(n as u32) <= 8192;
    let states = if exhaustive {
        enumerate_states(prefs, space)
    } else {
        sampled_states(prefs, space, 512)
    };

    // Richness: every awareness profile occurs (count check suffices for the
    // constructive enumeration; sampling skips it).
    if exhaustive {
        let expected = (per_player as u128).pow(n as u32);
        if states.len() as u128 != expected {
            out.push(Violation {
                check: "richness",
                witness: format!(
                    "space {} has {} states, expected {}",
                    prefs.space_label(space),
                    states.len(),
                    expected
                ),
            });
        }
        // No redundancies: distinct states of one space have distinct type
        // profiles.
        let mut profiles: HashSet<Vec<State>> = HashSet::with_capacity(states.len());
        for omega in &states {
            let profile: Vec<State> =
                prefs.players().map(|i| type_map(prefs, i, omega)).collect();
            if !profiles.insert(profile) {
                out.push(Violation {
                    check: "no-redundancies",
                    witness: format!(
                        "two states of {} share a type profile",
                        prefs.space_label(space)
                    ),
                });
                break;
            }
        }
    }

    for omega in &states {
        for i in prefs.players() {
            let t = type_map(prefs, i, omega);
            // Confinement: the type lives in a subspace of the state space.
            if !t.space.is_subset(omega.space) {
                out.push(Violation {
                    check: "confinement",
                    witness: format!("type of {} at {} leaves the space", i, omega),
                });
            }
            // Introspection: a player's type is a fixed point of its own map.
            if type_map(prefs, i, &t) != t {
                out.push(Violation {
                    check: "introspection",
                    witness: format!("t_{}(t_{}(omega)) != t_{}(omega) at {}", i, i, i, omega),
                });
            }
            // Projection consistency: projecting the state then taking the
            // type equals taking the type then projecting, for every
            // subspace of the player's awareness.
            for sub in subspaces(t.space) {
                let lhs = type_map(prefs, i, &project(prefs, omega, sub).unwrap());
                let rhs = project(prefs, &t, sub).unwrap();
                if lhs != rhs {
                    out.push(Violation {
                        check: "projection-consistency",
                        witness: format!(
                            "player {} at {} with target {}",
                            i,
                            omega,
                            prefs.space_label(sub)
                        ),
                    });
                }
            }
            // Awareness never grows under projection.
            for sub in subspaces(omega.space) {
                let proj = project(prefs, omega, sub).unwrap();
                if !awareness_level(prefs, i, &proj).is_subset(awareness_level(prefs, i, omega)) {
                    out.push(Violation {
                        check: "projection-awareness",
                        witness: format!("player {} gains awareness projecting {} to {}",
                            i, omega, prefs.space_label(sub)),
                    });
                }
            }
            if out.len() > 32 {
                return;
            }
        }
        // Projection commutation: r_{S2} after r_{S1} equals r_{S2}.
        for s1 in subspaces(omega.space) {
            for s2 in subspaces(s1) {
                let once = project(prefs, omega, s2).unwrap();
                let twice = project(prefs, &project(prefs, omega, s1).unwrap(), s2).unwrap();
                if once != twice {
                    out.push(Violation {
                        check: "projection-commutation",
                        witness: format!(
                            "{} via {} differs from direct projection to {}",
                            omega,
                            prefs.space_label(s1),
                            prefs.space_label(s2)
                        ),
                    });
                }
            }
        }
        if out.len() > 32 {
            return;
        }
    }
}

/// Deterministic pseudo-random sample of states of a space (used only when
/// exhaustive enumeration would be too large).
fn sampled_states(prefs: &PreferenceMap, space: Space, count: usize) -> Vec<State> {
    let n = prefs.n_players();
    let mut seedling: u64 = 0x9e3779b97f4a7c15;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut awareness = Vec::with_capacity(n);
        for _ in 0..n {
            seedling = seedling.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            awareness.push(Space((seedling >> 32) as u32).intersect(space));
        }
        out.push(State { space, awareness });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_char_prefs() -> PreferenceMap {
        // 1x1 market, two characteristics, all four spaces share a ranking.
        let m1 = PlayerId::man(1);
        let w1 = PlayerId::woman(1);
        let mut rankings = Vec::new();
        for mask in 0..4u32 {
            rankings.push((
                m1,
                Space(mask),
                RankOrder { owner: m1, order: vec![w1, m1] },
            ));
            rankings.push((
                w1,
                Space(mask),
                RankOrder { owner: w1, order: vec![m1, w1] },
            ));
        }
        PreferenceMap::build(
            vec!["m1".into()],
            vec!["w1".into()],
            vec!["c1".into(), "c2".into()],
            rankings,
        )
        .unwrap()
    }

    #[test]
    fn subspace_enumeration_is_complete_and_ascending() {
        let subs = subspaces(Space(0b101));
        assert_eq!(subs, vec![Space(0b000), Space(0b001), Space(0b100), Space(0b101)]);
    }

    #[test]
    fn projection_to_empty_space_is_unique() {
        let prefs = two_char_prefs();
        let space = prefs.join_space();
        for omega in enumerate_states(&prefs, space) {
            let bottom = project(&prefs, &omega, Space::EMPTY).unwrap();
            assert_eq!(bottom, State::all_unaware(Space::EMPTY, 2));
        }
    }

    #[test]
    fn projection_requires_subspace() {
        let prefs = two_char_prefs();
        let omega = State::all_unaware(Space(0b01), 2);
        assert!(project(&prefs, &omega, Space(0b10)).is_err());
    }

    #[test]
    fn type_map_is_idempotent() {
        let prefs = two_char_prefs();
        for omega in enumerate_states(&prefs, prefs.join_space()) {
            for i in prefs.players() {
                let t = type_map(&prefs, i, &omega);
                assert_eq!(type_map(&prefs, i, &t), t);
            }
        }
    }

    #[test]
    fn canonical_structure_validates_clean() {
        let prefs = two_char_prefs();
        let violations = validate_structure(&prefs);
        assert!(violations.is_empty(), "{:?}", violations);
    }

    #[test]
    fn common_belief_on_shared_awareness() {
        let prefs = two_char_prefs();
        let m1 = PlayerId::man(1);
        let w1 = PlayerId::woman(1);
        let join = prefs.join_space();
        // Event: both players aware of c1.
        let event = Event::new("both aware of c1", move |s: &State| {
            s.awareness.iter().all(|aw| aw.contains(0))
        });
        let both = State { space: join, awareness: vec![Space(0b01), Space(0b01)] };
        assert!(common_belief(&prefs, m1, w1, &event, &both));
        // One-sided awareness breaks common belief.
        let one = State { space: join, awareness: vec![Space(0b01), Space::EMPTY] };
        assert!(!common_belief(&prefs, m1, w1, &event, &one));
    }
}
