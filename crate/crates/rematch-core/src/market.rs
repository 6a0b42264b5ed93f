//! Classic two-sided matching: markets, blocking pairs, deferred acceptance,
//! and the satisfying processes that walk from matching to matching.
//!
//! Everything here is full-awareness matching theory. Players rank the whole
//! opposite side plus the option of staying alone; a pair blocks when both
//! strictly prefer each other over their current partners. The process
//! runners replay scripted satisfaction sequences, follow the
//! mutual-optimal-first policy, or sample the perturbed process.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::Error;

// ---------------------------------------------------------------------------
// Players and pairs
// ---------------------------------------------------------------------------

/// Which side of the market a player stands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Man,
    Woman,
}

impl Side {
    /// The other side.
    pub fn opposite(self) -> Side {
        match self {
            Side::Man => Side::Woman,
            Side::Woman => Side::Man,
        }
    }
}

/// A player, addressed by side and 1-based index: `m1`, `w3`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlayerId {
    pub side: Side,
    pub index: usize,
}

impl PlayerId {
    pub fn man(index: usize) -> PlayerId {
        PlayerId { side: Side::Man, index }
    }

    pub fn woman(index: usize) -> PlayerId {
        PlayerId { side: Side::Woman, index }
    }
}

impl fmt::Display for PlayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.side {
            Side::Man => 'm',
            Side::Woman => 'w',
        };
        write!(f, "{}{}", tag, self.index)
    }
}

/// An ordered pair of players. Man-woman pairs are normalized man-first;
/// `(i, i)` is the unilateral divorce pair.
pub type Pair = (PlayerId, PlayerId);

/// Normalize a pair to man-first order (self pairs pass through).
pub fn normalize_pair(a: PlayerId, b: PlayerId) -> Pair {
    if a == b || a.side == Side::Man {
        (a, b)
    } else {
        (b, a)
    }
}

/// Render a pair the way traces and witnesses print it: `(m1,w2)` or `(w2,w2)`.
pub fn pair_label(pair: &Pair) -> String {
    format!("({},{})", pair.0, pair.1)
}

// ---------------------------------------------------------------------------
// Rankings
// ---------------------------------------------------------------------------

/// One player's strict ranking over the opposite side plus staying alone.
/// Most preferred first; the owner appears exactly once (the "stay alone"
/// position).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOrder {
    pub owner: PlayerId,
    pub order: Vec<PlayerId>,
}

impl RankOrder {
    /// Position of `p` in the ranking, 0 = most preferred.
    pub fn position(&self, p: PlayerId) -> Option<usize> {
        self.order.iter().position(|&q| q == p)
    }

    /// Whether the owner strictly prefers `a` over `b`. Both must be ranked.
    pub fn prefers(&self, a: PlayerId, b: PlayerId) -> bool {
        let pa = self.position(a).unwrap_or_else(|| {
            panic!("{} missing from {}'s ranking", a, self.owner)
        });
        let pb = self.position(b).unwrap_or_else(|| {
            panic!("{} missing from {}'s ranking", b, self.owner)
        });
        pa < pb
    }

    /// The best-ranked element of `candidates` (None when empty).
    pub fn best_of<I: IntoIterator<Item = PlayerId>>(&self, candidates: I) -> Option<PlayerId> {
        candidates
            .into_iter()
            .min_by_key(|&p| self.position(p).unwrap_or(usize::MAX))
    }

    /// Checks the ranking is a permutation of the expected candidate set.
    pub fn validate(&self, expected: &BTreeSet<PlayerId>) -> Result<(), Error> {
        let seen: BTreeSet<PlayerId> = self.order.iter().copied().collect();
        if seen.len() != self.order.len() {
            return Err(Error::MalformedRanking {
                player: self.owner.to_string(),
                reason: "duplicate entry".into(),
            });
        }
        if &seen != expected {
            return Err(Error::MalformedRanking {
                player: self.owner.to_string(),
                reason: "ranking is not a permutation of the opposite side plus self".into(),
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Matchings
// ---------------------------------------------------------------------------

/// A one-to-one matching between men and women; unlisted players are single.
/// Internally stores partner indices (0-based) per side, kept involutive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    n_men: usize,
    n_women: usize,
    man_partner: Vec<Option<usize>>,
    woman_partner: Vec<Option<usize>>,
}

impl Matching {
    /// The everyone-single matching.
    pub fn empty(n_men: usize, n_women: usize) -> Matching {
        Matching {
            n_men,
            n_women,
            man_partner: vec![None; n_men],
            woman_partner: vec![None; n_women],
        }
    }

    /// Build from explicit 1-based (man, woman) index pairs.
    pub fn from_pairs(
        n_men: usize,
        n_women: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Matching, Error> {
        let mut mu = Matching::empty(n_men, n_women);
        for &(mi, wi) in pairs {
            if mi == 0 || mi > n_men || wi == 0 || wi > n_women {
                return Err(Error::UnknownPlayer(format!("pair (m{},w{})", mi, wi)));
            }
            if mu.man_partner[mi - 1].is_some() || mu.woman_partner[wi - 1].is_some() {
                return Err(Error::InvalidMatching(format!(
                    "player matched twice in pair (m{},w{})",
                    mi, wi
                )));
            }
            mu.man_partner[mi - 1] = Some(wi - 1);
            mu.woman_partner[wi - 1] = Some(mi - 1);
        }
        Ok(mu)
    }

    pub fn n_men(&self) -> usize {
        self.n_men
    }

    pub fn n_women(&self) -> usize {
        self.n_women
    }

    /// Current partner, or None when single.
    pub fn partner(&self, p: PlayerId) -> Option<PlayerId> {
        match p.side {
            Side::Man => self.man_partner[p.index - 1].map(|w| PlayerId::woman(w + 1)),
            Side::Woman => self.woman_partner[p.index - 1].map(|m| PlayerId::man(m + 1)),
        }
    }

    /// Partner, or the player itself when single (mu(i) = i convention).
    pub fn partner_or_self(&self, p: PlayerId) -> PlayerId {
        self.partner(p).unwrap_or(p)
    }

    /// All matched (man, woman) pairs, 1-based, in man order.
    pub fn matched_pairs(&self) -> Vec<(usize, usize)> {
        self.man_partner
            .iter()
            .enumerate()
            .filter_map(|(m, w)| w.map(|w| (m + 1, w + 1)))
            .collect()
    }

    /// Apply one satisfaction: the named pair matches (their former partners
    /// become single), or a self pair divorces. Errors when the pair already
    /// holds (matched to each other, or already single for a self pair).
    pub fn satisfy(&self, pair: Pair) -> Result<Matching, Error> {
        let (a, b) = pair;
        let mut next = self.clone();
        if a == b {
            // Unilateral divorce.
            match self.partner(a) {
                None => {
                    return Err(Error::AlreadySatisfied { pair: pair_label(&pair) });
                }
                Some(q) => {
                    next.clear(a);
                    next.clear(q);
                }
            }
            return Ok(next);
        }
        if a.side == b.side {
            return Err(Error::InvalidPair(format!(
                "{} and {} are on the same side",
                a, b
            )));
        }
        let (m, w) = normalize_pair(a, b);
        if self.partner(m) == Some(w) {
            return Err(Error::AlreadySatisfied { pair: pair_label(&(m, w)) });
        }
        if let Some(old) = self.partner(m) {
            next.clear(old);
        }
        if let Some(old) = self.partner(w) {
            next.clear(old);
        }
        next.man_partner[m.index - 1] = Some(w.index - 1);
        next.woman_partner[w.index - 1] = Some(m.index - 1);
        Ok(next)
    }

    fn clear(&mut self, p: PlayerId) {
        match p.side {
            Side::Man => self.man_partner[p.index - 1] = None,
            Side::Woman => self.woman_partner[p.index - 1] = None,
        }
    }

    /// Canonical display, e.g. `{m1-w1, m2-w2}` (singles omitted).
    pub fn label(&self) -> String {
        let pairs: Vec<String> = self
            .matched_pairs()
            .iter()
            .map(|&(m, w)| format!("m{}-w{}", m, w))
            .collect();
        format!("{{{}}}", pairs.join(", "))
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Number of matchings for an n x k market (all partial one-to-one pairings).
pub fn count_matchings(n_men: usize, n_women: usize) -> u128 {
    // sum over k of C(n_men, k) * C(n_women, k) * k!
    let mut total: u128 = 0;
    let kmax = n_men.min(n_women);
    for k in 0..=kmax {
        let mut term: u128 = 1;
        for i in 0..k {
            term *= (n_men - i) as u128;
            term *= (n_women - i) as u128;
            term /= (i + 1) as u128; // divides evenly: running C(n,k) * falling factorial
        }
        total += term;
    }
    total
}

/// Every matching of the given market shape, in a deterministic order.
pub fn enumerate_matchings(n_men: usize, n_women: usize) -> Vec<Matching> {
    let mut out = Vec::new();
    let mut used = vec![false; n_women];
    let mut mu = Matching::empty(n_men, n_women);
    fn rec(m: usize, n_men: usize, n_women: usize, used: &mut Vec<bool>, mu: &mut Matching, out: &mut Vec<Matching>) {
        if m == n_men {
            out.push(mu.clone());
            return;
        }
        // man m stays single
        rec(m + 1, n_men, n_women, used, mu, out);
        for w in 0..n_women {
            if !used[w] {
                used[w] = true;
                mu.man_partner[m] = Some(w);
                mu.woman_partner[w] = Some(m);
                rec(m + 1, n_men, n_women, used, mu, out);
                mu.man_partner[m] = None;
                mu.woman_partner[w] = None;
                used[w] = false;
            }
        }
    }
    rec(0, n_men, n_women, &mut used, &mut mu, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Markets
// ---------------------------------------------------------------------------

/// A full-awareness market: labeled players and one strict ranking per player.
#[derive(Debug, Clone)]
pub struct ClassicMarket {
    pub men: Vec<String>,
    pub women: Vec<String>,
    /// Indexed by flat id: men first, then women.
    rank: Vec<RankOrder>,
}

impl ClassicMarket {
    pub fn from_rankings(
        men: Vec<String>,
        women: Vec<String>,
        rank: Vec<RankOrder>,
    ) -> Result<ClassicMarket, Error> {
        let market = ClassicMarket { men, women, rank };
        if market.rank.len() != market.men.len() + market.women.len() {
            return Err(Error::InvalidMatching(
                "ranking count does not match player count".into(),
            ));
        }
        for p in market.players() {
            let r = market.ranking(p);
            if r.owner != p {
                return Err(Error::MalformedRanking {
                    player: p.to_string(),
                    reason: format!("ranking at {}'s slot is owned by {}", p, r.owner),
                });
            }
            let mut expected: BTreeSet<PlayerId> = market.side_players(p.side.opposite()).collect();
            expected.insert(p);
            r.validate(&expected)?;
        }
        Ok(market)
    }

    /// Convenience constructor: 1-based opposite-side index lists, most
    /// preferred first, self appended last automatically. Labels are
    /// `m1..`, `w1..`.
    pub fn from_index_lists(
        men_lists: &[Vec<usize>],
        women_lists: &[Vec<usize>],
    ) -> Result<ClassicMarket, Error> {
        let n_men = men_lists.len();
        let n_women = women_lists.len();
        let men: Vec<String> = (1..=n_men).map(|i| format!("m{}", i)).collect();
        let women: Vec<String> = (1..=n_women).map(|i| format!("w{}", i)).collect();
        let mut rank = Vec::new();
        for (i, list) in men_lists.iter().enumerate() {
            let owner = PlayerId::man(i + 1);
            let mut order: Vec<PlayerId> = list.iter().map(|&w| PlayerId::woman(w)).collect();
            order.push(owner);
            rank.push(RankOrder { owner, order });
        }
        for (i, list) in women_lists.iter().enumerate() {
            let owner = PlayerId::woman(i + 1);
            let mut order: Vec<PlayerId> = list.iter().map(|&m| PlayerId::man(m)).collect();
            order.push(owner);
            rank.push(RankOrder { owner, order });
        }
        ClassicMarket::from_rankings(men, women, rank)
    }

    pub fn n_men(&self) -> usize {
        self.men.len()
    }

    pub fn n_women(&self) -> usize {
        self.women.len()
    }

    pub fn players(&self) -> impl Iterator<Item = PlayerId> + '_ {
        self.side_players(Side::Man).chain(self.side_players(Side::Woman))
    }

    pub fn side_players(&self, side: Side) -> impl Iterator<Item = PlayerId> + '_ {
        let n = match side {
            Side::Man => self.n_men(),
            Side::Woman => self.n_women(),
        };
        (1..=n).map(move |i| PlayerId { side, index: i })
    }

    pub fn ranking(&self, p: PlayerId) -> &RankOrder {
        let flat = match p.side {
            Side::Man => p.index - 1,
            Side::Woman => self.n_men() + p.index - 1,
        };
        &self.rank[flat]
    }

    pub fn label_of(&self, p: PlayerId) -> &str {
        match p.side {
            Side::Man => &self.men[p.index - 1],
            Side::Woman => &self.women[p.index - 1],
        }
    }
}

// ---------------------------------------------------------------------------
// Blocking analysis
// ---------------------------------------------------------------------------

/// All blocking pairs of `mu`: man-woman pairs where both strictly prefer
/// each other over their current partners, plus `(i, i)` for every matched
/// player who prefers staying alone.
pub fn blocking_pairs(market: &ClassicMarket, mu: &Matching) -> BTreeSet<Pair> {
    let mut out = BTreeSet::new();
    for m in market.side_players(Side::Man) {
        for w in market.side_players(Side::Woman) {
            if mu.partner(m) == Some(w) {
                continue;
            }
            let m_wants = market.ranking(m).prefers(w, mu.partner_or_self(m));
            let w_wants = market.ranking(w).prefers(m, mu.partner_or_self(w));
            if m_wants && w_wants {
                out.insert((m, w));
            }
        }
    }
    for i in individually_irrational_players(market, mu) {
        out.insert((i, i));
    }
    out
}

/// Matched players who strictly prefer staying alone over their partner.
pub fn individually_irrational_players(market: &ClassicMarket, mu: &Matching) -> Vec<PlayerId> {
    market
        .players()
        .filter(|&i| match mu.partner(i) {
            Some(q) => market.ranking(i).prefers(i, q),
            None => false,
        })
        .collect()
}

/// Blocking-partner candidates of a single owner: every opposite-side player
/// it blocks with, plus itself when it prefers staying alone.
fn blocking_candidates(market: &ClassicMarket, mu: &Matching, owner: PlayerId) -> Vec<PlayerId> {
    let current = mu.partner_or_self(owner);
    let mut out = Vec::new();
    for q in market.side_players(owner.side.opposite()) {
        if mu.partner(owner) == Some(q) {
            continue;
        }
        if market.ranking(owner).prefers(q, current)
            && market.ranking(q).prefers(owner, mu.partner_or_self(q))
        {
            out.push(q);
        }
    }
    if mu.partner(owner).is_some() && market.ranking(owner).prefers(owner, current) {
        out.push(owner);
    }
    out
}

/// Owner-oriented optimal blocking pairs: for each player with at least one
/// blocking partner, `(owner, best partner by owner's ranking)`.
pub fn optimal_blocking_pairs(market: &ClassicMarket, mu: &Matching) -> BTreeSet<(PlayerId, PlayerId)> {
    let mut out = BTreeSet::new();
    for p in market.players() {
        let cands = blocking_candidates(market, mu, p);
        if let Some(best) = market.ranking(p).best_of(cands) {
            out.insert((p, best));
        }
    }
    out
}

/// Collapse owner-oriented pairs to undirected satisfaction pairs
/// (man-first for man-woman pairs; self pairs unchanged).
pub fn collapse_pairs(owner_pairs: &BTreeSet<(PlayerId, PlayerId)>) -> BTreeSet<Pair> {
    owner_pairs
        .iter()
        .map(|&(a, b)| normalize_pair(a, b))
        .collect()
}

/// Blocking pairs that are optimal for both members (self pairs count as
/// trivially mutual).
pub fn mutually_optimal_blocking_pairs(market: &ClassicMarket, mu: &Matching) -> BTreeSet<Pair> {
    let owner_pairs = optimal_blocking_pairs(market, mu);
    let best: HashMap<PlayerId, PlayerId> = owner_pairs.iter().copied().collect();
    let mut out = BTreeSet::new();
    for (&owner, &partner) in &best {
        if owner == partner {
            out.insert((owner, owner));
        } else if best.get(&partner) == Some(&owner) {
            out.insert(normalize_pair(owner, partner));
        }
    }
    out
}

/// Stable in the classic sense: individually rational and no blocking pair.
pub fn is_stable_classic(market: &ClassicMarket, mu: &Matching) -> bool {
    blocking_pairs(market, mu).is_empty()
}

/// Gale-Shapley deferred acceptance with the given proposing side.
/// Proposers never propose below their own stay-alone position and
/// receivers never hold anyone ranked below staying alone, so the result
/// is individually rational and stable.
pub fn deferred_acceptance(market: &ClassicMarket, proposing: Side) -> Matching {
    let n_prop = match proposing {
        Side::Man => market.n_men(),
        Side::Woman => market.n_women(),
    };
    let mut mu = Matching::empty(market.n_men(), market.n_women());
    // next ranking position each proposer will try
    let mut next = vec![0usize; n_prop];
    let mut free: Vec<usize> = (0..n_prop).collect();
    while let Some(pi) = free.pop() {
        let p = PlayerId { side: proposing, index: pi + 1 };
        let order = &market.ranking(p).order;
        loop {
            if next[pi] >= order.len() {
                break; // exhausted: stays single
            }
            let q = order[next[pi]];
            next[pi] += 1;
            if q == p {
                break; // rather stay alone than continue down the list
            }
            let holding = mu.partner_or_self(q);
            if market.ranking(q).prefers(p, holding) {
                if let Some(old) = mu.partner(q) {
                    let old_i = old.index - 1;
                    free.push(old_i);
                }
                mu = mu.satisfy((p, q)).expect("proposal pair is never already matched");
                break;
            }
        }
    }
    mu
}

// ---------------------------------------------------------------------------
// Satisfying processes
// ---------------------------------------------------------------------------

/// How `run_deterministic` picks the pair to satisfy at each step.
#[derive(Debug, Clone)]
pub enum Policy {
    /// Replay a fixed satisfaction sequence; errors if an entry is not a
    /// blocking pair when its turn comes.
    Scripted(Vec<Pair>),
    /// Satisfy the lexicographically least mutually optimal pair, falling
    /// back to the least optimal pair when no mutual one exists.
    MutualOptimalFirst,
}

/// Where a process run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum Terminal {
    /// No blocking pair remains.
    Stable(Matching),
    /// A matching revisited: `path[entry] == path[entry + period]`.
    Cycle { entry: usize, period: usize },
    /// Script consumed or step budget hit before stability or a cycle.
    Exhausted(Matching),
}

/// One entry of a process path: the matching, and the pair whose
/// satisfaction produced it (None for the initial matching).
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub matching: Matching,
    pub satisfied: Option<Pair>,
}

/// A completed process run: `path[0]` is the initial matching.
#[derive(Debug, Clone)]
pub struct ProcessResult {
    pub terminal: Terminal,
    pub path: Vec<PathStep>,
}

/// Run a deterministic satisfying process from `mu0`.
pub fn run_deterministic(
    market: &ClassicMarket,
    mu0: &Matching,
    policy: &Policy,
    max_steps: usize,
) -> Result<ProcessResult, Error> {
    let mut path = vec![PathStep { matching: mu0.clone(), satisfied: None }];
    let mut seen: HashMap<Matching, usize> = HashMap::new();
    seen.insert(mu0.clone(), 0);
    let mut script_pos = 0usize;
    loop {
        let current = &path[path.len() - 1].matching;
        let blocking = blocking_pairs(market, current);
        if blocking.is_empty() {
            return Ok(ProcessResult { terminal: Terminal::Stable(current.clone()), path });
        }
        if path.len() - 1 >= max_steps {
            return Ok(ProcessResult { terminal: Terminal::Exhausted(current.clone()), path });
        }
        let pair = match policy {
            Policy::Scripted(script) => {
                if script_pos >= script.len() {
                    return Ok(ProcessResult {
                        terminal: Terminal::Exhausted(current.clone()),
                        path,
                    });
                }
                let pair = script[script_pos];
                script_pos += 1;
                if !blocking.contains(&normalize_pair(pair.0, pair.1)) {
                    return Err(Error::NotBlocking {
                        step: script_pos,
                        pair: pair_label(&pair),
                    });
                }
                pair
            }
            Policy::MutualOptimalFirst => {
                let mo = mutually_optimal_blocking_pairs(market, current);
                if let Some(&pair) = mo.iter().next() {
                    pair
                } else {
                    let opt = collapse_pairs(&optimal_blocking_pairs(market, current));
                    *opt.iter().next().expect("unstable matching has an optimal pair")
                }
            }
        };
        let next = path[path.len() - 1].matching.satisfy(pair)?;
        path.push(PathStep { matching: next.clone(), satisfied: Some(pair) });
        let idx = path.len() - 1;
        if let Some(&entry) = seen.get(&next) {
            return Ok(ProcessResult {
                terminal: Terminal::Cycle { entry, period: idx - entry },
                path,
            });
        }
        seen.insert(next, idx);
    }
}

/// Run the perturbed classic process: with probability `1 - epsilon` satisfy
/// a uniformly chosen mutually optimal pair (falling back to the optimal set
/// when none exists), otherwise a uniformly chosen optimal-but-not-mutual
/// pair (mass returns to the mutual set when that is empty). Stops at a
/// stable matching or after `max_steps`.
pub fn run_perturbed_classic(
    market: &ClassicMarket,
    mu0: &Matching,
    epsilon: f64,
    seed: u64,
    max_steps: usize,
) -> Result<ProcessResult, Error> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = vec![PathStep { matching: mu0.clone(), satisfied: None }];
    loop {
        let current = path[path.len() - 1].matching.clone();
        if is_stable_classic(market, &current) {
            return Ok(ProcessResult { terminal: Terminal::Stable(current), path });
        }
        if path.len() - 1 >= max_steps {
            return Ok(ProcessResult { terminal: Terminal::Exhausted(current), path });
        }
        let opt: Vec<Pair> = collapse_pairs(&optimal_blocking_pairs(market, &current))
            .into_iter()
            .collect();
        let mo: Vec<Pair> = mutually_optimal_blocking_pairs(market, &current)
            .into_iter()
            .collect();
        let main: &[Pair] = if mo.is_empty() { &opt } else { &mo };
        let rest: Vec<Pair> = opt.iter().copied().filter(|p| !mo.contains(p)).collect();
        let noise: &[Pair] = if rest.is_empty() { main } else { &rest };
        let u: f64 = rng.gen();
        let set = if u < 1.0 - epsilon { main } else { noise };
        let pair = set[rng.gen_range(0..set.len())];
        let next = current.satisfy(pair)?;
        path.push(PathStep { matching: next, satisfied: Some(pair) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn knuth() -> ClassicMarket {
        ClassicMarket::from_index_lists(
            &[vec![2, 1, 3], vec![1, 3, 2], vec![1, 2, 3]],
            &[vec![1, 3, 2], vec![3, 1, 2], vec![1, 3, 2]],
        )
        .unwrap()
    }

    #[test]
    fn satisfy_moves_partners() {
        let mu = Matching::from_pairs(3, 3, &[(1, 1), (2, 2), (3, 3)]).unwrap();
        let next = mu.satisfy((PlayerId::man(1), PlayerId::woman(2))).unwrap();
        assert_eq!(next.partner(PlayerId::man(1)), Some(PlayerId::woman(2)));
        assert_eq!(next.partner(PlayerId::woman(1)), None);
        assert_eq!(next.partner(PlayerId::man(2)), None);
        assert_eq!(next.partner(PlayerId::man(3)), Some(PlayerId::woman(3)));
    }

    #[test]
    fn satisfy_rejects_current_pair() {
        let mu = Matching::from_pairs(2, 2, &[(1, 1)]).unwrap();
        let err = mu.satisfy((PlayerId::man(1), PlayerId::woman(1))).unwrap_err();
        assert!(matches!(err, Error::AlreadySatisfied { .. }));
    }

    #[test]
    fn divorce_unmatches_both() {
        let mu = Matching::from_pairs(2, 2, &[(1, 1)]).unwrap();
        let next = mu.satisfy((PlayerId::man(1), PlayerId::man(1))).unwrap();
        assert_eq!(next.partner(PlayerId::man(1)), None);
        assert_eq!(next.partner(PlayerId::woman(1)), None);
        // divorcing while single is an error
        assert!(next.satisfy((PlayerId::man(1), PlayerId::man(1))).is_err());
    }

    #[test]
    fn knuth_blocking_structure_at_identity() {
        let market = knuth();
        let mu = Matching::from_pairs(3, 3, &[(1, 1), (2, 2), (3, 3)]).unwrap();
        let blocking = blocking_pairs(&market, &mu);
        let expect: BTreeSet<Pair> = [
            (PlayerId::man(1), PlayerId::woman(2)),
            (PlayerId::man(3), PlayerId::woman(2)),
        ]
        .into_iter()
        .collect();
        assert_eq!(blocking, expect);

        let optimal = optimal_blocking_pairs(&market, &mu);
        let expect_opt: BTreeSet<(PlayerId, PlayerId)> = [
            (PlayerId::man(1), PlayerId::woman(2)),
            (PlayerId::man(3), PlayerId::woman(2)),
            (PlayerId::woman(2), PlayerId::man(3)),
        ]
        .into_iter()
        .collect();
        assert_eq!(optimal, expect_opt);

        let mo = mutually_optimal_blocking_pairs(&market, &mu);
        let expect_mo: BTreeSet<Pair> =
            [(PlayerId::man(3), PlayerId::woman(2))].into_iter().collect();
        assert_eq!(mo, expect_mo);
    }

    #[test]
    fn matching_counts() {
        assert_eq!(count_matchings(2, 2), 7);
        assert_eq!(count_matchings(3, 3), 34);
        assert_eq!(count_matchings(4, 4), 209);
        assert_eq!(count_matchings(5, 5), 1546);
        assert_eq!(enumerate_matchings(3, 3).len(), 34);
        assert_eq!(enumerate_matchings(4, 4).len(), 209);
    }

    #[test]
    fn deferred_acceptance_is_stable_and_side_optimal() {
        let market = knuth();
        let mu = deferred_acceptance(&market, Side::Man);
        assert!(is_stable_classic(&market, &mu));
        // man-proposing on this market: every man gets his top choice feasible
        // under stability; check stability of woman-proposing too.
        let mw = deferred_acceptance(&market, Side::Woman);
        assert!(is_stable_classic(&market, &mw));
    }
}
