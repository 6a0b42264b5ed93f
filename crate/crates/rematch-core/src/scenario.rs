//! Scenario format: players, characteristics, per-space preferences,
//! discovery rules, and the initial outcome, as versioned JSON.
//!
//! Space keys are "base" for the empty space and "+"-joined characteristic
//! labels otherwise ("c1", "c1+c2"). Rankings list the opposite side only,
//! most preferred first; staying alone is appended last automatically, and a
//! ranking that names its owner is rejected. Every player needs a ranking at
//! every space and an explicit initial awareness entry; silent defaults
//! would hide modeling errors.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::awareness::{space_label, PreferenceMap, Space, State, Violation};
use crate::dynamics::{DiscoveryRule, Outcome};
use crate::market::{ClassicMarket, Matching, PlayerId, RankOrder};
use crate::Error;

/// Scenario format version this build writes and reads.
pub const SCENARIO_SCHEMA_VERSION: &str = "1";

// ---------------------------------------------------------------------------
// Raw file model (kept verbatim for canonical serialization)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    schema_version: String,
    name: String,
    players: RawPlayers,
    #[serde(default)]
    characteristics: Vec<String>,
    preferences: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    rules: Vec<RawRule>,
    initial: RawInitial,
    #[serde(default)]
    flags: RawFlags,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlayers {
    men: Vec<String>,
    women: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRule {
    when: RawCondition,
    gains: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    #[serde(default)]
    matched: Vec<[String; 2]>,
    #[serde(default)]
    single: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    matching: BTreeMap<String, String>,
    awareness: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlags {
    #[serde(default)]
    classic_only: bool,
}

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

/// A parsed, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub prefs: PreferenceMap,
    pub rules: Vec<DiscoveryRule>,
    pub initial_matching: Matching,
    /// Per flat player, within the join space.
    pub initial_awareness: Vec<Space>,
    pub classic_only: bool,
    digest: String,
    raw: RawScenario,
}

impl Scenario {
    /// Content digest of the canonical serialization, "sha256:" prefixed.
    /// Stable across reformatting and key reordering of the source file.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// The initial state at the join space.
    pub fn initial_state(&self) -> State {
        State {
            space: self.prefs.join_space(),
            awareness: self.initial_awareness.clone(),
        }
    }

    pub fn initial_outcome(&self) -> Outcome {
        Outcome {
            matching: self.initial_matching.clone(),
            state: self.initial_state(),
        }
    }

    /// The classic market whose rankings are the ones attached to `space`.
    pub fn market_at(&self, space: Space) -> ClassicMarket {
        let rank: Vec<RankOrder> = self
            .prefs
            .players()
            .map(|p| self.prefs.ranking_at(p, space).clone())
            .collect();
        ClassicMarket::from_rankings(self.prefs.men.clone(), self.prefs.women.clone(), rank)
            .expect("validated rankings form a market")
    }

    /// The full-awareness market (rankings at the join space).
    pub fn classic_market(&self) -> ClassicMarket {
        self.market_at(self.prefs.join_space())
    }

    /// Compact awareness rendering: `m1:c1|m2:-|w1:c1|w2:-`.
    pub fn awareness_label(&self, omega: &State) -> String {
        let parts: Vec<String> = self
            .prefs
            .players()
            .map(|p| {
                let aw = omega.awareness[self.prefs.flat(p)];
                let chars = if aw.is_empty() {
                    "-".to_string()
                } else {
                    space_label(&self.prefs.chars, aw)
                };
                format!("{}:{}", self.prefs.label_of(p), chars)
            })
            .collect();
        parts.join("|")
    }

    /// Structural violations of the preference map and state family.
    pub fn structure_violations(&self) -> Vec<Violation> {
        crate::awareness::validate_structure(&self.prefs)
    }

    /// Canonical pretty serialization (parses back to an equal scenario).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.raw).expect("scenario serializes")
    }

    /// Parse `"m1:w1,m2:w2"` into a matching; `""` or `"-"` is everyone
    /// single; unlisted players are single.
    pub fn parse_matching_arg(&self, text: &str) -> Result<Matching, Error> {
        let mut pairs = Vec::new();
        let trimmed = text.trim();
        if !(trimmed.is_empty() || trimmed == "-") {
            for part in trimmed.split(',') {
                let (lhs, rhs) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("matching entry '{}' needs man:woman", part)))?;
                let m = self.prefs.parse_player(lhs.trim())?;
                let w = self.prefs.parse_player(rhs.trim())?;
                if m.side != crate::market::Side::Man || w.side != crate::market::Side::Woman {
                    return Err(Error::InvalidPair(format!(
                        "matching entry '{}' is not man:woman",
                        part
                    )));
                }
                pairs.push((m.index, w.index));
            }
        }
        Matching::from_pairs(self.prefs.n_men(), self.prefs.n_women(), &pairs)
    }

    /// Parse `"m1:c1|w2:-"` awareness overrides on top of the initial
    /// awareness; `-` clears a player's awareness, `+` joins characteristics.
    pub fn parse_awareness_arg(&self, text: &str) -> Result<State, Error> {
        let mut awareness = self.initial_awareness.clone();
        let trimmed = text.trim();
        if !trimmed.is_empty() {
            for part in trimmed.split('|') {
                let (who, spec) = part
                    .trim()
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("awareness entry '{}' needs player:chars", part)))?;
                let p = self.prefs.parse_player(who.trim())?;
                let spec = spec.trim();
                let space = if spec == "-" {
                    Space::EMPTY
                } else {
                    self.prefs.parse_space(spec)?
                };
                awareness[self.prefs.flat(p)] = space;
            }
        }
        State::new(self.prefs.join_space(), awareness)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse without the structural validation pass (used by `validate` to
/// report every violation instead of failing on the first).
pub fn parse_scenario_lenient(text: &str) -> Result<Scenario, Error> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
    })?;
    if raw.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: raw.schema_version.clone(),
            supported: SCENARIO_SCHEMA_VERSION.into(),
        });
    }
    if raw.players.men.is_empty() || raw.players.women.is_empty() {
        return Err(Error::Parse("both sides need at least one player".into()));
    }
    let mut all_labels: Vec<&String> = raw.players.men.iter().chain(raw.players.women.iter()).collect();
    all_labels.sort();
    all_labels.dedup();
    if all_labels.len() != raw.players.men.len() + raw.players.women.len() {
        return Err(Error::Parse("player labels must be unique".into()));
    }
    let chars = raw.characteristics.clone();
    {
        let mut sorted = chars.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != chars.len() {
            return Err(Error::Parse("characteristic labels must be unique".into()));
        }
    }

    // Helper closures over the raw label tables.
    let find_player = |label: &str| -> Result<PlayerId, Error> {
        if let Some(i) = raw.players.men.iter().position(|l| l == label) {
            Ok(PlayerId::man(i + 1))
        } else if let Some(i) = raw.players.women.iter().position(|l| l == label) {
            Ok(PlayerId::woman(i + 1))
        } else {
            Err(Error::UnknownPlayer(label.to_string()))
        }
    };
    let parse_space = |key: &str| -> Result<Space, Error> {
        if key == "base" {
            return Ok(Space::EMPTY);
        }
        let mut space = Space::EMPTY;
        for part in key.split('+') {
            match chars.iter().position(|c| c == part) {
                Some(bit) => space = space.with(bit),
                None => return Err(Error::UnknownCharacteristic(part.to_string())),
            }
        }
        Ok(space)
    };

    let mut rankings = Vec::new();
    for (who, by_space) in &raw.preferences {
        let p = find_player(who)?;
        for (space_key, listed) in by_space {
            let space = parse_space(space_key)?;
            let mut order = Vec::with_capacity(listed.len() + 1);
            for entry in listed {
                let q = find_player(entry)?;
                if q == p {
                    return Err(Error::MalformedRanking {
                        player: who.clone(),
                        reason: format!(
                            "ranking at space {} names its owner; staying alone is appended automatically",
                            space_key
                        ),
                    });
                }
                order.push(q);
            }
            order.push(p);
            rankings.push((p, space, RankOrder { owner: p, order }));
        }
    }
    let prefs = PreferenceMap::build(
        raw.players.men.clone(),
        raw.players.women.clone(),
        chars,
        rankings,
    )?;

    let mut rules = Vec::new();
    for (ri, rr) in raw.rules.iter().enumerate() {
        let mut matched = Vec::new();
        for [ml, wl] in &rr.when.matched {
            let m = find_player(ml)?;
            let w = find_player(wl)?;
            if m.side != crate::market::Side::Man || w.side != crate::market::Side::Woman {
                return Err(Error::InvalidPair(format!(
                    "rule {}: condition pair [{},{}] is not man,woman",
                    ri + 1,
                    ml,
                    wl
                )));
            }
            matched.push((m, w));
        }
        let mut single = Vec::new();
        for label in &rr.when.single {
            single.push(find_player(label)?);
        }
        let mut gains = Vec::new();
        for (who, gained) in &rr.gains {
            let p = find_player(who)?;
            let mut space = Space::EMPTY;
            for c in gained {
                match prefs.chars.iter().position(|x| x == c) {
                    Some(bit) => space = space.with(bit),
                    None => return Err(Error::UnknownCharacteristic(c.clone())),
                }
            }
            gains.push((p, space));
        }
        rules.push(DiscoveryRule { matched, single, gains });
    }

    let mut pairs = Vec::new();
    for (ml, wl) in &raw.initial.matching {
        let m = find_player(ml)?;
        let w = find_player(wl)?;
        if m.side != crate::market::Side::Man || w.side != crate::market::Side::Woman {
            return Err(Error::InvalidPair(format!(
                "initial matching entry {}:{} is not man:woman",
                ml, wl
            )));
        }
        pairs.push((m.index, w.index));
    }
    let initial_matching = Matching::from_pairs(prefs.n_men(), prefs.n_women(), &pairs)?;

    let mut initial_awareness = vec![Space::EMPTY; prefs.n_players()];
    for p in prefs.players() {
        let label = prefs.label_of(p);
        match raw.initial.awareness.get(label) {
            Some(listed) => {
                let mut space = Space::EMPTY;
                for c in listed {
                    match prefs.chars.iter().position(|x| x == c) {
                        Some(bit) => space = space.with(bit),
                        None => return Err(Error::UnknownCharacteristic(c.clone())),
                    }
                }
                initial_awareness[prefs.flat(p)] = space;
            }
            None => {
                return Err(Error::Parse(format!(
                    "initial awareness missing for {}",
                    label
                )))
            }
        }
    }
    for key in raw.initial.awareness.keys() {
        find_player(key)?;
    }

    if raw.flags.classic_only && (!prefs.chars.is_empty() || !rules.is_empty()) {
        return Err(Error::Invalid {
            check: "classic-only".into(),
            witness: "classic_only scenarios take no characteristics or rules".into(),
        });
    }

    let canonical = serde_json::to_string(&raw).expect("raw scenario serializes");
    let digest = format!("sha256:{:x}", Sha256::digest(canonical.as_bytes()));
    Ok(Scenario {
        name: raw.name.clone(),
        prefs,
        rules,
        initial_matching,
        initial_awareness,
        classic_only: raw.flags.classic_only,
        digest,
        raw,
    })
}

/// Parse and fully validate a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, Error> {
    let sc = parse_scenario_lenient(text)?;
    let violations = sc.structure_violations();
    if let Some(v) = violations.first() {
        return Err(Error::Invalid { check: v.check.to_string(), witness: v.witness.clone() });
    }
    Ok(sc)
}

/// Load a scenario from disk.
pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

const BUILTIN_SOURCES: &[(&str, &str)] = &[
    ("example1_knuth", include_str!("../scenarios/example1_knuth.json")),
    ("example2_cycle", include_str!("../scenarios/example2_cycle.json")),
    ("example3_hidden_block", include_str!("../scenarios/example3_hidden_block.json")),
    ("example4_discovery", include_str!("../scenarios/example4_discovery.json")),
    ("example5_trap", include_str!("../scenarios/example5_trap.json")),
    ("example6_flirt_preference", include_str!("../scenarios/example6_flirt_preference.json")),
    ("example7_flirt_belief", include_str!("../scenarios/example7_flirt_belief.json")),
    ("example8_divorce", include_str!("../scenarios/example8_divorce.json")),
];

/// The bundled example scenarios, pre-validated.
pub fn builtin_scenarios() -> Vec<Scenario> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, text)| {
            let sc = parse_scenario(text)
                .unwrap_or_else(|e| panic!("bundled scenario {} is invalid: {}", name, e));
            assert_eq!(&sc.name, name, "bundled scenario name mismatch");
            sc
        })
        .collect()
}

/// Look a bundled scenario up by exact name or unique "exampleN" prefix.
pub fn find_builtin(name: &str) -> Option<Scenario> {
    if let Some((_, text)) = BUILTIN_SOURCES.iter().find(|(n, _)| *n == name) {
        return Some(parse_scenario(text).expect("bundled scenario is valid"));
    }
    let matches: Vec<&(&str, &str)> = BUILTIN_SOURCES
        .iter()
        .filter(|(n, _)| n.starts_with(name) && n[name.len()..].starts_with('_'))
        .collect();
    match matches.as_slice() {
        [(_, text)] => Some(parse_scenario(text).expect("bundled scenario is valid")),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse_and_validate() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 8);
        for sc in &all {
            assert!(sc.structure_violations().is_empty(), "{}", sc.name);
            assert!(sc.digest().starts_with("sha256:"));
        }
    }

    #[test]
    fn builtin_lookup_by_prefix() {
        assert!(find_builtin("example4").is_some());
        assert_eq!(find_builtin("example4").unwrap().name, "example4_discovery");
        assert!(find_builtin("example1_knuth").is_some());
        assert!(find_builtin("example").is_none());
        assert!(find_builtin("nonesuch").is_none());
    }

    #[test]
    fn round_trip_preserves_structure_and_digest() {
        for sc in builtin_scenarios() {
            let text = sc.to_json();
            let back = parse_scenario(&text).unwrap();
            assert_eq!(back.digest(), sc.digest(), "{}", sc.name);
            assert_eq!(back.initial_matching, sc.initial_matching);
            assert_eq!(back.initial_awareness, sc.initial_awareness);
            assert_eq!(back.rules.len(), sc.rules.len());
        }
    }

    #[test]
    fn future_schema_version_is_rejected() {
        let text = r#"{"schema_version":"2","name":"x","players":{"men":["m1"],"women":["w1"]},
            "preferences":{"m1":{"base":["w1"]},"w1":{"base":["m1"]}},
            "initial":{"matching":{},"awareness":{"m1":[],"w1":[]}}}"#;
        match parse_scenario(text) {
            Err(Error::SchemaVersion { found, .. }) => assert_eq!(found, "2"),
            other => panic!("expected schema version error, got {:?}", other.map(|s| s.name)),
        }
    }

    #[test]
    fn ranking_naming_owner_is_rejected() {
        let text = r#"{"schema_version":"1","name":"x","players":{"men":["m1"],"women":["w1"]},
            "preferences":{"m1":{"base":["w1","m1"]},"w1":{"base":["m1"]}},
            "initial":{"matching":{},"awareness":{"m1":[],"w1":[]}}}"#;
        match parse_scenario(text) {
            Err(Error::MalformedRanking { player, .. }) => assert_eq!(player, "m1"),
            other => panic!("expected malformed ranking, got {:?}", other.map(|s| s.name)),
        }
    }

    #[test]
    fn missing_ranking_names_player_and_space() {
        let text = r#"{"schema_version":"1","name":"x","players":{"men":["m1"],"women":["w1"]},
            "characteristics":["c1"],
            "preferences":{"m1":{"base":["w1"],"c1":["w1"]},"w1":{"base":["m1"]}},
            "initial":{"matching":{},"awareness":{"m1":[],"w1":[]}}}"#;
        match parse_scenario(text) {
            Err(Error::MissingRanking { player, space }) => {
                assert_eq!(player, "w1");
                assert_eq!(space, "c1");
            }
            other => panic!("expected missing ranking, got {:?}", other.map(|s| s.name)),
        }
    }
}
