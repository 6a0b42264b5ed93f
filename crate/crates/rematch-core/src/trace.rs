//! JSONL run traces: one header record, then one record per process step.
//!
//! Records are self-describing: the header carries the scenario digest, the
//! seed, epsilon, and the process id, so a trace can be replayed against the
//! exact scenario that produced it. Steps are strictly increasing. Matchings
//! are serialized as a complete man-label to woman-label-or-null map and
//! awareness as player-label to characteristic-list, so a round trip loses
//! nothing.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::awareness::State;
use crate::flirting::RaiseEvent;
use crate::market::{Matching, Pair};
use crate::scenario::Scenario;
use crate::Error;

/// Trace format version this build writes and reads.
pub const TRACE_SCHEMA_VERSION: &str = "1";

/// First line of every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub step: u64,
    pub kind: String,
    pub schema_version: String,
    pub scenario: String,
    pub digest: String,
    pub seed: u64,
    pub epsilon: f64,
    pub process: String,
}

impl TraceHeader {
    pub fn new(sc: &Scenario, seed: u64, epsilon: f64, process: &str) -> TraceHeader {
        TraceHeader {
            step: 0,
            kind: "header".into(),
            schema_version: TRACE_SCHEMA_VERSION.into(),
            scenario: sc.name.clone(),
            digest: sc.digest().to_string(),
            seed,
            epsilon,
            process: process.into(),
        }
    }
}

/// Awarenesses raised by one flirt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlirtInfo {
    pub from: String,
    pub to: String,
    pub raised: Vec<String>,
    pub round: u32,
}

/// One step of a run: what happened, and the matching and awareness after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    /// "satisfy", "experience", "flirt", "infidelity", or "terminal".
    pub kind: String,
    /// The satisfied pair, for "satisfy" and "infidelity" steps.
    pub pair: Option<[String; 2]>,
    /// Complete matching: every man label maps to a woman label or null.
    pub matching: BTreeMap<String, Option<String>>,
    /// Every player's awareness as characteristic labels.
    pub awareness: BTreeMap<String, Vec<String>>,
    /// The uniform draw consumed, when the step sampled among alternatives.
    pub rng_draw: Option<f64>,
    /// Present on "flirt" steps.
    pub flirt: Option<FlirtInfo>,
}

impl TraceRecord {
    /// Snapshot a step: matching and awareness are the post-step values.
    pub fn snapshot(
        sc: &Scenario,
        step: u64,
        kind: &str,
        pair: Option<Pair>,
        mu: &Matching,
        omega: &State,
        rng_draw: Option<f64>,
    ) -> TraceRecord {
        TraceRecord {
            step,
            kind: kind.into(),
            pair: pair.map(|(a, b)| {
                [sc.prefs.label_of(a).to_string(), sc.prefs.label_of(b).to_string()]
            }),
            matching: matching_map(sc, mu),
            awareness: awareness_map(sc, omega),
            rng_draw,
            flirt: None,
        }
    }

    /// A flirt step: `omega` is the state after the flirt's round.
    pub fn flirt(
        sc: &Scenario,
        step: u64,
        mu: &Matching,
        omega: &State,
        ev: &RaiseEvent,
    ) -> TraceRecord {
        TraceRecord {
            step,
            kind: "flirt".into(),
            pair: None,
            matching: matching_map(sc, mu),
            awareness: awareness_map(sc, omega),
            rng_draw: None,
            flirt: Some(FlirtInfo {
                from: sc.prefs.label_of(ev.from).to_string(),
                to: sc.prefs.label_of(ev.to).to_string(),
                raised: ev.chars.iter().map(|b| sc.prefs.chars[b].clone()).collect(),
                round: ev.round,
            }),
        }
    }
}

fn matching_map(sc: &Scenario, mu: &Matching) -> BTreeMap<String, Option<String>> {
    let mut map = BTreeMap::new();
    for m in sc.prefs.side_players(crate::market::Side::Man) {
        map.insert(
            sc.prefs.label_of(m).to_string(),
            mu.partner(m).map(|w| sc.prefs.label_of(w).to_string()),
        );
    }
    map
}

fn awareness_map(sc: &Scenario, omega: &State) -> BTreeMap<String, Vec<String>> {
    let mut map = BTreeMap::new();
    for p in sc.prefs.players() {
        let aw = omega.awareness[sc.prefs.flat(p)];
        map.insert(
            sc.prefs.label_of(p).to_string(),
            aw.iter().map(|b| sc.prefs.chars[b].clone()).collect(),
        );
    }
    map
}

/// Write a complete trace: header line, then one line per record.
pub fn write_trace<W: Write>(
    out: &mut W,
    header: &TraceHeader,
    records: &[TraceRecord],
) -> Result<(), Error> {
    let line = serde_json::to_string(header).map_err(|e| Error::Trace(e.to_string()))?;
    writeln!(out, "{}", line)?;
    for rec in records {
        let line = serde_json::to_string(rec).map_err(|e| Error::Trace(e.to_string()))?;
        writeln!(out, "{}", line)?;
    }
    Ok(())
}

/// Read a trace back, checking the schema version and that steps strictly
/// increase from the header onward.
pub fn read_trace<R: BufRead>(input: R) -> Result<(TraceHeader, Vec<TraceRecord>), Error> {
    let mut lines = input.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::Trace("empty trace".into()))??;
    let header: TraceHeader =
        serde_json::from_str(&first).map_err(|e| Error::Trace(format!("header: {}", e)))?;
    if header.kind != "header" {
        return Err(Error::Trace("first record is not a header".into()));
    }
    if header.schema_version != TRACE_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: header.schema_version.clone(),
            supported: TRACE_SCHEMA_VERSION.into(),
        });
    }
    let mut records = Vec::new();
    let mut last_step = header.step;
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Trace(format!("line {}: {}", lineno + 2, e)))?;
        if rec.step <= last_step {
            return Err(Error::Trace(format!(
                "line {}: step {} does not increase past {}",
                lineno + 2,
                rec.step,
                last_step
            )));
        }
        last_step = rec.step;
        records.push(rec);
    }
    Ok((header, records))
}
