//! Two-sided matching with evolving awareness.
//!
//! The crate has three layers:
//!
//! * [`market`]: classic full-awareness matching (blocking pairs, deferred
//!   acceptance, satisfying processes, the perturbed classic process).
//! * [`awareness`] + [`dynamics`]: states that carry per-player awareness of
//!   characteristics, belief and pairwise common-belief operators, stability
//!   under unawareness, discovery transitions, the perturbed matching
//!   process, and enumeration of self-confirming outcomes.
//! * [`flirting`]: strategic awareness-raising (flirts), the communication
//!   fixpoint, flirt-proofness, and the communication-augmented process.
//!
//! [`scenario`] loads and validates the JSON scenario format and bundles the
//! worked example instances; [`trace`] reads and writes JSONL run traces;
//! [`graph`] exports process graphs in DOT form.

pub mod awareness;
pub mod dynamics;
pub mod flirting;
pub mod graph;
pub mod market;
pub mod scenario;
pub mod trace;

use thiserror::Error as ThisError;

/// Crate-wide error type.
#[derive(Debug, ThisError)]
pub enum Error {
    #[error("unknown player {0}")]
    UnknownPlayer(String),

    #[error("unknown characteristic {0}")]
    UnknownCharacteristic(String),

    #[error("invalid pair: {0}")]
    InvalidPair(String),

    #[error("pair {pair} is already satisfied in this matching")]
    AlreadySatisfied { pair: String },

    #[error("invalid matching: {0}")]
    InvalidMatching(String),

    #[error("malformed ranking for {player}: {reason}")]
    MalformedRanking { player: String, reason: String },

    #[error("missing ranking for {player} at space {space}")]
    MissingRanking { player: String, space: String },

    #[error("script step {step}: {pair} is not a blocking pair")]
    NotBlocking { step: usize, pair: String },

    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    InvalidEpsilon(f64),

    #[error("projection target is not a subspace: {0}")]
    BadProjection(String),

    #[error("state does not live at the join space: {0}")]
    NotJoinSpace(String),

    #[error("outcome space has {needed} entries, over the bound {bound}")]
    BoundExceeded { needed: u128, bound: u128 },

    #[error("scenario parse error: {0}")]
    Parse(String),

    #[error("scenario validation failed [{check}]: {witness}")]
    Invalid { check: String, witness: String },

    #[error("trace format error: {0}")]
    Trace(String),

    #[error("unsupported schema version {found} (this build reads version {supported})")]
    SchemaVersion { found: String, supported: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
