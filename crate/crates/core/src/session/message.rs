//! Wire messages: one JSON object per line, discriminated by `type`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::letters::{Letter, LetterSequence};
use crate::session::acceptance::Verdict;
use crate::sifting::SiftEvent;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

impl Role {
    pub fn peer(self) -> Role {
        match self {
            Role::Alice => Role::Bob,
            Role::Bob => Role::Alice,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Alice => "alice",
            Role::Bob => "bob",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alice" => Ok(Role::Alice),
            "bob" => Ok(Role::Bob),
            other => Err(Error::InvalidConfig(format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Body {
    Hello {
        version: u32,
        rounds: usize,
        final_pairing: bool,
        tomography: usize,
        epsilon_max: f64,
        multiplier: f64,
        min_sample: usize,
    },
    /// SHA-256 commitment to the sender's share of the public seed.
    SeedCommit { digest: String },
    DetectionBatchMeta { count: usize },
    /// Opens the commitment.
    TwirlSeed { seed: u64 },
    TomoRequest { indices: Vec<usize> },
    TomoReveal { letters: LetterSequence },
    AcceptSource { epsilon_hat: f64, verdict: Verdict },
    PositionAnnounce { pos: [usize; 2] },
    Grouping { group0: [Letter; 2], group1: [Letter; 2] },
    SameLetter,
    RenesPair { l0: Letter, l1: Letter },
    Success { flag: bool },
    RoundDone { round: usize },
    Abort { reason: String },
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello { .. } => "hello",
            Body::SeedCommit { .. } => "seed_commit",
            Body::DetectionBatchMeta { .. } => "detection_batch_meta",
            Body::TwirlSeed { .. } => "twirl_seed",
            Body::TomoRequest { .. } => "tomo_request",
            Body::TomoReveal { .. } => "tomo_reveal",
            Body::AcceptSource { .. } => "accept_source",
            Body::PositionAnnounce { .. } => "position_announce",
            Body::Grouping { .. } => "grouping",
            Body::SameLetter => "same_letter",
            Body::RenesPair { .. } => "renes_pair",
            Body::Success { .. } => "success",
            Body::RoundDone { .. } => "round_done",
            Body::Abort { .. } => "abort",
        }
    }

    pub fn is_sifting(&self) -> bool {
        self.to_sift_event().is_some()
    }

    pub fn to_sift_event(&self) -> Option<SiftEvent> {
        Some(match *self {
            Body::PositionAnnounce { pos } => SiftEvent::Positions { first: pos[0], second: pos[1] },
            Body::Grouping { group0, group1 } => SiftEvent::Grouping { group0, group1 },
            Body::SameLetter => SiftEvent::SameLetter,
            Body::RenesPair { l0, l1 } => SiftEvent::RenesPair { zero: l0, one: l1 },
            Body::Success { flag } => SiftEvent::Success { flag },
            Body::RoundDone { round } => SiftEvent::RoundDone { round },
            _ => return None,
        })
    }
}

impl From<SiftEvent> for Body {
    fn from(ev: SiftEvent) -> Self {
        match ev {
            SiftEvent::Positions { first, second } => Body::PositionAnnounce { pos: [first, second] },
            SiftEvent::Grouping { group0, group1 } => Body::Grouping { group0, group1 },
            SiftEvent::SameLetter => Body::SameLetter,
            SiftEvent::RenesPair { zero, one } => Body::RenesPair { l0: zero, l1: one },
            SiftEvent::Success { flag } => Body::Success { flag },
            SiftEvent::RoundDone { round } => Body::RoundDone { round },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub session: String,
    pub from: Role,
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| Error::Transport(format!("malformed frame: {e}")))
    }
}
