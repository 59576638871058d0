//! The four-letter alphabet of tetrahedron outcomes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Detector outcome `k = 1..4`, written A..D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    B,
    C,
    D,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::B, Letter::C, Letter::D];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }

    pub fn from_char(ch: char) -> Result<Self, Error> {
        match ch {
            'A' => Ok(Letter::A),
            'B' => Ok(Letter::B),
            'C' => Ok(Letter::C),
            'D' => Ok(Letter::D),
            other => Err(Error::InvalidLetter(other)),
        }
    }

    /// The three letters other than `self`, in alphabetical order.
    pub fn others(self) -> [Letter; 3] {
        let mut out = [Letter::A; 3];
        let mut j = 0;
        for l in Self::ALL {
            if l != self {
                out[j] = l;
                j += 1;
            }
        }
        out
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl Serialize for Letter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let buf = [self.as_char() as u8];
        s.serialize_str(std::str::from_utf8(&buf).expect("ascii"))
    }
}

impl<'de> Deserialize<'de> for Letter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(ch), None) => Letter::from_char(ch).map_err(serde::de::Error::custom),
            _ => Err(serde::de::Error::custom(format!("expected a single letter, got {s:?}"))),
        }
    }
}

/// A record of letters, one per detected pair. Serializes as a string over
/// "ABCD".
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LetterSequence(pub Vec<Letter>);

impl LetterSequence {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<Letter> {
        self.0.get(i).copied()
    }

    /// Letters at the given positions, in the order given.
    pub fn select(&self, positions: &[usize]) -> LetterSequence {
        LetterSequence(positions.iter().map(|&i| self.0[i]).collect())
    }

    /// All letters except those at `positions`, original order preserved.
    pub fn without(&self, positions: &[usize]) -> LetterSequence {
        let mut drop = vec![false; self.len()];
        for &i in positions {
            if i < drop.len() {
                drop[i] = true;
            }
        }
        LetterSequence(self.0.iter().zip(drop).filter(|(_, d)| !d).map(|(l, _)| *l).collect())
    }
}

impl fmt::Display for LetterSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|l| l.as_char()).collect();
        f.write_str(&s)
    }
}

impl FromStr for LetterSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        s.chars().map(Letter::from_char).collect::<Result<Vec<_>, _>>().map(LetterSequence)
    }
}

impl Serialize for LetterSequence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for LetterSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Joint 4×4 count table of (first letter, second letter) pairs.
pub fn pair_counts(a: &LetterSequence, b: &LetterSequence) -> Result<[u64; 16], Error> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { alice: a.len(), bob: b.len() });
    }
    let mut counts = [0u64; 16];
    for (x, y) in a.0.iter().zip(&b.0) {
        counts[x.index() * 4 + y.index()] += 1;
    }
    Ok(counts)
}
