//! Two-way key extraction from the letter records.
//!
//! Each round Alice announces pairs of positions where her letter repeats.
//! Bob answers with a grouping of the alphabet when his two letters differ
//! (one key bit), or flags a repeated letter, in which case both parties
//! carry their letter into the next round's record. With final pairing
//! enabled, a repeated letter in the last round is instead resolved by a
//! Renes pair announced by Bob.
//!
//! The key bit is always the value assigned to Alice's letter; Bob infers it
//! from the anti-correlation of the records.
//!
//! Both parties are written as event-driven state machines ([`AliceSifter`],
//! [`BobSifter`]) so the same code runs in-process ([`run_sifting`]) and over
//! a network session.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::letters::{Letter, LetterSequence};
use crate::rng::{streams, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftingConfig {
    pub max_rounds: usize,
    pub final_pairing: bool,
}

impl SiftingConfig {
    pub fn new(max_rounds: usize, final_pairing: bool) -> Result<Self> {
        let cfg = Self { max_rounds, final_pairing };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::InvalidConfig("at least one sifting round is required".into()));
        }
        Ok(())
    }

    fn pairs_in_final_round(&self, round: usize) -> bool {
        self.final_pairing && round == self.max_rounds
    }
}

/// Public announcements, in the order they are made.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SiftEvent {
    /// Alice: two unused positions holding the same letter.
    Positions { first: usize, second: usize },
    /// Bob: the two letter groups with values 0 and 1, each sorted.
    Grouping { group0: [Letter; 2], group1: [Letter; 2] },
    /// Bob: his two letters coincide.
    SameLetter,
    /// Bob, last round only: "call `zero` 0 and `one` 1".
    RenesPair { zero: Letter, one: Letter },
    /// Alice: whether her letter is in the announced Renes pair.
    Success { flag: bool },
    /// Alice: the round is over.
    RoundDone { round: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftingTranscript {
    pub events: Vec<SiftEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BitOrigin {
    Iteration,
    FinalPairing,
    Renes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyBit {
    pub value: bool,
    pub round: usize,
    pub origin: BitOrigin,
}

/// Values of a key as plain bits.
pub fn key_values(key: &[KeyBit]) -> Vec<bool> {
    key.iter().map(|b| b.value).collect()
}

/// Per-round bookkeeping from one party's point of view.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTally {
    pub round: usize,
    pub letters_in: usize,
    pub pairs: usize,
    pub unpaired: usize,
    /// Bob's letters differed (one bit each).
    pub distinct: usize,
    /// Bob's letters coincided.
    pub same: usize,
    pub final_pair_successes: usize,
    pub bits: usize,
    /// Letters carried into the next round's record.
    pub residual: usize,
}

impl RoundTally {
    /// Letters used up this round; `consumed + residual + unpaired = letters_in`.
    pub fn consumed(&self) -> usize {
        2 * self.pairs - self.residual
    }
}

/// A two-letter map announced for Renes pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenesAnnouncement {
    pub zero: Letter,
    pub one: Letter,
}

impl RenesAnnouncement {
    /// Assign a random value to `own`, pick a random distinct partner, and
    /// state the value-0 letter first. Returns the value of `own`.
    pub fn announce(own: Letter, rng: &mut RngStream) -> (Self, bool) {
        let partner = own.others()[rng.random_range(0..3)];
        let own_value: bool = rng.random();
        let ann = if own_value { Self { zero: partner, one: own } } else { Self { zero: own, one: partner } };
        (ann, own_value)
    }

    pub fn value_of(&self, letter: Letter) -> Option<bool> {
        if letter == self.zero {
            Some(false)
        } else if letter == self.one {
            Some(true)
        } else {
            None
        }
    }

    /// The value of the letter that is not `own`, if `own` is in the pair.
    pub fn partner_value(&self, own: Letter) -> Option<bool> {
        self.value_of(own).map(|v| !v)
    }

    fn validate(&self) -> Result<()> {
        if self.zero == self.one {
            return Err(Error::Sifting("Renes pair repeats a letter".into()));
        }
        Ok(())
    }
}

/// Alice's Renes announcement for her letter, and her key bit.
pub fn renes_pair(letter: Letter, rng: &mut RngStream) -> (RenesAnnouncement, bool) {
    RenesAnnouncement::announce(letter, rng)
}

fn check_partition(group0: &[Letter; 2], group1: &[Letter; 2]) -> Result<()> {
    let mut seen = [false; 4];
    for l in group0.iter().chain(group1) {
        if std::mem::replace(&mut seen[l.index()], true) {
            return Err(Error::Sifting("groups do not partition the alphabet".into()));
        }
    }
    if group0[0] > group0[1] || group1[0] > group1[1] {
        return Err(Error::Sifting("groups are not in letter order".into()));
    }
    Ok(())
}

/// Alice's bit: the value of the group holding her letter.
fn alice_grouping_bit(own: Letter, group1: &[Letter; 2]) -> bool {
    group1.contains(&own)
}

/// Bob's bit: the value of the group not holding his letters.
fn bob_grouping_bit(own: Letter, group0: &[Letter; 2]) -> bool {
    group0.contains(&own)
}

/// Alice's pairing for one round: scan a random permutation of the
/// positions and pair each with the previous unmatched occurrence of the
/// same letter. Returns the pairs and the number of unpaired positions.
fn plan_pairs(seq: &[Letter], rng: &mut RngStream) -> (VecDeque<(usize, usize)>, usize) {
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.shuffle(rng);
    let mut open: [Option<usize>; 4] = [None; 4];
    let mut pairs = VecDeque::with_capacity(seq.len() / 2);
    for pos in order {
        let slot = &mut open[seq[pos].index()];
        match slot.take() {
            Some(first) => pairs.push_back((first, pos)),
            None => *slot = Some(pos),
        }
    }
    let unpaired = open.iter().flatten().count();
    (pairs, unpaired)
}

/// Alice's side of the sifting.
#[derive(Debug, Clone)]
pub struct AliceSifter {
    cfg: SiftingConfig,
    rng: RngStream,
    round: usize,
    current: Vec<Letter>,
    next: Vec<Letter>,
    queue: VecDeque<(usize, usize)>,
    awaiting: Option<Letter>,
    key: Vec<KeyBit>,
    tallies: Vec<RoundTally>,
    residuals: Vec<LetterSequence>,
    finished: bool,
}

impl AliceSifter {
    pub fn new(letters: LetterSequence, cfg: SiftingConfig, rng: RngStream) -> Result<Self> {
        cfg.validate()?;
        let mut s = Self {
            cfg,
            rng,
            round: 0,
            current: Vec::new(),
            next: letters.0,
            queue: VecDeque::new(),
            awaiting: None,
            key: Vec::new(),
            tallies: Vec::new(),
            residuals: Vec::new(),
            finished: false,
        };
        s.start_round();
        Ok(s)
    }

    fn start_round(&mut self) {
        self.round += 1;
        self.current = std::mem::take(&mut self.next);
        let (queue, unpaired) = plan_pairs(&self.current, &mut self.rng);
        self.tallies.push(RoundTally {
            round: self.round,
            letters_in: self.current.len(),
            pairs: queue.len(),
            unpaired,
            ..Default::default()
        });
        self.queue = queue;
    }

    fn tally(&mut self) -> &mut RoundTally {
        self.tallies.last_mut().expect("a round is always open")
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn is_awaiting(&self) -> bool {
        self.awaiting.is_some()
    }

    pub fn round(&self) -> usize {
        self.round
    }

    /// Alice's next announcement. Only valid while she is not waiting for
    /// Bob's answer.
    pub fn next_event(&mut self) -> Result<SiftEvent> {
        if self.finished || self.awaiting.is_some() {
            return Err(Error::Sifting("Alice has no announcement to make now".into()));
        }
        if let Some((first, second)) = self.queue.pop_front() {
            self.awaiting = Some(self.current[first]);
            return Ok(SiftEvent::Positions { first, second });
        }
        let done = SiftEvent::RoundDone { round: self.round };
        self.residuals.push(LetterSequence(self.next.clone()));
        if self.round < self.cfg.max_rounds {
            self.start_round();
        } else {
            self.finished = true;
        }
        Ok(done)
    }

    /// Process Bob's answer; returns Alice's follow-up, if any.
    pub fn handle(&mut self, event: &SiftEvent) -> Result<Option<SiftEvent>> {
        let own = self
            .awaiting
            .take()
            .ok_or_else(|| Error::Sifting(format!("unexpected {event:?} while no positions are open")))?;
        let round = self.round;
        match *event {
            SiftEvent::Grouping { group0, group1 } => {
                check_partition(&group0, &group1)?;
                let value = alice_grouping_bit(own, &group1);
                self.key.push(KeyBit { value, round, origin: BitOrigin::Iteration });
                let t = self.tally();
                t.distinct += 1;
                t.bits += 1;
                Ok(None)
            }
            SiftEvent::SameLetter if !self.cfg.pairs_in_final_round(round) => {
                self.next.push(own);
                let t = self.tally();
                t.same += 1;
                t.residual += 1;
                Ok(None)
            }
            SiftEvent::RenesPair { zero, one } if self.cfg.pairs_in_final_round(round) => {
                let ann = RenesAnnouncement { zero, one };
                ann.validate()?;
                let value = ann.value_of(own);
                if let Some(value) = value {
                    self.key.push(KeyBit { value, round, origin: BitOrigin::FinalPairing });
                }
                let t = self.tally();
                t.same += 1;
                if value.is_some() {
                    t.final_pair_successes += 1;
                    t.bits += 1;
                }
                Ok(Some(SiftEvent::Success { flag: value.is_some() }))
            }
            ref other => {
                self.awaiting = Some(own);
                Err(Error::Sifting(format!("unexpected {other:?} in round {round}")))
            }
        }
    }

    pub fn key(&self) -> &[KeyBit] {
        &self.key
    }

    pub fn tallies(&self) -> &[RoundTally] {
        &self.tallies
    }

    /// Records put aside at the end of each completed round.
    pub fn residuals(&self) -> &[LetterSequence] {
        &self.residuals
    }
}

/// Bob's side of the sifting.
#[derive(Debug, Clone)]
pub struct BobSifter {
    cfg: SiftingConfig,
    rng: RngStream,
    round: usize,
    current: Vec<Letter>,
    used: Vec<bool>,
    next: Vec<Letter>,
    /// Value of the partner letter of an announced Renes pair.
    pending_renes: Option<bool>,
    key: Vec<KeyBit>,
    residuals: Vec<LetterSequence>,
    finished: bool,
}

impl BobSifter {
    pub fn new(letters: LetterSequence, cfg: SiftingConfig, rng: RngStream) -> Result<Self> {
        cfg.validate()?;
        let used = vec![false; letters.len()];
        Ok(Self {
            cfg,
            rng,
            round: 1,
            current: letters.0,
            used,
            next: Vec::new(),
            pending_renes: None,
            key: Vec::new(),
            residuals: Vec::new(),
            finished: false,
        })
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn key(&self) -> &[KeyBit] {
        &self.key
    }

    pub fn residuals(&self) -> &[LetterSequence] {
        &self.residuals
    }

    fn take_position(&mut self, pos: usize) -> Result<Letter> {
        match self.used.get_mut(pos) {
            Some(u) if !*u => {
                *u = true;
                Ok(self.current[pos])
            }
            Some(_) => Err(Error::Sifting(format!("position {pos} was already used"))),
            None => Err(Error::Sifting(format!("position {pos} is out of range"))),
        }
    }

    /// Process one of Alice's announcements; returns Bob's answer, if any.
    pub fn handle(&mut self, event: &SiftEvent) -> Result<Option<SiftEvent>> {
        if self.finished {
            return Err(Error::Sifting(format!("unexpected {event:?} after the last round")));
        }
        if self.pending_renes.is_some() && !matches!(event, SiftEvent::Success { .. }) {
            return Err(Error::Sifting(format!("expected a success flag, got {event:?}")));
        }
        let round = self.round;
        match *event {
            SiftEvent::Positions { first, second } => {
                if first == second {
                    return Err(Error::Sifting("the two positions coincide".into()));
                }
                let b1 = self.take_position(first)?;
                let b2 = self.take_position(second)?;
                if b1 != b2 {
                    let mine = [b1.min(b2), b1.max(b2)];
                    let rest: Vec<Letter> = Letter::ALL.into_iter().filter(|l| !mine.contains(l)).collect();
                    let rest = [rest[0], rest[1]];
                    let mine_gets_one: bool = self.rng.random();
                    let (group0, group1) = if mine_gets_one { (rest, mine) } else { (mine, rest) };
                    let value = bob_grouping_bit(b1, &group0);
                    self.key.push(KeyBit { value, round, origin: BitOrigin::Iteration });
                    Ok(Some(SiftEvent::Grouping { group0, group1 }))
                } else if self.cfg.pairs_in_final_round(round) {
                    let (ann, own_value) = RenesAnnouncement::announce(b1, &mut self.rng);
                    self.pending_renes = Some(!own_value);
                    Ok(Some(SiftEvent::RenesPair { zero: ann.zero, one: ann.one }))
                } else {
                    self.next.push(b1);
                    Ok(Some(SiftEvent::SameLetter))
                }
            }
            SiftEvent::Success { flag } => {
                let value = self
                    .pending_renes
                    .take()
                    .ok_or_else(|| Error::Sifting("success flag without a Renes pair".into()))?;
                if flag {
                    self.key.push(KeyBit { value, round, origin: BitOrigin::FinalPairing });
                }
                Ok(None)
            }
            SiftEvent::RoundDone { round: r } if r == round => {
                self.residuals.push(LetterSequence(self.next.clone()));
                if round < self.cfg.max_rounds {
                    self.round += 1;
                    self.current = std::mem::take(&mut self.next);
                    self.used = vec![false; self.current.len()];
                } else {
                    self.finished = true;
                }
                Ok(None)
            }
            ref other => Err(Error::Sifting(format!("unexpected {other:?} in round {round}"))),
        }
    }
}

/// Aggregate bookkeeping over a whole run, with error counts from comparing
/// both keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyAccounting {
    pub letters: usize,
    pub rounds: Vec<RoundAccounting>,
    pub total_bits: usize,
    pub letters_consumed: usize,
    /// Key bits per original letter pair.
    pub efficiency: f64,
    pub bit_errors: usize,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundAccounting {
    #[serde(flatten)]
    pub tally: RoundTally,
    pub consumed: usize,
    pub iteration_bits: usize,
    pub final_pairing_bits: usize,
    pub bit_errors: usize,
    pub error_rate: Option<f64>,
}

impl KeyAccounting {
    pub fn from_run(letters: usize, tallies: &[RoundTally], alice: &[KeyBit], bob: &[KeyBit]) -> Result<Self> {
        if alice.len() != bob.len() {
            return Err(Error::Sifting(format!("key lengths differ: {} vs {}", alice.len(), bob.len())));
        }
        let mut rounds = Vec::with_capacity(tallies.len());
        for t in tallies {
            let bits: Vec<(&KeyBit, &KeyBit)> = alice.iter().zip(bob).filter(|(a, _)| a.round == t.round).collect();
            let errors = bits.iter().filter(|(a, b)| a.value != b.value).count();
            let count = |o: BitOrigin| bits.iter().filter(|(a, _)| a.origin == o).count();
            rounds.push(RoundAccounting {
                tally: t.clone(),
                consumed: t.consumed(),
                iteration_bits: count(BitOrigin::Iteration),
                final_pairing_bits: count(BitOrigin::FinalPairing),
                bit_errors: errors,
                error_rate: (!bits.is_empty()).then(|| errors as f64 / bits.len() as f64),
            });
        }
        let total_bits = alice.len();
        let bit_errors = rounds.iter().map(|r| r.bit_errors).sum();
        Ok(Self {
            letters,
            total_bits,
            letters_consumed: rounds.iter().map(|r| r.consumed).sum(),
            efficiency: if letters == 0 { 0.0 } else { total_bits as f64 / letters as f64 },
            bit_errors,
            error_rate: if total_bits == 0 { 0.0 } else { bit_errors as f64 / total_bits as f64 },
            rounds,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SiftingOutcome {
    pub alice_key: Vec<KeyBit>,
    pub bob_key: Vec<KeyBit>,
    pub transcript: SiftingTranscript,
    pub accounting: KeyAccounting,
    /// `(alice, bob)` records put aside by each round.
    pub residuals: Vec<(LetterSequence, LetterSequence)>,
}

/// Run both parties in-process. Alice and Bob draw their private randomness
/// from streams [`streams::ALICE_SIFT`] and [`streams::BOB_SIFT`] of `seed`.
pub fn run_sifting(alice: &LetterSequence, bob: &LetterSequence, cfg: SiftingConfig, seed: u64) -> Result<SiftingOutcome> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch { alice: alice.len(), bob: bob.len() });
    }
    let mut a = AliceSifter::new(alice.clone(), cfg, RngStream::new(seed, streams::ALICE_SIFT))?;
    let mut b = BobSifter::new(bob.clone(), cfg, RngStream::new(seed, streams::BOB_SIFT))?;
    let mut events = Vec::new();
    while !a.is_finished() {
        let ev = a.next_event()?;
        let reply = b.handle(&ev)?;
        events.push(ev);
        if let Some(reply) = reply {
            let follow = a.handle(&reply)?;
            events.push(reply);
            if let Some(follow) = follow {
                b.handle(&follow)?;
                events.push(follow);
            }
        }
    }
    let accounting = KeyAccounting::from_run(alice.len(), a.tallies(), a.key(), b.key())?;
    let residuals = a.residuals().iter().cloned().zip(b.residuals().iter().cloned()).collect();
    Ok(SiftingOutcome {
        alice_key: a.key,
        bob_key: b.key,
        transcript: SiftingTranscript { events },
        accounting,
        residuals,
    })
}

fn replay(letters: &LetterSequence, transcript: &SiftingTranscript, is_alice: bool) -> Result<Vec<bool>> {
    let mut current = letters.0.clone();
    let mut next = Vec::new();
    let mut open: Option<Letter> = None;
    let mut renes_value: Option<bool> = None;
    let mut key = Vec::new();
    let bad = |what: &str| Error::Sifting(format!("transcript replay: {what}"));
    for ev in &transcript.events {
        match *ev {
            SiftEvent::Positions { first, .. } => {
                open = Some(*current.get(first).ok_or_else(|| bad("position out of range"))?);
            }
            SiftEvent::Grouping { group0, group1 } => {
                let own = open.take().ok_or_else(|| bad("grouping without positions"))?;
                key.push(if is_alice { alice_grouping_bit(own, &group1) } else { bob_grouping_bit(own, &group0) });
            }
            SiftEvent::SameLetter => {
                next.push(open.take().ok_or_else(|| bad("same-letter flag without positions"))?);
            }
            SiftEvent::RenesPair { zero, one } => {
                let own = open.take().ok_or_else(|| bad("Renes pair without positions"))?;
                let ann = RenesAnnouncement { zero, one };
                renes_value = if is_alice { ann.value_of(own) } else { ann.partner_value(own) };
            }
            SiftEvent::Success { flag } => {
                if flag {
                    key.push(renes_value.take().ok_or_else(|| bad("success without a decodable pair"))?);
                }
                renes_value = None;
            }
            SiftEvent::RoundDone { .. } => {
                current = std::mem::take(&mut next);
            }
        }
    }
    Ok(key)
}

/// Regenerate Alice's key from her letters and the public transcript.
pub fn replay_alice(letters: &LetterSequence, transcript: &SiftingTranscript) -> Result<Vec<bool>> {
    replay(letters, transcript, true)
}

/// Regenerate Bob's key from his letters and the public transcript.
pub fn replay_bob(letters: &LetterSequence, transcript: &SiftingTranscript) -> Result<Vec<bool>> {
    replay(letters, transcript, false)
}

/// Result of plain Renes pairing applied position by position.
#[derive(Debug, Clone, PartialEq)]
pub struct RenesOutcome {
    pub alice_key: Vec<bool>,
    pub bob_key: Vec<bool>,
    pub attempts: usize,
    pub successes: usize,
}

/// Renes pairing on every pair of the records: Alice announces a pair for
/// her letter, Bob succeeds when his letter is in it.
pub fn run_renes(alice: &LetterSequence, bob: &LetterSequence, seed: u64) -> Result<RenesOutcome> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch { alice: alice.len(), bob: bob.len() });
    }
    let mut rng = RngStream::new(seed, streams::ALICE_SIFT);
    let mut out = RenesOutcome { alice_key: Vec::new(), bob_key: Vec::new(), attempts: alice.len(), successes: 0 };
    for (&a, &b) in alice.0.iter().zip(&bob.0) {
        let (ann, bit) = renes_pair(a, &mut rng);
        if let Some(decoded) = ann.partner_value(b) {
            out.successes += 1;
            out.alice_key.push(bit);
            out.bob_key.push(decoded);
        }
    }
    Ok(out)
}

/// Noise estimate of a record put aside by one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEstimate {
    pub round: usize,
    pub samples: usize,
    pub same_letter_fraction: f64,
    pub epsilon_hat: f64,
    /// One binomial standard deviation of `epsilon_hat`.
    pub std_error: f64,
}

/// `ε̂ = 4 × (same-letter fraction)` for every non-empty put-aside record.
pub fn residual_statistics(residuals: &[(LetterSequence, LetterSequence)]) -> Result<Vec<ResidualEstimate>> {
    let mut out = Vec::new();
    for (i, (a, b)) in residuals.iter().enumerate() {
        if a.len() != b.len() {
            return Err(Error::LengthMismatch { alice: a.len(), bob: b.len() });
        }
        if a.is_empty() {
            continue;
        }
        let n = a.len();
        let same = a.0.iter().zip(&b.0).filter(|(x, y)| x == y).count();
        let f = same as f64 / n as f64;
        out.push(ResidualEstimate {
            round: i + 1,
            samples: n,
            same_letter_fraction: f,
            epsilon_hat: 4.0 * f,
            std_error: 4.0 * (f * (1.0 - f) / n as f64).sqrt(),
        });
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("no put-aside records to analyse".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::sample_pairs;

    fn records(eps: f64, n: usize, seed: u64) -> (LetterSequence, LetterSequence) {
        sample_pairs(eps, n, &mut RngStream::new(seed, streams::SOURCE)).unwrap()
    }

    #[test]
    fn config_requires_a_round() {
        assert!(SiftingConfig::new(0, false).is_err());
    }

    #[test]
    fn unequal_records_are_rejected() {
        let a: LetterSequence = "ABAB".parse().unwrap();
        let b: LetterSequence = "CDC".parse().unwrap();
        let cfg = SiftingConfig::new(1, false).unwrap();
        assert!(matches!(run_sifting(&a, &b, cfg, 0), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn tiny_hand_worked_round() {
        // Alice: A A ; Bob: C D -> one grouping, bits must agree.
        let a: LetterSequence = "AA".parse().unwrap();
        let b: LetterSequence = "CD".parse().unwrap();
        let out = run_sifting(&a, &b, SiftingConfig::new(1, false).unwrap(), 4).unwrap();
        assert_eq!(out.alice_key.len(), 1);
        assert_eq!(key_values(&out.alice_key), key_values(&out.bob_key));
        match &out.transcript.events[1] {
            SiftEvent::Grouping { group0, group1 } => {
                let cd = [Letter::C, Letter::D];
                assert!(*group0 == cd || *group1 == cd);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_noise_keys_agree_for_all_variants() {
        for seed in 0..5 {
            let (a, b) = records(0.0, 3000, seed);
            for (rounds, fp) in [(1, false), (2, false), (3, false), (1, true), (2, true), (4, true)] {
                let out = run_sifting(&a, &b, SiftingConfig::new(rounds, fp).unwrap(), seed).unwrap();
                assert_eq!(key_values(&out.alice_key), key_values(&out.bob_key), "n={rounds} fp={fp}");
                assert_eq!(out.accounting.bit_errors, 0);
            }
        }
    }

    #[test]
    fn letters_are_conserved_every_round() {
        let (a, b) = records(0.2, 10_001, 3);
        let out = run_sifting(&a, &b, SiftingConfig::new(3, true).unwrap(), 3).unwrap();
        let mut expected_in = a.len();
        for r in &out.accounting.rounds {
            assert_eq!(r.tally.letters_in, expected_in);
            assert_eq!(r.consumed + r.tally.residual + r.tally.unpaired, r.tally.letters_in);
            assert!(r.tally.unpaired <= 4);
            expected_in = r.tally.residual;
        }
        assert!(out.accounting.letters_consumed <= a.len());
    }

    #[test]
    fn transcript_replay_regenerates_both_keys() {
        let (a, b) = records(0.15, 5000, 8);
        for fp in [false, true] {
            let out = run_sifting(&a, &b, SiftingConfig::new(3, fp).unwrap(), 8).unwrap();
            assert_eq!(replay_alice(&a, &out.transcript).unwrap(), key_values(&out.alice_key));
            assert_eq!(replay_bob(&b, &out.transcript).unwrap(), key_values(&out.bob_key));
        }
    }

    #[test]
    fn groupings_are_sorted_partitions() {
        let (a, b) = records(0.1, 2000, 5);
        let out = run_sifting(&a, &b, SiftingConfig::new(2, true).unwrap(), 5).unwrap();
        for ev in &out.transcript.events {
            if let SiftEvent::Grouping { group0, group1 } = ev {
                check_partition(group0, group1).unwrap();
            }
        }
    }

    #[test]
    fn bob_rejects_reused_or_invalid_positions() {
        let letters: LetterSequence = "ABCD".parse().unwrap();
        let mut bob = BobSifter::new(letters, SiftingConfig::new(1, false).unwrap(), RngStream::new(0, 0)).unwrap();
        bob.handle(&SiftEvent::Positions { first: 0, second: 1 }).unwrap();
        assert!(bob.handle(&SiftEvent::Positions { first: 1, second: 2 }).is_err());
        assert!(bob.handle(&SiftEvent::Positions { first: 2, second: 9 }).is_err());
        assert!(bob.handle(&SiftEvent::Success { flag: true }).is_err());
        assert!(bob.handle(&SiftEvent::RoundDone { round: 2 }).is_err());
    }

    #[test]
    fn alice_rejects_answers_out_of_turn() {
        let letters: LetterSequence = "AABB".parse().unwrap();
        let mut alice = AliceSifter::new(letters, SiftingConfig::new(1, false).unwrap(), RngStream::new(0, 0)).unwrap();
        assert!(alice.handle(&SiftEvent::SameLetter).is_err());
        alice.next_event().unwrap();
        assert!(alice.next_event().is_err());
        // a Renes pair is only legal in a final-pairing round
        assert!(alice.handle(&SiftEvent::RenesPair { zero: Letter::A, one: Letter::B }).is_err());
        assert!(alice.is_awaiting());
    }

    #[test]
    fn renes_announcement_shape() {
        let mut rng = RngStream::new(1, 1);
        let mut zero_first = 0;
        for _ in 0..4000 {
            let (ann, bit) = renes_pair(Letter::C, &mut rng);
            assert_ne!(ann.zero, ann.one);
            assert_eq!(ann.value_of(Letter::C), Some(bit));
            if ann.zero == Letter::C {
                zero_first += 1;
            }
        }
        // own letter is stated first about half the time
        assert!((zero_first as f64 / 4000.0 - 0.5).abs() < 0.05);
    }

    #[test]
    fn renes_success_rate_at_zero_noise() {
        let n = 100_000;
        let (a, b) = records(0.0, n, 12);
        let out = run_renes(&a, &b, 12).unwrap();
        let p = 1.0 / 3.0;
        let rate = out.successes as f64 / n as f64;
        assert!((rate - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{rate}");
        assert_eq!(out.alice_key, out.bob_key);
    }

    #[test]
    fn residual_statistics_needs_data() {
        assert!(residual_statistics(&[]).is_err());
        assert!(residual_statistics(&[(LetterSequence::default(), LetterSequence::default())]).is_err());
        let (a, b) = records(0.0, 4000, 2);
        let out = run_sifting(&a, &b, SiftingConfig::new(2, false).unwrap(), 2).unwrap();
        for est in residual_statistics(&out.residuals).unwrap() {
            assert_eq!(est.epsilon_hat, 0.0);
        }
    }
}
