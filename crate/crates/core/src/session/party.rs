//! The per-party session state machine.

use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::letters::{pair_counts, LetterSequence};
use crate::rng::{streams, RngStream};
use crate::session::acceptance::{acceptance_from_counts, AcceptancePolicy, SourceAcceptance};
use crate::session::message::{Body, Message, Role, PROTOCOL_VERSION};
use crate::session::transport::{memory_pair, Transport, TcpTransport};
use crate::sifting::{key_values, AliceSifter, BobSifter, KeyAccounting, KeyBit, RoundTally, SiftEvent, SiftingConfig};
use crate::source::{permutation_log, relabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub session_id: String,
    pub sifting: SiftingConfig,
    /// Number of pairs sacrificed for the acceptance test.
    pub tomography: usize,
    pub policy: AcceptancePolicy,
    /// Private seed of this party: its share of the public seed and its
    /// sifting choices derive from it.
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(session_id: impl Into<String>, sifting: SiftingConfig, tomography: usize, seed: u64) -> Self {
        Self { session_id: session_id.into(), sifting, tomography, policy: AcceptancePolicy::default(), seed }
    }

    fn hello(&self) -> Body {
        Body::Hello {
            version: PROTOCOL_VERSION,
            rounds: self.sifting.max_rounds,
            final_pairing: self.sifting.final_pairing,
            tomography: self.tomography,
            epsilon_max: self.policy.epsilon_max,
            multiplier: self.policy.multiplier,
            min_sample: self.policy.min_sample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Completed,
    /// The source failed the acceptance test; no key was generated.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub role: Role,
    pub session_id: String,
    pub status: SessionStatus,
    pub acceptance: SourceAcceptance,
    pub public_seed: u64,
    pub tomography_indices: Vec<usize>,
    /// Twirled letters left for sifting once the tomography sample is removed.
    pub sifting_input: LetterSequence,
    pub key: Vec<KeyBit>,
    /// Round bookkeeping; only Alice keeps it.
    pub tallies: Vec<RoundTally>,
    #[serde(skip)]
    pub transcript: Vec<Message>,
}

impl SessionResult {
    pub fn key_bits(&self) -> Vec<bool> {
        key_values(&self.key)
    }

    pub fn key_hex(&self) -> String {
        key_to_hex(&self.key_bits())
    }
}

/// Pack bits most-significant first; the last byte is zero-padded.
pub fn key_to_hex(bits: &[bool]) -> String {
    let bytes: Vec<u8> = bits.chunks(8).map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))).collect();
    hex::encode(bytes)
}

/// Write a transcript as JSON lines.
pub fn write_transcript<W: Write>(mut w: W, transcript: &[Message]) -> std::io::Result<()> {
    for m in transcript {
        writeln!(w, "{}", m.to_line())?;
    }
    Ok(())
}

fn commitment(session: &str, role: Role, share: u64) -> String {
    let mut h = Sha256::new();
    h.update(session.as_bytes());
    h.update([0]);
    h.update(role.to_string().as_bytes());
    h.update([0]);
    h.update(share.to_le_bytes());
    hex::encode(h.finalize())
}

/// Sorted positions of the tomography sample, derived from the public seed.
pub fn tomography_indices(public_seed: u64, n: usize, m: usize) -> Result<Vec<usize>> {
    if m > n {
        return Err(Error::InvalidConfig(format!("tomography sample {m} exceeds the {n} detections")));
    }
    let mut rng = RngStream::new(public_seed, streams::TOMOGRAPHY);
    let mut idx = rand::seq::index::sample(&mut rng, n, m).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

struct Link<T: Transport> {
    transport: T,
    session: String,
    role: Role,
    next_send: u64,
    next_recv: u64,
    transcript: Vec<Message>,
}

impl<T: Transport> Link<T> {
    fn message(&mut self, body: Body) -> Message {
        let m = Message { session: self.session.clone(), from: self.role, seq: self.next_send, body };
        self.next_send += 1;
        m
    }

    fn send(&mut self, body: Body) -> Result<()> {
        let m = self.message(body);
        self.transport
            .send(&m.to_line())
            .map_err(|e| Error::Aborted { reason: format!("transport loss: {e}") })?;
        self.transcript.push(m);
        Ok(())
    }

    /// Tell the peer why we stop, best effort, and produce the error.
    fn fail(&mut self, reason: impl Into<String>) -> Error {
        let reason = reason.into();
        let m = self.message(Body::Abort { reason: reason.clone() });
        let _ = self.transport.send(&m.to_line());
        Error::Aborted { reason }
    }

    fn out_of_phase(&mut self, body: &Body, phase: &str) -> Error {
        self.fail(format!("out-of-phase {} during {phase}", body.kind()))
    }

    fn recv(&mut self, phase: &str) -> Result<Body> {
        let line = match self.transport.recv() {
            Ok(Some(line)) => line,
            Ok(None) => return Err(Error::Aborted { reason: format!("transport loss during {phase}") }),
            Err(e) => return Err(Error::Aborted { reason: format!("transport loss during {phase}: {e}") }),
        };
        let m = match Message::from_line(&line) {
            Ok(m) => m,
            Err(_) => return Err(self.fail("malformed frame")),
        };
        if m.session != self.session {
            return Err(self.fail(format!("session id mismatch: {:?}", m.session)));
        }
        if m.from != self.role.peer() {
            return Err(self.fail(format!("unexpected sender {}", m.from)));
        }
        if m.seq != self.next_recv {
            return Err(self.fail(format!("sequence gap: expected {}, got {}", self.next_recv, m.seq)));
        }
        self.next_recv += 1;
        if let Body::Abort { reason } = &m.body {
            return Err(Error::Aborted { reason: format!("peer aborted: {reason}") });
        }
        self.transcript.push(m.clone());
        Ok(m.body)
    }
}

macro_rules! expect {
    ($link:expr, $phase:expr, $pat:pat => $out:expr) => {{
        let body = $link.recv($phase)?;
        match body {
            $pat => $out,
            other => return Err($link.out_of_phase(&other, $phase)),
        }
    }};
}

/// Run one side of a session over `transport`. `letters` is this party's
/// detection record.
///
/// Every exchange is opened by Alice and answered by Bob, so both sides
/// record the same transcript.
pub fn run_session<T: Transport>(role: Role, letters: &LetterSequence, transport: T, cfg: &SessionConfig) -> Result<SessionResult> {
    cfg.sifting.validate()?;
    cfg.policy.validate()?;
    let mut link = Link { transport, session: cfg.session_id.clone(), role, next_send: 0, next_recv: 0, transcript: Vec::new() };
    let alice = role == Role::Alice;

    // Handshake.
    let hello = cfg.hello();
    if alice {
        link.send(hello.clone())?;
    }
    let peer_hello = expect!(link, "handshake", b @ Body::Hello { .. } => b);
    if peer_hello != hello {
        return Err(link.fail("incompatible configuration"));
    }
    if !alice {
        link.send(hello)?;
    }

    // Commit to the shares of the public seed.
    let share = RngStream::new(cfg.seed, streams::SESSION_SEED).next_u64();
    let own_digest = commitment(&cfg.session_id, role, share);
    if alice {
        link.send(Body::SeedCommit { digest: own_digest.clone() })?;
    }
    let peer_digest = expect!(link, "seed commitment", Body::SeedCommit { digest } => digest);
    if !alice {
        link.send(Body::SeedCommit { digest: own_digest })?;
    }

    let n = letters.len();
    if alice {
        link.send(Body::DetectionBatchMeta { count: n })?;
    }
    let peer_count = expect!(link, "detection metadata", Body::DetectionBatchMeta { count } => count);
    if peer_count != n {
        return Err(link.fail(format!("detection count mismatch: {n} here, {peer_count} at the peer")));
    }
    if !alice {
        link.send(Body::DetectionBatchMeta { count: n })?;
    }

    // Open the commitments.
    if alice {
        link.send(Body::TwirlSeed { seed: share })?;
    }
    let peer_share = expect!(link, "seed reveal", Body::TwirlSeed { seed } => seed);
    if commitment(&cfg.session_id, role.peer(), peer_share) != peer_digest {
        return Err(link.fail("seed commitment mismatch"));
    }
    if !alice {
        link.send(Body::TwirlSeed { seed: share })?;
    }
    let public_seed = share ^ peer_share;
    let log = permutation_log(n, &mut RngStream::new(public_seed, streams::TWIRL));
    let twirled = relabel(letters, &log)?;

    // Tomography sacrifice.
    let indices = match tomography_indices(public_seed, n, cfg.tomography) {
        Ok(i) => i,
        Err(e) => return Err(link.fail(e.to_string())),
    };
    let own_reveal = twirled.select(&indices);
    let peer_reveal = if alice {
        link.send(Body::TomoRequest { indices: indices.clone() })?;
        link.send(Body::TomoReveal { letters: own_reveal.clone() })?;
        expect!(link, "tomography", Body::TomoReveal { letters } => letters)
    } else {
        let requested = expect!(link, "tomography", Body::TomoRequest { indices } => indices);
        if requested != indices {
            return Err(link.fail("tomography indices do not match the public seed"));
        }
        let peer = expect!(link, "tomography", Body::TomoReveal { letters } => letters);
        link.send(Body::TomoReveal { letters: own_reveal.clone() })?;
        peer
    };
    if peer_reveal.len() != indices.len() {
        return Err(link.fail("tomography reveal has the wrong length"));
    }
    let (a_rev, b_rev) = if alice { (&own_reveal, &peer_reveal) } else { (&peer_reveal, &own_reveal) };
    let acceptance = match pair_counts(a_rev, b_rev).and_then(|c| acceptance_from_counts(&c, &cfg.policy)) {
        Ok(a) => a,
        Err(e) => return Err(link.fail(e.to_string())),
    };
    let verdict_body = Body::AcceptSource { epsilon_hat: acceptance.epsilon_hat, verdict: acceptance.verdict };
    if alice {
        link.send(verdict_body.clone())?;
    }
    let peer_verdict = expect!(link, "acceptance", b @ Body::AcceptSource { .. } => b);
    if peer_verdict != verdict_body {
        return Err(link.fail("acceptance verdicts disagree"));
    }
    if !alice {
        link.send(verdict_body)?;
    }

    let sifting_input = twirled.without(&indices);
    let mut result = SessionResult {
        role,
        session_id: cfg.session_id.clone(),
        status: SessionStatus::Rejected,
        acceptance,
        public_seed,
        tomography_indices: indices,
        sifting_input: sifting_input.clone(),
        key: Vec::new(),
        tallies: Vec::new(),
        transcript: Vec::new(),
    };
    if !result.acceptance.verdict.is_accept() {
        result.transcript = link.transcript;
        return Ok(result);
    }

    if alice {
        let mut sifter = AliceSifter::new(sifting_input, cfg.sifting, RngStream::new(cfg.seed, streams::ALICE_SIFT))?;
        while !sifter.is_finished() {
            let ev = sifter.next_event()?;
            let awaits_answer = matches!(ev, SiftEvent::Positions { .. });
            link.send(ev.into())?;
            if !awaits_answer {
                continue;
            }
            let body = link.recv("sifting")?;
            let answer = match body.to_sift_event() {
                Some(ev @ (SiftEvent::Grouping { .. } | SiftEvent::SameLetter | SiftEvent::RenesPair { .. })) => ev,
                _ => return Err(link.out_of_phase(&body, "sifting")),
            };
            match sifter.handle(&answer) {
                Ok(Some(follow)) => link.send(follow.into())?,
                Ok(None) => {}
                Err(e) => return Err(link.fail(e.to_string())),
            }
        }
        result.key = sifter.key().to_vec();
        result.tallies = sifter.tallies().to_vec();
    } else {
        let mut sifter = BobSifter::new(sifting_input, cfg.sifting, RngStream::new(cfg.seed, streams::BOB_SIFT))?;
        while !sifter.is_finished() {
            let body = link.recv("sifting")?;
            let ev = match body.to_sift_event() {
                Some(ev @ (SiftEvent::Positions { .. } | SiftEvent::Success { .. } | SiftEvent::RoundDone { .. })) => ev,
                _ => return Err(link.out_of_phase(&body, "sifting")),
            };
            match sifter.handle(&ev) {
                Ok(Some(answer)) => link.send(answer.into())?,
                Ok(None) => {}
                Err(e) => return Err(link.fail(e.to_string())),
            }
        }
        result.key = sifter.key().to_vec();
    }
    result.status = SessionStatus::Completed;
    result.transcript = link.transcript;
    Ok(result)
}

/// Results of both parties of one session.
#[derive(Debug)]
pub struct SessionPair {
    pub alice: Result<SessionResult>,
    pub bob: Result<SessionResult>,
}

impl SessionPair {
    pub fn into_results(self) -> Result<(SessionResult, SessionResult)> {
        Ok((self.alice?, self.bob?))
    }
}

/// Run both parties on their own threads over the given transports.
pub fn run_pair<TA, TB>(
    letters: (&LetterSequence, &LetterSequence),
    transports: (TA, TB),
    configs: (&SessionConfig, &SessionConfig),
) -> SessionPair
where
    TA: Transport + Send,
    TB: Transport + Send,
{
    let (ta, tb) = transports;
    std::thread::scope(|s| {
        let a = s.spawn(|| run_session(Role::Alice, letters.0, ta, configs.0));
        let b = s.spawn(|| run_session(Role::Bob, letters.1, tb, configs.1));
        SessionPair {
            alice: a.join().unwrap_or_else(|_| Err(Error::Aborted { reason: "alice panicked".into() })),
            bob: b.join().unwrap_or_else(|_| Err(Error::Aborted { reason: "bob panicked".into() })),
        }
    })
}

/// Both parties in-process over the in-memory transport.
pub fn run_loopback(alice: &LetterSequence, bob: &LetterSequence, alice_cfg: &SessionConfig, bob_cfg: &SessionConfig) -> SessionPair {
    let (ta, tb) = memory_pair();
    run_pair((alice, bob), (ta, tb), (alice_cfg, bob_cfg))
}

/// Both parties in-process over a TCP connection on 127.0.0.1.
pub fn run_tcp_loopback(alice: &LetterSequence, bob: &LetterSequence, alice_cfg: &SessionConfig, bob_cfg: &SessionConfig) -> Result<SessionPair> {
    let io = |e: std::io::Error| Error::Transport(e.to_string());
    let listener = std::net::TcpListener::bind("127.0.0.1:0").map_err(io)?;
    let addr = listener.local_addr().map_err(io)?;
    let client = TcpTransport::connect(addr)?;
    let (stream, _) = listener.accept().map_err(io)?;
    let server = TcpTransport::new(stream)?;
    Ok(run_pair((alice, bob), (client, server), (alice_cfg, bob_cfg)))
}

/// Accounting over both keys of a completed session.
pub fn session_accounting(alice: &SessionResult, bob: &SessionResult) -> Result<KeyAccounting> {
    KeyAccounting::from_run(alice.sifting_input.len(), &alice.tallies, &alice.key, &bob.key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_packing() {
        assert_eq!(key_to_hex(&[]), "");
        assert_eq!(key_to_hex(&[true]), "80");
        assert_eq!(key_to_hex(&[true, false, true, false, true, true, true, true, false, true]), "af40");
    }

    #[test]
    fn commitments_bind_role_and_share() {
        let a = commitment("s", Role::Alice, 5);
        assert_eq!(a.len(), 64);
        assert_ne!(a, commitment("s", Role::Bob, 5));
        assert_ne!(a, commitment("s", Role::Alice, 6));
        assert_ne!(a, commitment("t", Role::Alice, 5));
    }

    #[test]
    fn tomography_indices_are_sorted_distinct_and_seeded() {
        let i = tomography_indices(9, 100, 30).unwrap();
        assert_eq!(i.len(), 30);
        assert!(i.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(i, tomography_indices(9, 100, 30).unwrap());
        assert_ne!(i, tomography_indices(10, 100, 30).unwrap());
        assert!(tomography_indices(9, 10, 11).is_err());
    }
}
