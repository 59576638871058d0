//! Alice and Bob as message-driven peers: handshake, public-seed exchange,
//! twirling, tomography and source acceptance, then sifting over the wire.

pub mod acceptance;
pub mod message;
pub mod party;
pub mod transport;

pub use acceptance::{acceptance_from_counts, acceptance_test, estimate_epsilon, AcceptancePolicy, EpsilonEstimate, SourceAcceptance, Verdict};
pub use message::{Body, Message, Role, PROTOCOL_VERSION};
pub use party::{
    key_to_hex, run_loopback, run_pair, run_session, run_tcp_loopback, session_accounting, tomography_indices, write_transcript, SessionConfig,
    SessionPair, SessionResult, SessionStatus,
};
pub use transport::{memory_pair, MemoryTransport, ScriptedTransport, TcpTransport, Transport};
