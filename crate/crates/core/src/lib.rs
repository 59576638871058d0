//! Quantum key distribution with a four-outcome tetrahedron measurement on
//! both sides of an entangled-pair source.
//!
//! The crate covers the qubit algebra, the measurement and state
//! reconstruction, a seeded noisy-singlet source with its purification,
//! iterative key extraction, the security analysis, and a two-party session
//! that runs over an in-memory channel or TCP.

pub mod distribution;
pub mod error;
pub mod letters;
pub mod quantum;
pub mod rng;
pub mod security;
pub mod session;
pub mod sifting;
pub mod source;
pub mod tetra;

pub use error::{Error, Result};
pub use letters::{Letter, LetterSequence};
pub use rng::RngStream;
pub use tetra::{Pom, PomKind};
