//! Continued-fraction enumerations of the rationals, the Minkowski
//! question-mark function, and streaming block-frequency analysis of the
//! numbers built by concatenating those enumerations.

pub mod analyzer;
pub mod cf;
pub mod dyadic;
pub mod error;
pub mod measures;
pub mod perm;
pub mod streams;
pub mod tree;
pub mod verify;

pub use cf::{BlockQuery, CFWord, PathCode, Rational};
pub use dyadic::DyadicRational;
pub use error::{Error, Result};
pub use streams::{Checkpoint, DigitStream, StreamDigit, StreamSource};
pub use tree::OrderingId;
