//! Discrete-time baseband simulator for a bistatic joint radar-communication
//! link built on an orthogonal unimodular sequence pair.
//!
//! Pipeline, in module order:
//!
//! * [`seqdesign`] — cyclic-algorithm design of the low-sidelobe orthogonal
//!   pair and its correlation metrics;
//! * [`framing`] — the two-layer frame: bits select a sequence per symbol,
//!   an external phase code rotates each symbol;
//! * [`channel`] — multipath taps with integer-chip delays plus complex AWGN;
//! * [`receiver`] — matched filtering, information-independent radar
//!   processing, CFAR and joint detection with CSI extraction;
//! * [`equalizer`] — cross-symbol-interference analysis and
//!   judgement-reconstruction demodulation;
//! * [`harness`] — seeded Monte-Carlo SER/Pd/invariance studies and result
//!   emission.
//!
//! Time is measured in chips; a symbol spans `T_s = L` chips. All filter
//! outputs share the lag convention of [`seqdesign::cross_correlation`].

pub mod channel;
pub mod equalizer;
pub mod error;
pub mod fft;
pub mod framing;
pub mod harness;
pub mod receiver;
pub mod seqdesign;

pub use error::{JrcError, Result};
