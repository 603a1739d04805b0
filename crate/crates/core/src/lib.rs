//! Event-by-event simulation of a single-photon quantum eraser.
//!
//! Photons are modelled as messengers that carry two phase clocks and a
//! polarization vector. Beam splitters and polarizing beam splitters are
//! adaptive units built around a deterministic learning machine (DLM) that
//! keeps only the last message seen on each input channel plus an estimate of
//! the channel frequencies. Wave plates and phase shifters act on single
//! messages. Detector clicks are counted exactly as in the laboratory, and
//! the fringe visibility is computed from the counts.
//!
//! The [`oracle`] module is an independent quantum-theory reference (Jones
//! matrices on a four-amplitude state and closed-form visibilities) used to
//! check the simulated frequencies.
//!
//! Module map:
//!
//! - [`messages`]: message type, pure sources and the mixed-state group scheduler.
//! - [`dlm`]: the adaptive input stage shared by BS and PBS units.
//! - [`optics`]: processing units (BS, PBS, HWP, QWP, phase shifter, detector).
//! - [`network`]: experiment topologies and the one-messenger-at-a-time event loop.
//! - [`oracle`]: exact quantum-theory reference.
//! - [`harness`]: sweeps, visibility estimation, file outputs and reports.

pub mod angle;
pub mod dlm;
pub mod error;
pub mod harness;
pub mod messages;
pub mod network;
pub mod optics;
pub mod oracle;

pub use error::{Error, Result};
