//! Deterministic learning machine: the adaptive input stage of BS and PBS units.
//!
//! The machine holds the last message seen on each of its two input
//! channels (three 2-vectors per channel) and a vector `x` on the simplex
//! that tracks how often each channel fires:
//!
//! ```text
//! x ← γ·x + (1 − γ)·v,   v = (1, 0) for channel 0, (0, 1) for channel 1
//! ```
//!
//! Fourteen numbers in total; nothing older than the last message per
//! channel survives an update.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::messages::Message;

/// Input or output channel of a two-port unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Zero,
    One,
}

impl Channel {
    pub fn index(self) -> usize {
        match self {
            Channel::Zero => 0,
            Channel::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Channel::Zero),
            1 => Some(Channel::One),
            _ => None,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Channel::Zero => Channel::One,
            Channel::One => Channel::Zero,
        }
    }
}

/// Checks that `gamma` lies in the open interval (0, 1).
pub fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(gamma)
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DlmState {
    registers: [Message; 2],
    x: [f64; 2],
    gamma: f64,
}

impl DlmState {
    /// Fresh machine: `x = (1/2, 1/2)`, every register `(1, 0)`.
    pub fn new(gamma: f64) -> Result<Self> {
        Ok(DlmState {
            registers: [Message::default(); 2],
            x: [0.5, 0.5],
            gamma: check_gamma(gamma)?,
        })
    }

    /// Machine with explicit registers and channel vector, for probing the
    /// transformation stage at a chosen operating point.
    pub fn with_state(gamma: f64, registers: [Message; 2], x: [f64; 2]) -> Result<Self> {
        let gamma = check_gamma(gamma)?;
        if !(x[0] >= 0.0 && x[1] >= 0.0 && (x[0] + x[1] - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "channel vector must lie on the simplex, got {x:?}"
            )));
        }
        Ok(DlmState { registers, x, gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn x(&self) -> [f64; 2] {
        self.x
    }

    pub fn register(&self, channel: Channel) -> &Message {
        &self.registers[channel.index()]
    }

    /// Stores `msg` in the registers of `channel` and moves `x` toward that channel.
    pub fn update(&mut self, channel: Channel, msg: &Message) {
        let c = channel.index();
        self.registers[c] = *msg;
        let g = self.gamma;
        self.x[c] = g * self.x[c] + (1.0 - g);
        self.x[1 - c] = g * self.x[1 - c];
    }
}
