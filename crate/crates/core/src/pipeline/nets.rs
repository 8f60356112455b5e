use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::nn::{LayerKind, LayerSpec, NetworkSpec};

pub const DEFAULT_DROPOUT: f64 = 0.4;

/// Which quantity a per-channel network predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    LBase,
    LDetail,
    A,
    LabB,
}

impl Channel {
    pub const RGB: [Channel; 3] = [Channel::R, Channel::G, Channel::B];
    pub const LAB: [Channel; 4] = [Channel::LBase, Channel::LDetail, Channel::A, Channel::LabB];

    pub fn name(self) -> &'static str {
        match self {
            Channel::R => "R",
            Channel::G => "G",
            Channel::B => "B",
            Channel::LBase => "Lbase",
            Channel::LDetail => "Ldetail",
            Channel::A => "a",
            Channel::LabB => "b",
        }
    }

    /// Position within [`Channel::RGB`] or [`Channel::LAB`].
    pub fn index(self) -> usize {
        match self {
            Channel::R | Channel::LBase => 0,
            Channel::G | Channel::LDetail => 1,
            Channel::B | Channel::A => 2,
            Channel::LabB => 3,
        }
    }

    /// Distinct per-channel seed so the networks start from different weights.
    fn seed(self, seed: u64) -> u64 {
        seed.wrapping_mul(31).wrapping_add(self as u64 + 1)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        [Channel::RGB.as_slice(), Channel::LAB.as_slice()]
            .concat()
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown channel {s:?}")))
    }
}

fn stack(input: usize, first: usize, rest: &[usize], seed: u64) -> NetworkSpec {
    let mut layers = vec![LayerSpec::hidden(LayerKind::Conv3x3, input, first, DEFAULT_DROPOUT)];
    let mut prev = first;
    for &d in rest {
        layers.push(LayerSpec::hidden(LayerKind::Conv1x1, prev, d, DEFAULT_DROPOUT));
        prev = d;
    }
    layers.push(LayerSpec::output(prev));
    NetworkSpec { layers, seed }
}

/// Five exposures in, one radiance channel out: 60, 40, 20, 20, 20 feature maps.
pub fn build_ldr2hdr_net(channel: Channel, seed: u64) -> NetworkSpec {
    stack(5, 60, &[40, 20, 20, 20], channel.seed(seed))
}

/// One Lab-derived channel in, its tone-mapped counterpart out: 100, 80, 50, 10.
pub fn build_tonemap_net(channel: Channel, seed: u64) -> NetworkSpec {
    stack(1, 100, &[80, 50, 10], channel.seed(seed))
}
