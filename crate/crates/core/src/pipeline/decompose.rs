use serde::{Deserialize, Serialize};

use super::Channel;
use crate::error::{Error, Result};
use crate::image::{Plane, RadianceMap};
use crate::imgproc::{bilateral_filter, lab_to_rgb, rgb_to_lab, BilateralParams, LabImage, D65};
use crate::tmo::ToneMap;

/// Affine map between a raw channel and the value a network sees:
/// `scaled = (raw - offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScaling {
    pub scale: f64,
    pub offset: f64,
}

impl ChannelScaling {
    pub const IDENTITY: ChannelScaling = ChannelScaling { scale: 1.0, offset: 0.0 };

    pub fn for_channel(c: Channel) -> Self {
        match c {
            Channel::LBase => Self { scale: 100.0, offset: 0.0 },
            Channel::LDetail => Self { scale: 20.0, offset: 0.0 },
            Channel::A | Channel::LabB => Self {
                scale: 255.0,
                offset: -128.0,
            },
            Channel::R | Channel::G | Channel::B => Self::IDENTITY,
        }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.offset) / self.scale
    }

    pub fn invert(&self, scaled: f64) -> f64 {
        scaled * self.scale + self.offset
    }
}

/// L*a*b* planes with L split into an edge-preserving base and its detail.
/// The base holds f32-representable values so `base + detail == l` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct LabParts {
    pub l: Plane,
    pub base: Plane,
    pub detail: Plane,
    pub a: Plane,
    pub b: Plane,
}

impl LabParts {
    pub fn raw(&self, c: Channel) -> &Plane {
        match c {
            Channel::LBase => &self.base,
            Channel::LDetail => &self.detail,
            Channel::A => &self.a,
            Channel::LabB => &self.b,
            _ => panic!("{c} is not a Lab channel"),
        }
    }

    /// Channel `c` mapped to network range.
    pub fn scaled(&self, c: Channel) -> Plane {
        let s = ChannelScaling::for_channel(c);
        self.raw(c).map(|v| s.apply(v))
    }
}

pub fn lab_parts(map: &RadianceMap, filter: BilateralParams) -> Result<LabParts> {
    let lab = rgb_to_lab(map, D65);
    let l = lab.l_plane();
    let base = bilateral_filter(&l, filter.sigma_s, filter.sigma_r)?.map(|v| v as f32 as f64);
    let detail = Plane {
        data: l.data.iter().zip(&base.data).map(|(a, b)| a - b).collect(),
        ..l.clone()
    };
    Ok(LabParts {
        a: lab.a_plane(),
        b: lab.b_plane(),
        l,
        base,
        detail,
    })
}

/// Inputs (from the radiance map) and targets (from its tone map) for the
/// four tone-mapping networks.
#[derive(Debug, Clone, PartialEq)]
pub struct TonemapDecomposition {
    pub input: LabParts,
    pub target: LabParts,
}

impl TonemapDecomposition {
    /// `(channel, scaled input, scaled target)` in [`Channel::LAB`] order.
    pub fn pairs(&self) -> Vec<(Channel, Plane, Plane)> {
        Channel::LAB.iter().map(|&c| (c, self.input.scaled(c), self.target.scaled(c))).collect()
    }
}

pub fn decompose_tonemap_channels(map: &RadianceMap, tm: &ToneMap) -> Result<TonemapDecomposition> {
    if map.width() != tm.width() || map.height() != tm.height() {
        return Err(Error::Shape(format!(
            "radiance map is {}x{}, tone map is {}x{}",
            map.width(),
            map.height(),
            tm.width(),
            tm.height()
        )));
    }
    let filter = BilateralParams::default();
    Ok(TonemapDecomposition {
        input: lab_parts(map, filter)?,
        target: lab_parts(&tm.to_radiance(), filter)?,
    })
}

/// Inverts the channel scalings of four predicted planes (in [`Channel::LAB`]
/// order), sums base and detail, and converts back to clipped RGB.
pub fn recompose_tonemap(predicted: &[Plane; 4]) -> Result<ToneMap> {
    let raw = |i: usize| {
        let s = ChannelScaling::for_channel(Channel::LAB[i]);
        predicted[i].map(|v| s.invert(v))
    };
    let (base, detail) = (raw(0), raw(1));
    if !base.same_size(&detail) {
        return Err(Error::Shape("base and detail predictions differ in size".into()));
    }
    let l = Plane {
        data: base.data.iter().zip(&detail.data).map(|(a, b)| a + b).collect(),
        ..base
    };
    let rgb = lab_to_rgb(&LabImage::from_planes(&l, &raw(2), &raw(3), D65)?);
    ToneMap::from_clipped(rgb.width(), rgb.height(), rgb.into_data())
}
