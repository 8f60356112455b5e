//! Colour conversion, luminance, histogram entropy and bilateral filtering.

mod bilateral;
pub(crate) mod color;
mod entropy;

pub use bilateral::{bilateral_filter, gaussian_blur, BilateralParams};
pub use color::{lab_to_rgb, luminance, rgb_to_lab, srgb_decode, srgb_encode, LabImage, Xyz, D65};
pub use entropy::{entropy, luma_code, Histogram};
