pub mod camera;
pub mod cli;
pub mod error;
pub mod image;
pub mod imgproc;
pub mod io;
pub mod merge;
pub mod nn;
pub mod pipeline;
pub mod tmo;

pub use error::{Error, Result};
pub use image::{LdrImage, Plane, RadianceMap};
