//! Dataset construction, training and inference for the two network families.

mod decompose;
mod infer;
mod manifest;
mod nets;
mod normalize;
mod patches;
mod search;
mod synth;
mod train;

pub use decompose::{decompose_tonemap_channels, lab_parts, recompose_tonemap, ChannelScaling, LabParts, TonemapDecomposition};
pub use infer::{infer_ldr2hdr, infer_tonemap, predict_plane};
pub use manifest::{resolve, Ladder, Manifest, SceneEntry, Split};
pub use nets::{build_ldr2hdr_net, build_tonemap_net, Channel};
pub use normalize::normalize_hdr;
pub use patches::{extract_patches, reassemble, PatchGrid};
pub use search::{hyperparam_search, SearchResult};
pub use synth::synth_scene;
pub use train::{
    ldr2hdr_samples, loss_curve_csv, tonemap_samples, CurveRow, Dtype, Sample, SampleSet, StepOutcome, TrainConfig, Trainer,
};
