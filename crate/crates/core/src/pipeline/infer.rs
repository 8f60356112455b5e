use super::{extract_patches, lab_parts, reassemble, recompose_tonemap, Channel};
use crate::camera::{ExposureStack, STACK_LEN};
use crate::error::{Error, Result};
use crate::image::{Plane, RadianceMap};
use crate::imgproc::BilateralParams;
use crate::nn::{Network, Real, Tensor4};
use crate::tmo::ToneMap;

const INFER_BATCH: usize = 16;

/// Runs `net` in eval mode over patches of the stacked `inputs` and
/// reassembles a full-size output plane.
pub fn predict_plane<T: Real>(net: &mut Network<T>, inputs: &[Plane], patch: usize) -> Result<Plane> {
    let refs: Vec<&Plane> = inputs.iter().collect();
    let (grid, patches) = extract_patches(&refs, patch)?;
    let mut out = Vec::with_capacity(patches.len());
    for chunk in patches.chunks(INFER_BATCH) {
        let data = chunk.iter().flatten().map(|&v| T::of(v)).collect();
        let x = Tensor4::from_vec([chunk.len(), inputs.len(), patch, patch], data)?;
        let y = net.predict(&x)?;
        out.extend((0..chunk.len()).map(|i| y.sample(i).iter().map(|v| v.f64()).collect::<Vec<_>>()));
    }
    reassemble(&grid, &out)
}

/// Predicts each colour channel from the five exposures with its own network
/// (R, G, B order) and multiplies by `scale` to undo normalization.
pub fn infer_ldr2hdr<T: Real>(
    nets: &mut [Network<T>],
    stack: &ExposureStack,
    patch: usize,
    log_target: bool,
    scale: f64,
) -> Result<RadianceMap> {
    if nets.len() != 3 {
        return Err(Error::Parameter(format!("need 3 channel networks, got {}", nets.len())));
    }
    if stack.images().len() != STACK_LEN {
        return Err(Error::Shape(format!("stack has {} images, need {STACK_LEN}", stack.images().len())));
    }
    let mut planes = Vec::with_capacity(3);
    for (c, net) in Channel::RGB.iter().zip(nets.iter_mut()) {
        let inputs: Vec<Plane> = stack.images().iter().map(|im| im.channel_unit(c.index())).collect();
        let p = predict_plane(net, &inputs, patch)?;
        planes.push(p.map(|v| if log_target { v.exp_m1() } else { v } * scale));
    }
    RadianceMap::from_channels(&planes[0], &planes[1], &planes[2])
}

/// Decomposes `map` into the four Lab-derived inputs, predicts each target
/// channel with its network (L base, L detail, a, b order) and recomposes.
pub fn infer_tonemap<T: Real>(nets: &mut [Network<T>], map: &RadianceMap, patch: usize) -> Result<ToneMap> {
    if nets.len() != 4 {
        return Err(Error::Parameter(format!("need 4 channel networks, got {}", nets.len())));
    }
    let parts = lab_parts(map, BilateralParams::default())?;
    let mut preds = Vec::with_capacity(4);
    for (&c, net) in Channel::LAB.iter().zip(nets.iter_mut()) {
        preds.push(predict_plane(net, &[parts.scaled(c)], patch)?);
    }
    recompose_tonemap(&preds.try_into().expect("four planes"))
}
