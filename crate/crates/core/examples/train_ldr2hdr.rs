//! Trains the three per-channel exposure-stack networks on a few synthetic
//! scenes, reconstructs a held-out scene and compares against the Debevec
//! merge.
//!
//! ```text
//! cargo run --release --example train_ldr2hdr [epochs]
//! ```

use hdrcnn::camera::{fixed_stack, gamma_crf, ExposureStack};
use hdrcnn::merge::{debevec_merge, hat_weight};
use hdrcnn::nn::Network;
use hdrcnn::pipeline::{build_ldr2hdr_net, infer_ldr2hdr, ldr2hdr_samples, synth_scene, Channel, TrainConfig, Trainer};
use hdrcnn::RadianceMap;

fn mse(a: &RadianceMap, b: &RadianceMap) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| ((x - y) as f64).powi(2)).sum::<f64>() / a.data().len() as f64
}

fn main() -> hdrcnn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(15);
    let crf = gamma_crf(2.2)?;
    let pairs: Vec<(ExposureStack, RadianceMap)> = (0..12)
        .map(|s| {
            let m = synth_scene(64, 64, s);
            (fixed_stack(&m, &crf), m)
        })
        .collect();

    let cfg = TrainConfig { epochs, ..TrainConfig::default() };
    let mut nets: Vec<Network<f32>> = Vec::new();
    for c in Channel::RGB {
        let set = ldr2hdr_samples(&pairs, c, cfg.patch, false)?;
        let mut t = Trainer::<f32>::new(build_ldr2hdr_net(c, 0), cfg.clone())?;
        let curve = t.fit(&set, None)?;
        println!("{c}: loss {:.4e} -> {:.4e}", curve[0].loss, curve[curve.len() - 1].loss);
        nets.push(t.into_network());
    }

    let truth = synth_scene(96, 80, 1000);
    let stack = fixed_stack(&truth, &crf);
    let predicted = infer_ldr2hdr(&mut nets, &stack, cfg.patch, false, 1.0)?;
    let merged = debevec_merge(&stack, &crf, &hat_weight())?;
    println!("held-out mse: network {:.4e}, debevec {:.4e}", mse(&predicted, &truth), mse(&merged, &truth));
    Ok(())
}
