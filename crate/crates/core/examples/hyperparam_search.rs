//! Two-epoch learning-rate and dropout sweep for the ldr2hdr green-channel
//! network, ranked by validation error.
//!
//! ```text
//! cargo run --release --example hyperparam_search
//! ```

use hdrcnn::camera::{fixed_stack, gamma_crf};
use hdrcnn::pipeline::{build_ldr2hdr_net, hyperparam_search, ldr2hdr_samples, synth_scene, Channel, TrainConfig};

fn main() -> hdrcnn::Result<()> {
    let crf = gamma_crf(2.2)?;
    let set = |seeds: std::ops::Range<u64>| {
        let pairs: Vec<_> = seeds
            .map(|s| {
                let m = synth_scene(64, 64, s);
                (fixed_stack(&m, &crf), m)
            })
            .collect();
        ldr2hdr_samples(&pairs, Channel::G, 64, false)
    };
    let (train, val) = (set(0..8)?, set(100..104)?);

    let mut configs = Vec::new();
    for lr in [0.0, 1e-3, 1e-2, 5e-2] {
        for dropout_p in [0.0, 0.4] {
            let cfg = TrainConfig { lr, dropout_p, ..TrainConfig::default() };
            configs.push((build_ldr2hdr_net(Channel::G, 0), cfg));
        }
    }
    let ranked = hyperparam_search::<f32>(&configs, &train, &val)?;
    println!("{:>4} {:>8} {:>8} {:>12}", "rank", "lr", "dropout", "val mse");
    for (rank, r) in ranked.iter().enumerate() {
        let cfg = &configs[r.config_id].1;
        println!("{:>4} {:>8} {:>8} {:>12.5e}", rank + 1, cfg.lr, cfg.dropout_p, r.val_error);
    }
    Ok(())
}
