//! Runs the same training steps with 1, 2 and 4 worker replicas and shows
//! that the summed gradients agree and the replicas stay identical.
//!
//! ```text
//! cargo run --release --example data_parallel
//! ```

use hdrcnn::nn::Tensor4;
use hdrcnn::pipeline::{build_ldr2hdr_net, Channel, Dtype, TrainConfig, Trainer};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> hdrcnn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut batch = |dims| Tensor4::<f64>::from_fn(dims, |_| StandardNormal.sample(&mut rng));
    let steps: Vec<_> = (0..5).map(|_| (batch([12, 5, 16, 16]), batch([12, 1, 16, 16]))).collect();

    let mut reference: Option<Vec<f64>> = None;
    for workers in [1, 2, 4] {
        let cfg = TrainConfig {
            workers,
            dropout_p: 0.0,
            freeze_batchnorm: true,
            dtype: Dtype::F64,
            ..TrainConfig::default()
        };
        let mut t = Trainer::<f64>::new(build_ldr2hdr_net(Channel::G, 0).with_dropout(0.0), cfg)?;
        let mut losses = Vec::new();
        for (x, y) in &steps {
            let out = t.step(x, y)?;
            assert!(t.replicas_in_sync());
            losses.push(out.loss);
        }
        let drift = reference
            .get_or_insert_with(|| losses.clone())
            .iter()
            .zip(&losses)
            .map(|(a, b)| (a - b).abs() / a.abs())
            .fold(0.0, f64::max);
        println!("K={workers}: losses {losses:.6?}, max drift from K=1 {drift:.1e}, replicas in sync");
    }
    Ok(())
}
