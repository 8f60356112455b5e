//! Merges a simulated exposure stack back into radiance with the hat-weighted
//! Debevec average and compares it to the ground truth.
//!
//! ```text
//! cargo run --example debevec_merge
//! ```

use hdrcnn::camera::{fixed_stack, gamma_crf};
use hdrcnn::merge::{debevec_merge, hat_weight};
use hdrcnn::pipeline::synth_scene;

fn main() -> hdrcnn::Result<()> {
    for gamma in [1.0, 2.2] {
        let crf = gamma_crf(gamma)?;
        let scene = synth_scene(128, 128, 3);
        let stack = fixed_stack(&scene, &crf);
        let merged = debevec_merge(&stack, &crf, &hat_weight())?;
        let clipped = stack.images()[0].data().iter().filter(|&&z| z == 255).count();

        let mut rel: Vec<f64> = scene
            .data()
            .iter()
            .zip(merged.data())
            .map(|(t, m)| ((m - t).abs() / t) as f64)
            .collect();
        rel.sort_by(f64::total_cmp);
        let mse = scene.data().iter().zip(merged.data()).map(|(t, m)| ((t - m) as f64).powi(2)).sum::<f64>()
            / rel.len() as f64;
        println!(
            "gamma {gamma}: median relative error {:.4}, p99 {:.4}, mse {mse:.3e}; {:.2}% of samples clip even at the shortest exposure",
            rel[rel.len() / 2],
            rel[rel.len() * 99 / 100],
            100.0 * clipped as f64 / rel.len() as f64
        );
    }
    Ok(())
}
