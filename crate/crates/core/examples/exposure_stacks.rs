//! Simulates a camera on a synthetic scene: the fixed five-shot stack and the
//! entropy-driven adaptive window over a ten-step ladder.
//!
//! ```text
//! cargo run --example exposure_stacks
//! ```

use hdrcnn::camera::{adaptive_stack, expose, fixed_stack, gamma_crf, geometric_ladder};
use hdrcnn::imgproc::entropy;
use hdrcnn::pipeline::synth_scene;

fn main() -> hdrcnn::Result<()> {
    let crf = gamma_crf(2.2)?;
    let scene = synth_scene(128, 96, 7);

    let fixed = fixed_stack(&scene, &crf);
    println!("fixed stack");
    for img in fixed.images() {
        println!("  dt {:>6}  entropy {:.3} bits", img.exposure(), entropy(img));
    }

    let ladder = geometric_ladder();
    println!("ladder entropies");
    for &dt in ladder.times() {
        println!("  dt {:>8}  {:.3} bits", dt, entropy(&expose(&scene, dt, &crf)));
    }
    let adaptive = adaptive_stack(&scene, &crf, &ladder)?;
    println!("adaptive window: ladder indices {:?}, exposures {:?}", adaptive.ladder_indices(), adaptive.exposures());
    Ok(())
}
