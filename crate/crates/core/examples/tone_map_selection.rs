//! Tone maps a scene with Reinhard, Drago and Mertens fusion, scores each with
//! TMQI and keeps the best. Writes the winner as a PPM preview.
//!
//! ```text
//! cargo run --example tone_map_selection [out.ppm]
//! ```

use hdrcnn::camera::gamma_crf;
use hdrcnn::io::write_ldr_file;
use hdrcnn::tmo::{select_best_tmo, Operator, TmqiParams};
use hdrcnn::pipeline::synth_scene;

fn main() -> hdrcnn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "best_tonemap.ppm".into());
    let scene = synth_scene(128, 128, 11);
    let ops = Operator::default_set(&gamma_crf(2.2)?);
    let sel = select_best_tmo(&scene, &ops, &TmqiParams::default())?;

    println!("{:<10} {:>8} {:>8} {:>8}", "operator", "S", "N", "Q");
    for (op, s) in ops.iter().zip(&sel.scores) {
        println!("{:<10} {:>8.4} {:>8.4} {:>8.4}", op.name(), s.s, s.n, s.q);
    }
    println!("selected {} -> {out}", sel.name);
    write_ldr_file(&out, &sel.tone_map.to_ldr())
}
