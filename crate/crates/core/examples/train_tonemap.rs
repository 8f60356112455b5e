//! Learns a tone map from radiance: TMQI picks the target operator per
//! scene, the Lab base/detail/a/b networks are trained on it, and the result is
//! written for a held-out scene.
//!
//! ```text
//! cargo run --release --example train_tonemap [out.ppm]
//! ```

use hdrcnn::camera::gamma_crf;
use hdrcnn::io::write_ldr_file;
use hdrcnn::pipeline::{
    build_tonemap_net, decompose_tonemap_channels, infer_tonemap, synth_scene, tonemap_samples, Channel,
    TrainConfig, Trainer,
};
use hdrcnn::tmo::{select_best_tmo, tmqi, Operator, TmqiParams};

fn main() -> hdrcnn::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "learned_tonemap.ppm".into());
    let params = TmqiParams::default();
    let ops = Operator::default_set(&gamma_crf(2.2)?);

    let mut decomps = Vec::new();
    for seed in 0..8 {
        let map = synth_scene(64, 64, seed);
        let sel = select_best_tmo(&map, &ops, &params)?;
        decomps.push(decompose_tonemap_channels(&map, &sel.tone_map)?);
    }

    let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let mut nets = Vec::new();
    for c in Channel::LAB {
        let set = tonemap_samples(&decomps, c, cfg.patch)?;
        let mut t = Trainer::<f32>::new(build_tonemap_net(c, 0), cfg.clone())?;
        let last = t.fit(&set, None)?.last().map(|r| r.loss).unwrap_or(f64::NAN);
        println!("{c}: final loss {last:.4e}");
        nets.push(t.into_network());
    }

    let scene = synth_scene(96, 72, 500);
    let tm = infer_tonemap(&mut nets, &scene, cfg.patch)?;
    let score = tmqi(&scene, &tm, &params)?;
    println!("held-out TMQI: S {:.3} N {:.3} Q {:.3} -> {out}", score.s, score.n, score.q);
    write_ldr_file(&out, &tm.to_ldr())
}
