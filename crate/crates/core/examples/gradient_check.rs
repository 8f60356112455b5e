//! Finite-difference check of the backward pass on the ldr2hdr and tone-map
//! networks.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use hdrcnn::nn::{grad_check, GradCheckConfig, Network, Tensor4};
use hdrcnn::pipeline::{build_ldr2hdr_net, build_tonemap_net, Channel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> hdrcnn::Result<()> {
    for (name, spec) in [
        ("ldr2hdr", build_ldr2hdr_net(Channel::G, 1)),
        ("tonemap", build_tonemap_net(Channel::LBase, 1)),
    ] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor4::from_fn([1, spec.input_depth(), 8, 8], |_| StandardNormal.sample(&mut rng));
        let y = Tensor4::from_fn([1, 1, 8, 8], |_| StandardNormal.sample(&mut rng));
        let net = Network::<f64>::new(spec)?;
        let cfg = GradCheckConfig::default();
        println!("{name}, h = {:e}\n{}\n", cfg.h, grad_check(&net, &x, &y, &cfg)?);
    }
    Ok(())
}
