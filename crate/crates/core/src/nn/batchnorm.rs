//! Spatial batch normalization: per-channel statistics over `(N, H, W)`.

use crate::nn::{Real, Tensor4};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct BatchNorm2d<T> {
    pub name: String,
    pub channels: usize,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub grad_gamma: Vec<T>,
    pub grad_beta: Vec<T>,
    pub eps: f64,
    pub momentum: f64,
    cache: Option<Cache<T>>,
}

#[derive(Debug, Clone)]
struct Cache<T> {
    xhat: Tensor4<T>,
    inv_std: Vec<T>,
    train: bool,
}

impl<T: Real> BatchNorm2d<T> {
    pub fn new(name: impl Into<String>, channels: usize) -> Self {
        Self {
            name: name.into(),
            channels,
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            grad_gamma: vec![T::zero(); channels],
            grad_beta: vec![T::zero(); channels],
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            cache: None,
        }
    }

    /// Train mode normalizes with batch statistics and updates the running
    /// estimates; eval mode uses the running estimates.
    pub fn forward(&mut self, x: &Tensor4<T>, train: bool) -> Tensor4<T> {
        let [n, c, h, w] = x.dims();
        assert_eq!(c, self.channels, "layer {}: channel mismatch", self.name);
        let hw = h * w;
        let m = n * hw;
        let mut xhat = Tensor4::zeros(x.dims());
        let mut y = Tensor4::zeros(x.dims());
        let mut inv_std = vec![T::zero(); c];
        for ch in 0..c {
            let (mean, var) = if train {
                let mut sum = 0.0f64;
                for s in 0..n {
                    sum += x.sample(s)[ch * hw..(ch + 1) * hw].iter().map(|v| v.f64()).sum::<f64>();
                }
                let mean = sum / m as f64;
                let mut sq = 0.0f64;
                for s in 0..n {
                    sq += x.sample(s)[ch * hw..(ch + 1) * hw]
                        .iter()
                        .map(|v| {
                            let d = v.f64() - mean;
                            d * d
                        })
                        .sum::<f64>();
                }
                let var = sq / m as f64;
                let unbiased = if m > 1 { sq / (m - 1) as f64 } else { var };
                let mom = self.momentum;
                self.running_mean[ch] = T::of((1.0 - mom) * self.running_mean[ch].f64() + mom * mean);
                self.running_var[ch] = T::of((1.0 - mom) * self.running_var[ch].f64() + mom * unbiased);
                (mean, var)
            } else {
                (self.running_mean[ch].f64(), self.running_var[ch].f64())
            };
            let istd = 1.0 / (var + self.eps).sqrt();
            inv_std[ch] = T::of(istd);
            let (mean_t, istd_t) = (T::of(mean), T::of(istd));
            let (g, b) = (self.gamma[ch], self.beta[ch]);
            for s in 0..n {
                let src = &x.sample(s)[ch * hw..(ch + 1) * hw];
                let xh = &mut xhat.sample_mut(s)[ch * hw..(ch + 1) * hw];
                for (d, &v) in xh.iter_mut().zip(src) {
                    *d = (v - mean_t) * istd_t;
                }
                let out = &mut y.sample_mut(s)[ch * hw..(ch + 1) * hw];
                for (o, &v) in out.iter_mut().zip(xh.iter()) {
                    *o = g * v + b;
                }
            }
        }
        self.cache = Some(Cache { xhat, inv_std, train });
        y
    }

    pub fn backward(&mut self, dy: &Tensor4<T>) -> Tensor4<T> {
        let cache = self.cache.as_ref().expect("batchnorm backward called before forward");
        let [n, c, h, w] = dy.dims();
        let hw = h * w;
        let m = T::of((n * hw) as f64);
        let mut dx = Tensor4::zeros(dy.dims());
        for ch in 0..c {
            let mut sum_dy = T::zero();
            let mut sum_dy_xhat = T::zero();
            for s in 0..n {
                let g = &dy.sample(s)[ch * hw..(ch + 1) * hw];
                let xh = &cache.xhat.sample(s)[ch * hw..(ch + 1) * hw];
                for (&a, &b) in g.iter().zip(xh) {
                    sum_dy += a;
                    sum_dy_xhat += a * b;
                }
            }
            self.grad_gamma[ch] += sum_dy_xhat;
            self.grad_beta[ch] += sum_dy;
            let scale = self.gamma[ch] * cache.inv_std[ch];
            for s in 0..n {
                let g = &dy.sample(s)[ch * hw..(ch + 1) * hw];
                let xh = &cache.xhat.sample(s)[ch * hw..(ch + 1) * hw];
                let d = &mut dx.sample_mut(s)[ch * hw..(ch + 1) * hw];
                if cache.train {
                    for ((o, &a), &b) in d.iter_mut().zip(g).zip(xh) {
                        *o = scale * (a - (sum_dy + b * sum_dy_xhat) / m);
                    }
                } else {
                    for (o, &a) in d.iter_mut().zip(g) {
                        *o = scale * a;
                    }
                }
            }
        }
        dx
    }

    pub fn zero_grad(&mut self) {
        self.grad_gamma.fill(T::zero());
        self.grad_beta.fill(T::zero());
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_input_normalizes_to_zero() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 2);
        let y = bn.forward(&Tensor4::filled([3, 2, 4, 4], 7.0), true);
        assert!(y.data().iter().all(|v| v.abs() < 1e-3));
    }

    #[test]
    fn train_output_is_standardized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor4::from_fn([4, 3, 16, 16], |_| rng.random::<f64>() * 5.0 - 1.0);
        let mut bn = BatchNorm2d::<f64>::new("bn", 3);
        let y = bn.forward(&x, true);
        for ch in 0..3 {
            let vals: Vec<f64> = (0..4).flat_map(|s| y.sample(s)[ch * 256..(ch + 1) * 256].to_vec()).collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-5);
            assert!((var - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn eval_uses_initial_running_stats() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 1);
        let x = Tensor4::from_fn([1, 1, 2, 2], |i| i as f64);
        let y = bn.forward(&x, false);
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b / (1.0 + BN_EPS).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn running_stats_follow_momentum() {
        let mut bn = BatchNorm2d::<f64>::new("bn", 1);
        bn.forward(&Tensor4::from_vec([1, 1, 1, 2], vec![1.0, 3.0]).unwrap(), true);
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-12);
        // unbiased variance of {1,3} is 2
        assert!((bn.running_var[0] - (0.9 + 0.2)).abs() < 1e-12);
    }
}
