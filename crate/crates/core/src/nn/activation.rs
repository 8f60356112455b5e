use rand::Rng;

use crate::nn::{Real, Tensor4};

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Vec<bool>,
}

impl Relu {
    pub fn forward<T: Real>(&mut self, x: &Tensor4<T>) -> Tensor4<T> {
        self.mask = x.data().iter().map(|&v| v > T::zero()).collect();
        relu(x)
    }

    pub fn backward<T: Real>(&self, dy: &Tensor4<T>) -> Tensor4<T> {
        let mut dx = dy.clone();
        for (d, &m) in dx.data_mut().iter_mut().zip(&self.mask) {
            if !m {
                *d = T::zero();
            }
        }
        dx
    }

    /// Which inputs of the last forward pass were positive.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

pub fn relu<T: Real>(x: &Tensor4<T>) -> Tensor4<T> {
    let mut y = x.clone();
    for v in y.data_mut() {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    }
    y
}

/// Inverted dropout: survivors are scaled by `1/(1-p)` in training; eval is identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub p: f64,
    scale: Vec<f64>,
    active: bool,
}

impl Dropout {
    pub fn new(p: f64) -> Self {
        assert!((0.0..1.0).contains(&p), "dropout p must be in [0,1)");
        Self {
            p,
            scale: Vec::new(),
            active: false,
        }
    }

    pub fn forward<T: Real, R: Rng + ?Sized>(&mut self, x: &Tensor4<T>, train: bool, rng: &mut R) -> Tensor4<T> {
        self.active = train && self.p > 0.0;
        if !self.active {
            return x.clone();
        }
        let keep = 1.0 / (1.0 - self.p);
        let cut = (self.p * 4294967296.0) as u64;
        self.scale = (0..x.len())
            .map(|_| if (rng.random::<u32>() as u64) < cut { 0.0 } else { keep })
            .collect();
        let mut y = x.clone();
        for (v, &s) in y.data_mut().iter_mut().zip(&self.scale) {
            *v = *v * T::of(s);
        }
        y
    }

    pub fn backward<T: Real>(&self, dy: &Tensor4<T>) -> Tensor4<T> {
        let mut dx = dy.clone();
        if self.active {
            for (v, &s) in dx.data_mut().iter_mut().zip(&self.scale) {
                *v = *v * T::of(s);
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_is_idempotent_and_kills_negatives() {
        let x = Tensor4::from_fn([1, 2, 3, 3], |i| i as f64 - 9.0);
        assert_eq!(relu(&relu(&x)), relu(&x));
        let neg = Tensor4::filled([1, 1, 2, 2], -1.5f64);
        let mut r = Relu::default();
        assert!(r.forward(&neg).data().iter().all(|&v| v == 0.0));
        let g = r.backward(&Tensor4::filled([1, 1, 2, 2], 1.0));
        assert!(g.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = Tensor4::from_fn([1, 1, 4, 4], |i| i as f32);
        assert_eq!(Dropout::new(0.0).forward(&x, true, &mut rng), x);
        assert_eq!(Dropout::new(0.0).forward(&x, false, &mut rng), x);
        assert_eq!(Dropout::new(0.7).forward(&x, false, &mut rng), x);
    }

    #[test]
    fn dropout_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x = Tensor4::filled([1, 1, 1000, 1000], 1.0f64);
        let y = Dropout::new(0.4).forward(&x, true, &mut rng);
        let n = y.len() as f64;
        let mean = y.data().iter().sum::<f64>() / n;
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count() as f64 / n;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((zeros - 0.4).abs() < 0.004, "zero fraction {zeros}");
    }
}
