//! Stride-1 convolution (cross-correlation) with 1×1 or zero-padded 3×3 kernels,
//! lowered to GEMM through im2col.

use crate::error::{Error, Result};
use crate::nn::real::gemm;
use crate::nn::{Real, Tensor4};

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub name: String,
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    /// `out_c × in_c × k × k`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub grad_weight: Vec<T>,
    pub grad_bias: Vec<T>,
    input: Option<Tensor4<T>>,
}

/// `cols[(ci*9 + ky*3 + kx) * hw + y*w + x] = x[ci, y+ky-1, x+kx-1]`, zero outside.
fn im2col3<T: Real>(x: &[T], c: usize, h: usize, w: usize, cols: &mut [T]) {
    let hw = h * w;
    for ci in 0..c {
        let plane = &x[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ci * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    let dst = &mut row[y * w..(y + 1) * w];
                    if sy < 0 || sy >= h as isize {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[sy as usize * w..(sy as usize + 1) * w];
                    for (xx, d) in dst.iter_mut().enumerate() {
                        let sx = xx as isize + kx as isize - 1;
                        *d = if sx < 0 || sx >= w as isize { T::zero() } else { src[sx as usize] };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col3`]: scatter-adds columns back into an image.
fn col2im3<T: Real>(cols: &[T], c: usize, h: usize, w: usize, x: &mut [T]) {
    let hw = h * w;
    x.fill(T::zero());
    for ci in 0..c {
        let plane = &mut x[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ci * 9) + ky * 3 + kx) * hw..][..hw];
                for y in 0..h {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[sy as usize * w..(sy as usize + 1) * w];
                    for (xx, &v) in row[y * w..(y + 1) * w].iter().enumerate() {
                        let sx = xx as isize + kx as isize - 1;
                        if sx >= 0 && sx < w as isize {
                            dst[sx as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

impl<T: Real> Conv2d<T> {
    pub fn new(name: impl Into<String>, in_c: usize, out_c: usize, kernel: usize) -> Self {
        assert!(kernel == 1 || kernel == 3, "only 1x1 and 3x3 kernels are supported");
        let nw = out_c * in_c * kernel * kernel;
        Self {
            name: name.into(),
            in_c,
            out_c,
            kernel,
            weight: vec![T::zero(); nw],
            bias: vec![T::zero(); out_c],
            grad_weight: vec![T::zero(); nw],
            grad_bias: vec![T::zero(); out_c],
            input: None,
        }
    }

    /// Weights `in_c * k * k` per output channel; this is the He fan-in.
    pub fn fan_in(&self) -> usize {
        self.in_c * self.kernel * self.kernel
    }

    pub fn forward(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let [n, c, h, w] = x.dims();
        if c != self.in_c {
            return Err(Error::Shape(format!(
                "layer {}: expected {} input channels, got {c}",
                self.name, self.in_c
            )));
        }
        let hw = h * w;
        let kk = self.fan_in();
        let mut y = Tensor4::zeros([n, self.out_c, h, w]);
        let mut cols = if self.kernel == 3 { vec![T::zero(); kk * hw] } else { Vec::new() };
        for s in 0..n {
            let out = y.sample_mut(s);
            for (o, &b) in self.bias.iter().enumerate() {
                out[o * hw..(o + 1) * hw].fill(b);
            }
            let input = if self.kernel == 3 {
                im2col3(x.sample(s), c, h, w, &mut cols);
                &cols[..]
            } else {
                x.sample(s)
            };
            gemm(false, false, self.out_c, kk, hw, T::one(), &self.weight, input, T::one(), out);
        }
        self.input = Some(x.clone());
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad_out: &Tensor4<T>) -> Tensor4<T> {
        let x = self.input.as_ref().expect("conv backward called before forward");
        let [n, c, h, w] = x.dims();
        let hw = h * w;
        let kk = self.fan_in();
        let mut dx = Tensor4::zeros([n, c, h, w]);
        let mut cols = if self.kernel == 3 { vec![T::zero(); kk * hw] } else { Vec::new() };
        let mut dcols = if self.kernel == 3 { vec![T::zero(); kk * hw] } else { Vec::new() };
        for s in 0..n {
            let dy = grad_out.sample(s);
            for (o, gb) in self.grad_bias.iter_mut().enumerate() {
                *gb += dy[o * hw..(o + 1) * hw].iter().copied().sum::<T>();
            }
            if self.kernel == 3 {
                im2col3(x.sample(s), c, h, w, &mut cols);
                gemm(false, true, self.out_c, hw, kk, T::one(), dy, &cols, T::one(), &mut self.grad_weight);
                gemm(true, false, kk, self.out_c, hw, T::one(), &self.weight, dy, T::zero(), &mut dcols);
                col2im3(&dcols, c, h, w, dx.sample_mut(s));
            } else {
                gemm(false, true, self.out_c, hw, kk, T::one(), dy, x.sample(s), T::one(), &mut self.grad_weight);
                gemm(true, false, kk, self.out_c, hw, T::one(), &self.weight, dy, T::zero(), dx.sample_mut(s));
            }
        }
        dx
    }

    pub fn zero_grad(&mut self) {
        self.grad_weight.fill(T::zero());
        self.grad_bias.fill(T::zero());
    }

    pub(crate) fn clear_cache(&mut self) {
        self.input = None;
    }
}
