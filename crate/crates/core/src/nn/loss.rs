use crate::error::{Error, Result};
use crate::nn::{Real, Tensor4};

/// Mean squared error over all elements and its gradient.
pub fn mse_loss<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<(T, Tensor4<T>)> {
    mse_loss_over(pred, target, pred.len())
}

/// Squared error summed over `pred` and divided by `count`, so that shard
/// losses over a split batch add up to the whole-batch mean.
pub fn mse_loss_over<T: Real>(pred: &Tensor4<T>, target: &Tensor4<T>, count: usize) -> Result<(T, Tensor4<T>)> {
    if pred.dims() != target.dims() {
        return Err(Error::Shape(format!(
            "prediction {:?} vs target {:?}",
            pred.dims(),
            target.dims()
        )));
    }
    let inv = T::one() / T::of(count.max(1) as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let mut grad = Tensor4::zeros(pred.dims());
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p - t;
        loss += d * d;
        *g = two * d * inv;
    }
    Ok((loss * inv, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_unit_error() {
        let a = Tensor4::from_fn([2, 1, 3, 3], |i| i as f64);
        let (l, g) = mse_loss(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.data().iter().all(|&v| v == 0.0));
        let b = Tensor4::from_fn([2, 1, 3, 3], |i| i as f64 + 1.0);
        assert_eq!(mse_loss(&b, &a).unwrap().0, 1.0);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let p = Tensor4::from_fn([1, 2, 2, 3], |i| (i as f64 * 0.7).sin());
        let t = Tensor4::from_fn([1, 2, 2, 3], |i| (i as f64 * 0.3).cos());
        let (_, g) = mse_loss(&p, &t).unwrap();
        let h = 1e-3;
        for i in 0..p.len() {
            let mut hi = p.clone();
            hi.data_mut()[i] += h;
            let mut lo = p.clone();
            lo.data_mut()[i] -= h;
            let num = (mse_loss(&hi, &t).unwrap().0 - mse_loss(&lo, &t).unwrap().0) / (2.0 * h);
            let a = g.data()[i];
            assert!((a - num).abs() / a.abs().max(num.abs()).max(1e-8) < 1e-4);
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor4::<f32>::zeros([1, 1, 2, 2]);
        let b = Tensor4::<f32>::zeros([1, 1, 2, 3]);
        assert_eq!(mse_loss(&a, &b).unwrap_err().category(), "shape");
    }
}
