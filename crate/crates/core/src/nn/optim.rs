use crate::nn::Real;

/// Momentum SGD on one flat parameter buffer: `v = momentum*v - lr*g; p += v`.
pub fn sgd_step<T: Real>(params: &mut [T], grads: &[T], lr: T, momentum: T, velocity: &mut [T]) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), velocity.len());
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
}
