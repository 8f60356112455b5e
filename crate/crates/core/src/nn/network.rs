//! Declarative layer lists and the sequential network built from them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::activation::{Dropout, Relu};
use crate::nn::batchnorm::BatchNorm2d;
use crate::nn::conv::Conv2d;
use crate::nn::optim::sgd_step;
use crate::nn::{Real, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv3x3,
    Conv1x1,
    /// Linear 1×1 projection to one channel: no normalization, activation or dropout.
    Output1x1,
}

impl LayerKind {
    pub fn kernel(self) -> usize {
        match self {
            LayerKind::Conv3x3 => 3,
            LayerKind::Conv1x1 | LayerKind::Output1x1 => 1,
        }
    }

    fn label(self) -> &'static str {
        match self {
            LayerKind::Conv3x3 => "conv3x3",
            LayerKind::Conv1x1 => "conv1x1",
            LayerKind::Output1x1 => "output1x1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub in_depth: usize,
    pub out_depth: usize,
    pub batchnorm: bool,
    pub dropout_p: f64,
}

impl LayerSpec {
    /// Convolution followed by BN, ReLU and dropout.
    pub fn hidden(kind: LayerKind, in_depth: usize, out_depth: usize, dropout_p: f64) -> Self {
        Self {
            kind,
            in_depth,
            out_depth,
            batchnorm: true,
            dropout_p,
        }
    }

    pub fn output(in_depth: usize) -> Self {
        Self {
            kind: LayerKind::Output1x1,
            in_depth,
            out_depth: 1,
            batchnorm: false,
            dropout_p: 0.0,
        }
    }

    /// Trainable scalars: conv weights and biases plus BN scale and shift.
    pub fn param_count(&self) -> usize {
        let k = self.kind.kernel();
        let conv = self.out_depth * self.in_depth * k * k + self.out_depth;
        conv + if self.batchnorm { 2 * self.out_depth } else { 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let last = self
            .layers
            .last()
            .ok_or_else(|| Error::Validation("network has no layers".into()))?;
        for (i, l) in self.layers.iter().enumerate() {
            if l.in_depth == 0 || l.out_depth == 0 {
                return Err(Error::Validation(format!("layer {i}: depths must be >= 1")));
            }
            if !(0.0..1.0).contains(&l.dropout_p) {
                return Err(Error::Validation(format!("layer {i}: dropout p must be in [0,1)")));
            }
            if i + 1 < self.layers.len() {
                if l.kind == LayerKind::Output1x1 {
                    return Err(Error::Validation(format!("layer {i}: output layer must be last")));
                }
                if l.out_depth != self.layers[i + 1].in_depth {
                    return Err(Error::Validation(format!(
                        "layer {i} emits {} channels but layer {} expects {}",
                        l.out_depth,
                        i + 1,
                        self.layers[i + 1].in_depth
                    )));
                }
            }
        }
        if last.kind != LayerKind::Output1x1 || last.out_depth != 1 || last.batchnorm || last.dropout_p != 0.0 {
            return Err(Error::Validation(
                "final layer must be a plain 1x1 output layer of depth 1".into(),
            ));
        }
        Ok(())
    }

    pub fn input_depth(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_depth)
    }

    pub fn depths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.out_depth).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(LayerSpec::param_count).sum()
    }

    /// Same architecture with every hidden layer's dropout set to `p`.
    pub fn with_dropout(mut self, p: f64) -> Self {
        for l in &mut self.layers {
            if l.kind != LayerKind::Output1x1 {
                l.dropout_p = p;
            }
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Which stochastic/batch-dependent behaviours are active in a forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Phase {
    pub batchnorm_train: bool,
    pub dropout: bool,
}

impl Phase {
    pub const TRAIN: Phase = Phase {
        batchnorm_train: true,
        dropout: true,
    };
    pub const EVAL: Phase = Phase {
        batchnorm_train: false,
        dropout: false,
    };
    /// Batch statistics without dropout noise.
    pub const DETERMINISTIC_TRAIN: Phase = Phase {
        batchnorm_train: true,
        dropout: false,
    };
}

/// Summary of one layer's output from the most recent forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStats {
    pub layer: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub non_finite: usize,
}

impl std::fmt::Display for ActivationStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: min {:.4e} max {:.4e} mean {:.4e} non-finite {}",
            self.layer, self.min, self.max, self.mean, self.non_finite
        )
    }
}

fn stats_of<T: Real>(layer: &str, t: &Tensor4<T>) -> ActivationStats {
    let mut s = ActivationStats {
        layer: layer.to_string(),
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
        mean: 0.0,
        non_finite: 0,
    };
    let mut sum = 0.0;
    for v in t.data() {
        let v = v.f64();
        if !v.is_finite() {
            s.non_finite += 1;
            continue;
        }
        s.min = s.min.min(v);
        s.max = s.max.max(v);
        sum += v;
    }
    s.mean = sum / t.len().max(1) as f64;
    s
}

#[derive(Debug, Clone)]
struct Block<T> {
    name: String,
    conv: Conv2d<T>,
    bn: Option<BatchNorm2d<T>>,
    relu: Option<Relu>,
    dropout: Option<Dropout>,
}

/// One gradient buffer per parameter tensor, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros_like(shapes: &[usize]) -> Self {
        Self {
            tensors: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }

    pub fn flat(&self) -> impl Iterator<Item = T> + '_ {
        self.tensors.iter().flatten().copied()
    }
}

/// Sequential CNN: for each layer spec, conv → [BN] → ReLU → [dropout]; the
/// output layer is conv only.
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetworkSpec,
    blocks: Vec<Block<T>>,
    stats: Vec<ActivationStats>,
}

impl<T: Real> Network<T> {
    /// Builds the network with He-normal weights drawn from `spec.seed`,
    /// zero biases, BN scale 1 and shift 0.
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let blocks = spec
            .layers
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let name = format!("layer{i}:{}", l.kind.label());
                let mut conv = Conv2d::new(name.clone(), l.in_depth, l.out_depth, l.kind.kernel());
                let std = (2.0 / conv.fan_in() as f64).sqrt();
                let normal = Normal::new(0.0, std).expect("positive std");
                for w in &mut conv.weight {
                    *w = T::of(normal.sample(&mut rng));
                }
                let hidden = l.kind != LayerKind::Output1x1;
                Block {
                    bn: l.batchnorm.then(|| BatchNorm2d::new(format!("{name}.bn"), l.out_depth)),
                    relu: hidden.then(Relu::default),
                    dropout: (hidden && l.dropout_p > 0.0).then(|| Dropout::new(l.dropout_p)),
                    conv,
                    name,
                }
            })
            .collect();
        Ok(Self {
            spec,
            blocks,
            stats: Vec::new(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.blocks.iter().map(|b| b.name.clone()).collect()
    }

    pub fn forward<R: Rng + ?Sized>(&mut self, x: &Tensor4<T>, phase: Phase, rng: &mut R) -> Result<Tensor4<T>> {
        self.stats.clear();
        let mut h = x.clone();
        for b in &mut self.blocks {
            h = b.conv.forward(&h)?;
            if let Some(bn) = &mut b.bn {
                h = bn.forward(&h, phase.batchnorm_train);
            }
            if let Some(r) = &mut b.relu {
                h = r.forward(&h);
            }
            if let Some(d) = &mut b.dropout {
                h = d.forward(&h, phase.dropout, rng);
            }
            self.stats.push(stats_of(&b.name, &h));
        }
        Ok(h)
    }

    /// Deterministic inference: running BN statistics, no dropout.
    pub fn predict(&mut self, x: &Tensor4<T>) -> Result<Tensor4<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = self.forward(x, Phase::EVAL, &mut rng);
        self.clear_caches();
        y
    }

    /// Back-propagates `grad` (w.r.t. the output) and accumulates parameter gradients.
    pub fn backward(&mut self, grad: &Tensor4<T>) -> Tensor4<T> {
        let mut g = grad.clone();
        for b in self.blocks.iter_mut().rev() {
            if let Some(d) = &b.dropout {
                g = d.backward(&g);
            }
            if let Some(r) = &b.relu {
                g = r.backward(&g);
            }
            if let Some(bn) = &mut b.bn {
                g = bn.backward(&g);
            }
            g = b.conv.backward(&g);
        }
        g
    }

    pub fn zero_grad(&mut self) {
        for b in &mut self.blocks {
            b.conv.zero_grad();
            if let Some(bn) = &mut b.bn {
                bn.zero_grad();
            }
        }
    }

    pub fn clear_caches(&mut self) {
        for b in &mut self.blocks {
            b.conv.clear_cache();
            if let Some(bn) = &mut b.bn {
                bn.clear_cache();
            }
        }
    }

    pub fn activation_stats(&self) -> &[ActivationStats] {
        &self.stats
    }

    /// ReLU masks of the last forward pass, one per hidden layer.
    pub fn relu_masks(&self) -> Vec<&[bool]> {
        self.blocks.iter().filter_map(|b| b.relu.as_ref().map(Relu::mask)).collect()
    }

    /// `(owning layer index, tensor name)` for every parameter tensor.
    pub fn param_info(&self) -> Vec<(usize, String)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((i, format!("{}.weight", b.name)));
            out.push((i, format!("{}.bias", b.name)));
            if b.bn.is_some() {
                out.push((i, format!("{}.bn.gamma", b.name)));
                out.push((i, format!("{}.bn.beta", b.name)));
            }
        }
        out
    }

    pub fn params(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for b in &self.blocks {
            out.push(&b.conv.weight);
            out.push(&b.conv.bias);
            if let Some(bn) = &b.bn {
                out.push(&bn.gamma);
                out.push(&bn.beta);
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv.weight);
            out.push(&mut b.conv.bias);
            if let Some(bn) = &mut b.bn {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn gradients(&self) -> Gradients<T> {
        let mut tensors = Vec::new();
        for b in &self.blocks {
            tensors.push(b.conv.grad_weight.clone());
            tensors.push(b.conv.grad_bias.clone());
            if let Some(bn) = &b.bn {
                tensors.push(bn.grad_gamma.clone());
                tensors.push(bn.grad_beta.clone());
            }
        }
        Gradients { tensors }
    }

    pub fn zero_gradients(&self) -> Gradients<T> {
        Gradients::zeros_like(&self.params().iter().map(|p| p.len()).collect::<Vec<_>>())
    }

    pub fn apply_sgd(&mut self, grads: &Gradients<T>, lr: T, momentum: T, velocity: &mut Gradients<T>) {
        for ((p, g), v) in self.params_mut().into_iter().zip(&grads.tensors).zip(&mut velocity.tensors) {
            sgd_step(p, g, lr, momentum, v);
        }
    }

    /// Every tensor needed to restore the network (parameters plus BN running
    /// statistics), in declaration order, with its shape.
    pub fn state_tensors(&self) -> Vec<(Vec<usize>, &[T])> {
        let mut out: Vec<(Vec<usize>, &[T])> = Vec::new();
        for b in &self.blocks {
            let c = &b.conv;
            out.push((vec![c.out_c, c.in_c, c.kernel, c.kernel], &c.weight));
            out.push((vec![c.out_c], &c.bias));
            if let Some(bn) = &b.bn {
                for t in [&bn.gamma, &bn.beta, &bn.running_mean, &bn.running_var] {
                    out.push((vec![bn.channels], t));
                }
            }
        }
        out
    }

    fn state_tensors_mut(&mut self) -> Vec<&mut Vec<T>> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            out.push(&mut b.conv.weight);
            out.push(&mut b.conv.bias);
            if let Some(bn) = &mut b.bn {
                out.push(&mut bn.gamma);
                out.push(&mut bn.beta);
                out.push(&mut bn.running_mean);
                out.push(&mut bn.running_var);
            }
        }
        out
    }

    /// Overwrites the state with tensors in [`Network::state_tensors`] order.
    pub fn load_state(&mut self, tensors: &[Vec<T>]) -> Result<()> {
        let mut slots = self.state_tensors_mut();
        if slots.len() != tensors.len() {
            return Err(Error::Shape(format!(
                "expected {} state tensors, got {}",
                slots.len(),
                tensors.len()
            )));
        }
        for (i, (slot, t)) in slots.iter_mut().zip(tensors).enumerate() {
            if slot.len() != t.len() {
                return Err(Error::Shape(format!("state tensor {i}: expected {} values, got {}", slot.len(), t.len())));
            }
            slot.copy_from_slice(t);
        }
        Ok(())
    }

    /// Copies parameters and running statistics from `other`.
    pub fn copy_state_from(&mut self, other: &Network<T>) {
        let src: Vec<Vec<T>> = other.state_tensors().into_iter().map(|(_, t)| t.to_vec()).collect();
        self.load_state(&src).expect("replicas share one architecture");
    }

    /// Bitwise comparison of parameters and running statistics.
    pub fn state_eq(&self, other: &Network<T>) -> bool {
        let a = self.state_tensors();
        let b = other.state_tensors();
        a.len() == b.len()
            && a.iter().zip(&b).all(|((_, x), (_, y))| {
                x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p.to_bits_eq(q))
            })
    }

    /// Converts the network (state only) to another element type.
    pub fn cast<U: Real>(&self) -> Network<U> {
        let mut out = Network::<U>::new(self.spec.clone()).expect("spec already validated");
        let tensors: Vec<Vec<U>> = self
            .state_tensors()
            .into_iter()
            .map(|(_, t)| t.iter().map(|v| U::of(v.f64())).collect())
            .collect();
        out.load_state(&tensors).expect("same architecture");
        out
    }
}

trait BitsEq {
    fn to_bits_eq(&self, other: &Self) -> bool;
}

impl<T: Real> BitsEq for T {
    fn to_bits_eq(&self, other: &Self) -> bool {
        self.f64().to_bits() == other.f64().to_bits()
    }
}
