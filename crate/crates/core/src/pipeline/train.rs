use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{extract_patches, Channel, TonemapDecomposition};
use crate::camera::{ExposureStack, STACK_LEN};
use crate::error::{Error, Result};
use crate::image::{Plane, RadianceMap};
use crate::nn::{mse_loss_over, Gradients, Network, NetworkSpec, Phase, Real, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F32,
    F64,
}

impl std::str::FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            _ => Err(Error::Parameter(format!("dtype must be f32 or f64, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub patch: usize,
    pub dropout_p: f64,
    pub seed: u64,
    pub workers: usize,
    pub dtype: Dtype,
    /// Use running BN statistics during training instead of batch statistics.
    pub freeze_batchnorm: bool,
    /// Regress `log1p` of normalized radiance instead of radiance.
    pub log_target: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            momentum: 0.9,
            epochs: 30,
            batch_size: 40,
            patch: 64,
            dropout_p: 0.4,
            seed: 0,
            workers: 1,
            dtype: Dtype::F32,
            freeze_batchnorm: false,
            log_target: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        if self.batch_size < 1 {
            return bad("batch_size must be >= 1".into());
        }
        if self.patch < 8 {
            return bad(format!("patch must be >= 8, got {}", self.patch));
        }
        if self.workers < 1 {
            return bad("workers must be >= 1".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must be in [0,1), got {}", self.momentum));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad(format!("dropout_p must be in [0,1), got {}", self.dropout_p));
        }
        Ok(())
    }
}

/// One training example: `channels`×p×p input and a 1×p×p target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub channels: usize,
    pub patch: usize,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(channels: usize, patch: usize) -> Self {
        Self {
            channels,
            patch,
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, s: Sample) -> Result<()> {
        let area = self.patch * self.patch;
        if s.input.len() != self.channels * area || s.target.len() != area {
            return Err(Error::Shape(format!(
                "sample needs {}x{p}x{p} input and 1x{p}x{p} target",
                self.channels,
                p = self.patch
            )));
        }
        if !s.input.iter().chain(&s.target).all(|v| v.is_finite()) {
            return Err(Error::Validation("sample contains non-finite values".into()));
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn extend(&mut self, other: SampleSet) -> Result<()> {
        other.samples.into_iter().try_for_each(|s| self.push(s))
    }

    /// Stacks the chosen samples into input and target tensors.
    pub fn batch<T: Real>(&self, idx: &[usize]) -> (Tensor4<T>, Tensor4<T>) {
        let p = self.patch;
        let mut x = Vec::with_capacity(idx.len() * self.channels * p * p);
        let mut y = Vec::with_capacity(idx.len() * p * p);
        for &i in idx {
            x.extend(self.samples[i].input.iter().map(|&v| T::of(v)));
            y.extend(self.samples[i].target.iter().map(|&v| T::of(v)));
        }
        (
            Tensor4::from_vec([idx.len(), self.channels, p, p], x).expect("sizes checked on push"),
            Tensor4::from_vec([idx.len(), 1, p, p], y).expect("sizes checked on push"),
        )
    }

    fn add_planes(&mut self, inputs: &[Plane], target: &Plane) -> Result<()> {
        let mut planes: Vec<&Plane> = inputs.iter().collect();
        planes.push(target);
        let (_, patches) = extract_patches(&planes, self.patch)?;
        let split = self.channels * self.patch * self.patch;
        for mut p in patches {
            let target = p.split_off(split);
            self.push(Sample { input: p, target })?;
        }
        Ok(())
    }
}

/// Five `[0,1]`-scaled exposures of one colour channel against the matching
/// channel of the normalized radiance map.
pub fn ldr2hdr_samples(pairs: &[(ExposureStack, RadianceMap)], channel: Channel, patch: usize, log_target: bool) -> Result<SampleSet> {
    let c = channel.index();
    let mut set = SampleSet::new(STACK_LEN, patch);
    for (stack, map) in pairs {
        if stack.images().len() != STACK_LEN {
            return Err(Error::Shape(format!("stack has {} images, need {STACK_LEN}", stack.images().len())));
        }
        if stack.width() != map.width() || stack.height() != map.height() {
            return Err(Error::Shape("stack and radiance map differ in size".into()));
        }
        let inputs: Vec<Plane> = stack.images().iter().map(|im| im.channel_unit(c)).collect();
        let mut target = map.channel(c);
        if log_target {
            target = target.map(f64::ln_1p);
        }
        set.add_planes(&inputs, &target)?;
    }
    Ok(set)
}

pub fn tonemap_samples(decomps: &[TonemapDecomposition], channel: Channel, patch: usize) -> Result<SampleSet> {
    let mut set = SampleSet::new(1, patch);
    for d in decomps {
        set.add_planes(&[d.input.scaled(channel)], &d.target.scaled(channel))?;
    }
    Ok(set)
}

/// Result of one data-parallel step.
#[derive(Debug, Clone)]
pub struct StepOutcome<T> {
    /// Whole-batch mean loss before the update.
    pub loss: f64,
    /// Gradient of that loss, summed over shards in worker order.
    pub gradients: Gradients<T>,
    /// Workers that received a non-empty shard.
    pub shards: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub epoch: usize,
    pub loss: f64,
    pub val: Option<f64>,
}

const SHUFFLE_STREAM: u64 = 1 << 62;
const DROPOUT_STREAM: u64 = 2 << 62;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Owns `workers` identical replicas of one network. Worker 0 is the master
/// copy that receives the summed gradient and the SGD update.
pub struct Trainer<T: Real> {
    cfg: TrainConfig,
    workers: Vec<Network<T>>,
    velocity: Gradients<T>,
    steps: u64,
    curve: Vec<CurveRow>,
}

impl<T: Real> Trainer<T> {
    /// Builds the network from `spec` with the configured dropout rate.
    pub fn new(spec: NetworkSpec, cfg: TrainConfig) -> Result<Self> {
        let net = Network::new(spec.with_dropout(cfg.dropout_p))?;
        Self::from_network(net, cfg)
    }

    pub fn from_network(net: Network<T>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            velocity: net.zero_gradients(),
            workers: vec![net; cfg.workers],
            cfg,
            steps: 0,
            curve: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn network(&self) -> &Network<T> {
        &self.workers[0]
    }

    pub fn network_mut(&mut self) -> &mut Network<T> {
        &mut self.workers[0]
    }

    pub fn into_network(mut self) -> Network<T> {
        self.workers.swap_remove(0)
    }

    pub fn workers(&self) -> &[Network<T>] {
        &self.workers
    }

    /// True when every replica is bitwise identical to worker 0.
    pub fn replicas_in_sync(&self) -> bool {
        self.workers.iter().all(|w| w.state_eq(&self.workers[0]))
    }

    pub fn curve(&self) -> &[CurveRow] {
        &self.curve
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn phase(&self) -> Phase {
        Phase {
            batchnorm_train: !self.cfg.freeze_batchnorm,
            dropout: true,
        }
    }

    /// One synchronous data-parallel SGD step. The batch is cut into shards of
    /// `ceil(B/K)` in index order; shard `w` runs on worker `w` with its own
    /// dropout stream. Gradients are summed in worker order on worker 0, which
    /// applies the update and then broadcasts its state to the other workers.
    pub fn step(&mut self, input: &Tensor4<T>, target: &Tensor4<T>) -> Result<StepOutcome<T>> {
        let b = input.batch();
        if b == 0 || target.batch() != b {
            return Err(Error::Shape(format!("batch of {b} inputs with {} targets", target.batch())));
        }
        let shard = b.div_ceil(self.workers.len());
        let ranges: Vec<Range<usize>> = (0..b).step_by(shard).map(|s| s..(s + shard).min(b)).collect();
        let count = target.len();
        let phase = self.phase();
        let (seed, step) = (self.cfg.seed, self.steps);

        let run = |w: usize, net: &mut Network<T>, r: Range<usize>| -> Result<(T, Gradients<T>)> {
            let x = input.slice_batch(r.clone());
            let y = target.slice_batch(r);
            let mut rng = stream_rng(seed, DROPOUT_STREAM | (step << 16) | w as u64);
            net.zero_grad();
            let pred = net.forward(&x, phase, &mut rng)?;
            let (loss, g) = mse_loss_over(&pred, &y, count)?;
            net.backward(&g);
            net.clear_caches();
            Ok((loss, net.gradients()))
        };

        let results: Vec<Result<(T, Gradients<T>)>> = if ranges.len() == 1 {
            vec![run(0, &mut self.workers[0], ranges[0].clone())]
        } else {
            let run = &run;
            std::thread::scope(|s| {
                let handles: Vec<_> = self
                    .workers
                    .iter_mut()
                    .zip(ranges.iter().cloned())
                    .enumerate()
                    .map(|(w, (net, r))| s.spawn(move || run(w, net, r)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
            })
        };

        let mut loss = T::zero();
        let mut grads: Option<Gradients<T>> = None;
        for r in results {
            let (l, g) = r?;
            loss += l;
            match &mut grads {
                None => grads = Some(g),
                Some(acc) => acc.add_assign(&g),
            }
        }
        let grads = grads.expect("at least one shard");
        if !loss.is_finite() || !grads.is_finite() {
            return Err(self.divergence(loss.f64()));
        }

        let (lr, momentum) = (T::of(self.cfg.lr), T::of(self.cfg.momentum));
        let (master, rest) = self.workers.split_first_mut().expect("at least one worker");
        master.apply_sgd(&grads, lr, momentum, &mut self.velocity);
        for r in rest {
            r.copy_state_from(master);
        }
        self.steps += 1;
        Ok(StepOutcome {
            loss: loss.f64(),
            gradients: grads,
            shards: ranges.len(),
        })
    }

    fn divergence(&self, loss: f64) -> Error {
        let mut msg = format!("step {} loss {loss}", self.steps);
        for (w, net) in self.workers.iter().enumerate() {
            for s in net.activation_stats() {
                let _ = write!(msg, "; worker{w} {s}");
            }
        }
        Error::NonFinite(msg)
    }

    /// Shuffles with the epoch's RNG stream, runs every mini-batch and returns
    /// the sample-weighted mean loss.
    pub fn train_epoch(&mut self, set: &SampleSet) -> Result<f64> {
        if set.is_empty() {
            return Err(Error::Validation("training set is empty".into()));
        }
        let epoch = self.curve.len() + 1;
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut stream_rng(self.cfg.seed, SHUFFLE_STREAM | epoch as u64));
        let mut total = 0.0;
        for chunk in order.chunks(self.cfg.batch_size) {
            let (x, y) = set.batch::<T>(chunk);
            total += self.step(&x, &y)?.loss * chunk.len() as f64;
        }
        let loss = total / set.len() as f64;
        self.curve.push(CurveRow { epoch, loss, val: None });
        Ok(loss)
    }

    /// Runs `cfg.epochs` epochs, scoring `val` in eval mode after each one.
    pub fn fit(&mut self, train: &SampleSet, val: Option<&SampleSet>) -> Result<&[CurveRow]> {
        for _ in 0..self.cfg.epochs {
            let loss = self.train_epoch(train)?;
            let v = match val {
                Some(v) if !v.is_empty() => Some(self.evaluate(v)?),
                _ => None,
            };
            let row = self.curve.last_mut().expect("epoch just recorded");
            row.val = v;
            log::info!("epoch {} loss {loss:.6}{}", row.epoch, v.map(|v| format!(" val {v:.6}")).unwrap_or_default());
        }
        Ok(&self.curve)
    }

    /// Eval-mode mean squared error over every target value of `set`.
    pub fn evaluate(&mut self, set: &SampleSet) -> Result<f64> {
        let order: Vec<usize> = (0..set.len()).collect();
        let (mut sum, mut n) = (0.0, 0usize);
        for chunk in order.chunks(self.cfg.batch_size) {
            let (x, y) = set.batch::<T>(chunk);
            let pred = self.workers[0].predict(&x)?;
            sum += pred.data().iter().zip(y.data()).map(|(p, t)| (p.f64() - t.f64()).powi(2)).sum::<f64>();
            n += y.len();
        }
        Ok(if n == 0 { 0.0 } else { sum / n as f64 })
    }
}

/// `epoch,mean_loss` rows, with a `val_loss` column when any epoch has one.
pub fn loss_curve_csv(rows: &[CurveRow]) -> String {
    let with_val = rows.iter().any(|r| r.val.is_some());
    let mut out = String::from(if with_val { "epoch,mean_loss,val_loss\n" } else { "epoch,mean_loss\n" });
    for r in rows {
        let _ = write!(out, "{},{:.9e}", r.epoch, r.loss);
        if with_val {
            let _ = write!(out, ",{}", r.val.map(|v| format!("{v:.9e}")).unwrap_or_default());
        }
        out.push('\n');
    }
    out
}
