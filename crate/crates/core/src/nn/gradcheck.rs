//! Central-difference verification of the analytic backward pass.
//!
//! Runs in `f64` with batch statistics and no dropout. A probe whose ±h
//! perturbation flips any ReLU is re-run with a smaller step (up to
//! `max_refinements` times); probes that still straddle a kink are skipped
//! and counted, since the difference quotient is not a derivative there.

use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::nn::{mse_loss, Gradients, Network, Phase, Tensor4};

#[derive(Debug, Clone)]
pub struct GradCheckConfig {
    pub h: f64,
    pub tolerance: f64,
    /// Probes per weight tensor; bias and BN tensors are checked in full.
    pub samples_per_tensor: usize,
    pub max_refinements: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            h: 1e-3,
            tolerance: 1e-4,
            samples_per_tensor: 200,
            max_refinements: 3,
            seed: 0,
        }
    }
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerCheck {
    pub layer: String,
    pub max_rel_error: f64,
    /// Parameter with the largest error.
    pub worst: String,
    pub checked: usize,
    pub refined: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.layers.iter().all(|l| l.max_rel_error < self.tolerance)
    }

    pub fn failing_layers(&self) -> Vec<&str> {
        self.layers
            .iter()
            .filter(|l| !(l.max_rel_error < self.tolerance))
            .map(|l| l.layer.as_str())
            .collect()
    }

    pub fn max_rel_error(&self) -> f64 {
        self.layers.iter().map(|l| l.max_rel_error).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.layers {
            writeln!(
                f,
                "{:<18} max_rel_err {:.3e}  checked {:>4}  refined {:>3}  skipped {:>3}  {}  worst {}",
                l.layer,
                l.max_rel_error,
                l.checked,
                l.refined,
                l.skipped,
                if l.max_rel_error < self.tolerance { "ok" } else { "FAIL" },
                l.worst
            )?;
        }
        write!(
            f,
            "{} (tolerance {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.tolerance
        )
    }
}

fn loss_and_masks(net: &mut Network<f64>, x: &Tensor4<f64>, target: &Tensor4<f64>) -> Result<(f64, Vec<Vec<bool>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let y = net.forward(x, Phase::DETERMINISTIC_TRAIN, &mut rng)?;
    let (loss, _) = mse_loss(&y, target)?;
    Ok((loss, net.relu_masks().into_iter().map(<[bool]>::to_vec).collect()))
}

pub fn grad_check(
    net: &Network<f64>,
    x: &Tensor4<f64>,
    target: &Tensor4<f64>,
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    grad_check_with(net, x, target, cfg, |_| {})
}

/// Like [`grad_check`], but lets the caller tamper with the analytic
/// gradients before comparison.
pub fn grad_check_with(
    net: &Network<f64>,
    x: &Tensor4<f64>,
    target: &Tensor4<f64>,
    cfg: &GradCheckConfig,
    tamper: impl FnOnce(&mut Gradients<f64>),
) -> Result<GradCheckReport> {
    let mut net = net.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    net.zero_grad();
    let y = net.forward(x, Phase::DETERMINISTIC_TRAIN, &mut rng)?;
    let (_, dy) = mse_loss(&y, target)?;
    net.backward(&dy);
    let mut analytic = net.gradients();
    tamper(&mut analytic);
    let base_masks: Vec<Vec<bool>> = net.relu_masks().into_iter().map(<[bool]>::to_vec).collect();

    let names = net.layer_names();
    let mut layers: Vec<LayerCheck> = names
        .iter()
        .map(|n| LayerCheck {
            layer: n.clone(),
            max_rel_error: 0.0,
            worst: String::new(),
            checked: 0,
            refined: 0,
            skipped: 0,
        })
        .collect();

    let mut pick_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let info = net.param_info();
    for (ti, (layer, tname)) in info.iter().enumerate() {
        let len = analytic.tensors[ti].len();
        let full = !tname.ends_with(".weight") || len <= cfg.samples_per_tensor;
        let indices: Vec<usize> = if full {
            (0..len).collect()
        } else {
            sample(&mut pick_rng, len, cfg.samples_per_tensor).into_vec()
        };
        let report = &mut layers[*layer];
        for idx in indices {
            let original = net.params()[ti][idx];
            let mut h = cfg.h;
            let mut numeric = None;
            for attempt in 0..=cfg.max_refinements {
                net.params_mut()[ti][idx] = original + h;
                let (lp, mp) = loss_and_masks(&mut net, x, target)?;
                net.params_mut()[ti][idx] = original - h;
                let (lm, mm) = loss_and_masks(&mut net, x, target)?;
                net.params_mut()[ti][idx] = original;
                if mp == base_masks && mm == base_masks {
                    numeric = Some((lp - lm) / (2.0 * h));
                    if attempt > 0 {
                        report.refined += 1;
                    }
                    break;
                }
                h /= 10.0;
            }
            let Some(numeric) = numeric else {
                report.skipped += 1;
                continue;
            };
            let err = relative_error(analytic.tensors[ti][idx], numeric);
            report.checked += 1;
            if !(err <= report.max_rel_error) {
                report.max_rel_error = err;
                report.worst = format!("{tname}[{idx}]");
            }
        }
    }
    Ok(GradCheckReport {
        layers,
        tolerance: cfg.tolerance,
    })
}
