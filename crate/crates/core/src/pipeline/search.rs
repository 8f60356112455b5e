use super::{SampleSet, Trainer};
use crate::error::Result;
use crate::nn::{NetworkSpec, Real};
use crate::pipeline::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    /// Position of the configuration in the input list.
    pub config_id: usize,
    pub val_error: f64,
    /// Mean training loss of each of the two epochs.
    pub train_curve: Vec<f64>,
}

/// Trains every configuration for exactly two epochs and ranks them by
/// eval-mode validation MSE, best first. Equal errors keep input order.
pub fn hyperparam_search<T: Real>(
    configs: &[(NetworkSpec, TrainConfig)],
    train: &SampleSet,
    val: &SampleSet,
) -> Result<Vec<SearchResult>> {
    let mut out = Vec::with_capacity(configs.len());
    for (id, (spec, cfg)) in configs.iter().enumerate() {
        let cfg = TrainConfig { epochs: 2, ..cfg.clone() };
        let mut t = Trainer::<T>::new(spec.clone(), cfg)?;
        let train_curve = t.fit(train, None)?.iter().map(|r| r.loss).collect();
        let val_error = t.evaluate(val)?;
        log::info!("config {id}: val {val_error:.6}");
        out.push(SearchResult {
            config_id: id,
            val_error,
            train_curve,
        });
    }
    out.sort_by(|a, b| a.val_error.total_cmp(&b.val_error));
    Ok(out)
}
