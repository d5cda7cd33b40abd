use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate, Checkpoint, EvalOptions, MetricsReport, PipelineError};
use crate::data::{drop_constraints, Dataset, FloorplanSpec};
use crate::factorgraph::{build_factor_graph, FactorGraph};
use crate::fgnn::{batch_loss, target_coords, GraphBatch, ModelConfig, ModelParams};
use crate::neural::{step_lr, AdamConfig, AdamState, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Epochs between learning-rate drops.
    pub lr_step: usize,
    pub lr_gamma: f64,
    pub seed: u64,
    pub model: ModelConfig,
    /// Each training plan loses the attributes of up to this many rooms per epoch.
    pub drop_max: usize,
    /// Validate every this many epochs; 0 disables validation.
    pub validate_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 21,
            batch_size: 60,
            lr: 1e-3,
            weight_decay: 1e-4,
            lr_step: 7,
            lr_gamma: 0.1,
            seed: 0,
            model: ModelConfig::default(),
            drop_max: 0,
            validate_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch size must be positive");
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || !(self.lr_gamma > 0.0) {
            return bad("learning rate and gamma must be positive, weight decay non-negative");
        }
        self.model.validate().map_err(PipelineError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val: Option<MetricsReport>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation box IOU-micro.
    pub best: Checkpoint,
    pub best_epoch: usize,
    pub history: Vec<EpochLog>,
}

/// Trains a fresh model on the dataset's training split.
pub fn train(ds: &Dataset, cfg: &TrainConfig, mut on_epoch: impl FnMut(&EpochLog)) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    let train_plans = ds.train();
    let val_plans = ds.val();
    if train_plans.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let targets: Vec<Vec<f64>> = train_plans
        .iter()
        .map(|p| p.gt_boxes().map(|b| target_coords(&b)).ok_or_else(|| PipelineError::Config("training plans need ground-truth boxes".into())))
        .collect::<Result<_, _>>()?;
    let cache: Vec<FactorGraph> = if cfg.drop_max == 0 {
        train_plans.iter().map(|p| build_factor_graph(p, &cfg.model.graph)).collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let mut model = ModelParams::<f32>::init(cfg.model, cfg.seed)?;
    let mut adam = AdamState::new(&model.set, AdamConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..AdamConfig::default() });
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x005e_ed0f_7a41);
    let mut order: Vec<usize> = (0..train_plans.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, ModelParams<f32>)> = None;
    let mut losses = Vec::new();

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let lr = step_lr(cfg.lr, epoch, cfg.lr_step, cfg.lr_gamma);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut loss_weight) = (0.0, 0usize);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let built: Vec<FactorGraph>;
            let graphs: Vec<&FactorGraph> = if cfg.drop_max == 0 {
                chunk.iter().map(|&i| &cache[i]).collect()
            } else {
                built = chunk
                    .iter()
                    .map(|&i| {
                        let spec = random_drop(train_plans[i], cfg.drop_max, &mut rng)?;
                        Ok(build_factor_graph(&spec, &cfg.model.graph)?)
                    })
                    .collect::<Result<_, PipelineError>>()?;
                built.iter().collect()
            };
            let target: Vec<f64> = chunk.iter().flat_map(|&i| targets[i].iter().copied()).collect();
            let batch = GraphBatch::<f32>::new(&graphs)?;
            let mut tape = Tape::new(&model.set);
            let loss = batch_loss(&mut tape, &model, &batch, &target)?;
            let value = tape.value(loss).get(0, 0) as f64;
            if !value.is_finite() {
                return Err(PipelineError::NonFinite { epoch, batch: b });
            }
            let grads = tape.backward(loss)?;
            drop(tape);
            if !grads.all_finite() {
                return Err(PipelineError::NonFinite { epoch, batch: b });
            }
            adam.update(&mut model.set, &grads, lr)?;
            loss_sum += value * target.len() as f64;
            loss_weight += target.len();
        }
        let train_loss = loss_sum / loss_weight as f64;
        losses.push(train_loss);

        let validate = cfg.validate_every > 0 && !val_plans.is_empty() && ((epoch + 1) % cfg.validate_every == 0 || epoch + 1 == cfg.epochs);
        let val = if validate { Some(evaluate(&model, &val_plans, &EvalOptions::default())?) } else { None };
        let score = val.as_ref().map(|v| v.box_iou_micro);
        let log = EpochLog { epoch, lr, train_loss, val, seconds: start.elapsed().as_secs_f64() };
        on_epoch(&log);
        history.push(log);

        let better = match (&best, score) {
            (None, _) => true,
            (Some((b, _, _)), Some(s)) => s > *b,
            (Some(_), None) => val_plans.is_empty() || cfg.validate_every == 0,
        };
        if better {
            best = Some((score.unwrap_or(f64::NEG_INFINITY), epoch, model.clone()));
        }
    }

    let (_, best_epoch, params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        best: Checkpoint { model: params, train: Some(*cfg), epoch: best_epoch, loss_history: losses },
        best_epoch,
        history,
    })
}

/// Withholds a uniformly drawn number of rooms, capped by what the plan allows.
pub(crate) fn random_drop(spec: &FloorplanSpec, drop_max: usize, rng: &mut ChaCha8Rng) -> Result<FloorplanSpec, PipelineError> {
    let droppable = spec.rooms.iter().filter(|r| !r.room_type.is_protected()).count();
    let k = rng.gen_range(0..=drop_max.min(droppable));
    let seed = rng.gen();
    if k == 0 {
        return Ok(spec.clone());
    }
    Ok(drop_constraints(spec, k, seed)?.spec)
}
