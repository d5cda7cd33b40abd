use super::*;
use crate::data::{generate_dataset, Dataset, GenConfig};
use crate::fgnn::{ModelConfig, ModelParams};

fn tiny_dataset() -> Dataset {
    let gen = GenConfig { rooms: (4, 6), ..GenConfig::default() };
    Dataset::with_split(generate_dataset(3, 24, &gen).unwrap(), 6, 1).unwrap()
}

fn tiny_train() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 6,
        lr: 3e-3,
        model: ModelConfig { hidden: 16, iterations: 2, ..ModelConfig::default() },
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let ds = tiny_dataset();
    let cfg = tiny_train();
    let mut epochs = 0;
    let a = train(&ds, &cfg, |_| epochs += 1).unwrap();
    assert_eq!(epochs, 3);
    let b = train(&ds, &cfg, |_| {}).unwrap();
    assert_eq!(a.best.digest(), b.best.digest());
    let losses = &a.best.loss_history;
    assert!(losses.last().unwrap() < losses.first().unwrap(), "{losses:?}");
    assert!(a.history.iter().all(|h| h.val.is_some()));
    let best = a.history[a.best_epoch].val.as_ref().unwrap().box_iou_micro;
    assert!(a.history.iter().all(|h| h.val.as_ref().unwrap().box_iou_micro <= best));
}

#[test]
fn training_with_random_drops_runs() {
    let ds = tiny_dataset();
    let cfg = TrainConfig { epochs: 1, drop_max: 2, ..tiny_train() };
    let out = train(&ds, &cfg, |_| {}).unwrap();
    assert!(out.best.loss_history[0].is_finite());
}

#[test]
fn empty_and_invalid_configs_are_rejected() {
    let ds = Dataset::with_split(Vec::new(), 0, 0).unwrap();
    assert!(matches!(train(&ds, &tiny_train(), |_| {}), Err(PipelineError::EmptyDataset)));
    let bad = TrainConfig { lr: 0.0, ..tiny_train() };
    assert!(matches!(train(&tiny_dataset(), &bad, |_| {}), Err(PipelineError::Config(_))));
}

#[test]
fn ground_truth_scores_perfectly() {
    let ds = tiny_dataset();
    let plans = ds.val();
    let gt: Vec<_> = plans.iter().map(|p| p.gt_boxes().unwrap()).collect();
    let m = score_predictions(&plans, &plans, &gt, 5).unwrap();
    assert!((m.box_iou_micro - 1.0).abs() < 1e-12);
    assert!((m.pixel_accuracy - 1.0).abs() < 1e-12);
    assert!((m.relation_acc - 1.0).abs() < 1e-12);
    assert!((m.location_acc - 1.0).abs() < 1e-12);
}

#[test]
fn evaluation_with_drops_uses_common_subset() {
    let ds = tiny_dataset();
    let plans = ds.val();
    let model = ModelParams::<f32>::init(tiny_train().model, 0).unwrap();
    let m = evaluate(&model, &plans, &EvalOptions { drop: 3, ..EvalOptions::default() }).unwrap();
    assert_eq!(m.plans, droppable_subset(&plans, 3).len());
    let (full, given) = degrade(&plans, 3, 0).unwrap();
    for (f, g) in full.iter().zip(&given) {
        assert_eq!(f.rooms.len(), g.rooms.len());
        assert_eq!(g.rooms.iter().filter(|r| r.bbox.is_none()).count(), 3);
    }
}
