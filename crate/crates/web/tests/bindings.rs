use floorplan_core::data::load_spec;
use floorplan_core::fgnn::{ModelConfig, ModelParams};
use floorplan_core::pipeline::Checkpoint;
use floorplan_web::{generate, rgba, summarize, Model};

#[test]
fn generated_plan_round_trips_and_is_deterministic() {
    let a = generate(4, 5, 8).unwrap();
    assert_eq!(a, generate(4, 5, 8).unwrap());
    let spec = load_spec(a.as_bytes()).unwrap();
    assert!((5..=8).contains(&spec.rooms.len()));
    assert!(generate(4, 3, 8).is_err());
}

#[test]
fn summary_counts_match_the_graph() {
    let plan = generate(11, 5, 5).unwrap();
    let s = summarize(&plan).unwrap();
    assert_eq!(s.rooms, 5);
    assert_eq!(s.variables, 20);
    assert_eq!(s.box_factors, 5);
    assert_eq!(s.complete_factors, 1);
    assert_eq!(s.factors, s.box_factors + s.relation_factors + s.boundary_factors + s.complete_factors);
    assert!(summarize("{").is_err());
}

#[test]
fn ground_truth_render_is_rgba_canvas() {
    let plan = generate(2, 5, 8).unwrap();
    let spec = load_spec(plan.as_bytes()).unwrap();
    let px = rgba(&spec, &spec.gt_boxes().unwrap());
    assert_eq!(px.len(), (spec.canvas.w * spec.canvas.h * 4) as usize);
    assert!(px.chunks(4).all(|p| p[3] == 255));
}

#[test]
fn prediction_with_withheld_rooms() {
    let spec = load_spec(generate(3, 6, 8).unwrap().as_bytes()).unwrap();
    let m = Model::untrained(1);
    let p = m.predict(&spec, 2, 9).unwrap();
    assert_eq!(p.boxes.len(), spec.rooms.len());
    assert_eq!(p.withheld.len(), 2);
    let iou = p.box_iou_micro.unwrap();
    assert!((0.0..=1.0).contains(&iou));
    assert!(m.predict(&spec, 20, 9).is_err());
}

#[test]
fn checkpoint_loads() {
    let cfg = ModelConfig { hidden: 8, iterations: 1, ..ModelConfig::default() };
    let ck = Checkpoint::fresh(ModelParams::init(cfg, 3).unwrap());
    let m = Model::from_checkpoint(&ck.to_bytes()).unwrap();
    let spec = load_spec(generate(5, 5, 6).unwrap().as_bytes()).unwrap();
    assert_eq!(m.predict(&spec, 0, 0).unwrap().boxes.len(), spec.rooms.len());
    assert!(Model::from_checkpoint(b"nope").is_err());
}
