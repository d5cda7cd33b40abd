//! Fixtures shared by the service, golden and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use floorplan_cli::{router, LoadedModel, ServiceState};
use floorplan_core::data::{drop_constraints, generate_dataset, Dataset, FloorplanSpec, GenConfig};
use floorplan_core::fgnn::ModelConfig;
use floorplan_core::pipeline::{digest_bytes, train, Checkpoint, TrainConfig};
use serde::{Deserialize, Serialize};
use tower::ServiceExt;

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn updating_golden() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some()
}

pub fn small_gen() -> GenConfig {
    GenConfig { rooms: (4, 6), ..GenConfig::default() }
}

pub fn small_dataset(seed: u64, count: usize) -> Dataset {
    Dataset::with_split(generate_dataset(seed, count, &small_gen()).unwrap(), count / 4, seed).unwrap()
}

pub fn tiny_train_config() -> TrainConfig {
    TrainConfig {
        epochs: 2,
        batch_size: 8,
        model: ModelConfig { hidden: 16, iterations: 2, ..ModelConfig::default() },
        ..TrainConfig::default()
    }
}

/// Small deterministic checkpoint used by the service tests.
pub fn fixture_checkpoint() -> Checkpoint {
    train(&small_dataset(100, 32), &tiny_train_config(), |_| {}).unwrap().best
}

pub fn service(model: Option<Checkpoint>, retrieval: Vec<FloorplanSpec>) -> Arc<ServiceState> {
    ServiceState::new(model.map(LoadedModel::new), None, retrieval)
}

pub struct Reply {
    pub status: u16,
    pub body: Vec<u8>,
    pub headers: axum::http::HeaderMap,
}

impl Reply {
    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap()
    }
}

pub async fn call(state: &Arc<ServiceState>, method: &str, path: &str, body: &[u8]) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(path)
        .header("content-type", "application/json")
        .body(Body::from(body.to_vec()))
        .unwrap();
    let resp = router(state.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
    assert!(status != StatusCode::OK || headers["content-type"] == "application/json");
    Reply { status: status.as_u16(), body, headers }
}

pub fn infer_body(plan: &FloorplanSpec, raster: bool, metrics: bool) -> Vec<u8> {
    serde_json::to_vec(&serde_json::json!({ "plan": plan, "raster": raster, "metrics": metrics })).unwrap()
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Exchange {
    pub method: String,
    pub path: String,
    pub request: String,
    pub status: u16,
    pub response: String,
}

/// The recorded request mix: plain, partial, raster and metrics requests plus
/// a handful of malformed ones.
pub fn replay_requests() -> Vec<(String, String, String)> {
    let plans = generate_dataset(200, 40, &GenConfig { rooms: (4, 8), ..GenConfig::default() }).unwrap();
    let mut out = Vec::new();
    for (i, p) in plans.iter().enumerate() {
        let body = match i % 4 {
            0 => infer_body(&p.without_ground_truth(), false, false),
            1 => infer_body(&drop_constraints(p, 1, i as u64).unwrap().spec.without_ground_truth(), false, false),
            2 => infer_body(&p.without_ground_truth(), i % 8 == 2, false),
            _ => infer_body(p, false, true),
        };
        out.push(("POST".to_string(), "/infer".to_string(), String::from_utf8(body).unwrap()));
    }
    let mut dangling = plans[0].without_ground_truth();
    dangling.edges[0].o = 99;
    let mut bad_size = plans[1].without_ground_truth();
    bad_size.rooms[0].size = Some(2.0);
    let malformed = [
        String::from_utf8(infer_body(&dangling, false, false)).unwrap(),
        String::from_utf8(infer_body(&bad_size, false, false)).unwrap(),
        "{".to_string(),
        r#"{"plan": 3}"#.to_string(),
        String::from_utf8(infer_body(&plans[2].without_ground_truth(), false, true)).unwrap(),
        String::from_utf8(infer_body(&plans[3], false, false)).unwrap().replace("\"LivingRoom\"", "\"Ballroom\""),
        String::from_utf8(infer_body(&plans[4], false, false)).unwrap().replacen("{\"plan\":", "{\"extra\":1,\"plan\":", 1),
    ];
    for m in malformed {
        out.push(("POST".into(), "/infer".into(), m));
    }
    out.push(("GET".into(), "/model".into(), String::new()));
    out.push(("GET".into(), "/nope".into(), String::new()));
    out.push(("POST".into(), "/retrieve".into(), r#"{"boundary":[[0.1,0.1],[0.9,0.1],[0.9,0.9],[0.1,0.9]],"k":2}"#.into()));
    out
}

pub fn replay_retrieval_set() -> Vec<FloorplanSpec> {
    generate_dataset(300, 12, &small_gen()).unwrap()
}

pub async fn record_replay(state: &Arc<ServiceState>) -> Vec<Exchange> {
    let mut out = Vec::new();
    for (method, path, request) in replay_requests() {
        let r = call(state, &method, &path, request.as_bytes()).await;
        out.push(Exchange { method, path, request, status: r.status, response: String::from_utf8(r.body).unwrap() });
    }
    out
}

/// Replays the recorded exchanges; returns the indices that differ.
pub async fn replay_mismatches(state: &Arc<ServiceState>, recorded: &[Exchange]) -> Vec<usize> {
    let mut bad = Vec::new();
    for (i, ex) in recorded.iter().enumerate() {
        let r = call(state, &ex.method, &ex.path, ex.request.as_bytes()).await;
        if r.status != ex.status || r.body != ex.response.as_bytes() {
            bad.push(i);
        }
    }
    bad
}

pub fn replay_state() -> Arc<ServiceState> {
    let bytes = std::fs::read(golden_dir().join("replay_model.fpck")).expect("replay checkpoint fixture");
    ServiceState::new(Some(LoadedModel::from_bytes(&bytes).unwrap()), None, replay_retrieval_set())
}

pub fn load_replay() -> Vec<Exchange> {
    serde_json::from_slice(&std::fs::read(golden_dir().join("replay.json")).expect("replay fixture")).unwrap()
}

pub const DETERMINISM_SEEDS: [u64; 3] = [1, 2, 3];

fn floorplan(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_floorplan")).args(args).output().unwrap();
    assert!(out.status.success(), "floorplan {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Runs gen-data, train and infer for one seed and returns the sha256 of each artefact.
pub fn pipeline_digests(seed: u64, dir: &Path) -> BTreeMap<String, String> {
    std::fs::create_dir_all(dir).unwrap();
    let (data, config, ck, plan) = (dir.join("data.json"), dir.join("train.json"), dir.join("model.fpck"), dir.join("plan.json"));
    let seed_s = seed.to_string();
    floorplan(&["gen-data", "--seed", &seed_s, "--count", "24", "--val", "6", "--min-rooms", "4", "--max-rooms", "6", "--out", path(&data)]);
    let cfg = serde_json::json!({ "epochs": 2, "batch_size": 6, "seed": seed, "model": { "hidden": 16, "iterations": 2 } });
    std::fs::write(&config, cfg.to_string()).unwrap();
    floorplan(&["train", "--data", path(&data), "--config", path(&config), "--out", path(&ck)]);

    let ds: serde_json::Value = serde_json::from_slice(&std::fs::read(&data).unwrap()).unwrap();
    std::fs::write(&plan, ds["plans"][0].to_string()).unwrap();
    let inferred = floorplan(&["infer", "--plan", path(&plan), "--checkpoint", path(&ck), "--metrics"]);

    let mut out = BTreeMap::new();
    out.insert("gen-data".to_string(), digest_bytes(&std::fs::read(&data).unwrap()));
    out.insert("train".to_string(), digest_bytes(&std::fs::read(&ck).unwrap()));
    out.insert("infer".to_string(), digest_bytes(&inferred));
    out
}
