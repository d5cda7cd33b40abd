mod common;

use common::*;
use floorplan_cli::{InferResponse, LoadedModel, RetrieveResponse, ServiceState};
use floorplan_core::data::{generate_dataset, EdgeSpec, GenConfig};
use floorplan_core::geometry::RelationType;

fn plan(seed: u64, rooms: usize) -> floorplan_core::data::FloorplanSpec {
    generate_dataset(seed, 1, &GenConfig { rooms: (rooms, rooms), ..GenConfig::default() }).unwrap().remove(0)
}

#[tokio::test]
async fn health_answers_before_a_model_is_loaded() {
    let s = service(None, Vec::new());
    let h = call(&s, "GET", "/health", b"").await;
    assert_eq!(h.status, 200);
    assert_eq!(h.json()["model_loaded"], false);
    let r = call(&s, "POST", "/infer", &infer_body(&plan(1, 4), false, false)).await;
    assert_eq!(r.status, 503);
    assert_eq!(r.json()["error"]["code"], "model_not_loaded");
    assert_eq!(call(&s, "GET", "/model", b"").await.status, 503);
    assert_eq!(call(&s, "POST", "/retrieve", b"{}").await.status, 503);
}

#[tokio::test]
async fn four_room_request_gets_four_boxes() {
    let ck = fixture_checkpoint();
    let digest = ck.digest();
    let s = service(Some(ck), Vec::new());
    let p = plan(2, 4);
    let r = call(&s, "POST", "/infer", &infer_body(&p.without_ground_truth(), true, false)).await;
    assert_eq!(r.status, 200, "{}", String::from_utf8_lossy(&r.body));
    assert!(r.headers.contains_key("x-inference-ms"));
    let resp: InferResponse = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(resp.model, digest);
    assert_eq!(resp.rooms.len(), 4);
    for (room, spec) in resp.rooms.iter().zip(&p.rooms) {
        assert_eq!(room.id, spec.id);
        let b = room.bbox;
        assert!(0.0 <= b.x_min && b.x_min <= b.x_max && b.x_max <= 1.0);
        assert!(0.0 <= b.y_min && b.y_min <= b.y_max && b.y_max <= 1.0);
    }
    let raster = resp.raster.unwrap().decode().unwrap();
    assert_eq!((raster.width, raster.height), (p.canvas.w, p.canvas.h));
    assert!(resp.metrics.is_none());
}

#[tokio::test]
async fn identical_requests_get_identical_bodies() {
    let s = service(Some(fixture_checkpoint()), Vec::new());
    let body = infer_body(&plan(3, 6).without_ground_truth(), true, false);
    let first = call(&s, "POST", "/infer", &body).await;
    let again = call(&s, "POST", "/infer", &body).await;
    assert_eq!(first.body, again.body);
    let handles: Vec<_> = (0..4)
        .map(|_| {
            let (s, body) = (s.clone(), body.clone());
            tokio::spawn(async move { call(&s, "POST", "/infer", &body).await.body })
        })
        .collect();
    for h in handles {
        assert_eq!(h.await.unwrap(), first.body);
    }
}

#[tokio::test]
async fn malformed_requests_are_rejected_with_codes_and_paths() {
    let s = service(Some(fixture_checkpoint()), Vec::new());
    let mut p = plan(4, 5).without_ground_truth();

    let r = call(&s, "POST", "/infer", b"{\"plan\": ").await;
    assert_eq!(r.status, 400);
    assert_eq!(r.json()["error"]["code"], "malformed_request");

    let text = String::from_utf8(infer_body(&p, false, false)).unwrap().replacen("\"known\":true", "\"known\":\"yes\"", 1);
    let r = call(&s, "POST", "/infer", text.as_bytes()).await;
    assert_eq!(r.status, 400);
    assert_eq!(r.json()["error"]["path"], "plan.rooms[0].known");

    p.edges.push(EdgeSpec { s: 0, o: 77, rel: RelationType::LeftOf });
    let k = p.edges.len() - 1;
    let r = call(&s, "POST", "/infer", &infer_body(&p, false, false)).await;
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"]["code"], "semantic_violation");
    assert_eq!(r.json()["error"]["path"], format!("plan.edges[{k}].o"));
    p.edges.pop();

    p.rooms[1].location = None;
    let r = call(&s, "POST", "/infer", &infer_body(&p, false, false)).await;
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"]["path"], "plan.rooms[1]");

    let r = call(&s, "POST", "/infer", &infer_body(&plan(4, 5).without_ground_truth(), false, true)).await;
    assert_eq!(r.status, 422);
    assert_eq!(r.json()["error"]["code"], "missing_ground_truth");

    let r = call(&s, "GET", "/infer", b"").await;
    assert_eq!(r.status, 405);
    let r = call(&s, "GET", "/elsewhere", b"").await;
    assert_eq!(r.status, 404);
}

#[tokio::test]
async fn metrics_on_request() {
    let s = service(Some(fixture_checkpoint()), Vec::new());
    let r = call(&s, "POST", "/infer", &infer_body(&plan(5, 5), false, true)).await;
    assert_eq!(r.status, 200);
    let resp: InferResponse = serde_json::from_slice(&r.body).unwrap();
    let m = resp.metrics.unwrap();
    assert_eq!(m.plans, 1);
    assert!((0.0..=1.0).contains(&m.box_iou_micro));
}

#[tokio::test]
async fn retrieve_puts_the_source_plan_first() {
    let plans = generate_dataset(9, 10, &small_gen()).unwrap();
    let s = service(None, plans.clone());
    let body = serde_json::to_vec(&serde_json::json!({ "boundary": plans[6].boundary, "k": 3 })).unwrap();
    let r = call(&s, "POST", "/retrieve", &body).await;
    assert_eq!(r.status, 200);
    let resp: RetrieveResponse = serde_json::from_slice(&r.body).unwrap();
    assert_eq!(resp.neighbours.len(), 3);
    assert_eq!(resp.neighbours[0].index, 6);
    assert_eq!(resp.neighbours[0].distance, 0.0);
    assert!(resp.neighbours.windows(2).all(|w| w[0].distance <= w[1].distance));
    let r = call(&s, "POST", "/retrieve", br#"{"boundary":[[0.1,0.1],[0.9,0.1],[0.9,0.9],[0.1,0.9]],"k":0}"#).await;
    assert_eq!(r.status, 422);
}

#[tokio::test]
async fn model_digest_follows_the_checkpoint_file() {
    let dir = std::env::temp_dir().join(format!("floorplan-reload-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.fpck");
    let a = fixture_checkpoint();
    std::fs::write(&path, a.to_bytes()).unwrap();
    let s = ServiceState::new(Some(LoadedModel::new(a.clone())), Some(path.clone()), Vec::new());
    let digest = |r: &Reply| r.json()["digest"].as_str().unwrap().to_string();

    let d0 = digest(&call(&s, "GET", "/model", b"").await);
    assert_eq!(d0, a.digest());
    let d1 = digest(&call(&s, "POST", "/model/reload", b"").await);
    assert_eq!(d0, d1, "unchanged file keeps the digest");

    let mut b = a.clone();
    b.epoch += 1;
    std::fs::write(&path, b.to_bytes()).unwrap();
    let d2 = digest(&call(&s, "POST", "/model/reload", b"").await);
    assert_ne!(d1, d2);
    assert_eq!(digest(&call(&s, "GET", "/model", b"").await), d2);

    std::fs::write(&path, b"garbage").unwrap();
    let r = call(&s, "POST", "/model/reload", b"").await;
    assert_eq!(r.status, 500);
    assert_eq!(digest(&call(&s, "GET", "/model", b"").await), d2, "failed reload keeps the old model");
    std::fs::remove_dir_all(&dir).unwrap();
}
