use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use aev_range::api::{router, AppState};
use aev_range::inputs::Resolver;
use aev_range::reports::{mc_report, McRequest};

fn app() -> axum::Router {
    router(AppState::new(Resolver::default(), 2))
}

async fn call(app: &axum::Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap())
}

#[tokio::test]
async fn listings_carry_manifests() {
    let app = app();
    let (s, v) = call(&app, "GET", "/v1/vehicles", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(v["vehicles"].as_array().unwrap().iter().any(|e| e["id"] == "model3"));
    assert_eq!(v["manifest"]["tool"], "aev-range");
    let (_, c) = call(&app, "GET", "/v1/cycles", None).await;
    assert_eq!(c["cycles"][1]["samples"], 1370);
    let (_, sc) = call(&app, "GET", "/v1/scenario", None).await;
    assert_eq!(sc["with_lidar"]["sensor_bounds"], json!([30.0, 150.0]));
    assert_eq!(sc["without_lidar"]["lidar_scenario"], "without_lidar");
    assert_eq!(sc["max_samples"], 20000);
    let (_, p) = call(&app, "GET", "/v1/presets", None).await;
    assert!(p["presets"][0]["sensor_power"].as_f64().unwrap() > 0.0);
    assert!(p["manifest"].is_object());
}

#[tokio::test]
async fn range_null_and_table1() {
    let app = app();
    let null_config = json!({"sensor_power": 0.0, "compute_power": 0.0, "drag_multiplier": 1.0, "added_mass": 0.0,
                      "smoothing_savings": 0.0, "lidar": "none"});
    let (s, v) = call(&app, "POST", "/v1/range", Some(json!({"vehicle": "model3", "config": null_config}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["result"]["range_delta"], 0.0);
    assert_eq!(v["economics"]["hours"], 0.0);

    let row = json!({"sensor_power": 30.0, "compute_power": 500.0, "drag_multiplier": 1.25, "added_mass": 22.5,
                     "smoothing_savings": 0.10, "lidar": "spinning_roof"});
    let (s, v) = call(&app, "POST", "/v1/range", Some(json!({"vehicle": "model3", "cycle": "composite", "config": row}))).await;
    assert_eq!(s, StatusCode::OK);
    let delta = v["result"]["range_delta"].as_f64().unwrap();
    assert!((delta + 0.05).abs() <= 0.015, "{delta}");
    assert!(v["manifest"]["inputs"]["vehicle"]["sha256"].is_string());
}

#[tokio::test]
async fn error_mapping() {
    let app = app();
    let (s, v) = call(&app, "POST", "/v1/range", Some(json!({"vehicle": "zoe"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_vehicle");
    assert!(v["manifest"].is_object());

    let req = Request::post("/v1/range").body(Body::from("{not json")).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);

    let (s, v) = call(&app, "POST", "/v1/range", Some(json!({"cycle": "udds"}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "malformed_body");

    let bad = json!({"sensor_power": 900.0, "compute_power": 0.0, "drag_multiplier": 1.0, "added_mass": 0.0,
                     "smoothing_savings": 0.0, "lidar": "none"});
    let (s, v) = call(&app, "POST", "/v1/range", Some(json!({"vehicle": "model3", "config": bad}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "invalid_input");

    let (s, _) = call(&app, "POST", "/v1/range", Some(json!({"vehicle": "model3", "cycle": "/etc/passwd"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, v) = call(&app, "GET", "/v1/jobs/job-999", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_job");
}

#[tokio::test]
async fn montecarlo_cap_and_cli_parity() {
    let app = app();
    let (s, v) = call(&app, "POST", "/v1/montecarlo",
        Some(json!({"vehicle": "model3", "scenario": "with_lidar", "n_samples": 20001, "seed": 1}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["code"], "n_over_cap");

    let (s, _) = call(&app, "POST", "/v1/montecarlo",
        Some(json!({"vehicle": "model3", "scenario": "with_lidar", "n_samples": 0, "seed": 1}))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);

    let body = json!({"vehicle": "model3", "cycle": "udds", "scenario": "without_lidar", "n_samples": 500, "seed": 9});
    let (s, v) = call(&app, "POST", "/v1/montecarlo", Some(body.clone())).await;
    assert_eq!(s, StatusCode::OK);
    let req: McRequest = serde_json::from_value(body).unwrap();
    let direct = mc_report(&Resolver::default(), &req, Some(1)).unwrap();
    assert_eq!(serde_json::to_value(&direct.summary).unwrap(), v["summary"]);
    assert_eq!(v["manifest"]["seed"], 9);
}

#[tokio::test]
async fn degrade_job_lifecycle() {
    let app = app();
    let body = json!({"vehicle": "model3", "cycle": "udds", "daily_miles": 40.0, "options": {"threshold": 0.98, "day_cap": 10000}});
    let (s, v) = call(&app, "POST", "/v1/degrade", Some(body)).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = v["job_id"].as_str().unwrap().to_string();
    assert!(v["manifest"].is_object());
    let mut last = Value::Null;
    for _ in 0..600 {
        let (s, j) = call(&app, "GET", &format!("/v1/jobs/{id}"), None).await;
        assert_eq!(s, StatusCode::OK);
        if j["status"] == "done" || j["status"] == "failed" {
            last = j;
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    assert_eq!(last["status"], "done", "{last}");
    let result = &last["result"];
    assert!(result["days"].as_u64().unwrap() > 0);
    assert!(result["fade_curve"].as_array().unwrap().len() > 1);

    let (s, v) = call(&app, "POST", "/v1/degrade", Some(json!({"vehicle": "nope"}))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "unknown_vehicle");
}

#[tokio::test]
async fn degrade_job_failure_is_reported() {
    let app = app();
    let (s, v) = call(&app, "POST", "/v1/degrade", Some(json!({"vehicle": "model3", "daily_miles": 0.0}))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let id = v["job_id"].as_str().unwrap().to_string();
    let mut status = Value::Null;
    for _ in 0..200 {
        let (_, j) = call(&app, "GET", &format!("/v1/jobs/{id}"), None).await;
        if j["status"] == "failed" {
            status = j;
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert_eq!(status["error"]["code"], "invalid_input");
}
