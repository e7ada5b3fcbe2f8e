use reqwest::StatusCode;
use serde_json::{json, Value};
use tokio::net::TcpListener;

async fn spawn() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(unisym_server::serve(listener, std::future::pending()));
    format!("http://{addr}")
}

#[tokio::test]
async fn health_reports_ok() {
    let base = spawn().await;
    let v: Value = reqwest::get(format!("{base}/health")).await.unwrap().json().await.unwrap();
    assert_eq!(v["status"], "ok");
    assert!(v["version"].is_string());
}

#[tokio::test]
async fn encode_returns_a_label() {
    let base = spawn().await;
    let http = reqwest::Client::new();
    let r = http.post(format!("{base}/encode")).json(&json!({"expr": "sin(x0) + x1"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let v: Value = r.json().await.unwrap();
    assert_eq!(v["d0"], 2);
    assert!(v["depth"].as_u64().unwrap() >= 1);
    assert_eq!(v["label"].as_array().unwrap()[0], v["depth"]);
}

#[tokio::test]
async fn fit_recovers_a_linear_law() {
    let base = spawn().await;
    let x: Vec<f64> = (0..30).map(|i| -1.0 + i as f64 / 15.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 0.5).collect();
    let data = json!({"dim": 1, "x": x, "y": y, "intervals": [{"lo": -1.0, "hi": 1.0}]});
    let r = reqwest::Client::new()
        .post(format!("{base}/fit"))
        .json(&json!({"data": data, "config": {"time_budget_s": 20.0}}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let v: Value = r.json().await.unwrap();
    assert!(v["outcome"]["train_r2"].as_f64().unwrap() > 1.0 - 1e-9, "{v}");
}

#[tokio::test]
async fn malformed_bodies_get_json_errors() {
    let base = spawn().await;
    let http = reqwest::Client::new();
    let r = http
        .post(format!("{base}/encode"))
        .header("content-type", "application/json")
        .body("{not json")
        .send()
        .await
        .unwrap();
    assert!(r.status().is_client_error());
    let v: Value = r.json().await.unwrap();
    assert!(v["error"].is_string());

    let r = http.post(format!("{base}/encode")).json(&json!({"expr": "sin("})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);

    let r = http.post(format!("{base}/bench")).json(&json!({"suite": "nope"})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);

    let r =
        http.post(format!("{base}/complexity-compare")).json(&json!({"dims": [], "count": 5})).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn theory_check_passes() {
    let base = spawn().await;
    let v: Value = reqwest::get(format!("{base}/theory-check")).await.unwrap().json().await.unwrap();
    assert_eq!(v["pass"], true, "{}", v["failures"]);
    assert_eq!(v["report"]["cells"].as_array().unwrap().len(), 45);
}

#[tokio::test]
async fn unknown_route_is_404() {
    let base = spawn().await;
    assert_eq!(reqwest::get(format!("{base}/nope")).await.unwrap().status(), StatusCode::NOT_FOUND);
}
