//! Drive the HTTP API in-process: upload the sample, ask for advice, instruct,
//! accept and export, without binding a socket.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request};
use axum::Router;
use duet_service::api::{router, AppState};
use duet_service::config::{BackendFactory, Settings};
use duet_service::session::{SessionStore, DEFAULT_TTL};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const BOUNDARY: &str = "example-boundary";

async fn call(app: &Router, req: Request<Body>) -> (u16, String) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let body = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8_lossy(&body).into_owned())
}

async fn post(app: &Router, uri: &str, body: Value) -> Value {
    let req = Request::builder()
        .method(Method::POST)
        .uri(uri)
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, text) = call(app, req).await;
    println!("POST {uri} -> {status}");
    serde_json::from_str(&text).unwrap()
}

#[tokio::main]
async fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/sample");
    let csv = std::fs::read_to_string(format!("{dir}/loans.csv")).unwrap();
    let meta = std::fs::read_to_string(format!("{dir}/meta.json")).unwrap();

    let state = AppState::new(
        SessionStore::new(DEFAULT_TTL),
        BackendFactory::heuristic(),
        Settings::default(),
        Default::default(),
    );
    let app = router(Arc::new(state), None);

    let mut form = String::new();
    for (name, content) in [("data", &csv), ("meta", &meta)] {
        form.push_str(&format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n{content}\r\n"
        ));
    }
    form.push_str(&format!("--{BOUNDARY}--\r\n"));
    let req = Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .header(
            header::CONTENT_TYPE,
            format!("multipart/form-data; boundary={BOUNDARY}"),
        )
        .body(Body::from(form))
        .unwrap();
    let (status, text) = call(&app, req).await;
    let created: Value = serde_json::from_str(&text).unwrap();
    let id = created["session_id"].as_str().unwrap().to_string();
    println!("POST /sessions -> {status} ({id})");

    let advice = post(&app, &format!("/sessions/{id}/diagnose"), json!({})).await;
    println!("{:#}", advice["advice"]);

    let text = "Feature f3 is interesting. Please generate new variants of f3.";
    let proposal = post(
        &app,
        &format!("/sessions/{id}/instruct"),
        json!({ "text": text }),
    )
    .await;
    println!("proposed {}", proposal["proposal"]["exprs"]);

    let accepted = post(
        &app,
        &format!("/sessions/{id}/accept"),
        json!({ "indices": [0, 1] }),
    )
    .await;
    println!("accepted {}", accepted["accepted"]);

    let req = Request::builder()
        .uri(format!("/sessions/{id}/export"))
        .body(Body::empty())
        .unwrap();
    let (status, csv) = call(&app, req).await;
    println!(
        "GET export -> {status}\n{}",
        csv.lines().take(3).collect::<Vec<_>>().join("\n")
    );
}
