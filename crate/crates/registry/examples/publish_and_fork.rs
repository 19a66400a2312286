//! Publishes the bar chart template to a fresh store, forks it, renders
//! the fork and shows the version conflict a stale writer gets.
//!
//! Requests go straight to the router, so no port is opened.

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use ivy_core::fixtures;
use ivy_registry::{router, AppState, Store};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, if_match: Option<&str>, body: String) -> (u16, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(v) = if_match {
        req = req.header("if-match", v);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).expect("request")).await.expect("infallible");
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.expect("body").to_bytes();
    (status, String::from_utf8_lossy(&bytes).into_owned())
}

#[tokio::main]
async fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let app = router(AppState::new(Store::open(dir.path()).expect("store"), 1 << 20));

    let (status, _) = send(&app, "POST", "/templates", Some("0"), fixtures::read(fixtures::BAR_TEMPLATE)).await;
    println!("publish aggregate-bar        -> {status}");

    let (status, text) = send(&app, "POST", "/templates/aggregate-bar/fork", None, r#"{"name":"my-bar","owner":"ana"}"#.into()).await;
    println!("fork as my-bar               -> {status} ({} bytes)", text.len());

    let settings = r##"{"xDim":"sex","yDim":"people","year":"1950","color":"#e45756"}"##;
    let (status, spec) = send(&app, "POST", "/apply", None, format!(r#"{{"template":"my-bar","settings":{settings}}}"#)).await;
    println!("apply my-bar                 -> {status}\n{spec}");

    let (status, body) = send(&app, "POST", "/templates", Some("0"), fixtures::read(fixtures::BAR_TEMPLATE)).await;
    println!("stale publish (If-Match: 0)  -> {status} {body}");

    let (_, listing) = send(&app, "GET", "/templates?roles=Measure,Dimension", None, String::new()).await;
    println!("search Measure,Dimension     -> {listing}");
}
