use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use http_body_util::BodyExt;
use resonant_service::{router, AppState, ServiceConfig};
use resonant_sr::codec::{compress, to_lab_bytes};
use resonant_sr::pipeline::{parse, preset_names, preset_text};
use resonant_sr::RasterImage;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app() -> Router {
    router(AppState::new(ServiceConfig::default()))
}

fn observation() -> RasterImage {
    RasterImage::from_fn(8, 8, 1, |_, x, y| (x * 29 + y * 17) as u8).unwrap()
}

fn scene() -> RasterImage {
    RasterImage::from_fn(32, 32, 1, |_, x, y| {
        let d = (x as i32 - 14).pow(2) + (y as i32 - 17).pow(2);
        if d < 90 {
            220
        } else {
            ((x * 5 + y * 3) % 97) as u8
        }
    })
    .unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>, header::HeaderMap) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body, headers)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn with_body(method: Method, uri: &str, content_type: &str, body: impl Into<Body>) -> Request<Body> {
    Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(body.into())
        .unwrap()
}

fn json_body(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|_| panic!("not JSON: {}", String::from_utf8_lossy(bytes)))
}

async fn png_session(app: &Router) -> String {
    let png = observation().encode_png().unwrap();
    let (status, body, _) = send(app, with_body(Method::POST, "/sessions?step=4", "image/png", png)).await;
    assert_eq!(status, StatusCode::CREATED);
    json_body(&body)["id"].as_str().unwrap().to_string()
}

async fn reference_session(app: &Router) -> String {
    let truth = scene();
    let lab = to_lab_bytes(&compress(&truth, 4).unwrap()).unwrap();
    let upload = json!({
        "lab": BASE64.encode(lab),
        "reference": BASE64.encode(truth.encode_png().unwrap()),
    });
    let (status, body, _) =
        send(app, with_body(Method::POST, "/sessions", "application/json", upload.to_string())).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&body));
    json_body(&body)["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn png_upload_previews_as_block_constant_expansion() {
    let app = app();
    let id = png_session(&app).await;
    let (status, body, headers) = send(&app, get(&format!("/sessions/{id}/preview"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(headers[header::CONTENT_TYPE], "image/png");
    let img = RasterImage::decode_png(&body).unwrap();
    assert_eq!((img.width(), img.height()), (32, 32));
    let obs = observation();
    for y in 0..32 {
        for x in 0..32 {
            assert_eq!(img.get(0, x, y), obs.get(0, x / 4, y / 4));
        }
    }
}

#[tokio::test]
async fn lab_upload_reports_original_geometry() {
    let app = app();
    let lab = to_lab_bytes(&compress(&scene(), 4).unwrap()).unwrap();
    let (status, body, _) = send(&app, with_body(Method::POST, "/sessions", "application/octet-stream", lab)).await;
    assert_eq!(status, StatusCode::CREATED);
    let v = json_body(&body);
    assert_eq!((v["width"].as_u64(), v["height"].as_u64(), v["step"].as_u64()), (Some(32), Some(32), Some(4)));
}

#[tokio::test]
async fn upload_errors_name_their_field() {
    let app = app();
    let png = observation().encode_png().unwrap();
    let (status, body, _) = send(&app, with_body(Method::POST, "/sessions", "image/png", png.clone())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "step");

    let (status, body, _) = send(&app, with_body(Method::POST, "/sessions?step=5", "image/png", png)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "step");

    let (status, _, _) = send(&app, with_body(Method::POST, "/sessions", "application/octet-stream", &b"NOPE"[..])).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let wrong = json!({
        "image": BASE64.encode(observation().encode_png().unwrap()),
        "step": 4,
        "reference": BASE64.encode(observation().encode_png().unwrap()),
    });
    let (status, body, _) = send(&app, with_body(Method::POST, "/sessions", "application/json", wrong.to_string())).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "reference");
}

#[tokio::test]
async fn oversized_uploads_are_refused() {
    let config = ServiceConfig {
        max_upload: 64,
        ..ServiceConfig::default()
    };
    let app = router(AppState::new(config));
    let png = observation().encode_png().unwrap();
    assert!(png.len() > 64);
    let (status, _, _) = send(&app, with_body(Method::POST, "/sessions?step=4", "image/png", png)).await;
    assert_eq!(status, StatusCode::PAYLOAD_TOO_LARGE);
}

#[tokio::test]
async fn unknown_ids_are_404() {
    let app = app();
    for uri in [
        "/sessions/nope/preview",
        "/sessions/nope/sweep",
        "/sessions/nope/pipeline",
        "/runs/nope",
        "/presets/nope",
    ] {
        let (status, body, _) = send(&app, get(uri)).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert!(json_body(&body)["error"].as_str().unwrap().contains("nope"));
    }
    let put = with_body(Method::PUT, "/sessions/nope/pipeline", "text/plain", "magnify gamma=2");
    assert_eq!(send(&app, put).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let config = ServiceConfig {
        ttl: Duration::from_millis(50),
        ..ServiceConfig::default()
    };
    let app = router(AppState::new(config));
    let id = png_session(&app).await;
    assert_eq!(send(&app, get(&format!("/sessions/{id}/pipeline"))).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(120)).await;
    assert_eq!(send(&app, get(&format!("/sessions/{id}/pipeline"))).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn preset_pipeline_text_round_trips_byte_identically() {
    let app = app();
    let id = png_session(&app).await;
    let text = preset_text("marie-bonneau-1").unwrap();
    let uri = format!("/sessions/{id}/pipeline");
    let (status, body, _) = send(&app, with_body(Method::PUT, &uri, "text/plain", text)).await;
    assert_eq!(status, StatusCode::OK);
    let view = json_body(&body);
    assert_eq!(view["name"], "marie-bonneau-1");
    assert_eq!(view["stages"][2], "magnify gamma=2.25");
    let (status, body, _) = send(&app, get(&uri)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, text.as_bytes());

    let (_, png, _) = send(&app, get(&format!("/sessions/{id}/preview"))).await;
    let img = RasterImage::decode_png(&png).unwrap();
    assert_eq!((img.width(), img.height()), (72, 72));
    let (_, png, _) = send(&app, get(&format!("/sessions/{id}/preview?view=true"))).await;
    let img = RasterImage::decode_png(&png).unwrap();
    assert_eq!((img.width(), img.height()), (32, 32));
    let (_, png, _) = send(&app, get(&format!("/sessions/{id}/preview?upto=2"))).await;
    assert_eq!(RasterImage::decode_png(&png).unwrap().width(), 32);
    let (status, body, _) = send(&app, get(&format!("/sessions/{id}/preview?upto=99"))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "upto");
}

#[tokio::test]
async fn malformed_and_out_of_range_stages() {
    let app = app();
    let id = png_session(&app).await;
    let uri = format!("/sessions/{id}/pipeline");
    let (status, body, _) = send(&app, with_body(Method::PUT, &uri, "text/plain", "interp1 p2=1 p3=2\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(json_body(&body)["error"].as_str().unwrap().contains("line 1"));

    let (status, body, _) = send(&app, with_body(Method::PUT, &uri, "text/plain", "interp1 p2=300 p3=0 p4=0\n")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "p2");

    let bad_gamma = "magnify gamma=9\n";
    let (status, body, _) = send(&app, with_body(Method::PUT, &uri, "text/plain", bad_gamma)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "gamma");

    let step3 = "interp1 p2=1 p3=2 p4=3 geom=step3\n";
    let (status, _, _) = send(&app, with_body(Method::PUT, &uri, "text/plain", step3)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    // rejected edits leave the pipeline untouched
    let (_, body, _) = send(&app, get(&uri)).await;
    assert!(body.is_empty());
}

#[tokio::test]
async fn appended_stages_replace_the_pipeline() {
    let app = app();
    let id = png_session(&app).await;
    let stages = format!("/sessions/{id}/pipeline/stages");
    let (status, body, _) = send(&app, with_body(Method::POST, &stages, "text/plain", "interp1 p2=255 p3=255 p4=255\nmagnify gamma=2\n")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json_body(&body)["revision"], 1);
    let deconv = "deconv L=5 theta=45 source=DVC amount=100 noise=NO";
    let (status, body, _) = send(&app, with_body(Method::POST, &stages, "text/plain", deconv)).await;
    assert_eq!(status, StatusCode::OK);
    let view = json_body(&body);
    assert_eq!(view["stages"].as_array().unwrap().len(), 3);
    assert_eq!(view["stages"][2], deconv);

    let (status, _, _) = send(&app, with_body(Method::POST, &stages, "text/plain", "magnify gamma=2")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "second magnification after a deconvolution");
    let (status, _, _) = send(&app, with_body(Method::POST, &stages, "text/plain", "# nothing\n")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, text, _) = send(&app, get(&format!("/sessions/{id}/pipeline"))).await;
    let spec = parse(std::str::from_utf8(&text).unwrap()).unwrap();
    assert_eq!(spec.stages.len(), 3);
}

#[tokio::test]
async fn previews_are_deterministic_and_tagged() {
    let app = app();
    let id = png_session(&app).await;
    let stages = format!("/sessions/{id}/pipeline/stages");
    send(&app, with_body(Method::POST, &stages, "text/plain", "magnify gamma=2\ndeconv L=7 theta=30 source=OFC amount=150 noise=YES")).await;
    let uri = format!("/sessions/{id}/preview");
    let (_, a, ha) = send(&app, get(&uri)).await;
    let (_, b, hb) = send(&app, get(&uri)).await;
    assert_eq!(a, b);
    assert_eq!(ha[header::ETAG], hb[header::ETAG]);
    let cached = Request::get(&uri)
        .header(header::IF_NONE_MATCH, ha[header::ETAG].clone())
        .body(Body::empty())
        .unwrap();
    assert_eq!(send(&app, cached).await.0, StatusCode::NOT_MODIFIED);
}

#[tokio::test]
async fn sweep_grid_has_one_labelled_cell_per_length_and_angle() {
    let app = app();
    let id = reference_session(&app).await;
    let (status, body, _) = send(&app, get(&format!("/sessions/{id}/sweep?L=0..20&theta=0..175&gamma=2.25"))).await;
    assert_eq!(status, StatusCode::OK);
    let m = json_body(&body);
    assert_eq!((m["rows"].as_u64(), m["cols"].as_u64()), (Some(21), Some(36)));
    let cells = m["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 21 * 36);
    let c = &cells[13 * 36 + 21];
    assert_eq!((c["row"].as_u64(), c["col"].as_u64()), (Some(13), Some(21)));
    assert_eq!((c["L"].as_u64(), c["theta"].as_f64()), (Some(13), Some(105.0)));
    assert_eq!(c["label"], "L=13 theta=105");
    assert_eq!(c["stages"][0], "magnify gamma=2.25");
    assert_eq!(c["stages"][1], "deconv L=13 theta=105 source=DVC amount=100 noise=NO");
    assert!(c["objective"]["total"].is_number());
    let thumb = RasterImage::decode_png(&BASE64.decode(c["png"].as_str().unwrap()).unwrap()).unwrap();
    assert_eq!((thumb.width(), thumb.height()), (64, 64));
    let best = m["best"].as_array().unwrap();
    let best_total = cells[(best[0].as_u64().unwrap() * 36 + best[1].as_u64().unwrap()) as usize]["objective"]["total"]
        .as_f64()
        .unwrap();
    assert!(cells.iter().all(|c| c["objective"]["total"].as_f64().unwrap() >= best_total));
}

#[tokio::test]
async fn sweep_ranges_and_lists() {
    let app = app();
    let id = png_session(&app).await;
    let (status, body, _) = send(&app, get(&format!("/sessions/{id}/sweep?L=3,9&theta=0..90:45&thumb=16"))).await;
    assert_eq!(status, StatusCode::OK);
    let m = json_body(&body);
    assert_eq!(m["L"], json!([3, 9]));
    assert_eq!(m["theta"], json!([0.0, 45.0, 90.0]));
    assert!(m["cells"][0].get("objective").is_none());
    assert!(m.get("best").is_none());
    assert_eq!(m["cells"][0]["width"], 16);
    assert_eq!(m["cells"][0]["stages"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn sweep_parameter_errors_name_the_field() {
    let app = app();
    let id = png_session(&app).await;
    for (query, field) in [
        ("L=0..25", "L"),
        ("L=2.5", "L"),
        ("L=x", "L"),
        ("theta=0..180", "theta"),
        ("gamma=5", "gamma"),
        ("gamma=0.5", "gamma"),
        ("amount=400", "amount"),
        ("source=XYZ", "source"),
        ("noise=maybe", "noise"),
        ("lambda=-1", "lambda"),
        ("thumb=0", "thumb"),
        ("L=0..20&theta=0..179:0.1", "theta"),
    ] {
        let (status, body, _) = send(&app, get(&format!("/sessions/{id}/sweep?{query}"))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{query}");
        assert_eq!(json_body(&body)["field"], field, "{query}");
    }
}

async fn poll(app: &Router, run: &str) -> Value {
    for _ in 0..600 {
        let (status, body, _) = send(app, get(&format!("/runs/{run}"))).await;
        assert_eq!(status, StatusCode::OK);
        let v = json_body(&body);
        if v["status"] != "running" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    panic!("run {run} did not finish");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn search_runs_in_the_background_and_reports_a_monotone_trace() {
    let app = app();
    let id = reference_session(&app).await;
    let config = json!({
        "lambda": 0.1,
        "threshold_step": 85,
        "lengths": [0, 5, 9],
        "thetas": [0, 45, 90, 135],
        "amounts": [100],
        "noises": ["NO"],
        "sources": ["DVC"],
        "gammas": [1],
        "max_occurrences": 2,
        "rounds": 1,
    });
    let uri = format!("/sessions/{id}/search");
    let (status, body, _) = send(&app, with_body(Method::POST, &uri, "application/json", config.to_string())).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let run = json_body(&body)["run_id"].as_str().unwrap().to_string();
    let done = poll(&app, &run).await;
    assert_eq!(done["status"], "done", "{done}");
    let totals: Vec<f64> = done["trace"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["total"].as_f64().unwrap())
        .collect();
    assert!(totals.len() >= 2);
    assert!(totals.windows(2).all(|w| w[1] <= w[0]), "{totals:?}");
    parse(done["spec"].as_str().unwrap()).unwrap();
}

#[tokio::test]
async fn search_request_errors() {
    let app = app();
    let no_reference = png_session(&app).await;
    let (status, body, _) = send(&app, with_body(Method::POST, &format!("/sessions/{no_reference}/search"), "application/json", "{}")).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(json_body(&body)["field"], "reference");

    let id = reference_session(&app).await;
    let uri = format!("/sessions/{id}/search");
    for (config, field) in [
        (json!({"lambda": -1.0}), "lambda"),
        (json!({"lengths": [21]}), "lengths"),
        (json!({"lengths": []}), "lengths"),
        (json!({"thetas": [180]}), "thetas"),
        (json!({"gammas": [4.5]}), "gammas"),
        (json!({"amounts": [301]}), "amounts"),
        (json!({"noises": ["sometimes"]}), "noises"),
        (json!({"sources": ["CCD"]}), "sources"),
        (json!({"threshold_step": 0}), "threshold_step"),
        (json!({"rounds": 0}), "rounds"),
        (json!({"max_occurrences": 0}), "max_occurrences"),
    ] {
        let (status, body, _) = send(&app, with_body(Method::POST, &uri, "application/json", config.to_string())).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{config}");
        assert_eq!(json_body(&body)["field"], field, "{config}");
    }
    let (status, _, _) = send(&app, with_body(Method::POST, &uri, "application/json", "{\"lamda\": 1}")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn presets_are_listed_and_served_as_text() {
    let app = app();
    let (status, body, _) = send(&app, get("/presets")).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<String> = serde_json::from_slice(&body).unwrap();
    assert_eq!(names, preset_names().collect::<Vec<_>>());
    assert_eq!(names.len(), 11);
    for name in &names {
        let (status, body, headers) = send(&app, get(&format!("/presets/{name}"))).await;
        assert_eq!(status, StatusCode::OK);
        assert!(headers[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/plain"));
        assert_eq!(body, preset_text(name).unwrap().as_bytes());
    }
}
