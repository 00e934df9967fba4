use std::str::FromStr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::{CONTENT_TYPE, ETAG, IF_NONE_MATCH};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use resonant_sr::codec::{expand, read_lab};
use resonant_sr::deconv::{
    sweep, DeconvSettings, NoiseMode, Source, SweepSettings, MAX_AMOUNT, MAX_GAMMA, MAX_LENGTH, MIN_GAMMA,
};
use resonant_sr::pipeline::{parse, preset_names, preset_text, run_stages};
use resonant_sr::raster::{resize_to, ResizeMethod};
use resonant_sr::search::{optimize_with_progress, threshold_grid, ObjectiveBreakdown, SearchConfig};
use resonant_sr::{BlockAverageImage, RasterImage, Stage};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};
use crate::state::{AppState, RunStatus, Session, TracePoint};

/// Most cells a single sweep request may ask for.
pub const MAX_SWEEP_CELLS: usize = 1024;
pub const DEFAULT_THUMB: usize = 64;
const MAX_THUMB: usize = 512;
const MAX_THETA: f64 = 180.0;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

fn decode_base64(field: &str, text: &str) -> ApiResult<Vec<u8>> {
    BASE64.decode(text.trim()).map_err(|e| ApiError {
        status: StatusCode::BAD_REQUEST,
        message: format!("{field}: {e}"),
        field: Some(field.into()),
    })
}

fn png_response(image: &RasterImage, etag: String, headers: &HeaderMap) -> ApiResult<Response> {
    let etag = HeaderValue::from_str(&etag).map_err(|e| ApiError::internal(e.to_string()))?;
    if headers.get(IF_NONE_MATCH) == Some(&etag) {
        return Ok((StatusCode::NOT_MODIFIED, [(ETAG, etag)]).into_response());
    }
    let bytes = image.encode_png()?;
    Ok(([(CONTENT_TYPE, HeaderValue::from_static("image/png")), (ETAG, etag)], bytes).into_response())
}

fn text_response(text: String) -> Response {
    ([(CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response()
}

#[derive(Deserialize, Default)]
pub struct UploadQuery {
    step: Option<usize>,
}

/// JSON upload: exactly one of `image` (base64 PNG of the low-resolution
/// observation, needs `step`) or `lab` (base64 `.lab` stream).
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct UploadJson {
    image: Option<String>,
    lab: Option<String>,
    step: Option<usize>,
    /// Base64 PNG at the original resolution, needed for search.
    reference: Option<String>,
}

#[derive(Serialize)]
struct Created {
    id: String,
    width: usize,
    height: usize,
    channels: usize,
    step: usize,
}

fn observation_source(png: &[u8], step: Option<usize>) -> ApiResult<BlockAverageImage> {
    let step = step.ok_or_else(|| ApiError::out_of_range("step", "step is required with a PNG upload"))?;
    let observation = RasterImage::decode_png(png)?;
    Ok(BlockAverageImage::from_observation(&observation, step)?)
}

fn lab_source(bytes: &[u8]) -> ApiResult<BlockAverageImage> {
    Ok(read_lab(&mut &bytes[..])?)
}

/// POST /sessions. Accepts a raw PNG (`?step=`), a raw `.lab` stream
/// (`application/octet-stream`) or JSON.
pub async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    Query(query): Query<UploadQuery>,
    body: Bytes,
) -> ApiResult<Response> {
    state.purge_expired();
    let content_type = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .unwrap_or("")
        .to_ascii_lowercase();
    let (source, reference) = if content_type.starts_with("image/png") {
        (observation_source(&body, query.step)?, None)
    } else if content_type.starts_with("application/octet-stream") {
        (lab_source(&body)?, None)
    } else {
        let upload: UploadJson =
            serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("upload body: {e}")))?;
        let step = upload.step.or(query.step);
        let source = match (&upload.image, &upload.lab) {
            (Some(png), None) => observation_source(&decode_base64("image", png)?, step)?,
            (None, Some(lab)) => lab_source(&decode_base64("lab", lab)?)?,
            _ => return Err(ApiError::bad_request("send exactly one of image or lab")),
        };
        let reference = match &upload.reference {
            Some(png) => Some(RasterImage::decode_png(&decode_base64("reference", png)?).map_err(|e| ApiError {
                field: Some("reference".into()),
                ..ApiError::from(e)
            })?),
            None => None,
        };
        (source, reference)
    };
    if let Some(r) = &reference {
        if (r.width(), r.height(), r.channels()) != (source.orig_width(), source.orig_height(), source.channels()) {
            return Err(ApiError::out_of_range(
                "reference",
                format!(
                    "reference is {}x{}x{}, expected {}x{}x{}",
                    r.width(),
                    r.height(),
                    r.channels(),
                    source.orig_width(),
                    source.orig_height(),
                    source.channels()
                ),
            ));
        }
    }
    let created = Created {
        id: String::new(),
        width: source.orig_width(),
        height: source.orig_height(),
        channels: source.channels(),
        step: source.step(),
    };
    let id = state.insert_session(Session::new(source, reference));
    Ok((StatusCode::CREATED, Json(Created { id, ..created })).into_response())
}

#[derive(Deserialize, Default)]
pub struct PreviewQuery {
    /// Run only the first `upto` stages.
    upto: Option<usize>,
    /// Area-average the result back to the original size.
    view: Option<bool>,
}

/// GET /sessions/{id}/preview
pub async fn preview(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<PreviewQuery>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let count = session.pipeline.stages.len();
    let upto = query.upto.unwrap_or(count);
    if upto > count {
        return Err(ApiError::out_of_range("upto", format!("upto {upto} exceeds {count} stages")));
    }
    let view = query.view.unwrap_or(false);
    let etag = format!("\"{id}-{}-{upto}-{}\"", session.revision, u8::from(view));
    let image = blocking(move || {
        let out = run_stages(&expand(&session.source), &session.pipeline.stages[..upto], session.source.step())?;
        if view {
            let (w, h) = (session.source.orig_width(), session.source.orig_height());
            return Ok(resize_to(&out, w, h, ResizeMethod::AreaAverage)?);
        }
        Ok(out)
    })
    .await?;
    png_response(&image, etag, &headers)
}

#[derive(Deserialize, Default)]
pub struct SweepQuery {
    #[serde(rename = "L")]
    lengths: Option<String>,
    theta: Option<String>,
    gamma: Option<String>,
    source: Option<String>,
    amount: Option<String>,
    noise: Option<String>,
    lambda: Option<String>,
    thumb: Option<String>,
}

fn parse_number<T: FromStr>(field: &str, text: &str) -> ApiResult<T> {
    text.trim()
        .parse()
        .map_err(|_| ApiError::out_of_range(field, format!("{field}={text} is not a number")))
}

/// `a..b` (inclusive, step `default_step`), `a..b:s`, `a,b,c`, or one value.
pub fn parse_axis(field: &str, text: &str, default_step: f64, min: f64, max: f64) -> ApiResult<Vec<f64>> {
    let values: Vec<f64> = if let Some((lo, rest)) = text.split_once("..") {
        let rest = rest.strip_prefix('=').unwrap_or(rest);
        let (hi, step) = match rest.split_once(':') {
            Some((hi, s)) => (hi, parse_number::<f64>(field, s)?),
            None => (rest, default_step),
        };
        let (lo, hi): (f64, f64) = (parse_number(field, lo)?, parse_number(field, hi)?);
        if !(step > 0.0 && step.is_finite()) || hi < lo {
            return Err(ApiError::out_of_range(field, format!("{field}={text} is not an increasing range")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        if n > MAX_SWEEP_CELLS {
            return Err(ApiError::out_of_range(field, format!("{field}={text} has too many values")));
        }
        (0..n).map(|i| lo + step * i as f64).collect()
    } else {
        text.split(',').map(|v| parse_number(field, v)).collect::<ApiResult<_>>()?
    };
    if values.is_empty() {
        return Err(ApiError::out_of_range(field, format!("{field} is empty")));
    }
    if let Some(v) = values.iter().find(|v| !(min..=max).contains(*v)) {
        return Err(ApiError::out_of_range(field, format!("{field} value {v} outside [{min}, {max}]")));
    }
    Ok(values)
}

#[derive(Serialize)]
struct Objective {
    fidelity: f64,
    #[serde(rename = "R")]
    regularizer: f64,
    total: f64,
}

impl From<ObjectiveBreakdown> for Objective {
    fn from(o: ObjectiveBreakdown) -> Self {
        Self {
            fidelity: o.fidelity,
            regularizer: o.regularizer,
            total: o.total,
        }
    }
}

#[derive(Serialize)]
struct CellView {
    row: usize,
    col: usize,
    #[serde(rename = "L")]
    length: u32,
    theta: f64,
    label: String,
    /// Stage lines that reproduce this cell when appended to the pipeline.
    stages: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<Objective>,
    width: usize,
    height: usize,
    /// Base64 PNG thumbnail.
    png: String,
}

#[derive(Serialize)]
struct SweepManifest {
    rows: usize,
    cols: usize,
    #[serde(rename = "L")]
    lengths: Vec<u32>,
    theta: Vec<f64>,
    gamma: f64,
    source: String,
    amount: u32,
    noise: String,
    cells: Vec<CellView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best: Option<[usize; 2]>,
}

fn thumbnail(image: &RasterImage, max_side: usize) -> ApiResult<RasterImage> {
    let side = image.width().max(image.height());
    if side <= max_side {
        return Ok(image.clone());
    }
    let scale = max_side as f64 / side as f64;
    let w = ((image.width() as f64 * scale).round() as usize).max(1);
    let h = ((image.height() as f64 * scale).round() as usize).max(1);
    Ok(resize_to(image, w, h, ResizeMethod::AreaAverage)?)
}

/// GET /sessions/{id}/sweep: one deconvolution of the current pipeline
/// output per (L, theta) cell.
pub async fn sweep_grid(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<SweepQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let lengths: Vec<u32> = parse_axis("L", q.lengths.as_deref().unwrap_or("0..20"), 1.0, 0.0, MAX_LENGTH as f64)?
        .into_iter()
        .map(|v| {
            if v.fract() == 0.0 {
                Ok(v as u32)
            } else {
                Err(ApiError::out_of_range("L", format!("L value {v} is not an integer")))
            }
        })
        .collect::<ApiResult<_>>()?;
    let thetas = parse_axis("theta", q.theta.as_deref().unwrap_or("0..175"), 5.0, 0.0, MAX_THETA)?;
    if let Some(t) = thetas.iter().find(|&&t| t >= MAX_THETA) {
        return Err(ApiError::out_of_range("theta", format!("theta value {t} must be below {MAX_THETA}")));
    }
    if lengths.len() * thetas.len() > MAX_SWEEP_CELLS {
        return Err(ApiError::out_of_range(
            "L",
            format!("{} cells exceed the limit of {MAX_SWEEP_CELLS}", lengths.len() * thetas.len()),
        ));
    }
    let gamma: f64 = q.gamma.as_deref().map(|g| parse_number("gamma", g)).transpose()?.unwrap_or(1.0);
    if !(MIN_GAMMA..=MAX_GAMMA).contains(&gamma) {
        return Err(ApiError::out_of_range("gamma", format!("gamma {gamma} outside [{MIN_GAMMA}, {MAX_GAMMA}]")));
    }
    let source = match q.source.as_deref() {
        Some(s) => Source::from_str(s).map_err(|e| ApiError::out_of_range("source", e.to_string()))?,
        None => Source::Dvc,
    };
    let noise = match q.noise.as_deref() {
        Some(s) => NoiseMode::from_str(s).map_err(|e| ApiError::out_of_range("noise", e.to_string()))?,
        None => NoiseMode::No,
    };
    let amount: u32 = q.amount.as_deref().map(|a| parse_number("amount", a)).transpose()?.unwrap_or(100);
    if amount > MAX_AMOUNT {
        return Err(ApiError::out_of_range("amount", format!("amount {amount} exceeds {MAX_AMOUNT}")));
    }
    let lambda: f64 = q.lambda.as_deref().map(|l| parse_number("lambda", l)).transpose()?.unwrap_or(0.1);
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ApiError::out_of_range("lambda", format!("lambda {lambda} must be finite and >= 0")));
    }
    let thumb: usize = q.thumb.as_deref().map(|t| parse_number("thumb", t)).transpose()?.unwrap_or(DEFAULT_THUMB);
    if !(1..=MAX_THUMB).contains(&thumb) {
        return Err(ApiError::out_of_range("thumb", format!("thumb {thumb} outside [1, {MAX_THUMB}]")));
    }
    let fixed = SweepSettings {
        gamma,
        source,
        amount,
        noise,
    };
    let manifest = blocking(move || {
        let base = run_stages(&expand(&session.source), &session.pipeline.stages, session.source.step())?;
        let reference = session.reference.as_ref().map(|r| (r, lambda));
        let grid = sweep(&base, &lengths, &thetas, &fixed, reference)?;
        let best = grid.best().map(|b| (b.length, b.theta));
        let mut cells = Vec::with_capacity(grid.cells.len());
        let mut best_cell = None;
        for (i, cell) in grid.cells.iter().enumerate() {
            let (row, col) = (i / thetas.len(), i % thetas.len());
            if best == Some((cell.length, cell.theta)) && best_cell.is_none() {
                best_cell = Some([row, col]);
            }
            let mut stages = Vec::new();
            if gamma != 1.0 {
                stages.push(Stage::magnify(gamma).to_string());
            }
            let settings = DeconvSettings {
                gamma: 1.0,
                length: cell.length,
                theta: cell.theta,
                source,
                amount,
                noise,
            };
            stages.push(Stage::deconvolve(settings).to_string());
            let small = thumbnail(&cell.image, thumb)?;
            cells.push(CellView {
                row,
                col,
                length: cell.length,
                theta: cell.theta,
                label: format!("L={} theta={}", cell.length, cell.theta),
                stages,
                objective: cell.objective.map(Objective::from),
                width: small.width(),
                height: small.height(),
                png: BASE64.encode(small.encode_png()?),
            });
        }
        let manifest = SweepManifest {
            rows: lengths.len(),
            cols: thetas.len(),
            lengths,
            theta: thetas,
            gamma,
            source: source.to_string(),
            amount,
            noise: noise.to_string(),
            cells,
            best: best_cell,
        };
        serde_json::to_value(manifest).map_err(|e| ApiError::internal(e.to_string()))
    })
    .await?;
    Ok(Json(manifest))
}

/// Pipeline as JSON: the name plus one text-grammar line per stage.
#[derive(Serialize)]
pub struct PipelineView {
    name: String,
    stages: Vec<String>,
    revision: u64,
}

fn pipeline_view(session: &Session) -> Json<PipelineView> {
    Json(PipelineView {
        name: session.pipeline.name.clone(),
        stages: session.pipeline.stages.iter().map(Stage::to_string).collect(),
        revision: session.revision,
    })
}

fn body_text(body: &Bytes) -> ApiResult<&str> {
    std::str::from_utf8(body).map_err(|_| ApiError::bad_request("pipeline text must be UTF-8"))
}

/// PUT /sessions/{id}/pipeline: replaces the pipeline with the posted text.
pub async fn put_pipeline(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PipelineView>> {
    let text = body_text(&body)?.to_string();
    let spec = parse(&text)?;
    let session = state.update_session(&id, |s| {
        spec.validate_for_step(s.source.step())?;
        Ok(s.with_pipeline(spec, Some(text)))
    })?;
    Ok(pipeline_view(&session))
}

/// GET /sessions/{id}/pipeline: the stored text.
pub async fn get_pipeline(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(text_response(state.session(&id)?.pipeline_text.clone()))
}

/// POST /sessions/{id}/pipeline/stages: appends the posted stage lines.
pub async fn append_stages(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<PipelineView>> {
    let added = parse(body_text(&body)?)?;
    if added.stages.is_empty() {
        return Err(ApiError::bad_request("no stages in request body"));
    }
    let session = state.update_session(&id, |s| {
        let mut spec = s.pipeline.clone();
        spec.stages.extend(added.stages);
        spec.validate_for_step(s.source.step())?;
        Ok(s.with_pipeline(spec, None))
    })?;
    Ok(pipeline_view(&session))
}

/// Search request; every field is optional and defaults to the library's
/// search configuration.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    lambda: Option<f64>,
    threshold: Option<f64>,
    max_occurrences: Option<usize>,
    threshold_step: Option<u8>,
    lengths: Option<Vec<u32>>,
    thetas: Option<Vec<f64>>,
    sources: Option<Vec<String>>,
    amounts: Option<Vec<u32>>,
    noises: Option<Vec<String>>,
    gammas: Option<Vec<f64>>,
    rounds: Option<usize>,
}

fn nonempty<T>(field: &str, v: Option<Vec<T>>) -> ApiResult<Option<Vec<T>>> {
    match v {
        Some(v) if v.is_empty() => Err(ApiError::out_of_range(field, format!("{field} is empty"))),
        v => Ok(v),
    }
}

impl SearchRequest {
    pub fn into_config(self) -> ApiResult<SearchConfig> {
        let mut cfg = SearchConfig::default();
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(ApiError::out_of_range("lambda", format!("lambda {l} must be finite and >= 0")));
            }
            cfg.lambda = l;
        }
        if let Some(t) = self.threshold {
            if !t.is_finite() {
                return Err(ApiError::out_of_range("threshold", "threshold must be finite"));
            }
            cfg.threshold = t;
        }
        if let Some(m) = self.max_occurrences {
            if m == 0 {
                return Err(ApiError::out_of_range("max_occurrences", "max_occurrences must be positive"));
            }
            cfg.max_occurrences = m;
        }
        if let Some(s) = self.threshold_step {
            if s == 0 {
                return Err(ApiError::out_of_range("threshold_step", "threshold_step must be positive"));
            }
            cfg.thresholds = threshold_grid(s);
        }
        if let Some(ls) = nonempty("lengths", self.lengths)? {
            if let Some(l) = ls.iter().find(|&&l| l > MAX_LENGTH) {
                return Err(ApiError::out_of_range("lengths", format!("length {l} exceeds {MAX_LENGTH}")));
            }
            cfg.lengths = ls;
        }
        if let Some(ts) = nonempty("thetas", self.thetas)? {
            if let Some(t) = ts.iter().find(|&&t| !(0.0..MAX_THETA).contains(&t)) {
                return Err(ApiError::out_of_range("thetas", format!("theta {t} outside [0, {MAX_THETA})")));
            }
            cfg.thetas = ts;
        }
        if let Some(ss) = nonempty("sources", self.sources)? {
            cfg.sources = ss
                .iter()
                .map(|s| Source::from_str(s).map_err(|e| ApiError::out_of_range("sources", e.to_string())))
                .collect::<ApiResult<_>>()?;
        }
        if let Some(a) = nonempty("amounts", self.amounts)? {
            if let Some(x) = a.iter().find(|&&x| x > MAX_AMOUNT) {
                return Err(ApiError::out_of_range("amounts", format!("amount {x} exceeds {MAX_AMOUNT}")));
            }
            cfg.amounts = a;
        }
        if let Some(ns) = nonempty("noises", self.noises)? {
            cfg.noises = ns
                .iter()
                .map(|s| NoiseMode::from_str(s).map_err(|e| ApiError::out_of_range("noises", e.to_string())))
                .collect::<ApiResult<_>>()?;
        }
        if let Some(g) = nonempty("gammas", self.gammas)? {
            if let Some(x) = g.iter().find(|&&x| !(MIN_GAMMA..=MAX_GAMMA).contains(&x)) {
                return Err(ApiError::out_of_range("gammas", format!("gamma {x} outside [{MIN_GAMMA}, {MAX_GAMMA}]")));
            }
            cfg.first_gammas = g;
        }
        if let Some(r) = self.rounds {
            if r == 0 {
                return Err(ApiError::out_of_range("rounds", "rounds must be positive"));
            }
            cfg.rounds = r;
        }
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct RunCreated {
    run_id: String,
}

/// POST /sessions/{id}/search: starts a search in the background.
pub async fn start_search(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let session = state.session(&id)?;
    let request: SearchRequest = if body.iter().all(u8::is_ascii_whitespace) {
        SearchRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("search body: {e}")))?
    };
    let cfg = request.into_config()?;
    if session.reference.is_none() {
        return Err(ApiError::out_of_range("reference", "session has no reference image"));
    }
    let (run_id, run) = state.insert_run();
    tokio::task::spawn_blocking(move || {
        let reference = session.reference.as_ref().expect("checked above");
        let result = optimize_with_progress(&session.source, reference, &cfg, |s| {
            let mut r = run.lock().unwrap();
            r.trace = s.trace.iter().map(TracePoint::from).collect();
            r.spec = resonant_sr::pipeline::serialize(&s.spec);
        });
        let mut r = run.lock().unwrap();
        match result {
            Ok(s) => {
                r.trace = s.trace.iter().map(TracePoint::from).collect();
                r.spec = resonant_sr::pipeline::serialize(&s.spec);
                r.status = RunStatus::Done;
            }
            Err(e) => {
                r.error = Some(e.to_string());
                r.status = RunStatus::Failed;
            }
        }
        r.finished = Some(std::time::Instant::now());
    });
    Ok((StatusCode::ACCEPTED, Json(RunCreated { run_id })).into_response())
}

/// GET /runs/{id}
pub async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(state.run(&id)?).into_response())
}

/// GET /presets
pub async fn list_presets() -> Json<Vec<&'static str>> {
    Json(preset_names().collect())
}

/// GET /presets/{name}
pub async fn get_preset(Path(name): Path<String>) -> ApiResult<Response> {
    let text = preset_text(&name).ok_or_else(|| ApiError::not_found("preset", &name))?;
    Ok(text_response(text.to_string()))
}
