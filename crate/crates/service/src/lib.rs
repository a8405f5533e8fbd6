//! HTTP/JSON service behind the contour review frontend: case listing,
//! rendered slices with organ contours, Likert score submission and live
//! score summaries.

mod render;
mod scores;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use oar_evalkit::nifti::{read_image, read_labels};
use oar_evalkit::pipeline::{label_file, MULTILABEL_KEY};
use oar_evalkit::report::{likert_summarize, ScoreSubmission};
use oar_evalkit::resample::resample_labels_nearest;
use oar_evalkit::review::{
    organ_color, palette, ApiError, CaseListing, CaseMeta, LikertReport, OrganInfo, SliceCounts, SliceShapes, ViewAxis,
    DEFAULT_LEVEL, DEFAULT_WINDOW, USABILITY_RULE,
};
use oar_evalkit::{CaseRecord, Error, Grid, ImageVolume, LabelVolume, Manifest, OrganSchema};
use serde::Deserialize;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

pub use render::{render_slice, slice_count, slice_shape, RenderMode, SliceRequest};
pub use scores::ScoreStore;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub manifest: Manifest,
    pub schema: OrganSchema,
    /// Labels to review, `<case_id>.nii.gz`; falls back to the manifest's
    /// `multilabel` entry.
    pub labels_dir: Option<PathBuf>,
    pub scores_path: PathBuf,
    /// Built frontend assets served at `/`.
    pub static_dir: Option<PathBuf>,
    /// Restrict the session to these cases.
    pub cases: Option<Vec<String>>,
    pub window: f64,
    pub level: f64,
    pub cache_capacity: usize,
}

impl ServiceConfig {
    pub fn new(manifest: Manifest, schema: OrganSchema, scores_path: impl Into<PathBuf>) -> ServiceConfig {
        ServiceConfig {
            manifest,
            schema,
            labels_dir: None,
            scores_path: scores_path.into(),
            static_dir: None,
            cases: None,
            window: DEFAULT_WINDOW,
            level: DEFAULT_LEVEL,
            cache_capacity: 8,
        }
    }
}

struct CaseData {
    grid: Grid,
    image: Option<ImageVolume>,
    labels: Option<LabelVolume>,
    voxels_by_code: BTreeMap<u16, usize>,
}

pub struct AppState {
    config: ServiceConfig,
    cases: Vec<CaseRecord>,
    cache: Mutex<Vec<(String, Arc<CaseData>)>>,
    scores: tokio::sync::Mutex<ScoreStore>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> oar_evalkit::Result<AppState> {
        let cases: Vec<CaseRecord> = match &config.cases {
            Some(ids) => ids
                .iter()
                .map(|id| {
                    config
                        .manifest
                        .case(id)
                        .cloned()
                        .ok_or_else(|| Error::Input(format!("review case `{id}` is not in the manifest")))
                })
                .collect::<oar_evalkit::Result<_>>()?,
            None => config.manifest.cases.clone(),
        };
        let scores = ScoreStore::open(&config.scores_path)?;
        Ok(AppState {
            config,
            cases,
            cache: Mutex::new(Vec::new()),
            scores: tokio::sync::Mutex::new(scores),
        })
    }

    fn case(&self, id: &str) -> Option<&CaseRecord> {
        self.cases.iter().find(|c| c.case_id == id)
    }
}

fn load_case(config: &ServiceConfig, case: &CaseRecord) -> oar_evalkit::Result<CaseData> {
    let image = if case.image_path.is_file() {
        Some(read_image(&case.image_path)?)
    } else {
        tracing::warn!(case = %case.case_id, "image {} not found", case.image_path.display());
        None
    };
    let label_path = config
        .labels_dir
        .as_deref()
        .and_then(|d| label_file(d, &case.case_id))
        .or_else(|| case.label_paths.get(MULTILABEL_KEY).cloned());
    let mut labels = label_path.map(read_labels).transpose()?;
    let grid = match (&image, &labels) {
        (Some(img), _) => img.grid,
        (None, Some(l)) => *l.grid(),
        (None, None) => {
            return Err(Error::Input(format!(
                "case {} has neither image nor labels",
                case.case_id
            )))
        }
    };
    if let Some(l) = &labels {
        if !l.grid().same_lattice(&grid) {
            labels = Some(resample_labels_nearest(l, &grid)?);
        }
    }
    let mut voxels_by_code = BTreeMap::new();
    if let Some(l) = &labels {
        for &v in l.data() {
            if v != 0 {
                *voxels_by_code.entry(v).or_insert(0) += 1;
            }
        }
    }
    Ok(CaseData {
        grid,
        image,
        labels,
        voxels_by_code,
    })
}

async fn case_data(state: &Arc<AppState>, id: &str) -> Result<Arc<CaseData>, Failure> {
    let case = state
        .case(id)
        .ok_or_else(|| Failure::NotFound(format!("unknown case `{id}`")))?
        .clone();
    {
        let mut cache = state.cache.lock().expect("cache lock");
        if let Some(pos) = cache.iter().position(|(k, _)| k == id) {
            let entry = cache.remove(pos);
            let data = entry.1.clone();
            cache.push(entry);
            return Ok(data);
        }
    }
    let st = state.clone();
    let data = tokio::task::spawn_blocking(move || load_case(&st.config, &case))
        .await
        .map_err(|e| Failure::Internal(e.to_string()))?
        .map_err(|e| Failure::Internal(e.to_string()))?;
    let data = Arc::new(data);
    let mut cache = state.cache.lock().expect("cache lock");
    cache.retain(|(k, _)| k != id);
    cache.push((id.to_string(), data.clone()));
    let cap = state.config.cache_capacity.max(1);
    if cache.len() > cap {
        let excess = cache.len() - cap;
        cache.drain(..excess);
    }
    Ok(data)
}

enum Failure {
    NotFound(String),
    BadRequest(String),
    Invalid(Vec<String>),
    Internal(String),
}

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let (status, error, details) = match self {
            Failure::NotFound(m) => (StatusCode::NOT_FOUND, m, Vec::new()),
            Failure::BadRequest(m) => (StatusCode::BAD_REQUEST, m, Vec::new()),
            Failure::Invalid(d) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid score".to_string(), d),
            Failure::Internal(m) => {
                tracing::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, m, Vec::new())
            }
        };
        (status, Json(ApiError { error, details })).into_response()
    }
}

async fn list_cases(State(state): State<Arc<AppState>>) -> Result<Json<Vec<CaseListing>>, Failure> {
    let scored = scored_organs(&state).await;
    let mut out = Vec::new();
    for case in &state.cases {
        let data = case_data(&state, &case.case_id).await?;
        out.push(CaseListing {
            case_id: case.case_id.clone(),
            patient_id: case.patient_id.clone(),
            dataset: case.dataset.clone(),
            present_organs: present(&state.config.schema, &data).len(),
            scored_organs: scored.get(&case.case_id).map_or(0, |s| s.len()),
        });
    }
    Ok(Json(out))
}

/// Organs with at least one score, per case.
async fn scored_organs(state: &AppState) -> BTreeMap<String, std::collections::BTreeSet<String>> {
    let store = state.scores.lock().await;
    let mut out: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
    for r in store.records() {
        out.entry(r.case_id.clone()).or_default().insert(r.organ.clone());
    }
    out
}

fn present<'a>(schema: &'a OrganSchema, data: &CaseData) -> Vec<&'a str> {
    schema
        .organs
        .iter()
        .filter(|o| data.voxels_by_code.contains_key(&o.label_code))
        .map(|o| o.name.as_str())
        .collect()
}

async fn case_meta(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<CaseMeta>, Failure> {
    let data = case_data(&state, &id).await?;
    let g = &data.grid;
    Ok(Json(CaseMeta {
        case_id: id,
        dims: g.dims,
        spacing: g.spacing,
        axis_codes: g.axis_codes.to_string(),
        slices: SliceCounts {
            axial: slice_count(g, ViewAxis::Axial),
            coronal: slice_count(g, ViewAxis::Coronal),
            sagittal: slice_count(g, ViewAxis::Sagittal),
        },
        slice_shape: SliceShapes {
            axial: slice_shape(g, ViewAxis::Axial),
            coronal: slice_shape(g, ViewAxis::Coronal),
            sagittal: slice_shape(g, ViewAxis::Sagittal),
        },
        has_image: data.image.is_some(),
        has_labels: data.labels.is_some(),
        window: state.config.window,
        level: state.config.level,
        palette: palette(&state.config.schema),
    }))
}

async fn case_organs(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<Vec<OrganInfo>>, Failure> {
    let data = case_data(&state, &id).await?;
    let store = state.scores.lock().await;
    let organs = state
        .config
        .schema
        .organs
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let voxels = data.voxels_by_code.get(&o.label_code).copied().unwrap_or(0);
            OrganInfo {
                organ: o.name.clone(),
                label_code: o.label_code,
                present: voxels > 0,
                voxels,
                color: organ_color(i),
                scores: store
                    .records()
                    .iter()
                    .filter(|r| r.case_id == id && r.organ == o.name)
                    .count(),
            }
        })
        .collect();
    Ok(Json(organs))
}

#[derive(Debug, Deserialize)]
struct SliceQuery {
    window: Option<f64>,
    level: Option<f64>,
    /// Comma-separated organ names; `none` for no contours. Default: all
    /// present organs.
    overlays: Option<String>,
    /// `composite` (default), `overlay` or `image`.
    render: Option<String>,
}

async fn slice_png(
    State(state): State<Arc<AppState>>,
    Path((id, axis, index)): Path<(String, String, String)>,
    Query(q): Query<SliceQuery>,
) -> Result<Response, Failure> {
    let view = ViewAxis::parse(&axis).ok_or_else(|| Failure::NotFound(format!("unknown axis `{axis}`")))?;
    let index: usize = index
        .parse()
        .map_err(|_| Failure::NotFound(format!("slice `{index}` is not an index")))?;
    let data = case_data(&state, &id).await?;
    let n = slice_count(&data.grid, view);
    if index >= n {
        return Err(Failure::NotFound(format!("{axis} slice {index} out of range 0..{n}")));
    }
    let window = q.window.unwrap_or(state.config.window);
    let level = q.level.unwrap_or(state.config.level);
    if !(window.is_finite() && window > 0.0 && level.is_finite()) {
        return Err(Failure::BadRequest("window must be positive and level finite".into()));
    }
    let mode = match q.render.as_deref() {
        None => RenderMode::Composite,
        Some(r) => RenderMode::parse(r).ok_or_else(|| Failure::BadRequest(format!("unknown render `{r}`")))?,
    };
    let schema = &state.config.schema;
    let names: Vec<String> = match q.overlays.as_deref() {
        None => present(schema, &data).into_iter().map(str::to_string).collect(),
        Some("none") | Some("") => Vec::new(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
    };
    let mut overlays = Vec::new();
    for name in &names {
        let pos = schema
            .position(name)
            .ok_or_else(|| Failure::BadRequest(format!("unknown organ `{name}`")))?;
        overlays.push((schema.organs[pos].label_code, organ_color(pos)));
    }
    let png = tokio::task::spawn_blocking(move || {
        let req = SliceRequest {
            view,
            index,
            window,
            level,
            overlays: &overlays,
            mode,
        };
        render_slice(&data.grid, data.image.as_ref(), data.labels.as_ref(), &req)
    })
    .await
    .map_err(|e| Failure::Internal(e.to_string()))?
    .map_err(|e| Failure::Internal(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn submit_score(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<ScoreSubmission>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, Failure> {
    if state.case(&id).is_none() {
        return Err(Failure::NotFound(format!("unknown case `{id}`")));
    }
    let Json(sub) = body.map_err(|e| Failure::Invalid(vec![e.body_text()]))?;
    let organ = sub.organ.clone();
    let Some(def) = state.config.schema.organ(&organ) else {
        return Err(Failure::Invalid(vec![format!("unknown organ `{organ}`")]));
    };
    let code = def.label_code;
    let record = sub.into_record(&id, chrono::Utc::now()).map_err(|e| match e {
        Error::Validation(problems) => Failure::Invalid(problems),
        other => Failure::Invalid(vec![other.to_string()]),
    })?;
    let data = case_data(&state, &id).await?;
    if data.labels.is_some() && !data.voxels_by_code.contains_key(&code) {
        return Err(Failure::Invalid(vec![format!(
            "organ `{organ}` is not present in case {id}"
        )]));
    }
    let mut store = state.scores.lock().await;
    store
        .append(record.clone())
        .map_err(|e| Failure::Internal(e.to_string()))?;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn likert_summary(State(state): State<Arc<AppState>>) -> Json<LikertReport> {
    let store = state.scores.lock().await;
    Json(LikertReport {
        summaries: likert_summarize(store.records()),
        n_records: store.records().len(),
        usability_rule: USABILITY_RULE.into(),
    })
}

const PLACEHOLDER: &str = "<!doctype html><title>oar-evalkit review</title>\
<p>The review frontend is not built. The API lives under <code>/api</code>.</p>";

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/cases", get(list_cases))
        .route("/api/cases/{id}/meta", get(case_meta))
        .route("/api/cases/{id}/organs", get(case_organs))
        .route("/api/cases/{id}/slices/{axis}/{index}", get(slice_png))
        .route("/api/cases/{id}/scores", axum::routing::post(submit_score))
        .route("/api/summary/likert", get(likert_summary));
    let static_dir = state.config.static_dir.clone().filter(|d| d.is_dir());
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    };
    app.with_state(state)
}

pub async fn serve(state: Arc<AppState>, listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
