use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use oar_evalkit::manifest::{Contrast, NephrectomySide, Sex, TumorType};
use oar_evalkit::nifti::{write_image, write_labels};
use oar_evalkit::{CaseRecord, Grid, ImageVolume, Manifest, OrganSchema, Volume, VoxelData};
use oar_evalkit_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(dir: &Path) -> (Manifest, OrganSchema) {
    let schema = OrganSchema::default();
    let grid = Grid::new([6, 5, 4], [1.0, 1.0, 2.5]).unwrap();
    let ct = ImageVolume::new(
        grid,
        VoxelData::I16((0..grid.len() as i16).map(|v| v * 10 - 200).collect()),
    )
    .unwrap();
    write_image(&ct, dir.join("ct.nii.gz")).unwrap();
    let mut labels = Volume::filled(grid, 0u16).unwrap();
    let liver = schema.organ("liver").unwrap().label_code;
    let spleen = schema.organ("spleen").unwrap().label_code;
    for k in 0..4 {
        labels.set(1, 1, k, liver);
        labels.set(2, 1, k, liver);
        labels.set(4, 3, k, spleen);
    }
    write_labels(&labels, dir.join("labels.nii.gz")).unwrap();
    let case = CaseRecord {
        case_id: "case01".into(),
        patient_id: "p01".into(),
        dataset: "local".into(),
        age_years: Some(3.0),
        sex: Sex::Male,
        tumor_type: TumorType::Neuroblastoma,
        iv_contrast: Contrast::Yes,
        nephrectomy_side: NephrectomySide::None,
        image_path: dir.join("ct.nii.gz"),
        label_paths: BTreeMap::from([("multilabel".to_string(), dir.join("labels.nii.gz"))]),
    };
    let manifest = Manifest {
        schema_ref: "default".into(),
        cases: vec![case],
    };
    (manifest, schema)
}

fn app(dir: &Path) -> Router {
    let (manifest, schema) = fixture(dir);
    let state = AppState::new(ServiceConfig::new(manifest, schema, dir.join("scores.jsonl"))).unwrap();
    router(Arc::new(state))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn call_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (s, b) = call(app, method, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn png_size(bytes: &[u8]) -> (u32, u32) {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let reader = decoder.read_info().unwrap();
    let info = reader.info();
    (info.width, info.height)
}

#[tokio::test]
async fn lists_cases_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (s, cases) = call_json(&app, "GET", "/api/cases", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(cases[0]["case_id"], "case01");
    assert_eq!(cases[0]["present_organs"], 2);
    assert_eq!(cases[0]["scored_organs"], 0);

    let (s, meta) = call_json(&app, "GET", "/api/cases/case01/meta", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(meta["dims"], json!([6, 5, 4]));
    assert_eq!(meta["slices"], json!({"axial": 4, "coronal": 5, "sagittal": 6}));
    assert_eq!(meta["palette"].as_array().unwrap().len(), 17);

    let (s, organs) = call_json(&app, "GET", "/api/cases/case01/organs", None).await;
    assert_eq!(s, StatusCode::OK);
    let liver = organs
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["organ"] == "liver")
        .unwrap();
    assert_eq!(
        (liver["present"].clone(), liver["voxels"].clone()),
        (json!(true), json!(8))
    );
}

#[tokio::test]
async fn slices_have_view_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for (axis, index, size) in [("axial", 3, (6, 5)), ("coronal", 0, (6, 4)), ("sagittal", 5, (5, 4))] {
        let (s, body) = call(&app, "GET", &format!("/api/cases/case01/slices/{axis}/{index}"), None).await;
        assert_eq!(s, StatusCode::OK, "{axis}");
        assert_eq!(png_size(&body), size, "{axis}");
    }
    let (s, body) = call(
        &app,
        "GET",
        "/api/cases/case01/slices/axial/0?overlays=liver&render=overlay&window=300&level=20",
        None,
    )
    .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(png_size(&body), (6, 5));

    for uri in [
        "/api/cases/nope/slices/axial/0",
        "/api/cases/case01/slices/axial/4",
        "/api/cases/case01/slices/oblique/0",
        "/api/cases/case01/slices/axial/x",
        "/api/cases/nope/meta",
    ] {
        assert_eq!(call(&app, "GET", uri, None).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    for uri in [
        "/api/cases/case01/slices/axial/0?overlays=gallbladder",
        "/api/cases/case01/slices/axial/0?render=fancy",
        "/api/cases/case01/slices/axial/0?window=-5",
    ] {
        assert_eq!(call(&app, "GET", uri, None).await.0, StatusCode::BAD_REQUEST, "{uri}");
    }
}

#[tokio::test]
async fn invalid_scores_are_rejected_without_persisting() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let scores = dir.path().join("scores.jsonl");
    let before = std::fs::read(&scores).unwrap_or_default();
    for body in [
        json!({"rater_id": "r1", "organ": "liver", "score": 6}),
        json!({"rater_id": "r1", "organ": "liver", "score": 0}),
        json!({"rater_id": "r1", "organ": "gallbladder", "score": 3}),
        json!({"rater_id": "r1", "organ": "heart", "score": 3}),
        json!({"rater_id": "", "organ": "liver", "score": 3}),
        json!({"organ": "liver"}),
    ] {
        let (s, err) = call_json(&app, "POST", "/api/cases/case01/scores", Some(body.clone())).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert!(!err["details"].as_array().unwrap().is_empty());
    }
    assert_eq!(std::fs::read(&scores).unwrap_or_default(), before);
    let (s, _) = call_json(
        &app,
        "POST",
        "/api/cases/nope/scores",
        Some(json!({"rater_id": "r1", "organ": "liver", "score": 3})),
    )
    .await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn scores_persist_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    {
        let app = app(dir.path());
        for (rater, organ, score) in [
            ("r1", "liver", 4),
            ("r2", "liver", 5),
            ("r1", "spleen", 2),
            ("r1", "liver", 5),
        ] {
            let (s, rec) = call_json(
                &app,
                "POST",
                "/api/cases/case01/scores",
                Some(json!({"rater_id": rater, "organ": organ, "score": score, "comment": "ok"})),
            )
            .await;
            assert_eq!(s, StatusCode::CREATED);
            assert_eq!(rec["case_id"], "case01");
            assert_eq!(rec["score"], score);
        }
    }
    let lines = std::fs::read_to_string(dir.path().join("scores.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 4);

    // a fresh service replays the log
    let app = app(dir.path());
    let (s, report) = call_json(&app, "GET", "/api/summary/likert", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(report["n_records"], 4);
    let liver = report["summaries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|o| o["organ"] == "liver")
        .unwrap();
    assert_eq!(liver["combined_mean"], 5.0);
    assert_eq!(liver["usability"], "acceptable_minor_mods");
    let (_, cases) = call_json(&app, "GET", "/api/cases", None).await;
    assert_eq!(cases[0]["scored_organs"], 2);
}

#[tokio::test]
async fn placeholder_page_without_static_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (s, body) = call(&app(dir.path()), "GET", "/", None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(String::from_utf8(body).unwrap().contains("/api"));
}
