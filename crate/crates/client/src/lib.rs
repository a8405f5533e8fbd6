//! Typed async client for the review service API.

use oar_evalkit::report::{LikertRecord, ScoreSubmission};
use oar_evalkit::review::{ApiError, CaseListing, CaseMeta, LikertReport, OrganInfo, ViewAxis};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("{status}: {}{}", .body.error, details(&.body.details))]
    Api { status: StatusCode, body: ApiError },
}

fn details(d: &[String]) -> String {
    if d.is_empty() {
        String::new()
    } else {
        format!(" ({})", d.join("; "))
    }
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Rendering options of a slice request; `None` keeps the server default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SliceOptions {
    pub window: Option<f64>,
    pub level: Option<f64>,
    pub overlays: Option<Vec<String>>,
    pub render: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ReviewClient {
    base: String,
    http: reqwest::Client,
}

impl ReviewClient {
    /// `base` like `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> ReviewClient {
        ReviewClient {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn checked(resp: Response) -> Result<Response> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.text().await?;
        let body = serde_json::from_str::<ApiError>(&text).unwrap_or(ApiError {
            error: text,
            details: Vec::new(),
        });
        Err(ClientError::Api { status, body })
    }

    async fn get_json<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        let resp = self.http.get(self.url(path)).send().await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    pub async fn list_cases(&self) -> Result<Vec<CaseListing>> {
        self.get_json("/api/cases").await
    }

    pub async fn case_meta(&self, case_id: &str) -> Result<CaseMeta> {
        self.get_json(&format!("/api/cases/{case_id}/meta")).await
    }

    pub async fn organs(&self, case_id: &str) -> Result<Vec<OrganInfo>> {
        self.get_json(&format!("/api/cases/{case_id}/organs")).await
    }

    /// PNG bytes of one slice.
    pub async fn slice_png(&self, case_id: &str, axis: ViewAxis, index: usize, opts: &SliceOptions) -> Result<Vec<u8>> {
        let mut query: Vec<(&str, String)> = Vec::new();
        if let Some(w) = opts.window {
            query.push(("window", w.to_string()));
        }
        if let Some(l) = opts.level {
            query.push(("level", l.to_string()));
        }
        if let Some(o) = &opts.overlays {
            query.push(("overlays", if o.is_empty() { "none".into() } else { o.join(",") }));
        }
        if let Some(r) = &opts.render {
            query.push(("render", r.clone()));
        }
        let path = format!("/api/cases/{case_id}/slices/{}/{index}", axis.as_str());
        let resp = self.http.get(self.url(&path)).query(&query).send().await?;
        Ok(Self::checked(resp).await?.bytes().await?.to_vec())
    }

    pub async fn submit_score(&self, case_id: &str, score: &ScoreSubmission) -> Result<LikertRecord> {
        let resp = self
            .http
            .post(self.url(&format!("/api/cases/{case_id}/scores")))
            .json(score)
            .send()
            .await?;
        Ok(Self::checked(resp).await?.json().await?)
    }

    pub async fn likert_summary(&self) -> Result<LikertReport> {
        self.get_json("/api/summary/likert").await
    }
}
