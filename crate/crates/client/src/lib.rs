//! Thin async client for the vizkb HTTP service.

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use vizkb_core::api::*;
use vizkb_core::augment::{CoverageReport, DependencyGraph};
use vizkb_core::evaluate::{CosineMatrix, WeightShift};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Api { status: StatusCode, message: String },
    #[error("bad base url `{0}`")]
    BaseUrl(String),
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            ClientError::Transport(e) => e.status(),
            ClientError::BaseUrl(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    /// `base` is the server root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Result<Self, ClientError> {
        Self::with_http(base, reqwest::Client::new())
    }

    pub fn with_http(base: impl Into<String>, http: reqwest::Client) -> Result<Self, ClientError> {
        let base = base.into().trim_end_matches('/').to_string();
        if !(base.starts_with("http://") || base.starts_with("https://")) {
            return Err(ClientError::BaseUrl(base));
        }
        Ok(Self { http, base })
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn send<B: Serialize + ?Sized, T: DeserializeOwned>(
        &self,
        method: Method,
        url: String,
        body: Option<&B>,
    ) -> Result<T, ClientError> {
        let mut req = self.http.request(method, url);
        if let Some(b) = body {
            req = req.json(b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let message = serde_json::from_str::<ErrorBody>(&text).map(|e| e.error).unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        self.send::<(), T>(Method::GET, format!("{}{path}", self.base), None).await
    }

    async fn post<B: Serialize + ?Sized, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        self.send(Method::POST, format!("{}{path}", self.base), Some(body)).await
    }

    pub async fn health(&self) -> Result<(), ClientError> {
        let resp = self.http.get(format!("{}/api/health", self.base)).send().await?;
        resp.error_for_status()?;
        Ok(())
    }

    pub async fn session(&self) -> Result<SessionView, ClientError> {
        self.get("/api/session").await
    }

    /// While the server retrains this is an `Api` error with status 503.
    pub async fn next_pair(&self) -> Result<NextResponse, ClientError> {
        self.get("/api/session/next").await
    }

    pub async fn label(&self, req: &LabelRequest) -> Result<LabelResponse, ClientError> {
        self.post("/api/session/label", req).await
    }

    pub async fn pair(&self, id: &str) -> Result<PairDetail, ClientError> {
        let bad = || ClientError::BaseUrl(self.base.clone());
        let mut url = reqwest::Url::parse(&format!("{}/api/pairs/", self.base)).map_err(|_| bad())?;
        // pushing a segment percent-encodes the id
        url.path_segments_mut().map_err(|_| bad())?.pop_if_empty().push(id);
        self.send::<(), _>(Method::GET, url.into(), None).await
    }

    pub async fn accuracy_report(&self) -> Result<AccuracyReport, ClientError> {
        self.get("/api/report/accuracy").await
    }

    pub async fn validate(&self, req: &SpecRequest) -> Result<ValidateResponse, ClientError> {
        self.post("/api/ops/validate", req).await
    }

    pub async fn features(&self, req: &SpecRequest) -> Result<FeaturesResponse, ClientError> {
        self.post("/api/ops/features", req).await
    }

    pub async fn cost(&self, req: &SpecRequest) -> Result<CostResponse, ClientError> {
        self.post("/api/ops/cost", req).await
    }

    pub async fn enumerate(&self, req: &EnumerateRequest) -> Result<DesignsResponse, ClientError> {
        self.post("/api/ops/enumerate", req).await
    }

    pub async fn augment_primitive(&self, req: &PrimitiveAugmentRequest) -> Result<PairsResponse, ClientError> {
        self.post("/api/ops/augment/primitive", req).await
    }

    pub async fn augment_feature(&self, req: &FeatureAugmentRequest) -> Result<FeatureAugmentResponse, ClientError> {
        self.post("/api/ops/augment/feature", req).await
    }

    pub async fn augment_seed(&self, req: &SeedAugmentRequest) -> Result<PairsResponse, ClientError> {
        self.post("/api/ops/augment/seed", req).await
    }

    pub async fn coverage(&self, req: &CoverageRequest) -> Result<CoverageReport, ClientError> {
        self.post("/api/ops/coverage", req).await
    }

    pub async fn deps(&self, req: &DepsRequest) -> Result<DependencyGraph, ClientError> {
        self.post("/api/ops/deps", req).await
    }

    pub async fn classify(&self, req: &ClassifyRequest) -> Result<ClassifyResponse, ClientError> {
        self.post("/api/ops/label/classify", req).await
    }

    pub async fn llm_label(&self, req: &LlmRequest) -> Result<LlmResponse, ClientError> {
        self.post("/api/ops/label/llm", req).await
    }

    pub async fn import_labels(&self, req: &ImportRequest) -> Result<ImportResponse, ClientError> {
        self.post("/api/ops/labels/import", req).await
    }

    pub async fn export_labels(&self) -> Result<ExportResponse, ClientError> {
        self.get("/api/ops/labels/export").await
    }

    pub async fn train(&self, req: &TrainRequest) -> Result<TrainResponse, ClientError> {
        self.post("/api/ops/train", req).await
    }

    pub async fn cv(&self, req: &CvRequest) -> Result<CvResponse, ClientError> {
        self.post("/api/ops/cv", req).await
    }

    pub async fn eval(&self, req: &EvalRequest) -> Result<EvalResponse, ClientError> {
        self.post("/api/ops/eval", req).await
    }

    pub async fn weight_shift(&self, req: &ShiftRequest) -> Result<Vec<WeightShift>, ClientError> {
        self.post("/api/ops/report/shift", req).await
    }

    pub async fn cosine(&self, req: &CosineRequest) -> Result<CosineMatrix, ClientError> {
        self.post("/api/ops/report/cosine", req).await
    }
}
