//! Typed async client for the UniSymNet HTTP service.

use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use unisym_core::api::*;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Api { status: StatusCode, message: String },
}

#[derive(Clone, Debug)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:8080`.
    pub fn new(base: impl Into<String>) -> Client {
        let base = base.into().trim_end_matches('/').to_string();
        Client { base, http: reqwest::Client::new() }
    }

    async fn decode<T: DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp.json().await?);
        }
        let text = resp.text().await?;
        let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
        Err(ClientError::Api { status, message })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().await?).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, ClientError> {
        Self::decode(self.http.post(format!("{}{path}", self.base)).json(body).send().await?).await
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn fit(&self, req: &FitRequest) -> Result<FitResponse, ClientError> {
        self.post("/fit", req).await
    }

    pub async fn bench(&self, req: &BenchRequest) -> Result<BenchResponse, ClientError> {
        self.post("/bench", req).await
    }

    pub async fn theory_check(&self) -> Result<TheoryResponse, ClientError> {
        self.get("/theory-check").await
    }

    pub async fn complexity_compare(&self, req: &ComplexityRequest) -> Result<ComplexityResponse, ClientError> {
        self.post("/complexity-compare", req).await
    }

    pub async fn gen_data(&self, req: &GenDataRequest) -> Result<GenDataResponse, ClientError> {
        self.post("/gen-data", req).await
    }

    pub async fn encode(&self, req: &EncodeRequest) -> Result<EncodeResponse, ClientError> {
        self.post("/encode", req).await
    }
}
