//! HTTP/JSON front end of the engine. Every handler runs its computation on
//! the blocking pool, so long fits never stall the reactor.

use axum::extract::rejection::JsonRejection;
use axum::extract::FromRequest;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use std::path::PathBuf;
use unisym_core::api::*;
use unisym_core::bench::{
    complexity_experiment, fit_dataset, nondecreasing_steps, run_suite, select_problems, theory_check, BenchError,
};
use unisym_core::codec::encode;
use unisym_core::datagen::{export_corpus, GenConfig};
use unisym_core::expr::parse;
use unisym_core::labeler::identify_structure;
use unisym_core::netcore::{skeleton, L_MAX_LARGE, M_LARGE, M_SMALL};

/// An error rendered as `{"error": ...}` with a status code.
#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl ApiError {
    fn bad(msg: impl ToString) -> ApiError {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.to_string())
    }

    fn internal(msg: impl ToString) -> ApiError {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, msg.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, axum::Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> ApiError {
        ApiError(r.status(), r.body_text())
    }
}

/// `axum::Json` whose rejections use the JSON error body.
#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
pub struct Json<T>(pub T);

impl<T: serde::Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?.map(Json)
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into() })
}

async fn fit(Json(req): Json<FitRequest>) -> ApiResult<FitResponse> {
    blocking(move || {
        let outcome = fit_dataset(&req.data, &req.config).map_err(ApiError::bad)?;
        Ok(FitResponse { pretty: outcome.expr.pretty(), complexity: outcome.expr.complexity(), outcome })
    })
    .await
}

async fn bench(Json(req): Json<BenchRequest>) -> ApiResult<BenchResponse> {
    blocking(move || {
        let problems = match (req.problems, req.suite) {
            (Some(ps), _) => ps,
            (None, Some(s)) => select_problems(&s, &req.noise).map_err(ApiError::bad)?,
            (None, None) => return Err(ApiError::bad("give a suite name or a problem list")),
        };
        let summary = run_suite(&problems, &req.config).map_err(|e| match e {
            BenchError::Problem { .. } => ApiError::internal(e),
            e => ApiError::bad(e),
        })?;
        let mut csv = Vec::new();
        summary.write_csv(&mut csv).map_err(ApiError::internal)?;
        Ok(BenchResponse {
            markdown: summary.to_markdown(),
            csv: String::from_utf8(csv).map_err(ApiError::internal)?,
            summary,
        })
    })
    .await
}

async fn theory() -> ApiResult<TheoryResponse> {
    blocking(|| {
        let report = theory_check().map_err(ApiError::internal)?;
        Ok(TheoryResponse { pass: report.pass(), failures: report.failures(), report })
    })
    .await
}

async fn complexity(Json(req): Json<ComplexityRequest>) -> ApiResult<ComplexityResponse> {
    if req.count == 0 || req.dims.is_empty() || req.dims.contains(&0) {
        return Err(ApiError::bad("count must be at least 1 and dims nonempty and positive"));
    }
    if req.dims.iter().any(|&d| d > 10) {
        return Err(ApiError::bad("dimensions above 10 exceed the generator presets"));
    }
    blocking(move || {
        let rows = complexity_experiment(&req.dims, req.count, req.generator.as_ref(), req.seed);
        let (ok, steps) = nondecreasing_steps(&rows);
        Ok(ComplexityResponse {
            net_not_worse: rows.iter().all(|r| r.mean_c_net <= r.mean_c_tree),
            nondecreasing_steps: ok,
            steps,
            rows,
        })
    })
    .await
}

async fn gen_data(Json(req): Json<GenDataRequest>) -> ApiResult<GenDataResponse> {
    blocking(move || {
        let cfg = match req.preset {
            DimPreset::Small => GenConfig::small(req.seed),
            DimPreset::Large => GenConfig::large(req.seed),
        };
        let summary =
            export_corpus(req.count, req.shard_size, &cfg, &PathBuf::from(&req.out)).map_err(ApiError::bad)?;
        Ok(GenDataResponse { summary })
    })
    .await
}

async fn encode_expr(Json(req): Json<EncodeRequest>) -> ApiResult<EncodeResponse> {
    let e = parse(&req.expr).map_err(ApiError::bad)?;
    let d0 = req.d0.unwrap_or(e.arity()).max(1);
    let m = req.m.unwrap_or(if d0 <= 4 { M_SMALL } else { M_LARGE });
    let s = identify_structure(&e, m, d0).map_err(ApiError::bad)?;
    let label = encode(&s, L_MAX_LARGE).map_err(ApiError::bad)?;
    let skel = skeleton(&s).map_err(ApiError::bad)?;
    Ok(Json(EncodeResponse { text: label.to_string(), depth: s.depth(), label, skeleton: skel, m, d0 }))
}

pub fn app() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/fit", post(fit))
        .route("/bench", post(bench))
        .route("/theory-check", get(theory))
        .route("/complexity-compare", post(complexity))
        .route("/gen-data", post(gen_data))
        .route("/encode", post(encode_expr))
        .layer(tower_http::trace::TraceLayer::new_for_http())
}

/// Serve [`app`] on `listener` until the future `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app()).with_graceful_shutdown(shutdown).await
}
