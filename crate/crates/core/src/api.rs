//! JSON request and response bodies shared by the HTTP service and its client.

use crate::bench::{BenchmarkProblem, ComplexityRow, FitOutcome, PipelineConfig, SuiteSummary, TheoryReport};
use crate::codec::SequenceLabel;
use crate::data::Dataset;
use crate::datagen::{ExportSummary, GenConfig};
use crate::expr::Expr;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRequest {
    pub data: Dataset,
    #[serde(default)]
    pub config: PipelineConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResponse {
    pub outcome: FitOutcome,
    /// Simplified rendering of `outcome.expr`.
    pub pretty: String,
    pub complexity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRequest {
    /// Family name or `all`; ignored when `problems` is given.
    #[serde(default)]
    pub suite: Option<String>,
    /// Explicit problems, e.g. with custom sampling ranges.
    #[serde(default)]
    pub problems: Option<Vec<BenchmarkProblem>>,
    #[serde(default = "zero_noise")]
    pub noise: Vec<f64>,
    #[serde(default)]
    pub config: PipelineConfig,
}

fn zero_noise() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResponse {
    pub summary: SuiteSummary,
    pub markdown: String,
    pub csv: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryResponse {
    pub pass: bool,
    pub failures: Vec<String>,
    pub report: TheoryReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRequest {
    pub dims: Vec<usize>,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    /// Operator frequencies; dimension settings are chosen per `d`.
    #[serde(default)]
    pub generator: Option<GenConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityResponse {
    pub rows: Vec<ComplexityRow>,
    /// Every row has mean network complexity at most the tree complexity.
    pub net_not_worse: bool,
    /// Steps on which the gap did not shrink, out of `steps`.
    pub nondecreasing_steps: usize,
    pub steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimPreset {
    Small,
    Large,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenDataRequest {
    pub preset: DimPreset,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shard")]
    pub shard_size: usize,
    /// Directory on the server's filesystem.
    pub out: String,
}

fn default_shard() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenDataResponse {
    pub summary: ExportSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeRequest {
    pub expr: String,
    /// Input dimension; defaults to the highest variable index plus one.
    #[serde(default)]
    pub d0: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodeResponse {
    pub label: SequenceLabel,
    /// Space-separated tokens.
    pub text: String,
    pub depth: usize,
    pub skeleton: Expr,
    pub m: usize,
    pub d0: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
