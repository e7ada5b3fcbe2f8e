//! Benchmark corpus, fit pipeline, suite summaries, the theory sweep and the
//! tree-versus-network complexity experiment.

mod complexity;
mod pipeline;
mod problems;
mod roundtrip;
mod theory;

pub use complexity::{complexity_experiment, net_cost, nondecreasing_steps, preset_for, tree_cost, ComplexityRow};
pub use pipeline::{
    fit_dataset, run_problem, tidy, FitOutcome, FitReport, Method, PipelineConfig, PipelineError, ProposerSpec,
};
pub use problems::{problem, standard_problems, suite, BenchmarkProblem, NOISE_LEVELS};
pub use roundtrip::{labeler_round_trip, RoundTripFailure, RoundTripReport, START_JITTER};
pub use theory::{sweep_exponents, theory_check, TheoryReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("none of the noise levels {requested:?} is one of {allowed:?}")]
    NoNoiseLevels { requested: Vec<f64>, allowed: Vec<f64> },
    #[error("suite is empty")]
    EmptySuite,
    #[error("{problem}: {source}")]
    Problem { problem: String, source: PipelineError },
}

/// Problems of `suite_name` at every requested noise level that is supported.
pub fn select_problems(suite_name: &str, noise: &[f64]) -> Result<Vec<BenchmarkProblem>, BenchError> {
    let base = suite(suite_name);
    if base.is_empty() {
        return Err(BenchError::UnknownSuite(suite_name.into()));
    }
    let levels: Vec<f64> = noise.iter().copied().filter(|n| NOISE_LEVELS.contains(n)).collect();
    if levels.is_empty() {
        return Err(BenchError::NoNoiseLevels { requested: noise.to_vec(), allowed: NOISE_LEVELS.to_vec() });
    }
    Ok(levels.iter().flat_map(|&n| base.iter().map(move |p| p.with_noise(n))).collect())
}

/// Aggregates over one family at one noise level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub family: String,
    pub noise: f64,
    pub problems: usize,
    pub mean_r2: f64,
    /// Fraction with test R² above 0.99.
    pub accuracy_rate: f64,
    pub mean_complexity: f64,
    pub solution_rate: f64,
    pub truth_complexity: f64,
    pub incomplete: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
    pub reports: Vec<FitReport>,
}

fn summarize(family: &str, noise: f64, rs: &[&FitReport]) -> SuiteRow {
    let n = rs.len() as f64;
    let r2: Vec<f64> = rs.iter().map(|r| r.test_r2.unwrap_or(f64::NEG_INFINITY)).collect();
    SuiteRow {
        family: family.into(),
        noise,
        problems: rs.len(),
        mean_r2: r2.iter().sum::<f64>() / n,
        accuracy_rate: r2.iter().filter(|v| **v > 0.99).count() as f64 / n,
        mean_complexity: rs.iter().map(|r| r.complexity as f64).sum::<f64>() / n,
        solution_rate: rs.iter().filter(|r| r.solved()).count() as f64 / n,
        truth_complexity: rs.iter().map(|r| r.truth.complexity() as f64).sum::<f64>() / n,
        incomplete: rs.iter().filter(|r| r.incomplete).count(),
    }
}

/// Run every problem independently and aggregate per family and noise level.
pub fn run_suite(problems: &[BenchmarkProblem], cfg: &PipelineConfig) -> Result<SuiteSummary, BenchError> {
    if problems.is_empty() {
        return Err(BenchError::EmptySuite);
    }
    let reports = problems
        .par_iter()
        .map(|p| run_problem(p, cfg).map_err(|source| BenchError::Problem { problem: p.name.clone(), source }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<(String, u64), Vec<&FitReport>> = BTreeMap::new();
    for r in &reports {
        groups.entry((r.family.clone(), r.noise.to_bits())).or_default().push(r);
    }
    let rows = groups.iter().map(|((f, n), rs)| summarize(f, f64::from_bits(*n), rs)).collect();
    Ok(SuiteSummary { rows, reports })
}

impl SuiteSummary {
    pub fn write_csv(&self, w: impl std::io::Write) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Summary table followed by one line per problem with its ranges.
    pub fn to_markdown(&self) -> String {
        let mut s = String::from(
            "| family | noise | n | mean R² | Acc | Com | solution rate | truth Com | incomplete |\n|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            s += &format!(
                "| {} | {} | {} | {:.4} | {:.4} | {:.2} | {:.4} | {:.2} | {} |\n",
                r.family,
                r.noise,
                r.problems,
                r.mean_r2,
                r.accuracy_rate,
                r.mean_complexity,
                r.solution_rate,
                r.truth_complexity,
                r.incomplete
            );
        }
        s += "\n| problem | noise | expression | test R² | solved | Com | ranges | time (s) |\n|---|---|---|---|---|---|---|---|\n";
        for r in &self.reports {
            let ranges: Vec<String> = r.train_intervals.iter().map(|i| format!("[{}, {}]", i.lo, i.hi)).collect();
            s += &format!(
                "| {} | {} | `{}` | {} | {} | {} | {} | {:.2} |\n",
                r.problem,
                r.noise,
                r.expr.pretty(),
                r.test_r2.map_or("n/a".into(), |v| format!("{v:.6}")),
                if r.solved() { "yes" } else { "no" },
                r.complexity,
                ranges.join(" "),
                r.wall_s
            );
        }
        s
    }
}
