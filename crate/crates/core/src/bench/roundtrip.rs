//! Identification round trip: generated function → structure → skeleton →
//! fitted constants → symbolic-solution check against the function.

use crate::data::Dataset;
use crate::datagen::{sample_instance, GenConfig, Rejections};
use crate::expr::{is_symbolic_solution, Expr};
use crate::labeler::{identify_with_params, LabelConfig};
use crate::netcore::skeleton_with_bindings;
use crate::skopt::fit_constants_from;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripFailure {
    pub expr: Expr,
    pub skeleton: Option<Expr>,
    pub cause: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTripReport {
    pub total: usize,
    pub recovered: usize,
    /// Recovered without starting from the identified constants.
    pub perturbed: usize,
    pub failures: Vec<RoundTripFailure>,
    pub rejections: Rejections,
}

impl RoundTripReport {
    pub fn rate(&self) -> f64 {
        self.recovered as f64 / self.total.max(1) as f64
    }

    pub fn perturbed_rate(&self) -> f64 {
        self.perturbed as f64 / self.total.max(1) as f64
    }
}

/// Relative spread of the perturbed starting constants.
pub const START_JITTER: f64 = 0.1;
/// Independent perturbed starts per function.
pub const JITTERED_STARTS: usize = 3;

/// Rows where the generating function was undefined hold zeros, not samples.
fn defined_rows(data: &Dataset, zeroed: &[usize]) -> Dataset {
    let keep: Vec<usize> = (0..data.n()).filter(|r| zeroed.binary_search(r).is_err()).collect();
    let x = keep.iter().flat_map(|&r| data.row(r).to_vec()).collect();
    let y = keep.iter().map(|&r| data.y()[r]).collect();
    Dataset::new(data.dim(), x, y, data.intervals().to_vec()).expect("subset of a valid dataset")
}

/// Run the round trip on `count` functions drawn with `cfg`. Exponent slots
/// take the values identification assigns them. Constants are refitted by
/// BFGS from the identified values scaled by `1 + START_JITTER·N(0,1)` (several
/// draws) and from all ones. If that fails, one more fit starts from the
/// identified constants themselves, which shows the skeleton can express `f`.
pub fn labeler_round_trip(cfg: &GenConfig, count: usize) -> RoundTripReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rejections = Rejections::default();
    let mut failures = Vec::new();
    let mut recovered = 0;
    let mut perturbed = 0;
    for _ in 0..count {
        let s = sample_instance(cfg, &mut rng, &mut rejections);
        let f = &s.function.expr;
        let d = s.function.d;
        let data = defined_rows(&s.data.data.restrict(d), &s.data.zeroed);
        let fail = |skeleton: Option<Expr>, cause: String| RoundTripFailure { expr: f.clone(), skeleton, cause };
        let (st, p) = match identify_with_params(f, LabelConfig { m: cfg.m, d0: d, l_max: cfg.l_max }) {
            Ok(r) => r,
            Err(e) => {
                failures.push(fail(None, format!("identification: {e}")));
                continue;
            }
        };
        let k = match skeleton_with_bindings(&st) {
            Ok(k) => k,
            Err(e) => {
                failures.push(fail(None, format!("skeleton: {e}")));
                continue;
            }
        };
        let (c0, exps) = k.bind(&p);
        let mut starts: Vec<Vec<f64>> = (0..JITTERED_STARTS)
            .map(|_| c0.iter().map(|c| c * (1.0 + START_JITTER * rng.sample::<f64, _>(StandardNormal))).collect())
            .collect();
        starts.push(vec![1.0; c0.len()]);
        let fit = fit_constants_from(&k.expr, &exps, &data, &starts);
        if is_symbolic_solution(&fit.expr, f, &data).is_solution() {
            recovered += 1;
            perturbed += 1;
            continue;
        }
        let exact = fit_constants_from(&k.expr, &exps, &data, &[c0]);
        if is_symbolic_solution(&exact.expr, f, &data).is_solution() {
            recovered += 1;
        } else {
            let cause = format!(
                "fit mse {:.3e} (perturbed) / {:.3e} (identified) is not a symbolic solution",
                fit.mse, exact.mse
            );
            failures.push(fail(Some(k.expr.clone()), cause));
        }
    }
    RoundTripReport { total: count, recovered, perturbed, failures, rejections }
}
