//! End-to-end fitting: propose structures, optimize each, keep the best.

use super::problems::BenchmarkProblem;
use crate::codec::SequenceLabel;
use crate::data::{Dataset, Interval};
use crate::expr::{canonicalize, extrapolation_eval, is_symbolic_solution, r2_score, BinOp, Expr, Verdict};
use crate::netcore::{skeleton, skeleton_with_bindings, MaskSet, Structure};
use crate::proposer::{
    usable, Candidate, Endpoint, EnumProposer, ProposeError, Proposer, RandomProposer, RemoteProposer,
};
use crate::skopt::{is_linear, optimize_skeleton, PolicyConfig, SkoptConfig, EXPONENTS_MAIN};
use crate::train::{fit_network, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Propose(#[from] ProposeError),
    #[error("bad endpoint: {0}")]
    Endpoint(String),
    #[error("invalid config: {0}")]
    Config(String),
}

/// Inner optimization strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Exponent search plus constant fitting on the skeleton (method 1).
    Symbolic,
    /// Gradient training of the masked network (method 2).
    NetworkPruned,
    /// Gradient training of every entry of the architecture (method 3).
    NetworkUnpruned,
}

impl Method {
    pub fn from_number(n: u8) -> Option<Method> {
        match n {
            1 => Some(Method::Symbolic),
            2 => Some(Method::NetworkPruned),
            3 => Some(Method::NetworkUnpruned),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Symbolic => "skopt",
            Method::NetworkPruned => "network-pruned",
            Method::NetworkUnpruned => "network-unpruned",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProposerSpec {
    Enum,
    Random { seed: u64 },
    Remote { endpoint: String },
}

impl ProposerSpec {
    pub fn build(&self) -> Result<Box<dyn Proposer>, PipelineError> {
        Ok(match self {
            ProposerSpec::Enum => Box::new(EnumProposer::default()),
            ProposerSpec::Random { seed } => Box::new(RandomProposer::new(*seed)),
            ProposerSpec::Remote { endpoint } => {
                let ep: Endpoint = endpoint.parse().map_err(|e| PipelineError::Endpoint(format!("{e}")))?;
                Box::new(RemoteProposer::new(ep, crate::netcore::M_SMALL))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub method: Method,
    pub proposer: ProposerSpec,
    /// Candidate structures requested from the proposer.
    pub candidates: usize,
    pub seed: u64,
    /// Wall-clock budget per fit, in seconds.
    pub time_budget_s: f64,
    /// Exponent values searched by the symbolic method.
    pub exponent_values: Vec<f64>,
    /// Full-search settings; `seed` is overridden per candidate.
    pub skopt: SkoptConfig,
    /// Fits tried per nonlinear skeleton during screening.
    pub screen_budget: usize,
    pub screen_restarts: usize,
    /// Screened nonlinear skeletons that get the full search.
    pub refine: usize,
    /// Stop once a linear skeleton reaches this training R².
    pub stop_r2: f64,
    pub train: TrainConfig,
    /// Extrapolation widens every training interval by this fraction of its width.
    pub extrapolation_margin: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut values = EXPONENTS_MAIN.to_vec();
        values.extend([4.0, 5.0, 6.0]);
        PipelineConfig {
            method: Method::Symbolic,
            proposer: ProposerSpec::Enum,
            candidates: 400,
            seed: 0,
            time_budget_s: 60.0,
            exponent_values: values,
            skopt: SkoptConfig { budget: 2048, restarts: 4, ..SkoptConfig::default() },
            screen_budget: 32,
            screen_restarts: 2,
            refine: 5,
            stop_r2: 1.0 - 1e-12,
            train: TrainConfig { epochs: Some(300), lr: 0.02, momentum: 0.9, batch_size: 32, ..TrainConfig::default() },
            extrapolation_margin: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.candidates == 0 {
            return Err(PipelineError::Config("candidates must be at least 1".into()));
        }
        if !(self.time_budget_s > 0.0) {
            return Err(PipelineError::Config("time budget must be positive".into()));
        }
        if self.exponent_values.is_empty() || self.skopt.budget == 0 || self.screen_budget == 0 {
            return Err(PipelineError::Config("exponent values and budgets must be nonempty".into()));
        }
        self.train.validate().map_err(PipelineError::Config)
    }

    fn skopt_for(&self, budget: usize, restarts: usize, seed: u64) -> SkoptConfig {
        SkoptConfig {
            policy: PolicyConfig { values: self.exponent_values.clone(), ..self.skopt.policy.clone() },
            budget,
            restarts,
            seed,
            ..self.skopt.clone()
        }
    }
}

/// Best model found for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub expr: Expr,
    pub label: Option<SequenceLabel>,
    /// The skeleton the winning candidate was fitted through.
    pub skeleton: Option<Expr>,
    pub train_r2: Option<f64>,
    pub train_mse: f64,
    pub candidates_tried: usize,
    /// The budget ran out before every candidate was tried.
    pub incomplete: bool,
    /// Targets are constant, so no structure is needed or fitted.
    pub degenerate: bool,
    pub proposer: String,
    pub optimizer: String,
    pub wall_s: f64,
}

#[derive(Clone, Debug)]
struct Scored {
    expr: Expr,
    mse: f64,
    label: SequenceLabel,
    skeleton: Expr,
    rank: usize,
    /// Constants came from a direct least-squares solve, so a perfect training
    /// fit is trustworthy rather than a flexible curve bending onto the points.
    linear: bool,
}

fn mse_of(e: &Expr, data: &Dataset) -> f64 {
    let mut s = 0.0;
    for r in 0..data.n() {
        match e.evaluate(data.row(r)) {
            Some(v) => s += (v - data.y()[r]).powi(2),
            None => return f64::INFINITY,
        }
    }
    s / data.n() as f64
}

fn r2_from_mse(mse: f64, data: &Dataset) -> f64 {
    1.0 - mse / data.y_variance()
}

/// Lower MSE wins; near ties go to the simpler expression.
fn better(a: &Scored, b: &Scored) -> bool {
    let tol = 1e-9 * a.mse.abs().max(b.mse.abs()).max(1e-300);
    if (a.mse - b.mse).abs() <= tol {
        (a.expr.complexity(), a.rank) < (b.expr.complexity(), b.rank)
    } else {
        a.mse < b.mse
    }
}

/// Fit `data` with the configured proposer and inner method.
pub fn fit_dataset(data: &Dataset, cfg: &PipelineConfig) -> Result<FitOutcome, PipelineError> {
    cfg.validate()?;
    let start = Instant::now();
    let proposer = cfg.proposer.build()?;
    let optimizer = cfg.method.name().to_string();
    let mean = data.y().iter().sum::<f64>() / data.n() as f64;
    if data.y_variance() == 0.0 {
        return Ok(FitOutcome {
            expr: Expr::Const(mean),
            label: None,
            skeleton: None,
            train_r2: None,
            train_mse: 0.0,
            candidates_tried: 0,
            incomplete: false,
            degenerate: true,
            proposer: proposer.name(),
            optimizer,
            wall_s: start.elapsed().as_secs_f64(),
        });
    }
    let set = proposer.propose(data, cfg.candidates)?;
    let m = proposer.replicas();
    let deadline = |t: &Instant| t.elapsed().as_secs_f64() >= cfg.time_budget_s;
    let mut best: Option<Scored> = None;
    let mut screened: Vec<(Scored, usize)> = Vec::new();
    let mut tried = 0;
    let mut incomplete = false;
    let done = |b: &Option<Scored>| b.as_ref().is_some_and(|s| s.linear && r2_from_mse(s.mse, data) >= cfg.stop_r2);
    let offer = |s: Scored, best: &mut Option<Scored>| {
        if best.as_ref().is_none_or(|b| better(&s, b)) {
            *best = Some(s);
        }
    };

    for (rank, cand) in set.candidates.iter().enumerate() {
        if done(&best) {
            break;
        }
        if deadline(&start) {
            incomplete = true;
            break;
        }
        let Ok(s) = usable(&cand.label, m, data.dim()) else { continue };
        tried += 1;
        let seed = cfg.seed.wrapping_add(rank as u64);
        match cfg.method {
            Method::Symbolic => {
                let skel = skeleton(&s).expect("usable labels have skeletons");
                let linear = is_linear(&skel);
                let sk = if linear {
                    cfg.skopt_for(cfg.skopt.budget, cfg.skopt.restarts, seed)
                } else {
                    cfg.skopt_for(cfg.screen_budget, cfg.screen_restarts, seed)
                };
                let Some(sc) = symbolic(&skel, data, &sk, cand, rank) else { continue };
                if !linear {
                    screened.push((sc.clone(), rank));
                }
                offer(sc, &mut best);
            }
            Method::NetworkPruned | Method::NetworkUnpruned => {
                if let Some(sc) = network(&s, data, cfg, cand, rank, seed) {
                    offer(sc, &mut best);
                }
            }
        }
    }

    // Full search for the most promising nonlinear skeletons.
    if cfg.method == Method::Symbolic && !done(&best) {
        screened.sort_by(|a, b| a.0.mse.total_cmp(&b.0.mse));
        for (sc, rank) in screened.into_iter().take(cfg.refine) {
            if deadline(&start) {
                incomplete = true;
                break;
            }
            let sk = cfg.skopt_for(cfg.skopt.budget, cfg.skopt.restarts, cfg.seed.wrapping_add(rank as u64));
            let cand = Candidate { label: sc.label.clone(), score: 0.0, provenance: String::new() };
            if let Some(full) = symbolic(&sc.skeleton, data, &sk, &cand, rank) {
                offer(full, &mut best);
            }
        }
    }

    let Some(best) = best else {
        return Err(ProposeError::Exhausted(format!("none of {} candidates could be fitted", set.len())).into());
    };
    let expr = tidy(&best.expr, data);
    let train_mse = mse_of(&expr, data);
    Ok(FitOutcome {
        train_r2: Some(r2_from_mse(train_mse, data)),
        train_mse,
        expr,
        label: Some(best.label),
        skeleton: Some(best.skeleton),
        candidates_tried: tried,
        incomplete,
        degenerate: false,
        proposer: proposer.name(),
        optimizer,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

fn symbolic(skel: &Expr, data: &Dataset, sk: &SkoptConfig, cand: &Candidate, rank: usize) -> Option<Scored> {
    let r = optimize_skeleton(skel, data, sk).ok()?;
    r.best.mse.is_finite().then(|| Scored {
        expr: r.best.expr,
        mse: r.best.mse,
        label: cand.label.clone(),
        skeleton: skel.clone(),
        rank,
        linear: is_linear(skel),
    })
}

fn network(
    s: &Structure,
    data: &Dataset,
    cfg: &PipelineConfig,
    cand: &Candidate,
    rank: usize,
    seed: u64,
) -> Option<Scored> {
    let pruned = cfg.method == Method::NetworkPruned;
    let tc = TrainConfig { prune: pruned, ..cfg.train.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = fit_network(s, data, &tc, &mut rng);
    let skel = skeleton_with_bindings(s).ok()?;
    let expr = if pruned {
        skel.instantiate(&res.params)
    } else {
        let full = Structure::new(s.arch.clone(), MaskSet::full(&s.arch)).ok()?;
        skeleton_with_bindings(&full).ok()?.instantiate(&res.params)
    };
    let mse = mse_of(&expr, data);
    mse.is_finite().then(|| Scored { expr, mse, label: cand.label.clone(), skeleton: skel.expr, rank, linear: false })
}

fn additive_terms(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            additive_terms(a, out);
            additive_terms(b, out);
        }
        t => out.push(t.clone()),
    }
}

fn snap_consts(e: &Expr) -> Expr {
    e.map_leaves(&mut |leaf| match leaf {
        Expr::Const(c) if (c - c.round()).abs() <= 1e-6 * c.abs().max(1.0) => Some(Expr::Const(c.round())),
        _ => None,
    })
}

/// Simplify a fitted expression without losing accuracy: snap near-integer
/// constants and drop additive terms whose removal leaves the fit unchanged.
pub fn tidy(e: &Expr, data: &Dataset) -> Expr {
    let var = data.y_variance();
    let base = mse_of(e, data);
    let slack = 1e-10 * var + base * 1e-6;
    let keep = |cand: &Expr| mse_of(cand, data) <= base + slack;
    let mut cur = canonicalize(e);
    let snapped = canonicalize(&snap_consts(&cur));
    if keep(&snapped) {
        cur = snapped;
    }
    loop {
        let mut terms = Vec::new();
        additive_terms(&cur, &mut terms);
        if terms.len() < 2 {
            break;
        }
        let dropped = (0..terms.len()).find_map(|i| {
            let rest = terms.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t.clone()).reduce(Expr::add)?;
            let rest = canonicalize(&rest);
            keep(&rest).then_some(rest)
        });
        match dropped {
            Some(next) => cur = next,
            None => break,
        }
    }
    cur
}

/// Outcome of one benchmark problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub problem: String,
    pub family: String,
    pub noise: f64,
    pub truth: Expr,
    pub expr: Expr,
    pub label: Option<SequenceLabel>,
    pub skeleton: Option<Expr>,
    pub train_r2: Option<f64>,
    pub test_r2: Option<f64>,
    pub complexity: usize,
    pub verdict: Verdict,
    pub extrapolation_r2: Option<f64>,
    pub wall_s: f64,
    pub proposer: String,
    pub optimizer: String,
    pub seed: u64,
    pub train_intervals: Vec<Interval>,
    pub test_intervals: Vec<Interval>,
    pub candidates_tried: usize,
    pub incomplete: bool,
    pub degenerate: bool,
}

impl FitReport {
    pub fn solved(&self) -> bool {
        self.verdict.is_solution()
    }
}

/// Sample `p`, fit it and score the result on held-out and widened ranges.
pub fn run_problem(p: &BenchmarkProblem, cfg: &PipelineConfig) -> Result<FitReport, PipelineError> {
    let (train, test) = p.sample(cfg.seed);
    let fit = fit_dataset(&train, cfg)?;
    let yhat: Vec<f64> = (0..test.n()).map(|r| fit.expr.evaluate(test.row(r)).unwrap_or(f64::NAN)).collect();
    let test_r2 = r2_score(&yhat, test.y()).ok();
    let verdict = if fit.degenerate { Verdict::No } else { is_symbolic_solution(&fit.expr, &p.truth, &test) };
    let margin = cfg.extrapolation_margin * p.train.iter().map(Interval::width).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe7a9_0000);
    let extrapolation_r2 = extrapolation_eval(&fit.expr, &p.train, margin, &p.truth, 100, &mut rng).ok();
    Ok(FitReport {
        problem: p.name.clone(),
        family: p.family(),
        noise: p.noise,
        truth: p.truth.clone(),
        complexity: fit.expr.complexity(),
        expr: fit.expr,
        label: fit.label,
        skeleton: fit.skeleton,
        train_r2: fit.train_r2,
        test_r2,
        verdict,
        extrapolation_r2,
        wall_s: fit.wall_s,
        proposer: fit.proposer,
        optimizer: fit.optimizer,
        seed: cfg.seed,
        train_intervals: p.train.clone(),
        test_intervals: p.test.clone(),
        candidates_tried: fit.candidates_tried,
        incomplete: fit.incomplete,
        degenerate: fit.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::problems::problem;
    use crate::expr::parse;

    #[test]
    fn method_numbers() {
        assert_eq!(Method::from_number(2), Some(Method::NetworkPruned));
        assert_eq!(Method::from_number(4), None);
    }

    #[test]
    fn tidy_snaps_and_drops() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| r[0].powi(2) + r[0]).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let e = parse("1.0000000001 * x0^2 + 0.9999999999 * x0 + 1e-14").unwrap();
        assert_eq!(tidy(&e, &d), canonicalize(&parse("x0^2 + x0").unwrap()));
        let off = parse("x0^2 + 1.3 * x0").unwrap();
        assert_eq!(tidy(&off, &d), canonicalize(&off));
    }

    #[test]
    fn constant_truth_is_flagged() {
        let p = BenchmarkProblem { truth: parse("3").unwrap(), ..problem("Nguyen-1").unwrap() };
        let r = run_problem(&p, &PipelineConfig::default()).unwrap();
        assert!(r.degenerate && !r.solved());
        assert_eq!(r.expr, Expr::Const(3.0));
        assert_eq!(r.test_r2, None);
    }

    #[test]
    fn nguyen1_is_recovered() {
        let r = run_problem(&problem("Nguyen-1").unwrap(), &PipelineConfig::default()).unwrap();
        assert!(r.solved(), "{} via {:?}", r.expr, r.skeleton);
        assert!(r.test_r2.unwrap() > 0.999);
        assert!(!r.incomplete);
    }

    #[test]
    fn network_methods_share_the_symbolic_skeleton() {
        let p = problem("Nguyen-1").unwrap();
        let base = PipelineConfig { candidates: 3, ..PipelineConfig::default() };
        let (train, _) = p.sample(0);
        let a = fit_dataset(&train, &base).unwrap();
        let b = fit_dataset(&train, &PipelineConfig { method: Method::NetworkPruned, ..base.clone() }).unwrap();
        let c = fit_dataset(&train, &PipelineConfig { method: Method::NetworkUnpruned, ..base }).unwrap();
        assert_eq!(a.label, b.label);
        assert_eq!(a.skeleton, b.skeleton);
        assert!(b.train_r2.unwrap().is_finite() && c.train_r2.unwrap().is_finite());
    }
}
