//! Symbolic optimization of a skeleton: discrete exponents chosen by a
//! Gumbel-softmax policy trained with risk-seeking policy gradients, real
//! constants fitted by BFGS.

pub mod bfgs;

use crate::data::Dataset;
use crate::expr::{BinOp, Expr, Tape};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gumbel, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::time::Instant;
use thiserror::Error;

/// The main exponent value set.
pub const EXPONENTS_MAIN: [f64; 8] = [1.0, -1.0, 0.5, -0.5, 2.0, -2.0, 3.0, -3.0];
/// The alternative set listed with the BFGS settings.
pub const EXPONENTS_ALT: [f64; 6] = [-1.0, -2.0, 1.0, 2.0, 3.0, 0.5];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SkoptError {
    #[error("exponent value set is empty")]
    EmptyValueSet,
    #[error("invalid policy config: {0}")]
    Config(String),
}

pub fn reward(mse: f64) -> f64 {
    if mse.is_nan() {
        0.0
    } else {
        1.0 / (1.0 + mse)
    }
}

fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Relaxed sample `softmax((log p + g) / τ)` with Gumbel noise `g`, and its
/// argmax as the hard choice.
pub fn gumbel_softmax_sample(logits: &[f64], tau: f64, rng: &mut impl Rng) -> (Vec<f64>, usize) {
    assert!(tau > 0.0, "temperature must be positive");
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");
    let perturbed: Vec<f64> = log_softmax(logits).iter().map(|lp| (lp + gumbel.sample(rng)) / tau).collect();
    let hard = perturbed.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("nonempty logits");
    (softmax(&perturbed), hard)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub expr: Expr,
    pub consts: Vec<f64>,
    pub mse: f64,
    pub reward: f64,
    pub wall_ms: f64,
    /// Set when every restart failed.
    pub diagnostic: Option<String>,
}

/// Least-squares fit of the `SymConst`s of `skel` (exponent slots bound to
/// `exps`) by BFGS from `restarts` starts: the all-ones vector, then standard
/// normal draws.
pub fn fit_constants(skel: &Expr, exps: &[f64], data: &Dataset, restarts: usize, rng: &mut impl Rng) -> FitResult {
    let p = skel.num_sym_consts();
    let starts: Vec<Vec<f64>> = (0..restarts.max(1))
        .map(|r| if r == 0 { vec![1.0; p] } else { (0..p).map(|_| rng.sample(StandardNormal)).collect() })
        .collect();
    fit_constants_from(skel, exps, data, &starts)
}

/// [`fit_constants`] from the given starting points. Skeletons linear in
/// their constants are solved directly and ignore the starts.
pub fn fit_constants_from(skel: &Expr, exps: &[f64], data: &Dataset, starts: &[Vec<f64>]) -> FitResult {
    let t0 = Instant::now();
    let tape = Tape::compile(skel, exps);
    let p = tape.n_params();
    let finish = |consts: Vec<f64>, mse: f64, diagnostic| FitResult {
        expr: skel.instantiate(&consts, exps),
        reward: reward(mse),
        consts,
        mse,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        diagnostic,
    };
    if p == 0 {
        let mse = tape.mse(data, &[]);
        return finish(Vec::new(), mse, None);
    }
    if let Some(basis) = linear_basis(skel, p) {
        let consts = solve_linear(&basis, exps, data, p);
        if let Some(c) = consts {
            let mse = tape.mse(data, &c);
            if mse.is_finite() {
                return finish(c, mse, None);
            }
        }
    }
    let mut best: Option<bfgs::Minimum> = None;
    for x0 in starts.iter().filter(|x| x.len() == p) {
        let m = bfgs::minimize(|c, g| tape.mse_grad(data, c, g), x0, bfgs::BfgsOptions::default());
        if let Some(m) = m {
            if best.as_ref().is_none_or(|b| m.f < b.f) {
                best = Some(m);
            }
        }
    }
    match best {
        Some(m) => finish(m.x, m.f, None),
        None => finish(vec![1.0; p], f64::INFINITY, Some(format!("all {} starts failed to evaluate", starts.len()))),
    }
}

/// Terms of a skeleton of the form `Σ c_k·g_k(x)` (with `g_k = 1` for a bare
/// constant) where the `g_k` hold no constants and each `c_k` appears once.
/// The least-squares fit of such a skeleton is a linear solve.
fn linear_basis(skel: &Expr, p: usize) -> Option<Vec<(usize, f64, Option<Expr>)>> {
    fn terms(e: &Expr, sign: f64, out: &mut Vec<(f64, Expr)>) {
        match e {
            Expr::Binary(BinOp::Add, a, b) => {
                terms(a, sign, out);
                terms(b, sign, out);
            }
            Expr::Binary(BinOp::Sub, a, b) => {
                terms(a, sign, out);
                terms(b, -sign, out);
            }
            _ => out.push((sign, e.clone())),
        }
    }
    fn factors<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
        if let Expr::Binary(BinOp::Mul, a, b) = e {
            factors(a, out);
            factors(b, out);
        } else {
            out.push(e);
        }
    }
    let mut ts = Vec::new();
    terms(skel, 1.0, &mut ts);
    let mut seen = vec![false; p];
    let mut basis = Vec::new();
    for (sign, t) in &ts {
        let mut fs = Vec::new();
        factors(t, &mut fs);
        let mut slot = None;
        let mut rest: Option<Expr> = None;
        for f in fs {
            match f {
                Expr::SymConst(k) if slot.is_none() => slot = Some(*k),
                f if f.num_sym_consts() == 0 => {
                    rest = Some(match rest {
                        None => f.clone(),
                        Some(r) => Expr::mul(r, f.clone()),
                    })
                }
                _ => return None,
            }
        }
        let k = slot?;
        if k >= p || std::mem::replace(&mut seen[k], true) {
            return None;
        }
        basis.push((k, *sign, rest));
    }
    seen.iter().all(|s| *s).then_some(basis)
}

/// Whether the constants of `skel` enter linearly, so fitting is a single solve.
pub fn is_linear(skel: &Expr) -> bool {
    linear_basis(skel, skel.num_sym_consts()).is_some()
}

fn solve_linear(basis: &[(usize, f64, Option<Expr>)], exps: &[f64], data: &Dataset, p: usize) -> Option<Vec<f64>> {
    let n = data.n();
    let mut a = DMatrix::<f64>::zeros(n, p);
    for (k, sign, g) in basis {
        for r in 0..n {
            let v = match g {
                None => 1.0,
                Some(g) => g.evaluate_with(data.row(r), &[], exps)?,
            };
            a[(r, *k)] = sign * v;
        }
    }
    let b = DVector::from_column_slice(data.y());
    let c = a.svd(true, true).solve(&b, 1e-12).ok()?;
    c.iter().all(|v| v.is_finite()).then(|| c.iter().copied().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub values: Vec<f64>,
    pub tau0: f64,
    pub tau_final: f64,
    pub entropy_coef: f64,
    pub risk_eps: f64,
    pub batch: usize,
    pub lr: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            values: EXPONENTS_MAIN.to_vec(),
            tau0: 1.0,
            tau_final: 0.1,
            entropy_coef: 0.005,
            risk_eps: 0.05,
            batch: 32,
            lr: 0.1,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), SkoptError> {
        if self.values.is_empty() {
            return Err(SkoptError::EmptyValueSet);
        }
        if !(self.tau0 > 0.0 && self.tau_final > 0.0 && self.lr > 0.0 && self.batch > 0) {
            return Err(SkoptError::Config("tau0, tau_final, lr and batch must be positive".into()));
        }
        if !(self.risk_eps > 0.0 && self.risk_eps < 1.0) {
            return Err(SkoptError::Config("risk_eps must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// `τ(t) = τ₀·exp(−k·t/T)` with `k` chosen so that `τ(T) = tau_final`.
    pub fn temperature(&self, t: usize, total: usize) -> f64 {
        let k = (self.tau0 / self.tau_final).ln();
        self.tau0 * (-k * t as f64 / total.max(1) as f64).exp()
    }
}

/// Independent categorical distributions over the value set, one per slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentPolicy {
    pub values: Vec<f64>,
    pub logits: Vec<Vec<f64>>,
}

impl ExponentPolicy {
    pub fn uniform(slots: usize, values: &[f64]) -> ExponentPolicy {
        ExponentPolicy { values: values.to_vec(), logits: vec![vec![0.0; values.len()]; slots] }
    }

    pub fn probs(&self, slot: usize) -> Vec<f64> {
        softmax(&self.logits[slot])
    }

    pub fn sample(&self, tau: f64, rng: &mut impl Rng) -> Vec<usize> {
        self.logits.iter().map(|l| gumbel_softmax_sample(l, tau, rng).1).collect()
    }

    pub fn entropy(&self) -> f64 {
        (0..self.logits.len())
            .map(|s| -self.probs(s).iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>())
            .sum()
    }
}

/// One evaluated draw of exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub choice: Vec<usize>,
    pub reward: f64,
}

/// The `(1 − ε)` quantile of the rewards (nearest-rank).
pub fn risk_threshold(rewards: &[f64], eps: f64) -> f64 {
    let mut r = rewards.to_vec();
    r.sort_by(f64::total_cmp);
    let k = (((1.0 - eps) * r.len() as f64).ceil() as usize).clamp(1, r.len());
    r[k - 1]
}

/// Risk-seeking gradient of the logits: mean of `R·∇log P(choice)` over
/// episodes with `R ≥ R_ε`, plus `λ_H·∇ℋ`. Also returns which episodes
/// contributed and the threshold.
pub fn policy_gradient(
    policy: &ExponentPolicy,
    batch: &[Episode],
    cfg: &PolicyConfig,
) -> (Vec<Vec<f64>>, Vec<bool>, f64) {
    let rewards: Vec<f64> = batch.iter().map(|e| e.reward).collect();
    let thr = risk_threshold(&rewards, cfg.risk_eps);
    let all_equal = rewards.iter().all(|r| *r == rewards[0]);
    let used: Vec<bool> = rewards.iter().map(|r| !all_equal && *r >= thr).collect();
    let n_used = used.iter().filter(|u| **u).count().max(1) as f64;
    let mut grad: Vec<Vec<f64>> = policy.logits.iter().map(|l| vec![0.0; l.len()]).collect();
    for (s, g) in grad.iter_mut().enumerate() {
        let p = policy.probs(s);
        for (e, _) in batch.iter().zip(&used).filter(|(_, u)| **u) {
            for (k, gk) in g.iter_mut().enumerate() {
                let onehot = if e.choice[s] == k { 1.0 } else { 0.0 };
                *gk += e.reward * (onehot - p[k]) / n_used;
            }
        }
        let h: f64 = -p.iter().filter(|x| **x > 0.0).map(|x| x * x.ln()).sum::<f64>();
        for (k, gk) in g.iter_mut().enumerate() {
            if p[k] > 0.0 {
                *gk += cfg.entropy_coef * (-p[k] * (p[k].ln() + h));
            }
        }
    }
    (grad, used, thr)
}

/// One ascent step on the risk-seeking objective.
pub fn risk_seeking_update(policy: &mut ExponentPolicy, batch: &[Episode], cfg: &PolicyConfig) -> f64 {
    let (grad, _, thr) = policy_gradient(policy, batch, cfg);
    for (l, g) in policy.logits.iter_mut().zip(grad) {
        for (x, d) in l.iter_mut().zip(g) {
            *x += cfg.lr * d;
        }
    }
    thr
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkoptConfig {
    pub policy: PolicyConfig,
    /// Number of distinct exponent assignments fitted at most.
    pub budget: usize,
    pub restarts: usize,
    /// Coordinate search over single-slot changes around the best draw.
    pub polish: bool,
    pub seed: u64,
}

impl Default for SkoptConfig {
    fn default() -> Self {
        SkoptConfig { policy: PolicyConfig::default(), budget: 256, restarts: 10, polish: true, seed: 0 }
    }
}

/// Row of the episode log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub exponents: String,
    pub mse: f64,
    pub reward: f64,
    pub r_eps: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SkoptResult {
    pub best: FitResult,
    pub exponents: Vec<f64>,
    pub policy: ExponentPolicy,
    pub log: Vec<EpisodeLog>,
    /// Distinct assignments actually fitted.
    pub fits: usize,
}

impl SkoptResult {
    pub fn write_log_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.log {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }
}

struct Evaluator<'a> {
    skel: &'a Expr,
    data: &'a Dataset,
    values: &'a [f64],
    restarts: usize,
    seed: u64,
    cache: HashMap<Vec<usize>, FitResult>,
}

impl Evaluator<'_> {
    fn exps(&self, choice: &[usize]) -> Vec<f64> {
        choice.iter().map(|&k| self.values[k]).collect()
    }

    /// Fit every not-yet-seen choice (in parallel) and return results in order.
    fn eval(&mut self, choices: &[Vec<usize>]) -> Vec<FitResult> {
        let mut fresh: Vec<Vec<usize>> = Vec::new();
        for c in choices {
            if !self.cache.contains_key(c) && !fresh.contains(c) {
                fresh.push(c.clone());
            }
        }
        let fits: Vec<FitResult> = fresh
            .par_iter()
            .map(|c| {
                let mut h = self.seed ^ 0x9e37_79b9_7f4a_7c15;
                for &k in c {
                    h = h.rotate_left(7) ^ (k as u64 + 1).wrapping_mul(0xbf58_476d_1ce4_e5b9);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(h);
                fit_constants(self.skel, &self.exps(c), self.data, self.restarts, &mut rng)
            })
            .collect();
        for (c, f) in fresh.into_iter().zip(fits) {
            self.cache.insert(c, f);
        }
        choices.iter().map(|c| self.cache[c].clone()).collect()
    }
}

fn all_choices(slots: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..slots {
        out = out.into_iter().flat_map(|c| (0..k).map(move |v| [c.clone(), vec![v]].concat())).collect();
    }
    out
}

fn better(a: &FitResult, b: &FitResult) -> bool {
    a.reward > b.reward
}

/// Search the exponent slots of `skel` and fit its constants. When the whole
/// assignment space fits in the budget it is enumerated; otherwise batches
/// are drawn from the policy, which is then updated by risk-seeking gradients.
pub fn optimize_skeleton(skel: &Expr, data: &Dataset, cfg: &SkoptConfig) -> Result<SkoptResult, SkoptError> {
    cfg.policy.validate()?;
    let slots = skel.num_exp_slots();
    let values = &cfg.policy.values;
    let mut policy = ExponentPolicy::uniform(slots, values);
    let mut ev = Evaluator { skel, data, values, restarts: cfg.restarts, seed: cfg.seed, cache: HashMap::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut log = Vec::new();
    let mut best: Option<(Vec<usize>, FitResult)> = None;
    let consider = |c: &[usize], f: &FitResult, best: &mut Option<(Vec<usize>, FitResult)>| {
        if best.as_ref().is_none_or(|b| better(f, &b.1)) {
            *best = Some((c.to_vec(), f.clone()));
        }
    };

    let space = (values.len() as f64).powi(slots as i32);
    if space <= cfg.budget.max(1) as f64 {
        let choices = all_choices(slots, values.len());
        let fits = ev.eval(&choices);
        for (i, (c, f)) in choices.iter().zip(&fits).enumerate() {
            consider(c, f, &mut best);
            log.push(EpisodeLog {
                episode: i,
                exponents: fmt_exps(&ev.exps(c)),
                mse: f.mse,
                reward: f.reward,
                r_eps: f64::NAN,
            });
        }
    } else {
        let batch = cfg.policy.batch;
        let rounds = (cfg.budget / batch).max(1);
        let mut episode = 0;
        for t in 0..rounds {
            let tau = cfg.policy.temperature(t, rounds);
            let choices: Vec<Vec<usize>> = (0..batch).map(|_| policy.sample(tau, &mut rng)).collect();
            let fits = ev.eval(&choices);
            let eps: Vec<Episode> =
                choices.iter().zip(&fits).map(|(c, f)| Episode { choice: c.clone(), reward: f.reward }).collect();
            let thr = risk_seeking_update(&mut policy, &eps, &cfg.policy);
            for (c, f) in choices.iter().zip(&fits) {
                consider(c, f, &mut best);
                log.push(EpisodeLog {
                    episode,
                    exponents: fmt_exps(&ev.exps(c)),
                    mse: f.mse,
                    reward: f.reward,
                    r_eps: thr,
                });
                episode += 1;
            }
            if ev.cache.len() >= cfg.budget {
                break;
            }
        }
        if cfg.polish {
            loop {
                let (center, _) = best.clone().expect("at least one episode");
                let neighbours: Vec<Vec<usize>> = (0..slots)
                    .flat_map(|s| {
                        let center = center.clone();
                        let cur = center[s];
                        (0..values.len()).filter(move |&k| k != cur).map(move |k| {
                            let mut c = center.clone();
                            c[s] = k;
                            c
                        })
                    })
                    .collect();
                let fits = ev.eval(&neighbours);
                let before = best.as_ref().map(|b| b.1.reward);
                for (c, f) in neighbours.iter().zip(&fits) {
                    consider(c, f, &mut best);
                }
                if best.as_ref().map(|b| b.1.reward) == before {
                    break;
                }
            }
        }
    }
    let (choice, fit) = best.expect("at least one episode");
    Ok(SkoptResult { exponents: ev.exps(&choice), best: fit, policy, log, fits: ev.cache.len() })
}

fn fmt_exps(e: &[f64]) -> String {
    e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn data_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![lo + (hi - lo) * i as f64 / 39.0]).collect();
        let y = rows.iter().map(|r| f(r[0])).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn reward_is_monotone() {
        assert_eq!(reward(0.0), 1.0);
        assert!(reward(0.1) > reward(0.2));
        assert_eq!(reward(f64::INFINITY), 0.0);
    }

    #[test]
    fn dominant_logit_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for tau in [0.1, 1.0, 10.0] {
            let (soft, hard) = gumbel_softmax_sample(&[0.0, 60.0, 0.0], tau, &mut rng);
            assert_eq!(hard, 1);
            assert!((soft.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let (soft, hard) = gumbel_softmax_sample(&[0.0, 0.0, 0.0], 1e-4, &mut rng);
        assert!(soft[hard] > 0.999);
    }

    #[test]
    fn fits_line_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = data_1d(|x| 3.0 * x + 1.0, -1.0, 1.0);
        let r = fit_constants(&parse("c0 * x0 + c1").unwrap(), &[], &d, 10, &mut rng);
        assert!(r.mse < 1e-10 && (r.consts[0] - 3.0).abs() < 1e-6 && (r.consts[1] - 1.0).abs() < 1e-6);
        let d = data_1d(|_| 5.0, -1.0, 1.0);
        let r = fit_constants(&parse("c0").unwrap(), &[], &d, 10, &mut rng);
        assert!((r.consts[0] - 5.0).abs() < 1e-9 && r.reward > 1.0 - 1e-12);
        let r = fit_constants(&parse("ln(c0 - x0 * x0 - 10)").unwrap(), &[], &data_1d(|x| x, 0.0, 1.0), 3, &mut rng);
        assert!(r.diagnostic.is_none() || r.mse.is_infinite());
    }

    #[test]
    fn fits_nonlinear_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = data_1d(|x| (2.0 * x).sin(), -2.0, 2.0);
        let r = fit_constants(&parse("sin(c0 * x0)").unwrap(), &[], &d, 10, &mut rng);
        assert!(r.mse < 1e-12 && (r.consts[0].abs() - 2.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn linear_skeletons_take_the_direct_solve() {
        assert!(linear_basis(&parse("c0 * x0^p0 * x1 + c1 - c2 * sin(x0)").unwrap(), 3).is_some());
        assert!(linear_basis(&parse("c0 * sin(c1 * x0)").unwrap(), 2).is_none());
        assert!(linear_basis(&parse("c0 * x0 + c0").unwrap(), 1).is_none());
        let d = data_1d(|x| 2.0 * x * x - 0.5 * x.powi(3), 0.2, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = fit_constants(&parse("c0 * x0^p0 + c1 * x0^p1").unwrap(), &[2.0, 3.0], &d, 10, &mut rng);
        assert!(r.mse < 1e-20 && (r.consts[0] - 2.0).abs() < 1e-9 && (r.consts[1] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn risk_filter_and_entropy() {
        let cfg = PolicyConfig { entropy_coef: 0.0, ..PolicyConfig::default() };
        let p = ExponentPolicy::uniform(1, &EXPONENTS_MAIN);
        let mut batch: Vec<Episode> = (0..32).map(|i| Episode { choice: vec![i % 8], reward: 1e-3 }).collect();
        batch[5].reward = 1.0;
        let (g, used, thr) = policy_gradient(&p, &batch, &cfg);
        assert!(batch.iter().zip(&used).all(|(e, u)| !u || e.reward >= thr));
        assert!(g[0][5] > 0.0 && g[0].iter().enumerate().all(|(k, v)| k == 5 || *v < 0.0));
        let cfg = PolicyConfig { entropy_coef: 0.1, ..PolicyConfig::default() };
        let mut p = ExponentPolicy {
            values: EXPONENTS_MAIN.to_vec(),
            logits: vec![vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]],
        };
        let flat: Vec<Episode> = (0..8).map(|i| Episode { choice: vec![i], reward: 0.5 }).collect();
        let h0 = p.entropy();
        risk_seeking_update(&mut p, &flat, &cfg);
        assert!(p.entropy() > h0);
    }

    #[test]
    fn bandit_converges() {
        for seed in 0..10 {
            let cfg = PolicyConfig::default();
            let mut p = ExponentPolicy::uniform(1, &cfg.values);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let two = cfg.values.iter().position(|v| *v == 2.0).unwrap();
            for t in 0..200 {
                let tau = cfg.temperature(t, 200);
                let batch: Vec<Episode> = (0..cfg.batch)
                    .map(|_| {
                        let c = p.sample(tau, &mut rng);
                        Episode { reward: if c[0] == two { 1.0 } else { 0.01 }, choice: c }
                    })
                    .collect();
                risk_seeking_update(&mut p, &batch, &cfg);
            }
            assert!(p.probs(0)[two] > 0.9, "{:?}", p.probs(0));
        }
    }

    #[test]
    fn finds_square_exponent() {
        let d = data_1d(|x| 3.0 * x * x, 0.1, 2.0);
        let r = optimize_skeleton(&parse("c0 * x0^p0").unwrap(), &d, &SkoptConfig::default()).unwrap();
        assert_eq!(r.exponents, vec![2.0]);
        assert!((r.best.consts[0] - 3.0).abs() < 1e-6);
    }
}
