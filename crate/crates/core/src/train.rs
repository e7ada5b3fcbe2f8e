//! Gradient training of a masked network with regularized `ln`/`exp` and the
//! activation penalty.

use crate::data::Dataset;
use crate::netcore::{reg_exp, reg_ln, Activation, NodeOp, Params, Structure};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// When the activation penalty is switched on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyWindow {
    /// The final `penalty_epochs` epochs.
    Last,
    /// The first `penalty_epochs` epochs.
    First,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    /// `None` means `10 · L`.
    pub epochs: Option<usize>,
    pub theta_ln: f64,
    pub theta_exp: f64,
    pub eps: f64,
    pub penalty_epochs: usize,
    pub penalty_window: PenaltyWindow,
    /// Weights start uniform in `±init_scale / sqrt(fan_in)`.
    pub init_scale: f64,
    /// Train only unmasked entries.
    pub prune: bool,
    /// Heavy-ball momentum; `0` is plain gradient descent.
    pub momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            batch_size: 64,
            epochs: None,
            theta_ln: 1e-4,
            theta_exp: 100.0,
            eps: 1e-8,
            penalty_epochs: 10,
            penalty_window: PenaltyWindow::Last,
            init_scale: 2.0,
            prune: true,
            momentum: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn activation(&self) -> Activation {
        Activation::Regularized { theta_ln: self.theta_ln, theta_exp: self.theta_exp, eps: self.eps }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.lr > 0.0 && self.theta_exp > 0.0 && self.eps > 0.0) || self.batch_size == 0 {
            return Err("lr, theta_exp and eps must be positive and batch_size nonzero".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err("momentum must lie in [0, 1)".into());
        }
        Ok(())
    }

    fn penalty_active(&self, epoch: usize, total: usize) -> bool {
        match self.penalty_window {
            PenaltyWindow::Last => epoch + self.penalty_epochs >= total,
            PenaltyWindow::First => epoch < self.penalty_epochs,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub mse: f64,
    pub penalty: f64,
    pub total: f64,
}

fn ln_penalty(x: f64, theta: f64) -> (f64, f64) {
    if x < theta {
        (theta - x, -1.0)
    } else {
        (0.0, 0.0)
    }
}

fn exp_penalty(x: f64, theta: f64) -> (f64, f64) {
    if x.abs() > theta {
        (x.abs() - theta, x.signum())
    } else {
        (0.0, 0.0)
    }
}

/// Nodes whose pre-activations are penalized and trained.
fn active_nodes(s: &Structure, prune: bool) -> Vec<Vec<bool>> {
    if prune {
        s.reachable()
    } else {
        (0..=s.depth()).map(|l| vec![true; s.arch.width(l)]).collect()
    }
}

/// Loss over `rows` of `data` and, if `grad` is given, its gradient.
/// The penalty is summed over nodes and averaged over rows like the MSE.
fn loss_impl(
    s: &Structure,
    p: &Params,
    data: &Dataset,
    rows: &[usize],
    cfg: &TrainConfig,
    penalty: bool,
    mut grad: Option<&mut Params>,
) -> LossParts {
    let act = cfg.activation();
    let active = active_nodes(s, cfg.prune);
    let n = rows.len() as f64;
    let depth = s.depth();
    let mut out = LossParts::default();
    if let Some(g) = grad.as_deref_mut() {
        for l in &mut g.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|v| *v = 0.0);
        }
    }
    for &r in rows {
        let Some(t) = s.forward_trace(p, data.row(r), cfg.prune, act) else {
            out.mse = f64::INFINITY;
            continue;
        };
        let e = t.z[depth][0] - data.y()[r];
        out.mse += e * e / n;
        let mut pen_grad: Vec<Vec<f64>> = (0..=depth).map(|l| vec![0.0; s.arch.width(l)]).collect();
        if penalty {
            for l in 1..=depth {
                for (i, &x) in t.y[l].iter().enumerate() {
                    if !active[l][i] {
                        continue;
                    }
                    let (v, d) = match s.arch.op(l, i) {
                        NodeOp::Ln => ln_penalty(x, cfg.theta_ln),
                        NodeOp::Exp => exp_penalty(x, cfg.theta_exp),
                        _ => (0.0, 0.0),
                    };
                    out.penalty += v / n;
                    pen_grad[l][i] = d / n;
                }
            }
        }
        let Some(g) = grad.as_deref_mut() else { continue };
        let mut dz = vec![2.0 * e / n];
        for l in (1..=depth).rev() {
            let wi = s.arch.width(l - 1);
            let lm = &s.masks.layers[l - 1];
            let lp = &p.layers[l - 1];
            let gl = &mut g.layers[l - 1];
            let mut dprev = vec![0.0; wi];
            for i in 0..s.arch.width(l) {
                let x = t.y[l][i];
                let da = match s.arch.op(l, i) {
                    NodeOp::Id => 1.0,
                    NodeOp::Sin => x.cos(),
                    NodeOp::Cos => -x.sin(),
                    NodeOp::Exp if x >= cfg.theta_exp => 0.0,
                    NodeOp::Exp => t.z[l][i],
                    NodeOp::Ln if x < cfg.theta_ln => 0.0,
                    NodeOp::Ln => 1.0 / (x.abs() + cfg.eps),
                };
                let dy = dz[i] * da + pen_grad[l][i];
                if dy == 0.0 {
                    continue;
                }
                if !cfg.prune || lm.b[i] {
                    gl.b[i] += dy;
                }
                for j in 0..wi {
                    let k = i * wi + j;
                    if cfg.prune && !lm.w[k] {
                        continue;
                    }
                    gl.w[k] += dy * t.z[l - 1][j];
                    dprev[j] += lp.w[k] * dy;
                }
            }
            dz = dprev;
        }
    }
    out.total = out.mse + out.penalty;
    out
}

/// MSE plus (when `penalty`) the activation penalty over every row of `data`.
pub fn loss(s: &Structure, p: &Params, data: &Dataset, cfg: &TrainConfig, penalty: bool) -> LossParts {
    let rows: Vec<usize> = (0..data.n()).collect();
    loss_impl(s, p, data, &rows, cfg, penalty, None)
}

/// Loss and its exact gradient with respect to every weight and bias.
pub fn backward(s: &Structure, p: &Params, data: &Dataset, cfg: &TrainConfig, penalty: bool) -> (LossParts, Params) {
    let rows: Vec<usize> = (0..data.n()).collect();
    let mut g = Params::zeros(&s.arch);
    let l = loss_impl(s, p, data, &rows, cfg, penalty, Some(&mut g));
    (l, g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub mse: f64,
    pub penalty: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainResult {
    /// Parameters with the lowest full-data MSE seen, initialization included.
    pub params: Params,
    pub best_mse: f64,
    /// Entry 0 is the initialization.
    pub history: Vec<EpochLoss>,
    pub skipped_batches: usize,
    pub diverged: bool,
}

impl TrainResult {
    /// History as CSV with columns `epoch,mse,penalty,total`.
    pub fn write_history_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for h in &self.history {
            wr.serialize(h)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Minibatch gradient descent from a random initialization.
pub fn fit_network(s: &Structure, data: &Dataset, cfg: &TrainConfig, rng: &mut impl Rng) -> TrainResult {
    let mut p = Params::random(&s.arch, cfg.init_scale, rng);
    if cfg.prune {
        p = p.masked(&s.masks);
    }
    fit_network_from(s, data, cfg, p, rng)
}

/// [`fit_network`] from given parameters.
pub fn fit_network_from(
    s: &Structure,
    data: &Dataset,
    cfg: &TrainConfig,
    init: Params,
    rng: &mut impl Rng,
) -> TrainResult {
    let epochs = cfg.epochs.unwrap_or(10 * s.depth());
    let mut p = init;
    let mut velocity = Params::zeros(&s.arch);
    let mut grad = Params::zeros(&s.arch);
    let first = loss(s, &p, data, cfg, cfg.penalty_active(0, epochs) && epochs > 0);
    let mut history = vec![EpochLoss { epoch: 0, mse: first.mse, penalty: first.penalty, total: first.total }];
    let mut best = (first.mse, p.clone());
    let mut skipped = 0;
    let mut diverged = false;
    let mut rows: Vec<usize> = (0..data.n()).collect();
    for epoch in 0..epochs {
        let penalty = cfg.penalty_active(epoch, epochs);
        rows.shuffle(rng);
        for batch in rows.chunks(cfg.batch_size) {
            let l = loss_impl(s, &p, data, batch, cfg, penalty, Some(&mut grad));
            let finite = l.total.is_finite() && grad.values().iter().all(|v| v.is_finite());
            if !finite {
                skipped += 1;
                continue;
            }
            for ((pl, gl), vl) in p.layers.iter_mut().zip(&grad.layers).zip(velocity.layers.iter_mut()) {
                let pv = pl.w.iter_mut().chain(pl.b.iter_mut());
                let gv = gl.w.iter().chain(&gl.b);
                let vv = vl.w.iter_mut().chain(vl.b.iter_mut());
                for ((x, g), v) in pv.zip(gv).zip(vv) {
                    *v = cfg.momentum * *v - cfg.lr * g;
                    *x += *v;
                }
            }
        }
        let l = loss(s, &p, data, cfg, penalty);
        history.push(EpochLoss { epoch: epoch + 1, mse: l.mse, penalty: l.penalty, total: l.total });
        if !l.total.is_finite() {
            diverged = true;
            break;
        }
        if l.mse < best.0 {
            best = (l.mse, p.clone());
        }
    }
    TrainResult { params: best.1, best_mse: best.0, history, skipped_batches: skipped, diverged }
}

/// Bounded on all of ℝ: the regularized activations never produce NaN or ∞
/// for finite input. Exposed for property tests.
pub fn regularized_is_bounded(x: f64, cfg: &TrainConfig) -> bool {
    reg_ln(x, cfg.theta_ln, cfg.eps).is_finite() && reg_exp(x, cfg.theta_exp).is_finite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{Architecture, GraphNode, LayerMask, MaskSet, NetGraph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn linear() -> Structure {
        let arch = Architecture::unified(1, 1, 1);
        Structure::new(arch, MaskSet { layers: vec![LayerMask { w: vec![true], b: vec![true] }] }).unwrap()
    }

    fn line_data(f: impl Fn(f64) -> f64) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let y = rows.iter().map(|r| f(r[0])).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn closed_form_gradient() {
        let s = linear();
        let d = Dataset::from_rows(&[vec![2.0]], vec![5.0]).unwrap();
        let p = Params { layers: vec![crate::netcore::LayerParams { w: vec![1.5], b: vec![0.0] }] };
        let (l, g) = backward(&s, &p, &d, &TrainConfig::default(), true);
        assert_eq!(l.mse, 4.0);
        assert_eq!(g.layers[0].w[0], 2.0 * 2.0 * (1.5 * 2.0 - 5.0));
    }

    #[test]
    fn penalty_examples() {
        // ln node fed by x0 with unit weight, at x0 = -1.
        let g = NetGraph {
            input_dim: 1,
            layers: vec![
                vec![GraphNode { op: NodeOp::Ln, inputs: vec![(0, 1.0)], bias: None }],
                vec![GraphNode { op: NodeOp::Id, inputs: vec![(0, 1.0)], bias: None }],
            ],
        };
        let (s, p) = g.to_compact();
        let d = Dataset::from_rows(&[vec![-1.0]], vec![0.0]).unwrap();
        let l = loss(&s, &p, &d, &TrainConfig::default(), true);
        assert!((l.penalty - (1.0 + 1e-4)).abs() < 1e-15);
        let only_id = linear();
        let d = line_data(|x| 2.0 * x);
        let p = Params { layers: vec![crate::netcore::LayerParams { w: vec![2.0], b: vec![0.0] }] };
        let l = loss(&only_id, &p, &d, &TrainConfig::default(), true);
        assert_eq!((l.mse, l.penalty, l.total), (0.0, 0.0, 0.0));
    }

    #[test]
    fn recovers_line() {
        let s = linear();
        let d = line_data(|x| 3.0 * x + 1.0);
        let cfg = TrainConfig { lr: 0.1, epochs: Some(2000), ..TrainConfig::default() };
        let r = fit_network(&s, &d, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(r.best_mse < 1e-6, "{}", r.best_mse);
        assert!((r.params.layers[0].w[0] - 3.0).abs() < 1e-3);
        assert!((r.params.layers[0].b[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn zero_epochs_keeps_init() {
        let s = linear();
        let d = line_data(|x| x);
        let cfg = TrainConfig { epochs: Some(0), ..TrainConfig::default() };
        let init = Params::random(&s.arch, 2.0, &mut ChaCha8Rng::seed_from_u64(2));
        let r = fit_network_from(&s, &d, &cfg, init.clone(), &mut ChaCha8Rng::seed_from_u64(2));
        assert_eq!(r.params, init);
        assert_eq!(r.history.len(), 1);
    }

    #[test]
    fn history_csv() {
        let s = linear();
        let d = line_data(|x| x);
        let cfg = TrainConfig { epochs: Some(2), ..TrainConfig::default() };
        let r = fit_network(&s, &d, &cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let mut buf = Vec::new();
        r.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,mse,penalty,total\n0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
