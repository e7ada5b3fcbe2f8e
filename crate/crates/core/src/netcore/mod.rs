//! The masked symbolic network: architecture, masks, parameters and the
//! forward pass, plus Ψ-unification, the structure→skeleton map Φ and the
//! representational-efficiency counting model.

mod graph;
mod psi;
mod skeleton;
mod text;
pub mod theory;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use graph::{GraphNode, NetGraph};
pub use psi::{psi_forward, psi_inverse};
pub use skeleton::{skeleton, skeleton_with_bindings, Coef, Skeleton};
pub use text::TextFormError;

/// Default depth caps and replica counts for the two dimension presets.
pub const L_MAX_SMALL: usize = 6;
pub const L_MAX_LARGE: usize = 7;
pub const M_SMALL: usize = 5;
pub const M_LARGE: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("structure computes a constant (no path from any input to the output)")]
    Degenerate,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("required depth {needed} exceeds L_max = {max}")]
    TooDeep { needed: usize, max: usize },
    #[error("layer {layer} needs more than {m} `{op}` nodes")]
    ReplicaOverflow { layer: usize, op: &'static str, m: usize },
    #[error("architecture is not in the unified layout")]
    NotUnified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeOp {
    Id,
    Sin,
    Cos,
    Exp,
    Ln,
}

impl NodeOp {
    /// Block order of every hidden layer.
    pub const ORDER: [NodeOp; 5] = [NodeOp::Id, NodeOp::Sin, NodeOp::Cos, NodeOp::Exp, NodeOp::Ln];

    pub fn name(self) -> &'static str {
        match self {
            NodeOp::Id => "id",
            NodeOp::Sin => "sin",
            NodeOp::Cos => "cos",
            NodeOp::Exp => "exp",
            NodeOp::Ln => "ln",
        }
    }

    pub fn block(self) -> usize {
        self as usize
    }
}

/// How `ln` and `exp` nodes treat their inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    /// Real semantics: `ln` of a nonpositive value is a domain failure.
    Exact,
    /// `ln |y|`, failing only at zero.
    AbsLog,
    /// The clamped training activations; never fails on finite input.
    Regularized { theta_ln: f64, theta_exp: f64, eps: f64 },
}

impl Activation {
    pub fn apply(self, op: NodeOp, y: f64) -> Option<f64> {
        let v = match (op, self) {
            (NodeOp::Id, _) => y,
            (NodeOp::Sin, _) => y.sin(),
            (NodeOp::Cos, _) => y.cos(),
            (NodeOp::Exp, Activation::Regularized { theta_exp, .. }) => reg_exp(y, theta_exp),
            (NodeOp::Exp, _) => y.exp(),
            (NodeOp::Ln, Activation::Regularized { theta_ln, eps, .. }) => reg_ln(y, theta_ln, eps),
            (NodeOp::Ln, Activation::Exact) if y <= 0.0 => return None,
            (NodeOp::Ln, Activation::Exact) => y.ln(),
            (NodeOp::Ln, Activation::AbsLog) if y == 0.0 => return None,
            (NodeOp::Ln, Activation::AbsLog) => y.abs().ln(),
        };
        v.is_finite().then_some(v)
    }
}

/// `0` below `theta_ln`, else `ln(|x| + eps)`.
pub fn reg_ln(x: f64, theta_ln: f64, eps: f64) -> f64 {
    if x < theta_ln {
        0.0
    } else {
        (x.abs() + eps).ln()
    }
}

/// `exp(theta_exp)` at or above `theta_exp`, else `exp(x)`.
pub fn reg_exp(x: f64, theta_exp: f64) -> f64 {
    if x >= theta_exp {
        theta_exp.exp()
    } else {
        x.exp()
    }
}

/// Operator layout of every layer. `layers[l]` lists the ops of layer `l + 1`;
/// the last layer is the single `id` output node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    input_dim: usize,
    layers: Vec<Vec<NodeOp>>,
}

impl Architecture {
    /// The fixed layout: hidden layers `[id×m, sin×m, cos×m, exp×m, ln×m]`,
    /// then one `id` node.
    pub fn unified(depth: usize, m: usize, input_dim: usize) -> Architecture {
        assert!(depth >= 1 && m >= 1 && input_dim >= 1, "depth, m and d0 must be positive");
        let hidden: Vec<NodeOp> = NodeOp::ORDER.iter().flat_map(|&op| std::iter::repeat_n(op, m)).collect();
        let mut layers = vec![hidden; depth - 1];
        layers.push(vec![NodeOp::Id]);
        Architecture { input_dim, layers }
    }

    /// A custom layout, e.g. the lightweight network left after simplification.
    pub fn custom(input_dim: usize, layers: Vec<Vec<NodeOp>>) -> Result<Architecture, NetError> {
        if input_dim == 0 || layers.is_empty() {
            return Err(NetError::Shape("need at least one input and one layer".into()));
        }
        if layers.last().map(|l| l.as_slice()) != Some(&[NodeOp::Id]) {
            return Err(NetError::Shape("the final layer must be a single id node".into()));
        }
        Ok(Architecture { input_dim, layers })
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Width of layer `l` (0 is the input layer).
    pub fn width(&self, l: usize) -> usize {
        if l == 0 {
            self.input_dim
        } else {
            self.layers[l - 1].len()
        }
    }

    /// Op of node `i` in layer `l >= 1`.
    pub fn op(&self, l: usize, i: usize) -> NodeOp {
        self.layers[l - 1][i]
    }

    pub fn layer_ops(&self, l: usize) -> &[NodeOp] {
        &self.layers[l - 1]
    }

    /// `Some(m)` when the layout is the unified one with `m` replicas.
    pub fn replicas(&self) -> Option<usize> {
        let m = if self.depth() == 1 { 1 } else { self.layers[0].len() / 5 };
        (m >= 1 && *self == Architecture::unified(self.depth(), m, self.input_dim)).then_some(m)
    }

    /// Number of mask bits: all weight entries then all biases.
    pub fn mask_len(&self) -> usize {
        (1..=self.depth()).map(|l| self.width(l) * (self.width(l - 1) + 1)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerMask {
    /// Row-major `width(l) × width(l-1)`.
    pub w: Vec<bool>,
    pub b: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MaskSet {
    pub layers: Vec<LayerMask>,
}

impl MaskSet {
    pub fn empty(arch: &Architecture) -> MaskSet {
        MaskSet {
            layers: (1..=arch.depth())
                .map(|l| LayerMask { w: vec![false; arch.width(l) * arch.width(l - 1)], b: vec![false; arch.width(l)] })
                .collect(),
        }
    }

    pub fn full(arch: &Architecture) -> MaskSet {
        let mut m = MaskSet::empty(arch);
        for lm in &mut m.layers {
            lm.w.iter_mut().for_each(|v| *v = true);
            lm.b.iter_mut().for_each(|v| *v = true);
        }
        m
    }

    /// Flattened bits: every layer's weights row-major, then every layer's biases.
    pub fn flatten(&self) -> Vec<bool> {
        let mut out: Vec<bool> = self.layers.iter().flat_map(|l| l.w.iter().copied()).collect();
        out.extend(self.layers.iter().flat_map(|l| l.b.iter().copied()));
        out
    }

    pub fn unflatten(arch: &Architecture, bits: &[bool]) -> Result<MaskSet, NetError> {
        if bits.len() != arch.mask_len() {
            return Err(NetError::Shape(format!("expected {} mask bits, got {}", arch.mask_len(), bits.len())));
        }
        let mut m = MaskSet::empty(arch);
        let mut at = 0;
        for lm in &mut m.layers {
            let n = lm.w.len();
            lm.w.copy_from_slice(&bits[at..at + n]);
            at += n;
        }
        for lm in &mut m.layers {
            let n = lm.b.len();
            lm.b.copy_from_slice(&bits[at..at + n]);
            at += n;
        }
        Ok(m)
    }

    pub fn popcount(&self) -> usize {
        self.layers.iter().map(|l| l.w.iter().chain(&l.b).filter(|&&b| b).count()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Structure {
    pub arch: Architecture,
    pub masks: MaskSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<LayerParams>,
}

impl Params {
    pub fn zeros(arch: &Architecture) -> Params {
        Params {
            layers: (1..=arch.depth())
                .map(|l| LayerParams { w: vec![0.0; arch.width(l) * arch.width(l - 1)], b: vec![0.0; arch.width(l)] })
                .collect(),
        }
    }

    /// Uniform in `±scale / sqrt(fan_in)` per layer.
    pub fn random(arch: &Architecture, scale: f64, rng: &mut impl Rng) -> Params {
        let mut p = Params::zeros(arch);
        for (l, lp) in p.layers.iter_mut().enumerate() {
            let a = scale / (arch.width(l) as f64).sqrt();
            lp.w.iter_mut().chain(lp.b.iter_mut()).for_each(|v| *v = rng.random_range(-a..=a));
        }
        p
    }

    /// Element-wise product with the masks.
    pub fn masked(&self, masks: &MaskSet) -> Params {
        Params {
            layers: self
                .layers
                .iter()
                .zip(&masks.layers)
                .map(|(p, m)| LayerParams {
                    w: p.w.iter().zip(&m.w).map(|(v, &k)| if k { *v } else { 0.0 }).collect(),
                    b: p.b.iter().zip(&m.b).map(|(v, &k)| if k { *v } else { 0.0 }).collect(),
                })
                .collect(),
        }
    }

    pub fn num_values(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_values(&mut self, v: &[f64]) {
        let mut it = v.iter();
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = *it.next().expect("value vector too short");
            }
        }
    }

    pub fn check_shape(&self, arch: &Architecture) -> Result<(), NetError> {
        if self.layers.len() != arch.depth() {
            return Err(NetError::Shape(format!("{} parameter layers for depth {}", self.layers.len(), arch.depth())));
        }
        for (i, lp) in self.layers.iter().enumerate() {
            let l = i + 1;
            if lp.w.len() != arch.width(l) * arch.width(l - 1) || lp.b.len() != arch.width(l) {
                return Err(NetError::Shape(format!("layer {l} parameters have the wrong shape")));
            }
        }
        Ok(())
    }
}

/// Pre-activations `y` and activations `z` of every layer; `z[0]` is the input.
#[derive(Clone, Debug)]
pub struct Trace {
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
}

impl Structure {
    pub fn new(arch: Architecture, masks: MaskSet) -> Result<Structure, NetError> {
        let ok = masks.layers.len() == arch.depth()
            && masks
                .layers
                .iter()
                .enumerate()
                .all(|(i, m)| m.w.len() == arch.width(i + 1) * arch.width(i) && m.b.len() == arch.width(i + 1));
        if !ok {
            return Err(NetError::Shape("mask shapes do not match the architecture".into()));
        }
        Ok(Structure { arch, masks })
    }

    pub fn depth(&self) -> usize {
        self.arch.depth()
    }

    pub fn w_bit(&self, l: usize, i: usize, j: usize) -> bool {
        self.masks.layers[l - 1].w[i * self.arch.width(l - 1) + j]
    }

    pub fn b_bit(&self, l: usize, i: usize) -> bool {
        self.masks.layers[l - 1].b[i]
    }

    /// Full trace of the forward pass, or `None` if the output fails. A node
    /// whose activation fails holds NaN and poisons only the nodes that read it
    /// through a nonzero weight, so dead nodes never cause a failure.
    pub fn forward_trace(&self, p: &Params, x: &[f64], pruned: bool, act: Activation) -> Option<Trace> {
        let mut y = vec![Vec::new()];
        let mut z = vec![x.to_vec()];
        for l in 1..=self.depth() {
            let (wi, wo) = (self.arch.width(l - 1), self.arch.width(l));
            let lp = &p.layers[l - 1];
            let lm = &self.masks.layers[l - 1];
            let prev = &z[l - 1];
            let mut yl = vec![0.0; wo];
            let mut zl = vec![0.0; wo];
            for i in 0..wo {
                let mut s = if !pruned || lm.b[i] { lp.b[i] } else { 0.0 };
                for j in 0..wi {
                    let w = lp.w[i * wi + j];
                    if (!pruned || lm.w[i * wi + j]) && w != 0.0 {
                        s += w * prev[j];
                    }
                }
                yl[i] = s;
                zl[i] = if s.is_finite() { act.apply(self.arch.op(l, i), s).unwrap_or(f64::NAN) } else { f64::NAN };
            }
            y.push(yl);
            z.push(zl);
        }
        z[self.depth()][0].is_finite().then_some(Trace { y, z })
    }

    /// Network output at `x`, with real (`Exact`) semantics.
    pub fn forward(&self, p: &Params, x: &[f64], pruned: bool) -> Option<f64> {
        self.forward_with(p, x, pruned, Activation::Exact)
    }

    pub fn forward_with(&self, p: &Params, x: &[f64], pruned: bool, act: Activation) -> Option<f64> {
        self.forward_trace(p, x, pruned, act).map(|t| t.z[self.depth()][0])
    }

    /// `needed[l][i]`: node `i` of layer `l` lies on a masked path to the output.
    pub fn reachable(&self) -> Vec<Vec<bool>> {
        let depth = self.depth();
        let mut needed: Vec<Vec<bool>> = (0..=depth).map(|l| vec![false; self.arch.width(l)]).collect();
        needed[depth][0] = true;
        for l in (1..=depth).rev() {
            for i in 0..self.arch.width(l) {
                if !needed[l][i] {
                    continue;
                }
                for j in 0..self.arch.width(l - 1) {
                    if self.w_bit(l, i, j) {
                        needed[l - 1][j] = true;
                    }
                }
            }
        }
        needed
    }

    /// Remove mask bits not on an input-to-output path: outgoing bits of
    /// hidden nodes without incoming bits, and every bit of nodes that cannot
    /// reach the output.
    pub fn prune(&self) -> Structure {
        let mut s = self.clone();
        loop {
            let mut changed = false;
            let needed = s.reachable();
            for l in 1..=s.depth() {
                let wi = s.arch.width(l - 1);
                for i in 0..s.arch.width(l) {
                    let lm = &mut s.masks.layers[l - 1];
                    if !needed[l][i] {
                        for j in 0..wi {
                            changed |= std::mem::replace(&mut lm.w[i * wi + j], false);
                        }
                        changed |= std::mem::replace(&mut lm.b[i], false);
                    }
                }
            }
            for l in 1..s.depth() {
                for i in 0..s.arch.width(l) {
                    let wi = s.arch.width(l - 1);
                    let lm = &s.masks.layers[l - 1];
                    let has_in = lm.b[i] || (0..wi).any(|j| lm.w[i * wi + j]);
                    if !has_in {
                        let wo = s.arch.width(l + 1);
                        let up = &mut s.masks.layers[l];
                        for r in 0..wo {
                            changed |= std::mem::replace(&mut up.w[r * s.arch.width(l) + i], false);
                        }
                    }
                }
            }
            if !changed {
                return s;
            }
        }
    }

    /// Drop every node with no path to the output and re-index the masks,
    /// giving a lightweight custom-layout network.
    pub fn simplify(&self) -> Structure {
        self.simplify_with(&Params::zeros(&self.arch)).0
    }

    /// [`Structure::simplify`] that carries parameters along.
    pub fn simplify_with(&self, p: &Params) -> (Structure, Params) {
        NetGraph::from_structure(self, p).to_compact()
    }

    /// Whether any input reaches the output through masked connections.
    pub fn is_degenerate(&self) -> bool {
        let needed = self.reachable();
        !needed[0].iter().any(|&b| b)
    }
}

/// Free function form of [`Structure::simplify`].
pub fn simplify_structure(s: &Structure) -> Structure {
    s.simplify()
}
