//! Φ: the map from a masked structure to its symbolic skeleton.
//!
//! Every node is evaluated symbolically, with coefficients kept as expressions
//! over the network weights ([`Coef`]). Rules, applied while walking the
//! layers from the inputs:
//!
//! * `id` nodes are inlined, so affine-of-affine collapses into one affine map
//!   and repeated atoms merge their coefficients.
//! * `ln(c·u)` with a single term and no bias splits into `ln|c| + ln(u)`,
//!   pushing the scale out as an additive constant.
//! * An `exp` node turns every `ln(u)` term of its argument into a factor
//!   `u^λ` whose weight λ becomes an exponent slot; `exp` of the remaining
//!   bias is absorbed into the outgoing coefficient.
//! * Finally each non-literal coefficient becomes one `SymConst`, so constants
//!   in equivalent roles are merged.

use super::{NetError, NodeOp, Params, Structure};
use crate::expr::{BinOp, Expr, UnaryFn};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoefFn {
    Sin,
    Cos,
    Exp,
    Ln,
    LnAbs,
}

impl CoefFn {
    fn apply(self, v: f64) -> f64 {
        match self {
            CoefFn::Sin => v.sin(),
            CoefFn::Cos => v.cos(),
            CoefFn::Exp => v.exp(),
            CoefFn::Ln => v.ln(),
            CoefFn::LnAbs => v.abs().ln(),
        }
    }
}

/// A constant as an expression over network weights. `layer` is 1-based and
/// `idx` indexes the row-major weight or bias array of that layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Coef {
    Lit(f64),
    W { layer: usize, idx: usize },
    B { layer: usize, idx: usize },
    Mul(Box<Coef>, Box<Coef>),
    Add(Box<Coef>, Box<Coef>),
    Fn(CoefFn, Box<Coef>),
}

impl Coef {
    fn is_one(&self) -> bool {
        matches!(self, Coef::Lit(v) if *v == 1.0)
    }

    fn mul(a: Coef, b: Coef) -> Coef {
        match (a, b) {
            (Coef::Lit(x), Coef::Lit(y)) => Coef::Lit(x * y),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (a, b) => Coef::Mul(Box::new(a), Box::new(b)),
        }
    }

    fn add(a: Coef, b: Coef) -> Coef {
        match (a, b) {
            (Coef::Lit(x), Coef::Lit(y)) => Coef::Lit(x + y),
            (a, b) => Coef::Add(Box::new(a), Box::new(b)),
        }
    }

    fn func(f: CoefFn, a: Coef) -> Coef {
        match a {
            Coef::Lit(v) => Coef::Lit(f.apply(v)),
            a => Coef::Fn(f, Box::new(a)),
        }
    }

    /// Value under concrete parameters.
    pub fn eval(&self, p: &Params) -> f64 {
        match self {
            Coef::Lit(v) => *v,
            Coef::W { layer, idx } => p.layers[layer - 1].w[*idx],
            Coef::B { layer, idx } => p.layers[layer - 1].b[*idx],
            Coef::Mul(a, b) => a.eval(p) * b.eval(p),
            Coef::Add(a, b) => a.eval(p) + b.eval(p),
            Coef::Fn(f, a) => f.apply(a.eval(p)),
        }
    }
}

type NodeId = (usize, usize);

#[derive(Clone, Debug)]
enum Atom {
    Var(usize),
    App { op: NodeOp, node: NodeId, arg: SAff },
    ExpProd { node: NodeId, factors: Vec<(Coef, SAff)>, rest: Option<SAff> },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum AtomKey {
    Var(usize),
    Node(NodeId),
}

impl Atom {
    fn key(&self) -> AtomKey {
        match self {
            Atom::Var(j) => AtomKey::Var(*j),
            Atom::App { node, .. } | Atom::ExpProd { node, .. } => AtomKey::Node(*node),
        }
    }
}

#[derive(Clone, Debug, Default)]
struct SAff {
    terms: Vec<(Coef, Atom)>,
    bias: Option<Coef>,
}

impl SAff {
    fn single(atom: Atom) -> SAff {
        SAff { terms: vec![(Coef::Lit(1.0), atom)], bias: None }
    }

    fn add_term(&mut self, c: Coef, a: Atom) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.1.key() == a.key()) {
            t.0 = Coef::add(std::mem::replace(&mut t.0, Coef::Lit(0.0)), c);
        } else {
            self.terms.push((c, a));
        }
    }

    fn add_bias(&mut self, c: Coef) {
        self.bias = Some(match self.bias.take() {
            None => c,
            Some(b) => Coef::add(b, c),
        });
    }

    fn bias_or_zero(&self) -> Coef {
        self.bias.clone().unwrap_or(Coef::Lit(0.0))
    }
}

#[derive(Clone, Debug)]
enum NodeVal {
    Const(Coef),
    Aff(SAff),
    Scaled(Coef, Atom),
}

fn node_value(op: NodeOp, node: NodeId, a: SAff) -> NodeVal {
    let fold = |f: CoefFn, a: &SAff| NodeVal::Const(Coef::func(f, a.bias_or_zero()));
    match op {
        NodeOp::Id if a.terms.is_empty() => NodeVal::Const(a.bias_or_zero()),
        NodeOp::Id => NodeVal::Aff(a),
        NodeOp::Sin if a.terms.is_empty() => fold(CoefFn::Sin, &a),
        NodeOp::Cos if a.terms.is_empty() => fold(CoefFn::Cos, &a),
        NodeOp::Exp if a.terms.is_empty() => fold(CoefFn::Exp, &a),
        NodeOp::Ln if a.terms.is_empty() => fold(CoefFn::Ln, &a),
        NodeOp::Sin | NodeOp::Cos => NodeVal::Scaled(Coef::Lit(1.0), Atom::App { op, node, arg: a }),
        NodeOp::Ln if a.terms.len() == 1 && a.bias.is_none() => {
            let (c, t) = a.terms.into_iter().next().expect("one term");
            let ln = Atom::App { op, node, arg: SAff::single(t) };
            NodeVal::Aff(SAff { terms: vec![(Coef::Lit(1.0), ln)], bias: Some(Coef::func(CoefFn::LnAbs, c)) })
        }
        NodeOp::Ln => NodeVal::Scaled(Coef::Lit(1.0), Atom::App { op, node, arg: a }),
        NodeOp::Exp => {
            let mut factors = Vec::new();
            let mut rest = SAff::default();
            for (c, t) in a.terms {
                match t {
                    Atom::App { op: NodeOp::Ln, arg, .. } => factors.push((c, arg)),
                    t => rest.terms.push((c, t)),
                }
            }
            let scale = a.bias.map_or(Coef::Lit(1.0), |b| Coef::func(CoefFn::Exp, b));
            let rest = (!rest.terms.is_empty()).then_some(rest);
            NodeVal::Scaled(scale, Atom::ExpProd { node, factors, rest })
        }
    }
}

/// A skeleton together with the weight expressions its slots stand for.
#[derive(Clone, Debug)]
pub struct Skeleton {
    pub expr: Expr,
    /// `consts[k]` is the value of `SymConst(k)`.
    pub consts: Vec<Coef>,
    /// `exps[k]` is the value of `ExpSlot(k)`.
    pub exps: Vec<Coef>,
}

impl Skeleton {
    /// Slot values under concrete parameters: `(consts, exps)`.
    pub fn bind(&self, p: &Params) -> (Vec<f64>, Vec<f64>) {
        (self.consts.iter().map(|c| c.eval(p)).collect(), self.exps.iter().map(|c| c.eval(p)).collect())
    }

    /// The skeleton with every slot replaced by its value under `p`.
    pub fn instantiate(&self, p: &Params) -> Expr {
        let (c, e) = self.bind(p);
        self.expr.instantiate(&c, &e)
    }
}

/// `k * e`, with `k` pushed to the front of a product chain.
fn prefix_mul(k: Expr, e: Expr) -> Expr {
    match e {
        Expr::Binary(BinOp::Mul, a, b) => Expr::mul(prefix_mul(k, *a), *b),
        e => Expr::mul(k, e),
    }
}

struct Render {
    consts: Vec<Coef>,
    exps: Vec<Coef>,
}

impl Render {
    fn scale(&mut self, c: &Coef) -> Option<Expr> {
        match c {
            c if c.is_one() => None,
            Coef::Lit(v) => Some(Expr::Const(*v)),
            c => {
                self.consts.push(c.clone());
                Some(Expr::SymConst(self.consts.len() - 1))
            }
        }
    }

    fn exponent(&mut self, c: &Coef) -> Option<Expr> {
        match c {
            c if c.is_one() => None,
            Coef::Lit(v) => Some(Expr::Const(*v)),
            c => {
                self.exps.push(c.clone());
                Some(Expr::ExpSlot(self.exps.len() - 1))
            }
        }
    }

    fn affine(&mut self, a: &SAff) -> Expr {
        let mut acc: Option<Expr> = None;
        for (c, t) in &a.terms {
            let term = match self.scale(c) {
                None => self.atom(t),
                Some(k) => {
                    let inner = self.atom(t);
                    prefix_mul(k, inner)
                }
            };
            acc = Some(match acc {
                None => term,
                Some(s) => Expr::add(s, term),
            });
        }
        if let Some(b) = &a.bias {
            let k = self.scale(b).unwrap_or(Expr::Const(1.0));
            acc = Some(match acc {
                None => k,
                Some(s) => Expr::add(s, k),
            });
        }
        acc.unwrap_or(Expr::Const(0.0))
    }

    fn base(&mut self, a: &SAff) -> Expr {
        match a.terms.as_slice() {
            [(c, t)] if c.is_one() && a.bias.is_none() => self.atom(t),
            _ => self.affine(a),
        }
    }

    fn atom(&mut self, t: &Atom) -> Expr {
        match t {
            Atom::Var(j) => Expr::Var(*j),
            Atom::App { op, arg, .. } => {
                let f = match op {
                    NodeOp::Sin => UnaryFn::Sin,
                    NodeOp::Cos => UnaryFn::Cos,
                    NodeOp::Ln => UnaryFn::Ln,
                    NodeOp::Exp => UnaryFn::Exp,
                    NodeOp::Id => UnaryFn::Id,
                };
                Expr::unary(f, self.affine(arg))
            }
            Atom::ExpProd { factors, rest, .. } => {
                let mut acc: Option<Expr> = None;
                let mut push = |e: Expr| {
                    acc = Some(match acc.take() {
                        None => e,
                        Some(p) => Expr::mul(p, e),
                    })
                };
                for (lambda, base) in factors {
                    let b = self.base(base);
                    match self.exponent(lambda) {
                        None => push(b),
                        Some(e) => push(Expr::pow(b, e)),
                    }
                }
                if let Some(r) = rest {
                    push(Expr::unary(UnaryFn::Exp, self.affine(r)));
                }
                acc.unwrap_or(Expr::Const(1.0))
            }
        }
    }
}

/// Φ with the weight expression behind every slot.
pub fn skeleton_with_bindings(s: &Structure) -> Result<Skeleton, NetError> {
    let depth = s.depth();
    let needed = s.reachable();
    let mut prev: Vec<Option<NodeVal>> =
        (0..s.arch.input_dim()).map(|j| Some(NodeVal::Aff(SAff::single(Atom::Var(j))))).collect();
    for l in 1..=depth {
        let wi = s.arch.width(l - 1);
        let mut cur = vec![None; s.arch.width(l)];
        for i in 0..s.arch.width(l) {
            if !needed[l][i] {
                continue;
            }
            let mut a = SAff::default();
            for j in 0..wi {
                if !s.w_bit(l, i, j) {
                    continue;
                }
                let w = Coef::W { layer: l, idx: i * wi + j };
                match prev[j].as_ref().expect("inputs of a needed node are needed") {
                    NodeVal::Const(c) => a.add_bias(Coef::mul(w, c.clone())),
                    NodeVal::Aff(v) => {
                        for (c, t) in &v.terms {
                            a.add_term(Coef::mul(w.clone(), c.clone()), t.clone());
                        }
                        if let Some(b) = &v.bias {
                            a.add_bias(Coef::mul(w.clone(), b.clone()));
                        }
                    }
                    NodeVal::Scaled(c, t) => a.add_term(Coef::mul(w, c.clone()), t.clone()),
                }
            }
            if s.b_bit(l, i) {
                a.add_bias(Coef::B { layer: l, idx: i });
            }
            cur[i] = Some(node_value(s.arch.op(l, i), (l, i), a));
        }
        prev = cur;
    }
    let out = match prev[0].take() {
        Some(NodeVal::Aff(a)) => a,
        Some(NodeVal::Scaled(c, t)) => SAff { terms: vec![(c, t)], bias: None },
        _ => return Err(NetError::Degenerate),
    };
    let mut r = Render { consts: Vec::new(), exps: Vec::new() };
    let expr = r.affine(&out);
    Ok(Skeleton { expr, consts: r.consts, exps: r.exps })
}

/// Φ: the symbolic skeleton of a structure, with `SymConst` for merged
/// constants and `ExpSlot` for exponents.
pub fn skeleton(s: &Structure) -> Result<Expr, NetError> {
    skeleton_with_bindings(s).map(|k| k.expr)
}
