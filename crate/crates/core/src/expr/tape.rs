//! Flat instruction tape for fast repeated evaluation of one expression over a
//! dataset, with forward-mode derivatives with respect to its `SymConst`s.

use super::{BinOp, Expr, UnaryFn};
use crate::data::Dataset;

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Var(usize),
    Param(usize),
    Unary(UnaryFn, usize),
    Binary(BinOp, usize, usize),
}

#[derive(Clone, Debug)]
pub struct Tape {
    nodes: Vec<Node>,
    /// Whether a node's value depends on any parameter.
    dep: Vec<bool>,
    n_params: usize,
}

impl Tape {
    /// Compile `e`, substituting `ExpSlot(k)` with `exps[k]`. `SymConst(k)`
    /// becomes parameter `k`.
    pub fn compile(e: &Expr, exps: &[f64]) -> Tape {
        let mut t = Tape { nodes: Vec::new(), dep: Vec::new(), n_params: e.num_sym_consts() };
        t.push_expr(e, exps);
        t
    }

    fn push(&mut self, n: Node, dep: bool) -> usize {
        self.nodes.push(n);
        self.dep.push(dep);
        self.nodes.len() - 1
    }

    fn push_expr(&mut self, e: &Expr, exps: &[f64]) -> usize {
        match e {
            Expr::Const(v) => self.push(Node::Const(*v), false),
            Expr::Var(i) => self.push(Node::Var(*i), false),
            Expr::SymConst(k) => self.push(Node::Param(*k), true),
            Expr::ExpSlot(k) => self.push(Node::Const(exps.get(*k).copied().unwrap_or(f64::NAN)), false),
            Expr::Unary(f, a) => {
                let ia = self.push_expr(a, exps);
                let d = self.dep[ia];
                self.push(Node::Unary(*f, ia), d)
            }
            Expr::Binary(op, a, b) => {
                let ia = self.push_expr(a, exps);
                let ib = self.push_expr(b, exps);
                let d = self.dep[ia] || self.dep[ib];
                self.push(Node::Binary(*op, ia, ib), d)
            }
        }
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    fn value(&self, i: usize, x: &[f64], params: &[f64], vals: &[f64]) -> f64 {
        let v = match &self.nodes[i] {
            Node::Const(c) => *c,
            Node::Var(j) => x.get(*j).copied().unwrap_or(f64::NAN),
            Node::Param(k) => params.get(*k).copied().unwrap_or(f64::NAN),
            Node::Unary(f, a) => {
                let va = vals[*a];
                if va.is_nan() {
                    return f64::NAN;
                }
                f.apply(va).unwrap_or(f64::NAN)
            }
            Node::Binary(op, a, b) => {
                let (va, vb) = (vals[*a], vals[*b]);
                if va.is_nan() || vb.is_nan() {
                    return f64::NAN;
                }
                op.apply(va, vb).unwrap_or(f64::NAN)
            }
        };
        if v.is_finite() {
            v
        } else {
            f64::NAN
        }
    }

    /// Value at one point; NaN marks a domain failure.
    pub fn eval(&self, x: &[f64], params: &[f64], vals: &mut Vec<f64>) -> f64 {
        vals.clear();
        for i in 0..self.nodes.len() {
            let v = self.value(i, x, params, vals);
            vals.push(v);
        }
        *vals.last().unwrap_or(&f64::NAN)
    }

    /// Value and gradient with respect to the parameters at one point.
    pub fn eval_grad(
        &self,
        x: &[f64],
        params: &[f64],
        vals: &mut Vec<f64>,
        grads: &mut Vec<f64>,
        out: &mut [f64],
    ) -> f64 {
        let p = self.n_params;
        vals.clear();
        grads.clear();
        grads.resize(self.nodes.len() * p, 0.0);
        for i in 0..self.nodes.len() {
            let v = self.value(i, x, params, vals);
            vals.push(v);
            if !self.dep[i] || v.is_nan() {
                continue;
            }
            let g = |n: usize, k: usize, grads: &Vec<f64>| grads[n * p + k];
            match &self.nodes[i] {
                Node::Param(k) => grads[i * p + k] = 1.0,
                Node::Unary(f, a) => {
                    let va = vals[*a];
                    let d = match f {
                        UnaryFn::Sin => va.cos(),
                        UnaryFn::Cos => -va.sin(),
                        UnaryFn::Exp => v,
                        UnaryFn::Ln => 1.0 / va,
                        UnaryFn::Sqrt => 0.5 / v,
                        UnaryFn::Abs => va.signum(),
                        UnaryFn::Id => 1.0,
                    };
                    for k in 0..p {
                        grads[i * p + k] = d * g(*a, k, grads);
                    }
                }
                Node::Binary(op, a, b) => {
                    let (va, vb) = (vals[*a], vals[*b]);
                    let (da, db) = match op {
                        BinOp::Add => (1.0, 1.0),
                        BinOp::Sub => (1.0, -1.0),
                        BinOp::Mul => (vb, va),
                        BinOp::Div => (1.0 / vb, -va / (vb * vb)),
                        BinOp::Pow => {
                            let da = if vb == 0.0 { 0.0 } else { vb * va.powf(vb - 1.0) };
                            let db = if self.dep[*b] { v * va.abs().ln() } else { 0.0 };
                            (da, db)
                        }
                    };
                    for k in 0..p {
                        let ga = if self.dep[*a] { g(*a, k, grads) } else { 0.0 };
                        let gb = if self.dep[*b] { g(*b, k, grads) } else { 0.0 };
                        let mut s = 0.0;
                        if ga != 0.0 {
                            s += da * ga;
                        }
                        if gb != 0.0 {
                            s += db * gb;
                        }
                        grads[i * p + k] = s;
                    }
                }
                Node::Const(_) | Node::Var(_) => {}
            }
        }
        let last = self.nodes.len() - 1;
        if self.dep[last] {
            out.copy_from_slice(&grads[last * p..(last + 1) * p]);
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
        }
        vals[last]
    }

    /// Predictions over a dataset (NaN on failure rows).
    pub fn predict(&self, data: &Dataset, params: &[f64]) -> Vec<f64> {
        let mut vals = Vec::with_capacity(self.nodes.len());
        (0..data.n()).map(|r| self.eval(data.row(r), params, &mut vals)).collect()
    }

    /// Mean squared error; `+inf` if any row fails.
    pub fn mse(&self, data: &Dataset, params: &[f64]) -> f64 {
        let mut vals = Vec::with_capacity(self.nodes.len());
        let mut s = 0.0;
        for r in 0..data.n() {
            let f = self.eval(data.row(r), params, &mut vals);
            if f.is_nan() {
                return f64::INFINITY;
            }
            let e = f - data.y()[r];
            s += e * e;
        }
        let m = s / data.n() as f64;
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    }

    /// Mean squared error and its gradient; `+inf` (gradient zeroed) if any row fails.
    pub fn mse_grad(&self, data: &Dataset, params: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.n_params;
        let mut vals = Vec::with_capacity(self.nodes.len());
        let mut grads = Vec::with_capacity(self.nodes.len() * p);
        let mut row_grad = vec![0.0; p];
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut s = 0.0;
        let n = data.n() as f64;
        for r in 0..data.n() {
            let f = self.eval_grad(data.row(r), params, &mut vals, &mut grads, &mut row_grad);
            if f.is_nan() {
                grad.iter_mut().for_each(|g| *g = 0.0);
                return f64::INFINITY;
            }
            let e = f - data.y()[r];
            s += e * e;
            for k in 0..p {
                grad[k] += 2.0 * e * row_grad[k] / n;
            }
        }
        let m = s / n;
        if m.is_finite() && grad.iter().all(|g| g.is_finite()) {
            m
        } else {
            grad.iter_mut().for_each(|g| *g = 0.0);
            f64::INFINITY
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn fd_grad(t: &Tape, x: &[f64], p: &[f64]) -> Vec<f64> {
        let mut vals = Vec::new();
        (0..p.len())
            .map(|k| {
                let h = 1e-6 * p[k].abs().max(1.0);
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[k] += h;
                b[k] -= h;
                (t.eval(x, &a, &mut vals) - t.eval(x, &b, &mut vals)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn tape_matches_tree_and_finite_differences() {
        let e = parse("c0 * sin(c1 * x0 + c2) + c3 * x1^p0 / (c4 + x0^2) + exp(c5 * ln(x1))").unwrap();
        let t = Tape::compile(&e, &[3.0]);
        let params = [1.3, -0.7, 0.2, 2.0, 1.5, 0.8];
        let x = [0.4, 1.7];
        let mut vals = Vec::new();
        let mut grads = Vec::new();
        let mut g = vec![0.0; 6];
        let v = t.eval_grad(&x, &params, &mut vals, &mut grads, &mut g);
        let tree = e.evaluate_with(&x, &params, &[3.0]).unwrap();
        assert!((v - tree).abs() < 1e-12);
        for (a, b) in g.iter().zip(fd_grad(&t, &x, &params)) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn failures_become_nan() {
        let t = Tape::compile(&parse("ln(x0) + c0").unwrap(), &[]);
        let mut vals = Vec::new();
        assert!(t.eval(&[-1.0], &[0.0], &mut vals).is_nan());
        let t = Tape::compile(&parse("(x0 - x0)^0").unwrap(), &[]);
        assert_eq!(t.eval(&[1.0], &[], &mut vals), 1.0);
        let t = Tape::compile(&parse("(ln(x0))^0").unwrap(), &[]);
        assert!(t.eval(&[-1.0], &[], &mut vals).is_nan());
    }
}
