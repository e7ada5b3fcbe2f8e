//! Expression → UniSymNet structure identification, and merging of labels of
//! equivalent expressions.
//!
//! Identification applies Ψ, rewrites the result as an affine normal form
//! whose atoms are variables or single `sin`/`cos`/`exp`/`ln` applications,
//! and then places operator nodes outside-in: every application sits one
//! layer below its consumer, and variable parts that must cross several
//! layers ride on a chain of `id` nodes.

use crate::codec::SequenceLabel;
use crate::expr::{canonicalize, BinOp, Expr, UnaryFn};
use crate::netcore::{psi_forward, GraphNode, NetError, NetGraph, NodeOp, Params, Structure, L_MAX_LARGE, L_MAX_SMALL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("variable x{index} outside dimension {dim}")]
    VarOutOfRange { index: usize, dim: usize },
    #[error("constant subexpression `{0}` has no finite value")]
    BadConstant(String),
    #[error("operator `{0}` survives the unification step")]
    Unsupported(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

/// Layout targeted by identification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelConfig {
    pub m: usize,
    pub d0: usize,
    pub l_max: usize,
}

impl LabelConfig {
    /// `L_max` from the dimension preset: 6 up to four inputs, else 7.
    pub fn new(m: usize, d0: usize) -> LabelConfig {
        LabelConfig { m, d0, l_max: if d0 <= 4 { L_MAX_SMALL } else { L_MAX_LARGE } }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum NTerm {
    Var(usize),
    Node(NodeOp, Box<Affine>),
}

#[derive(Clone, Debug, PartialEq, Default)]
struct Affine {
    terms: Vec<(f64, NTerm)>,
    bias: f64,
}

impl Affine {
    fn constant(v: f64) -> Affine {
        Affine { terms: Vec::new(), bias: v }
    }

    fn term(t: NTerm) -> Affine {
        Affine { terms: vec![(1.0, t)], bias: 0.0 }
    }

    fn scaled(mut self, k: f64) -> Affine {
        self.terms.iter_mut().for_each(|t| t.0 *= k);
        self.bias *= k;
        self.prune()
    }

    fn plus(mut self, other: Affine) -> Affine {
        for (c, t) in other.terms {
            match self.terms.iter_mut().find(|s| s.1 == t) {
                Some(s) => s.0 += c,
                None => self.terms.push((c, t)),
            }
        }
        self.bias += other.bias;
        self.prune()
    }

    fn prune(mut self) -> Affine {
        self.terms.retain(|t| t.0 != 0.0);
        self
    }

    fn height(&self) -> usize {
        self.terms.iter().map(|(_, t)| t.height()).max().unwrap_or(0)
    }
}

impl NTerm {
    fn height(&self) -> usize {
        match self {
            NTerm::Var(_) => 0,
            NTerm::Node(_, a) => 1 + a.height(),
        }
    }
}

fn fold(e: &Expr) -> Result<f64, LabelError> {
    let consts = vec![1.0; e.num_sym_consts()];
    let exps = vec![1.0; e.num_exp_slots()];
    e.evaluate_with(&[], &consts, &exps).ok_or_else(|| LabelError::BadConstant(e.to_string()))
}

fn node_op(f: UnaryFn) -> Option<NodeOp> {
    match f {
        UnaryFn::Sin => Some(NodeOp::Sin),
        UnaryFn::Cos => Some(NodeOp::Cos),
        UnaryFn::Exp => Some(NodeOp::Exp),
        UnaryFn::Ln => Some(NodeOp::Ln),
        _ => None,
    }
}

fn to_affine(e: &Expr, d0: usize) -> Result<Affine, LabelError> {
    if !e.has_vars() {
        return Ok(Affine::constant(fold(e)?));
    }
    match e {
        Expr::Var(j) if *j < d0 => Ok(Affine::term(NTerm::Var(*j))),
        Expr::Var(j) => Err(LabelError::VarOutOfRange { index: *j, dim: d0 }),
        Expr::Binary(BinOp::Add, a, b) => Ok(to_affine(a, d0)?.plus(to_affine(b, d0)?)),
        Expr::Binary(BinOp::Sub, a, b) => Ok(to_affine(a, d0)?.plus(to_affine(b, d0)?.scaled(-1.0))),
        Expr::Binary(BinOp::Mul, a, b) if !a.has_vars() => Ok(to_affine(b, d0)?.scaled(fold(a)?)),
        Expr::Binary(BinOp::Mul, a, b) if !b.has_vars() => Ok(to_affine(a, d0)?.scaled(fold(b)?)),
        Expr::Binary(BinOp::Div, a, b) if !b.has_vars() => Ok(to_affine(a, d0)?.scaled(1.0 / fold(b)?)),
        Expr::Unary(UnaryFn::Id, a) => to_affine(a, d0),
        Expr::Unary(f, a) => {
            let op = node_op(*f).ok_or_else(|| LabelError::Unsupported(f.name().into()))?;
            let arg = to_affine(a, d0)?;
            if arg.terms.is_empty() {
                let v = f.apply(arg.bias).ok_or_else(|| LabelError::BadConstant(e.to_string()))?;
                return Ok(Affine::constant(v));
            }
            Ok(Affine::term(NTerm::Node(op, Box::new(arg))))
        }
        Expr::Binary(op, ..) => Err(LabelError::Unsupported(op.symbol().to_string())),
        _ => Err(LabelError::Unsupported(e.to_string())),
    }
}

struct Placer {
    m: usize,
    layers: Vec<Vec<GraphNode>>,
    keys: Vec<HashMap<String, usize>>,
}

impl Placer {
    /// Inputs of a node at layer `l` computing `aff`, as edges into layer `l - 1`.
    fn inputs(&mut self, aff: &Affine, l: usize) -> Result<(Vec<(usize, f64)>, Option<f64>), LabelError> {
        let mut edges: Vec<(usize, f64)> = Vec::new();
        let push = |edges: &mut Vec<(usize, f64)>, j: usize, c: f64| match edges.iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += c,
            None => edges.push((j, c)),
        };
        let vars: Vec<(f64, NTerm)> = aff.terms.iter().filter(|t| matches!(t.1, NTerm::Var(_))).cloned().collect();
        if l == 1 {
            for (c, t) in &vars {
                if let NTerm::Var(j) = t {
                    push(&mut edges, *j, *c);
                }
            }
        } else if !vars.is_empty() {
            let carry = Affine { terms: vars, bias: 0.0 };
            let k = self.place(NodeOp::Id, &carry, l - 1)?;
            push(&mut edges, k, 1.0);
        }
        for (c, t) in &aff.terms {
            if let NTerm::Node(op, arg) = t {
                let k = self.place(*op, arg, l - 1)?;
                push(&mut edges, k, *c);
            }
        }
        Ok((edges, (aff.bias != 0.0).then_some(aff.bias)))
    }

    fn place(&mut self, op: NodeOp, arg: &Affine, l: usize) -> Result<usize, LabelError> {
        let key = format!("{op:?}|{arg:?}");
        if let Some(&k) = self.keys[l].get(&key) {
            return Ok(k);
        }
        let (inputs, bias) = self.inputs(arg, l)?;
        let row = &mut self.layers[l - 1];
        if row.iter().filter(|n| n.op == op).count() >= self.m {
            return Err(NetError::ReplicaOverflow { layer: l, op: op.name(), m: self.m }.into());
        }
        row.push(GraphNode { op, inputs, bias });
        let k = row.len() - 1;
        self.keys[l].insert(key, k);
        Ok(k)
    }
}

/// Identify the structure of `e` together with parameters that realize it
/// exactly (with `ln` read as `ln|·|`).
pub fn identify_with_params(e: &Expr, cfg: LabelConfig) -> Result<(Structure, Params), LabelError> {
    let aff = to_affine(&psi_forward(e), cfg.d0)?;
    if aff.terms.is_empty() {
        return Err(NetError::Degenerate.into());
    }
    let depth = aff.height() + 1;
    if depth > cfg.l_max {
        return Err(NetError::TooDeep { needed: depth, max: cfg.l_max }.into());
    }
    let mut p = Placer { m: cfg.m, layers: vec![Vec::new(); depth], keys: vec![HashMap::new(); depth + 1] };
    let (inputs, bias) = p.inputs(&aff, depth)?;
    p.layers[depth - 1].push(GraphNode { op: NodeOp::Id, inputs, bias });
    let g = NetGraph { input_dim: cfg.d0, layers: p.layers };
    let (s, params) = g.to_unified(cfg.m)?;
    Ok((s.prune(), params))
}

/// The structure of `e` in the unified layout with `m` replicas over `d0` inputs.
pub fn identify_structure(e: &Expr, m: usize, d0: usize) -> Result<Structure, LabelError> {
    identify_with_params(e, LabelConfig::new(m, d0)).map(|r| r.0)
}

/// Number of equivalence-check points.
pub const MERGE_POINTS: usize = 64;
/// Relative tolerance of the numerical equivalence check.
pub const MERGE_RTOL: f64 = 1e-9;

fn dim_of(e: &Expr) -> usize {
    fn go(e: &Expr, d: &mut usize) {
        if let Expr::Var(j) = e {
            *d = (*d).max(j + 1);
        }
        e.children().into_iter().for_each(|c| go(c, d));
    }
    let mut d = 0;
    go(e, &mut d);
    d
}

fn fingerprint(e: &Expr, points: &[Vec<f64>]) -> Vec<Option<f64>> {
    points.iter().map(|p| e.evaluate(p)).collect()
}

fn agree(a: &[Option<f64>], b: &[Option<f64>]) -> bool {
    let mut both = 0;
    for (x, y) in a.iter().zip(b) {
        match (x, y) {
            (Some(x), Some(y)) => {
                if (x - y).abs() > MERGE_RTOL * x.abs().max(y.abs()).max(1e-300) {
                    return false;
                }
                both += 1;
            }
            (None, None) => {}
            _ => return false,
        }
    }
    both >= MERGE_POINTS / 4
}

/// Give every group of equivalent expressions the shortest label of the
/// group (ties broken by the smaller token sequence). Returns one label per
/// input pair, in order.
pub fn merge_equivalent_labels(pairs: &[(Expr, SequenceLabel)]) -> Vec<SequenceLabel> {
    let dim = pairs.iter().map(|(e, _)| dim_of(e)).max().unwrap_or(0).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7267_65);
    let points: Vec<Vec<f64>> = (0..MERGE_POINTS)
        .map(|i| {
            let (lo, hi) = if i % 2 == 0 { (0.05, 3.0) } else { (-3.0, 3.0) };
            (0..dim).map(|_| rng.random_range(lo..hi)).collect()
        })
        .collect();
    let canon: Vec<Expr> = pairs.iter().map(|(e, _)| canonicalize(e)).collect();
    let prints: Vec<Vec<Option<f64>>> = pairs.iter().map(|(e, _)| fingerprint(e, &points)).collect();

    // Bucket by a coarse rounding of the fingerprint, then compare exactly.
    let coarse = |f: &[Option<f64>]| -> Vec<Option<i64>> {
        f.iter().take(8).map(|v| v.map(|x| (x * 1e4).round() as i64)).collect()
    };
    let mut parent: Vec<usize> = (0..pairs.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut i = i;
        while p[i] != r {
            let n = p[i];
            p[i] = r;
            i = n;
        }
        r
    }
    let union = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    let mut by_canon: HashMap<String, usize> = HashMap::new();
    let mut by_print: HashMap<Vec<Option<i64>>, Vec<usize>> = HashMap::new();
    for i in 0..pairs.len() {
        let key = format!("{:?}", canon[i]);
        match by_canon.get(&key) {
            Some(&j) => union(&mut parent, i, j),
            None => {
                by_canon.insert(key, i);
            }
        }
        let bucket = by_print.entry(coarse(&prints[i])).or_default();
        for &j in bucket.iter() {
            if agree(&prints[i], &prints[j]) {
                union(&mut parent, i, j);
            }
        }
        bucket.push(i);
    }
    let mut best: HashMap<usize, &SequenceLabel> = HashMap::new();
    for i in 0..pairs.len() {
        let r = find(&mut parent, i);
        let l = &pairs[i].1;
        best.entry(r)
            .and_modify(|b| {
                if (l.len(), &l.tokens) < (b.len(), &b.tokens) {
                    *b = l;
                }
            })
            .or_insert(l);
    }
    (0..pairs.len()).map(|i| best[&find(&mut parent, i)].clone()).collect()
}

/// Write a text corpus: `expression<TAB>label` per line.
pub fn write_corpus(mut w: impl Write, pairs: &[(Expr, SequenceLabel)]) -> std::io::Result<()> {
    for (e, l) in pairs {
        writeln!(w, "{e}\t{l}")?;
    }
    Ok(())
}

/// Read a text corpus written by [`write_corpus`].
pub fn read_corpus(r: impl BufRead) -> Result<Vec<(Expr, SequenceLabel)>, String> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        let (e, l) = line.split_once('\t').ok_or_else(|| format!("line {}: missing tab", n + 1))?;
        let e = crate::expr::parse(e).map_err(|err| format!("line {}: {err}", n + 1))?;
        let l = l.parse().map_err(|err| format!("line {}: {err}", n + 1))?;
        out.push((e, l));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::expr::parse;
    use crate::netcore::{skeleton, Activation};

    fn ops(s: &Structure) -> Vec<Vec<NodeOp>> {
        let g = NetGraph::from_structure(s, &Params::zeros(&s.arch));
        g.layers.iter().map(|l| l.iter().map(|n| n.op).collect()).collect()
    }

    #[test]
    fn paper_examples() {
        let s = identify_structure(&parse("sin(x0 + x1) + cos(x1)").unwrap(), 5, 2).unwrap();
        assert_eq!(ops(&s), vec![vec![NodeOp::Sin, NodeOp::Cos], vec![NodeOp::Id]]);
        let s = identify_structure(&parse("x0").unwrap(), 5, 1).unwrap();
        assert_eq!(s.depth(), 1);
        assert_eq!(encode(&s, 6).unwrap().tokens, vec![1, 0, 1]);
        let s = identify_structure(&parse("x0^2 * x1").unwrap(), 5, 2).unwrap();
        assert_eq!(ops(&s), vec![vec![NodeOp::Ln, NodeOp::Ln], vec![NodeOp::Exp], vec![NodeOp::Id]]);
        assert_eq!(skeleton(&s).unwrap().to_string(), "c0 * x0^p0 * x1^p1");
    }

    #[test]
    fn params_realize_expression() {
        for src in ["3 * sin(2 * x0 + 1) - x1 / 2", "x0^2 * x1 + exp(x1)", "x0 * sin(x1) + 4", "cos(x0)^2"] {
            let e = parse(src).unwrap();
            let (s, p) = identify_with_params(&e, LabelConfig::new(5, 2)).unwrap();
            for x in [[0.3, 1.2], [1.7, 0.4], [2.2, 2.9]] {
                let want = e.evaluate(&x).unwrap();
                let got = s.forward_with(&p, &x, true, Activation::AbsLog).unwrap();
                assert!((want - got).abs() < 1e-9 * want.abs().max(1.0), "{src}: {want} vs {got}");
            }
        }
    }

    #[test]
    fn id_chains_and_errors() {
        let s = identify_structure(&parse("x0 + x1 + sin(sin(x0))").unwrap(), 5, 2).unwrap();
        assert_eq!(ops(&s), vec![vec![NodeOp::Id, NodeOp::Sin], vec![NodeOp::Id, NodeOp::Sin], vec![NodeOp::Id]]);
        let deep = parse("sin(sin(sin(sin(sin(sin(x0))))))").unwrap();
        assert!(matches!(
            identify_structure(&deep, 5, 1),
            Err(LabelError::Net(NetError::TooDeep { needed: 7, max: 6 }))
        ));
        let wide = parse("sin(x0) + sin(2*x0) + sin(3*x0)").unwrap();
        assert!(matches!(
            identify_structure(&wide, 2, 1),
            Err(LabelError::Net(NetError::ReplicaOverflow { layer: 1, .. }))
        ));
        assert!(matches!(identify_structure(&parse("x3").unwrap(), 5, 2), Err(LabelError::VarOutOfRange { .. })));
        assert!(matches!(
            identify_structure(&parse("x0 - x0 + 1").unwrap(), 5, 1),
            Err(LabelError::Net(NetError::Degenerate))
        ));
    }

    #[test]
    fn merging() {
        let a = parse("x0 + sin(2*x1)").unwrap();
        let b = parse("x0 + 2*sin(x1)*cos(x1)").unwrap();
        let la = encode(&identify_structure(&a, 5, 2).unwrap(), 6).unwrap();
        let lb = encode(&identify_structure(&b, 5, 2).unwrap(), 6).unwrap();
        assert!(la.len() < lb.len());
        let merged = merge_equivalent_labels(&[(a.clone(), la.clone()), (b, lb)]);
        assert_eq!(merged, vec![la.clone(), la.clone()]);
        assert_eq!(merge_equivalent_labels(&[(a, la.clone())]), vec![la]);
        let x = SequenceLabel { tokens: vec![1, 0, 2] };
        let y = SequenceLabel { tokens: vec![1, 0, 1] };
        let e = parse("x0").unwrap();
        let merged = merge_equivalent_labels(&[(e.clone(), x), (parse("x0 * 1").unwrap(), y.clone())]);
        assert_eq!(merged, vec![y.clone(), y]);
    }

    #[test]
    fn corpus_round_trip() {
        let pairs = vec![(parse("sin(x0) + 2").unwrap(), SequenceLabel { tokens: vec![2, 0, 3, 9] })];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &pairs).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "sin(x0) + 2\t2 0 3 9\n");
        assert_eq!(read_corpus(std::io::Cursor::new(buf)).unwrap(), pairs);
    }
}
