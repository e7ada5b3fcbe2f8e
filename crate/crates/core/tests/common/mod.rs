//! Generators and a reference evaluator shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use unisym_core::expr::{BinOp, Expr, UnaryFn};
use unisym_core::netcore::{Architecture, MaskSet, Params, Structure};

/// A unified-layout structure whose mask bits are set with probability `density`.
pub fn random_structure(rng: &mut impl Rng, depth: usize, m: usize, d0: usize, density: f64) -> Structure {
    let arch = Architecture::unified(depth, m, d0);
    let bits: Vec<bool> = (0..arch.mask_len()).map(|_| rng.random_bool(density)).collect();
    let masks = MaskSet::unflatten(&arch, &bits).unwrap();
    Structure::new(arch, masks).unwrap()
}

/// Uniform parameters in `±scale`, zeroed outside the masks.
pub fn random_params(rng: &mut impl Rng, s: &Structure, scale: f64) -> Params {
    Params::random(&s.arch, scale, rng).masked(&s.masks)
}

fn unary(f: UnaryFn, a: Expr) -> Expr {
    Expr::Unary(f, Box::new(a))
}

/// Expressions over `x0..x{d-1}` with every operator, constants printed exactly.
pub fn arb_expr(d: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0..d).prop_map(Expr::Var), (-400i32..400).prop_map(|k| Expr::Const(k as f64 / 8.0)),];
    leaf.prop_recursive(5, 40, 2, |inner| {
        let un = prop::sample::select(UnaryFn::ALL.to_vec());
        let bin = prop::sample::select(vec![BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow]);
        prop_oneof![
            (un, inner.clone()).prop_map(|(f, a)| unary(f, a)),
            (bin, inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

/// Like [`arb_expr`] but every ×, ÷ and pow argument is symbolically
/// positive: a positive constant, `exp(·)`, or a variable (taken as positive).
/// Expressions that overflow or underflow to a non-finite value are dropped.
pub fn arb_positive_args_expr(d: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0..d).prop_map(Expr::Var), (1i32..64).prop_map(|k| Expr::Const(k as f64 / 4.0)),];
    leaf.prop_recursive(4, 24, 2, move |inner| {
        let positive = prop_oneof![(0..d).prop_map(Expr::Var), inner.clone().prop_map(|a| unary(UnaryFn::Exp, a)),];
        let un = prop::sample::select(vec![UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Exp]);
        let exps = prop::sample::select(vec![-2.0, -1.0, 0.5, 2.0, 3.0]);
        prop_oneof![
            (un, inner.clone()).prop_map(|(f, a)| unary(f, a)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::add(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::sub(a, b)),
            (positive.clone(), positive.clone()).prop_map(|(a, b)| Expr::mul(a, b)),
            (positive.clone(), positive.clone()).prop_map(|(a, b)| Expr::div(a, b)),
            (positive, exps).prop_map(|(a, p)| Expr::pow(a, Expr::Const(p))),
        ]
    })
    .prop_filter("finite in f64", move |e| e.evaluate(&vec![1.3; d]).is_some())
}

/// Independent reference semantics: plain `f64` arithmetic, `None` when the
/// result or any intermediate leaves the reals.
pub fn oracle_eval(e: &Expr, x: &[f64]) -> Option<f64> {
    let v = match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => x[*i],
        Expr::SymConst(_) | Expr::ExpSlot(_) => return None,
        Expr::Unary(f, a) => {
            let a = oracle_eval(a, x)?;
            match f {
                UnaryFn::Sin => a.sin(),
                UnaryFn::Cos => a.cos(),
                UnaryFn::Exp => a.exp(),
                UnaryFn::Ln if a > 0.0 => a.ln(),
                UnaryFn::Sqrt if a >= 0.0 => a.sqrt(),
                UnaryFn::Ln | UnaryFn::Sqrt => return None,
                UnaryFn::Abs => a.abs(),
                UnaryFn::Id => a,
            }
        }
        Expr::Binary(op, a, b) => {
            let (a, b) = (oracle_eval(a, x)?, oracle_eval(b, x)?);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b != 0.0 => a / b,
                BinOp::Div => return None,
                BinOp::Pow => a.powf(b),
            }
        }
    };
    v.is_finite().then_some(v)
}

/// Structural equality with constants compared to relative `rtol`, so that
/// last-digit differences from constant folding do not count.
pub fn same_up_to_rounding(a: &Expr, b: &Expr, rtol: f64) -> bool {
    match (a, b) {
        (Expr::Const(x), Expr::Const(y)) => x == y || (x - y).abs() <= rtol * x.abs().max(y.abs()),
        (Expr::Unary(f, x), Expr::Unary(g, y)) => f == g && same_up_to_rounding(x, y, rtol),
        (Expr::Binary(o, x1, x2), Expr::Binary(p, y1, y2)) => {
            o == p && same_up_to_rounding(x1, y1, rtol) && same_up_to_rounding(x2, y2, rtol)
        }
        _ => a.same(b),
    }
}
