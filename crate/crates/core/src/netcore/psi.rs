//! Ψ: rewriting ×, ÷ and pow into nested `ln`/`exp`, and back.

use crate::expr::{BinOp, Expr, UnaryFn};

fn ln(e: Expr) -> Expr {
    Expr::unary(UnaryFn::Ln, e)
}

fn exp(e: Expr) -> Expr {
    Expr::unary(UnaryFn::Exp, e)
}

/// Exponent of a product factor: a number or a variable-free expression.
fn scale_exponent(e: &Expr, k: f64) -> Expr {
    match e {
        Expr::Const(v) => Expr::Const(v * k),
        e if k == 1.0 => e.clone(),
        e => Expr::mul(Expr::Const(k), e.clone()),
    }
}

#[derive(Default)]
struct Product {
    scalar: f64,
    /// Variable-free symbolic factors (fitted constants), kept as they are.
    sym: Vec<Expr>,
    factors: Vec<(Expr, Expr)>,
}

impl Product {
    fn collect(&mut self, e: &Expr, k: &Expr) {
        match e {
            Expr::Binary(BinOp::Mul, a, b) => {
                self.collect(a, k);
                self.collect(b, k);
            }
            Expr::Binary(BinOp::Div, a, b) => {
                self.collect(a, k);
                self.collect(b, &scale_exponent(k, -1.0));
            }
            Expr::Const(v) => match k {
                Expr::Const(kv) => self.scalar *= v.powf(*kv),
                k => self.sym.push(Expr::pow(e.clone(), k.clone())),
            },
            e if !e.has_vars() => {
                let one = matches!(k, Expr::Const(v) if *v == 1.0);
                self.sym.push(if one { e.clone() } else { Expr::pow(e.clone(), k.clone()) });
            }
            Expr::Unary(UnaryFn::Sqrt, a) => self.factors.push(((**a).clone(), scale_exponent(k, 0.5))),
            Expr::Binary(BinOp::Pow, a, b) if !b.has_vars() => {
                let kk = match (k, &**b) {
                    (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
                    (Expr::Const(x), b) => scale_exponent(b, *x),
                    (k, Expr::Const(y)) => scale_exponent(k, *y),
                    (k, b) => Expr::mul(k.clone(), b.clone()),
                };
                self.factors.push(((**a).clone(), kk));
            }
            Expr::Binary(BinOp::Pow, a, b) => {
                // a^b with a variable exponent: exp(b ln a).
                let inner = exp(Expr::mul((**b).clone(), ln((**a).clone())));
                self.factors.push((inner, k.clone()));
            }
            e => self.factors.push((e.clone(), k.clone())),
        }
    }
}

fn is_product(e: &Expr) -> bool {
    matches!(e, Expr::Binary(BinOp::Mul | BinOp::Div | BinOp::Pow, _, _) | Expr::Unary(UnaryFn::Sqrt, _))
}

/// Rewrite every ×, ÷, pow and sqrt as `exp(Σ eᵢ·ln fᵢ)` and `|u|` as
/// `exp(0.5·ln(exp(2·ln u)))`. Numeric factors stay outside as a scale.
pub fn psi_forward(e: &Expr) -> Expr {
    match e {
        e if is_product(e) && e.has_vars() => product_form(e),
        Expr::Unary(UnaryFn::Abs, a) => {
            let u = psi_forward(a);
            exp(Expr::mul(Expr::Const(0.5), ln(exp(Expr::mul(Expr::Const(2.0), ln(u))))))
        }
        Expr::Unary(f, a) => Expr::unary(*f, psi_forward(a)),
        Expr::Binary(op, a, b) => Expr::binary(*op, psi_forward(a), psi_forward(b)),
        leaf => leaf.clone(),
    }
}

fn product_form(e: &Expr) -> Expr {
    let mut p = Product { scalar: 1.0, ..Default::default() };
    p.collect(e, &Expr::Const(1.0));
    let body = match p.factors.as_slice() {
        [] => None,
        [(b, Expr::Const(k))] if *k == 1.0 => Some(psi_forward(b)),
        fs => {
            let mut sum: Option<Expr> = None;
            for (b, k) in fs {
                let l = ln(psi_forward(b));
                sum = Some(match (sum, k) {
                    (None, Expr::Const(v)) if *v == 1.0 => l,
                    (None, k) => Expr::mul(k.clone(), l),
                    (Some(s), Expr::Const(v)) if *v == 1.0 => Expr::add(s, l),
                    (Some(s), Expr::Const(v)) if *v == -1.0 => Expr::sub(s, l),
                    (Some(s), k) => Expr::add(s, Expr::mul(k.clone(), l)),
                });
            }
            sum.map(exp)
        }
    };
    let mut scale: Option<Expr> = (p.scalar != 1.0).then_some(Expr::Const(p.scalar));
    for s in p.sym {
        scale = Some(match scale {
            None => s,
            Some(a) => Expr::mul(a, s),
        });
    }
    match (scale, body) {
        (None, None) => Expr::Const(1.0),
        (Some(s), None) => s,
        (None, Some(b)) => b,
        (Some(s), Some(b)) => Expr::mul(s, b),
    }
}

/// Signed terms of a sum.
fn sum_terms(e: &Expr, sign: f64, out: &mut Vec<(f64, Expr)>) {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            sum_terms(a, sign, out);
            sum_terms(b, sign, out);
        }
        Expr::Binary(BinOp::Sub, a, b) => {
            sum_terms(a, sign, out);
            sum_terms(b, -sign, out);
        }
        e => out.push((sign, e.clone())),
    }
}

/// `(base, exponent)` if `t` is `ln u`, `k·ln u` or `ln u·k` with `k` variable-free.
fn log_term(sign: f64, t: &Expr) -> Option<(Expr, Expr)> {
    let signed = |k: Expr| match k {
        Expr::Const(v) => Expr::Const(sign * v),
        k if sign == 1.0 => k,
        k => Expr::mul(Expr::Const(sign), k),
    };
    match t {
        Expr::Unary(UnaryFn::Ln, u) => Some(((**u).clone(), Expr::Const(sign))),
        Expr::Binary(BinOp::Mul, k, l) | Expr::Binary(BinOp::Mul, l, k) if !k.has_vars() => match &**l {
            Expr::Unary(UnaryFn::Ln, u) => Some(((**u).clone(), signed((**k).clone()))),
            _ => None,
        },
        Expr::Binary(BinOp::Mul, b, l) => match &**l {
            // Variable exponent: b·ln a.
            Expr::Unary(UnaryFn::Ln, u) if sign == 1.0 => Some(((**u).clone(), (**b).clone())),
            _ => None,
        },
        _ => None,
    }
}

fn product(fs: Vec<Expr>) -> Option<Expr> {
    fs.into_iter().reduce(Expr::mul)
}

fn invert_exp(arg: &Expr) -> Option<Expr> {
    let mut terms = Vec::new();
    sum_terms(arg, 1.0, &mut terms);
    let mut num = Vec::new();
    let mut den = Vec::new();
    let mut k = 0.0;
    let mut rest: Vec<(f64, Expr)> = Vec::new();
    let mut any_log = false;
    for (s, t) in terms {
        if let Some((base, e)) = log_term(s, &t) {
            any_log = true;
            match e {
                Expr::Const(v) if v == 1.0 => num.push(base),
                Expr::Const(v) if v == -1.0 => den.push(base),
                Expr::Const(v) if v < 0.0 => den.push(Expr::pow(base, Expr::Const(-v))),
                e => num.push(Expr::pow(base, e)),
            }
        } else if let Expr::Const(v) = t {
            k += s * v;
        } else {
            rest.push((s, t));
        }
    }
    if !any_log {
        return None;
    }
    if k != 0.0 {
        num.insert(0, Expr::Const(k.exp()));
    }
    if !rest.is_empty() {
        let mut it = rest.into_iter();
        let (s0, t0) = it.next().expect("nonempty");
        let first = if s0 < 0.0 { Expr::mul(Expr::Const(-1.0), t0) } else { t0 };
        let r = it.fold(first, |acc, (s, t)| if s < 0.0 { Expr::sub(acc, t) } else { Expr::add(acc, t) });
        num.push(exp(r));
    }
    Some(match (product(num), product(den)) {
        (Some(n), None) => n,
        (None, Some(d)) => Expr::pow(d, Expr::Const(-1.0)),
        (Some(n), Some(d)) => Expr::div(n, d),
        (None, None) => Expr::Const(1.0),
    })
}

fn inverse_pass(e: &Expr) -> Expr {
    match e {
        Expr::Unary(UnaryFn::Exp, a) => {
            let a = inverse_pass(a);
            invert_exp(&a).unwrap_or_else(|| exp(a))
        }
        Expr::Unary(f, a) => Expr::unary(*f, inverse_pass(a)),
        Expr::Binary(op, a, b) => Expr::binary(*op, inverse_pass(a), inverse_pass(b)),
        leaf => leaf.clone(),
    }
}

/// Undo Ψ: every `exp` whose argument carries `ln` terms becomes a product
/// of powers, applied bottom-up until nothing changes.
pub fn psi_inverse(e: &Expr) -> Expr {
    let mut cur = e.clone();
    for _ in 0..32 {
        let next = inverse_pass(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}
