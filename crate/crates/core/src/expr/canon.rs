//! Deterministic normal form.
//!
//! Sums are flattened into `coefficient * monomial` terms and products into
//! `base ^ exponent` factors; like terms and same-base numeric powers merge,
//! operands are sorted by [`Expr::total_cmp`], and `exp`/`ln` pairs collapse.
//! `Sub`, `Div` and `Sqrt` never survive: they become `Add`, `Pow(_, -1)` and
//! `Pow(_, 0.5)`. [`display_form`] restores subtraction and division for
//! printing and complexity counting.

use super::{BinOp, Expr, UnaryFn};

const MAX_PASSES: usize = 16;

/// Rewrite to the normal form. Idempotent.
pub fn canonicalize(e: &Expr) -> Expr {
    let mut cur = simplify(e);
    for _ in 0..MAX_PASSES {
        let next = simplify(&cur);
        if next.same(&cur) {
            return cur;
        }
        cur = next;
    }
    cur
}

fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn is_integer(v: f64) -> bool {
    v.is_finite() && v.fract() == 0.0
}

fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Const(v) => Expr::Const(clean(*v)),
        Expr::Var(_) | Expr::SymConst(_) | Expr::ExpSlot(_) => e.clone(),
        Expr::Unary(f, a) => simp_unary(*f, simplify(a)),
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => {
            let mut s = Sum::default();
            s.add_raw(e, 1.0);
            s.build()
        }
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => {
            let mut p = Prod::new();
            p.add_raw(e, 1.0);
            p.build()
        }
        Expr::Binary(BinOp::Pow, a, b) => simp_pow(simplify(a), simplify(b)),
    }
}

#[derive(Default)]
struct Sum {
    constant: f64,
    terms: Vec<(f64, Expr)>,
}

impl Sum {
    fn add_raw(&mut self, e: &Expr, scale: f64) {
        match e {
            Expr::Binary(BinOp::Add, a, b) => {
                self.add_raw(a, scale);
                self.add_raw(b, scale);
            }
            Expr::Binary(BinOp::Sub, a, b) => {
                self.add_raw(a, scale);
                self.add_raw(b, -scale);
            }
            other => self.add_simplified(simplify(other), scale),
        }
    }

    fn add_simplified(&mut self, e: Expr, scale: f64) {
        match e {
            Expr::Const(v) => self.constant += scale * v,
            Expr::Binary(BinOp::Add, a, b) => {
                self.add_simplified(*a, scale);
                self.add_simplified(*b, scale);
            }
            Expr::Binary(BinOp::Mul, ..) => {
                let (c, rest) = split_coefficient(&e);
                match rest {
                    Some(m) => self.terms.push((scale * c, m)),
                    None => self.constant += scale * c,
                }
            }
            other => self.terms.push((scale, other)),
        }
    }

    fn build(mut self) -> Expr {
        self.terms.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut merged: Vec<(f64, Expr)> = Vec::new();
        for (c, m) in self.terms {
            match merged.last_mut() {
                Some((lc, lm)) if lm.same(&m) => *lc += c,
                _ => merged.push((c, m)),
            }
        }
        let mut acc: Option<Expr> = None;
        for (c, m) in merged {
            if c == 0.0 {
                continue;
            }
            let t = scaled(c, m);
            acc = Some(match acc {
                None => t,
                Some(a) => Expr::add(a, t),
            });
        }
        let k = clean(self.constant);
        match acc {
            None => Expr::Const(k),
            Some(a) if k == 0.0 => a,
            Some(a) => Expr::add(a, Expr::Const(k)),
        }
    }
}

/// `c * m` with the coefficient as the leftmost factor of the product chain.
fn scaled(c: f64, m: Expr) -> Expr {
    if c == 1.0 {
        return m;
    }
    let mut factors = Vec::new();
    flatten_mul(&m, &mut factors);
    factors.into_iter().fold(Expr::Const(clean(c)), Expr::mul)
}

fn flatten_mul(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinOp::Mul, a, b) => {
            flatten_mul(a, out);
            flatten_mul(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn flatten_add(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary(BinOp::Add, a, b) => {
            flatten_add(a, out);
            flatten_add(b, out);
        }
        other => out.push(other.clone()),
    }
}

/// Split a product into its numeric coefficient and the remaining factors.
fn split_coefficient(e: &Expr) -> (f64, Option<Expr>) {
    let mut factors = Vec::new();
    flatten_mul(e, &mut factors);
    let mut c = 1.0;
    let mut rest: Option<Expr> = None;
    for f in factors {
        match f {
            Expr::Const(v) => c *= v,
            other => {
                rest = Some(match rest {
                    None => other,
                    Some(r) => Expr::mul(r, other),
                })
            }
        }
    }
    (c, rest)
}

struct Prod {
    coef: f64,
    factors: Vec<(Expr, Expr)>,
}

impl Prod {
    fn new() -> Prod {
        Prod { coef: 1.0, factors: Vec::new() }
    }

    fn add_raw(&mut self, e: &Expr, sign: f64) {
        match e {
            Expr::Binary(BinOp::Mul, a, b) => {
                self.add_raw(a, sign);
                self.add_raw(b, sign);
            }
            Expr::Binary(BinOp::Div, a, b) => {
                self.add_raw(a, sign);
                self.add_raw(b, -sign);
            }
            other => self.add_simplified(simplify(other), sign),
        }
    }

    fn add_simplified(&mut self, e: Expr, sign: f64) {
        match e {
            Expr::Const(v) if sign == 1.0 => self.coef *= v,
            Expr::Const(v) if v != 0.0 && (1.0 / v).is_finite() => self.coef /= v,
            Expr::Binary(BinOp::Mul, a, b) => {
                self.add_simplified(*a, sign);
                self.add_simplified(*b, sign);
            }
            Expr::Binary(BinOp::Pow, b, x) => {
                let x = scale_exponent(*x, sign);
                self.factors.push((*b, x));
            }
            other => self.factors.push((other, Expr::Const(sign))),
        }
    }

    fn build(mut self) -> Expr {
        if self.coef == 0.0 {
            return Expr::Const(0.0);
        }
        self.factors.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.total_cmp(&b.1)));
        let mut merged: Vec<(Expr, Expr)> = Vec::new();
        for (b, x) in self.factors {
            if let Some((lb, lx)) = merged.last_mut() {
                if lb.same(&b) {
                    if let (Expr::Const(p), Expr::Const(q)) = (&*lx, &x) {
                        *lx = Expr::Const(clean(p + q));
                        continue;
                    }
                }
            }
            merged.push((b, x));
        }
        let mut coef = self.coef;
        let mut kept: Vec<Expr> = Vec::new();
        for (b, x) in merged {
            if matches!(x, Expr::Const(v) if v == 0.0) {
                continue;
            }
            let f = simp_pow(b, x);
            match f {
                Expr::Const(v) => coef *= v,
                other => kept.push(other),
            }
        }
        if kept.len() == 1 && coef != 1.0 && matches!(kept[0], Expr::Binary(BinOp::Add, ..)) {
            let mut s = Sum::default();
            s.add_simplified(kept.pop().unwrap(), coef);
            return s.build();
        }
        let mut out: Vec<Expr> = Vec::new();
        for f in kept {
            flatten_mul(&f, &mut out);
        }
        let mut rest: Vec<Expr> = Vec::new();
        for f in out {
            match f {
                Expr::Const(v) => coef *= v,
                other => rest.push(other),
            }
        }
        rest.sort_by(|a, b| a.total_cmp(b));
        let coef = clean(coef);
        if coef == 0.0 {
            return Expr::Const(0.0);
        }
        let mut it = rest.into_iter();
        let first = match it.next() {
            None => return Expr::Const(coef),
            Some(f) if coef == 1.0 => f,
            Some(f) => Expr::mul(Expr::Const(coef), f),
        };
        it.fold(first, Expr::mul)
    }
}

fn scale_exponent(x: Expr, sign: f64) -> Expr {
    if sign == 1.0 {
        return x;
    }
    match x {
        Expr::Const(v) => Expr::Const(clean(v * sign)),
        other => simplify(&Expr::mul(Expr::Const(sign), other)),
    }
}

fn simp_pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (_, Expr::Const(k)) if *k == 0.0 => return Expr::Const(1.0),
        (_, Expr::Const(k)) if *k == 1.0 => return a,
        (Expr::Const(x), Expr::Const(k)) => {
            return match BinOp::Pow.apply(*x, *k) {
                Some(v) => Expr::Const(clean(v)),
                None => Expr::pow(a, b),
            }
        }
        (Expr::Const(x), _) if *x == 1.0 => return Expr::Const(1.0),
        _ => {}
    }
    let Expr::Const(k) = b else {
        if let Expr::Binary(BinOp::Pow, u, p) = &a {
            if let Expr::Const(pk) = **p {
                // (u^p)^q with numeric p and symbolic q stays as is unless p = 1.
                if pk == 1.0 {
                    return simp_pow((**u).clone(), b);
                }
            }
        }
        return Expr::pow(a, b);
    };
    match a {
        Expr::Binary(BinOp::Pow, u, p) => match *p {
            Expr::Const(pk) if is_integer(k) => simp_pow(*u, Expr::Const(clean(pk * k))),
            Expr::Const(pk) if is_integer(pk) && pk % 2.0 == 0.0 => {
                simp_pow(simp_unary(UnaryFn::Abs, *u), Expr::Const(clean(pk * k)))
            }
            p if is_integer(k) => Expr::pow(*u, simplify(&Expr::mul(p, Expr::Const(k)))),
            p => Expr::pow(Expr::pow(*u, p), Expr::Const(k)),
        },
        Expr::Binary(BinOp::Mul, ..) if is_integer(k) => {
            let mut prod = Prod::new();
            prod.add_simplified(a, 1.0);
            prod.coef = prod.coef.powf(k);
            for f in prod.factors.iter_mut() {
                f.1 = match &f.1 {
                    Expr::Const(v) => Expr::Const(clean(v * k)),
                    other => simplify(&Expr::mul(other.clone(), Expr::Const(k))),
                };
            }
            prod.build()
        }
        Expr::Unary(UnaryFn::Abs, u) if is_integer(k) && k % 2.0 == 0.0 => simp_pow(*u, Expr::Const(k)),
        other => Expr::pow(other, Expr::Const(k)),
    }
}

fn simp_unary(f: UnaryFn, a: Expr) -> Expr {
    match f {
        UnaryFn::Id => return a,
        UnaryFn::Sqrt => return simp_pow(a, Expr::Const(0.5)),
        _ => {}
    }
    if let Expr::Const(v) = a {
        return match f.apply(v) {
            Some(r) => Expr::Const(clean(r)),
            None => Expr::unary(f, a),
        };
    }
    match (f, a) {
        (UnaryFn::Exp, Expr::Unary(UnaryFn::Ln, u)) => *u,
        (UnaryFn::Ln, Expr::Unary(UnaryFn::Exp, u)) => *u,
        (UnaryFn::Exp, a) => merge_exp_of_logs(a),
        (UnaryFn::Abs, a) => match a {
            Expr::Unary(UnaryFn::Abs | UnaryFn::Exp, _) => a,
            Expr::Binary(BinOp::Pow, _, ref k) if matches!(**k, Expr::Const(v) if is_integer(v) && v % 2.0 == 0.0) => a,
            other => Expr::unary(UnaryFn::Abs, other),
        },
        (f, a) => Expr::unary(f, a),
    }
}

/// `exp(c1 ln a1 + ... + k + rest)` becomes `e^k * a1^c1 * ... * exp(rest)`;
/// left alone when no logarithm term is present.
fn merge_exp_of_logs(a: Expr) -> Expr {
    let mut terms = Vec::new();
    flatten_add(&a, &mut terms);
    let mut powers: Vec<Expr> = Vec::new();
    let mut rest: Vec<Expr> = Vec::new();
    let mut k = 0.0;
    for t in terms {
        if let Expr::Const(v) = t {
            k += v;
            continue;
        }
        let (c, m) = split_coefficient(&t);
        let Some(m) = m else {
            k += c;
            continue;
        };
        let mut factors = Vec::new();
        flatten_mul(&m, &mut factors);
        let logs: Vec<usize> =
            (0..factors.len()).filter(|&i| matches!(factors[i], Expr::Unary(UnaryFn::Ln, _))).collect();
        if logs.len() == 1 {
            let Expr::Unary(_, base) = factors.remove(logs[0]) else { unreachable!() };
            let exponent = factors.into_iter().fold(Expr::Const(c), Expr::mul);
            powers.push(Expr::pow(*base, exponent));
        } else {
            rest.push(t);
        }
    }
    if powers.is_empty() {
        return Expr::unary(UnaryFn::Exp, a);
    }
    let ek = k.exp();
    let mut factors = powers;
    if ek.is_finite() {
        factors.push(Expr::Const(ek));
    } else {
        rest.push(Expr::Const(k));
    }
    if let Some(r) = rest.into_iter().reduce(Expr::add) {
        factors.push(Expr::unary(UnaryFn::Exp, r));
    }
    let product = factors.into_iter().reduce(Expr::mul).unwrap();
    simplify(&product)
}

/// The canonical form with subtraction and division restored, e.g.
/// `x^5 + (-2)*x^3 + x` becomes `x^5 - 2*x^3 + x`. [`Expr::complexity`]
/// counts the nodes of this tree.
pub fn display_form(e: &Expr) -> Expr {
    restore(&canonicalize(e))
}

fn restore(e: &Expr) -> Expr {
    match e {
        Expr::Binary(BinOp::Add, ..) => {
            let mut terms = Vec::new();
            flatten_add(e, &mut terms);
            let mut it = terms.iter();
            let mut acc = restore(it.next().unwrap());
            for t in it {
                acc = match negated(t) {
                    Some(m) => Expr::sub(acc, restore(&m)),
                    None => Expr::add(acc, restore(t)),
                };
            }
            acc
        }
        Expr::Binary(BinOp::Mul, ..) | Expr::Binary(BinOp::Pow, ..) => restore_product(e),
        Expr::Unary(f, a) => Expr::unary(*f, restore(a)),
        Expr::Binary(op, a, b) => Expr::binary(*op, restore(a), restore(b)),
        leaf => leaf.clone(),
    }
}

/// `Some(|t|)` when `t` carries a negative numeric sign.
fn negated(t: &Expr) -> Option<Expr> {
    match t {
        Expr::Const(v) if *v < 0.0 => Some(Expr::Const(-v)),
        Expr::Binary(BinOp::Mul, ..) => {
            let (c, rest) = split_coefficient(t);
            (c < 0.0).then(|| scaled(-c, rest.unwrap_or(Expr::Const(1.0))))
        }
        _ => None,
    }
}

fn restore_product(e: &Expr) -> Expr {
    let mut factors = Vec::new();
    flatten_mul(e, &mut factors);
    let mut num: Vec<Expr> = Vec::new();
    let mut den: Vec<Expr> = Vec::new();
    for f in factors {
        match f {
            Expr::Binary(BinOp::Pow, b, x) => match *x {
                Expr::Const(k) if k < 0.0 => {
                    den.push(if k == -1.0 { restore(&b) } else { Expr::pow(restore(&b), Expr::Const(-k)) })
                }
                x => num.push(Expr::pow(restore(&b), restore(&x))),
            },
            other => num.push(restore(&other)),
        }
    }
    let numerator = num.into_iter().reduce(Expr::mul);
    match den.into_iter().reduce(Expr::mul) {
        None => numerator.unwrap_or(Expr::Const(1.0)),
        Some(d) => Expr::div(numerator.unwrap_or(Expr::Const(1.0)), d),
    }
}

impl Expr {
    /// Human-oriented rendering of the canonical form.
    pub fn pretty(&self) -> String {
        display_form(self).to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn canon(s: &str) -> Expr {
        canonicalize(&parse(s).unwrap())
    }

    #[test]
    fn spec_examples() {
        assert_eq!(canon("exp(2*ln(x0))"), parse("x0^2").unwrap());
        assert_eq!(canon("1 + 2"), Expr::Const(3.0));
        assert_eq!(canon("x1*x0"), parse("x0*x1").unwrap());
    }

    #[test]
    fn merges_and_folds() {
        assert_eq!(canon("exp(ln(x0))"), Expr::var(0));
        assert_eq!(canon("ln(exp(x0 + 1))"), canon("x0 + 1"));
        assert_eq!(canon("-(-x0)"), Expr::var(0));
        assert_eq!(canon("x0 - x0"), Expr::Const(0.0));
        assert_eq!(canon("x0*x0/x0"), Expr::var(0));
        assert_eq!(canon("(x0^2)^3"), parse("x0^6").unwrap());
        assert_eq!(canon("(x0^2)^0.5"), parse("abs(x0)").unwrap());
        assert_eq!(canon("3*(x0 + 1)"), canon("3*x0 + 3"));
        assert_eq!(canon("exp(ln(x0) + ln(x1))"), parse("x0*x1").unwrap());
        assert_eq!(canon("exp(ln(x0) - ln(x1))"), canon("x0/x1"));
        assert_eq!(canon("sqrt(x0)"), parse("x0^0.5").unwrap());
        assert_eq!(canon("exp(x1*ln(x0))"), parse("x0^x1").unwrap());
        assert_eq!(canon("(x0 + x1) - (x1 + x0)"), Expr::Const(0.0));
        assert_eq!(canon("x0^2 - (x0^2 + 3)"), Expr::Const(-3.0));
        assert_eq!(canon("(2*x0^2)/x0^2"), Expr::Const(2.0));
        assert_eq!(canon("exp(sin(x0))"), parse("exp(sin(x0))").unwrap());
    }

    #[test]
    fn display_restores_sub_and_div() {
        assert_eq!(parse("x0^5 - 2*x0^3 + x0").unwrap().pretty(), "x0 - 2 * x0^3 + x0^5");
        assert_eq!(canon("x0/x1").to_string(), "x0 * x1^(-1)");
        assert_eq!(parse("x0/x1").unwrap().pretty(), "x0 / x1");
    }

    #[test]
    fn complexity_convention() {
        assert_eq!(Expr::var(0).complexity(), 1);
        assert_eq!(parse("x0 + 1").unwrap().complexity(), 3);
        assert_eq!(parse("x0^5 - 2*x0^3 + x0").unwrap().complexity(), 11);
        assert_eq!(parse("x0^6 - 2*x0^4 + x0^2").unwrap().complexity(), 13);
        assert_eq!(parse("x0/x1").unwrap().complexity(), 3);
        assert_eq!(parse("x0 + (1 + 2)").unwrap().complexity(), 3);
    }
}
