//! Expression trees: the common currency for targets, skeletons and fitted models.
//!
//! An [`Expr`] is either fully instantiated (only `Const` and `Var` leaves) or a
//! skeleton carrying `SymConst`/`ExpSlot` placeholders that an optimizer fills in.

mod canon;
mod eval;
mod metrics;
mod parse;
mod tape;

use std::cmp::Ordering;
use std::fmt;

pub use canon::{canonicalize, display_form};
pub use metrics::{
    extrapolation_eval, is_symbolic_solution, r2_score, MetricError, Verdict, FALLBACK_POINTS, FALLBACK_RTOL,
};
pub use parse::{parse, parse_with_dim, ParseError};
pub use tape::Tape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Id,
}

impl UnaryFn {
    pub const ALL: [UnaryFn; 7] =
        [UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Exp, UnaryFn::Ln, UnaryFn::Sqrt, UnaryFn::Abs, UnaryFn::Id];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Abs => "abs",
            UnaryFn::Id => "id",
        }
    }

    pub fn from_name(s: &str) -> Option<UnaryFn> {
        UnaryFn::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Real-valued application; `None` outside the domain.
    pub fn apply(self, v: f64) -> Option<f64> {
        let out = match self {
            UnaryFn::Sin => v.sin(),
            UnaryFn::Cos => v.cos(),
            UnaryFn::Exp => v.exp(),
            UnaryFn::Ln if v <= 0.0 => return None,
            UnaryFn::Ln => v.ln(),
            UnaryFn::Sqrt if v < 0.0 => return None,
            UnaryFn::Sqrt => v.sqrt(),
            UnaryFn::Abs => v.abs(),
            UnaryFn::Id => v,
        };
        out.is_finite().then_some(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    pub fn apply(self, a: f64, b: f64) -> Option<f64> {
        let out = match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div if b == 0.0 => return None,
            BinOp::Div => a / b,
            BinOp::Pow => a.powf(b),
        };
        out.is_finite().then_some(out)
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    /// Placeholder for a fitted real constant.
    SymConst(usize),
    /// Placeholder for an exponent drawn from a discrete value set.
    ExpSlot(usize),
    Unary(UnaryFn, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn num(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn unary(f: UnaryFn, a: Expr) -> Expr {
        Expr::Unary(f, Box::new(a))
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn pow(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Pow, a, b)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Unary(_, a) => vec![a],
            Expr::Binary(_, a, b) => vec![a, b],
            _ => Vec::new(),
        }
    }

    /// Total node count.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    /// Largest variable index plus one, or 0 for variable-free expressions.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Var(i) => i + 1,
            _ => self.children().iter().map(|c| c.arity()).max().unwrap_or(0),
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Expr::Var(_) => true,
            _ => self.children().iter().any(|c| c.has_vars()),
        }
    }

    pub fn is_instantiated(&self) -> bool {
        match self {
            Expr::SymConst(_) | Expr::ExpSlot(_) => false,
            _ => self.children().iter().all(|c| c.is_instantiated()),
        }
    }

    /// One past the largest `SymConst` id.
    pub fn num_sym_consts(&self) -> usize {
        match self {
            Expr::SymConst(k) => k + 1,
            _ => self.children().iter().map(|c| c.num_sym_consts()).max().unwrap_or(0),
        }
    }

    /// One past the largest `ExpSlot` id.
    pub fn num_exp_slots(&self) -> usize {
        match self {
            Expr::ExpSlot(k) => k + 1,
            _ => self.children().iter().map(|c| c.num_exp_slots()).max().unwrap_or(0),
        }
    }

    /// Replace leaves bottom-up with `f`; returning `None` keeps the leaf.
    pub fn map_leaves(&self, f: &mut impl FnMut(&Expr) -> Option<Expr>) -> Expr {
        match self {
            Expr::Unary(op, a) => Expr::unary(*op, a.map_leaves(f)),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.map_leaves(f), b.map_leaves(f)),
            leaf => f(leaf).unwrap_or_else(|| leaf.clone()),
        }
    }

    /// Substitute exponent slots only, leaving `SymConst`s in place.
    pub fn with_exponents(&self, exps: &[f64]) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::ExpSlot(k) => exps.get(*k).map(|v| Expr::Const(*v)),
            _ => None,
        })
    }

    /// Substitute every placeholder.
    pub fn instantiate(&self, consts: &[f64], exps: &[f64]) -> Expr {
        self.map_leaves(&mut |e| match e {
            Expr::SymConst(k) => consts.get(*k).map(|v| Expr::Const(*v)),
            Expr::ExpSlot(k) => exps.get(*k).map(|v| Expr::Const(*v)),
            _ => None,
        })
    }

    /// Renumber `SymConst` and `ExpSlot` ids by first appearance in a
    /// left-to-right traversal, so skeletons equal up to slot naming compare equal.
    pub fn renumber_slots(&self) -> Expr {
        let mut consts: Vec<usize> = Vec::new();
        let mut exps: Vec<usize> = Vec::new();
        self.map_leaves(&mut |e| match e {
            Expr::SymConst(k) => Some(Expr::SymConst(slot_index(&mut consts, *k))),
            Expr::ExpSlot(k) => Some(Expr::ExpSlot(slot_index(&mut exps, *k))),
            _ => None,
        })
    }

    /// Structural total order used for sorting commutative operands.
    pub fn total_cmp(&self, other: &Expr) -> Ordering {
        fn rank(e: &Expr) -> u8 {
            match e {
                Expr::Const(_) => 0,
                Expr::Var(_) => 1,
                Expr::SymConst(_) => 2,
                Expr::ExpSlot(_) => 3,
                Expr::Unary(..) => 4,
                Expr::Binary(..) => 5,
            }
        }
        match (self, other) {
            (Expr::Const(a), Expr::Const(b)) => a.total_cmp(b),
            (Expr::Var(a), Expr::Var(b))
            | (Expr::SymConst(a), Expr::SymConst(b))
            | (Expr::ExpSlot(a), Expr::ExpSlot(b)) => a.cmp(b),
            (Expr::Unary(f, a), Expr::Unary(g, b)) => f.cmp(g).then_with(|| a.total_cmp(b)),
            (Expr::Binary(o, a1, a2), Expr::Binary(p, b1, b2)) => {
                o.cmp(p).then_with(|| a1.total_cmp(b1)).then_with(|| a2.total_cmp(b2))
            }
            _ => rank(self).cmp(&rank(other)),
        }
    }

    /// Structural equality that treats constants bitwise (NaN equals NaN).
    pub fn same(&self, other: &Expr) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }

    /// Canonical binary-tree node count after simplification; see [`display_form`].
    pub fn complexity(&self) -> usize {
        display_form(self).size()
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            _ => 4,
        }
    }
}

fn slot_index(seen: &mut Vec<usize>, k: usize) -> usize {
    match seen.iter().position(|&s| s == k) {
        Some(i) => i,
        None => {
            seen.push(k);
            seen.len() - 1
        }
    }
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn format_number(v: f64) -> String {
    let a = v.abs();
    let body = if a.fract() == 0.0 && a < 1e15 { format!("{}", a as u64) } else { format!("{a:?}") };
    if v.is_sign_negative() {
        format!("(-{body})")
    } else {
        body
    }
}

impl fmt::Display for Expr {
    /// Literal infix form; parsing it yields an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{}", format_number(*v)),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::SymConst(k) => write!(f, "c{k}"),
            Expr::ExpSlot(k) => write!(f, "p{k}"),
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                let (left_paren, right_paren) = if *op == BinOp::Pow {
                    (a.precedence() <= p, b.precedence() < p)
                } else {
                    (a.precedence() < p, b.precedence() <= p)
                };
                write_operand(f, a, left_paren)?;
                if *op == BinOp::Pow {
                    write!(f, "^")?;
                } else {
                    write!(f, " {} ", op.symbol())?;
                }
                write_operand(f, b, right_paren)
            }
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
    if paren {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Serialized as its infix text.
impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_literal_and_minimal() {
        let e = Expr::sub(Expr::var(0), Expr::sub(Expr::var(1), Expr::num(2.0)));
        assert_eq!(e.to_string(), "x0 - (x1 - 2)");
        let p = Expr::pow(Expr::var(0), Expr::pow(Expr::num(2.0), Expr::num(3.0)));
        assert_eq!(p.to_string(), "x0^2^3");
        let q = Expr::pow(Expr::pow(Expr::var(0), Expr::num(2.0)), Expr::num(-0.5));
        assert_eq!(q.to_string(), "(x0^2)^(-0.5)");
    }

    #[test]
    fn renumbering_is_by_first_appearance() {
        let e = Expr::add(Expr::mul(Expr::SymConst(4), Expr::pow(Expr::var(0), Expr::ExpSlot(7))), Expr::SymConst(2));
        assert_eq!(e.renumber_slots().to_string(), "c0 * x0^p0 + c1");
    }

    #[test]
    fn depth_counts_edges() {
        assert_eq!(Expr::var(0).depth(), 0);
        let e = parse("sin(x0 + x1) + cos(x1)").unwrap();
        assert_eq!(e.depth(), 3);
        assert_eq!(e.size(), 7);
    }
}
