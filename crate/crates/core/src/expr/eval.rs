use super::Expr;

impl Expr {
    /// Evaluate at a point. `None` marks a domain failure: ln or sqrt outside
    /// their domain, division by zero, a non-real power, overflow, or an
    /// uninstantiated placeholder.
    pub fn evaluate(&self, x: &[f64]) -> Option<f64> {
        self.evaluate_with(x, &[], &[])
    }

    /// Evaluate with placeholder values supplied separately.
    pub fn evaluate_with(&self, x: &[f64], consts: &[f64], exps: &[f64]) -> Option<f64> {
        match self {
            Expr::Const(v) => v.is_finite().then_some(*v),
            Expr::Var(i) => x.get(*i).copied(),
            Expr::SymConst(k) => consts.get(*k).copied(),
            Expr::ExpSlot(k) => exps.get(*k).copied(),
            Expr::Unary(f, a) => f.apply(a.evaluate_with(x, consts, exps)?),
            Expr::Binary(op, a, b) => {
                let va = a.evaluate_with(x, consts, exps)?;
                let vb = b.evaluate_with(x, consts, exps)?;
                op.apply(va, vb)
            }
        }
    }

    /// Row-wise evaluation over a row-major matrix of width `dim`.
    pub fn evaluate_rows(&self, rows: &[f64], dim: usize) -> Vec<Option<f64>> {
        rows.chunks(dim.max(1)).map(|r| self.evaluate(r)).collect()
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse;

    #[test]
    fn spec_examples() {
        let p = parse("x0^3 + x0^2 + x0").unwrap();
        assert_eq!(p.evaluate(&[1.0]), Some(3.0));
        assert_eq!(parse("ln(x0)").unwrap().evaluate(&[0.0]), None);
        let nguyen5 = parse("sin(x0^2)*cos(x0) - 1").unwrap();
        assert_eq!(nguyen5.evaluate(&[0.0]), Some(-1.0));
    }

    #[test]
    fn failures_do_not_leak_through_later_ops() {
        // exp(-1/x) at 0 would be exp(-inf) = 0 under plain IEEE rules.
        assert_eq!(parse("exp((-1)/x0)").unwrap().evaluate(&[0.0]), None);
        assert_eq!(parse("exp(x0)").unwrap().evaluate(&[1000.0]), None);
        assert_eq!(parse("x0^0.5").unwrap().evaluate(&[-4.0]), None);
        assert_eq!(parse("x0^3").unwrap().evaluate(&[-2.0]), Some(-8.0));
        assert_eq!(parse("c0 * x0").unwrap().evaluate(&[2.0]), None);
        assert_eq!(parse("c0 * x0").unwrap().evaluate_with(&[2.0], &[1.5], &[]), Some(3.0));
    }
}
