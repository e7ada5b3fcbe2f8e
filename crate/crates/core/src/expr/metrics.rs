//! Accuracy, symbolic-solution and extrapolation metrics.

use super::{canonicalize, Expr};
use crate::data::{Dataset, Interval};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of points used by the numerical symbolic-solution check.
pub const FALLBACK_POINTS: usize = 100;
/// Relative tolerance of the numerical symbolic-solution check.
pub const FALLBACK_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("length mismatch: {0} predictions for {1} targets")]
    LengthMismatch(usize, usize),
    #[error("targets have zero variance")]
    DegenerateTarget,
    #[error("every extrapolation point hit a domain failure")]
    NoValidPoints,
}

/// Coefficient of determination. Non-finite predictions give `-inf`.
pub fn r2_score(yhat: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    if yhat.len() != y.len() {
        return Err(MetricError::LengthMismatch(yhat.len(), y.len()));
    }
    if y.len() < 2 {
        return Err(MetricError::TooFewSamples(y.len()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::DegenerateTarget);
    }
    if yhat.iter().any(|v| !v.is_finite()) {
        return Ok(f64::NEG_INFINITY);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// How a candidate relates to the ground truth. The constant is expressed
/// relative to the truth: `candidate = truth + a` or `candidate = b * truth`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Verdict {
    YesAdditive(f64),
    YesMultiplicative(f64),
    No,
}

impl Verdict {
    pub fn is_solution(&self) -> bool {
        !matches!(self, Verdict::No)
    }
}

/// Symbolic-solution test: symbolic first (ratio, then difference), then a
/// numerical check over at least [`FALLBACK_POINTS`] points of `domain`.
pub fn is_symbolic_solution(candidate: &Expr, truth: &Expr, domain: &Dataset) -> Verdict {
    let cand = canonicalize(candidate);
    if !cand.has_vars() {
        return Verdict::No;
    }
    if let Expr::Const(b) = canonicalize(&Expr::div(cand.clone(), truth.clone())) {
        if b.is_finite() && b != 0.0 {
            return Verdict::YesMultiplicative(b);
        }
    }
    if let Expr::Const(a) = canonicalize(&Expr::sub(cand.clone(), truth.clone())) {
        if a.is_finite() {
            return Verdict::YesAdditive(a);
        }
    }
    numeric_verdict(&cand, truth, domain)
}

fn check_points(domain: &Dataset) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..domain.n()).map(|r| domain.row(r).to_vec()).collect();
    if pts.len() < FALLBACK_POINTS {
        let iv = domain.sampling_intervals();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_d3f3);
        while pts.len() < FALLBACK_POINTS {
            pts.push(iv.iter().map(|i| rng.random_range(i.lo..i.hi)).collect());
        }
    }
    pts
}

fn numeric_verdict(cand: &Expr, truth: &Expr, domain: &Dataset) -> Verdict {
    let mut c = Vec::new();
    let mut t = Vec::new();
    for p in check_points(domain) {
        if let (Some(a), Some(b)) = (cand.evaluate(&p), truth.evaluate(&p)) {
            c.push(a);
            t.push(b);
        }
    }
    if c.len() < FALLBACK_POINTS / 10 {
        return Verdict::No;
    }
    let scale = c.iter().chain(&t).fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo, 0.5 * (hi + lo))
    };
    let (cand_spread, _) = spread(&c);
    if cand_spread <= FALLBACK_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Verdict::No;
    }
    let ratios: Vec<f64> = c.iter().zip(&t).filter(|(_, b)| **b != 0.0).map(|(a, b)| a / b).collect();
    if ratios.len() >= FALLBACK_POINTS / 10 {
        let (w, mid) = spread(&ratios);
        if mid != 0.0 && w <= FALLBACK_RTOL * mid.abs() {
            return Verdict::YesMultiplicative(mid);
        }
    }
    let diffs: Vec<f64> = c.iter().zip(&t).map(|(a, b)| a - b).collect();
    let (w, mid) = spread(&diffs);
    if w <= FALLBACK_RTOL * scale {
        return Verdict::YesAdditive(mid);
    }
    Verdict::No
}

/// R² of `model` against `truth` on fresh points drawn uniformly from the
/// training intervals widened by `margin`, restricted to the truth's domain.
/// Points where only the model fails are dropped.
pub fn extrapolation_eval(
    model: &Expr,
    train_intervals: &[Interval],
    margin: f64,
    truth: &Expr,
    n_test: usize,
    rng: &mut impl Rng,
) -> Result<f64, MetricError> {
    let wide: Vec<Interval> = train_intervals.iter().map(|i| i.widen(margin)).collect();
    let mut yt = Vec::new();
    let mut ym = Vec::new();
    let mut attempts = 0;
    while yt.len() < n_test && attempts < 100 * n_test.max(1) {
        attempts += 1;
        let p: Vec<f64> = wide.iter().map(|i| rng.random_range(i.lo..=i.hi)).collect();
        let Some(t) = truth.evaluate(&p) else { continue };
        if let Some(m) = model.evaluate(&p) {
            yt.push(t);
            ym.push(m);
        }
    }
    if yt.is_empty() {
        return Err(MetricError::NoValidPoints);
    }
    r2_score(&ym, &yt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn domain() -> Dataset {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![-1.0 + 0.1 * i as f64]).collect();
        let y = rows.iter().map(|r| r[0]).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn r2_examples() {
        assert_eq!(r2_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
        assert_eq!(r2_score(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(r2_score(&[0.0, 0.0, 0.0], &[0.0, 1.0, 2.0]).unwrap(), -1.5);
        assert_eq!(r2_score(&[1.0, 1.0], &[3.0, 3.0]), Err(MetricError::DegenerateTarget));
        assert_eq!(r2_score(&[1.0], &[3.0]), Err(MetricError::TooFewSamples(1)));
    }

    #[test]
    fn verdict_examples() {
        let t = parse("x0^2").unwrap();
        let d = domain();
        assert_eq!(is_symbolic_solution(&parse("x0^2 + 3").unwrap(), &t, &d), Verdict::YesAdditive(3.0));
        assert_eq!(is_symbolic_solution(&parse("2*x0^2").unwrap(), &t, &d), Verdict::YesMultiplicative(2.0));
        assert_eq!(is_symbolic_solution(&parse("5").unwrap(), &t, &d), Verdict::No);
        assert_eq!(is_symbolic_solution(&t, &t, &d), Verdict::YesMultiplicative(1.0));
        assert_eq!(is_symbolic_solution(&parse("x0^3").unwrap(), &t, &d), Verdict::No);
    }

    #[test]
    fn numeric_fallback_catches_identities() {
        let d = domain();
        let t = parse("sin(2*x0)").unwrap();
        let c = parse("2*sin(x0)*cos(x0) + 1").unwrap();
        assert!(matches!(is_symbolic_solution(&c, &t, &d), Verdict::YesAdditive(a) if (a - 1.0).abs() < 1e-9));
        let near = parse("x0^2 + 1e-6*x0").unwrap();
        assert_eq!(is_symbolic_solution(&near, &parse("x0^2").unwrap(), &d), Verdict::No);
    }

    #[test]
    fn extrapolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = parse("x0^3 + x0^2 + x0").unwrap();
        let iv = [Interval::new(-1.0, 1.0)];
        assert_eq!(extrapolation_eval(&t, &iv, 1.0, &t, 100, &mut rng).unwrap(), 1.0);
        assert!(extrapolation_eval(&parse("0.5").unwrap(), &iv, 1.0, &t, 100, &mut rng).unwrap() <= 0.0);
        let ln = parse("ln(x0)").unwrap();
        let neg = [Interval::new(-3.0, -2.0)];
        assert_eq!(extrapolation_eval(&ln, &neg, 0.5, &ln, 10, &mut rng), Err(MetricError::NoValidPoints));
    }
}
