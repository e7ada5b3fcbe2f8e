use crate::data::{Dataset, Interval};
use crate::expr::{parse, Expr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Noise levels the suites are run at.
pub const NOISE_LEVELS: [f64; 4] = [0.0, 0.001, 0.01, 0.1];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub name: String,
    pub truth: Expr,
    pub train: Vec<Interval>,
    pub test: Vec<Interval>,
    pub noise: f64,
    pub n_train: usize,
    pub n_test: usize,
}

impl BenchmarkProblem {
    /// Family of the name, e.g. `nguyen` for `Nguyen-4` and `nguyen-c` for
    /// the constant variants such as `Nguyen-1c`.
    pub fn family(&self) -> String {
        let (base, idx) = self.name.split_once('-').unwrap_or((&self.name, ""));
        let base = base.to_lowercase();
        if idx.ends_with('c') {
            format!("{base}-c")
        } else {
            base
        }
    }

    pub fn with_noise(&self, noise: f64) -> BenchmarkProblem {
        BenchmarkProblem { noise, ..self.clone() }
    }

    /// Training and test sets. The test set uses a seed derived from, and
    /// distinct from, `seed`. Noise `level·σ(y)·N(0,1)` goes on training targets only.
    pub fn sample(&self, seed: u64) -> (Dataset, Dataset) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = sample_points(&self.truth, &self.train, self.n_train, &mut rng);
        let mut test_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_5eed_0000_0001);
        let test = sample_points(&self.truth, &self.test, self.n_test, &mut test_rng);
        if self.noise == 0.0 {
            return (train, test);
        }
        let sd = train.y_variance().sqrt();
        let y: Vec<f64> =
            train.y().iter().map(|v| v + self.noise * sd * rng.sample::<f64, _>(StandardNormal)).collect();
        (train.with_y(y).expect("finite noise"), test)
    }
}

/// Uniform points where `truth` is defined.
fn sample_points(truth: &Expr, iv: &[Interval], n: usize, rng: &mut impl Rng) -> Dataset {
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    while rows.len() < n {
        let x: Vec<f64> = iv.iter().map(|i| rng.random_range(i.lo..i.hi)).collect();
        if let Some(y) = truth.evaluate(&x) {
            rows.push(x);
            ys.push(y);
        }
    }
    let flat = rows.concat();
    Dataset::new(iv.len(), flat, ys, iv.to_vec()).expect("finite samples")
}

const TABLE: &[(&str, &str)] = &[
    ("Nguyen-1", "x0^3 + x0^2 + x0"),
    ("Nguyen-2", "x0^4 + x0^3 + x0^2 + x0"),
    ("Nguyen-3", "x0^5 + x0^4 + x0^3 + x0^2 + x0"),
    ("Nguyen-4", "x0^6 + x0^5 + x0^4 + x0^3 + x0^2 + x0"),
    ("Nguyen-5", "sin(x0^2) * cos(x0) - 1"),
    ("Nguyen-6", "sin(x0) + sin(x0 + x0^2)"),
    ("Nguyen-7", "ln(x0 + 1) + ln(x0^2 + 1)"),
    ("Nguyen-8", "sqrt(x0)"),
    ("Nguyen-9", "sin(x0) + sin(x1^2)"),
    ("Nguyen-10", "2 * sin(x0) * cos(x1)"),
    ("Nguyen-11", "x0^x1"),
    ("Nguyen-12", "x0^4 - x0^3 + 0.5 * x1^2 - x1"),
    ("Nguyen-1c", "3.39 * x0^3 + 2.12 * x0^2 + 1.78 * x0"),
    ("Nguyen-5c", "sin(x0^2) * cos(x0) - 0.75"),
    ("Nguyen-7c", "ln(x0 + 1.4) + ln(x0^2 + 1.3)"),
    ("Nguyen-8c", "sqrt(1.23 * x0)"),
    ("Nguyen-10c", "sin(1.5 * x0) * cos(0.5 * x1)"),
    ("Constant-1", "3.39 * x0^3 + 2.12 * x0^2 + 1.78 * x0"),
    ("Constant-2", "sin(x0^2) * cos(x0) - 0.75"),
    ("Constant-3", "sin(1.5 * x0) * cos(0.5 * x1)"),
    ("Constant-4", "2.7 * x0 * x1"),
    ("Constant-5", "sqrt(1.23 * x0)"),
    ("Constant-6", "x0^0.426"),
    ("Constant-7", "2 * sin(1.3 * x0) * cos(x1)"),
    ("Constant-8", "ln(x0 + 1.4) + ln(x0^2 + 1.3)"),
    ("R-1", "(x0 + 1)^3 / (x0^2 - x0 + 1)"),
    ("R-2", "(x0^5 - 3 * x0^3 + 1) / (x0^2 + 1)"),
    ("R-3", "(x0^6 + x0^5) / (x0^4 + x0^3 + x0^2 + x0 + 1)"),
    ("Koza-2", "x0^5 - 2 * x0^3 + x0"),
    ("Koza-4", "x0^6 - 2 * x0^4 + x0^2"),
    ("Livermore-1", "1/3 + x0 + sin(x0^2)"),
    ("Livermore-2", "sin(x0^2) * cos(x0) - 2"),
    ("Livermore-3", "sin(x0^3) * cos(x0^2) - 1"),
    ("Livermore-4", "ln(x0 + 1) + ln(x0^2 + 1) + ln(x0)"),
    ("Livermore-5", "x0^4 - x0^3 + x0^2 - x0"),
    ("Livermore-6", "4 * x0^4 + 3 * x0^3 + 2 * x0^2 + x0"),
    ("Livermore-7", "(exp(x0) - exp(-x0)) / 2"),
    ("Livermore-8", "(exp(x0) + exp(-x0)) / 2"),
    ("Livermore-9", "x0^9 + x0^8 + x0^7 + x0^6 + x0^5 + x0^4 + x0^3 + x0^2 + x0"),
    ("Livermore-10", "6 * sin(x0) * cos(x1)"),
    ("Livermore-11", "(x0^2 + x1^2) / (x0 + x1)"),
    ("Livermore-12", "x0^4 / x1^4"),
    ("Livermore-13", "x0^(2/3)"),
    ("Livermore-14", "x0^3 + x0^2 + x0 + sin(x0) + sin(x0^2)"),
    ("Livermore-15", "x0^(1/5)"),
    ("Livermore-16", "x0^(2/5)"),
    ("Livermore-17", "4 * sin(x0) * cos(x1)"),
    ("Livermore-18", "sin(x0^2) * cos(x0) - 5"),
    ("Livermore-19", "x0^5 + x0^4 + x0^2 + x0"),
    ("Livermore-20", "exp(-x0^2)"),
    ("Livermore-21", "x0^8 + x0^7 + x0^6 + x0^5 + x0^4 + x0^3 + x0^2 + x0"),
    ("Livermore-22", "exp(-0.5 * x0^2)"),
    ("Keijzer-3", "0.3 * x0 * sin(6.283185307179586 * x0)"),
    ("Keijzer-4", "x0^3 * exp(-x0) * cos(x0) * sin(x0) * (sin(x0^2) * cos(x0) - 1)"),
    ("Keijzer-6", "x0 * (x0 + 1) / 2"),
    ("Keijzer-7", "ln(x0)"),
    ("Keijzer-8", "sqrt(x0)"),
    ("Keijzer-9", "ln(x0 + sqrt(x0^2 + 1))"),
    ("Keijzer-10", "x0^x1"),
    ("Keijzer-11", "x0 * x1 + sin((x0 - 1) * (x1 - 1))"),
    ("Keijzer-12", "x0^4 - x0^3 + x1^2 / 2 - x1"),
    ("Keijzer-13", "6 * sin(x0) * cos(x1)"),
    ("Keijzer-14", "8 / (2 + x0^2 + x1^2)"),
    ("Keijzer-15", "x0^3 / 5 + x1^3 / 2 - x1 - x0"),
    ("Jin-1", "2.5 * x0^4 - 1.3 * x0^3 + 0.5 * x1^2 - 1.7 * x1"),
    ("Jin-2", "8 * x0^2 + 8 * x1^3 - 15"),
    ("Jin-3", "0.2 * x0^3 + 0.5 * x1^3 - 1.2 * x1 - 0.5 * x0"),
    ("Jin-4", "1.5 * exp(x0) + 5 * cos(x1)"),
    ("Jin-5", "6 * sin(x0) * cos(x1)"),
    ("Jin-6", "1.35 * x0 * x1 + 5.5 * sin((x0 - 1) * (x1 - 1))"),
];

/// Training range: `U(-1, 1)` per feature, or `U(0, 2)` when the truth is
/// undefined somewhere on `[-1, 1]`. 20 points in one dimension, 100 in two.
fn default_problem(name: &str, text: &str) -> BenchmarkProblem {
    let truth = parse(text).expect("benchmark table parses");
    let d = truth.arity().max(1);
    let grid_ok = (0..=40).all(|i| {
        let v = -1.0 + i as f64 * 0.05;
        (0..=40).all(|j| {
            let w = -1.0 + j as f64 * 0.05;
            let x: Vec<f64> = (0..d).map(|k| if k == 0 { v } else { w }).collect();
            truth.evaluate(&x).is_some()
        })
    });
    let iv = if grid_ok { Interval::new(-1.0, 1.0) } else { Interval::new(0.0, 2.0) };
    let n_train = if d == 1 { 20 } else { 100 };
    BenchmarkProblem {
        name: name.into(),
        truth,
        train: vec![iv; d],
        test: vec![iv; d],
        noise: 0.0,
        n_train,
        n_test: 100,
    }
}

/// Every built-in problem, noise-free.
pub fn standard_problems() -> Vec<BenchmarkProblem> {
    TABLE.iter().map(|(n, t)| default_problem(n, t)).collect()
}

pub fn problem(name: &str) -> Option<BenchmarkProblem> {
    TABLE.iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(n, t)| default_problem(n, t))
}

/// Problems whose family matches `suite` (`all` for every problem).
pub fn suite(name: &str) -> Vec<BenchmarkProblem> {
    let name = name.to_lowercase();
    standard_problems().into_iter().filter(|p| name == "all" || p.family() == name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_complete_and_domains_fit() {
        let all = standard_problems();
        assert_eq!(all.len(), TABLE.len());
        assert_eq!(suite("nguyen").len(), 12);
        assert_eq!(suite("nguyen-c").len(), 5);
        assert_eq!(suite("koza").len(), 2);
        let n8 = problem("nguyen-8").unwrap();
        assert_eq!(n8.train, vec![Interval::new(0.0, 2.0)]);
        assert_eq!(problem("Constant-4").unwrap().train.len(), 2);
        for p in &all {
            let (train, test) = p.sample(1);
            assert_eq!((train.n(), test.n()), (p.n_train, 100), "{}", p.name);
        }
    }

    #[test]
    fn noise_touches_training_targets_only() {
        let p = problem("Nguyen-1").unwrap();
        let (clean, test) = p.sample(3);
        let (noisy, test2) = p.with_noise(0.1).sample(3);
        assert_eq!(clean.x(), noisy.x());
        assert_ne!(clean.y(), noisy.y());
        assert_eq!(test, test2);
        assert_ne!(clean.row(0), test.row(0));
    }
}
