//! Synthetic training data: random functions, sampled datasets and their
//! structure labels, plus a sharded binary corpus for external trainers.

use crate::codec::{encode, pad, SequenceLabel};
use crate::data::{Dataset, Interval};
use crate::expr::{BinOp, Expr, UnaryFn};
use crate::labeler::{identify_with_params, LabelConfig, LabelError};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Corpus format version written to the manifest.
pub const CORPUS_VERSION: u32 = 1;
/// Padding token of labels inside corpus records.
pub const CORPUS_PAD: i64 = -1;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("too many invalid rows after {0} interval draws")]
    TooManyInvalid(usize),
    #[error("shard {shard}: {source}")]
    Shard { shard: usize, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnaryKind {
    Log,
    Exp,
    Sin,
    Cos,
    Sqrt,
    Inv,
    Abs,
    Pow2,
}

impl UnaryKind {
    pub const ALL: [UnaryKind; 8] = [
        UnaryKind::Log,
        UnaryKind::Exp,
        UnaryKind::Sin,
        UnaryKind::Cos,
        UnaryKind::Sqrt,
        UnaryKind::Inv,
        UnaryKind::Abs,
        UnaryKind::Pow2,
    ];

    pub fn wrap(self, e: Expr) -> Expr {
        match self {
            UnaryKind::Log => Expr::unary(UnaryFn::Ln, e),
            UnaryKind::Exp => Expr::unary(UnaryFn::Exp, e),
            UnaryKind::Sin => Expr::unary(UnaryFn::Sin, e),
            UnaryKind::Cos => Expr::unary(UnaryFn::Cos, e),
            UnaryKind::Sqrt => Expr::unary(UnaryFn::Sqrt, e),
            UnaryKind::Inv => Expr::div(Expr::Const(1.0), e),
            UnaryKind::Abs => Expr::unary(UnaryFn::Abs, e),
            UnaryKind::Pow2 => Expr::pow(e, Expr::Const(2.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub d_max: usize,
    /// `(d, weight)` pairs.
    pub dim_dist: Vec<(usize, f64)>,
    /// `b_max = d + b_extra`.
    pub b_extra: usize,
    /// `u_max = min(u_cap, d + 1)`.
    pub u_cap: usize,
    pub l_max: usize,
    pub m: usize,
    pub n_points: usize,
    pub binary_freq: Vec<(BinaryKind, f64)>,
    pub unary_freq: Vec<(UnaryKind, f64)>,
    /// Exponents a `pow` node may take.
    pub pow_exponents: Vec<f64>,
    /// Chance that a variable or unary node receives an affine wrapper.
    pub affine_prob: f64,
    /// `10^U(lo, hi)` scale range of affine coefficients.
    pub aff_exp_range: (f64, f64),
    /// Interval endpoints are drawn from `U(-bound, bound)`.
    pub interval_bound: f64,
    pub interval_retries: usize,
    pub label_len: usize,
    pub seed: u64,
}

impl GenConfig {
    /// Preset for `d <= 4`.
    pub fn small(seed: u64) -> GenConfig {
        GenConfig {
            d_max: 4,
            dim_dist: vec![(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4)],
            b_extra: 5,
            l_max: 6,
            m: 5,
            ..GenConfig::common(seed)
        }
    }

    /// Preset for `4 < d <= 10`.
    pub fn large(seed: u64) -> GenConfig {
        GenConfig {
            d_max: 10,
            dim_dist: vec![(5, 0.2), (6, 0.2), (7, 0.15), (8, 0.15), (9, 0.15), (10, 0.15)],
            b_extra: 1,
            l_max: 7,
            m: 7,
            label_len: 128,
            ..GenConfig::common(seed)
        }
    }

    fn common(seed: u64) -> GenConfig {
        GenConfig {
            d_max: 4,
            dim_dist: Vec::new(),
            b_extra: 5,
            u_cap: 5,
            l_max: 6,
            m: 5,
            n_points: 200,
            binary_freq: vec![
                (BinaryKind::Add, 1.0),
                (BinaryKind::Sub, 1.0),
                (BinaryKind::Mul, 1.0),
                (BinaryKind::Pow, 1.0),
            ],
            unary_freq: vec![
                (UnaryKind::Log, 0.3),
                (UnaryKind::Exp, 1.1),
                (UnaryKind::Sin, 1.1),
                (UnaryKind::Cos, 1.1),
                (UnaryKind::Sqrt, 3.0),
                (UnaryKind::Inv, 5.0),
                (UnaryKind::Abs, 1.0),
                (UnaryKind::Pow2, 2.0),
            ],
            pow_exponents: vec![2.0, 3.0],
            affine_prob: 0.5,
            aff_exp_range: (-1.0, 1.0),
            interval_bound: 10.0,
            interval_retries: 10,
            label_len: 64,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::Config(m.into()));
        if self.d_max == 0 || self.dim_dist.is_empty() {
            return bad("need d_max >= 1 and a dimension distribution");
        }
        if self.dim_dist.iter().any(|&(d, w)| d == 0 || d > self.d_max || !(w > 0.0)) {
            return bad("dimension weights must be positive with 1 <= d <= d_max");
        }
        if self.binary_freq.iter().any(|f| !(f.1 > 0.0)) || self.unary_freq.iter().any(|f| !(f.1 > 0.0)) {
            return bad("operator frequencies must be positive");
        }
        if self.binary_freq.iter().all(|f| f.0 == BinaryKind::Pow) {
            return bad("need at least one binary operator besides pow");
        }
        if self.pow_exponents.is_empty() || self.n_points == 0 || self.m == 0 || self.l_max == 0 {
            return bad("pow exponents, n_points, m and l_max must be nonempty / positive");
        }
        if !(0.0..=1.0).contains(&self.affine_prob) || !(self.interval_bound > 0.0) {
            return bad("affine_prob must lie in [0, 1] and interval_bound be positive");
        }
        Ok(())
    }

    pub fn b_max(&self, d: usize) -> usize {
        d + self.b_extra
    }

    pub fn u_max(&self, d: usize) -> usize {
        self.u_cap.min(d + 1)
    }

    pub fn label_config(&self) -> LabelConfig {
        LabelConfig { m: self.m, d0: self.d_max, l_max: self.l_max }
    }
}

/// `sign · mantissa · 10^exponent`, with the sign taken from a `U(-1, 1)` draw.
pub fn sample_affine_coef(cfg: &GenConfig, rng: &mut impl Rng) -> f64 {
    let sign = if rng.random_range(-1.0..1.0) < 0.0 { -1.0 } else { 1.0 };
    let mantissa: f64 = rng.random_range(0.0..1.0);
    let (lo, hi) = cfg.aff_exp_range;
    sign * mantissa * 10f64.powf(rng.random_range(lo..hi))
}

/// A random function over its first `d` inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    pub d: usize,
    pub expr: Expr,
    /// Unary operators inserted into the tree, in insertion order.
    pub unary_ops: Vec<UnaryKind>,
}

#[derive(Clone, Debug)]
enum Tree {
    Leaf,
    Var(usize),
    Bin(BinaryKind, Box<Tree>, Box<Tree>),
    /// `pow` with a fixed exponent.
    Pow(Box<Tree>, f64),
    Un(UnaryKind, Box<Tree>),
}

impl Tree {
    /// Replace the `k`-th leaf in pre-order.
    fn expand_leaf(&mut self, k: &mut usize, with: &mut Option<Tree>) {
        match self {
            Tree::Leaf => {
                if *k == 0 {
                    *self = with.take().expect("replacement used once");
                }
                *k = k.wrapping_sub(1);
            }
            Tree::Bin(_, a, b) => {
                a.expand_leaf(k, with);
                b.expand_leaf(k, with);
            }
            Tree::Pow(a, _) | Tree::Un(_, a) => a.expand_leaf(k, with),
            Tree::Var(_) => {}
        }
    }

    fn count_nodes(&self) -> usize {
        match self {
            Tree::Leaf | Tree::Var(_) => 1,
            Tree::Bin(_, a, b) => 1 + a.count_nodes() + b.count_nodes(),
            Tree::Pow(a, _) | Tree::Un(_, a) => 1 + a.count_nodes(),
        }
    }

    /// Wrap the `k`-th node in pre-order.
    fn wrap_node(self, k: &mut usize, op: UnaryKind) -> Tree {
        if *k == 0 {
            *k = usize::MAX;
            return Tree::Un(op, Box::new(self));
        }
        *k = k.wrapping_sub(1);
        match self {
            Tree::Bin(o, a, b) => {
                let a = a.wrap_node(k, op);
                let b = b.wrap_node(k, op);
                Tree::Bin(o, Box::new(a), Box::new(b))
            }
            Tree::Pow(a, e) => Tree::Pow(Box::new(a.wrap_node(k, op)), e),
            Tree::Un(u, a) => Tree::Un(u, Box::new(a.wrap_node(k, op))),
            t => t,
        }
    }

    fn fill_vars(&mut self, vars: &mut impl Iterator<Item = usize>) {
        match self {
            Tree::Leaf => *self = Tree::Var(vars.next().expect("one variable per leaf")),
            Tree::Bin(_, a, b) => {
                a.fill_vars(vars);
                b.fill_vars(vars);
            }
            Tree::Pow(a, _) | Tree::Un(_, a) => a.fill_vars(vars),
            Tree::Var(_) => {}
        }
    }

    fn to_expr(&self, cfg: &GenConfig, rng: &mut impl Rng) -> Expr {
        fn affine(e: Expr, cfg: &GenConfig, rng: &mut impl Rng) -> Expr {
            if rng.random_bool(cfg.affine_prob) {
                let w = sample_affine_coef(cfg, rng);
                let b = sample_affine_coef(cfg, rng);
                Expr::add(Expr::mul(Expr::Const(w), e), Expr::Const(b))
            } else {
                e
            }
        }
        match self {
            Tree::Leaf => unreachable!("leaves are filled before conversion"),
            Tree::Var(j) => affine(Expr::Var(*j), cfg, rng),
            Tree::Bin(op, a, b) => {
                let (a, b) = (a.to_expr(cfg, rng), b.to_expr(cfg, rng));
                let op = match op {
                    BinaryKind::Add => BinOp::Add,
                    BinaryKind::Sub => BinOp::Sub,
                    BinaryKind::Mul => BinOp::Mul,
                    BinaryKind::Pow => BinOp::Pow,
                };
                Expr::binary(op, a, b)
            }
            Tree::Pow(a, e) => Expr::pow(a.to_expr(cfg, rng), Expr::Const(*e)),
            Tree::Un(u, a) => {
                let inner = u.wrap(a.to_expr(cfg, rng));
                affine(inner, cfg, rng)
            }
        }
    }
}

/// Draw a random function: a binary tree with `b_op ~ U{d-1, b_max}`
/// operators, `u_op ~ U{0, u_max}` inserted unary operators, and random affine
/// wrappers on variables and unary nodes. Every variable below `d` appears.
pub fn sample_function(cfg: &GenConfig, rng: &mut impl Rng) -> SampledFunction {
    let dims = WeightedIndex::new(cfg.dim_dist.iter().map(|x| x.1)).expect("validated weights");
    let d = cfg.dim_dist[dims.sample(rng)].0;
    let b_op = rng.random_range(d - 1..=cfg.b_max(d));
    let bins = WeightedIndex::new(cfg.binary_freq.iter().map(|x| x.1)).expect("validated weights");
    let non_pow: Vec<(BinaryKind, f64)> = cfg.binary_freq.iter().copied().filter(|x| x.0 != BinaryKind::Pow).collect();
    let non_pow_idx = WeightedIndex::new(non_pow.iter().map(|x| x.1)).expect("validated weights");

    let mut tree = Tree::Leaf;
    let mut leaves = 1;
    for r in (0..b_op).rev() {
        // A pow node adds no leaf; allow it only if d leaves remain reachable.
        let mut op = cfg.binary_freq[bins.sample(rng)].0;
        if op == BinaryKind::Pow && leaves + r < d {
            op = non_pow[non_pow_idx.sample(rng)].0;
        }
        let node = if op == BinaryKind::Pow {
            let e = cfg.pow_exponents[rng.random_range(0..cfg.pow_exponents.len())];
            Tree::Pow(Box::new(Tree::Leaf), e)
        } else {
            leaves += 1;
            Tree::Bin(op, Box::new(Tree::Leaf), Box::new(Tree::Leaf))
        };
        let mut k = rng.random_range(0..leaves - usize::from(op != BinaryKind::Pow));
        tree.expand_leaf(&mut k, &mut Some(node));
    }

    let unis = WeightedIndex::new(cfg.unary_freq.iter().map(|x| x.1)).expect("validated weights");
    let mut unary_ops = Vec::new();
    for _ in 0..rng.random_range(0..=cfg.u_max(d)) {
        let op = cfg.unary_freq[unis.sample(rng)].0;
        unary_ops.push(op);
        let mut k = rng.random_range(0..tree.count_nodes());
        tree = tree.wrap_node(&mut k, op);
    }

    let mut vars: Vec<usize> = (0..d).chain((d..leaves).map(|_| rng.random_range(0..d))).collect();
    vars.shuffle(rng);
    tree.fill_vars(&mut vars.into_iter());
    SampledFunction { d, expr: tree.to_expr(cfg, rng), unary_ops }
}

/// A sampled dataset and which rows were zeroed because `f` failed there.
#[derive(Clone, Debug)]
pub struct GenDataset {
    pub data: Dataset,
    pub zeroed: Vec<usize>,
}

/// Evaluate `f` on `n` uniform points from `intervals`, padding rows with
/// zero features up to `d_max`; failing rows become all zeros.
pub fn sample_inputs_in(f: &Expr, intervals: &[Interval], n: usize, d_max: usize, rng: &mut impl Rng) -> GenDataset {
    let d = intervals.len();
    let width = d_max.max(d);
    let mut x = Vec::with_capacity(n * width);
    let mut y = Vec::with_capacity(n);
    let mut zeroed = Vec::new();
    for r in 0..n {
        let mut row: Vec<f64> = intervals.iter().map(|iv| rng.random_range(iv.lo..iv.hi)).collect();
        row.resize(width, 0.0);
        match f.evaluate(&row) {
            Some(v) => {
                x.extend_from_slice(&row);
                y.push(v);
            }
            None => {
                x.extend(std::iter::repeat_n(0.0, width));
                y.push(0.0);
                zeroed.push(r);
            }
        }
    }
    let data = Dataset::new(width, x, y, intervals.to_vec()).expect("finite rows by construction");
    GenDataset { data, zeroed }
}

/// Draw per-feature intervals inside `(-bound, bound)` and sample `f`; redraw
/// the intervals while more than half the rows fail.
pub fn sample_inputs(f: &SampledFunction, cfg: &GenConfig, rng: &mut impl Rng) -> Result<GenDataset, GenError> {
    let b = cfg.interval_bound;
    for _ in 0..cfg.interval_retries.max(1) {
        let intervals: Vec<Interval> = (0..f.d)
            .map(|_| loop {
                let (a, c) = (rng.random_range(-b..b), rng.random_range(-b..b));
                if a != c {
                    break Interval::new(a.min(c), a.max(c));
                }
            })
            .collect();
        let g = sample_inputs_in(&f.expr, &intervals, cfg.n_points, cfg.d_max, rng);
        if 2 * g.zeroed.len() <= cfg.n_points {
            return Ok(g);
        }
    }
    Err(GenError::TooManyInvalid(cfg.interval_retries))
}

/// IEEE-754 single-precision bit pattern, most significant bit first.
pub fn float_to_multihot(v: f64) -> [bool; 32] {
    let bits = (v as f32).to_bits();
    std::array::from_fn(|i| (bits >> (31 - i)) & 1 == 1)
}

pub fn multihot_to_float(b: &[bool; 32]) -> f64 {
    let bits = b.iter().fold(0u32, |acc, &x| (acc << 1) | u32::from(x));
    f32::from_bits(bits) as f64
}

/// One training instance.
#[derive(Clone, Debug)]
pub struct Sample {
    pub function: SampledFunction,
    pub data: GenDataset,
    pub label: SequenceLabel,
}

/// Why a draw was thrown away.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejections {
    pub structure: usize,
    pub label_too_long: usize,
    pub invalid_rows: usize,
    pub constant: usize,
}

impl Rejections {
    pub fn total(&self) -> usize {
        self.structure + self.label_too_long + self.invalid_rows + self.constant
    }

    fn add(&mut self, o: &Rejections) {
        self.structure += o.structure;
        self.label_too_long += o.label_too_long;
        self.invalid_rows += o.invalid_rows;
        self.constant += o.constant;
    }
}

/// Draw until a function yields a valid dataset and a label within limits.
pub fn sample_instance(cfg: &GenConfig, rng: &mut impl Rng, rej: &mut Rejections) -> Sample {
    loop {
        let f = sample_function(cfg, rng);
        let label = match identify_with_params(&f.expr, cfg.label_config()) {
            Ok((s, _)) => encode(&s, cfg.l_max).expect("identified structures respect l_max"),
            Err(LabelError::Net(crate::netcore::NetError::Degenerate)) => {
                rej.constant += 1;
                continue;
            }
            Err(_) => {
                rej.structure += 1;
                continue;
            }
        };
        if label.len() > cfg.label_len {
            rej.label_too_long += 1;
            continue;
        }
        let data = match sample_inputs(&f, cfg, rng) {
            Ok(d) => d,
            Err(_) => {
                rej.invalid_rows += 1;
                continue;
            }
        };
        if data.data.y_variance() == 0.0 {
            rej.constant += 1;
            continue;
        }
        return Sample { function: f, data, label };
    }
}

fn shard_rng(seed: u64, shard: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(shard as u64);
    r
}

/// Generate the samples of one shard.
pub fn generate_shard(cfg: &GenConfig, shard: usize, count: usize) -> (Vec<Sample>, Rejections) {
    let mut rng = shard_rng(cfg.seed, shard);
    let mut rej = Rejections::default();
    let samples = (0..count).map(|_| sample_instance(cfg, &mut rng, &mut rej)).collect();
    (samples, rej)
}

/// Binary record layout (all integers big-endian):
/// `u32 payload_len`, then `u16 d`, `u16 n`, `u16 d_max`, `u16 expr_len`,
/// the expression as UTF-8, `n·(d_max+1)` `u32` IEEE-754 single patterns
/// (row-major `x` then `y` per row), `u16 label_len` and `label_len` `i32`
/// tokens padded with `-1`.
pub fn encode_record(s: &Sample, cfg: &GenConfig) -> Vec<u8> {
    let mut p = Vec::new();
    let d = &s.data.data;
    let expr = s.function.expr.to_string();
    p.extend((s.function.d as u16).to_be_bytes());
    p.extend((d.n() as u16).to_be_bytes());
    p.extend((d.dim() as u16).to_be_bytes());
    p.extend((expr.len() as u16).to_be_bytes());
    p.extend(expr.as_bytes());
    for r in 0..d.n() {
        for &v in d.row(r).iter().chain(std::iter::once(&d.y()[r])) {
            p.extend((v as f32).to_bits().to_be_bytes());
        }
    }
    let tokens = pad(&s.label.tokens, cfg.label_len, CORPUS_PAD);
    p.extend((tokens.len() as u16).to_be_bytes());
    for t in tokens {
        p.extend((t as i32).to_be_bytes());
    }
    let mut out = (p.len() as u32).to_be_bytes().to_vec();
    out.extend(p);
    out
}

/// A record read back from a shard file.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub d: usize,
    pub expr: String,
    pub d_max: usize,
    /// Row-major `n × (d_max + 1)`; the last column is `y`.
    pub values: Vec<f32>,
    pub label: Vec<i64>,
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<Record>, String> {
    let mut out = Vec::new();
    let mut at = 0;
    let take = |at: &mut usize, n: usize| -> Result<&[u8], String> {
        let s = bytes.get(*at..*at + n).ok_or("truncated record")?;
        *at += n;
        Ok(s)
    };
    let u16_at = |at: &mut usize| -> Result<usize, String> {
        let s = take(at, 2)?;
        Ok(u16::from_be_bytes([s[0], s[1]]) as usize)
    };
    while at < bytes.len() {
        let len = take(&mut at, 4)?;
        let end = at + u32::from_be_bytes([len[0], len[1], len[2], len[3]]) as usize;
        let d = u16_at(&mut at)?;
        let n = u16_at(&mut at)?;
        let d_max = u16_at(&mut at)?;
        let el = u16_at(&mut at)?;
        let expr = String::from_utf8(take(&mut at, el)?.to_vec()).map_err(|e| e.to_string())?;
        let mut values = Vec::with_capacity(n * (d_max + 1));
        for _ in 0..n * (d_max + 1) {
            let s = take(&mut at, 4)?;
            values.push(f32::from_bits(u32::from_be_bytes([s[0], s[1], s[2], s[3]])));
        }
        let ll = u16_at(&mut at)?;
        let mut label = Vec::with_capacity(ll);
        for _ in 0..ll {
            let s = take(&mut at, 4)?;
            label.push(i32::from_be_bytes([s[0], s[1], s[2], s[3]]) as i64);
        }
        if at != end {
            return Err("record length mismatch".into());
        }
        out.push(Record { d, expr, d_max, values, label });
    }
    Ok(out)
}

/// Summary of an export run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportSummary {
    pub count: usize,
    pub shards: usize,
    /// Shards already present from an earlier run and left untouched.
    pub reused: usize,
    pub rejections: Rejections,
    pub manifest: PathBuf,
}

pub fn shard_path(dir: &Path, shard: usize) -> PathBuf {
    dir.join(format!("shard-{shard:05}.bin"))
}

/// Write `count` samples as shards of `shard_size` records into `dir`, plus
/// `manifest.txt`. Shards already on disk are kept, so an interrupted export
/// resumes where it stopped.
pub fn export_corpus(count: usize, shard_size: usize, cfg: &GenConfig, dir: &Path) -> Result<ExportSummary, GenError> {
    cfg.validate()?;
    let shard_size = shard_size.max(1);
    fs::create_dir_all(dir)?;
    let shards = count.div_ceil(shard_size);
    let results: Vec<Result<(bool, Rejections), GenError>> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let path = shard_path(dir, shard);
            if path.exists() {
                return Ok((true, Rejections::default()));
            }
            let n = shard_size.min(count - shard * shard_size);
            let (samples, rej) = generate_shard(cfg, shard, n);
            let bytes: Vec<u8> = samples.iter().flat_map(|s| encode_record(s, cfg)).collect();
            let tmp = path.with_extension("tmp");
            let write = || -> std::io::Result<()> {
                fs::write(&tmp, &bytes)?;
                fs::rename(&tmp, &path)
            };
            write().map_err(|source| GenError::Shard { shard, source })?;
            Ok((false, rej))
        })
        .collect();
    let mut rejections = Rejections::default();
    let mut reused = 0;
    for r in results {
        let (old, rej) = r?;
        reused += usize::from(old);
        rejections.add(&rej);
    }
    let manifest = dir.join("manifest.txt");
    let mut m = fs::File::create(&manifest)?;
    writeln!(m, "format_version={CORPUS_VERSION}")?;
    writeln!(m, "seed={}", cfg.seed)?;
    writeln!(m, "count={count}")?;
    writeln!(m, "shard_size={shard_size}")?;
    writeln!(m, "shards={shards}")?;
    writeln!(m, "d_max={}", cfg.d_max)?;
    writeln!(m, "n_points={}", cfg.n_points)?;
    writeln!(m, "l_max={}", cfg.l_max)?;
    writeln!(m, "m={}", cfg.m)?;
    writeln!(m, "label_len={}", cfg.label_len)?;
    writeln!(m, "pad_token={CORPUS_PAD}")?;
    writeln!(m, "value_encoding=ieee754-binary32-be")?;
    writeln!(m, "rejected_structure={}", rejections.structure)?;
    writeln!(m, "rejected_label_too_long={}", rejections.label_too_long)?;
    writeln!(m, "rejected_invalid_rows={}", rejections.invalid_rows)?;
    writeln!(m, "rejected_constant={}", rejections.constant)?;
    writeln!(m, "config={cfg:?}")?;
    Ok(ExportSummary { count, shards, reused, rejections, manifest })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode;
    use crate::expr::parse;

    #[test]
    fn pure_binary_trees() {
        let mut cfg = GenConfig::small(1);
        cfg.dim_dist = vec![(2, 1.0)];
        cfg.b_extra = 0;
        cfg.u_cap = 0;
        cfg.affine_prob = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let f = sample_function(&cfg, &mut rng);
            let s = f.expr.to_string();
            assert!(s.contains("x0") && s.contains("x1"), "{s}");
            for f in ["sin", "cos", "exp", "ln", "sqrt", "abs", "/"] {
                assert!(!s.contains(f), "{s}");
            }
        }
    }

    #[test]
    fn deterministic_draws() {
        let cfg = GenConfig::small(9);
        let a = sample_function(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let b = sample_function(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a.expr.to_string(), b.expr.to_string());
    }

    #[test]
    fn every_variable_appears() {
        let cfg = GenConfig::large(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let f = sample_function(&cfg, &mut rng);
            let txt = f.expr.to_string();
            for j in 0..f.d {
                assert!(txt.contains(&format!("x{j}")), "x{j} missing from {txt}");
            }
            assert!(!txt.contains(&format!("x{}", f.d)));
        }
    }

    #[test]
    fn inputs_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_inputs_in(&parse("x0").unwrap(), &[Interval::new(0.0, 1.0)], 50, 1, &mut rng);
        assert_eq!(g.data.y(), g.data.column(0).as_slice());
        let g = sample_inputs_in(&parse("ln(x0)").unwrap(), &[Interval::new(-1.0, 1.0)], 100, 4, &mut rng);
        assert!(!g.zeroed.is_empty());
        for &r in &g.zeroed {
            assert!(g.data.row(r).iter().all(|&v| v == 0.0) && g.data.y()[r] == 0.0);
        }
        let g = sample_inputs_in(&parse("x0 + x1").unwrap(), &[Interval::new(0.0, 1.0); 2], 20, 4, &mut rng);
        assert!(g.data.column(2).iter().chain(&g.data.column(3)).all(|&v| v == 0.0));
    }

    #[test]
    fn multihot() {
        assert_eq!(float_to_multihot(0.0), [false; 32]);
        let one = float_to_multihot(1.0);
        assert!(!one[0]);
        assert_eq!(&one[1..9], &[false, true, true, true, true, true, true, true]);
        assert!(one[9..].iter().all(|b| !b));
        assert_eq!(multihot_to_float(&float_to_multihot(-2.5)), -2.5);
    }

    #[test]
    fn labels_decode_to_their_structures() {
        let cfg = GenConfig::small(4);
        let (samples, _) = generate_shard(&cfg, 0, 20);
        for s in samples {
            let st = decode(&s.label, cfg.m, cfg.d_max).unwrap();
            let (want, _) = identify_with_params(&s.function.expr, cfg.label_config()).unwrap();
            assert_eq!(st, want);
        }
    }

    #[test]
    fn export_is_deterministic_and_resumable() {
        let cfg = GenConfig { n_points: 20, ..GenConfig::small(7) };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let sa = export_corpus(25, 10, &cfg, a.path()).unwrap();
        export_corpus(25, 10, &cfg, b.path()).unwrap();
        assert_eq!(sa.shards, 3);
        for k in 0..3 {
            assert_eq!(fs::read(shard_path(a.path(), k)).unwrap(), fs::read(shard_path(b.path(), k)).unwrap());
        }
        let recs = decode_records(&fs::read(shard_path(a.path(), 2)).unwrap()).unwrap();
        assert_eq!(recs.len(), 5);
        assert_eq!(recs[0].label.len(), cfg.label_len);
        fs::remove_file(shard_path(a.path(), 1)).unwrap();
        let again = export_corpus(25, 10, &cfg, a.path()).unwrap();
        assert_eq!(again.reused, 2);
        assert_eq!(fs::read(shard_path(a.path(), 1)).unwrap(), fs::read(shard_path(b.path(), 1)).unwrap());
        let empty = tempfile::tempdir().unwrap();
        let s = export_corpus(0, 10, &cfg, empty.path()).unwrap();
        assert_eq!(s.shards, 0);
        assert!(s.manifest.exists());
    }
}
