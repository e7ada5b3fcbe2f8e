//! One line per headline criterion. Exits nonzero if any criterion fails.

mod common;

use common::*;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::process::ExitCode;
use std::time::Instant;
use unisym_core::bench::{
    complexity_experiment, labeler_round_trip, nondecreasing_steps, problem, run_problem, theory_check, PipelineConfig,
};
use unisym_core::codec::{decode, encode};
use unisym_core::datagen::GenConfig;
use unisym_core::expr::canonicalize;
use unisym_core::netcore::{psi_forward, psi_inverse, skeleton_with_bindings, NodeOp, Params, Structure};
use unisym_core::skopt::{fit_constants, gumbel_softmax_sample, reward, risk_seeking_update, softmax, Episode};
use unisym_core::skopt::{ExponentPolicy, PolicyConfig};
use unisym_core::train::{backward, loss, TrainConfig};
use unisym_core::{parse, Dataset};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn codec_round_trip() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = 0;
    for depth in 1..=4 {
        for m in [2, 5] {
            for _ in 0..1000 {
                let d0 = rng.random_range(1..=4);
                let density = rng.random_range(0.0..0.5);
                let s = random_structure(&mut rng, depth, m, d0, density);
                let ok = encode(&s, 4).and_then(|l| decode(&l, m, d0)).is_ok_and(|back| back == s);
                bad += usize::from(!ok);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(bad == 0 && secs < 5.0, format!("8000 structures, {bad} mismatches, {secs:.2}s"))
}

fn psi_round_trip() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let strategy = arb_positive_args_expr(3);
    let mut bad = Vec::new();
    for _ in 0..10_000 {
        let e = strategy.new_tree(&mut runner).unwrap().current();
        if !same_up_to_rounding(&canonicalize(&psi_inverse(&psi_forward(&e))), &canonicalize(&e), 1e-12) {
            bad.push(e.to_string());
        }
    }
    let first = bad.first().map(|e| format!("; first: {e}")).unwrap_or_default();
    outcome(bad.is_empty(), format!("10000 expressions, {} mismatches{first}", bad.len()))
}

fn phi_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut checked, mut attempts, mut worst) = (0, 0, 0.0f64);
    while checked < 1000 && attempts < 200_000 {
        attempts += 1;
        let depth = rng.random_range(1..=4);
        let (m, d0) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let density = rng.random_range(0.05..0.3);
        let s = random_structure(&mut rng, depth, m, d0, density);
        if s.is_degenerate() {
            continue;
        }
        let p = random_params(&mut rng, &s, 1.5);
        let k = skeleton_with_bindings(&s).expect("nondegenerate structure has a skeleton");
        let (c, e) = k.bind(&p);
        let x: Vec<f64> = (0..d0).map(|_| rng.random_range(0.1..3.0)).collect();
        let (Some(a), Some(b)) = (s.forward(&p, &x, true), k.expr.evaluate_with(&x, &c, &e)) else { continue };
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        checked += 1;
    }
    outcome(checked == 1000 && worst <= 1e-9, format!("{checked} triples, worst relative difference {worst:.2e}"))
}

/// Pre-activations of reachable ln and exp nodes that sit in the clamped regions.
fn clamped_hits(s: &Structure, p: &Params, data: &Dataset, cfg: &TrainConfig) -> (usize, usize) {
    let live = s.reachable();
    let (mut ln, mut exp) = (0, 0);
    for r in 0..data.n() {
        let Some(t) = s.forward_trace(p, data.row(r), true, cfg.activation()) else { continue };
        for l in 1..=s.depth() {
            for (i, &y) in t.y[l].iter().enumerate() {
                match s.arch.op(l, i) {
                    NodeOp::Ln if live[l][i] && y < cfg.theta_ln => ln += 1,
                    NodeOp::Exp if live[l][i] && y >= cfg.theta_exp => exp += 1,
                    _ => {}
                }
            }
        }
    }
    (ln, exp)
}

fn gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut nets, mut worst, mut skipped, mut clamped) = (0, 0.0f64, 0, (0, 0));
    while nets < 50 {
        let depth = rng.random_range(1..=3);
        let (m, d0) = (rng.random_range(1..=3), rng.random_range(1..=2));
        let s = random_structure(&mut rng, depth, m, d0, 0.4);
        if s.is_degenerate() {
            continue;
        }
        // A low exp ceiling and inputs of both signs reach both clamps.
        let cfg = TrainConfig { theta_exp: rng.random_range(0.2..2.0), ..TrainConfig::default() };
        let p = random_params(&mut rng, &s, 1.5);
        let rows: Vec<Vec<f64>> = (0..6).map(|_| (0..d0).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::from_rows(&rows, y).unwrap();
        let penalty = nets % 2 == 0;
        let (l0, g) = backward(&s, &p, &data, &cfg, penalty);
        if !l0.total.is_finite() {
            continue;
        }
        let hits = clamped_hits(&s, &p, &data, &cfg);
        clamped = (clamped.0 + hits.0, clamped.1 + hits.1);
        let grad = g.values();
        let scale = grad.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        let theta = p.values();
        let at = |v: &[f64]| {
            let mut q = p.clone();
            q.set_values(v);
            loss(&s, &q, &data, &cfg, penalty).total
        };
        let central = |k: usize, h: f64| {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[k] += h;
            down[k] -= h;
            (at(&up) - at(&down)) / (2.0 * h)
        };
        for k in 0..theta.len() {
            let h = 1e-6 * theta[k].abs().max(1.0);
            let (fd, fd_half) = (central(k, h), central(k, h / 2.0));
            // Disagreeing step sizes mean a kink lies within the stencil.
            if (fd - fd_half).abs() > 1e-6 * scale {
                skipped += 1;
                continue;
            }
            worst = worst.max((grad[k] - fd).abs() / scale);
        }
        nets += 1;
    }
    let pass = worst < 1e-5 && clamped.0 > 0 && clamped.1 > 0;
    outcome(
        pass,
        format!(
            "50 networks, max error {worst:.2e} relative to the largest gradient entry, {skipped} kink components \
             skipped, clamped ln/exp pre-activations seen {}/{}",
            clamped.0, clamped.1
        ),
    )
}

fn theorem_validator() -> Outcome {
    let t = Instant::now();
    let report = theory_check().expect("theory check runs");
    let secs = t.elapsed().as_secs_f64();
    let branches = report.lemma.iter().filter(|b| b.holds).count();
    outcome(
        report.pass() && secs < 1.0,
        format!(
            "{} cells, {} failures, {branches}/{} lemma branches hold, {secs:.3}s",
            report.cells.len(),
            report.failures().len(),
            report.lemma.len()
        ),
    )
}

fn labeler_round_trip_rate() -> Outcome {
    let cfg = GenConfig { l_max: 4, ..GenConfig::small(7) };
    let t = Instant::now();
    let r = labeler_round_trip(&cfg, 500);
    for f in &r.failures {
        println!("    round-trip failure: {} | {}", f.expr, f.cause);
    }
    outcome(
        r.rate() >= 0.95,
        format!(
            "{}/{} recovered ({:.1}%), {:.1}% from perturbed starts alone, {:.1}s",
            r.recovered,
            r.total,
            100.0 * r.rate(),
            100.0 * r.perturbed_rate(),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn benchmark_recovery() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut lines = Vec::new();
    let mut pass = true;
    for name in ["Nguyen-1", "Nguyen-2", "Nguyen-3", "Nguyen-4", "Koza-2", "Constant-4", "Livermore-5"] {
        let p = problem(name).expect("problem exists");
        match run_problem(&p, &cfg) {
            Ok(r) => {
                let r2 = r.test_r2.unwrap_or(f64::NAN);
                let ok = r.solved() && r2 > 0.999 && r.wall_s <= 60.0;
                pass &= ok;
                lines.push(format!("{name} {} R2={r2:.6} {:.1}s", if ok { "ok" } else { "MISS" }, r.wall_s));
            }
            Err(e) => {
                pass = false;
                lines.push(format!("{name} error: {e}"));
            }
        }
    }
    outcome(pass, lines.join(", "))
}

fn gumbel_statistics() -> Outcome {
    let logits = [1.0, -0.5, 0.3, 2.0, 0.0, -1.2];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = [0usize; 6];
    for _ in 0..10_000 {
        counts[gumbel_softmax_sample(&logits, 1.0, &mut rng).1] += 1;
    }
    let tv: f64 = softmax(&logits).iter().zip(counts).map(|(p, c)| (c as f64 / 10_000.0 - p).abs()).sum::<f64>() / 2.0;
    outcome(tv < 0.05, format!("total variation {tv:.4} over 10000 draws at tau 1"))
}

fn bandit_convergence() -> Outcome {
    // Rewards come from actually fitting c0 * x0^p to x0², one fit per value.
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![0.1 + 0.1 * i as f64]).collect();
    let data = Dataset::from_rows(&rows, rows.iter().map(|r| r[0] * r[0]).collect()).unwrap();
    let skel = parse("c0 * x0^p0").unwrap();
    let cfg = PolicyConfig::default();
    let mut fit_rng = ChaCha8Rng::seed_from_u64(5);
    let rewards: Vec<f64> =
        cfg.values.iter().map(|&v| reward(fit_constants(&skel, &[v], &data, 3, &mut fit_rng).mse)).collect();
    let two = cfg.values.iter().position(|v| *v == 2.0).unwrap();
    let mut worst: f64 = 1.0;
    for seed in 0..5 {
        let mut policy = ExponentPolicy::uniform(1, &cfg.values);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for t in 0..200 {
            let tau = cfg.temperature(t, 200);
            let batch: Vec<Episode> = (0..cfg.batch)
                .map(|_| {
                    let choice = policy.sample(tau, &mut rng);
                    Episode { reward: rewards[choice[0]], choice }
                })
                .collect();
            risk_seeking_update(&mut policy, &batch, &cfg);
        }
        worst = worst.min(policy.probs(0)[two]);
    }
    outcome(worst > 0.9, format!("lowest P(p = 2) after 200 updates over 5 seeds: {worst:.3}"))
}

fn complexity_trend() -> Outcome {
    let t = Instant::now();
    let rows = complexity_experiment(&[2, 3, 4, 5, 6], 10_000, None, 11);
    let secs = t.elapsed().as_secs_f64();
    let net_ok = rows.iter().all(|r| r.mean_c_net <= r.mean_c_tree);
    let (ok, steps) = nondecreasing_steps(&rows);
    let table: Vec<String> =
        rows.iter().map(|r| format!("d={} tree {:.2} net {:.2}", r.d, r.mean_c_tree, r.mean_c_net)).collect();
    outcome(
        net_ok && ok == steps && secs <= 300.0,
        format!("{}; gap non-decreasing on {ok}/{steps} steps; {secs:.1}s", table.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("codec round trip", codec_round_trip),
        ("psi round trip", psi_round_trip),
        ("phi numerical consistency", phi_consistency),
        ("gradient check", gradient_check),
        ("theorem validator", theorem_validator),
        ("labeler round trip", labeler_round_trip_rate),
        ("benchmark recovery", benchmark_recovery),
        ("gumbel-softmax statistics", gumbel_statistics),
        ("bandit convergence", bandit_convergence),
        ("complexity trend", complexity_trend),
    ];
    let only = std::env::args().nth(1).filter(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (name, check) in criteria {
        if only.as_deref().is_some_and(|o| !name.contains(o)) {
            continue;
        }
        let o = check();
        failed += usize::from(!o.pass);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "NOT REPRODUCED large-scale numbers (Feynman mean R2 0.9672, ODE-Strogatz 0.9522, SRBench solution-rate \
         rankings): they need the pre-trained proposer and cluster compute; the suites above stand in"
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
