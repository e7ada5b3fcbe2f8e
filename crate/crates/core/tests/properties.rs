mod common;

use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use unisym_core::codec::{decode, encode};
use unisym_core::expr::{canonicalize, is_symbolic_solution, Expr};
use unisym_core::labeler::identify_structure;
use unisym_core::netcore::{psi_forward, psi_inverse, skeleton_with_bindings};
use unisym_core::skopt::{reward, risk_threshold};
use unisym_core::train::{regularized_is_bounded, TrainConfig};
use unisym_core::{parse, Dataset};

fn grid(d: usize, lo: f64, hi: f64) -> Dataset {
    let rows: Vec<Vec<f64>> =
        (0..40).map(|i| (0..d).map(|j| lo + (hi - lo) * ((i * 7 + j * 13) % 40) as f64 / 39.0).collect()).collect();
    Dataset::from_rows(&rows, vec![0.0; 40]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_is_identity(e in arb_expr(3)) {
        let back = parse(&e.to_string()).unwrap();
        prop_assert!(back.same(&e), "{} reparsed as {}", e, back);
    }

    #[test]
    fn canonicalize_is_idempotent(e in arb_expr(3)) {
        let c = canonicalize(&e);
        prop_assert!(canonicalize(&c).same(&c), "{} -> {}", e, c);
    }

    #[test]
    fn complexity_is_positive(e in arb_expr(3)) {
        prop_assert!(e.complexity() >= 1);
    }

    #[test]
    fn evaluate_matches_the_oracle(e in arb_expr(3), x in prop::array::uniform3(-3.0f64..3.0)) {
        let got = e.evaluate(&x);
        let want = oracle_eval(&e, &x);
        prop_assert_eq!(got.map(f64::to_bits), want.map(f64::to_bits), "{}", e);
    }

    #[test]
    fn every_expression_solves_itself(e in arb_expr(2)) {
        prop_assume!(canonicalize(&e).has_vars());
        let domain = grid(2, 0.1, 2.0);
        let defined = (0..domain.n()).filter(|&r| e.evaluate(domain.row(r)).is_some()).count();
        prop_assume!(defined == domain.n());
        prop_assert!(is_symbolic_solution(&e, &e, &domain).is_solution(), "{}", e);
    }

    #[test]
    fn codec_round_trips(seed in any::<u64>(), depth in 1usize..=4, m in 1usize..=5, d0 in 1usize..=4, density in 0.0f64..0.3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, depth, m, d0, density);
        let label = encode(&s, 4).unwrap();
        prop_assert_eq!(decode(&label, m, d0).unwrap(), s);
    }

    #[test]
    fn codec_is_injective(seed in any::<u64>(), depth in 1usize..=3, m in 1usize..=3, d0 in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_structure(&mut rng, depth, m, d0, 0.2);
        let b = random_structure(&mut rng, depth, m, d0, 0.2);
        prop_assert_eq!(a == b, encode(&a, 4).unwrap() == encode(&b, 4).unwrap());
    }

    #[test]
    fn psi_round_trips(e in arb_positive_args_expr(3)) {
        let back = psi_inverse(&psi_forward(&e));
        prop_assert!(same_up_to_rounding(&canonicalize(&back), &canonicalize(&e), 1e-12), "{} came back as {}", e, back);
    }

    #[test]
    fn skeleton_agrees_with_the_network(seed in any::<u64>(), depth in 1usize..=3, m in 1usize..=2, d0 in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, depth, m, d0, 0.25);
        let p = random_params(&mut rng, &s, 1.0);
        prop_assume!(!s.is_degenerate());
        let k = skeleton_with_bindings(&s).unwrap();
        let (c, ex) = k.bind(&p);
        let x: Vec<f64> = (0..d0).map(|i| 0.3 + 0.4 * i as f64).collect();
        if let (Some(a), Some(b)) = (s.forward(&p, &x, true), k.expr.evaluate_with(&x, &c, &ex)) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0), "{} vs {} for {}", a, b, k.expr);
        }
    }

    #[test]
    fn pruned_forward_equals_premasked(seed in any::<u64>(), depth in 1usize..=3, m in 1usize..=2, d0 in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_structure(&mut rng, depth, m, d0, 0.3);
        let p = unisym_core::netcore::Params::random(&s.arch, 1.0, &mut rng);
        let x: Vec<f64> = (0..d0).map(|i| 0.5 + i as f64).collect();
        let a = s.forward(&p, &x, true);
        let b = s.forward(&p.masked(&s.masks), &x, false);
        prop_assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }

    #[test]
    fn reward_is_monotone(a in 0.0f64..1e12, b in 0.0f64..1e12) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(reward(lo) >= reward(hi));
        prop_assert!(reward(lo) <= 1.0 && reward(hi) > 0.0);
    }

    #[test]
    fn risk_threshold_keeps_the_top_fraction(r in prop::collection::vec(0.0f64..1.0, 1..200), eps in 0.01f64..1.0) {
        let thr = risk_threshold(&r, eps);
        let kept = r.iter().filter(|v| **v >= thr).count();
        prop_assert!(r.contains(&thr));
        prop_assert!(kept as f64 >= (eps * r.len() as f64).floor());
        prop_assert!(kept >= 1);
    }

    #[test]
    fn regularized_activations_are_bounded(x in prop::num::f64::NORMAL | prop::num::f64::ZERO, theta in 0.1f64..50.0) {
        let cfg = TrainConfig { theta_exp: theta, ..TrainConfig::default() };
        prop_assert!(regularized_is_bounded(x, &cfg));
    }

    #[test]
    fn identification_is_deterministic(seed in any::<u64>()) {
        let cfg = unisym_core::datagen::GenConfig::small(seed);
        let f = unisym_core::datagen::sample_function(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let a = identify_structure(&f.expr, 5, f.d);
        let b = identify_structure(&f.expr, 5, f.d);
        prop_assert_eq!(a.ok(), b.ok());
    }
}

#[test]
fn oracle_agrees_on_named_cases() {
    for (s, x, want) in [("x0^0.5", -4.0, None), ("ln(x0) + 1", 1.0, Some(1.0)), ("1 / (x0 - 2)", 2.0, None)] {
        let e: Expr = parse(s).unwrap();
        assert_eq!(oracle_eval(&e, &[x]), want, "{s}");
        assert_eq!(e.evaluate(&[x]), want, "{s}");
    }
}
