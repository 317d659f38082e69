use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotcd::agp::{action_oracle, GaugeContext};
use rotcd::closed_form::{action_lhz, action_qubo, lhz_counts, RaParams};
use rotcd::models::{lhz_default_constraints, Model, ModelSpec};
use rotcd::validation;

#[test]
fn every_model_agrees_with_dense_oracle() {
    let r = validation::closed_form_vs_oracle(100, 11).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.checks >= 100 * validation::oracle_models().unwrap().len());
}

#[test]
fn chain_action_per_site_is_size_independent() {
    let r = validation::chain_n_independence(20, 12).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn decomposition_identities_hold_densely() {
    let r = validation::decomposition_properties(40, 5, 13).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn cd_two_operator_minimum_is_trivial() {
    let r = validation::cd_limitations(14).unwrap();
    assert!(r.passed, "{r:?}");
}

fn integer_qubo(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut j = vec![vec![0.0; n + 1]; n + 1];
    for r in 0..=n {
        for c in r + 1..=n {
            let v = rng.gen_range(-3..=3) as f64;
            j[r][c] = v;
            j[c][r] = v;
        }
    }
    j
}

#[test]
fn qubo_action_is_pi_periodic_for_integer_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 2..=7 {
        let j = integer_qubo(n, &mut rng);
        let spec = ModelSpec::Qubo { couplings: j.clone(), seed: None };
        for _ in 0..20 {
            let fd = spec.ua_fields(rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0));
            let (b, g) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
            let s = action_qubo(&j, &fd, b, g).unwrap();
            let shifted = action_qubo(&j, &fd, b, g + std::f64::consts::PI).unwrap();
            assert!((s - shifted).abs() <= 1e-10 * s.abs().max(1.0), "n={n}: {s} vs {shifted}");
        }
    }
}

#[test]
fn lhz_action_is_pi_periodic_for_integer_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for n in 3..=5 {
        let constraints = lhz_default_constraints(n).unwrap();
        let k = n * (n - 1) / 2;
        let j: Vec<f64> = (0..k).map(|_| rng.gen_range(-3..=3) as f64).collect();
        let counts = lhz_counts(&constraints, k).unwrap();
        let spec = ModelSpec::Lhz { logical: n, couplings: j.clone(), constraints, seed: None };
        for _ in 0..20 {
            let fd = spec.ua_fields(rng.gen_range(0.0..1.0), rng.gen_range(-2.0..2.0));
            let (b, g, p) = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let s = action_lhz(&counts, &j, &fd, b, g, p).unwrap();
            let shifted = action_lhz(&counts, &j, &fd, b, g + std::f64::consts::PI, p).unwrap();
            assert!((s - shifted).abs() <= 1e-10 * s.abs().max(1.0), "n={n}: {s} vs {shifted}");
        }
    }
}

#[test]
fn periodic_shift_matches_oracle_for_small_integer_qubo() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let spec = ModelSpec::Qubo { couplings: integer_qubo(4, &mut rng), seed: None };
    let model = Model::new(spec.clone()).unwrap();
    let ctx = GaugeContext::new(&model, spec.ua_fields(0.4, 1.1)).unwrap();
    let p = RaParams { beta: 0.3, gamma: 0.7, phi: None };
    let q = RaParams { gamma: p.gamma + std::f64::consts::PI, ..p };
    let (a, b) = (action_oracle(&ctx, &p).unwrap(), action_oracle(&ctx, &q).unwrap());
    assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
}

fn qubo_eval_seconds(n: usize, repeats: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut j = vec![vec![0.0; n + 1]; n + 1];
    for r in 0..=n {
        for c in r + 1..=n {
            let v = rng.gen_range(-1.0..1.0);
            j[r][c] = v;
            j[c][r] = v;
        }
    }
    let spec = ModelSpec::Qubo { couplings: j.clone(), seed: None };
    let fd = spec.ua_fields(0.3, 1.2);
    let mut best = f64::INFINITY;
    for k in 0..repeats {
        let t0 = Instant::now();
        let s = action_qubo(&j, &fd, 0.1 + k as f64 * 1e-3, 0.2).unwrap();
        best = best.min(t0.elapsed().as_secs_f64());
        assert!(s.is_finite() && s >= 0.0);
    }
    best
}

#[test]
fn qubo_action_cost_grows_cubically() {
    qubo_eval_seconds(50, 3);
    let small = qubo_eval_seconds(50, 40);
    let large = qubo_eval_seconds(200, 5);
    let ratio = large / small;
    // a factor four in N gives 64 for a cubic cost; allow a factor two either way
    assert!((32.0..=128.0).contains(&ratio), "time ratio {ratio} ({small:e} s -> {large:e} s)");
}
