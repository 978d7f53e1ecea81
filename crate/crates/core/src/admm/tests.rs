use super::*;
use crate::numerics::real_diag;
use crate::random::rng_from_seed;
use crate::testutil::random_cmatrix;
use proptest::prelude::*;

fn random_state(seed: u64, n_r: usize, l_r: usize, n_s: usize) -> AdmmState {
    let mut rng = rng_from_seed(seed);
    let mut s = initialize(&mut rng, Dims { n_r, l_r, n_s }, &QuantizationBounds::default());
    s.lambda = random_cmatrix(&mut rng, n_r, n_s).scale(0.2);
    s
}

fn random_w_opt(seed: u64, n_r: usize, n_s: usize) -> CMatrix {
    let mut rng = rng_from_seed(seed);
    numerics::svd(&random_cmatrix(&mut rng, n_r, n_s)).unwrap().u
}

/// Central-difference gradient norm of a real function of a complex matrix,
/// differentiating real and imaginary parts independently.
fn fd_grad_norm(f: impl Fn(&CMatrix) -> f64, at: &CMatrix) -> f64 {
    let h = 1e-6;
    let mut acc = 0.0;
    for idx in 0..at.len() {
        for dir in [C64::new(h, 0.0), C64::new(0.0, h)] {
            let mut up = at.clone();
            let mut dn = at.clone();
            up[idx] += dir;
            dn[idx] -= dir;
            let g = (f(&up) - f(&dn)) / (2.0 * h);
            acc += g * g;
        }
    }
    acc.sqrt()
}

#[test]
fn initialization_contract() {
    let bounds = QuantizationBounds::default();
    let dims = Dims {
        n_r: 16,
        l_r: 4,
        n_s: 4,
    };
    let a = initialize(&mut rng_from_seed(1), dims, &bounds);
    let b = initialize(&mut rng_from_seed(1), dims, &bounds);
    assert_eq!(a, b);
    assert!(a.lambda.iter().all(|z| *z == C64::new(0.0, 0.0)));
    assert!(a.is_unit_modulus());
    assert!(a.delta_in_box(&bounds));
    assert_eq!(a.z.shape(), (16, 4));
    assert_eq!(a.w_bb.shape(), (4, 4));
    assert_eq!(a.iter, 0);
}

#[test]
fn z_step_fixed_point_and_limit() {
    let mut s = random_state(2, 8, 3, 2);
    s.lambda.fill(C64::new(0.0, 0.0));
    let w_opt = s.product();
    for alpha in [0.1, 1.0, 10.0] {
        assert!(numerics::rel_frobenius_err(&z_step(&s, &w_opt, alpha), &w_opt) < 1e-12);
    }
    let s = random_state(3, 8, 3, 2);
    let w_opt = random_w_opt(4, 8, 2);
    let z = z_step(&s, &w_opt, 1e-12);
    assert!(frobenius(&(z - (&w_opt - &s.lambda))) < 1e-9);
}

#[test]
fn z_step_zeroes_the_gradient() {
    let s = random_state(5, 8, 4, 3);
    let w_opt = random_w_opt(6, 8, 3);
    let alpha = 1.3;
    let z = z_step(&s, &w_opt, alpha);
    let target = &s.lambda.scale(1.0 / alpha) - s.product();
    let obj = |z: &CMatrix| 0.5 * frobenius_sq(&(&w_opt - z)) + 0.5 * alpha * frobenius_sq(&(z + &target));
    assert!(fd_grad_norm(obj, &z) < 1e-6);
}

#[test]
fn unit_modulus_projection_cases() {
    let a = CMatrix::from_row_slice(1, 3, &[C64::new(0.0, 0.0), C64::new(3.0, 4.0), C64::new(-2.0, 0.0)]);
    let p = project_unit_modulus(&a);
    assert_eq!(p[0], C64::new(0.0, 0.0));
    assert!((p[1] - C64::new(0.6, 0.8)).norm() < 1e-15);
    assert!((p[2] - C64::new(-1.0, 0.0)).norm() < 1e-15);
}

proptest! {
    #[test]
    fn unit_modulus_projection_is_idempotent(seed in any::<u64>(), r in 1usize..6, c in 1usize..6) {
        let a = random_cmatrix(&mut rng_from_seed(seed), r, c);
        let p = project_unit_modulus(&a);
        prop_assert!(frobenius(&(project_unit_modulus(&p) - &p)) < 1e-15);
        prop_assert!(p.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn wrf_unconstrained_zeroes_the_gradient() {
    for (seed, l_r, n_s) in [(7, 4, 4), (8, 3, 4), (9, 4, 2)] {
        let s = random_state(seed, 10, l_r, n_s);
        let alpha = 0.7;
        let m = wrf_unconstrained(&s, alpha).unwrap();
        let y = &s.z + s.lambda.scale(1.0 / alpha);
        let delta = s.delta_matrix();
        let obj = |m: &CMatrix| frobenius_sq(&(&y - m * &delta * &s.w_bb));
        assert!(fd_grad_norm(obj, &m) < 1e-6, "l_r={l_r} n_s={n_s}");
    }
}

#[test]
fn wrf_step_is_unit_modulus_and_keeps_feasible_minimizers() {
    let s = random_state(10, 12, 4, 4);
    let w = wrf_step(&s, 1.0).unwrap();
    assert!(w.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));

    // Make the unconstrained minimizer itself unit modulus: Z = W Δ W_BB
    // for a unit-modulus W, Λ = 0.
    let mut s = random_state(11, 12, 4, 4);
    let target = crate::random::random_phase_matrix(&mut rng_from_seed(12), 12, 4);
    s.lambda.fill(C64::new(0.0, 0.0));
    s.z = &target * s.delta_matrix() * &s.w_bb;
    let w = wrf_step(&s, 1.0).unwrap();
    assert!(frobenius(&(w - target)) < 1e-9);
}

#[test]
fn delta_step_matches_grid_search() {
    let bounds = QuantizationBounds::default();
    let (lo, hi) = (bounds.delta_min(), bounds.delta_max());
    let pm = PowerModel::default();
    for seed in 0..10 {
        let s = random_state(100 + seed, 8, 2, 2);
        let gamma = 0.01;
        let p = delta_problem(&s, 1.0, gamma * pm.p_adc, &bounds);
        let sol = delta_step(&s, gamma, 1.0, &pm, &bounds, &DeltaSolverOptions::default());
        let mut best = f64::INFINITY;
        let n = ((hi - lo) / 1e-3).ceil() as usize;
        let grid: Vec<f64> = (0..=n).map(|k| (lo + k as f64 * 1e-3).min(hi)).collect();
        for &a in &grid {
            for &b in &grid {
                best = best.min(p.objective(&[a, b]));
            }
        }
        assert!(sol.objective <= best + 2e-3, "seed {seed}: {} vs {best}", sol.objective);
        assert!(sol.objective <= p.objective(&s.delta));
    }
}

#[test]
fn wbb_step_orthonormal_case() {
    let mut s = random_state(13, 8, 3, 3);
    let q = numerics::svd(&random_cmatrix(&mut rng_from_seed(14), 8, 3)).unwrap().u;
    // Make W_RF Δ orthonormal.
    let inv_delta: Vec<f64> = s.delta.iter().map(|d| 1.0 / d).collect();
    s.w_rf = &q * real_diag(&inv_delta);
    let alpha = 2.0;
    let w_bb = wbb_step(&s, alpha).unwrap();
    let expected = s.delta_matrix() * s.w_rf.adjoint() * (&s.z + s.lambda.scale(1.0 / alpha));
    assert!(numerics::rel_frobenius_err(&w_bb, &expected) < 1e-9);
}

#[test]
fn wbb_step_residual_is_orthogonal_and_locally_minimal() {
    let mut rng = rng_from_seed(15);
    for seed in 0..10 {
        let s = random_state(200 + seed, 16, 4, 4);
        let alpha = 1.0;
        let w_bb = wbb_step(&s, alpha).unwrap();
        let rf_delta = &s.w_rf * s.delta_matrix();
        let y = &s.z + s.lambda.scale(1.0 / alpha);
        let resid = &y - &rf_delta * &w_bb;
        assert!(frobenius(&(rf_delta.adjoint() * &resid)) < 1e-9);

        let obj = |w: &CMatrix| 0.5 * alpha * frobenius_sq(&(&y - &rf_delta * w));
        let base = obj(&w_bb);
        for _ in 0..20 {
            let e = random_cmatrix(&mut rng, 4, 4);
            let e = e.scale(1e-3 / frobenius(&e));
            assert!(base <= obj(&(&w_bb + e)));
        }
        assert!(fd_grad_norm(obj, &w_bb) < 1e-6);
    }
}

#[test]
fn dual_update_cases() {
    let mut s = random_state(16, 8, 3, 3);
    s.z = s.product();
    assert!(frobenius(&(dual_update(&s, 1.0) - &s.lambda)) < 1e-15);

    let mut s = random_state(17, 8, 3, 3);
    s.lambda.fill(C64::new(0.0, 0.0));
    let r = &s.z - s.product();
    assert!(frobenius(&(dual_update(&s, 1.0) - &r)) < 1e-15);

    let alpha = 0.5;
    let start = s.lambda.clone();
    s.lambda = dual_update(&s, alpha);
    s.lambda = dual_update(&s, alpha);
    assert!(frobenius(&(&s.lambda - start - r.scale(2.0 * alpha))) < 1e-12);
}

#[test]
fn run_trace_length_and_determinism() {
    let w_opt = random_w_opt(18, 16, 4);
    let cfg = AdmmConfig::default();
    let pm = PowerModel::default();
    let a = run(&w_opt, 4, &cfg, &pm, &mut rng_from_seed(3)).unwrap();
    let b = run(&w_opt, 4, &cfg, &pm, &mut rng_from_seed(3)).unwrap();
    assert_eq!(a.trace.len(), 40);
    assert_eq!(a.combiner, b.combiner);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.combiner.bits, round_bits(&a.combiner.delta, &cfg.bounds));
}

#[test]
fn feasibility_holds_after_every_iteration() {
    let w_opt = random_w_opt(19, 16, 4);
    let cfg = AdmmConfig::default();
    let pm = PowerModel::default();
    let mut solver = Solver::new(&w_opt, 4, &cfg, &pm, &mut rng_from_seed(4)).unwrap();
    for _ in 0..cfg.n_max {
        let before = solver.state().clone();
        solver.step().unwrap();
        let after = solver.state();
        assert!(after.is_unit_modulus());
        assert!(after.delta_in_box(&cfg.bounds));
        // Dual update linearity.
        let residual = &after.z - after.product();
        let dl = &after.lambda - &before.lambda;
        assert!(frobenius(&(dl - residual.scale(cfg.alpha))) < 1e-12);
    }
}

#[test]
fn frozen_runs_never_move_delta() {
    let w_opt = random_w_opt(20, 16, 4);
    let cfg = AdmmConfig::default();
    let bits = BitVector::new(vec![1, 3, 5, 8], &cfg.bounds).unwrap();
    let frozen = DistortionMatrix::from_bits(&bits);
    let mut solver = Solver::frozen(&w_opt, &bits, &cfg, &mut rng_from_seed(5)).unwrap();
    for _ in 0..cfg.n_max {
        solver.step().unwrap();
        assert_eq!(solver.state().delta, frozen.as_slice());
    }
    let out = solver.finish().unwrap();
    assert_eq!(out.combiner.bits, bits);
}

#[test]
fn more_rf_chains_than_streams() {
    let w_opt = random_w_opt(21, 16, 2);
    let cfg = AdmmConfig::default();
    let out = run(&w_opt, 4, &cfg, &PowerModel::default(), &mut rng_from_seed(6)).unwrap();
    assert_eq!(out.combiner.w_rf.shape(), (16, 4));
    assert_eq!(out.combiner.w_bb.shape(), (4, 2));
    assert!(out.trace.iter().all(|t| t.mse_db.is_finite()));
}

#[test]
fn invalid_configuration_is_rejected() {
    let w_opt = random_w_opt(22, 8, 4);
    let pm = PowerModel::default();
    let cfg = AdmmConfig::default();
    assert!(run(&w_opt, 3, &cfg, &pm, &mut rng_from_seed(0)).is_err());
    assert!(run(&w_opt, 9, &cfg, &pm, &mut rng_from_seed(0)).is_err());
    let bad = AdmmConfig { alpha: 0.0, ..cfg };
    assert!(run(&w_opt, 4, &bad, &pm, &mut rng_from_seed(0)).is_err());
    let bad = AdmmConfig { n_max: 0, ..cfg };
    assert!(run(&w_opt, 4, &bad, &pm, &mut rng_from_seed(0)).is_err());
}
