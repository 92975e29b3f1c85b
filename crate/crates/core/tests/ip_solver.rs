mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use plq_smoother::ip::{
    dense_kkt_jacobian, dense_kkt_residual, dense_reference_solve, kkt_residual, newton_step, IpIterate,
};
use plq_smoother::model::{build_problem, objective, stack};
use plq_smoother::oracle::{normal_equations_smooth, rts_smooth_stacked};
use plq_smoother::{ip_solve, AtomKind, Error, PlqPenalty, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// An interior iterate with random entries.
fn random_iterate(p: &plq_smoother::SmootherProblem, seed: u64) -> IpIterate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut it = IpIterate::initial(p);
    let mut fill = |v: &mut DVector<f64>, lo: f64, hi: f64| v.iter_mut().for_each(|e| *e = rng.random_range(lo..hi));
    fill(&mut it.x, -2.0, 2.0);
    fill(&mut it.u_w, -0.5, 0.5);
    fill(&mut it.u_v, -0.5, 0.5);
    fill(&mut it.s_w, 0.1, 2.0);
    fill(&mut it.q_w, 0.1, 2.0);
    fill(&mut it.s_v, 0.1, 2.0);
    fill(&mut it.q_v, 0.1, 2.0);
    it.mu = 0.37;
    it
}

fn newton_defect(p: &plq_smoother::SmootherProblem, it: &IpIterate) -> f64 {
    let d = newton_step(p, it).unwrap();
    let f = dense_kkt_residual(p, it).unwrap().to_vector();
    let j = dense_kkt_jacobian(p, it).unwrap();
    (j * d.to_vector() + &f).norm() / f.norm()
}

#[test]
fn structured_residual_matches_dense() {
    let (model, z) = random_instance(11, 2, 2, 5);
    for (pw, pv) in [(HUBER, VAPNIK), (L1, HUBER), (AtomKind::L2, L1)] {
        let p = problem(&model, pw, pv, &z);
        let it = random_iterate(&p, 3);
        let a = kkt_residual(&p, &it).unwrap().to_vector();
        let b = dense_kkt_residual(&p, &it).unwrap().to_vector();
        assert!((a - b).amax() < 1e-12);
    }
}

#[test]
fn newton_direction_solves_dense_jacobian_system() {
    let (model, z) = random_instance(5, 2, 1, 4);
    let p = problem(&model, HUBER, HUBER, &z);
    for seed in 0..5 {
        let defect = newton_defect(&p, &random_iterate(&p, seed));
        assert!(defect <= 1e-8, "defect {defect}");
    }
}

#[test]
fn newton_direction_with_raw_penalty() {
    // Asymmetric quantile-type penalty: 0.3 y for y >= 0, -0.7 y below.
    let quantile = PlqPenalty::new(
        DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
        DVector::from_vec(vec![0.3, 0.7]),
        DMatrix::from_element(1, 1, 0.1),
        DVector::zeros(1),
        DMatrix::identity(1, 1),
    )
    .unwrap();
    let (model, z) = random_instance(8, 1, 1, 6);
    let p = build_problem(&model, &[atom(HUBER, 1)], &[quantile], &z).unwrap();
    let defect = newton_defect(&p, &random_iterate(&p, 1));
    assert!(defect <= 1e-8, "defect {defect}");
    let res = ip_solve(&p, &SolverOptions::default()).unwrap();
    let dense = dense_reference_solve(&p).unwrap();
    assert!(res.converged && dense.converged);
    assert!((res.objective_value - dense.objective_value).abs() <= 1e-6 * (1.0 + dense.objective_value.abs()));
}

#[test]
fn doubling_mu_only_shifts_complementarity() {
    let (model, z) = random_instance(2, 2, 1, 3);
    let p = problem(&model, VAPNIK, HUBER, &z);
    let it = random_iterate(&p, 9);
    let base = kkt_residual(&p, &it).unwrap();
    let doubled = kkt_residual(&p, &IpIterate { mu: 2.0 * it.mu, ..it.clone() }).unwrap();
    for (i, (a, b)) in base.blocks().iter().zip(doubled.blocks()).enumerate() {
        let expected = if i == 2 || i == 3 { -it.mu } else { 0.0 };
        assert!((b - *a).iter().all(|d| (d - expected).abs() < 1e-14), "block {}", i + 1);
    }
}

#[test]
fn zero_residual_gives_zero_direction() {
    let model = scalar_model(1);
    let p = problem(&model, HUBER, HUBER, &[DVector::zeros(1)]);
    let it = IpIterate {
        x: DVector::zeros(1),
        u_w: DVector::zeros(1),
        u_v: DVector::zeros(1),
        q_w: DVector::from_element(2, 1e-3),
        s_w: DVector::from_element(2, 1.0),
        q_v: DVector::from_element(2, 1e-3),
        s_v: DVector::from_element(2, 1.0),
        mu: 1e-3,
    };
    assert!(kkt_residual(&p, &it).unwrap().inf_norm() < 1e-16);
    let d = newton_step(&p, &it).unwrap();
    assert!(d.to_vector().amax() < 1e-16);
}

#[test]
fn quadratic_problem_needs_one_newton_step() {
    let (model, z) = random_instance(21, 2, 1, 30);
    let p = problem(&model, AtomKind::L2, AtomKind::L2, &z);
    let it = IpIterate::initial(&p);
    let d = newton_step(&p, &it).unwrap();
    let expected = stack(&normal_equations_smooth(&model, &z).unwrap());
    assert!((&d.x - &expected).amax() < 1e-9);

    let res = ip_solve(&p, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_eq!(res.iterations, 1);
}

#[test]
fn scalar_single_step_example() {
    let model = scalar_model(1);
    let p = problem(&model, AtomKind::L2, AtomKind::L2, &[DVector::from_element(1, 2.0)]);
    for res in [ip_solve(&p, &SolverOptions::default()).unwrap(), dense_reference_solve(&p).unwrap()] {
        assert!(res.converged);
        assert!((res.states[0][0] - 1.0).abs() < 1e-12);
        assert!((res.objective_value - 1.0).abs() < 1e-12);
    }
}

#[test]
fn l2_matches_rts_on_medium_instance() {
    let (model, z) = random_instance(100, 2, 1, 100);
    let p = problem(&model, AtomKind::L2, AtomKind::L2, &z);
    let res = ip_solve(&p, &SolverOptions::default()).unwrap();
    let rts = rts_smooth_stacked(&model, &z).unwrap();
    assert!((res.stacked_states() - &rts).amax() < 1e-6);
}

#[test]
fn huber_agrees_with_dense_reference() {
    let (model, z) = random_instance(4, 1, 1, 8);
    let p = problem(&model, HUBER, HUBER, &z);
    let a = ip_solve(&p, &SolverOptions::default()).unwrap();
    let b = dense_reference_solve(&p).unwrap();
    assert!(a.converged && b.converged);
    assert!((a.objective_value - b.objective_value).abs() < 1e-6);
    assert!((a.stacked_states() - b.stacked_states()).amax() < 1e-5);
}

#[test]
fn noiseless_data_is_fit_exactly() {
    let (model, _) = random_instance(31, 2, 2, 12);
    let mut x = Vec::new();
    let mut prev = model.x0().clone();
    for k in 0..model.horizon() {
        let next = &model.transitions()[k] * &prev;
        x.push(next.clone());
        prev = next;
    }
    let z: Vec<_> = x.iter().enumerate().map(|(k, xk)| &model.observations()[k] * xk).collect();
    for (pw, pv) in [(HUBER, L1), (VAPNIK, VAPNIK), (L1, AtomKind::L2)] {
        let p = problem(&model, pw, pv, &z);
        let res = ip_solve(&p, &SolverOptions::default()).unwrap();
        assert!(res.converged, "{pw} / {pv}");
        assert!(res.objective_value <= 1e-8, "{pw} / {pv}: {}", res.objective_value);
        assert!((res.stacked_states() - stack(&x)).amax() < 1e-4, "{pw} / {pv}");
    }
}

#[test]
fn converged_solves_carry_a_kkt_certificate() {
    let opts = SolverOptions::default();
    for seed in 0..6 {
        let (model, z) = random_instance(seed, 2, 1, 25);
        for (pw, pv) in [(HUBER, HUBER), (L1, VAPNIK), (VAPNIK, L1), (AtomKind::L2, HUBER)] {
            let p = problem(&model, pw, pv, &z);
            let res = ip_solve(&p, &opts).unwrap();
            assert!(res.converged, "seed {seed} {pw}/{pv}");
            assert!(res.iterations <= 30);
            let f0 = kkt_residual(&p, &IpIterate { mu: 0.0, ..res.iterate.clone() }).unwrap();
            assert!(f0.block_inf_norms().iter().all(|&b| b <= opts.tol_res));
            assert!(res.iterate.max_complementarity() <= 10.0 * opts.tol_mu);
            assert!(res.iterate.min_positive() > 0.0);
        }
    }
}

#[test]
fn robust_fit_does_not_exceed_quadratic_start() {
    let (model, z) = random_instance(77, 2, 1, 40);
    let p = problem(&model, HUBER, HUBER, &z);
    let res = ip_solve(&p, &SolverOptions::default()).unwrap();
    let rts = rts_smooth_stacked(&model, &z).unwrap();
    assert!(res.objective_value <= objective(&p, &rts).unwrap() + 1e-9);
}

#[test]
fn max_iter_exhaustion_is_reported() {
    let (model, z) = random_instance(3, 1, 1, 20);
    let p = problem(&model, HUBER, HUBER, &z);
    let res = ip_solve(&p, &SolverOptions { max_iter: 1, ..Default::default() }).unwrap();
    assert!(!res.converged);
    assert_eq!(res.iterations, 1);
}

#[test]
fn invalid_options_are_rejected() {
    let p = problem(&scalar_model(1), HUBER, HUBER, &[DVector::zeros(1)]);
    for opts in [
        SolverOptions { step_frac: 1.0, ..Default::default() },
        SolverOptions { mu_reduce: 0.0, ..Default::default() },
        SolverOptions { max_iter: 0, ..Default::default() },
        SolverOptions { tol_res: -1.0, ..Default::default() },
    ] {
        assert!(matches!(ip_solve(&p, &opts), Err(Error::InvalidArgument(_))));
    }
}

#[test]
fn dense_reference_size_guard() {
    let (model, z) = random_instance(1, 3, 1, 70);
    let p = problem(&model, HUBER, HUBER, &z);
    assert!(matches!(dense_reference_solve(&p), Err(Error::InvalidArgument(_))));
}
