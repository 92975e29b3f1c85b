use nalgebra::{DMatrix, DVector};
use plq_smoother::linalg::{assemble_phi, block_tridiag_factor_solve, BlockTridiagonal};
use plq_smoother::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// SPD block-tridiagonal matrix built as `LLᵀ` with `L` block lower-bidiagonal.
fn random_spd_tridiag(seed: u64, nb: usize, n: usize) -> BlockTridiagonal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower: Vec<DMatrix<f64>> =
        (0..nb).map(|_| random_matrix(&mut rng, n, n) + DMatrix::identity(n, n) * 2.0).collect();
    let below: Vec<DMatrix<f64>> = (1..nb).map(|_| random_matrix(&mut rng, n, n)).collect();
    let mut diag = Vec::new();
    for k in 0..nb {
        let mut d = &lower[k] * lower[k].transpose();
        if k > 0 {
            d += &below[k - 1] * below[k - 1].transpose();
        }
        diag.push(d);
    }
    // block (k+1, k) of LLᵀ is L_{k+1,k} L_{k,k}ᵀ
    let sub = (1..nb).map(|k| &below[k - 1] * lower[k - 1].transpose()).collect();
    BlockTridiagonal::new(diag, sub).unwrap()
}

#[test]
fn solver_agrees_with_dense_on_fifty_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..50 {
        let nb = rng.random_range(1..=8);
        let n = rng.random_range(1..=4);
        let t = random_spd_tridiag(seed, nb, n);
        let rhs = DVector::from_fn(nb * n, |_, _| rng.random_range(-5.0..5.0));
        let x = block_tridiag_factor_solve(&t, &rhs).unwrap();
        let dense = t.to_dense().cholesky().unwrap().solve(&rhs);
        assert!((&x - &dense).amax() <= 1e-10 * (1.0 + dense.amax()), "seed {seed}");
        assert!((t.mul_vec(&x) - &rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }
}

#[test]
fn phi_matches_dense_assembly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (nb, n) = (5, 3);
    let g: Vec<DMatrix<f64>> = (0..nb).map(|_| random_matrix(&mut rng, n, n)).collect();
    let spd = |rng: &mut ChaCha8Rng| {
        let a = random_matrix(rng, n, n);
        &a * a.transpose()
    };
    let ow: Vec<_> = (0..nb).map(|_| spd(&mut rng)).collect();
    let ov: Vec<_> = (0..nb).map(|_| spd(&mut rng)).collect();
    let phi = assemble_phi(&g, &ow, &ov).unwrap();

    let dim = nb * n;
    let mut g_big = DMatrix::identity(dim, dim);
    let mut w_big = DMatrix::zeros(dim, dim);
    let mut v_big = DMatrix::zeros(dim, dim);
    for k in 0..nb {
        if k > 0 {
            g_big.view_mut((k * n, (k - 1) * n), (n, n)).copy_from(&(-&g[k]));
        }
        w_big.view_mut((k * n, k * n), (n, n)).copy_from(&ow[k]);
        v_big.view_mut((k * n, k * n), (n, n)).copy_from(&ov[k]);
    }
    let expected = g_big.transpose() * w_big * &g_big + v_big;
    assert!((phi.to_dense() - &expected).amax() <= 1e-12 * (1.0 + expected.amax()));
    for k in 0..nb {
        assert_eq!(phi.diag()[k], phi.diag()[k].transpose());
    }
}

#[test]
fn indefinite_pivot_is_reported() {
    let diag = vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)];
    let sub = vec![DMatrix::identity(2, 2) * 1.5];
    let t = BlockTridiagonal::new(diag, sub).unwrap();
    assert_eq!(t.factor().err(), Some(Error::NotSpd { block: 1 }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_is_small(seed in any::<u64>(), nb in 1usize..12, n in 1usize..5) {
        let t = random_spd_tridiag(seed, nb, n);
        let rhs = DVector::from_fn(nb * n, |i, _| (i as f64 * 0.37 + seed as f64 * 1e-9).cos());
        let x = block_tridiag_factor_solve(&t, &rhs).unwrap();
        prop_assert!((t.mul_vec(&x) - &rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }
}
