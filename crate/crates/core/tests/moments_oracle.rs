mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use woldlab_core::moments::{
    block_model_check, finite_spectrum_forcing, intertwining_check, moment_match, nnls, orthogonality_from_first,
    BlockModel,
};
use woldlab_core::numlin::{c64, ComplexMatrix, ComplexVector};
use woldlab_core::pairs::construct_example;
use woldlab_core::symbols::boundary_points;
use woldlab_core::{Complex64, Error, SchurSymbol};

/// Projected gradient descent with step `1/‖A‖²`; slow but obviously correct.
fn nnls_oracle(a: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    let l = a.norm().powi(2).max(1e-12);
    let mut x = DVector::<f64>::zeros(a.ncols());
    for _ in 0..200_000 {
        let g = a.transpose() * (a * &x - b);
        x -= g / l;
        x.apply(|v| *v = v.max(0.0));
    }
    (a * x - b).norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nnls_agrees_with_projected_gradient(seed in any::<u64>(), m in 2usize..8, n in 1usize..5) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(m, n, |_, _| gaussian(&mut r));
        let b = DVector::from_fn(m, |_, _| gaussian(&mut r));
        let (x, res) = nnls(&a, &b);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
        prop_assert!(((&a * &x - &b).norm() - res).abs() < 1e-12);
        let oracle = nnls_oracle(&a, &b);
        prop_assert!(res <= oracle + 1e-7);
        prop_assert!(oracle <= res + 1e-5);
    }

    #[test]
    fn nnls_residual_does_not_grow_with_more_columns(seed in any::<u64>(), m in 2usize..8, n in 1usize..5) {
        let mut r = rng(seed);
        let a = DMatrix::from_fn(m, n + 1, |_, _| gaussian(&mut r));
        let b = DVector::from_fn(m, |_, _| gaussian(&mut r));
        let (_, fewer) = nnls(&a.columns(0, n).into_owned(), &b);
        let (_, more) = nnls(&a, &b);
        prop_assert!(more <= fewer + 1e-12);
    }
}

/// `∫ ζᵏ (1 − |φ|²) dθ/2π` by a 4096-point rule.
fn weight_moment(phi: &SchurSymbol, k: i64) -> Complex64 {
    let n = 4096;
    boundary_points(n)
        .map(|z| z.powi(k as i32) * (1.0 - phi.evaluate_scalar(z).unwrap().norm_sqr()))
        .sum::<Complex64>()
        / n as f64
}

#[test]
fn example_moments_match_weight_moments() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.3, 0.1), c64(0.0, 0.4), c64(0.2, 0.0)]).unwrap();
    let ex = construct_example(&phi, 24).unwrap();
    let m = moment_match(&unitary_block(&ex), &ex.b_one().rows(0, ex.g_dim()).into_owned(), &phi, 10).unwrap();
    assert!(m.max_deviation < 1e-12);
    for k in -10..=10 {
        assert!((m.left.get(k) - weight_moment(&phi, k)).norm() < 1e-12, "k {k}");
    }
}

/// `V` acting on one degree of the `G` summand.
fn unitary_block(ex: &woldlab_core::ExamplePair) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_vec(ex.nodes.clone()))
}

#[test]
fn block_model_from_example_pair() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let ex = construct_example(&phi, 16).unwrap();
    let bm = BlockModel::from_pair(&ex.pair).unwrap();
    let checks = block_model_check(&bm, 12).unwrap();
    for (k, v) in &checks {
        assert!(*v < 1e-12, "{k} = {v}");
    }
    assert!(matches!(block_model_check(&bm, 10_000), Err(Error::Precision { .. })));
    let (first, second) = intertwining_check(&bm.u, &bm.b, 12).unwrap();
    assert!(first < 1e-12 && second < 1e-12);
    let (whole, col) = orthogonality_from_first(&bm.u, &bm.a, &bm.b).unwrap();
    assert!(whole < 1e-12 && col < 1e-12);
}

#[test]
fn intertwining_violation_is_seen_by_both_residuals() {
    let mut r = rng(5);
    let u = random_unitary(&mut r, 3);
    let b = random_matrix(&mut r, 3, 6);
    let (first, second) = intertwining_check(&u, &b, 4).unwrap();
    assert!(first > 1e-3 && second > 1e-3);
    let not_unitary = u * c64(0.5, 0.0);
    assert!(matches!(intertwining_check(&not_unitary, &b, 4), Err(Error::Precondition { .. })));
}

#[test]
fn forcing_with_few_atoms() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let mut r = rng(9);
    let d: Vec<Complex64> = (0..4).map(|_| unimodular(&mut r)).collect();
    let q = random_unitary(&mut r, 4);
    let u = &q * ComplexMatrix::from_diagonal(&ComplexVector::from_vec(d)) * q.adjoint();
    let cert = finite_spectrum_forcing(&u, &phi, 12, 1e-6).unwrap();
    assert_eq!(cert.atoms.len(), 4);
    assert!(cert.forced_trivial && cert.residual > 1e-5);

    let inner = SchurSymbol::blaschke(vec![c64(0.3, 0.0)], c64(1.0, 0.0)).unwrap();
    let cert = finite_spectrum_forcing(&u, &inner, 12, 1e-6).unwrap();
    assert!(!cert.forced_trivial && cert.residual < 1e-12);
}

#[test]
fn forcing_residual_shrinks_with_more_atoms() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let mut r = rng(2);
    let mut last = f64::INFINITY;
    let mut atoms = Vec::new();
    for _ in 0..6 {
        atoms.push(Complex64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU)));
        let u = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(atoms.clone()));
        let res = finite_spectrum_forcing(&u, &phi, 8, 1e-6).unwrap().residual;
        assert!(res <= last + 1e-12);
        last = res;
    }
}
