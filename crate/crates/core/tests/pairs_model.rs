mod common;

use common::*;
use rand::Rng;
use woldlab_core::hardy::{double_commutation_defect, GradedOperator, TruncatedSpace};
use woldlab_core::numlin::{c64, ComplexMatrix, ComplexVector, ONE};
use woldlab_core::pairs::{
    assemble_model, construct_example, finiteness_checks, model_decomposition, point_spectrum_part, slocinski,
    validate_pair, verdict_battery, ModelSpec, PairMode, Trend,
};
use woldlab_core::{Complex64, Error, SchurSymbol};

/// `‖P_∞ S2 1‖² = ‖B(1)‖² = ŵ(0) = 1 − Σ|c_k|²` for a polynomial symbol.
fn orthogonality_oracle(coeffs: &[Complex64]) -> f64 {
    (1.0 - coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).max(0.0).sqrt()
}

#[test]
fn example_orthogonality_residual_matches_closed_form() {
    for seed in 0..4 {
        let mut r = rng(seed);
        let coeffs = schur_polynomial(&mut r, 1 + seed as usize % 3, 0.95);
        let phi = SchurSymbol::scalar_polynomial(&coeffs).unwrap();
        let ex = construct_example(&phi, 12).unwrap();
        let v = verdict_battery(&ex.pair, &[], 3).unwrap();
        assert!((v.r_iii - orthogonality_oracle(&coeffs)).abs() < 1e-10, "seed {seed}");
        assert!(!v.verdict && v.consistent());
    }
}

#[test]
fn non_inner_example_has_growing_profile() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let ex = construct_example(&phi, 16).unwrap();
    let v = verdict_battery(&ex.pair, &[], 3).unwrap();
    assert_eq!(v.r_iv_trend, Trend::Growing);
    let f = finiteness_checks(&ex.pair).unwrap();
    assert!(!f.verdict);
}

#[test]
fn inner_example_is_a_plain_shift_pair() {
    let b = SchurSymbol::blaschke(vec![c64(0.2, 0.3)], c64(1.0, 0.0)).unwrap();
    let ex = construct_example(&b, 12).unwrap();
    assert_eq!(ex.g_dim(), 0);
    let v = verdict_battery(&ex.pair, &[], 3).unwrap();
    assert!(v.verdict && v.consistent());
    assert!(v.r_iv.iter().all(|l| l.dims.iter().all(|&d| d <= 2)));
}

fn three_part_spec(seed: u64) -> ModelSpec {
    let mut r = rng(seed);
    let k = r.random_range(1..=3usize);
    let q = random_unitary(&mut r, k);
    let d1: Vec<Complex64> = (0..k).map(|_| unimodular(&mut r)).collect();
    let d2: Vec<Complex64> = (0..k).map(|_| unimodular(&mut r)).collect();
    let diag = |d: Vec<Complex64>| ComplexMatrix::from_diagonal(&ComplexVector::from_vec(d));
    let v1 = &q * diag(d1) * q.adjoint();
    let v2 = &q * diag(d2) * q.adjoint();
    let f = r.random_range(1..=2usize);
    let psi = random_unitary(&mut r, f);
    let nz = r.random_range(1..=2usize);
    let zeros = (0..nz).map(|_| in_disc(&mut r, 0.5)).collect();
    let phi = SchurSymbol::blaschke(zeros, unimodular(&mut r)).unwrap();
    ModelSpec {
        bi_unitary: Some((v1, v2)),
        psi: Some(psi),
        phi: Some(phi),
    }
}

#[test]
fn model_round_trip_after_random_conjugation() {
    for seed in 0..3 {
        let spec = three_part_spec(seed);
        let pair = assemble_model(&spec, 10).unwrap();
        let q = random_unitary(&mut rng(100 + seed), pair.dim());
        let pair = pair.conjugated(&q).unwrap();
        let md = model_decomposition(&pair).unwrap();
        assert_eq!(md.h_uu.dim(), spec.bi_unitary.as_ref().unwrap().0.nrows());
        assert_eq!(md.f_dim(), spec.psi.as_ref().unwrap().nrows());
        assert_eq!(md.e_dim(), 1);
        assert!(md.reconstruction_residual <= 1e-8);
        assert!(md.toeplitz_residual <= 1e-8);
        let truth = spec.phi.as_ref().unwrap().scalar_coefficients(md.phi_coefficients.len() - 1).unwrap();
        for (got, want) in md.phi_coefficients.iter().zip(&truth) {
            assert!((got[(0, 0)] - want).norm() <= 1e-8);
        }
    }
}

#[test]
fn model_decomposition_refuses_coupled_pairs() {
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
    let ex = construct_example(&phi, 8).unwrap();
    assert!(matches!(model_decomposition(&ex.pair), Err(Error::Verdict { .. })));
}

fn tensor_shift(d1: usize, d2: usize) -> (GradedOperator, GradedOperator) {
    let sp = TruncatedSpace::bigraded(d1, d2);
    let n = (d1 + 1) * (d2 + 1);
    let idx = |i: usize, j: usize| i + (d1 + 1) * j;
    let mut a = ComplexMatrix::zeros(n, n);
    let mut b = ComplexMatrix::zeros(n, n);
    for j in 0..=d2 {
        for i in 0..=d1 {
            if i < d1 {
                a[(idx(i + 1, j), idx(i, j))] = ONE;
            }
            if j < d2 {
                b[(idx(i, j + 1), idx(i, j))] = ONE;
            }
        }
    }
    (
        GradedOperator::new(sp.clone(), a, 1, 0.0).unwrap(),
        GradedOperator::new(sp, b, 1, 0.0).unwrap(),
    )
}

#[test]
fn slocinski_tensor_shift_is_all_shift_shift() {
    let (a, b) = tensor_shift(5, 4);
    let p = validate_pair(a, b, PairMode::Isometry).unwrap();
    let s = slocinski(&p).unwrap();
    assert_eq!(s.dims(), [0, 0, 0, 30]);
    assert_eq!(s.fiber_dims()[3], 1);
    assert!(s.mutual_orthogonality <= 1e-8 && s.joint_reduction <= 1e-8);
}

#[test]
fn slocinski_rejects_non_doubly_commuting() {
    let s = GradedOperator::shift_at(1, 8);
    let p = validate_pair(s.clone(), s, PairMode::Isometry).unwrap();
    assert!(matches!(slocinski(&p), Err(Error::Precondition { .. })));
}

#[test]
fn double_commutation_of_symbols() {
    assert!(double_commutation_defect(&SchurSymbol::scalar_constant(c64(0.3, 0.4)).unwrap(), 12).unwrap() < 1e-12);
    // ‖[M_z*, M_φ]‖ = ‖(φ − φ(0))/z‖ for a scalar polynomial.
    let phi = SchurSymbol::scalar_polynomial(&[c64(0.1, 0.0), c64(0.3, 0.0), c64(0.0, 0.4)]).unwrap();
    let d = double_commutation_defect(&phi, 12).unwrap();
    assert!((d - 0.5).abs() < 1e-10);
}

#[test]
fn point_spectrum_of_bi_unitary_part() {
    let spec = ModelSpec {
        bi_unitary: Some((
            ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, ONE, c64(0.0, 1.0)])),
            ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, c64(-1.0, 0.0), ONE])),
        )),
        psi: None,
        phi: Some(SchurSymbol::monomial(1)),
    };
    let p = assemble_model(&spec, 6).unwrap();
    let ps = point_spectrum_part(&p).unwrap();
    assert_eq!(ps.m.dim(), 3);
    assert_eq!(ps.eigenspaces.len(), 2);
    assert!(ps.reducing_s1 < 1e-10 && ps.reducing_s2 < 1e-10);
    assert!(ps.modulus_deviation < 1e-12);
}
