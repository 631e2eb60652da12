mod common;

use common::*;
use rand::Rng;
use woldlab_core::hardy::GradedOperator;
use woldlab_core::numlin::{block_diag, c64, op_norm, ComplexMatrix, Subspace};
use woldlab_core::wold::{cnu_eigenvector_span_residual, hyper_range, unitary_part, wold_split};
use woldlab_core::Complex64;

/// `∩_{j≤n} ker(I − T*ʲTʲ) ∩ ker(I − TʲT*ʲ)`, straight from the definition.
fn unitary_part_oracle(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let id = eye(n);
    let mut p = id.clone();
    let mut rows = Vec::new();
    for _ in 0..n {
        p = t * p;
        rows.push(&id - p.adjoint() * &p);
        rows.push(&id - &p * p.adjoint());
    }
    let mut stacked = ComplexMatrix::zeros(rows.len() * n, n);
    for (i, r) in rows.iter().enumerate() {
        stacked.view_mut((i * n, 0), (n, n)).copy_from(r);
    }
    // Null space from the eigenvectors of the Gram matrix.
    let g = stacked.ad_mul(&stacked);
    let eig = g.symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] < 1e-10).collect();
    eig.eigenvectors.select_columns(keep.iter())
}

/// `block_diag(U, C)` in a random basis; `C` is completely non-unitary.
fn random_contraction(seed: u64) -> (ComplexMatrix, usize) {
    let mut r = rng(seed);
    let n = r.random_range(1..=6usize);
    let k = r.random_range(0..=n);
    let u = random_unitary(&mut r, k);
    let m = n - k;
    let c = match r.random_range(0..3) {
        0 => {
            let x = random_matrix(&mut r, m, m);
            let s = op_norm(&x).max(1e-12);
            x * c64(r.random_range(0.2..0.95) / s, 0.0)
        }
        1 => {
            let mut j = ComplexMatrix::zeros(m, m);
            for i in 1..m {
                j[(i, i - 1)] = unimodular(&mut r);
            }
            j
        }
        _ => {
            let d: Vec<Complex64> = (0..m).map(|_| in_disc(&mut r, 0.9)).collect();
            ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
        }
    };
    let q = random_unitary(&mut r, n);
    (&q * block_diag(&[&u, &c]) * q.adjoint(), k)
}

#[test]
fn unitary_part_matches_definition_on_random_contractions() {
    for seed in 0..60 {
        let (t, k) = random_contraction(seed);
        let d = unitary_part(&t, 1e-10).unwrap();
        assert_eq!(d.unitary_part.dim(), k, "seed {seed}");
        let oracle = Subspace::from_orthonormal(unitary_part_oracle(&t), 1e-10).unwrap();
        assert!(d.unitary_part.distance(&oracle).unwrap() <= 1e-8, "seed {seed}");
        assert!(d.unitarity_defect < 1e-10);
        assert!(d.reducing_residual.0 < 1e-10 && d.reducing_residual.1 < 1e-10);
    }
}

#[test]
fn scalar_half_has_no_unitary_part_but_full_hyper_range() {
    let t = ComplexMatrix::from_element(1, 1, c64(0.5, 0.0));
    assert!(unitary_part(&t, 1e-10).unwrap().unitary_part.is_zero());
    assert_eq!(hyper_range(&t, 8, 1e-10).unwrap().dim(), 1);
}

fn shift_plus_unitary(k: usize, degree: usize, seed: u64) -> GradedOperator {
    let s = GradedOperator::shift(1, degree).unwrap();
    if k == 0 {
        return s;
    }
    let u = GradedOperator::ungraded(random_unitary(&mut rng(seed), k)).unwrap();
    GradedOperator::direct_sum(&[&s, &u]).unwrap()
}

#[test]
fn wold_split_of_shift_plus_unitary() {
    for k in [0, 1, 3] {
        let s = shift_plus_unitary(k, 20, 7 + k as u64);
        let d = wold_split(&s, 24).unwrap();
        assert_eq!(d.hyper_range.dim(), k);
        assert_eq!(d.wandering.dim(), 1);
        assert!(d.completeness_residual <= 1e-10);
        assert!(d.ladder_orthogonality <= 1e-10);
        assert!(d.hyper_range_overlap <= 1e-10);
        assert_eq!(d.reliable_rungs, 22);
    }
}

#[test]
fn kernel_sections_span_the_shift_part() {
    let grid: Vec<Complex64> = (0..12).map(|j| Complex64::from_polar(0.5, std::f64::consts::TAU * j as f64 / 12.0)).collect();
    for k in [0, 2] {
        let s = shift_plus_unitary(k, 24, 11);
        assert!(cnu_eigenvector_span_residual(&s, &grid).unwrap() <= 1e-6);
    }
    // Grid points must lie inside the disc.
    let s = shift_plus_unitary(1, 24, 11);
    assert!(cnu_eigenvector_span_residual(&s, &[c64(1.0, 0.0)]).is_err());
}

#[test]
fn unitary_only_operator_has_trivial_wandering_space() {
    let u = GradedOperator::ungraded(random_unitary(&mut rng(1), 4)).unwrap();
    let d = wold_split(&u, 4).unwrap();
    assert_eq!(d.hyper_range.dim(), 4);
    assert!(d.wandering.is_zero());
    assert!(d.completeness_residual < 1e-12);
}
