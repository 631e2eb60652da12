#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use woldlab_core::numlin::{c64, ComplexMatrix, ComplexVector};
use woldlab_core::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; good enough for test matrices.
    let u: f64 = rng.random_range(1e-12..1.0);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| c64(gaussian(rng), gaussian(rng)))
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| c64(gaussian(rng), gaussian(rng)))
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    let qr = random_matrix(rng, n, n).qr();
    let (q, r) = qr.unpack();
    let phases = ComplexVector::from_fn(n, |i, _| {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64(1.0, 0.0)
        }
    });
    q * ComplexMatrix::from_diagonal(&phases)
}

pub fn unimodular(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

pub fn in_disc(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Polynomial coefficients with `Σ|c_k| = total`, so the symbol is Schur when `total ≤ 1`.
pub fn schur_polynomial(rng: &mut ChaCha8Rng, degree: usize, total: f64) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..=degree).map(|_| c64(gaussian(rng), gaussian(rng))).collect();
    let s: f64 = raw.iter().map(|c| c.norm()).sum();
    raw.into_iter().map(|c| c * (total / s)).collect()
}

/// Orthogonal projector onto the column span, by SVD with a relative cut.
pub fn projector(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    if m.ncols() == 0 {
        return ComplexMatrix::zeros(n, n);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.max();
    let mut p = ComplexMatrix::zeros(n, n);
    for (j, s) in svd.singular_values.iter().enumerate() {
        if *s > 1e-9 * smax.max(1e-300) {
            let c = u.column(j);
            p += c * c.adjoint();
        }
    }
    p
}

pub fn eye(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}
