//! Seeded operator fixtures: random unitaries, block assemblies and the
//! built-in pairs used by the `wold` and `slocinski` commands.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use woldlab_core::hardy::{GradedOperator, TruncatedSpace};
use woldlab_core::numlin::{c64, ComplexMatrix, ComplexVector, ONE};
use woldlab_core::pairs::{validate_pair, ModelSpec, OperatorPair, PairMode};
use woldlab_core::{Complex64, Result, SchurSymbol};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for one level of a run.
pub fn level_rng(seed: u64, level: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(level as u64 + 1);
    r
}

pub fn complex_gaussian(r: &mut impl Rng) -> Complex64 {
    c64(r.sample(StandardNormal), r.sample(StandardNormal))
}

pub fn random_matrix(r: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(r))
}

/// Haar-distributed unitary (QR of a Ginibre matrix with the phase fix).
pub fn random_unitary(r: &mut impl Rng, n: usize) -> ComplexMatrix {
    let (q, rr) = random_matrix(r, n, n).qr().unpack();
    let phases = ComplexVector::from_fn(n, |i, _| {
        let d = rr[(i, i)];
        if d.norm() > 0.0 {
            d / d.norm()
        } else {
            ONE
        }
    });
    q * ComplexMatrix::from_diagonal(&phases)
}

pub fn unimodular(r: &mut impl Rng) -> Complex64 {
    Complex64::from_polar(1.0, r.random_range(0.0..std::f64::consts::TAU))
}

/// Uniform point in the disc of the given radius.
pub fn in_disc(r: &mut impl Rng, radius: f64) -> Complex64 {
    Complex64::from_polar(radius * r.random::<f64>().sqrt(), r.random_range(0.0..std::f64::consts::TAU))
}

/// Scalar polynomial with `Σ|c_k| = total` and `Σ_{k≥1}|c_k| ≥ floor`.
pub fn random_polynomial(r: &mut impl Rng, degree: usize, total: f64) -> Vec<Complex64> {
    let raw: Vec<Complex64> = (0..=degree).map(|_| complex_gaussian(r)).collect();
    let s: f64 = raw.iter().map(|c| c.norm()).sum();
    raw.into_iter().map(|c| c * (total / s)).collect()
}

/// Commuting unitaries diagonal in a common random basis.
pub fn random_bi_unitary(r: &mut impl Rng, k: usize) -> (ComplexMatrix, ComplexMatrix) {
    let q = random_unitary(r, k);
    let d1 = ComplexVector::from_fn(k, |_, _| unimodular(r));
    let d2 = ComplexVector::from_fn(k, |_, _| unimodular(r));
    (
        &q * ComplexMatrix::from_diagonal(&d1) * q.adjoint(),
        &q * ComplexMatrix::from_diagonal(&d2) * q.adjoint(),
    )
}

/// `(V1, V2) ⊕ (M_ψ, M_z) ⊕ (M_z, M_φ)` with random parts; zero dimensions drop a part.
pub fn random_model_spec(r: &mut impl Rng, unitary_dim: usize, psi_dim: usize, phi: Option<SchurSymbol>) -> ModelSpec {
    ModelSpec {
        bi_unitary: (unitary_dim > 0).then(|| random_bi_unitary(r, unitary_dim)),
        psi: (psi_dim > 0).then(|| random_unitary(r, psi_dim)),
        phi,
    }
}

/// Random Blaschke product with `degree` zeros of modulus at most `radius`.
pub fn random_blaschke(r: &mut impl Rng, degree: usize, radius: f64) -> SchurSymbol {
    let zeros = (0..degree).map(|_| in_disc(r, radius)).collect();
    SchurSymbol::blaschke(zeros, unimodular(r)).expect("zeros inside the disc")
}

/// `M_z ⊕ U` on `H²(degree) ⊕ ℂᵏ`.
pub fn shift_plus_unitary(u: &ComplexMatrix, degree: usize) -> Result<GradedOperator> {
    let s = GradedOperator::shift(1, degree)?;
    if u.nrows() == 0 {
        return Ok(s);
    }
    GradedOperator::direct_sum(&[&s, &GradedOperator::ungraded(u.clone())?])
}

/// `(M_{z1}, M_{z2})` on polynomials of bidegree `≤ (d1, d2)`.
pub fn tensor_shift(d1: usize, d2: usize) -> Result<OperatorPair> {
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
    validate_pair(
        GradedOperator::new(sp.clone(), a, 1, 0.0)?,
        GradedOperator::new(sp, b, 1, 0.0)?,
        PairMode::Isometry,
    )
}

/// Dimensions of the mixed fixture parts `(uu, us, su, ss)` at truncation `top`.
pub fn mixed_dims(top: usize) -> [usize; 4] {
    let levels = top + 1;
    [1, 2 * levels, levels, levels * levels]
}

/// One part of each kind: `(λ, μ) ⊕ (M_U, M_z ⊗ I₂) ⊕ (M_z, c) ⊕ tensor shift`,
/// conjugated by a random unitary.
pub fn mixed_slocinski(r: &mut impl Rng, top: usize) -> Result<OperatorPair> {
    let lam = ComplexMatrix::from_element(1, 1, unimodular(r));
    let mu = ComplexMatrix::from_element(1, 1, unimodular(r));
    let u = random_unitary(r, 2);
    let c = unimodular(r);
    let tensor = tensor_shift(top, top)?;
    let s1 = GradedOperator::direct_sum(&[
        &GradedOperator::ungraded(lam)?,
        &GradedOperator::multiplier_at(&SchurSymbol::constant(u)?, top)?,
        &GradedOperator::shift_at(1, top),
        tensor.s1(),
    ])?;
    let s2 = GradedOperator::direct_sum(&[
        &GradedOperator::ungraded(mu)?,
        &GradedOperator::shift_at(2, top),
        &GradedOperator::multiplier_at(&SchurSymbol::scalar_constant(c)?, top)?,
        tensor.s2(),
    ])?;
    let p = validate_pair(s1, s2, PairMode::Isometry)?;
    let q = random_unitary(r, p.dim());
    p.conjugated(&q)
}
