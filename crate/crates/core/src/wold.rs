//! Canonical decomposition of contractions and Wold decomposition of isometries.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hardy::GradedOperator;
use crate::numlin::{
    clustered_top_eigenspace, complement, ensure_finite, ensure_square, hermitian_eigen, hermitian_eigenvalues, identity, matmul, intersect, null_space, op_norm,
    orthonormalize, reducing_residual, svd_left, svd_right_full, vstack, ComplexMatrix, Subspace,
};

/// Admitted excess of `‖T‖` over 1.
pub const CONTRACTION_SLACK: f64 = 1e-10;

/// Isometry defect admitted on a window before an operator is treated as non-isometric.
pub const ISOMETRY_TOL: f64 = 1e-10;

/// Eigenvalues of `S^N S^{*N}` outside `[SPLIT, 1 − SPLIT]` count as settled.
const SPLIT: f64 = 1e-6;

/// Default power cap for graded hyper-ranges.
pub const DEFAULT_POWER_CAP: usize = 1 << 14;

#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    pub unitary_part: Subspace,
    pub cnu_part: Subspace,
    /// `T` restricted to the unitary part, in its basis.
    pub unitary_block: ComplexMatrix,
    pub reducing_residual: (f64, f64),
    /// `max(‖UᴴU − I‖, ‖UUᴴ − I‖)`.
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone)]
pub struct WoldDecomposition {
    pub hyper_range: Subspace,
    pub wandering: Subspace,
    /// Orthonormalized `S^n(E)` for `n = 0..=n_max`.
    pub ladder: Vec<Subspace>,
    /// Leading rungs on which the truncation is exact (`‖(SⁿE)ᴴSⁿE − I‖ ≤ 1e-10`).
    pub reliable_rungs: usize,
    /// `max_h ‖h − P_∞h − Σ_{n≤n_max} P_{SⁿE}h‖` over window basis vectors.
    pub completeness_residual: f64,
    /// `‖XᴴX − I‖` for `X = [E | SE | …]` over the reliable rungs.
    pub ladder_orthogonality: f64,
    /// Largest overlap `‖P_∞ SⁿE‖` over the reliable rungs.
    pub hyper_range_overlap: f64,
}

fn check_contraction(t: &ComplexMatrix) -> Result<()> {
    let norm = op_norm(t);
    if norm > 1.0 + CONTRACTION_SLACK {
        return Err(Error::Domain(format!("operator is not a contraction: ||t|| = {norm:.12}")));
    }
    Ok(())
}

/// Largest subspace on which `T` is unitary and which reduces `T`.
///
/// Starts from `ker(I − TᴴT) ∩ ker(I − TTᴴ)` and repeatedly keeps the vectors
/// whose images under `T` and `Tᴴ` stay inside, until the dimension stops dropping.
pub fn unitary_part(t: &ComplexMatrix, tol: f64) -> Result<CanonicalDecomposition> {
    ensure_square(t, "unitary_part")?;
    ensure_finite(t, "unitary_part input")?;
    check_contraction(t)?;
    let n = t.nrows();
    let id = identity(n);
    let th = t.adjoint();
    let defects = vstack(&[&(&id - &th * t), &(&id - t * &th)]);
    let mut s = null_space(&defects, tol);
    for _ in 0..=n {
        if s.is_zero() {
            break;
        }
        let outside = &id - s.projector();
        let pre = null_space(&(&outside * t), tol);
        let pre_star = null_space(&(&outside * &th), tol);
        let next = intersect(&intersect(&s, &pre)?, &pre_star)?;
        let stable = next.dim() == s.dim();
        s = next;
        if stable {
            break;
        }
    }
    let cnu = complement(&s);
    let u = s.compress(t);
    let k = s.dim();
    let unitarity_defect = op_norm(&(u.ad_mul(&u) - identity(k))).max(op_norm(&(&u * u.adjoint() - identity(k))));
    let reducing = reducing_residual(t, &s)?;
    Ok(CanonicalDecomposition {
        unitary_part: s,
        cnu_part: cnu,
        unitary_block: u,
        reducing_residual: reducing,
        unitarity_defect,
    })
}

/// `∩ₙ ran Tⁿ` for a square matrix, by range iteration `R_{k+1} = T R_k`.
///
/// The ranges are nested, so equal consecutive dimensions mean the iteration has settled.
pub fn hyper_range(t: &ComplexMatrix, n_max: usize, tol: f64) -> Result<Subspace> {
    ensure_square(t, "hyper_range")?;
    ensure_finite(t, "hyper_range input")?;
    if n_max < 1 {
        return Err(Error::InvalidInput("hyper_range needs n_max >= 1".into()));
    }
    let mut r = Subspace::full(t.nrows());
    // Rank decisions are relative to ‖T‖, not to the shrinking product.
    let floor = tol * op_norm(t).max(1.0);
    for level in 1..=n_max {
        if r.is_zero() {
            return Ok(r);
        }
        let (s, u) = svd_left(&(t * r.basis()));
        let rank = s.iter().take_while(|&&x| x > floor).count();
        let next = Subspace::from_columns_unchecked(u.columns(0, rank).into_owned(), tol);
        if next.dim() == r.dim() {
            return Ok(next);
        }
        if level == n_max {
            return Err(Error::Precision {
                what: format!("hyper-range still shrinking at level {level} (last dimension {})", next.dim()),
                required: level + 1,
            });
        }
        r = next;
    }
    unreachable!("loop returns at level n_max")
}

/// Hyper-range of a graded operator over its truncation.
///
/// For isometries, `h ∈ H_∞` iff `‖S^{*N}h‖ = ‖h‖` for all `N`, and the
/// compressed adjoint is exact, so `H_∞` is read off the eigenvectors of
/// `S^N S^{*N}` with eigenvalue near 1. `N` doubles until two successive levels
/// give the same count with a clean spectral split. Non-isometric operators use
/// range iteration on the compression.
pub fn hyper_range_graded(op: &GradedOperator, n_max: usize, tol: f64) -> Result<Subspace> {
    if n_max < 1 {
        return Err(Error::InvalidInput("hyper_range needs n_max >= 1".into()));
    }
    if op.isometry_defect() > ISOMETRY_TOL + op.tail() {
        return hyper_range(op.matrix(), n_max.max(op.dim() + 1), tol);
    }
    // Below the top graded degree the shift parts cannot have died out yet.
    let top = (0..op.dim()).map(|i| op.space().coord_degree(i)).max().unwrap_or(0);
    let start = (top + 1).next_power_of_two().min(n_max.next_power_of_two() / 2).max(1);
    isometric_hyper_range_from(op.matrix(), start, n_max, tol)
}

pub(crate) fn isometric_hyper_range(m: &ComplexMatrix, n_max: usize, tol: f64) -> Result<Subspace> {
    isometric_hyper_range_from(m, 1, n_max, tol)
}

/// `(Mᴴ)^power` by repeated squaring.
fn adjoint_power(m: &ComplexMatrix, power: usize) -> ComplexMatrix {
    let mut result: Option<ComplexMatrix> = None;
    let mut base = m.adjoint();
    let mut exp = power;
    while exp > 0 {
        if exp & 1 == 1 {
            result = Some(match result {
                Some(r) => matmul(&base, &r),
                None => base.clone(),
            });
        }
        exp >>= 1;
        if exp > 0 {
            base = matmul(&base, &base);
        }
    }
    result.unwrap_or_else(|| identity(m.nrows()))
}

/// Telescoping hyper-range for the compression `m` of an isometry, with `N`
/// doubling from `start` (a power of two).
fn isometric_hyper_range_from(m: &ComplexMatrix, start: usize, n_max: usize, tol: f64) -> Result<Subspace> {
    let mut p = adjoint_power(m, start);
    let mut power = start;
    let mut previous: Option<usize> = None;
    loop {
        let gram = matmul(&p.adjoint(), &p);
        let vals = hermitian_eigenvalues(&gram);
        let clean = vals.iter().all(|&v| v <= SPLIT || v >= 1.0 - SPLIT);
        let count = vals.iter().filter(|&&v| v >= 0.5).count();
        if clean && previous == Some(count) {
            return Ok(Subspace::from_columns_unchecked(clustered_top_eigenspace(&gram, count), tol));
        }
        previous = clean.then_some(count);
        if power.saturating_mul(2) > n_max {
            return Err(Error::Precision {
                what: format!("hyper-range not settled at power {power} (last count {count})"),
                required: power.saturating_mul(2),
            });
        }
        p = matmul(&p, &p);
        power *= 2;
    }
}

/// `E = ran(I − MMᴴ)` for the compression `m` of an isometry: the eigenvectors
/// of `I − MMᴴ` with eigenvalue at least 1/2.
pub(crate) fn wandering_subspace(m: &ComplexMatrix, tol: f64) -> Subspace {
    let n = m.nrows();
    let defect = identity(n) - matmul(m, &m.adjoint());
    let count = hermitian_eigenvalues(&defect).iter().filter(|&&v| v >= 0.5).count();
    Subspace::from_columns_unchecked(clustered_top_eigenspace(&defect, count), tol)
}

/// Wandering subspace `E = ker S*` of a graded isometry.
pub fn wandering(op: &GradedOperator) -> Subspace {
    wandering_subspace(op.matrix(), crate::numlin::DEFAULT_TOL)
}

fn check_isometric(s: &GradedOperator) -> Result<f64> {
    let defect = s.isometry_defect();
    if defect > ISOMETRY_TOL + s.tail() {
        return Err(Error::Domain(format!("operator is not isometric on its window (defect {defect:.3e})")));
    }
    Ok(defect)
}

/// Wold decomposition: hyper-range, wandering subspace and the ladder `SⁿE`.
pub fn wold_split(s: &GradedOperator, n_max: usize) -> Result<WoldDecomposition> {
    check_isometric(s)?;
    let tol = crate::numlin::DEFAULT_TOL;
    let hr = hyper_range_graded(s, DEFAULT_POWER_CAP, tol)?;
    let e = wandering(s);
    let m = s.matrix();
    let mut ladder = Vec::with_capacity(n_max + 1);
    let mut raw = Vec::new();
    let mut reliable = 0;
    let mut still_reliable = true;
    let mut rung = e.basis().clone();
    for _ in 0..=n_max {
        let defect = op_norm(&(rung.ad_mul(&rung) - identity(rung.ncols())));
        if still_reliable && defect <= ISOMETRY_TOL + s.tail() && !e.is_zero() {
            reliable += 1;
            raw.push(rung.clone());
        } else {
            still_reliable = false;
        }
        ladder.push(orthonormalize(&rung, tol)?);
        rung = m * rung;
    }
    let (ladder_orthogonality, hyper_range_overlap) = if raw.is_empty() {
        (0.0, 0.0)
    } else {
        let refs: Vec<&ComplexMatrix> = raw.iter().collect();
        let x = crate::numlin::hstack(&refs);
        let gram = x.ad_mul(&x) - identity(x.ncols());
        (op_norm(&gram), op_norm(&hr.basis().ad_mul(&x)))
    };

    let adj_power = adjoint_power(m, n_max + 1);
    let w = s.space().window(1);
    let outside = &w - hr.project(&w);
    let tails = adj_power * outside;
    let completeness_residual = tails.column_iter().map(|c| c.norm()).fold(0.0, f64::max);

    Ok(WoldDecomposition {
        hyper_range: hr,
        wandering: e,
        ladder,
        reliable_rungs: reliable,
        completeness_residual,
        ladder_orthogonality,
        hyper_range_overlap,
    })
}

/// Checks `TTᴴ + (TᴴT)⁻¹ ≤ 2I`; returns the verdict and the smallest
/// eigenvalue of `2I − TTᴴ − (TᴴT)⁻¹`.
pub fn shimorin_condition(t: &ComplexMatrix) -> Result<(bool, f64)> {
    ensure_square(t, "shimorin_condition")?;
    let smin = crate::numlin::min_singular_value(t);
    if smin <= 1e-10 {
        return Err(Error::Domain(format!("operator is not left-invertible (smallest singular value {smin:.3e})")));
    }
    let n = t.nrows();
    let gram = t.ad_mul(t);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Internal("Gram matrix of a left-invertible operator failed to invert".into()))?;
    let h = identity(n) * Complex64::new(2.0, 0.0) - t * t.adjoint() - inv;
    let (vals, _) = hermitian_eigen(&h);
    let least = vals.first().copied().unwrap_or(0.0);
    Ok((least >= -1e-10, least))
}

/// How well approximate eigenvectors of `S*` at the grid points account for
/// the completely non-unitary part.
///
/// Returns the largest of: their eigen-residuals `σ_min(Sᴴ − w̄)`, their leakage
/// into the hyper-range, and the coverage defect of their projections onto the
/// first `⌈|grid| / dim E⌉` ladder rungs. An empty grid returns `‖P_cnu‖`.
pub fn cnu_eigenvector_span_residual(s: &GradedOperator, grid: &[Complex64]) -> Result<f64> {
    check_isometric(s)?;
    let tol = crate::numlin::DEFAULT_TOL;
    let hr = hyper_range_graded(s, DEFAULT_POWER_CAP, tol)?;
    let cnu = complement(&hr);
    if grid.is_empty() {
        return Ok(if cnu.is_zero() { 0.0 } else { 1.0 });
    }
    for w in grid {
        if !(w.norm() < 1.0) {
            return Err(Error::Domain(format!("grid point {w} must lie in the open disc")));
        }
    }
    let e = wandering(s);
    if e.is_zero() {
        return Ok(if cnu.is_zero() { 0.0 } else { 1.0 });
    }
    let n = s.dim();
    let m = s.matrix();
    let k = e.dim();
    let mut eigvecs = Vec::new();
    let mut eigen_residual: f64 = 0.0;
    for w in grid {
        let a = m.adjoint() - identity(n) * w.conj();
        let (sv, v) = svd_right_full(&a);
        for j in n - k..n {
            eigen_residual = eigen_residual.max(sv[j]);
            eigvecs.push(v.column(j).into_owned());
        }
    }
    let v = ComplexMatrix::from_columns(&eigvecs);
    let leakage = op_norm(&hr.basis().ad_mul(&v));

    let rungs = grid.len().div_ceil(k);
    let mut blocks = Vec::with_capacity(rungs);
    let mut rung = e.basis().clone();
    for _ in 0..rungs {
        blocks.push(rung.clone());
        rung = m * rung;
    }
    let refs: Vec<&ComplexMatrix> = blocks.iter().collect();
    let w_span = orthonormalize(&crate::numlin::hstack(&refs), tol)?;
    let coords = w_span.basis().ad_mul(&v);
    let covered = orthonormalize(&coords, tol)?;
    let coverage = if covered.dim() == w_span.dim() { 0.0 } else { 1.0 };
    Ok(eigen_residual.max(leakage).max(coverage))
}
