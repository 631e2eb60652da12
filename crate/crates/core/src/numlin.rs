//! Dense complex linear algebra and subspace calculus.
//!
//! Subspaces are stored as orthonormal bases. Rank decisions use a singular
//! value threshold relative to the largest singular value.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Default relative rank threshold.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) fn ensure_finite(m: &ComplexMatrix, what: &str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

pub(crate) fn ensure_square(m: &ComplexMatrix, context: &'static str) -> Result<()> {
    if m.nrows() == m.ncols() {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected: m.nrows(),
            found: m.ncols(),
        })
    }
}

/// Singular values in nonincreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Operator 2-norm (largest singular value). Zero for empty matrices.
pub fn op_norm(m: &ComplexMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Smallest singular value over the column dimension (zero when rows < cols).
pub fn min_singular_value(m: &ComplexMatrix) -> f64 {
    if m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() < m.ncols() {
        return 0.0;
    }
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Number of singular values above `max(rel·σ_max, abs)`.
pub fn numerical_rank(m: &ComplexMatrix, rel: f64, abs: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    let cut = (rel * smax).max(abs);
    s.iter().filter(|&&x| x > cut).count()
}

/// Left singular vectors and singular values of the thin SVD, sorted nonincreasing.
pub(crate) fn svd_left(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let order = descending_order(svd.singular_values.as_slice());
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    (s, u.select_columns(order.iter()))
}

/// All `ncols` right singular values (padded with zeros) and a full unitary
/// matrix of right singular vectors, sorted nonincreasing.
pub(crate) fn svd_right_full(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.ncols();
    if n == 0 {
        return (Vec::new(), ComplexMatrix::zeros(0, 0));
    }
    let padded;
    let src = if m.nrows() < n {
        let mut p = ComplexMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    let svd = src.clone().svd(false, true);
    let v = svd.v_t.expect("right singular vectors requested").adjoint();
    let order = descending_order(svd.singular_values.as_slice());
    let s = order.iter().map(|&i| svd.singular_values[i]).collect();
    (s, v.select_columns(order.iter()))
}

fn descending_order(s: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx
}

/// Product `a·b` through four real GEMMs, which use the blocked real kernel;
/// small products fall back to the generic complex loop.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul: inner dimensions differ");
    if a.nrows() * a.ncols() * b.ncols() < 32 * 32 * 32 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re: DMatrix<f64> = &ar * &br - &ai * &bi;
    let im: DMatrix<f64> = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}

/// Spectral norm of the Hermitian part of `h`, from its eigenvalues.
pub fn hermitian_norm(h: &ComplexMatrix) -> f64 {
    if h.is_empty() {
        return 0.0;
    }
    let sym = (h + h.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues().iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// `‖xᴴx − I‖`, the isometry defect of the columns of `x`.
pub fn gram_defect(x: &ComplexMatrix) -> f64 {
    let g = matmul(&x.adjoint(), x);
    hermitian_norm(&(g - identity(x.ncols())))
}

/// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending.
pub fn hermitian_eigen(h: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    if h.is_empty() {
        return (Vec::new(), ComplexMatrix::zeros(h.nrows(), 0));
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    (vals, eig.eigenvectors.select_columns(idx.iter()))
}

/// Eigenvalues of the Hermitian part of `h`, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let sym = (h + h.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Orthonormal basis of the top `rank` eigenvectors of a Hermitian `g` whose
/// spectrum clusters near 0 and 1, by subspace iteration from a fixed start.
/// Falls back to a full eigen-decomposition when the iteration has not
/// converged to an invariant subspace.
pub fn clustered_top_eigenspace(g: &ComplexMatrix, rank: usize) -> ComplexMatrix {
    let n = g.nrows();
    if rank == 0 {
        return ComplexMatrix::zeros(n, 0);
    }
    // splitmix64, so the start does not depend on any RNG crate.
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let mut next = || {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        (z ^ (z >> 31)) as f64 / u64::MAX as f64 - 0.5
    };
    let mut q = ComplexMatrix::from_fn(n, rank, |_, _| Complex64::new(next(), next()));
    for _ in 0..4 {
        q = matmul(g, &q).qr().q();
    }
    let gq = matmul(g, &q);
    let rayleigh = matmul(&q.adjoint(), &gq);
    // Frobenius norms bound the spectral ones and cost no decomposition.
    let residual = (gq - matmul(&q, &rayleigh)).norm();
    let smallest = hermitian_eigenvalues(&rayleigh).first().copied().unwrap_or(0.0);
    if residual <= 1e-10 * g.norm().max(1.0) && smallest >= 0.5 {
        return q;
    }
    let (vals, vecs) = hermitian_eigen(g);
    vecs.columns(vals.len() - rank, rank).into_owned()
}

/// Eigenvalues of a general square matrix via the complex Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    ensure_square(m, "eigenvalues")?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    m.clone()
        .schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::Internal("Schur form did not produce eigenvalues".into()))
}

/// Horizontal concatenation of matrices with equal row counts.
pub fn hstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hstack row mismatch");
        out.view_mut((0, at), (rows, b.ncols())).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation of matrices with equal column counts.
pub fn vstack(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(b);
        at += b.nrows();
    }
    out
}

pub fn block_diag(blocks: &[&ComplexMatrix]) -> ComplexMatrix {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// A closed subspace of `C^n` held as an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient_dim: usize,
    basis: ComplexMatrix,
    tol: f64,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: ComplexMatrix::zeros(ambient_dim, 0),
            tol: DEFAULT_TOL,
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: identity(ambient_dim),
            tol: DEFAULT_TOL,
        }
    }

    /// Span of the given standard basis vectors.
    pub fn coordinates(ambient_dim: usize, indices: &[usize]) -> Self {
        let mut basis = ComplexMatrix::zeros(ambient_dim, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            basis[(i, j)] = ONE;
        }
        Self {
            ambient_dim,
            basis,
            tol: DEFAULT_TOL,
        }
    }

    /// Wraps a basis whose columns must already be orthonormal.
    pub fn from_orthonormal(basis: ComplexMatrix, tol: f64) -> Result<Self> {
        ensure_finite(&basis, "subspace basis")?;
        let k = basis.ncols();
        let gram_err = (basis.ad_mul(&basis) - identity(k)).norm();
        if gram_err > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "basis columns are not orthonormal (||Q^H Q - I||_F = {gram_err:.3e})"
            )));
        }
        Ok(Self {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        })
    }

    pub(crate) fn from_columns_unchecked(basis: ComplexMatrix, tol: f64) -> Self {
        Self {
            ambient_dim: basis.nrows(),
            basis,
            tol,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn projector(&self) -> ComplexMatrix {
        matmul(&self.basis, &self.basis.adjoint())
    }

    /// Projects `m` (columns in the ambient space) onto the subspace.
    pub fn project(&self, m: &ComplexMatrix) -> ComplexMatrix {
        matmul(&self.basis, &matmul(&self.basis.adjoint(), m))
    }

    /// `‖(I − P)m‖`, zero when every column of `m` lies in the subspace.
    pub fn residual_of(&self, m: &ComplexMatrix) -> f64 {
        op_norm(&(m - self.project(m)))
    }

    /// Subspace distance `‖P_self − P_other‖`.
    pub fn distance(&self, other: &Subspace) -> Result<f64> {
        same_ambient(self, other, "subspace distance")?;
        Ok(op_norm(&(self.projector() - other.projector())))
    }

    /// `‖(I − P_other) P_self‖`: zero iff `self ⊆ other`.
    pub fn excess_over(&self, other: &Subspace) -> Result<f64> {
        same_ambient(self, other, "subspace inclusion")?;
        Ok(other.residual_of(&self.basis))
    }

    /// Image of the subspace under an isometric embedding `outer`
    /// (`outer.ncols() == self.ambient_dim()`).
    pub fn embed(&self, outer: &ComplexMatrix) -> Result<Subspace> {
        if outer.ncols() != self.ambient_dim {
            return Err(Error::Dimension {
                context: "subspace embedding",
                expected: self.ambient_dim,
                found: outer.ncols(),
            });
        }
        Ok(Self::from_columns_unchecked(outer * &self.basis, self.tol))
    }

    /// Coordinates of the subspace relative to an orthonormal frame containing it.
    pub fn relative_to(&self, frame: &Subspace) -> Result<Subspace> {
        same_ambient(self, frame, "relative subspace")?;
        orthonormalize(&frame.basis.ad_mul(&self.basis), self.tol)
    }

    /// Smallest subspace containing both.
    pub fn join(&self, other: &Subspace) -> Result<Subspace> {
        same_ambient(self, other, "subspace join")?;
        orthonormalize(&hstack(&[&self.basis, &other.basis]), self.tol.max(other.tol))
    }

    /// Compression `Qᴴ T Q` of an operator to the subspace.
    pub fn compress(&self, t: &ComplexMatrix) -> ComplexMatrix {
        matmul(&self.basis.adjoint(), &matmul(t, &self.basis))
    }
}

fn same_ambient(a: &Subspace, b: &Subspace, context: &'static str) -> Result<()> {
    if a.ambient_dim == b.ambient_dim {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected: a.ambient_dim,
            found: b.ambient_dim,
        })
    }
}

/// Orthonormal basis of the numerical column space of `m`.
///
/// Columns of the SVD with singular value at most `tol·σ_max` are discarded.
pub fn orthonormalize(m: &ComplexMatrix, tol: f64) -> Result<Subspace> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Ok(Subspace {
            ambient_dim: n,
            basis: ComplexMatrix::zeros(n, 0),
            tol,
        });
    }
    let (s, u) = svd_left(m);
    let smax = s[0];
    if smax <= f64::MIN_POSITIVE {
        return Ok(Subspace {
            ambient_dim: n,
            basis: ComplexMatrix::zeros(n, 0),
            tol,
        });
    }
    let rank = s.iter().take_while(|&&x| x > tol * smax).count();
    Ok(Subspace {
        ambient_dim: n,
        basis: u.columns(0, rank).into_owned(),
        tol,
    })
}

/// Null space of `m`: right singular vectors with singular value at most
/// `tol·max(σ_max, 1)`.
pub fn null_space(m: &ComplexMatrix, tol: f64) -> Subspace {
    let n = m.ncols();
    if n == 0 {
        return Subspace::zero(0);
    }
    let (s, v) = svd_right_full(m);
    let cutoff = tol * s[0].max(1.0);
    let keep: Vec<usize> = (0..n).filter(|&i| s[i] <= cutoff).collect();
    Subspace::from_columns_unchecked(v.select_columns(keep.iter()), tol)
}

/// Intersection of two subspaces.
///
/// A vector of `a` belongs to `b` when its distance to `b` is below the
/// tolerance, so the intersection is spanned by the right singular vectors of
/// `(I − P_b)Q_a` with singular value at most `tol` (the sines of the
/// principal angles).
pub fn intersect(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    same_ambient(a, b, "intersect")?;
    let tol = a.tol.max(b.tol);
    if a.is_zero() || b.is_zero() {
        return Ok(Subspace {
            ambient_dim: a.ambient_dim,
            basis: ComplexMatrix::zeros(a.ambient_dim, 0),
            tol,
        });
    }
    let residual = &a.basis - b.project(&a.basis);
    let (s, v) = svd_right_full(&residual);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= tol).collect();
    Ok(Subspace {
        ambient_dim: a.ambient_dim,
        basis: &a.basis * v.select_columns(keep.iter()),
        tol,
    })
}

/// Orthogonal complement in the ambient space.
pub fn complement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim;
    if s.is_zero() {
        return Subspace {
            ambient_dim: n,
            basis: identity(n),
            tol: s.tol,
        };
    }
    let (sv, v) = svd_right_full(&s.basis.adjoint());
    let keep: Vec<usize> = (0..n).filter(|&i| sv[i] < 0.5).collect();
    Subspace {
        ambient_dim: n,
        basis: v.select_columns(keep.iter()),
        tol: s.tol,
    }
}

/// `(‖(I−P)TP‖, ‖PT(I−P)‖)` for the projector `P` onto `s`.
pub fn reducing_residual(t: &ComplexMatrix, s: &Subspace) -> Result<(f64, f64)> {
    ensure_square(t, "reducing_residual")?;
    if t.nrows() != s.ambient_dim {
        return Err(Error::Dimension {
            context: "reducing_residual",
            expected: s.ambient_dim,
            found: t.nrows(),
        });
    }
    let tq = t * &s.basis;
    let out = op_norm(&(&tq - s.project(&tq)));
    let qt = s.basis.ad_mul(t);
    let back = op_norm(&(&qt - (&qt * &s.basis) * s.basis.adjoint()));
    Ok((out, back))
}

/// Reducing residuals evaluated on the columns of `window`:
/// `(‖(I−P)TPW‖, ‖PT(I−P)W‖)`.
pub fn reducing_residual_on(
    t: &ComplexMatrix,
    s: &Subspace,
    window: &ComplexMatrix,
) -> Result<(f64, f64)> {
    ensure_square(t, "reducing_residual_on")?;
    if t.nrows() != s.ambient_dim || window.nrows() != s.ambient_dim {
        return Err(Error::Dimension {
            context: "reducing_residual_on",
            expected: s.ambient_dim,
            found: t.nrows().max(window.nrows()),
        });
    }
    let inside = s.project(window);
    let outside = window - &inside;
    let t_in = matmul(t, &inside);
    let leak_out = op_norm(&(&t_in - s.project(&t_in)));
    let leak_in = op_norm(&s.project(&matmul(t, &outside)));
    Ok((leak_out, leak_in))
}

/// Principal angles in nondecreasing order, `min(dim a, dim b)` of them.
///
/// Angles below π/4 are taken from sines and the rest from cosines, which
/// keeps both ends accurate.
pub fn principal_angles(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    same_ambient(a, b, "principal_angles")?;
    let k = a.dim().min(b.dim());
    if k == 0 {
        return Ok(Vec::new());
    }
    let (small, large) = if a.dim() <= b.dim() { (a, b) } else { (b, a) };
    let cosines = singular_values(&small.basis.ad_mul(&large.basis));
    let mut sines = singular_values(&(&small.basis - large.project(&small.basis)));
    sines.reverse();
    let angles = (0..k)
        .map(|i| {
            let c = cosines[i].clamp(0.0, 1.0);
            if c > std::f64::consts::FRAC_1_SQRT_2 {
                sines[i].clamp(0.0, 1.0).asin()
            } else {
                c.acos()
            }
        })
        .collect();
    Ok(angles)
}
