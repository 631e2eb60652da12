//! Truncated Hardy-space models and graded operators.
//!
//! A [`TruncatedSpace`] is a direct sum of summands. Graded summands keep the
//! coefficients of `z^0..=z^N`; every coordinate records its degree and its
//! slack, the number of degree-raising steps left before the top. Operators are
//! stored as square compressions `P S P` onto the truncation. For operators that
//! never lower degree, `P S (I − P) = 0`, so the compressed adjoint is exact
//! and `S` itself is exact on coordinates whose slack covers its growth.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numlin::{
    block_diag, ensure_finite, ensure_square, gram_defect, identity, matmul, op_norm, ComplexMatrix, ComplexVector, ONE, ZERO,
};
use crate::symbols::SchurSymbol;

/// Slack given to coordinates of ungraded summands.
pub const SATURATED_SLACK: usize = 1 << 20;

/// Tail admitted when choosing the coefficient order of a multiplier.
pub const MULTIPLIER_TAIL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub enum SummandModel {
    /// `H²` with a `fiber_dim`-dimensional coefficient space.
    Hardy,
    /// `H²` with coefficients in a boundary-weighted space whose monomial Gram
    /// matrix is `gram`; the fiber is a realization of that space.
    WeightedHardy { gram: ComplexMatrix },
    /// The span of monomials `e_0..e_N` in `L²(w dθ/2π)`, coordinates from a
    /// pivoted Cholesky factor of `gram`.
    BoundaryWeighted { gram: ComplexMatrix, factor: ComplexMatrix },
    /// Ungraded block (e.g. a unitary summand).
    Abstract,
    /// `H²(D²)` with bidegree caps; coordinate `(i, j)` sits at `i + (d1 + 1)·j`.
    Bigraded { d1: usize, d2: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summand {
    pub model: SummandModel,
    pub fiber_dim: usize,
    /// Highest retained degree (zero for ungraded summands).
    pub degree: usize,
    pub offset: usize,
    pub len: usize,
}

impl Summand {
    pub fn is_graded(&self) -> bool {
        !matches!(self.model, SummandModel::Abstract | SummandModel::BoundaryWeighted { .. })
    }
}

/// Finite model of a direct sum of coordinate spaces, optionally expressed in
/// a rotated orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpace {
    summands: Vec<Summand>,
    coord_degree: Vec<usize>,
    coord_slack: Vec<usize>,
    frame: Option<ComplexMatrix>,
}

impl TruncatedSpace {
    fn single(model: SummandModel, fiber_dim: usize, degree: usize, degrees: Vec<usize>, slacks: Vec<usize>) -> Self {
        let len = degrees.len();
        Self {
            summands: vec![Summand {
                model,
                fiber_dim,
                degree,
                offset: 0,
                len,
            }],
            coord_degree: degrees,
            coord_slack: slacks,
            frame: None,
        }
    }

    fn graded_coords(fiber_dim: usize, degree: usize) -> (Vec<usize>, Vec<usize>) {
        let mut degs = Vec::with_capacity(fiber_dim * (degree + 1));
        let mut slack = Vec::with_capacity(fiber_dim * (degree + 1));
        for d in 0..=degree {
            for _ in 0..fiber_dim {
                degs.push(d);
                slack.push(degree - d);
            }
        }
        (degs, slack)
    }

    /// `H²_E` truncated to degree `degree`; `total_dim = fiber_dim·(degree + 1)`.
    pub fn hardy(fiber_dim: usize, degree: usize) -> Self {
        let (d, s) = Self::graded_coords(fiber_dim, degree);
        Self::single(SummandModel::Hardy, fiber_dim, degree, d, s)
    }

    /// `H²_G` where the fiber realizes a boundary-weighted space with monomial
    /// Gram matrix `gram`.
    pub fn weighted_hardy(gram: ComplexMatrix, fiber_dim: usize, degree: usize) -> Result<Self> {
        check_toeplitz_gram(&gram)?;
        let (d, s) = Self::graded_coords(fiber_dim, degree);
        Ok(Self::single(SummandModel::WeightedHardy { gram }, fiber_dim, degree, d, s))
    }

    /// The span of the monomials in the weighted boundary space, coordinates
    /// from the pivoted Cholesky factor of the Gram matrix (rank cutoff 1e-12).
    pub fn boundary_weighted(gram: ComplexMatrix) -> Result<Self> {
        check_toeplitz_gram(&gram)?;
        let factor = pivoted_cholesky(&gram, 1e-12)?;
        let dim = factor.nrows();
        let degree = gram.nrows().saturating_sub(1);
        Ok(Self::single(
            SummandModel::BoundaryWeighted { gram, factor },
            dim,
            degree,
            vec![0; dim],
            vec![SATURATED_SLACK; dim],
        ))
    }

    /// Ungraded block of dimension `dim`.
    pub fn abstract_space(dim: usize) -> Self {
        Self::single(SummandModel::Abstract, dim, 0, vec![0; dim], vec![SATURATED_SLACK; dim])
    }

    /// Scalar `H²(D²)` truncated to bidegree `(d1, d2)`.
    pub fn bigraded(d1: usize, d2: usize) -> Self {
        let mut degs = Vec::new();
        let mut slack = Vec::new();
        for j in 0..=d2 {
            for i in 0..=d1 {
                degs.push(i + j);
                slack.push((d1 - i).min(d2 - j));
            }
        }
        Self::single(SummandModel::Bigraded { d1, d2 }, 1, d1.max(d2), degs, slack)
    }

    /// Orthogonal direct sum. Frames must be absent.
    pub fn direct_sum(parts: &[&TruncatedSpace]) -> Result<Self> {
        let mut out = Self {
            summands: Vec::new(),
            coord_degree: Vec::new(),
            coord_slack: Vec::new(),
            frame: None,
        };
        for p in parts {
            if p.frame.is_some() {
                return Err(Error::InvalidInput("direct sums of conjugated spaces are not supported".into()));
            }
            let base = out.coord_degree.len();
            for s in &p.summands {
                let mut s = s.clone();
                s.offset += base;
                out.summands.push(s);
            }
            out.coord_degree.extend_from_slice(&p.coord_degree);
            out.coord_slack.extend_from_slice(&p.coord_slack);
        }
        Ok(out)
    }

    /// The same space expressed in the frame `q·(natural coordinates)`.
    pub fn conjugated(&self, q: &ComplexMatrix) -> Result<Self> {
        check_unitary(q, self.total_dim(), "frame")?;
        let frame = match &self.frame {
            Some(f) => matmul(q, f),
            None => q.clone(),
        };
        Ok(Self {
            frame: Some(frame),
            ..self.clone()
        })
    }

    pub fn total_dim(&self) -> usize {
        self.coord_degree.len()
    }

    pub fn summands(&self) -> &[Summand] {
        &self.summands
    }

    pub fn frame(&self) -> Option<&ComplexMatrix> {
        self.frame.as_ref()
    }

    pub fn coord_degree(&self, i: usize) -> usize {
        self.coord_degree[i]
    }

    pub fn coord_slack(&self, i: usize) -> usize {
        self.coord_slack[i]
    }

    /// Natural coordinates with slack at least `depth`.
    pub fn window_indices(&self, depth: usize) -> Vec<usize> {
        (0..self.total_dim()).filter(|&i| self.coord_slack[i] >= depth).collect()
    }

    /// Maps natural-coordinate columns to ambient columns.
    pub fn to_ambient(&self, natural: &ComplexMatrix) -> ComplexMatrix {
        match &self.frame {
            Some(f) => f * natural,
            None => natural.clone(),
        }
    }

    fn basis_of(&self, idx: &[usize]) -> ComplexMatrix {
        match &self.frame {
            Some(f) => f.select_columns(idx.iter()),
            None => {
                let mut m = ComplexMatrix::zeros(self.total_dim(), idx.len());
                for (j, &i) in idx.iter().enumerate() {
                    m[(i, j)] = ONE;
                }
                m
            }
        }
    }

    /// Orthonormal basis (ambient coordinates) of the coordinates whose slack
    /// is at least `depth`.
    pub fn window(&self, depth: usize) -> ComplexMatrix {
        self.basis_of(&self.window_indices(depth))
    }

    /// Window coordinates of degree at most `max_degree` (ungraded coordinates always count).
    pub fn level_window(&self, max_degree: usize, depth: usize) -> ComplexMatrix {
        let idx: Vec<usize> = (0..self.total_dim())
            .filter(|&i| self.coord_slack[i] >= depth && self.coord_degree[i] <= max_degree)
            .collect();
        self.basis_of(&idx)
    }

    /// Largest degree among graded window coordinates.
    pub fn window_degree(&self, depth: usize) -> usize {
        self.window_indices(depth)
            .into_iter()
            .filter(|&i| self.coord_slack[i] < SATURATED_SLACK)
            .map(|i| self.coord_degree[i])
            .max()
            .unwrap_or(0)
    }

    /// Ambient basis of the `k`-th summand.
    pub fn summand_basis(&self, k: usize) -> ComplexMatrix {
        let s = &self.summands[k];
        let idx: Vec<usize> = (s.offset..s.offset + s.len).collect();
        self.basis_of(&idx)
    }

    /// Same summand structure and (within 1e-12) the same frame.
    pub fn same_shape(&self, other: &TruncatedSpace) -> bool {
        if self.coord_degree != other.coord_degree || self.coord_slack != other.coord_slack {
            return false;
        }
        match (&self.frame, &other.frame) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).norm() <= 1e-12,
            _ => false,
        }
    }
}

fn check_toeplitz_gram(gram: &ComplexMatrix) -> Result<()> {
    ensure_square(gram, "Gram matrix")?;
    ensure_finite(gram, "Gram matrix")?;
    let n = gram.nrows();
    for i in 0..n {
        for j in 0..n {
            if (gram[(i, j)] - gram[(j, i)].conj()).norm() > 1e-12 {
                return Err(Error::InvalidInput(format!("Gram matrix is not Hermitian at ({i}, {j})")));
            }
            if i > 0 && j > 0 && (gram[(i, j)] - gram[(i - 1, j - 1)]).norm() > 1e-12 {
                return Err(Error::InvalidInput(format!("Gram matrix is not Toeplitz at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Pivoted Cholesky factor `R` (rank × n) with `RᴴR = gram` up to the cutoff.
///
/// Elimination stops once every remaining diagonal entry is at most `cutoff`.
/// A remaining diagonal entry below −1e-10 means the matrix is indefinite.
pub fn pivoted_cholesky(gram: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    ensure_square(gram, "pivoted_cholesky")?;
    let n = gram.nrows();
    let mut a = gram.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for k in 0..n {
        let (mut p, mut best) = (k, f64::NEG_INFINITY);
        for i in k..n {
            let d = a[(perm[i], perm[i])].re;
            if d < -1e-10 {
                return Err(Error::NotSchur(format!(
                    "defect Gram matrix is indefinite (pivot {d:.3e} at monomial {})",
                    perm[i]
                )));
            }
            if d > best {
                best = d;
                p = i;
            }
        }
        if best <= cutoff {
            break;
        }
        perm.swap(k, p);
        let piv = perm[k];
        let root = best.sqrt();
        let mut row = vec![ZERO; n];
        row[piv] = Complex64::new(root, 0.0);
        for &j in &perm[k + 1..] {
            row[j] = a[(piv, j)] / root;
        }
        for &i in &perm[k + 1..] {
            for &j in &perm[k + 1..] {
                let upd = row[i].conj() * row[j];
                a[(i, j)] -= upd;
            }
        }
        rows.push(row);
    }
    Ok(ComplexMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]))
}

pub(crate) fn check_unitary(q: &ComplexMatrix, n: usize, what: &str) -> Result<()> {
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension {
            context: "unitary change of basis",
            expected: n,
            found: q.nrows(),
        });
    }
    let defect = gram_defect(q);
    if defect > 1e-10 {
        return Err(Error::InvalidInput(format!("{what} is not unitary (defect {defect:.3e})")));
    }
    Ok(())
}

/// Block lower-triangular Toeplitz matrix on `H²_E` truncated to `top`:
/// block `(r, c)` is `coeffs[r − c]`.
pub fn toeplitz_matrix(coeffs: &[ComplexMatrix], fiber_dim: usize, top: usize) -> ComplexMatrix {
    let n = fiber_dim * (top + 1);
    let mut m = ComplexMatrix::zeros(n, n);
    for c in 0..=top {
        for (k, ck) in coeffs.iter().enumerate() {
            let r = c + k;
            if r > top {
                break;
            }
            m.view_mut((r * fiber_dim, c * fiber_dim), (fiber_dim, fiber_dim)).copy_from(ck);
        }
    }
    m
}

/// Square compression of a degree-nondecreasing operator with its growth and
/// a certified bound on the neglected coefficient tail.
#[derive(Debug, Clone)]
pub struct GradedOperator {
    space: TruncatedSpace,
    matrix: ComplexMatrix,
    growth: usize,
    tail: f64,
}

impl GradedOperator {
    pub fn new(space: TruncatedSpace, matrix: ComplexMatrix, growth: usize, tail: f64) -> Result<Self> {
        ensure_square(&matrix, "graded operator")?;
        ensure_finite(&matrix, "graded operator")?;
        if matrix.nrows() != space.total_dim() {
            return Err(Error::Dimension {
                context: "graded operator",
                expected: space.total_dim(),
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            space,
            matrix,
            growth,
            tail,
        })
    }

    /// The shift `M_z` on `H²_E`, exact from degree `degree` into `degree + 1`.
    pub fn shift(fiber_dim: usize, degree: usize) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidInput("shift needs degree >= 1".into()));
        }
        Ok(Self::shift_at(fiber_dim, degree + 1))
    }

    /// The shift compressed to the truncation of top degree `top`.
    pub fn shift_at(fiber_dim: usize, top: usize) -> Self {
        let one = identity(fiber_dim);
        let zero = ComplexMatrix::zeros(fiber_dim, fiber_dim);
        let matrix = toeplitz_matrix(&[zero, one], fiber_dim, top);
        Self {
            space: TruncatedSpace::hardy(fiber_dim, top),
            matrix,
            growth: 1,
            tail: 0.0,
        }
    }

    /// `M_φ`, exact (up to the certified tail) on inputs of degree ≤ `degree`.
    pub fn multiplier(s: &SchurSymbol, degree: usize) -> Result<Self> {
        let g = s.effective_order(MULTIPLIER_TAIL);
        Self::multiplier_at(s, degree + g)
    }

    /// `M_φ` compressed to the truncation of top degree `top`.
    pub fn multiplier_at(s: &SchurSymbol, top: usize) -> Result<Self> {
        let g = s.effective_order(MULTIPLIER_TAIL);
        let order = match s.truncation_hint() {
            Some(h) if s.polynomial_degree().is_none() => {
                if h < g {
                    return Err(Error::Precision {
                        what: format!(
                            "multiplier tail at truncation hint {h} is {:.3e} > {MULTIPLIER_TAIL:e}",
                            s.tail_bound(h)
                        ),
                        required: g,
                    });
                }
                top.min(h)
            }
            _ => top,
        };
        let coeffs = s.coefficients(order)?;
        let f = s.fiber_dim();
        Ok(Self {
            space: TruncatedSpace::hardy(f, top),
            matrix: toeplitz_matrix(&coeffs, f, top),
            growth: g,
            tail: s.tail_bound(g),
        })
    }

    /// An operator on an ungraded block (growth 0).
    pub fn ungraded(matrix: ComplexMatrix) -> Result<Self> {
        let space = TruncatedSpace::abstract_space(matrix.nrows());
        Self::new(space, matrix, 0, 0.0)
    }

    pub fn direct_sum(ops: &[&GradedOperator]) -> Result<Self> {
        let spaces: Vec<&TruncatedSpace> = ops.iter().map(|o| &o.space).collect();
        let space = TruncatedSpace::direct_sum(&spaces)?;
        let mats: Vec<&ComplexMatrix> = ops.iter().map(|o| &o.matrix).collect();
        let growth = ops.iter().map(|o| o.growth).max().unwrap_or(0);
        let tail = ops.iter().map(|o| o.tail).fold(0.0, f64::max);
        Self::new(space, block_diag(&mats), growth, tail)
    }

    /// `Q S Qᴴ` acting on the conjugated space.
    pub fn conjugated(&self, q: &ComplexMatrix) -> Result<Self> {
        let space = self.space.conjugated(q)?;
        Ok(Self {
            space,
            matrix: matmul(&matmul(q, &self.matrix), &q.adjoint()),
            growth: self.growth,
            tail: self.tail,
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            matrix: &self.matrix * c,
            ..self.clone()
        }
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn growth(&self) -> usize {
        self.growth
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ambient basis of the coordinates on which the operator is exact.
    pub fn window(&self) -> ComplexMatrix {
        self.space.window(self.growth)
    }

    /// `‖(MᴴM − I)|window‖`.
    pub fn isometry_defect(&self) -> f64 {
        let w = self.window();
        gram_defect(&matmul(&self.matrix, &w))
    }

    /// `max(0, ‖M|window‖² − 1)`.
    pub fn contraction_excess(&self) -> f64 {
        let x = matmul(&self.matrix, &self.window());
        (op_norm(&x).powi(2) - 1.0).max(0.0)
    }
}

/// Free-function form of [`GradedOperator::shift`].
pub fn shift(fiber_dim: usize, degree: usize) -> Result<GradedOperator> {
    GradedOperator::shift(fiber_dim, degree)
}

/// Free-function form of [`GradedOperator::multiplier`].
pub fn multiplier(s: &SchurSymbol, degree: usize) -> Result<GradedOperator> {
    GradedOperator::multiplier(s, degree)
}

/// Truncated Taylor coefficients of `κ(·, w) f = f / (1 − z w̄)`.
#[derive(Debug, Clone)]
pub struct KernelSection {
    pub w: Complex64,
    pub f: ComplexVector,
    /// Stacked coefficient blocks, fiber index fastest.
    pub coeffs: ComplexVector,
}

impl KernelSection {
    pub fn degree(&self) -> usize {
        self.coeffs.len() / self.f.len().max(1) - 1
    }
}

pub fn kernel_section(w: Complex64, f: &ComplexVector, degree: usize) -> Result<KernelSection> {
    if !(w.norm() < 1.0) {
        return Err(Error::Domain(format!("kernel point {w} must lie in the open disc")));
    }
    let m = f.len();
    let mut coeffs = ComplexVector::zeros(m * (degree + 1));
    let mut p = ONE;
    for j in 0..=degree {
        coeffs.rows_mut(j * m, m).copy_from(&(f * p));
        p *= w.conj();
    }
    Ok(KernelSection {
        w,
        f: f.clone(),
        coeffs,
    })
}

/// Value at `z` of a truncated `H²_E` element with stacked coefficients.
pub fn evaluate_coefficients(h: &ComplexVector, fiber_dim: usize, z: Complex64) -> ComplexVector {
    let n = h.len() / fiber_dim;
    let mut acc = ComplexVector::zeros(fiber_dim);
    for j in (0..n).rev() {
        acc = acc * z + h.rows(j * fiber_dim, fiber_dim);
    }
    acc
}

/// `‖M_φᴴ κ(·,w)f − κ(·,w) φ(w)ᴴ f‖` over coefficients of degree ≤ `degree − growth`.
pub fn kernel_adjoint_residual(s: &SchurSymbol, w: Complex64, f: &ComplexVector, degree: usize) -> Result<f64> {
    let fd = s.fiber_dim();
    if f.len() != fd {
        return Err(Error::Dimension {
            context: "kernel_adjoint_residual",
            expected: fd,
            found: f.len(),
        });
    }
    let section = kernel_section(w, f, degree)?;
    let m = GradedOperator::multiplier_at(s, degree)?;
    let lhs = m.matrix().ad_mul(&section.coeffs);
    let phi_w = s.evaluate(w)?;
    let rhs = kernel_section(w, &phi_w.ad_mul(f), degree)?;
    let keep = fd * (degree.saturating_sub(m.growth()) + 1);
    Ok((lhs.rows(0, keep) - rhs.coeffs.rows(0, keep)).norm())
}

/// Window-restricted norm of `M_φᴴ M_z − M_z M_φᴴ` on inputs of degree ≤ `degree`.
pub fn double_commutation_defect(s: &SchurSymbol, degree: usize) -> Result<f64> {
    let top = degree + 1;
    let m = GradedOperator::multiplier_at(s, top)?;
    let z = GradedOperator::shift_at(s.fiber_dim(), top);
    let w = m.space().level_window(degree, 0);
    let mh = m.matrix().adjoint();
    let comm = &mh * z.matrix() - z.matrix() * &mh;
    Ok(op_norm(&(comm * w)))
}
