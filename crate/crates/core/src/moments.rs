//! Block model of a pair with nontrivial coupling, spectral moments of
//! `U` at `B(1)`, and the atomic-measure certificate for finite spectra.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hardy::GradedOperator;
use crate::numlin::{eigenvalues, hstack, identity, op_norm, ComplexMatrix, ComplexVector, Subspace, DEFAULT_TOL};
use crate::pairs::{cluster_eigenvalues, OperatorPair, EIGEN_CLUSTER};
use crate::symbols::{MomentSequence, SchurSymbol};
use crate::wold::{hyper_range_graded, wandering, DEFAULT_POWER_CAP};

/// Tolerance on `U` being unitary and `A` commuting with it.
pub const MODEL_TOL: f64 = 1e-10;

/// `S1 = U ⊕ M_z`, `S2 = [[A, B], [0, M_φ]]` with `B` mapping truncated `H²_E`
/// (fiber `phi.fiber_dim()`) into the space of `U`.
#[derive(Debug, Clone)]
pub struct BlockModel {
    pub u: ComplexMatrix,
    pub a: ComplexMatrix,
    /// Columns on which `A` is exact (an isometry).
    pub a_window: ComplexMatrix,
    pub b: ComplexMatrix,
    pub phi: SchurSymbol,
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    op_norm(&(u.ad_mul(u) - identity(n))).max(op_norm(&(u * u.adjoint() - identity(n))))
}

fn require_unitary(u: &ComplexMatrix) -> Result<()> {
    if u.nrows() != u.ncols() {
        return Err(Error::Dimension {
            context: "unitary block",
            expected: u.nrows(),
            found: u.ncols(),
        });
    }
    let d = unitarity_defect(u);
    if d > MODEL_TOL {
        return Err(Error::Precondition {
            name: "U unitary",
            residual: d,
            tolerance: MODEL_TOL,
        });
    }
    Ok(())
}

impl BlockModel {
    pub fn new(u: ComplexMatrix, a: ComplexMatrix, a_window: ComplexMatrix, b: ComplexMatrix, phi: SchurSymbol) -> Result<Self> {
        require_unitary(&u)?;
        let n = u.nrows();
        for (what, m) in [("A", &a), ("A window", &a_window), ("B", &b)] {
            if m.nrows() != n {
                return Err(Error::Dimension {
                    context: what_context(what),
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        if a.ncols() != n || b.ncols() % phi.fiber_dim() != 0 {
            return Err(Error::Dimension {
                context: "block model",
                expected: n,
                found: a.ncols(),
            });
        }
        let comm = op_norm(&(&u * &a - &a * &u));
        if comm > MODEL_TOL {
            return Err(Error::Precondition {
                name: "UA = AU",
                residual: comm,
                tolerance: MODEL_TOL,
            });
        }
        let x = &a * &a_window;
        let iso = op_norm(&(x.ad_mul(&x) - identity(a_window.ncols())));
        if iso > MODEL_TOL {
            return Err(Error::Precondition {
                name: "A isometric",
                residual: iso,
                tolerance: MODEL_TOL,
            });
        }
        Ok(Self { u, a, a_window, b, phi })
    }

    /// Reads the block model off a pair: `U`, `A` are the compressions of `S1`,
    /// `S2` to `H_∞(S1)`, `B` is `P_∞ S2` on the ladder `S1ᵏE`, and `φ` comes
    /// from the compression of `S2` to that ladder.
    pub fn from_pair(p: &OperatorPair) -> Result<Self> {
        let p_inf = hyper_range_graded(p.s1(), DEFAULT_POWER_CAP, DEFAULT_TOL)?;
        let e = wandering(p.s1());
        if e.is_zero() {
            return Err(Error::InvalidInput("S1 has no wandering subspace".into()));
        }
        let (m1, m2) = (p.s1().matrix(), p.s2().matrix());
        let mut rungs = Vec::new();
        let mut rung = e.basis().clone();
        for _ in 0..p.dim() {
            if op_norm(&(rung.ad_mul(&rung) - identity(e.dim()))) > MODEL_TOL {
                break;
            }
            let next = m1 * &rung;
            rungs.push(rung);
            rung = next;
        }
        let ladder = hstack(&rungs.iter().collect::<Vec<_>>());
        let coeffs: Vec<ComplexMatrix> = rungs.iter().map(|r| r.ad_mul(&(m2 * e.basis()))).collect();
        let phi = SchurSymbol::polynomial(coeffs)?;
        let q = p_inf.basis();
        let window = Subspace::from_columns_unchecked(p.window(), DEFAULT_TOL);
        let inside = crate::numlin::intersect(&p_inf, &window)?;
        Self::new(
            p_inf.compress(m1),
            p_inf.compress(m2),
            q.ad_mul(inside.basis()),
            q.ad_mul(&(m2 * ladder)),
            phi,
        )
    }

    fn levels(&self) -> usize {
        self.b.ncols() / self.phi.fiber_dim()
    }
}

fn what_context(what: &str) -> &'static str {
    match what {
        "A" => "block model A",
        "A window" => "block model A window",
        _ => "block model B",
    }
}

/// Residuals of `UB − BM_z`, `AᴴB` and `BᴴB + M_φᴴM_φ − I` on inputs of degree ≤ `degree`.
pub fn block_model_check(m: &BlockModel, degree: usize) -> Result<BTreeMap<String, f64>> {
    let f = m.phi.fiber_dim();
    let top = m.levels() - 1;
    let growth = m.phi.effective_order(crate::hardy::MULTIPLIER_TAIL).max(1);
    if degree + growth > top {
        return Err(Error::Precision {
            what: format!("block model check at degree {degree} needs truncation degree {}", degree + growth),
            required: degree + growth,
        });
    }
    let cols = f * (degree + 1);
    let shift = GradedOperator::shift_at(f, top);
    let mphi = GradedOperator::multiplier_at(&m.phi, top)?;
    let bw = m.b.columns(0, cols);
    let ub = &m.u * bw;
    let bz = &m.b * shift.matrix().columns(0, cols);
    let intertwining = op_norm(&(ub - bz));
    let orthogonality = op_norm(&m.a.ad_mul(&bw.into_owned()));
    let bb = bw.ad_mul(&bw);
    let pw = mphi.matrix().columns(0, cols);
    let pp = pw.ad_mul(&pw);
    let isometry = op_norm(&(bb + pp - identity(cols)));
    let mut out = BTreeMap::new();
    out.insert("intertwining".to_string(), intertwining);
    out.insert("orthogonality".to_string(), orthogonality);
    out.insert("isometry".to_string(), isometry + mphi.tail());
    Ok(out)
}

/// `(‖UB − BM_z‖, max_k ‖B(zᵏ) − UᵏB(1)‖)` on degrees `k ≤ degree`, scalar fiber.
pub fn intertwining_check(u: &ComplexMatrix, b: &ComplexMatrix, degree: usize) -> Result<(f64, f64)> {
    require_unitary(u)?;
    if b.nrows() != u.nrows() {
        return Err(Error::Dimension {
            context: "intertwining_check",
            expected: u.nrows(),
            found: b.nrows(),
        });
    }
    if degree + 1 >= b.ncols() {
        return Err(Error::Precision {
            what: format!("intertwining at degree {degree} needs {} columns of B", degree + 2),
            required: degree + 2,
        });
    }
    let first = op_norm(&(u * b.columns(0, degree + 1) - b.columns(1, degree + 1)));
    let mut v = b.column(0).into_owned();
    let mut second: f64 = 0.0;
    for k in 0..=degree {
        second = second.max((b.column(k) - &v).norm());
        v = u * v;
    }
    Ok((first, second))
}

/// `(‖AᴴB‖, ‖AᴴB(1)‖)`, given `UB = BM_z` and `AU = UA`.
pub fn orthogonality_from_first(u: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> Result<(f64, f64)> {
    if b.ncols() < 2 {
        return Err(Error::InvalidInput("B needs at least two columns".into()));
    }
    let (first, _) = intertwining_check(u, b, b.ncols() - 2)?;
    if first > MODEL_TOL {
        return Err(Error::Precondition {
            name: "UB = BM_z",
            residual: first,
            tolerance: MODEL_TOL,
        });
    }
    if a.nrows() != u.nrows() || a.ncols() != u.ncols() {
        return Err(Error::Dimension {
            context: "orthogonality_from_first",
            expected: u.nrows(),
            found: a.nrows(),
        });
    }
    let comm = op_norm(&(a * u - u * a));
    if comm > MODEL_TOL {
        return Err(Error::Precondition {
            name: "AU = UA",
            residual: comm,
            tolerance: MODEL_TOL,
        });
    }
    let whole = op_norm(&a.ad_mul(b));
    let first_col = a.ad_mul(&b.column(0).into_owned()).norm();
    Ok((whole, first_col))
}

#[derive(Debug, Clone)]
pub struct MomentMatch {
    /// `m_k = ⟨Uᵏ b1, b1⟩`.
    pub left: MomentSequence,
    /// `∫ ζᵏ w dθ/2π = ŵ(−k)`, the moments of `w dθ/2π`.
    pub right: MomentSequence,
    pub max_deviation: f64,
}

/// `⟨Uᵏ b, b⟩` for `|k| ≤ k_max`, negative powers through the adjoint.
pub fn spectral_moments(u: &ComplexMatrix, b: &ComplexVector, k_max: usize) -> MomentSequence {
    let mut pos = Vec::with_capacity(k_max + 1);
    let mut neg = Vec::with_capacity(k_max + 1);
    let mut fwd = b.clone();
    let mut back = b.clone();
    let uh = u.adjoint();
    for _ in 0..=k_max {
        pos.push(b.dotc(&fwd));
        neg.push(b.dotc(&back));
        fwd = u * fwd;
        back = &uh * back;
    }
    MomentSequence::from_fn(k_max, |k| if k >= 0 { pos[k as usize] } else { neg[(-k) as usize] })
}

/// Compares the spectral moments of `U` at `b1` with the moments of the defect weight of `φ`.
pub fn moment_match(u: &ComplexMatrix, b1: &ComplexVector, phi: &SchurSymbol, k_max: usize) -> Result<MomentMatch> {
    require_unitary(u)?;
    if b1.len() != u.nrows() {
        return Err(Error::Dimension {
            context: "moment_match",
            expected: u.nrows(),
            found: b1.len(),
        });
    }
    let left = spectral_moments(u, b1, k_max);
    let w = phi.defect_weight(k_max)?;
    let right = MomentSequence::from_fn(k_max, |k| w.get(-k));
    let max_deviation = left.max_deviation(&right);
    Ok(MomentMatch {
        left,
        right,
        max_deviation,
    })
}

#[derive(Debug, Clone)]
pub struct ForcingCertificate {
    /// The weight is nonzero and no atomic measure on `σ(U)` matches it within `tol`.
    pub forced_trivial: bool,
    /// Optimal `(Σ_k |Σ_j m_j λ_jᵏ − ŵ(−k)|²)^{1/2}` over masses `m ≥ 0`.
    pub residual: f64,
    pub atoms: Vec<Complex64>,
    pub masses: Vec<f64>,
}

/// Best nonnegative atomic fit on the spectrum of `U` to the moments of `w dθ/2π`.
///
/// Any `b1` yields a spectral measure `Σ_j |⟨b1, v_j⟩|² δ_{λ_j}`, so the optimum
/// over nonnegative masses bounds every candidate from below.
pub fn finite_spectrum_forcing(u: &ComplexMatrix, phi: &SchurSymbol, k_max: usize, tol: f64) -> Result<ForcingCertificate> {
    require_unitary(u)?;
    let atoms: Vec<Complex64> = cluster_eigenvalues(&eigenvalues(u)?, EIGEN_CLUSTER)
        .into_iter()
        .map(|(l, _)| l)
        .collect();
    let w = phi.defect_weight(k_max)?;
    let rows = 2 * (2 * k_max + 1);
    let mut a = DMatrix::<f64>::zeros(rows, atoms.len());
    let mut b = DVector::<f64>::zeros(rows);
    for (i, k) in (-(k_max as i64)..=k_max as i64).enumerate() {
        let t = w.get(-k);
        b[2 * i] = t.re;
        b[2 * i + 1] = t.im;
        for (j, l) in atoms.iter().enumerate() {
            let p = if k >= 0 { l.powu(k as u32) } else { l.conj().powu((-k) as u32) };
            a[(2 * i, j)] = p.re;
            a[(2 * i + 1, j)] = p.im;
        }
    }
    let (masses, residual) = nnls(&a, &b);
    Ok(ForcingCertificate {
        forced_trivial: w.max_abs() > 1e-12 && residual > tol,
        residual,
        atoms,
        masses: masses.iter().copied().collect(),
    })
}

/// Nonnegative least squares `min ‖Ax − b‖, x ≥ 0` by the Lawson–Hanson
/// active-set method. Returns the minimizer and the residual norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    if n == 0 {
        return (x, b.norm());
    }
    let eps = 1e-13 * (1.0 + a.norm() * b.norm());
    let mut passive = vec![false; n];
    let solve = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut z = DVector::<f64>::zeros(n);
        if idx.is_empty() {
            return z;
        }
        let sub = a.select_columns(idx.iter());
        let sol = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .unwrap_or_else(|_| DVector::zeros(idx.len()));
        for (k, &j) in idx.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    };
    for _ in 0..(3 * n + 10) {
        let grad = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j] && grad[j] > eps)
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(j) = candidate else { break };
        passive[j] = true;
        for _ in 0..(3 * n + 10) {
            let z = solve(&passive);
            let blocked: Vec<usize> = (0..n).filter(|&i| passive[i] && z[i] <= 0.0).collect();
            if blocked.is_empty() {
                x = z;
                break;
            }
            let alpha = blocked
                .iter()
                .map(|&i| x[i] / (x[i] - z[i]))
                .fold(f64::INFINITY, f64::min);
            x += (z - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= eps {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    let r = (b - a * &x).norm();
    (x, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::{c64, ONE, ZERO};

    #[test]
    fn nnls_small_cases() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, -1.0, 3.0]);
        let (x, r) = nnls(&a, &b);
        assert!((x[0] - 2.0).abs() < 1e-14 && x[1] == 0.0);
        assert!((r - 10f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn intertwining_on_constructed_b() {
        let u = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, c64(0.0, 1.0), c64(-0.6, 0.8)]));
        let b0 = ComplexVector::from_vec(vec![c64(0.3, 0.0), c64(0.1, 0.2), c64(-0.2, 0.0)]);
        let mut cols = vec![b0.clone()];
        for k in 1..10 {
            cols.push(&u * &cols[k - 1]);
        }
        let b = ComplexMatrix::from_columns(&cols);
        let (first, second) = intertwining_check(&u, &b, 8).unwrap();
        assert!(first < 1e-14 && second < 1e-14);
    }

    #[test]
    fn identity_u_reduces_to_hankel_comparison() {
        let u = identity(2);
        let b = ComplexMatrix::from_fn(2, 6, |i, j| c64((i + j) as f64, 0.0));
        let (_, second) = intertwining_check(&u, &b, 4).unwrap();
        let direct = (0..=4).map(|k| (b.column(k) - b.column(0)).norm()).fold(0.0, f64::max);
        assert!((second - direct).abs() < 1e-14);
    }

    #[test]
    fn zero_vector_matches_only_inner() {
        let u = identity(2);
        let b = ComplexVector::zeros(2);
        let m = moment_match(&u, &b, &SchurSymbol::monomial(1), 4).unwrap();
        assert!(m.max_deviation < 1e-15);
        let half = SchurSymbol::scalar_polynomial(&[ZERO, c64(0.5, 0.0)]).unwrap();
        assert!(moment_match(&u, &b, &half, 4).unwrap().max_deviation > 0.5);
    }
}
