//! Schur-class symbols: polynomials, constants and finite Blaschke products.
//!
//! Boundary integrals use the normalized measure dθ/2π.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numlin::{identity, op_norm, ComplexMatrix, ONE, ZERO};

/// Target size of the neglected Taylor tail when a truncation order is derived.
pub const TAIL_TARGET: f64 = 1e-14;

/// Slack admitted on `|z| ≤ 1` for boundary evaluation.
const DISC_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum SymbolKind {
    /// `φ(z) = Σ c_k z^k`, finitely many matrix coefficients.
    Polynomial(Vec<ComplexMatrix>),
    Constant(ComplexMatrix),
    /// `front · Π (z − a)/(1 − āz)`, scalar only.
    Blaschke { zeros: Vec<Complex64>, front: Complex64 },
}

/// A bounded analytic function on the disc with values in `fiber_dim × fiber_dim` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurSymbol {
    fiber_dim: usize,
    kind: SymbolKind,
    truncation_hint: Option<usize>,
}

impl SchurSymbol {
    pub fn polynomial(coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial symbol needs at least one coefficient".into()))?;
        let fiber_dim = first.nrows();
        if fiber_dim == 0 {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        for c in &coeffs {
            if c.nrows() != fiber_dim || c.ncols() != fiber_dim {
                return Err(Error::Dimension {
                    context: "polynomial coefficient",
                    expected: fiber_dim,
                    found: c.nrows().max(c.ncols()),
                });
            }
            crate::numlin::ensure_finite(c, "symbol coefficient")?;
        }
        Ok(Self {
            fiber_dim,
            kind: SymbolKind::Polynomial(coeffs),
            truncation_hint: None,
        })
    }

    pub fn scalar_polynomial(coeffs: &[Complex64]) -> Result<Self> {
        Self::polynomial(coeffs.iter().map(|&c| ComplexMatrix::from_element(1, 1, c)).collect())
    }

    pub fn constant(value: ComplexMatrix) -> Result<Self> {
        if value.nrows() != value.ncols() || value.nrows() == 0 {
            return Err(Error::InvalidInput("constant symbol must be a nonempty square matrix".into()));
        }
        crate::numlin::ensure_finite(&value, "constant symbol")?;
        Ok(Self {
            fiber_dim: value.nrows(),
            kind: SymbolKind::Constant(value),
            truncation_hint: None,
        })
    }

    pub fn scalar_constant(value: Complex64) -> Result<Self> {
        Self::constant(ComplexMatrix::from_element(1, 1, value))
    }

    /// `φ(z) = z^n` on a scalar fiber.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![ZERO; n + 1];
        c[n] = ONE;
        Self::scalar_polynomial(&c).expect("monomial coefficients are valid")
    }

    pub fn blaschke(zeros: Vec<Complex64>, front: Complex64) -> Result<Self> {
        for a in &zeros {
            if !(a.norm() < 1.0) {
                return Err(Error::Domain(format!(
                    "Blaschke zero {a} must lie in the open unit disc (|a| = {})",
                    a.norm()
                )));
            }
        }
        if !((front.norm() - 1.0).abs() <= 1e-12) {
            return Err(Error::Domain(format!(
                "Blaschke front constant must be unimodular, |c| = {}",
                front.norm()
            )));
        }
        Ok(Self {
            fiber_dim: 1,
            kind: SymbolKind::Blaschke { zeros, front },
            truncation_hint: None,
        })
    }

    /// Caps the Taylor order this symbol may be expanded to.
    pub fn with_truncation_hint(mut self, order: usize) -> Self {
        self.truncation_hint = Some(order);
        self
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn truncation_hint(&self) -> Option<usize> {
        self.truncation_hint
    }

    /// Largest zero modulus of a Blaschke product; zero for polynomial kinds.
    pub fn decay_radius(&self) -> f64 {
        match &self.kind {
            SymbolKind::Blaschke { zeros, .. } => zeros.iter().map(|a| a.norm()).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    fn has_infinite_series(&self) -> bool {
        matches!(&self.kind, SymbolKind::Blaschke { zeros, .. } if zeros.iter().any(|a| a.norm() > 0.0))
    }

    /// Extra Taylor terms needed so that the tail of a geometric series of
    /// ratio `decay_radius` falls below [`TAIL_TARGET`].
    pub fn safety_margin(&self) -> usize {
        let r = self.decay_radius();
        if !self.has_infinite_series() || r == 0.0 {
            return 0;
        }
        (TAIL_TARGET.ln() / r.ln()).ceil() as usize
    }

    /// Highest index with a nonzero coefficient, when finite.
    pub fn polynomial_degree(&self) -> Option<usize> {
        match &self.kind {
            SymbolKind::Polynomial(c) => Some(c.len() - 1),
            SymbolKind::Constant(_) => Some(0),
            SymbolKind::Blaschke { zeros, .. } if !self.has_infinite_series() => Some(zeros.len()),
            SymbolKind::Blaschke { .. } => None,
        }
    }

    /// Certified bound on `Σ_{k>order} ‖c_k‖`.
    pub fn tail_bound(&self, order: usize) -> f64 {
        match &self.kind {
            SymbolKind::Polynomial(c) => c.iter().skip(order + 1).map(op_norm).sum(),
            SymbolKind::Constant(_) => 0.0,
            SymbolKind::Blaschke { zeros, .. } => {
                if !self.has_infinite_series() {
                    return if order >= zeros.len() { 0.0 } else { 1.0 };
                }
                // A term of the product with total index > order has some
                // factor index > order / m.
                let m = zeros.len() as i32;
                let t = (order / zeros.len()) as i32;
                let norms: Vec<f64> = zeros.iter().map(|a| 1.0 + 2.0 * a.norm()).collect();
                let total: f64 = norms.iter().product();
                zeros
                    .iter()
                    .zip(&norms)
                    .map(|(a, l1)| {
                        let r = a.norm();
                        (1.0 + r) * r.powi(t) * total / l1
                    })
                    .sum::<f64>()
                    .min((1.0 + 2.0f64).powi(m))
            }
        }
    }

    /// Smallest order whose certified tail bound is at most `eps`.
    pub fn effective_order(&self, eps: f64) -> usize {
        if let Some(d) = self.polynomial_degree() {
            if !self.has_infinite_series() {
                let mut d = d;
                while d > 0 && self.tail_bound(d - 1) <= eps {
                    d -= 1;
                }
                return d;
            }
        }
        let mut g = 1;
        while self.tail_bound(g) > eps {
            g += 1;
        }
        g
    }

    /// Taylor coefficients `c_0..=c_order`.
    pub fn coefficients(&self, order: usize) -> Result<Vec<ComplexMatrix>> {
        if let Some(h) = self.truncation_hint {
            if self.has_infinite_series() && order > h {
                return Err(Error::Precision {
                    what: format!("Taylor coefficients requested beyond truncation hint {h}"),
                    required: order,
                });
            }
        }
        let f = self.fiber_dim;
        let mut out = vec![ComplexMatrix::zeros(f, f); order + 1];
        match &self.kind {
            SymbolKind::Polynomial(c) => {
                for (k, ck) in c.iter().enumerate().take(order + 1) {
                    out[k] = ck.clone();
                }
            }
            SymbolKind::Constant(v) => out[0] = v.clone(),
            SymbolKind::Blaschke { zeros, front } => {
                let mut series = vec![ZERO; order + 1];
                series[0] = *front;
                for a in zeros {
                    series = convolve(&series, &factor_series(*a, order));
                }
                for (k, c) in series.into_iter().enumerate() {
                    out[k][(0, 0)] = c;
                }
            }
        }
        Ok(out)
    }

    /// Scalar Taylor coefficients `c_0..=c_order` (fiber dimension 1 only).
    pub fn scalar_coefficients(&self, order: usize) -> Result<Vec<Complex64>> {
        self.require_scalar("scalar_coefficients")?;
        Ok(self.coefficients(order)?.into_iter().map(|c| c[(0, 0)]).collect())
    }

    fn require_scalar(&self, what: &str) -> Result<()> {
        if self.fiber_dim == 1 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{what} needs a scalar symbol, fiber dim is {}", self.fiber_dim)))
        }
    }

    /// Exact evaluation at a point of the closed disc.
    pub fn evaluate(&self, z: Complex64) -> Result<ComplexMatrix> {
        if z.norm() > 1.0 + DISC_SLACK {
            return Err(Error::Domain(format!("evaluation point {z} lies outside the closed disc")));
        }
        match &self.kind {
            SymbolKind::Polynomial(c) => {
                let mut acc = ComplexMatrix::zeros(self.fiber_dim, self.fiber_dim);
                for ck in c.iter().rev() {
                    acc = acc * z + ck;
                }
                Ok(acc)
            }
            SymbolKind::Constant(v) => Ok(v.clone()),
            SymbolKind::Blaschke { zeros, front } => {
                let mut acc = *front;
                for a in zeros {
                    let den = ONE - a.conj() * z;
                    if den.norm() < 1e-300 {
                        return Err(Error::Internal(format!("Blaschke factor with zero {a} has a pole at {z}")));
                    }
                    acc *= (z - a) / den;
                }
                Ok(ComplexMatrix::from_element(1, 1, acc))
            }
        }
    }

    pub fn evaluate_scalar(&self, z: Complex64) -> Result<Complex64> {
        self.require_scalar("evaluate_scalar")?;
        Ok(self.evaluate(z)?[(0, 0)])
    }

    /// Maximum of `‖φ(ζ)ᴴφ(ζ) − I‖` over `n_samples` equispaced boundary points.
    pub fn inner_deviation(&self, n_samples: usize) -> Result<f64> {
        if n_samples < 8 {
            return Err(Error::InvalidInput(format!("need at least 8 boundary samples, got {n_samples}")));
        }
        let id = identity(self.fiber_dim);
        let mut worst: f64 = 0.0;
        for zeta in boundary_points(n_samples) {
            let v = self.evaluate(zeta)?;
            worst = worst.max(op_norm(&(v.ad_mul(&v) - &id)));
        }
        Ok(worst)
    }

    /// Largest boundary singular value over `n_samples` equispaced points.
    pub fn sup_norm(&self, n_samples: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for zeta in boundary_points(n_samples.max(1)) {
            worst = worst.max(op_norm(&self.evaluate(zeta)?));
        }
        Ok(worst)
    }

    /// Fails with [`Error::NotSchur`] when the boundary sup-norm exceeds `1 + 1e-8`
    /// on 512 samples.
    pub fn check_schur(&self) -> Result<()> {
        let sup = self.sup_norm(512)?;
        if sup > 1.0 + 1e-8 {
            return Err(Error::NotSchur(format!("boundary sup-norm {sup:.6} exceeds 1")));
        }
        Ok(())
    }

    /// Matrix Fourier coefficients of `I − φᴴφ` on the circle, index `k + k_max`.
    pub fn defect_weight_matrix(&self, k_max: usize) -> Result<Vec<ComplexMatrix>> {
        let order = match self.polynomial_degree() {
            Some(d) if !self.has_infinite_series() => d,
            _ => k_max + self.safety_margin(),
        };
        if let Some(h) = self.truncation_hint {
            if self.has_infinite_series() && h < order {
                return Err(Error::Precision {
                    what: format!("defect weight to order {k_max} needs more Taylor terms than hint {h}"),
                    required: order,
                });
            }
        }
        let c = self.coefficients(order)?;
        let f = self.fiber_dim;
        let mut pos = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let mut acc = if k == 0 { identity(f) } else { ComplexMatrix::zeros(f, f) };
            for l in 0..=order {
                if l + k > order {
                    break;
                }
                acc -= c[l].ad_mul(&c[l + k]);
            }
            pos.push(acc);
        }
        let mut out = Vec::with_capacity(2 * k_max + 1);
        for k in (1..=k_max).rev() {
            out.push(pos[k].adjoint());
        }
        out.extend(pos);
        Ok(out)
    }

    /// Fourier coefficients `ŵ(k) = ∫ ζ^{−k} w dθ/2π` of the defect weight
    /// `w = 1 − |φ|²`. For matrix symbols the trace of the matrix weight is returned.
    pub fn defect_weight(&self, k_max: usize) -> Result<MomentSequence> {
        let m = self.defect_weight_matrix(k_max)?;
        Ok(MomentSequence {
            k_max,
            values: m.iter().map(|b| b.trace()).collect(),
        })
    }
}

/// Equispaced points `e^{2πij/n}`, `j = 0..n`.
pub fn boundary_points(n: usize) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64))
}

/// Taylor series of `(z − a)/(1 − āz)` through `z^order`.
fn factor_series(a: Complex64, order: usize) -> Vec<Complex64> {
    let mut s = Vec::with_capacity(order + 1);
    s.push(-a);
    let scale = 1.0 - a.norm_sqr();
    let mut p = ONE;
    for _ in 1..=order {
        s.push(p * scale);
        p *= a.conj();
    }
    s
}

/// Product of two power series truncated to the length of `a`.
fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![ZERO; n];
    for (i, ai) in a.iter().enumerate() {
        if *ai == ZERO {
            continue;
        }
        for (j, bj) in b.iter().enumerate().take(n - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Finite Blaschke product `front · Π (z − a_j)/(1 − ā_j z)`.
pub fn blaschke(zeros: Vec<Complex64>, front: Complex64) -> Result<SchurSymbol> {
    SchurSymbol::blaschke(zeros, front)
}

pub fn evaluate(s: &SchurSymbol, z: Complex64) -> Result<ComplexMatrix> {
    s.evaluate(z)
}

/// Inner test by uniform boundary sampling; returns `(verdict, max deviation)`.
pub fn is_inner(s: &SchurSymbol, n_samples: usize, tol: f64) -> Result<(bool, f64)> {
    let dev = s.inner_deviation(n_samples)?;
    Ok((dev <= tol, dev))
}

pub fn defect_weight(s: &SchurSymbol, k_max: usize) -> Result<MomentSequence> {
    s.defect_weight(k_max)
}

/// Two-sided sequence indexed `−k_max..=k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    k_max: usize,
    values: Vec<Complex64>,
}

impl MomentSequence {
    /// `values` holds indices `−k_max..=k_max` in order.
    pub fn new(k_max: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * k_max + 1 {
            return Err(Error::Dimension {
                context: "moment sequence",
                expected: 2 * k_max + 1,
                found: values.len(),
            });
        }
        Ok(Self { k_max, values })
    }

    /// Builds a sequence from a rule for all indices.
    pub fn from_fn(k_max: usize, f: impl Fn(i64) -> Complex64) -> Self {
        let k = k_max as i64;
        Self {
            k_max,
            values: (-k..=k).map(f).collect(),
        }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Value at index `k`; panics when `|k| > k_max`.
    pub fn get(&self, k: i64) -> Complex64 {
        assert!(k.unsigned_abs() as usize <= self.k_max, "moment index {k} out of range");
        self.values[(k + self.k_max as i64) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `(k, value)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let k0 = self.k_max as i64;
        self.values.iter().enumerate().map(move |(i, v)| (i as i64 - k0, *v))
    }

    /// `max_k |value(−k) − conj(value(k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let k = self.k_max as i64;
        (0..=k).map(|j| (self.get(-j) - self.get(j).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference over the common index range.
    pub fn max_deviation(&self, other: &MomentSequence) -> f64 {
        let k = self.k_max.min(other.k_max) as i64;
        (-k..=k).map(|j| (self.get(j) - other.get(j)).norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::c64;

    #[test]
    fn blaschke_coefficients_follow_factor_expansion() {
        let z = SchurSymbol::blaschke(vec![ZERO], ONE).unwrap();
        let c = z.scalar_coefficients(4).unwrap();
        assert_eq!(c, vec![ZERO, ONE, ZERO, ZERO, ZERO]);

        let b = SchurSymbol::blaschke(vec![c64(0.5, 0.0)], ONE).unwrap();
        let c = b.scalar_coefficients(10).unwrap();
        assert!((c[0] - c64(-0.5, 0.0)).norm() < 1e-16);
        for (k, ck) in c.iter().enumerate().skip(1) {
            let expect = 0.75 * 0.5f64.powi(k as i32 - 1);
            assert!((ck - c64(expect, 0.0)).norm() < 1e-16);
        }

        let i = SchurSymbol::blaschke(vec![], c64(0.0, 1.0)).unwrap();
        assert_eq!(i.evaluate_scalar(c64(0.3, 0.2)).unwrap(), c64(0.0, 1.0));
        assert_eq!(i.polynomial_degree(), Some(0));
    }

    #[test]
    fn blaschke_rejects_bad_data() {
        assert!(matches!(SchurSymbol::blaschke(vec![ONE], ONE), Err(Error::Domain(_))));
        assert!(SchurSymbol::blaschke(vec![], c64(0.5, 0.0)).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let z = SchurSymbol::monomial(1);
        assert!((z.evaluate_scalar(c64(0.3, 0.0)).unwrap() - c64(0.3, 0.0)).norm() < 1e-16);
        let b = SchurSymbol::blaschke(vec![c64(0.5, 0.0)], ONE).unwrap();
        assert!(b.evaluate_scalar(c64(0.5, 0.0)).unwrap().norm() < 1e-16);
        for zeta in boundary_points(64) {
            assert!((b.evaluate_scalar(zeta).unwrap().norm() - 1.0).abs() < 1e-12);
        }
        assert!(matches!(z.evaluate(c64(1.1, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn inner_examples() {
        let (ok, dev) = is_inner(&SchurSymbol::monomial(1), 256, 1e-10).unwrap();
        assert!(ok && dev < 1e-12);
        let half = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)]).unwrap();
        let (ok, dev) = is_inner(&half, 256, 1e-10).unwrap();
        assert!(!ok && (dev - 1.0).abs() < 1e-12);
        let b = SchurSymbol::blaschke(vec![c64(0.5, 0.0), c64(0.0, -0.3)], ONE).unwrap();
        let (ok, dev) = is_inner(&b, 512, 1e-10).unwrap();
        assert!(ok && dev < 1e-10);
        assert!(is_inner(&b, 4, 1e-10).is_err());
    }

    #[test]
    fn defect_weight_examples() {
        let w = SchurSymbol::monomial(1).defect_weight(5).unwrap();
        assert!(w.max_abs() < 1e-15);
        let w = SchurSymbol::scalar_polynomial(&[ZERO, c64(0.5, 0.0)]).unwrap().defect_weight(3).unwrap();
        assert!((w.get(0) - c64(0.75, 0.0)).norm() < 1e-15);
        assert!(w.get(1).norm() < 1e-15 && w.get(-2).norm() < 1e-15);
        let w = SchurSymbol::scalar_polynomial(&[c64(0.5, 0.0), c64(0.5, 0.0)])
            .unwrap()
            .defect_weight(3)
            .unwrap();
        assert!((w.get(0) - c64(0.5, 0.0)).norm() < 1e-15);
        assert!((w.get(1) - c64(-0.25, 0.0)).norm() < 1e-15);
        assert!((w.get(-1) - c64(-0.25, 0.0)).norm() < 1e-15);
        assert!(w.get(2).norm() < 1e-15);
    }

    #[test]
    fn blaschke_defect_weight_vanishes() {
        let b = SchurSymbol::blaschke(vec![c64(0.5, 0.0), c64(-0.2, 0.4)], c64(0.0, 1.0)).unwrap();
        let w = b.defect_weight(20).unwrap();
        assert!(w.max_abs() < 1e-10, "{}", w.max_abs());
        let capped = b.with_truncation_hint(10);
        assert!(matches!(capped.defect_weight(20), Err(Error::Precision { .. })));
    }

    #[test]
    fn tail_bound_dominates_actual_tail() {
        let b = SchurSymbol::blaschke(vec![c64(0.5, 0.0), c64(0.0, 0.6)], ONE).unwrap();
        let c = b.scalar_coefficients(400).unwrap();
        for order in [4, 10, 25, 60] {
            let actual: f64 = c[order + 1..].iter().map(|x| x.norm()).sum();
            assert!(actual <= b.tail_bound(order) * (1.0 + 1e-12), "order {order}");
        }
        let g = b.effective_order(1e-13);
        assert!(b.tail_bound(g) <= 1e-13 && b.tail_bound(g - 1) > 1e-13);
    }

    #[test]
    fn moment_sequence_indexing() {
        let m = MomentSequence::from_fn(2, |k| c64(k as f64, 0.0));
        assert_eq!(m.get(-2), c64(-2.0, 0.0));
        assert_eq!(m.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![-2, -1, 0, 1, 2]);
        assert!(MomentSequence::new(1, vec![ZERO; 2]).is_err());
    }
}
