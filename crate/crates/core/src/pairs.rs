//! Pairs of commuting isometries: the weighted-boundary construction, the
//! reduction verdict battery, model decompositions, the four-part splitting of
//! doubly commuting pairs, eigenspace parts and finiteness checks.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hardy::{GradedOperator, TruncatedSpace, MULTIPLIER_TAIL};
use crate::numlin::{
    block_diag, complement, eigenvalues, gram_defect, hstack, identity, intersect, kron, matmul, null_space, numerical_rank, op_norm,
    reducing_residual_on, singular_values, ComplexMatrix, ComplexVector, Subspace, DEFAULT_TOL, ONE, ZERO,
};
use crate::symbols::SchurSymbol;
use crate::wold::{hyper_range_graded, isometric_hyper_range, wandering_subspace, DEFAULT_POWER_CAP};

/// Threshold applied to the reduction residuals.
pub const VERDICT_TOL: f64 = 1e-8;

/// Largest defect accepted by [`validate_pair`].
pub const PAIR_TOL: f64 = 1e-8;

/// Eigenvalue clustering used for eigenspace parts.
pub const EIGEN_CLUSTER: f64 = 1e-8;

/// Eigenvalue clustering used for spectral cardinality.
pub const CARD_CLUSTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    Isometry,
    Contraction,
}

/// Measured defects of a pair on its shared window.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    /// `‖(S1S2 − S2S1)|window‖`.
    pub commutator: f64,
    /// Isometry defect (isometry mode) or contraction excess (contraction mode).
    pub defect_s1: f64,
    pub defect_s2: f64,
    pub window_dim: usize,
    /// Certified truncation tail of the two operators combined.
    pub tail: f64,
}

#[derive(Debug, Clone)]
pub struct OperatorPair {
    s1: GradedOperator,
    s2: GradedOperator,
    mode: PairMode,
    validation: PairReport,
}

impl OperatorPair {
    pub fn s1(&self) -> &GradedOperator {
        &self.s1
    }

    pub fn s2(&self) -> &GradedOperator {
        &self.s2
    }

    pub fn space(&self) -> &TruncatedSpace {
        self.s1.space()
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }

    pub fn validation(&self) -> &PairReport {
        &self.validation
    }

    pub fn dim(&self) -> usize {
        self.s1.dim()
    }

    /// Window depth: coordinates needing room for both growths.
    pub fn depth(&self) -> usize {
        self.s1.growth() + self.s2.growth()
    }

    /// Ambient basis of the shared window.
    pub fn window(&self) -> ComplexMatrix {
        self.space().window(self.depth())
    }

    pub fn tail(&self) -> f64 {
        self.validation.tail
    }

    /// The unitarily equivalent pair `(Q S1 Qᴴ, Q S2 Qᴴ)`.
    pub fn conjugated(&self, q: &ComplexMatrix) -> Result<OperatorPair> {
        validate_pair(self.s1.conjugated(q)?, self.s2.conjugated(q)?, self.mode)
    }
}

/// Checks that two graded operators commute and are isometries (or
/// contractions) on their shared window.
pub fn validate_pair(s1: GradedOperator, s2: GradedOperator, mode: PairMode) -> Result<OperatorPair> {
    if !s1.space().same_shape(s2.space()) {
        return Err(Error::InvalidInput("operators act on differently graded spaces".into()));
    }
    let w = s1.space().window(s1.growth() + s2.growth());
    if w.ncols() == 0 {
        return Err(Error::InvalidInput("shared window is empty; raise the truncation degree".into()));
    }
    let (m1, m2) = (s1.matrix(), s2.matrix());
    let (m1w, m2w) = (matmul(m1, &w), matmul(m2, &w));
    let commutator = op_norm(&(matmul(m1, &m2w) - matmul(m2, &m1w)));
    let defect = |x: &ComplexMatrix| {
        match mode {
            PairMode::Isometry => gram_defect(x),
            PairMode::Contraction => (op_norm(x).powi(2) - 1.0).max(0.0),
        }
    };
    let report = PairReport {
        commutator,
        defect_s1: defect(&m1w),
        defect_s2: defect(&m2w),
        window_dim: w.ncols(),
        tail: s1.tail() + s2.tail(),
    };
    let limit = PAIR_TOL + report.tail;
    for (name, value) in [
        ("commutator", report.commutator),
        ("S1 defect", report.defect_s1),
        ("S2 defect", report.defect_s2),
    ] {
        if value > limit {
            return Err(Error::Precondition {
                name,
                residual: value,
                tolerance: limit,
            });
        }
    }
    Ok(OperatorPair {
        s1,
        s2,
        mode,
        validation: report,
    })
}

/// The pair built from a scalar Schur function, with the pieces used to build it.
#[derive(Debug, Clone)]
pub struct ExamplePair {
    pub pair: OperatorPair,
    /// `gram[(n, m)] = ⟨e_n, e_m⟩ = ŵ(m − n)` on `e_0..e_L`.
    pub gram: ComplexMatrix,
    /// Numerical rank of the Gram matrix (pivoted Cholesky, cutoff 1e-12).
    pub gram_rank: usize,
    /// Boundary nodes carrying positive weight; `V` is multiplication by them.
    pub nodes: Vec<Complex64>,
    /// Columns are the realized vectors `e_n`, `n = 0..=L`.
    pub monomials: ComplexMatrix,
    /// Highest retained power of `z` on the `H²` summand.
    pub h2_degree: usize,
    /// Highest retained power of `z` on the `H²_G` summand.
    pub g_degree: usize,
    /// `max |⟨e_n, e_m⟩ − gram(n, m)|` of the realization.
    pub realization_residual: f64,
}

impl ExamplePair {
    pub fn g_dim(&self) -> usize {
        self.nodes.len()
    }

    /// Ambient basis of the `H²` summand.
    pub fn h2_basis(&self) -> ComplexMatrix {
        let k = self.pair.space().summands().len() - 1;
        self.pair.space().summand_basis(k)
    }

    /// `B(1) = e_0` in ambient coordinates.
    pub fn b_one(&self) -> ComplexVector {
        let mut v = ComplexVector::zeros(self.pair.dim());
        v.rows_mut(0, self.g_dim()).copy_from(&self.monomials.column(0));
        v
    }
}

/// Builds `S1 = M_V ⊕ M_z` and `S2 = [[M_{z,G}, B], [0, M_φ]]` on `H²_G ⊕ H²`,
/// where `G = L²(w dθ/2π)`, `w = 1 − |φ|²` and `B(zⁿ) = e_n = ζⁿ ∈ G`.
///
/// `G` is realized by boundary quadrature at `M > L + deg φ` equispaced nodes
/// with weights `w(ζ_j)/M`, which reproduces `⟨e_n, e_m⟩ = ŵ(m − n)` exactly for
/// polynomial `φ` and makes `V` exactly unitary. Inner `φ` gives `G = {0}`.
pub fn construct_example(phi: &SchurSymbol, degree: usize) -> Result<ExamplePair> {
    if phi.fiber_dim() != 1 {
        return Err(Error::InvalidInput("construct_example needs a scalar symbol".into()));
    }
    if degree < 1 {
        return Err(Error::InvalidInput("construct_example needs degree >= 1".into()));
    }
    let p = phi.effective_order(MULTIPLIER_TAIL);
    let g2 = p.max(1);
    let depth = 1 + g2;
    let top = degree + depth;
    let w_hat = phi.defect_weight(top)?;
    let gram = ComplexMatrix::from_fn(top + 1, top + 1, |n, m| w_hat.get(m as i64 - n as i64));
    let gram_rank = crate::hardy::pivoted_cholesky(&gram.transpose(), 1e-12)?.nrows();

    let s2_h2 = GradedOperator::multiplier_at(phi, top)?;
    if gram_rank == 0 {
        let s1 = GradedOperator::shift_at(1, top);
        let pair = validate_pair(s1, s2_h2, PairMode::Isometry)?;
        return Ok(ExamplePair {
            pair,
            gram,
            gram_rank,
            nodes: Vec::new(),
            monomials: ComplexMatrix::zeros(0, top + 1),
            h2_degree: top,
            g_degree: 0,
            realization_residual: 0.0,
        });
    }
    let Some(poly_degree) = phi.polynomial_degree() else {
        return Err(Error::InvalidInput(
            "non-inner symbols must be polynomials for the boundary realization".into(),
        ));
    };

    let m_nodes = top + poly_degree + 1;
    let mut nodes = Vec::new();
    let mut scale = Vec::new();
    for j in 0..m_nodes {
        let zeta = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m_nodes as f64);
        let w = 1.0 - phi.evaluate_scalar(zeta)?.norm_sqr();
        if w < -1e-10 {
            return Err(Error::NotSchur(format!("defect weight {w:.3e} < 0 at boundary node {j}")));
        }
        if w > 1e-14 {
            nodes.push(zeta);
            scale.push((w / m_nodes as f64).sqrt());
        }
    }
    let g = nodes.len();
    let monomials = ComplexMatrix::from_fn(g, top + 1, |j, n| nodes[j].powu(n as u32) * scale[j]);
    let realized = monomials.ad_mul(&monomials);
    let realization_residual = (0..=top)
        .flat_map(|n| (0..=top).map(move |m| (n, m)))
        .map(|(n, m)| (realized[(m, n)] - gram[(n, m)]).norm())
        .fold(0.0, f64::max);

    let g_degree = depth;
    let v = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(nodes.clone()));
    let g_block = g * (g_degree + 1);
    let n_total = g_block + top + 1;

    let s1 = block_diag(&[&kron(&identity(g_degree + 1), &v), GradedOperator::shift_at(1, top).matrix()]);
    let mut s2 = ComplexMatrix::zeros(n_total, n_total);
    s2.view_mut((0, 0), (g_block, g_block))
        .copy_from(GradedOperator::shift_at(g, g_degree).matrix());
    s2.view_mut((0, g_block), (g, top + 1)).copy_from(&monomials);
    s2.view_mut((g_block, g_block), (top + 1, top + 1)).copy_from(s2_h2.matrix());

    let space = TruncatedSpace::direct_sum(&[
        &TruncatedSpace::weighted_hardy(gram.clone(), g, g_degree)?,
        &TruncatedSpace::hardy(1, top),
    ])?;
    let s1 = GradedOperator::new(space.clone(), s1, 1, 0.0)?;
    let s2 = GradedOperator::new(space, s2, g2, s2_h2.tail())?;
    let pair = validate_pair(s1, s2, PairMode::Isometry)?;
    Ok(ExamplePair {
        pair,
        gram,
        gram_rank,
        nodes,
        monomials,
        h2_degree: top,
        g_degree,
        realization_residual,
    })
}

/// Parts of a model pair `(V1, V2) ⊕ (M_ψ, M_z) ⊕ (M_z, M_φ)`.
#[derive(Debug, Clone, Default)]
pub struct ModelSpec {
    /// Commuting unitaries `(V1, V2)`.
    pub bi_unitary: Option<(ComplexMatrix, ComplexMatrix)>,
    /// Constant unitary `ψ` on `F`.
    pub psi: Option<ComplexMatrix>,
    /// Inner symbol `φ` on `E`.
    pub phi: Option<SchurSymbol>,
}

/// Assembles the model pair, exact on inputs of degree ≤ `degree`.
pub fn assemble_model(spec: &ModelSpec, degree: usize) -> Result<OperatorPair> {
    let g_phi = spec.phi.as_ref().map_or(1, |s| s.effective_order(MULTIPLIER_TAIL).max(1));
    let top = degree + 1 + g_phi;
    let mut first = Vec::new();
    let mut second = Vec::new();
    if let Some((v1, v2)) = &spec.bi_unitary {
        first.push(GradedOperator::ungraded(v1.clone())?);
        second.push(GradedOperator::ungraded(v2.clone())?);
    }
    if let Some(psi) = &spec.psi {
        first.push(GradedOperator::multiplier_at(&SchurSymbol::constant(psi.clone())?, top)?);
        second.push(GradedOperator::shift_at(psi.nrows(), top));
    }
    if let Some(phi) = &spec.phi {
        first.push(GradedOperator::shift_at(phi.fiber_dim(), top));
        second.push(GradedOperator::multiplier_at(phi, top)?);
    }
    if first.is_empty() {
        return Err(Error::InvalidInput("model needs at least one part".into()));
    }
    let r1: Vec<&GradedOperator> = first.iter().collect();
    let r2: Vec<&GradedOperator> = second.iter().collect();
    validate_pair(
        GradedOperator::direct_sum(&r1)?,
        GradedOperator::direct_sum(&r2)?,
        PairMode::Isometry,
    )
}

/// Orthogonality of `S2(E)` against `H_∞(S1)`, plus the hyper-range itself.
fn orthogonality_core(p: &OperatorPair) -> Result<(Subspace, Subspace, f64)> {
    let p_inf = hyper_range_graded(p.s1(), DEFAULT_POWER_CAP, DEFAULT_TOL)?;
    let e = crate::wold::wandering(p.s1());
    let r_iii = op_norm(&p_inf.basis().ad_mul(&(p.s2().matrix() * e.basis())));
    Ok((p_inf, e, r_iii))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Growing,
}

/// `dim span{P_∞ S1ᴴᵏ S2 x : 1 ≤ k ≤ K}` at one truncation level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDims {
    pub k_max: usize,
    /// One entry per sample.
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSpectrum {
    pub k_max: usize,
    /// Leading singular values of `P_∞ S2 (I − P_∞)` on window coordinates of degree ≤ `k_max`.
    pub singular_values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VerdictReport {
    pub e_subspace: Subspace,
    pub p_inf: Subspace,
    /// `(‖(I−P)S2P‖, ‖PS2(I−P)‖)` on the window, `P` onto `H_∞(S1)`.
    pub reducing: (f64, f64),
    /// Isometry defect (contraction excess) of `P_∞ S2 P_∞` on the window.
    pub restricted_defect: f64,
    /// `max(reducing, restricted_defect)`.
    pub r_i: f64,
    /// `‖P_∞(S1ᴴS2 − S2S1ᴴ)P_∞‖` on the window.
    pub double_commutation: f64,
    /// `max(reducing, double_commutation)`.
    pub r_ii: f64,
    /// `‖P_∞ S2|_E‖`.
    pub r_iii: f64,
    pub r_iv: Vec<LevelDims>,
    pub r_iv_trend: Trend,
    /// Diagnostic only; never enters a verdict.
    pub r_v: Vec<LevelSpectrum>,
    /// Sampled `x ∈ E` in ambient coordinates.
    pub samples: Vec<ComplexVector>,
    pub threshold: f64,
    pub verdict_i: bool,
    pub verdict_ii: bool,
    pub verdict_iii: bool,
    pub verdict_iv: bool,
    /// `r_iii ≤ threshold`.
    pub verdict: bool,
    /// `E = {0}`: the orthogonality condition holds trivially.
    pub vacuous: bool,
}

impl VerdictReport {
    /// Whether the residual-based verdicts (i), (ii), (iii) agree.
    pub fn consistent(&self) -> bool {
        self.verdict_i == self.verdict_iii && self.verdict_ii == self.verdict_iii
    }
}

/// Evaluates the equivalent reduction conditions on a pair.
///
/// `x_samples` are coordinate vectors with respect to the computed basis of
/// `E`; an empty list samples the basis itself. Truncation levels are
/// `K_ℓ = ⌈K·(ℓ+1)/n_levels⌉` where `K` is the window degree.
pub fn verdict_battery(p: &OperatorPair, x_samples: &[ComplexVector], n_levels: usize) -> Result<VerdictReport> {
    if n_levels == 0 {
        return Err(Error::InvalidInput("verdict battery needs at least one level".into()));
    }
    let threshold = VERDICT_TOL + p.tail();
    let (p_inf, e, r_iii) = orthogonality_core(p)?;
    let (m1, m2) = (p.s1().matrix(), p.s2().matrix());
    let w = p.window();
    let reducing = reducing_residual_on(m2, &p_inf, &w)?;

    let window_space = Subspace::from_columns_unchecked(w.clone(), DEFAULT_TOL);
    let y = intersect(&p_inf, &window_space)?;
    let m2y = matmul(m2, y.basis());
    let x = p_inf.project(&m2y);
    let restricted_defect = match p.mode() {
        PairMode::Isometry => gram_defect(&x),
        PairMode::Contraction => (op_norm(&x).powi(2) - 1.0).max(0.0),
    };
    let m1h = m1.adjoint();
    let dc = p_inf.project(&(matmul(&m1h, &m2y) - matmul(m2, &matmul(&m1h, y.basis()))));
    let double_commutation = op_norm(&dc);
    let red = reducing.0.max(reducing.1);
    let r_i = red.max(restricted_defect);
    let r_ii = red.max(double_commutation);

    let samples: Vec<ComplexVector> = if x_samples.is_empty() {
        e.basis().column_iter().map(|c| c.into_owned()).collect()
    } else {
        x_samples
            .iter()
            .map(|c| {
                if c.len() != e.dim() {
                    Err(Error::Dimension {
                        context: "verdict sample",
                        expected: e.dim(),
                        found: c.len(),
                    })
                } else {
                    Ok(e.basis() * c)
                }
            })
            .collect::<Result<_>>()?
    };

    let depth = p.depth();
    let k_window = p.space().window_degree(depth).max(1);
    let levels: Vec<usize> = (0..n_levels)
        .map(|l| (k_window * (l + 1)).div_ceil(n_levels).max(1))
        .collect();
    let k_top = *levels.last().expect("at least one level");

    let mut r_iv: Vec<LevelDims> = levels
        .iter()
        .map(|&k| LevelDims {
            k_max: k,
            dims: Vec::new(),
        })
        .collect();
    for x in &samples {
        let mut v = m2 * x;
        let mut images = Vec::with_capacity(k_top);
        for _ in 0..k_top {
            v = &m1h * v;
            images.push(p_inf.basis().ad_mul(&v));
        }
        for level in r_iv.iter_mut() {
            let stack = ComplexMatrix::from_columns(&images[..level.k_max]);
            level.dims.push(numerical_rank(&stack, DEFAULT_TOL, VERDICT_TOL * x.norm().max(1.0)));
        }
    }
    let profile: Vec<usize> = r_iv.iter().map(|l| l.dims.iter().copied().max().unwrap_or(0)).collect();
    let growing = profile.len() > 1 && profile.windows(2).all(|w| w[1] > w[0]);
    let r_iv_trend = if growing { Trend::Growing } else { Trend::Bounded };

    let r_v = levels
        .iter()
        .map(|&k| {
            let cols = p.space().level_window(k, depth);
            let outside = &cols - p_inf.project(&cols);
            let block = matmul(&p_inf.basis().adjoint(), &matmul(m2, &outside));
            let mut sv = singular_values(&block);
            sv.truncate(5);
            LevelSpectrum {
                k_max: k,
                singular_values: sv,
            }
        })
        .collect();

    let vacuous = e.is_zero();
    let verdict_iii = vacuous || r_iii <= threshold;
    Ok(VerdictReport {
        verdict_i: r_i <= threshold,
        verdict_ii: r_ii <= threshold,
        verdict_iii,
        verdict_iv: r_iv_trend == Trend::Bounded,
        verdict: verdict_iii,
        vacuous,
        e_subspace: e,
        p_inf,
        reducing,
        restricted_defect,
        r_i,
        double_commutation,
        r_ii,
        r_iii,
        r_iv,
        r_iv_trend,
        r_v,
        samples,
        threshold,
    })
}

#[derive(Debug, Clone)]
pub struct ModelDecomposition {
    /// Bi-unitary part, ambient coordinates.
    pub h_uu: Subspace,
    pub v1: ComplexMatrix,
    pub v2: ComplexMatrix,
    /// `F = ker A*` inside `H_∞(S1)`, ambient coordinates.
    pub f_part: Subspace,
    pub psi: ComplexMatrix,
    /// `E = ker S1*`, ambient coordinates.
    pub e_part: Subspace,
    /// Block coefficients `φ_k = ⟨S1ᵏE, S2E⟩`.
    pub phi_coefficients: Vec<ComplexMatrix>,
    pub phi: SchurSymbol,
    /// Boundary deviation of the recovered `φ` from an isometry (512 samples).
    pub phi_inner_deviation: f64,
    /// `‖ψᴴψ − I‖`.
    pub psi_unitarity_defect: f64,
    /// `‖D − T_φ‖` with `D` the compression of `S2` to the `E`-ladder.
    pub toeplitz_residual: f64,
    /// Distance between the pair and the assembled model after the computed change of basis.
    pub reconstruction_residual: f64,
    /// Orthonormal change of basis `[H_uu | F-ladder | E-ladder]`.
    pub basis: ComplexMatrix,
    pub f_levels: usize,
    pub e_levels: usize,
}

impl ModelDecomposition {
    pub fn f_dim(&self) -> usize {
        self.f_part.dim()
    }

    pub fn e_dim(&self) -> usize {
        self.e_part.dim()
    }
}

/// Rungs `Mᵏ F` while they stay orthonormal.
fn ladder(m: &ComplexMatrix, f: &ComplexMatrix) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    if f.ncols() == 0 {
        return out;
    }
    let mut rung = f.clone();
    for _ in 0..=m.nrows() {
        if op_norm(&(rung.ad_mul(&rung) - identity(f.ncols()))) > VERDICT_TOL {
            break;
        }
        let next = m * &rung;
        out.push(rung);
        rung = next;
    }
    out
}

fn compressed_shift_blocks(levels: usize, fiber: usize) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(levels, levels);
    for k in 1..levels {
        j[(k, k - 1)] = ONE;
    }
    kron(&j, &identity(fiber))
}

/// Splits a pair whose `S2(E)` is orthogonal to `H_∞(S1)` into
/// `(V1, V2) ⊕ (M_ψ, M_z) ⊕ (M_z, M_φ)`.
pub fn model_decomposition(p: &OperatorPair) -> Result<ModelDecomposition> {
    let (p_inf, e, r_iii) = orthogonality_core(p)?;
    if r_iii > VERDICT_TOL + p.tail() {
        return Err(Error::Verdict { r_iii });
    }
    let (m1, m2) = (p.s1().matrix(), p.s2().matrix());
    let q = p_inf.basis();
    let u = p_inf.compress(m1);
    let a = p_inf.compress(m2);
    let h_uu_local = if a.is_empty() {
        Subspace::zero(0)
    } else {
        isometric_hyper_range(&a, DEFAULT_POWER_CAP, DEFAULT_TOL)?
    };
    let f_local = wandering_subspace(&a, DEFAULT_TOL);
    let psi = f_local.compress(&u);
    let psi_unitarity_defect = op_norm(&(psi.ad_mul(&psi) - identity(psi.nrows())));

    let f_ladder = ladder(&a, f_local.basis());
    let e_ladder = ladder(m1, e.basis());
    let h_uu_amb = q * h_uu_local.basis();
    let f_amb: Vec<ComplexMatrix> = f_ladder.iter().map(|r| q * r).collect();
    let mut cols: Vec<&ComplexMatrix> = vec![&h_uu_amb];
    cols.extend(f_amb.iter());
    cols.extend(e_ladder.iter());
    let y = hstack(&cols);

    let phi_coefficients: Vec<ComplexMatrix> = e_ladder.iter().map(|r| r.ad_mul(&(m2 * e.basis()))).collect();
    let e_dim = e.dim();
    let phi = if phi_coefficients.is_empty() {
        SchurSymbol::scalar_constant(ZERO)?
    } else {
        SchurSymbol::polynomial(phi_coefficients.clone())?
    };
    let phi_inner_deviation = if e_dim == 0 { 0.0 } else { phi.inner_deviation(512)? };

    let v1 = h_uu_local.compress(&u);
    let v2 = h_uu_local.compress(&a);
    let (fl, el) = (f_ladder.len(), e_ladder.len());
    let mf = f_local.dim();
    let model1 = block_diag(&[
        &v1,
        &kron(&identity(fl), &psi),
        &compressed_shift_blocks(el, e_dim),
    ]);
    let t_phi = crate::hardy::toeplitz_matrix(&phi_coefficients, e_dim.max(1), el.saturating_sub(1));
    let t_phi = if el == 0 { ComplexMatrix::zeros(0, 0) } else { t_phi };
    let model2 = block_diag(&[&v2, &compressed_shift_blocks(fl, mf), &t_phi]);

    let n = p.dim();
    let k = y.ncols();
    let mut reconstruction_residual = op_norm(&(y.ad_mul(&y) - identity(k)));
    reconstruction_residual = reconstruction_residual.max(op_norm(&(&y * y.adjoint() - identity(n))));
    if model1.nrows() == k {
        reconstruction_residual = reconstruction_residual
            .max(op_norm(&(y.ad_mul(&(m1 * &y)) - &model1)))
            .max(op_norm(&(y.ad_mul(&(m2 * &y)) - &model2)));
    } else {
        return Err(Error::Internal("model block sizes do not match the change of basis".into()));
    }
    let e_block = hstack(&e_ladder.iter().collect::<Vec<_>>());
    let toeplitz_residual = if el == 0 {
        0.0
    } else {
        op_norm(&(e_block.ad_mul(&(m2 * &e_block)) - &t_phi))
    };

    Ok(ModelDecomposition {
        h_uu: h_uu_local.embed(q)?,
        v1,
        v2,
        f_part: f_local.embed(q)?,
        psi,
        e_part: e,
        phi_coefficients,
        phi,
        phi_inner_deviation,
        psi_unitarity_defect,
        toeplitz_residual,
        reconstruction_residual,
        basis: y,
        f_levels: fl,
        e_levels: el,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartKind {
    /// Both coordinates unitary.
    UnitaryUnitary,
    /// `S1` unitary, `S2` a shift.
    UnitaryShift,
    /// `S1` a shift, `S2` unitary.
    ShiftUnitary,
    /// Both shifts.
    ShiftShift,
}

#[derive(Debug, Clone)]
pub struct SlocinskiPart {
    pub kind: PartKind,
    pub subspace: Subspace,
    pub s1_wandering_dim: usize,
    pub s2_wandering_dim: usize,
    /// Fiber dimension of the part's model: `dim H_uu`, `dim ker S2*`,
    /// `dim ker S1*`, or `dim(ker S1* ∩ ker S2*)` respectively.
    pub fiber_dim: usize,
    /// Compression of the unitary coordinate to the other coordinate's
    /// wandering subspace, for the mixed parts.
    pub constant_symbol: Option<ComplexMatrix>,
}

#[derive(Debug, Clone)]
pub struct SlocinskiDecomposition {
    /// In the order uu, us, su, ss.
    pub parts: Vec<SlocinskiPart>,
    pub double_commutation: f64,
    pub mutual_orthogonality: f64,
    pub joint_reduction: f64,
}

impl SlocinskiDecomposition {
    pub fn dims(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.parts[i].subspace.dim())
    }

    pub fn fiber_dims(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|i| self.parts[i].fiber_dim)
    }
}

/// `‖(S1ᴴS2 − S2S1ᴴ)|window‖`.
pub fn double_commutation_residual(p: &OperatorPair) -> f64 {
    let (m1, m2) = (p.s1().matrix(), p.s2().matrix());
    let m1h = m1.adjoint();
    op_norm(&((&m1h * m2 - m2 * &m1h) * p.window()))
}

/// Four-part splitting of a doubly commuting pair by the two hyper-ranges.
pub fn slocinski(p: &OperatorPair) -> Result<SlocinskiDecomposition> {
    let dc = double_commutation_residual(p);
    let limit = VERDICT_TOL + p.tail();
    if dc > limit {
        return Err(Error::Precondition {
            name: "double commutation",
            residual: dc,
            tolerance: limit,
        });
    }
    let h1 = hyper_range_graded(p.s1(), DEFAULT_POWER_CAP, DEFAULT_TOL)?;
    let h2 = hyper_range_graded(p.s2(), DEFAULT_POWER_CAP, DEFAULT_TOL)?;
    let uu = intersect(&h1, &h2)?;
    let not_uu = complement(&uu);
    let us = intersect(&h1, &not_uu)?;
    let su = intersect(&h2, &not_uu)?;
    let ss = complement(&uu.join(&us)?.join(&su)?);

    let (m1, m2) = (p.s1().matrix(), p.s2().matrix());
    let kinds = [
        (PartKind::UnitaryUnitary, uu),
        (PartKind::UnitaryShift, us),
        (PartKind::ShiftUnitary, su),
        (PartKind::ShiftShift, ss),
    ];
    let mut parts = Vec::with_capacity(4);
    for (kind, s) in kinds {
        let c1 = s.compress(m1);
        let c2 = s.compress(m2);
        let w1 = wandering_subspace(&c1, DEFAULT_TOL);
        let w2 = wandering_subspace(&c2, DEFAULT_TOL);
        let (fiber_dim, constant_symbol) = match kind {
            PartKind::UnitaryUnitary => (s.dim(), None),
            PartKind::UnitaryShift => (w2.dim(), Some(w2.compress(&c1))),
            PartKind::ShiftUnitary => (w1.dim(), Some(w1.compress(&c2))),
            PartKind::ShiftShift => (intersect(&w1, &w2)?.dim(), None),
        };
        parts.push(SlocinskiPart {
            kind,
            s1_wandering_dim: w1.dim(),
            s2_wandering_dim: w2.dim(),
            fiber_dim,
            constant_symbol,
            subspace: s,
        });
    }

    let mut mutual_orthogonality: f64 = 0.0;
    for i in 0..4 {
        for j in i + 1..4 {
            let overlap = op_norm(&parts[i].subspace.basis().ad_mul(parts[j].subspace.basis()));
            mutual_orthogonality = mutual_orthogonality.max(overlap);
        }
    }
    let w = p.window();
    let mut joint_reduction: f64 = 0.0;
    for part in &parts {
        for m in [m1, m2] {
            let (a, b) = reducing_residual_on(m, &part.subspace, &w)?;
            joint_reduction = joint_reduction.max(a).max(b);
        }
    }
    Ok(SlocinskiDecomposition {
        parts,
        double_commutation: dc,
        mutual_orthogonality,
        joint_reduction,
    })
}

/// Groups eigenvalues lying within `resolution` of a cluster's first member.
pub fn cluster_eigenvalues(values: &[Complex64], resolution: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &v in values {
        match clusters.iter_mut().find(|(c, _)| (c - v).norm() <= resolution) {
            Some(c) => c.1 += 1,
            None => clusters.push((v, 1)),
        }
    }
    clusters
}

#[derive(Debug, Clone)]
pub struct PointSpectrum {
    /// Orthogonal sum of the eigenspaces.
    pub m: Subspace,
    pub eigenspaces: Vec<(Complex64, Subspace)>,
    /// Reducing residuals of `M` for `S1` and `S2` on the window.
    pub reducing_s1: f64,
    pub reducing_s2: f64,
    /// `max | |λ| − 1 |`.
    pub modulus_deviation: f64,
}

/// Eigenspaces of the unitary part of `S1` and their span.
pub fn point_spectrum_part(p: &OperatorPair) -> Result<PointSpectrum> {
    let h = hyper_range_graded(p.s1(), DEFAULT_POWER_CAP, DEFAULT_TOL)?;
    let n = p.dim();
    let u = h.compress(p.s1().matrix());
    let vals = eigenvalues(&u)?;
    let mut eigenspaces = Vec::new();
    let mut modulus_deviation: f64 = 0.0;
    let mut span = Subspace::zero(n);
    for (lambda, _) in cluster_eigenvalues(&vals, EIGEN_CLUSTER) {
        modulus_deviation = modulus_deviation.max((lambda.norm() - 1.0).abs());
        let shifted = &u - identity(u.nrows()) * lambda;
        let local = null_space(&shifted, EIGEN_CLUSTER);
        let amb = local.embed(h.basis())?;
        span = span.join(&amb)?;
        eigenspaces.push((lambda, amb));
    }
    let w = p.window();
    let r1 = reducing_residual_on(p.s1().matrix(), &span, &w)?;
    let r2 = reducing_residual_on(p.s2().matrix(), &span, &w)?;
    Ok(PointSpectrum {
        m: span,
        eigenspaces,
        reducing_s1: r1.0.max(r1.1),
        reducing_s2: r2.0.max(r2.1),
        modulus_deviation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinitenessReport {
    /// `dim ker(P_∞ S2ᴴ|_{H_∞(S1)})`.
    pub dim_a: usize,
    /// `dim P_∞(ker S2ᴴ)`.
    pub dim_b: usize,
    /// Number of eigenvalue clusters of `S1|_{H_∞(S1)}` at resolution 1e-6.
    pub spectrum_card: usize,
    pub r_iii: f64,
    pub verdict: bool,
}

/// Finite-dimensional counterparts of the three finiteness conditions.
///
/// On a finite truncation all three quantities are finite; they are reported
/// next to the orthogonality verdict for comparison.
pub fn finiteness_checks(p: &OperatorPair) -> Result<FinitenessReport> {
    let (p_inf, _, r_iii) = orthogonality_core(p)?;
    let a = p_inf.compress(p.s2().matrix());
    let dim_a = if a.is_empty() {
        0
    } else {
        null_space(&a.adjoint(), DEFAULT_TOL).dim()
    };
    let kernel = null_space(&p.s2().matrix().adjoint(), DEFAULT_TOL);
    let dim_b = if kernel.is_zero() || p_inf.is_zero() {
        0
    } else {
        numerical_rank(&p_inf.basis().ad_mul(kernel.basis()), DEFAULT_TOL, VERDICT_TOL)
    };
    let u = p_inf.compress(p.s1().matrix());
    let spectrum_card = cluster_eigenvalues(&eigenvalues(&u)?, CARD_CLUSTER).len();
    Ok(FinitenessReport {
        dim_a,
        dim_b,
        spectrum_card,
        r_iii,
        verdict: r_iii <= VERDICT_TOL + p.tail(),
    })
}
