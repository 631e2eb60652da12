//! Pipelines behind each command.

use std::time::Instant;

use rayon::prelude::*;
use woldlab_core::moments::{block_model_check, finite_spectrum_forcing, moment_match, BlockModel};
use woldlab_core::numlin::{ComplexMatrix, ComplexVector};
use woldlab_core::pairs::{
    assemble_model, construct_example, model_decomposition, slocinski, verdict_battery, OperatorPair,
};
use woldlab_core::symbols::boundary_points;
use woldlab_core::wold::{cnu_eigenvector_span_residual, wandering, wold_split};
use woldlab_core::{Complex64, Error, SchurSymbol};

use crate::config::{Command, Fixture, RunConfig};
use crate::error::CliError;
use crate::fixtures;
use crate::output::DECAY_WIDTH;
use crate::report::{LevelResult, MomentRow, Provenance, RunOutput, RunReport};

/// Points where `|φ|²` is tabulated in `boundary.csv`.
pub const BOUNDARY_SAMPLES: usize = 256;

/// Everything one level produces.
#[derive(Debug, Default)]
struct LevelOutput {
    result: LevelResult,
    decay: Option<Vec<f64>>,
    moments: Vec<MomentRow>,
    warnings: Vec<String>,
}

fn numeric(context: &str) -> impl FnOnce(Error) -> CliError + '_ {
    move |e| CliError::numeric(context, e)
}

fn pair_of(e: Complex64) -> [f64; 2] {
    [e.re, e.im]
}

/// Executes the configured pipeline at every level.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let symbol = match config.symbol {
        Some(_) => Some(config.schur_symbol()?),
        None => None,
    };
    let outputs: Vec<LevelOutput> = config
        .levels
        .par_iter()
        .map(|&level| run_level(config, symbol.as_ref(), level))
        .collect::<Result<_, _>>()?;

    let mut warnings = Vec::new();
    if matches!(config.command, Command::Moments | Command::Forcing) {
        warnings.push(
            "moments are taken against the normalized measure dθ/2π; multiply by 2π for the unnormalized dθ".to_string(),
        );
    }
    let mut levels = Vec::with_capacity(outputs.len());
    let mut decay = Vec::new();
    let mut moments = Vec::new();
    for out in outputs {
        for w in out.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        if let Some(sv) = out.decay {
            decay.push((out.result.level, sv));
        }
        moments.extend(out.moments);
        levels.push(out.result);
    }
    let verdict = levels
        .iter()
        .filter_map(|l| l.verdict)
        .fold(None, |acc: Option<bool>, v| Some(acc.unwrap_or(true) && v));
    let boundary = match &symbol {
        Some(s) => boundary_table(s)?,
        None => Vec::new(),
    };
    let report = RunReport {
        command: config.command.name(),
        config: config.clone(),
        levels,
        verdict,
        warnings,
        provenance: Provenance {
            library: "woldlab",
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    };
    Ok(RunOutput {
        report,
        decay,
        moments,
        boundary,
    })
}

fn boundary_table(s: &SchurSymbol) -> Result<Vec<(f64, f64)>, CliError> {
    boundary_points(BOUNDARY_SAMPLES)
        .enumerate()
        .map(|(j, z)| {
            let theta = std::f64::consts::TAU * j as f64 / BOUNDARY_SAMPLES as f64;
            let v = s.evaluate(z).map_err(numeric("boundary values"))?;
            Ok((theta, woldlab_core::numlin::op_norm(&v).powi(2)))
        })
        .collect()
}

fn run_level(config: &RunConfig, symbol: Option<&SchurSymbol>, level: usize) -> Result<LevelOutput, CliError> {
    let mut out = LevelOutput {
        result: LevelResult::new(level),
        ..LevelOutput::default()
    };
    if let Some(s) = symbol {
        let order = s.effective_order(woldlab_core::hardy::MULTIPLIER_TAIL);
        let tail = s.tail_bound(order);
        if tail > 0.0 {
            out.warnings.push(format!(
                "symbol truncated after {order} Taylor terms; certified coefficient tail ≤ {tail:.3e}"
            ));
        }
    }
    let sym = || symbol.ok_or_else(|| CliError::config("symbol", "this command needs a symbol"));
    match config.command {
        Command::Wold => wold_level(config, level, &mut out)?,
        Command::ConstructExample => example_level(config, sym()?, level, &mut out)?,
        Command::Verdict => verdict_level(config, sym()?, level, &mut out)?,
        Command::ModelDecompose => model_level(config, sym()?, level, &mut out)?,
        Command::Slocinski => slocinski_level(config, level, &mut out)?,
        Command::Moments => moments_level(config, sym()?, level, &mut out)?,
        Command::Forcing => forcing_level(config, sym()?, level, &mut out)?,
    }
    Ok(out)
}

/// The example pair at `level`, conjugated by a seeded unitary when asked.
fn example_pair(config: &RunConfig, phi: &SchurSymbol, level: usize) -> Result<woldlab_core::ExamplePair, CliError> {
    let mut ex = construct_example(phi, level).map_err(numeric("construct_example"))?;
    if config.conjugate {
        let seed = config.require_seed("random conjugation")?;
        let q = fixtures::random_unitary(&mut fixtures::level_rng(seed, level), ex.pair.dim());
        ex.pair = ex.pair.conjugated(&q).map_err(numeric("conjugation"))?;
    }
    Ok(ex)
}

fn wold_level(config: &RunConfig, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let k = config.unitary_dim;
    let u = match config.seed {
        Some(seed) => fixtures::random_unitary(&mut fixtures::level_rng(seed, level), k),
        None => ComplexMatrix::from_diagonal(&ComplexVector::from_fn(k, |j, _| {
            Complex64::from_polar(1.0, std::f64::consts::TAU * (j + 1) as f64 / (k + 1) as f64)
        })),
    };
    let op = fixtures::shift_plus_unitary(&u, level).map_err(numeric("wold fixture"))?;
    let d = wold_split(&op, level + 1).map_err(numeric("wold_split"))?;
    let grid: Vec<Complex64> = (0..12)
        .map(|j| Complex64::from_polar(0.5, std::f64::consts::TAU * j as f64 / 12.0))
        .collect();
    let span = cnu_eigenvector_span_residual(&op, &grid).map_err(numeric("kernel-section span"))?;
    let r = &mut out.result;
    r.dim("hyper_range", d.hyper_range.dim());
    r.dim("wandering", d.wandering.dim());
    r.dim("ladder", d.ladder.iter().map(|l| l.dim()).collect::<Vec<_>>());
    r.dim("reliable_rungs", d.reliable_rungs);
    let tol = config.tol("completeness");
    r.residual("completeness", d.completeness_residual, tol);
    r.residual("ladder_orthogonality", d.ladder_orthogonality, tol);
    r.residual("hyper_range_overlap", d.hyper_range_overlap, tol);
    r.residual("kernel_section_span", span, config.tol("span"));
    Ok(())
}

fn pair_residuals(config: &RunConfig, p: &OperatorPair, r: &mut LevelResult) {
    let tol = config.tol("pair") + p.tail();
    let v = p.validation();
    r.residual("commutator", v.commutator, tol);
    r.residual("isometry_defect_s1", v.defect_s1, tol);
    r.residual("isometry_defect_s2", v.defect_s2, tol);
}

fn example_level(config: &RunConfig, phi: &SchurSymbol, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let ex = example_pair(config, phi, level)?;
    let r = &mut out.result;
    r.dim("total", ex.pair.dim());
    r.dim("g_fiber", ex.g_dim());
    r.dim("gram_rank", ex.gram_rank);
    r.dim("h2_degree", ex.h2_degree);
    r.dim("g_degree", ex.g_degree);
    r.residual("realization", ex.realization_residual, config.tol("pair"));
    pair_residuals(config, &ex.pair, r);
    Ok(())
}

fn verdict_level(config: &RunConfig, phi: &SchurSymbol, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let ex = example_pair(config, phi, level)?;
    let p = &ex.pair;
    let samples = if config.samples > 0 {
        let seed = config.require_seed("random samples")?;
        let e_dim = wandering(p.s1()).dim();
        let mut rng = fixtures::level_rng(seed ^ 0x5A5A_5A5A, level);
        (0..config.samples)
            .map(|_| ComplexVector::from_fn(e_dim, |_, _| fixtures::complex_gaussian(&mut rng)))
            .collect()
    } else {
        Vec::new()
    };
    let v = verdict_battery(p, &samples, 3).map_err(numeric("verdict_battery"))?;
    let tol = config.tol("verdict") + p.tail();
    let r = &mut out.result;
    r.dim("e", v.e_subspace.dim());
    r.dim("hyper_range", v.p_inf.dim());
    r.dim(
        "r_iv_profile",
        v.r_iv.iter().map(|l| (l.k_max, l.dims.clone())).collect::<Vec<_>>(),
    );
    r.datum("r_iv_trend", format!("{:?}", v.r_iv_trend).to_lowercase());
    r.datum(
        "r_v",
        v.r_v
            .iter()
            .map(|l| (l.k_max, l.singular_values.iter().take(DECAY_WIDTH).copied().collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
    );
    r.residual("r_i", v.r_i, tol);
    r.residual("r_ii", v.r_ii, tol);
    r.residual("r_iii", v.r_iii, tol);
    r.residual("reducing_lower", v.reducing.0, tol);
    r.residual("reducing_upper", v.reducing.1, tol);
    r.residual("restricted_defect", v.restricted_defect, tol);
    r.residual("double_commutation", v.double_commutation, tol);
    pair_residuals(config, p, r);
    r.verdicts.insert("i".into(), v.verdict_i);
    r.verdicts.insert("ii".into(), v.verdict_ii);
    r.verdicts.insert("iii".into(), v.verdict_iii);
    r.verdicts.insert("iv".into(), v.verdict_iv);
    r.verdicts.insert("consistent".into(), v.consistent());
    r.verdicts.insert("vacuous".into(), v.vacuous);
    r.verdict = Some(v.verdict);
    if !v.consistent() {
        out.warnings
            .push(format!("level {level}: residual verdicts disagree (i {}, ii {}, iii {})", v.verdict_i, v.verdict_ii, v.verdict_iii));
    }
    out.decay = v
        .r_v
        .last()
        .map(|l| l.singular_values.iter().take(DECAY_WIDTH).copied().collect());
    Ok(())
}

fn model_level(config: &RunConfig, phi: &SchurSymbol, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let pair = match config.assembly {
        Some(a) => {
            let seed = config.require_seed("random assembly")?;
            let mut rng = fixtures::level_rng(seed, level);
            let spec = fixtures::random_model_spec(&mut rng, a.unitary_dim, a.psi_dim, Some(phi.clone()));
            let p = assemble_model(&spec, level).map_err(numeric("assemble_model"))?;
            if config.conjugate {
                let q = fixtures::random_unitary(&mut rng, p.dim());
                p.conjugated(&q).map_err(numeric("conjugation"))?
            } else {
                p
            }
        }
        None => example_pair(config, phi, level)?.pair,
    };
    let tol = config.tol("model");
    let r = &mut out.result;
    pair_residuals(config, &pair, r);
    match model_decomposition(&pair) {
        Ok(md) => {
            r.dim("h_uu", md.h_uu.dim());
            r.dim("f", md.f_dim());
            r.dim("e", md.e_dim());
            r.dim("f_levels", md.f_levels);
            r.dim("e_levels", md.e_levels);
            r.residual("reconstruction", md.reconstruction_residual, tol);
            r.residual("toeplitz", md.toeplitz_residual, tol);
            r.residual("psi_unitarity", md.psi_unitarity_defect, tol);
            r.residual("phi_inner_deviation", md.phi_inner_deviation, tol);
            let shown = md.phi_coefficients.len().min(8);
            r.datum(
                "phi_coefficients",
                md.phi_coefficients[..shown]
                    .iter()
                    .map(|c| c.iter().map(|z| pair_of(*z)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
            );
            r.verdict = Some(true);
        }
        Err(Error::Verdict { r_iii }) => {
            r.residual("r_iii", r_iii, config.tol("verdict") + pair.tail());
            r.verdict = Some(false);
        }
        Err(e) => return Err(CliError::numeric("model_decomposition", e)),
    }
    Ok(())
}

fn slocinski_level(config: &RunConfig, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let (pair, expected) = match config.fixture {
        Fixture::Tensor => (
            fixtures::tensor_shift(level, level).map_err(numeric("tensor fixture"))?,
            [0, 0, 0, (level + 1) * (level + 1)],
        ),
        Fixture::Mixed => {
            let seed = config.require_seed("the mixed fixture")?;
            let p = fixtures::mixed_slocinski(&mut fixtures::level_rng(seed, level), level)
                .map_err(numeric("mixed fixture"))?;
            (p, fixtures::mixed_dims(level))
        }
    };
    let s = slocinski(&pair).map_err(numeric("slocinski"))?;
    let tol = config.tol("pair");
    let r = &mut out.result;
    r.dim("parts", s.dims());
    r.dim("expected", expected);
    r.dim("fibers", s.fiber_dims());
    r.residual("double_commutation", s.double_commutation, tol);
    r.residual("mutual_orthogonality", s.mutual_orthogonality, tol);
    r.residual("joint_reduction", s.joint_reduction, tol);
    r.verdicts.insert("dims_match".into(), s.dims() == expected);
    Ok(())
}

fn moments_level(config: &RunConfig, phi: &SchurSymbol, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let ex = example_pair(config, phi, level)?;
    let bm = BlockModel::from_pair(&ex.pair).map_err(numeric("block model"))?;
    let k_max = config.k_max;
    let b1: ComplexVector = if bm.b.ncols() == 0 {
        ComplexVector::zeros(bm.u.nrows())
    } else {
        bm.b.column(0).into_owned()
    };
    let mm = moment_match(&bm.u, &b1, phi, k_max).map_err(numeric("moment_match"))?;
    let r = &mut out.result;
    r.dim("u", bm.u.nrows());
    r.residual("moments", mm.max_deviation, config.tol("moments"));
    let checks = block_model_check(&bm, level).map_err(numeric("block_model_check"))?;
    for (name, v) in checks {
        r.residual(&format!("block_{name}"), v, config.tol("model"));
    }
    if ex.g_dim() > 0 && k_max + phi.polynomial_degree().unwrap_or(0) >= ex.g_dim() {
        out.warnings.push(format!(
            "level {level}: k_max {k_max} reaches the quadrature aliasing range of {} nodes",
            ex.g_dim()
        ));
    }
    out.moments = mm
        .left
        .iter()
        .map(|(k, m)| {
            let w = mm.right.get(k);
            MomentRow {
                level,
                k,
                m: pair_of(m),
                w: pair_of(w),
                deviation: (m - w).norm(),
            }
        })
        .collect();
    Ok(())
}

fn forcing_level(config: &RunConfig, phi: &SchurSymbol, level: usize, out: &mut LevelOutput) -> Result<(), CliError> {
    let u = match config.atoms {
        Some(n) => {
            let seed = config.require_seed("random atoms")?;
            let mut rng = fixtures::level_rng(seed, level);
            let d = ComplexVector::from_fn(n, |_, _| fixtures::unimodular(&mut rng));
            let q = fixtures::random_unitary(&mut rng, n);
            &q * ComplexMatrix::from_diagonal(&d) * q.adjoint()
        }
        None => {
            let ex = example_pair(config, phi, level)?;
            BlockModel::from_pair(&ex.pair).map_err(numeric("block model"))?.u
        }
    };
    let tol = config.tol("forcing");
    let cert = finite_spectrum_forcing(&u, phi, config.k_max, tol).map_err(numeric("finite_spectrum_forcing"))?;
    let r = &mut out.result;
    r.dim("atoms", cert.atoms.len());
    r.residual("nnls", cert.residual, tol);
    r.datum("atoms", cert.atoms.iter().map(|a| pair_of(*a)).collect::<Vec<_>>());
    r.datum("masses", &cert.masses);
    r.verdicts.insert("forced_trivial".into(), cert.forced_trivial);
    r.verdict = Some(!cert.forced_trivial);
    Ok(())
}
