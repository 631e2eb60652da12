//! Run configuration: JSON parsing, defaults and validation.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use woldlab_core::{Complex64, SchurSymbol};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Wold,
    ConstructExample,
    Verdict,
    ModelDecompose,
    Slocinski,
    Moments,
    Forcing,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Wold => "wold",
            Command::ConstructExample => "construct-example",
            Command::Verdict => "verdict",
            Command::ModelDecompose => "model-decompose",
            Command::Slocinski => "slocinski",
            Command::Moments => "moments",
            Command::Forcing => "forcing",
        }
    }

    fn needs_symbol(self) -> bool {
        !matches!(self, Command::Wold | Command::Slocinski)
    }
}

/// Complex number written as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C(pub [f64; 2]);

impl C {
    pub fn value(self) -> Complex64 {
        Complex64::new(self.0[0], self.0[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SymbolLiteral {
    Polynomial {
        coeffs: Vec<C>,
    },
    Constant {
        value: C,
    },
    Blaschke {
        zeros: Vec<C>,
        #[serde(default = "one")]
        front: C,
    },
}

fn one() -> C {
    C([1.0, 0.0])
}

impl SymbolLiteral {
    pub fn build(&self) -> woldlab_core::Result<SchurSymbol> {
        match self {
            SymbolLiteral::Polynomial { coeffs } => {
                SchurSymbol::scalar_polynomial(&coeffs.iter().map(|c| c.value()).collect::<Vec<_>>())
            }
            SymbolLiteral::Constant { value } => SchurSymbol::scalar_constant(value.value()),
            SymbolLiteral::Blaschke { zeros, front } => {
                SchurSymbol::blaschke(zeros.iter().map(|c| c.value()).collect(), front.value())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    Tensor,
    Mixed,
}

/// Random three-part assembly for `model-decompose`; the symbol is the `E` part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assembly {
    pub unitary_dim: usize,
    pub psi_dim: usize,
}

/// The config file as written, before defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    command: Option<Command>,
    symbol: Option<SymbolLiteral>,
    degree: usize,
    levels: Option<Vec<usize>>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_csv: bool,
    seed: Option<u64>,
    #[serde(default)]
    conjugate: bool,
    #[serde(default)]
    samples: usize,
    k_max: Option<usize>,
    atoms: Option<usize>,
    unitary_dim: Option<usize>,
    fixture: Option<Fixture>,
    assembly: Option<Assembly>,
}

/// Default tolerances by name.
pub const DEFAULT_TOLERANCES: [(&str, f64); 7] = [
    ("completeness", 1e-10),
    ("forcing", 1e-6),
    ("model", 1e-8),
    ("moments", 1e-8),
    ("pair", 1e-8),
    ("span", 1e-6),
    ("verdict", 1e-8),
];

/// Validated configuration with defaults applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub symbol: Option<SymbolLiteral>,
    pub degree: usize,
    pub levels: Vec<usize>,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    pub emit_csv: bool,
    pub seed: Option<u64>,
    pub conjugate: bool,
    pub samples: usize,
    pub k_max: usize,
    pub atoms: Option<usize>,
    pub unitary_dim: usize,
    pub fixture: Fixture,
    pub assembly: Option<Assembly>,
}

impl RunConfig {
    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    /// The built symbol; only valid for commands that take one.
    pub fn schur_symbol(&self) -> Result<SchurSymbol, CliError> {
        let lit = self
            .symbol
            .as_ref()
            .ok_or_else(|| CliError::config("symbol", "this command needs a symbol"))?;
        lit.build().map_err(|e| CliError::config("symbol", e.to_string()))
    }

    pub fn require_seed(&self, why: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::config("seed", format!("{why} needs an integer seed")))
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub emit_csv: bool,
}

/// Parses and validates a config. Errors name the offending path.
pub fn validate_config(text: &[u8], overrides: &Overrides) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::config(&path, inner.to_string())
    })?;

    let command = match (overrides.command, raw.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(CliError::config(
                "command",
                format!("config names `{}` but `{}` was requested", b.name(), a.name()),
            ))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(CliError::config("command", "no command given")),
    };
    if raw.degree < 8 {
        return Err(CliError::config("degree", format!("degree must be at least 8, got {}", raw.degree)));
    }
    let levels = raw.levels.unwrap_or_else(|| vec![raw.degree]);
    if levels.is_empty() {
        return Err(CliError::config("levels", "at least one level is required"));
    }
    if levels[0] == 0 {
        return Err(CliError::config("levels[0]", "levels must be positive"));
    }
    for (i, w) in levels.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(CliError::config(
                &format!("levels[{}]", i + 1),
                format!("levels must be strictly increasing ({} after {})", w[1], w[0]),
            ));
        }
    }
    let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in raw.tolerances {
        if !tolerances.contains_key(&k) {
            return Err(CliError::config(&format!("tolerances.{k}"), "unknown tolerance name"));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::config(&format!("tolerances.{k}"), format!("tolerance must be positive, got {v}")));
        }
        tolerances.insert(k, v);
    }
    if let Some(lit) = &raw.symbol {
        if let Err(e) = lit.build().and_then(|s| s.check_schur()) {
            let path = match lit {
                SymbolLiteral::Blaschke { .. } => "symbol.zeros",
                SymbolLiteral::Polynomial { .. } => "symbol.coeffs",
                SymbolLiteral::Constant { .. } => "symbol.value",
            };
            return Err(CliError::config(path, e.to_string()));
        }
    } else if command.needs_symbol() {
        return Err(CliError::config("symbol", format!("`{}` needs a symbol", command.name())));
    }
    if raw.atoms == Some(0) {
        return Err(CliError::config("atoms", "need at least one atom"));
    }
    let k_max = raw.k_max.unwrap_or(12);
    Ok(RunConfig {
        command,
        symbol: raw.symbol,
        degree: raw.degree,
        levels,
        tolerances,
        output_dir: overrides
            .output_dir
            .clone()
            .or(raw.output_dir)
            .unwrap_or_else(|| PathBuf::from("woldlab-out")),
        emit_csv: raw.emit_csv || overrides.emit_csv,
        seed: overrides.seed.or(raw.seed),
        conjugate: raw.conjugate,
        samples: raw.samples,
        k_max,
        atoms: raw.atoms,
        unitary_dim: raw.unitary_dim.unwrap_or(2),
        fixture: raw.fixture.unwrap_or(Fixture::Mixed),
        assembly: raw.assembly,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig, CliError> {
        validate_config(s.as_bytes(), &Overrides::default())
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(r#"{"command":"verdict","degree":16,"symbol":{"kind":"blaschke","zeros":[[0.5,0]]}}"#).unwrap();
        assert_eq!(c.levels, vec![16]);
        assert_eq!(c.tol("verdict"), 1e-8);
        assert_eq!(c.k_max, 12);
        assert!(!c.emit_csv);
    }

    #[test]
    fn zero_outside_disc_is_rejected() {
        let e = parse(r#"{"command":"verdict","degree":16,"symbol":{"kind":"blaschke","zeros":[[1.5,0]]}}"#).unwrap_err();
        assert!(e.to_string().contains("symbol.zeros"), "{e}");
    }

    #[test]
    fn decreasing_levels_are_rejected() {
        let e = parse(r#"{"command":"wold","degree":16,"levels":[32,16]}"#).unwrap_err();
        assert!(e.to_string().contains("levels[1]"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = parse(r#"{"command":"wold","degree":16,"symbol":{"kind":"constant","value":[0,0],"extra":1}}"#).unwrap_err();
        assert!(e.to_string().contains("symbol"), "{e}");
        let e = parse(r#"{"command":"wold","degree":16,"colour":1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse(r#"{"command":"wold","degree":16,"tolerances":{"bogus":1e-3}}"#).unwrap_err();
        assert!(e.to_string().contains("tolerances.bogus"), "{e}");
    }

    #[test]
    fn small_degree_and_command_mismatch() {
        assert!(parse(r#"{"command":"wold","degree":4}"#).is_err());
        let o = Overrides {
            command: Some(Command::Verdict),
            ..Overrides::default()
        };
        assert!(validate_config(br#"{"command":"wold","degree":16}"#, &o).is_err());
    }
}
