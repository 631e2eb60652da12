//! Config validation, per-command reports, CSV layout and exit codes.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use serde_json::Value;
use woldlab_cli::{run, validate_config, CliError, Overrides, RunConfig};

fn parse(text: &str) -> Result<RunConfig, CliError> {
    validate_config(text.as_bytes(), &Overrides::default())
}

fn report_of(text: &str) -> woldlab_cli::RunOutput {
    run(&parse(text).unwrap()).unwrap()
}

fn config_path(err: CliError) -> String {
    match err {
        CliError::Config { path, .. } => path,
        other => panic!("expected a config error, got {other}"),
    }
}

fn binary(dir: &Path, command: &str, config: &str, extra: &[&str]) -> (i32, String, String) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_woldlab"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn errors_name_the_offending_path() {
    let cases = [
        (r#"{"command":"wold","degree":8,"bogus":1}"#, "bogus"),
        (r#"{"command":"wold","degree":"eight"}"#, "degree"),
        (r#"{"command":"wold","degree":4}"#, "degree"),
        (r#"{"command":"wold","degree":8,"levels":[8,12,12]}"#, "levels[2]"),
        (r#"{"command":"wold","degree":8,"tolerances":{"nope":1e-3}}"#, "tolerances.nope"),
        (r#"{"command":"wold","degree":8,"tolerances":{"pair":-1}}"#, "tolerances.pair"),
        (r#"{"command":"verdict","degree":8}"#, "symbol"),
        (r#"{"command":"verdict","degree":8,"symbol":{"kind":"blaschke","zeros":[[1.5,0]]}}"#, "symbol.zeros"),
        (r#"{"command":"verdict","degree":8,"symbol":{"kind":"polynomial","coeffs":[[0.9,0],[0.9,0]]}}"#, "symbol.coeffs"),
        (r#"{"command":"forcing","degree":8,"symbol":{"kind":"constant","value":[0.5,0]},"atoms":0}"#, "atoms"),
    ];
    for (text, want) in cases {
        let path = config_path(parse(text).unwrap_err());
        assert_eq!(path, want, "{text}");
    }
}

#[test]
fn overrides_take_precedence() {
    let text = br#"{"command":"wold","degree":8,"seed":1,"output_dir":"a"}"#;
    let o = Overrides {
        command: Some(woldlab_cli::Command::Wold),
        output_dir: Some("b".into()),
        seed: Some(9),
        emit_csv: true,
    };
    let c = validate_config(text, &o).unwrap();
    assert_eq!(c.seed, Some(9));
    assert_eq!(c.output_dir, Path::new("b"));
    assert!(c.emit_csv);
    let o = Overrides {
        command: Some(woldlab_cli::Command::Verdict),
        ..Overrides::default()
    };
    assert_eq!(config_path(validate_config(text, &o).unwrap_err()), "command");
}

#[test]
fn schema_lists_exactly_the_config_keys() {
    let schema: Value =
        serde_json::from_str(include_str!("../schema/config.schema.json")).unwrap();
    let props: BTreeSet<String> = schema["properties"].as_object().unwrap().keys().cloned().collect();
    let config = parse(r#"{"command":"wold","degree":8}"#).unwrap();
    let keys: BTreeSet<String> = serde_json::to_value(&config).unwrap().as_object().unwrap().keys().cloned().collect();
    assert_eq!(props, keys);
    let tol: BTreeSet<&str> = schema["properties"]["tolerances"]["properties"]
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    let defaults: BTreeSet<&str> = woldlab_cli::config::DEFAULT_TOLERANCES.iter().map(|(k, _)| *k).collect();
    assert_eq!(tol, defaults);
}

#[test]
fn wold_reports_every_level() {
    let out = report_of(r#"{"command":"wold","degree":24,"levels":[24,32],"unitary_dim":3}"#);
    assert_eq!(out.report.levels.len(), 2);
    assert_eq!(out.report.verdict, None);
    assert_eq!(out.exit_code(), 0);
    for l in &out.report.levels {
        assert_eq!(l.dims["hyper_range"], 3);
        assert_eq!(l.dims["wandering"], 1);
        assert!(l.residuals.values().all(|r| r.pass), "{:?}", l.residuals);
    }
}

#[test]
fn construct_example_and_model_decompose() {
    let sym = r#""symbol":{"kind":"polynomial","coeffs":[[0.5,0],[0.5,0]]}"#;
    let out = report_of(&format!(r#"{{"command":"construct-example","degree":12,{sym}}}"#));
    let l = &out.report.levels[0];
    assert!(l.residuals.values().all(|r| r.pass), "{:?}", l.residuals);

    // The coupled example has no model; the refusal is a verdict, not an error.
    let out = report_of(&format!(r#"{{"command":"model-decompose","degree":12,{sym}}}"#));
    assert_eq!(out.report.verdict, Some(false));
    assert_eq!(out.exit_code(), 2);

    let out = report_of(
        r#"{"command":"model-decompose","degree":16,"seed":4,"conjugate":true,
            "assembly":{"unitary_dim":2,"psi_dim":1},
            "symbol":{"kind":"blaschke","zeros":[[0.3,0.1]]}}"#,
    );
    let l = &out.report.levels[0];
    assert_eq!(out.report.verdict, Some(true));
    assert_eq!(l.dims["h_uu"], 2);
    assert!(l.residuals["reconstruction"].pass);
}

#[test]
fn slocinski_fixtures() {
    let out = report_of(r#"{"command":"slocinski","degree":8,"fixture":"tensor"}"#);
    let l = &out.report.levels[0];
    assert_eq!(l.dims["parts"], serde_json::json!([0, 0, 0, 81]));
    assert!(l.verdicts["dims_match"]);
    let out = report_of(r#"{"command":"slocinski","degree":8,"seed":3}"#);
    assert!(out.report.levels[0].verdicts["dims_match"]);
}

#[test]
fn moments_and_forcing() {
    let sym = r#""symbol":{"kind":"polynomial","coeffs":[[0.5,0],[0.5,0]]}"#;
    let out = report_of(&format!(r#"{{"command":"moments","degree":16,"k_max":6,{sym}}}"#));
    assert!(out.report.levels[0].residuals["moments"].pass);
    assert_eq!(out.moments.len(), 13);
    assert!(out.report.warnings.iter().any(|w| w.contains("2π")));

    let out = report_of(&format!(r#"{{"command":"forcing","degree":16,"atoms":4,"seed":2,{sym}}}"#));
    // A nonzero weight cannot live on four atoms.
    assert!(out.report.levels[0].verdicts["forced_trivial"]);
    assert_eq!(out.exit_code(), 2);
    let inner = r#""symbol":{"kind":"blaschke","zeros":[[0.2,0.3]]}"#;
    let out = report_of(&format!(r#"{{"command":"forcing","degree":16,"atoms":4,"seed":2,{inner}}}"#));
    assert!(!out.report.levels[0].verdicts["forced_trivial"]);
    assert_eq!(out.exit_code(), 0);
}

#[test]
fn seeded_features_need_a_seed() {
    let cases = [
        r#"{"command":"verdict","degree":8,"conjugate":true,"symbol":{"kind":"constant","value":[0.5,0]}}"#,
        r#"{"command":"verdict","degree":8,"samples":2,"symbol":{"kind":"constant","value":[0.5,0]}}"#,
        r#"{"command":"slocinski","degree":8}"#,
        r#"{"command":"forcing","degree":8,"atoms":3,"symbol":{"kind":"constant","value":[0.5,0]}}"#,
    ];
    for text in cases {
        let err = run(&parse(text).unwrap()).unwrap_err();
        assert_eq!(config_path(err), "seed", "{text}");
    }
}

#[test]
fn binary_exit_codes_and_csv_headers() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = dir.join("out");
    let out_s = out.to_str().unwrap();

    let inner = r#"{"degree":12,"symbol":{"kind":"blaschke","zeros":[[0.4,0]]}}"#;
    let (code, stdout, _) = binary(dir, "verdict", inner, &["--out", out_s, "--csv"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "verdict: verdict true");
    let header = |f: &str| std::fs::read_to_string(out.join(f)).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header("decay.csv"), "level,sv1,sv2,sv3,sv4,sv5");
    assert_eq!(header("moments.csv"), "level,k,m_re,m_im,w_re,w_im,deviation");
    assert_eq!(header("boundary.csv"), "theta,abs_phi_sq");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "verdict");
    assert_eq!(report["verdict"], true);
    assert!(report["provenance"]["version"].is_string());

    let coupled = r#"{"degree":12,"symbol":{"kind":"polynomial","coeffs":[[0.5,0],[0.5,0]]}}"#;
    assert_eq!(binary(dir, "verdict", coupled, &["--out", out_s]).0, 2);
    assert_eq!(binary(dir, "wold", r#"{"degree":8}"#, &["--out", out_s]).0, 0);

    let (code, _, stderr) = binary(dir, "verdict", r#"{"degree":8,"extra":true}"#, &["--out", out_s]);
    assert_eq!(code, 1);
    assert!(stderr.contains("config error"), "{stderr}");
    let (code, _, stderr) = binary(dir, "slocinski", r#"{"degree":8}"#, &["--out", out_s]);
    assert_eq!(code, 1);
    assert!(stderr.contains("seed"), "{stderr}");
    assert_eq!(binary(dir, "slocinski", r#"{"degree":8}"#, &["--out", out_s, "--seed", "5"]).0, 0);
}
