//! Atomic file emission for reports and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::report::RunOutput;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes to a sibling temporary file, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: "csv buffer".into(),
        source: e.into_error(),
    })
}

pub const DECAY_WIDTH: usize = 5;

/// Writes `report.json` and, when requested, the CSV tables. Returns the written paths.
pub fn emit(out: &RunOutput, dir: &Path, csv: bool) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    let report = dir.join("report.json");
    let mut text = serde_json::to_vec_pretty(&out.report)?;
    text.push(b'\n');
    write_atomic(&report, &text)?;
    written.push(report);
    if !csv {
        return Ok(written);
    }

    let header = ["level", "sv1", "sv2", "sv3", "sv4", "sv5"];
    let rows = out.decay.iter().map(|(level, sv)| {
        let mut r = vec![level.to_string()];
        r.extend((0..DECAY_WIDTH).map(|i| sv.get(i).map_or_else(String::new, |v| num(*v))));
        r
    });
    let path = dir.join("decay.csv");
    write_atomic(&path, &table(&header, rows)?)?;
    written.push(path);

    let header = ["level", "k", "m_re", "m_im", "w_re", "w_im", "deviation"];
    let rows = out.moments.iter().map(|m| {
        vec![
            m.level.to_string(),
            m.k.to_string(),
            num(m.m[0]),
            num(m.m[1]),
            num(m.w[0]),
            num(m.w[1]),
            num(m.deviation),
        ]
    });
    let path = dir.join("moments.csv");
    write_atomic(&path, &table(&header, rows)?)?;
    written.push(path);

    let rows = out.boundary.iter().map(|(t, v)| vec![num(*t), num(*v)]);
    let path = dir.join("boundary.csv");
    write_atomic(&path, &table(&["theta", "abs_phi_sq"], rows)?)?;
    written.push(path);
    Ok(written)
}
