//! Writing data files and their metadata sidecars.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// 17 significant digits, always `.` as the decimal separator.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Build CSV text from a header and rows of numbers.
pub fn csv<'a>(header: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Write `text` to `path`, or to stdout when there is no path.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    threads: usize,
    unix_time: u64,
    elapsed_seconds: f64,
    config: &'a C,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Run metadata goes next to the data file so the data itself stays
/// reproducible byte for byte.
pub fn write_sidecar<C: Serialize>(
    path: &Path,
    command: &str,
    config: &C,
    elapsed: Duration,
) -> Result<()> {
    let meta = Sidecar {
        command,
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        unix_time: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
        elapsed_seconds: elapsed.as_secs_f64(),
        config,
    };
    emit(&json(&meta)?, Some(&sidecar_path(path)))
}
