//! Result files. Numbers are written with Rust's shortest round-trip
//! formatting, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tripod_core::medium::TraceRow;
use tripod_core::ScanRow;

/// Version of the JSON summaries; bumped on incompatible changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[default]
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

/// Shortest round-trip text for `x`, in exponent form for very small or
/// very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_row(out: &mut String, values: &[f64]) {
    let row: Vec<String> = values.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", row.join(","));
}

/// Trace CSV with columns `t,flux,norm,theta,phi`.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("t,flux,norm,theta,phi\n");
    for r in rows {
        csv_row(&mut out, &[r.t, r.flux, r.norm, r.theta, r.phi]);
    }
    out
}

/// Dip scan CSV with columns `x,p_noncoal,p_coal1,p_coal2,abs_s`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("x,p_noncoal,p_coal1,p_coal2,abs_s\n");
    for r in rows {
        csv_row(&mut out, &[r.x, r.p_noncoal, r.p_coal1, r.p_coal2, r.abs_s]);
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes `files` (name, contents) into `dir`, creating it if needed, and
/// returns the written paths.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body)?;
            Ok(path)
        })
        .collect()
}
