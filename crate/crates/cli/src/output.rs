use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::error::CliResult;

/// 17 significant digits, '.' decimal, no locale: round-trips every `f64`.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Table of numbers whose first column is an integer index.
pub fn indexed_csv(columns: &[&str], rows: impl IntoIterator<Item = (usize, Vec<f64>)>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for (i, values) in rows {
        out.push_str(&i.to_string());
        for v in values {
            out.push(',');
            out.push_str(&num(v));
        }
        out.push('\n');
    }
    out
}

pub fn float_csv(columns: &[String], rows: &[Vec<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| num(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Seconds since the epoch, pinned by `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Where a command's primary payload goes, plus the metadata echoed beside it.
pub struct Emit<'a> {
    pub out: Option<&'a Path>,
    pub command: &'a str,
    pub config: Value,
}

impl Emit<'_> {
    /// Writes `payload` to `--out` (with a `.meta.json` sidecar) or to stdout.
    pub fn write(&self, payload: &str, summary: Option<Value>) -> CliResult<()> {
        match self.out {
            Some(path) => {
                std::fs::write(path, payload)?;
                let meta = json!({
                    "tool": env!("CARGO_PKG_NAME"),
                    "version": env!("CARGO_PKG_VERSION"),
                    "timestamp": timestamp(),
                    "command": self.command,
                    "config": self.config,
                    "summary": summary.unwrap_or(Value::Null),
                });
                let text = serde_json::to_string_pretty(&meta).expect("json value") + "\n";
                std::fs::write(meta_path(path), text)?;
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(payload.as_bytes())?;
                stdout.flush()?;
            }
        }
        Ok(())
    }
}

pub fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.2250738585072014e-308, 5e-324] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn indexed_table_layout() {
        let csv = indexed_csv(&["rank", "x"], vec![(1, vec![0.5]), (2, vec![0.25])]);
        assert_eq!(csv, "rank,x\n1,5.0000000000000000e-1\n2,2.5000000000000000e-1\n");
    }
}
