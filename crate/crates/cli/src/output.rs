//! CSV and JSON writers.
//!
//! Every number is written as `{:.8e}` (nine significant digits), so reading a
//! value back and formatting it again reproduces the file byte for byte.
//! Undefined values are empty cells.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use cwlm_core::distribution::{Certainty, Distribution1D, JointDistribution};
use serde::Serialize;

use crate::error::CliError;

pub fn fmt_num(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Writes `header` and one line per row, produced by `row(i, &mut line)`.
pub fn write_rows<F>(path: &Path, header: &str, rows: usize, mut row: F) -> Result<(), CliError>
where
    F: FnMut(usize, &mut String),
{
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut line = String::with_capacity(64);
    writeln!(w, "{header}").map_err(io_err(path))?;
    for i in 0..rows {
        line.clear();
        row(i, &mut line);
        w.write_all(line.as_bytes()).map_err(io_err(path))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn push_fields(line: &mut String, fields: &[String]) {
    line.push_str(&fields.join(","));
}

/// `o1,o2,p` with O_1 as the outer loop.
pub fn write_joint(path: &Path, jd: &JointDistribution) -> Result<(), CliError> {
    let n2 = jd.o2.len();
    write_rows(path, "o1,o2,p", jd.p.len(), |k, line| {
        push_fields(
            line,
            &[
                fmt_num(jd.o1[k / n2]),
                fmt_num(jd.o2[k % n2]),
                fmt_num(jd.p[k]),
            ],
        );
    })
}

/// `o,p`.
pub fn write_1d(path: &Path, d: &Distribution1D) -> Result<(), CliError> {
    write_rows(path, "o,p", d.o.len(), |k, line| {
        push_fields(line, &[fmt_num(d.o[k]), fmt_num(d.p[k])])
    })
}

/// `o,difference,certainty`.
pub fn write_certainty_1d(path: &Path, o: &[f64], c: &Certainty) -> Result<(), CliError> {
    write_rows(path, "o,difference,certainty", o.len(), |k, line| {
        push_fields(
            line,
            &[
                fmt_num(o[k]),
                fmt_num(c.difference[k]),
                fmt_opt(c.certainty[k]),
            ],
        );
    })
}

/// `o1,o2,difference,certainty`.
pub fn write_certainty_joint(
    path: &Path,
    o1: &[f64],
    o2: &[f64],
    c: &Certainty,
) -> Result<(), CliError> {
    let n2 = o2.len();
    write_rows(
        path,
        "o1,o2,difference,certainty",
        c.difference.len(),
        |k, line| {
            push_fields(
                line,
                &[
                    fmt_num(o1[k / n2]),
                    fmt_num(o2[k % n2]),
                    fmt_num(c.difference[k]),
                    fmt_opt(c.certainty[k]),
                ],
            );
        },
    )
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numeric(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        for x in [
            0.0,
            -0.0,
            1.0,
            -2.5e-300,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_num(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(fmt_num(back), s);
            assert!((back - x).abs() <= 5e-9 * x.abs());
        }
        assert_eq!(fmt_num(1.5), "1.50000000e0");
        assert_eq!(fmt_opt(None), "");
    }
}
