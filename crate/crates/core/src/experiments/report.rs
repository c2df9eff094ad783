//! Plain-text output helpers shared by the figure recipes and the CLI.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Formats `x` with 9 significant digits, trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.8e}");
        match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{e}", trim_zeros(mantissa.to_string())),
            None => s,
        }
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A CSV table built in memory.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Convenience for all-numeric rows.
    pub fn push_values(&mut self, values: &[f64]) {
        self.push_row(values.iter().map(|&v| fmt_sig(v)).collect());
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.header.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(0.48), "0.48");
        assert_eq!(fmt_sig(0.475088123456), "0.475088123");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(123456789.4), "123456789");
        assert_eq!(fmt_sig(7.39215e-5), "0.0000739215");
        assert_eq!(fmt_sig(3.3333333333e-7), "3.33333333e-7");
        assert_eq!(fmt_sig(-2.5e10), "-2.5e10");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn table_renders_header_and_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push_values(&[1.0, 0.5]);
        assert_eq!(t.to_csv(), "a,b\n1,0.5\n");
    }
}
