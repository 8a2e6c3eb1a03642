use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Fixed 17-significant-digit rendering, so equal doubles always print the
/// same bytes.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        Ok(OutDir(dir.to_path_buf()))
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(header).map_err(|e| io_err(&path, e))?;
        for row in rows {
            let rec: Vec<String> = row
                .into_iter()
                .map(|c| match c {
                    Cell::Num(v) => num(v),
                    Cell::Text(s) => s,
                })
                .collect();
            w.write_record(&rec).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.0.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(100.0), "1.0000000000000000e2");
        assert_eq!(num(-0.25), "-2.5000000000000000e-1");
        assert_eq!(num(f64::NAN), "NaN");
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -7.3e-300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
