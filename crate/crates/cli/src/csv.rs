//! CSV emission: `#` header with the effective configuration, then comma-separated rows
//! with floats in 17-significant-digit scientific notation.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ael_core::model::Strategy;

use crate::config::RunConfig;
use crate::error::CliError;

pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Default)]
pub struct Table {
    command: String,
    config: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<String>,
}

impl Table {
    pub fn new(command: &str, cfg: &RunConfig, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            config: cfg.effective(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Self {
        self.columns = columns;
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    /// A `# result key=value` line after the rows.
    pub fn note(&mut self, text: String) {
        self.footer.push(text);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# ael {} v{}\n", self.command, env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.config {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        for f in &self.footer {
            out.push_str(&format!("# result {f}\n"));
        }
        out
    }

    /// Writes to `path`, or stdout for `-`.
    pub fn write(&self, path: &str) -> Result<(), CliError> {
        let text = self.render();
        if path == "-" {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        } else {
            fs::write(path, text)?;
        }
        Ok(())
    }
}

/// Reads the `sigma` column and the first `delta...` column of a solve-ne output.
pub fn read_strategy(path: &Path) -> Result<Strategy, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("strategy file {}: {e}", path.display())))?;
    let bad = |m: String| CliError::Config(format!("strategy file {}: {m}", path.display()));
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| bad("no header row".into()))?.split(',').collect();
    let si = header.iter().position(|c| *c == "sigma").ok_or_else(|| bad("no sigma column".into()))?;
    let di = header.iter().position(|c| c.starts_with("delta")).ok_or_else(|| bad("no delta column".into()))?;
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            cells
                .get(i)
                .and_then(|c| c.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: unreadable value", n + 1)))
        };
        grid.push(parse(si)?);
        values.push(parse(di)?);
    }
    Strategy::new(grid, values).map_err(|e| bad(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }
}
