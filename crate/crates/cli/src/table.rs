//! Plot-ready CSV output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rpsquash::NoiseBudget;

use crate::error::CliError;

/// Default directory for outputs written without `--output`.
pub const OUTPUT_DIR_ENV: &str = "RPSQUASH_OUTPUT_DIR";

/// Plain decimals inside `[1e-3, 1e4]`, scientific notation outside.
pub fn format_value(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if (1e-3..=1e4).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn resolve_output(explicit: Option<&Path>, default_name: &str) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(default_name),
    }
}

/// `out.csv` with `suffix` → `out_suffix.csv`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    /// `omega_rad_s, total, <one column per source>`. Frequencies are
    /// multiplied by `omega_scale` and spectra by `value_scale`.
    pub fn from_budget(budget: &NoiseBudget, omega_header: &str, omega_scale: f64, value_scale: f64) -> Self {
        let mut header = vec![omega_header.to_string(), "total".to_string()];
        header.extend(budget.sources().map(|s| s.label().to_string()));
        let mut t = Table::new(header);
        for (i, &w) in budget.grid().omegas().iter().enumerate() {
            let mut row = vec![w * omega_scale, budget.total()[i] * value_scale];
            row.extend(budget.contributions().values().map(|v| v[i] * value_scale));
            t.push(row);
        }
        t
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_value(x)).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        out.flush()
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let io_err = |e| CliError::Io(path.display().to_string(), e);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io_err)?;
        }
        let file = File::create(path).map_err(io_err)?;
        self.write_to(BufWriter::new(file)).map_err(io_err)
    }
}
