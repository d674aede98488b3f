//! Evaluation reports: JSON with a fixed field order plus CSV rows.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{read_json, write_json};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub val_mae: Option<f64>,
    pub test_mae: Option<f64>,
    pub test_rmse: Option<f64>,
    pub test_r2: Option<f64>,
    pub n_slc: usize,
    pub polarization: String,
    pub heading: String,
    pub height_filter_m: f64,
    pub model: String,
    pub config_hash: String,
    pub border_excluded_px: usize,
    pub val_px: usize,
    pub test_px: usize,
}

pub const CSV_HEADER: &str = "val_mae,test_mae,test_rmse,test_r2,n_slc,polarization,heading,height_filter_m,model,config_hash,border_excluded_px,val_px,test_px";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl EvalReport {
    pub fn csv_row(&self) -> String {
        [
            opt(self.val_mae),
            opt(self.test_mae),
            opt(self.test_rmse),
            opt(self.test_r2),
            self.n_slc.to_string(),
            field(&self.polarization),
            field(&self.heading),
            self.height_filter_m.to_string(),
            field(&self.model),
            field(&self.config_hash),
            self.border_excluded_px.to_string(),
            self.val_px.to_string(),
            self.test_px.to_string(),
        ]
        .join(",")
    }

    /// One Markdown table row, matching [`markdown_header`].
    pub fn markdown_row(&self) -> String {
        let f = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{x:.3}"));
        format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            self.model,
            self.heading,
            self.polarization,
            self.n_slc,
            self.height_filter_m,
            f(self.val_mae),
            f(self.test_mae),
            f(self.test_rmse),
            f(self.test_r2)
        )
    }
}

pub fn markdown_header() -> &'static str {
    "| model | heading | pol | n | filter m | val MAE | test MAE | test RMSE | test R2 |\n|---|---|---|---|---|---|---|---|---|"
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    read_json(path)
}

/// Appends a row, writing the header first when the file is new or empty.
pub fn append_csv(path: &Path, report: &EvalReport) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    text.push_str(&report.csv_row());
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
