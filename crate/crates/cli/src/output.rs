//! Self-describing output files: a config header followed by the data.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use fuzzgrain::report::{csv_row, Float};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Every parameter of a run. Parameters a command does not use are `null`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub n: Option<usize>,
    pub n_min: Option<usize>,
    pub n_max: Option<usize>,
    pub d: Option<usize>,
    pub p: Option<Float>,
    pub t: Option<Vec<Float>>,
    pub realizations: Option<usize>,
    pub window: Option<usize>,
    pub model: Option<String>,
    pub scheme: Option<Vec<String>>,
    pub gamma: Option<String>,
    pub bins: Option<usize>,
    pub out: Option<String>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn new(command: &'static str, seed: u64, out: &Option<PathBuf>, format: Format) -> Self {
        RunConfig {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            out: out.as_ref().map(|p| p.display().to_string()),
            format: Some(format),
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// A CSV table: extra `# key: value` metadata lines, column names, rows.
/// Tables whose rows carry their own header leave `columns` empty.
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: String,
}

impl Table {
    pub fn new(columns: Vec<&'static str>, rows: String) -> Self {
        Table { meta: Vec::new(), columns, rows }
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = format!("# config: {}\n", config.to_json());
        for (key, value) in &self.meta {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        if !self.columns.is_empty() {
            out.push_str(&csv_row(&self.columns));
        }
        out.push_str(&self.rows);
        out
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig,
    data: &'a T,
}

pub fn render_json<T: Serialize>(config: &RunConfig, data: &T) -> String {
    let mut text = serde_json::to_string_pretty(&Document { config, data }).expect("output serializes");
    text.push('\n');
    text
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

/// `dir/stem.suffix` next to `out`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.{suffix}"))
}
