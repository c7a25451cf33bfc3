//! CSV/JSON rendering and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SPEC_VERSION: &str = "1.0";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// `%.9g`-style rendering: 9 significant digits, `.` separator, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Comma-separated table with a header row and LF line endings.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    header: Vec<String>,
    body: String,
}

impl CsvTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            body: String::new(),
        }
    }

    pub fn push_row(&mut self, cells: &[String]) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn push_numbers(&mut self, cells: &[f64]) {
        let mut line = String::new();
        for (i, v) in cells.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", fmt_sig9(*v));
        }
        line.push('\n');
        self.body.push_str(&line);
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        out.push_str(&self.body);
        out
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Write `contents` to `path` through a temp file in the same directory,
/// renamed into place only once fully written.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Sidecar manifest path: `out.csv` -> `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub spec_version: &'static str,
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub results: Option<serde_json::Value>,
}

impl Manifest {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Self {
            tool: "kfringe",
            tool_version: TOOL_VERSION,
            spec_version: SPEC_VERSION,
            command: command.to_string(),
            parameters,
            seed: None,
            outputs: Vec::new(),
            notes: Vec::new(),
            results: None,
        }
    }
}
