use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "MANIFEST.json";

/// The `{schema_version, command, params, results}` envelope.
pub fn report_json(command: &str, params: &Value, results: &Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "params": params,
        "results": results,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("report values are finite JSON");
    s.push('\n');
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files of one invocation, named `<stem><suffix>` inside one directory.
#[derive(Debug)]
pub struct OutputSet {
    dir: PathBuf,
    stem: String,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn for_out(out: &Path) -> Result<Self, CliError> {
        let stem = out
            .file_stem()
            .and_then(|s| s.to_str())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| CliError::invalid("--out", format!("`{}` has no file name", out.display())))?;
        let dir = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        Ok(OutputSet { dir, stem: stem.to_string(), files: Vec::new() })
    }

    pub fn stem(&self) -> &str {
        &self.stem
    }

    pub fn name(&self, suffix: &str) -> String {
        format!("{}{}", self.stem, suffix)
    }

    pub fn add(&mut self, suffix: &str, content: impl Into<Vec<u8>>) {
        let name = self.name(suffix);
        self.files.retain(|(n, _)| *n != name);
        self.files.push((name, content.into()));
    }

    /// Manifest over everything added so far, sorted by name.
    pub fn manifest(&self) -> Vec<ManifestEntry> {
        let mut entries: Vec<ManifestEntry> = self
            .files
            .iter()
            .map(|(name, bytes)| ManifestEntry { path: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() })
            .collect();
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries
    }

    /// Writes every file plus `MANIFEST.json`; returns the paths written.
    pub fn write(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.dir).map_err(|source| CliError::Write { path: self.dir.clone(), source })?;
        let manifest = json!({ "schema_version": SCHEMA_VERSION, "files": self.manifest() });
        let mut manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest is plain JSON");
        manifest_text.push('\n');
        let mut written = Vec::with_capacity(self.files.len() + 1);
        for (name, bytes) in self.files.iter().map(|(n, b)| (n.as_str(), b.as_slice())).chain([(MANIFEST_NAME, manifest_text.as_bytes())]) {
            let path = self.dir.join(name);
            fs::write(&path, bytes).map_err(|source| CliError::Write { path: path.clone(), source })?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Line plot of columns `ys` against column 1 of a CSV with a header row.
pub fn gnuplot_lines(csv: &str, title: &str, xlabel: &str, ys: &[(usize, &str)], logscale: bool) -> String {
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set title '{title}'\nset xlabel '{xlabel}'\n"));
    if logscale {
        s.push_str("set logscale xy\n");
    }
    let plots: Vec<String> = ys
        .iter()
        .map(|(col, name)| format!("'{csv}' using 1:{col} with linespoints title '{name}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// Heat map of a planar winding field CSV (`x,y,wind,masked`).
pub fn gnuplot_field(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\nset datafile missing ''\nset title '{title}'\n\
         set size ratio -1\nset xlabel 'x'\nset ylabel 'y'\n\
         plot '{csv}' every ::1 using 1:2:3 with image title 'wind'\n"
    )
}
