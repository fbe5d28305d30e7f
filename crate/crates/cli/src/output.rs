// Copyright 2026 QISD Contributors
// SPDX-License-Identifier: Apache-2.0

//! Output directory bookkeeping, plot descriptions and the run manifest.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.jsonl";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files written by one run, in order.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_with(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(self.root.join(name))?);
        body(&mut out)?;
        out.flush()?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// One compact JSON document per line.
    pub fn write_json_lines<T: Serialize>(&mut self, name: &str, records: &[T]) -> io::Result<()> {
        self.write_with(name, |out| {
            for r in records {
                serde_json::to_writer(&mut *out, r)?;
                writeln!(out)?;
            }
            Ok(())
        })
    }

    pub fn write_plot(&mut self, name: &str, plot: &PlotSpec) -> io::Result<()> {
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, plot)?;
            writeln!(out)
        })
    }
}

/// Toolkit-neutral plot description: which CSV columns go on which axis.
#[derive(Debug, Clone, Serialize)]
pub struct PlotSpec {
    /// `line`, `heatmap` or `histogram`.
    pub kind: &'static str,
    pub title: String,
    pub data: String,
    pub x: &'static str,
    pub x_label: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_label: Option<&'static str>,
    /// Heatmap cell values.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<&'static str>,
    /// One line per distinct value of this column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_by: Option<&'static str>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub y: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<&'static str>,
    pub label: &'static str,
}

impl Series {
    pub fn new(y: &'static str, error: Option<&'static str>, label: &'static str) -> Self {
        Self { y, error, label }
    }
}

impl PlotSpec {
    pub fn lines(title: impl Into<String>, data: &str, x: &'static str, x_label: &'static str, y_label: &'static str) -> Self {
        Self {
            kind: "line",
            title: title.into(),
            data: data.to_string(),
            x,
            x_label,
            y: None,
            y_label: Some(y_label),
            value: None,
            group_by: None,
            series: Vec::new(),
        }
    }

    pub fn with_series(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything needed to regenerate the outputs: the exact configuration
/// text, the effective seed and the program version.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestRecord {
    pub subcommand: String,
    pub version: String,
    pub core_version: String,
    pub seed: u64,
    pub threads: usize,
    pub config_path: Option<String>,
    pub config_sha256: String,
    pub config: String,
    pub runtime_seconds: f64,
    pub outputs: Vec<OutputRecord>,
}

pub fn hash_outputs(dir: &OutputDir) -> io::Result<Vec<OutputRecord>> {
    dir.written()
        .iter()
        .map(|name| {
            let bytes = fs::read(dir.root().join(name))?;
            Ok(OutputRecord {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}

/// Append one record to the directory's manifest.
pub fn append_manifest(root: &Path, record: &ManifestRecord) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(root.join(MANIFEST))?;
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    f.write_all(&line)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn plot_spec_omits_unused_fields() {
        let p = PlotSpec::lines("m", "a.csv", "t", "time", "x").with_series(Series::new("mean_x", None, "mean"));
        let v = serde_json::to_value(&p).unwrap();
        assert!(v.get("value").is_none());
        assert_eq!(v["series"][0]["y"], "mean_x");
        assert!(v["series"][0].get("error").is_none());
    }
}
