use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result};
use crate::experiment::{Histogram, MeasurementSeries};

/// Write `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(contents).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

pub fn unix_time_s() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    /// Names of the files written, relative to the output directory.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            started_unix_s: unix_time_s(),
            finished_unix_s: 0.0,
            files: Vec::new(),
        }
    }
}

/// Sends each output either to stdout or, with an output directory, to a
/// file of the given name; [`Emitter::finish`] then adds `manifest.json`.
pub struct Emitter {
    out_dir: Option<PathBuf>,
    manifest: RunManifest,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Emitter {
    pub fn new(out_dir: Option<PathBuf>, manifest: RunManifest) -> Self {
        Self { out_dir, manifest }
    }

    pub fn emit(&mut self, name: &str, contents: &str) -> Result<()> {
        match &self.out_dir {
            Some(dir) => {
                write_atomic(&dir.join(name), contents.as_bytes())?;
                self.manifest.files.push(name.to_string());
            }
            None => print!("{contents}"),
        }
        Ok(())
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    /// Manifest as it will be written by [`Emitter::finish`] once `pending`
    /// files are added.
    pub fn closing_manifest(&self, pending: &[&str]) -> RunManifest {
        let mut m = self.manifest.clone();
        m.files.extend(pending.iter().map(|s| s.to_string()));
        if self.out_dir.is_some() {
            m.files.push(MANIFEST_FILE.to_string());
        }
        m.finished_unix_s = unix_time_s();
        m
    }

    /// Writes the manifest (output directory only) and returns it.
    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_unix_s = unix_time_s();
        if let Some(dir) = &self.out_dir {
            self.manifest.files.push(MANIFEST_FILE.to_string());
            let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serialises");
            write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
        }
        Ok(self.manifest)
    }
}

pub fn series_csv(series: &MeasurementSeries) -> String {
    let mut out = String::from("time_s,setting,center_mhz,photons\n");
    for r in &series.records {
        out.push_str(&format!("{:.6},{},{},{}\n", r.time_s, r.setting, r.center_mhz, r.photons));
    }
    out
}

pub fn allan_csv(taus_s: &[f64], sigma_mhz: &[f64]) -> String {
    let mut out = String::from("tau_s,sigma_mhz\n");
    for (t, s) in taus_s.iter().zip(sigma_mhz) {
        out.push_str(&format!("{t},{s}\n"));
    }
    out
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_center_mhz,count\n");
    for (c, n) in h.bin_centers.iter().zip(&h.counts) {
        out.push_str(&format!("{c},{n}\n"));
    }
    out
}

/// Data rows of a CSV with the expected header, split on commas.
pub fn read_csv_rows(text: &str, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or_else(|| crate::Error::Parse {
        line: 1,
        message: "empty CSV".into(),
    })?;
    let got: Vec<&str> = first.split(',').map(str::trim).collect();
    if got != header {
        return Err(crate::Error::Parse {
            line: 1,
            message: format!("expected header `{}`, got `{}`", header.join(","), first.trim()),
        });
    }
    lines
        .map(|(i, l)| {
            let cells: Vec<String> = l.split(',').map(|c| c.trim().to_string()).collect();
            if cells.len() != header.len() {
                return Err(crate::Error::Parse {
                    line: i + 1,
                    message: format!("expected {} columns, got {}", header.len(), cells.len()),
                });
            }
            Ok(cells)
        })
        .collect()
}
