use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spinmem::config::KEYS;
use spinmem::experiments::fmt12;
use spinmem::{SimConfig, Signal};

use crate::error::CliError;

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: String,
    pub seed: u64,
    pub outputs: Vec<String>,
    pub wall_time: f64,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: String, cfg: &SimConfig, params: BTreeMap<String, String>) -> Self {
        let config = KEYS.iter().map(|k| (k.to_string(), cfg.get(k).unwrap_or_default())).collect();
        Self { command, config_digest: cfg.digest(), seed: cfg.seed, outputs: Vec::new(), wall_time: 0.0, config, params }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest fields are always serialisable");
        write_atomic(path, format!("{json}\n").as_bytes())
    }
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let err = |source| CliError::Write { path: path.to_path_buf(), source };
    fs::write(&tmp, bytes).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

/// Signal as CSV with columns `t_us, re, im`.
pub fn signal_csv(signal: &Signal) -> String {
    let mut out = String::from("t_us,re,im\n");
    for (t, m) in signal.t.iter().zip(&signal.m_plus) {
        let _ = writeln!(out, "{},{},{}", fmt12(t * 1e6), fmt12(m.re), fmt12(m.im));
    }
    out
}

/// `<dir>/<stem>.manifest.json` for an output file `<dir>/<stem>.<ext>`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}
