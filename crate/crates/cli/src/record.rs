//! Run records and their content-addressed cache.
//!
//! A record lives in `<cache>/<hash>/` next to the CSV artifacts it references. Entries are
//! written once into a temporary directory and renamed into place, so a directory that exists is
//! complete and is never rewritten.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scenario::Scenario;
use crate::Failure;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const RECORD_FILE: &str = "record.json";
pub const EIGEN_CSV: &str = "eigenvalues.csv";
pub const FLUX_CSV: &str = "flux.csv";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TopologicalSection {
    pub per_component: Vec<i64>,
    pub total: i64,
    pub min_link: Option<f64>,
    pub max_residue: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnalyticalSection {
    pub spectral_flow: i64,
    pub cayley_flow: Option<i64>,
    pub unresolved_flow: i64,
    pub whole_spectrum_flow: i64,
    pub outside_flow: i64,
    pub n_samples: usize,
    pub defect_max: f64,
    /// None when no eigenvalue entered the window.
    pub min_abs_eigenvalue: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LadderEntry {
    pub n_t: usize,
    pub n_theta: usize,
    pub window: f64,
    pub spectral_flow: i64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Match,
    Mismatch,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub tool_version: String,
    pub verb: String,
    pub scenario_hash: String,
    pub scenario: Scenario,
    pub created_unix: u64,
    pub topological: Option<TopologicalSection>,
    pub analytical: Option<AnalyticalSection>,
    pub gap: Option<f64>,
    pub ladder: Vec<LadderEntry>,
    pub verdict: Option<Verdict>,
}

impl RunRecord {
    pub fn new(verb: &str, scenario: &Scenario) -> Self {
        RunRecord {
            tool_version: TOOL_VERSION.to_string(),
            verb: verb.to_string(),
            scenario_hash: run_hash(verb, scenario),
            scenario: scenario.clone(),
            created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            topological: None,
            analytical: None,
            gap: None,
            ladder: vec![],
            verdict: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }
}

/// SHA-256 over the verb, the canonical scenario and the tool version.
pub fn run_hash(verb: &str, scenario: &Scenario) -> String {
    let mut h = Sha256::new();
    h.update(verb.as_bytes());
    h.update([0]);
    h.update(scenario.canonical().as_bytes());
    h.update([0]);
    h.update(TOOL_VERSION.as_bytes());
    hex::encode(h.finalize())
}

/// Named file contents.
pub type Files = Vec<(String, Vec<u8>)>;

/// A finished run: the record plus named text artifacts.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: RunRecord,
    pub artifacts: Vec<(String, String)>,
}

impl RunOutput {
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![(RECORD_FILE.to_string(), self.record.to_json())];
        out.extend(self.artifacts.iter().cloned());
        out
    }
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os("INDEXLAB_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".indexlab-cache"))
}

pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn entry(&self, hash: &str) -> PathBuf {
        self.root.join(hash)
    }

    /// Files of a cached run, in the order they were stored.
    pub fn load(&self, hash: &str) -> Result<Option<Files>, Failure> {
        let dir = self.entry(hash);
        if !dir.join(RECORD_FILE).is_file() {
            return Ok(None);
        }
        let mut names: Vec<String> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        let files = names
            .into_iter()
            .map(|n| {
                let bytes = fs::read(dir.join(&n))?;
                Ok((n, bytes))
            })
            .collect::<Result<Vec<_>, std::io::Error>>()?;
        Ok(Some(files))
    }

    /// Stores a run unless an entry for the hash already exists.
    pub fn store(&self, out: &RunOutput) -> Result<(), Failure> {
        let dest = self.entry(&out.record.scenario_hash);
        if dest.exists() {
            return Ok(());
        }
        fs::create_dir_all(&self.root)?;
        let tmp = self.root.join(format!(".tmp-{}-{}", out.record.scenario_hash, std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp)?;
        }
        fs::create_dir_all(&tmp)?;
        write_files(&tmp, &out.files().into_iter().map(|(n, s)| (n, s.into_bytes())).collect::<Vec<_>>())?;
        match fs::rename(&tmp, &dest) {
            Ok(()) => Ok(()),
            Err(_) if dest.exists() => {
                fs::remove_dir_all(&tmp)?;
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}

pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}
