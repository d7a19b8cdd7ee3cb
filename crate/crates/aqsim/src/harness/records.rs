//! Run records: one JSON object per line, append-only semantics with
//! write-then-rename persistence so a crash can never corrupt records
//! that were already on disk.

use std::collections::HashSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {source}")]
    Malformed {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Serialize(#[from] serde_json::Error),
    #[error("record file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(
        "record for {instance_id}/{scheme} violates the status invariant: \
         status ok requires fidelity ≥ target and norm drift ≤ 1e-6"
    )]
    StatusInvariant { instance_id: String, scheme: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "runtime-exceeded")]
    RuntimeExceeded,
    #[serde(rename = "failed")]
    Failed,
}

/// One experiment outcome: scheme × instance, with the searched minimal
/// runtime and its diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub n: usize,
    pub instance_id: String,
    pub instance_seed: u64,
    pub m: usize,
    pub scheme: String,
    /// Hamming weight of the evolution sector; None for full space.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    /// Σz eigenvalue n − 2k of the sector; None for full space.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<i64>,
    pub status: RunStatus,
    /// Smallest passing runtime; None unless status is ok.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub t_min: Option<f64>,
    /// Fidelity at t_min for ok runs, best seen otherwise.
    pub fidelity: f64,
    pub fidelity_target: f64,
    pub norm_drift: f64,
    /// Max |⟨Σz⟩ − Δ| seen during evolution; only tracked for the
    /// Σz-conserving schemes.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_z_drift: Option<f64>,
    pub steps: u64,
    pub wall_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl RunRecord {
    /// Status-ok records must actually have met the target cleanly.
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.status == RunStatus::Ok
            && (self.fidelity < self.fidelity_target || self.norm_drift > 1e-6
                || self.t_min.is_none())
        {
            return Err(RecordError::StatusInvariant {
                instance_id: self.instance_id.clone(),
                scheme: self.scheme.clone(),
            });
        }
        Ok(())
    }

    /// Grouping/resume key: a record is uniquely addressed by the
    /// instance slot and scheme.
    pub fn key(&self) -> (usize, u64, String) {
        (self.n, self.instance_seed, self.scheme.clone())
    }
}

/// Decode one record line (the line-format entry point).
pub fn parse_record_line(line: &str) -> Result<RunRecord, serde_json::Error> {
    serde_json::from_str(line)
}

/// Encode a record as a single line (no trailing newline).
pub fn record_to_line(record: &RunRecord) -> Result<String, serde_json::Error> {
    serde_json::to_string(record)
}

/// Line-delimited record file with atomic-rewrite appends.
#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    records: Vec<RunRecord>,
}

impl RecordStore {
    /// Load the file if it exists, otherwise start empty. Malformed
    /// lines are an error, not silently dropped.
    pub fn open(path: &Path) -> Result<Self, RecordError> {
        let mut records = Vec::new();
        match std::fs::read_to_string(path) {
            Ok(text) => {
                for (idx, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let record = parse_record_line(line)
                        .map_err(|source| RecordError::Malformed { line: idx + 1, source })?;
                    record.validate()?;
                    records.push(record);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => {
                return Err(RecordError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        }
        Ok(RecordStore {
            path: path.to_path_buf(),
            records,
        })
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn contains(&self, key: &(usize, u64, String)) -> bool {
        self.records.iter().any(|r| &r.key() == key)
    }

    pub fn done_keys(&self) -> HashSet<(usize, u64, String)> {
        self.records.iter().map(|r| r.key()).collect()
    }

    /// Append one record: the whole file is rewritten to a sibling temp
    /// file, fsynced, and renamed over the original, so readers and
    /// crash recovery only ever see complete files.
    pub fn append(&mut self, record: RunRecord) -> Result<(), RecordError> {
        record.validate()?;
        self.records.push(record);
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&record_to_line(r)?);
            text.push('\n');
        }
        let tmp = self.path.with_extension("jsonl.tmp");
        let io_err = |source: std::io::Error| RecordError::Io {
            path: self.path.clone(),
            source,
        };
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        {
            let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
            file.write_all(text.as_bytes()).map_err(io_err)?;
            file.sync_all().map_err(io_err)?;
        }
        std::fs::rename(&tmp, &self.path).map_err(io_err)?;
        Ok(())
    }
}
