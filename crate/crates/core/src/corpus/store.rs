//! Snapshot store layout:
//!
//! ```text
//! <root>/<policy_id>/<YYYY-MM>.html
//! <root>/<policy_id>/<YYYY-MM>.txt
//! <root>/<policy_id>/manifest.json
//! ```
//!
//! Writes go through a temporary file and a rename. Content is hashed so
//! re-fetching an unchanged capture touches nothing on disk.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{PolicySnapshot, SnapshotStatus};
use crate::yearmonth::YearMonth;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: corrupt manifest: {source}")]
    Manifest { path: PathBuf, source: serde_json::Error },
    #[error("invalid policy id {0:?}")]
    InvalidPolicyId(String),
    #[error("no snapshot {month} for policy {policy_id}")]
    MissingSnapshot { policy_id: String, month: YearMonth },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub status: SnapshotStatus,
    pub archive_url: String,
    pub html_sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_sha256: Option<String>,
    /// A terms-of-service heading precedes the first privacy mention.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub embedded_in_terms: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub policy_id: String,
    #[serde(default)]
    pub source_url: String,
    pub entries: BTreeMap<YearMonth, ManifestEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteOutcome {
    Written,
    Unchanged,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone)]
pub struct SnapshotStore {
    root: PathBuf,
}

impl SnapshotStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io { path: root.clone(), source })?;
        Ok(SnapshotStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn policy_dir(&self, policy_id: &str) -> Result<PathBuf, StoreError> {
        let valid = !policy_id.is_empty()
            && !policy_id.starts_with('.')
            && policy_id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '.' | '_'));
        if !valid {
            return Err(StoreError::InvalidPolicyId(policy_id.to_string()));
        }
        Ok(self.root.join(policy_id))
    }

    /// Policy ids with a manifest, sorted.
    pub fn policies(&self) -> Result<Vec<String>, StoreError> {
        let entries = fs::read_dir(&self.root).map_err(|source| StoreError::Io { path: self.root.clone(), source })?;
        let mut ids = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|source| StoreError::Io { path: self.root.clone(), source })?;
            if entry.path().join(MANIFEST_FILE).is_file() {
                ids.push(entry.file_name().to_string_lossy().into_owned());
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// The policy's manifest, or an empty one if none exists yet.
    pub fn manifest(&self, policy_id: &str) -> Result<Manifest, StoreError> {
        let path = self.policy_dir(policy_id)?.join(MANIFEST_FILE);
        match fs::read(&path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|source| StoreError::Manifest { path, source }),
            Err(e) if e.kind() == io::ErrorKind::NotFound => {
                Ok(Manifest { policy_id: policy_id.to_string(), ..Manifest::default() })
            }
            Err(source) => Err(StoreError::Io { path, source }),
        }
    }

    pub fn save_manifest(&self, manifest: &Manifest) -> Result<(), StoreError> {
        let dir = self.policy_dir(&manifest.policy_id)?;
        let mut json = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
        json.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &json)
    }

    fn file(&self, policy_id: &str, month: YearMonth, ext: &str) -> Result<PathBuf, StoreError> {
        Ok(self.policy_dir(policy_id)?.join(format!("{month}.{ext}")))
    }

    /// Records a fetched snapshot. Raw HTML is written only when its hash
    /// differs from the one already on record.
    pub fn put_raw(&self, snapshot: &PolicySnapshot, source_url: &str) -> Result<WriteOutcome, StoreError> {
        let mut manifest = self.manifest(&snapshot.policy_id)?;
        let hash = (!snapshot.raw_html.is_empty()).then(|| sha256_hex(&snapshot.raw_html));
        if let Some(existing) = manifest.entries.get(&snapshot.month) {
            if existing.html_sha256 == hash && existing.archive_url == snapshot.archive_url {
                return Ok(WriteOutcome::Unchanged);
            }
        }
        if hash.is_some() {
            write_atomic(&self.file(&snapshot.policy_id, snapshot.month, "html")?, &snapshot.raw_html)?;
        }
        manifest.source_url = source_url.to_string();
        manifest.entries.insert(
            snapshot.month,
            ManifestEntry {
                status: snapshot.status.clone(),
                archive_url: snapshot.archive_url.clone(),
                html_sha256: hash,
                text_sha256: None,
                embedded_in_terms: false,
            },
        );
        self.save_manifest(&manifest)?;
        Ok(WriteOutcome::Written)
    }

    pub fn read_html(&self, policy_id: &str, month: YearMonth) -> Result<Vec<u8>, StoreError> {
        read(&self.file(policy_id, month, "html")?)
    }

    pub fn read_text(&self, policy_id: &str, month: YearMonth) -> Result<String, StoreError> {
        let path = self.file(policy_id, month, "txt")?;
        let bytes = read(&path)?;
        String::from_utf8(bytes)
            .map_err(|e| StoreError::Io { path, source: io::Error::new(io::ErrorKind::InvalidData, e) })
    }

    /// Writes extracted text and marks the entry extracted.
    pub fn put_text(
        &self,
        manifest: &mut Manifest,
        month: YearMonth,
        text: &str,
        embedded_in_terms: bool,
    ) -> Result<(), StoreError> {
        let entry = manifest
            .entries
            .get_mut(&month)
            .ok_or_else(|| StoreError::MissingSnapshot { policy_id: manifest.policy_id.clone(), month })?;
        let hash = sha256_hex(text.as_bytes());
        if entry.text_sha256.as_deref() != Some(hash.as_str()) {
            write_atomic(&self.file(&manifest.policy_id, month, "txt")?, text.as_bytes())?;
        }
        entry.text_sha256 = Some(hash);
        entry.status = SnapshotStatus::Extracted;
        entry.embedded_in_terms = embedded_in_terms;
        Ok(())
    }

    /// Extracted texts of a policy in month order.
    pub fn extracted_texts(&self, policy_id: &str) -> Result<Vec<(YearMonth, String)>, StoreError> {
        let manifest = self.manifest(policy_id)?;
        manifest
            .entries
            .iter()
            .filter(|(_, e)| e.status == SnapshotStatus::Extracted)
            .map(|(&m, _)| Ok((m, self.read_text(policy_id, m)?)))
            .collect()
    }

    /// Writes an auxiliary file (pairs manifest, reports) under the root.
    pub fn write_file(&self, relative: &str, bytes: &[u8]) -> Result<PathBuf, StoreError> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| StoreError::Io { path: parent.to_path_buf(), source })?;
        }
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn read_file(&self, relative: &str) -> Result<Vec<u8>, StoreError> {
        read(&self.root.join(relative))
    }
}

fn read(path: &Path) -> Result<Vec<u8>, StoreError> {
    fs::read(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(month: &str, html: &str) -> PolicySnapshot {
        PolicySnapshot {
            policy_id: "example.com-privacy".into(),
            month: month.parse().unwrap(),
            archive_url: format!("https://archive.test/{month}"),
            raw_html: html.as_bytes().to_vec(),
            extracted_text: String::new(),
            status: SnapshotStatus::Raw,
        }
    }

    #[test]
    fn refetch_is_not_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let store = SnapshotStore::open(dir.path()).unwrap();
        let s = snapshot("2018-01", "<p>hi</p>");
        assert_eq!(store.put_raw(&s, "u").unwrap(), WriteOutcome::Written);
        let path = dir.path().join("example.com-privacy/2018-01.html");
        let before = fs::metadata(&path).unwrap().modified().unwrap();
        assert_eq!(store.put_raw(&s, "u").unwrap(), WriteOutcome::Unchanged);
        assert_eq!(fs::metadata(&path).unwrap().modified().unwrap(), before);
        assert_eq!(store.put_raw(&snapshot("2018-01", "<p>changed</p>"), "u").unwrap(), WriteOutcome::Written);
        assert_eq!(store.read_html("example.com-privacy", "2018-01".parse().unwrap()).unwrap(), b"<p>changed</p>");
    }

    #[test]
    fn manifest_and_texts() {
        let dir = tempfile::tempdir().unwrap();
        let store = SnapshotStore::open(dir.path()).unwrap();
        for m in ["2018-03", "2018-01", "2018-02"] {
            store.put_raw(&snapshot(m, m), "u").unwrap();
        }
        let mut manifest = store.manifest("example.com-privacy").unwrap();
        let months: Vec<String> = manifest.entries.keys().map(|m| m.to_string()).collect();
        assert_eq!(months, ["2018-01", "2018-02", "2018-03"]);
        store.put_text(&mut manifest, "2018-02".parse().unwrap(), "text two", false).unwrap();
        manifest.entries.get_mut(&"2018-03".parse().unwrap()).unwrap().status =
            SnapshotStatus::Rejected("too-short".into());
        store.save_manifest(&manifest).unwrap();
        let texts = store.extracted_texts("example.com-privacy").unwrap();
        assert_eq!(texts, vec![("2018-02".parse().unwrap(), "text two".to_string())]);
        assert_eq!(store.policies().unwrap(), ["example.com-privacy"]);
    }

    #[test]
    fn rejects_path_traversal() {
        let dir = tempfile::tempdir().unwrap();
        let store = SnapshotStore::open(dir.path()).unwrap();
        assert!(matches!(store.manifest("../etc"), Err(StoreError::InvalidPolicyId(_))));
        assert!(matches!(store.manifest(""), Err(StoreError::InvalidPolicyId(_))));
    }
}
