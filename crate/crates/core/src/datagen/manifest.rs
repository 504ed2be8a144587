//! Dataset manifest: the single JSON document that makes a generated
//! dataset reproducible and self-describing.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::AnnotationKind;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Per-channel population statistics over the clean images, in the linear
/// `[0, 1]` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

/// One record's file references. Paths are relative to the manifest
/// directory and use forward slashes, so a dataset tree is relocatable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub record_id: String,
    pub clean_path: String,
    pub noisy_a_path: String,
    pub noisy_b_path: String,
    pub mask_a_path: String,
    pub mask_b_path: String,
    pub per_record_seed: u64,
    /// Identifier of the source clean image; splits never separate records
    /// that share it.
    pub clean_group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: String,
    pub master_seed: u64,
    pub annotation_kind: AnnotationKind,
    pub records: Vec<RecordEntry>,
    pub channel_stats: ChannelStats,
    /// Split name -> record ids. Empty until [`crate::datagen::split`] runs.
    pub splits: BTreeMap<String, Vec<String>>,
    /// Fractions the splits were drawn with, recorded for provenance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_fractions: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_seed: Option<u64>,
}

impl DatasetManifest {
    pub fn record(&self, record_id: &str) -> Result<&RecordEntry> {
        self.records
            .iter()
            .find(|r| r.record_id == record_id)
            .ok_or_else(|| Error::validation(format!("record `{record_id}` not in manifest")))
    }

    pub fn split_records(&self, name: &str) -> Result<&[String]> {
        self.splits
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::config(format!("split `{name}` not present in manifest")))
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::runtime(format!("manifest serialization failed: {e}")))?;
        std::fs::write(&path, json.as_bytes()).map_err(|e| Error::io(&path, e))
    }

    pub fn load(root: &Path) -> Result<DatasetManifest> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("manifest {} is invalid: {e}", path.display())))
    }

    /// Check that every referenced file exists and decodes.
    pub fn validate_files(&self, root: &Path) -> Result<()> {
        for r in &self.records {
            for rel in [
                &r.clean_path,
                &r.noisy_a_path,
                &r.noisy_b_path,
                &r.mask_a_path,
                &r.mask_b_path,
            ] {
                let path = root.join(rel);
                if !path.is_file() {
                    return Err(Error::validation(format!(
                        "record {}: missing file {}",
                        r.record_id,
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distinct clean groups in record order.
    pub fn clean_groups(&self) -> Vec<&str> {
        let mut seen = std::collections::BTreeSet::new();
        let mut groups = Vec::new();
        for r in &self.records {
            if seen.insert(r.clean_group.as_str()) {
                groups.push(r.clean_group.as_str());
            }
        }
        groups
    }
}
