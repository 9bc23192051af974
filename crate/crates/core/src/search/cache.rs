use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::search::oracle::bandwidth_key;

/// Accuracy memo keyed by bandwidth vector, optionally mirrored to a JSON file
/// after every insert so an interrupted search can resume.
#[derive(Debug, Default)]
pub struct AccuracyCache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, f64>,
}

impl AccuracyCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `path`, loading existing entries if the file exists.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = if path.exists() {
            serde_json::from_str(&fs::read_to_string(&path)?)?
        } else {
            BTreeMap::new()
        };
        Ok(Self {
            path: Some(path),
            entries,
        })
    }

    pub fn get(&self, bandwidths: &[u32]) -> Option<f64> {
        self.entries.get(&bandwidth_key(bandwidths)).copied()
    }

    pub fn insert(&mut self, bandwidths: &[u32], accuracy: f64) -> Result<()> {
        self.entries.insert(bandwidth_key(bandwidths), accuracy);
        self.persist()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn persist(&self) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&self.entries)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let mut cache = AccuracyCache::open(&path).unwrap();
        assert!(cache.is_empty());
        cache.insert(&[160, 224], 0.75).unwrap();
        let reloaded = AccuracyCache::open(&path).unwrap();
        assert_eq!(reloaded.get(&[160, 224]), Some(0.75));
        assert_eq!(reloaded.get(&[224, 224]), None);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"160,224\": 0.75"));
    }
}
