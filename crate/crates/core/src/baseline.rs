//! Frozen regression values for experiments whose reference results are
//! only qualitative.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Accepted relative excess over a frozen value.
pub const BASELINE_SLACK: f64 = 0.2;

/// Location of the checked-in baseline file.
pub fn default_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.json")
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("reading baseline file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing baseline file {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("baseline value for {name} must be finite, got {value}")]
    NonFinite { name: String, value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub value: f64,
    pub note: String,
}

/// How a measurement compares with its frozen value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Verdict {
    /// No entry yet; the measurement becomes the baseline.
    Recorded,
    Within {
        baseline: f64,
    },
    Exceeded {
        baseline: f64,
    },
}

impl Verdict {
    pub fn passed(self) -> bool {
        !matches!(self, Verdict::Exceeded { .. })
    }
}

/// Name-keyed map of upper bounds: a measurement passes when it does not
/// exceed `(1 + slack)` times its frozen value.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BaselineStore {
    pub entries: BTreeMap<String, BaselineEntry>,
}

impl BaselineStore {
    /// Missing files load as an empty store.
    pub fn load(path: &Path) -> Result<Self, BaselineError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map_err(|source| BaselineError::Parse {
                path: path.to_owned(),
                source,
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(source) => Err(BaselineError::Io {
                path: path.to_owned(),
                source,
            }),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BaselineError> {
        let text = serde_json::to_string_pretty(self).expect("plain data serializes");
        std::fs::write(path, text + "\n").map_err(|source| BaselineError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(|e| e.value)
    }

    /// Compares without recording.
    pub fn check(&self, name: &str, value: f64) -> Option<Verdict> {
        self.get(name).map(|baseline| {
            if value <= baseline * (1.0 + BASELINE_SLACK) {
                Verdict::Within { baseline }
            } else {
                Verdict::Exceeded { baseline }
            }
        })
    }

    /// Compares against the frozen value, recording `value` if none exists.
    pub fn check_or_record(
        &mut self,
        name: &str,
        value: f64,
        note: &str,
    ) -> Result<Verdict, BaselineError> {
        if !value.is_finite() {
            return Err(BaselineError::NonFinite {
                name: name.to_owned(),
                value,
            });
        }
        if let Some(verdict) = self.check(name, value) {
            return Ok(verdict);
        }
        self.entries.insert(
            name.to_owned(),
            BaselineEntry {
                value,
                note: note.to_owned(),
            },
        );
        Ok(Verdict::Recorded)
    }
}

/// Keys of the values frozen by the desk-profile suite.
pub mod keys {
    pub const RETURN_ERROR: &str = "return.eps0.1.relative_error";
    pub const PULLBACK_DISCREPANCY: &str = "pullback.eps0.4.relative_discrepancy";
    pub const RATIO_R1: &str = "census.r1";
    pub const RATIO_R2: &str = "census.r2";
    pub const RATIO_R3: &str = "census.r3";
    pub const RATIO_R4: &str = "census.r4";
    pub const RATIO_R5: &str = "census.r5";
    pub const RATIOS: [&str; 5] = [RATIO_R1, RATIO_R2, RATIO_R3, RATIO_R4, RATIO_R5];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_then_compare() {
        let mut store = BaselineStore::default();
        assert_eq!(
            store.check_or_record("x", 1.0, "").unwrap(),
            Verdict::Recorded
        );
        assert_eq!(
            store.check_or_record("x", 1.19, "").unwrap(),
            Verdict::Within { baseline: 1.0 }
        );
        assert!(!store.check_or_record("x", 1.21, "").unwrap().passed());
        assert!(store.check_or_record("y", f64::NAN, "").is_err());
    }

    #[test]
    fn round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.json");
        assert_eq!(
            BaselineStore::load(&path).unwrap(),
            BaselineStore::default()
        );
        let mut store = BaselineStore::default();
        store.check_or_record("a", 0.5, "note").unwrap();
        store.save(&path).unwrap();
        assert_eq!(BaselineStore::load(&path).unwrap(), store);
        std::fs::write(&path, "{oops").unwrap();
        assert!(matches!(
            BaselineStore::load(&path),
            Err(BaselineError::Parse { .. })
        ));
    }
}
