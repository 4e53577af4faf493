//! Versioned JSON storage for calibrations, keyed by a content hash of the
//! calibration request.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detection::{calibrate, Calibration, CalibrationRequest};
use crate::error::{Error, FormatError, Result};

pub const FORMAT_NAME: &str = "percdetect-calibration";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    format: String,
    version: u32,
    key: String,
    calibration: Calibration,
}

/// Hex SHA-256 of the canonical JSON of `request` and the format version.
pub fn cache_key(request: &CalibrationRequest) -> String {
    let canonical = serde_json::to_string(request).expect("request serializes");
    let mut hasher = Sha256::new();
    hasher.update(format!("{FORMAT_NAME}/v{FORMAT_VERSION}\n").as_bytes());
    hasher.update(canonical.as_bytes());
    hex::encode(hasher.finalize())
}

pub fn encode_calibration(cal: &Calibration) -> String {
    let doc = Document {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        key: cache_key(&cal.request()),
        calibration: cal.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("calibration serializes");
    s.push('\n');
    s
}

pub fn decode_calibration(text: &str) -> Result<Calibration> {
    let bad = |m: String| Error::Format(FormatError::Config(m));
    let doc: Document = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
        return Err(bad(format!(
            "unsupported calibration format {} v{}",
            doc.format, doc.version
        )));
    }
    if doc.key != cache_key(&doc.calibration.request()) {
        return Err(bad("calibration key does not match its contents".into()));
    }
    Ok(doc.calibration)
}

#[derive(Debug, Clone)]
pub struct CalibrationCache {
    dir: PathBuf,
}

impl CalibrationCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CalibrationCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, request: &CalibrationRequest) -> PathBuf {
        self.dir.join(format!("{}.json", cache_key(request)))
    }

    pub fn load(&self, request: &CalibrationRequest) -> Result<Option<Calibration>> {
        let path = self.path_for(request);
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                let cal = decode_calibration(&text)?;
                if cal.request() != *request {
                    return Err(Error::Format(FormatError::Config(format!(
                        "{} holds a different calibration",
                        path.display()
                    ))));
                }
                Ok(Some(cal))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn store(&self, cal: &Calibration) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        let path = self.path_for(&cal.request());
        std::fs::write(&path, encode_calibration(cal)).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Cached calibration, or a fresh one that is then stored. The flag is
    /// `true` on a cache hit.
    pub fn get_or_calibrate(&self, request: &CalibrationRequest) -> Result<(Calibration, bool)> {
        if let Some(cal) = self.load(request)? {
            return Ok((cal, true));
        }
        let cal = calibrate(request)?;
        self.store(&cal)?;
        Ok((cal, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseModel;
    use crate::rng::Seed;

    fn request() -> CalibrationRequest {
        CalibrationRequest::new(32, 0.05, NoiseModel::gaussian(1.8).unwrap(), 200, Seed(3))
    }

    #[test]
    fn keys_separate_requests() {
        let a = request();
        let mut b = a;
        b.seed = Seed(4);
        let mut c = a;
        c.adjacency = crate::lattice::Adjacency::Square;
        assert_eq!(cache_key(&a), cache_key(&request()));
        assert_ne!(cache_key(&a), cache_key(&b));
        assert_ne!(cache_key(&a), cache_key(&c));
        assert_eq!(cache_key(&a).len(), 64);
    }

    #[test]
    fn hit_is_byte_identical_to_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CalibrationCache::new(dir.path().join("cal"));
        let (first, hit) = cache.get_or_calibrate(&request()).unwrap();
        assert!(!hit);
        let (second, hit) = cache.get_or_calibrate(&request()).unwrap();
        assert!(hit);
        assert_eq!(first, second);
        let stored = std::fs::read_to_string(cache.path_for(&request())).unwrap();
        assert_eq!(stored, encode_calibration(&calibrate(&request()).unwrap()));
    }

    #[test]
    fn rejects_foreign_documents() {
        let cal = calibrate(&request()).unwrap();
        let text = encode_calibration(&cal);
        assert_eq!(decode_calibration(&text).unwrap(), cal);
        let wrong_version = text.replace("\"version\": 1", "\"version\": 9");
        assert!(decode_calibration(&wrong_version).is_err());
        let wrong_seed = text.replace("\"seed\": 3", "\"seed\": 5");
        assert!(decode_calibration(&wrong_seed).is_err());
    }
}
