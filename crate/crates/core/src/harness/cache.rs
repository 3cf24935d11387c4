use std::collections::BTreeMap;
use std::path::Path;

use crate::{Error, Result};

/// Calibrated thresholds keyed by detector id, scenario calibration hash and
/// target false-alarm probability. Stored as whitespace-separated lines
/// `detector hash p_fa threshold`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThresholdCache {
    entries: BTreeMap<(String, String, String), f64>,
}

impl ThresholdCache {
    /// Loads `path`; a missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Self::default()),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() || fields[0].starts_with('#') {
                continue;
            }
            let [detector, hash, p_fa, threshold] = fields[..] else {
                return Err(Error::Config(format!("threshold cache line {}: expected 4 fields", i + 1)));
            };
            let threshold: f64 = threshold
                .parse()
                .map_err(|e| Error::Config(format!("threshold cache line {}: {e}", i + 1)))?;
            entries.insert((detector.into(), hash.into(), p_fa.into()), threshold);
        }
        Ok(ThresholdCache { entries })
    }

    pub fn get(&self, detector: &str, hash: &str, p_fa: f64) -> Option<f64> {
        self.entries
            .get(&(detector.to_string(), hash.to_string(), format!("{p_fa:e}")))
            .copied()
    }

    pub fn insert(&mut self, detector: &str, hash: &str, p_fa: f64, threshold: f64) {
        self.entries
            .insert((detector.to_string(), hash.to_string(), format!("{p_fa:e}")), threshold);
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|((d, h, p), t)| format!("{d} {h} {p} {t}\n"))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("thresholds.txt");
        assert_eq!(ThresholdCache::load(&path).unwrap(), ThresholdCache::default());
        let mut c = ThresholdCache::default();
        c.insert("ml", "abcd", 1e-3, 0.125);
        c.insert("np", "abcd", 0.01, 150.5);
        c.save(&path).unwrap();
        let back = ThresholdCache::load(&path).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.get("ml", "abcd", 0.001), Some(0.125));
        assert_eq!(back.get("ml", "abcd", 0.01), None);
    }

    #[test]
    fn malformed_line_rejected() {
        assert!(ThresholdCache::parse("ml abcd 1e-3\n").is_err());
        assert!(ThresholdCache::parse("ml abcd 1e-3 x\n").is_err());
    }
}
