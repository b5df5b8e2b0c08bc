//! Dataset directory walking, frame pairing, and append-only manifests.

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Lowercase hex SHA-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Sorted frame stems in `dir` whose names end with `suffix`
/// (e.g. `.bin`, `.fused.bin`).
pub fn frame_stems(dir: &Path, suffix: &str) -> Result<Vec<String>> {
    if !dir.is_dir() {
        bail!("{} is not a directory", dir.display());
    }
    let mut stems = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(stem) = name.strip_suffix(suffix) {
            if !stem.is_empty() {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

/// Read a split index: one frame stem per non-empty line.
pub fn read_split(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading split {}", path.display()))?;
    let mut stems: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    stems.sort();
    Ok(stems)
}

/// One `stem key=value ...` record per frame, append-only. Reruns skip stems
/// already present, making partial runs resumable.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub records: BTreeMap<String, Vec<(String, String)>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let mut manifest = Self::default();
        if !path.exists() {
            return Ok(manifest);
        }
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let stem = fields
                .next()
                .with_context(|| format!("manifest line {} is empty", idx + 1))?
                .to_string();
            let mut kv = Vec::new();
            for field in fields {
                let (k, v) = field
                    .split_once('=')
                    .with_context(|| format!("manifest line {}: bad field {field:?}", idx + 1))?;
                kv.push((k.to_string(), v.to_string()));
            }
            manifest.records.insert(stem, kv);
        }
        Ok(manifest)
    }

    pub fn contains(&self, stem: &str) -> bool {
        self.records.contains_key(stem)
    }

    pub fn get<'a>(&'a self, stem: &str, key: &str) -> Option<&'a str> {
        self.records
            .get(stem)?
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Append records (sorted by stem) to the manifest file.
    pub fn append_records(
        path: &Path,
        records: impl IntoIterator<Item = (String, Vec<(String, String)>)>,
    ) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut sorted: Vec<_> = records.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening manifest {}", path.display()))?;
        for (stem, kv) in sorted {
            let mut line = stem;
            for (k, v) in kv {
                line.push_str(&format!(" {k}={v}"));
            }
            line.push('\n');
            file.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Write a file, creating parent directories.
pub fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Standard dataset subdirectory paths for one frame.
pub struct FramePaths;

impl FramePaths {
    pub fn velodyne(root: &Path, stem: &str) -> PathBuf {
        root.join("velodyne").join(format!("{stem}.bin"))
    }

    pub fn semantic(root: &Path, stem: &str) -> PathBuf {
        root.join("semantic").join(format!("{stem}.label"))
    }

    pub fn scores(root: &Path, stem: &str) -> PathBuf {
        root.join("scores").join(format!("{stem}.score"))
    }

    pub fn object_labels(root: &Path, stem: &str) -> PathBuf {
        root.join("label_2").join(format!("{stem}.txt"))
    }

    pub fn calib(root: &Path, stem: &str) -> PathBuf {
        root.join("calib").join(format!("{stem}.txt"))
    }

    pub fn fused(out_root: &Path, stem: &str) -> PathBuf {
        out_root.join("fused").join(format!("{stem}.fused.bin"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_and_suffixes() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("000002.bin"), b"x").unwrap();
        std::fs::write(dir.path().join("000001.bin"), b"x").unwrap();
        std::fs::write(dir.path().join("readme.txt"), b"x").unwrap();
        let stems = frame_stems(dir.path(), ".bin").unwrap();
        assert_eq!(stems, vec!["000001", "000002"]);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.txt");
        Manifest::append_records(
            &path,
            [(
                "000001".to_string(),
                vec![("points".to_string(), "42".to_string())],
            )],
        )
        .unwrap();
        Manifest::append_records(
            &path,
            [(
                "000000".to_string(),
                vec![("points".to_string(), "7".to_string())],
            )],
        )
        .unwrap();
        let m = Manifest::load(&path).unwrap();
        assert!(m.contains("000000") && m.contains("000001"));
        assert_eq!(m.get("000001", "points"), Some("42"));
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
