//! File writers. Every artifact gets a `<file>.meta.json` sidecar holding the
//! run configuration and the SHA-256 of the artifact bytes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::critical::{CriticalRecord, ZeroRecord};
use crate::error::{Error, Result};
use crate::escape::sha256_hex;
use crate::hair::HairSample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroRow {
    pub ray_index: usize,
    pub m: i64,
    pub r: f64,
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub winding: i64,
}

impl ZeroRow {
    pub fn new(z: &ZeroRecord, winding: i64) -> Self {
        ZeroRow {
            ray_index: z.ray_index,
            m: z.m,
            r: z.r,
            re: z.z.re,
            im: z.z.im,
            residual: z.residual,
            winding,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalRow {
    pub ray_index: usize,
    pub m: i64,
    pub r: f64,
    pub re: f64,
    pub im: f64,
    pub critical_value: f64,
    pub im_ratio: f64,
}

impl From<&CriticalRecord> for CriticalRow {
    fn from(c: &CriticalRecord) -> Self {
        CriticalRow {
            ray_index: c.ray_index,
            m: c.m,
            r: c.r,
            re: c.z.re,
            im: c.z.im,
            critical_value: c.f_value,
            im_ratio: c.im_ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HairRow {
    pub t: f64,
    pub re: f64,
    pub im: f64,
    pub n_used: usize,
    pub cauchy_gap: f64,
}

impl From<&HairSample> for HairRow {
    fn from(s: &HairSample) -> Self {
        HairRow {
            t: s.t,
            re: s.z.re,
            im: s.z.im,
            n_used: s.n_used,
            cauchy_gap: s.cauchy_gap,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
    pub tool_version: String,
    pub config: Value,
    pub summary: Value,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidParams(format!("csv encoding: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| Error::InvalidParams(format!("csv encoding: {e}")))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes the artifact and its sidecar; returns the artifact hash.
pub fn emit<C: Serialize>(path: &Path, bytes: &[u8], config: &C, summary: Value) -> Result<String> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sha256 = sha256_hex(bytes);
    let sidecar = Sidecar {
        file: path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        sha256: sha256.clone(),
        bytes: bytes.len(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config)?,
        summary,
    };
    let side = sidecar_path(path);
    std::fs::write(&side, json_bytes(&sidecar)?).map_err(|e| Error::io(&side, e))?;
    Ok(sha256)
}

/// File-name fragment for an itinerary: "1,-2|3" becomes "1_m2p3".
pub fn itinerary_slug(text: &str) -> String {
    text.chars()
        .filter_map(|c| match c {
            '-' => Some('m'),
            ',' => Some('_'),
            '|' => Some('p'),
            c if c.is_ascii_digit() => Some(c),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn hair_csv_header_and_rows() {
        let s = HairSample {
            t: 1.0,
            z: Complex64::new(2.5, -0.5),
            n_used: 3,
            cauchy_gap: 0.0,
        };
        let text = String::from_utf8(csv_bytes(&[HairRow::from(&s)]).unwrap()).unwrap();
        assert_eq!(text, "t,re,im,n_used,cauchy_gap\n1.0,2.5,-0.5,3,0.0\n");
    }

    #[test]
    fn sidecar_next_to_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let sha = emit(&path, b"x\n", &serde_json::json!({"p": 3}), Value::Null).unwrap();
        let side: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
        assert_eq!(side.sha256, sha);
        assert_eq!(side.file, "a.csv");
        assert_eq!(side.config["p"], 3);
    }

    #[test]
    fn slugs() {
        assert_eq!(itinerary_slug("1,-2|3"), "1_m2p3");
        assert_eq!(itinerary_slug("-1"), "m1");
    }
}
