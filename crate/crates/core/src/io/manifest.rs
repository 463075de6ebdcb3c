//! Run manifests: a TOML header with the resolved configuration followed
//! by an `[outputs]` section of `sha256:<hex> <filename>` lines.
//!
//! ```text
//! tool = "critical-otto"
//! version = "0.1.0"
//! command = "sweep"
//! threads = 4
//! threads_source = "flag"
//! wall_clock_seconds = 1.5
//!
//! [config]
//! L = 100
//! ...
//!
//! [outputs]
//! sha256:9f86d0... sweep.csv
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::FileConfig;
use super::ParseError;

pub const MANIFEST_FILE: &str = "manifest.toml";
const OUTPUTS_HEADER: &str = "[outputs]";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub threads: usize,
    /// `flag`, `env` or `default`.
    pub threads_source: String,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Scalar results worth keeping next to the tables, e.g. a fitted prefactor.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, f64>,
    pub config: FileConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<FitRecord>,
    #[serde(skip)]
    pub outputs: Vec<OutputDigest>,
}

/// A power-law fit `y = exp(intercept) * x^slope` over `[window_lo, window_hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitRecord {
    pub name: String,
    pub x: String,
    pub y: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputDigest {
    pub sha256: String,
    pub file: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutputDigest {
    pub fn of(file: &str, bytes: &[u8]) -> Self {
        Self { sha256: sha256_hex(bytes), file: file.to_string() }
    }
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut s = toml::to_string(self).unwrap_or_default();
        if !s.ends_with('\n') {
            s.push('\n');
        }
        s.push('\n');
        s.push_str(OUTPUTS_HEADER);
        s.push('\n');
        for o in &self.outputs {
            s.push_str(&format!("sha256:{} {}\n", o.sha256, o.file));
        }
        s
    }

    /// Recomputes every listed digest against files in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<(), Vec<String>> {
        let problems: Vec<String> = self
            .outputs
            .iter()
            .filter_map(|o| match std::fs::read(dir.join(&o.file)) {
                Ok(bytes) if sha256_hex(&bytes) == o.sha256 => None,
                Ok(_) => Some(format!("{}: digest mismatch", o.file)),
                Err(e) => Some(format!("{}: {e}", o.file)),
            })
            .collect();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

fn parse_digest_line(line: &str) -> Result<OutputDigest, ParseError> {
    let rest = line.strip_prefix("sha256:").ok_or_else(|| ParseError::new("manifest", format!("bad output line {line:?}")))?;
    let (hash, file) = rest.split_once(' ').ok_or_else(|| ParseError::new("manifest", "missing file name"))?;
    let file = file.trim();
    if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)) {
        return Err(ParseError::new("manifest", format!("bad digest {hash:?}")));
    }
    if file.is_empty() || file.contains('/') || file.contains('\\') || file == "." || file == ".." {
        return Err(ParseError::new("manifest", format!("bad file name {file:?}")));
    }
    Ok(OutputDigest { sha256: hash.to_string(), file: file.to_string() })
}

pub fn parse_manifest(text: &str) -> Result<RunManifest, ParseError> {
    let mut head = String::new();
    let mut outputs = None;
    for line in text.lines() {
        match &mut outputs {
            None if line.trim() == OUTPUTS_HEADER => outputs = Some(Vec::new()),
            None => {
                head.push_str(line);
                head.push('\n');
            }
            Some(v) => {
                if !line.trim().is_empty() {
                    v.push(parse_digest_line(line.trim_end())?);
                }
            }
        }
    }
    let outputs = outputs.ok_or_else(|| ParseError::new("manifest", "missing [outputs] section"))?;
    let mut m: RunManifest = toml::from_str(&head).map_err(|e| ParseError::new("manifest", e.message().to_string()))?;
    m.config.check_syntax()?;
    m.outputs = outputs;
    Ok(m)
}

/// Reads a configuration from either a plain config file or a manifest, so
/// a finished run can be repeated with `--config <manifest>`.
pub fn config_from_text(text: &str) -> Result<FileConfig, ParseError> {
    if text.lines().any(|l| l.trim() == OUTPUTS_HEADER) {
        parse_manifest(text).map(|m| m.config)
    } else {
        super::config::parse_config(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunManifest {
        RunManifest {
            tool: "critical-otto".into(),
            version: "0.1.0".into(),
            command: "cycle".into(),
            threads: 2,
            threads_source: "flag".into(),
            wall_clock_seconds: 0.25,
            notes: vec!["a note".into()],
            summary: BTreeMap::from([("prefactor".to_string(), 0.5)]),
            config: FileConfig { l: Some(100), t_cold: Some(1.0), ..Default::default() },
            fits: vec![FitRecord {
                name: "excess".into(),
                x: "tau2".into(),
                y: "excess".into(),
                slope: -1.0,
                intercept: 0.25,
                r_squared: 0.99,
                window_lo: 10.0,
                window_hi: 100.0,
                points: 10,
            }],
            outputs: vec![OutputDigest::of("cycle.csv", b"abc")],
        }
    }

    #[test]
    fn sha256_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn round_trip() {
        let m = sample();
        let text = m.render();
        assert!(text.contains("sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad cycle.csv"));
        assert_eq!(parse_manifest(&text).unwrap(), m);
    }

    #[test]
    fn manifest_doubles_as_config() {
        let m = sample();
        assert_eq!(config_from_text(&m.render()).unwrap(), m.config);
        assert_eq!(config_from_text("L = 100\nTc = 1.0\n").unwrap(), m.config);
    }

    #[test]
    fn verify_detects_tampering() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cycle.csv"), b"abc").unwrap();
        assert!(sample().verify(dir.path()).is_ok());
        std::fs::write(dir.path().join("cycle.csv"), b"abd").unwrap();
        assert!(sample().verify(dir.path()).is_err());
    }

    #[test]
    fn rejects_bad_lines() {
        let text = sample().render();
        assert!(parse_manifest(&text.replace("[outputs]", "")).is_err());
        assert!(parse_manifest(&text.replace("cycle.csv", "../x")).is_err());
        assert!(parse_manifest(&text.replace("sha256:ba", "sha256:zz")).is_err());
        assert!(parse_manifest(&format!("{text}md5:00 x\n")).is_err());
    }
}
