//! The on-disk certificate bundle written by `certify-all` and read back by
//! `check-cert`.

use std::path::Path;

use pentanodal::certify::{matrix_threshold_for, recheck, Certificate, TOOL_VERSION};
use pentanodal::embedded::chain;
use pentanodal::fem::sigma_for_grid;
use pentanodal::scalar::TriBool;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigJson, RunConfig};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub config: ConfigJson,
    pub tool_version: String,
    /// Seconds since the Unix epoch. Not covered by the digest.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    pub certificate: Certificate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub verdict: bool,
    pub required: usize,
    pub passed: usize,
    pub failing: Vec<String>,
}

impl Summary {
    pub fn of(entries: &[Entry], required: usize) -> Summary {
        let failing: Vec<String> = entries
            .iter()
            .filter(|e| e.certificate.verdict != TriBool::True)
            .map(|e| e.name.clone())
            .collect();
        let passed = entries.len() - failing.len();
        Summary {
            verdict: failing.is_empty() && passed == required,
            required,
            passed,
            failing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub header: Header,
    pub certificates: Vec<Entry>,
    pub summary: Summary,
    /// SHA-256 over the configuration and the certificates.
    pub digest: String,
}

fn digest_of(config: &ConfigJson, entries: &[Entry]) -> CliResult<String> {
    let body =
        serde_json::to_string(&(config, entries)).map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(body.as_bytes())))
}

impl CertificateFile {
    pub fn new(
        cfg: &RunConfig,
        certificates: Vec<Entry>,
        required: usize,
        timestamp: u64,
    ) -> CliResult<Self> {
        let config = cfg.to_json();
        let digest = digest_of(&config, &certificates)?;
        let summary = Summary::of(&certificates, required);
        Ok(CertificateFile {
            header: Header {
                config,
                tool_version: TOOL_VERSION.to_string(),
                timestamp,
            },
            certificates,
            summary,
            digest,
        })
    }

    pub fn to_json(&self) -> CliResult<String> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_json()? + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Re-derives every certificate and returns all disagreements.
    pub fn check(&self) -> CliResult<Vec<String>> {
        let mut diffs = Vec::new();
        let recomputed = digest_of(&self.header.config, &self.certificates)?;
        if recomputed != self.digest {
            diffs.push(format!("digest {} != recomputed {recomputed}", self.digest));
        }
        let cfg = self.header.config.to_config()?;
        if let Err(e) = cfg.check_gate() {
            diffs.push(e.to_string());
        }
        let expected = chain(cfg.n).map_err(CliError::Core)?;
        if expected.len() != self.certificates.len() {
            diffs.push(format!(
                "{} certificates, expected {}",
                self.certificates.len(),
                expected.len()
            ));
        }
        for (want, got) in expected.iter().zip(&self.certificates) {
            if want.name != got.name || want.domain.to_json() != got.certificate.domain {
                diffs.push(format!(
                    "{}: domain does not match the embedded chain entry {}",
                    got.name, want.name
                ));
            }
        }
        let theta = matrix_threshold_for(&cfg.lambda, &sigma_for_grid(cfg.n))
            .map_err(CliError::Core)?
            .theta;
        let per_entry: Vec<Vec<String>> = self
            .certificates
            .par_iter()
            .map(|e| {
                let mut d = Vec::new();
                if e.certificate.theta != theta {
                    d.push(format!(
                        "{}: threshold {} != {theta} from the header",
                        e.name, e.certificate.theta
                    ));
                }
                if e.certificate.method != cfg.method {
                    d.push(format!(
                        "{}: method {} != {} from the header",
                        e.name,
                        e.certificate.method.as_str(),
                        cfg.method.as_str()
                    ));
                }
                match recheck(&e.certificate) {
                    Ok(r) => d.extend(r.into_iter().map(|s| format!("{}: {s}", e.name))),
                    Err(err) => d.push(format!("{}: {err}", e.name)),
                }
                d
            })
            .collect();
        diffs.extend(per_entry.into_iter().flatten());
        let summary = Summary::of(&self.certificates, expected.len());
        if summary != self.summary {
            diffs.push(format!(
                "summary {:?} != recomputed {:?}",
                self.summary, summary
            ));
        }
        Ok(diffs)
    }
}
