//! Run configuration: defaults, `key=value` files and flag overrides.

use std::path::{Path, PathBuf};

use pentanodal::certify::{cg_gate, default_lambda, default_v, Method};
use pentanodal::geometry::DEFAULT_N;
use pentanodal::scalar::rational::{parse_rational, Rational};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    pub v: Rational,
    pub lambda: Rational,
    pub method: Method,
    pub out_dir: PathBuf,
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: DEFAULT_N,
            v: default_v(),
            lambda: default_lambda(),
            method: Method::RationalLu,
            out_dir: PathBuf::from("out"),
            jobs: 1,
        }
    }
}

/// Values that may come from a config file or the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub n: Option<u32>,
    pub v: Option<String>,
    pub lambda: Option<String>,
    pub method: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Overrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let value = value.trim().to_string();
            let bad = |e: String| CliError::Config(format!("line {}: {e}", lineno + 1));
            match key.trim() {
                "grid" => o.n = Some(value.parse().map_err(|e| bad(format!("grid: {e}")))?),
                "threshold-v" => o.v = Some(value),
                "lambda" => o.lambda = Some(value),
                "method" => o.method = Some(value),
                "out" => o.out_dir = Some(PathBuf::from(value)),
                "jobs" => o.jobs = Some(value.parse().map_err(|e| bad(format!("jobs: {e}")))?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(o)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            n: other.n.or(self.n),
            v: other.v.or(self.v),
            lambda: other.lambda.or(self.lambda),
            method: other.method.or(self.method),
            out_dir: other.out_dir.or(self.out_dir),
            jobs: other.jobs.or(self.jobs),
        }
    }

    pub fn resolve(self) -> CliResult<RunConfig> {
        let d = RunConfig::default();
        let num = |s: Option<String>, default: Rational| -> CliResult<Rational> {
            match s {
                Some(s) => parse_rational(&s).map_err(|e| CliError::Config(format!("{s}: {e}"))),
                None => Ok(default),
            }
        };
        let cfg = RunConfig {
            n: self.n.unwrap_or(d.n),
            v: num(self.v, d.v)?,
            lambda: num(self.lambda, d.lambda)?,
            method: match self.method {
                Some(m) => Method::parse(&m).map_err(|e| CliError::Config(e.to_string()))?,
                None => d.method,
            },
            out_dir: self.out_dir.unwrap_or(d.out_dir),
            jobs: self.jobs.unwrap_or(d.jobs),
        };
        if cfg.n < 2 {
            return Err(CliError::Config(format!(
                "grid size {} is too small",
                cfg.n
            )));
        }
        if cfg.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        Ok(cfg)
    }
}

impl RunConfig {
    /// Aborts unless the discrete threshold implies the continuous one.
    pub fn check_gate(&self) -> CliResult<()> {
        let ok =
            cg_gate(&self.v, &self.lambda, self.n).map_err(|e| CliError::Config(e.to_string()))?;
        if ok {
            Ok(())
        } else {
            Err(CliError::Gate(format!(
                "Lambda/(1 + kappa^2 Lambda H^2) does not exceed V = {} for Lambda = {} on a {}x{} grid",
                self.v, self.lambda, self.n, self.n
            )))
        }
    }

    pub fn to_json(&self) -> ConfigJson {
        ConfigJson {
            n: self.n,
            v: self.v.to_string(),
            lambda: self.lambda.to_string(),
            method: self.method.as_str().to_string(),
        }
    }
}

/// The part of a configuration that determines certificate contents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigJson {
    pub n: u32,
    pub v: String,
    pub lambda: String,
    pub method: String,
}

impl ConfigJson {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        Overrides {
            n: Some(self.n),
            v: Some(self.v.clone()),
            lambda: Some(self.lambda.clone()),
            method: Some(self.method.clone()),
            ..Default::default()
        }
        .resolve()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pentanodal::scalar::rational::rat;

    #[test]
    fn file_then_flags() {
        let file =
            Overrides::parse("# run\ngrid = 16\nthreshold-v=12.25\nlambda = 3139/256\njobs=2\n")
                .unwrap();
        let flags = Overrides {
            n: Some(32),
            ..Default::default()
        };
        let cfg = file.merge(flags).resolve().unwrap();
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.v, rat(49, 4).unwrap());
        assert_eq!(cfg.lambda, rat(3139, 256).unwrap());
        assert_eq!(cfg.jobs, 2);
        assert_eq!(cfg.method, Method::RationalLu);
    }

    #[test]
    fn bad_lines_rejected() {
        assert!(Overrides::parse("grid 16").is_err());
        assert!(Overrides::parse("colour = red").is_err());
        assert!(Overrides {
            method: Some("lu".into()),
            ..Default::default()
        }
        .resolve()
        .is_err());
        assert!(Overrides {
            jobs: Some(0),
            ..Default::default()
        }
        .resolve()
        .is_err());
    }

    #[test]
    fn gate() {
        assert!(RunConfig::default().check_gate().is_ok());
        let high = RunConfig {
            v: rat(13, 1).unwrap(),
            ..Default::default()
        };
        assert!(matches!(high.check_gate(), Err(CliError::Gate(_))));
    }

    #[test]
    fn json_round_trip() {
        let cfg = RunConfig {
            n: 16,
            method: Method::IntervalLdlt,
            ..Default::default()
        };
        let back = cfg.to_json().to_config().unwrap();
        assert_eq!(back.n, 16);
        assert_eq!(back.method, Method::IntervalLdlt);
        assert_eq!(back.lambda, cfg.lambda);
    }
}
