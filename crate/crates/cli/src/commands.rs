//! Drivers behind each subcommand. They return data; printing and exit
//! codes are left to `main`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use pentanodal::certify::{
    certify_domain, certify_system, matrix_threshold_for, BackendOptions, Evidence, Method,
};
use pentanodal::closedform::{run_suite, SuiteCheck};
use pentanodal::embedded::{chain, reference_eigs, reference_margin, ChainDomain};
use pentanodal::fem::discretize;
use pentanodal::geometry::{render_svg, DomainJson, DomainKind, SubdomainSpec};
use pentanodal::scalar::int;
use pentanodal::scalar::rational::to_f64;
use pentanodal::search::{round_svg, run_search_at, SearchReport, DEFAULT_MAX_ROUNDS};
use rayon::prelude::*;
use serde::Serialize;

use crate::certfile::{CertificateFile, Entry};
use crate::config::RunConfig;
use crate::{CliError, CliResult};

fn pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Certifies every domain of the embedded chain. Progress goes to stderr.
pub fn certify_all(cfg: &RunConfig) -> CliResult<CertificateFile> {
    cfg.check_gate()?;
    let domains = chain(cfg.n).map_err(CliError::Core)?;
    let required = domains.len();
    let entries: Vec<Entry> = pool(cfg.jobs)?.install(|| {
        domains
            .par_iter()
            .map(|d| {
                let t = Instant::now();
                let certificate = certify_domain(&d.domain, &cfg.v, &cfg.lambda, cfg.method)
                    .map_err(|source| CliError::Domain {
                        domain: d.name.clone(),
                        source,
                    })?;
                eprintln!(
                    "{:<9} {:<14} {:.1}s",
                    d.name,
                    certificate.verdict,
                    t.elapsed().as_secs_f64()
                );
                Ok(Entry {
                    name: d.name.clone(),
                    certificate,
                })
            })
            .collect::<CliResult<Vec<_>>>()
    })?;
    CertificateFile::new(cfg, entries, required, now())
}

pub fn certificate_path(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.join("certificates.json")
}

pub fn write_certificates(cfg: &RunConfig, file: &CertificateFile) -> CliResult<PathBuf> {
    ensure_dir(&cfg.out_dir)?;
    let path = certificate_path(cfg);
    file.write(&path)?;
    Ok(path)
}

/// Loads and re-verifies a certificate file; returns the disagreements.
pub fn check_cert(path: &Path, jobs: usize) -> CliResult<Vec<String>> {
    let file = CertificateFile::load(path)?;
    pool(jobs)?.install(|| file.check())
}

/// One line of the eigenvalue tables, in the units of the scaled triangle.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub name: String,
    pub first: (f64, f64),
    pub second: Option<(f64, f64)>,
    pub verified_mid: f64,
    pub verified_radius: f64,
    pub margin: f64,
    pub reference_first: Option<f64>,
    pub reference_margin: Option<f64>,
}

/// Sturm brackets for the two lowest eigenvalues, in outer units.
pub fn sturm_brackets(d: &SubdomainSpec, brackets: usize) -> CliResult<Vec<(f64, f64)>> {
    let s = discretize(d).map_err(CliError::Core)?;
    let conv = 16384.0 / to_f64(&s.sigma);
    let opts = BackendOptions {
        brackets,
        ..Default::default()
    };
    // The threshold only affects the verdict, not the brackets.
    let out = certify_system(&s, &int(0), Method::SturmBisect, &opts).map_err(CliError::Core)?;
    match out.evidence {
        Evidence::SturmBisect { brackets, .. } => Ok(brackets
            .iter()
            .map(|b| (to_f64(&b.lo) * conv, to_f64(&b.hi) * conv))
            .collect()),
        _ => Err(CliError::Parse("unexpected evidence kind".into())),
    }
}

/// Verified enclosure of the lowest eigenvalue in outer units: `(mid, radius)`.
pub fn verified_enclosure(d: &SubdomainSpec, cfg: &RunConfig) -> CliResult<(f64, f64)> {
    let s = discretize(d).map_err(CliError::Core)?;
    let conv = 16384.0 / to_f64(&s.sigma);
    let theta = matrix_threshold_for(&cfg.lambda, &s.sigma)
        .map_err(CliError::Core)?
        .theta;
    let out = certify_system(
        &s,
        &theta,
        Method::VerifiedEigenpair,
        &BackendOptions::default(),
    )
    .map_err(CliError::Core)?;
    match out.evidence {
        Evidence::VerifiedEigenpair { eigenvalue, .. } => {
            // Widen by the conversion so the radius is an honest bound in outer units.
            let lo = eigenvalue.lo() * conv;
            let hi = eigenvalue.hi() * conv;
            let mid = 0.5 * (lo + hi);
            Ok((mid, (hi - mid).max(mid - lo) * (1.0 + 4.0 * f64::EPSILON)))
        }
        _ => Err(CliError::Domain {
            domain: d.id(),
            source: pentanodal::Error::NoConvergence(
                out.advice.unwrap_or_else(|| "no enclosure".into()),
            ),
        }),
    }
}

fn table_row(d: &ChainDomain, cfg: &RunConfig) -> CliResult<TableRow> {
    let br = sturm_brackets(&d.domain, 2).map_err(|e| tag(&d.name, e))?;
    let (mid, rad) = verified_enclosure(&d.domain, cfg).map_err(|e| tag(&d.name, e))?;
    let margin = mid - rad - to_f64(&cfg.lambda);
    let first = *br
        .first()
        .ok_or_else(|| CliError::Parse(format!("{}: no bracket", d.name)))?;
    let refs = if cfg.n == pentanodal::geometry::DEFAULT_N {
        reference_eigs(d.kind, d.index)
    } else {
        None
    };
    Ok(TableRow {
        name: d.name.clone(),
        first,
        second: br.get(1).copied(),
        verified_mid: mid,
        verified_radius: rad,
        margin,
        reference_first: refs.map(|r| r.0),
        reference_margin: if cfg.n == pentanodal::geometry::DEFAULT_N {
            reference_margin(d.kind, d.index)
        } else {
            None
        },
    })
}

fn tag(name: &str, e: CliError) -> CliError {
    match e {
        CliError::Core(source) => CliError::Domain {
            domain: name.to_string(),
            source,
        },
        other => other,
    }
}

/// Eigenvalue tables for the whole chain.
pub fn tables(cfg: &RunConfig) -> CliResult<Vec<TableRow>> {
    let domains = chain(cfg.n).map_err(CliError::Core)?;
    pool(cfg.jobs)?.install(|| domains.par_iter().map(|d| table_row(d, cfg)).collect())
}

pub fn format_tables(rows: &[TableRow]) -> String {
    let mut out = String::new();
    for kind in [DomainKind::Upper, DomainKind::Lower] {
        let prefix = format!("{}-", kind.as_str());
        let _ = writeln!(out, "{} domains", kind.as_str());
        let _ = writeln!(
            out,
            "{:<9} {:>15} {:>10} {:>15} {:>10} {:>15} {:>10} {:>14}",
            "domain", "lambda_1", "width", "lambda_2", "width", "verified", "radius", "margin"
        );
        for r in rows.iter().filter(|r| r.name.starts_with(&prefix)) {
            let (s2, w2) = match r.second {
                Some((lo, hi)) => (
                    format!("{:.8}", 0.5 * (lo + hi)),
                    format!("{:.2e}", hi - lo),
                ),
                None => ("-".into(), "-".into()),
            };
            let _ = writeln!(
                out,
                "{:<9} {:>15.8} {:>10.2e} {:>15} {:>10} {:>15.10} {:>10.2e} {:>14.8e}",
                r.name,
                0.5 * (r.first.0 + r.first.1),
                r.first.1 - r.first.0,
                s2,
                w2,
                r.verified_mid,
                r.verified_radius,
                r.margin
            );
        }
        out.push('\n');
    }
    out
}

/// Runs the search against the configured discrete threshold and writes its
/// report and one picture per half-round.
pub fn search(cfg: &RunConfig) -> CliResult<SearchReport> {
    let report = pool(cfg.jobs)?
        .install(|| {
            run_search_at(
                cfg.n,
                to_f64(&cfg.v),
                to_f64(&cfg.lambda),
                DEFAULT_MAX_ROUNDS,
            )
        })
        .map_err(CliError::Core)?;
    ensure_dir(&cfg.out_dir)?;
    let path = cfg.out_dir.join("search.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Parse(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;
    for i in 0..report.trace.len() {
        let svg = round_svg(&report, i).map_err(CliError::Core)?;
        let path = cfg.out_dir.join(format!("search-{i:02}.svg"));
        std::fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
    }
    Ok(report)
}

pub fn closedform() -> Vec<SuiteCheck> {
    run_suite()
}

pub fn format_suite(rows: &[SuiteCheck]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {}  {}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.detail
        );
    }
    out
}

/// Resolves `what` as a chain name such as `upper-3` or a domain JSON file.
pub fn resolve_domain(what: &str, n: u32) -> CliResult<SubdomainSpec> {
    let path = Path::new(what);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let j: DomainJson =
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{what}: {e}")))?;
        return SubdomainSpec::from_json(&j).map_err(CliError::Core);
    }
    let domains = chain(n).map_err(CliError::Core)?;
    domains
        .into_iter()
        .find(|d| d.name == what)
        .map(|d| d.domain)
        .ok_or_else(|| {
            CliError::Config(format!(
                "{what:?} is neither a file nor a chain domain name"
            ))
        })
}

pub fn render(what: &str, out: &Path, n: u32) -> CliResult<()> {
    let d = resolve_domain(what, n)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    std::fs::write(out, render_svg(&d)).map_err(|e| io_err(out, e))
}
