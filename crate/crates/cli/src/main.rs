use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pentanodal::search::SearchStatus;
use pentanodal_cli::commands;
use pentanodal_cli::config::{Overrides, RunConfig};
use pentanodal_cli::{exit, CliResult};

#[derive(Parser)]
#[command(
    name = "pentanodal",
    version,
    about = "Validated eigenvalue certificates for staircase subdomains"
)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// key=value configuration file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid size N.
    #[arg(long = "grid", global = true)]
    grid: Option<u32>,
    /// Continuous threshold V, as p/q or a decimal.
    #[arg(long = "threshold-v", global = true)]
    threshold_v: Option<String>,
    /// Discrete threshold Lambda, as p/q or a decimal.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// rational-lu, interval-ldlt, sturm or verified.
    #[arg(long, global = true)]
    method: Option<String>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify every domain of the embedded chain and write certificates.json.
    CertifyAll,
    /// Re-verify a certificate file.
    CheckCert { file: PathBuf },
    /// Eigenvalue enclosures and margins for the chain.
    Tables,
    /// Run the exclusion-region search.
    Search,
    /// Run the closed-form identity suite.
    Closedform,
    /// Draw a domain (chain name or domain JSON file) as SVG.
    Render { domain: String, output: PathBuf },
}

impl Flags {
    fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(p) => Overrides::load(p)?,
            None => Overrides::default(),
        };
        base.merge(Overrides {
            n: self.grid,
            v: self.threshold_v.clone(),
            lambda: self.lambda.clone(),
            method: self.method.clone(),
            out_dir: self.out.clone(),
            jobs: self.jobs,
        })
        .resolve()
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    let cfg = cli.flags.resolve()?;
    match cli.command {
        Command::CertifyAll => {
            let file = commands::certify_all(&cfg)?;
            let path = commands::write_certificates(&cfg, &file)?;
            println!("wrote {}", path.display());
            println!(
                "{} of {} certificates true",
                file.summary.passed, file.summary.required
            );
            if file.summary.verdict {
                Ok(exit::OK)
            } else {
                for name in &file.summary.failing {
                    println!("not certified: {name}");
                }
                Ok(exit::CERTIFICATION_FAILED)
            }
        }
        Command::CheckCert { file } => {
            let diffs = commands::check_cert(&file, cfg.jobs)?;
            if diffs.is_empty() {
                println!("{}: all certificates re-verified", file.display());
                Ok(exit::OK)
            } else {
                for d in &diffs {
                    println!("{d}");
                }
                Ok(exit::CHECK_FAILED)
            }
        }
        Command::Tables => {
            let rows = commands::tables(&cfg)?;
            print!("{}", commands::format_tables(&rows));
            Ok(if rows.iter().all(|r| r.margin > 0.0) {
                exit::OK
            } else {
                exit::TABLES_FAILED
            })
        }
        Command::Search => {
            let report = commands::search(&cfg)?;
            println!(
                "status: {:?} after {} rounds, {} evaluations",
                report.status, report.rounds, report.evaluations
            );
            println!("discrete threshold: {}", report.discrete_threshold);
            println!(
                "p_L: {:?}",
                report
                    .p_lower
                    .iter()
                    .map(|p| (p.i, p.j))
                    .collect::<Vec<_>>()
            );
            println!(
                "p_U: {:?}",
                report
                    .p_upper
                    .iter()
                    .map(|p| (p.i, p.j))
                    .collect::<Vec<_>>()
            );
            println!("matches the embedded lists: {}", report.matches_embedded);
            if let Some(d) = &report.diagnostic {
                println!("{d}");
            }
            println!("wrote {}", cfg.out_dir.join("search.json").display());
            Ok(if report.status == SearchStatus::Success {
                exit::OK
            } else {
                exit::SEARCH_FAILED
            })
        }
        Command::Closedform => {
            let rows = commands::closedform();
            print!("{}", commands::format_suite(&rows));
            Ok(if rows.iter().all(|r| r.passed) {
                exit::OK
            } else {
                exit::CLOSEDFORM_FAILED
            })
        }
        Command::Render { domain, output } => {
            commands::render(&domain, &output, cfg.n)?;
            println!("wrote {}", output.display());
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
