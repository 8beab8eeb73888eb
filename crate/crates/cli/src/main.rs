//! `txxx`: runs a verification suite on a JSON problem configuration and
//! prints the report as JSON. Exit status 0 when every check passes, 1 when
//! a check fails, 2 on a configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use twisted_xxx::suite::{run_with_threads, Command, Report, RunConfig};
use twisted_xxx::C64;

#[derive(Debug, Parser)]
#[command(name = "txxx", version, about = "Verification suites for the twisted XXX spin chain")]
struct Cli {
    /// verify-izergin, verify-oracle, verify-appendices, solve-bethe,
    /// scalar-product, norm, spectrum-check or verify-all.
    #[arg(value_parser = parse_command)]
    command: Command,

    /// JSON run configuration; the built-in three-site sample when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads; 1 gives byte-reproducible reports.
    #[arg(long)]
    threads: Option<usize>,

    /// Also write the report to this file.
    #[arg(long)]
    json_out: Option<PathBuf>,

    /// JSON list of [re, im] Bethe roots.
    #[arg(long)]
    u: Option<PathBuf>,

    /// JSON list of [re, im] dual parameters.
    #[arg(long)]
    v: Option<PathBuf>,

    /// Spectral points used to certify each Bethe solution.
    #[arg(long)]
    z_samples: Option<usize>,

    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| format!("{}: at `{}`: {}", path.display(), e.path(), e.inner()))
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(p) => read_json::<RunConfig>(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(z) = cli.z_samples {
        cfg.inputs.z_samples = z;
    }
    if let Some(p) = &cli.u {
        cfg.inputs.u = Some(read_json::<Vec<C64>>(p)?);
    }
    if let Some(p) = &cli.v {
        cfg.inputs.v = Some(read_json::<Vec<C64>>(p)?);
    }
    cfg.validate().map_err(|e| format!("invalid configuration: {e}"))?;
    Ok(cfg)
}

fn summarize(report: &Report) {
    for r in &report.records {
        eprintln!(
            "{} {:<40} rel {:.2e} tol {:.0e} ({} samples)",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.max_rel_err,
            r.tolerance,
            r.samples
        );
        if !r.pass {
            for n in &r.notes {
                eprintln!("     {n}");
            }
        }
    }
    eprintln!(
        "{}: {} in {:.2} s",
        report.command,
        if report.pass { "pass" } else { "FAIL" },
        report.wall_time_s
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if cli.print_config {
        println!("{}", cfg.to_json());
        return ExitCode::SUCCESS;
    }
    let report = match run_with_threads(cli.command, &cfg, cli.threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let json = report.to_json();
    println!("{json}");
    if let Some(p) = &cli.json_out {
        if let Err(e) = std::fs::write(p, format!("{json}\n")) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(2);
        }
    }
    summarize(&report);
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
