//! `mtd`: transport distances, inequality checks and curvature estimates
//! from JSON config files.
//!
//! Exit codes: 0 success, 1 a checked inequality failed, 2 config or input
//! error, 3 the solver did not converge (results are still written).

mod config;
mod scenario;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use markov_transport::curvature::{estimate_best_R, lsi_lower_bound};
use markov_transport::harness::VerificationReport;
use markov_transport::io::{to_json_string, write_summary_csv};
use markov_transport::transport::minimize_action_xi;
use markov_transport::{Error, XiFunction};
use serde::Serialize;

use config::{parse, CurvatureConfig, DistanceConfig, VerifyConfig};

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mtd",
    version,
    about = "Markov transport distances and inequality checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Default seed for random densities and estimators.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the progress lines on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bound on the squared transport distance between two densities.
    Distance {
        #[arg(long)]
        config: PathBuf,
        /// Weight override, `entropy` or `p=<exponent>`.
        #[arg(long)]
        xi: Option<String>,
        /// CSV dump of the optimal path.
        #[arg(long)]
        dump_path: Option<PathBuf>,
    },
    /// Run a batch of inequality checks.
    Verify {
        #[arg(long, required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in scenario list, e.g. `paper-suite`.
        #[arg(long)]
        preset: Option<String>,
        /// CSV summary, one row per report.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Curvature and log-Sobolev estimates for a model.
    Curvature {
        #[arg(long)]
        config: PathBuf,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_CONFIG,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

fn read_config(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<(), Failure> {
    let text = to_json_string(value)?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn parse_xi(text: &str) -> Result<XiFunction, Failure> {
    let xi = match text.trim() {
        "entropy" => XiFunction::Entropy,
        other => {
            let p = other
                .strip_prefix("p=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| {
                    Error::Config(format!("bad --xi '{other}', expected entropy or p=<value>"))
                })?;
            XiFunction::power(p)?
        }
    };
    Ok(xi)
}

#[derive(Serialize)]
struct DistanceOutput<'a> {
    config: &'a DistanceConfig,
    value: f64,
    distance: f64,
    xi: XiFunction,
    diagnostics: &'a markov_transport::transport::Diagnostics,
    phi_profile: &'a [f64],
}

fn distance(
    cli: &Cli,
    path: &Path,
    xi: &Option<String>,
    dump: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut cfg: DistanceConfig = parse(&read_config(path)?)?;
    if let Some(text) = xi {
        cfg.xi = Some(parse_xi(text)?);
    }
    cfg.seed.get_or_insert(cli.seed);
    let seed = cfg.seed.unwrap_or_default();
    let triple = cfg.model.build()?;
    let f = cfg.f.on_chain(&triple, seed)?;
    let g = cfg.g.on_chain(&triple, seed ^ 0x5eed)?;
    let weight = cfg.xi.unwrap_or(XiFunction::Entropy);
    let result = minimize_action_xi(&triple, &f, &g, &weight, cfg.slices, &cfg.solver)?;
    if let Some(dump) = dump {
        let mut w = BufWriter::new(File::create(dump)?);
        result.path.write_csv(&triple, &mut w)?;
        w.flush()?;
    }
    emit(
        &DistanceOutput {
            config: &cfg,
            value: result.value,
            distance: result.distance(),
            xi: weight,
            diagnostics: &result.diagnostics,
            phi_profile: &result.phi_profile,
        },
        &cli.out,
    )?;
    if !cli.quiet {
        eprintln!(
            "value {:.10e} after {} iterations",
            result.value, result.diagnostics.iterations
        );
    }
    Ok(if result.diagnostics.converged {
        0
    } else {
        EXIT_NONCONVERGENCE
    })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    config: &'a VerifyConfig,
    seed: u64,
    all_pass: bool,
    reports: &'a [VerificationReport],
}

type Outcome = Result<Vec<VerificationReport>, Error>;

/// Runs scenarios on worker threads; results keep the scenario order.
fn run_scenarios(cfg: &VerifyConfig, seed: u64, quiet: bool) -> Vec<Outcome> {
    let count = cfg.scenarios.len();
    let slots: Vec<Mutex<Option<Outcome>>> = (0..count).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(count);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let sc = &cfg.scenarios[i];
                let outcome = scenario::run(sc, &cfg.options, seed);
                if !quiet {
                    let status = match &outcome {
                        Ok(rs) if rs.iter().all(|r| r.pass() || r.is_diagnostic()) => "ok",
                        Ok(_) => "FAILED",
                        Err(_) => "error",
                    };
                    eprintln!("[{}/{count}] {} {status}", i + 1, sc.inequality_id);
                }
                *slots[i].lock().unwrap() = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every scenario ran"))
        .collect()
}

fn verify(
    cli: &Cli,
    path: &Option<PathBuf>,
    preset: &Option<String>,
    summary: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let mut cfg: VerifyConfig = match path {
        Some(p) => parse(&read_config(p)?)?,
        None => parse("{}")?,
    };
    if preset.is_some() {
        cfg.preset = preset.clone();
    }
    let cfg = cfg.resolve()?;
    let mut reports = Vec::new();
    for (sc, outcome) in cfg
        .scenarios
        .iter()
        .zip(run_scenarios(&cfg, cli.seed, cli.quiet))
    {
        match outcome {
            Ok(mut rs) => reports.append(&mut rs),
            Err(e) => {
                return Err(Failure {
                    message: format!("scenario '{}': {e}", sc.inequality_id),
                    ..Failure::from(e)
                })
            }
        }
    }
    let all_pass = reports.iter().all(|r| r.pass() || r.is_diagnostic());
    emit(
        &VerifyOutput {
            config: &cfg,
            seed: cli.seed,
            all_pass,
            reports: &reports,
        },
        &cli.out,
    )?;
    if let Some(path) = summary {
        let mut w = BufWriter::new(File::create(path)?);
        write_summary_csv(&reports, &mut w)?;
        w.flush()?;
    }
    if !cli.quiet {
        let failed = reports
            .iter()
            .filter(|r| !r.pass() && !r.is_diagnostic())
            .count();
        eprintln!("{} reports, {failed} failed", reports.len());
    }
    Ok(if all_pass { 0 } else { EXIT_FAILED })
}

#[derive(Serialize)]
struct CurvatureOutput<'a> {
    config: &'a CurvatureConfig,
    #[serde(rename = "best_R_estimate")]
    best_r_estimate: f64,
    lsi_lower_bound: f64,
    sample_count: usize,
}

fn curvature(cli: &Cli, path: &Path) -> Result<u8, Failure> {
    let mut cfg: CurvatureConfig = parse(&read_config(path)?)?;
    cfg.seed.get_or_insert(cli.seed);
    let seed = cfg.seed.unwrap_or_default();
    let triple = cfg.model.build()?;
    let best = estimate_best_R(&triple, cfg.n.0, cfg.sample_count, seed)?;
    let lsi = lsi_lower_bound(&triple, cfg.sample_count, seed)?;
    emit(
        &CurvatureOutput {
            config: &cfg,
            best_r_estimate: best,
            lsi_lower_bound: lsi,
            sample_count: cfg.sample_count,
        },
        &cli.out,
    )?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = match &cli.command {
        Command::Distance {
            config,
            xi,
            dump_path,
        } => distance(&cli, config, xi, dump_path),
        Command::Verify {
            config,
            preset,
            summary,
        } => verify(&cli, config, preset, summary),
        Command::Curvature { config } => curvature(&cli, config),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
