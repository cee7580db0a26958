//! Config-driven command-line front end for `svie-core`.
//!
//! Every subcommand reads one configuration file, writes a CSV table and a
//! plain-text report next to it, and maps the verdict to an exit code:
//! `0` for PASS or informational output, `1` for a rate-window FAIL and `2`
//! for usage, configuration or runtime errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use svie_core::config::{parse_config, ExperimentConfig, Method, Statistic};
use svie_core::experiments::covariance::{covariance_error_mc, covariance_rate_exact};
use svie_core::experiments::holder::holder_estimate;
use svie_core::experiments::strong::{strong_error_mc, strong_rate_exact};
use svie_core::experiments::weak::{weak_error_mc, weak_rate_exact};
use svie_core::experiments::{RateTable, Verdict};
use svie_core::quadrature::weights_closed_form;
use svie_core::reference::Resolvent;
use svie_core::scheme::Simulator;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "svie", version, about = "Convergence experiments for stochastic Volterra equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// CSV output path; the report goes to the same path with extension
    /// `.report`. Without it the CSV is written to stdout and the report to
    /// stderr.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Overrides `experiment.seed`.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Caps the number of worker threads.
    #[arg(long, global = true, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Convolution quadrature weights ω_0..ω_N for k = t_end / n_steps.
    Weights,
    /// Scalar resolvent s(t) of `experiment.mode` on the time grid.
    Resolvent,
    /// One sample path (path index 0).
    Simulate {
        /// Comma-separated times to record; defaults to every node.
        #[arg(long, value_delimiter = ',', value_name = "T1,T2,...")]
        record: Option<Vec<f64>>,
    },
    /// Strong error ladder and fitted rate.
    StrongRate,
    /// Weak error ladder of the configured functional and fitted rate.
    WeakRate,
    /// Covariance error ladder of the two configured observations.
    Covariance,
    /// Empirical Hölder exponent of the paths in L^p.
    Holder,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Weights => "weights",
            Self::Resolvent => "resolvent",
            Self::Simulate { .. } => "simulate",
            Self::StrongRate => "strong-rate",
            Self::WeakRate => "weak-rate",
            Self::Covariance => "covariance",
            Self::Holder => "holder",
        }
    }
}

/// Result of one subcommand before it is written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub csv: String,
    pub verdict: Verdict,
    pub verdict_line: String,
    /// Extra `key = value` lines for the report.
    pub details: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn informational(csv: String, line: &str) -> Output {
    Output { csv, verdict: Verdict::Informational, verdict_line: format!("INFO {line}"), details: Vec::new() }
}

fn rate_output(table: RateTable) -> Output {
    let mut csv = String::from("level,h,k,error,stderr\n");
    for r in &table.rows {
        let _ = writeln!(csv, "{},{},{},{},{}", r.level, num(r.h), num(r.k), num(r.error), num(r.stderr));
    }
    let mut details = Vec::new();
    if let Some(fit) = table.fit {
        details.push(format!("slope = {}", fit.slope));
        details.push(format!("intercept = {}", fit.intercept));
        details.push(format!("r_squared = {}", fit.r_squared));
    }
    if let Some(w) = table.window {
        details.push(format!("window = [{}, {}] around {}", w.lower(), w.upper(), w.target));
    }
    if let Some(note) = &table.note {
        details.push(format!("note = {note}"));
    }
    Output { csv, verdict: table.verdict(), verdict_line: table.verdict_line(), details }
}

/// Run one subcommand on a validated configuration.
pub fn execute(command: &Command, config: &ExperimentConfig) -> Result<Output> {
    let problem = config.problem();
    let exp = &config.experiment;
    Ok(match command {
        Command::Weights => {
            let w = weights_closed_form(&config.kernel, config.t_end / config.n_steps as f64, config.n_steps)?;
            let mut csv = String::from("j,omega\n");
            for (j, v) in w.as_slice().iter().enumerate() {
                let _ = writeln!(csv, "{j},{}", num(*v));
            }
            informational(csv, &format!("{} weights for {}", w.as_slice().len(), config.kernel))
        }
        Command::Resolvent => {
            let lambda = (exp.mode as f64 * std::f64::consts::PI).powi(2);
            let s = Resolvent::new(&config.kernel, lambda, config.t_end)?;
            let grid = config.grid()?;
            let mut csv = String::from("n,t,s\n");
            for n in 0..=config.n_steps {
                let t = grid.node(n);
                let _ = writeln!(csv, "{n},{},{}", num(t), num(s.eval(t)?));
            }
            informational(csv, &format!("resolvent of mode {} (lambda = {lambda})", exp.mode))
        }
        Command::Simulate { record } => {
            let scheme = problem.config(config.space, config.base_level())?;
            let steps = config.record_steps(record.as_deref())?;
            let table = problem.increments(config.n_steps, exp.seed, 0)?;
            let traj = Simulator::new(&scheme)?.simulate(&table, &steps)?;
            let grid = scheme.grid;
            let mut csv = String::from("n,t,index,value\n");
            for (n, field) in traj.iter() {
                let t = num(grid.node(n));
                for (i, v) in field.values().iter().enumerate() {
                    let _ = writeln!(csv, "{n},{t},{},{}", i + 1, num(*v));
                }
            }
            informational(csv, &format!("{} recorded states of path 0", traj.len()))
        }
        Command::StrongRate => {
            let ladder = config.ladder()?;
            let window = Some(config.window(Statistic::Strong));
            rate_output(match exp.method {
                Method::Exact => strong_rate_exact(&problem, &ladder, exp.reference_modes, window)?,
                Method::MonteCarlo => {
                    strong_error_mc(&problem, &ladder, config.strong_reference(), config.monte_carlo()?, window)?
                }
            })
        }
        Command::WeakRate => {
            let ladder = config.ladder()?;
            let window = Some(config.window(Statistic::Weak));
            let spec = config.functional();
            rate_output(match exp.method {
                Method::Exact => weak_rate_exact(&problem, &ladder, &spec, window)?,
                Method::MonteCarlo => {
                    weak_error_mc(&problem, &ladder, &spec, exp.reference_level, config.monte_carlo()?, window)?
                }
            })
        }
        Command::Covariance => {
            let ladder = config.ladder()?;
            let window = Some(config.window(Statistic::Weak));
            let (a, b) = &exp.observations;
            rate_output(match exp.method {
                Method::Exact => covariance_rate_exact(&problem, &ladder, a, b, window)?,
                Method::MonteCarlo => {
                    covariance_error_mc(&problem, &ladder, a, b, exp.reference_level, config.monte_carlo()?, window)?
                }
            })
        }
        Command::Holder => {
            let est = holder_estimate(&problem, config.space, config.base_level(), exp.p, config.monte_carlo()?)?;
            let mut csv = String::from("lag,moment,stderr\n");
            for r in &est.rows {
                let _ = writeln!(csv, "{},{},{}", num(r.lag), num(r.moment), num(r.stderr));
            }
            let floor = config.kernel.rho() * exp.gamma / 2.0 - 0.2;
            let (verdict, line) = if config.noise.is_zero() {
                (Verdict::Informational, format!("INFO exponent {:.4} (deterministic path)", est.exponent))
            } else {
                let v = if est.exponent >= floor { Verdict::Pass } else { Verdict::Fail };
                (v, format!("{} exponent {:.4} lower bound {:.4}", v.as_str(), est.exponent, floor))
            };
            Output {
                csv,
                verdict,
                verdict_line: line,
                details: vec![format!("exponent = {}", est.exponent), format!("r_squared = {}", est.fit.r_squared)],
            }
        }
    })
}

/// Plain-text report: metadata, the verdict, the table and the config echo.
pub fn report(command: &Command, config_text: &str, seed: u64, threads: Option<u64>, output: &Output) -> String {
    let digest = hex::encode(Sha256::digest(config_text.as_bytes()));
    let mut r = String::new();
    let _ = writeln!(r, "svie {} report", command.name());
    let _ = writeln!(r, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(r, "timestamp = {}", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true));
    let _ = writeln!(r, "config_sha256 = {digest}");
    let _ = writeln!(r, "seed = {seed}");
    let _ = writeln!(r, "threads = {}", threads.map_or("default".to_string(), |t| t.to_string()));
    let _ = writeln!(r, "verdict = {}", output.verdict_line);
    for d in &output.details {
        let _ = writeln!(r, "{d}");
    }
    let _ = writeln!(r, "\n[table]");
    r.push_str(&output.csv);
    let _ = writeln!(r, "\n[config]");
    r.push_str(config_text);
    if !config_text.ends_with('\n') {
        r.push('\n');
    }
    r
}

/// Path of the report written next to a CSV output.
pub fn report_path(out: &Path) -> PathBuf {
    out.with_extension("report")
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Fail => EXIT_FAIL,
        Verdict::Pass | Verdict::Informational => EXIT_OK,
    }
}

fn load(path: &Path, seed: Option<u64>) -> std::result::Result<(String, ExperimentConfig), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut config = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(seed) = seed {
        config.experiment.seed = seed;
    }
    Ok((text, config))
}

fn execute_with_threads(command: &Command, config: &ExperimentConfig, threads: Option<u64>) -> Result<Output> {
    match threads {
        None => execute(command, config),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build()
            .context("cannot build the worker pool")?
            .install(|| execute(command, config)),
    }
}

fn write_outputs(cli: &Cli, text: &str, seed: u64, output: &Output) -> Result<()> {
    let report = report(&cli.command, text, seed, cli.threads, output);
    match &cli.out {
        Some(out) => {
            fs::write(out, &output.csv).with_context(|| format!("cannot write {}", out.display()))?;
            let rp = report_path(out);
            fs::write(&rp, report).with_context(|| format!("cannot write {}", rp.display()))?;
            println!("{}", output.verdict_line);
        }
        None => {
            print!("{}", output.csv);
            eprint!("{report}");
        }
    }
    Ok(())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: `svie {}` needs --config PATH", cli.command.name());
        return EXIT_USAGE;
    };
    let (text, config) = match load(path, cli.seed) {
        Ok(loaded) => loaded,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let output = match execute_with_threads(&cli.command, &config, cli.threads) {
        Ok(output) => output,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = write_outputs(&cli, &text, config.experiment.seed, &output) {
        eprintln!("error: {e:#}");
        return EXIT_USAGE;
    }
    exit_code(output.verdict)
}
