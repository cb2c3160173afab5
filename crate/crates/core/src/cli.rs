//! `binlogit` command-line front end.
//!
//! Exit codes: 0 estimate exists, 1 input or tool error, 2 separated,
//! 3 rank condition failed, 4 forced fit on data without a maximizer.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::detector::{
    detect_panel_separation, detect_pooled_separation, CheckKind, DetectOptions, ExistenceReport,
    Status,
};
use crate::error::Error;
use crate::estimator::{fit, CmleFit, FitOptions};
use crate::panel::load_csv;
use crate::report::{to_json, CliReport, ReportOptions};
use crate::simulate::{existence_rate, FrequencyReport, SimConfig};

pub const EXIT_EXISTS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SEPARATED: i32 = 2;
pub const EXIT_RANK: i32 = 3;
pub const EXIT_FORCED: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "binlogit", version, about = "Existence checks and conditional MLE for the fixed-effects binary logit")]
struct Cli {
    /// Decision tolerance on the normalized QP minimum.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Newton iteration cap for `fit`, QP iteration cap otherwise.
    #[arg(long, global = true)]
    max_iter: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,
    /// Seed for rank probes and simulation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide whether the conditional MLE exists and is unique.
    Check { csv: PathBuf },
    /// Estimate the conditional MLE behind the existence gate.
    Fit {
        csv: PathBuf,
        /// Run Newton even when the estimate does not exist.
        #[arg(long)]
        force: bool,
    },
    /// Cross-sectional separation check on the stacked observations.
    PooledCheck { csv: PathBuf },
    /// Existence frequencies on simulated panels.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long = "T", alias = "periods")]
        periods: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        /// One value per covariate, or a single value for all.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        beta0: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        effect_scale: f64,
        #[arg(long, default_value_t = 100)]
        reps: usize,
    },
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_EXISTS };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    if !(cli.tol > 0.0 && cli.tol.is_finite()) {
        let _ = writeln!(err, "error: --tol must be a positive number");
        return EXIT_INPUT;
    }

    let options = ReportOptions {
        tol: cli.tol,
        seed: cli.seed,
        max_iter: cli.max_iter,
        force: match cli.command {
            Command::Fit { force, .. } => Some(force),
            _ => None,
        },
    };
    let mut detect = DetectOptions::default().with_tol(cli.tol).with_seed(cli.seed);

    let (name, input) = match &cli.command {
        Command::Check { csv } => ("check", Some(csv.clone())),
        Command::Fit { csv, .. } => ("fit", Some(csv.clone())),
        Command::PooledCheck { csv } => ("pooled-check", Some(csv.clone())),
        Command::Simulate { .. } => ("simulate", None),
    };
    let mut report = CliReport::new(name, options);
    report.input = input.as_ref().map(|p| p.display().to_string());

    let outcome = match &cli.command {
        Command::Check { csv } | Command::PooledCheck { csv } => {
            if let Some(m) = cli.max_iter {
                detect = detect.with_max_iter(m);
            }
            let pooled = matches!(cli.command, Command::PooledCheck { .. });
            cmd_check(csv, &detect, pooled, &mut report)
        }
        Command::Fit { csv, force } => {
            let mut opts = FitOptions {
                force: *force,
                detect,
                ..FitOptions::default()
            };
            if let Some(m) = cli.max_iter {
                opts.max_iter = m as usize;
            }
            cmd_fit(csv, &opts, &mut report)
        }
        Command::Simulate {
            n,
            periods,
            p,
            beta0,
            effect_scale,
            reps,
        } => {
            let beta0 = if beta0.len() == 1 { vec![beta0[0]; *p] } else { beta0.clone() };
            let config = SimConfig {
                n: *n,
                periods: *periods,
                dim: *p,
                beta0,
                effect_scale: *effect_scale,
                replications: *reps,
                seed: cli.seed,
            };
            cmd_simulate(&config, &detect, &mut report)
        }
    };

    let text = match outcome {
        Ok(text) => text,
        Err(e) => {
            report.exit_code = EXIT_INPUT;
            report.message = Some(e.to_string());
            let _ = writeln!(err, "error: {e}");
            String::new()
        }
    };
    match cli.output {
        OutputFormat::Text => {
            let _ = write!(out, "{text}");
        }
        OutputFormat::Json => match to_json(&report) {
            Ok(json) => {
                let _ = writeln!(out, "{json}");
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_INPUT;
            }
        },
    }
    report.exit_code
}

fn status_code(status: Status) -> i32 {
    match status {
        Status::ExistsUnique => EXIT_EXISTS,
        Status::Separated => EXIT_SEPARATED,
        Status::RankDeficient => EXIT_RANK,
    }
}

fn cmd_check(path: &Path, opts: &DetectOptions, pooled: bool, report: &mut CliReport) -> Result<String, Error> {
    let data = load_csv(path)?;
    let existence = if pooled {
        detect_pooled_separation(&data, opts)?
    } else {
        detect_panel_separation(&data, opts)?
    };
    report.exit_code = status_code(existence.status);
    let text = render_existence(&existence);
    report.existence = Some(existence);
    Ok(text)
}

const NONEXISTENCE_NOTE: &str =
    "Any numbers a solver returns on these data are informative only about the nonexistence of the estimate.";

fn cmd_fit(path: &Path, opts: &FitOptions, report: &mut CliReport) -> Result<String, Error> {
    let data = load_csv(path)?;
    match fit(&data, opts) {
        Ok(f) => {
            report.exit_code = if f.converged { EXIT_EXISTS } else { EXIT_FORCED };
            let text = render_fit(&f);
            report.fit = Some(f);
            Ok(text)
        }
        Err(e) => match e.report() {
            Some(gate) => {
                report.exit_code = status_code(gate.status);
                report.message = Some(format!("{e}; no estimate reported. {NONEXISTENCE_NOTE}"));
                let text = format!("{}{e}; no estimate reported. {NONEXISTENCE_NOTE}\n", render_existence(gate));
                report.existence = Some(gate.clone());
                Ok(text)
            }
            None => Err(e),
        },
    }
}

fn cmd_simulate(config: &SimConfig, opts: &DetectOptions, report: &mut CliReport) -> Result<String, Error> {
    let freq = existence_rate(config, opts)?;
    let text = render_simulation(&freq);
    report.simulation = Some(freq);
    Ok(text)
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn render_existence(r: &ExistenceReport) -> String {
    let mut s = String::new();
    let what = match r.kind {
        CheckKind::Panel => "conditional logit with fixed effects",
        CheckKind::Pooled => "pooled logit with intercept",
    };
    let _ = writeln!(s, "{}  ({what})", r.status.banner());
    match r.kind {
        CheckKind::Panel => {
            let _ = writeln!(
                s,
                "  informative individuals: {} ({} dropped as non-informative)",
                r.units, r.dropped
            );
        }
        CheckKind::Pooled => {
            let _ = writeln!(s, "  observations: {}", r.units);
        }
    }
    let _ = writeln!(
        s,
        "  rank condition ({} probe{}): {}, rank {} of {}",
        r.rank.probes.len(),
        if r.rank.probes.len() == 1 { "" } else { "s" },
        if r.rank.ok { "ok" } else { "FAILED" },
        r.rank.rank,
        r.rank.dim
    );
    let _ = writeln!(
        s,
        "  QP minimum on normalized vectors: {:.6e} (tol {:.1e}; {} constraint vectors, {} iterations)",
        r.qp_min, r.tol, r.constraints, r.iterations
    );
    if let Some(d) = &r.direction {
        let _ = writeln!(s, "  separating direction: {}", fmt_vec(d));
        if let (Some(k), Some(ok)) = (r.kkt_min, r.certificate_ok) {
            let _ = writeln!(
                s,
                "  KKT certificate: min direction'w = {k:.3e} ({})",
                if ok { "ok" } else { "FAILED" }
            );
        }
        if r.kind == CheckKind::Panel && r.status == Status::Separated {
            let _ = writeln!(
                s,
                "  the conditional log-likelihood rises toward 0 along the negated direction"
            );
        }
    }
    if let Some(m) = &r.message {
        let _ = writeln!(s, "  note: {m}");
    }
    s
}

pub fn render_fit(f: &CmleFit) -> String {
    let mut s = String::new();
    if f.spurious {
        let _ = writeln!(s, "SPURIOUS: {} data", f.gate.status.banner().to_lowercase());
    } else if f.converged {
        let _ = writeln!(s, "EXISTS  (conditional MLE)");
    } else {
        let _ = writeln!(s, "NOT CONVERGED");
    }
    let _ = writeln!(s, "  {:<6} {:>16} {:>16}", "coef", "estimate", "std. error");
    for (j, b) in f.beta_hat.iter().enumerate() {
        let se = f.std_errors[j].map_or("n/a".to_owned(), |v| format!("{v:.6e}"));
        let _ = writeln!(s, "  x{:<5} {:>16.8} {:>16}", j + 1, b, se);
    }
    let _ = writeln!(s, "  log-likelihood: {:.10}", f.loglik);
    let _ = writeln!(
        s,
        "  iterations: {}, score sup-norm: {:.3e}, |beta|: {:.6}",
        f.iterations, f.gradient_norm, f.beta_norm
    );
    if f.spurious {
        let _ = writeln!(s, "  {NONEXISTENCE_NOTE}");
    }
    s
}

pub fn render_simulation(r: &FrequencyReport) -> String {
    let c = &r.config;
    format!(
        "n={} T={} p={} reps={} seed={} panel_exists={:.4} pooled_exists={:.4} mean_panel_qp_min={} mean_pooled_qp_min={:.6e}\n",
        c.n,
        c.periods,
        c.dim,
        c.replications,
        c.seed,
        r.panel_existence,
        r.pooled_existence,
        r.mean_panel_qp_min.map_or("n/a".into(), |v| format!("{v:.6e}")),
        r.mean_pooled_qp_min
    )
}
