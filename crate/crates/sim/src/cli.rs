//! Command-line entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use admittance_core::adaptation::{AdaptationMode, DampingMode};
use admittance_core::audit::{passivity_audit, PassivityReport, DEFAULT_TOLERANCE};
use admittance_core::calibrate::calibrate_stiffness;
use admittance_core::sim::{run_scenario, RunError, Scenario, Trace};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus;
use crate::csv_trace::{read_trace_file, write_trace_file};
use crate::scenario_file::{parse_scenario, ScenarioError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    Runtime = 3,
    PassivityViolation = 4,
}

#[derive(Debug, Parser)]
#[command(
    name = "admittance",
    version,
    about = "Admittance control simulator with passive inertia adaptation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one scenario and write its trace as CSV.
    Run {
        /// Scenario file, or the name of a bundled scenario.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Audit passivity of the run; exit 4 on a violation.
        #[arg(long)]
        audit: bool,
        /// Audit tolerance (J).
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Audit passivity of a trace CSV.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
    /// Find the hand stiffness at which the loop loses stability.
    Calibrate {
        #[arg(long)]
        scenario: String,
        /// Stiffness known to be stable (N/m).
        #[arg(long, default_value_t = 300.0)]
        k_min: f64,
        /// Stiffness known to be unstable (N/m).
        #[arg(long, default_value_t = 200_000.0)]
        k_max: f64,
        #[arg(long, default_value_t = 14)]
        iterations: usize,
    },
    /// List the bundled scenarios, or print one.
    Corpus {
        /// Print the TOML of this scenario.
        #[arg(long)]
        show: Option<String>,
    },
    /// Run several scenarios concurrently, one CSV each.
    Batch {
        /// Scenarios to run; all bundled scenarios if omitted.
        scenarios: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        audit: bool,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Conservative,
    Tank,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DampingArg {
    Constant,
    Ratio,
}

#[derive(Debug, Clone, Copy, Args)]
struct Overrides {
    /// Adaptation rule.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Keep damping constant or keep the inertia/damping ratio constant.
    #[arg(long, value_enum)]
    damping_mode: Option<DampingArg>,
    /// Disable adaptation.
    #[arg(long)]
    no_adapt: bool,
}

impl Overrides {
    fn apply(&self, sc: &mut Scenario) {
        if let Some(mode) = self.mode {
            sc.adaptation.mode = match mode {
                ModeArg::Conservative => AdaptationMode::Conservative,
                ModeArg::Tank => AdaptationMode::Tank,
            };
        }
        if let Some(dm) = self.damping_mode {
            sc.adaptation.damping_mode = match dm {
                DampingArg::Constant => DampingMode::ConstantDamping,
                DampingArg::Ratio => DampingMode::ConstantRatio,
            };
        }
        if self.no_adapt {
            sc.adaptation.enabled = false;
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Run(RunError),
    #[error("{0}")]
    Output(String),
    #[error("passivity violated: {0}")]
    Passivity(String),
}

impl Failure {
    fn exit(&self) -> Exit {
        match self {
            Failure::Scenario(_) | Failure::Run(RunError::Invalid(_)) => Exit::Validation,
            Failure::Run(RunError::Aborted { .. }) | Failure::Output(_) => Exit::Runtime,
            Failure::Passivity(_) => Exit::PassivityViolation,
        }
    }
}

/// Loads a scenario from a file, falling back to the bundled corpus.
pub fn load_scenario(arg: &str) -> Result<Scenario, ScenarioError> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(parsed) = corpus::load(arg) {
            return parsed;
        }
    }
    parse_scenario(path)
}

fn describe_audit(r: &PassivityReport) -> String {
    format!(
        "W(0) = {:.6} J, work = {:.6} J, min margin = {:.6} J, tolerance = {} J, violations = {}",
        r.w0,
        r.work,
        r.min_margin,
        r.tolerance,
        r.violation_times.len()
    )
}

fn summary(sc: &Scenario, trace: &Trace) -> String {
    let flagged = trace.records.iter().filter(|r| r.flag).count();
    let first = trace.first_flag_after(0.0);
    let last = trace.records.iter().rev().find(|r| r.flag).map(|r| r.t);
    let end = trace.records.last();
    let fmt = |t: Option<f64>| t.map_or("-".to_string(), |t| format!("{t:.3}"));
    format!(
        "{}: {} ticks, flagged ticks {}, first flag {} s, last flag {} s, adaptations {}, \
         final m0 = {:.4}, final d0 = {:.4}, final T = {:.4} J, velocity clamps {}",
        sc.name,
        trace.len(),
        flagged,
        fmt(first),
        fmt(last),
        trace.plans.len(),
        end.map_or(0.0, |r| r.m[0]),
        end.map_or(0.0, |r| r.d[0]),
        end.map_or(0.0, |r| r.tank_t),
        trace.velocity_clamps
    )
}

fn write_csv(trace: &Trace, out: &Path) -> Result<(), Failure> {
    write_trace_file(trace, out).map_err(|e| Failure::Output(e.to_string()))
}

/// Runs one scenario to a CSV file. Returns the summary line.
fn run_one(
    mut sc: Scenario,
    overrides: &Overrides,
    out: &Path,
    audit: Option<f64>,
) -> Result<String, Failure> {
    overrides.apply(&mut sc);
    let trace = match run_scenario(&sc) {
        Ok(trace) => trace,
        Err(RunError::Aborted { t, cause, partial }) => {
            write_csv(&partial, out)?;
            return Err(Failure::Run(RunError::Aborted {
                t,
                cause,
                partial: Box::default(),
            }));
        }
        Err(e) => return Err(Failure::Run(e)),
    };
    write_csv(&trace, out)?;
    let mut text = summary(&sc, &trace);
    if let Some(tol) = audit {
        let report = passivity_audit(&trace, tol);
        if report.violation {
            return Err(Failure::Passivity(describe_audit(&report)));
        }
        text.push_str(&format!("\npassive: {}", describe_audit(&report)));
    }
    Ok(text)
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    let say = |out: &mut dyn Write, s: &str| {
        // a closed stdout is not worth failing the run for
        let _ = writeln!(out, "{s}");
    };
    match cmd {
        Command::Run {
            scenario,
            out: path,
            overrides,
            audit,
            tolerance,
        } => {
            let sc = load_scenario(&scenario)?;
            let text = run_one(sc, &overrides, &path, audit.then_some(tolerance))?;
            say(out, &text);
        }
        Command::Audit { trace, tolerance } => {
            let trace = read_trace_file(&trace).map_err(|e| Failure::Output(e.to_string()))?;
            let report = passivity_audit(&trace, tolerance);
            if report.violation {
                return Err(Failure::Passivity(describe_audit(&report)));
            }
            say(out, &format!("passive: {}", describe_audit(&report)));
        }
        Command::Calibrate {
            scenario,
            k_min,
            k_max,
            iterations,
        } => {
            let sc = load_scenario(&scenario)?;
            let cal = calibrate_stiffness(&sc, k_min, k_max, iterations).map_err(Failure::Run)?;
            say(out, "k_N_per_m,growth");
            for s in &cal.samples {
                say(out, &format!("{},{}", s.k, s.growth));
            }
            say(
                out,
                &format!(
                    "critical stiffness between {:.1} and {:.1} N/m",
                    cal.stable_k, cal.critical_k
                ),
            );
        }
        Command::Corpus { show } => match show {
            Some(name) => {
                let text = corpus::source(&name).ok_or_else(|| ScenarioError::Validation {
                    field: "name".to_string(),
                    reason: format!("no bundled scenario called {name}"),
                })?;
                say(out, text.trim_end());
            }
            None => corpus::NAMES.iter().for_each(|n| say(out, n)),
        },
        Command::Batch {
            scenarios,
            out_dir,
            overrides,
            audit,
            tolerance,
        } => {
            let names: Vec<String> = if scenarios.is_empty() {
                corpus::NAMES.iter().map(|s| s.to_string()).collect()
            } else {
                scenarios
            };
            let loaded = names
                .iter()
                .map(|n| load_scenario(n))
                .collect::<Result<Vec<_>, _>>()?;
            std::fs::create_dir_all(&out_dir).map_err(|e| Failure::Output(e.to_string()))?;
            let results: Vec<Result<String, Failure>> = std::thread::scope(|s| {
                let handles: Vec<_> = loaded
                    .into_iter()
                    .map(|sc| {
                        let path = out_dir.join(format!("{}.csv", sc.name));
                        s.spawn(move || run_one(sc, &overrides, &path, audit.then_some(tolerance)))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("scenario thread panicked"))
                    .collect()
            });
            let mut worst: Option<Failure> = None;
            for r in results {
                match r {
                    Ok(text) => say(out, &text),
                    Err(e) => {
                        say(out, &format!("error: {e}"));
                        if worst
                            .as_ref()
                            .is_none_or(|w| e.exit() as u8 > w.exit() as u8)
                        {
                            worst = Some(e);
                        }
                    }
                }
            }
            if let Some(e) = worst {
                return Err(e);
            }
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    Exit::Ok
                }
                _ => {
                    let _ = write!(err, "{text}");
                    Exit::Usage
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => Exit::Ok,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit()
        }
    }
}
