//! Command-line front end.

use crate::cftl::{parse_formula, CftlFormula, FormulaError};
use crate::instrument::{emit_plan, InstrumentationPlan};
use crate::lang::{parse_named, Program};
use crate::monitor::Verdict;
use crate::runtime::{evaluate_observations, run_async, run_sync, ObservationEvent, Run, VerdictReport};
use crate::scfg::{build_scfg, to_dot, Scfg};
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "cftl", version, about = "Control-flow temporal logic verification for MiniLang programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Dot,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Mode {
    #[default]
    Sync,
    Async,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the symbolic control flow graph of a program.
    Scfg {
        #[arg(long)]
        program: PathBuf,
        #[arg(long, value_enum, default_value = "dot")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the instrumentation plan for a program and property.
    Plan {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a program under the monitor and report the verdict.
    Verify {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Directory for report.json and timing.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sync")]
        mode: Mode,
        /// Write observed events as JSON lines.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Evaluate a recorded trace offline.
    CheckTrace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run a program under the monitor and print the full report.
    Report {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, value_enum, default_value = "sync")]
        mode: Mode,
    },
}

/// A failure reported with exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::True => 0,
        Verdict::False => 1,
        Verdict::Unknown => 3,
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

pub fn load_program(path: &Path) -> Result<Program, CliError> {
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_named(&name, &read(path)?).map_err(|e| CliError(format!("{}:{}:{}: {}", path.display(), e.line, e.col, e.msg)))
}

pub fn load_formula(path: &Path) -> Result<CftlFormula, CliError> {
    parse_formula(&read(path)?).map_err(|e| match e {
        FormulaError::SyntaxError { line, col, msg } => CliError(format!("{}:{line}:{col}: {msg}", path.display())),
        other => CliError(format!("{}: {other}", path.display())),
    })
}

fn plan_for(p: &Program, g: &Scfg, f: &CftlFormula, err: &mut dyn Write) -> InstrumentationPlan {
    let plan = emit_plan(f, g, p);
    if plan.points.is_empty() {
        let _ = writeln!(err, "warning: the property matches nothing in {}; the plan is empty", p.name);
    }
    plan
}

fn monitor(program: &Path, spec: &Path, mode: Mode, err: &mut dyn Write) -> Result<Run, CliError> {
    let p = load_program(program)?;
    let f = load_formula(spec)?;
    let g = build_scfg(&p);
    let plan = plan_for(&p, &g, &f, err);
    let run = match mode {
        Mode::Sync => run_sync(&p, &g, &f, &plan),
        Mode::Async => run_async(&p, &g, &f, &plan),
    };
    run.map_err(|e| CliError(format!("{}: {e}", program.display())))
}

/// Parses a trace file, naming the first bad line.
pub fn read_trace(path: &Path) -> Result<Vec<ObservationEvent>, CliError> {
    let text = read(path)?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e = ObservationEvent::from_json_line(line)
            .map_err(|m| CliError(format!("{}: line {}: {m}", path.display(), i + 1)))?;
        events.push(e);
    }
    Ok(events)
}

fn summary(r: &VerdictReport) -> String {
    format!("verdict: {} ({} monitors)", r.global, r.monitors_instantiated)
}

pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e: std::io::Error| CliError(e.to_string());
    match cli.command {
        Command::Scfg { program, format, out: target } => {
            let p = load_program(&program)?;
            let g = build_scfg(&p);
            let text = match format {
                Format::Dot => to_dot(&g),
                Format::Json => serde_json::to_string_pretty(&g.to_json()).expect("scfg serializes") + "\n",
                Format::Csv => return Err(CliError("scfg output is dot or json".into())),
            };
            match target {
                Some(t) => write(&t, &text)?,
                None => out.write_all(text.as_bytes()).map_err(io)?,
            }
            Ok(0)
        }
        Command::Plan { program, spec, out: target } => {
            let p = load_program(&program)?;
            let f = load_formula(&spec)?;
            let g = build_scfg(&p);
            let text = plan_for(&p, &g, &f, err).to_json();
            match target {
                Some(t) => write(&t, &text)?,
                None => writeln!(out, "{text}").map_err(io)?,
            }
            Ok(0)
        }
        Command::Verify { program, spec, out: dir, mode, record } => {
            let run = monitor(&program, &spec, mode, err)?;
            if let Some(dir) = dir {
                std::fs::create_dir_all(&dir).map_err(io)?;
                write(&dir.join("report.json"), &run.report.to_json())?;
                write(&dir.join("timing.csv"), &run.report.timing_csv())?;
            }
            if let Some(path) = record {
                let lines: String = run.events.iter().map(|e| e.to_json_line() + "\n").collect();
                write(&path, &lines)?;
            }
            writeln!(out, "{}", summary(&run.report)).map_err(io)?;
            Ok(exit_code(run.report.global))
        }
        Command::CheckTrace { trace, spec } => {
            let f = load_formula(&spec)?;
            let events = read_trace(&trace)?;
            for w in events.windows(2) {
                if w[1].seq <= w[0].seq || w[1].time <= w[0].time {
                    return Err(CliError(format!("{}: event {} is out of order", trace.display(), w[1].seq)));
                }
            }
            let payloads: Vec<_> = events.into_iter().map(|e| e.payload).collect();
            let v = evaluate_observations(&payloads, &f, true);
            writeln!(out, "verdict: {v}").map_err(io)?;
            Ok(exit_code(v))
        }
        Command::Report { program, spec, format, mode } => {
            let run = monitor(&program, &spec, mode, err)?;
            let text = match format {
                Format::Json => run.report.to_json() + "\n",
                Format::Csv => run.report.timing_csv(),
                Format::Dot => return Err(CliError("report output is json or csv".into())),
            };
            out.write_all(text.as_bytes()).map_err(io)?;
            Ok(exit_code(run.report.global))
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
