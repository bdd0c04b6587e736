//! Command-line front end.
//!
//! Every command writes either CSV or a flat `key=value` record. Errors are
//! reported as a single `error: kind=<kind> reason=<text>` line on the error
//! stream, and the exit code says which kind: 1 for usage or malformed
//! input, 2 for a failed mathematical precondition, 3 for a failed
//! verification.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::blowup::{
    model_from_solved_graph, negativity_report, parse_script, replay, trace_csv, BlowupError,
};
use crate::complement::{
    construct_chain_subboundary, dtau_general, dtau_transform, find_curve_complement, BoundaryP1,
    ComplementError,
};
use crate::discrepancy::{solve_log_discrepancies, DiscrepancyError};
use crate::dual_graph::{parse_graph, DualGraph, GraphError};
use crate::oracle::{
    atlas_csv, e_type_atlas, enumerate_and_verify, suite, Property, REPORT_HEADER,
};
use crate::rational::{format_list, parse_list, Rational};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Precondition(String),
    Verification(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    fn line(&self) -> String {
        let (kind, reason) = match self {
            CliError::Usage(r) => ("usage", r),
            CliError::Precondition(r) => ("precondition", r),
            CliError::Verification(r) => ("verification", r),
        };
        format!("error: kind={kind} reason={}", reason.replace('\n', " "))
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Empty | GraphError::Disconnected => CliError::Precondition(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<DiscrepancyError> for CliError {
    fn from(e: DiscrepancyError) -> Self {
        match e {
            DiscrepancyError::Graph(g) => g.into(),
            DiscrepancyError::Csv { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<ComplementError> for CliError {
    fn from(e: ComplementError) -> Self {
        match e {
            ComplementError::Discrepancy(d) => d.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<BlowupError> for CliError {
    fn from(e: BlowupError) -> Self {
        match e {
            BlowupError::Discrepancy(d) => d.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    SmallestK,
    BiggestA,
}

#[derive(Debug, Parser)]
#[command(
    name = "logdisc",
    version,
    about = "Log discrepancies, complements and blow-up towers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GraphInput {
    /// Graph file (same as --graph).
    #[arg(value_name = "GRAPH")]
    path: Option<PathBuf>,
    #[arg(long = "graph", value_name = "FILE")]
    graph: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Output {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write output to FILE instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for log discrepancies and print the profile.
    Solve {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// Print the singularity class.
    Classify {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// Print the minimal log discrepancy.
    Mld {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// Print the discrepancy index.
    Index {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        output: Output,
    },
    /// Complement of a boundary on the projective line.
    Complement {
        /// Comma-separated coefficients; may be empty.
        #[arg(long = "b", value_name = "LIST", allow_hyphen_values = true)]
        b: String,
        #[arg(long, value_name = "P/Q", allow_hyphen_values = true)]
        delta: Rational,
        #[command(flatten)]
        output: Output,
    },
    /// Round coefficients up to nearby standard values.
    Dtau {
        #[arg(long = "b", value_name = "LIST", allow_hyphen_values = true)]
        b: String,
        #[arg(long, value_name = "P/Q", allow_hyphen_values = true)]
        tau: Rational,
        #[arg(long, value_enum, default_value = "smallest-k")]
        mode: Mode,
        /// Target set for biggest-a mode.
        #[arg(long = "set", value_name = "LIST", allow_hyphen_values = true)]
        set: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Bounded-denominator subboundary on a chain.
    Subboundary {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long, value_name = "P/Q", allow_hyphen_values = true)]
        delta: Rational,
        #[command(flatten)]
        output: Output,
    },
    /// Replay a tower script on the solved graph and print negativities.
    Tower {
        #[arg(value_name = "SCRIPT")]
        script: PathBuf,
        #[arg(long = "graph", value_name = "FILE")]
        graph: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Table of the E-type diagrams.
    Atlas {
        #[arg(long = "p-max", default_value_t = 8)]
        p_max: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Restrict to these property ids (repeatable).
        #[arg(long = "property", value_name = "ID")]
        properties: Vec<String>,
        #[arg(long = "max-r")]
        max_r: Option<usize>,
        #[arg(long = "max-weight")]
        max_weight: Option<u32>,
        #[arg(long = "max-denominator")]
        max_denominator: Option<i64>,
        #[arg(long = "max-points")]
        max_points: Option<usize>,
        #[arg(long)]
        count: Option<usize>,
        /// Replace the suite's delta values (comma-separated).
        #[arg(long = "delta", value_name = "LIST", value_delimiter = ',')]
        deltas: Vec<Rational>,
        #[command(flatten)]
        output: Output,
    },
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            let reason = first.strip_prefix("error: ").unwrap_or(first);
            let err = CliError::Usage(reason.to_string());
            let _ = writeln!(stderr, "{}", err.line());
            return err.code();
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.line());
            err.code()
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load_graph(input: &GraphInput) -> Result<DualGraph, CliError> {
    let path = match (&input.path, &input.graph) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give the graph either positionally or with --graph".into(),
            ))
        }
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => return Err(CliError::Usage("missing graph file".into())),
    };
    Ok(parse_graph(&read(path)?)?)
}

fn list(s: &str) -> Result<Vec<Rational>, CliError> {
    parse_list(s).map_err(|e| CliError::Usage(e.to_string()))
}

fn emit(
    output: &Output,
    default: Format,
    csv: impl FnOnce() -> String,
    record: impl FnOnce() -> String,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = match output.format.unwrap_or(default) {
        Format::Csv => csv(),
        Format::Record => record(),
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Usage(format!("cannot write output: {e}"))),
    }
}

fn scalar(key: &str, value: &str) -> (String, String) {
    (format!("{key}\n{value}\n"), format!("{key}={value}\n"))
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Solve { input, output } => {
            let graph = load_graph(&input)?;
            let profile = solve_log_discrepancies(&graph)?;
            emit(
                &output,
                Format::Csv,
                || profile.to_csv(),
                || {
                    let mut out = String::new();
                    for (id, a) in profile.ids().iter().zip(profile.values()) {
                        writeln!(out, "a.{id}={a}").unwrap();
                    }
                    writeln!(out, "mld={}", profile.mld()).unwrap();
                    writeln!(out, "index={}", profile.index()).unwrap();
                    out
                },
                stdout,
            )
        }
        Command::Classify { input, output } => {
            let graph = load_graph(&input)?;
            let class = graph.classify()?;
            let (csv, record) = scalar("class", &class.to_string());
            emit(&output, Format::Record, || csv, || record, stdout)
        }
        Command::Mld { input, output } => {
            let profile = solve_log_discrepancies(&load_graph(&input)?)?;
            let (csv, record) = scalar("mld", &profile.mld().to_string());
            emit(&output, Format::Record, || csv, || record, stdout)
        }
        Command::Index { input, output } => {
            let profile = solve_log_discrepancies(&load_graph(&input)?)?;
            let (csv, record) = scalar("index", &profile.index().to_string());
            emit(&output, Format::Record, || csv, || record, stdout)
        }
        Command::Complement { b, delta, output } => {
            let boundary = BoundaryP1::new(list(&b)?);
            let result = find_curve_complement(&boundary, &delta)?;
            emit(
                &output,
                Format::Record,
                || result.to_csv(),
                || result.to_record(),
                stdout,
            )
        }
        Command::Dtau {
            b,
            tau,
            mode,
            set,
            output,
        } => {
            let coeffs = list(&b)?;
            let mapped = match mode {
                Mode::SmallestK => {
                    if set.is_some() {
                        return Err(CliError::Usage(
                            "--set only applies to --mode biggest-a".into(),
                        ));
                    }
                    dtau_transform(&coeffs, &tau)?
                }
                Mode::BiggestA => {
                    let set =
                        set.ok_or_else(|| CliError::Usage("--mode biggest-a needs --set".into()))?;
                    dtau_general(&coeffs, &tau, &list(&set)?)?
                }
            };
            emit(
                &output,
                Format::Record,
                || {
                    let mut out = String::from("b,dtau\n");
                    for (x, y) in coeffs.iter().zip(&mapped) {
                        writeln!(out, "{x},{y}").unwrap();
                    }
                    out
                },
                || {
                    format!(
                        "b={}\ndtau={}\n",
                        format_list(&coeffs),
                        format_list(&mapped)
                    )
                },
                stdout,
            )
        }
        Command::Subboundary {
            input,
            delta,
            output,
        } => {
            let graph = load_graph(&input)?;
            let sub = construct_chain_subboundary(&graph, &delta)?;
            emit(
                &output,
                Format::Record,
                || sub.to_csv(),
                || sub.to_record(),
                stdout,
            )
        }
        Command::Tower {
            script,
            graph,
            output,
        } => {
            let graph = parse_graph(&read(&graph)?)?;
            let profile = solve_log_discrepancies(&graph)?;
            let start = model_from_solved_graph(&graph, &profile)?;
            let moves =
                parse_script(&read(&script)?).map_err(|e| CliError::Usage(e.to_string()))?;
            let (model, trace) = replay(&start, &moves)?;
            emit(
                &output,
                Format::Csv,
                || trace_csv(&trace),
                || {
                    let report = negativity_report(&model);
                    let mut out = String::new();
                    writeln!(out, "steps={}", moves.len()).unwrap();
                    for (id, n) in &report.per_curve {
                        writeln!(out, "N.{id}={n}").unwrap();
                    }
                    writeln!(out, "total={}", report.total).unwrap();
                    out
                },
                stdout,
            )
        }
        Command::Atlas { p_max, output } => {
            if p_max < 2 {
                return Err(CliError::Usage("--p-max must be at least 2".into()));
            }
            let rows = e_type_atlas(p_max);
            emit(
                &output,
                Format::Csv,
                || atlas_csv(&rows),
                || {
                    let mut out = String::new();
                    for r in &rows {
                        let key = format!("E({},{})", r.family, r.p);
                        match (&r.mld, &r.index) {
                            (Some(m), Some(i)) => {
                                writeln!(out, "{key}.mld={m}\n{key}.index={i}").unwrap()
                            }
                            _ => writeln!(out, "{key}.contractible=false").unwrap(),
                        }
                    }
                    out
                },
                stdout,
            )
        }
        Command::Verify {
            suite: name,
            seed,
            properties,
            max_r,
            max_weight,
            max_denominator,
            max_points,
            count,
            deltas,
            output,
        } => {
            let mut plan = suite(&name, seed)
                .ok_or_else(|| CliError::Usage(format!("unknown suite `{name}`")))?;
            if !properties.is_empty() {
                let wanted = properties
                    .iter()
                    .map(|p| p.parse::<Property>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                plan.retain(|(_, p)| wanted.contains(p));
            }
            let mut reports = Vec::new();
            for (mut spec, property) in plan {
                if let Some(v) = max_r {
                    spec.max_r = v;
                }
                if let Some(v) = max_weight {
                    spec.max_weight = v;
                }
                if let Some(v) = max_denominator {
                    spec.max_denominator = v;
                }
                if let Some(v) = max_points {
                    spec.max_points = v;
                }
                if let Some(v) = count {
                    spec.count = v;
                }
                if !deltas.is_empty() {
                    spec.deltas = deltas.clone();
                }
                let mut r = enumerate_and_verify(&spec, &[property])
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                reports.append(&mut r);
            }
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| r.property.as_str())
                .collect();
            emit(
                &output,
                Format::Csv,
                || {
                    let mut out = format!("{REPORT_HEADER}\n");
                    for r in &reports {
                        writeln!(out, "{}", r.csv_row()).unwrap();
                    }
                    for r in &reports {
                        out.push_str(&r.failures_csv());
                    }
                    out
                },
                || {
                    let mut out = String::new();
                    for r in &reports {
                        let status = if r.passed() { "pass" } else { "fail" };
                        writeln!(out, "{}.instances={}", r.property, r.instances).unwrap();
                        writeln!(out, "{}.failures={}", r.property, r.failures.len()).unwrap();
                        writeln!(out, "{}.status={status}", r.property).unwrap();
                        for note in &r.notes {
                            writeln!(out, "{}.note={note}", r.property).unwrap();
                        }
                    }
                    writeln!(
                        out,
                        "status={}",
                        if failed.is_empty() { "pass" } else { "fail" }
                    )
                    .unwrap();
                    out
                },
                stdout,
            )?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "failed properties: {}",
                    failed.join(",")
                )))
            }
        }
    }
}
