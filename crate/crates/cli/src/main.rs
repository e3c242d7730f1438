//! `kpos`: build linear maps, check k-positivity, verify decompositions.
//!
//! Exit codes: 0 certified, 1 refuted, 2 inconclusive or not applicable,
//! 64 usage error, 65 bad input data, 66 unreadable input, 73 unwritable output.

mod report;
mod spec;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use kpos_core::check::{run_check, CheckOptions, Criterion, MapInput};
use kpos_core::decomp::{involution_map, involution_split, verify_split_default};
use kpos_core::io::{budget_from_json, map_from_json, map_to_json, ChoiSplitJson, MapJson, MatrixJson};
use kpos_core::kcriteria::{refutation_threshold, verify_witness, Status, Verdict, Witness};
use kpos_core::maps::choi;
use kpos_core::suites::Suite;
use kpos_core::{Error, PermutationSpec, SearchBudget};

use report::{digest, RunReport, SuiteRecord, VerifyRecord};
use spec::BuildSpec;

const EXIT_CERTIFIED: u8 = 0;
const EXIT_REFUTED: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NOINPUT: u8 = 66;
const EXIT_CANTCREATE: u8 = 73;

#[derive(Parser, Debug)]
#[command(name = "kpos", version, about = "k-positivity checks for linear maps between matrix algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a map from a family spec and write it as map JSON.
    Build {
        /// Spec file, e.g. {"family":"l-gamma","n":3,"gamma":2}.
        spec: PathBuf,
        /// Output path for the map (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the Choi matrix here.
        #[arg(long)]
        choi_out: Option<PathBuf>,
    },
    /// Run criteria on a map at level k.
    Check {
        /// Map JSON file.
        map: PathBuf,
        #[arg(long)]
        k: usize,
        /// Comma-separated criteria, run in order (default: all).
        #[arg(long)]
        criteria: Option<String>,
        /// Budget JSON file; individual flags override its fields.
        #[arg(long)]
        budget: Option<PathBuf>,
        #[arg(long)]
        budget_restarts: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        /// Run every criterion instead of stopping at the first decision.
        #[arg(long)]
        exhaustive: bool,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Split the Choi matrix of the involution map (n - 1) I + P_pi, or verify a given split.
    Decompose {
        #[arg(long, requires = "pi", conflicts_with_all = ["map", "split"])]
        n: Option<usize>,
        /// 1-based image of the permutation, e.g. 3,4,1,2.
        #[arg(long, value_delimiter = ',')]
        pi: Option<Vec<usize>>,
        /// Map JSON file (with --split).
        #[arg(long, requires = "split")]
        map: Option<PathBuf>,
        /// Split JSON file {"c1", "c2"} to verify against --map.
        #[arg(long, requires = "map")]
        split: Option<PathBuf>,
        /// Write the split here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Re-check every witness in a report against the map it was computed for.
    Verify {
        map: PathBuf,
        report: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run a reproduction suite with pinned seeds ("all" runs every suite).
    Reproduce {
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::KOutOfRange { .. } | Error::UnknownCriterion(_) | Error::UnknownSuite(_) | Error::BadBudget(_) => {
                EXIT_USAGE
            }
            _ => EXIT_DATA,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::new(EXIT_NOINPUT, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::new(EXIT_CANTCREATE, format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn load_map(path: &Path) -> CliResult<(MapInput<f64>, String)> {
    let text = read(path)?;
    let input = map_from_json(&text).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))?;
    let canonical = serde_json::to_string(&MapJson::from_input(&input)).expect("map serializes");
    Ok((input, digest(&canonical)))
}

fn status_code(status: Status) -> u8 {
    match status {
        Status::CertifiedKPositive | Status::CertifiedDecomposable => EXIT_CERTIFIED,
        Status::RefutedKPositive => EXIT_REFUTED,
        Status::Inconclusive | Status::NotApplicable => EXIT_INCONCLUSIVE,
    }
}

fn cmd_build(spec: &Path, out: Option<&Path>, choi_out: Option<&Path>) -> CliResult<u8> {
    let text = read(spec)?;
    let spec = BuildSpec::parse(&text).map_err(|e| Failure::new(EXIT_DATA, format!("bad spec {}: {e}", spec.display())))?;
    let input = spec.build().map_err(|e| Failure::new(EXIT_DATA, format!("bad spec: {e}")))?;
    let mut json = map_to_json(&input)?;
    json.push('\n');
    match out {
        Some(p) => write(p, &json)?,
        None => print!("{json}"),
    }
    if let Some(p) = choi_out {
        write(p, &to_json(&MatrixJson::from(&choi(&input.map))))?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    map: &Path,
    k: usize,
    criteria: Option<&str>,
    budget_file: Option<&Path>,
    restarts: Option<usize>,
    max_iters: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    exhaustive: bool,
    out: Option<&Path>,
    format: Format,
) -> CliResult<u8> {
    let criteria = match criteria {
        Some(list) => Criterion::parse_list(list)?,
        None => Criterion::ALL.to_vec(),
    };
    if criteria.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "no criteria given"));
    }
    if k == 0 {
        return Err(Error::KOutOfRange { k, max: 0 }.into());
    }
    let mut budget = match budget_file {
        Some(p) => budget_from_json(&read(p)?).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", p.display())))?,
        None => SearchBudget::default(),
    };
    budget.restarts = restarts.unwrap_or(budget.restarts);
    budget.max_iters = max_iters.unwrap_or(budget.max_iters);
    budget.seed = seed.unwrap_or(budget.seed);
    budget.tol = tol.unwrap_or(budget.tol);
    budget.validate()?;
    let (input, input_digest) = load_map(map)?;
    let start = Instant::now();
    let outcome = run_check(&input, &criteria, k, &CheckOptions { budget, exhaustive })?;
    let report = RunReport::check(input_digest, budget, &criteria, exhaustive, &outcome, start.elapsed());
    emit(&report, out, format, || report::check_text(&report))?;
    Ok(status_code(outcome.status))
}

fn cmd_decompose(
    n: Option<usize>,
    pi: Option<Vec<usize>>,
    map: Option<&Path>,
    split: Option<&Path>,
    out: Option<&Path>,
    report_path: Option<&Path>,
    format: Format,
) -> CliResult<u8> {
    let start = Instant::now();
    let (map, split, input_digest) = match (n, pi, map, split) {
        (Some(n), Some(pi), None, None) => {
            let pi = PermutationSpec::new(pi)?;
            let map = involution_map::<f64>(n, &pi)?;
            let split = involution_split::<f64>(n, &pi)?;
            let canonical = serde_json::to_string(&MapJson::from_map(&map)).expect("map serializes");
            (map, split, digest(&canonical))
        }
        (None, None, Some(m), Some(s)) => {
            let (input, d) = load_map(m)?;
            let text = read(s)?;
            let j: ChoiSplitJson =
                serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", s.display())))?;
            let split = j.to_split(Some(input.map.input_dim()))?;
            (input.map, split, d)
        }
        _ => return Err(Failure::new(EXIT_USAGE, "give either --n and --pi, or --map and --split")),
    };
    let verdict = verify_split_default(&map, &split)?;
    if let Some(p) = out {
        write(p, &to_json(&ChoiSplitJson::from(&split)))?;
    }
    let report = RunReport::decompose(input_digest, &verdict, start.elapsed());
    emit(&report, report_path, format, || report::check_text(&report))?;
    Ok(status_code(verdict.status))
}

/// Exit 1 if some refutation in the report is reproduced by its witness
/// alone, 2 if none is, 65 if the report belongs to another map.
fn cmd_verify(map: &Path, report_path: &Path, tol: f64) -> CliResult<u8> {
    let (input, input_digest) = load_map(map)?;
    let text = read(report_path)?;
    let report: RunReport =
        serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", report_path.display())))?;
    if report.input_digest != input_digest {
        return Err(Failure::new(EXIT_DATA, format!("report digest {} does not match map digest {input_digest}", report.input_digest)));
    }
    let thr = refutation_threshold(&input.map, tol)?;
    let mut reproduced = 0;
    for rec in &report.verdicts {
        let verdict = Verdict::try_from(&rec.verdict)?;
        let Some(w) = &verdict.witness else { continue };
        let value = verify_witness(&input.map, w, verdict.k)?;
        let ok = value < -thr;
        reproduced += usize::from(ok && verdict.status == Status::RefutedKPositive);
        let kind = match w {
            Witness::Frame(_) => "frame",
            Witness::SchmidtVector(_) => "schmidt-vector",
            Witness::UMatrix(_) => "u-matrix",
        };
        let rec = VerifyRecord { criterion: rec.criterion.clone(), witness: kind.into(), value, threshold: -thr, reproduced: ok };
        println!("{}", report::verify_text(&rec));
    }
    Ok(if reproduced > 0 { EXIT_REFUTED } else { EXIT_INCONCLUSIVE })
}

fn cmd_reproduce(name: &str, out: Option<&Path>, format: Format) -> CliResult<u8> {
    let suites = if name == "all" { Suite::ALL.to_vec() } else { vec![name.parse::<Suite>()?] };
    let mut records = Vec::new();
    for suite in suites {
        let start = Instant::now();
        let rep = suite.run()?;
        records.push(SuiteRecord::new(&rep, start.elapsed()));
    }
    let all_passed = records.iter().all(|r| r.passed);
    let report = report::ReproduceReport::new(records);
    let text = || report::reproduce_text(&report);
    match format {
        Format::Text => print!("{}", text()),
        Format::Json => print!("{}", to_json(&report)),
    }
    if let Some(p) = out {
        write(p, &to_json(&report))?;
    }
    Ok(if all_passed { 0 } else { 1 })
}

fn emit(report: &RunReport, out: Option<&Path>, format: Format, text: impl Fn() -> String) -> CliResult<()> {
    match format {
        Format::Text => print!("{}", text()),
        Format::Json => print!("{}", to_json(report)),
    }
    if let Some(p) = out {
        write(p, &to_json(report))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Build { spec, out, choi_out } => cmd_build(&spec, out.as_deref(), choi_out.as_deref()),
        Command::Check { map, k, criteria, budget, budget_restarts, max_iters, seed, tol, exhaustive, out, format } => {
            cmd_check(
                &map,
                k,
                criteria.as_deref(),
                budget.as_deref(),
                budget_restarts,
                max_iters,
                seed,
                tol,
                exhaustive,
                out.as_deref(),
                format,
            )
        }
        Command::Decompose { n, pi, map, split, out, report, format } => {
            cmd_decompose(n, pi, map.as_deref(), split.as_deref(), out.as_deref(), report.as_deref(), format)
        }
        Command::Verify { map, report, tol } => cmd_verify(&map, &report, tol),
        Command::Reproduce { suite, out, format } => cmd_reproduce(&suite, out.as_deref(), format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("kpos: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

