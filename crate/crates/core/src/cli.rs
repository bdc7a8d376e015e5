//! Command-line front end: `gen`, `solve`, `compare` and `report`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 infeasible instance, 3 time
//! limit reached, 4 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bundles::build_graph;
use crate::instance_gen::{
    class1_cells, class2_cells, generate_instance, instance_name, instance_seed, read_instance, write_instance,
    GenConfig,
};
use crate::metrics::{evaluate_solution, format_value, write_metrics_csv, MetricsReport};
use crate::model::{CostParams, Instance, Solution};
use crate::solver_bf::{export_milp, solve_bf, BfConfig, BfError};
use crate::solver_twostage::{solve_fip, solve_passenger_only_until, FipMode, PassengerRoutes, TwoStageError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_TIME_LIMIT: i32 = 3;
pub const EXIT_USAGE: i32 = 4;

/// Environment variable overriding the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SARP_OUTPUT_DIR";
pub const DEFAULT_TIME_LIMIT_S: f64 = 7200.0;
pub const DESK_TIME_LIMIT_S: f64 = 60.0;

#[derive(Debug, Parser)]
#[command(name = "sarp", version, about = "Share-a-ride problem: instance generation, exact solvers and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate instances for a class grid or a single (n, m) cell.
    Gen(GenArgs),
    /// Solve one instance with one method.
    Solve(SolveArgs),
    /// Run every method on every instance of a directory.
    Compare(CompareArgs),
    /// Summarise a comparison CSV per method.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Request-count grid: 1 (5..10 of each type, at most 15 total) or 2.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2), conflicts_with_all = ["n", "m"])]
    class: Option<u8>,
    /// Number of passengers of a single cell.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), requires = "m")]
    n: Option<u64>,
    /// Number of parcels of a single cell.
    #[arg(long, requires = "n")]
    m: Option<usize>,
    /// Vehicles per instance; defaults to half the passengers, rounded up.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    kappa: Option<u64>,
    /// Instances per cell.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Method {
    #[value(name = "pax-only")]
    PaxOnly,
    #[value(name = "bf")]
    Bf,
    #[value(name = "fip-sg")]
    FipSg,
    #[value(name = "fip-mt")]
    FipMt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::PaxOnly, Method::Bf, Method::FipSg, Method::FipMt];

    pub fn label(self) -> &'static str {
        match self {
            Method::PaxOnly => "pax-only",
            Method::Bf => "bf",
            Method::FipSg => "fip-sg",
            Method::FipMt => "fip-mt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 60 s per run.
    Desk,
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Time limit per run in seconds.
    #[arg(long, conflicts_with = "preset")]
    time_limit: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
}

impl LimitArgs {
    fn time_limit(&self) -> Result<Duration, String> {
        let secs = match (self.time_limit, self.preset) {
            (Some(s), _) => s,
            (None, Some(Preset::Desk)) => DESK_TIME_LIMIT_S,
            (None, None) => DEFAULT_TIME_LIMIT_S,
        };
        if secs.is_finite() && secs > 0.0 {
            Ok(Duration::from_secs_f64(secs))
        } else {
            Err(format!("time limit must be a positive number of seconds, got {secs}"))
        }
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    limits: LimitArgs,
    /// Write the MILP of the bundle formulation to this file (bf only).
    #[arg(long)]
    export_mps: Option<PathBuf>,
    /// Only write the MILP, do not solve (requires --export-mps).
    #[arg(long, requires = "export_mps")]
    export_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    instance: PathBuf,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    limits: LimitArgs,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory of instance files.
    dir: PathBuf,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// A compare.csv file or the directory containing it.
    path: PathBuf,
}

/// Parses the arguments, runs the command and returns the exit code.
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
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Report(a) => cmd_report(&a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(String),
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn output_dir(flag: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_gen(a: &GenArgs) -> Result<i32, CliError> {
    let cells = match (a.class, a.n, a.m) {
        (Some(1), _, _) => class1_cells(),
        (Some(_), _, _) => class2_cells(),
        (None, Some(n), Some(m)) => vec![(n as usize, m)],
        _ => return Err(CliError::Usage("either --class or both --n and --m are required".into())),
    };
    let out = output_dir(&a.out);
    fs::create_dir_all(&out).map_err(runtime)?;
    let params = CostParams::default();
    let mut written = 0;
    for &(n, m) in &cells {
        for index in 0..a.count as usize {
            let mut cfg = GenConfig::new(n, m, instance_seed(a.seed, n, m, index));
            if let Some(k) = a.kappa {
                cfg.kappa = k as usize;
            }
            let inst = generate_instance(&cfg, &params).map_err(runtime)?;
            let path = out.join(format!("{}.json", instance_name(n, m, index)));
            write_instance(&inst, &path).map_err(runtime)?;
            written += 1;
        }
    }
    eprintln!("wrote {written} instances to {}", out.display());
    Ok(EXIT_OK)
}

/// How a method run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    /// Stopped by the time limit with a feasible but unproven solution.
    TimeLimit,
    /// Stopped by the time limit without any solution.
    NoSolution,
    Infeasible,
    /// The solution failed independent validation.
    Invalid,
}

impl RunStatus {
    pub fn label(self) -> &'static str {
        match self {
            RunStatus::Ok => "ok",
            RunStatus::TimeLimit => "time_limit",
            RunStatus::NoSolution => "no_solution",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Invalid => "invalid",
        }
    }
}

/// Result of one method on one instance.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub status: RunStatus,
    pub solution: Option<Solution>,
    pub report: MetricsReport,
    /// Passenger routing time, for methods that have a first stage.
    pub stage1: Option<Duration>,
    /// Insertion (or full search) time.
    pub stage2: Option<Duration>,
    pub validation: Option<String>,
}

fn validated(solution: Solution, inst: &Instance) -> (RunStatus, Option<Solution>, Option<String>) {
    match evaluate_solution(&solution, inst) {
        Ok(_) => (RunStatus::Ok, Some(solution), None),
        Err(report) => (RunStatus::Invalid, Some(solution), Some(report.to_string())),
    }
}

/// Runs all four methods on one instance. The passenger-only routes are
/// computed once and shared by both insertion variants; the bundle solver
/// gets the whole time limit for itself.
pub fn run_all_methods(name: &str, inst: &Instance, time_limit: Duration) -> Vec<MethodRun> {
    let started = Instant::now();
    let pax = solve_passenger_only_until(inst, started.checked_add(time_limit));
    let stage1 = started.elapsed();
    let pax_solution = pax.as_ref().ok().map(|r| r.to_solution(inst));
    let baseline = pax.as_ref().ok().map(|r| r.total_profit);

    let mut runs = Vec::with_capacity(4);
    for method in Method::ALL {
        let run = match method {
            Method::PaxOnly => pax_run(name, inst, &pax, stage1),
            Method::Bf => bf_run(name, inst, time_limit),
            Method::FipSg | Method::FipMt => fip_run(name, inst, method, &pax, stage1),
        };
        runs.push(run);
    }
    // Baseline-relative measures once the passenger-only solution is known.
    for run in &mut runs {
        if let (Some(sol), Some(pax_sol), Some(base)) = (&run.solution, &pax_solution, baseline) {
            if run.status == RunStatus::Ok || run.status == RunStatus::TimeLimit {
                let mut report = MetricsReport::for_solution(name, run.method.label(), sol, inst, Some((pax_sol, base)));
                report.status = run.report.status.clone();
                report.optimal = run.report.optimal;
                report.gap_pct = run.report.gap_pct;
                report.solve_time = run.report.solve_time;
                run.report = report;
            }
        }
    }
    runs
}

fn total_time(stage1: Option<Duration>, stage2: Option<Duration>) -> Option<f64> {
    match (stage1, stage2) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or_default().as_secs_f64() + b.unwrap_or_default().as_secs_f64()),
    }
}

fn finish_run(
    name: &str,
    inst: &Instance,
    method: Method,
    outcome: Result<(Solution, bool, f64), RunStatus>,
    stage1: Option<Duration>,
    stage2: Option<Duration>,
) -> MethodRun {
    let (status, solution, validation, optimal, gap) = match outcome {
        Ok((sol, optimal, gap)) => {
            let (mut status, sol, why) = validated(sol, inst);
            if status == RunStatus::Ok && !optimal {
                status = RunStatus::TimeLimit;
            }
            (status, sol, why, Some(optimal), Some(gap))
        }
        Err(status) => (status, None, None, None, None),
    };
    let mut report = match &solution {
        Some(sol) if status != RunStatus::Invalid => MetricsReport::for_solution(name, method.label(), sol, inst, None),
        _ => MetricsReport::failed(name, method.label(), status.label(), inst),
    };
    report.status = status.label().to_string();
    report.optimal = optimal;
    report.gap_pct = gap;
    report.solve_time = total_time(stage1, stage2);
    MethodRun {
        method,
        status,
        solution,
        report,
        stage1,
        stage2,
        validation,
    }
}

fn pax_run(name: &str, inst: &Instance, pax: &Result<PassengerRoutes, TwoStageError>, stage1: Duration) -> MethodRun {
    let outcome = match pax {
        Ok(routes) => Ok((routes.to_solution(inst), true, 0.0)),
        Err(TwoStageError::Infeasible) => Err(RunStatus::Infeasible),
        Err(_) => Err(RunStatus::NoSolution),
    };
    finish_run(name, inst, Method::PaxOnly, outcome, Some(stage1), None)
}

fn fip_run(
    name: &str,
    inst: &Instance,
    method: Method,
    pax: &Result<PassengerRoutes, TwoStageError>,
    stage1: Duration,
) -> MethodRun {
    let mode = if method == Method::FipSg { FipMode::Sg } else { FipMode::Mt };
    let started = Instant::now();
    let outcome = match pax {
        Ok(routes) => Ok((solve_fip(routes, inst, mode), true, 0.0)),
        Err(TwoStageError::Infeasible) => Err(RunStatus::Infeasible),
        Err(_) => Err(RunStatus::NoSolution),
    };
    finish_run(name, inst, method, outcome, Some(stage1), Some(started.elapsed()))
}

fn bf_run(name: &str, inst: &Instance, time_limit: Duration) -> MethodRun {
    let started = Instant::now();
    let graph = build_graph(inst);
    let outcome = match solve_bf(&graph, inst, &BfConfig::with_time_limit(time_limit)) {
        Ok((sol, stats)) => Ok((sol, stats.proven_optimal, 100.0 * stats.gap)),
        Err(BfError::Infeasible) => Err(RunStatus::Infeasible),
        Err(_) => Err(RunStatus::NoSolution),
    };
    finish_run(name, inst, Method::Bf, outcome, None, Some(started.elapsed()))
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    instance: String,
    method: &'static str,
    status: &'static str,
    time_limit_s: f64,
    stage1_s: Option<f64>,
    stage2_s: Option<f64>,
    validation: Option<&'a str>,
    metrics: &'a MetricsReport,
    solution: Option<&'a Solution>,
    mps: Option<String>,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instance".to_string())
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let time_limit = a.limits.time_limit().map_err(CliError::Usage)?;
    if a.export_mps.is_some() && a.method != Method::Bf {
        return Err(CliError::Usage("--export-mps is only available with --method bf".into()));
    }
    let inst = read_instance(&a.instance).map_err(runtime)?;
    let name = stem(&a.instance);
    let out = output_dir(&a.out);
    fs::create_dir_all(&out).map_err(runtime)?;

    if let Some(path) = &a.export_mps {
        export_milp(&build_graph(&inst), &inst, path).map_err(runtime)?;
        eprintln!("wrote {}", path.display());
        if a.export_only {
            return Ok(EXIT_OK);
        }
    }

    let run = match a.method {
        Method::Bf => bf_run(&name, &inst, time_limit),
        method => {
            let started = Instant::now();
            let pax = solve_passenger_only_until(&inst, started.checked_add(time_limit));
            let stage1 = started.elapsed();
            let mut run = match method {
                Method::PaxOnly => pax_run(&name, &inst, &pax, stage1),
                _ => fip_run(&name, &inst, method, &pax, stage1),
            };
            if let (Ok(routes), Some(sol)) = (&pax, &run.solution) {
                if run.status == RunStatus::Ok {
                    let base = routes.to_solution(&inst);
                    let mut report = MetricsReport::for_solution(&name, method.label(), sol, &inst, Some((&base, routes.total_profit)));
                    report.optimal = run.report.optimal;
                    report.gap_pct = run.report.gap_pct;
                    report.solve_time = run.report.solve_time;
                    run.report = report;
                }
            }
            run
        }
    };

    let base = format!("{name}.{}", a.method.label());
    let record = RunRecord {
        instance: name.clone(),
        method: a.method.label(),
        status: run.status.label(),
        time_limit_s: time_limit.as_secs_f64(),
        stage1_s: run.stage1.map(|d| d.as_secs_f64()),
        stage2_s: run.stage2.map(|d| d.as_secs_f64()),
        validation: run.validation.as_deref(),
        metrics: &run.report,
        solution: run.solution.as_ref(),
        mps: a.export_mps.as_ref().map(|p| p.display().to_string()),
    };
    let json = serde_json::to_string_pretty(&record).map_err(runtime)?;
    fs::write(out.join(format!("{base}.solution.json")), json + "\n").map_err(runtime)?;
    let csv_file = fs::File::create(out.join(format!("{base}.metrics.csv"))).map_err(runtime)?;
    write_metrics_csv(csv_file, std::slice::from_ref(&run.report), true).map_err(runtime)?;

    if let Some(why) = &run.validation {
        eprintln!("solution failed validation: {why}");
    }
    eprintln!(
        "{name} {}: status {}, profit {}",
        a.method.label(),
        run.status.label(),
        format_value(run.report.profit)
    );
    Ok(match run.status {
        RunStatus::Ok => EXIT_OK,
        RunStatus::Infeasible => EXIT_INFEASIBLE,
        RunStatus::TimeLimit | RunStatus::NoSolution => EXIT_TIME_LIMIT,
        RunStatus::Invalid => EXIT_ERROR,
    })
}

fn instance_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// An instance name, the instance and its runs.
type InstanceRuns = (String, Instance, Vec<MethodRun>);

/// Per-cell averages of one measure, one column per method.
fn write_series(
    path: &Path,
    runs: &[InstanceRuns],
    methods: &[Method],
    value: impl Fn(&MetricsReport) -> Option<f64>,
) -> Result<(), CliError> {
    let mut cells: BTreeMap<(usize, usize), Vec<Vec<f64>>> = BTreeMap::new();
    for (_, inst, method_runs) in runs {
        let entry = cells
            .entry((inst.n(), inst.m()))
            .or_insert_with(|| vec![Vec::new(); methods.len()]);
        for (slot, method) in methods.iter().enumerate() {
            if let Some(run) = method_runs.iter().find(|r| r.method == *method) {
                if let Some(v) = value(&run.report) {
                    entry[slot].push(v);
                }
            }
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    let mut header = vec!["n".to_string(), "m".to_string()];
    header.extend(methods.iter().map(|m| m.label().to_string()));
    w.write_record(&header).map_err(runtime)?;
    for ((n, m), values) in &cells {
        let mut row = vec![n.to_string(), m.to_string()];
        for v in values {
            let mean = (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            row.push(format_value(mean));
        }
        w.write_record(&row).map_err(runtime)?;
    }
    w.flush().map_err(runtime)?;
    Ok(())
}

fn cmd_compare(a: &CompareArgs) -> Result<i32, CliError> {
    let time_limit = a.limits.time_limit().map_err(CliError::Usage)?;
    let files = instance_files(&a.dir)?;
    if files.is_empty() {
        return Err(CliError::Runtime(format!("no instance files in {}", a.dir.display())));
    }
    let out = output_dir(&a.out);
    fs::create_dir_all(&out).map_err(runtime)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads as usize)
        .build()
        .map_err(runtime)?;
    let results: Vec<Result<InstanceRuns, CliError>> = pool.install(|| {
        use rayon::prelude::*;
        files
            .par_iter()
            .map(|path| {
                let inst = read_instance(path).map_err(runtime)?;
                let name = stem(path);
                let runs = run_all_methods(&name, &inst, time_limit);
                Ok((name, inst, runs))
            })
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for r in results {
        runs.push(r?);
    }

    let reports: Vec<MetricsReport> = runs.iter().flat_map(|(_, _, r)| r.iter().map(|x| x.report.clone())).collect();
    let file = fs::File::create(out.join("compare.csv")).map_err(runtime)?;
    write_metrics_csv(file, &reports, false).map_err(runtime)?;

    let methods = [Method::Bf, Method::FipSg, Method::FipMt];
    write_series(&out.join("series_serviced.csv"), &runs, &methods, |r| r.serviced_parcels_pct)?;
    write_series(&out.join("series_revenue.csv"), &runs, &methods, |r| r.revenue_increase_pct)?;
    write_series(&out.join("series_deadheading.csv"), &runs, &methods, |r| r.deadheading_reduction_pct)?;

    let mut w = csv::Writer::from_path(out.join("timings.csv")).map_err(runtime)?;
    w.write_record(["instance", "method", "status", "stage1_s", "stage2_s", "total_s"])
        .map_err(runtime)?;
    for (name, _, method_runs) in &runs {
        for run in method_runs {
            w.write_record([
                name.clone(),
                run.method.label().to_string(),
                run.status.label().to_string(),
                format_value(run.stage1.map(|d| d.as_secs_f64())),
                format_value(run.stage2.map(|d| d.as_secs_f64())),
                format_value(run.report.solve_time),
            ])
            .map_err(runtime)?;
        }
    }
    w.flush().map_err(runtime)?;

    let failures = runs
        .iter()
        .flat_map(|(_, _, r)| r.iter())
        .filter(|r| r.status != RunStatus::Ok)
        .count();
    for (name, _, method_runs) in &runs {
        for run in method_runs {
            if let Some(why) = &run.validation {
                eprintln!("{name} {}: invalid solution: {why}", run.method.label());
            }
        }
    }
    eprintln!(
        "compared {} instances, {} runs not ok, results in {}",
        runs.len(),
        failures,
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_report(a: &ReportArgs) -> Result<i32, CliError> {
    let path = if a.path.is_dir() { a.path.join("compare.csv") } else { a.path.clone() };
    let mut reader = csv::Reader::from_path(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(runtime)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Runtime(format!("{}: missing column {name}", path.display())))
    };
    let (method_col, status_col) = (col("method")?, col("status")?);
    let measures = ["serviced_parcels_pct", "revenue_increase_pct", "deadheading_reduction_pct"];
    let measure_cols = measures.iter().map(|m| col(m)).collect::<Result<Vec<_>, _>>()?;

    // method -> (runs, ok runs, sums and counts per measure)
    type Row = (usize, usize, Vec<(f64, usize)>);
    let mut table: BTreeMap<String, Row> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(runtime)?;
        let entry = table
            .entry(record[method_col].to_string())
            .or_insert_with(|| (0, 0, vec![(0.0, 0); measures.len()]));
        entry.0 += 1;
        if &record[status_col] == "ok" {
            entry.1 += 1;
        }
        for (slot, &c) in measure_cols.iter().enumerate() {
            if let Ok(v) = record[c].parse::<f64>() {
                entry.2[slot].0 += v;
                entry.2[slot].1 += 1;
            }
        }
    }
    println!("method,runs,ok,{}", measures.map(|m| format!("mean_{m}")).join(","));
    for (method, (runs, ok, sums)) in &table {
        let means: Vec<String> = sums
            .iter()
            .map(|&(s, c)| format_value((c > 0).then(|| s / c as f64)))
            .collect();
        println!("{method},{runs},{ok},{}", means.join(","));
    }
    Ok(EXIT_OK)
}
