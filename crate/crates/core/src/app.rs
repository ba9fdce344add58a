//! Subcommand implementations behind the `groupform` binary.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::annealer::{merge_restarts, run_restarts, AnnealError, AnnealResult, RestartPlan};
use crate::cohort::{select_cohort, Cohort, CohortError};
use crate::config::{ConfigError, RunConfig};
use crate::oracle::{brute_force_best, hits_optimum, OracleError};
use crate::records::{
    clean_records, dataset_stats, parse_prereqs, parse_records, DatasetStats, RecordFormat,
    RecordsError, RowError,
};
use crate::report::{write_assignments, write_trace, ReportError, RunSummary};
use crate::synth::{generate, write_prereqs, write_records, SynthSpec};

/// Failure classes, each with a stable diagnostic code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Schema(String),
    #[error("{0}")]
    Cohort(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    EnumerationCap(String),
    #[error("{0}")]
    Io(String),
}

impl AppError {
    pub fn code(&self) -> &'static str {
        match self {
            AppError::Schema(_) => "E-SCHEMA",
            AppError::Cohort(_) => "E-COHORT",
            AppError::Config(_) => "E-CONFIG",
            AppError::EnumerationCap(_) => "E-ENUM-CAP",
            AppError::Io(_) => "E-IO",
        }
    }

    /// One-line diagnostic: `<code>: <message>`.
    pub fn diagnostic(&self) -> String {
        format!("{}: {}", self.code(), self)
    }
}

fn in_file(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<CohortError> for AppError {
    fn from(e: CohortError) -> Self {
        AppError::Cohort(e.to_string())
    }
}

impl From<AnnealError> for AppError {
    fn from(e: AnnealError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<OracleError> for AppError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::CapExceeded { .. } => AppError::EnumerationCap(e.to_string()),
            other => AppError::Config(other.to_string()),
        }
    }
}

impl From<ReportError> for AppError {
    fn from(e: ReportError) -> Self {
        AppError::Io(e.to_string())
    }
}

fn records_error(path: &Path, e: RecordsError) -> AppError {
    match e {
        RecordsError::Csv(ref inner) if inner.is_io_error() => AppError::Io(in_file(path, e)),
        other => AppError::Schema(in_file(path, other)),
    }
}

fn open(path: &Path) -> Result<File, AppError> {
    File::open(path).map_err(|e| AppError::Io(in_file(path, e)))
}

fn create(path: &Path) -> Result<BufWriter<File>, AppError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::Io(in_file(path, e)))
}

/// A cohort together with what happened while loading it.
#[derive(Debug, Clone)]
pub struct LoadedCohort {
    pub cohort: Cohort,
    pub raw_rows: usize,
    pub row_errors: Vec<RowError>,
    pub prereq_diagnostics: Vec<RowError>,
    pub clean_stats: DatasetStats,
}

pub fn load_cohort(cfg: &RunConfig) -> Result<LoadedCohort, AppError> {
    let parsed = parse_records(open(&cfg.records)?, &cfg.record_format)
        .map_err(|e| records_error(&cfg.records, e))?;
    let prereqs = parse_prereqs(open(&cfg.prereqs)?, &cfg.prereq_format)
        .map_err(|e| records_error(&cfg.prereqs, e))?;
    let clean = clean_records(&parsed.rows);
    let cohort = select_cohort(
        &clean,
        &prereqs.entries,
        &cfg.course,
        &cfg.semester,
        cfg.limit,
    )?;
    Ok(LoadedCohort {
        cohort,
        raw_rows: parsed.rows.len(),
        row_errors: parsed.errors,
        prereq_diagnostics: prereqs.diagnostics,
        clean_stats: dataset_stats(&clean),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub loaded: LoadedCohort,
    pub result: AnnealResult,
    pub assignments: PathBuf,
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
}

pub const ASSIGNMENTS_FILE: &str = "assignments.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

pub fn trace_file_name(restart: usize) -> String {
    format!("trace_restart_{restart}.csv")
}

/// Loads, optimizes and writes all artifacts once every restart is done.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, AppError> {
    let out_dir = cfg
        .out
        .clone()
        .ok_or_else(|| AppError::Config("out is required".into()))?;
    let loaded = load_cohort(cfg)?;
    let plan = RestartPlan {
        n_restarts: cfg.n_restarts,
        max_group_size: cfg.max_group_size,
        master_seed: cfg.master_seed,
        parallel: cfg.parallel,
    };
    let runs = run_restarts(&loaded.cohort, &cfg.objective, &cfg.schedule, &plan)?;

    fs::create_dir_all(&out_dir).map_err(|e| AppError::Io(in_file(&out_dir, e)))?;
    let mut traces = Vec::with_capacity(runs.len());
    for (i, r) in runs.iter().enumerate() {
        let path = out_dir.join(trace_file_name(i));
        write_trace(create(&path)?, &r.trace)?;
        traces.push(path);
    }
    let result = merge_restarts(runs)?;

    let assignments = out_dir.join(ASSIGNMENTS_FILE);
    write_assignments(
        create(&assignments)?,
        &loaded.cohort,
        &result.best_partition,
    )?;

    let summary = out_dir.join(SUMMARY_FILE);
    let text = RunSummary {
        cohort: &loaded.cohort,
        result: &result,
        settings: cfg.summary_settings(),
    }
    .render();
    fs::write(&summary, text).map_err(|e| AppError::Io(in_file(&summary, e)))?;

    Ok(RunOutput {
        loaded,
        result,
        assignments,
        traces,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub cohort_size: usize,
    pub enumerated: usize,
    pub optimal_partitions: usize,
    pub oracle_score: f64,
    pub seeds: usize,
    pub hits: usize,
    pub mean_best: f64,
    pub worst_best: f64,
    pub threshold: f64,
}

impl VerifyReport {
    pub fn hit_rate(&self) -> f64 {
        if self.seeds == 0 {
            1.0
        } else {
            self.hits as f64 / self.seeds as f64
        }
    }

    pub fn passed(&self) -> bool {
        self.hit_rate() >= self.threshold
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cohort_size: {}", self.cohort_size);
        let _ = writeln!(s, "partitions_enumerated: {}", self.enumerated);
        let _ = writeln!(s, "oracle_best: {}", self.oracle_score);
        let _ = writeln!(s, "oracle_optimal_partitions: {}", self.optimal_partitions);
        let _ = writeln!(s, "sa_mean_best: {}", self.mean_best);
        let _ = writeln!(s, "sa_worst_best: {}", self.worst_best);
        let _ = writeln!(s, "max_gap: {}", self.oracle_score - self.worst_best);
        let _ = writeln!(s, "hits: {}/{}", self.hits, self.seeds);
        let _ = writeln!(s, "threshold: {}", self.threshold);
        let _ = writeln!(
            s,
            "verdict: {}",
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

/// Compares the annealer against the exhaustive optimum over `seeds`
/// consecutive master seeds starting at the configured one.
pub fn verify(cfg: &RunConfig, seeds: usize, threshold: f64) -> Result<VerifyReport, AppError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AppError::Config(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    let loaded = load_cohort(cfg)?;
    let cohort = &loaded.cohort;
    let oracle = brute_force_best(cohort, &cfg.objective, cfg.max_group_size)?;

    let mut hits = 0;
    let mut total = 0.0;
    let mut worst = f64::INFINITY;
    for k in 0..seeds {
        let plan = RestartPlan {
            n_restarts: cfg.n_restarts,
            max_group_size: cfg.max_group_size,
            master_seed: cfg.master_seed.wrapping_add(k as u64),
            parallel: cfg.parallel,
        };
        let result = merge_restarts(run_restarts(cohort, &cfg.objective, &cfg.schedule, &plan)?)?;
        if hits_optimum(result.best_score, oracle.score) {
            hits += 1;
        }
        total += result.best_score;
        worst = worst.min(result.best_score);
    }
    Ok(VerifyReport {
        cohort_size: cohort.len(),
        enumerated: oracle.enumerated,
        optimal_partitions: oracle.partitions.len(),
        oracle_score: oracle.score,
        seeds,
        hits,
        mean_best: if seeds == 0 {
            f64::NAN
        } else {
            total / seeds as f64
        },
        worst_best: if seeds == 0 { f64::NAN } else { worst },
        threshold,
    })
}

pub const SYNTH_RECORDS_FILE: &str = "records.csv";
pub const SYNTH_PREREQS_FILE: &str = "prereqs.csv";

/// Writes `records.csv` and `prereqs.csv` into `out_dir`.
pub fn synth(spec: &SynthSpec, out_dir: &Path) -> Result<(PathBuf, PathBuf), AppError> {
    if spec.n_students == 0 || spec.n_courses == 0 {
        return Err(AppError::Config(
            "students and courses must be positive".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.prereq_density) {
        return Err(AppError::Config(format!(
            "prerequisite density {} outside [0, 1]",
            spec.prereq_density
        )));
    }
    let data = generate(spec);
    fs::create_dir_all(out_dir).map_err(|e| AppError::Io(in_file(out_dir, e)))?;
    let records = out_dir.join(SYNTH_RECORDS_FILE);
    let prereqs = out_dir.join(SYNTH_PREREQS_FILE);
    write_records(create(&records)?, &data.records)
        .map_err(|e| AppError::Io(in_file(&records, e)))?;
    write_prereqs(create(&prereqs)?, &data.prereqs)
        .map_err(|e| AppError::Io(in_file(&prereqs, e)))?;
    Ok((records, prereqs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub raw_rows: usize,
    pub row_errors: usize,
    pub clean: DatasetStats,
}

impl StatsReport {
    pub fn render(&self) -> String {
        format!(
            "raw_rows: {}\nrow_errors: {}\nclean_rows: {}\nstudents: {}\ncourses: {}\n",
            self.raw_rows,
            self.row_errors,
            self.clean.rows,
            self.clean.students,
            self.clean.courses
        )
    }
}

pub fn stats(records: &Path, format: &RecordFormat) -> Result<StatsReport, AppError> {
    if !records.is_file() {
        return Err(AppError::Config(format!(
            "record file not found: {}",
            records.display()
        )));
    }
    let parsed = parse_records(open(records)?, format).map_err(|e| records_error(records, e))?;
    let clean = clean_records(&parsed.rows);
    Ok(StatsReport {
        raw_rows: parsed.rows.len(),
        row_errors: parsed.errors.len(),
        clean: dataset_stats(&clean),
    })
}
