//! Output artifacts: assignments table, per-restart trace, run summary.

use std::fmt::Write as _;
use std::io::{Read, Write};

use thiserror::Error;

use crate::annealer::{running_best, AnnealResult, TraceRow};
use crate::cohort::{Cohort, CohortError, Partition};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Partition(#[from] CohortError),
}

pub const ASSIGNMENT_HEADER: [&str; 7] = [
    "student_id",
    "group",
    "prereq_marks_mean",
    "current_marks",
    "credits",
    "semester_index",
    "imputed",
];

pub const TRACE_HEADER: [&str; 5] = [
    "iteration",
    "temperature",
    "current_score",
    "best_score",
    "accepted",
];

/// Writes one line per student, in cohort order.
pub fn write_assignments<W: Write>(
    out: W,
    cohort: &Cohort,
    partition: &Partition,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ASSIGNMENT_HEADER)?;
    for (i, (id, f)) in cohort.students().iter().zip(cohort.features()).enumerate() {
        w.write_record([
            id.clone(),
            partition.group_of(i).to_string(),
            f.prereq_marks_mean.to_string(),
            f.current_marks.to_string(),
            f.credits.to_string(),
            f.semester_index.to_string(),
            f.imputed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an assignments table back into a partition of `cohort`.
pub fn read_assignments<R: Read>(
    source: R,
    cohort: &Cohort,
    max_group_size: usize,
) -> Result<Partition, ReportError> {
    let mut r = csv::Reader::from_reader(source);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ReportError::Malformed {
                line: 1,
                message: format!("missing column {name}"),
            })
    };
    let (id_col, group_col) = (col("student_id")?, col("group")?);

    let mut assignment = vec![None; cohort.len()];
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let malformed = |message: String| ReportError::Malformed { line, message };
        let id = rec.get(id_col).unwrap_or("");
        let idx = cohort
            .index_of(id)
            .ok_or_else(|| malformed(format!("student {id} is not in the cohort")))?;
        let group: usize = rec
            .get(group_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| malformed("group is not a non-negative integer".into()))?;
        if assignment[idx].replace(group).is_some() {
            return Err(malformed(format!("student {id} assigned twice")));
        }
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            g.ok_or_else(|| ReportError::Malformed {
                line: 0,
                message: format!("student {} has no assignment", cohort.students()[i]),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_groups = assignment.iter().max().map_or(0, |g| g + 1);
    Ok(Partition::from_assignment(
        assignment,
        n_groups,
        max_group_size,
    )?)
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRow]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for row in trace {
        w.write_record([
            row.iteration.to_string(),
            row.temperature.to_string(),
            row.current_score.to_string(),
            row.best_score.to_string(),
            row.accepted.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable run summary. Contains nothing time-dependent, so equal
/// inputs produce byte-identical text.
#[derive(Debug, Clone)]
pub struct RunSummary<'a> {
    pub cohort: &'a Cohort,
    pub result: &'a AnnealResult,
    /// Settings echoed verbatim as `key: value` lines.
    pub settings: Vec<(String, String)>,
}

impl RunSummary<'_> {
    pub fn render(&self) -> String {
        let r = self.result;
        let mut s = String::new();
        let _ = writeln!(s, "course: {}", self.cohort.course_code());
        let _ = writeln!(s, "semester: {}", self.cohort.semester());
        let _ = writeln!(s, "cohort_size: {}", self.cohort.len());
        let _ = writeln!(s, "groups: {}", r.best_partition.n_groups());
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "best_score: {}", r.best_score);
        let _ = writeln!(s, "best_restart: {}", r.best_restart);
        let _ = writeln!(s, "stop_reason: {}", r.stop_reason);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "| restart | best score | accuracy | running best | stop reason |"
        );
        let _ = writeln!(s, "|---|---|---|---|---|");
        let bests: Vec<f64> = r.restart_summaries.iter().map(|x| x.best_score).collect();
        for (summary, running) in r.restart_summaries.iter().zip(running_best(&bests)) {
            let _ = writeln!(
                s,
                "| {} | {} | {:.2}% | {} | {} |",
                summary.restart,
                summary.best_score,
                summary.best_score * 100.0,
                running,
                summary.stop_reason
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "groups (best partition):");
        for (g, members) in r.best_partition.groups().iter().enumerate() {
            let ids: Vec<&str> = members
                .iter()
                .map(|&i| self.cohort.students()[i].as_str())
                .collect();
            let _ = writeln!(s, "  {g}: {}", ids.join(" "));
        }
        s
    }
}

/// Extracts `(restart, best_score)` rows from a rendered summary table.
pub fn parse_restart_table(summary: &str) -> Vec<(usize, f64)> {
    summary
        .lines()
        .filter(|l| l.starts_with("| ") && !l.starts_with("| restart"))
        .filter_map(|l| {
            let cells: Vec<&str> = l.trim_matches('|').split('|').map(str::trim).collect();
            Some((cells.first()?.parse().ok()?, cells.get(1)?.parse().ok()?))
        })
        .collect()
}
