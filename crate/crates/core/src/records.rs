//! Academic record ingestion and cleaning.
//!
//! Raw rows are read from a delimited table with a header. Cleaning keeps one
//! row per (student, course) pair, the one with the highest marks, and then
//! drops failing rows (marks below [`PASS_MARK`]).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;

use thiserror::Error;

/// Lowest mark that counts as a pass.
pub const PASS_MARK: u8 = 40;

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("missing required column '{column}' (header: {header})")]
    MissingColumn { column: String, header: String },
    #[error("all {count} data rows failed to parse; first error: {first}")]
    AllRowsFailed { count: usize, first: RowError },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// A data line that could not be turned into a record.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// One row as it appears in the record file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecordRow {
    pub student_id: String,
    pub course_code: String,
    pub credits: f64,
    /// Term token; ordered lexicographically.
    pub semester: String,
    pub gender: String,
    pub marks: u8,
}

/// A deduplicated, passing record. At most one exists per (student, course).
#[derive(Debug, Clone, PartialEq)]
pub struct CleanRecord {
    pub student_id: String,
    pub course_code: String,
    pub credits: f64,
    pub semester: String,
    pub gender: String,
    pub marks: u8,
}

impl From<CleanRecord> for RawRecordRow {
    fn from(r: CleanRecord) -> Self {
        RawRecordRow {
            student_id: r.student_id,
            course_code: r.course_code,
            credits: r.credits,
            semester: r.semester,
            gender: r.gender,
            marks: r.marks,
        }
    }
}

impl From<RawRecordRow> for CleanRecord {
    fn from(r: RawRecordRow) -> Self {
        CleanRecord {
            student_id: r.student_id,
            course_code: r.course_code,
            credits: r.credits,
            semester: r.semester,
            gender: r.gender,
            marks: r.marks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PrerequisiteEntry {
    pub course_code: String,
    pub prerequisite_code: String,
}

/// Header labels for each record attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub student_id: String,
    pub course_code: String,
    pub credits: String,
    pub semester: String,
    pub gender: String,
    pub marks: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            student_id: "student_id".into(),
            course_code: "course_code".into(),
            credits: "credits".into(),
            semester: "semester".into(),
            gender: "gender".into(),
            marks: "marks".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordFormat {
    pub delimiter: u8,
    pub columns: ColumnMap,
}

impl Default for RecordFormat {
    fn default() -> Self {
        RecordFormat {
            delimiter: b',',
            columns: ColumnMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrereqFormat {
    pub delimiter: u8,
    pub course_column: String,
    pub prerequisite_column: String,
}

impl Default for PrereqFormat {
    fn default() -> Self {
        PrereqFormat {
            delimiter: b',',
            course_column: "course_code".into(),
            prerequisite_column: "prerequisite_code".into(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRecords {
    pub rows: Vec<RawRecordRow>,
    pub errors: Vec<RowError>,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedPrereqs {
    pub entries: Vec<PrerequisiteEntry>,
    /// Rejected lines (self-prerequisites, empty identifiers).
    pub diagnostics: Vec<RowError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DatasetStats {
    pub rows: usize,
    pub students: usize,
    pub courses: usize,
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize, RecordsError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| RecordsError::MissingColumn {
            column: name.to_string(),
            header: headers.iter().collect::<Vec<_>>().join(","),
        })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

fn parse_marks(s: &str) -> Result<u8, String> {
    let value: f64 = s
        .parse()
        .map_err(|_| format!("marks '{s}' is not numeric"))?;
    if !value.is_finite() || !(0.0..=100.0).contains(&value) {
        return Err(format!("marks {s} outside [0, 100]"));
    }
    Ok(value.round() as u8)
}

fn parse_credits(s: &str) -> Result<f64, String> {
    let value: f64 = s
        .parse()
        .map_err(|_| format!("credits '{s}' is not numeric"))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("credits {s} must be a non-negative number"));
    }
    Ok(value)
}

/// Parses a record table.
///
/// Bad data lines are collected in [`ParsedRecords::errors`]; the call only
/// fails when a required column is missing or when every data line is bad.
pub fn parse_records<R: Read>(
    source: R,
    format: &RecordFormat,
) -> Result<ParsedRecords, RecordsError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let cols = &format.columns;
    let idx = [
        column_index(&headers, &cols.student_id)?,
        column_index(&headers, &cols.course_code)?,
        column_index(&headers, &cols.credits)?,
        column_index(&headers, &cols.semester)?,
        column_index(&headers, &cols.gender)?,
        column_index(&headers, &cols.marks)?,
    ];

    let mut parsed = ParsedRecords::default();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parsed.errors.push(RowError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        match parse_row(&record, &idx) {
            Ok(row) => parsed.rows.push(row),
            Err(message) => parsed.errors.push(RowError {
                line: line_of(&record),
                message,
            }),
        }
    }

    if parsed.rows.is_empty() && !parsed.errors.is_empty() {
        return Err(RecordsError::AllRowsFailed {
            count: parsed.errors.len(),
            first: parsed.errors[0].clone(),
        });
    }
    Ok(parsed)
}

fn parse_row(record: &csv::StringRecord, idx: &[usize; 6]) -> Result<RawRecordRow, String> {
    let field = |i: usize| -> Result<&str, String> {
        record.get(idx[i]).map(str::trim).ok_or_else(|| {
            format!(
                "expected at least {} fields, found {}",
                idx[i] + 1,
                record.len()
            )
        })
    };
    let student_id = field(0)?;
    let course_code = field(1)?;
    if student_id.is_empty() {
        return Err("empty student id".into());
    }
    if course_code.is_empty() {
        return Err("empty course code".into());
    }
    Ok(RawRecordRow {
        student_id: student_id.to_string(),
        course_code: course_code.to_string(),
        credits: parse_credits(field(2)?)?,
        semester: field(3)?.to_string(),
        gender: field(4)?.to_string(),
        marks: parse_marks(field(5)?)?,
    })
}

/// Total order used to pick the surviving row of a (student, course) pair:
/// higher marks win, then the later semester. Credits and gender only break
/// ties so the result does not depend on input order.
fn survivor_order(a: &RawRecordRow, b: &RawRecordRow) -> std::cmp::Ordering {
    a.marks
        .cmp(&b.marks)
        .then_with(|| a.semester.cmp(&b.semester))
        .then_with(|| a.credits.total_cmp(&b.credits))
        .then_with(|| a.gender.cmp(&b.gender))
}

/// Deduplicates to the best attempt per (student, course) and drops fails.
///
/// Output is sorted by (student_id, course_code).
pub fn clean_records(rows: &[RawRecordRow]) -> Vec<CleanRecord> {
    let mut best: BTreeMap<(&str, &str), &RawRecordRow> = BTreeMap::new();
    for row in rows {
        best.entry((&row.student_id, &row.course_code))
            .and_modify(|kept| {
                if survivor_order(row, kept).is_gt() {
                    *kept = row;
                }
            })
            .or_insert(row);
    }
    best.into_values()
        .filter(|r| r.marks >= PASS_MARK)
        .map(|r| CleanRecord::from(r.clone()))
        .collect()
}

/// Parses a two-column prerequisite table.
///
/// Duplicate pairs are collapsed (first occurrence kept). Self-prerequisites
/// and blank identifiers are rejected with a diagnostic.
pub fn parse_prereqs<R: Read>(
    source: R,
    format: &PrereqFormat,
) -> Result<ParsedPrereqs, RecordsError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let course_idx = column_index(&headers, &format.course_column)?;
    let prereq_idx = column_index(&headers, &format.prerequisite_column)?;

    let mut parsed = ParsedPrereqs::default();
    let mut seen = HashSet::new();
    for result in reader.records() {
        let record = result?;
        let line = line_of(&record);
        let course = record.get(course_idx).unwrap_or("").trim();
        let prereq = record.get(prereq_idx).unwrap_or("").trim();
        if course.is_empty() || prereq.is_empty() {
            parsed.diagnostics.push(RowError {
                line,
                message: "empty course or prerequisite code".into(),
            });
            continue;
        }
        if course == prereq {
            parsed.diagnostics.push(RowError {
                line,
                message: format!("course {course} lists itself as a prerequisite"),
            });
            continue;
        }
        let entry = PrerequisiteEntry {
            course_code: course.to_string(),
            prerequisite_code: prereq.to_string(),
        };
        if seen.insert(entry.clone()) {
            parsed.entries.push(entry);
        }
    }
    Ok(parsed)
}

pub fn dataset_stats(records: &[CleanRecord]) -> DatasetStats {
    let students: BTreeSet<&str> = records.iter().map(|r| r.student_id.as_str()).collect();
    let courses: BTreeSet<&str> = records.iter().map(|r| r.course_code.as_str()).collect();
    DatasetStats {
        rows: records.len(),
        students: students.len(),
        courses: courses.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(s: &str, c: &str, sem: &str, marks: u8) -> RawRecordRow {
        RawRecordRow {
            student_id: s.into(),
            course_code: c.into(),
            credits: 3.0,
            semester: sem.into(),
            gender: "F".into(),
            marks,
        }
    }

    const HEADER: &str = "student_id,course_code,credits,semester,gender,marks\n";

    #[test]
    fn parses_single_valid_line() {
        let text = format!("{HEADER}S1,C1,3,2020-1,M,72\n");
        let parsed = parse_records(text.as_bytes(), &RecordFormat::default()).unwrap();
        assert_eq!(parsed.rows.len(), 1);
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.rows[0].marks, 72);
        assert_eq!(parsed.rows[0].semester, "2020-1");
    }

    #[test]
    fn non_numeric_marks_is_a_row_error() {
        let text = format!("{HEADER}S1,C1,3,2020-1,M,72\nS2,C1,3,2020-1,F,abc\n");
        let parsed = parse_records(text.as_bytes(), &RecordFormat::default()).unwrap();
        assert_eq!(parsed.rows.len(), 1);
        assert_eq!(parsed.errors.len(), 1);
        assert_eq!(parsed.errors[0].line, 3);
        assert!(parsed.errors[0].message.contains("abc"));
    }

    #[test]
    fn all_rows_bad_is_fatal() {
        let text = format!("{HEADER}S1,C1,3,2020-1,M,abc\n");
        match parse_records(text.as_bytes(), &RecordFormat::default()) {
            Err(RecordsError::AllRowsFailed { count, first }) => {
                assert_eq!(count, 1);
                assert_eq!(first.line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let parsed = parse_records(HEADER.as_bytes(), &RecordFormat::default()).unwrap();
        assert!(parsed.rows.is_empty());
        assert!(parsed.errors.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "student_id,course_code,credits,semester,gender\nS1,C1,3,2020-1,M\n";
        let err = parse_records(text.as_bytes(), &RecordFormat::default()).unwrap_err();
        assert!(matches!(err, RecordsError::MissingColumn { ref column, .. } if column == "marks"));
    }

    #[test]
    fn remapped_columns_and_delimiter() {
        let format = RecordFormat {
            delimiter: b';',
            columns: ColumnMap {
                student_id: "Student ID".into(),
                course_code: "Course Code".into(),
                credits: "Credits".into(),
                semester: "Semester".into(),
                gender: "Gender".into(),
                marks: "Marks Round".into(),
            },
        };
        let text = "Student ID;Course Code;Credits;Semester;Gender;Marks Round;Total\nS9;CSE101;1.5;2019-2;F;88;87.6\n";
        let parsed = parse_records(text.as_bytes(), &format).unwrap();
        assert_eq!(parsed.rows[0].student_id, "S9");
        assert_eq!(parsed.rows[0].credits, 1.5);
    }

    #[test]
    fn out_of_range_marks_and_negative_credits_rejected() {
        let text = format!("{HEADER}S1,C1,3,2020-1,M,101\nS1,C2,-1,2020-1,M,50\n,C3,3,2020-1,M,50\nS2,C1,3,2020-1,M,60\n");
        let parsed = parse_records(text.as_bytes(), &RecordFormat::default()).unwrap();
        assert_eq!(parsed.rows.len(), 1);
        assert_eq!(
            parsed.errors.iter().map(|e| e.line).collect::<Vec<_>>(),
            vec![2, 3, 4]
        );
    }

    #[test]
    fn keeps_max_marks_per_pair() {
        let out = clean_records(&[raw("S1", "C1", "sem1", 70), raw("S1", "C1", "sem2", 85)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].marks, 85);
        assert_eq!(out[0].semester, "sem2");
    }

    #[test]
    fn fail_dropped_and_boundary_kept() {
        assert!(clean_records(&[raw("S1", "C1", "sem1", 39)]).is_empty());
        let kept = clean_records(&[raw("S1", "C1", "sem1", 40)]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].marks, 40);
    }

    #[test]
    fn equal_marks_prefer_later_semester() {
        let out = clean_records(&[raw("S1", "C1", "2021-2", 70), raw("S1", "C1", "2020-1", 70)]);
        assert_eq!(out[0].semester, "2021-2");
    }

    #[test]
    fn output_sorted_by_student_then_course() {
        let out = clean_records(&[
            raw("S2", "C1", "a", 50),
            raw("S1", "C2", "a", 50),
            raw("S1", "C1", "a", 50),
        ]);
        let keys: Vec<_> = out
            .iter()
            .map(|r| (r.student_id.as_str(), r.course_code.as_str()))
            .collect();
        assert_eq!(keys, vec![("S1", "C1"), ("S1", "C2"), ("S2", "C1")]);
    }

    #[test]
    fn prereq_parsing() {
        let fmt = PrereqFormat::default();
        let one = parse_prereqs("course_code,prerequisite_code\nC2,C1\n".as_bytes(), &fmt).unwrap();
        assert_eq!(one.entries.len(), 1);
        assert_eq!(one.entries[0].prerequisite_code, "C1");

        let dup = parse_prereqs(
            "course_code,prerequisite_code\nC2,C1\nC2,C1\n".as_bytes(),
            &fmt,
        )
        .unwrap();
        assert_eq!(dup.entries.len(), 1);

        let selfref =
            parse_prereqs("course_code,prerequisite_code\nC1,C1\n".as_bytes(), &fmt).unwrap();
        assert!(selfref.entries.is_empty());
        assert_eq!(selfref.diagnostics.len(), 1);
        assert_eq!(selfref.diagnostics[0].line, 2);
    }

    #[test]
    fn stats_counts() {
        assert_eq!(dataset_stats(&[]), DatasetStats::default());
        let recs = clean_records(&[
            raw("S1", "C1", "a", 50),
            raw("S1", "C2", "a", 60),
            raw("S2", "C1", "a", 70),
        ]);
        assert_eq!(
            dataset_stats(&recs),
            DatasetStats {
                rows: 3,
                students: 2,
                courses: 2
            }
        );
    }
}
