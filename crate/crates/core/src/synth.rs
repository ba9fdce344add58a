//! Synthetic academic records for demos and tests.
//!
//! Students enter in staggered intake terms and move through the course list
//! in order, a few courses per term, skipping some. Marks come from a
//! per-student ability, a per-course difficulty and per-attempt noise. Failed
//! attempts are retaken the following term and a few passing students retake
//! to improve, so the raw table always contains duplicates and fails.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::records::{PrerequisiteEntry, RawRecordRow, PASS_MARK};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_students: usize,
    pub n_courses: usize,
    /// Probability that an earlier course is a prerequisite of a later one.
    pub prereq_density: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_students: 120,
            n_courses: 12,
            prereq_density: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub records: Vec<RawRecordRow>,
    pub prereqs: Vec<PrerequisiteEntry>,
}

const INTAKES: usize = 4;
const COURSES_PER_TERM: usize = 4;
const TAKE_PROBABILITY: f64 = 0.7;
const IMPROVEMENT_RETAKE: f64 = 0.04;
const MAX_RETAKES: usize = 2;

pub fn course_code(i: usize) -> String {
    format!("C{:03}", i + 1)
}

pub fn student_id(i: usize) -> String {
    format!("S{:05}", i + 1)
}

/// Sortable term token, three terms per year starting in 2015.
pub fn term(i: usize) -> String {
    format!("{}-{}", 2015 + i / 3, i % 3 + 1)
}

fn clamp_marks(x: f64) -> u8 {
    x.round().clamp(0.0, 100.0) as u8
}

pub fn generate(spec: &SynthSpec) -> SynthData {
    assert!(
        spec.n_students > 0 && spec.n_courses > 0,
        "sizes must be positive"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let density = spec.prereq_density.clamp(0.0, 1.0);

    let mut prereqs = Vec::new();
    for later in 1..spec.n_courses {
        for earlier in 0..later {
            if rng.gen_bool(density) {
                prereqs.push(PrerequisiteEntry {
                    course_code: course_code(later),
                    prerequisite_code: course_code(earlier),
                });
            }
        }
    }

    let difficulty_dist = Normal::new(0.0, 6.0).expect("valid normal");
    let ability_dist = Normal::new(65.0, 12.0).expect("valid normal");
    let noise = Normal::new(0.0, 8.0).expect("valid normal");
    let difficulty: Vec<f64> = (0..spec.n_courses)
        .map(|_| difficulty_dist.sample(&mut rng))
        .collect();
    let credits: Vec<f64> = (0..spec.n_courses)
        .map(|c| if c % 4 == 3 { 1.0 } else { 3.0 })
        .collect();

    let mut records = Vec::new();
    for s in 0..spec.n_students {
        let id = student_id(s);
        let gender = if rng.gen_bool(0.5) { "F" } else { "M" };
        let ability = ability_dist.sample(&mut rng);
        let intake = s % INTAKES;
        for c in 0..spec.n_courses {
            if !rng.gen_bool(TAKE_PROBABILITY) {
                continue;
            }
            let first_term = intake + c / COURSES_PER_TERM;
            for attempt in 0..=MAX_RETAKES {
                let marks = clamp_marks(ability - difficulty[c] + noise.sample(&mut rng));
                records.push(RawRecordRow {
                    student_id: id.clone(),
                    course_code: course_code(c),
                    credits: credits[c],
                    semester: term(first_term + attempt),
                    gender: gender.to_string(),
                    marks,
                });
                let retake = marks < PASS_MARK || rng.gen_bool(IMPROVEMENT_RETAKE);
                if !retake || attempt == MAX_RETAKES {
                    break;
                }
            }
        }
    }

    // Guarantee at least one duplicate pair and one failing row.
    if let Some(first) = records.first().cloned() {
        records.push(RawRecordRow {
            marks: PASS_MARK - 5,
            ..first
        });
    }

    SynthData { records, prereqs }
}

pub fn write_records<W: Write>(out: W, rows: &[RawRecordRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "student_id",
        "course_code",
        "credits",
        "semester",
        "gender",
        "marks",
    ])?;
    for r in rows {
        w.write_record([
            r.student_id.as_str(),
            r.course_code.as_str(),
            &r.credits.to_string(),
            r.semester.as_str(),
            r.gender.as_str(),
            &r.marks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_prereqs<W: Write>(out: W, entries: &[PrerequisiteEntry]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["course_code", "prerequisite_code"])?;
    for e in entries {
        w.write_record([e.course_code.as_str(), e.prerequisite_code.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{clean_records, parse_prereqs, parse_records, PrereqFormat, RecordFormat};

    #[test]
    fn deterministic() {
        let spec = SynthSpec::default();
        assert_eq!(generate(&spec), generate(&spec));
        let other = SynthSpec {
            seed: 1,
            ..spec.clone()
        };
        assert_ne!(generate(&spec), generate(&other));
    }

    #[test]
    fn cleaning_shrinks_raw_rows() {
        for seed in 0..5 {
            let data = generate(&SynthSpec {
                n_students: 3,
                n_courses: 2,
                seed,
                ..Default::default()
            });
            assert!(clean_records(&data.records).len() < data.records.len());
            assert!(data.records.iter().any(|r| r.marks < PASS_MARK));
        }
    }

    #[test]
    fn files_parse_back() {
        let data = generate(&SynthSpec::default());
        let mut rec = Vec::new();
        write_records(&mut rec, &data.records).unwrap();
        let parsed = parse_records(rec.as_slice(), &RecordFormat::default()).unwrap();
        assert!(parsed.errors.is_empty());
        assert_eq!(parsed.rows, data.records);

        let mut pre = Vec::new();
        write_prereqs(&mut pre, &data.prereqs).unwrap();
        let parsed = parse_prereqs(pre.as_slice(), &PrereqFormat::default()).unwrap();
        assert_eq!(parsed.entries, data.prereqs);
        assert!(parsed.diagnostics.is_empty());
    }

    #[test]
    fn terms_sort_in_time_order() {
        let terms: Vec<String> = (0..20).map(term).collect();
        let mut sorted = terms.clone();
        sorted.sort();
        assert_eq!(terms, sorted);
    }
}
