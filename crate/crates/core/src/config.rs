//! Run configuration from a key-value file plus command-line overrides.
//!
//! The file is TOML with flat keys matching the long flag names
//! (`group_size = 3`, `tmin = 0.0001`, ...). Column labels for the record
//! file go in an optional `[columns]` table.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::annealer::Schedule;
use crate::cohort::FEATURE_DIM;
use crate::objective::{ObjectiveKind, ObjectiveSpec};
use crate::records::{ColumnMap, PrereqFormat, RecordFormat};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{key} is required")]
    Missing { key: &'static str },
    #[error("{what} not found: {path}")]
    FileNotFound { what: &'static str, path: PathBuf },
    #[error("invalid {key}: {message}")]
    Invalid { key: &'static str, message: String },
    #[error("config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnOverrides {
    pub student_id: Option<String>,
    pub course_code: Option<String>,
    pub credits: Option<String>,
    pub semester: Option<String>,
    pub gender: Option<String>,
    pub marks: Option<String>,
    pub prereq_course: Option<String>,
    pub prereq_prerequisite: Option<String>,
}

/// Every setting as optional; used for both the file and the flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub records: Option<PathBuf>,
    pub prereqs: Option<PathBuf>,
    pub course: Option<String>,
    pub semester: Option<String>,
    pub limit: Option<usize>,
    pub group_size: Option<usize>,
    pub t0: Option<f64>,
    pub alpha: Option<f64>,
    pub tmin: Option<f64>,
    pub max_iters: Option<u64>,
    /// Seconds.
    pub max_runtime: Option<f64>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub objective: Option<String>,
    pub test_fraction: Option<f64>,
    pub split_seed: Option<u64>,
    pub weights: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub delimiter: Option<char>,
    pub serial: Option<bool>,
    pub columns: Option<ColumnOverrides>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|_| ConfigError::FileNotFound {
            what: "config file",
            path: path.to_path_buf(),
        })?;
        Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }

    /// Values set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &Settings) -> Settings {
        overlay!(
            self,
            top,
            records,
            prereqs,
            course,
            semester,
            limit,
            group_size,
            t0,
            alpha,
            tmin,
            max_iters,
            max_runtime,
            restarts,
            seed,
            objective,
            test_fraction,
            split_seed,
            weights,
            out,
            delimiter,
            serial
        );
        match (&mut self.columns, &top.columns) {
            (Some(base), Some(cols)) => {
                overlay!(
                    base,
                    cols,
                    student_id,
                    course_code,
                    credits,
                    semester,
                    gender,
                    marks,
                    prereq_course,
                    prereq_prerequisite
                );
            }
            (None, Some(cols)) => self.columns = Some(cols.clone()),
            _ => {}
        }
        self
    }

    fn delimiter_byte(&self) -> Result<u8, ConfigError> {
        match self.delimiter {
            None => Ok(b','),
            Some(c) if c.is_ascii() => Ok(c as u8),
            Some(c) => Err(ConfigError::Invalid {
                key: "delimiter",
                message: format!("'{c}' is not a single-byte character"),
            }),
        }
    }

    pub fn record_format(&self) -> Result<RecordFormat, ConfigError> {
        let mut columns = ColumnMap::default();
        if let Some(c) = &self.columns {
            let pick = |v: &Option<String>, slot: &mut String| {
                if let Some(v) = v {
                    *slot = v.clone();
                }
            };
            pick(&c.student_id, &mut columns.student_id);
            pick(&c.course_code, &mut columns.course_code);
            pick(&c.credits, &mut columns.credits);
            pick(&c.semester, &mut columns.semester);
            pick(&c.gender, &mut columns.gender);
            pick(&c.marks, &mut columns.marks);
        }
        Ok(RecordFormat {
            delimiter: self.delimiter_byte()?,
            columns,
        })
    }

    pub fn prereq_format(&self) -> Result<PrereqFormat, ConfigError> {
        let mut format = PrereqFormat {
            delimiter: self.delimiter_byte()?,
            ..Default::default()
        };
        if let Some(c) = &self.columns {
            if let Some(v) = &c.prereq_course {
                format.course_column = v.clone();
            }
            if let Some(v) = &c.prereq_prerequisite {
                format.prerequisite_column = v.clone();
            }
        }
        Ok(format)
    }
}

/// Fully resolved settings for `run` and `verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub records: PathBuf,
    pub prereqs: PathBuf,
    pub course: String,
    pub semester: String,
    pub limit: usize,
    pub max_group_size: usize,
    pub objective: ObjectiveSpec,
    pub schedule: Schedule,
    pub n_restarts: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub record_format: RecordFormat,
    pub prereq_format: PrereqFormat,
    pub parallel: bool,
}

pub const DEFAULT_LIMIT: usize = 30;
pub const DEFAULT_GROUP_SIZE: usize = 3;
pub const DEFAULT_RESTARTS: usize = 5;

fn existing(
    path: Option<&PathBuf>,
    key: &'static str,
    what: &'static str,
) -> Result<PathBuf, ConfigError> {
    let path = path.ok_or(ConfigError::Missing { key })?;
    if !path.is_file() {
        return Err(ConfigError::FileNotFound {
            what,
            path: path.clone(),
        });
    }
    Ok(path.clone())
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        message: message.into(),
    }
}

impl RunConfig {
    pub fn resolve(s: &Settings) -> Result<RunConfig, ConfigError> {
        let records = existing(s.records.as_ref(), "records", "record file")?;
        let prereqs = existing(s.prereqs.as_ref(), "prereqs", "prerequisite file")?;
        let course = s
            .course
            .clone()
            .ok_or(ConfigError::Missing { key: "course" })?;
        let semester = s
            .semester
            .clone()
            .ok_or(ConfigError::Missing { key: "semester" })?;

        let limit = s.limit.unwrap_or(DEFAULT_LIMIT);
        if limit < 2 {
            return Err(invalid("limit", "cohort limit must be at least 2"));
        }
        let max_group_size = s.group_size.unwrap_or(DEFAULT_GROUP_SIZE);
        if max_group_size == 0 {
            return Err(invalid("group_size", "must be positive"));
        }
        let n_restarts = s.restarts.unwrap_or(DEFAULT_RESTARTS);
        if n_restarts == 0 {
            return Err(invalid("restarts", "at least one restart is required"));
        }

        let defaults = Schedule::default();
        let max_runtime = match s.max_runtime {
            None => defaults.max_runtime,
            Some(secs) if secs.is_finite() && secs > 0.0 => Duration::from_secs_f64(secs),
            Some(secs) => {
                return Err(invalid(
                    "max_runtime",
                    format!("{secs} is not a positive number of seconds"),
                ))
            }
        };
        let schedule = Schedule {
            t0: s.t0.unwrap_or(defaults.t0),
            alpha: s.alpha.unwrap_or(defaults.alpha),
            t_min: s.tmin.unwrap_or(defaults.t_min),
            max_iterations: s.max_iters.unwrap_or(defaults.max_iterations),
            max_runtime,
        };
        schedule
            .validate()
            .map_err(|e| invalid("schedule", e.to_string()))?;

        let mut objective = ObjectiveSpec::default();
        if let Some(kind) = &s.objective {
            objective.kind = kind
                .parse::<ObjectiveKind>()
                .map_err(|e| invalid("objective", e.to_string()))?;
        }
        if let Some(f) = s.test_fraction {
            objective.test_fraction = f;
        }
        if let Some(seed) = s.split_seed {
            objective.split_seed = seed;
        }
        if let Some(w) = &s.weights {
            objective.feature_weights =
                <[f64; FEATURE_DIM]>::try_from(w.as_slice()).map_err(|_| {
                    invalid(
                        "weights",
                        format!("expected {FEATURE_DIM} values, got {}", w.len()),
                    )
                })?;
        }
        objective
            .validate()
            .map_err(|e| invalid("objective", e.to_string()))?;

        Ok(RunConfig {
            records,
            prereqs,
            course,
            semester,
            limit,
            max_group_size,
            objective,
            schedule,
            n_restarts,
            master_seed: s.seed.unwrap_or(0),
            out: s.out.clone(),
            record_format: s.record_format()?,
            prereq_format: s.prereq_format()?,
            parallel: !s.serial.unwrap_or(false),
        })
    }

    /// Settings echoed into the run summary.
    pub fn summary_settings(&self) -> Vec<(String, String)> {
        let o = &self.objective;
        let sch = &self.schedule;
        let weights: Vec<String> = o.feature_weights.iter().map(f64::to_string).collect();
        vec![
            ("max_group_size".into(), self.max_group_size.to_string()),
            ("objective".into(), o.kind.to_string()),
            ("test_fraction".into(), o.test_fraction.to_string()),
            ("split_seed".into(), o.split_seed.to_string()),
            ("feature_weights".into(), weights.join(",")),
            ("t0".into(), sch.t0.to_string()),
            ("alpha".into(), sch.alpha.to_string()),
            ("t_min".into(), sch.t_min.to_string()),
            ("max_iterations".into(), sch.max_iterations.to_string()),
            (
                "max_runtime_secs".into(),
                sch.max_runtime.as_secs_f64().to_string(),
            ),
            ("restarts".into(), self.n_restarts.to_string()),
            ("master_seed".into(), self.master_seed.to_string()),
        ]
    }
}
