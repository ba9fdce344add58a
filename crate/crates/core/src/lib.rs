//! Forms student groups from academic records.
//!
//! The pipeline cleans raw course records ([`records`]), picks one class and
//! builds per-student features from prerequisite marks ([`cohort`]), scores
//! candidate groupings ([`objective`]) and searches for the best grouping
//! with simulated annealing and restarts ([`annealer`]). [`oracle`] checks
//! the annealer against exhaustive enumeration on small classes.

pub mod annealer;
pub mod app;
pub mod cohort;
pub mod config;
pub mod objective;
pub mod oracle;
pub mod records;
pub mod report;
pub mod synth;

pub use annealer::{
    accept, acceptance_probability, anneal, anneal_with_restarts, cooling_steps, AnnealResult,
    Schedule, StopReason,
};
pub use cohort::{initial_partition, propose_neighbor, select_cohort, Cohort, Partition};
pub use objective::{evaluate, ObjectiveKind, ObjectiveSpec};
pub use oracle::{brute_force_best, enumerate_partitions};
pub use records::{clean_records, parse_prereqs, parse_records, CleanRecord, RawRecordRow};
