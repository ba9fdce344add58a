//! Exhaustive enumeration of partitions for small cohorts.
//!
//! The search space matches the annealer's: exactly `ceil(n / s)` non-empty
//! groups of at most `s` students. Each partition is produced once, already
//! canonical, by always opening a new group with the smallest student not
//! yet placed.

use thiserror::Error;

use crate::cohort::{group_count, CanonicalForm, Cohort, Partition};
use crate::objective::{evaluate, ObjectiveError, ObjectiveSpec};

/// Largest cohort the oracle accepts.
pub const MAX_COHORT: usize = 12;
/// Largest number of partitions the oracle will enumerate.
pub const MAX_PARTITIONS: u128 = 1_000_000;

/// Two scores closer than this are treated as tied.
pub const SCORE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("enumeration refused: {students} students in groups of {max_group_size} give {count} partitions (limits: {MAX_COHORT} students, {MAX_PARTITIONS} partitions)")]
    CapExceeded {
        students: usize,
        max_group_size: usize,
        count: u128,
    },
    #[error("max group size must be positive")]
    ZeroGroupSize,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationSpec {
    pub cohort_size: usize,
    pub max_group_size: usize,
    /// Only partitions whose groups are all exactly `max_group_size`.
    pub exact_fill: bool,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of ways to split `n` labeled students into exactly `groups`
/// unlabeled non-empty groups with sizes in `min_size..=max_size`.
fn count_restricted(n: usize, groups: usize, min_size: usize, max_size: usize) -> u128 {
    // ways[m][g]: first member of each group anchors it.
    let mut ways = vec![vec![0u128; groups + 1]; n + 1];
    ways[0][0] = 1;
    for m in 1..=n {
        for g in 1..=groups {
            let mut total = 0u128;
            for size in min_size..=max_size.min(m) {
                total = total.saturating_add(
                    binomial(m - 1, size - 1).saturating_mul(ways[m - size][g - 1]),
                );
            }
            ways[m][g] = total;
        }
    }
    ways[n][groups]
}

impl EnumerationSpec {
    pub fn n_groups(&self) -> usize {
        group_count(self.cohort_size, self.max_group_size)
    }

    /// Exact number of partitions the enumeration yields.
    pub fn count(&self) -> u128 {
        if self.max_group_size == 0 {
            return 0;
        }
        let min = if self.exact_fill {
            self.max_group_size
        } else {
            1
        };
        count_restricted(self.cohort_size, self.n_groups(), min, self.max_group_size)
    }

    pub fn check(&self) -> Result<(), OracleError> {
        if self.max_group_size == 0 {
            return Err(OracleError::ZeroGroupSize);
        }
        let count = self.count();
        if self.cohort_size > MAX_COHORT || count > MAX_PARTITIONS {
            return Err(OracleError::CapExceeded {
                students: self.cohort_size,
                max_group_size: self.max_group_size,
                count,
            });
        }
        Ok(())
    }
}

struct Enumerator<'a, F> {
    n: usize,
    n_groups: usize,
    min_size: usize,
    max_size: usize,
    placed: Vec<bool>,
    groups: Vec<Vec<usize>>,
    visit: &'a mut F,
}

impl<F: FnMut(CanonicalForm)> Enumerator<'_, F> {
    fn recurse(&mut self, remaining: usize) {
        let open = self.n_groups - self.groups.len();
        if open == 0 {
            if remaining == 0 {
                (self.visit)(CanonicalForm(self.groups.clone()));
            }
            return;
        }
        if remaining < open * self.min_size || remaining > open * self.max_size {
            return;
        }
        let anchor = (0..self.n)
            .find(|&s| !self.placed[s])
            .expect("unplaced student");
        self.placed[anchor] = true;
        let candidates: Vec<usize> = (anchor + 1..self.n).filter(|&s| !self.placed[s]).collect();
        let mut group = vec![anchor];
        for size in self.min_size..=self.max_size.min(remaining) {
            self.choose(&candidates, 0, size - 1, &mut group, remaining - size);
        }
        self.placed[anchor] = false;
    }

    fn choose(
        &mut self,
        candidates: &[usize],
        from: usize,
        need: usize,
        group: &mut Vec<usize>,
        remaining_after: usize,
    ) {
        if need == 0 {
            self.groups.push(group.clone());
            self.recurse(remaining_after);
            self.groups.pop();
            return;
        }
        for i in from..candidates.len() {
            if candidates.len() - i < need {
                break;
            }
            let s = candidates[i];
            self.placed[s] = true;
            group.push(s);
            self.choose(candidates, i + 1, need - 1, group, remaining_after);
            group.pop();
            self.placed[s] = false;
        }
    }
}

/// Streams every canonical partition of `spec` to `visit`.
pub fn for_each_partition<F>(spec: &EnumerationSpec, mut visit: F) -> Result<(), OracleError>
where
    F: FnMut(CanonicalForm),
{
    spec.check()?;
    let mut e = Enumerator {
        n: spec.cohort_size,
        n_groups: spec.n_groups(),
        min_size: if spec.exact_fill {
            spec.max_group_size
        } else {
            1
        },
        max_size: spec.max_group_size,
        placed: vec![false; spec.cohort_size],
        groups: Vec::new(),
        visit: &mut visit,
    };
    e.recurse(spec.cohort_size);
    Ok(())
}

/// Collects every canonical partition of `n_students` students.
pub fn enumerate_partitions(
    n_students: usize,
    max_group_size: usize,
    exact_fill: bool,
) -> Result<Vec<Partition>, OracleError> {
    let spec = EnumerationSpec {
        cohort_size: n_students,
        max_group_size,
        exact_fill,
    };
    let mut out = Vec::new();
    for_each_partition(&spec, |form| {
        out.push(
            Partition::from_canonical(&form, max_group_size)
                .expect("enumerated partition is valid"),
        );
    })?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBest {
    /// Every partition within [`SCORE_TOLERANCE`] of the maximum.
    pub partitions: Vec<Partition>,
    pub score: f64,
    pub enumerated: usize,
}

/// Scores every partition of the cohort and returns all maximizers.
pub fn brute_force_best(
    cohort: &Cohort,
    spec: &ObjectiveSpec,
    max_group_size: usize,
) -> Result<OracleBest, OracleError> {
    spec.validate()?;
    let partitions = enumerate_partitions(cohort.len(), max_group_size, false)?;
    let scored = partitions
        .into_iter()
        .map(|p| evaluate(cohort, &p, spec).map(|s| (p, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let enumerated = scored.len();
    let best = scored
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let partitions = scored
        .into_iter()
        .filter(|(_, s)| best - s <= SCORE_TOLERANCE)
        .map(|(p, _)| p)
        .collect();
    Ok(OracleBest {
        partitions,
        score: best,
        enumerated,
    })
}

/// Whether `score` reaches the oracle optimum within [`SCORE_TOLERANCE`].
pub fn hits_optimum(score: f64, optimum: f64) -> bool {
    optimum - score <= SCORE_TOLERANCE
}
