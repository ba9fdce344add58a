//! Partition scores in `[0, 1]`, always maximized.
//!
//! Two objectives are built in:
//!
//! * **separability** - held-out accuracy of a nearest-centroid classifier
//!   that predicts each student's group from their weighted features. High
//!   when groups form tight, well separated clusters.
//! * **balance** - one minus the normalized spread of group mean performance.
//!   High when every group is about equally strong.
//!
//! Both are computed on the canonical labeling of the partition, so they do
//! not depend on how groups are numbered. A loss-like objective added later
//! has to be mapped into the same "higher is better, within [0, 1]" range.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cohort::{Cohort, Partition, FEATURE_DIM};

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("partition covers {partition} students, cohort has {cohort}")]
    SizeMismatch { partition: usize, cohort: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Separability,
    Balance,
}

impl FromStr for ObjectiveKind {
    type Err = ObjectiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "separability" => Ok(ObjectiveKind::Separability),
            "balance" => Ok(ObjectiveKind::Balance),
            other => Err(ObjectiveError::Config(format!(
                "unknown objective kind '{other}' (expected separability or balance)"
            ))),
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Separability => "separability",
            ObjectiveKind::Balance => "balance",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Share of students held out for scoring the classifier.
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Per-feature weights in [`crate::cohort::FeatureVector::as_array`] order.
    pub feature_weights: [f64; FEATURE_DIM],
}

/// Prerequisite mean and current marks count; credits and semester do not.
pub const DEFAULT_FEATURE_WEIGHTS: [f64; FEATURE_DIM] = [1.0, 1.0, 0.0, 0.0];

impl Default for ObjectiveSpec {
    fn default() -> Self {
        ObjectiveSpec {
            kind: ObjectiveKind::Separability,
            test_fraction: 0.2,
            split_seed: 0,
            feature_weights: DEFAULT_FEATURE_WEIGHTS,
        }
    }
}

impl ObjectiveSpec {
    pub fn with_kind(kind: ObjectiveKind) -> Self {
        ObjectiveSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(ObjectiveError::Config(format!(
                "test fraction {} must lie strictly between 0 and 1",
                self.test_fraction
            )));
        }
        if self
            .feature_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(ObjectiveError::Config(
                "feature weights must be finite and non-negative".into(),
            ));
        }
        if !self.feature_weights.iter().any(|w| *w > 0.0) {
            return Err(ObjectiveError::Config(
                "at least one feature weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_sizes(cohort: &Cohort, partition: &Partition) -> Result<(), ObjectiveError> {
    if cohort.len() != partition.n_students() {
        return Err(ObjectiveError::SizeMismatch {
            partition: partition.n_students(),
            cohort: cohort.len(),
        });
    }
    Ok(())
}

/// Scores `partition` with the objective selected by `spec.kind`.
pub fn evaluate(
    cohort: &Cohort,
    partition: &Partition,
    spec: &ObjectiveSpec,
) -> Result<f64, ObjectiveError> {
    spec.validate()?;
    check_sizes(cohort, partition)?;
    let score = match spec.kind {
        ObjectiveKind::Separability => separability(cohort, partition, spec),
        ObjectiveKind::Balance => balance(cohort, partition, spec),
    };
    Ok(score)
}

pub fn separability_score(
    cohort: &Cohort,
    partition: &Partition,
    spec: &ObjectiveSpec,
) -> Result<f64, ObjectiveError> {
    evaluate(
        cohort,
        partition,
        &ObjectiveSpec {
            kind: ObjectiveKind::Separability,
            ..spec.clone()
        },
    )
}

pub fn balance_score(
    cohort: &Cohort,
    partition: &Partition,
    spec: &ObjectiveSpec,
) -> Result<f64, ObjectiveError> {
    evaluate(
        cohort,
        partition,
        &ObjectiveSpec {
            kind: ObjectiveKind::Balance,
            ..spec.clone()
        },
    )
}

fn weighted_features(cohort: &Cohort, weights: &[f64; FEATURE_DIM]) -> Vec<[f64; FEATURE_DIM]> {
    cohort
        .features()
        .iter()
        .map(|f| {
            let mut x = f.as_array();
            for (v, w) in x.iter_mut().zip(weights) {
                *v *= w;
            }
            x
        })
        .collect()
}

/// Number of held-out students: `ceil(fraction * n)`, kept within `1..n`.
pub fn test_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).ceil() as usize).clamp(1, n.saturating_sub(1).max(1))
}

/// Picks the held-out students.
///
/// A seeded permutation of student indices ranks the students. When every
/// group has at least two members the held-out quota is spread across groups
/// in proportion to their size (largest remainder, ties to the lower
/// canonical group), always leaving one training member per group, and each
/// group contributes its best-ranked members. Otherwise the first students
/// of the permutation are held out.
pub fn split_test_set(groups: &[Vec<usize>], n: usize, fraction: f64, seed: u64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = test_count(n, fraction);
    let mut is_test = vec![false; n];

    if groups.iter().any(|g| g.len() < 2) {
        for &s in &order[..n_test] {
            is_test[s] = true;
        }
        return is_test;
    }

    let mut rank = vec![0; n];
    for (r, &s) in order.iter().enumerate() {
        rank[s] = r;
    }
    let exact: Vec<f64> = groups
        .iter()
        .map(|g| n_test as f64 * g.len() as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = groups
        .iter()
        .zip(&exact)
        .map(|(g, e)| (e.floor() as usize).min(g.len() - 1))
        .collect();
    let mut by_remainder: Vec<usize> = (0..groups.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = n_test.saturating_sub(quota.iter().sum());
    while remaining > 0 {
        let mut placed = false;
        for &g in &by_remainder {
            if remaining == 0 {
                break;
            }
            if quota[g] < groups[g].len() - 1 {
                quota[g] += 1;
                remaining -= 1;
                placed = true;
            }
        }
        if !placed {
            break;
        }
    }

    for (group, &q) in groups.iter().zip(&quota) {
        let mut members = group.clone();
        members.sort_by_key(|&s| rank[s]);
        for &s in &members[..q] {
            is_test[s] = true;
        }
    }
    is_test
}

fn squared_distance(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn mean_of(points: &[[f64; FEATURE_DIM]], members: &[usize]) -> [f64; FEATURE_DIM] {
    let mut c = [0.0; FEATURE_DIM];
    for &s in members {
        for (acc, v) in c.iter_mut().zip(&points[s]) {
            *acc += v;
        }
    }
    for v in &mut c {
        *v /= members.len() as f64;
    }
    c
}

fn separability(cohort: &Cohort, partition: &Partition, spec: &ObjectiveSpec) -> f64 {
    let groups = partition.canonical_form().0;
    let n = cohort.len();
    let x = weighted_features(cohort, &spec.feature_weights);
    let is_test = split_test_set(&groups, n, spec.test_fraction, spec.split_seed);

    let centroids: Vec<[f64; FEATURE_DIM]> = groups
        .iter()
        .map(|g| {
            let train: Vec<usize> = g.iter().copied().filter(|&s| !is_test[s]).collect();
            if train.is_empty() {
                mean_of(&x, g)
            } else {
                mean_of(&x, &train)
            }
        })
        .collect();

    let mut label = vec![0; n];
    for (l, g) in groups.iter().enumerate() {
        for &s in g {
            label[s] = l;
        }
    }

    let mut tested = 0usize;
    let mut correct = 0usize;
    for s in (0..n).filter(|&s| is_test[s]) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (l, c) in centroids.iter().enumerate() {
            let d = squared_distance(&x[s], c);
            if d < best_d {
                best = l;
                best_d = d;
            }
        }
        tested += 1;
        if best == label[s] {
            correct += 1;
        }
    }
    if tested == 0 {
        return 0.0;
    }
    correct as f64 / tested as f64
}

/// Scalar strength per student: weighted average of the features.
fn strengths(cohort: &Cohort, weights: &[f64; FEATURE_DIM]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weighted_features(cohort, weights)
        .iter()
        .map(|x| x.iter().sum::<f64>() / total)
        .collect()
}

fn population_std(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn group_means(values: &[f64], groups: &[Vec<usize>]) -> Vec<f64> {
    groups
        .iter()
        .map(|g| g.iter().map(|&s| values[s]).sum::<f64>() / g.len() as f64)
        .collect()
}

/// Spread of group means when students are sorted by strength and poured
/// into groups in order. Group sizes follow the round-robin profile (larger
/// groups first) for `n_groups` groups.
pub fn sorted_fill_std(values: &[f64], n_groups: usize) -> f64 {
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let base = n / n_groups;
    let extra = n % n_groups;
    let mut means = Vec::with_capacity(n_groups);
    let mut start = 0;
    for g in 0..n_groups {
        let size = base + usize::from(g < extra);
        let chunk = &sorted[start..start + size];
        means.push(chunk.iter().sum::<f64>() / size as f64);
        start += size;
    }
    population_std(&means)
}

fn balance(cohort: &Cohort, partition: &Partition, spec: &ObjectiveSpec) -> f64 {
    let groups = partition.canonical_form().0;
    if groups.len() < 2 {
        return 1.0;
    }
    let values = strengths(cohort, &spec.feature_weights);
    let worst = sorted_fill_std(&values, groups.len());
    if worst <= 0.0 {
        return 1.0;
    }
    let spread = population_std(&group_means(&values, &groups));
    (1.0 - spread / worst).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{initial_partition, FeatureVector};
    use proptest::prelude::*;

    fn fv(prereq: f64, current: f64) -> FeatureVector {
        FeatureVector {
            prereq_marks_mean: prereq,
            current_marks: current,
            credits: 3.0,
            semester_index: 0,
            imputed: false,
        }
    }

    fn cohort_from(points: &[(f64, f64)]) -> Cohort {
        let students = (0..points.len()).map(|i| format!("S{i:02}")).collect();
        let features = points.iter().map(|&(a, b)| fv(a, b)).collect();
        Cohort::new("C", "T", students, features).unwrap()
    }

    fn marks_cohort(marks: &[f64]) -> Cohort {
        cohort_from(&marks.iter().map(|&m| (m, m)).collect::<Vec<_>>())
    }

    fn spec(kind: ObjectiveKind) -> ObjectiveSpec {
        ObjectiveSpec::with_kind(kind)
    }

    #[test]
    fn separable_clusters_score_one() {
        let mut pts = Vec::new();
        for i in 0..5 {
            pts.push((40.0 + i as f64, 41.0));
        }
        for i in 0..5 {
            pts.push((95.0 + i as f64, 99.0));
        }
        let cohort = cohort_from(&pts);
        let p = Partition::from_assignment(vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1], 2, 5).unwrap();
        for seed in 0..20 {
            let s = ObjectiveSpec {
                split_seed: seed,
                ..spec(ObjectiveKind::Separability)
            };
            assert_eq!(separability_score(&cohort, &p, &s).unwrap(), 1.0);
        }
    }

    #[test]
    fn identical_features_average_half() {
        // Monte Carlo over split seeds; every prediction ties to the first group.
        let cohort = cohort_from(&[(70.0, 70.0); 10]);
        let mut total = 0.0;
        let trials = 1000;
        for seed in 0..trials {
            let p = initial_partition(&cohort, 5, seed);
            let s = ObjectiveSpec {
                split_seed: seed,
                ..spec(ObjectiveKind::Separability)
            };
            total += separability_score(&cohort, &p, &s).unwrap();
        }
        let mean = total / trials as f64;
        assert!((mean - 0.5).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn identical_features_plain_split_average_half() {
        // groups of one member force the unstratified split
        let cohort = cohort_from(&[(70.0, 70.0); 2]);
        let p = Partition::from_assignment(vec![0, 1], 2, 1).unwrap();
        let mean = (0..1000)
            .map(|seed| {
                let s = ObjectiveSpec {
                    split_seed: seed,
                    ..spec(ObjectiveKind::Separability)
                };
                separability_score(&cohort, &p, &s).unwrap()
            })
            .sum::<f64>()
            / 1000.0;
        assert!((mean - 0.5).abs() <= 0.05, "{mean}");
    }

    #[test]
    fn stratified_split_keeps_a_training_member_per_group() {
        let groups: Vec<Vec<usize>> = (0..10).map(|g| vec![3 * g, 3 * g + 1, 3 * g + 2]).collect();
        for seed in 0..50 {
            let t = split_test_set(&groups, 30, 0.2, seed);
            assert_eq!(t.iter().filter(|&&b| b).count(), 6);
            for g in &groups {
                assert!(g.iter().any(|&s| !t[s]));
            }
        }
    }

    #[test]
    fn test_count_bounds() {
        assert_eq!(test_count(30, 0.2), 6);
        assert_eq!(test_count(6, 0.2), 2);
        assert_eq!(test_count(2, 0.2), 1);
        assert_eq!(test_count(4, 0.99), 3);
    }

    #[test]
    fn balance_extremes() {
        let cohort = marks_cohort(&[40.0, 40.0, 40.0, 100.0, 100.0, 100.0]);
        let s = spec(ObjectiveKind::Balance);
        let sorted = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1], 2, 3).unwrap();
        assert_eq!(balance_score(&cohort, &sorted, &s).unwrap(), 0.0);
        // {40,100,40} mean 60 and {100,40,100} mean 80: spread 10 against
        // sorted-fill spread 30.
        let mixed = Partition::from_assignment(vec![0, 0, 1, 0, 1, 1], 2, 3).unwrap();
        let v = balance_score(&cohort, &mixed, &s).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12, "{v}");
        assert!(v >= balance_score(&cohort, &sorted, &s).unwrap());
    }

    #[test]
    fn balance_equal_means_is_one() {
        let cohort = marks_cohort(&[40.0, 60.0, 80.0, 40.0, 60.0, 80.0]);
        let p = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1], 2, 3).unwrap();
        assert_eq!(
            evaluate(&cohort, &p, &spec(ObjectiveKind::Balance)).unwrap(),
            1.0
        );
    }

    #[test]
    fn balance_single_group_is_one() {
        let cohort = marks_cohort(&[40.0, 90.0, 70.0]);
        let p = initial_partition(&cohort, 3, 0);
        assert_eq!(
            balance_score(&cohort, &p, &spec(ObjectiveKind::Balance)).unwrap(),
            1.0
        );
    }

    #[test]
    fn unknown_kind_is_config_error() {
        assert!(matches!(
            "svm".parse::<ObjectiveKind>(),
            Err(ObjectiveError::Config(_))
        ));
        assert_eq!(
            "Balance".parse::<ObjectiveKind>().unwrap(),
            ObjectiveKind::Balance
        );
    }

    #[test]
    fn invalid_specs_rejected() {
        let cohort = marks_cohort(&[40.0, 90.0, 70.0, 55.0]);
        let p = initial_partition(&cohort, 2, 0);
        for bad in [
            ObjectiveSpec {
                test_fraction: 0.0,
                ..Default::default()
            },
            ObjectiveSpec {
                test_fraction: 1.0,
                ..Default::default()
            },
            ObjectiveSpec {
                feature_weights: [0.0; FEATURE_DIM],
                ..Default::default()
            },
            ObjectiveSpec {
                feature_weights: [1.0, -1.0, 0.0, 0.0],
                ..Default::default()
            },
        ] {
            assert!(matches!(
                evaluate(&cohort, &p, &bad),
                Err(ObjectiveError::Config(_))
            ));
        }
        let other = initial_partition(&marks_cohort(&[1.0, 2.0]), 1, 0);
        assert!(matches!(
            evaluate(&cohort, &other, &ObjectiveSpec::default()),
            Err(ObjectiveError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn separability_argmin_survives_rescaling() {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|i| (40.0 + (i * 37 % 60) as f64, 45.0 + (i * 11 % 50) as f64))
            .collect();
        let cohort = cohort_from(&pts);
        let scaled = cohort_from(
            &pts.iter()
                .map(|&(a, b)| (a * 2.5, b * 2.5))
                .collect::<Vec<_>>(),
        );
        let p = initial_partition(&cohort, 3, 4);
        let base = ObjectiveSpec::default();
        let inverse = ObjectiveSpec {
            feature_weights: [1.0 / 2.5, 1.0 / 2.5, 0.0, 0.0],
            ..base.clone()
        };
        assert_eq!(
            separability_score(&cohort, &p, &base).unwrap(),
            separability_score(&scaled, &p, &inverse).unwrap()
        );
    }

    fn all_label_permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for rest in all_label_permutations(k - 1) {
            for pos in 0..=rest.len() {
                let mut p = rest.clone();
                p.insert(pos, k - 1);
                out.push(p);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn scores_in_unit_interval_and_label_invariant(
            marks in prop::collection::vec((40u8..=100, 40u8..=100), 9),
            seed in any::<u64>(),
            split_seed in any::<u64>(),
        ) {
            let pts: Vec<(f64, f64)> = marks.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
            let cohort = cohort_from(&pts);
            let p = initial_partition(&cohort, 3, seed);
            for kind in [ObjectiveKind::Separability, ObjectiveKind::Balance] {
                let s = ObjectiveSpec { kind, split_seed, ..Default::default() };
                let base = evaluate(&cohort, &p, &s).unwrap();
                prop_assert!((0.0..=1.0).contains(&base));
                prop_assert_eq!(base, evaluate(&cohort, &p, &s).unwrap());
                for perm in all_label_permutations(3) {
                    let relabeled: Vec<usize> = p.assignment().iter().map(|&g| perm[g]).collect();
                    let q = Partition::from_assignment(relabeled, 3, 3).unwrap();
                    prop_assert_eq!(base, evaluate(&cohort, &q, &s).unwrap());
                }
            }
        }
    }
}
