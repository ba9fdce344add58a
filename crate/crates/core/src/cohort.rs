//! Cohort selection, per-student features and the partition search space.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::records::{CleanRecord, PrerequisiteEntry};

#[derive(Debug, Error, PartialEq)]
pub enum CohortError {
    #[error("course {0} does not appear in the records")]
    UnknownCourse(String),
    #[error(
        "course {course} in semester {semester} has {found} passing students, need at least 2"
    )]
    TooFewStudents {
        course: String,
        semester: String,
        found: usize,
    },
    #[error("student {student} has no record for course {course}")]
    MissingRecord { student: String, course: String },
    #[error("duplicate student {0} in cohort")]
    DuplicateStudent(String),
    #[error("cohort has {students} students but {features} feature vectors")]
    FeatureCountMismatch { students: usize, features: usize },
    #[error("non-finite feature value for student {0}")]
    NonFiniteFeature(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

/// Number of numeric features per student.
pub const FEATURE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    /// Mean marks over the course's prerequisites, or the cohort mean when
    /// the student has none on record.
    pub prereq_marks_mean: f64,
    pub current_marks: f64,
    pub credits: f64,
    /// Number of distinct earlier semesters in which the student has records.
    pub semester_index: u32,
    pub imputed: bool,
}

impl FeatureVector {
    /// Order: prereq mean, current marks, credits, semester index.
    pub fn as_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.prereq_marks_mean,
            self.current_marks,
            self.credits,
            self.semester_index as f64,
        ]
    }

    fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Students of one course offering together with their features.
///
/// Students are kept sorted by id, so index order equals id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    course_code: String,
    semester: String,
    students: Vec<String>,
    features: Vec<FeatureVector>,
}

impl Cohort {
    pub fn new(
        course_code: impl Into<String>,
        semester: impl Into<String>,
        students: Vec<String>,
        features: Vec<FeatureVector>,
    ) -> Result<Self, CohortError> {
        if students.len() != features.len() {
            return Err(CohortError::FeatureCountMismatch {
                students: students.len(),
                features: features.len(),
            });
        }
        let course_code = course_code.into();
        let semester = semester.into();
        if students.len() < 2 {
            return Err(CohortError::TooFewStudents {
                course: course_code,
                semester,
                found: students.len(),
            });
        }
        let mut pairs: Vec<(String, FeatureVector)> = students.into_iter().zip(features).collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(CohortError::DuplicateStudent(w[0].0.clone()));
            }
        }
        if let Some((id, _)) = pairs.iter().find(|(_, f)| !f.is_finite()) {
            return Err(CohortError::NonFiniteFeature(id.clone()));
        }
        let (students, features) = pairs.into_iter().unzip();
        Ok(Cohort {
            course_code,
            semester,
            students,
            features,
        })
    }

    pub fn course_code(&self) -> &str {
        &self.course_code
    }

    pub fn semester(&self) -> &str {
        &self.semester
    }

    pub fn students(&self) -> &[String] {
        &self.students
    }

    pub fn features(&self) -> &[FeatureVector] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    pub fn index_of(&self, student: &str) -> Option<usize> {
        self.students
            .binary_search_by(|s| s.as_str().cmp(student))
            .ok()
    }
}

struct RecordIndex<'a> {
    by_pair: HashMap<(&'a str, &'a str), &'a CleanRecord>,
    semesters_by_student: HashMap<&'a str, BTreeSet<&'a str>>,
}

impl<'a> RecordIndex<'a> {
    fn new(records: &'a [CleanRecord]) -> Self {
        let mut by_pair = HashMap::new();
        let mut semesters_by_student: HashMap<&str, BTreeSet<&str>> = HashMap::new();
        for r in records {
            by_pair.insert((r.student_id.as_str(), r.course_code.as_str()), r);
            semesters_by_student
                .entry(&r.student_id)
                .or_default()
                .insert(&r.semester);
        }
        RecordIndex {
            by_pair,
            semesters_by_student,
        }
    }

    fn prereq_mean(&self, student: &str, prereq_codes: &[&str]) -> Option<f64> {
        let marks: Vec<f64> = prereq_codes
            .iter()
            .filter_map(|c| self.by_pair.get(&(student, *c)))
            .map(|r| r.marks as f64)
            .collect();
        if marks.is_empty() {
            None
        } else {
            Some(marks.iter().sum::<f64>() / marks.len() as f64)
        }
    }

    fn features(
        &self,
        student: &str,
        course: &str,
        prereq_codes: &[&str],
        imputed_mean: f64,
    ) -> Result<FeatureVector, CohortError> {
        let current =
            self.by_pair
                .get(&(student, course))
                .ok_or_else(|| CohortError::MissingRecord {
                    student: student.to_string(),
                    course: course.to_string(),
                })?;
        let earlier = self
            .semesters_by_student
            .get(student)
            .map(|s| s.range::<&str, _>(..current.semester.as_str()).count())
            .unwrap_or(0);
        let (prereq_marks_mean, imputed) = match self.prereq_mean(student, prereq_codes) {
            Some(m) => (m, false),
            None => (imputed_mean, true),
        };
        Ok(FeatureVector {
            prereq_marks_mean,
            current_marks: current.marks as f64,
            credits: current.credits,
            semester_index: earlier as u32,
            imputed,
        })
    }
}

fn prereq_codes<'a>(prereqs: &'a [PrerequisiteEntry], course: &str) -> Vec<&'a str> {
    let codes: BTreeSet<&str> = prereqs
        .iter()
        .filter(|p| p.course_code == course)
        .map(|p| p.prerequisite_code.as_str())
        .collect();
    codes.into_iter().collect()
}

/// Builds the feature vector for one student. `imputed_mean` is used as the
/// prerequisite mean when the student has no prerequisite marks on record.
pub fn build_features(
    student: &str,
    records: &[CleanRecord],
    prereqs: &[PrerequisiteEntry],
    course: &str,
    imputed_mean: f64,
) -> Result<FeatureVector, CohortError> {
    let index = RecordIndex::new(records);
    index.features(
        student,
        course,
        &prereq_codes(prereqs, course),
        imputed_mean,
    )
}

/// Picks up to `limit` students (by ascending id) who passed `course` in
/// `semester` and builds their features.
///
/// Missing prerequisite means are imputed with the mean over cohort members
/// that have one; if nobody does, the cohort's mean current marks is used.
pub fn select_cohort(
    records: &[CleanRecord],
    prereqs: &[PrerequisiteEntry],
    course: &str,
    semester: &str,
    limit: usize,
) -> Result<Cohort, CohortError> {
    if !records.iter().any(|r| r.course_code == course) {
        return Err(CohortError::UnknownCourse(course.to_string()));
    }
    let mut students: Vec<&str> = records
        .iter()
        .filter(|r| r.course_code == course && r.semester == semester)
        .map(|r| r.student_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    students.truncate(limit);
    if students.len() < 2 {
        return Err(CohortError::TooFewStudents {
            course: course.to_string(),
            semester: semester.to_string(),
            found: students.len(),
        });
    }

    let index = RecordIndex::new(records);
    let codes = prereq_codes(prereqs, course);
    let known: Vec<f64> = students
        .iter()
        .filter_map(|s| index.prereq_mean(s, &codes))
        .collect();
    let imputed_mean = if known.is_empty() {
        let current: Vec<f64> = students
            .iter()
            .filter_map(|s| index.by_pair.get(&(*s, course)))
            .map(|r| r.marks as f64)
            .collect();
        current.iter().sum::<f64>() / current.len() as f64
    } else {
        known.iter().sum::<f64>() / known.len() as f64
    };

    let features = students
        .iter()
        .map(|s| index.features(s, course, &codes, imputed_mean))
        .collect::<Result<Vec<_>, _>>()?;
    Cohort::new(
        course,
        semester,
        students.into_iter().map(String::from).collect(),
        features,
    )
}

/// Assignment of every cohort member (by index) to a group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    n_groups: usize,
    max_group_size: usize,
}

/// A label-free form of a partition: groups sorted internally and ordered by
/// their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm(pub Vec<Vec<usize>>);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveProposal {
    Swap { a: usize, b: usize },
    Relocate { student: usize, target: usize },
}

/// Groups needed to seat `n` students with at most `max_group_size` each.
pub fn group_count(n: usize, max_group_size: usize) -> usize {
    n.div_ceil(max_group_size)
}

impl Partition {
    /// Validates and wraps an assignment vector.
    pub fn from_assignment(
        assignment: Vec<usize>,
        n_groups: usize,
        max_group_size: usize,
    ) -> Result<Self, CohortError> {
        let p = Partition {
            assignment,
            n_groups,
            max_group_size,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        let bad = |m: String| Err(CohortError::InvalidPartition(m));
        if self.max_group_size == 0 {
            return bad("max group size must be positive".into());
        }
        if self.n_groups == 0 {
            return bad("at least one group required".into());
        }
        if let Some(g) = self.assignment.iter().find(|&&g| g >= self.n_groups) {
            return bad(format!("group index {g} out of range 0..{}", self.n_groups));
        }
        for (g, size) in self.group_sizes().into_iter().enumerate() {
            if size == 0 {
                return bad(format!("group {g} is empty"));
            }
            if size > self.max_group_size {
                return bad(format!(
                    "group {g} has {size} members, limit {}",
                    self.max_group_size
                ));
            }
        }
        Ok(())
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn group_of(&self, student: usize) -> usize {
        self.assignment[student]
    }

    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    pub fn max_group_size(&self) -> usize {
        self.max_group_size
    }

    pub fn n_students(&self) -> usize {
        self.assignment.len()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_groups];
        for &g in &self.assignment {
            sizes[g] += 1;
        }
        sizes
    }

    /// Members of each group, ascending, indexed by group label.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_groups];
        for (s, &g) in self.assignment.iter().enumerate() {
            groups[g].push(s);
        }
        groups
    }

    pub fn canonical_form(&self) -> CanonicalForm {
        let mut groups = self.groups();
        groups.retain(|g| !g.is_empty());
        groups.sort();
        CanonicalForm(groups)
    }

    /// Same grouping with labels renumbered in canonical order.
    pub fn relabeled(&self) -> Partition {
        let mut assignment = vec![0; self.assignment.len()];
        for (label, group) in self.canonical_form().0.iter().enumerate() {
            for &s in group {
                assignment[s] = label;
            }
        }
        Partition {
            assignment,
            n_groups: self.n_groups,
            max_group_size: self.max_group_size,
        }
    }

    /// Rebuilds a labeled partition from its canonical form.
    pub fn from_canonical(
        form: &CanonicalForm,
        max_group_size: usize,
    ) -> Result<Partition, CohortError> {
        let n: usize = form.0.iter().map(Vec::len).sum();
        let mut assignment = vec![usize::MAX; n];
        for (label, group) in form.0.iter().enumerate() {
            for &s in group {
                if s >= n || assignment[s] != usize::MAX {
                    return Err(CohortError::InvalidPartition(format!(
                        "student {s} missing or repeated"
                    )));
                }
                assignment[s] = label;
            }
        }
        Partition::from_assignment(assignment, form.0.len(), max_group_size)
    }

    /// Applies a move without checking it; see [`MoveProposal`] invariants.
    pub fn apply(&self, mv: &MoveProposal) -> Partition {
        let mut next = self.clone();
        match *mv {
            MoveProposal::Swap { a, b } => next.assignment.swap(a, b),
            MoveProposal::Relocate { student, target } => next.assignment[student] = target,
        }
        next
    }

    fn relocations(&self) -> Vec<(usize, usize)> {
        let sizes = self.group_sizes();
        let open: Vec<usize> = (0..self.n_groups)
            .filter(|&g| sizes[g] < self.max_group_size)
            .collect();
        if open.is_empty() {
            return Vec::new();
        }
        let mut moves = Vec::new();
        for (s, &g) in self.assignment.iter().enumerate() {
            if sizes[g] < 2 {
                continue;
            }
            moves.extend(open.iter().filter(|&&t| t != g).map(|&t| (s, t)));
        }
        moves
    }
}

/// Shuffles the cohort with a seeded generator and deals students
/// round-robin into `ceil(n / max_group_size)` groups.
pub fn initial_partition(cohort: &Cohort, max_group_size: usize, seed: u64) -> Partition {
    assert!(max_group_size > 0, "max_group_size must be positive");
    let n = cohort.len();
    let n_groups = group_count(n, max_group_size);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &s) in order.iter().enumerate() {
        assignment[s] = pos % n_groups;
    }
    Partition {
        assignment,
        n_groups,
        max_group_size,
    }
}

/// Proposes a random neighbour.
///
/// Moves are uniform swaps of two students in different groups. When some
/// group has a free seat, a relocate is proposed instead with probability
/// 1/2. A relocate never empties its source group. Returns `None` when the
/// partition has a single group.
pub fn propose_neighbor<R: Rng + ?Sized>(
    partition: &Partition,
    rng: &mut R,
) -> Option<(MoveProposal, Partition)> {
    if partition.n_groups < 2 {
        return None;
    }
    let relocations = partition.relocations();
    let mv = if !relocations.is_empty() && rng.gen_bool(0.5) {
        let (student, target) = relocations[rng.gen_range(0..relocations.len())];
        MoveProposal::Relocate { student, target }
    } else {
        let n = partition.n_students();
        loop {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if partition.assignment[a] != partition.assignment[b] {
                break MoveProposal::Swap {
                    a: a.min(b),
                    b: a.max(b),
                };
            }
        }
    };
    Some((mv, partition.apply(&mv)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::{clean_records, RawRecordRow};
    use proptest::prelude::*;
    use std::collections::{HashSet, VecDeque};

    fn rec(s: &str, c: &str, sem: &str, marks: u8) -> RawRecordRow {
        RawRecordRow {
            student_id: s.into(),
            course_code: c.into(),
            credits: 3.0,
            semester: sem.into(),
            gender: "M".into(),
            marks,
        }
    }

    fn prereq(c: &str, p: &str) -> PrerequisiteEntry {
        PrerequisiteEntry {
            course_code: c.into(),
            prerequisite_code: p.into(),
        }
    }

    fn plain_cohort(n: usize) -> Cohort {
        let students = (0..n).map(|i| format!("S{i:03}")).collect();
        let features = (0..n)
            .map(|i| FeatureVector {
                prereq_marks_mean: 50.0 + i as f64,
                current_marks: 60.0,
                credits: 3.0,
                semester_index: 0,
                imputed: false,
            })
            .collect();
        Cohort::new("C", "T", students, features).unwrap()
    }

    #[test]
    fn prereq_mean_and_imputation() {
        let records = clean_records(&[
            rec("S1", "P1", "2019-1", 80),
            rec("S1", "P2", "2019-2", 90),
            rec("S1", "C", "2020-1", 70),
            rec("S2", "C", "2020-1", 60),
            rec("S3", "P1", "2019-1", 40),
            rec("S3", "C", "2020-1", 55),
        ]);
        let prereqs = vec![prereq("C", "P1"), prereq("C", "P2")];
        let f1 = build_features("S1", &records, &prereqs, "C", 0.0).unwrap();
        assert_eq!(f1.prereq_marks_mean, 85.0);
        assert!(!f1.imputed);
        assert_eq!(f1.semester_index, 2);

        let f2 = build_features("S2", &records, &prereqs, "C", 72.5).unwrap();
        assert_eq!(f2.prereq_marks_mean, 72.5);
        assert!(f2.imputed);
        assert_eq!(f2.semester_index, 0);

        let f3 = build_features("S3", &records, &prereqs, "C", 0.0).unwrap();
        assert_eq!(f3.prereq_marks_mean, 40.0);

        let cohort = select_cohort(&records, &prereqs, "C", "2020-1", 30).unwrap();
        assert_eq!(cohort.len(), 3);
        // mean of S1 (85) and S3 (40)
        assert_eq!(cohort.features()[1].prereq_marks_mean, 62.5);
        assert!(cohort.features()[1].imputed);
    }

    #[test]
    fn select_cohort_limits_and_errors() {
        let rows: Vec<_> = (0..5)
            .map(|i| rec(&format!("S{i}"), "C", "T1", 60))
            .collect();
        let records = clean_records(&rows);
        assert_eq!(
            select_cohort(&records, &[], "C", "T1", 30).unwrap().len(),
            5
        );
        let limited = select_cohort(&records, &[], "C", "T1", 3).unwrap();
        assert_eq!(limited.students(), &["S0", "S1", "S2"]);

        let one = clean_records(&[rec("S1", "C", "T1", 60), rec("S2", "C", "T2", 60)]);
        assert!(matches!(
            select_cohort(&one, &[], "C", "T1", 30),
            Err(CohortError::TooFewStudents { found: 1, .. })
        ));
        assert_eq!(
            select_cohort(&one, &[], "X", "T1", 30),
            Err(CohortError::UnknownCourse("X".into()))
        );
    }

    #[test]
    fn cohort_of_thirty_from_larger_pool() {
        let rows: Vec<_> = (0..45)
            .map(|i| rec(&format!("S{i:02}"), "C", "T", 70))
            .collect();
        let cohort = select_cohort(&clean_records(&rows), &[], "C", "T", 30).unwrap();
        assert_eq!(cohort.len(), 30);
    }

    #[test]
    fn features_ignore_record_order() {
        let mut rows = vec![
            rec("S1", "P1", "2019-1", 80),
            rec("S1", "C", "2020-1", 70),
            rec("S2", "P1", "2019-2", 50),
            rec("S2", "C", "2020-1", 65),
            rec("S3", "C", "2020-1", 90),
        ];
        let prereqs = vec![prereq("C", "P1")];
        let a = select_cohort(&clean_records(&rows), &prereqs, "C", "2020-1", 30).unwrap();
        rows.reverse();
        let b = select_cohort(&clean_records(&rows), &prereqs, "C", "2020-1", 30).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thirty_into_tens() {
        let p = initial_partition(&plain_cohort(30), 3, 7);
        assert_eq!(p.n_groups(), 10);
        assert!(p.group_sizes().iter().all(|&s| s == 3));
        p.validate().unwrap();
    }

    #[test]
    fn seven_into_three() {
        let p = initial_partition(&plain_cohort(7), 3, 1);
        let mut sizes = p.group_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2, 3]);
    }

    #[test]
    fn initial_partition_deterministic() {
        let c = plain_cohort(12);
        assert_eq!(initial_partition(&c, 3, 99), initial_partition(&c, 3, 99));
    }

    #[test]
    fn swap_semantics() {
        // {A,B,C},{D,E,F}
        let p = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1], 2, 3).unwrap();
        let q = p.apply(&MoveProposal::Swap { a: 0, b: 3 });
        assert_eq!(q.groups(), vec![vec![1, 2, 3], vec![0, 4, 5]]);
    }

    #[test]
    fn full_partitions_only_swap() {
        let p = initial_partition(&plain_cohort(9), 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (mv, next) = propose_neighbor(&p, &mut rng).unwrap();
            assert!(matches!(mv, MoveProposal::Swap { .. }));
            let mut before = p.group_sizes();
            let mut after = next.group_sizes();
            before.sort_unstable();
            after.sort_unstable();
            assert_eq!(before, after);
        }
    }

    #[test]
    fn under_capacity_sometimes_relocates() {
        let p = initial_partition(&plain_cohort(7), 3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let relocates = (0..400)
            .filter(|_| {
                matches!(
                    propose_neighbor(&p, &mut rng).unwrap().0,
                    MoveProposal::Relocate { .. }
                )
            })
            .count();
        assert!((120..280).contains(&relocates), "{relocates}");
    }

    #[test]
    fn single_group_has_no_neighbor() {
        let p = initial_partition(&plain_cohort(3), 3, 0);
        assert_eq!(p.n_groups(), 1);
        assert!(propose_neighbor(&p, &mut ChaCha8Rng::seed_from_u64(0)).is_none());
    }

    #[test]
    fn canonical_form_sorts_and_ignores_labels() {
        // students A=0, B=1, C=2; {{B,A},{C}}
        let p = Partition::from_assignment(vec![1, 1, 0], 2, 2).unwrap();
        assert_eq!(p.canonical_form(), CanonicalForm(vec![vec![0, 1], vec![2]]));
        let q = Partition::from_assignment(vec![0, 0, 1], 2, 2).unwrap();
        assert_eq!(p.canonical_form(), q.canonical_form());
        assert_eq!(p.relabeled(), q);
    }

    #[test]
    fn four_into_pairs_distinct_forms() {
        let all = [vec![0, 0, 1, 1], vec![0, 1, 0, 1], vec![0, 1, 1, 0]];
        let forms: HashSet<_> = all
            .iter()
            .map(|a| {
                Partition::from_assignment(a.clone(), 2, 2)
                    .unwrap()
                    .canonical_form()
            })
            .collect();
        assert_eq!(forms.len(), 3);
    }

    #[test]
    fn validate_rejects_bad_partitions() {
        assert!(Partition::from_assignment(vec![0, 0, 0, 1], 2, 2).is_err());
        assert!(Partition::from_assignment(vec![0, 0], 2, 2).is_err());
        assert!(Partition::from_assignment(vec![0, 2], 2, 2).is_err());
    }

    #[test]
    fn swap_graph_connected_for_six_into_two() {
        let start = Partition::from_assignment(vec![0, 0, 0, 1, 1, 1], 2, 3).unwrap();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        seen.insert(start.canonical_form());
        while let Some(p) = queue.pop_front() {
            for a in 0..6 {
                for b in a + 1..6 {
                    if p.group_of(a) != p.group_of(b) {
                        let q = p.apply(&MoveProposal::Swap { a, b });
                        if seen.insert(q.canonical_form()) {
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        assert_eq!(seen.len(), 10);
    }

    proptest! {
        #[test]
        fn neighbor_moves_preserve_invariants(
            n in 2usize..40,
            size in 1usize..6,
            seed in any::<u64>(),
            steps in 1usize..50,
        ) {
            let cohort = plain_cohort(n);
            let mut p = initial_partition(&cohort, size, seed);
            prop_assert!(p.validate().is_ok());
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            for _ in 0..steps {
                let Some((mv, next)) = propose_neighbor(&p, &mut rng) else { break };
                prop_assert!(next.validate().is_ok());
                if let MoveProposal::Swap { a, b } = mv {
                    prop_assert_ne!(p.group_of(a), p.group_of(b));
                    prop_assert_eq!(next.apply(&mv).canonical_form(), p.canonical_form());
                }
                p = next;
            }
        }

        #[test]
        fn canonical_form_is_label_invariant(
            n in 2usize..20,
            size in 1usize..5,
            seed in any::<u64>(),
        ) {
            let p = initial_partition(&plain_cohort(n), size, seed);
            let mut perm: Vec<usize> = (0..p.n_groups()).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let relabeled: Vec<usize> = p.assignment().iter().map(|&g| perm[g]).collect();
            let q = Partition::from_assignment(relabeled, p.n_groups(), size).unwrap();
            prop_assert_eq!(p.canonical_form(), q.canonical_form());
            prop_assert_eq!(Partition::from_canonical(&p.canonical_form(), size).unwrap(), p.relabeled());
        }
    }
}
