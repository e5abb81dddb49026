use std::collections::BTreeSet;

use super::DatasetError;
use crate::rng::Prng;

/// Splits subjects into train and test sets.
///
/// IDs are de-duplicated and sorted, shuffled with the seeded generator, and
/// the first `round(train_fraction * n)` (kept within `1..n`) go to train.
pub fn split_subjects<S: AsRef<str>>(
    subject_ids: &[S],
    train_fraction: f64,
    seed: u64,
) -> Result<(BTreeSet<String>, BTreeSet<String>), DatasetError> {
    let unique: BTreeSet<String> = subject_ids.iter().map(|s| s.as_ref().to_string()).collect();
    let n = unique.len();
    if n < 2 {
        return Err(DatasetError::TooFewSubjects(n));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Invalid(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut order: Vec<String> = unique.into_iter().collect();
    Prng::seed_from_u64(seed).shuffle(&mut order);
    let n_train = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let test = order.split_off(n_train);
    Ok((order.into_iter().collect(), test.into_iter().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("subj{i:02}")).collect()
    }

    #[test]
    fn table_sizes() {
        let (tr, te) = split_subjects(&ids(18), 2.0 / 3.0, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (12, 6));
        let (tr, te) = split_subjects(&ids(25), 2.0 / 3.0, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (17, 8));
        let (tr, te) = split_subjects(&ids(48), 2.0 / 3.0, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (32, 16));
    }

    #[test]
    fn deterministic_disjoint_exhaustive() {
        let a = split_subjects(&ids(25), 2.0 / 3.0, 42).unwrap();
        let b = split_subjects(&ids(25), 2.0 / 3.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.0.is_disjoint(&a.1));
        let all: BTreeSet<String> = a.0.union(&a.1).cloned().collect();
        assert_eq!(all, ids(25).into_iter().collect());
        let c = split_subjects(&ids(25), 2.0 / 3.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn input_order_and_duplicates_do_not_matter() {
        let mut shuffled = ids(10);
        shuffled.reverse();
        shuffled.push("subj03".into());
        assert_eq!(
            split_subjects(&shuffled, 0.6, 5).unwrap(),
            split_subjects(&ids(10), 0.6, 5).unwrap()
        );
    }

    #[test]
    fn too_few() {
        assert!(matches!(split_subjects(&ids(1), 0.66, 1), Err(DatasetError::TooFewSubjects(1))));
        assert!(matches!(split_subjects(&["a", "a"], 0.66, 1), Err(DatasetError::TooFewSubjects(1))));
        let (tr, te) = split_subjects(&ids(2), 0.66, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (1, 1));
    }
}
