//! Seeded train/validation splits and k-fold partitions.
//!
//! Both shuffle a copy of the id list with [`ShiftRng`] and are pure
//! functions of `(ids, parameters, seed)`.

use std::collections::HashSet;
use std::io::{self, Write};

use super::DatapipeError;
use crate::rng::ShiftRng;

fn check_unique(ids: &[String]) -> Result<(), DatapipeError> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(DatapipeError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

fn shuffled(ids: &[String], seed: u64) -> Vec<String> {
    let mut order = ids.to_vec();
    ShiftRng::new(seed).shuffle(&mut order);
    order
}

/// Number of validation items, `⌈frac · n⌉` with a small guard against
/// floating-point overshoot (e.g. `0.07 · 100 = 7.000000000000001`).
pub fn validation_count(n: usize, frac: f64) -> usize {
    ((frac * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Returns `(train, val)`; the first `⌈frac·n⌉` shuffled ids go to
/// validation. Both lists are in shuffled order.
pub fn split_train_val(
    ids: &[String],
    frac: f64,
    seed: u64,
) -> Result<(Vec<String>, Vec<String>), DatapipeError> {
    if ids.is_empty() {
        return Err(DatapipeError::Empty);
    }
    if !(frac > 0.0 && frac < 1.0) {
        return Err(DatapipeError::InvalidParameter(format!(
            "validation fraction must lie in (0, 1), got {frac}"
        )));
    }
    check_unique(ids)?;
    let mut order = shuffled(ids, seed);
    let val_len = validation_count(ids.len(), frac);
    let train = order.split_off(val_len);
    Ok((train, order))
}

/// Assignment of every id to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// `(id, fold)` in the order the ids were supplied.
    pub assignment: Vec<(String, usize)>,
}

/// One cross-validation round: fold `test_fold` held out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    pub test_fold: usize,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for (_, f) in &self.assignment {
            sizes[*f] += 1;
        }
        sizes
    }

    pub fn fold_members(&self, fold: usize) -> Vec<String> {
        self.assignment
            .iter()
            .filter(|(_, f)| *f == fold)
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// The `k` rounds, each fold used exactly once as the test set.
    pub fn rounds(&self) -> Vec<Round> {
        (0..self.k)
            .map(|test_fold| {
                let (test, train): (Vec<_>, Vec<_>) =
                    self.assignment.iter().partition(|(_, f)| *f == test_fold);
                Round {
                    test_fold,
                    train: train.into_iter().map(|(id, _)| id.clone()).collect(),
                    test: test.into_iter().map(|(id, _)| id.clone()).collect(),
                }
            })
            .collect()
    }

    /// `id,fold` CSV in input order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "id,fold")?;
        for (id, fold) in &self.assignment {
            writeln!(out, "{id},{fold}")?;
        }
        Ok(())
    }
}

/// Shuffles, then deals ids round-robin: shuffled position `i` goes to
/// fold `i mod k`.
pub fn kfold_partition(ids: &[String], k: usize, seed: u64) -> Result<FoldPlan, DatapipeError> {
    if k < 2 {
        return Err(DatapipeError::InvalidParameter(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    if k > ids.len() {
        return Err(DatapipeError::InvalidParameter(format!(
            "cannot make {k} folds from {} items",
            ids.len()
        )));
    }
    check_unique(ids)?;
    let order = shuffled(ids, seed);
    let fold_of: std::collections::HashMap<&str, usize> = order
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i % k))
        .collect();
    let assignment = ids
        .iter()
        .map(|id| (id.clone(), fold_of[id.as_str()]))
        .collect();
    Ok(FoldPlan { k, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("img_{i:04}")).collect()
    }

    #[test]
    fn sixteen_hundred_item_split() {
        let (train, val) = split_train_val(&ids(1600), 0.1, 42).unwrap();
        assert_eq!((train.len(), val.len()), (1440, 160));
    }

    #[test]
    fn split_is_seeded() {
        let all = ids(10);
        let a = split_train_val(&all, 0.3, 1).unwrap();
        let b = split_train_val(&all, 0.3, 1).unwrap();
        let c = split_train_val(&all, 0.3, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let mut union: Vec<_> = a.0.iter().chain(&a.1).cloned().collect();
        union.sort();
        assert_eq!(union, all);
    }

    #[test]
    fn split_boundaries() {
        let all = ids(10);
        let (train, val) = split_train_val(&all, 0.9, 5).unwrap();
        assert_eq!((train.len(), val.len()), (1, 9));
        assert!(matches!(split_train_val(&[], 0.1, 0), Err(DatapipeError::Empty)));
        assert!(split_train_val(&all, 0.0, 0).is_err());
        assert!(split_train_val(&all, 1.0, 0).is_err());
        assert_eq!(validation_count(100, 0.07), 7);
    }

    #[test]
    fn fold_sizes_for_1600() {
        let plan = kfold_partition(&ids(1600), 7, 42).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![228, 228, 228, 229, 229, 229, 229]);
        // Round-robin dealing puts the extra items in the first folds.
        assert_eq!(&plan.fold_sizes()[..4], &[229; 4]);
    }

    #[test]
    fn kfold_errors() {
        assert!(kfold_partition(&ids(5), 7, 0).is_err());
        assert!(kfold_partition(&ids(5), 1, 0).is_err());
        let dup = vec!["a".to_string(), "a".to_string(), "b".to_string()];
        assert!(matches!(
            kfold_partition(&dup, 2, 0),
            Err(DatapipeError::DuplicateId(_))
        ));
    }

    #[test]
    fn rounds_cover_everything_once() {
        let all = ids(20);
        let plan = kfold_partition(&all, 7, 3).unwrap();
        let rounds = plan.rounds();
        assert_eq!(rounds.len(), 7);
        let mut tested: Vec<String> = rounds.iter().flat_map(|r| r.test.clone()).collect();
        tested.sort();
        assert_eq!(tested, all);
        for r in &rounds {
            assert_eq!(r.train.len() + r.test.len(), 20);
            assert!(r.test.iter().all(|id| !r.train.contains(id)));
            assert_eq!(r.test, plan.fold_members(r.test_fold));
        }
    }
}
