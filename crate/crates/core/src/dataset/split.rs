use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{stats, Error, Result};

/// One train/validation partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Shuffled k-fold partition. The first `n % k` folds hold one extra index.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "k-fold needs 2 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stats::rng(seed));
    let mut assignment = vec![Vec::new(); k];
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    for (f, bucket) in assignment.iter_mut().enumerate() {
        let size = base + usize::from(f < extra);
        bucket.extend_from_slice(&idx[start..start + size]);
        start += size;
    }
    Ok(folds_from_assignment(n, assignment))
}

/// k-fold partition that deals each class round-robin across folds, so every
/// fold sees both classes whenever each class has at least `k` members.
pub fn stratified_kfold_split(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!(
            "k-fold needs 2 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut rng = stats::rng(seed);
    let mut assignment = vec![Vec::new(); k];
    let mut next = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignment[next % k].push(i);
            next += 1;
        }
    }
    Ok(folds_from_assignment(n, assignment))
}

fn folds_from_assignment(n: usize, assignment: Vec<Vec<usize>>) -> Vec<Fold> {
    let mut owner = vec![0; n];
    for (f, bucket) in assignment.iter().enumerate() {
        for &i in bucket {
            owner[i] = f;
        }
    }
    assignment
        .into_iter()
        .enumerate()
        .map(|(f, mut validation)| {
            validation.sort_unstable();
            let train = (0..n).filter(|&i| owner[i] != f).collect();
            Fold { train, validation }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn leave_one_out_shape() {
        let folds = kfold_split(10, 10, 0).unwrap();
        assert!(folds.iter().all(|f| f.validation.len() == 1 && f.train.len() == 9));
    }

    #[test]
    fn uneven_sizes() {
        let folds = kfold_split(7, 3, 1).unwrap();
        let sizes: Vec<usize> = folds.iter().map(|f| f.validation.len()).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn out_of_range_k() {
        assert!(kfold_split(5, 1, 0).is_err());
        assert!(kfold_split(5, 6, 0).is_err());
        assert!(stratified_kfold_split(&[true, false], 3, 0).is_err());
    }

    #[test]
    fn stratified_spreads_minority() {
        let labels: Vec<bool> = (0..50).map(|i| i % 10 == 0).collect();
        let folds = stratified_kfold_split(&labels, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.validation.iter().filter(|&&i| labels[i]).count(), 1);
        }
    }

    proptest! {
        #[test]
        fn partition_is_disjoint_and_covering(n in 2usize..120, k_raw in 2usize..120, seed: u64) {
            let k = 2 + k_raw % (n - 1);
            let folds = kfold_split(n, k, seed).unwrap();
            prop_assert_eq!(folds.len(), k);
            let mut seen = BTreeSet::new();
            let mut sizes = Vec::new();
            for f in &folds {
                sizes.push(f.validation.len());
                for &i in &f.validation {
                    prop_assert!(seen.insert(i), "index {} in two folds", i);
                }
                let val: BTreeSet<_> = f.validation.iter().copied().collect();
                let train: BTreeSet<_> = f.train.iter().copied().collect();
                prop_assert!(val.is_disjoint(&train));
                prop_assert_eq!(val.len() + train.len(), n);
            }
            prop_assert_eq!(seen, (0..n).collect::<BTreeSet<_>>());
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}
