use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Patient-to-fold assignment; immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignment(&self) -> &BTreeMap<String, usize> {
        &self.assignment
    }

    pub fn fold_of(&self, patient_id: &str) -> Option<usize> {
        self.assignment.get(patient_id).copied()
    }

    /// Patients of fold `i`, sorted.
    pub fn patients_in(&self, fold: usize) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(p, _)| p.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles the distinct patients with a seeded ChaCha8 stream and deals them
/// round-robin into `k` folds.
pub fn patient_folds<'a>(patient_ids: impl IntoIterator<Item = &'a str>, k: usize, seed: u64) -> Result<FoldPlan> {
    let distinct: BTreeSet<&str> = patient_ids.into_iter().collect();
    if k == 0 || distinct.len() < k {
        return Err(Error::invalid(format!(
            "{} distinct patients cannot fill {k} folds",
            distinct.len()
        )));
    }
    let mut order: Vec<&str> = distinct.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignment = order
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p.to_string(), i % k))
        .collect();
    Ok(FoldPlan { k, seed, assignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{}", 101 + i)).collect()
    }

    #[test]
    fn one_patient_per_fold() {
        let p = ids(10);
        let plan = patient_folds(p.iter().map(String::as_str), 10, 3).unwrap();
        assert_eq!(plan.fold_sizes(), vec![1; 10]);
    }

    #[test]
    fn deterministic_for_seed() {
        let p = ids(40);
        let a = patient_folds(p.iter().map(String::as_str), 10, 9).unwrap();
        let b = patient_folds(p.iter().map(String::as_str), 10, 9).unwrap();
        let c = patient_folds(p.iter().map(String::as_str), 10, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.assignment(), c.assignment());
    }

    #[test]
    fn icbhi_patient_count_sizes() {
        let p = ids(126);
        let plan = patient_folds(p.iter().map(String::as_str), 10, 0).unwrap();
        let sizes = plan.fold_sizes();
        // 126 = 10 * 12 + 6: six folds of 13, four of 12.
        assert_eq!(sizes.iter().filter(|&&s| s == 13).count(), 6);
        assert_eq!(sizes.iter().filter(|&&s| s == 12).count(), 4);
    }

    #[test]
    fn duplicates_collapse_and_too_few_rejected() {
        let plan = patient_folds(["a", "b", "a", "c"], 3, 0).unwrap();
        assert_eq!(plan.assignment().len(), 3);
        assert!(patient_folds(["a", "a", "b"], 3, 0).is_err());
        assert!(patient_folds(["a"], 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_patients(n in 1usize..200, k in 1usize..12, seed in any::<u64>()) {
            prop_assume!(n >= k);
            let p = ids(n);
            let plan = patient_folds(p.iter().map(String::as_str), k, seed).unwrap();
            let mut seen = BTreeSet::new();
            for f in 0..k {
                let members = plan.patients_in(f);
                prop_assert!(!members.is_empty());
                for m in members {
                    prop_assert!(seen.insert(m.to_string()));
                }
            }
            prop_assert_eq!(seen.len(), n);
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
    }
}
