use rand::seq::SliceRandom;

use crate::stats::rng;
use crate::{Error, Result};

/// Assignment of every row to one of `k` disjoint folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
    stratified: bool,
    seed: u64,
}

impl FoldPlan {
    /// Builds a plan from explicit assignments; every fold must be non-empty.
    pub fn from_assignments(
        k: usize,
        assignments: Vec<usize>,
        stratified: bool,
        seed: u64,
    ) -> Result<Self> {
        let plan = FoldPlan {
            k,
            assignments,
            stratified,
            seed,
        };
        plan.check()?;
        Ok(plan)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_rows(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn is_stratified(&self) -> bool {
        self.stratified
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    /// Folds cover `0..k` and none is empty.
    pub fn check(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Config(format!(
                "need at least 2 folds, got {}",
                self.k
            )));
        }
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignments {
            if f >= self.k {
                return Err(Error::Config(format!(
                    "fold index {f} out of range for {} folds",
                    self.k
                )));
            }
            sizes[f] += 1;
        }
        if let Some(f) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InsufficientData(format!("fold {f} is empty")));
        }
        Ok(())
    }
}

/// Seeded K-fold split. Stratified plans deal each class round-robin over
/// the folds after shuffling, so per-fold class counts differ by at most one.
pub fn make_folds(labels: &[u8], k: usize, stratified: bool, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot fill {k} folds",
            labels.len()
        )));
    }
    let mut g = rng(seed);
    let mut assignments = vec![0; labels.len()];
    if stratified {
        let mut next = 0;
        for class in [1u8, 0] {
            let mut rows: Vec<usize> = (0..labels.len())
                .filter(|&i| (labels[i] == 1) == (class == 1))
                .collect();
            if rows.len() < k {
                return Err(Error::InsufficientData(format!(
                    "class {class} has {} rows, fewer than {k} folds",
                    rows.len()
                )));
            }
            rows.shuffle(&mut g);
            for r in rows {
                assignments[r] = next;
                next = (next + 1) % k;
            }
        }
    } else {
        let mut rows: Vec<usize> = (0..labels.len()).collect();
        rows.shuffle(&mut g);
        for (j, r) in rows.into_iter().enumerate() {
            assignments[r] = j % k;
        }
    }
    FoldPlan::from_assignments(k, assignments, stratified, seed)
}
