use std::collections::HashSet;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::data::Masks;
use crate::error::PipelineError;
use crate::seed::rng_for;

/// Shuffle `labeled` and cut it into train/validation/test by `fractions`
/// (train and validation sizes rounded, test takes the rest). `train_budget`
/// caps the training set. Masks come back sorted.
pub fn split_dataset(
    n: usize,
    labeled: &[usize],
    fractions: [f64; 3],
    seed: u64,
    train_budget: Option<usize>,
) -> Result<Masks, PipelineError> {
    if let Some(&v) = labeled.iter().find(|&&v| v >= n) {
        return Err(PipelineError::Config(format!("labeled node {v} out of range for {n} nodes")));
    }
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| *f < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Config(format!("fractions {fractions:?} must be nonnegative and sum to 1")));
    }
    let mut ids = labeled.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids.shuffle(&mut rng_for(seed, "split"));
    let total = ids.len();
    let n_train = ((fractions[0] * total as f64).round() as usize).min(total);
    let n_val = ((fractions[1] * total as f64).round() as usize).min(total - n_train);
    let mut train = ids[..n_train].to_vec();
    if let Some(b) = train_budget {
        train.truncate(b);
    }
    let mut val = ids[n_train..n_train + n_val].to_vec();
    let mut test = ids[n_train + n_val..].to_vec();
    for (name, set) in [("train", &train), ("val", &val), ("test", &test)] {
        if set.is_empty() {
            return Err(PipelineError::EmptySplit(name));
        }
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Masks { train, val, test })
}

/// Check that masks are in range, pairwise disjoint, labeled and nonempty.
pub fn validate_masks(m: &Masks, labels: &[Option<u8>]) -> Result<(), PipelineError> {
    let mut seen = HashSet::new();
    for (name, set) in [("train", &m.train), ("val", &m.val), ("test", &m.test)] {
        if set.is_empty() {
            return Err(PipelineError::EmptySplit(name));
        }
        for &v in set {
            if v >= labels.len() || labels[v].is_none() {
                return Err(PipelineError::Config(format!("{name} mask contains unlabeled or unknown node {v}")));
            }
            if !seen.insert(v) {
                return Err(PipelineError::Config(format!("node {v} appears in more than one mask")));
            }
        }
    }
    Ok(())
}

pub fn read_masks(path: &Path, labels: &[Option<u8>]) -> Result<Masks, PipelineError> {
    let m: Masks = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    validate_masks(&m, labels)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizes_and_determinism() {
        let labeled: Vec<usize> = (0..100).collect();
        let a = split_dataset(120, &labeled, [0.5, 0.25, 0.25], 3, None).unwrap();
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (50, 25, 25));
        assert_eq!(a, split_dataset(120, &labeled, [0.5, 0.25, 0.25], 3, None).unwrap());
        assert_ne!(a, split_dataset(120, &labeled, [0.5, 0.25, 0.25], 4, None).unwrap());
        let b = split_dataset(120, &labeled, [0.5, 0.25, 0.25], 3, Some(10)).unwrap();
        assert_eq!(b.train.len(), 10);
        assert_eq!(b.val, a.val);
    }

    #[test]
    fn empty_split_errors() {
        assert!(matches!(
            split_dataset(3, &[0, 1], [0.5, 0.5, 0.0], 0, None),
            Err(PipelineError::EmptySplit("test"))
        ));
    }

    proptest! {
        #[test]
        fn masks_disjoint_and_within_labeled(
            n in 10usize..200,
            keep in prop::collection::vec(any::<bool>(), 200),
            seed in any::<u64>(),
        ) {
            let labeled: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
            let labels: Vec<Option<u8>> = (0..n).map(|v| keep[v].then_some(0)).collect();
            if let Ok(m) = split_dataset(n, &labeled, [0.6, 0.2, 0.2], seed, None) {
                prop_assert!(validate_masks(&m, &labels).is_ok());
                prop_assert_eq!(m.train.len() + m.val.len() + m.test.len(), labeled.len());
            }
        }
    }
}
