use crate::data::Dataset;
use crate::error::{Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Agent-level random split into `(first, rest)` with `first` holding
/// `round(fraction · n)` sequences.
pub fn split(data: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidInput(format!("split fraction {fraction} outside (0, 1)")));
    }
    let n = data.len();
    let k = (fraction * n as f64).round() as usize;
    if k == 0 || k == n {
        return Err(Error::Data(format!("{n} sequences are too few to split at {fraction}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (a, b) = idx.split_at(k);
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    Ok((data.subset(&a), data.subset(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{InteractionSequence, TelemetrySession};
    use std::collections::BTreeSet;

    fn data(n: usize) -> Dataset {
        let seqs = (0..n)
            .map(|i| {
                let s = vec![TelemetrySession::new(1.0, 1.0, 1.0, 1, 0).unwrap(); 2];
                InteractionSequence::new(i as u64, 0, s, None).unwrap()
            })
            .collect();
        Dataset::new(vec!["g".into()], seqs).unwrap()
    }

    fn ids(d: &Dataset) -> BTreeSet<u64> {
        d.sequences.iter().map(|s| s.agent_id).collect()
    }

    #[test]
    fn ten_ninety() {
        let d = data(1000);
        let (a, b) = split(&d, 0.1, 3).unwrap();
        assert_eq!((a.len(), b.len()), (100, 900));
        assert!(ids(&a).is_disjoint(&ids(&b)));
        let all: BTreeSet<u64> = ids(&a).union(&ids(&b)).copied().collect();
        assert_eq!(all, ids(&d));
        let (a2, _) = split(&d, 0.1, 3).unwrap();
        assert_eq!(ids(&a), ids(&a2));
        assert_ne!(ids(&a), ids(&split(&d, 0.1, 4).unwrap().0));
    }

    #[test]
    fn too_small_or_bad_fraction() {
        assert!(split(&data(3), 0.1, 0).is_err());
        assert!(split(&data(10), 1.0, 0).is_err());
    }
}
