use super::Dataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Indices of sequences that all share one length `t_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub t_len: usize,
    pub indices: Vec<usize>,
}

/// Length-bucketed random batches covering every sequence exactly once.
///
/// Sequences are grouped by length, shuffled within each bucket, chunked
/// into batches of at most `batch_size`, and the batch order is shuffled.
/// The result is a pure function of `(data, batch_size, seed)`.
pub fn bucket_batches(data: &Dataset, batch_size: usize, seed: u64) -> Vec<Batch> {
    assert!(batch_size >= 1, "batch_size must be >= 1");
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, s) in data.sequences.iter().enumerate() {
        buckets.entry(s.len()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batches = Vec::new();
    for (t_len, mut idx) in buckets {
        idx.shuffle(&mut rng);
        for chunk in idx.chunks(batch_size) {
            batches.push(Batch {
                t_len,
                indices: chunk.to_vec(),
            });
        }
    }
    batches.shuffle(&mut rng);
    batches
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{InteractionSequence, TelemetrySession};

    fn dataset(lengths: &[usize]) -> Dataset {
        let seqs = lengths
            .iter()
            .enumerate()
            .map(|(i, &t)| InteractionSequence {
                agent_id: 100 + i as u64,
                object_id: 0,
                sessions: vec![TelemetrySession::new(1.0, 1.0, 1.0, 1, 0).unwrap(); t],
                latent_trace: None,
            })
            .collect();
        Dataset::new(vec!["g".into()], seqs).unwrap()
    }

    #[test]
    fn batches_never_mix_lengths() {
        let mut lengths = vec![3; 10];
        lengths.extend(vec![5; 7]);
        let d = dataset(&lengths);
        let b = bucket_batches(&d, 4, 1);
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for batch in &b {
            for &i in &batch.indices {
                assert_eq!(d.sequences[i].len(), batch.t_len);
            }
            by_len.entry(batch.t_len).or_default().push(batch.indices.len());
        }
        for v in by_len.values_mut() {
            v.sort_unstable_by(|a, b| b.cmp(a));
        }
        assert_eq!(by_len[&3], vec![4, 4, 2]);
        assert_eq!(by_len[&5], vec![4, 3]);
    }

    #[test]
    fn same_seed_same_order() {
        let d = dataset(&[2, 3, 4, 2, 3, 4, 2, 2, 5, 6, 2]);
        assert_eq!(bucket_batches(&d, 2, 9), bucket_batches(&d, 2, 9));
        assert_ne!(bucket_batches(&d, 2, 9), bucket_batches(&d, 2, 10));
    }

    #[test]
    fn emitted_agents_equal_dataset_agents() {
        let lengths: Vec<usize> = (0..57).map(|i| 2 + (i * 7) % 5).collect();
        let d = dataset(&lengths);
        let mut emitted: Vec<u64> = bucket_batches(&d, 6, 3)
            .iter()
            .flat_map(|b| b.indices.iter().map(|&i| d.sequences[i].agent_id))
            .collect();
        let mut expected: Vec<u64> = d.sequences.iter().map(|s| s.agent_id).collect();
        emitted.sort_unstable();
        expected.sort_unstable();
        assert_eq!(emitted, expected);
    }

    #[test]
    fn empty_dataset_gives_no_batches() {
        assert!(bucket_batches(&Dataset::default(), 4, 0).is_empty());
    }
}
