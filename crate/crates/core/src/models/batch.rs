use crate::data::{build_targets, InteractionSequence, ScalingStats, NUM_METRICS, NUM_TARGETS};
use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Equal-length sequences packed for a network: the first `T − 1` sessions
/// as scaled inputs and their lead-1 targets in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    pub objects: Vec<usize>,
    pub steps: usize,
    /// `[batch, steps, 4]`, min-max scaled.
    pub x: Tensor,
    /// `[batch, steps, 5]`, original units.
    pub y: Tensor,
}

impl SeqBatch {
    pub fn new<'a, I>(seqs: I, stats: &ScalingStats) -> Result<Self>
    where
        I: IntoIterator<Item = &'a InteractionSequence>,
    {
        let mut objects = Vec::new();
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut steps = None;
        for seq in seqs {
            let s = seq.len().saturating_sub(1);
            if *steps.get_or_insert(s) != s {
                return Err(Error::Shape("batch sequences must share one length".into()));
            }
            for (session, target) in seq.sessions.iter().zip(build_targets(seq)?) {
                for (j, v) in session.metrics().into_iter().enumerate() {
                    x.push(stats.scale_one(j, v));
                }
                y.extend_from_slice(&target.to_array());
            }
            objects.push(seq.object_id);
        }
        let steps = steps.ok_or_else(|| Error::InvalidInput("empty batch".into()))?;
        let b = objects.len();
        Ok(Self {
            x: Tensor::from_vec(&[b, steps, NUM_METRICS], x)?,
            y: Tensor::from_vec(&[b, steps, NUM_TARGETS], y)?,
            objects,
            steps,
        })
    }

    pub fn batch(&self) -> usize {
        self.objects.len()
    }

    /// Number of supervised timesteps, `batch × steps`.
    pub fn cells(&self) -> usize {
        self.objects.len() * self.steps
    }
}
