//! Telemetry sequences, supervised targets, scaling and batching.
//!
//! A session carries four continuous metrics plus the object it was played
//! on. Sequences are per-agent and ordered; a sequence of length `T` yields
//! `T - 1` supervised targets (the next session's metrics and the number of
//! sessions still to come).

mod batching;
mod filter;
pub mod io;
mod scaling;
mod targets;

pub use batching::{bucket_batches, Batch};
pub use filter::{nearest_rank, percentile_filter};
pub use scaling::{min_max_scale, min_max_unscale, ScalingStats};
pub use targets::{build_targets, TargetVector};

use crate::error::{invalid, Error, Result};

/// Number of continuous per-session metrics.
pub const NUM_METRICS: usize = 4;
/// Number of supervised targets: four lead-1 metrics and the future session count.
pub const NUM_TARGETS: usize = 5;

/// Names of the continuous metrics in storage order.
pub const METRIC_NAMES: [&str; NUM_METRICS] =
    ["absence", "session_time", "active_time", "session_activity"];
/// Names of the targets in head order.
pub const TARGET_NAMES: [&str; NUM_TARGETS] = [
    "absence",
    "session_time",
    "active_time",
    "session_activity",
    "future_session_count",
];

/// One observed interaction between an agent and a game object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TelemetrySession {
    /// Hours since the previous session, 0 for the first one.
    pub absence: f64,
    /// Minutes.
    pub session_time: f64,
    /// Percent of `session_time` spent actively playing.
    pub active_time: f64,
    /// Count of user-initiated actions.
    pub session_activity: u32,
    /// Ordinal id of the game object.
    pub object_id: usize,
}

impl TelemetrySession {
    pub fn new(
        absence: f64,
        session_time: f64,
        active_time: f64,
        session_activity: u32,
        object_id: usize,
    ) -> Result<Self> {
        let s = Self {
            absence,
            session_time,
            active_time,
            session_activity,
            object_id,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in METRIC_NAMES.iter().zip(self.metrics()) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Data(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.active_time > 100.0 {
            return Err(Error::Data(format!(
                "active_time must lie in [0, 100], got {}",
                self.active_time
            )));
        }
        Ok(())
    }

    /// The four continuous metrics in [`METRIC_NAMES`] order.
    pub fn metrics(&self) -> [f64; NUM_METRICS] {
        [
            self.absence,
            self.session_time,
            self.active_time,
            self.session_activity as f64,
        ]
    }
}

/// Ordered sessions of one agent with one object.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionSequence {
    pub agent_id: u64,
    pub object_id: usize,
    pub sessions: Vec<TelemetrySession>,
    /// Ground-truth salience after each session (simulated data only).
    pub latent_trace: Option<Vec<f64>>,
}

impl InteractionSequence {
    pub fn new(
        agent_id: u64,
        object_id: usize,
        sessions: Vec<TelemetrySession>,
        latent_trace: Option<Vec<f64>>,
    ) -> Result<Self> {
        if sessions.len() < 2 {
            return invalid(format!(
                "agent {agent_id}: sequences need at least 2 sessions, got {}",
                sessions.len()
            ));
        }
        if let Some(trace) = &latent_trace {
            if trace.len() != sessions.len() {
                return invalid(format!(
                    "agent {agent_id}: latent trace has length {} but there are {} sessions",
                    trace.len(),
                    sessions.len()
                ));
            }
        }
        if sessions.iter().any(|s| s.object_id != object_id) {
            return invalid(format!("agent {agent_id}: sessions span several objects"));
        }
        Ok(Self {
            agent_id,
            object_id,
            sessions,
            latent_trace,
        })
    }

    /// Number of sessions `T`.
    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}

/// A collection of sequences with its object vocabulary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    /// Object names, indexed by ordinal id (first-appearance order).
    pub objects: Vec<String>,
    pub sequences: Vec<InteractionSequence>,
    /// Scaling statistics fitted on a training split, when attached.
    pub scaling_stats: Option<ScalingStats>,
}

impl Dataset {
    pub fn new(objects: Vec<String>, sequences: Vec<InteractionSequence>) -> Result<Self> {
        for s in &sequences {
            if s.object_id >= objects.len() {
                return Err(Error::Data(format!(
                    "agent {} refers to unknown object id {}",
                    s.agent_id, s.object_id
                )));
            }
        }
        Ok(Self {
            objects,
            sequences,
            scaling_stats: None,
        })
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// A dataset sharing this vocabulary but holding only the given sequences.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            objects: self.objects.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            scaling_stats: self.scaling_stats.clone(),
        }
    }

    /// Indices of sequences grouped by object id.
    pub fn indices_by_object(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.objects.len()];
        for (i, s) in self.sequences.iter().enumerate() {
            out[s.object_id].push(i);
        }
        out
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    /// Re-express object ids against another vocabulary, e.g. a trained
    /// model's. Objects missing from `vocab` are an error.
    pub fn with_vocabulary(&self, vocab: &[String]) -> Result<Dataset> {
        let map: Vec<usize> = self
            .objects
            .iter()
            .map(|o| {
                vocab
                    .iter()
                    .position(|v| v == o)
                    .ok_or_else(|| Error::Data(format!("object {o:?} is not in the vocabulary")))
            })
            .collect::<Result<_>>()?;
        let sequences = self
            .sequences
            .iter()
            .map(|s| {
                let mut s = s.clone();
                s.object_id = map[s.object_id];
                for sess in &mut s.sessions {
                    sess.object_id = map[sess.object_id];
                }
                s
            })
            .collect();
        Ok(Dataset { objects: vocab.to_vec(), sequences, scaling_stats: self.scaling_stats.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(id: u64, obj: usize) -> InteractionSequence {
        let s = |v: f64| TelemetrySession::new(v, v, v, 1, obj).unwrap();
        InteractionSequence::new(id, obj, vec![s(1.0), s(2.0)], None).unwrap()
    }

    #[test]
    fn vocabulary_remap() {
        let d = Dataset::new(vec!["b".into(), "a".into()], vec![seq(0, 0), seq(1, 1)]).unwrap();
        let r = d.with_vocabulary(&["a".into(), "b".into(), "c".into()]).unwrap();
        assert_eq!(r.sequences[0].object_id, 1);
        assert_eq!(r.sequences[1].sessions[1].object_id, 0);
        assert_eq!(r.objects[r.sequences[0].object_id], "b");
        assert!(d.with_vocabulary(&["a".into()]).is_err());
    }
}
