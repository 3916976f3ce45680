use super::{InteractionSequence, NUM_TARGETS};
use crate::error::{invalid, Result};

/// Supervised targets at one step: the next session's metrics and the
/// number of sessions still to come.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetVector {
    pub next_absence: f64,
    pub next_session_time: f64,
    pub next_active_time: f64,
    pub next_session_activity: f64,
    pub future_session_count: usize,
}

impl TargetVector {
    /// Targets in head order (see [`super::TARGET_NAMES`]).
    pub fn to_array(&self) -> [f64; NUM_TARGETS] {
        [
            self.next_absence,
            self.next_session_time,
            self.next_active_time,
            self.next_session_activity,
            self.future_session_count as f64,
        ]
    }
}

/// Lead-1 targets for steps `1..T-1`; element `t` (1-based) holds session
/// `t + 1` and a future session count of `T - t`.
pub fn build_targets(seq: &InteractionSequence) -> Result<Vec<TargetVector>> {
    let t_len = seq.sessions.len();
    if t_len < 2 {
        return invalid(format!(
            "agent {}: cannot build targets from {t_len} session(s)",
            seq.agent_id
        ));
    }
    Ok(seq.sessions[1..]
        .iter()
        .enumerate()
        .map(|(i, next)| TargetVector {
            next_absence: next.absence,
            next_session_time: next.session_time,
            next_active_time: next.active_time,
            next_session_activity: next.session_activity as f64,
            future_session_count: t_len - (i + 1),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TelemetrySession;
    use rand::{Rng, SeedableRng};

    fn session(time: f64) -> TelemetrySession {
        TelemetrySession::new(3.0, time, 50.0, 7, 0).unwrap()
    }

    fn seq(times: &[f64]) -> InteractionSequence {
        InteractionSequence {
            agent_id: 1,
            object_id: 0,
            sessions: times.iter().map(|&t| session(t)).collect(),
            latent_trace: None,
        }
    }

    #[test]
    fn lead_one_targets() {
        let t = build_targets(&seq(&[22.0, 30.0, 10.0])).unwrap();
        let times: Vec<f64> = t.iter().map(|x| x.next_session_time).collect();
        let counts: Vec<usize> = t.iter().map(|x| x.future_session_count).collect();
        assert_eq!(times, vec![30.0, 10.0]);
        assert_eq!(counts, vec![2, 1]);
    }

    #[test]
    fn identical_pair() {
        let t = build_targets(&seq(&[5.0, 5.0])).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].to_array(), [3.0, 5.0, 50.0, 7.0, 1.0]);
    }

    #[test]
    fn future_counts_match_remaining_sessions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let times: Vec<f64> = (0..5).map(|_| rng.gen_range(1.0..100.0)).collect();
        let s = seq(&times);
        let t = build_targets(&s).unwrap();
        for (i, tv) in t.iter().enumerate() {
            let remaining = s.sessions.iter().skip(i + 1).count();
            assert_eq!(tv.future_session_count, remaining);
        }
        assert_eq!(
            t.iter().map(|x| x.future_session_count).collect::<Vec<_>>(),
            vec![4, 3, 2, 1]
        );
    }

    #[test]
    fn short_sequence_rejected() {
        let mut s = seq(&[1.0, 2.0]);
        s.sessions.truncate(1);
        assert!(build_targets(&s).is_err());
    }

    #[test]
    fn targets_reconstruct_tail_sessions() {
        let s = seq(&[4.0, 8.0, 15.0, 16.0, 23.0]);
        let t = build_targets(&s).unwrap();
        for (tv, sess) in t.iter().zip(&s.sessions[1..]) {
            let m = sess.metrics();
            assert_eq!(&tv.to_array()[..4], &m[..]);
        }
    }
}
