use super::td::AgentState;
use crate::data::{TelemetrySession, NUM_METRICS};
use crate::error::{invalid, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// `ln(1 + e^z)`, computed without overflow.
pub fn softplus(z: f64) -> f64 {
    if z > 30.0 {
        z
    } else if z < -30.0 {
        z.exp()
    } else {
        z.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y.exp_m1().ln()
    }
}

/// Direction in which salience moves each metric: absence shrinks, the rest grow.
const LINK_SIGN: [f64; NUM_METRICS] = [-1.0, 1.0, 1.0, 1.0];

/// Rewarding properties of a game object and how salience shows up in play.
///
/// Metric means follow `floor + softplus(offset + sign · gain · V)` with
/// `sign = -1` for absence, so every mean is positive and monotone in `V`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectProfile {
    pub name: String,
    /// Reward delivered by the first session.
    pub base_reward: f64,
    /// Per-session multiplicative decay of the reward (content exhaustion).
    pub reward_decay: f64,
    /// Additive Gaussian noise on the experienced reward.
    pub reward_noise_sd: f64,
    /// Log-scale sd of the multiplicative noise on emitted metrics.
    pub noise_sd: f64,
    pub behaviour_gain: [f64; NUM_METRICS],
    pub behaviour_offset: [f64; NUM_METRICS],
    pub behaviour_floor: [f64; NUM_METRICS],
    /// Calibration medians (absence, session time, active time, activity).
    pub target_medians: [f64; NUM_METRICS],
    /// Salience at which the noise-free link returns `target_medians`.
    pub calibration_v: f64,
}

impl ObjectProfile {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.reward_decay) {
            return invalid(format!("{}: reward_decay must lie in [0, 1]", self.name));
        }
        if !(self.noise_sd >= 0.0) || !(self.reward_noise_sd >= 0.0) {
            return invalid(format!("{}: noise sd must be >= 0", self.name));
        }
        if self.behaviour_gain.iter().any(|g| *g < 0.0) {
            return invalid(format!("{}: behaviour gains must be >= 0", self.name));
        }
        Ok(())
    }

    /// Noise-free metric means at salience `v`.
    pub fn behaviour_means(&self, v: f64) -> [f64; NUM_METRICS] {
        std::array::from_fn(|m| {
            self.behaviour_floor[m]
                + softplus(self.behaviour_offset[m] + LINK_SIGN[m] * self.behaviour_gain[m] * v)
        })
    }

    /// Solve the offsets so that `behaviour_means(v_cal) == target_medians`.
    ///
    /// Gains are set from a common elasticity: a unit change of `V` around
    /// `v_cal` moves each metric by `elasticity / v_cal` of its median.
    pub fn calibrate_link(&mut self, v_cal: f64, elasticity: f64) {
        let scale = v_cal.abs().max(1e-6);
        for m in 0..NUM_METRICS {
            let above_floor = (self.target_medians[m] - self.behaviour_floor[m]).max(1e-6);
            self.behaviour_gain[m] = elasticity * above_floor / scale;
            self.behaviour_offset[m] =
                softplus_inv(above_floor) - LINK_SIGN[m] * self.behaviour_gain[m] * v_cal;
        }
        self.calibration_v = v_cal;
    }
}

/// Draw one session from the agent's current salience.
///
/// Each metric is its link mean times independent log-normal noise;
/// active time is clipped to `[0, 100]` and activity rounded to a count.
pub fn emit_session<R: Rng + ?Sized>(
    state: &AgentState,
    profile: &ObjectProfile,
    object_id: usize,
    rng: &mut R,
) -> TelemetrySession {
    let means = profile.behaviour_means(state.v);
    let mut x = [0.0; NUM_METRICS];
    for m in 0..NUM_METRICS {
        let z: f64 = rng.sample(StandardNormal);
        x[m] = means[m] * (profile.noise_sd * z).exp();
    }
    TelemetrySession {
        absence: x[0],
        session_time: x[1],
        active_time: x[2].clamp(0.0, 100.0),
        session_activity: x[3].round().min(u32::MAX as f64) as u32,
        object_id,
    }
}
