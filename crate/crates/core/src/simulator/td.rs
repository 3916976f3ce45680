use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// How the internal-state factor κ modulates a raw reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModulationForm {
    /// `r + ln κ`
    Additive,
    /// `κ · r`
    #[default]
    Multiplicative,
}

/// Reward as experienced under internal state `kappa`. κ = 1 is neutral in both forms.
pub fn modulated_reward(r: f64, kappa: f64, form: ModulationForm) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return invalid(format!("kappa must be positive and finite, got {kappa}"));
    }
    Ok(match form {
        ModulationForm::Multiplicative => kappa * r,
        ModulationForm::Additive => r + kappa.ln(),
    })
}

/// Salience estimate of one agent towards one object plus its learning constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    /// Current attributed salience V̂(s_t).
    pub v: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub churn_threshold: f64,
}

impl AgentState {
    pub fn new(v: f64, kappa: f64, alpha: f64, gamma: f64, churn_threshold: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return invalid(format!("kappa must be > 0, got {kappa}"));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return invalid(format!("alpha must lie in (0, 1], got {alpha}"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return invalid(format!("gamma must lie in [0, 1), got {gamma}"));
        }
        if !v.is_finite() || !churn_threshold.is_finite() {
            return invalid("salience and churn threshold must be finite");
        }
        Ok(Self {
            v,
            kappa,
            alpha,
            gamma,
            churn_threshold,
        })
    }

    /// Prediction error for a transition that stays on the same (agent, object) state.
    pub fn td_error(&self, r_next: f64) -> f64 {
        r_next + self.gamma * self.v - self.v
    }

    pub fn is_churned(&self) -> bool {
        self.v < self.churn_threshold
    }

    /// Fixpoint of the update under a constant experienced reward.
    pub fn fixpoint(&self, r_tilde: f64) -> f64 {
        r_tilde / (1.0 - self.gamma)
    }
}

/// One TD(0) step: `δ = r̃ + γV − V`, `V ← V + αδ`.
///
/// The agent values a single (agent, object) pair, so the successor state's
/// value is the current estimate before the update.
pub fn td_update(state: &AgentState, r_next: f64) -> AgentState {
    let delta = state.td_error(r_next);
    AgentState {
        v: state.v + state.alpha * delta,
        ..*state
    }
}
