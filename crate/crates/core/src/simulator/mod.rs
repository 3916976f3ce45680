//! Synthetic agents whose play is generated by TD-learned incentive salience.
//!
//! Each agent holds a scalar salience `V` towards one object. Every session
//! is emitted from the current `V`, the agent then experiences a reward
//! (decaying as content is exhausted, modulated by its internal state κ)
//! and updates `V` by TD(0). The agent stops playing once `V` falls below
//! its churn threshold.

mod config;
mod emit;
mod population;
mod td;

pub use config::{default_objects, ObjectSpec, SimulationConfig};
pub use emit::{emit_session, softplus, softplus_inv, ObjectProfile};
pub use population::{
    calibrate_profile, draw_initial_state, simulate_agent, simulate_population, PopulationConfig,
};
pub use td::{modulated_reward, td_update, AgentState, ModulationForm};
