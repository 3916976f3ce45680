use super::emit::{emit_session, ObjectProfile};
use super::td::{modulated_reward, td_update, AgentState, ModulationForm};
use crate::data::{Dataset, InteractionSequence};
use crate::error::{invalid, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Population-level distributions over agents' learning constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationConfig {
    pub gamma: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Log-scale sd of κ around 1.
    pub kappa_log_sd: f64,
    /// Log-scale sd of the initial salience around `base_reward / (1 - γ)`.
    pub initial_v_log_sd: f64,
    /// Mean churn threshold as a fraction of `base_reward / (1 - γ)`.
    pub churn_level: f64,
    pub churn_log_sd: f64,
    pub max_t: usize,
    pub form: ModulationForm,
    /// Relative sensitivity of the behaviour link to salience.
    pub elasticity: f64,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            alpha_min: 0.3,
            alpha_max: 0.7,
            kappa_log_sd: 0.35,
            initial_v_log_sd: 0.15,
            churn_level: 0.5,
            churn_log_sd: 0.2,
            max_t: 20,
            form: ModulationForm::Multiplicative,
            elasticity: 0.8,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gamma) {
            return invalid("gamma must lie in [0, 1)");
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max && self.alpha_max <= 1.0) {
            return invalid("alpha range must satisfy 0 < alpha_min <= alpha_max <= 1");
        }
        if self.max_t < 2 {
            return invalid("max_t must be >= 2");
        }
        if self.kappa_log_sd < 0.0 || self.initial_v_log_sd < 0.0 || self.churn_log_sd < 0.0 {
            return invalid("log-scale spreads must be >= 0");
        }
        Ok(())
    }
}

fn lognormal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    (sd * z).exp()
}

/// Draw κ, α, the churn threshold and the initial salience for a new agent.
pub fn draw_initial_state<R: Rng + ?Sized>(
    profile: &ObjectProfile,
    cfg: &PopulationConfig,
    rng: &mut R,
) -> AgentState {
    let prior = profile.base_reward / (1.0 - cfg.gamma);
    let kappa = lognormal(rng, cfg.kappa_log_sd);
    let alpha = if cfg.alpha_max > cfg.alpha_min {
        rng.gen_range(cfg.alpha_min..=cfg.alpha_max)
    } else {
        cfg.alpha_min
    };
    let v = prior * lognormal(rng, cfg.initial_v_log_sd);
    let churn = cfg.churn_level * prior * lognormal(rng, cfg.churn_log_sd);
    AgentState {
        v,
        kappa,
        alpha,
        gamma: cfg.gamma,
        churn_threshold: churn,
    }
}

/// Run one agent until it churns or reaches `max_t` sessions.
///
/// Each step emits a session from the current salience, then draws the
/// decayed reward, modulates it by κ, adds reward noise and applies a TD
/// update. The latent trace holds the salience after each update, i.e.
/// the value that generates the following session. Returns `None` when
/// the agent churns after its first session.
pub fn simulate_agent<R: Rng + ?Sized>(
    profile: &ObjectProfile,
    object_id: usize,
    agent_id: u64,
    init: AgentState,
    max_t: usize,
    form: ModulationForm,
    rng: &mut R,
) -> Result<Option<InteractionSequence>> {
    if max_t < 2 {
        return invalid("max_t must be >= 2");
    }
    let mut state = init;
    let mut sessions = Vec::new();
    let mut trace = Vec::new();
    for t in 0..max_t {
        let mut session = emit_session(&state, profile, object_id, rng);
        if t == 0 {
            session.absence = 0.0;
        }
        sessions.push(session);
        let raw = profile.base_reward * profile.reward_decay.powi(t as i32);
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * profile.reward_noise_sd;
        let experienced = modulated_reward(raw, state.kappa, form)? + noise;
        state = td_update(&state, experienced);
        trace.push(state.v);
        if state.is_churned() {
            break;
        }
    }
    if sessions.len() < 2 {
        return Ok(None);
    }
    InteractionSequence::new(agent_id, object_id, sessions, Some(trace)).map(Some)
}

const MAX_RESAMPLES: usize = 10_000;

fn agent_rng(seed: u64, agent_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent_id);
    rng
}

fn simulate_one(
    profile: &ObjectProfile,
    object_id: usize,
    agent_id: u64,
    cfg: &PopulationConfig,
    seed: u64,
) -> Result<InteractionSequence> {
    let mut rng = agent_rng(seed, agent_id);
    for _ in 0..MAX_RESAMPLES {
        let init = draw_initial_state(profile, cfg, &mut rng);
        if let Some(seq) =
            simulate_agent(profile, object_id, agent_id, init, cfg.max_t, cfg.form, &mut rng)?
        {
            return Ok(seq);
        }
    }
    Err(Error::InvalidInput(format!(
        "object {}: agents keep churning after one session",
        profile.name
    )))
}

/// Simulate `n_per_object` agents for every profile.
///
/// Agent `i` of object `o` gets id `o * n_per_object + i` and its own RNG
/// stream derived from `(seed, id)`, so the output does not depend on how
/// agents are scheduled across threads.
pub fn simulate_population(
    profiles: &[ObjectProfile],
    n_per_object: usize,
    seed: u64,
    cfg: &PopulationConfig,
) -> Result<Dataset> {
    if n_per_object == 0 {
        return invalid("n_per_object must be >= 1");
    }
    cfg.validate()?;
    for p in profiles {
        p.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..profiles.len())
        .flat_map(|o| (0..n_per_object).map(move |i| (o, (o * n_per_object + i) as u64)))
        .collect();
    let sequences = jobs
        .par_iter()
        .map(|&(o, id)| simulate_one(&profiles[o], o, id, cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(profiles.iter().map(|p| p.name.clone()).collect(), sequences)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn pilot(profile: &ObjectProfile, cfg: &PopulationConfig, n: usize, seed: u64) -> Result<Dataset> {
    simulate_population(std::slice::from_ref(profile), n, seed, cfg)
}

fn pilot_median_length(data: &Dataset) -> f64 {
    let mut lengths: Vec<f64> = data.sequences.iter().map(|s| s.len() as f64).collect();
    median(&mut lengths)
}

/// Calibrate an object against a target median sequence length and
/// target metric medians.
///
/// The reward decay is found by bisection so that a pilot population's
/// median length reaches `median_length`; the behaviour link is then
/// anchored at the pilot's median salience at emission time.
pub fn calibrate_profile(
    mut profile: ObjectProfile,
    median_length: f64,
    cfg: &PopulationConfig,
    pilot_size: usize,
    seed: u64,
) -> Result<ObjectProfile> {
    if median_length < 2.0 {
        return invalid("target median length must be >= 2");
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    profile.reward_decay = hi;
    if pilot_median_length(&pilot(&profile, cfg, pilot_size, seed)?) >= median_length {
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            profile.reward_decay = mid;
            if pilot_median_length(&pilot(&profile, cfg, pilot_size, seed)?) >= median_length {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    profile.reward_decay = hi;
    let data = pilot(&profile, cfg, pilot_size, seed)?;
    // Salience in force when each session was emitted.
    let mut emitted_v: Vec<f64> = Vec::new();
    for seq in &data.sequences {
        let trace = seq.latent_trace.as_ref().expect("simulated data carries traces");
        emitted_v.extend(trace[..trace.len() - 1].iter().copied());
    }
    let v_cal = median(&mut emitted_v);
    profile.calibrate_link(v_cal, cfg.elasticity);
    Ok(profile)
}
