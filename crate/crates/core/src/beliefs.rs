//! Particle beliefs with Bayesian update and systematic resampling.

use crate::model::{
    ContractViolation, Environment, ParamError, ParamMap, ParamReader, ParamValue, StepOutcome,
};
use crate::rng::SimRng;

pub const DEFAULT_RESAMPLE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BeliefError {
    /// Every particle has zero likelihood under the observation.
    #[error("particle depletion: observation has zero likelihood under every particle")]
    Depleted,
    #[error("a belief needs at least one particle")]
    Empty,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error(transparent)]
    Contract(#[from] ContractViolation),
}

/// Particles with normalized weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedParticleBelief<S> {
    particles: Vec<S>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
    resample_threshold: f64,
}

fn cumulative_sums(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

impl<S: Clone> WeightedParticleBelief<S> {
    /// Builds a belief from unnormalized nonnegative weights.
    pub fn new(particles: Vec<S>, weights: Vec<f64>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        if particles.len() != weights.len() {
            return Err(BeliefError::InvalidWeights(format!(
                "{} particles but {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BeliefError::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(BeliefError::Depleted);
        }
        let weights: Vec<f64> = weights.into_iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(particles, weights, DEFAULT_RESAMPLE_THRESHOLD))
    }

    pub fn uniform(particles: Vec<S>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        let n = particles.len();
        Ok(Self::from_normalized(
            particles,
            vec![1.0 / n as f64; n],
            DEFAULT_RESAMPLE_THRESHOLD,
        ))
    }

    fn from_normalized(particles: Vec<S>, weights: Vec<f64>, resample_threshold: f64) -> Self {
        let cumulative = cumulative_sums(&weights);
        Self {
            particles,
            weights,
            cumulative,
            resample_threshold,
        }
    }

    /// Sets the ESS fraction below which [`update`] resamples. Clamped to `[0, 1]`.
    pub fn with_resample_threshold(mut self, threshold: f64) -> Self {
        self.resample_threshold = threshold.clamp(0.0, 1.0);
        self
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn resample_threshold(&self) -> f64 {
        self.resample_threshold
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.particles.iter().zip(self.weights.iter().copied())
    }

    /// Effective sample size `1 / Σ wᵢ²`.
    pub fn ess(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Index `i` with probability `weights[i]`.
    pub fn sample_index(&self, rng: &mut SimRng) -> usize {
        if self.particles.len() == 1 {
            return 0;
        }
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.uniform() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        // Skip zero-weight particles that share the boundary.
        i.min(self.particles.len() - 1)
    }

    pub fn sample(&self, rng: &mut SimRng) -> &S {
        &self.particles[self.sample_index(rng)]
    }

    /// Weighted probability of `pred`.
    pub fn probability(&self, mut pred: impl FnMut(&S) -> bool) -> f64 {
        self.iter().filter(|(s, _)| pred(s)).map(|(_, w)| w).sum()
    }

    pub fn expectation(&self, mut f: impl FnMut(&S) -> f64) -> f64 {
        self.iter().map(|(s, w)| w * f(s)).sum()
    }

    /// Systematic resampling to the same particle count.
    pub fn systematic_resample(&self, rng: &mut SimRng) -> Self {
        self.resample_to(self.particles.len(), rng)
    }

    /// Systematic resampling to `m` equally weighted particles: one uniform
    /// offset, `m` evenly spaced positions. Particle `i` is copied either
    /// `⌊m·wᵢ⌋` or `⌈m·wᵢ⌉` times.
    pub fn resample_to(&self, m: usize, rng: &mut SimRng) -> Self {
        assert!(m > 0, "resampling to zero particles");
        let step = 1.0 / m as f64;
        let offset = rng.uniform() * step;
        let total = *self.cumulative.last().expect("non-empty");
        let last = self.particles.len() - 1;
        let mut out = Vec::with_capacity(m);
        let mut i = 0;
        for k in 0..m {
            let u = (offset + k as f64 * step) * total;
            while i < last && self.cumulative[i] <= u {
                i += 1;
            }
            out.push(self.particles[i].clone());
        }
        Self::from_normalized(out, vec![step; m], self.resample_threshold)
    }
}

/// Draws `n` particles i.i.d. from the environment's initial distribution.
pub fn create_environment_belief<E: Environment>(
    env: &E,
    n_particles: usize,
    rng: &mut SimRng,
) -> Result<WeightedParticleBelief<E::State>, BeliefError> {
    let particles: Vec<E::State> = (0..n_particles)
        .map(|_| env.sample_initial_state(rng))
        .collect();
    WeightedParticleBelief::uniform(particles)
}

/// Every particle of a belief pushed through one generative step.
#[derive(Clone, Debug)]
pub struct Propagation<S, O> {
    prior_weights: Vec<f64>,
    outcomes: Vec<StepOutcome<S, O>>,
    resample_threshold: f64,
}

impl<S: Clone, O> Propagation<S, O> {
    pub fn outcomes(&self) -> &[StepOutcome<S, O>] {
        &self.outcomes
    }

    pub fn prior_weights(&self) -> &[f64] {
        &self.prior_weights
    }

    /// Prior-weighted mean of the per-particle rewards.
    pub fn expected_reward(&self) -> f64 {
        self.prior_weights
            .iter()
            .zip(&self.outcomes)
            .map(|(w, o)| w * o.reward)
            .sum()
    }

    pub fn all_terminal(&self) -> bool {
        self.outcomes.iter().all(|o| o.terminal)
    }

    /// Reweights the propagated particles by the likelihood of `obs` and
    /// resamples when the effective sample size drops below the threshold.
    pub fn condition<E>(
        &self,
        env: &E,
        action: &E::Action,
        obs: &E::Observation,
        rng: &mut SimRng,
    ) -> Result<WeightedParticleBelief<S>, BeliefError>
    where
        E: Environment<State = S, Observation = O>,
    {
        let log_weights: Vec<f64> = self
            .prior_weights
            .iter()
            .zip(&self.outcomes)
            .map(|(w, o)| w.ln() + env.observation_loglik(obs, &o.next_state, action))
            .collect();
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(BeliefError::Depleted);
        }
        let raw: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.into_iter().map(|w| w / total).collect();
        let particles = self.outcomes.iter().map(|o| o.next_state.clone()).collect();
        let belief =
            WeightedParticleBelief::from_normalized(particles, weights, self.resample_threshold);
        let n = belief.len() as f64;
        if belief.ess() < self.resample_threshold * n {
            Ok(belief.systematic_resample(rng))
        } else {
            Ok(belief)
        }
    }
}

/// Pushes every particle through `env.step(·, action)`.
pub fn propagate<E: Environment>(
    belief: &WeightedParticleBelief<E::State>,
    env: &E,
    action: &E::Action,
    rng: &mut SimRng,
) -> Result<Propagation<E::State, E::Observation>, ContractViolation> {
    let outcomes = belief
        .particles()
        .iter()
        .map(|s| env.step(s, action, rng))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Propagation {
        prior_weights: belief.weights().to_vec(),
        outcomes,
        resample_threshold: belief.resample_threshold(),
    })
}

/// Bayesian update: propagate, reweight by the observation likelihood,
/// normalize, and resample systematically if ESS falls below the threshold.
pub fn update<E: Environment>(
    belief: &WeightedParticleBelief<E::State>,
    action: &E::Action,
    obs: &E::Observation,
    env: &E,
    rng: &mut SimRng,
) -> Result<WeightedParticleBelief<E::State>, BeliefError> {
    propagate(belief, env, action, rng)?.condition(env, action, obs, rng)
}

/// Equally weighted particles; updated as a bootstrap filter.
#[derive(Clone, Debug, PartialEq)]
pub struct UnweightedParticleBelief<S> {
    particles: Vec<S>,
}

impl<S: Clone> UnweightedParticleBelief<S> {
    pub fn new(particles: Vec<S>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        Ok(Self { particles })
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn to_weighted(&self) -> WeightedParticleBelief<S> {
        WeightedParticleBelief::uniform(self.particles.clone()).expect("non-empty")
    }

    /// Weighted update followed by an unconditional systematic resample.
    pub fn update<E: Environment<State = S>>(
        &self,
        action: &E::Action,
        obs: &E::Observation,
        env: &E,
        rng: &mut SimRng,
    ) -> Result<Self, BeliefError> {
        let weighted = update(&self.to_weighted(), action, obs, env, rng)?;
        Ok(Self {
            particles: weighted.systematic_resample(rng).particles,
        })
    }
}

/// Which particle filter an episode maintains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BeliefKind {
    Weighted { resample_threshold: f64 },
    Unweighted,
}

/// Registered belief: a filter kind plus its particle count.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefSpec {
    pub kind: BeliefKind,
    pub n_particles: usize,
}

impl BeliefSpec {
    pub const IDS: [&'static str; 2] = ["weighted_pf", "unweighted_pf"];

    pub fn from_params(id: &str, params: &ParamMap) -> Result<Self, ParamError> {
        let mut r = ParamReader::new(id, params);
        let n_particles = r.usize_at_least("n_particles", 200, 1)?;
        let kind = match id {
            "weighted_pf" => {
                let t = r.real("resample_threshold", DEFAULT_RESAMPLE_THRESHOLD)?;
                if !(0.0..=1.0).contains(&t) {
                    return Err(r.invalid("resample_threshold", "must lie in [0, 1]"));
                }
                BeliefKind::Weighted {
                    resample_threshold: t,
                }
            }
            "unweighted_pf" => BeliefKind::Unweighted,
            other => {
                return Err(ParamError::Invalid {
                    owner: "belief".into(),
                    key: "id".into(),
                    reason: format!(
                        "unknown belief `{other}` (valid: {})",
                        Self::IDS.join(", ")
                    ),
                })
            }
        };
        r.finish()?;
        Ok(Self { kind, n_particles })
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            BeliefKind::Weighted { .. } => "weighted_pf",
            BeliefKind::Unweighted => "unweighted_pf",
        }
    }

    pub fn params(&self) -> ParamMap {
        let mut m = ParamMap::new();
        m.insert("n_particles".into(), ParamValue::from(self.n_particles));
        if let BeliefKind::Weighted { resample_threshold } = self.kind {
            m.insert("resample_threshold".into(), ParamValue::Real(resample_threshold));
        }
        m
    }

    pub fn create<E: Environment>(
        &self,
        env: &E,
        rng: &mut SimRng,
    ) -> Result<WeightedParticleBelief<E::State>, BeliefError> {
        let b = create_environment_belief(env, self.n_particles, rng)?;
        Ok(match self.kind {
            BeliefKind::Weighted { resample_threshold } => {
                b.with_resample_threshold(resample_threshold)
            }
            BeliefKind::Unweighted => b,
        })
    }

    pub fn update<E: Environment>(
        &self,
        belief: &WeightedParticleBelief<E::State>,
        action: &E::Action,
        obs: &E::Observation,
        env: &E,
        rng: &mut SimRng,
    ) -> Result<WeightedParticleBelief<E::State>, BeliefError> {
        let updated = update(belief, action, obs, env, rng)?;
        Ok(match self.kind {
            BeliefKind::Weighted { .. } => updated,
            BeliefKind::Unweighted => updated.systematic_resample(rng),
        })
    }
}
