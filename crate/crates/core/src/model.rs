use std::fmt::Debug;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::belief::{expected_state_reward, ParticleBelief};
use crate::error::{Error, Result};
use crate::rng::SeededStream;

/// Generative POMDP model over a finite action set `0..num_actions()`.
///
/// Samplers and densities must agree: `sample_transition` draws from
/// `transition_density(., x, a)` and `sample_observation` from
/// `observation_density(., x)`. Densities are finite and nonnegative.
pub trait GenerativeModel {
    type State: Clone + Debug + AsRef<[f64]>;
    type Observation: Clone + Debug + AsRef<[f64]>;

    fn num_actions(&self) -> usize;

    fn sample_transition(&self, x: &Self::State, a: usize, rng: &mut SeededStream) -> Self::State;

    fn transition_density(&self, x_next: &Self::State, x: &Self::State, a: usize) -> f64;

    fn sample_observation(&self, x: &Self::State, rng: &mut SeededStream) -> Self::Observation;

    fn observation_density(&self, z: &Self::Observation, x: &Self::State) -> f64;

    fn state_reward(&self, x: &Self::State, a: usize) -> f64;

    /// Executing a terminal action ends the episode.
    fn is_terminal_action(&self, _a: usize) -> bool {
        false
    }

    fn is_terminal_state(&self, _x: &Self::State) -> bool {
        false
    }

    /// Supremum over `x, x'` of `transition_density(x', x, a)`.
    fn max_transition_density(&self, a: usize) -> Result<f64> {
        Err(Error::UnsupportedModel(format!("no finite transition-density bound for action {a}")))
    }

    /// State-dependent part of the belief reward for one step `b -a-> b'`.
    ///
    /// Defaults to the prior expectation `sum_i w_i r(x_i, a)`.
    fn belief_reward(
        &self,
        prior: &ParticleBelief<Self::State>,
        a: usize,
        _posterior: &ParticleBelief<Self::State>,
    ) -> Result<f64>
    where
        Self: Sized,
    {
        expected_state_reward(prior, a, self)
    }
}

/// Wrapper counting density evaluations of an inner model.
#[derive(Debug, Default)]
pub struct CountingModel<M> {
    inner: M,
    transition_evals: AtomicU64,
    observation_evals: AtomicU64,
}

impl<M> CountingModel<M> {
    pub fn new(inner: M) -> Self {
        CountingModel { inner, transition_evals: AtomicU64::new(0), observation_evals: AtomicU64::new(0) }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    pub fn transition_evals(&self) -> u64 {
        self.transition_evals.load(Ordering::Relaxed)
    }

    pub fn observation_evals(&self) -> u64 {
        self.observation_evals.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.transition_evals.store(0, Ordering::Relaxed);
        self.observation_evals.store(0, Ordering::Relaxed);
    }
}

impl<M: GenerativeModel> GenerativeModel for CountingModel<M> {
    type State = M::State;
    type Observation = M::Observation;

    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn sample_transition(&self, x: &Self::State, a: usize, rng: &mut SeededStream) -> Self::State {
        self.inner.sample_transition(x, a, rng)
    }

    fn transition_density(&self, x_next: &Self::State, x: &Self::State, a: usize) -> f64 {
        self.transition_evals.fetch_add(1, Ordering::Relaxed);
        self.inner.transition_density(x_next, x, a)
    }

    fn sample_observation(&self, x: &Self::State, rng: &mut SeededStream) -> Self::Observation {
        self.inner.sample_observation(x, rng)
    }

    fn observation_density(&self, z: &Self::Observation, x: &Self::State) -> f64 {
        self.observation_evals.fetch_add(1, Ordering::Relaxed);
        self.inner.observation_density(z, x)
    }

    fn state_reward(&self, x: &Self::State, a: usize) -> f64 {
        self.inner.state_reward(x, a)
    }

    fn is_terminal_action(&self, a: usize) -> bool {
        self.inner.is_terminal_action(a)
    }

    fn is_terminal_state(&self, x: &Self::State) -> bool {
        self.inner.is_terminal_state(x)
    }

    fn max_transition_density(&self, a: usize) -> Result<f64> {
        self.inner.max_transition_density(a)
    }

    fn belief_reward(
        &self,
        prior: &ParticleBelief<Self::State>,
        a: usize,
        posterior: &ParticleBelief<Self::State>,
    ) -> Result<f64> {
        self.inner.belief_reward(prior, a, posterior)
    }
}
