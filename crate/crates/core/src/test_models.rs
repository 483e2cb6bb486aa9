//! Small table-driven models for unit tests.

use crate::error::Result;
use crate::model::GenerativeModel;
use crate::rng::SeededStream;

#[derive(Debug, Clone)]
pub enum RewardKind {
    Constant(f64),
    Identity,
}

/// One-dimensional model whose states are integer ids stored as `[id as f64]`.
///
/// Transitions and observations are deterministic identities; densities come
/// from lookup tables so estimator inputs can be fixed exactly.
#[derive(Debug, Clone)]
pub struct ScalarModel {
    pub reward: RewardKind,
    /// `obs_lik[x]`, independent of the observation value.
    pub obs_lik: Vec<f64>,
    /// `trans[x_next][x]`.
    pub trans: Vec<Vec<f64>>,
    pub max_trans: Option<f64>,
    pub actions: usize,
}

impl ScalarModel {
    pub fn constant_reward(r: f64) -> Self {
        ScalarModel { reward: RewardKind::Constant(r), ..Self::tables(vec![1.0; 4], vec![vec![1.0; 4]; 4]) }
    }

    pub fn identity_reward() -> Self {
        ScalarModel { reward: RewardKind::Identity, ..Self::tables(vec![1.0; 8], vec![vec![1.0; 8]; 8]) }
    }

    pub fn tables(obs_lik: Vec<f64>, trans: Vec<Vec<f64>>) -> Self {
        let max = trans.iter().flatten().cloned().fold(0.0, f64::max);
        ScalarModel { reward: RewardKind::Constant(0.0), obs_lik, trans, max_trans: Some(max), actions: 1 }
    }

    fn id(x: &[f64; 1]) -> usize {
        x[0] as usize
    }
}

impl GenerativeModel for ScalarModel {
    type State = [f64; 1];
    type Observation = [f64; 1];

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn sample_transition(&self, x: &[f64; 1], _a: usize, _rng: &mut SeededStream) -> [f64; 1] {
        *x
    }

    fn transition_density(&self, x_next: &[f64; 1], x: &[f64; 1], _a: usize) -> f64 {
        self.trans[Self::id(x_next)][Self::id(x)]
    }

    fn sample_observation(&self, x: &[f64; 1], _rng: &mut SeededStream) -> [f64; 1] {
        *x
    }

    fn observation_density(&self, _z: &[f64; 1], x: &[f64; 1]) -> f64 {
        self.obs_lik[Self::id(x)]
    }

    fn state_reward(&self, x: &[f64; 1], _a: usize) -> f64 {
        match self.reward {
            RewardKind::Constant(c) => c,
            RewardKind::Identity => x[0],
        }
    }

    fn max_transition_density(&self, a: usize) -> Result<f64> {
        match self.max_trans {
            Some(m) => Ok(m),
            None => Err(crate::Error::UnsupportedModel(format!("action {a}"))),
        }
    }
}

/// One-dimensional Gaussian random walk with actions `-1, 0, +1` and
/// observation noise growing with `|x|`.
#[derive(Debug, Clone)]
pub struct GaussianWalk {
    pub sigma_t: f64,
    pub sigma_o: f64,
}

impl Default for GaussianWalk {
    fn default() -> Self {
        GaussianWalk { sigma_t: 0.5, sigma_o: 0.4 }
    }
}

fn normal_pdf(d: f64, s: f64) -> f64 {
    (-0.5 * (d / s) * (d / s)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * s)
}

impl GaussianWalk {
    fn obs_sigma(&self, x: f64) -> f64 {
        self.sigma_o * (1.0 + 0.5 * x.abs())
    }
}

impl GenerativeModel for GaussianWalk {
    type State = [f64; 1];
    type Observation = [f64; 1];

    fn num_actions(&self) -> usize {
        3
    }

    fn sample_transition(&self, x: &[f64; 1], a: usize, rng: &mut SeededStream) -> [f64; 1] {
        use rand_distr::{Distribution, StandardNormal};
        let n: f64 = StandardNormal.sample(rng);
        [x[0] + a as f64 - 1.0 + self.sigma_t * n]
    }

    fn transition_density(&self, x_next: &[f64; 1], x: &[f64; 1], a: usize) -> f64 {
        normal_pdf(x_next[0] - x[0] - (a as f64 - 1.0), self.sigma_t)
    }

    fn sample_observation(&self, x: &[f64; 1], rng: &mut SeededStream) -> [f64; 1] {
        use rand_distr::{Distribution, StandardNormal};
        let n: f64 = StandardNormal.sample(rng);
        [x[0] + self.obs_sigma(x[0]) * n]
    }

    fn observation_density(&self, z: &[f64; 1], x: &[f64; 1]) -> f64 {
        normal_pdf(z[0] - x[0], self.obs_sigma(x[0]))
    }

    fn state_reward(&self, x: &[f64; 1], _a: usize) -> f64 {
        -x[0].abs()
    }

    fn max_transition_density(&self, _a: usize) -> Result<f64> {
        Ok(normal_pdf(0.0, self.sigma_t))
    }
}
