//! Two-dimensional continuous Light Dark.
//!
//! The agent moves in eight directions or executes the terminal `Null`
//! action. Observations are the position plus Gaussian noise whose variance
//! scales with the squared distance to a beacon (clamped at 1). `Null` pays
//! `+goal_reward` inside the goal radius around the origin and
//! `miss_penalty` outside; every other step pays minus the expected distance
//! to the origin under the posterior belief.
//!
//! Every numeric default below is a configurable choice, not a published value.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::rng::SeededStream;

pub type Point = [f64; 2];

/// Index of the terminal action.
pub const NULL_ACTION: usize = 8;
pub const NUM_ACTIONS: usize = 9;

const DIRECTIONS: [Point; 8] = [
    [1.0, 0.0],
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [0.0, 1.0],
    [-FRAC_1_SQRT_2, FRAC_1_SQRT_2],
    [-1.0, 0.0],
    [-FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    [0.0, -1.0],
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
];

/// Environment parameters. Standard deviations are per axis (diagonal covariances).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightDarkConfig {
    pub beacon: Point,
    pub goal_radius: f64,
    pub goal_reward: f64,
    pub miss_penalty: f64,
    pub sigma_t: Point,
    pub sigma_o: Point,
    pub sigma_0: Point,
    pub x0: Point,
    pub step: f64,
    pub lambda: f64,
    /// Lower clamp on the observation-variance scale near the beacon.
    pub obs_floor: f64,
}

impl Default for LightDarkConfig {
    fn default() -> Self {
        LightDarkConfig {
            beacon: [5.0, 0.0],
            goal_radius: 1.0,
            goal_reward: 200.0,
            miss_penalty: -200.0,
            sigma_t: [0.1, 0.1],
            sigma_o: [1.0, 1.0],
            sigma_0: [2.0, 2.0],
            x0: [5.0, 5.0],
            step: 1.0,
            lambda: 60.0,
            obs_floor: 1e-4,
        }
    }
}

impl LightDarkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |p: Point| p.iter().all(|v| v.is_finite() && *v > 0.0);
        if !(self.goal_radius > 0.0) {
            return Err(Error::Config("goal_radius must be > 0".into()));
        }
        if !positive(self.sigma_t) || !positive(self.sigma_o) || !positive(self.sigma_0) {
            return Err(Error::Config("standard deviations must be positive".into()));
        }
        if !(self.obs_floor > 0.0 && self.obs_floor <= 1.0) {
            return Err(Error::Config("obs_floor must lie in (0, 1]".into()));
        }
        if !(self.lambda >= 0.0) {
            return Err(Error::Config("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

#[inline]
fn gaussian2(d0: f64, d1: f64, s0: f64, s1: f64) -> f64 {
    let q = (d0 / s0) * (d0 / s0) + (d1 / s1) * (d1 / s1);
    (-0.5 * q).exp() / (2.0 * PI * s0 * s1)
}

/// The Light Dark generative model.
#[derive(Debug, Clone)]
pub struct LightDark {
    cfg: LightDarkConfig,
}

impl LightDark {
    pub fn new(cfg: LightDarkConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(LightDark { cfg })
    }

    pub fn config(&self) -> &LightDarkConfig {
        &self.cfg
    }

    /// Displacement of action `a` (zero for `Null`).
    pub fn action_vector(&self, a: usize) -> Point {
        if a >= NULL_ACTION {
            return [0.0, 0.0];
        }
        let d = DIRECTIONS[a];
        [d[0] * self.cfg.step, d[1] * self.cfg.step]
    }

    /// Observation-variance multiplier `max(min(1, |x - beacon|^2), floor)`.
    pub fn observation_scale(&self, x: &Point) -> f64 {
        let dx = x[0] - self.cfg.beacon[0];
        let dy = x[1] - self.cfg.beacon[1];
        (dx * dx + dy * dy).min(1.0).max(self.cfg.obs_floor)
    }

    /// Initial belief: `m` draws from `N(x0, diag(sigma_0^2))`.
    pub fn initial_belief(&self, m: usize, rng: &mut SeededStream) -> Result<ParticleBelief<Point>> {
        let parts = (0..m).map(|_| self.sample_initial_state(rng)).collect();
        ParticleBelief::uniform(parts)
    }

    pub fn sample_initial_state(&self, rng: &mut SeededStream) -> Point {
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        [self.cfg.x0[0] + self.cfg.sigma_0[0] * n0, self.cfg.x0[1] + self.cfg.sigma_0[1] * n1]
    }

    pub fn in_goal(&self, x: &Point) -> bool {
        (x[0] * x[0] + x[1] * x[1]).sqrt() <= self.cfg.goal_radius
    }
}

impl GenerativeModel for LightDark {
    type State = Point;
    type Observation = Point;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn sample_transition(&self, x: &Point, a: usize, rng: &mut SeededStream) -> Point {
        let v = self.action_vector(a);
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        [x[0] + v[0] + self.cfg.sigma_t[0] * n0, x[1] + v[1] + self.cfg.sigma_t[1] * n1]
    }

    fn transition_density(&self, x_next: &Point, x: &Point, a: usize) -> f64 {
        let v = self.action_vector(a);
        gaussian2(x_next[0] - x[0] - v[0], x_next[1] - x[1] - v[1], self.cfg.sigma_t[0], self.cfg.sigma_t[1])
    }

    fn sample_observation(&self, x: &Point, rng: &mut SeededStream) -> Point {
        let s = self.observation_scale(x).sqrt();
        let n0: f64 = StandardNormal.sample(rng);
        let n1: f64 = StandardNormal.sample(rng);
        [x[0] + s * self.cfg.sigma_o[0] * n0, x[1] + s * self.cfg.sigma_o[1] * n1]
    }

    fn observation_density(&self, z: &Point, x: &Point) -> f64 {
        let s = self.observation_scale(x).sqrt();
        gaussian2(z[0] - x[0], z[1] - x[1], s * self.cfg.sigma_o[0], s * self.cfg.sigma_o[1])
    }

    fn state_reward(&self, x: &Point, a: usize) -> f64 {
        if a == NULL_ACTION {
            if self.in_goal(x) {
                self.cfg.goal_reward
            } else {
                self.cfg.miss_penalty
            }
        } else {
            -(x[0] * x[0] + x[1] * x[1]).sqrt()
        }
    }

    fn is_terminal_action(&self, a: usize) -> bool {
        a == NULL_ACTION
    }

    fn max_transition_density(&self, _a: usize) -> Result<f64> {
        Ok(1.0 / (2.0 * PI * self.cfg.sigma_t[0] * self.cfg.sigma_t[1]))
    }

    /// The step reward is evaluated on the posterior belief.
    fn belief_reward(
        &self,
        _prior: &ParticleBelief<Point>,
        a: usize,
        posterior: &ParticleBelief<Point>,
    ) -> Result<f64> {
        crate::belief::expected_state_reward(posterior, a, self)
    }
}

/// One executed step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub step: usize,
    pub x1: f64,
    pub x2: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub action: usize,
    pub reward: f64,
}

/// Write a trajectory as CSV with columns `step,x1,x2,mean1,mean2,action,reward`.
pub fn write_trajectory_csv(steps: &[TrajectoryStep], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    if steps.is_empty() {
        w.write_record(["step", "x1", "x2", "mean1", "mean2", "action", "reward"])
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    for s in steps {
        w.serialize(s).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
