use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planner parameters shared by both planners.
///
/// Loadable from TOML with the keys `m`, `d_max`, `n_iter`, `c`, `gamma`,
/// `lambda`, `k_o`, `alpha_o`, `M` and `seed`; omitted keys take the
/// [`Default`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Particles per belief.
    pub m: usize,
    /// Planning depth of the root.
    pub d_max: usize,
    /// Simulations per planning session.
    pub n_iter: usize,
    /// UCB exploration constant.
    pub c: f64,
    pub gamma: f64,
    /// Weight of the information (negative entropy) reward.
    pub lambda: f64,
    /// Observation progressive widening: `|C(ha)| <= k_o * N(ha)^alpha_o`.
    pub k_o: f64,
    pub alpha_o: f64,
    /// Number of simplification levels.
    #[serde(rename = "M")]
    pub levels: usize,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            m: 50,
            d_max: 30,
            n_iter: 200,
            c: 1.0,
            gamma: 0.95,
            lambda: 1.0,
            k_o: 2.0,
            alpha_o: 0.5,
            levels: 4,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.m < 1 {
            return bad("m must be >= 1");
        }
        if self.d_max < 1 {
            return bad("d_max must be >= 1");
        }
        if self.n_iter < 1 {
            return bad("n_iter must be >= 1");
        }
        if self.levels < 1 {
            return bad("M must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad("lambda must be finite and >= 0");
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return bad("c must be finite and >= 0");
        }
        if !(self.k_o > 0.0) || !(self.alpha_o >= 0.0) {
            return bad("k_o must be > 0 and alpha_o >= 0");
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PlannerConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("planner config serializes")
    }

    /// Particle-count thresholds `m^s = ceil(s * m / M)` for `s = 1..=M`.
    pub fn level_sizes(&self) -> Vec<usize> {
        level_sizes(self.m, self.levels)
    }
}

pub fn level_sizes(m: usize, levels: usize) -> Vec<usize> {
    (1..=levels).map(|s| (s * m).div_ceil(levels)).collect()
}
