use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sithpft_core::lightdark::{LightDarkConfig, Point};
use sithpft_core::{PlannerConfig, ResimplificationStrategy};

/// `(m, d_max, n_iter)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Row(pub usize, pub usize, pub usize);

impl Row {
    pub fn label(&self) -> String {
        format!("({}, {}, {})", self.0, self.1, self.2)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerOverrides {
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub k_o: Option<f64>,
    pub alpha_o: Option<f64>,
    #[serde(rename = "M")]
    pub levels: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightDarkOverrides {
    pub beacon: Option<Point>,
    pub goal_radius: Option<f64>,
    pub sigma_t: Option<Point>,
    pub sigma_o: Option<Point>,
    pub sigma_0: Option<Point>,
    pub x0: Option<Point>,
    pub step: Option<f64>,
    pub lambda: Option<f64>,
}

/// An experiment description, usually loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub rows: Vec<Row>,
    pub sessions: usize,
    pub repetitions: usize,
    /// Base seed; repetition `r` of row `i` derives its streams from it.
    pub seed: u64,
    pub strategy: ResimplificationStrategy,
    pub planner: PlannerOverrides,
    pub lightdark: LightDarkOverrides,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            rows: vec![Row(50, 30, 200)],
            sessions: 10,
            repetitions: 25,
            seed: 0,
            strategy: ResimplificationStrategy::Specific,
            planner: PlannerOverrides::default(),
            lightdark: LightDarkOverrides::default(),
            output: None,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).context("parsing experiment spec")?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.lightdark_config().validate()?;
        for row in &self.rows {
            self.planner_config(*row, 0).validate().with_context(|| format!("row {}", row.label()))?;
        }
        if self.sessions == 0 && self.repetitions > 0 {
            bail!("sessions must be >= 1");
        }
        Ok(())
    }

    pub fn lightdark_config(&self) -> LightDarkConfig {
        let o = &self.lightdark;
        let d = LightDarkConfig::default();
        LightDarkConfig {
            beacon: o.beacon.unwrap_or(d.beacon),
            goal_radius: o.goal_radius.unwrap_or(d.goal_radius),
            sigma_t: o.sigma_t.unwrap_or(d.sigma_t),
            sigma_o: o.sigma_o.unwrap_or(d.sigma_o),
            sigma_0: o.sigma_0.unwrap_or(d.sigma_0),
            x0: o.x0.unwrap_or(d.x0),
            step: o.step.unwrap_or(d.step),
            lambda: o.lambda.unwrap_or(d.lambda),
            ..d
        }
    }

    /// Planner settings for `row`; `lambda` falls back to the environment's.
    pub fn planner_config(&self, row: Row, seed: u64) -> PlannerConfig {
        let o = &self.planner;
        let d = PlannerConfig::default();
        PlannerConfig {
            m: row.0,
            d_max: row.1,
            n_iter: row.2,
            c: o.c.unwrap_or(d.c),
            gamma: o.gamma.unwrap_or(d.gamma),
            lambda: o.lambda.unwrap_or(self.lightdark_config().lambda),
            k_o: o.k_o.unwrap_or(d.k_o),
            alpha_o: o.alpha_o.unwrap_or(d.alpha_o),
            levels: o.levels.unwrap_or(d.levels),
            seed,
        }
    }
}
