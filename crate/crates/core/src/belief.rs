use crate::error::{Error, Result};
use crate::model::GenerativeModel;

/// Tolerance on the weight-sum invariant of a [`ParticleBelief`].
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A belief represented by `m` weighted state particles.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    weights: Vec<f64>,
}

impl<S> ParticleBelief<S> {
    pub fn new(particles: Vec<S>, weights: Vec<f64>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::DegenerateWeights("belief has no particles".into()));
        }
        if particles.len() != weights.len() {
            return Err(Error::DegenerateWeights(format!(
                "{} particles but {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::DegenerateWeights("negative or non-finite weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::DegenerateWeights(format!("weights sum to {sum}")));
        }
        Ok(ParticleBelief { particles, weights })
    }

    /// Equal-weight belief over `particles`.
    pub fn uniform(particles: Vec<S>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::DegenerateWeights("belief has no particles".into()));
        }
        let w = 1.0 / particles.len() as f64;
        let weights = vec![w; particles.len()];
        Ok(ParticleBelief { particles, weights })
    }

    /// Belief from unnormalized nonnegative weights.
    pub fn from_raw_weights(particles: Vec<S>, raw: &[f64]) -> Result<Self> {
        let weights = normalize_weights(raw)?;
        Self::new(particles, weights)
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

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.particles.iter().zip(self.weights.iter().copied())
    }
}

impl<S: AsRef<[f64]>> ParticleBelief<S> {
    /// Weighted mean of the particle coordinates.
    pub fn mean(&self) -> Vec<f64> {
        let dim = self.particles[0].as_ref().len();
        let mut mean = vec![0.0; dim];
        for (x, w) in self.iter() {
            for (m, xi) in mean.iter_mut().zip(x.as_ref()) {
                *m += w * xi;
            }
        }
        mean
    }
}

/// Scale nonnegative weights to sum to one.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.is_empty() {
        return Err(Error::DegenerateWeights("empty weight vector".into()));
    }
    if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::DegenerateWeights("negative or non-finite weight".into()));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::DegenerateWeights(format!("weights sum to {sum}")));
    }
    Ok(raw.iter().map(|w| w / sum).collect())
}

/// Expected state reward `sum_i w_i r(x_i, a)` of a belief.
pub fn expected_state_reward<M: GenerativeModel>(b: &ParticleBelief<M::State>, a: usize, model: &M) -> Result<f64> {
    let mut total = 0.0;
    for (x, w) in b.iter() {
        let r = model.state_reward(x, a);
        if !r.is_finite() {
            return Err(Error::ModelEvaluation(format!("state reward {r} for action {a}")));
        }
        total += w * r;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_models::ScalarModel;

    #[test]
    fn normalize_symmetric() {
        assert_eq!(normalize_weights(&[1.0; 4]).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn normalize_identity_on_normalized() {
        let w = normalize_weights(&[0.2, 0.8]).unwrap();
        assert!((w[0] - 0.2).abs() < 1e-15 && (w[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_degenerate() {
        assert!(matches!(normalize_weights(&[0.0, 0.0]), Err(Error::DegenerateWeights(_))));
        assert!(matches!(normalize_weights(&[1.0, -0.5]), Err(Error::DegenerateWeights(_))));
    }

    #[test]
    fn belief_rejects_bad_weights() {
        assert!(ParticleBelief::new(vec![[0.0]; 2], vec![0.5, 0.6]).is_err());
        assert!(ParticleBelief::new(vec![[0.0]; 2], vec![0.5]).is_err());
        assert!(ParticleBelief::<[f64; 1]>::new(vec![], vec![]).is_err());
    }

    #[test]
    fn expected_reward_constant() {
        let model = ScalarModel::constant_reward(5.0);
        let b = ParticleBelief::uniform(vec![[1.0], [2.0], [3.0]]).unwrap();
        assert!((expected_state_reward(&b, 0, &model).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn expected_reward_dot_product() {
        // state reward r(x, a) = x for this model
        let model = ScalarModel::identity_reward();
        let b = ParticleBelief::new(vec![[0.0], [4.0]], vec![0.25, 0.75]).unwrap();
        assert_eq!(expected_state_reward(&b, 0, &model).unwrap(), 3.0);
    }

    #[test]
    fn expected_reward_nan_is_error() {
        let model = ScalarModel::constant_reward(f64::NAN);
        let b = ParticleBelief::uniform(vec![[0.0]]).unwrap();
        assert!(matches!(expected_state_reward(&b, 0, &model), Err(Error::ModelEvaluation(_))));
    }

    #[test]
    fn mean_is_weighted() {
        let b = ParticleBelief::new(vec![[0.0, 2.0], [4.0, 6.0]], vec![0.25, 0.75]).unwrap();
        assert_eq!(b.mean(), vec![3.0, 5.0]);
    }
}
