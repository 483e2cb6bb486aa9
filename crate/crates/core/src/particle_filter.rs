//! Generative belief update: resample, propagate, reweight.

use rand::Rng;

use crate::belief::ParticleBelief;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::rng::SeededStream;

/// Output of [`pf_update`].
#[derive(Debug, Clone)]
pub struct PfUpdate<S> {
    pub posterior: ParticleBelief<S>,
    /// Uniform-weight particle set that was propagated (index `i` is the parent of posterior particle `i`).
    pub prior_resampled: ParticleBelief<S>,
    /// State part of the step reward.
    pub r_x: f64,
    /// `P_Z(z | x'_i)` for every propagated particle.
    pub obs_likelihoods: Vec<f64>,
}

/// Low-variance resampling with a single uniform draw. Returns `n` parent indices.
pub fn systematic_resample(weights: &[f64], n: usize, rng: &mut SeededStream) -> Vec<usize> {
    let step = 1.0 / n as f64;
    let u0: f64 = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut j = 0;
    for k in 0..n {
        let target = u0 + k as f64 * step;
        while (target > cumulative || weights[j] == 0.0) && j + 1 < weights.len() {
            j += 1;
            cumulative += weights[j];
        }
        // rounding at the tail can run onto trailing zero weights
        let mut pick = j;
        while weights[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        out.push(pick);
    }
    out
}

fn sample_index(weights: &[f64], rng: &mut SeededStream) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Draw a state from `b`, propagate it under `a`, and observe it.
pub fn sample_observation<M: GenerativeModel>(
    b: &ParticleBelief<M::State>,
    a: usize,
    model: &M,
    rng: &mut SeededStream,
) -> M::Observation {
    let i = sample_index(b.weights(), rng);
    let x_next = model.sample_transition(&b.particles()[i], a, rng);
    model.sample_observation(&x_next, rng)
}

/// Particle-filter update of `b` under action `a` and observation `z`.
///
/// Randomness is consumed only by the resampling and propagation steps.
pub fn pf_update<M: GenerativeModel>(
    b: &ParticleBelief<M::State>,
    a: usize,
    z: &M::Observation,
    model: &M,
    rng: &mut SeededStream,
) -> Result<PfUpdate<M::State>> {
    let m = b.len();
    let parents = systematic_resample(b.weights(), m, rng);
    let resampled: Vec<M::State> = parents.iter().map(|&i| b.particles()[i].clone()).collect();
    let propagated: Vec<M::State> = resampled.iter().map(|x| model.sample_transition(x, a, rng)).collect();
    let obs_likelihoods: Vec<f64> = propagated.iter().map(|x| model.observation_density(z, x)).collect();
    if obs_likelihoods.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(Error::ModelEvaluation("observation density not finite and nonnegative".into()));
    }
    let posterior = match ParticleBelief::from_raw_weights(propagated, &obs_likelihoods) {
        Ok(p) => p,
        Err(Error::DegenerateWeights(_)) => return Err(Error::DegeneratePosterior),
        Err(e) => return Err(e),
    };
    let prior_resampled = ParticleBelief::uniform(resampled)?;
    let r_x = model.belief_reward(b, a, &posterior)?;
    Ok(PfUpdate { posterior, prior_resampled, r_x, obs_likelihoods })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_models::ScalarModel;

    #[test]
    fn single_particle_deterministic() {
        let model = ScalarModel::tables(vec![0.3], vec![vec![1.0]]);
        let b = ParticleBelief::uniform(vec![[0.0]]).unwrap();
        let mut rng = SeededStream::new(1);
        let z = sample_observation(&b, 0, &model, &mut rng);
        assert_eq!(z, [0.0]);
        let res = pf_update(&b, 0, &z, &model, &mut rng).unwrap();
        assert_eq!(res.posterior.weights(), &[1.0]);
        assert_eq!(res.obs_likelihoods, vec![0.3]);
    }

    #[test]
    fn sample_observation_is_deterministic_per_stream() {
        let model = ScalarModel::tables(vec![1.0; 4], vec![vec![1.0; 4]; 4]);
        let b = ParticleBelief::uniform(vec![[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let z1 = sample_observation(&b, 0, &model, &mut SeededStream::new(5));
        let z2 = sample_observation(&b, 0, &model, &mut SeededStream::new(5));
        assert_eq!(z1, z2);
    }

    #[test]
    fn zero_weight_particle_never_observed() {
        let model = ScalarModel::tables(vec![1.0; 2], vec![vec![1.0; 2]; 2]);
        let b = ParticleBelief::new(vec![[0.0], [1.0]], vec![1.0, 0.0]).unwrap();
        let mut rng = SeededStream::new(9);
        for _ in 0..10_000 {
            assert_eq!(sample_observation(&b, 0, &model, &mut rng), [0.0]);
        }
    }

    #[test]
    fn posterior_is_normalized_likelihood_under_uniform_prior() {
        let model = ScalarModel::tables(vec![0.2, 0.8], vec![vec![1.0; 2]; 2]);
        // resampling a uniform two-particle belief with one draw keeps both particles
        let b = ParticleBelief::uniform(vec![[0.0], [1.0]]).unwrap();
        let res = pf_update(&b, 0, &[0.0], &model, &mut SeededStream::new(3)).unwrap();
        let w = res.posterior.weights();
        assert!((w[0] - 0.2).abs() < 1e-12 && (w[1] - 0.8).abs() < 1e-12);
        assert_eq!(res.prior_resampled.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn impossible_observation_is_degenerate() {
        let model = ScalarModel::tables(vec![0.0, 0.0], vec![vec![1.0; 2]; 2]);
        let b = ParticleBelief::uniform(vec![[0.0], [1.0]]).unwrap();
        let err = pf_update(&b, 0, &[0.0], &model, &mut SeededStream::new(3)).unwrap_err();
        assert_eq!(err, Error::DegeneratePosterior);
    }

    #[test]
    fn systematic_resample_counts_follow_weights() {
        let w = [0.1, 0.0, 0.6, 0.3];
        let idx = systematic_resample(&w, 10, &mut SeededStream::new(4));
        let count = |k| idx.iter().filter(|&&i| i == k).count();
        assert_eq!(count(1), 0);
        assert_eq!(count(0) + count(2) + count(3), 10);
        assert!((5..=7).contains(&count(2)));
        assert!((2..=4).contains(&count(3)));
        assert!(idx.windows(2).all(|p| p[0] <= p[1]));
    }
}
