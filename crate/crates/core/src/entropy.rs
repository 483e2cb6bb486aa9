//! Boers differential-entropy estimator and its refinable bounds.
//!
//! For a step `b_k -a-> z -> b_{k+1}` with prior particles `x_k^j` (weights
//! `w_k^j`) and propagated particles `x_{k+1}^i` (posterior weights
//! `w_{k+1}^i`) the information reward is
//!
//! ```text
//! -H = -log(sum_i P_Z(z|x'_i) w_k^i)
//!      + sum_i w_{k+1}^i log(P_Z(z|x'_i) sum_j P_T(x'_i|x_j, a) w_k^j)
//! ```
//!
//! The bounds replace the inner transition sums with partial sums over an
//! index subset `A_k` (lower bound) or with `const * P_Z` outside an index
//! subset `A_{k+1}` (upper bound), where `const` bounds the transition
//! density from above. Index subsets grow through `M` levels; at level `M`
//! both bounds equal the estimator.
//!
//! [`SimplificationCache`] stores per-particle partial sums so that going
//! from level 1 to level `M` evaluates every transition-density pair exactly
//! once, and no more than the `m^2` evaluations of the plain estimator.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::belief::ParticleBelief;
use crate::config::level_sizes;
use crate::error::{Error, Result};
use crate::model::GenerativeModel;
use crate::particle_filter::PfUpdate;
use crate::rng::StreamKey;

/// Density products below this value are clamped before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Bracket `lower <= -H <= upper` on the information reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundsPair {
    pub fn exact(v: f64) -> Self {
        BoundsPair { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn is_collapsed(&self) -> bool {
        self.lower == self.upper
    }
}

#[inline]
fn floored_ln(v: f64, clamped: &mut bool) -> f64 {
    if v < DENSITY_FLOOR {
        *clamped = true;
        DENSITY_FLOOR.ln()
    } else {
        v.ln()
    }
}

/// Upper bound `const` on the transition density for action `a`.
pub fn max_transition_density<M: GenerativeModel>(model: &M, a: usize) -> Result<f64> {
    let c = model.max_transition_density(a)?;
    if !c.is_finite() || c <= 0.0 {
        return Err(Error::UnsupportedModel(format!("transition density bound {c} for action {a}")));
    }
    Ok(c)
}

/// Plain `-H` of the Boers estimator, `Θ(m t_obs + m^2 t_mot)`.
///
/// Fails with [`Error::DegenerateEntropy`] when a logarithm with nonzero
/// weight would receive an exact zero.
pub fn boers_minus_entropy<M: GenerativeModel>(
    prior: &ParticleBelief<M::State>,
    a: usize,
    z: &M::Observation,
    posterior: &ParticleBelief<M::State>,
    model: &M,
) -> Result<f64> {
    if prior.len() != posterior.len() {
        return Err(Error::InternalConsistency("prior and posterior sizes differ".into()));
    }
    let lik: Vec<f64> = posterior.particles().iter().map(|x| model.observation_density(z, x)).collect();
    let evidence: f64 = lik.iter().zip(prior.weights()).map(|(l, w)| l * w).sum();
    if evidence <= 0.0 {
        return Err(Error::DegenerateEntropy);
    }
    let mut total = -evidence.ln();
    for ((x_next, w_next), l) in posterior.iter().zip(&lik) {
        if w_next == 0.0 {
            continue;
        }
        let inner: f64 = prior.iter().map(|(x, w)| model.transition_density(x_next, x, a) * w).sum();
        let prod = l * inner;
        if prod <= 0.0 {
            return Err(Error::DegenerateEntropy);
        }
        total += w_next * prod.ln();
    }
    Ok(total)
}

/// `-H` value with logarithm clamping, and whether clamping occurred.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinusEntropy {
    pub value: f64,
    pub clamped: bool,
}

/// Floored `-H` for a particle-filter step, reusing its cached observation likelihoods.
pub fn minus_entropy_of_update<M: GenerativeModel>(pf: &PfUpdate<M::State>, a: usize, model: &M) -> MinusEntropy {
    let prior = &pf.prior_resampled;
    let lik = &pf.obs_likelihoods;
    let mut clamped = false;
    let evidence: f64 = lik.iter().zip(prior.weights()).map(|(l, w)| l * w).sum();
    let mut total = -floored_ln(evidence, &mut clamped);
    for ((x_next, w_next), l) in pf.posterior.iter().zip(lik) {
        if w_next == 0.0 {
            continue;
        }
        let inner: f64 = prior.iter().map(|(x, w)| model.transition_density(x_next, x, a) * w).sum();
        total += w_next * floored_ln(l * inner, &mut clamped);
    }
    MinusEntropy { value: total, clamped }
}

/// Incrementally refinable bounds for one belief transition.
#[derive(Debug, Clone)]
pub struct SimplificationCache<S> {
    pf: PfUpdate<S>,
    action: usize,
    levels: usize,
    level: usize,
    sizes: Vec<usize>,
    /// Order in which indices join both `A_k` and `A_{k+1}`.
    order: Vec<u32>,
    /// Level (1-based) at which each index joins.
    enter: Vec<u16>,
    /// Prior particles and weights laid out in `order`.
    columns: Vec<(S, f64)>,
    const_max: f64,
    term_a: f64,
    /// `sum_{j in A_k} P_T(x'_i | x_j) w_j` for every `i`.
    lower_sum: Vec<f64>,
    /// `sum_j P_T(x'_i | x_j) w_j`, valid for `i` in `A_{k+1}`.
    full_sum: Vec<f64>,
    /// `ln(c * P_Z(z | x'_i))`, filled at level 1 for rows outside `A_2`.
    loose_ln: Vec<f64>,
    /// Per-block transition sums of rows already evaluated, `m x (M + 1)`.
    block_sums: Vec<f64>,
    bounds: BoundsPair,
    clamped: bool,
    pt_evals: u64,
}

fn permutation(m: usize, key: StreamKey) -> Vec<u32> {
    let mut order: Vec<u32> = (0..m as u32).collect();
    order.shuffle(&mut key.stream());
    order
}

fn entry_levels(order: &[u32], sizes: &[usize]) -> Vec<u16> {
    let mut enter = vec![0u16; order.len()];
    let mut start = 0;
    for (s, &end) in sizes.iter().enumerate() {
        for &i in &order[start..end] {
            enter[i as usize] = (s + 1) as u16;
        }
        start = end;
    }
    enter
}

impl<S: Clone> SimplificationCache<S> {
    /// Build the cache at level 1 and return it with its initial bounds.
    ///
    /// `perm_key` fixes the order in which particle indices join the
    /// simplification sets; it is never drawn from a shared stream.
    pub fn new<M: GenerativeModel<State = S>>(
        pf: PfUpdate<S>,
        model: &M,
        action: usize,
        levels: usize,
        perm_key: StreamKey,
    ) -> Result<(Self, BoundsPair)> {
        if levels == 0 {
            return Err(Error::Config("M must be >= 1".into()));
        }
        let m = pf.posterior.len();
        if pf.prior_resampled.len() != m || pf.obs_likelihoods.len() != m {
            return Err(Error::InternalConsistency("particle-filter result sizes differ".into()));
        }
        let const_max = max_transition_density(model, action)?;
        let sizes = level_sizes(m, levels);
        let order = permutation(m, perm_key.fork(b"order"));
        let enter = entry_levels(&order, &sizes);
        let columns = order
            .iter()
            .map(|&j| (pf.prior_resampled.particles()[j as usize].clone(), pf.prior_resampled.weights()[j as usize]))
            .collect();
        let mut clamped = false;
        let evidence: f64 = pf.obs_likelihoods.iter().zip(pf.prior_resampled.weights()).map(|(l, w)| l * w).sum();
        let term_a = -floored_ln(evidence, &mut clamped);
        let mut cache = SimplificationCache {
            pf,
            action,
            levels,
            level: 0,
            sizes,
            order,
            enter,
            columns,
            const_max,
            term_a,
            lower_sum: vec![0.0; m],
            full_sum: vec![0.0; m],
            loose_ln: vec![0.0; m],
            block_sums: vec![0.0; m * (levels + 1)],
            bounds: BoundsPair::exact(0.0),
            clamped,
            pt_evals: 0,
        };
        cache.promote(model);
        let bounds = cache.bounds;
        Ok((cache, bounds))
    }

    /// Promote to the next level, evaluating only transition pairs not seen before.
    pub fn refine<M: GenerativeModel<State = S>>(&mut self, model: &M) -> Result<BoundsPair> {
        if self.level >= self.levels {
            return Err(Error::AlreadyConverged(self.level));
        }
        self.promote(model);
        Ok(self.bounds)
    }

    fn span(sizes: &[usize], t: usize) -> std::ops::Range<usize> {
        let start = if t == 1 { 0 } else { sizes[t - 2] };
        start..sizes[t - 1]
    }

    fn block<'a, T>(items: &'a [T], sizes: &[usize], t: usize) -> &'a [T] {
        &items[Self::span(sizes, t)]
    }

    fn promote<M: GenerativeModel<State = S>>(&mut self, model: &M) {
        let t = self.level + 1;
        let width = self.levels + 1;
        let m = self.lower_sum.len();
        let a = self.action;
        let post = self.pf.posterior.particles();
        let density = |x_next: &S, cols: &[(S, f64)]| -> f64 {
            cols.iter().map(|(x, w)| model.transition_density(x_next, x, a) * w).sum()
        };

        let mut evals = 0u64;
        // rows joining A_{k+1}: every transition pair with a prior index not yet in A_k
        for &i in Self::block(&self.order, &self.sizes, t) {
            let i = i as usize;
            let x_next = &post[i];
            let row = &mut self.block_sums[i * width..(i + 1) * width];
            let mut full = self.lower_sum[i];
            for (b, slot) in row.iter_mut().enumerate().skip(t) {
                let cols = Self::block(&self.columns, &self.sizes, b);
                *slot = density(x_next, cols);
                evals += cols.len() as u64;
                full += *slot;
            }
            self.full_sum[i] = full;
        }
        // columns joining A_k
        let new_cols = Self::block(&self.columns, &self.sizes, t);
        for i in 0..m {
            if (self.enter[i] as usize) <= t {
                self.lower_sum[i] += self.block_sums[i * width + t];
            } else {
                self.lower_sum[i] += density(&post[i], new_cols);
                evals += new_cols.len() as u64;
            }
        }
        self.pt_evals += evals;
        self.level = t;
        self.bounds = self.evaluate_bounds();
    }

    fn evaluate_bounds(&mut self) -> BoundsPair {
        let lik = &self.pf.obs_likelihoods;
        let w_next = self.pf.posterior.weights();
        let mut clamped = self.clamped;
        let mut lower = self.term_a;
        let mut upper = self.term_a;
        for i in 0..lik.len() {
            let w = w_next[i];
            if w == 0.0 {
                continue;
            }
            lower += w * floored_ln(lik[i] * self.lower_sum[i], &mut clamped);
            if (self.enter[i] as usize) <= self.level {
                upper += w * floored_ln(lik[i] * self.full_sum[i], &mut clamped);
            } else {
                if self.level == 1 {
                    self.loose_ln[i] = floored_ln(self.const_max * lik[i], &mut clamped);
                }
                upper += w * self.loose_ln[i];
            }
        }
        self.clamped = clamped;
        if self.level == self.levels {
            BoundsPair::exact(lower)
        } else {
            BoundsPair { lower, upper }
        }
    }

    pub fn bounds(&self) -> BoundsPair {
        self.bounds
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_converged(&self) -> bool {
        self.level == self.levels
    }

    pub fn action(&self) -> usize {
        self.action
    }

    pub fn update(&self) -> &PfUpdate<S> {
        &self.pf
    }

    pub fn posterior(&self) -> &ParticleBelief<S> {
        &self.pf.posterior
    }

    pub fn r_x(&self) -> f64 {
        self.pf.r_x
    }

    /// Cached `-log(sum_i P_Z w_k^i)`.
    pub fn term_a(&self) -> f64 {
        self.term_a
    }

    pub fn const_max(&self) -> f64 {
        self.const_max
    }

    /// Whether any logarithm argument was clamped at [`DENSITY_FLOOR`].
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    /// Transition-density evaluations performed by this cache so far.
    pub fn transition_evals(&self) -> u64 {
        self.pt_evals
    }

    /// Current `(A_k, A_{k+1})`, each sorted ascending.
    pub fn index_sets(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.sizes[self.level - 1];
        let mut ak: Vec<usize> = self.order[..n].iter().map(|&i| i as usize).collect();
        ak.sort_unstable();
        (ak.clone(), ak)
    }

    /// Partial transition sums currently feeding the lower bound.
    pub fn lower_sums(&self) -> &[f64] {
        &self.lower_sum
    }
}

/// Build a [`SimplificationCache`] at level 1.
pub fn init_cache<M: GenerativeModel>(
    pf: PfUpdate<M::State>,
    model: &M,
    a: usize,
    levels: usize,
    perm_key: StreamKey,
) -> Result<(SimplificationCache<M::State>, BoundsPair)> {
    SimplificationCache::new(pf, model, a, levels, perm_key)
}
