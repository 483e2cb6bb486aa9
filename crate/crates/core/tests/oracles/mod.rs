//! Reference computations shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::HashMap;

use sithpft_core::entropy::DENSITY_FLOOR;
use sithpft_core::lightdark::{LightDark, Point};
use sithpft_core::search::TraceStep;
use sithpft_core::sith::SithTree;
use sithpft_core::{pf_update, sample_observation, GenerativeModel, PfUpdate, StreamKey};

/// Light Dark step from a fresh initial belief, all randomness forked off `seed`.
pub fn tuple(model: &LightDark, m: usize, a: usize, seed: u64) -> PfUpdate<Point> {
    let key = StreamKey::from_seed(seed);
    let b = model.initial_belief(m, &mut key.fork(b"b").stream()).unwrap();
    let z = sample_observation(&b, a, model, &mut key.fork(b"z").stream());
    pf_update(&b, a, &z, model, &mut key.fork(b"pf").stream()).unwrap()
}

fn clamp_ln(v: f64) -> f64 {
    v.max(DENSITY_FLOOR).ln()
}

/// Bounds evaluated directly from their definition at explicit index sets.
/// With both sets equal to `0..m` both values are the plain estimator.
pub fn bounds_at<M: GenerativeModel>(
    pf: &PfUpdate<M::State>,
    model: &M,
    a: usize,
    ak: &[usize],
    ak1: &[usize],
) -> (f64, f64) {
    let prior = pf.prior_resampled.particles();
    let wk = pf.prior_resampled.weights();
    let post = pf.posterior.particles();
    let wk1 = pf.posterior.weights();
    let lik = &pf.obs_likelihoods;
    let m = post.len();
    let cst = model.max_transition_density(a).unwrap();
    let mut evidence = 0.0;
    for i in 0..m {
        evidence += lik[i] * wk[i];
    }
    let mut lower = -clamp_ln(evidence);
    let mut upper = lower;
    for i in 0..m {
        if wk1[i] == 0.0 {
            continue;
        }
        let mut partial = 0.0;
        for &j in ak {
            partial += model.transition_density(&post[i], &prior[j], a) * wk[j];
        }
        lower += wk1[i] * clamp_ln(lik[i] * partial);
        if ak1.contains(&i) {
            let mut full = 0.0;
            for j in 0..m {
                full += model.transition_density(&post[i], &prior[j], a) * wk[j];
            }
            upper += wk1[i] * clamp_ln(lik[i] * full);
        } else {
            upper += wk1[i] * clamp_ln(cst * lik[i]);
        }
    }
    (lower, upper)
}

/// Lower/upper return of every edge in `trace`, rebuilt from the final node bounds.
pub fn shadow_returns(tree: &SithTree<Point, Point>, trace: &[TraceStep], gamma: f64) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); trace.len()];
    let mut tail = (0.0, 0.0);
    for (k, step) in trace.iter().enumerate().rev() {
        let Some(c) = step.child else {
            tail = (0.0, 0.0);
            continue;
        };
        let node = &tree.nodes[c];
        if step.created {
            let (mut l, mut u) = (0.0, 0.0);
            for e in &node.rollout.entries {
                let g = gamma.powi(e.exponent as i32);
                l += g * e.bounds.lower;
                u += g * e.bounds.upper;
            }
            tail = (l, u);
        }
        out[k] = (node.bounds.lower + gamma * tail.0, node.bounds.upper + gamma * tail.1);
        tail = out[k];
    }
    out
}

/// Largest relative deviation between each edge's stored bounds and the
/// mean of its shadow-logged returns; `None` if a visit count disagrees.
pub fn shadow_deviation(tree: &SithTree<Point, Point>, traces: &[Vec<TraceStep>], gamma: f64) -> Option<f64> {
    let mut sums = HashMap::<(usize, usize), (f64, f64, u64)>::new();
    for trace in traces {
        for (step, (l, u)) in trace.iter().zip(shadow_returns(tree, trace, gamma)) {
            let e = sums.entry((step.node, step.action)).or_default();
            e.0 += l;
            e.1 += u;
            e.2 += 1;
        }
    }
    let mut worst = 0.0f64;
    for ((h, a), (l, u, n)) in sums {
        let act = &tree.nodes[h].actions[a];
        if act.n != n {
            return None;
        }
        let (l, u) = (l / n as f64, u / n as f64);
        let scale = l.abs().max(u.abs()).max(1.0);
        worst = worst.max((act.lb - l).abs() / scale).max((act.ub - u).abs() / scale);
    }
    Some(worst)
}
