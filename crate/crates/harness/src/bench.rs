use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use sithpft_core::entropy::minus_entropy_of_update;
use sithpft_core::lightdark::{LightDark, LightDarkConfig};
use sithpft_core::{init_cache, pf_update, sample_observation, StreamKey};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub m: usize,
    /// Seconds per exact estimator evaluation.
    pub exact_s: f64,
    /// Seconds per bound evaluation from level 1 through `M`.
    pub refined_s: f64,
    /// `exact_s` relative to the previous row.
    pub ratio: Option<f64>,
}

/// Fastest per-call time over five batches of at least `min_secs / 5` each.
fn time_per_call(min_secs: f64, mut f: impl FnMut() -> Result<()>) -> Result<f64> {
    f()?;
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let mut calls = 0u32;
        let start = Instant::now();
        loop {
            f()?;
            calls += 1;
            let elapsed = start.elapsed().as_secs_f64();
            if elapsed >= min_secs / 5.0 && calls >= 3 {
                best = best.min(elapsed / calls as f64);
                break;
            }
        }
    }
    Ok(best)
}

/// Time the entropy estimator on a Light Dark belief update for each `m`.
pub fn bench_entropy(ms: &[usize], levels: usize, seed: u64, min_secs: f64) -> Result<Vec<BenchRow>> {
    let model = LightDark::new(LightDarkConfig::default())?;
    let key = StreamKey::from_seed(seed);
    let mut rows: Vec<BenchRow> = Vec::new();
    for &m in ms {
        let b = model.initial_belief(m, &mut key.fork_indexed(b"b0", &[m as u64]).stream())?;
        let a = 0;
        let z = sample_observation(&b, a, &model, &mut key.fork(b"obs").stream());
        let update = pf_update(&b, a, &z, &model, &mut key.fork(b"pf").stream())?;
        let exact_s = time_per_call(min_secs, || {
            std::hint::black_box(minus_entropy_of_update(&update, a, &model));
            Ok(())
        })?;
        let refined_s = time_per_call(min_secs, || {
            let (mut cache, _) = init_cache(update.clone(), &model, a, levels, key.fork(b"perm"))?;
            while !cache.is_converged() {
                std::hint::black_box(cache.refine(&model)?);
            }
            Ok(())
        })?;
        let ratio = rows.last().map(|p| exact_s / p.exact_s);
        rows.push(BenchRow { m, exact_s, refined_s, ratio });
    }
    Ok(rows)
}
