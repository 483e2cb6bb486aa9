mod oracles;

use oracles::{bounds_at, tuple};
use proptest::prelude::*;
use sithpft_core::lightdark::{LightDark, LightDarkConfig, Point};
use sithpft_core::{
    boers_minus_entropy, init_cache, pf_update, sample_observation, CountingModel, SimplificationCache, StreamKey,
};

fn check_incremental(model: &LightDark, m: usize, levels: usize, seed: u64) {
    let a = (seed % 9) as usize;
    let pf = tuple(model, m, a, seed);
    let counting = CountingModel::new(model.clone());
    let (mut cache, mut bounds): (SimplificationCache<Point>, _) =
        init_cache(pf.clone(), &counting, a, levels, StreamKey::from_seed(seed).fork(b"perm")).unwrap();
    loop {
        let (ak, ak1) = cache.index_sets();
        let (l, u) = bounds_at(&pf, model, a, &ak, &ak1);
        assert!(
            (bounds.lower - l).abs() <= 1e-12 * l.abs().max(1.0),
            "level {}: {} vs {l}",
            cache.level(),
            bounds.lower
        );
        assert!(
            (bounds.upper - u).abs() <= 1e-12 * u.abs().max(1.0),
            "level {}: {} vs {u}",
            cache.level(),
            bounds.upper
        );
        if cache.is_converged() {
            break;
        }
        bounds = cache.refine(&counting).unwrap();
    }
    assert_eq!(counting.transition_evals(), (m * m) as u64);
    assert_eq!(cache.transition_evals(), (m * m) as u64);
}

#[test]
fn incremental_matches_from_scratch_m100() {
    let model = LightDark::new(LightDarkConfig { sigma_t: [0.7, 0.7], ..Default::default() }).unwrap();
    for seed in 0..5 {
        check_incremental(&model, 100, 4, seed);
    }
}

#[test]
fn incremental_matches_from_scratch_default_model() {
    let model = LightDark::new(LightDarkConfig::default()).unwrap();
    for (m, levels) in [(37, 3), (64, 5), (100, 4), (10, 10)] {
        check_incremental(&model, m, levels, m as u64);
    }
}

#[test]
fn refine_past_last_level_is_rejected() {
    let model = LightDark::new(LightDarkConfig::default()).unwrap();
    let pf = tuple(&model, 20, 0, 1);
    let (mut cache, _) = init_cache(pf, &model, 0, 2, StreamKey::from_seed(0)).unwrap();
    cache.refine(&model).unwrap();
    assert!(cache.refine(&model).is_err());
}

fn random_model(s_t: f64, s_o: f64, s_0: f64, x0: Point, beacon: Point) -> LightDark {
    LightDark::new(LightDarkConfig {
        sigma_t: [s_t, s_t * 1.3],
        sigma_o: [s_o, s_o],
        sigma_0: [s_0, s_0 * 0.8],
        x0,
        beacon,
        ..Default::default()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sandwich_and_monotone_convergence(
        m_idx in 0usize..3,
        s_t in 0.2f64..2.0,
        s_o in 0.2f64..2.0,
        s_0 in 0.3f64..3.0,
        x0 in prop::array::uniform2(-6.0f64..6.0),
        beacon in prop::array::uniform2(-6.0f64..6.0),
        a in 0usize..9,
        seed in any::<u64>(),
    ) {
        let m = [10, 50, 100][m_idx];
        let model = random_model(s_t, s_o, s_0, x0, beacon);
        let pf = tuple(&model, m, a, seed);
        let all: Vec<usize> = (0..m).collect();
        let (exact, _) = bounds_at(&pf, &model, a, &all, &all);
        let (mut cache, mut b) = init_cache(pf, &model, a, 4, StreamKey::from_seed(seed)).unwrap();
        let mut prev = b;
        loop {
            prop_assert!(b.lower <= exact + 1e-9, "l {} > {}", b.lower, exact);
            prop_assert!(exact <= b.upper + 1e-9, "u {} < {}", b.upper, exact);
            prop_assert!(b.lower >= prev.lower && b.upper <= prev.upper);
            if cache.is_converged() {
                break;
            }
            prev = b;
            b = cache.refine(&model).unwrap();
        }
        prop_assert!((b.lower - exact).abs() <= 1e-9 && (b.upper - exact).abs() <= 1e-9);
    }
}

#[test]
fn plain_estimator_agrees_with_oracle() {
    let model =
        LightDark::new(LightDarkConfig { sigma_t: [0.8, 0.8], sigma_0: [1.0, 1.0], ..Default::default() }).unwrap();
    for seed in 0..10 {
        let m = 60;
        let a = (seed % 9) as usize;
        let key = StreamKey::from_seed(seed);
        let b = model.initial_belief(m, &mut key.fork(b"b").stream()).unwrap();
        let z = sample_observation(&b, a, &model, &mut key.fork(b"z").stream());
        let pf = pf_update(&b, a, &z, &model, &mut key.fork(b"pf").stream()).unwrap();
        let all: Vec<usize> = (0..m).collect();
        let (oracle, _) = bounds_at(&pf, &model, a, &all, &all);
        let plain = boers_minus_entropy(&pf.prior_resampled, a, &z, &pf.posterior, &model).unwrap();
        assert!((plain - oracle).abs() <= 1e-10 * oracle.abs().max(1.0), "{plain} vs {oracle}");
    }
}
