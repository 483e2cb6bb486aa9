use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sithpft_core::lightdark::{LightDark, Point};
use sithpft_core::rng::SeededStream;
use sithpft_core::{
    compare_trees, pf_update, plan_baseline, plan_with_strategy, Error, GenerativeModel, ParticleBelief, StreamKey,
};

use crate::spec::{ExperimentSpec, Row};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workers: usize,
    pub verify: bool,
    /// Write both planners' tree snapshots for every session here.
    pub dump_trees: Option<PathBuf>,
    pub progress: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { workers: 1, verify: true, dump_trees: None, progress: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub mean_s: f64,
    pub stderr_s: f64,
}

impl TimeSummary {
    pub fn from_samples(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return TimeSummary::default();
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() < 2 {
            return TimeSummary { mean_s: mean, stderr_s: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        TimeSummary { mean_s: mean, stderr_s: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub repetition: usize,
    pub session: usize,
    /// Episode within the repetition; a terminal action starts a new one.
    pub episode: usize,
    pub baseline_time_s: f64,
    pub sith_time_s: f64,
    pub baseline_action: usize,
    pub sith_action: usize,
    /// `None` when verification was disabled.
    pub consistent: Option<bool>,
    pub tree_digest: String,
    pub tree_nodes: usize,
    pub resimplification_rounds: u64,
    pub refinements: u64,
    pub fallback_rounds: u64,
    pub level_histogram: Vec<u64>,
    /// Reward collected in the ground-truth environment.
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowReport {
    pub config: Row,
    pub repetitions: usize,
    /// Per-repetition planning time (all sessions), baseline.
    pub baseline: TimeSummary,
    pub sith: TimeSummary,
    /// `baseline.mean_s / sith.mean_s`.
    pub speedup: f64,
    pub consistent: Option<bool>,
    pub mean_resimplification_rounds: f64,
    pub mean_refinements: f64,
    pub fallback_rounds: u64,
    pub level_histogram: Vec<u64>,
    pub sessions: Vec<SessionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub rows: Vec<RowReport>,
}

struct Repetition {
    row: usize,
    sessions: Vec<SessionRecord>,
}

fn session_seed(key: StreamKey, session: usize) -> u64 {
    key.fork_indexed(b"session", &[session as u64]).0
}

/// Belief after executing `a` and observing `z`; when every particle is
/// inconsistent with `z`, the propagated prior is kept with uniform weights.
fn advance_belief(
    model: &LightDark,
    b: &ParticleBelief<Point>,
    a: usize,
    z: &Point,
    rng: &mut SeededStream,
) -> Result<ParticleBelief<Point>> {
    match pf_update(b, a, z, model, rng) {
        Ok(u) => Ok(u.posterior),
        Err(Error::DegeneratePosterior) => {
            let parts = b.particles().iter().map(|x| model.sample_transition(x, a, rng)).collect();
            Ok(ParticleBelief::uniform(parts)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_repetition(spec: &ExperimentSpec, opts: &RunOptions, row_idx: usize, rep: usize) -> Result<Repetition> {
    let row = spec.rows[row_idx];
    let model = LightDark::new(spec.lightdark_config())?;
    let key = StreamKey::from_seed(spec.seed).fork_indexed(b"episode", &[row_idx as u64, rep as u64]);
    let start = |episode: usize| -> Result<(Point, ParticleBelief<Point>)> {
        let ek = key.fork_indexed(b"start", &[episode as u64]);
        let x = model.sample_initial_state(&mut ek.fork(b"x0").stream());
        let b = model.initial_belief(row.0, &mut ek.fork(b"b0").stream())?;
        Ok((x, b))
    };
    let mut env = key.fork(b"env").stream();
    let mut episode = 0;
    let (mut x_true, mut belief) = start(episode)?;
    let mut sessions = Vec::with_capacity(spec.sessions);

    for s in 0..spec.sessions {
        let cfg = spec.planner_config(row, session_seed(key, s));
        let (base, sith) = if rep % 2 == 0 {
            let base = plan_baseline(&belief, &cfg, &model)?;
            let sith = plan_with_strategy(&belief, &cfg, &model, spec.strategy)?;
            (base, sith)
        } else {
            let sith = plan_with_strategy(&belief, &cfg, &model, spec.strategy)?;
            let base = plan_baseline(&belief, &cfg, &model)?;
            (base, sith)
        };
        if let Some(dir) = &opts.dump_trees {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let stem = format!("row{row_idx}-rep{rep}-session{s}");
            base.snapshot.save(dir.join(format!("{stem}-baseline.json")))?;
            sith.snapshot.save(dir.join(format!("{stem}-sith.json")))?;
        }
        let consistent = if opts.verify {
            let cmp = compare_trees(&base.snapshot, &sith.snapshot);
            if !cmp.equal {
                bail!(
                    "tree mismatch in row {} repetition {rep} session {s} at path {:?}",
                    row.label(),
                    cmp.first_divergence.unwrap_or_default()
                );
            }
            if base.action != sith.action {
                bail!(
                    "action mismatch in row {} repetition {rep} session {s}: baseline {} vs {}",
                    row.label(),
                    base.action,
                    sith.action
                );
            }
            Some(true)
        } else {
            None
        };

        let a = base.action;
        let reward = model.state_reward(&x_true, a);
        let terminal = model.is_terminal_action(a);
        sessions.push(SessionRecord {
            repetition: rep,
            session: s,
            episode,
            baseline_time_s: base.report.wall_time_s,
            sith_time_s: sith.report.wall_time_s,
            baseline_action: base.action,
            sith_action: sith.action,
            consistent,
            tree_digest: sith.report.tree_digest.clone(),
            tree_nodes: sith.report.tree_nodes,
            resimplification_rounds: sith.report.resimplification_rounds,
            refinements: sith.report.refinements,
            fallback_rounds: sith.report.fallback_rounds,
            level_histogram: sith.report.level_histogram.clone(),
            reward,
        });
        if opts.progress {
            eprintln!(
                "{} rep {rep} session {s}: action {a}, baseline {:.3}s, sith {:.3}s",
                row.label(),
                base.report.wall_time_s,
                sith.report.wall_time_s
            );
        }
        if terminal {
            episode += 1;
            (x_true, belief) = start(episode)?;
            continue;
        }
        x_true = model.sample_transition(&x_true, a, &mut env);
        let z = model.sample_observation(&x_true, &mut env);
        belief = advance_belief(&model, &belief, a, &z, &mut key.fork_indexed(b"belief", &[s as u64]).stream())?;
    }
    Ok(Repetition { row: row_idx, sessions })
}

fn summarize(row: Row, reps: &[&Repetition], verify: bool) -> RowReport {
    let base_totals: Vec<f64> = reps.iter().map(|r| r.sessions.iter().map(|s| s.baseline_time_s).sum()).collect();
    let sith_totals: Vec<f64> = reps.iter().map(|r| r.sessions.iter().map(|s| s.sith_time_s).sum()).collect();
    let sessions: Vec<SessionRecord> = reps.iter().flat_map(|r| r.sessions.iter().cloned()).collect();
    let baseline = TimeSummary::from_samples(&base_totals);
    let sith = TimeSummary::from_samples(&sith_totals);
    let n = sessions.len().max(1) as f64;
    let mut level_histogram: Vec<u64> = Vec::new();
    for s in &sessions {
        if level_histogram.len() < s.level_histogram.len() {
            level_histogram.resize(s.level_histogram.len(), 0);
        }
        for (acc, v) in level_histogram.iter_mut().zip(&s.level_histogram) {
            *acc += v;
        }
    }
    RowReport {
        config: row,
        repetitions: reps.len(),
        baseline,
        sith,
        speedup: if sith.mean_s > 0.0 { baseline.mean_s / sith.mean_s } else { 0.0 },
        consistent: verify.then_some(true),
        mean_resimplification_rounds: sessions.iter().map(|s| s.resimplification_rounds as f64).sum::<f64>() / n,
        mean_refinements: sessions.iter().map(|s| s.refinements as f64).sum::<f64>() / n,
        fallback_rounds: sessions.iter().map(|s| s.fallback_rounds).sum(),
        level_histogram,
        sessions,
    }
}

/// Run every row and repetition of `spec`, pairing both planners on each session.
///
/// Any tree or action mismatch aborts the run with the divergence.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<RunReport> {
    spec.validate()?;
    if spec.repetitions == 0 {
        return Ok(RunReport::default());
    }
    let tasks: Vec<(usize, usize)> =
        (0..spec.rows.len()).flat_map(|i| (0..spec.repetitions).map(move |r| (i, r))).collect();
    let results: Vec<Repetition> = if opts.workers <= 1 {
        tasks.iter().map(|&(i, r)| run_repetition(spec, opts, i, r)).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| anyhow!("building worker pool: {e}"))?;
        pool.install(|| tasks.par_iter().map(|&(i, r)| run_repetition(spec, opts, i, r)).collect::<Result<_>>())?
    };
    let rows = spec
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let reps: Vec<&Repetition> = results.iter().filter(|r| r.row == i).collect();
            summarize(*row, &reps, opts.verify)
        })
        .collect();
    Ok(RunReport { rows })
}
