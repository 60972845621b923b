//! Minimum error rate training of the log-linear weights against corpus
//! BLEU-4, by coordinate ascent with an exact line search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decoder::{combined_score, NBestList, WeightVector};
use crate::error::{Error, Result};
use crate::evaluator::BleuStats;
use crate::Tokens;

pub const DEFAULT_RESTARTS: usize = 8;
pub const DEFAULT_OUTER_ITERATIONS: usize = 20;
/// How far past the outermost threshold an unbounded interval reaches.
pub const OPEN_INTERVAL_REACH: f64 = 10.0;

const IMPROVEMENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TuningCandidate {
    pub tokens: Tokens,
    pub components: [f64; 4],
    pub stats: BleuStats,
}

/// One dev sentence: its reference and the decoder's candidates for it.
#[derive(Debug, Clone, PartialEq)]
pub struct TuningInstance {
    pub reference: Tokens,
    pub candidates: Vec<TuningCandidate>,
}

impl TuningInstance {
    /// Candidates with a non-finite component are dropped; at least one must remain.
    pub fn new(reference: Tokens, candidates: impl IntoIterator<Item = (Tokens, [f64; 4])>) -> Result<Self> {
        let candidates: Vec<TuningCandidate> = candidates
            .into_iter()
            .filter(|(_, c)| c.iter().all(|v| v.is_finite()))
            .map(|(tokens, components)| TuningCandidate {
                stats: BleuStats::sentence(&tokens, &reference),
                tokens,
                components,
            })
            .collect();
        if candidates.is_empty() {
            return Err(Error::Data("tuning sentence without a usable candidate".into()));
        }
        Ok(TuningInstance { reference, candidates })
    }

    pub fn from_nbest(reference: Tokens, nbest: &NBestList) -> Result<Self> {
        Self::new(
            reference,
            nbest.candidates.iter().map(|c| (c.tokens.clone(), c.components)),
        )
    }

    /// Index of the top candidate; ties go to the smaller token sequence.
    pub fn top(&self, weights: &WeightVector) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, c) in self.candidates.iter().enumerate() {
            let s = combined_score(&c.components, weights);
            let wins = s > best_score || (s == best_score && c.tokens < self.candidates[best].tokens);
            if i == 0 || wins {
                best = i;
                best_score = s;
            }
        }
        best
    }
}

fn top_stats(instances: &[TuningInstance], weights: &WeightVector) -> BleuStats {
    instances
        .iter()
        .map(|inst| inst.candidates[inst.top(weights)].stats)
        .fold(BleuStats::default(), |a, b| a + b)
}

/// Corpus BLEU-4 of the top-1 candidates under `weights`.
pub fn dev_bleu(instances: &[TuningInstance], weights: &WeightVector) -> f64 {
    top_stats(instances, weights).bleu(4)
}

/// Picks a coordinate value from the intervals cut by `thresholds`.
///
/// There are `thresholds.len() + 1` intervals; the value is the midpoint of
/// the one with the highest BLEU, ties going to the smaller value. The two
/// unbounded ends reach [`OPEN_INTERVAL_REACH`] past the outermost threshold.
pub fn select_by_interval(thresholds: &[f64], bleu_per_interval: &[f64]) -> f64 {
    assert_eq!(bleu_per_interval.len(), thresholds.len() + 1);
    let mut best = 0;
    for (i, b) in bleu_per_interval.iter().enumerate() {
        if *b > bleu_per_interval[best] {
            best = i;
        }
    }
    let n = thresholds.len();
    if n == 0 {
        return 0.0;
    }
    let lo = if best == 0 {
        thresholds[0] - OPEN_INTERVAL_REACH
    } else {
        thresholds[best - 1]
    };
    let hi = if best == n {
        thresholds[n - 1] + OPEN_INTERVAL_REACH
    } else {
        thresholds[best]
    };
    (lo + hi) / 2.0
}

struct Line {
    slope: f64,
    intercept: f64,
    cand: usize,
    start: f64,
}

/// The candidate that wins on each stretch of the coordinate axis, as
/// (start of stretch, candidate index), starting at −∞.
fn upper_envelope(inst: &TuningInstance, weights: &WeightVector, coord: usize) -> Vec<(f64, usize)> {
    let mut w = weights.to_array();
    w[coord] = 0.0;
    let fixed = WeightVector::new(w);
    let mut lines: Vec<Line> = inst
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| Line {
            slope: c.components[coord],
            intercept: combined_score(&c.components, &fixed),
            cand: i,
            start: f64::NEG_INFINITY,
        })
        .collect();
    lines.sort_by(|a, b| {
        a.slope
            .total_cmp(&b.slope)
            .then(b.intercept.total_cmp(&a.intercept))
            .then_with(|| inst.candidates[a.cand].tokens.cmp(&inst.candidates[b.cand].tokens))
    });
    // parallel lines: only the highest (then lexically first) can ever win
    lines.dedup_by(|later, earlier| later.slope == earlier.slope);

    let mut hull: Vec<Line> = Vec::with_capacity(lines.len());
    for mut line in lines {
        while let Some(last) = hull.last() {
            let x = (last.intercept - line.intercept) / (line.slope - last.slope);
            if x <= last.start {
                hull.pop();
            } else {
                line.start = x;
                break;
            }
        }
        if hull.is_empty() {
            line.start = f64::NEG_INFINITY;
        }
        hull.push(line);
    }
    hull.into_iter().map(|l| (l.start, l.cand)).collect()
}

/// Exact search over one coordinate with the others held fixed. Returns the
/// chosen value and the corpus BLEU-4 it gives.
pub fn line_search(instances: &[TuningInstance], weights: &WeightVector, coord: usize) -> (f64, f64) {
    let mut stats = BleuStats::default();
    let mut events: Vec<(f64, BleuStats, BleuStats)> = Vec::new();
    for inst in instances {
        let env = upper_envelope(inst, weights, coord);
        stats += inst.candidates[env[0].1].stats;
        for pair in env.windows(2) {
            let old = inst.candidates[pair[0].1].stats;
            let new = inst.candidates[pair[1].1].stats;
            events.push((pair[1].0, old, new));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut thresholds = Vec::new();
    let mut bleus = vec![stats.bleu(4)];
    let mut i = 0;
    while i < events.len() {
        let x = events[i].0;
        while i < events.len() && events[i].0 == x {
            stats = stats - events[i].1;
            stats += events[i].2;
            i += 1;
        }
        thresholds.push(x);
        bleus.push(stats.bleu(4));
    }
    let value = select_by_interval(&thresholds, &bleus);
    let best = bleus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (value, best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MertResult {
    pub weights: WeightVector,
    pub bleu: f64,
    /// Dev BLEU-4 at the start and after each outer iteration.
    pub history: Vec<f64>,
}

/// Coordinate ascent from one starting point.
pub fn coordinate_ascent(instances: &[TuningInstance], init: WeightVector, max_outer_iterations: usize) -> MertResult {
    let mut weights = init;
    let mut current = dev_bleu(instances, &weights);
    let mut history = vec![current];
    for _ in 0..max_outer_iterations {
        let mut moved = false;
        for coord in 0..4 {
            let (value, best) = line_search(instances, &weights, coord);
            if best > current + IMPROVEMENT_EPS {
                let mut w = weights.to_array();
                w[coord] = value;
                weights = WeightVector::new(w);
                current = dev_bleu(instances, &weights);
                moved = true;
            }
        }
        debug_assert!(current >= *history.last().unwrap());
        history.push(current);
        if !moved {
            break;
        }
    }
    MertResult {
        weights,
        bleu: current,
        history,
    }
}

fn restart_point(seed: u64, restart: usize, init: WeightVector) -> WeightVector {
    if restart == 0 {
        return init;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    WeightVector::new(std::array::from_fn(|_| rng.random_range(-1.0..=1.0)))
}

/// Tunes the weights with `restarts` starting points: `init` first, then
/// seeded random points in [−1, 1]⁴. The best result wins; ties go to the
/// earlier restart, so `init` survives when nothing beats it.
pub fn mert(
    instances: &[TuningInstance],
    init: WeightVector,
    max_outer_iterations: usize,
    restarts: usize,
    seed: u64,
) -> Result<MertResult> {
    if instances.is_empty() {
        return Err(Error::Data("MERT needs at least one tuning sentence".into()));
    }
    let runs: Vec<MertResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| coordinate_ascent(instances, restart_point(seed, r, init), max_outer_iterations))
        .collect();
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.bleu > runs[best].bleu {
            best = i;
        }
    }
    Ok(runs.into_iter().nth(best).unwrap())
}
