//! The six step detection pipelines.
//!
//! * no fusion: one wrist only;
//! * low-level fusion: per-wrist smoothed magnitudes are summed or
//!   differenced (absolute value), smoothed again, then peak-detected;
//! * high-level fusion: each wrist is peak-detected on its own and the two
//!   peak sets are intersected or united.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::peaks::detect_peaks;
use crate::preprocess::{fit_normalization, magnitude, min_max_normalize, moving_average, NormalizationContext};
use crate::types::{AlgorithmId, DetectorParams, PeakSet, Recording, ScalarSeries, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowLevelMode {
    Sum,
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HighLevelMode {
    Intersect,
    Union,
}

/// Detected steps; every peak is one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDetection {
    pub algorithm: AlgorithmId,
    pub steps: PeakSet,
    pub count: usize,
}

impl StepDetection {
    fn new(algorithm: AlgorithmId, steps: PeakSet) -> Self {
        let count = steps.len();
        Self {
            algorithm,
            steps,
            count,
        }
    }
}

/// Normalization contexts fitted once over an evaluation corpus, one per
/// signal family. Each is fitted on unsmoothed signals; a moving average
/// never leaves the range of its input, so smoothed signals of the fitting
/// corpus still normalize into [0, 1] for every window choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusNormalization {
    /// Wrist magnitudes, both sides pooled.
    pub single: NormalizationContext,
    /// `N_R + N_L`.
    pub sum: NormalizationContext,
    /// `|N_R - N_L|`.
    pub diff: NormalizationContext,
}

impl CorpusNormalization {
    pub fn fit(recordings: &[Recording]) -> Result<Self> {
        if recordings.is_empty() {
            return Err(Error::Empty("normalization corpus"));
        }
        let mut singles = Vec::with_capacity(recordings.len() * 2);
        let mut sums = Vec::with_capacity(recordings.len());
        let mut diffs = Vec::with_capacity(recordings.len());
        for rec in recordings {
            let left = magnitude(&rec.left);
            let right = magnitude(&rec.right);
            sums.push(combine(&left, &right, LowLevelMode::Sum)?);
            diffs.push(combine(&left, &right, LowLevelMode::Diff)?);
            singles.push(left);
            singles.push(right);
        }
        Ok(Self {
            single: fit_normalization(&singles)?,
            sum: fit_normalization(&sums)?,
            diff: fit_normalization(&diffs)?,
        })
    }

    pub fn for_algorithm(&self, alg: AlgorithmId) -> &NormalizationContext {
        match alg {
            AlgorithmId::LowLevelSum => &self.sum,
            AlgorithmId::LowLevelDiff => &self.diff,
            _ => &self.single,
        }
    }
}

/// Pointwise sum or absolute difference of two aligned signals.
pub(crate) fn combine(left: &ScalarSeries, right: &ScalarSeries, mode: LowLevelMode) -> Result<ScalarSeries> {
    if left.len() != right.len() {
        return Err(Error::LengthMismatch {
            what: "left vs right samples",
            left: left.len(),
            right: right.len(),
        });
    }
    let values = left
        .values()
        .iter()
        .zip(right.values())
        .map(|(l, r)| match mode {
            LowLevelMode::Sum => r + l,
            LowLevelMode::Diff => (r - l).abs(),
        })
        .collect();
    Ok(left.with_values(values))
}

/// Smoothed magnitude of one wrist (`N_L` or `N_R`), not yet normalized.
pub fn smoothed_magnitude(rec: &Recording, side: Side, window: f64) -> Result<ScalarSeries> {
    moving_average(&magnitude(rec.sensor(side)), window)
}

/// Normalized smoothed magnitude and its detected peaks for one wrist.
fn side_peaks(
    rec: &Recording,
    side: Side,
    params: &DetectorParams,
    ctx: &NormalizationContext,
) -> Result<PeakSet> {
    let smoothed = smoothed_magnitude(rec, side, params.smooth_single)?;
    let normalized = min_max_normalize(&smoothed, ctx)?;
    detect_peaks(&normalized, params.min_peak_amp, params.min_peak_gap)
}

/// No-fusion pipeline on one wrist.
pub fn detect_single_side(
    rec: &Recording,
    side: Side,
    params: &DetectorParams,
    ctx: &NormalizationContext,
) -> Result<StepDetection> {
    let alg = match side {
        Side::Left => AlgorithmId::NoFusionLeft,
        Side::Right => AlgorithmId::NoFusionRight,
    };
    params.validate_for(alg)?;
    Ok(StepDetection::new(alg, side_peaks(rec, side, params, ctx)?))
}

/// Low-level fused signal `MA(N_R + N_L)` or `MA(|N_R - N_L|)`, before normalization.
pub fn fused_signal(rec: &Recording, mode: LowLevelMode, smooth_single: f64, smooth_fused: f64) -> Result<ScalarSeries> {
    let left = smoothed_magnitude(rec, Side::Left, smooth_single)?;
    let right = smoothed_magnitude(rec, Side::Right, smooth_single)?;
    moving_average(&combine(&left, &right, mode)?, smooth_fused)
}

/// Low-level fusion pipeline. `ctx` must be fitted on fused signals of the
/// same mode (see [`CorpusNormalization`]).
pub fn fuse_low_level(
    rec: &Recording,
    mode: LowLevelMode,
    params: &DetectorParams,
    ctx: &NormalizationContext,
) -> Result<StepDetection> {
    let alg = match mode {
        LowLevelMode::Sum => AlgorithmId::LowLevelSum,
        LowLevelMode::Diff => AlgorithmId::LowLevelDiff,
    };
    params.validate_for(alg)?;
    let smooth_fused = params.smooth_fused.unwrap_or_default();
    let fused = fused_signal(rec, mode, params.smooth_single, smooth_fused)?;
    let normalized = min_max_normalize(&fused, ctx)?;
    let steps = detect_peaks(&normalized, params.min_peak_amp, params.min_peak_gap)?;
    Ok(StepDetection::new(alg, steps))
}

/// Index of the element of sorted `times` nearest to `t`; ties go to the earlier element.
fn nearest(times: &[f64], t: f64) -> Option<usize> {
    if times.is_empty() {
        return None;
    }
    let pos = times.partition_point(|&x| x < t);
    let before = pos.checked_sub(1);
    let after = (pos < times.len()).then_some(pos);
    match (before, after) {
        (Some(b), Some(a)) => {
            if (t - times[b]).abs() <= (times[a] - t).abs() {
                Some(b)
            } else {
                Some(a)
            }
        }
        (Some(b), None) => Some(b),
        (None, a) => a,
    }
}

/// Intersection of left and right peak events.
///
/// A left peak `t_l` pairs with its nearest right peak `t_r` when they are at
/// most `max_dist` apart and `t_l` is strictly the nearest left peak to
/// `t_r`. Each pair emits whichever time has the larger amplitude (right on
/// ties).
pub fn intersect_fuse(left: &PeakSet, right: &PeakSet, max_dist: f64) -> PeakSet {
    let (lt, la) = (left.times(), left.amplitudes());
    let (rt, ra) = (right.times(), right.amplitudes());
    let mut events = Vec::new();
    for (li, &t_l) in lt.iter().enumerate() {
        let Some(ri) = nearest(rt, t_l) else { break };
        let t_r = rt[ri];
        let d = (t_l - t_r).abs();
        if d > max_dist {
            continue;
        }
        // neighbours of t_l are the closest competitors for t_r
        let mutual = [li.checked_sub(1), Some(li + 1)]
            .into_iter()
            .flatten()
            .filter(|&k| k < lt.len())
            .all(|k| d < (lt[k] - t_r).abs());
        if mutual {
            events.push(if la[li] > ra[ri] { (t_l, la[li]) } else { (t_r, ra[ri]) });
        }
    }
    PeakSet::from_events(events)
}

/// Union of left and right peak events: repeatedly keep the highest pooled
/// peak (right sensor on ties, then earlier) and drop every pooled peak
/// within `min_dist` of it, inclusive.
pub fn union_fuse(left: &PeakSet, right: &PeakSet, min_dist: f64) -> PeakSet {
    union_select(&union_pool(left, right), min_dist)
}

/// Pooled peaks as `(amplitude, is_left, time)`, greedy winner first.
pub(crate) fn union_pool(left: &PeakSet, right: &PeakSet) -> Vec<(f64, bool, f64)> {
    let mut pool: Vec<(f64, bool, f64)> = right
        .iter()
        .map(|(t, a)| (a, false, t))
        .chain(left.iter().map(|(t, a)| (a, true, t)))
        .collect();
    pool.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
    });
    pool
}

pub(crate) fn union_select(pool: &[(f64, bool, f64)], min_dist: f64) -> PeakSet {
    let mut kept: Vec<(f64, f64)> = Vec::new();
    let mut kept_times: Vec<f64> = Vec::new();
    for &(amp, _, t) in pool {
        let pos = kept_times.partition_point(|&x| x < t);
        let blocked = [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&k| k < kept_times.len())
            .any(|k| (kept_times[k] - t).abs() <= min_dist);
        if !blocked {
            kept_times.insert(pos, t);
            kept.push((t, amp));
        }
    }
    PeakSet::from_events(kept)
}

/// High-level fusion pipeline: both wrists share one smoothing window and
/// peak parameter pair, then their peaks are intersected or united.
pub fn detect_high_level(
    rec: &Recording,
    mode: HighLevelMode,
    params: &DetectorParams,
    ctx: &NormalizationContext,
) -> Result<StepDetection> {
    let alg = match mode {
        HighLevelMode::Intersect => AlgorithmId::HighLevelIntersect,
        HighLevelMode::Union => AlgorithmId::HighLevelUnion,
    };
    params.validate_for(alg)?;
    let left = side_peaks(rec, Side::Left, params, ctx)?;
    let right = side_peaks(rec, Side::Right, params, ctx)?;
    let steps = match mode {
        HighLevelMode::Intersect => intersect_fuse(&left, &right, params.fuse_max_dist.unwrap_or_default()),
        HighLevelMode::Union => union_fuse(&left, &right, params.fuse_min_dist.unwrap_or_default()),
    };
    Ok(StepDetection::new(alg, steps))
}

/// Runs the pipeline named by `alg` with the matching normalization context.
pub fn run_detector(
    alg: AlgorithmId,
    rec: &Recording,
    params: &DetectorParams,
    norm: &CorpusNormalization,
) -> Result<StepDetection> {
    params.validate_for(alg)?;
    let ctx = norm.for_algorithm(alg);
    match alg {
        AlgorithmId::NoFusionLeft => detect_single_side(rec, Side::Left, params, ctx),
        AlgorithmId::NoFusionRight => detect_single_side(rec, Side::Right, params, ctx),
        AlgorithmId::LowLevelSum => fuse_low_level(rec, LowLevelMode::Sum, params, ctx),
        AlgorithmId::LowLevelDiff => fuse_low_level(rec, LowLevelMode::Diff, params, ctx),
        AlgorithmId::HighLevelIntersect => detect_high_level(rec, HighLevelMode::Intersect, params, ctx),
        AlgorithmId::HighLevelUnion => detect_high_level(rec, HighLevelMode::Union, params, ctx),
    }
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Literal re-executions of the fusion rules, quadratic and unoptimized.

    use crate::types::PeakSet;

    pub fn intersect(left: &PeakSet, right: &PeakSet, max_dist: f64) -> Vec<f64> {
        let (lt, la) = (left.times(), left.amplitudes());
        let (rt, ra) = (right.times(), right.amplitudes());
        let mut out: Vec<f64> = Vec::new();
        for (i, &t_l) in lt.iter().enumerate() {
            if !rt.iter().any(|&t| (t_l - t).abs() <= max_dist) {
                continue;
            }
            // argmin over T_R, first minimizer wins
            let mut r = 0;
            for j in 1..rt.len() {
                if (t_l - rt[j]).abs() < (t_l - rt[r]).abs() {
                    r = j;
                }
            }
            let t_r = rt[r];
            let strictly_nearest = lt
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .all(|(_, &t)| (t_l - t_r).abs() < (t - t_r).abs());
            if strictly_nearest {
                let t = if la[i] > ra[r] { t_l } else { t_r };
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn union(left: &PeakSet, right: &PeakSet, min_dist: f64) -> Vec<f64> {
        // S holds (time, amplitude, from_right)
        let mut s: Vec<(f64, f64, bool)> = right
            .iter()
            .map(|(t, a)| (t, a, true))
            .chain(left.iter().map(|(t, a)| (t, a, false)))
            .collect();
        let mut out = Vec::new();
        while !s.is_empty() {
            let mut best = 0;
            for k in 1..s.len() {
                let (t, a, r) = s[k];
                let (bt, ba, br) = s[best];
                let better = a > ba || (a == ba && ((r && !br) || (r == br && t < bt)));
                if better {
                    best = k;
                }
            }
            let t_i = s[best].0;
            out.push(t_i);
            s.retain(|&(t, _, _)| (t - t_i).abs() > min_dist);
        }
        out.sort_by(f64::total_cmp);
        out
    }
}
