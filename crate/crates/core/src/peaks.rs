//! First-order-difference peak detection with an amplitude floor and a
//! minimum inter-peak window.
//!
//! A sample is a candidate when the signal rises into it and the next sample
//! with a different value is lower. Plateaus are anchored at their first
//! sample and the series endpoints are never peaks. Thinning keeps the
//! highest peak of every cluster closer than the minimum gap, greedily in
//! descending amplitude order with ties going to the earlier sample.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::{window_samples, PeakSet, ScalarSeries};

/// Indices of local maxima of `values`.
pub(crate) fn local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // walk to the end of a plateau
            let mut j = i + 1;
            while j < n && values[j] == values[i] {
                j += 1;
            }
            if j < n && values[j] < values[i] {
                out.push(i);
            }
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// Candidate indices sorted by amplitude (descending), ties by index.
pub(crate) fn amplitude_order(values: &[f64], candidates: &[usize]) -> Vec<usize> {
    let mut order = candidates.to_vec();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Greedily accepts indices in the given order, skipping any within
/// `gap_samples` of an already accepted one. Returns accepted indices in
/// acceptance order.
pub(crate) fn greedy_select(order: &[usize], gap_samples: usize) -> Vec<usize> {
    let mut accepted = BTreeSet::new();
    let mut out = Vec::new();
    for &idx in order {
        let lo = idx.saturating_sub(gap_samples);
        if accepted.range(lo..=idx + gap_samples).next().is_none() {
            accepted.insert(idx);
            out.push(idx);
        }
    }
    out
}

pub(crate) fn peak_set_from_indices(series: &ScalarSeries, mut indices: Vec<usize>) -> PeakSet {
    indices.sort_unstable();
    let values = series.values();
    let times = indices.iter().map(|&i| series.time_at(i)).collect();
    let amplitudes = indices.iter().map(|&i| values[i]).collect();
    PeakSet::new(times, amplitudes).expect("sorted distinct indices yield increasing times")
}

/// Every local maximum of the series.
pub fn candidate_peaks(series: &ScalarSeries) -> Result<PeakSet> {
    if series.len() < 3 {
        return Err(Error::SeriesTooShort { len: series.len() });
    }
    Ok(peak_set_from_indices(series, local_maxima(series.values())))
}

/// Candidate peaks of amplitude at least `min_amp`, thinned so survivors are
/// more than `min_gap` seconds (`round(min_gap * rate)` samples) apart.
pub fn detect_peaks(series: &ScalarSeries, min_amp: f64, min_gap: f64) -> Result<PeakSet> {
    if series.len() < 3 {
        return Err(Error::SeriesTooShort { len: series.len() });
    }
    if !(min_gap.is_finite() && min_gap >= 0.0) {
        return Err(Error::param("min_peak_gap", format!("must be >= 0, got {min_gap}")));
    }
    if min_amp.is_nan() {
        return Err(Error::param("min_peak_amp", "must not be NaN"));
    }
    let values = series.values();
    let candidates: Vec<usize> = local_maxima(values)
        .into_iter()
        .filter(|&i| values[i] >= min_amp)
        .collect();
    let order = amplitude_order(values, &candidates);
    let kept = greedy_select(&order, window_samples(min_gap, series.rate()));
    Ok(peak_set_from_indices(series, kept))
}
