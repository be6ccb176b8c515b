//! Magnitude, centered moving average, and corpus-level min-max normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{window_samples, ScalarSeries, TriaxialSeries};

/// Global extrema of a corpus of signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalizationContext {
    pub global_min: f64,
    pub global_max: f64,
}

impl NormalizationContext {
    pub fn new(global_min: f64, global_max: f64) -> Result<Self> {
        if !(global_min.is_finite() && global_max.is_finite()) || global_max < global_min {
            return Err(Error::param(
                "normalization",
                format!("need finite min <= max, got ({global_min}, {global_max})"),
            ));
        }
        Ok(Self {
            global_min,
            global_max,
        })
    }

    pub fn span(&self) -> f64 {
        self.global_max - self.global_min
    }

    /// Maps a normalized value back to signal units.
    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.span() + self.global_min
    }
}

/// Euclidean norm of the three axes at every sample.
pub fn magnitude(series: &TriaxialSeries) -> ScalarSeries {
    let values = series
        .x()
        .iter()
        .zip(series.y())
        .zip(series.z())
        .map(|((x, y), z)| (x * x + y * y + z * z).sqrt())
        .collect::<Vec<_>>();
    ScalarSeries::new(series.rate(), series.t0(), values)
        .expect("norm of a valid triaxial series is a valid scalar series")
}

/// Odd sample width of a centered window of `window` seconds.
pub fn centered_width(window: f64, rate: f64) -> usize {
    let w = window_samples(window, rate);
    if w.is_multiple_of(2) {
        w + 1
    } else {
        w
    }
}

/// Centered moving average. Windows shrink at the edges to the samples
/// available; a width of one sample or less returns the input unchanged.
pub fn moving_average(series: &ScalarSeries, window: f64) -> Result<ScalarSeries> {
    if !(window.is_finite() && window >= 0.0) {
        return Err(Error::param("window", format!("must be >= 0, got {window}")));
    }
    let width = centered_width(window, series.rate());
    if width <= 1 {
        return Ok(series.clone());
    }
    Ok(series.with_values(centered_mean(series.values(), width / 2)))
}

pub(crate) fn centered_mean(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let window = &values[lo..=hi];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Global min and max over every value of every series.
pub fn fit_normalization<'a, I>(signals: I) -> Result<NormalizationContext>
where
    I: IntoIterator<Item = &'a ScalarSeries>,
{
    let mut extrema: Option<(f64, f64)> = None;
    for s in signals {
        for &v in s.values() {
            extrema = Some(match extrema {
                None => (v, v),
                Some((lo, hi)) => (lo.min(v), hi.max(v)),
            });
        }
    }
    let (lo, hi) = extrema.ok_or(Error::Empty("normalization corpus"))?;
    NormalizationContext::new(lo, hi)
}

/// `(v - min) / (max - min)`; values outside the fitted range are not clamped.
pub fn min_max_normalize(series: &ScalarSeries, ctx: &NormalizationContext) -> Result<ScalarSeries> {
    let span = ctx.span();
    if span <= 0.0 {
        return Err(Error::DegenerateNormalization(ctx.global_min));
    }
    let values = series
        .values()
        .iter()
        .map(|v| (v - ctx.global_min) / span)
        .collect();
    Ok(series.with_values(values))
}
