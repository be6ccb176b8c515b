//! Domain types shared by every pipeline stage.
//!
//! All series carry their own time base (`rate`, `t0`); sample `i` sits at
//! `t0 + i / rate` seconds. Window parameters are expressed in seconds and
//! converted to samples with [`window_samples`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Converts a window length in seconds to a sample count, `round(w * rate)`.
pub fn window_samples(window: f64, rate: f64) -> usize {
    (window * rate).round().max(0.0) as usize
}

fn check_rate(rate: f64) -> Result<()> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidSeries(format!("rate must be positive, got {rate}")))
    }
}

/// Uniformly sampled three-axis accelerometer trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TriaxialSeries {
    rate: f64,
    t0: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl TriaxialSeries {
    pub fn new(rate: f64, t0: f64, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        check_rate(rate)?;
        if !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("t0 must be finite, got {t0}")));
        }
        if x.is_empty() {
            return Err(Error::InvalidSeries("triaxial series is empty".into()));
        }
        if x.len() != y.len() || x.len() != z.len() {
            return Err(Error::InvalidSeries(format!(
                "axis lengths differ: x={}, y={}, z={}",
                x.len(),
                y.len(),
                z.len()
            )));
        }
        Ok(Self { rate, t0, x, y, z })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.rate
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.len() - 1)
    }

    /// Same samples, different start offset.
    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }
}

/// One-dimensional signal sharing the recording time base.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSeries {
    rate: f64,
    t0: f64,
    values: Vec<f64>,
}

impl ScalarSeries {
    pub fn new(rate: f64, t0: f64, values: Vec<f64>) -> Result<Self> {
        check_rate(rate)?;
        if !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("t0 must be finite, got {t0}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("scalar series is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite value {} at index {i}",
                values[i]
            )));
        }
        Ok(Self { rate, t0, values })
    }

    /// Builds a series on the same time base as `self`. Values are assumed finite.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            rate: self.rate,
            t0: self.t0,
            values,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of sample `index`: `t0 + index / rate`.
    pub fn time_of(&self, index: usize) -> Result<f64> {
        if index >= self.values.len() {
            return Err(Error::IndexOutOfRange {
                index,
                len: self.values.len(),
            });
        }
        Ok(self.time_at(index))
    }

    pub(crate) fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 / self.rate
    }

    /// Nearest-sample inverse of [`ScalarSeries::time_of`], clamped to the series.
    pub fn index_of(&self, time: f64) -> usize {
        let i = ((time - self.t0) * self.rate).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.values.len() - 1)
        }
    }
}

/// Detected peak events: strictly increasing times with the source amplitude at each.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    times: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl PeakSet {
    pub fn new(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self> {
        if times.len() != amplitudes.len() {
            return Err(Error::LengthMismatch {
                what: "peak times vs amplitudes",
                left: times.len(),
                right: amplitudes.len(),
            });
        }
        if let Some(w) = times.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidSeries(format!(
                "peak times not strictly increasing at position {}",
                w + 1
            )));
        }
        Ok(Self { times, amplitudes })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a set from unordered `(time, amplitude)` events; duplicates of
    /// the same time keep the first occurrence.
    pub(crate) fn from_events(mut events: Vec<(f64, f64)>) -> Self {
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        events.dedup_by(|b, a| a.0 == b.0);
        let (times, amplitudes) = events.into_iter().unzip();
        Self { times, amplitudes }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.amplitudes.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskCategory {
    Unconstrained,
    ArmsConstrained,
    Asymmetrical,
}

impl TaskCategory {
    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::Unconstrained => "unconstrained",
            TaskCategory::ArmsConstrained => "arms_constrained",
            TaskCategory::Asymmetrical => "asymmetrical",
        }
    }
}

/// The eight walking tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkTask {
    SlowPace,
    ComfortablePace,
    FastPace,
    BagRightHand,
    PhoneTwoHands,
    NoArmSwing,
    NoRightShoe,
    CaneRightHand,
}

impl WalkTask {
    pub const ALL: [WalkTask; 8] = [
        WalkTask::SlowPace,
        WalkTask::ComfortablePace,
        WalkTask::FastPace,
        WalkTask::BagRightHand,
        WalkTask::PhoneTwoHands,
        WalkTask::NoArmSwing,
        WalkTask::NoRightShoe,
        WalkTask::CaneRightHand,
    ];

    pub fn category(self) -> TaskCategory {
        use WalkTask::*;
        match self {
            SlowPace | ComfortablePace | FastPace => TaskCategory::Unconstrained,
            BagRightHand | PhoneTwoHands | NoArmSwing => TaskCategory::ArmsConstrained,
            NoRightShoe | CaneRightHand => TaskCategory::Asymmetrical,
        }
    }

    pub fn name(self) -> &'static str {
        use WalkTask::*;
        match self {
            SlowPace => "slow_pace",
            ComfortablePace => "comfortable_pace",
            FastPace => "fast_pace",
            BagRightHand => "bag_right_hand",
            PhoneTwoHands => "phone_two_hands",
            NoArmSwing => "no_arm_swing",
            NoRightShoe => "no_right_shoe",
            CaneRightHand => "cane_right_hand",
        }
    }
}

impl fmt::Display for WalkTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WalkTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        WalkTask::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::param("task", format!("unknown walking task `{s}`")))
    }
}

/// The six step detection approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    #[serde(rename = "left")]
    NoFusionLeft,
    #[serde(rename = "right")]
    NoFusionRight,
    #[serde(rename = "sum")]
    LowLevelSum,
    #[serde(rename = "diff")]
    LowLevelDiff,
    #[serde(rename = "intersect")]
    HighLevelIntersect,
    #[serde(rename = "union")]
    HighLevelUnion,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::NoFusionLeft,
        AlgorithmId::NoFusionRight,
        AlgorithmId::LowLevelSum,
        AlgorithmId::LowLevelDiff,
        AlgorithmId::HighLevelIntersect,
        AlgorithmId::HighLevelUnion,
    ];

    /// Short name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        use AlgorithmId::*;
        match self {
            NoFusionLeft => "left",
            NoFusionRight => "right",
            LowLevelSum => "sum",
            LowLevelDiff => "diff",
            HighLevelIntersect => "intersect",
            HighLevelUnion => "union",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::param(
                    "algorithm",
                    format!("unknown algorithm `{s}` (expected left|right|sum|diff|intersect|union)"),
                )
            })
    }
}

/// Tunable parameters of a detection pipeline. Windows are in seconds;
/// `min_peak_amp` applies to the min-max normalized signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    pub smooth_single: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth_fused: Option<f64>,
    pub min_peak_amp: f64,
    pub min_peak_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuse_max_dist: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuse_min_dist: Option<f64>,
}

impl DetectorParams {
    /// Reference parameters; default grids are centered on them.
    pub fn reference(alg: AlgorithmId) -> Self {
        let base = |smooth_single, min_peak_amp, min_peak_gap| DetectorParams {
            smooth_single,
            smooth_fused: None,
            min_peak_amp,
            min_peak_gap,
            fuse_max_dist: None,
            fuse_min_dist: None,
        };
        match alg {
            AlgorithmId::NoFusionLeft => base(0.03, 0.27, 0.36),
            AlgorithmId::NoFusionRight => base(0.03, 0.36, 0.34),
            AlgorithmId::LowLevelSum => DetectorParams {
                smooth_fused: Some(0.08),
                ..base(0.18, 0.15, 0.23)
            },
            AlgorithmId::LowLevelDiff => DetectorParams {
                smooth_fused: Some(0.02),
                ..base(0.02, 0.08, 0.40)
            },
            AlgorithmId::HighLevelIntersect => DetectorParams {
                fuse_max_dist: Some(0.32),
                ..base(0.02, 0.24, 0.34)
            },
            AlgorithmId::HighLevelUnion => DetectorParams {
                fuse_min_dist: Some(0.29),
                ..base(0.40, 0.06, 0.32)
            },
        }
    }

    /// Checks ranges and that every field `alg` needs is present.
    pub fn validate_for(&self, alg: AlgorithmId) -> Result<()> {
        let non_negative = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be a finite value >= 0, got {v}")))
            }
        };
        non_negative("smooth_single", self.smooth_single)?;
        non_negative("min_peak_gap", self.min_peak_gap)?;
        if !(0.0..=1.0).contains(&self.min_peak_amp) {
            return Err(Error::param(
                "min_peak_amp",
                format!("must lie in [0, 1], got {}", self.min_peak_amp),
            ));
        }
        let require = |field: &'static str, v: Option<f64>| {
            v.ok_or(Error::MissingParam {
                algorithm: alg,
                field,
            })
        };
        match alg {
            AlgorithmId::NoFusionLeft | AlgorithmId::NoFusionRight => {}
            AlgorithmId::LowLevelSum | AlgorithmId::LowLevelDiff => {
                non_negative("smooth_fused", require("smooth_fused", self.smooth_fused)?)?;
            }
            AlgorithmId::HighLevelIntersect => {
                let max_dist = require("fuse_max_dist", self.fuse_max_dist)?;
                non_negative("fuse_max_dist", max_dist)?;
                if max_dist > self.min_peak_gap {
                    return Err(Error::param(
                        "fuse_max_dist",
                        format!(
                            "{max_dist} exceeds min_peak_gap {}; the intersection window is bounded by the peak gap",
                            self.min_peak_gap
                        ),
                    ));
                }
            }
            AlgorithmId::HighLevelUnion => {
                non_negative("fuse_min_dist", require("fuse_min_dist", self.fuse_min_dist)?)?;
            }
        }
        Ok(())
    }
}

/// Labeled gait events for one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruth {
    pub step_times: Vec<f64>,
    pub heel_strikes_left: Vec<f64>,
    pub heel_strikes_right: Vec<f64>,
    pub toe_offs_left: Vec<f64>,
    pub toe_offs_right: Vec<f64>,
    pub label_count: usize,
}

impl GroundTruth {
    pub fn validate(&self) -> Result<()> {
        let increasing = |name: &str, v: &[f64]| {
            if v.iter().any(|t| !t.is_finite()) {
                return Err(Error::InvalidGroundTruth(format!("{name} contains non-finite times")));
            }
            match v.windows(2).position(|w| !(w[0] < w[1])) {
                Some(i) => Err(Error::InvalidGroundTruth(format!(
                    "{name} not strictly increasing at position {}",
                    i + 1
                ))),
                None => Ok(()),
            }
        };
        increasing("step_times", &self.step_times)?;
        increasing("heel_strikes_left", &self.heel_strikes_left)?;
        increasing("heel_strikes_right", &self.heel_strikes_right)?;
        increasing("toe_offs_left", &self.toe_offs_left)?;
        increasing("toe_offs_right", &self.toe_offs_right)?;

        if self.label_count != self.step_times.len() {
            return Err(Error::InvalidGroundTruth(format!(
                "label_count {} != number of step times {}",
                self.label_count,
                self.step_times.len()
            )));
        }
        for (side, hs, to) in [
            ("left", &self.heel_strikes_left, &self.toe_offs_left),
            ("right", &self.heel_strikes_right, &self.toe_offs_right),
        ] {
            if hs.len() != to.len() {
                return Err(Error::InvalidGroundTruth(format!(
                    "{side}: {} heel strikes but {} toe-offs",
                    hs.len(),
                    to.len()
                )));
            }
            if let Some(i) = hs.iter().zip(to).position(|(h, t)| !(t > h)) {
                return Err(Error::InvalidGroundTruth(format!(
                    "{side} step {i}: toe-off {} not after heel strike {}",
                    to[i], hs[i]
                )));
            }
        }
        let events = self.heel_strikes_left.len() + self.heel_strikes_right.len();
        if events != self.label_count {
            return Err(Error::InvalidGroundTruth(format!(
                "{events} heel strikes for {} labeled steps",
                self.label_count
            )));
        }
        Ok(())
    }

    /// Toe-off times of both feet, merged in time order.
    pub fn toe_offs(&self) -> Vec<f64> {
        merge_sorted(&self.toe_offs_left, &self.toe_offs_right)
    }

    /// Heel strike times of both feet, merged in time order.
    pub fn heel_strikes(&self) -> Vec<f64> {
        merge_sorted(&self.heel_strikes_left, &self.heel_strikes_right)
    }
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = a.iter().chain(b).copied().collect();
    out.sort_by(f64::total_cmp);
    out
}

/// One walking trial recorded by both wrist sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub subject_id: String,
    pub task: WalkTask,
    pub left: TriaxialSeries,
    pub right: TriaxialSeries,
    pub duration: f64,
    pub ground_truth: Option<GroundTruth>,
    pub self_count: Option<u32>,
}

impl Recording {
    /// Validates sensor synchrony and ground truth before returning the recording.
    pub fn new(
        id: impl Into<String>,
        subject_id: impl Into<String>,
        task: WalkTask,
        left: TriaxialSeries,
        right: TriaxialSeries,
        duration: f64,
        ground_truth: Option<GroundTruth>,
        self_count: Option<u32>,
    ) -> Result<Self> {
        let rec = Self {
            id: id.into(),
            subject_id: subject_id.into(),
            task,
            left,
            right,
            duration,
            ground_truth,
            self_count,
        };
        rec.validate()?;
        Ok(rec)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecording {
            id: self.id.clone(),
            reason,
        };
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(fail(format!("duration must be positive, got {}", self.duration)));
        }
        if self.left.rate() != self.right.rate() {
            return Err(fail(format!(
                "sample rates differ: left {} Hz, right {} Hz",
                self.left.rate(),
                self.right.rate()
            )));
        }
        let period = 1.0 / self.left.rate();
        if (self.left.t0() - self.right.t0()).abs() >= period {
            return Err(fail(format!(
                "start offsets differ by more than one sample: {} vs {}",
                self.left.t0(),
                self.right.t0()
            )));
        }
        if (self.left.end_time() - self.right.end_time()).abs() > period * (1.0 + 1e-9) {
            return Err(fail(format!(
                "sensors cover different spans: left ends at {}, right at {}",
                self.left.end_time(),
                self.right.end_time()
            )));
        }
        if let Some(gt) = &self.ground_truth {
            gt.validate().map_err(|e| fail(e.to_string()))?;
        }
        Ok(())
    }

    pub fn sensor(&self, side: Side) -> &TriaxialSeries {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    pub fn rate(&self) -> f64 {
        self.left.rate()
    }

    pub fn label_count(&self) -> Option<usize> {
        self.ground_truth.as_ref().map(|gt| gt.label_count)
    }
}
