//! Synthetic dual-wrist walking recordings with exact gait event labels.
//!
//! Model, per wrist:
//!
//! * gravity `baseline` on the z axis;
//! * arm swing `A sin(phase)` on the x axis at stride frequency, anti-phase
//!   between wrists. The phase is warped so every toe-off lands on a swing
//!   extreme, which puts a magnitude bump at every step. Each half stride
//!   gets its own amplitude gain, drawn independently per wrist;
//! * a Gaussian impact bump on z, centered on each toe-off of the opposite
//!   foot, plus a copy scaled by `ipsilateral_impact` at each toe-off of the
//!   same-side foot (shock reaching the wrist through the trunk);
//! * for the cane task, an extra right-wrist impact at every left heel strike;
//! * when both hands hold one object, a single shared waveform swinging in
//!   phase on both wrists;
//! * white Gaussian noise on every axis.
//!
//! All waveform constants are simulator choices, not measured physiology.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GroundTruth, Recording, Side, TriaxialSeries, WalkTask};

/// Mean cadence of comfortable walking, steps per second.
pub const COMFORTABLE_CADENCE: f64 = 1.7;
/// Steps per walk; task durations are derived from it.
pub const STEPS_PER_WALK: f64 = 104.4;
pub const SAMPLE_RATE: f64 = 128.0;

const SWING_AMP: f64 = 0.6;
const IMPACT_AMP: f64 = 0.25;
const CONSTRAINED_SWING: f64 = 0.05;
const IPSILATERAL_IMPACT: f64 = 0.8;
const SWING_VARIABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitModelParams {
    /// Steps per second.
    pub cadence: f64,
    pub duration: f64,
    pub swing_amp_left: f64,
    pub swing_amp_right: f64,
    pub impact_amp_left: f64,
    pub impact_amp_right: f64,
    /// Standard deviation of the Gaussian impact bump, seconds.
    pub impact_width: f64,
    pub toe_off_lag: f64,
    pub heel_strike_lead: f64,
    pub step_time_asymmetry: f64,
    pub noise_std: f64,
    pub rate: f64,
    pub baseline: f64,
    /// Right-wrist impact at each left heel strike (cane walking).
    pub cane_impact_amp: f64,
    /// Fraction of each toe-off impact also felt by the same-side wrist.
    pub ipsilateral_impact: f64,
    /// Both hands hold one object: the wrists share one waveform built from
    /// the mean swing and impact amplitudes, swinging in phase, with a full
    /// impact at every toe-off.
    pub hands_coupled: bool,
    /// Half-width of the uniform per-half-stride swing gain, drawn
    /// independently for each wrist.
    pub swing_variability: f64,
}

impl GaitModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        let non_negative = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be >= 0, got {v}")))
            }
        };
        positive("cadence", self.cadence)?;
        positive("duration", self.duration)?;
        positive("rate", self.rate)?;
        positive("impact_width", self.impact_width)?;
        non_negative("swing_amp_left", self.swing_amp_left)?;
        non_negative("swing_amp_right", self.swing_amp_right)?;
        non_negative("impact_amp_left", self.impact_amp_left)?;
        non_negative("impact_amp_right", self.impact_amp_right)?;
        non_negative("cane_impact_amp", self.cane_impact_amp)?;
        non_negative("toe_off_lag", self.toe_off_lag)?;
        non_negative("heel_strike_lead", self.heel_strike_lead)?;
        non_negative("noise_std", self.noise_std)?;
        if !(0.0..=1.0).contains(&self.ipsilateral_impact) {
            return Err(Error::param(
                "ipsilateral_impact",
                format!("must lie in [0, 1], got {}", self.ipsilateral_impact),
            ));
        }
        if !(0.0..1.0).contains(&self.swing_variability) {
            return Err(Error::param(
                "swing_variability",
                format!("must lie in [0, 1), got {}", self.swing_variability),
            ));
        }
        if !self.baseline.is_finite() {
            return Err(Error::param("baseline", "must be finite"));
        }
        if !(0.0..0.5).contains(&self.step_time_asymmetry) {
            return Err(Error::param(
                "step_time_asymmetry",
                format!("must lie in [0, 0.5), got {}", self.step_time_asymmetry),
            ));
        }
        if self.toe_off_lag + self.heel_strike_lead <= 0.0 {
            return Err(Error::param("toe_off_lag", "toe-off must come after heel strike"));
        }
        Ok(())
    }
}

/// Partial override of a task profile; `None` keeps the profile value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitOverrides {
    pub cadence: Option<f64>,
    pub duration: Option<f64>,
    pub swing_amp_left: Option<f64>,
    pub swing_amp_right: Option<f64>,
    pub impact_amp_left: Option<f64>,
    pub impact_amp_right: Option<f64>,
    pub impact_width: Option<f64>,
    pub toe_off_lag: Option<f64>,
    pub heel_strike_lead: Option<f64>,
    pub step_time_asymmetry: Option<f64>,
    pub noise_std: Option<f64>,
    pub rate: Option<f64>,
    pub baseline: Option<f64>,
    pub cane_impact_amp: Option<f64>,
    pub ipsilateral_impact: Option<f64>,
    pub hands_coupled: Option<bool>,
    pub swing_variability: Option<f64>,
}

impl GaitOverrides {
    pub fn apply(&self, p: GaitModelParams) -> GaitModelParams {
        GaitModelParams {
            cadence: self.cadence.unwrap_or(p.cadence),
            duration: self.duration.unwrap_or(p.duration),
            swing_amp_left: self.swing_amp_left.unwrap_or(p.swing_amp_left),
            swing_amp_right: self.swing_amp_right.unwrap_or(p.swing_amp_right),
            impact_amp_left: self.impact_amp_left.unwrap_or(p.impact_amp_left),
            impact_amp_right: self.impact_amp_right.unwrap_or(p.impact_amp_right),
            impact_width: self.impact_width.unwrap_or(p.impact_width),
            toe_off_lag: self.toe_off_lag.unwrap_or(p.toe_off_lag),
            heel_strike_lead: self.heel_strike_lead.unwrap_or(p.heel_strike_lead),
            step_time_asymmetry: self.step_time_asymmetry.unwrap_or(p.step_time_asymmetry),
            noise_std: self.noise_std.unwrap_or(p.noise_std),
            rate: self.rate.unwrap_or(p.rate),
            baseline: self.baseline.unwrap_or(p.baseline),
            cane_impact_amp: self.cane_impact_amp.unwrap_or(p.cane_impact_amp),
            ipsilateral_impact: self.ipsilateral_impact.unwrap_or(p.ipsilateral_impact),
            hands_coupled: self.hands_coupled.unwrap_or(p.hands_coupled),
            swing_variability: self.swing_variability.unwrap_or(p.swing_variability),
        }
    }

    pub fn noiseless() -> Self {
        Self {
            noise_std: Some(0.0),
            ..Self::default()
        }
    }
}

/// Baseline gait profile of a walking task.
pub fn task_profile(task: WalkTask) -> GaitModelParams {
    let pace = |cadence: f64, scale: f64| GaitModelParams {
        cadence,
        duration: STEPS_PER_WALK / cadence,
        swing_amp_left: SWING_AMP * scale,
        swing_amp_right: SWING_AMP * scale,
        impact_amp_left: IMPACT_AMP * scale,
        impact_amp_right: IMPACT_AMP * scale,
        impact_width: 0.04,
        toe_off_lag: 0.2,
        heel_strike_lead: 0.05,
        step_time_asymmetry: 0.0,
        noise_std: 0.01,
        rate: SAMPLE_RATE,
        baseline: 1.0,
        cane_impact_amp: 0.0,
        ipsilateral_impact: IPSILATERAL_IMPACT,
        hands_coupled: false,
        swing_variability: SWING_VARIABILITY,
    };
    let comfortable = pace(COMFORTABLE_CADENCE, 1.0);
    match task {
        WalkTask::ComfortablePace => comfortable,
        WalkTask::SlowPace => pace(COMFORTABLE_CADENCE * 0.75, 0.5),
        WalkTask::FastPace => pace(COMFORTABLE_CADENCE * 1.25, 1.4),
        WalkTask::BagRightHand => GaitModelParams {
            swing_amp_right: comfortable.swing_amp_right * 0.2,
            ..comfortable
        },
        WalkTask::CaneRightHand => GaitModelParams {
            swing_amp_right: comfortable.swing_amp_right * 0.2,
            cane_impact_amp: comfortable.impact_amp_right * 0.6,
            ..comfortable
        },
        WalkTask::PhoneTwoHands => GaitModelParams {
            swing_amp_left: CONSTRAINED_SWING,
            swing_amp_right: CONSTRAINED_SWING,
            hands_coupled: true,
            ..comfortable
        },
        // arms hang from the trunk and feel every toe-off equally
        WalkTask::NoArmSwing => GaitModelParams {
            swing_amp_left: CONSTRAINED_SWING,
            swing_amp_right: CONSTRAINED_SWING,
            ipsilateral_impact: 1.0,
            ..comfortable
        },
        WalkTask::NoRightShoe => GaitModelParams {
            step_time_asymmetry: 0.1,
            ..comfortable
        },
    }
}

/// Step anchor times and the foot of each step (left first, alternating).
/// Steps are kept while `anchor + toe_off_lag + 0.5 / cadence <= duration`.
pub fn step_schedule(p: &GaitModelParams) -> Vec<(f64, Side)> {
    let period = 1.0 / p.cadence;
    let mut out = Vec::new();
    let mut t = 0.5 * period;
    let mut k = 0usize;
    while t + p.toe_off_lag + 0.5 * period <= p.duration {
        let side = if k.is_multiple_of(2) { Side::Left } else { Side::Right };
        out.push((t, side));
        let skew = if k.is_multiple_of(2) { 1.0 + p.step_time_asymmetry } else { 1.0 - p.step_time_asymmetry };
        t += period * skew;
        k += 1;
    }
    out
}

fn ground_truth(p: &GaitModelParams, schedule: &[(f64, Side)]) -> GroundTruth {
    let mut gt = GroundTruth {
        step_times: Vec::with_capacity(schedule.len()),
        heel_strikes_left: Vec::new(),
        heel_strikes_right: Vec::new(),
        toe_offs_left: Vec::new(),
        toe_offs_right: Vec::new(),
        label_count: schedule.len(),
    };
    for &(t, side) in schedule {
        gt.step_times.push(t);
        let (hs, to) = match side {
            Side::Left => (&mut gt.heel_strikes_left, &mut gt.toe_offs_left),
            Side::Right => (&mut gt.heel_strikes_right, &mut gt.toe_offs_right),
        };
        hs.push(t - p.heel_strike_lead);
        to.push(t + p.toe_off_lag);
    }
    gt
}

/// Swing phase: `pi/2 + k*pi` at toe-off `k`, linear in between, extended by
/// half an interval on either side of the walk. `None` outside the walk.
fn swing_phase(toe_offs: &[f64], period: f64, t: f64) -> Option<f64> {
    let n = toe_offs.len();
    let first_gap = if n > 1 { toe_offs[1] - toe_offs[0] } else { period };
    let last_gap = if n > 1 { toe_offs[n - 1] - toe_offs[n - 2] } else { period };
    if t < toe_offs[0] {
        let phase = FRAC_PI_2 - (toe_offs[0] - t) / first_gap * PI;
        return (phase >= 0.0).then_some(phase);
    }
    if t >= toe_offs[n - 1] {
        let phase = FRAC_PI_2 + (n - 1) as f64 * PI + (t - toe_offs[n - 1]) / last_gap * PI;
        return (phase <= n as f64 * PI).then_some(phase);
    }
    let k = toe_offs.partition_point(|&x| x <= t) - 1;
    let frac = (t - toe_offs[k]) / (toe_offs[k + 1] - toe_offs[k]);
    Some(FRAC_PI_2 + (k as f64 + frac) * PI)
}

fn add_bumps(z: &mut [f64], rate: f64, centers: &[f64], amp: f64, width: f64) {
    if amp == 0.0 {
        return;
    }
    let reach = 5.0 * width;
    for &c in centers {
        let lo = ((c - reach) * rate).floor().max(0.0) as usize;
        let hi = (((c + reach) * rate).ceil() as usize).min(z.len().saturating_sub(1));
        for (i, v) in z.iter_mut().enumerate().take(hi + 1).skip(lo) {
            let d = (i as f64 / rate - c) / width;
            *v += amp * (-0.5 * d * d).exp();
        }
    }
}

/// Noiseless wrist axes `(x, y, z)` for one side.
fn wrist_axes(p: &GaitModelParams, gt: &GroundTruth, side: Side, gains: &[f64], n: usize) -> [Vec<f64>; 3] {
    let toe_offs = gt.toe_offs();
    let period = 1.0 / p.cadence;
    let (swing_amp, sign, impact_amp, ipsilateral_impact, contralateral, ipsilateral) = if p.hands_coupled {
        let swing = 0.5 * (p.swing_amp_left + p.swing_amp_right);
        let impact = 0.5 * (p.impact_amp_left + p.impact_amp_right);
        (swing, 1.0, impact, 1.0, &gt.toe_offs_right, &gt.toe_offs_left)
    } else {
        match side {
            Side::Left => (p.swing_amp_left, 1.0, p.impact_amp_left, p.ipsilateral_impact, &gt.toe_offs_right, &gt.toe_offs_left),
            Side::Right => (p.swing_amp_right, -1.0, p.impact_amp_right, p.ipsilateral_impact, &gt.toe_offs_left, &gt.toe_offs_right),
        }
    };
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / p.rate;
            swing_phase(&toe_offs, period, t).map_or(0.0, |ph| {
                // gains switch at zero crossings, so the swing stays continuous
                let half = ((ph / PI) as usize).min(gains.len() - 1);
                sign * swing_amp * gains[half] * ph.sin()
            })
        })
        .collect();
    let y = vec![0.0; n];
    let mut z = vec![p.baseline; n];
    add_bumps(&mut z, p.rate, contralateral, impact_amp, p.impact_width);
    add_bumps(&mut z, p.rate, ipsilateral, impact_amp * ipsilateral_impact, p.impact_width);
    if side == Side::Right {
        add_bumps(&mut z, p.rate, &gt.heel_strikes_left, p.cane_impact_amp, p.impact_width);
    }
    [x, y, z]
}

const NOISE_STREAM_LEFT: u64 = 1;
const NOISE_STREAM_RIGHT: u64 = 2;
const SELF_COUNT_STREAM: u64 = 3;
const GAIN_STREAM_LEFT: u64 = 4;
const GAIN_STREAM_RIGHT: u64 = 5;

fn swing_gains(half_strides: usize, variability: f64, seed: u64, stream: u64) -> Vec<f64> {
    if variability == 0.0 {
        return vec![1.0; half_strides];
    }
    let mut rng = stream_rng(seed, stream);
    (0..half_strides)
        .map(|_| rng.random_range(1.0 - variability..=1.0 + variability))
        .collect()
}

fn add_noise(axes: &mut [Vec<f64>; 3], std: f64, seed: u64, stream: u64) {
    if std == 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, std).expect("validated noise_std");
    for axis in axes.iter_mut() {
        for v in axis.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
}

/// One synthetic recording with ground truth and a noisy self-reported count.
pub fn simulate_recording(
    task: WalkTask,
    overrides: &GaitOverrides,
    id: &str,
    subject_id: &str,
    seed: u64,
) -> Result<Recording> {
    let p = overrides.apply(task_profile(task));
    p.validate()?;
    let schedule = step_schedule(&p);
    if schedule.is_empty() {
        return Err(Error::param(
            "duration",
            format!("{} s is too short for one full step at cadence {}", p.duration, p.cadence),
        ));
    }
    let gt = ground_truth(&p, &schedule);
    let n = (p.duration * p.rate).round() as usize;

    let half_strides = gt.toe_offs_left.len() + gt.toe_offs_right.len();
    let left_gains = swing_gains(half_strides, p.swing_variability, seed, GAIN_STREAM_LEFT);
    let right_gains = if p.hands_coupled {
        left_gains.clone()
    } else {
        swing_gains(half_strides, p.swing_variability, seed, GAIN_STREAM_RIGHT)
    };
    let mut left = wrist_axes(&p, &gt, Side::Left, &left_gains, n);
    let mut right = wrist_axes(&p, &gt, Side::Right, &right_gains, n);
    add_noise(&mut left, p.noise_std, seed, NOISE_STREAM_LEFT);
    add_noise(&mut right, p.noise_std, seed, NOISE_STREAM_RIGHT);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SELF_COUNT_STREAM);
    let self_count = (gt.label_count as i64 + rng.random_range(-3..=3)).max(0) as u32;

    let [lx, ly, lz] = left;
    let [rx, ry, rz] = right;
    Recording::new(
        id,
        subject_id,
        task,
        TriaxialSeries::new(p.rate, 0.0, lx, ly, lz)?,
        TriaxialSeries::new(p.rate, 0.0, rx, ry, rz)?,
        p.duration,
        Some(gt),
        Some(self_count),
    )
}

/// Number of recordings per task plus the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub counts: BTreeMap<WalkTask, usize>,
    /// Number of synthetic subjects recordings are spread over.
    #[serde(default = "default_subjects")]
    pub subjects: usize,
    /// Draw per-subject and per-recording variation around the task profile.
    #[serde(default = "default_true")]
    pub vary: bool,
}

fn default_subjects() -> usize {
    27
}

fn default_true() -> bool {
    true
}

impl CorpusSpec {
    /// Default per-task recording counts (203 in total).
    pub fn standard(seed: u64) -> Self {
        use WalkTask::*;
        let counts = [
            (SlowPace, 25),
            (ComfortablePace, 26),
            (FastPace, 24),
            (BagRightHand, 27),
            (PhoneTwoHands, 26),
            (NoArmSwing, 27),
            (NoRightShoe, 25),
            (CaneRightHand, 23),
        ]
        .into_iter()
        .collect();
        Self {
            seed,
            counts,
            subjects: default_subjects(),
            vary: true,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }
}

/// Persistent traits of a synthetic subject.
#[derive(Debug, Clone, Copy)]
struct Subject {
    cadence: f64,
    swing_left: f64,
    swing_right: f64,
    impact: f64,
    steps: f64,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl Subject {
    fn draw(seed: u64, index: usize) -> Self {
        let mut rng = stream_rng(seed, 1 << 32 | index as u64);
        Self {
            cadence: rng.random_range(0.92..1.08),
            swing_left: rng.random_range(0.7..1.3),
            swing_right: rng.random_range(0.7..1.3),
            impact: rng.random_range(0.75..1.25),
            steps: rng.random_range(0.8..1.2),
        }
    }
}

/// Overrides expressing one subject's traits plus per-trial jitter.
fn trial_overrides(task: WalkTask, subject: &Subject, rng: &mut ChaCha8Rng) -> GaitOverrides {
    let base = task_profile(task);
    let mut jitter = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let cadence = base.cadence * subject.cadence * jitter(0.96, 1.04);
    let steps = STEPS_PER_WALK * subject.steps * jitter(0.9, 1.1);
    GaitOverrides {
        cadence: Some(cadence),
        duration: Some(steps / cadence),
        swing_amp_left: Some(base.swing_amp_left * subject.swing_left * jitter(0.9, 1.1)),
        swing_amp_right: Some(base.swing_amp_right * subject.swing_right * jitter(0.9, 1.1)),
        impact_amp_left: Some(base.impact_amp_left * subject.impact * jitter(0.9, 1.1)),
        impact_amp_right: Some(base.impact_amp_right * subject.impact * jitter(0.9, 1.1)),
        noise_std: Some(base.noise_std * jitter(0.5, 1.5)),
        ..GaitOverrides::default()
    }
}

/// Generates every recording of the spec, tasks in declaration order.
/// Recording `i` of a task is walked by subject `i % subjects`.
pub fn simulate_corpus(spec: &CorpusSpec) -> Result<Vec<Recording>> {
    if spec.subjects == 0 && spec.total() > 0 {
        return Err(Error::param("subjects", "need at least one subject"));
    }
    let subjects: Vec<Subject> = (0..spec.subjects).map(|i| Subject::draw(spec.seed, i)).collect();
    let mut jobs = Vec::with_capacity(spec.total());
    for (&task, &count) in &spec.counts {
        for i in 0..count {
            jobs.push((task, i, jobs.len()));
        }
    }
    use rayon::prelude::*;
    jobs.into_par_iter()
        .map(|(task, i, global)| {
            let subject_index = i % spec.subjects;
            let mut rng = stream_rng(spec.seed, 2 << 32 | global as u64);
            let overrides = if spec.vary {
                trial_overrides(task, &subjects[subject_index], &mut rng)
            } else {
                GaitOverrides::default()
            };
            let noise_seed = rng.random::<u64>();
            simulate_recording(
                task,
                &overrides,
                &format!("{}_{:03}", task.name(), i),
                &format!("S{:02}", subject_index + 1),
                noise_seed,
            )
        })
        .collect()
}
