//! Step-count accuracy metrics, cadence outlier filtering, and gait-phase
//! offsets of detected steps.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{run_detector, CorpusNormalization};
use crate::types::{AlgorithmId, DetectorParams, GroundTruth, PeakSet, Recording, WalkTask};

/// `100 (pred - label) / label`; negative means under-counting.
pub fn percent_error(pred: usize, label: usize) -> Result<f64> {
    if label == 0 {
        return Err(Error::param("label", "percent error needs a positive label"));
    }
    Ok(100.0 * (pred as f64 - label as f64) / label as f64)
}

/// Sample Pearson correlation coefficient.
pub fn pearson_r(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            what: "pearson_r inputs",
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::Empty("pearson_r needs at least two pairs"));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::param("pearson_r", "inputs must be finite"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("pearson_r first argument"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("pearson_r second argument"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Percentile `q` in [0, 100] of ascending `sorted`, linear between ranks.
pub fn percentile(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::Empty("percentile of an empty sample"));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::param("q", format!("must lie in [0, 100], got {q}")));
    }
    let h = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Summary of a sample of percent errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub n: usize,
    pub mean: f64,
    pub mean_abs: f64,
    pub min: f64,
    pub p5: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub p95: f64,
    pub max: f64,
}

impl Distribution {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut sorted = values.to_vec();
        if sorted.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("distribution", "values must be finite"));
        }
        sorted.sort_by(f64::total_cmp);
        let p = |q| percentile(&sorted, q);
        let n = sorted.len();
        Ok(Self {
            n,
            mean: values.iter().sum::<f64>() / n as f64,
            mean_abs: values.iter().map(|v| v.abs()).sum::<f64>() / n as f64,
            min: p(0.0)?,
            p5: p(5.0)?,
            q1: p(25.0)?,
            median: p(50.0)?,
            q3: p(75.0)?,
            p95: p(95.0)?,
            max: p(100.0)?,
        })
    }
}

/// Recordings removed and flagged by [`cadence_outlier_filter`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierFilter {
    pub frac: f64,
    /// Ids in removal order (largest cadence disagreement first).
    pub removed: Vec<String>,
    /// Ids without a self-reported count; kept but not ranked.
    pub unranked: Vec<String>,
}

impl OutlierFilter {
    /// The surviving recordings, in input order.
    pub fn apply(&self, dataset: &[Recording]) -> Vec<Recording> {
        dataset
            .iter()
            .filter(|r| !self.removed.contains(&r.id))
            .cloned()
            .collect()
    }
}

/// Absolute difference between self-reported and labeled cadence.
pub fn cadence_disagreement(rec: &Recording) -> Option<f64> {
    let label = rec.label_count()?;
    let own = rec.self_count?;
    Some((own as f64 - label as f64).abs() / rec.duration)
}

/// Ranks recordings by cadence disagreement and removes the top
/// `ceil(frac * N_ranked)`, ties in id order.
pub fn cadence_outlier_filter(dataset: &[Recording], frac: f64) -> Result<OutlierFilter> {
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::param("frac", format!("must lie in [0, 1), got {frac}")));
    }
    let mut ranked = Vec::new();
    let mut unranked = Vec::new();
    for rec in dataset {
        if rec.ground_truth.is_none() {
            return Err(Error::InvalidRecording {
                id: rec.id.clone(),
                reason: "cadence filtering needs ground truth".into(),
            });
        }
        match cadence_disagreement(rec) {
            Some(d) => ranked.push((d, rec.id.as_str())),
            None => unranked.push(rec.id.clone()),
        }
    }
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    // guard against 0.05 * 20 landing a hair above 1
    let k = ((frac * ranked.len() as f64) - 1e-9).ceil().max(0.0) as usize;
    Ok(OutlierFilter {
        frac,
        removed: ranked[..k].iter().map(|(_, id)| id.to_string()).collect(),
        unranked,
    })
}

/// Signed offsets of each detected step to the nearest gait events.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseOffsets {
    pub heel: Vec<f64>,
    pub toe: Vec<f64>,
}

/// Nearest event to `t` in ascending `events`, the earlier one on ties.
fn nearest(events: &[f64], t: f64) -> f64 {
    let i = events.partition_point(|&e| e < t);
    match (i.checked_sub(1).map(|j| events[j]), events.get(i).copied()) {
        (Some(before), Some(after)) => {
            if after - t < t - before {
                after
            } else {
                before
            }
        }
        (Some(before), None) => before,
        (None, Some(after)) => after,
        (None, None) => unreachable!("events checked non-empty"),
    }
}

fn offsets_against(steps: &PeakSet, heel: &[f64], toe: &[f64]) -> Result<PhaseOffsets> {
    if heel.is_empty() || toe.is_empty() {
        return Err(Error::InvalidGroundTruth("no gait events to compare against".into()));
    }
    Ok(PhaseOffsets {
        heel: steps.times().iter().map(|&t| t - nearest(heel, t)).collect(),
        toe: steps.times().iter().map(|&t| t - nearest(toe, t)).collect(),
    })
}

/// Offsets against heel strikes and toe-offs of both feet pooled.
pub fn phase_offsets(steps: &PeakSet, gt: &GroundTruth) -> Result<PhaseOffsets> {
    offsets_against(steps, &gt.heel_strikes(), &gt.toe_offs())
}

/// Offsets against each foot's events separately.
pub fn phase_offsets_by_side(steps: &PeakSet, gt: &GroundTruth) -> Result<(PhaseOffsets, PhaseOffsets)> {
    Ok((
        offsets_against(steps, &gt.heel_strikes_left, &gt.toe_offs_left)?,
        offsets_against(steps, &gt.heel_strikes_right, &gt.toe_offs_right)?,
    ))
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            n: values.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

/// One recording under one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub recording_id: String,
    pub subject_id: String,
    pub task: WalkTask,
    pub algorithm: AlgorithmId,
    pub label: usize,
    pub predicted: Option<usize>,
    pub percent_error: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub algorithm: AlgorithmId,
    pub recordings: usize,
    pub failures: usize,
    pub percent_error: Option<Distribution>,
    /// Predicted vs labeled counts; `None` when undefined.
    pub pearson_r: Option<f64>,
}

/// One task row; cells follow [`TaskTable::algorithms`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task: WalkTask,
    pub cells: Vec<Option<Distribution>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskTable {
    pub algorithms: Vec<AlgorithmId>,
    pub rows: Vec<TaskRow>,
}

impl TaskTable {
    pub fn cell(&self, task: WalkTask, alg: AlgorithmId) -> Option<&Distribution> {
        let col = self.algorithms.iter().position(|&a| a == alg)?;
        let row = self.rows.iter().find(|r| r.task == task)?;
        row.cells[col].as_ref()
    }
}

/// Offset of one detected step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub recording_id: String,
    pub task: WalkTask,
    pub algorithm: AlgorithmId,
    pub time: f64,
    pub dt_heel: f64,
    pub dt_toe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSummary {
    pub algorithm: AlgorithmId,
    /// `None` aggregates over every task.
    pub task: Option<WalkTask>,
    pub heel: Option<MeanStd>,
    pub toe: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub rows: Vec<EvalRow>,
    pub summaries: Vec<ErrorSummary>,
    pub per_task: TaskTable,
    pub phase_rows: Vec<PhaseRow>,
    pub phase_summaries: Vec<PhaseSummary>,
}

/// Detected steps of every recording (aligned with the dataset) or the
/// reason detection failed.
pub type DetectionOutcomes = BTreeMap<AlgorithmId, Vec<std::result::Result<PeakSet, String>>>;

/// Runs each detector on each recording, then [`evaluate_detections`].
pub fn evaluate_corpus(
    dataset: &[Recording],
    params: &BTreeMap<AlgorithmId, DetectorParams>,
    norm: &CorpusNormalization,
    phase_for: &[AlgorithmId],
) -> Result<Evaluation> {
    let detections: DetectionOutcomes = params
        .iter()
        .map(|(&alg, p)| {
            let outcomes = dataset
                .par_iter()
                .map(|rec| run_detector(alg, rec, p, norm).map(|d| d.steps).map_err(|e| e.to_string()))
                .collect();
            (alg, outcomes)
        })
        .collect();
    evaluate_detections(dataset, &detections, phase_for)
}

/// Accuracy tables and phase offsets from precomputed detections.
pub fn evaluate_detections(
    dataset: &[Recording],
    detections: &DetectionOutcomes,
    phase_for: &[AlgorithmId],
) -> Result<Evaluation> {
    let mut labels = Vec::with_capacity(dataset.len());
    for rec in dataset {
        match rec.label_count() {
            Some(l) if l > 0 => labels.push(l),
            _ => {
                return Err(Error::InvalidRecording {
                    id: rec.id.clone(),
                    reason: "evaluation needs a positive ground-truth label".into(),
                })
            }
        }
    }

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    let mut phase_rows = Vec::new();
    let mut phase_summaries = Vec::new();
    let algorithms: Vec<AlgorithmId> = detections.keys().copied().collect();
    let mut by_task: BTreeMap<(WalkTask, AlgorithmId), Vec<f64>> = BTreeMap::new();

    for (&alg, outcomes) in detections {
        if outcomes.len() != dataset.len() {
            return Err(Error::LengthMismatch {
                what: "detections vs recordings",
                left: outcomes.len(),
                right: dataset.len(),
            });
        }
        let mut errors = Vec::new();
        let (mut preds, mut truth) = (Vec::new(), Vec::new());
        let mut failures = 0;
        let mut heel_by_task: BTreeMap<WalkTask, Vec<f64>> = BTreeMap::new();
        let mut toe_by_task: BTreeMap<WalkTask, Vec<f64>> = BTreeMap::new();
        for ((rec, &label), outcome) in dataset.iter().zip(&labels).zip(outcomes) {
            let mut row = EvalRow {
                recording_id: rec.id.clone(),
                subject_id: rec.subject_id.clone(),
                task: rec.task,
                algorithm: alg,
                label,
                predicted: None,
                percent_error: None,
                error: None,
            };
            match outcome {
                Ok(steps) => {
                    let pe = percent_error(steps.len(), label)?;
                    row.predicted = Some(steps.len());
                    row.percent_error = Some(pe);
                    errors.push(pe);
                    preds.push(steps.len() as f64);
                    truth.push(label as f64);
                    by_task.entry((rec.task, alg)).or_default().push(pe);
                    if phase_for.contains(&alg) {
                        let gt = rec.ground_truth.as_ref().expect("labels checked above");
                        let off = phase_offsets(steps, gt)?;
                        for (i, &t) in steps.times().iter().enumerate() {
                            phase_rows.push(PhaseRow {
                                recording_id: rec.id.clone(),
                                task: rec.task,
                                algorithm: alg,
                                time: t,
                                dt_heel: off.heel[i],
                                dt_toe: off.toe[i],
                            });
                        }
                        heel_by_task.entry(rec.task).or_default().extend(&off.heel);
                        toe_by_task.entry(rec.task).or_default().extend(&off.toe);
                    }
                }
                Err(message) => {
                    failures += 1;
                    row.error = Some(message.clone());
                }
            }
            rows.push(row);
        }
        summaries.push(ErrorSummary {
            algorithm: alg,
            recordings: dataset.len(),
            failures,
            percent_error: if errors.is_empty() { None } else { Some(Distribution::from_values(&errors)?) },
            pearson_r: pearson_r(&preds, &truth).ok(),
        });
        if phase_for.contains(&alg) {
            let all_heel: Vec<f64> = heel_by_task.values().flatten().copied().collect();
            let all_toe: Vec<f64> = toe_by_task.values().flatten().copied().collect();
            phase_summaries.push(PhaseSummary {
                algorithm: alg,
                task: None,
                heel: MeanStd::of(&all_heel),
                toe: MeanStd::of(&all_toe),
            });
            for task in WalkTask::ALL {
                phase_summaries.push(PhaseSummary {
                    algorithm: alg,
                    task: Some(task),
                    heel: heel_by_task.get(&task).and_then(|v| MeanStd::of(v)),
                    toe: toe_by_task.get(&task).and_then(|v| MeanStd::of(v)),
                });
            }
        }
    }

    let per_task = TaskTable {
        rows: WalkTask::ALL
            .into_iter()
            .map(|task| {
                let cells = algorithms
                    .iter()
                    .map(|&alg| by_task.get(&(task, alg)).map(|v| Distribution::from_values(v)).transpose())
                    .collect::<Result<_>>()?;
                Ok(TaskRow { task, cells })
            })
            .collect::<Result<_>>()?,
        algorithms,
    };
    Ok(Evaluation {
        rows,
        summaries,
        per_task,
        phase_rows,
        phase_summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgait::{simulate_corpus, simulate_recording, CorpusSpec, GaitOverrides};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn percent_error_examples_and_sign() {
        assert_eq!(percent_error(104, 104).unwrap(), 0.0);
        assert_eq!(percent_error(98, 100).unwrap(), -2.0);
        assert_eq!(percent_error(105, 100).unwrap(), 5.0);
        assert!(percent_error(3, 4).unwrap() < 0.0);
        assert!(percent_error(5, 4).unwrap() > 0.0);
        assert!(percent_error(1, 0).is_err());
    }

    /// Correlation through the textbook sums formula.
    fn oracle_r(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let syy: f64 = ys.iter().map(|y| y * y).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn pearson_examples() {
        let xs = [1.0, 2.0, 3.0, 4.5];
        assert!(close(pearson_r(&xs, &xs).unwrap(), 1.0, 1e-12));
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!(close(pearson_r(&xs, &neg).unwrap(), -1.0, 1e-12));
        let r = pearson_r(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        // cov 1.5, var 1 and 7/3
        assert!(close(r, 1.5 / (7.0f64 / 3.0).sqrt(), 1e-12));
        assert_eq!((r * 1e4).round() / 1e4, 0.9820);
        assert!(matches!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance(_))));
        assert!(pearson_r(&[1.0], &[1.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn percentile_interpolates_between_ranks() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.0).unwrap(), 1.0);
        assert_eq!(percentile(&s, 100.0).unwrap(), 4.0);
        assert_eq!(percentile(&s, 50.0).unwrap(), 2.5);
        assert!(close(percentile(&s, 25.0).unwrap(), 1.75, 1e-12));
        assert_eq!(percentile(&[7.0], 95.0).unwrap(), 7.0);
        assert!(percentile(&[], 50.0).is_err());
        let d = Distribution::from_values(&[-4.0, 2.0, 0.0, 10.0, -1.0]).unwrap();
        assert_eq!(d.median, 0.0);
        assert_eq!(d.mean, 1.4);
        assert_eq!(d.mean_abs, 3.4);
        assert!(d.p5 <= d.q1 && d.q1 <= d.median && d.median <= d.q3 && d.q3 <= d.p95);
    }

    #[test]
    fn nearest_event_ties_go_earlier() {
        let gt = GroundTruth {
            step_times: vec![0.8, 1.8],
            heel_strikes_left: vec![0.8],
            heel_strikes_right: vec![1.8],
            toe_offs_left: vec![1.0],
            toe_offs_right: vec![2.0],
            label_count: 2,
        };
        let steps = PeakSet::new(vec![1.0, 1.4, 1.5], vec![1.0; 3]).unwrap();
        let off = phase_offsets(&steps, &gt).unwrap();
        assert_eq!(off.toe[0], 0.0);
        assert!(close(off.toe[1], 0.4, 1e-12));
        // midway between 1.0 and 2.0: earlier event, positive offset
        assert!(close(off.toe[2], 0.5, 1e-12));
        assert!(close(off.heel[2], -0.3, 1e-12));
        let (left, right) = phase_offsets_by_side(&steps, &gt).unwrap();
        assert!(close(left.toe[2], 0.5, 1e-12));
        assert!(close(right.toe[2], -0.5, 1e-12));
        let empty = GroundTruth {
            step_times: vec![],
            heel_strikes_left: vec![],
            heel_strikes_right: vec![],
            toe_offs_left: vec![],
            toe_offs_right: vec![],
            label_count: 0,
        };
        assert!(phase_offsets(&steps, &empty).is_err());
    }

    fn with_self_count(mut rec: Recording, id: &str, self_count: Option<u32>) -> Recording {
        rec.id = id.to_string();
        rec.self_count = self_count;
        rec
    }

    fn base_recording() -> Recording {
        let ov = GaitOverrides {
            duration: Some(10.0),
            ..GaitOverrides::noiseless()
        };
        simulate_recording(WalkTask::ComfortablePace, &ov, "r", "s", 0).unwrap()
    }

    #[test]
    fn outlier_filter_examples() {
        let base = base_recording();
        let label = base.label_count().unwrap() as u32;
        let dataset: Vec<Recording> = (0..20)
            .map(|i| {
                let own = if i == 7 { label * 2 } else { label + (i % 3) as u32 };
                with_self_count(base.clone(), &format!("r{i:02}"), Some(own))
            })
            .collect();
        let none = cadence_outlier_filter(&dataset, 0.0).unwrap();
        assert!(none.removed.is_empty());
        assert_eq!(none.apply(&dataset), dataset);
        let one = cadence_outlier_filter(&dataset, 0.05).unwrap();
        assert_eq!(one.removed, vec!["r07".to_string()]);
        assert_eq!(one.apply(&dataset).len(), 19);
        // ties at the cut resolve in id order
        let two = cadence_outlier_filter(&dataset, 0.1).unwrap();
        assert_eq!(two.removed, vec!["r07".to_string(), "r02".to_string()]);
        assert!(cadence_outlier_filter(&dataset, 1.0).is_err());
    }

    #[test]
    fn outlier_filter_keeps_and_flags_unreported() {
        let base = base_recording();
        let label = base.label_count().unwrap() as u32;
        let mut dataset: Vec<Recording> = (0..10)
            .map(|i| with_self_count(base.clone(), &format!("r{i}"), Some(label + i)))
            .collect();
        dataset.push(with_self_count(base.clone(), "silent", None));
        let f = cadence_outlier_filter(&dataset, 0.15).unwrap();
        assert_eq!(f.unranked, vec!["silent".to_string()]);
        assert_eq!(f.removed, vec!["r9".to_string(), "r8".to_string()]);
        assert!(f.apply(&dataset).iter().any(|r| r.id == "silent"));
    }

    #[test]
    fn evaluation_shapes_and_error_rows() {
        let spec = CorpusSpec {
            counts: [(WalkTask::ComfortablePace, 2), (WalkTask::BagRightHand, 2)].into_iter().collect(),
            ..CorpusSpec::standard(3)
        };
        let corpus = simulate_corpus(&spec).unwrap();
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        let params: BTreeMap<_, _> = [AlgorithmId::HighLevelUnion, AlgorithmId::NoFusionLeft]
            .into_iter()
            .map(|a| (a, DetectorParams::reference(a)))
            .collect();
        let eval = evaluate_corpus(&corpus, &params, &norm, &[AlgorithmId::HighLevelUnion]).unwrap();
        assert_eq!(eval.rows.len(), 8);
        assert_eq!(eval.per_task.rows.len(), 8);
        assert!(eval.per_task.rows.iter().all(|r| r.cells.len() == 2));
        assert!(eval.per_task.cell(WalkTask::SlowPace, AlgorithmId::HighLevelUnion).is_none());
        assert_eq!(
            eval.per_task.cell(WalkTask::BagRightHand, AlgorithmId::HighLevelUnion).unwrap().n,
            2
        );
        let union_steps: usize = eval
            .rows
            .iter()
            .filter(|r| r.algorithm == AlgorithmId::HighLevelUnion)
            .map(|r| r.predicted.unwrap())
            .sum();
        assert_eq!(eval.phase_rows.len(), union_steps);
        assert_eq!(eval.phase_summaries.len(), 9);

        let mut detections = DetectionOutcomes::new();
        let mut outcomes: Vec<_> = corpus.iter().map(|_| Ok(PeakSet::empty())).collect();
        outcomes[1] = Err("boom".to_string());
        detections.insert(AlgorithmId::LowLevelSum, outcomes);
        let eval = evaluate_detections(&corpus, &detections, &[]).unwrap();
        assert_eq!(eval.rows[1].error.as_deref(), Some("boom"));
        assert_eq!(eval.summaries[0].failures, 1);
        assert_eq!(eval.summaries[0].percent_error.as_ref().unwrap().mean, -100.0);
        assert_eq!(eval.summaries[0].pearson_r, None);
    }

    #[test]
    fn perfect_single_recording_is_degenerate() {
        let rec = base_recording();
        let gt = rec.ground_truth.clone().unwrap();
        let steps = PeakSet::new(gt.toe_offs(), vec![1.0; gt.label_count]).unwrap();
        let detections: DetectionOutcomes = [(AlgorithmId::HighLevelUnion, vec![Ok(steps)])].into_iter().collect();
        let eval = evaluate_detections(&[rec], &detections, &[AlgorithmId::HighLevelUnion]).unwrap();
        let d = eval.summaries[0].percent_error.as_ref().unwrap();
        assert_eq!((d.mean, d.p5, d.p95), (0.0, 0.0, 0.0));
        assert_eq!(eval.summaries[0].pearson_r, None);
        assert!(eval.phase_rows.iter().all(|r| r.dt_toe == 0.0));
    }

    proptest! {
        #[test]
        fn pearson_matches_oracle_and_affine_invariance(
            pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60),
            a in 0.1f64..10.0,
            b in -100.0f64..100.0,
            c in 0.1f64..10.0,
            d in -100.0f64..100.0,
        ) {
            let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let r = match pearson_r(&xs, &ys) { Ok(r) => r, Err(_) => return Ok(()) };
            prop_assume!(r.abs() < 1.0 - 1e-9 || r.abs() == 1.0);
            prop_assert!(close(r, oracle_r(&xs, &ys), 1e-9));
            let xs2: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let ys2: Vec<f64> = ys.iter().map(|y| c * y + d).collect();
            prop_assert!(close(pearson_r(&xs2, &ys2).unwrap(), r, 1e-9));
        }

        #[test]
        fn outlier_filter_removes_ceil_and_reapplies_down_the_ranking(
            extra in prop::collection::vec(0u32..30, 1..60),
            frac in 0.0f64..0.5,
        ) {
            let base = base_recording();
            let label = base.label_count().unwrap() as u32;
            let dataset: Vec<Recording> = extra
                .iter()
                .enumerate()
                .map(|(i, e)| with_self_count(base.clone(), &format!("r{i:03}"), Some(label + e)))
                .collect();
            let first = cadence_outlier_filter(&dataset, frac).unwrap();
            let n = dataset.len();
            prop_assert_eq!(first.removed.len(), ((frac * n as f64) - 1e-9).ceil() as usize);
            let kept = first.apply(&dataset);
            // the survivors' ranking is the tail of the original ranking
            let whole = cadence_outlier_filter(&dataset, 0.999_999).unwrap().removed;
            let rest = cadence_outlier_filter(&kept, 0.999_999).unwrap().removed;
            prop_assert_eq!(&whole[first.removed.len()..], &rest[..]);
            prop_assert_eq!(&whole[..first.removed.len()], &first.removed[..]);
        }

        #[test]
        fn toe_offsets_bounded_by_half_interval(
            times in prop::collection::vec(0.0f64..10.0, 1..30),
        ) {
            let rec = base_recording();
            let gt = rec.ground_truth.as_ref().unwrap();
            let toe = gt.toe_offs();
            let max_gap = toe.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            let mut t = times;
            t.sort_by(f64::total_cmp);
            t.dedup();
            // keep detections inside the span of events
            let t: Vec<f64> = t.into_iter().filter(|x| *x >= toe[0] && *x <= toe[toe.len() - 1]).collect();
            let steps = PeakSet::new(t.clone(), vec![0.0; t.len()]).unwrap();
            let off = phase_offsets(&steps, gt).unwrap();
            prop_assert_eq!(off.toe.len(), t.len());
            prop_assert_eq!(off.heel.len(), t.len());
            for o in off.toe {
                prop_assert!(o.abs() <= max_gap / 2.0 + 1e-12);
            }
        }
    }
}
