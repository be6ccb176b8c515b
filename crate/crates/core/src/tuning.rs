//! Cross-validated exhaustive grid search minimizing step-count RMSE.
//!
//! Every grid point is evaluated on every recording, but the work is shared:
//! the smoothed, normalized signal depends only on the smoothing windows, and
//! greedy peak thinning visits peaks in descending amplitude order, so the
//! survivors for an amplitude floor are a prefix of the survivors at floor
//! zero. One thinning pass per (smoothing, gap) therefore serves every
//! amplitude value of the grid.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{
    fused_signal, intersect_fuse, smoothed_magnitude, union_pool, union_select, CorpusNormalization, LowLevelMode,
};
use crate::peaks::{amplitude_order, greedy_select, local_maxima, peak_set_from_indices};
use crate::preprocess::min_max_normalize;
use crate::types::{window_samples, AlgorithmId, DetectorParams, PeakSet, Recording, ScalarSeries, Side, WalkTask};

/// Smoothing index, amplitude bits and gap index, with the peaks they yield
/// on each side and the pooled union candidates.
type FusionInputs = ((usize, usize), u64, usize, PeakSet, PeakSet, Vec<(f64, bool, f64)>);

/// Candidate values per parameter field. Fields an algorithm does not use
/// are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamGrid {
    pub smooth_single: Vec<f64>,
    #[serde(default)]
    pub smooth_fused: Vec<f64>,
    pub min_peak_amp: Vec<f64>,
    pub min_peak_gap: Vec<f64>,
    #[serde(default)]
    pub fuse_max_dist: Vec<f64>,
    #[serde(default)]
    pub fuse_min_dist: Vec<f64>,
}

/// Seven values evenly spanning 50% to 150% of `center`, rounded to 1e-4,
/// listed outward from `center` so grid-order ties resolve toward it.
fn bracket(center: f64) -> Vec<f64> {
    [3, 2, 4, 1, 5, 0, 6]
        .into_iter()
        .map(|i| (center * (0.5 + i as f64 / 6.0) * 1e4).round() / 1e4)
        .collect()
}

impl ParamGrid {
    /// Grid bracketing the reference parameters of `alg` by +-50%.
    pub fn default_for(alg: AlgorithmId) -> Self {
        let r = DetectorParams::reference(alg);
        let opt = |v: Option<f64>| v.map(bracket).unwrap_or_default();
        ParamGrid {
            smooth_single: bracket(r.smooth_single),
            smooth_fused: opt(r.smooth_fused),
            min_peak_amp: bracket(r.min_peak_amp).into_iter().map(|a| a.min(1.0)).collect(),
            min_peak_gap: bracket(r.min_peak_gap),
            fuse_max_dist: opt(r.fuse_max_dist),
            fuse_min_dist: opt(r.fuse_min_dist),
        }
    }

    pub fn single(p: &DetectorParams) -> Self {
        let opt = |v: Option<f64>| v.into_iter().collect();
        ParamGrid {
            smooth_single: vec![p.smooth_single],
            smooth_fused: opt(p.smooth_fused),
            min_peak_amp: vec![p.min_peak_amp],
            min_peak_gap: vec![p.min_peak_gap],
            fuse_max_dist: opt(p.fuse_max_dist),
            fuse_min_dist: opt(p.fuse_min_dist),
        }
    }

    /// Feasible grid points for `alg` in lexicographic order of field
    /// declaration, constraint violations removed.
    pub fn points(&self, alg: AlgorithmId) -> Result<Vec<DetectorParams>> {
        Ok(self.indexed_points(alg)?.into_iter().map(|p| p.params).collect())
    }

    fn indexed_points(&self, alg: AlgorithmId) -> Result<Vec<GridPoint>> {
        let field = |name: &'static str, values: &[f64], used: bool| -> Result<Vec<Option<f64>>> {
            if !used {
                return Ok(vec![None]);
            }
            if values.is_empty() {
                return Err(Error::param(name, format!("grid for {alg} needs at least one value")));
            }
            Ok(values.iter().copied().map(Some).collect())
        };
        let low = matches!(alg, AlgorithmId::LowLevelSum | AlgorithmId::LowLevelDiff);
        let fused = field("smooth_fused", &self.smooth_fused, low)?;
        let max_dist = field("fuse_max_dist", &self.fuse_max_dist, alg == AlgorithmId::HighLevelIntersect)?;
        let min_dist = field("fuse_min_dist", &self.fuse_min_dist, alg == AlgorithmId::HighLevelUnion)?;
        field("smooth_single", &self.smooth_single, true)?;
        field("min_peak_amp", &self.min_peak_amp, true)?;
        field("min_peak_gap", &self.min_peak_gap, true)?;

        let mut out = Vec::new();
        for (si, &smooth_single) in self.smooth_single.iter().enumerate() {
            for (fi, &smooth_fused) in fused.iter().enumerate() {
                for &min_peak_amp in &self.min_peak_amp {
                    for (gi, &min_peak_gap) in self.min_peak_gap.iter().enumerate() {
                        for &fuse_max_dist in &max_dist {
                            for &fuse_min_dist in &min_dist {
                                // the intersection window is bounded by the peak gap
                                if fuse_max_dist.is_some_and(|d| d > min_peak_gap) {
                                    continue;
                                }
                                let params = DetectorParams {
                                    smooth_single,
                                    smooth_fused,
                                    min_peak_amp,
                                    min_peak_gap,
                                    fuse_max_dist,
                                    fuse_min_dist,
                                };
                                params.validate_for(alg)?;
                                out.push(GridPoint {
                                    params,
                                    smooth: (si, fi),
                                    gap: gi,
                                });
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InfeasibleGrid(alg));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy)]
struct GridPoint {
    params: DetectorParams,
    smooth: (usize, usize),
    gap: usize,
}

/// Greedy survivors of one normalized signal for every gap of the grid, in
/// descending amplitude order.
struct ThinnedPeaks {
    series: ScalarSeries,
    by_gap: Vec<Vec<usize>>,
}

impl ThinnedPeaks {
    fn new(series: ScalarSeries, gaps: &[f64]) -> Self {
        let order = amplitude_order(series.values(), &local_maxima(series.values()));
        let by_gap = gaps
            .iter()
            .map(|&g| greedy_select(&order, window_samples(g, series.rate())))
            .collect();
        Self { series, by_gap }
    }

    fn surviving(&self, gap: usize, min_amp: f64) -> &[usize] {
        let kept = &self.by_gap[gap];
        let values = self.series.values();
        &kept[..kept.partition_point(|&i| values[i] >= min_amp)]
    }

    fn count(&self, gap: usize, min_amp: f64) -> usize {
        self.surviving(gap, min_amp).len()
    }

    fn peaks(&self, gap: usize, min_amp: f64) -> PeakSet {
        peak_set_from_indices(&self.series, self.surviving(gap, min_amp).to_vec())
    }
}

/// Step count of every grid point on one recording.
fn recording_counts(
    rec: &Recording,
    alg: AlgorithmId,
    grid: &ParamGrid,
    points: &[GridPoint],
    norm: &CorpusNormalization,
) -> Result<Vec<usize>> {
    let ctx = norm.for_algorithm(alg);
    let gaps = &grid.min_peak_gap;
    let side_peaks = |side: Side, window: f64| -> Result<ThinnedPeaks> {
        let normalized = min_max_normalize(&smoothed_magnitude(rec, side, window)?, ctx)?;
        Ok(ThinnedPeaks::new(normalized, gaps))
    };

    let mut counts = Vec::with_capacity(points.len());
    let mut cached: Option<((usize, usize), Vec<ThinnedPeaks>)> = None;
    // high-level fusion inputs for the current (smoothing, amplitude, gap)
    let mut fusion_inputs: Option<FusionInputs> = None;
    for point in points {
        let p = &point.params;
        if cached.as_ref().map(|c| c.0) != Some(point.smooth) {
            let thinned = match alg {
                AlgorithmId::NoFusionLeft => vec![side_peaks(Side::Left, p.smooth_single)?],
                AlgorithmId::NoFusionRight => vec![side_peaks(Side::Right, p.smooth_single)?],
                AlgorithmId::LowLevelSum | AlgorithmId::LowLevelDiff => {
                    let mode = if alg == AlgorithmId::LowLevelSum { LowLevelMode::Sum } else { LowLevelMode::Diff };
                    let fused = fused_signal(rec, mode, p.smooth_single, p.smooth_fused.unwrap_or_default())?;
                    vec![ThinnedPeaks::new(min_max_normalize(&fused, ctx)?, gaps)]
                }
                AlgorithmId::HighLevelIntersect | AlgorithmId::HighLevelUnion => vec![
                    side_peaks(Side::Left, p.smooth_single)?,
                    side_peaks(Side::Right, p.smooth_single)?,
                ],
            };
            cached = Some((point.smooth, thinned));
            fusion_inputs = None;
        }
        let thinned = &cached.as_ref().expect("filled above").1;
        let count = match alg {
            AlgorithmId::HighLevelIntersect | AlgorithmId::HighLevelUnion => {
                let key = (point.smooth, p.min_peak_amp.to_bits(), point.gap);
                if fusion_inputs.as_ref().map(|f| (f.0, f.1, f.2)) != Some(key) {
                    let left = thinned[0].peaks(point.gap, p.min_peak_amp);
                    let right = thinned[1].peaks(point.gap, p.min_peak_amp);
                    let pool = if alg == AlgorithmId::HighLevelUnion { union_pool(&left, &right) } else { Vec::new() };
                    fusion_inputs = Some((key.0, key.1, key.2, left, right, pool));
                }
                let (_, _, _, left, right, pool) = fusion_inputs.as_ref().expect("filled above");
                if alg == AlgorithmId::HighLevelUnion {
                    union_select(pool, p.fuse_min_dist.unwrap_or_default()).len()
                } else {
                    intersect_fuse(left, right, p.fuse_max_dist.unwrap_or_default()).len()
                }
            }
            _ => thinned[0].count(point.gap, p.min_peak_amp),
        };
        counts.push(count);
    }
    Ok(counts)
}

/// Step counts of every grid point on every recording.
#[derive(Debug, Clone)]
pub struct CountTable {
    pub algorithm: AlgorithmId,
    pub points: Vec<DetectorParams>,
    /// `counts[recording][point]`
    pub counts: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
}

impl CountTable {
    pub fn build(
        recordings: &[Recording],
        alg: AlgorithmId,
        grid: &ParamGrid,
        norm: &CorpusNormalization,
    ) -> Result<Self> {
        let labels = recordings
            .iter()
            .map(|r| {
                r.label_count().ok_or_else(|| Error::InvalidRecording {
                    id: r.id.clone(),
                    reason: "tuning needs a ground-truth step count".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let points = grid.indexed_points(alg)?;
        let counts = recordings
            .par_iter()
            .map(|rec| recording_counts(rec, alg, grid, &points, norm))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            algorithm: alg,
            points: points.into_iter().map(|p| p.params).collect(),
            counts,
            labels,
        })
    }

    /// Sum of squared count errors of `point` over `recordings`.
    pub fn sse(&self, point: usize, recordings: &[usize]) -> u64 {
        recordings
            .iter()
            .map(|&r| {
                let d = self.counts[r][point] as i64 - self.labels[r] as i64;
                (d * d) as u64
            })
            .sum()
    }

    /// Grid index with the lowest error on `recordings`; the first wins ties.
    pub fn best(&self, recordings: &[usize]) -> usize {
        let mut best = 0;
        let mut best_sse = u64::MAX;
        for point in 0..self.points.len() {
            let sse = self.sse(point, recordings);
            if sse < best_sse {
                best = point;
                best_sse = sse;
            }
        }
        best
    }

    pub fn rmse(&self, point: usize, recordings: &[usize]) -> f64 {
        (self.sse(point, recordings) as f64 / recordings.len() as f64).sqrt()
    }
}

/// `sqrt(mean((pred - label)^2))`.
pub fn rmse(pred: &[usize], label: &[usize]) -> Result<f64> {
    if pred.len() != label.len() {
        return Err(Error::LengthMismatch {
            what: "predictions vs labels",
            left: pred.len(),
            right: label.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("rmse input"));
    }
    let sse: f64 = pred
        .iter()
        .zip(label)
        .map(|(&p, &l)| {
            let d = p as f64 - l as f64;
            d * d
        })
        .sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Parameters minimizing RMSE on `train`.
pub fn grid_search(
    train: &[Recording],
    alg: AlgorithmId,
    grid: &ParamGrid,
    norm: &CorpusNormalization,
) -> Result<DetectorParams> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let table = CountTable::build(train, alg, grid, norm)?;
    let all: Vec<usize> = (0..train.len()).collect();
    Ok(table.points[table.best(&all)])
}

/// Seeded partition into `k` folds of near-equal size, stratified by task.
pub fn make_folds(dataset: &[Recording], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::param("folds", format!("need at least 2 folds, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::param(
            "folds",
            format!("{k} folds requested for {} recordings", dataset.len()),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dealt = Vec::with_capacity(dataset.len());
    for task in WalkTask::ALL {
        let mut group: Vec<usize> = (0..dataset.len()).filter(|&i| dataset[i].task == task).collect();
        group.shuffle(&mut rng);
        dealt.extend(group);
    }
    let mut folds = vec![Vec::new(); k];
    for (pos, idx) in dealt.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVReport {
    pub algorithm: AlgorithmId,
    pub k: usize,
    pub seed: u64,
    /// Recording ids held out in each fold.
    pub folds: Vec<Vec<String>>,
    pub fold_params: Vec<DetectorParams>,
    pub mean_params: DetectorParams,
    pub fold_train_rmse: Vec<f64>,
    pub fold_test_rmse: Vec<f64>,
    pub mean_test_rmse: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

fn mean_opt(values: impl Iterator<Item = Option<f64>> + Clone) -> Option<f64> {
    if values.clone().any(|v| v.is_none()) {
        return None;
    }
    Some(mean(values.flatten()))
}

/// Field-wise arithmetic mean of parameter sets.
pub fn mean_params(params: &[DetectorParams]) -> DetectorParams {
    let it = params.iter();
    DetectorParams {
        smooth_single: mean(it.clone().map(|p| p.smooth_single)),
        smooth_fused: mean_opt(it.clone().map(|p| p.smooth_fused)),
        min_peak_amp: mean(it.clone().map(|p| p.min_peak_amp)),
        min_peak_gap: mean(it.clone().map(|p| p.min_peak_gap)),
        fuse_max_dist: mean_opt(it.clone().map(|p| p.fuse_max_dist)),
        fuse_min_dist: mean_opt(it.map(|p| p.fuse_min_dist)),
    }
}

/// k-fold cross validation: tune on k-1 folds, score RMSE on the held-out one.
pub fn cross_validate(
    dataset: &[Recording],
    alg: AlgorithmId,
    grid: &ParamGrid,
    k: usize,
    seed: u64,
    norm: &CorpusNormalization,
) -> Result<CVReport> {
    let folds = make_folds(dataset, k, seed)?;
    let table = CountTable::build(dataset, alg, grid, norm)?;
    let mut fold_params = Vec::with_capacity(k);
    let mut fold_train_rmse = Vec::with_capacity(k);
    let mut fold_test_rmse = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        let best = table.best(&train);
        fold_params.push(table.points[best]);
        fold_train_rmse.push(table.rmse(best, &train));
        fold_test_rmse.push(table.rmse(best, test));
    }
    Ok(CVReport {
        algorithm: alg,
        k,
        seed,
        folds: folds
            .iter()
            .map(|fold| fold.iter().map(|&i| dataset[i].id.clone()).collect())
            .collect(),
        mean_params: mean_params(&fold_params),
        mean_test_rmse: mean(fold_test_rmse.iter().copied()),
        fold_params,
        fold_train_rmse,
        fold_test_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::run_detector;
    use crate::simgait::{simulate_corpus, simulate_recording, CorpusSpec, GaitOverrides};

    fn small_corpus(per_task: usize, seed: u64) -> Vec<Recording> {
        let spec = CorpusSpec {
            counts: WalkTask::ALL.into_iter().map(|t| (t, per_task)).collect(),
            ..CorpusSpec::standard(seed)
        };
        simulate_corpus(&spec).unwrap()
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[3, 4], &[3, 4]).unwrap(), 0.0);
        assert_eq!(rmse(&[101], &[100]).unwrap(), 1.0);
        assert!((rmse(&[98, 104], &[100, 100]).unwrap() - 10f64.sqrt()).abs() < 1e-12);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn fold_sizes_and_determinism() {
        let corpus = small_corpus(2, 1);
        let sizes = |n: usize| {
            let mut s: Vec<usize> = make_folds(&corpus[..n], 5, 7).unwrap().iter().map(Vec::len).collect();
            s.sort_unstable_by(|a, b| b.cmp(a));
            s
        };
        assert_eq!(sizes(10), vec![2; 5]);
        assert_eq!(sizes(11), vec![3, 2, 2, 2, 2]);
        assert_eq!(make_folds(&corpus, 5, 3).unwrap(), make_folds(&corpus, 5, 3).unwrap());
        assert!(make_folds(&corpus[..4], 5, 3).is_err());
        assert!(make_folds(&corpus, 1, 3).is_err());

        let folds = make_folds(&corpus, 4, 11).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..corpus.len()).collect::<Vec<_>>());
    }

    #[test]
    fn folds_are_stratified() {
        let corpus = small_corpus(5, 2);
        for fold in make_folds(&corpus, 5, 0).unwrap() {
            for task in WalkTask::ALL {
                assert_eq!(fold.iter().filter(|&&i| corpus[i].task == task).count(), 1);
            }
        }
    }

    #[test]
    fn default_grids_bracket_reference() {
        for alg in AlgorithmId::ALL {
            let grid = ParamGrid::default_for(alg);
            let r = DetectorParams::reference(alg);
            assert_eq!(grid.min_peak_gap.len(), 7);
            assert_eq!(grid.min_peak_gap[0], r.min_peak_gap);
            let mut sorted = grid.min_peak_gap.clone();
            sorted.sort_by(f64::total_cmp);
            assert!((sorted[0] - 0.5 * r.min_peak_gap).abs() < 1e-4);
            assert!((sorted[6] - 1.5 * r.min_peak_gap).abs() < 1e-4);
            // listed outward from the reference value
            let dist: Vec<f64> = grid.min_peak_gap.iter().map(|g| (g - r.min_peak_gap).abs()).collect();
            assert!(dist.windows(2).all(|w| w[0] <= w[1] + 1e-9));
            let points = grid.points(alg).unwrap();
            assert!(!points.is_empty());
            for p in points {
                p.validate_for(alg).unwrap();
            }
        }
    }

    #[test]
    fn intersect_grid_respects_bound() {
        let grid = ParamGrid {
            smooth_single: vec![0.02],
            smooth_fused: vec![],
            min_peak_amp: vec![0.2],
            min_peak_gap: vec![0.2, 0.3],
            fuse_max_dist: vec![0.1, 0.25, 0.35],
            fuse_min_dist: vec![],
        };
        let points = grid.points(AlgorithmId::HighLevelIntersect).unwrap();
        let pairs: Vec<_> = points.iter().map(|p| (p.min_peak_gap, p.fuse_max_dist.unwrap())).collect();
        assert_eq!(pairs, vec![(0.2, 0.1), (0.3, 0.1), (0.3, 0.25)]);
        let infeasible = ParamGrid {
            min_peak_gap: vec![0.1],
            fuse_max_dist: vec![0.2],
            ..grid.clone()
        };
        assert!(matches!(
            infeasible.points(AlgorithmId::HighLevelIntersect),
            Err(Error::InfeasibleGrid(_))
        ));
        let missing = ParamGrid {
            fuse_min_dist: vec![],
            ..grid
        };
        assert!(missing.points(AlgorithmId::HighLevelUnion).is_err());
    }

    fn small_grid(alg: AlgorithmId) -> ParamGrid {
        let r = DetectorParams::reference(alg);
        let pick = |v: Vec<f64>| vec![v[0], v[3], v[6]];
        let full = ParamGrid::default_for(alg);
        ParamGrid {
            smooth_single: pick(full.smooth_single),
            smooth_fused: if r.smooth_fused.is_some() { pick(full.smooth_fused) } else { vec![] },
            min_peak_amp: pick(full.min_peak_amp),
            min_peak_gap: pick(full.min_peak_gap),
            fuse_max_dist: if r.fuse_max_dist.is_some() { pick(full.fuse_max_dist) } else { vec![] },
            fuse_min_dist: if r.fuse_min_dist.is_some() { pick(full.fuse_min_dist) } else { vec![] },
        }
    }

    #[test]
    fn count_table_matches_pipelines() {
        let corpus: Vec<Recording> = small_corpus(1, 5).into_iter().take(4).collect();
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        for alg in AlgorithmId::ALL {
            let grid = small_grid(alg);
            let table = CountTable::build(&corpus, alg, &grid, &norm).unwrap();
            for (r, rec) in corpus.iter().enumerate() {
                for (p, params) in table.points.iter().enumerate() {
                    let direct = run_detector(alg, rec, params, &norm).unwrap().count;
                    assert_eq!(table.counts[r][p], direct, "{alg} rec {r} point {params:?}");
                }
            }
        }
    }

    #[test]
    fn grid_search_is_exhaustive_minimum() {
        let corpus = small_corpus(1, 6);
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        let alg = AlgorithmId::HighLevelUnion;
        let grid = small_grid(alg);
        let chosen = grid_search(&corpus, alg, &grid, &norm).unwrap();
        let points = grid.points(alg).unwrap();
        assert!(points.contains(&chosen));
        let labels: Vec<usize> = corpus.iter().map(|r| r.label_count().unwrap()).collect();
        let score = |p: &DetectorParams| {
            let pred: Vec<usize> = corpus.iter().map(|r| run_detector(alg, r, p, &norm).unwrap().count).collect();
            rmse(&pred, &labels).unwrap()
        };
        let best = score(&chosen);
        let first_best = points.iter().find(|p| score(p) <= best).unwrap();
        assert_eq!(first_best, &chosen);
        for p in &points {
            assert!(best <= score(p));
        }

        let single = ParamGrid::single(&points[5]);
        assert_eq!(grid_search(&corpus, alg, &single, &norm).unwrap(), points[5]);
    }

    #[test]
    fn ties_resolve_to_first_point() {
        let corpus = small_corpus(1, 6);
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        // amplitudes above every normalized peak: all points count zero
        let grid = ParamGrid {
            smooth_single: vec![0.03],
            smooth_fused: vec![],
            min_peak_amp: vec![0.999, 1.0],
            min_peak_gap: vec![0.3, 0.2],
            fuse_max_dist: vec![],
            fuse_min_dist: vec![],
        };
        let chosen = grid_search(&corpus, AlgorithmId::NoFusionLeft, &grid, &norm).unwrap();
        assert_eq!((chosen.min_peak_amp, chosen.min_peak_gap), (0.999, 0.3));
    }

    #[test]
    fn cross_validation_report() {
        let corpus = small_corpus(2, 8);
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        let alg = AlgorithmId::NoFusionRight;
        let grid = small_grid(alg);
        let report = cross_validate(&corpus, alg, &grid, 4, 3, &norm).unwrap();
        assert_eq!(report.fold_params.len(), 4);
        assert_eq!(report.fold_test_rmse.len(), 4);
        let gaps: f64 = report.fold_params.iter().map(|p| p.min_peak_gap).sum();
        assert!((report.mean_params.min_peak_gap - gaps / 4.0).abs() < 1e-12);
        assert_eq!(report.mean_params.smooth_fused, None);
        assert_eq!(report, cross_validate(&corpus, alg, &grid, 4, 3, &norm).unwrap());

        // held-out RMSE of each fold equals a direct re-evaluation
        let ids: Vec<&str> = corpus.iter().map(|r| r.id.as_str()).collect();
        for (f, fold) in report.folds.iter().enumerate() {
            let recs: Vec<&Recording> = fold.iter().map(|id| &corpus[ids.iter().position(|x| x == id).unwrap()]).collect();
            let pred: Vec<usize> = recs
                .iter()
                .map(|r| run_detector(alg, r, &report.fold_params[f], &norm).unwrap().count)
                .collect();
            let labels: Vec<usize> = recs.iter().map(|r| r.label_count().unwrap()).collect();
            assert!((rmse(&pred, &labels).unwrap() - report.fold_test_rmse[f]).abs() < 1e-12);
        }
    }

    #[test]
    fn perfect_point_gives_zero_error() {
        // a grid whose only point is perfect on noiseless comfortable walks
        let corpus: Vec<Recording> = (0..5)
            .map(|i| {
                let id = format!("c{i}");
                simulate_recording(WalkTask::ComfortablePace, &GaitOverrides::noiseless(), &id, "s", i).unwrap()
            })
            .collect();
        let norm = CorpusNormalization::fit(&corpus).unwrap();
        let alg = AlgorithmId::HighLevelUnion;
        let p = DetectorParams::reference(alg);
        for rec in &corpus {
            assert_eq!(run_detector(alg, rec, &p, &norm).unwrap().count, rec.label_count().unwrap());
        }
        let report = cross_validate(&corpus, alg, &ParamGrid::single(&p), 5, 0, &norm).unwrap();
        assert!(report.fold_params.iter().all(|q| *q == p));
        assert_eq!(report.mean_test_rmse, 0.0);
    }
}
