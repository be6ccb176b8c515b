//! File-level session steps: simulate, tune, detect, evaluate, report.
//!
//! Each step reads what the previous one wrote and emits deterministic
//! files: identical inputs give byte-identical outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    cadence_outlier_filter, evaluate_detections, phase_offsets_by_side, DetectionOutcomes, ErrorSummary,
    OutlierFilter, PhaseSummary, TaskTable,
};
use crate::fusion::{run_detector, CorpusNormalization};
use crate::io::{create_dir, load_corpus, to_json_pretty, write_bytes, write_corpus, Config, ParamsFile, SessionManifest};
use crate::simgait::{simulate_corpus, CorpusSpec};
use crate::tuning::{cross_validate, CVReport};
use crate::types::{AlgorithmId, PeakSet, Recording};

pub const PARAMS_FILE: &str = "params.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ERRORS_FILE: &str = "errors_long.csv";
pub const PHASE_FILE: &str = "phase_offsets_long.csv";

pub fn cv_file(alg: AlgorithmId) -> String {
    format!("cv_{alg}.json")
}

pub fn detections_file(alg: AlgorithmId) -> String {
    format!("detections_{alg}.csv")
}

fn session_err(msg: impl Into<String>) -> Error {
    Error::Session(msg.into())
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish_csv(path: &Path, writer: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = writer.into_inner().map_err(|e| session_err(format!("{}: {e}", path.display())))?;
    write_bytes(path, &bytes)
}

fn csv_row(writer: &mut csv::Writer<Vec<u8>>, path: &Path, fields: &[String]) -> Result<()> {
    writer.write_record(fields).map_err(|e| session_err(format!("{}: {e}", path.display())))
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Simulates a corpus and writes it with its fitted normalization.
pub fn simulate(spec: &CorpusSpec, out: &Path) -> Result<SessionManifest> {
    let corpus = simulate_corpus(spec)?;
    if corpus.is_empty() {
        return Err(session_err("the corpus spec requests no recordings"));
    }
    let norm = CorpusNormalization::fit(&corpus)?;
    write_corpus(out, &corpus, &norm, Some(spec))
}

/// Cross-validates each algorithm, writing `cv_<alg>.json` and the mean
/// parameters of every algorithm to `params.json`.
pub fn tune(
    corpus_dir: &Path,
    out: &Path,
    config: &Config,
    algorithms: &[AlgorithmId],
) -> Result<BTreeMap<AlgorithmId, CVReport>> {
    let (manifest, corpus) = load_corpus(corpus_dir)?;
    create_dir(out)?;
    let mut reports = BTreeMap::new();
    for &alg in algorithms {
        let grid = config.grid_for(alg);
        let report = cross_validate(
            &corpus,
            alg,
            &grid,
            config.tuning.folds,
            config.tuning.seed,
            &manifest.normalization,
        )?;
        write_bytes(&out.join(cv_file(alg)), to_json_pretty(&report)?.as_bytes())?;
        reports.insert(alg, report);
    }
    let params: ParamsFile = reports.iter().map(|(&a, r)| (a, r.mean_params)).collect();
    write_bytes(&out.join(PARAMS_FILE), to_json_pretty(&params)?.as_bytes())?;
    Ok(reports)
}

/// Runs each algorithm over the corpus, writing `detections_<alg>.csv`.
/// A recording the detector rejects becomes a row with an error message.
pub fn detect(
    corpus_dir: &Path,
    out: &Path,
    params: &ParamsFile,
    algorithms: &[AlgorithmId],
) -> Result<BTreeMap<AlgorithmId, PathBuf>> {
    let (manifest, corpus) = load_corpus(corpus_dir)?;
    create_dir(out)?;
    let mut written = BTreeMap::new();
    for &alg in algorithms {
        let p = params.get(&alg).ok_or_else(|| {
            session_err(format!("no parameters for `{alg}`; tune it first or add it to the parameter file"))
        })?;
        p.validate_for(alg)?;
        let outcomes: Vec<_> = corpus
            .par_iter()
            .map(|rec| run_detector(alg, rec, p, &manifest.normalization).map(|d| d.steps))
            .collect();
        let path = out.join(detections_file(alg));
        let mut w = csv_writer();
        csv_row(
            &mut w,
            &path,
            &["recording_id", "algorithm", "count", "times", "amplitudes", "error"].map(String::from),
        )?;
        for (rec, outcome) in corpus.iter().zip(&outcomes) {
            let row = match outcome {
                Ok(steps) => [
                    rec.id.clone(),
                    alg.to_string(),
                    steps.len().to_string(),
                    join(steps.times()),
                    join(steps.amplitudes()),
                    String::new(),
                ],
                Err(e) => [rec.id.clone(), alg.to_string(), String::new(), String::new(), String::new(), e.to_string()],
            };
            csv_row(&mut w, &path, &row)?;
        }
        finish_csv(&path, w)?;
        written.insert(alg, path);
    }
    Ok(written)
}

fn parse_list(path: &Path, line: u64, field: &str) -> Result<Vec<f64>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(';')
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::format(path, format!("line {line}: `{s}` is not a number")))
        })
        .collect()
}

/// Reads a detections CSV, keyed by recording id.
pub fn read_detections(
    path: &Path,
    alg: AlgorithmId,
) -> Result<BTreeMap<String, std::result::Result<PeakSet, String>>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::format(path, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::format(path, format!("line 1: {e}")))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(path, format!("line 1: missing column `{name}`")))
    };
    let [id_c, alg_c, count_c, times_c, amps_c, err_c] =
        ["recording_id", "algorithm", "count", "times", "amplitudes", "error"].map(col);
    let (id_c, alg_c, count_c, times_c, amps_c, err_c) = (id_c?, alg_c?, count_c?, times_c?, amps_c?, err_c?);
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        let bad = |msg: String| Error::format(path, format!("line {line}: {msg}"));
        if field(alg_c) != alg.name() {
            return Err(bad(format!("algorithm `{}` in a file for `{alg}`", field(alg_c))));
        }
        let outcome = if field(err_c).is_empty() {
            let times = parse_list(path, line, field(times_c))?;
            let amps = parse_list(path, line, field(amps_c))?;
            let steps = PeakSet::new(times, amps).map_err(|e| bad(e.to_string()))?;
            if field(count_c) != steps.len().to_string() {
                return Err(bad(format!("count `{}` disagrees with {} listed times", field(count_c), steps.len())));
            }
            Ok(steps)
        } else {
            Err(field(err_c).to_string())
        };
        if out.insert(field(id_c).to_string(), outcome).is_some() {
            return Err(bad(format!("duplicate recording `{}`", field(id_c))));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub recordings: usize,
    pub outlier_filter: OutlierFilter,
    pub summaries: Vec<ErrorSummary>,
    pub per_task: TaskTable,
    pub phase: Vec<PhaseSummary>,
}

/// Scores the detection files in `results` against the corpus ground truth.
/// `algorithms = None` evaluates every detection file present.
pub fn evaluate(
    corpus_dir: &Path,
    results: &Path,
    algorithms: Option<&[AlgorithmId]>,
    outlier_frac: f64,
    phase_by_side: bool,
) -> Result<SessionSummary> {
    let algorithms: Vec<AlgorithmId> = match algorithms {
        Some(a) => a.to_vec(),
        None => AlgorithmId::ALL
            .into_iter()
            .filter(|&a| results.join(detections_file(a)).is_file())
            .collect(),
    };
    let hint = format!(
        "run `wristfuse detect --corpus {} --out {}` first",
        corpus_dir.display(),
        results.display()
    );
    if algorithms.is_empty() {
        return Err(session_err(format!(
            "no detection results (detections_<alg>.csv) in `{}`; {hint}",
            results.display()
        )));
    }
    for &alg in &algorithms {
        let path = results.join(detections_file(alg));
        if !path.is_file() {
            return Err(session_err(format!("{} not found; {hint}", path.display())));
        }
    }
    let (_, corpus) = load_corpus(corpus_dir)?;
    let filter = cadence_outlier_filter(&corpus, outlier_frac)?;
    let kept = filter.apply(&corpus);

    let mut detections = DetectionOutcomes::new();
    for &alg in &algorithms {
        let path = results.join(detections_file(alg));
        let mut by_id = read_detections(&path, alg)?;
        let outcomes = kept
            .iter()
            .map(|rec| {
                by_id.remove(&rec.id).ok_or_else(|| {
                    session_err(format!("{} has no row for recording `{}`; {hint}", path.display(), rec.id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        detections.insert(alg, outcomes);
    }
    let eval = evaluate_detections(&kept, &detections, &algorithms)?;
    write_errors_csv(&results.join(ERRORS_FILE), &eval.rows, &kept)?;
    write_phase_csv(&results.join(PHASE_FILE), &kept, &detections, phase_by_side)?;
    let summary = SessionSummary {
        recordings: kept.len(),
        outlier_filter: filter,
        summaries: eval.summaries,
        per_task: eval.per_task,
        phase: eval.phase_summaries,
    };
    write_bytes(&results.join(SUMMARY_FILE), to_json_pretty(&summary)?.as_bytes())?;
    Ok(summary)
}

fn write_errors_csv(path: &Path, rows: &[crate::eval::EvalRow], kept: &[Recording]) -> Result<()> {
    let mut w = csv_writer();
    csv_row(
        &mut w,
        path,
        &[
            "recording_id",
            "subject_id",
            "task",
            "category",
            "algorithm",
            "label",
            "self_count",
            "predicted",
            "percent_error",
            "error",
        ]
        .map(String::from),
    )?;
    let self_counts: BTreeMap<&str, Option<u32>> = kept.iter().map(|r| (r.id.as_str(), r.self_count)).collect();
    for r in rows {
        csv_row(
            &mut w,
            path,
            &[
                r.recording_id.clone(),
                r.subject_id.clone(),
                r.task.to_string(),
                r.task.category().name().to_string(),
                r.algorithm.to_string(),
                r.label.to_string(),
                opt(self_counts.get(r.recording_id.as_str()).copied().flatten()),
                opt(r.predicted),
                opt(r.percent_error),
                r.error.clone().unwrap_or_default(),
            ],
        )?;
    }
    finish_csv(path, w)
}

fn write_phase_csv(path: &Path, kept: &[Recording], detections: &DetectionOutcomes, by_side: bool) -> Result<()> {
    let mut header = vec!["recording_id", "task", "algorithm", "time", "dt_heel", "dt_toe"];
    if by_side {
        header.extend(["dt_heel_left", "dt_toe_left", "dt_heel_right", "dt_toe_right"]);
    }
    let mut w = csv_writer();
    csv_row(&mut w, path, &header.iter().map(|s| s.to_string()).collect::<Vec<_>>())?;
    for (&alg, outcomes) in detections {
        for (rec, outcome) in kept.iter().zip(outcomes) {
            let (Ok(steps), Some(gt)) = (outcome, rec.ground_truth.as_ref()) else {
                continue;
            };
            let pooled = crate::eval::phase_offsets(steps, gt)?;
            let sides = if by_side { Some(phase_offsets_by_side(steps, gt)?) } else { None };
            for (i, &t) in steps.times().iter().enumerate() {
                let mut row = vec![
                    rec.id.clone(),
                    rec.task.to_string(),
                    alg.to_string(),
                    t.to_string(),
                    pooled.heel[i].to_string(),
                    pooled.toe[i].to_string(),
                ];
                if let Some((l, r)) = &sides {
                    row.extend([l.heel[i], l.toe[i], r.heel[i], r.toe[i]].map(|v| v.to_string()));
                }
                csv_row(&mut w, path, &row)?;
            }
        }
    }
    finish_csv(path, w)
}

fn fmt_cell(d: Option<&crate::eval::Distribution>) -> String {
    match d {
        Some(d) => format!("{:+.1} [{:+.1}, {:+.1}]", d.median, d.q1, d.q3),
        None => "-".to_string(),
    }
}

/// Per-task table of percent errors (median [Q1, Q3]) with overall accuracy
/// rows, read from `summary.json`.
pub fn report(results: &Path) -> Result<String> {
    let path = results.join(SUMMARY_FILE);
    if !path.is_file() {
        return Err(session_err(format!(
            "{} not found; run `wristfuse evaluate --results {}` first",
            path.display(),
            results.display()
        )));
    }
    let summary: SessionSummary = crate::io::read_json(&path)?;
    let table = &summary.per_task;
    let width = 22;
    let mut out = String::new();
    let _ = writeln!(out, "Step count error (%), median [Q1, Q3], {} recordings", summary.recordings);
    if !summary.outlier_filter.removed.is_empty() {
        let _ = writeln!(
            out,
            "cadence outlier filter removed {} recording(s)",
            summary.outlier_filter.removed.len()
        );
    }
    let _ = write!(out, "{:<18}{:<18}", "task", "category");
    for alg in &table.algorithms {
        let _ = write!(out, "{:>width$}", alg.name());
    }
    out.push('\n');
    for row in &table.rows {
        let _ = write!(out, "{:<18}{:<18}", row.task.name(), row.task.category().name());
        for cell in &row.cells {
            let _ = write!(out, "{:>width$}", fmt_cell(cell.as_ref()));
        }
        out.push('\n');
    }
    let summaries: BTreeMap<AlgorithmId, &ErrorSummary> = summary.summaries.iter().map(|s| (s.algorithm, s)).collect();
    let mut footer = |label: &str, f: &dyn Fn(&ErrorSummary) -> String| {
        let _ = write!(out, "{:<36}", label);
        for alg in &table.algorithms {
            let _ = write!(out, "{:>width$}", summaries.get(alg).map_or("-".to_string(), |s| f(s)));
        }
        out.push('\n');
    };
    footer("all tasks", &|s| fmt_cell(s.percent_error.as_ref()));
    footer("mean |error| (%)", &|s| {
        s.percent_error.as_ref().map_or("-".into(), |d| format!("{:.2}", d.mean_abs))
    });
    footer("pearson r", &|s| s.pearson_r.map_or("-".into(), |r| format!("{r:.3}")));
    footer("failed recordings", &|s| s.failures.to_string());
    Ok(out)
}
