//! On-disk formats: per-sensor signal CSVs, a JSON sidecar per recording,
//! the corpus manifest, and the TOML configuration file.
//!
//! A corpus directory is complete only once `manifest.json` exists; it is
//! written last.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::CorpusNormalization;
use crate::simgait::CorpusSpec;
use crate::tuning::{CVReport, ParamGrid};
use crate::types::{AlgorithmId, DetectorParams, GroundTruth, Recording, TriaxialSeries, WalkTask};

pub const FORMAT_VERSION: u32 = 1;
pub const CONFIG_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

const SIGNAL_HEADER: [&str; 4] = ["t", "ax", "ay", "az"];

/// Relative paths of one recording's files inside a corpus directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingFiles {
    pub left: String,
    pub right: String,
    pub sidecar: String,
}

impl RecordingFiles {
    pub fn for_id(id: &str) -> Self {
        Self {
            left: format!("{id}_left.csv"),
            right: format!("{id}_right.csv"),
            sidecar: format!("{id}.json"),
        }
    }
}

/// Metadata and ground truth stored next to the signal files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sidecar {
    pub id: String,
    pub subject_id: String,
    pub task: WalkTask,
    pub duration: f64,
    pub rate: f64,
    pub self_count: Option<u32>,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub subject_id: String,
    pub task: WalkTask,
    pub duration: f64,
    pub label_count: Option<usize>,
    pub self_count: Option<u32>,
    pub files: RecordingFiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionManifest {
    pub format_version: u32,
    /// Spec the corpus was simulated from, if any.
    pub corpus_spec: Option<CorpusSpec>,
    pub normalization: CorpusNormalization,
    pub recordings: Vec<ManifestEntry>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes via a temporary sibling and a rename, so readers never observe
/// a partial file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    write_bytes(&tmp, bytes)?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Session(format!("serializing JSON: {e}")))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_bytes(path, to_json_pretty(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, format!("line {}: {e}", e.line())))
}

/// Signal CSV text: header row, then one row per sample at full precision.
pub fn signal_csv(series: &TriaxialSeries) -> String {
    let mut out = String::with_capacity(series.len() * 64);
    out.push_str(&SIGNAL_HEADER.join(","));
    out.push('\n');
    for i in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            series.time_at(i),
            series.x()[i],
            series.y()[i],
            series.z()[i]
        );
    }
    out
}

/// Parses a signal CSV sampled at `rate`. Columns may appear in any order;
/// timestamps must increase and agree with `rate` to within a microsecond.
pub fn parse_signal_csv(path: &Path, text: &str, rate: f64) -> Result<TriaxialSeries> {
    let err = |line: u64, msg: String| Error::format(path, format!("line {line}: {msg}"));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let mut cols = [0usize; 4];
    for (slot, name) in cols.iter_mut().zip(SIGNAL_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| err(1, format!("missing column `{name}`")))?;
    }
    let (mut t, mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let mut row = [0.0; 4];
        for ((value, &col), name) in row.iter_mut().zip(&cols).zip(SIGNAL_HEADER) {
            let field = record.get(col).ok_or_else(|| err(line, format!("missing `{name}` field")))?;
            *value = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("`{name}` is not a finite number: `{field}`")))?;
        }
        if let Some(&prev) = t.last() {
            if !(row[0] > prev) {
                return Err(err(line, format!("timestamp {} does not increase (previous {prev})", row[0])));
            }
        }
        let t0 = t.first().copied().unwrap_or(row[0]);
        let expected = t0 + t.len() as f64 / rate;
        if (row[0] - expected).abs() > 1e-6 {
            return Err(err(
                line,
                format!("timestamp {} off the {rate} Hz grid (expected {expected})", row[0]),
            ));
        }
        t.push(row[0]);
        x.push(row[1]);
        y.push(row[2]);
        z.push(row[3]);
    }
    if t.is_empty() {
        return Err(err(2, "no samples".into()));
    }
    TriaxialSeries::new(rate, t[0], x, y, z).map_err(|e| Error::format(path, e.to_string()))
}

/// Writes the two signal CSVs and the sidecar of `rec` into `dir`.
pub fn save_recording(dir: &Path, rec: &Recording) -> Result<RecordingFiles> {
    if !valid_id(&rec.id) {
        return Err(Error::InvalidRecording {
            id: rec.id.clone(),
            reason: "ids used as file names may contain only ASCII letters, digits, `_`, `-` and `.`".into(),
        });
    }
    let files = RecordingFiles::for_id(&rec.id);
    write_bytes(&dir.join(&files.left), signal_csv(&rec.left).as_bytes())?;
    write_bytes(&dir.join(&files.right), signal_csv(&rec.right).as_bytes())?;
    let sidecar = Sidecar {
        id: rec.id.clone(),
        subject_id: rec.subject_id.clone(),
        task: rec.task,
        duration: rec.duration,
        rate: rec.rate(),
        self_count: rec.self_count,
        ground_truth: rec.ground_truth.clone(),
    };
    write_json(&dir.join(&files.sidecar), &sidecar)?;
    Ok(files)
}

/// Loads and validates a recording written by [`save_recording`].
pub fn load_recording(dir: &Path, files: &RecordingFiles) -> Result<Recording> {
    let sidecar_path = dir.join(&files.sidecar);
    let meta: Sidecar = read_json(&sidecar_path)?;
    if !(meta.rate.is_finite() && meta.rate > 0.0) {
        return Err(Error::format(&sidecar_path, format!("rate must be positive, got {}", meta.rate)));
    }
    let load = |name: &str| {
        let path = dir.join(name);
        parse_signal_csv(&path, &read_text(&path)?, meta.rate)
    };
    let left = load(&files.left)?;
    let right = load(&files.right)?;
    Recording::new(
        meta.id,
        meta.subject_id,
        meta.task,
        left,
        right,
        meta.duration,
        meta.ground_truth,
        meta.self_count,
    )
    .map_err(|e| Error::format(&sidecar_path, e.to_string()))
}

/// Writes every recording, then the manifest.
pub fn write_corpus(
    dir: &Path,
    recordings: &[Recording],
    normalization: &CorpusNormalization,
    corpus_spec: Option<&CorpusSpec>,
) -> Result<SessionManifest> {
    create_dir(dir)?;
    let mut seen = std::collections::BTreeSet::new();
    if let Some(dup) = recordings.iter().find(|r| !seen.insert(r.id.as_str())) {
        return Err(Error::InvalidRecording {
            id: dup.id.clone(),
            reason: "duplicate recording id".into(),
        });
    }
    let entries = recordings
        .par_iter()
        .map(|rec| {
            Ok(ManifestEntry {
                id: rec.id.clone(),
                subject_id: rec.subject_id.clone(),
                task: rec.task,
                duration: rec.duration,
                label_count: rec.label_count(),
                self_count: rec.self_count,
                files: save_recording(dir, rec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = SessionManifest {
        format_version: FORMAT_VERSION,
        corpus_spec: corpus_spec.cloned(),
        normalization: *normalization,
        recordings: entries,
    };
    write_atomic(&dir.join(MANIFEST_FILE), to_json_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

/// Reads and checks the manifest: version, id uniqueness, and that every
/// referenced file exists.
pub fn read_manifest(dir: &Path) -> Result<SessionManifest> {
    let path = dir.join(MANIFEST_FILE);
    if !path.is_file() {
        return Err(Error::Session(format!(
            "{} not found: `{}` is not a complete corpus (run `simulate` to create one)",
            path.display(),
            dir.display()
        )));
    }
    let value: serde_json::Value = read_json(&path)?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(v) if v == FORMAT_VERSION as u64 => {}
        Some(v) => {
            return Err(Error::format(
                &path,
                format!("format version {v} is not supported (expected {FORMAT_VERSION})"),
            ))
        }
        None => return Err(Error::format(&path, "missing `format_version`")),
    }
    let manifest: SessionManifest =
        serde_json::from_value(value).map_err(|e| Error::format(&path, e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    for entry in &manifest.recordings {
        if !seen.insert(entry.id.as_str()) {
            return Err(Error::format(&path, format!("duplicate recording id `{}`", entry.id)));
        }
        for name in [&entry.files.left, &entry.files.right, &entry.files.sidecar] {
            if !dir.join(name).is_file() {
                return Err(Error::format(
                    &path,
                    format!("recording `{}` references missing file `{name}`", entry.id),
                ));
            }
        }
    }
    Ok(manifest)
}

/// Loads every recording of a corpus in manifest order. All recordings are
/// validated before any is returned.
pub fn load_corpus(dir: &Path) -> Result<(SessionManifest, Vec<Recording>)> {
    let manifest = read_manifest(dir)?;
    let recordings = manifest
        .recordings
        .par_iter()
        .map(|entry| {
            let rec = load_recording(dir, &entry.files)?;
            let consistent = rec.id == entry.id
                && rec.subject_id == entry.subject_id
                && rec.task == entry.task
                && rec.duration == entry.duration
                && rec.label_count() == entry.label_count
                && rec.self_count == entry.self_count;
            if !consistent {
                return Err(Error::format(
                    dir.join(&entry.files.sidecar),
                    format!("metadata disagrees with the manifest entry for `{}`", entry.id),
                ));
            }
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, recordings))
}

/// Detector parameters per algorithm, as written by `tune`.
pub type ParamsFile = BTreeMap<AlgorithmId, DetectorParams>;

/// Reads a parameter file: either an algorithm-keyed map of parameters or a
/// single cross-validation report, whose mean parameters are used.
pub fn read_params(path: &Path) -> Result<ParamsFile> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("mean_params").is_some() {
        let report: CVReport = serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))?;
        return Ok([(report.algorithm, report.mean_params)].into_iter().collect());
    }
    let params: ParamsFile = serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))?;
    for (&alg, p) in &params {
        p.validate_for(alg).map_err(|e| Error::format(path, e.to_string()))?;
    }
    Ok(params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningConfig {
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_folds() -> usize {
    5
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            folds: default_folds(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Fraction of recordings dropped by the cadence outlier filter.
    #[serde(default)]
    pub outlier_frac: f64,
    /// Also report gait-phase offsets against each foot separately.
    #[serde(default)]
    pub phase_by_side: bool,
}

/// Declarative session configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub corpus: Option<CorpusSpec>,
    /// Search grids; algorithms without an entry use the default grid.
    #[serde(default)]
    pub grids: BTreeMap<AlgorithmId, ParamGrid>,
    /// Fixed parameters used by `detect` when no parameter file is given.
    #[serde(default)]
    pub params: ParamsFile,
    #[serde(default)]
    pub tuning: TuningConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            corpus: None,
            grids: BTreeMap::new(),
            params: BTreeMap::new(),
            tuning: TuningConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl Config {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let value: toml::Table = toml::from_str(text).map_err(|e| Error::format(path, toml_message(text, &e)))?;
        match value.get("version").and_then(|v| v.as_integer()) {
            Some(v) if v == CONFIG_VERSION as i64 => {}
            Some(v) => {
                return Err(Error::format(
                    path,
                    format!("config version {v} is not supported (expected {CONFIG_VERSION})"),
                ))
            }
            None => return Err(Error::format(path, "missing integer `version` key")),
        }
        let config: Config = toml::from_str(text).map_err(|e| Error::format(path, toml_message(text, &e)))?;
        for (&alg, p) in &config.params {
            p.validate_for(alg).map_err(|e| Error::format(path, e.to_string()))?;
        }
        let outlier = config.evaluation.outlier_frac;
        if !(0.0..1.0).contains(&outlier) {
            return Err(Error::format(path, format!("evaluation.outlier_frac must lie in [0, 1), got {outlier}")));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    pub fn grid_for(&self, alg: AlgorithmId) -> ParamGrid {
        self.grids.get(&alg).cloned().unwrap_or_else(|| ParamGrid::default_for(alg))
    }
}

fn toml_message(text: &str, e: &toml::de::Error) -> String {
    match e.span() {
        Some(span) => {
            let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
            format!("line {line}: {}", e.message())
        }
        None => e.message().to_string(),
    }
}
