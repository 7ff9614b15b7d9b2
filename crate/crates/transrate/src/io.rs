//! File formats, manifest handling, and report rendering.
//!
//! Feature matrices travel either as raw binary (`TRFM` magic, little-endian
//! header, binary32 payload, testable byte for byte) or as CSV with an
//! optional header row. Labels are one value per line. Every float a report
//! emits is printed with 17 significant digits, so reading it back recovers
//! the exact binary64 value.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{BaselineError, PseudoLabelMatrix};
use crate::coding::{LabelVector, ScoreError, TransferScore};
use crate::linalg::{FeatureMatrix, LinalgError};
use crate::metrics::RankReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes; not a raw feature file")]
    BadMagic,
    #[error("unsupported format version {0}")]
    VersionUnsupported(u32),
    #[error("file length does not match the header")]
    TruncatedFile,
    #[error("csv row {row} has {cols} columns, expected {expected}")]
    RaggedCsv { row: usize, cols: usize, expected: usize },
    #[error("value at row {row}, column {col} is not a finite number")]
    NonFiniteValue { row: usize, col: usize },
    #[error("line {line}: expected a nonnegative integer class id")]
    NonInteger { line: usize },
    #[error("line {line}: expected a finite number")]
    NonFinite { line: usize },
    #[error("file contains no values")]
    EmptyFile,
    #[error("manifest: {0}")]
    BadManifest(String),
    #[error("duplicate model name {0}")]
    DuplicateModelName(String),
    #[error("model {0} has no labels path and the manifest declares no shared one")]
    MissingLabels(String),
    #[error("accuracy file line {line} is malformed")]
    BadAccuracy { line: usize },
    #[error("manifest is not valid json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matrix(#[from] LinalgError),
    #[error(transparent)]
    Labels(#[from] ScoreError),
    #[error(transparent)]
    PseudoLabels(#[from] BaselineError),
}

/// On-disk encodings for feature matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    RawBinary,
    Csv,
}

/// Picks the format from the file extension: `.csv` (any case) is CSV,
/// everything else raw binary.
pub fn detect_format(path: &Path) -> FeatureFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
        _ => FeatureFormat::RawBinary,
    }
}

const MAGIC: &[u8; 4] = b"TRFM";
const VERSION: u32 = 1;

fn parse_raw(buf: &[u8]) -> Result<(Vec<f64>, usize, usize), IoError> {
    if buf.len() < 4 {
        return Err(IoError::TruncatedFile);
    }
    if &buf[..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    if buf.len() < 24 {
        return Err(IoError::TruncatedFile);
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(IoError::VersionUnsupported(version));
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap());
    let d = u64::from_le_bytes(buf[16..24].try_into().unwrap());
    let n = usize::try_from(n).map_err(|_| IoError::TruncatedFile)?;
    let d = usize::try_from(d).map_err(|_| IoError::TruncatedFile)?;
    let count = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or(IoError::TruncatedFile)?;
    if buf.len() != 24 + count {
        return Err(IoError::TruncatedFile);
    }
    let mut data = Vec::with_capacity(n * d);
    for (idx, chunk) in buf[24..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        if !v.is_finite() {
            return Err(IoError::NonFiniteValue { row: idx / d.max(1), col: idx % d.max(1) });
        }
        data.push(v);
    }
    Ok((data, n, d))
}

fn parse_csv(text: &str) -> Result<(Vec<f64>, usize, usize), IoError> {
    let mut rows: Vec<&str> = Vec::new();
    for line in text.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if !line.trim().is_empty() {
            rows.push(line);
        }
    }
    // a header is detected when the first token does not parse as a number
    if let Some(first) = rows.first() {
        let token = first.split(',').next().unwrap_or("").trim();
        if token.parse::<f64>().is_err() {
            rows.remove(0);
        }
    }
    if rows.is_empty() {
        return Err(IoError::EmptyFile);
    }
    let expected = rows[0].split(',').count();
    let mut data = Vec::with_capacity(rows.len() * expected);
    for (row, line) in rows.iter().enumerate() {
        let mut cols = 0usize;
        for (col, token) in line.split(',').enumerate() {
            cols += 1;
            if cols > expected {
                break;
            }
            match token.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => data.push(v),
                _ => return Err(IoError::NonFiniteValue { row, col }),
            }
        }
        if cols != expected {
            return Err(IoError::RaggedCsv { row, cols: line.split(',').count(), expected });
        }
    }
    let n = rows.len();
    Ok((data, n, expected))
}

/// Reads a feature matrix in the given format. Raw binary layout: magic
/// `TRFM`, u32 LE version (currently 1), u64 LE n, u64 LE d, then n*d
/// binary32 LE values row-major.
pub fn read_feature_file(path: &Path, format: FeatureFormat) -> Result<FeatureMatrix, IoError> {
    let (data, n, d) = match format {
        FeatureFormat::RawBinary => parse_raw(&fs::read(path)?)?,
        FeatureFormat::Csv => parse_csv(&fs::read_to_string(path)?)?,
    };
    Ok(FeatureMatrix::from_rows(data, n, d)?)
}

/// Writes a matrix-shaped block of values in the raw binary format. Values
/// are stored as binary32, so anything not representable in f32 is rounded.
pub fn write_raw_matrix(path: &Path, data: &[f64], n: usize, d: usize) -> Result<(), IoError> {
    debug_assert_eq!(data.len(), n * d);
    let mut buf = Vec::with_capacity(24 + 4 * data.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(d as u64).to_le_bytes());
    for &v in data {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Writes a feature matrix in the raw binary format.
pub fn write_feature_file(path: &Path, f: &FeatureMatrix) -> Result<(), IoError> {
    write_raw_matrix(path, f.data(), f.n(), f.d())
}

/// Label kind requested when reading a label file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelKind {
    Classification,
    Regression,
}

/// Reads labels, one value per line (LF or CRLF, blank lines ignored).
/// Classification ids are nonnegative integers with the class count inferred
/// as max id + 1; regression values are decimal floats.
pub fn read_labels(path: &Path, kind: LabelKind) -> Result<LabelVector, IoError> {
    let text = fs::read_to_string(path)?;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let token = line.strip_suffix('\r').unwrap_or(line).trim();
        if token.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        match kind {
            LabelKind::Classification => match token.parse::<u32>() {
                Ok(id) => ids.push(id),
                Err(_) => return Err(IoError::NonInteger { line: line_no }),
            },
            LabelKind::Regression => match token.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => return Err(IoError::NonFinite { line: line_no }),
            },
        }
    }
    match kind {
        LabelKind::Classification => {
            if ids.is_empty() {
                return Err(IoError::EmptyFile);
            }
            Ok(LabelVector::classification_inferred(ids)?)
        }
        LabelKind::Regression => {
            if values.is_empty() {
                return Err(IoError::EmptyFile);
            }
            Ok(LabelVector::regression(values)?)
        }
    }
}

/// Writes labels one per line: class ids as integers, regression values with
/// 17 significant digits.
pub fn write_labels(path: &Path, y: &LabelVector) -> Result<(), IoError> {
    let mut out = String::new();
    match y {
        LabelVector::Classification { ids, .. } => {
            for id in ids {
                out.push_str(&id.to_string());
                out.push('\n');
            }
        }
        LabelVector::Regression { values } => {
            for v in values {
                out.push_str(&format_g17(*v));
                out.push('\n');
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a pseudo-label matrix: the raw binary matrix format, validated as
/// row-stochastic on load.
pub fn read_pseudo_labels(path: &Path) -> Result<PseudoLabelMatrix, IoError> {
    let (data, n, c_s) = parse_raw(&fs::read(path)?)?;
    Ok(PseudoLabelMatrix::new(data, n, c_s)?)
}

/// Task kind a manifest declares for its label files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Classification,
    Regression,
}

/// One candidate model in a zoo manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEntry {
    pub name: String,
    pub features_path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_labels_path: Option<PathBuf>,
}

/// A model zoo: per-model feature files, shared or per-model labels, and an
/// optional accuracy table for evaluation. All relative paths are resolved
/// against the manifest's directory at load time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZooManifest {
    pub task_kind: TaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy_path: Option<PathBuf>,
    pub models: Vec<ModelEntry>,
}

impl ZooManifest {
    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path)?;
        let mut manifest: ZooManifest = serde_json::from_str(&text)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                let joined = dir.join(p.as_path());
                *p = joined;
            }
        };
        if let Some(p) = manifest.labels_path.as_mut() {
            resolve(p);
        }
        if let Some(p) = manifest.accuracy_path.as_mut() {
            resolve(p);
        }
        for model in manifest.models.iter_mut() {
            resolve(&mut model.features_path);
            if let Some(p) = model.labels_path.as_mut() {
                resolve(p);
            }
            if let Some(p) = model.pseudo_labels_path.as_mut() {
                resolve(p);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    fn validate(&self) -> Result<(), IoError> {
        if self.models.is_empty() {
            return Err(IoError::BadManifest("manifest lists no models".into()));
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        for w in names.windows(2) {
            if w[0] == w[1] {
                return Err(IoError::DuplicateModelName(w[0].to_owned()));
            }
        }
        for model in &self.models {
            if model.labels_path.is_none() && self.labels_path.is_none() {
                return Err(IoError::MissingLabels(model.name.clone()));
            }
        }
        Ok(())
    }

    /// The labels file for one model: its own, or the shared default.
    pub fn labels_for<'a>(&'a self, model: &'a ModelEntry) -> &'a Path {
        model
            .labels_path
            .as_deref()
            .or(self.labels_path.as_deref())
            .expect("validated at load time")
    }
}

/// Reads an accuracy table: `name,accuracy` per line, optional header
/// (detected when the second field is not a number on the first line).
pub fn read_accuracy(path: &Path) -> Result<Vec<(String, f64)>, IoError> {
    let text = fs::read_to_string(path)?;
    let mut out: Vec<(String, f64)> = Vec::new();
    let mut first_content_line = true;
    for (idx, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let mut fields = line.splitn(2, ',');
        let name = fields.next().unwrap_or("").trim();
        let value = fields.next().map(str::trim);
        match value.and_then(|v| v.parse::<f64>().ok()).filter(|v| v.is_finite()) {
            Some(v) if !name.is_empty() => {
                if out.iter().any(|(existing, _)| existing == name) {
                    return Err(IoError::DuplicateModelName(name.to_owned()));
                }
                out.push((name.to_owned(), v));
            }
            _ if first_content_line => {} // header row
            _ => return Err(IoError::BadAccuracy { line: line_no }),
        }
        first_content_line = false;
    }
    if out.is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(out)
}

/// Formats a float with 17 significant digits; parsing the result recovers
/// the exact binary64 value. The output is also a valid JSON number.
pub fn format_g17(v: f64) -> String {
    format!("{:.16e}", v)
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

/// Per-method correlation row of an evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub method: String,
    pub pearson: f64,
    pub kendall_tau: f64,
    pub weighted_tau: f64,
    pub models: usize,
}

/// Score-vs-accuracy correlations for every scoring method that ran.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

/// `method,score` CSV lines for one model's scores.
pub fn render_score_csv(scores: &[TransferScore]) -> String {
    let mut out = String::from("method,score\n");
    for s in scores {
        out.push_str(&format!("{},{}\n", s.method, format_g17(s.value)));
    }
    out
}

/// JSON document for one model's scores.
pub fn render_score_json(scores: &[TransferScore]) -> String {
    let mut out = String::from("{\"scores\":[");
    for (i, s) in scores.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"model\":{},\"method\":{},\"value\":{},\"config_fingerprint\":\"{:016x}\",\"n\":{},\"d\":{},\"c\":{}}}",
            json_str(&s.model_name),
            json_str(&s.method),
            format_g17(s.value),
            s.config_fingerprint,
            s.n,
            s.d,
            s.c
        ));
    }
    out.push_str("]}\n");
    out
}

/// `method,rank,model,score` CSV lines for a set of per-method rankings.
pub fn render_rank_csv(reports: &[RankReport]) -> String {
    let mut out = String::from("method,rank,model,score\n");
    for report in reports {
        for e in &report.entries {
            out.push_str(&format!(
                "{},{},{},{}\n",
                report.method,
                e.rank,
                e.model_name,
                format_g17(e.value)
            ));
        }
    }
    out
}

/// JSON document for a set of per-method rankings.
pub fn render_rank_json(reports: &[RankReport]) -> String {
    let mut out = String::from("{\"rankings\":[");
    for (i, report) in reports.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"method\":{},\"config_fingerprint\":\"{:016x}\",\"entries\":[",
            json_str(&report.method),
            report.config_fingerprint
        ));
        for (j, e) in report.entries.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!(
                "{{\"rank\":{},\"model\":{},\"score\":{}}}",
                e.rank,
                json_str(&e.model_name),
                format_g17(e.value)
            ));
        }
        out.push_str("]}");
    }
    out.push_str("]}\n");
    out
}

/// `method,pearson,kendall_tau,weighted_tau,models` CSV lines.
pub fn render_eval_csv(report: &EvalReport) -> String {
    let mut out = String::from("method,pearson,kendall_tau,weighted_tau,models\n");
    for r in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.method,
            format_g17(r.pearson),
            format_g17(r.kendall_tau),
            format_g17(r.weighted_tau),
            r.models
        ));
    }
    out
}

/// JSON document for an evaluation report.
pub fn render_eval_json(report: &EvalReport) -> String {
    let mut out = String::from("{\"evaluation\":[");
    for (i, r) in report.rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"method\":{},\"pearson\":{},\"kendall_tau\":{},\"weighted_tau\":{},\"models\":{}}}",
            json_str(&r.method),
            format_g17(r.pearson),
            format_g17(r.kendall_tau),
            format_g17(r.weighted_tau),
            r.models
        ));
    }
    out.push_str("]}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    #[test]
    fn raw_minimal_file_reads_one_by_one() {
        let dir = tmp();
        let path = dir.path().join("one.trfm");
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TRFM");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        buf.extend_from_slice(&1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 28);
        fs::write(&path, &buf).unwrap();
        let f = read_feature_file(&path, FeatureFormat::RawBinary).unwrap();
        assert_eq!((f.n(), f.d()), (1, 1));
        assert_eq!(f.data(), &[1.0]);
    }

    #[test]
    fn raw_round_trip_is_bit_identical() {
        let dir = tmp();
        let path = dir.path().join("rt.trfm");
        // f32-representable values so the write is lossless
        let data: Vec<f64> = (0..17 * 9)
            .map(|k| synth::normal(99, k as u64) as f32 as f64)
            .collect();
        let f = FeatureMatrix::from_rows(data, 17, 9).unwrap();
        write_feature_file(&path, &f).unwrap();
        let g = read_feature_file(&path, FeatureFormat::RawBinary).unwrap();
        assert_eq!(f.data(), g.data());
        let bytes1 = fs::read(&path).unwrap();
        write_feature_file(&path, &g).unwrap();
        assert_eq!(bytes1, fs::read(&path).unwrap());
    }

    #[test]
    fn raw_rejects_malformed_headers() {
        let dir = tmp();
        let path = dir.path().join("bad.trfm");

        fs::write(&path, b"NOPE").unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::RawBinary),
            Err(IoError::BadMagic)
        ));

        let mut buf = Vec::new();
        buf.extend_from_slice(b"TRFM");
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        buf.extend_from_slice(&1.0f32.to_le_bytes());
        fs::write(&path, &buf).unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::RawBinary),
            Err(IoError::VersionUnsupported(2))
        ));

        let mut buf = Vec::new();
        buf.extend_from_slice(b"TRFM");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        buf.extend_from_slice(&1.0f32.to_le_bytes()); // 15 values missing
        fs::write(&path, &buf).unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::RawBinary),
            Err(IoError::TruncatedFile)
        ));

        fs::write(&path, &b"TRFM\x01\x00"[..]).unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::RawBinary),
            Err(IoError::TruncatedFile)
        ));
    }

    #[test]
    fn raw_rejects_non_finite_payload() {
        let dir = tmp();
        let path = dir.path().join("nan.trfm");
        let mut buf = Vec::new();
        buf.extend_from_slice(b"TRFM");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&1u64.to_le_bytes());
        buf.extend_from_slice(&2u64.to_le_bytes());
        buf.extend_from_slice(&1.0f32.to_le_bytes());
        buf.extend_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&path, &buf).unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::RawBinary),
            Err(IoError::NonFiniteValue { row: 0, col: 1 })
        ));
    }

    #[test]
    fn csv_with_header() {
        let dir = tmp();
        let path = dir.path().join("f.csv");
        fs::write(&path, "f0,f1\n0.5,0.5\n").unwrap();
        let f = read_feature_file(&path, FeatureFormat::Csv).unwrap();
        assert_eq!((f.n(), f.d()), (1, 2));
        assert_eq!(f.data(), &[0.5, 0.5]);
    }

    #[test]
    fn csv_without_header_and_crlf() {
        let dir = tmp();
        let path = dir.path().join("f.csv");
        fs::write(&path, "1.0,2.0\r\n3.0,4.0\r\n").unwrap();
        let f = read_feature_file(&path, FeatureFormat::Csv).unwrap();
        assert_eq!((f.n(), f.d()), (2, 2));
        assert_eq!(f.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_rejects_ragged_and_non_finite() {
        let dir = tmp();
        let path = dir.path().join("f.csv");
        fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::Csv),
            Err(IoError::RaggedCsv { row: 1, cols: 1, expected: 2 })
        ));
        fs::write(&path, "1.0,2.0\n3.0,nan\n").unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::Csv),
            Err(IoError::NonFiniteValue { row: 1, col: 1 })
        ));
        fs::write(&path, "1.0,2.0\n3.0,oops\n").unwrap();
        assert!(matches!(
            read_feature_file(&path, FeatureFormat::Csv),
            Err(IoError::NonFiniteValue { row: 1, col: 1 })
        ));
    }

    #[test]
    fn detect_format_by_extension() {
        assert_eq!(detect_format(Path::new("a/b.csv")), FeatureFormat::Csv);
        assert_eq!(detect_format(Path::new("a/b.CSV")), FeatureFormat::Csv);
        assert_eq!(detect_format(Path::new("a/b.trfm")), FeatureFormat::RawBinary);
        assert_eq!(detect_format(Path::new("a/b")), FeatureFormat::RawBinary);
    }

    #[test]
    fn labels_classification_inference() {
        let dir = tmp();
        let path = dir.path().join("y.txt");
        fs::write(&path, "0\n1\n0\n").unwrap();
        let y = read_labels(&path, LabelKind::Classification).unwrap();
        assert_eq!(y.class_ids().unwrap(), &[0, 1, 0]);
        assert_eq!(y.num_classes(), Some(2));

        fs::write(&path, "0\r\n2\r\n").unwrap();
        let y = read_labels(&path, LabelKind::Classification).unwrap();
        assert_eq!(y.num_classes(), Some(3));
    }

    #[test]
    fn labels_regression_and_errors() {
        let dir = tmp();
        let path = dir.path().join("y.txt");
        fs::write(&path, "1.5\n-2.0\n").unwrap();
        let y = read_labels(&path, LabelKind::Regression).unwrap();
        assert_eq!(y, LabelVector::regression(vec![1.5, -2.0]).unwrap());

        fs::write(&path, "0\n1.5\n").unwrap();
        assert!(matches!(
            read_labels(&path, LabelKind::Classification),
            Err(IoError::NonInteger { line: 2 })
        ));
        fs::write(&path, "1.5\ninf\n").unwrap();
        assert!(matches!(
            read_labels(&path, LabelKind::Regression),
            Err(IoError::NonFinite { line: 2 })
        ));
        fs::write(&path, "\n").unwrap();
        assert!(matches!(
            read_labels(&path, LabelKind::Classification),
            Err(IoError::EmptyFile)
        ));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tmp();
        let path = dir.path().join("y.txt");
        let y = LabelVector::classification_inferred(vec![0, 3, 1, 3]).unwrap();
        write_labels(&path, &y).unwrap();
        assert_eq!(read_labels(&path, LabelKind::Classification).unwrap(), y);

        let r = LabelVector::regression(vec![0.1, -2.5e-7, 3.0]).unwrap();
        write_labels(&path, &r).unwrap();
        assert_eq!(read_labels(&path, LabelKind::Regression).unwrap(), r);
    }

    #[test]
    fn pseudo_labels_round_trip_and_validation() {
        let dir = tmp();
        let path = dir.path().join("p.trfm");
        let probs = vec![0.25, 0.75, 0.5, 0.5];
        write_raw_matrix(&path, &probs, 2, 2).unwrap();
        let p = read_pseudo_labels(&path).unwrap();
        assert_eq!(p.n(), 2);
        assert_eq!(p.source_classes(), 2);
        assert_eq!(p.row(0), &[0.25, 0.75]);

        write_raw_matrix(&path, &[0.9, 0.9, 0.1, 0.1], 2, 2).unwrap();
        assert!(matches!(
            read_pseudo_labels(&path),
            Err(IoError::PseudoLabels(BaselineError::NotRowStochastic { row: 0, .. }))
        ));
    }

    #[test]
    fn manifest_resolves_relative_paths() {
        let dir = tmp();
        let manifest_path = dir.path().join("zoo.json");
        fs::write(
            &manifest_path,
            r#"{
                "task_kind": "classification",
                "labels_path": "shared.txt",
                "accuracy_path": "acc.csv",
                "models": [
                    {"name": "a", "features_path": "a.trfm"},
                    {"name": "b", "features_path": "b.csv", "labels_path": "b.txt",
                     "pseudo_labels_path": "b_pseudo.trfm"}
                ]
            }"#,
        )
        .unwrap();
        let m = ZooManifest::from_file(&manifest_path).unwrap();
        assert_eq!(m.task_kind, TaskKind::Classification);
        assert_eq!(m.models.len(), 2);
        assert_eq!(m.labels_for(&m.models[0]), dir.path().join("shared.txt"));
        assert_eq!(m.labels_for(&m.models[1]), dir.path().join("b.txt"));
        assert_eq!(
            m.models[1].pseudo_labels_path.as_deref(),
            Some(dir.path().join("b_pseudo.trfm").as_path())
        );
        assert_eq!(m.accuracy_path.as_deref(), Some(dir.path().join("acc.csv").as_path()));
    }

    #[test]
    fn manifest_validation_errors() {
        let dir = tmp();
        let path = dir.path().join("zoo.json");
        fs::write(
            &path,
            r#"{"task_kind": "classification", "models": [
                {"name": "a", "features_path": "a.trfm", "labels_path": "y.txt"},
                {"name": "a", "features_path": "b.trfm", "labels_path": "y.txt"}
            ]}"#,
        )
        .unwrap();
        assert!(matches!(
            ZooManifest::from_file(&path),
            Err(IoError::DuplicateModelName(name)) if name == "a"
        ));

        fs::write(
            &path,
            r#"{"task_kind": "regression", "models": [
                {"name": "a", "features_path": "a.trfm"}
            ]}"#,
        )
        .unwrap();
        assert!(matches!(
            ZooManifest::from_file(&path),
            Err(IoError::MissingLabels(name)) if name == "a"
        ));
    }

    #[test]
    fn accuracy_table_with_header() {
        let dir = tmp();
        let path = dir.path().join("acc.csv");
        fs::write(&path, "model,accuracy\nresnet,0.91\nvgg,0.85\n").unwrap();
        let rows = read_accuracy(&path).unwrap();
        assert_eq!(rows, vec![("resnet".into(), 0.91), ("vgg".into(), 0.85)]);

        fs::write(&path, "resnet,0.91\n").unwrap();
        assert_eq!(read_accuracy(&path).unwrap(), vec![("resnet".into(), 0.91)]);

        fs::write(&path, "resnet,0.91\nbroken\n").unwrap();
        assert!(matches!(read_accuracy(&path), Err(IoError::BadAccuracy { line: 2 })));

        fs::write(&path, "resnet,0.91\nresnet,0.92\n").unwrap();
        assert!(matches!(read_accuracy(&path), Err(IoError::DuplicateModelName(_))));
    }

    #[test]
    fn g17_round_trips_exactly() {
        let mut vals: Vec<f64> = vec![0.0, -0.0, 1.0, -1.0, 1e-308, 1e308, 0.1, 2.0 / 3.0];
        for k in 0..500 {
            vals.push(synth::normal(4242, k) * 10f64.powi((k % 60) as i32 - 30));
        }
        for v in vals {
            let s = format_g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn reports_use_17_digit_floats() {
        let score = TransferScore {
            model_name: "m".into(),
            method: "transrate".into(),
            value: 0.1438410362258904,
            config_fingerprint: 0xdeadbeef,
            n: 2,
            d: 2,
            c: 2,
        };
        let csv = render_score_csv(&[score.clone()]);
        assert!(csv.contains("transrate,1.4384103622589040e-1"), "{csv}");
        let json = render_score_json(&[score]);
        assert!(json.contains("\"value\":1.4384103622589040e-1"), "{json}");
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(
            parsed["scores"][0]["value"].as_f64().unwrap(),
            0.1438410362258904
        );
    }

    #[test]
    fn rank_and_eval_renderers() {
        use crate::metrics::{RankReport, RankedModel};
        let report = RankReport {
            method: "transrate".into(),
            config_fingerprint: 1,
            entries: vec![
                RankedModel { rank: 1, model_name: "a".into(), value: 2.0 },
                RankedModel { rank: 2, model_name: "b".into(), value: 1.0 },
            ],
        };
        let csv = render_rank_csv(&[report.clone()]);
        assert!(csv.starts_with("method,rank,model,score\n"));
        assert!(csv.contains("transrate,1,a,2.0000000000000000e0"));
        let json = render_rank_json(&[report]);
        serde_json::from_str::<serde_json::Value>(&json).unwrap();

        let eval = EvalReport {
            rows: vec![EvalRow {
                method: "leep".into(),
                pearson: 0.5,
                kendall_tau: 1.0 / 3.0,
                weighted_tau: -1.0,
                models: 4,
            }],
        };
        let csv = render_eval_csv(&eval);
        assert!(csv.contains("leep,5.0000000000000000e-1"), "{csv}");
        let json = render_eval_json(&eval);
        serde_json::from_str::<serde_json::Value>(&json).unwrap();
    }
}
