//! Input vignette files and the dataset JSONL format.

use super::{Manifest, VariantDataset, VariantInstance, DATASET_FORMAT};
use crate::templates::{mask, GenderLexicon, MaskReport, MaskedTemplate, Vignette, VignetteError};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

/// A vignette with its (possibly reviewed) template. This is the line
/// format written by `demoaudit mask`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskedVignette {
    pub vignette: Vignette,
    pub template: MaskedTemplate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MaskReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Vignette(#[from] VignetteError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Read JSONL input where each line is either a raw vignette (masked here
/// with `lexicon`) or a masked-vignette record.
pub fn read_inputs(reader: impl BufRead, lexicon: &GenderLexicon) -> Result<Vec<MaskedVignette>, InputError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |source| InputError::Parse { line: idx + 1, source };
        let value: serde_json::Value = serde_json::from_str(&line).map_err(parse_err)?;
        let item = if value.get("template").is_some() {
            serde_json::from_value::<MaskedVignette>(value).map_err(parse_err)?
        } else {
            let vignette: Vignette = serde_json::from_value(value).map_err(parse_err)?;
            let m = mask(&vignette, lexicon);
            MaskedVignette {
                vignette,
                template: m.template,
                report: Some(m.report),
            }
        };
        item.vignette.validate()?;
        out.push(item);
    }
    Ok(out)
}

#[derive(Serialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum RecordRef<'a> {
    Manifest(&'a Manifest),
    Variant(&'a VariantInstance),
    Baseline(&'a VariantInstance),
}

#[derive(Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
enum Record {
    Manifest(Manifest),
    Variant(VariantInstance),
    Baseline(VariantInstance),
}

pub(super) fn record_line(tag: &str, v: &VariantInstance) -> String {
    let r = match tag {
        "variant" => RecordRef::Variant(v),
        _ => RecordRef::Baseline(v),
    };
    serde_json::to_string(&r).expect("record serializes")
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} line {line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

/// `<out>.manifest.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Write the dataset file and its manifest sidecar.
pub fn write_dataset(d: &VariantDataset, path: &Path) -> Result<(), DatasetFileError> {
    let io_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| DatasetFileError::Io { path: p, source }
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut write = |line: String| -> std::io::Result<()> {
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")
    };
    write(serde_json::to_string(&RecordRef::Manifest(&d.manifest)).expect("manifest serializes"))
        .map_err(io_err(path))?;
    for v in &d.variants {
        write(record_line("variant", v)).map_err(io_err(path))?;
    }
    for v in &d.baselines {
        write(record_line("baseline", v)).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;

    let sidecar = sidecar_path(path);
    let mut pretty = serde_json::to_string_pretty(&d.manifest).expect("manifest serializes");
    pretty.push('\n');
    std::fs::write(&sidecar, pretty).map_err(io_err(&sidecar))?;
    Ok(())
}

/// Read and check a dataset file: manifest first, counts and content digest
/// must agree with the records.
pub fn read_dataset(path: &Path) -> Result<VariantDataset, DatasetFileError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| DatasetFileError::Io { path: p.clone(), source })?;
    let invalid = |message: String| DatasetFileError::Invalid { path: p.clone(), message };
    let mut manifest = None;
    let mut variants = Vec::new();
    let mut baselines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetFileError::Io { path: p.clone(), source })?;
        if line.is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|source| DatasetFileError::Parse {
            path: p.clone(),
            line: idx + 1,
            source,
        })?;
        match record {
            Record::Manifest(m) if idx == 0 => manifest = Some(m),
            Record::Manifest(_) => return Err(invalid(format!("line {}: manifest must be the first record", idx + 1))),
            _ if manifest.is_none() => return Err(invalid("first record is not a manifest".into())),
            Record::Variant(v) => variants.push(v),
            Record::Baseline(v) => baselines.push(v),
        }
    }
    let manifest = manifest.ok_or_else(|| invalid("empty file".into()))?;
    if manifest.format != DATASET_FORMAT {
        return Err(invalid(format!("unsupported format {:?}", manifest.format)));
    }
    if manifest.total_instances != variants.len() {
        return Err(invalid(format!(
            "manifest lists {} instances, file has {}",
            manifest.total_instances,
            variants.len()
        )));
    }
    if manifest.random_baseline.applicable != baselines.len() {
        return Err(invalid(format!(
            "manifest lists {} baseline instances, file has {}",
            manifest.random_baseline.applicable,
            baselines.len()
        )));
    }
    if super::content_digest(&variants, &baselines) != manifest.content_digest {
        return Err(invalid("content digest does not match the manifest".into()));
    }
    Ok(VariantDataset {
        manifest,
        variants,
        baselines,
    })
}
