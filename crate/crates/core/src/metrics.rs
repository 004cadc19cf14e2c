//! Answer-change rates, transition breakdowns and accuracy.
//!
//! Everything is computed on raw counts. Percentages exist only as
//! accessors for presentation.

use crate::dataset::{VariantDataset, RANDOM};
use crate::dimensions::{Dimension, DIMENSIONLESS};
use crate::gateway::PredictionSet;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

pub const REPORT_FORMAT: &str = "demoaudit-report/1";

/// `100 * n / d`, or `None` for an empty denominator.
pub fn pct(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| 100.0 * n as f64 / d as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("coverage mismatch: missing from variant: [{}]; missing from base: [{}]", .missing_in_variant.join(", "), .missing_in_base.join(", "))]
pub struct CoverageError {
    pub missing_in_variant: Vec<String>,
    pub missing_in_base: Vec<String>,
}

fn check_coverage<'a>(base: &BTreeMap<String, u8>, variant: impl Iterator<Item = &'a str>) -> Result<(), CoverageError> {
    let seen: BTreeSet<&str> = variant.collect();
    let missing_in_variant: Vec<String> = base.keys().filter(|k| !seen.contains(k.as_str())).cloned().collect();
    let missing_in_base: Vec<String> = seen
        .iter()
        .filter(|k| !base.contains_key(**k))
        .map(|k| k.to_string())
        .collect();
    if missing_in_variant.is_empty() && missing_in_base.is_empty() {
        Ok(())
    } else {
        Err(CoverageError {
            missing_in_variant,
            missing_in_base,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeCell {
    pub pairs_total: usize,
    pub pairs_changed: usize,
}

impl ChangeCell {
    pub fn rate(&self) -> Option<f64> {
        pct(self.pairs_changed, self.pairs_total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionCell {
    pub pairs_total: usize,
    pub c2i: usize,
    pub i2i: usize,
    pub i2c: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub correct: usize,
    pub total: usize,
}

impl AccuracyCell {
    pub fn accuracy(&self) -> Option<f64> {
        pct(self.correct, self.total)
    }
}

/// Pairs `(vignette_id, chosen)` against the dimensionless answer per
/// vignette. Name attributes contribute one pair per (vignette, name).
pub fn change_rate(base: &BTreeMap<String, u8>, variant: &[(String, u8)]) -> Result<ChangeCell, CoverageError> {
    check_coverage(base, variant.iter().map(|(v, _)| v.as_str()))?;
    Ok(ChangeCell {
        pairs_total: variant.len(),
        pairs_changed: variant.iter().filter(|(v, c)| base[v] != *c).count(),
    })
}

pub fn transitions(
    base: &BTreeMap<String, u8>,
    variant: &[(String, u8)],
    gold: &BTreeMap<String, u8>,
) -> Result<TransitionCell, CoverageError> {
    check_coverage(base, variant.iter().map(|(v, _)| v.as_str()))?;
    check_coverage(gold, base.keys().map(String::as_str))?;
    let mut cell = TransitionCell {
        pairs_total: variant.len(),
        c2i: 0,
        i2i: 0,
        i2c: 0,
    };
    for (v, chosen) in variant {
        let (b, g) = (base[v], gold[v]);
        if *chosen == b {
            continue;
        }
        match (b == g, *chosen == g) {
            (true, _) => cell.c2i += 1,
            (false, true) => cell.i2c += 1,
            (false, false) => cell.i2i += 1,
        }
    }
    Ok(cell)
}

pub fn accuracy(variant: &[(String, u8)], gold: &BTreeMap<String, u8>) -> Result<AccuracyCell, CoverageError> {
    let missing_in_base: Vec<String> = variant
        .iter()
        .filter(|(v, _)| !gold.contains_key(v))
        .map(|(v, _)| v.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing_in_base.is_empty() {
        return Err(CoverageError {
            missing_in_variant: Vec::new(),
            missing_in_base,
        });
    }
    Ok(AccuracyCell {
        correct: variant.iter().filter(|(v, c)| gold[v] == *c).count(),
        total: variant.len(),
    })
}

/// How name attributes are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NameDenominator {
    /// One pair per (vignette, name).
    #[default]
    Pairs,
    /// One pair per vignette, using the most frequent answer across names
    /// (ties go to the lowest index).
    Majority,
}

/// Raw counts for one report column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeCell {
    pub set: String,
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Pairs with both answers present.
    pub pairs_total: usize,
    pub changed: usize,
    pub c2i: usize,
    pub i2i: usize,
    pub i2c: usize,
    /// Correct variant answers over the counted pairs.
    pub correct: usize,
    /// Correct dimensionless answers over the same pairs.
    pub base_correct: usize,
    /// Pairs dropped because an answer is missing.
    pub missing: usize,
    pub complete: bool,
}

impl AttributeCell {
    fn new(set: &str, attribute: &str, name: Option<&str>) -> Self {
        Self {
            set: set.to_string(),
            attribute: attribute.to_string(),
            name: name.map(str::to_string),
            pairs_total: 0,
            changed: 0,
            c2i: 0,
            i2i: 0,
            i2c: 0,
            correct: 0,
            base_correct: 0,
            missing: 0,
            complete: true,
        }
    }

    fn add(&mut self, base: u8, chosen: u8, gold: u8) {
        self.pairs_total += 1;
        self.correct += usize::from(chosen == gold);
        self.base_correct += usize::from(base == gold);
        if chosen != base {
            self.changed += 1;
            match (base == gold, chosen == gold) {
                (true, _) => self.c2i += 1,
                (false, true) => self.i2c += 1,
                (false, false) => self.i2i += 1,
            }
        }
    }

    fn add_missing(&mut self) {
        self.missing += 1;
        self.complete = false;
    }

    pub fn change_rate(&self) -> Option<f64> {
        pct(self.changed, self.pairs_total)
    }

    pub fn c2i_rate(&self) -> Option<f64> {
        pct(self.c2i, self.pairs_total)
    }

    pub fn i2i_rate(&self) -> Option<f64> {
        pct(self.i2i, self.pairs_total)
    }

    pub fn i2c_rate(&self) -> Option<f64> {
        pct(self.i2c, self.pairs_total)
    }

    pub fn accuracy(&self) -> Option<f64> {
        pct(self.correct, self.pairs_total)
    }

    pub fn base_accuracy(&self) -> Option<f64> {
        pct(self.base_correct, self.pairs_total)
    }

    /// Partition and accuracy identities on raw counts.
    pub fn check_identities(&self) -> Result<(), String> {
        if self.changed != self.c2i + self.i2i + self.i2c {
            return Err(format!(
                "{}/{}: changed {} != c2i {} + i2i {} + i2c {}",
                self.set, self.attribute, self.changed, self.c2i, self.i2i, self.i2c
            ));
        }
        if self.correct as i64 - self.base_correct as i64 != self.i2c as i64 - self.c2i as i64 {
            return Err(format!(
                "{}/{}: correct {} - base_correct {} != i2c {} - c2i {}",
                self.set, self.attribute, self.correct, self.base_correct, self.i2c, self.c2i
            ));
        }
        if self.changed > self.pairs_total || self.correct > self.pairs_total || self.base_correct > self.pairs_total {
            return Err(format!("{}/{}: count exceeds pairs_total", self.set, self.attribute));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub tool_version: String,
    pub lexicon_versions: Vec<String>,
    pub config_version: String,
    pub config_digest: String,
    pub manifest_digest: String,
    pub model_id: String,
    pub vignettes: usize,
    pub instances: usize,
    pub predictions: usize,
    pub failures: usize,
    pub name_denominator: NameDenominator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetInfo {
    pub label: String,
    pub title: String,
    pub names: bool,
}

/// Scored output for one model over one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineReport {
    pub format: String,
    pub metadata: ReportMetadata,
    /// Column groups in presentation order; random first when present.
    pub sets: Vec<SetInfo>,
    /// Dimensionless accuracy; only `correct`, `pairs_total` and
    /// `missing` are meaningful.
    pub baseline: AttributeCell,
    pub cells: Vec<AttributeCell>,
    /// Per-name cells of every name-bearing set.
    pub names: Vec<AttributeCell>,
}

impl MachineReport {
    pub fn check_identities(&self) -> Result<(), String> {
        self.cells.iter().chain(&self.names).try_for_each(AttributeCell::check_identities)
    }

    pub fn cells_in(&self, set: &str) -> impl Iterator<Item = &AttributeCell> {
        let set = set.to_string();
        self.cells.iter().filter(move |c| c.set == set)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("predictions were made on dataset {predictions}, not {dataset}")]
    ManifestMismatch { dataset: String, predictions: String },
    #[error("predictions reference variants not in the dataset: {}", .0.join(", "))]
    UnknownVariants(Vec<String>),
    #[error("metric identity violated: {0}")]
    Identity(String),
}

fn majority(answers: &[u8]) -> u8 {
    let mut counts = [0usize; 4];
    for &a in answers {
        counts[usize::from(a.min(3))] += 1;
    }
    // max_by_key keeps the last maximum; scan in reverse so ties go low
    (0..4u8).rev().max_by_key(|&i| counts[usize::from(i)]).unwrap_or(0)
}

/// Aggregate one prediction set into report cells.
pub fn score(dataset: &VariantDataset, predictions: &PredictionSet, names: NameDenominator) -> Result<MachineReport, ScoreError> {
    let digest = dataset.manifest.digest();
    if predictions.manifest_digest != digest {
        return Err(ScoreError::ManifestMismatch {
            dataset: digest,
            predictions: predictions.manifest_digest.clone(),
        });
    }
    let known: HashSet<&str> = dataset.instances().map(|v| v.variant_id.as_str()).collect();
    let unknown: Vec<String> = predictions
        .predictions
        .iter()
        .map(|p| p.variant_id.as_str())
        .chain(predictions.failures.iter().map(|f| f.variant_id.as_str()))
        .filter(|id| !known.contains(id))
        .map(str::to_string)
        .collect();
    if !unknown.is_empty() {
        return Err(ScoreError::UnknownVariants(unknown));
    }
    let chosen: HashMap<&str, u8> = predictions
        .predictions
        .iter()
        .map(|p| (p.variant_id.as_str(), p.chosen))
        .collect();

    let mut baseline = AttributeCell::new(DIMENSIONLESS, "D", None);
    let mut base: HashMap<&str, u8> = HashMap::new();
    for v in dataset.variants.iter().filter(|v| v.dimension_set == DIMENSIONLESS) {
        match chosen.get(v.variant_id.as_str()) {
            Some(&c) => {
                base.insert(v.vignette_id.as_str(), c);
                baseline.pairs_total += 1;
                baseline.correct += usize::from(c == v.gold);
                baseline.base_correct += usize::from(c == v.gold);
            }
            None => baseline.add_missing(),
        }
    }

    let name_sets: HashSet<String> = dataset
        .variants
        .iter()
        .filter(|v| v.profile.name.is_some())
        .map(|v| v.dimension_set.clone())
        .collect();

    // (set, attribute) in dataset order, random first
    let mut order: Vec<(String, String)> = Vec::new();
    let mut cells: HashMap<(String, String), AttributeCell> = HashMap::new();
    let mut name_order: Vec<(String, String, String)> = Vec::new();
    let mut name_cells: HashMap<(String, String, String), AttributeCell> = HashMap::new();
    // majority mode: (set, attribute, vignette) -> answers, with all-present flag
    let mut grouped: BTreeMap<(usize, String), (Vec<u8>, bool, u8)> = BTreeMap::new();

    let ordered = dataset
        .baselines
        .iter()
        .chain(dataset.variants.iter().filter(|v| v.dimension_set != DIMENSIONLESS));
    for v in ordered {
        let key = (v.dimension_set.clone(), v.attribute.clone());
        if !cells.contains_key(&key) {
            order.push(key.clone());
            cells.insert(key.clone(), AttributeCell::new(&v.dimension_set, &v.attribute, None));
        }
        let pair = match (base.get(v.vignette_id.as_str()), chosen.get(v.variant_id.as_str())) {
            (Some(&b), Some(&c)) => Some((b, c)),
            _ => None,
        };
        if let Some(name) = &v.profile.name {
            let nkey = (v.dimension_set.clone(), v.attribute.clone(), name.clone());
            let cell = name_cells.entry(nkey.clone()).or_insert_with(|| {
                name_order.push(nkey);
                AttributeCell::new(&v.dimension_set, &v.attribute, Some(name))
            });
            match pair {
                Some((b, c)) => cell.add(b, c, v.gold),
                None => cell.add_missing(),
            }
        }
        let collapse = names == NameDenominator::Majority && name_sets.contains(&v.dimension_set);
        if collapse {
            let idx = order.iter().position(|k| *k == key).expect("key recorded");
            let entry = grouped
                .entry((idx, v.vignette_id.clone()))
                .or_insert_with(|| (Vec::new(), true, v.gold));
            match pair {
                Some((_, c)) => entry.0.push(c),
                None => entry.1 = false,
            }
            continue;
        }
        let cell = cells.get_mut(&key).expect("cell exists");
        match pair {
            Some((b, c)) => cell.add(b, c, v.gold),
            None => cell.add_missing(),
        }
    }
    for ((idx, vignette), (answers, all_present, gold)) in grouped {
        let cell = cells.get_mut(&order[idx]).expect("cell exists");
        match (base.get(vignette.as_str()), all_present && !answers.is_empty()) {
            (Some(&b), true) => cell.add(b, majority(&answers), gold),
            _ => cell.add_missing(),
        }
    }

    let mut sets = Vec::new();
    if !dataset.baselines.is_empty() || dataset.manifest.random_baseline.enabled {
        sets.push(SetInfo {
            label: RANDOM.to_string(),
            title: "Random".to_string(),
            names: false,
        });
    }
    for s in dataset.manifest.sets.iter().filter(|s| s.label != DIMENSIONLESS) {
        sets.push(SetInfo {
            label: s.label.clone(),
            title: s.title.clone(),
            names: s.label.split('+').any(|d| d == Dimension::Names.as_str()),
        });
    }

    let report = MachineReport {
        format: REPORT_FORMAT.to_string(),
        metadata: ReportMetadata {
            tool_version: crate::TOOL_VERSION.to_string(),
            lexicon_versions: dataset.manifest.lexicon_versions.clone(),
            config_version: dataset.manifest.config_version.clone(),
            config_digest: dataset.manifest.config_digest.clone(),
            manifest_digest: digest,
            model_id: predictions.model_id.clone(),
            vignettes: dataset.manifest.vignettes,
            instances: dataset.len(),
            predictions: predictions.predictions.len(),
            failures: predictions.failures.len(),
            name_denominator: names,
        },
        sets,
        baseline,
        cells: order.into_iter().map(|k| cells.remove(&k).expect("cell")).collect(),
        names: name_order.into_iter().map(|k| name_cells.remove(&k).expect("cell")).collect(),
    };
    report.check_identities().map_err(ScoreError::Identity)?;
    Ok(report)
}

/// Two models' cells side by side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDiff {
    pub a: MachineReport,
    pub b: MachineReport,
}

#[derive(Debug, thiserror::Error)]
pub enum DiffError {
    #[error("reports are for different datasets ({a} vs {b})")]
    ManifestMismatch { a: String, b: String },
    #[error("reports disagree on cell layout")]
    Layout,
}

impl ModelDiff {
    /// Matching cells `(a, b)` in report order.
    pub fn pairs(&self) -> impl Iterator<Item = (&AttributeCell, &AttributeCell)> {
        self.a.cells.iter().zip(&self.b.cells)
    }

    pub fn name_pairs(&self) -> impl Iterator<Item = (&AttributeCell, &AttributeCell)> {
        self.a.names.iter().zip(&self.b.names)
    }
}

/// Delta of two optional percentages, `b - a`.
pub fn delta(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(b? - a?)
}

pub fn diff_models(a: &MachineReport, b: &MachineReport) -> Result<ModelDiff, DiffError> {
    if a.metadata.manifest_digest != b.metadata.manifest_digest {
        return Err(DiffError::ManifestMismatch {
            a: a.metadata.manifest_digest.clone(),
            b: b.metadata.manifest_digest.clone(),
        });
    }
    let layout = |r: &MachineReport| -> Vec<(String, String, Option<String>)> {
        r.cells
            .iter()
            .chain(&r.names)
            .map(|c| (c.set.clone(), c.attribute.clone(), c.name.clone()))
            .collect()
    };
    if layout(a) != layout(b) || a.sets != b.sets {
        return Err(DiffError::Layout);
    }
    Ok(ModelDiff { a: a.clone(), b: b.clone() })
}
