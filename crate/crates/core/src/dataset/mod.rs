//! Variant dataset: every vignette rendered under every enumerated profile,
//! plus the random-change baseline, persisted as JSON lines.

mod io;
mod random;

pub use io::{read_dataset, read_inputs, sidecar_path, write_dataset, DatasetFileError, InputError, MaskedVignette};
pub use random::{random_change, RandomChange};

use crate::digest::sha256_hex;
use crate::dimensions::{enumerate_profiles, ConfigError, DimensionConfig, ProfileEntry, DIMENSIONLESS};
use crate::templates::{render, MaskedTemplate, Profile, RenderError, Vignette};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const DATASET_FORMAT: &str = "demoaudit-dataset/1";
/// Dimension-set label of random-change baseline instances.
pub const RANDOM: &str = "random";

/// One rendered question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantInstance {
    pub variant_id: String,
    pub vignette_id: String,
    pub dimension_set: String,
    pub attribute: String,
    pub profile: Profile,
    pub context: String,
    pub question: String,
    pub choices: [String; 4],
    pub gold: u8,
}

/// Content-derived identity of a (vignette, set, profile) triple.
pub fn variant_id(vignette_id: &str, set_label: &str, profile: &Profile) -> String {
    let key = format!(
        "demoaudit-variant/1\0{vignette_id}\0{set_label}\0{}",
        profile.canonical()
    );
    sha256_hex(key)[..32].to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCount {
    pub label: String,
    /// Report heading, e.g. `Gender+SOr`.
    pub title: String,
    pub profiles_per_vignette: usize,
    pub instances: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub enabled: bool,
    pub applicable: usize,
    /// Vignettes whose first sentence has no "patient".
    pub inapplicable: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool_version: String,
    pub lexicon_versions: Vec<String>,
    pub config_version: String,
    pub config_digest: String,
    pub vignettes: usize,
    pub vignette_ids: Vec<String>,
    /// Dimensionless first, then the configured sets in order.
    pub sets: Vec<SetCount>,
    /// Sum of `sets[*].instances`; excludes the random baseline.
    pub total_instances: usize,
    pub random_baseline: RandomBaseline,
    /// SHA-256 over the variant and baseline lines of the dataset file.
    pub content_digest: String,
}

impl Manifest {
    /// Identity of the dataset; prediction sets and reports carry it.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_vec(self).expect("manifest serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantDataset {
    pub manifest: Manifest,
    pub variants: Vec<VariantInstance>,
    pub baselines: Vec<VariantInstance>,
}

impl VariantDataset {
    /// Variants followed by baselines: everything a predictor must answer.
    pub fn instances(&self) -> impl Iterator<Item = &VariantInstance> {
        self.variants.iter().chain(&self.baselines)
    }

    pub fn len(&self) -> usize {
        self.variants.len() + self.baselines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Expand templates still flagged for review.
    pub force: bool,
    pub skip_random: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("templates need review before expansion (use --force to override): {}", .0.join(", "))]
    Unreviewed(Vec<String>),
    #[error("template id {template} does not match vignette id {vignette}")]
    TemplateMismatch { vignette: String, template: String },
    #[error(transparent)]
    Template(#[from] crate::templates::TemplateError),
    #[error(transparent)]
    Vignette(#[from] crate::templates::VignetteError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

struct Expanded {
    variants: Vec<VariantInstance>,
    baseline: Option<VariantInstance>,
}

fn instance(v: &Vignette, t: &MaskedTemplate, entry: &ProfileEntry) -> Result<VariantInstance, RenderError> {
    let text = render(t, &entry.profile)?;
    Ok(VariantInstance {
        variant_id: variant_id(&v.id, &entry.set_label, &entry.profile),
        vignette_id: v.id.clone(),
        dimension_set: entry.set_label.clone(),
        attribute: entry.attribute.clone(),
        profile: entry.profile.clone(),
        context: text.context,
        question: text.question,
        choices: v.choices.clone(),
        gold: v.gold,
    })
}

fn expand(item: &MaskedVignette, profiles: &[ProfileEntry], opts: &BuildOptions) -> Result<Expanded, BuildError> {
    let variants = profiles
        .iter()
        .map(|e| instance(&item.vignette, &item.template, e))
        .collect::<Result<Vec<_>, _>>()?;
    let baseline = if opts.skip_random {
        None
    } else {
        // the dimensionless rendering is always first
        let d = &variants[0];
        let neutral = Vignette {
            id: d.vignette_id.clone(),
            context: d.context.clone(),
            question: d.question.clone(),
            choices: d.choices.clone(),
            gold: d.gold,
        };
        match random_change(&neutral) {
            RandomChange::Applied(changed) => Some(VariantInstance {
                variant_id: variant_id(&changed.id, RANDOM, &Profile::dimensionless()),
                vignette_id: changed.id,
                dimension_set: RANDOM.to_string(),
                attribute: "Random".to_string(),
                profile: Profile::dimensionless(),
                context: changed.context,
                question: changed.question,
                choices: changed.choices,
                gold: changed.gold,
            }),
            RandomChange::Inapplicable => None,
        }
    };
    Ok(Expanded { variants, baseline })
}

fn content_digest(variants: &[VariantInstance], baselines: &[VariantInstance]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for (tag, list) in [("variant", variants), ("baseline", baselines)] {
        for v in list {
            h.update(io::record_line(tag, v).as_bytes());
            h.update(b"\n");
        }
    }
    hex::encode(h.finalize())
}

/// Expand vignettes × profiles. Work is spread over the rayon pool; output
/// order is vignette order, then profile order.
pub fn build(items: &[MaskedVignette], cfg: &DimensionConfig, opts: &BuildOptions) -> Result<VariantDataset, BuildError> {
    let vignettes: Vec<Vignette> = items.iter().map(|i| i.vignette.clone()).collect();
    crate::templates::vignette::validate_set(&vignettes)?;
    for item in items {
        if item.template.vignette_id != item.vignette.id {
            return Err(BuildError::TemplateMismatch {
                vignette: item.vignette.id.clone(),
                template: item.template.vignette_id.clone(),
            });
        }
    }
    let unreviewed: Vec<String> = items
        .iter()
        .filter(|i| i.template.needs_review)
        .map(|i| i.vignette.id.clone())
        .collect();
    if !unreviewed.is_empty() && !opts.force {
        return Err(BuildError::Unreviewed(unreviewed));
    }
    if !opts.force {
        for item in items {
            item.template.validate()?;
        }
    }

    let profiles = enumerate_profiles(cfg)?;
    let expanded: Vec<Expanded> = items
        .par_iter()
        .map(|item| expand(item, &profiles.entries, opts))
        .collect::<Result<_, _>>()?;

    let mut variants = Vec::with_capacity(items.len() * profiles.len());
    let mut baselines = Vec::new();
    let mut inapplicable = Vec::new();
    for (item, e) in items.iter().zip(expanded) {
        variants.extend(e.variants);
        match e.baseline {
            Some(b) => baselines.push(b),
            None if !opts.skip_random => inapplicable.push(item.vignette.id.clone()),
            None => {}
        }
    }

    let titles: std::collections::HashMap<String, String> = cfg
        .sets
        .iter()
        .map(|s| (s.label(), s.title()))
        .chain([(DIMENSIONLESS.to_string(), "D".to_string())])
        .collect();
    let sets: Vec<SetCount> = profiles
        .breakdown()
        .into_iter()
        .map(|(label, n)| SetCount {
            title: titles[&label].clone(),
            label,
            profiles_per_vignette: n,
            instances: n * items.len(),
        })
        .collect();
    let lexicon_versions: BTreeSet<String> = items.iter().map(|i| i.template.lexicon_version.clone()).collect();
    let manifest = Manifest {
        format: DATASET_FORMAT.to_string(),
        tool_version: crate::TOOL_VERSION.to_string(),
        lexicon_versions: lexicon_versions.into_iter().collect(),
        config_version: cfg.version.clone(),
        config_digest: cfg.digest(),
        vignettes: items.len(),
        vignette_ids: items.iter().map(|i| i.vignette.id.clone()).collect(),
        total_instances: variants.len(),
        sets,
        random_baseline: RandomBaseline {
            enabled: !opts.skip_random,
            applicable: baselines.len(),
            inapplicable,
        },
        content_digest: content_digest(&variants, &baselines),
    };
    Ok(VariantDataset {
        manifest,
        variants,
        baselines,
    })
}
