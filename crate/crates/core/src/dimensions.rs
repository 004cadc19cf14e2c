//! Demographic dimension registry, name lists and profile enumeration.
//!
//! A [`DimensionConfig`] lists dimension sets; each set is expanded into the
//! cross product of its dimensions' values. The enumeration always starts
//! with the dimensionless profile, which every change metric compares
//! against.

use crate::digest::sha256_hex;
use crate::templates::profile::{Ethnicity, Gender, Profile, SexualOrientation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

pub const DIMENSIONLESS: &str = "dimensionless";
/// Expected names per gender in each group.
pub const NAMES_PER_GENDER: usize = 10;

const STANDARD: &str = include_str!("../data/config/standard.toml");
const BUILTIN_NAMES: &[(&str, &str)] = &[
    ("../names/white.tsv", include_str!("../data/names/white.tsv")),
    ("../names/black.tsv", include_str!("../data/names/black.tsv")),
    ("../names/hispanic.tsv", include_str!("../data/names/hispanic.tsv")),
    ("../names/asian.tsv", include_str!("../data/names/asian.tsv")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Gender,
    Ethnicity,
    SexualOrientation,
    Names,
}

impl Dimension {
    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Gender => "gender",
            Dimension::Ethnicity => "ethnicity",
            Dimension::SexualOrientation => "sexual_orientation",
            Dimension::Names => "names",
        }
    }

    /// Column-group heading used in reports.
    pub fn title(self) -> &'static str {
        match self {
            Dimension::Gender => "Gender",
            Dimension::Ethnicity => "Ethnicity",
            Dimension::SexualOrientation => "SOr",
            Dimension::Names => "Names",
        }
    }
}

/// Name-list groups. African-American and Black share one list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NameGroup {
    White,
    Black,
    Hispanic,
    Asian,
}

impl NameGroup {
    pub const ALL: [NameGroup; 4] = [NameGroup::White, NameGroup::Black, NameGroup::Hispanic, NameGroup::Asian];

    pub fn for_ethnicity(e: Ethnicity) -> Self {
        match e {
            Ethnicity::White => NameGroup::White,
            Ethnicity::AfricanAmerican | Ethnicity::Black => NameGroup::Black,
            Ethnicity::Hispanic => NameGroup::Hispanic,
            Ethnicity::Asian => NameGroup::Asian,
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            NameGroup::White => "White",
            NameGroup::Black => "African-American/Black",
            NameGroup::Hispanic => "Hispanic",
            NameGroup::Asian => "Asian",
        }
    }

    /// Attribute label for names-only variants.
    pub fn abbrev(self) -> &'static str {
        match self {
            NameGroup::White => "W",
            NameGroup::Black => "A-A/B",
            NameGroup::Hispanic => "H",
            NameGroup::Asian => "As",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameList {
    pub male: Vec<String>,
    pub female: Vec<String>,
}

impl NameList {
    /// Parse `M<TAB>name` / `F<TAB>name` lines; `#` starts a comment.
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let mut list = NameList::default();
        for (idx, raw) in src.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| ConfigError::NameLine { line: idx + 1, message };
            let (tag, name) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("expected <M|F><TAB><name>, got {line:?}")))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(bad("empty name".into()));
            }
            match tag.trim() {
                "M" => list.male.push(name.to_string()),
                "F" => list.female.push(name.to_string()),
                other => return Err(bad(format!("gender tag must be M or F, got {other:?}"))),
            }
        }
        Ok(list)
    }

    pub fn len(&self) -> usize {
        self.male.len() + self.female.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Names for one gender, or both genders interleaved (male first) when
    /// `gender` is `None`; truncated to `limit`.
    pub fn select(&self, gender: Option<Gender>, limit: Option<usize>) -> Vec<&str> {
        let mut out: Vec<&str> = match gender {
            Some(Gender::Male) => self.male.iter().map(String::as_str).collect(),
            Some(Gender::Female) => self.female.iter().map(String::as_str).collect(),
            None => {
                let n = self.male.len().max(self.female.len());
                (0..n)
                    .flat_map(|i| [self.male.get(i), self.female.get(i)])
                    .flatten()
                    .map(String::as_str)
                    .collect()
            }
        };
        if let Some(limit) = limit {
            out.truncate(limit);
        }
        out
    }

    fn gender_of(&self, name: &str) -> Option<Gender> {
        if self.male.iter().any(|n| n == name) {
            Some(Gender::Male)
        } else if self.female.iter().any(|n| n == name) {
            Some(Gender::Female)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionSet {
    pub dimensions: BTreeSet<Dimension>,
    /// Cap on names drawn from each name group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names_per_group: Option<usize>,
}

impl DimensionSet {
    pub fn new(dims: impl IntoIterator<Item = Dimension>) -> Self {
        Self {
            dimensions: dims.into_iter().collect(),
            names_per_group: None,
        }
    }

    pub fn has(&self, d: Dimension) -> bool {
        self.dimensions.contains(&d)
    }

    /// Machine label, e.g. `gender+sexual_orientation`.
    pub fn label(&self) -> String {
        self.dimensions.iter().map(|d| d.as_str()).collect::<Vec<_>>().join("+")
    }

    /// Report heading, e.g. `Gender+SOr`.
    pub fn title(&self) -> String {
        self.dimensions.iter().map(|d| d.title()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("dimension set #{0} is empty")]
    EmptySet(usize),
    #[error("dimension set {0} is listed more than once")]
    DuplicateSet(String),
    #[error("set {set}: names_per_group needs the names dimension and a positive value")]
    BadNameLimit { set: String },
    #[error("set {set} references names but no name lists are configured")]
    NoNameLists { set: String },
    #[error("set {set} needs the {group} name list, which is not configured")]
    MissingNameGroup { set: String, group: &'static str },
    #[error("set {set}: {group} has no {gender} names")]
    EmptyNameSelection {
        set: String,
        group: &'static str,
        gender: &'static str,
    },
    #[error("name {name:?} appears in both {a} and {b}")]
    NameInMultipleGroups {
        name: String,
        a: &'static str,
        b: &'static str,
    },
    #[error("unknown name group {0:?} (expected White, Black, Hispanic or Asian)")]
    UnknownNameGroup(String),
    #[error("name list line {line}: {message}")]
    NameLine { line: usize, message: String },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionConfig {
    pub version: String,
    pub sets: Vec<DimensionSet>,
    pub name_lists: BTreeMap<NameGroup, NameList>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    version: String,
    #[serde(default)]
    names: BTreeMap<String, String>,
    #[serde(rename = "set", default)]
    sets: Vec<DimensionSet>,
}

impl DimensionConfig {
    /// The shipped configuration: 167 profiles per vignette.
    pub fn standard() -> Self {
        Self::from_toml_with(STANDARD, |path| {
            BUILTIN_NAMES
                .iter()
                .find(|(p, _)| *p == path)
                .map(|(_, src)| src.to_string())
                .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::NotFound, path.to_string()))
        })
        .expect("builtin config is valid")
    }

    pub fn standard_source() -> &'static str {
        STANDARD
    }

    /// Load a TOML config; name-list paths resolve relative to its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_with(&src, |rel| std::fs::read_to_string(base.join(rel)))
    }

    pub fn from_toml_with(
        src: &str,
        read_names: impl Fn(&str) -> std::io::Result<String>,
    ) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(src)?;
        let mut name_lists = BTreeMap::new();
        for (group, path) in &file.names {
            let group = match group.as_str() {
                "White" => NameGroup::White,
                "Black" | "African-American" => NameGroup::Black,
                "Hispanic" => NameGroup::Hispanic,
                "Asian" => NameGroup::Asian,
                other => return Err(ConfigError::UnknownNameGroup(other.to_string())),
            };
            let text = read_names(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            name_lists.insert(group, NameList::parse(&text)?);
        }
        let cfg = Self {
            version: file.version,
            sets: file.sets,
            name_lists,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = HashSet::new();
        for (i, set) in self.sets.iter().enumerate() {
            if set.dimensions.is_empty() {
                return Err(ConfigError::EmptySet(i));
            }
            let label = set.label();
            if !seen.insert(label.clone()) {
                return Err(ConfigError::DuplicateSet(label));
            }
            if let Some(limit) = set.names_per_group {
                if limit == 0 || !set.has(Dimension::Names) {
                    return Err(ConfigError::BadNameLimit { set: label });
                }
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form (sets in order, names included).
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_vec(self).expect("config serializes"))
    }

    pub fn group_of_name(&self, name: &str) -> Option<NameGroup> {
        self.name_lists
            .iter()
            .find(|(_, l)| l.gender_of(name).is_some())
            .map(|(g, _)| *g)
    }

    fn check_names_unique(&self) -> Result<(), ConfigError> {
        let mut owner: HashMap<&str, NameGroup> = HashMap::new();
        for (group, list) in &self.name_lists {
            for name in list.male.iter().chain(&list.female) {
                if let Some(prev) = owner.insert(name, *group) {
                    if prev != *group {
                        return Err(ConfigError::NameInMultipleGroups {
                            name: name.clone(),
                            a: prev.title(),
                            b: group.title(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// One enumerated profile and where it belongs in the reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub set_label: String,
    /// Report column within the set, e.g. `F+Homo` or `A-A/B`.
    pub attribute: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name_group: Option<NameGroup>,
    pub profile: Profile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEnumeration {
    pub entries: Vec<ProfileEntry>,
}

impl ProfileEnumeration {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(set label, profile count)` in enumeration order.
    pub fn breakdown(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = Vec::new();
        for e in &self.entries {
            match out.last_mut() {
                Some((label, n)) if *label == e.set_label => *n += 1,
                _ => out.push((e.set_label.clone(), 1)),
            }
        }
        out
    }

    /// Display labels such as `gender:female`.
    pub fn labels(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.profile.to_string()).collect()
    }
}

fn attribute_label(p: &Profile, group: Option<NameGroup>) -> String {
    let mut parts = Vec::new();
    if let Some(g) = p.gender {
        parts.push(g.abbrev());
    }
    if let Some(e) = p.ethnicity {
        parts.push(e.abbrev());
    }
    if let Some(o) = p.sexual_orientation {
        parts.push(o.abbrev());
    }
    if let (Some(g), None) = (group, p.ethnicity) {
        parts.push(g.abbrev());
    }
    parts.join("+")
}

fn gender_word(g: Option<Gender>) -> &'static str {
    match g {
        Some(Gender::Male) => "male",
        Some(Gender::Female) => "female",
        None => "any",
    }
}

/// Expand a config into its ordered profile list.
///
/// Within a set the order is gender, then ethnicity, then orientation, then
/// name, each in declaration order.
pub fn enumerate_profiles(cfg: &DimensionConfig) -> Result<ProfileEnumeration, ConfigError> {
    cfg.validate()?;
    let mut entries = vec![ProfileEntry {
        set_label: DIMENSIONLESS.to_string(),
        attribute: "D".to_string(),
        name_group: None,
        profile: Profile::dimensionless(),
    }];
    let uses_names = cfg.sets.iter().any(|s| s.has(Dimension::Names));
    if uses_names {
        cfg.check_names_unique()?;
    }
    for set in &cfg.sets {
        let label = set.label();
        let genders: Vec<Option<Gender>> = if set.has(Dimension::Gender) {
            Gender::ALL.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let ethnicities: Vec<Option<Ethnicity>> = if set.has(Dimension::Ethnicity) {
            Ethnicity::ALL.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let orientations: Vec<Option<SexualOrientation>> = if set.has(Dimension::SexualOrientation) {
            SexualOrientation::ALL.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        if set.has(Dimension::Names) && cfg.name_lists.is_empty() {
            return Err(ConfigError::NoNameLists { set: label });
        }
        for &g in &genders {
            for &e in &ethnicities {
                for &o in &orientations {
                    let base = Profile {
                        gender: g,
                        ethnicity: e,
                        sexual_orientation: o,
                        name: None,
                    };
                    if !set.has(Dimension::Names) {
                        entries.push(ProfileEntry {
                            set_label: label.clone(),
                            attribute: attribute_label(&base, None),
                            name_group: None,
                            profile: base,
                        });
                        continue;
                    }
                    let groups: Vec<NameGroup> = match e {
                        Some(e) => vec![NameGroup::for_ethnicity(e)],
                        None => NameGroup::ALL.to_vec(),
                    };
                    for group in groups {
                        let list = cfg.name_lists.get(&group).ok_or(ConfigError::MissingNameGroup {
                            set: label.clone(),
                            group: group.title(),
                        })?;
                        let names = list.select(g, set.names_per_group);
                        if names.is_empty() {
                            return Err(ConfigError::EmptyNameSelection {
                                set: label.clone(),
                                group: group.title(),
                                gender: gender_word(g),
                            });
                        }
                        for name in names {
                            entries.push(ProfileEntry {
                                set_label: label.clone(),
                                attribute: attribute_label(&base, Some(group)),
                                name_group: Some(group),
                                profile: base.clone().with_name(name),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ProfileEnumeration { entries })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: NameGroup,
    pub male: usize,
    pub female: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameListReport {
    pub groups: Vec<GroupSummary>,
    pub violations: Vec<String>,
}

impl NameListReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for NameListReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(
                f,
                "{} groups × {} names, OK",
                self.groups.len(),
                2 * NAMES_PER_GENDER
            );
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            f.write_str(v)?;
        }
        Ok(())
    }
}

/// Check every name group for 10 male + 10 female names and no name listed
/// under both genders. Report only.
pub fn validate_name_lists(cfg: &DimensionConfig) -> NameListReport {
    let empty = NameList::default();
    let mut groups = Vec::new();
    let mut violations = Vec::new();
    for group in NameGroup::ALL {
        let list = cfg.name_lists.get(&group).unwrap_or(&empty);
        groups.push(GroupSummary {
            group,
            male: list.male.len(),
            female: list.female.len(),
        });
        let expected = 2 * NAMES_PER_GENDER;
        if list.len() != expected {
            violations.push(format!("{}: expected {expected}, found {}", group.title(), list.len()));
        } else if list.male.len() != NAMES_PER_GENDER {
            violations.push(format!(
                "{}: expected {NAMES_PER_GENDER} male and {NAMES_PER_GENDER} female, found {} and {}",
                group.title(),
                list.male.len(),
                list.female.len()
            ));
        }
        let male: HashSet<&str> = list.male.iter().map(String::as_str).collect();
        let mut both: Vec<&str> = list
            .female
            .iter()
            .map(String::as_str)
            .filter(|n| male.contains(n))
            .collect();
        both.sort_unstable();
        both.dedup();
        for name in both {
            violations.push(format!("{}: {name:?} listed as both male and female", group.title()));
        }
        for (gender, names) in [("male", &list.male), ("female", &list.female)] {
            let mut seen = HashSet::new();
            for n in names {
                if !seen.insert(n) {
                    violations.push(format!("{}: {n:?} listed twice among {gender} names", group.title()));
                }
            }
        }
    }
    NameListReport { groups, violations }
}
