use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    /// Column abbreviation used in report tables.
    pub fn abbrev(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }
}

/// Ethnicity options. Declaration order is the report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Ethnicity {
    White,
    #[serde(rename = "African-American")]
    AfricanAmerican,
    Black,
    Hispanic,
    Asian,
}

impl Ethnicity {
    pub const ALL: [Ethnicity; 5] = [
        Ethnicity::White,
        Ethnicity::AfricanAmerican,
        Ethnicity::Black,
        Ethnicity::Hispanic,
        Ethnicity::Asian,
    ];

    /// The adjective inserted into the subject descriptor.
    pub fn as_str(self) -> &'static str {
        match self {
            Ethnicity::White => "White",
            Ethnicity::AfricanAmerican => "African-American",
            Ethnicity::Black => "Black",
            Ethnicity::Hispanic => "Hispanic",
            Ethnicity::Asian => "Asian",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Ethnicity::White => "W",
            Ethnicity::AfricanAmerican => "A-A",
            Ethnicity::Black => "B",
            Ethnicity::Hispanic => "H",
            Ethnicity::Asian => "As",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SexualOrientation {
    Heterosexual,
    Bisexual,
    Homosexual,
}

impl SexualOrientation {
    pub const ALL: [SexualOrientation; 3] = [
        SexualOrientation::Heterosexual,
        SexualOrientation::Bisexual,
        SexualOrientation::Homosexual,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SexualOrientation::Heterosexual => "heterosexual",
            SexualOrientation::Bisexual => "bisexual",
            SexualOrientation::Homosexual => "homosexual",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            SexualOrientation::Heterosexual => "Hetero",
            SexualOrientation::Bisexual => "Bi",
            SexualOrientation::Homosexual => "Homo",
        }
    }
}

/// One point in demographic space. The all-absent profile is "dimensionless".
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Profile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnicity: Option<Ethnicity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sexual_orientation: Option<SexualOrientation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Profile {
    pub fn dimensionless() -> Self {
        Self::default()
    }

    pub fn is_dimensionless(&self) -> bool {
        self == &Self::default()
    }

    pub fn with_gender(mut self, g: Gender) -> Self {
        self.gender = Some(g);
        self
    }

    pub fn with_ethnicity(mut self, e: Ethnicity) -> Self {
        self.ethnicity = Some(e);
        self
    }

    pub fn with_orientation(mut self, o: SexualOrientation) -> Self {
        self.sexual_orientation = Some(o);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Field-ordered serialization used for content digests. Absent fields
    /// are kept as empty values so the layout never shifts.
    pub fn canonical(&self) -> String {
        format!(
            "gender={};ethnicity={};sexual_orientation={};name={}",
            self.gender.map_or("", Gender::as_str),
            self.ethnicity.map_or("", Ethnicity::as_str),
            self.sexual_orientation.map_or("", SexualOrientation::as_str),
            self.name.as_deref().unwrap_or(""),
        )
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_dimensionless() {
            return f.write_str("dimensionless");
        }
        let mut parts = Vec::new();
        if let Some(g) = self.gender {
            parts.push(format!("gender:{}", g.as_str()));
        }
        if let Some(e) = self.ethnicity {
            parts.push(format!("ethnicity:{}", e.as_str()));
        }
        if let Some(o) = self.sexual_orientation {
            parts.push(format!("sexual_orientation:{}", o.as_str()));
        }
        if let Some(n) = &self.name {
            parts.push(format!("name:{n}"));
        }
        f.write_str(&parts.join(","))
    }
}
