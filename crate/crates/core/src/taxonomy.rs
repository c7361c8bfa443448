//! The 17 canonical layout labels and how the pipeline treats each one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Canonical layout label. Declaration order is the canonical table order,
/// which also keys the overlay palette.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Caption,
    CheckboxSelected,
    CheckboxUnselected,
    Code,
    DocumentIndex,
    Footnote,
    Form,
    Formula,
    KeyValueRegion,
    ListItem,
    PageFooter,
    PageHeader,
    Picture,
    SectionHeader,
    Table,
    Text,
    Title,
}

/// Processing role of a label in the post-processing pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelRole {
    Regular,
    Picture,
    Wrapper,
}

impl LabelRole {
    pub fn is_special(self) -> bool {
        !matches!(self, LabelRole::Regular)
    }
}

impl Label {
    pub const ALL: [Label; 17] = [
        Label::Caption,
        Label::CheckboxSelected,
        Label::CheckboxUnselected,
        Label::Code,
        Label::DocumentIndex,
        Label::Footnote,
        Label::Form,
        Label::Formula,
        Label::KeyValueRegion,
        Label::ListItem,
        Label::PageFooter,
        Label::PageHeader,
        Label::Picture,
        Label::SectionHeader,
        Label::Table,
        Label::Text,
        Label::Title,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Label::Caption => "Caption",
            Label::CheckboxSelected => "Checkbox-Selected",
            Label::CheckboxUnselected => "Checkbox-Unselected",
            Label::Code => "Code",
            Label::DocumentIndex => "Document Index",
            Label::Footnote => "Footnote",
            Label::Form => "Form",
            Label::Formula => "Formula",
            Label::KeyValueRegion => "Key-Value Region",
            Label::ListItem => "List-item",
            Label::PageFooter => "Page-footer",
            Label::PageHeader => "Page-header",
            Label::Picture => "Picture",
            Label::SectionHeader => "Section-header",
            Label::Table => "Table",
            Label::Text => "Text",
            Label::Title => "Title",
        }
    }

    /// Position in the canonical table order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn role(self) -> LabelRole {
        role_of(self)
    }
}

pub fn role_of(label: Label) -> LabelRole {
    match label {
        Label::Picture => LabelRole::Picture,
        Label::Form | Label::KeyValueRegion | Label::Table | Label::DocumentIndex => {
            LabelRole::Wrapper
        }
        _ => LabelRole::Regular,
    }
}

/// Lowercase, map `-`/`_` to spaces, collapse whitespace.
fn normalize(name: &str) -> String {
    name.to_lowercase()
        .replace(['-', '_'], " ")
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_label(name: &str) -> Result<Label> {
    let wanted = normalize(name);
    Label::ALL
        .iter()
        .copied()
        .find(|l| normalize(l.name()) == wanted)
        .ok_or_else(|| Error::UnknownLabel {
            name: name.to_string(),
            valid: Label::ALL.map(Label::name).join(", "),
        })
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_label(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_label(&s).map_err(serde::de::Error::custom)
    }
}

/// Labels missing from the original DocLayNet taxonomy.
pub fn default_delta_labels() -> BTreeSet<Label> {
    [
        Label::DocumentIndex,
        Label::Code,
        Label::CheckboxSelected,
        Label::CheckboxUnselected,
        Label::Form,
        Label::KeyValueRegion,
    ]
    .into_iter()
    .collect()
}

/// Wrappers first, then Picture, then the regular labels in table order.
pub fn default_priority() -> Vec<Label> {
    let mut order = vec![
        Label::Form,
        Label::KeyValueRegion,
        Label::Table,
        Label::DocumentIndex,
        Label::Picture,
    ];
    order.extend(Label::ALL.iter().filter(|l| l.role() == LabelRole::Regular));
    order
}

fn default_min_score() -> BTreeMap<Label, f64> {
    Label::ALL.iter().map(|&l| (l, 0.5)).collect()
}

fn default_overlap_threshold() -> f64 {
    0.5
}

fn default_picture_page_coverage_limit() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaxonomyConfig {
    /// Per-label gate. Labels missing from a loaded map keep 0.5.
    #[serde(deserialize_with = "deserialize_min_score")]
    pub min_score: BTreeMap<Label, f64>,
    /// Best-proposal label preference, most preferred first.
    #[serde(deserialize_with = "deserialize_priority")]
    pub priority: Vec<Label>,
    pub overlap_threshold: f64,
    pub picture_page_coverage_limit: f64,
    pub delta_labels: BTreeSet<Label>,
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        Self {
            min_score: default_min_score(),
            priority: default_priority(),
            overlap_threshold: default_overlap_threshold(),
            picture_page_coverage_limit: default_picture_page_coverage_limit(),
            delta_labels: default_delta_labels(),
        }
    }
}

fn deserialize_min_score<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<Label, f64>, D::Error> {
    let partial = BTreeMap::<Label, f64>::deserialize(d)?;
    let mut full = default_min_score();
    full.extend(partial);
    Ok(full)
}

fn deserialize_priority<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Vec<Label>, D::Error> {
    let listed = Vec::<Label>::deserialize(d)?;
    complete_priority(listed).map_err(serde::de::Error::custom)
}

/// Extends a partial preference list to a total order by appending the
/// unlisted labels in default order.
fn complete_priority(mut listed: Vec<Label>) -> std::result::Result<Vec<Label>, String> {
    let mut seen = BTreeSet::new();
    for l in &listed {
        if !seen.insert(*l) {
            return Err(format!("label {l} appears twice in priority"));
        }
    }
    listed.extend(default_priority().into_iter().filter(|l| !seen.contains(l)));
    Ok(listed)
}

impl TaxonomyConfig {
    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::from_json(source_name, text, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::ingest::read_text(path)?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if let Some((l, v)) = self.min_score.iter().find(|(_, v)| !in_unit(**v)) {
            return Err(Error::Validation(format!("min_score for {l} is {v}, outside [0, 1]")));
        }
        for (name, v) in [
            ("overlap_threshold", self.overlap_threshold),
            ("picture_page_coverage_limit", self.picture_page_coverage_limit),
        ] {
            if !in_unit(v) {
                return Err(Error::Validation(format!("{name} is {v}, outside [0, 1]")));
            }
        }
        if self.priority.len() != Label::ALL.len()
            || self.priority.iter().collect::<BTreeSet<_>>().len() != Label::ALL.len()
        {
            return Err(Error::Validation("priority must rank every label exactly once".into()));
        }
        Ok(())
    }

    pub fn min_score_for(&self, label: Label) -> f64 {
        self.min_score.get(&label).copied().unwrap_or(0.5)
    }

    /// Rank of `label` in the preference order, 0 = most preferred.
    pub fn priority_rank(&self, label: Label) -> usize {
        self.priority
            .iter()
            .position(|&l| l == label)
            .unwrap_or(self.priority.len())
    }
}
