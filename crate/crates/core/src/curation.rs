//! Corpus curation by filtering.
//!
//! A separate "filtering" detector scans every page; a page is flagged when
//! it carries at least one detection of a delta label scoring at or above
//! the threshold, and flagged pages are excluded. Independently, pages whose
//! ground truth contains a trigger label (Table by default) can be excised.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, Detection};
use crate::taxonomy::Label;

/// Pages flagged at one threshold, with per-label hit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flagging {
    pub threshold: f64,
    pub pages: BTreeSet<String>,
    /// Number of flagged pages each delta label was found on.
    pub hits: BTreeMap<Label, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationReport {
    pub threshold: f64,
    pub pages_total: usize,
    pub pages_excluded: usize,
    pub exclusion_fraction: f64,
    pub delta_hits: BTreeMap<Label, usize>,
}

pub fn flag_delta_pages(
    page_detections: &BTreeMap<String, Vec<Detection>>,
    delta: &BTreeSet<Label>,
    threshold: f64,
) -> Flagging {
    let mut pages = BTreeSet::new();
    let mut hits: BTreeMap<Label, usize> = BTreeMap::new();
    for (page_id, dets) in page_detections {
        let found: BTreeSet<Label> = dets
            .iter()
            .filter(|d| delta.contains(&d.label) && d.score >= threshold)
            .map(|d| d.label)
            .collect();
        if found.is_empty() {
            continue;
        }
        pages.insert(page_id.clone());
        for l in found {
            *hits.entry(l).or_default() += 1;
        }
    }
    Flagging {
        threshold,
        pages,
        hits,
    }
}

/// Predictions of every page keyed by page id.
pub fn detections_by_page(dataset: &Dataset) -> BTreeMap<String, Vec<Detection>> {
    dataset
        .pages
        .iter()
        .map(|p| (p.page_id.clone(), p.predictions.clone()))
        .collect()
}

pub fn apply_exclusion(dataset: &Dataset, flagged: &Flagging) -> Result<(Dataset, CurationReport)> {
    let ids = dataset.page_ids();
    if let Some(missing) = flagged.pages.iter().find(|p| !ids.contains(p.as_str())) {
        return Err(Error::ReferentialIntegrity(format!(
            "flagged page {missing:?} is not in the dataset"
        )));
    }
    let mut curated = dataset.clone();
    curated.pages.retain(|p| !flagged.pages.contains(&p.page_id));
    let total = dataset.pages.len();
    let excluded = total - curated.pages.len();
    let report = CurationReport {
        threshold: flagged.threshold,
        pages_total: total,
        pages_excluded: excluded,
        exclusion_fraction: if total == 0 { 0.0 } else { excluded as f64 / total as f64 },
        delta_hits: flagged.hits.clone(),
    };
    Ok((curated, report))
}

/// Removes every page whose ground truth contains `trigger`.
pub fn excise_tabled_pages(dataset: &Dataset, trigger: Label) -> Dataset {
    let mut out = dataset.clone();
    out.pages
        .retain(|p| !p.ground_truth.iter().any(|a| a.label == trigger));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::ingest::{Annotation, PageSample};
    use crate::taxonomy::default_delta_labels;

    fn det(label: Label, score: f64) -> Detection {
        Detection {
            label,
            bbox: BBox::new(0., 0., 1., 1.).unwrap(),
            score,
        }
    }

    fn one(page: &str, dets: Vec<Detection>) -> BTreeMap<String, Vec<Detection>> {
        [(page.to_string(), dets)].into()
    }

    #[test]
    fn flagging() {
        let delta = default_delta_labels();
        let f = flag_delta_pages(&one("p", vec![det(Label::Form, 0.35)]), &delta, 0.3);
        assert!(f.pages.contains("p"));
        assert_eq!(f.hits[&Label::Form], 1);
        let f = flag_delta_pages(
            &one("p", vec![det(Label::Text, 0.99), det(Label::Table, 0.99)]),
            &delta,
            0.3,
        );
        assert!(f.pages.is_empty());
        let f = flag_delta_pages(&one("p", vec![det(Label::Form, 0.45)]), &delta, 0.5);
        assert!(f.pages.is_empty());
        // inclusive boundary
        let f = flag_delta_pages(&one("p", vec![det(Label::Code, 0.4)]), &delta, 0.4);
        assert_eq!(f.pages.len(), 1);
    }

    fn pages(n: usize) -> Dataset {
        Dataset::from_pages(
            (0..n)
                .map(|i| PageSample::new(format!("p{i}"), 10., 10.).unwrap())
                .collect(),
        )
    }

    #[test]
    fn exclusion() {
        let ds = pages(10);
        let flagged = Flagging {
            threshold: 0.3,
            pages: ["p1", "p4", "p9"].iter().map(|s| s.to_string()).collect(),
            hits: BTreeMap::new(),
        };
        let (curated, report) = apply_exclusion(&ds, &flagged).unwrap();
        assert_eq!(curated.pages.len(), 7);
        assert_eq!(report.pages_excluded, 3);
        assert!((report.exclusion_fraction - 0.3).abs() < 1e-15);

        let none = Flagging {
            threshold: 0.3,
            pages: BTreeSet::new(),
            hits: BTreeMap::new(),
        };
        let (same, report) = apply_exclusion(&ds, &none).unwrap();
        assert_eq!(same, ds);
        assert_eq!(report.exclusion_fraction, 0.0);

        let bogus = Flagging {
            pages: ["nope".to_string()].into(),
            ..none
        };
        assert!(matches!(apply_exclusion(&ds, &bogus), Err(Error::ReferentialIntegrity(_))));
    }

    #[test]
    fn lower_threshold_flags_superset() {
        let delta = default_delta_labels();
        let dets: BTreeMap<String, Vec<Detection>> = [
            ("a".to_string(), vec![det(Label::Form, 0.32)]),
            ("b".to_string(), vec![det(Label::Code, 0.55)]),
            ("c".to_string(), vec![det(Label::Text, 0.9)]),
        ]
        .into();
        let low = flag_delta_pages(&dets, &delta, 0.3);
        let high = flag_delta_pages(&dets, &delta, 0.5);
        assert!(low.pages.is_superset(&high.pages));
        assert_eq!(low.pages.len(), 2);
        assert_eq!(high.pages.len(), 1);
    }

    #[test]
    fn table_excision() {
        let mut ds = pages(4);
        ds.pages[2].ground_truth.push(Annotation {
            id: 1,
            label: Label::Table,
            bbox: BBox::new(0., 0., 5., 5.).unwrap(),
        });
        ds.pages[3].ground_truth.push(Annotation {
            id: 1,
            label: Label::Text,
            bbox: BBox::new(0., 0., 5., 5.).unwrap(),
        });
        let out = excise_tabled_pages(&ds, Label::Table);
        assert_eq!(out.pages.len(), 3);
        assert!(out.page("p2").is_none());
        assert_eq!(excise_tabled_pages(&out, Label::Table), out);
    }
}
