//! Document-targeted evaluation protocol.
//!
//! 1. Keep only detections scoring strictly above 0.50 and set every
//!    surviving score to 1.0.
//! 2. Find the labels present in both predictions and ground truth across
//!    the whole dataset.
//! 3. Per page, drop boxes outside that label set, then skip the page if the
//!    predicted and ground-truth box counts differ.
//! 4. Compute COCO mAP over IoU 0.50:0.05:0.95 on the remaining pages.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval_coco::{evaluate_coco, EvalOptions};
use crate::ingest::{Dataset, PageSample};
use crate::taxonomy::Label;

pub const SCORE_GATE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoclingEvalReport {
    #[serde(rename = "mAP_50_95")]
    pub map_50_95: f64,
    pub samples_total: usize,
    pub samples_skipped: usize,
    pub label_intersection: BTreeSet<Label>,
}

pub fn prepare_predictions(mut dataset: Dataset) -> Dataset {
    for page in &mut dataset.pages {
        page.predictions.retain(|d| d.score > SCORE_GATE);
        for d in &mut page.predictions {
            d.score = 1.0;
        }
    }
    dataset
}

pub fn label_intersection(dataset: &Dataset) -> BTreeSet<Label> {
    let predicted: BTreeSet<Label> = dataset
        .pages
        .iter()
        .flat_map(|p| p.predictions.iter().map(|d| d.label))
        .collect();
    let annotated: BTreeSet<Label> = dataset
        .pages
        .iter()
        .flat_map(|p| p.ground_truth.iter().map(|a| a.label))
        .collect();
    predicted.intersection(&annotated).copied().collect()
}

/// Returns the kept pages and how many pages were skipped.
pub fn filter_samples(dataset: &Dataset, labels: &BTreeSet<Label>) -> (Vec<PageSample>, usize) {
    let mut kept = Vec::new();
    let mut skipped = 0;
    for page in &dataset.pages {
        let mut p = page.clone();
        p.predictions.retain(|d| labels.contains(&d.label));
        p.ground_truth.retain(|a| labels.contains(&a.label));
        if p.predictions.len() == p.ground_truth.len() {
            kept.push(p);
        } else {
            skipped += 1;
        }
    }
    (kept, skipped)
}

pub fn evaluate_docling(dataset: &Dataset) -> Result<DoclingEvalReport> {
    let total = dataset.pages.len();
    if total == 0 {
        return Err(Error::EmptyDataset("no pages to evaluate".into()));
    }
    let prepared = prepare_predictions(dataset.clone());
    let labels = label_intersection(&prepared);
    let (kept, skipped) = filter_samples(&prepared, &labels);
    if kept.is_empty() {
        return Err(Error::AllSkipped { total });
    }
    let kept_ds = Dataset {
        pages: kept,
        categories: dataset.categories.clone(),
        dropped_boxes: 0,
    };
    let metrics = evaluate_coco(&kept_ds, &EvalOptions::default())?;
    if metrics.summary.map_50_95 < 0.0 {
        return Err(Error::EmptyDataset(
            "kept samples contain no ground-truth boxes".into(),
        ));
    }
    Ok(DoclingEvalReport {
        map_50_95: metrics.summary.map_50_95,
        samples_total: total,
        samples_skipped: skipped,
        label_intersection: labels,
    })
}
