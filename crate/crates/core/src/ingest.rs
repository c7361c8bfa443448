//! Loading ground truth, predictions and PDF text cells into [`PageSample`]s.
//!
//! Ground truth is COCO object-detection JSON and predictions are the COCO
//! "results" array, both with `[x, y, width, height]` boxes. The cells file
//! uses the native PDF `[left, top, right, bottom]` convention:
//!
//! ```json
//! {"pages": [{"page_id": "p1", "cells": [{"id": 0, "bbox": [l, t, r, b], "text": "..."}]}]}
//! ```
//!
//! Pages are keyed by the stem of the COCO `file_name`. Boxes that stick out
//! of the page are clamped; boxes entirely outside it are dropped and counted
//! in [`Dataset::dropped_boxes`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::taxonomy::{parse_label, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub id: u64,
    pub label: Label,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub label: Label,
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextCell {
    pub id: u64,
    pub bbox: BBox,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageSample {
    pub page_id: String,
    /// Numeric COCO image id, kept so results files can be joined and exported.
    #[serde(default)]
    pub image_id: u64,
    pub width: f64,
    pub height: f64,
    #[serde(default)]
    pub ground_truth: Vec<Annotation>,
    #[serde(default)]
    pub predictions: Vec<Detection>,
    #[serde(default)]
    pub cells: Option<Vec<TextCell>>,
}

impl PageSample {
    pub fn new(page_id: impl Into<String>, width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::Validation(format!(
                "page dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            page_id: page_id.into(),
            image_id: 0,
            width,
            height,
            ground_truth: Vec::new(),
            predictions: Vec::new(),
            cells: None,
        })
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width, self.height).expect("validated page size")
    }
}

/// A set of pages plus the COCO category table they were loaded with.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub pages: Vec<PageSample>,
    pub categories: BTreeMap<u64, Label>,
    /// Boxes discarded during ingestion because they lay fully off-page.
    #[serde(default)]
    pub dropped_boxes: usize,
}

impl Dataset {
    /// Wraps in-memory pages with the canonical category ids (table order, from 1).
    pub fn from_pages(pages: Vec<PageSample>) -> Self {
        let categories = Label::ALL
            .iter()
            .enumerate()
            .map(|(i, &l)| (i as u64 + 1, l))
            .collect();
        let mut ds = Self {
            pages,
            categories,
            dropped_boxes: 0,
        };
        for (i, p) in ds.pages.iter_mut().enumerate() {
            if p.image_id == 0 {
                p.image_id = i as u64 + 1;
            }
        }
        ds
    }

    pub fn page(&self, page_id: &str) -> Option<&PageSample> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }

    pub fn page_ids(&self) -> BTreeSet<&str> {
        self.pages.iter().map(|p| p.page_id.as_str()).collect()
    }

    /// Smallest category id carrying `label`.
    pub fn category_id(&self, label: Label) -> Option<u64> {
        self.categories
            .iter()
            .find(|(_, &l)| l == label)
            .map(|(&id, _)| id)
    }

    fn image_index(&self) -> HashMap<u64, usize> {
        self.pages
            .iter()
            .enumerate()
            .map(|(i, p)| (p.image_id, i))
            .collect()
    }

    fn label_for_category(&self, category_id: u64) -> Result<Label> {
        self.categories.get(&category_id).copied().ok_or_else(|| {
            Error::ReferentialIntegrity(format!("category id {category_id} is not defined"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<u64>,
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iscrowd: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoFile {
    pub images: Vec<CocoImage>,
    #[serde(default)]
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoResult {
    pub image_id: u64,
    pub category_id: u64,
    pub bbox: [f64; 4],
    pub score: f64,
}

#[derive(Debug, Clone, Deserialize)]
struct CellsFile {
    pages: Vec<CellsPage>,
}

#[derive(Debug, Clone, Deserialize)]
struct CellsPage {
    page_id: String,
    cells: Vec<RawCell>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawCell {
    id: u64,
    bbox: [f64; 4],
    #[serde(default)]
    text: String,
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str, source_name: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::from_json(source_name, text, &e))
}

fn page_id_from_file_name(file_name: &str) -> String {
    Path::new(file_name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| file_name.to_string())
}

fn xywh_box(raw: [f64; 4], what: &str) -> Result<BBox> {
    let [x, y, w, h] = raw;
    if w < 0.0 || h < 0.0 {
        return Err(Error::Validation(format!("{what}: negative box size {raw:?}")));
    }
    BBox::from_xywh(x, y, w, h).map_err(|e| Error::Validation(format!("{what}: {e}")))
}

/// Clamps to the page, counting boxes that fall off it entirely.
fn clamp_or_drop(bbox: BBox, page: &PageSample, dropped: &mut usize) -> Option<BBox> {
    let clamped = bbox.clamp_to_page(page.width, page.height);
    if clamped.is_none() {
        *dropped += 1;
    }
    clamped
}

pub fn load_ground_truth(path: &Path) -> Result<Dataset> {
    parse_ground_truth(&read_text(path)?, &path.display().to_string())
}

pub fn parse_ground_truth(text: &str, source_name: &str) -> Result<Dataset> {
    let coco: CocoFile = parse_json(text, source_name)?;
    dataset_from_coco(&coco)
}

pub fn dataset_from_coco(coco: &CocoFile) -> Result<Dataset> {
    let mut categories = BTreeMap::new();
    for c in &coco.categories {
        categories.insert(c.id, parse_label(&c.name)?);
    }

    let mut ds = Dataset {
        pages: Vec::with_capacity(coco.images.len()),
        categories,
        dropped_boxes: 0,
    };
    let mut seen_pages = BTreeSet::new();
    for img in &coco.images {
        let mut page = PageSample::new(page_id_from_file_name(&img.file_name), img.width, img.height)?;
        page.image_id = img.id;
        if !seen_pages.insert(page.page_id.clone()) {
            return Err(Error::Validation(format!("duplicate page id {:?}", page.page_id)));
        }
        ds.pages.push(page);
    }
    let index = ds.image_index();
    if index.len() != ds.pages.len() {
        return Err(Error::Validation("duplicate image id".into()));
    }

    let mut dropped = 0;
    let mut pending_ids: Vec<Vec<usize>> = vec![Vec::new(); ds.pages.len()];
    for ann in &coco.annotations {
        let &pi = index.get(&ann.image_id).ok_or_else(|| {
            Error::ReferentialIntegrity(format!(
                "annotation references missing image id {}",
                ann.image_id
            ))
        })?;
        let label = ds.label_for_category(ann.category_id)?;
        let bbox = xywh_box(ann.bbox, "annotation")?;
        let page = &ds.pages[pi];
        let Some(bbox) = clamp_or_drop(bbox, page, &mut dropped) else {
            continue;
        };
        let page = &mut ds.pages[pi];
        if ann.id.is_none() {
            pending_ids[pi].push(page.ground_truth.len());
        }
        page.ground_truth.push(Annotation {
            id: ann.id.unwrap_or(0),
            label,
            bbox,
        });
    }

    for (page, pending) in ds.pages.iter_mut().zip(pending_ids) {
        let mut next = page
            .ground_truth
            .iter()
            .enumerate()
            .filter(|(i, _)| !pending.contains(i))
            .map(|(_, a)| a.id + 1)
            .max()
            .unwrap_or(1);
        for i in pending {
            page.ground_truth[i].id = next;
            next += 1;
        }
        let mut ids = BTreeSet::new();
        if let Some(dup) = page.ground_truth.iter().find(|a| !ids.insert(a.id)) {
            return Err(Error::Validation(format!(
                "annotation id {} appears twice on page {:?}",
                dup.id, page.page_id
            )));
        }
    }

    if dropped > 0 {
        log::warn!("dropped {dropped} ground-truth boxes lying outside their page");
    }
    ds.dropped_boxes = dropped;
    Ok(ds)
}

pub fn load_predictions(path: &Path, dataset: Dataset) -> Result<Dataset> {
    parse_predictions(&read_text(path)?, &path.display().to_string(), dataset)
}

pub fn parse_predictions(text: &str, source_name: &str, dataset: Dataset) -> Result<Dataset> {
    let results: Vec<CocoResult> = parse_json(text, source_name)?;
    attach_predictions(&results, dataset)
}

/// Replaces every page's predictions with `results`, preserving input order.
pub fn attach_predictions(results: &[CocoResult], mut dataset: Dataset) -> Result<Dataset> {
    let index = dataset.image_index();
    let mut per_page: Vec<Vec<Detection>> = vec![Vec::new(); dataset.pages.len()];
    let mut dropped = 0;
    for r in results {
        if !(0.0..=1.0).contains(&r.score) {
            return Err(Error::Validation(format!(
                "score {} for image {} is outside [0, 1]",
                r.score, r.image_id
            )));
        }
        let &pi = index.get(&r.image_id).ok_or_else(|| {
            Error::ReferentialIntegrity(format!("result references unknown image id {}", r.image_id))
        })?;
        let label = dataset.label_for_category(r.category_id)?;
        let bbox = xywh_box(r.bbox, "result")?;
        if let Some(bbox) = clamp_or_drop(bbox, &dataset.pages[pi], &mut dropped) {
            per_page[pi].push(Detection {
                label,
                bbox,
                score: r.score,
            });
        }
    }
    for (page, preds) in dataset.pages.iter_mut().zip(per_page) {
        page.predictions = preds;
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} predicted boxes lying outside their page");
    }
    dataset.dropped_boxes += dropped;
    Ok(dataset)
}

pub fn load_cells(path: &Path, dataset: Dataset) -> Result<Dataset> {
    parse_cells(&read_text(path)?, &path.display().to_string(), dataset)
}

pub fn parse_cells(text: &str, source_name: &str, mut dataset: Dataset) -> Result<Dataset> {
    let file: CellsFile = parse_json(text, source_name)?;
    let index: HashMap<String, usize> = dataset
        .pages
        .iter()
        .enumerate()
        .map(|(i, p)| (p.page_id.clone(), i))
        .collect();
    let mut dropped = 0;
    for cp in file.pages {
        let &pi = index.get(&cp.page_id).ok_or_else(|| {
            Error::ReferentialIntegrity(format!("cells reference unknown page {:?}", cp.page_id))
        })?;
        let page = &dataset.pages[pi];
        let mut ids = BTreeSet::new();
        let mut cells = Vec::with_capacity(cp.cells.len());
        for raw in cp.cells {
            if !ids.insert(raw.id) {
                return Err(Error::Validation(format!(
                    "cell id {} appears twice on page {:?}",
                    raw.id, cp.page_id
                )));
            }
            let [l, t, r, b] = raw.bbox;
            let bbox = BBox::new(l, t, r, b)
                .map_err(|e| Error::Validation(format!("cell {}: {e}", raw.id)))?;
            if let Some(bbox) = clamp_or_drop(bbox, page, &mut dropped) {
                cells.push(TextCell {
                    id: raw.id,
                    bbox,
                    text: raw.text,
                });
            }
        }
        dataset.pages[pi].cells = Some(cells);
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} text cells lying outside their page");
    }
    dataset.dropped_boxes += dropped;
    Ok(dataset)
}

/// Exports the ground truth back to COCO. Page ids become `<page_id>.png`.
pub fn to_coco_ground_truth(dataset: &Dataset) -> Result<CocoFile> {
    let images = dataset
        .pages
        .iter()
        .map(|p| CocoImage {
            id: p.image_id,
            file_name: format!("{}.png", p.page_id),
            width: p.width,
            height: p.height,
        })
        .collect();
    let mut annotations = Vec::new();
    for p in &dataset.pages {
        for a in &p.ground_truth {
            annotations.push(CocoAnnotation {
                id: Some(a.id),
                image_id: p.image_id,
                category_id: category_or_err(dataset, a.label)?,
                bbox: a.bbox.to_xywh(),
                area: Some(a.bbox.area()),
                iscrowd: Some(0),
            });
        }
    }
    let categories = dataset
        .categories
        .iter()
        .map(|(&id, l)| CocoCategory {
            id,
            name: l.name().to_string(),
        })
        .collect();
    Ok(CocoFile {
        images,
        annotations,
        categories,
    })
}

pub fn to_coco_results(dataset: &Dataset) -> Result<Vec<CocoResult>> {
    let mut out = Vec::new();
    for p in &dataset.pages {
        for d in &p.predictions {
            out.push(CocoResult {
                image_id: p.image_id,
                category_id: category_or_err(dataset, d.label)?,
                bbox: d.bbox.to_xywh(),
                score: d.score,
            });
        }
    }
    Ok(out)
}

fn category_or_err(dataset: &Dataset, label: Label) -> Result<u64> {
    dataset.category_id(label).ok_or_else(|| {
        Error::ReferentialIntegrity(format!("no category id registered for {label}"))
    })
}

/// Annotation counts for one label (or the grand total) across splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitRow {
    pub train: u64,
    pub val: u64,
    pub test: u64,
    pub total: u64,
}

impl SplitRow {
    pub fn new(train: u64, val: u64, test: u64, total: u64) -> Self {
        Self {
            train,
            val,
            test,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub per_label: BTreeMap<Label, SplitRow>,
    pub total: SplitRow,
}

impl SplitCounts {
    /// Verifies every row and column foots: `train + val + test = total`
    /// per label, and each column of the total row is the column sum.
    pub fn cross_foot(&self) -> Result<()> {
        let rows = self
            .per_label
            .iter()
            .map(|(l, r)| (l.name(), r))
            .chain(std::iter::once(("Total", &self.total)));
        for (name, r) in rows {
            if r.train + r.val + r.test != r.total {
                return Err(Error::Validation(format!(
                    "{name}: {} + {} + {} != {}",
                    r.train, r.val, r.test, r.total
                )));
            }
        }
        let sum = self.per_label.values().fold(SplitRow::default(), |acc, r| SplitRow {
            train: acc.train + r.train,
            val: acc.val + r.val,
            test: acc.test + r.test,
            total: acc.total + r.total,
        });
        if sum != self.total {
            return Err(Error::Validation(format!(
                "column sums {sum:?} do not match total row {:?}",
                self.total
            )));
        }
        Ok(())
    }
}

/// Counts ground-truth annotations per label in each split.
pub fn split_counts(train: &Dataset, val: &Dataset, test: &Dataset) -> Result<SplitCounts> {
    let count = |ds: &Dataset| {
        let mut m: BTreeMap<Label, u64> = BTreeMap::new();
        for a in ds.pages.iter().flat_map(|p| &p.ground_truth) {
            *m.entry(a.label).or_default() += 1;
        }
        m
    };
    let (tr, va, te) = (count(train), count(val), count(test));
    let per_label: BTreeMap<Label, SplitRow> = Label::ALL
        .iter()
        .map(|l| {
            let get = |m: &BTreeMap<Label, u64>| m.get(l).copied().unwrap_or(0);
            let (a, b, c) = (get(&tr), get(&va), get(&te));
            (*l, SplitRow::new(a, b, c, a + b + c))
        })
        .collect();
    let col = |f: fn(&SplitRow) -> u64| per_label.values().map(f).sum::<u64>();
    let total = SplitRow::new(col(|r| r.train), col(|r| r.val), col(|r| r.test), col(|r| r.total));
    let counts = SplitCounts { per_label, total };
    counts.cross_foot()?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GT: &str = r#"{
        "images": [{"id": 1, "file_name": "p1.png", "width": 100, "height": 80},
                   {"id": 2, "file_name": "scans/p7.png", "width": 100, "height": 80}],
        "annotations": [{"id": 5, "image_id": 1, "category_id": 3, "bbox": [10, 10, 40, 20]},
                        {"id": 6, "image_id": 1, "category_id": 2, "bbox": [90, 70, 30, 30]},
                        {"id": 7, "image_id": 2, "category_id": 2, "bbox": [200, 200, 5, 5]}],
        "categories": [{"id": 2, "name": "Form"}, {"id": 3, "name": "Table"}, {"id": 4, "name": "Text"}]
    }"#;

    fn gt() -> Dataset {
        parse_ground_truth(GT, "gt").unwrap()
    }

    #[test]
    fn coco_ground_truth_conversion() {
        let ds = gt();
        assert_eq!(ds.pages.len(), 2);
        let p1 = &ds.pages[0];
        assert_eq!(p1.page_id, "p1");
        assert_eq!(ds.pages[1].page_id, "p7");
        assert_eq!(p1.ground_truth[0].label, Label::Table);
        assert_eq!(p1.ground_truth[0].bbox, BBox::new(10., 10., 50., 30.).unwrap());
        // Form partially off-page is clamped
        assert_eq!(p1.ground_truth[1].label, Label::Form);
        assert_eq!(p1.ground_truth[1].bbox, BBox::new(90., 70., 100., 80.).unwrap());
        // fully outside is dropped
        assert!(ds.pages[1].ground_truth.is_empty());
        assert_eq!(ds.dropped_boxes, 1);
    }

    #[test]
    fn empty_annotations() {
        let ds = parse_ground_truth(
            r#"{"images": [{"id": 1, "file_name": "a.png", "width": 10, "height": 10}],
                "annotations": [], "categories": []}"#,
            "gt",
        )
        .unwrap();
        assert!(ds.pages[0].ground_truth.is_empty());
    }

    #[test]
    fn ground_truth_errors() {
        let err = parse_ground_truth("{\"images\": [", "gt").unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let bad_cat = GT.replace("\"Text\"", "\"Header\"");
        assert!(matches!(parse_ground_truth(&bad_cat, "gt"), Err(Error::UnknownLabel { .. })));
        let bad_img = GT.replace("\"image_id\": 2", "\"image_id\": 9");
        assert!(matches!(
            parse_ground_truth(&bad_img, "gt"),
            Err(Error::ReferentialIntegrity(_))
        ));
    }

    #[test]
    fn missing_annotation_ids_are_assigned() {
        let ds = parse_ground_truth(
            r#"{"images": [{"id": 1, "file_name": "a.png", "width": 100, "height": 100}],
                "annotations": [{"image_id": 1, "category_id": 1, "bbox": [0, 0, 5, 5]},
                                {"id": 4, "image_id": 1, "category_id": 1, "bbox": [0, 0, 5, 5]},
                                {"image_id": 1, "category_id": 1, "bbox": [0, 0, 5, 5]}],
                "categories": [{"id": 1, "name": "Text"}]}"#,
            "gt",
        )
        .unwrap();
        let ids: Vec<u64> = ds.pages[0].ground_truth.iter().map(|a| a.id).collect();
        assert_eq!(ids, vec![5, 4, 6]);
    }

    #[test]
    fn predictions_attach_in_order() {
        let ds = parse_predictions(
            r#"[{"image_id": 1, "category_id": 3, "bbox": [0, 0, 10, 10], "score": 0.97},
                {"image_id": 1, "category_id": 4, "bbox": [5, 5, 10, 10], "score": 0.2}]"#,
            "pred",
            gt(),
        )
        .unwrap();
        let preds = &ds.pages[0].predictions;
        assert_eq!(preds.len(), 2);
        assert_eq!(preds[0].label, Label::Table);
        assert_eq!(preds[0].score, 0.97);
        assert_eq!(preds[0].bbox, BBox::new(0., 0., 10., 10.).unwrap());
        assert_eq!(preds[1].label, Label::Text);
        assert!(ds.pages[1].predictions.is_empty());

        let empty = parse_predictions("[]", "pred", gt()).unwrap();
        assert!(empty.pages.iter().all(|p| p.predictions.is_empty()));
    }

    #[test]
    fn prediction_errors() {
        let bad_score = r#"[{"image_id": 1, "category_id": 3, "bbox": [0, 0, 1, 1], "score": 1.2}]"#;
        assert!(matches!(parse_predictions(bad_score, "p", gt()), Err(Error::Validation(_))));
        let bad_img = r#"[{"image_id": 3, "category_id": 3, "bbox": [0, 0, 1, 1], "score": 0.2}]"#;
        assert!(matches!(
            parse_predictions(bad_img, "p", gt()),
            Err(Error::ReferentialIntegrity(_))
        ));
    }

    #[test]
    fn cells_loading() {
        let ds = parse_cells(
            r#"{"pages": [{"page_id": "p1", "cells": [
                {"id": 0, "bbox": [0, 0, 10, 10], "text": "a"},
                {"id": 1, "bbox": [20, 0, 30, 10], "text": ""},
                {"id": 2, "bbox": [95, 75, 120, 90], "text": "edge"}]}]}"#,
            "cells",
            gt(),
        )
        .unwrap();
        let cells = ds.pages[0].cells.as_ref().unwrap();
        assert_eq!(cells.len(), 3);
        assert_eq!(cells[2].bbox, BBox::new(95., 75., 100., 80.).unwrap());
        assert!(ds.pages[1].cells.is_none());

        let dup = r#"{"pages": [{"page_id": "p1", "cells": [
            {"id": 0, "bbox": [0, 0, 1, 1], "text": "a"}, {"id": 0, "bbox": [0, 0, 1, 1], "text": "b"}]}]}"#;
        assert!(matches!(parse_cells(dup, "c", gt()), Err(Error::Validation(_))));
    }

    #[test]
    fn split_counts_foot() {
        let empty = Dataset::default();
        let counts = split_counts(&empty, &empty, &empty).unwrap();
        assert_eq!(counts.total, SplitRow::default());

        let page_with = |n: usize| {
            let mut p = PageSample::new("x", 100., 100.).unwrap();
            for (i, l) in Label::ALL.iter().cycle().take(17 * n).enumerate() {
                p.ground_truth.push(Annotation {
                    id: i as u64,
                    label: *l,
                    bbox: BBox::new(0., 0., 1., 1.).unwrap(),
                });
            }
            Dataset::from_pages(vec![p])
        };
        let counts = split_counts(&page_with(2), &page_with(1), &page_with(1)).unwrap();
        assert!(counts.per_label.values().all(|r| *r == SplitRow::new(2, 1, 1, 4)));
        assert_eq!(counts.total, SplitRow::new(34, 17, 17, 68));
    }

    #[test]
    fn cross_foot_catches_bad_totals() {
        let mut c = SplitCounts {
            per_label: [(Label::Caption, SplitRow::new(37_680, 4_252, 3_860, 45_792))].into(),
            total: SplitRow::new(37_680, 4_252, 3_860, 45_792),
        };
        c.cross_foot().unwrap();
        c.per_label.insert(Label::Caption, SplitRow::new(37_680, 4_252, 3_860, 45_791));
        assert!(c.cross_foot().is_err());
    }
}
