//! COCO-style box detection metrics.
//!
//! Follows the reference COCO evaluation semantics: greedy matching in
//! descending score order, 101-point interpolated precision over the recall
//! grid, and averaging over the IoU thresholds 0.50:0.05:0.95 and over the
//! classes that have ground truth. Size buckets use ground-truth box area in
//! page pixels: small < 32², medium in [32², 96²), large >= 96².

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};
use crate::ingest::{Annotation, Dataset, Detection};
use crate::taxonomy::Label;

pub const NUM_IOU_THRESHOLDS: usize = 10;
pub const NUM_RECALL_THRESHOLDS: usize = 101;

/// Value reported for a bucket without any ground truth.
pub const UNDEFINED: f64 = -1.0;

/// Evenly spaced values computed as `start + i * step` with the last value
/// pinned to `stop`, the way the reference tooling builds its grids.
fn linspace<const N: usize>(start: f64, stop: f64) -> [f64; N] {
    let step = (stop - start) / (N - 1) as f64;
    let mut out = [0.0; N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = i as f64 * step + start;
    }
    out[N - 1] = stop;
    out
}

pub fn iou_thresholds() -> [f64; NUM_IOU_THRESHOLDS] {
    linspace(0.5, 0.95)
}

pub fn recall_thresholds() -> [f64; NUM_RECALL_THRESHOLDS] {
    linspace(0.0, 1.0)
}

const IOU_50: usize = 0;
const IOU_75: usize = 5;
const IOU_95: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AreaRange {
    All,
    Small,
    Medium,
    Large,
}

impl AreaRange {
    fn contains(self, area: f64) -> bool {
        const SMALL: f64 = 32.0 * 32.0;
        const LARGE: f64 = 96.0 * 96.0;
        match self {
            AreaRange::All => true,
            AreaRange::Small => area < SMALL,
            AreaRange::Medium => (SMALL..LARGE).contains(&area),
            AreaRange::Large => area >= LARGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Detections scoring below this are dropped before evaluation.
    pub score_floor: Option<f64>,
    /// Per page and class, only the top-scoring `max_dets` detections count.
    pub max_dets: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            score_floor: None,
            max_dets: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    #[serde(rename = "mAP_50_95")]
    pub map_50_95: f64,
    #[serde(rename = "AP_50")]
    pub ap_50: f64,
    #[serde(rename = "AP_75")]
    pub ap_75: f64,
    #[serde(rename = "AP_95")]
    pub ap_95: f64,
    #[serde(rename = "AP_large")]
    pub ap_large: f64,
    #[serde(rename = "AP_medium")]
    pub ap_medium: f64,
    #[serde(rename = "AP_small")]
    pub ap_small: f64,
    #[serde(rename = "AR_50_95")]
    pub ar_50_95: f64,
}

impl MetricSummary {
    pub const UNDEFINED: MetricSummary = MetricSummary {
        map_50_95: UNDEFINED,
        ap_50: UNDEFINED,
        ap_75: UNDEFINED,
        ap_95: UNDEFINED,
        ap_large: UNDEFINED,
        ap_medium: UNDEFINED,
        ap_small: UNDEFINED,
        ar_50_95: UNDEFINED,
    };

    pub fn values(&self) -> [f64; 8] {
        [
            self.map_50_95,
            self.ap_50,
            self.ap_75,
            self.ap_95,
            self.ap_large,
            self.ap_medium,
            self.ap_small,
            self.ar_50_95,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoMetrics {
    #[serde(flatten)]
    pub summary: MetricSummary,
    pub per_class: BTreeMap<Label, MetricSummary>,
}

/// Outcome of matching one page's detections at one IoU threshold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    /// For each detection, the id of the ground-truth box it matched.
    pub det_matches: Vec<Option<u64>>,
    /// For each ground-truth box, whether some detection matched it.
    pub gt_covered: Vec<bool>,
}

/// IoU where two zero-area boxes count as not overlapping.
fn pair_iou(a: &BBox, b: &BBox) -> f64 {
    iou(a, b).unwrap_or(0.0)
}

/// Greedy matching of score-ordered detections to ground truth.
///
/// `gt_ignore` must be sorted so ignored boxes come last. Each detection
/// takes the still-unmatched box with the highest IoU >= `threshold`; among
/// equal IoUs the later box wins, and an ignored box is only taken when no
/// regular box qualifies. Returns, per detection, the matched ground-truth
/// position.
fn greedy_match(ious: &[Vec<f64>], gt_ignore: &[bool], threshold: f64) -> Vec<Option<usize>> {
    let n_gt = gt_ignore.len();
    let mut gt_taken = vec![false; n_gt];
    let mut out = Vec::with_capacity(ious.len());
    for row in ious {
        let mut best_iou = threshold.min(1.0 - 1e-10);
        let mut m: Option<usize> = None;
        for g in 0..n_gt {
            if gt_taken[g] {
                continue;
            }
            if let Some(mi) = m {
                if !gt_ignore[mi] && gt_ignore[g] {
                    break;
                }
            }
            if row[g] < best_iou {
                continue;
            }
            best_iou = row[g];
            m = Some(g);
        }
        if let Some(g) = m {
            gt_taken[g] = true;
        }
        out.push(m);
    }
    out
}

/// Matches `preds` (already sorted by descending score) to same-class `gts`.
pub fn match_at_iou(preds: &[Detection], gts: &[Annotation], threshold: f64) -> MatchResult {
    let mut det_matches = vec![None; preds.len()];
    let mut gt_covered = vec![false; gts.len()];
    let labels: BTreeSet<Label> = preds.iter().map(|d| d.label).collect();
    for label in labels {
        let di: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].label == label).collect();
        let gi: Vec<usize> = (0..gts.len()).filter(|&i| gts[i].label == label).collect();
        let ious: Vec<Vec<f64>> = di
            .iter()
            .map(|&d| gi.iter().map(|&g| pair_iou(&preds[d].bbox, &gts[g].bbox)).collect())
            .collect();
        let matches = greedy_match(&ious, &vec![false; gi.len()], threshold);
        for (k, m) in matches.into_iter().enumerate() {
            if let Some(gk) = m {
                det_matches[di[k]] = Some(gts[gi[gk]].id);
                gt_covered[gi[gk]] = true;
            }
        }
    }
    MatchResult {
        det_matches,
        gt_covered,
    }
}

/// One ranked detection in a dataset-wide sweep for a class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedMatch {
    pub score: f64,
    pub true_positive: bool,
}

/// Interpolated precision at each recall threshold plus final recall.
///
/// `entries` are `(true_positive, ignored)` in ranking order. Ignored entries
/// count neither as TP nor FP.
fn precision_at_recall(entries: &[(bool, bool)], n_gt: usize) -> ([f64; NUM_RECALL_THRESHOLDS], f64) {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut recall = Vec::with_capacity(entries.len());
    let mut precision = Vec::with_capacity(entries.len());
    for &(is_tp, ignored) in entries {
        if !ignored {
            if is_tp {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        recall.push(tp as f64 / n_gt as f64);
        precision.push(if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 });
    }
    for i in (1..precision.len()).rev() {
        if precision[i] > precision[i - 1] {
            precision[i - 1] = precision[i];
        }
    }
    let mut q = [0.0; NUM_RECALL_THRESHOLDS];
    for (qi, &r) in q.iter_mut().zip(recall_thresholds().iter()) {
        let pi = recall.partition_point(|&rc| rc < r);
        match precision.get(pi) {
            Some(&p) => *qi = p,
            None => break,
        }
    }
    (q, recall.last().copied().unwrap_or(0.0))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// 101-point interpolated AP of a ranked sweep; [`UNDEFINED`] when `n_gt` is 0.
///
/// The sweep is stably sorted by descending score, so equal scores keep
/// their input order.
pub fn average_precision(ranked: &[RankedMatch], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return UNDEFINED;
    }
    let mut order: Vec<&RankedMatch> = ranked.iter().collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let entries: Vec<(bool, bool)> = order.iter().map(|m| (m.true_positive, false)).collect();
    mean(&precision_at_recall(&entries, n_gt).0)
}

/// Per-page, per-class evaluation at every IoU threshold for one area range.
struct PageClassEval {
    scores: Vec<f64>,
    /// `[threshold][detection]`
    matched: Vec<Vec<bool>>,
    ignored: Vec<Vec<bool>>,
    n_regular_gt: usize,
}

fn evaluate_page_class(
    dets: &[&Detection],
    gts: &[&Annotation],
    range: AreaRange,
    thresholds: &[f64],
) -> PageClassEval {
    let mut gt_order: Vec<(&Annotation, bool)> = gts
        .iter()
        .map(|g| (*g, !range.contains(g.bbox.area())))
        .collect();
    gt_order.sort_by_key(|(_, ignored)| *ignored);
    let gt_ignore: Vec<bool> = gt_order.iter().map(|(_, ig)| *ig).collect();
    let ious: Vec<Vec<f64>> = dets
        .iter()
        .map(|d| gt_order.iter().map(|(g, _)| pair_iou(&d.bbox, &g.bbox)).collect())
        .collect();

    let mut matched = Vec::with_capacity(thresholds.len());
    let mut ignored = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let m = greedy_match(&ious, &gt_ignore, t);
        matched.push(m.iter().map(Option::is_some).collect());
        ignored.push(
            m.iter()
                .zip(dets)
                .map(|(mg, d)| match mg {
                    Some(g) => gt_ignore[*g],
                    None => !range.contains(d.bbox.area()),
                })
                .collect(),
        );
    }
    PageClassEval {
        scores: dets.iter().map(|d| d.score).collect(),
        matched,
        ignored,
        n_regular_gt: gt_ignore.iter().filter(|ig| !**ig).count(),
    }
}

/// AP per threshold and recall per threshold for one class and area range,
/// or `None` when the range holds no ground truth.
fn class_curves(
    pages: &[(Vec<&Detection>, Vec<&Annotation>)],
    range: AreaRange,
) -> Option<([f64; NUM_IOU_THRESHOLDS], [f64; NUM_IOU_THRESHOLDS])> {
    let thresholds = iou_thresholds();
    let evals: Vec<PageClassEval> = pages
        .iter()
        .filter(|(d, g)| !d.is_empty() || !g.is_empty())
        .map(|(d, g)| evaluate_page_class(d, g, range, &thresholds))
        .collect();
    let n_gt: usize = evals.iter().map(|e| e.n_regular_gt).sum();
    if n_gt == 0 {
        return None;
    }
    // (score, page, position) then a stable sort on score alone
    let mut order: Vec<(f64, usize, usize)> = evals
        .iter()
        .enumerate()
        .flat_map(|(pi, e)| e.scores.iter().enumerate().map(move |(di, &s)| (s, pi, di)))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut ap = [0.0; NUM_IOU_THRESHOLDS];
    let mut rec = [0.0; NUM_IOU_THRESHOLDS];
    for t in 0..NUM_IOU_THRESHOLDS {
        let entries: Vec<(bool, bool)> = order
            .iter()
            .map(|&(_, pi, di)| (evals[pi].matched[t][di], evals[pi].ignored[t][di]))
            .collect();
        let (q, r) = precision_at_recall(&entries, n_gt);
        ap[t] = mean(&q);
        rec[t] = r;
    }
    Some((ap, rec))
}

fn class_summary(pages: &[(Vec<&Detection>, Vec<&Annotation>)]) -> MetricSummary {
    let mut s = MetricSummary::UNDEFINED;
    if let Some((ap, rec)) = class_curves(pages, AreaRange::All) {
        s.map_50_95 = mean(&ap);
        s.ap_50 = ap[IOU_50];
        s.ap_75 = ap[IOU_75];
        s.ap_95 = ap[IOU_95];
        s.ar_50_95 = mean(&rec);
    }
    for (range, slot) in [
        (AreaRange::Small, &mut s.ap_small),
        (AreaRange::Medium, &mut s.ap_medium),
        (AreaRange::Large, &mut s.ap_large),
    ] {
        if let Some((ap, _)) = class_curves(pages, range) {
            *slot = mean(&ap);
        }
    }
    s
}

/// Mean over the defined (non-negative) entries, or [`UNDEFINED`].
fn mean_defined(values: impl Iterator<Item = f64>) -> f64 {
    let defined: Vec<f64> = values.filter(|v| *v > UNDEFINED).collect();
    if defined.is_empty() {
        UNDEFINED
    } else {
        mean(&defined)
    }
}

pub fn evaluate_coco(dataset: &Dataset, options: &EvalOptions) -> Result<CocoMetrics> {
    if dataset.pages.is_empty() {
        return Err(Error::EmptyDataset("no pages to evaluate".into()));
    }
    let labels: BTreeSet<Label> = dataset
        .pages
        .iter()
        .flat_map(|p| {
            p.ground_truth
                .iter()
                .map(|a| a.label)
                .chain(p.predictions.iter().map(|d| d.label))
        })
        .collect();
    let labels: Vec<Label> = labels.into_iter().collect();

    let per_class: Vec<(Label, MetricSummary)> = labels
        .par_iter()
        .map(|&label| {
            let pages: Vec<(Vec<&Detection>, Vec<&Annotation>)> = dataset
                .pages
                .iter()
                .map(|p| {
                    let mut dets: Vec<&Detection> = p
                        .predictions
                        .iter()
                        .filter(|d| d.label == label)
                        .filter(|d| options.score_floor.is_none_or(|f| d.score >= f))
                        .collect();
                    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
                    dets.truncate(options.max_dets);
                    let gts = p.ground_truth.iter().filter(|a| a.label == label).collect();
                    (dets, gts)
                })
                .collect();
            (label, class_summary(&pages))
        })
        .collect();

    let field = |f: fn(&MetricSummary) -> f64| mean_defined(per_class.iter().map(|(_, s)| f(s)));
    let summary = MetricSummary {
        map_50_95: field(|s| s.map_50_95),
        ap_50: field(|s| s.ap_50),
        ap_75: field(|s| s.ap_75),
        ap_95: field(|s| s.ap_95),
        ap_large: field(|s| s.ap_large),
        ap_medium: field(|s| s.ap_medium),
        ap_small: field(|s| s.ap_small),
        ar_50_95: field(|s| s.ar_50_95),
    };
    Ok(CocoMetrics {
        summary,
        per_class: per_class.into_iter().collect(),
    })
}
