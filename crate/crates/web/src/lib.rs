//! Browser bindings: post-process a page, draw it, and score it.
//!
//! Every entry point takes the page as `PageSample` JSON and an optional
//! `PipelineConfig` JSON (empty string means defaults). The plain Rust
//! functions are what the wasm exports wrap, so they are testable natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use doclayout::eval_coco::{evaluate_coco, EvalOptions, MetricSummary};
use doclayout::eval_docling::evaluate_docling;
use doclayout::postprocess::{clusters_to_detections, postprocess_page};
use doclayout::viz::{parse_panels, render_overlay, BoxSource};
use doclayout::{Cluster, Dataset, PageSample, PipelineConfig};

/// The page shipped with the demo.
pub const SAMPLE_PAGE: &str = include_str!("../www/sample_page.json");

fn parse_page(page_json: &str) -> Result<PageSample, String> {
    serde_json::from_str(page_json).map_err(|e| format!("page: {e}"))
}

fn parse_config(config_json: &str) -> Result<PipelineConfig, String> {
    if config_json.trim().is_empty() {
        return Ok(PipelineConfig::default());
    }
    PipelineConfig::from_json_str(config_json, "config").map_err(|e| e.to_string())
}

/// Layout clusters for the page, as a JSON array.
pub fn postprocess_json(page_json: &str, config_json: &str) -> Result<String, String> {
    let page = parse_page(page_json)?;
    let cfg = parse_config(config_json)?;
    serde_json::to_string(&postprocess_page(&page, &cfg)).map_err(|e| e.to_string())
}

/// Side-by-side SVG for a comma-separated panel list (`gt,raw,gated,clusters`).
pub fn render_svg(page_json: &str, config_json: &str, panels: &str) -> Result<String, String> {
    let page = parse_page(page_json)?;
    let cfg = parse_config(config_json)?;
    let specs = parse_panels(panels).map_err(|e| e.to_string())?;
    let clusters: Option<Vec<Cluster>> = specs
        .iter()
        .any(|p| p.source == BoxSource::Clusters)
        .then(|| postprocess_page(&page, &cfg));
    let doc = render_overlay(&page, &specs, Some(&cfg), clusters.as_deref()).map_err(|e| e.to_string())?;
    Ok(doc.to_svg())
}

#[derive(Serialize)]
struct Scores {
    coco_raw: Result<MetricSummary, String>,
    coco_clusters: Result<MetricSummary, String>,
    docling_raw: Result<f64, String>,
    docling_clusters: Result<f64, String>,
    clusters: usize,
}

/// COCO and document-protocol scores for the page, raw versus post-processed.
pub fn evaluate_json(page_json: &str, config_json: &str) -> Result<String, String> {
    let page = parse_page(page_json)?;
    let cfg = parse_config(config_json)?;
    let clusters = postprocess_page(&page, &cfg);
    let mut processed = page.clone();
    processed.predictions = clusters_to_detections(&clusters);

    let raw = Dataset::from_pages(vec![page]);
    let pp = Dataset::from_pages(vec![processed]);
    let coco = |ds: &Dataset| {
        evaluate_coco(ds, &EvalOptions::default())
            .map(|m| m.summary)
            .map_err(|e| e.to_string())
    };
    let docling = |ds: &Dataset| {
        evaluate_docling(ds)
            .map(|r| r.map_50_95)
            .map_err(|e| e.to_string())
    };
    let scores = Scores {
        coco_raw: coco(&raw),
        coco_clusters: coco(&pp),
        docling_raw: docling(&raw),
        docling_clusters: docling(&pp),
        clusters: clusters.len(),
    };
    serde_json::to_string(&scores).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn sample_page() -> String {
    SAMPLE_PAGE.to_string()
}

#[wasm_bindgen]
pub fn postprocess(page_json: &str, config_json: &str) -> Result<String, JsValue> {
    postprocess_json(page_json, config_json).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn render(page_json: &str, config_json: &str, panels: &str) -> Result<String, JsValue> {
    render_svg(page_json, config_json, panels).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn evaluate(page_json: &str, config_json: &str) -> Result<String, JsValue> {
    evaluate_json(page_json, config_json).map_err(|e| JsValue::from_str(&e))
}
