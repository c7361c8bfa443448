//! Side-by-side SVG overlays of ground truth and predictions.
//!
//! Each panel draws the page as a plain rectangle with translucent,
//! label-colored boxes on top. Output is a pure function of the input:
//! colors come from a fixed palette and all numbers are printed with a
//! fixed number of decimals.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ingest::PageSample;
use crate::postprocess::{gate_by_confidence, Cluster, PipelineConfig};
use crate::taxonomy::Label;

/// One color per label, in canonical label order.
pub const PALETTE: [&str; 17] = [
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231", "#911eb4", "#46f0f0", "#f032e6", "#bcf60c",
    "#fabebe", "#008080", "#e6beff", "#9a6324", "#fffac8", "#800000", "#aaffc3", "#808000",
];

pub const FILL_OPACITY: f64 = 0.3;
pub const MAX_PANELS: usize = 4;

const GAP: f64 = 20.0;
const TITLE_HEIGHT: f64 = 28.0;
const BADGE_HEIGHT: f64 = 12.0;

pub fn label_color(label: Label) -> &'static str {
    PALETTE[label.index()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoxSource {
    Gt,
    Raw,
    Gated,
    Clusters,
}

impl BoxSource {
    fn default_title(self) -> &'static str {
        match self {
            BoxSource::Gt => "ground truth",
            BoxSource::Raw => "raw predictions",
            BoxSource::Gated => "score-gated predictions",
            BoxSource::Clusters => "post-processed",
        }
    }
}

impl FromStr for BoxSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gt" => Ok(BoxSource::Gt),
            "raw" => Ok(BoxSource::Raw),
            "gated" => Ok(BoxSource::Gated),
            "clusters" => Ok(BoxSource::Clusters),
            other => Err(Error::Validation(format!(
                "unknown panel source {other:?}; expected gt, raw, gated or clusters"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelSpec {
    pub title: String,
    pub source: BoxSource,
}

impl PanelSpec {
    pub fn new(source: BoxSource) -> Self {
        Self {
            title: source.default_title().to_string(),
            source,
        }
    }
}

/// Parses a comma-separated source list such as `gt,raw,gated`.
pub fn parse_panels(list: &str) -> Result<Vec<PanelSpec>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map(PanelSpec::new))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayBox {
    pub label: Label,
    /// Already clamped to the page.
    pub bbox: BBox,
    pub score: Option<f64>,
    /// Drawn dashed: a cluster nested inside a wrapper or picture.
    pub nested: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub boxes: Vec<OverlayBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlayDoc {
    pub page_id: String,
    pub page_width: f64,
    pub page_height: f64,
    pub panels: Vec<Panel>,
}

fn clamped(page: &PageSample, b: &BBox, label: Label, score: Option<f64>, nested: bool) -> Option<OverlayBox> {
    b.clamp_to_page(page.width, page.height).map(|bbox| OverlayBox {
        label,
        bbox,
        score,
        nested,
    })
}

/// `config` drives the gated panel (defaults apply when absent); `clusters`
/// must be supplied for a clusters panel.
pub fn render_overlay(
    page: &PageSample,
    panels: &[PanelSpec],
    config: Option<&PipelineConfig>,
    clusters: Option<&[Cluster]>,
) -> Result<OverlayDoc> {
    if panels.is_empty() || panels.len() > MAX_PANELS {
        return Err(Error::Validation(format!(
            "an overlay needs 1 to {MAX_PANELS} panels, got {}",
            panels.len()
        )));
    }
    let default_cfg = PipelineConfig::default();
    let cfg = config.unwrap_or(&default_cfg);
    let mut out = Vec::with_capacity(panels.len());
    for spec in panels {
        let boxes: Vec<OverlayBox> = match spec.source {
            BoxSource::Gt => page
                .ground_truth
                .iter()
                .filter_map(|a| clamped(page, &a.bbox, a.label, None, false))
                .collect(),
            BoxSource::Raw => page
                .predictions
                .iter()
                .filter_map(|d| clamped(page, &d.bbox, d.label, Some(d.score), false))
                .collect(),
            BoxSource::Gated => gate_by_confidence(&page.predictions, &cfg.taxonomy)
                .iter()
                .filter_map(|d| clamped(page, &d.bbox, d.label, Some(d.score), false))
                .collect(),
            BoxSource::Clusters => {
                let cl = clusters.ok_or_else(|| {
                    Error::MissingSource(format!("clusters were not computed for page {:?}", page.page_id))
                })?;
                let nested: std::collections::BTreeSet<usize> =
                    cl.iter().flat_map(|c| c.children.iter().copied()).collect();
                cl.iter()
                    .filter_map(|c| clamped(page, &c.bbox, c.label, Some(c.score), nested.contains(&c.id)))
                    .collect()
            }
        };
        out.push(Panel {
            title: spec.title.clone(),
            boxes,
        });
    }
    Ok(OverlayDoc {
        page_id: page.page_id.clone(),
        page_width: page.width,
        page_height: page.height,
        panels: out,
    })
}

fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

impl OverlayDoc {
    pub fn width(&self) -> f64 {
        self.panels.len() as f64 * self.page_width + (self.panels.len() as f64 + 1.0) * GAP
    }

    pub fn height(&self) -> f64 {
        self.page_height + TITLE_HEIGHT + 2.0 * GAP
    }

    /// Left edge of panel `i`'s page rectangle.
    pub fn panel_origin(&self, i: usize) -> (f64, f64) {
        (GAP + i as f64 * (self.page_width + GAP), GAP + TITLE_HEIGHT)
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let (w, h) = (num(self.width()), num(self.height()));
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif">"#
        );
        let _ = writeln!(s, "<title>{}</title>", escape(&self.page_id));
        let _ = writeln!(s, r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#f4f4f4"/>"##);
        for (i, panel) in self.panels.iter().enumerate() {
            let (ox, oy) = self.panel_origin(i);
            let _ = writeln!(s, r#"<g class="panel" transform="translate({},{})">"#, num(ox), num(oy));
            let _ = writeln!(
                s,
                r##"<text x="0" y="{}" font-size="14" fill="#222">{} ({})</text>"##,
                num(-TITLE_HEIGHT / 2.0 + 4.0),
                escape(&panel.title),
                panel.boxes.len()
            );
            let _ = writeln!(
                s,
                r##"<rect class="page" x="0" y="0" width="{}" height="{}" fill="#ffffff" stroke="#999999"/>"##,
                num(self.page_width),
                num(self.page_height)
            );
            for b in &panel.boxes {
                write_box(&mut s, b);
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }
}

fn write_box(s: &mut String, b: &OverlayBox) {
    let color = label_color(b.label);
    let (x, y) = (b.bbox.left(), b.bbox.top());
    let dash = if b.nested { r#" stroke-dasharray="4 2""# } else { "" };
    let _ = writeln!(
        s,
        r#"<rect class="box" data-label="{}" x="{}" y="{}" width="{}" height="{}" fill="{color}" fill-opacity="{FILL_OPACITY}" stroke="{color}" stroke-width="1"{dash}/>"#,
        escape(b.label.name()),
        num(x),
        num(y),
        num(b.bbox.width()),
        num(b.bbox.height()),
    );
    let mut badge = b.label.name().to_string();
    if let Some(score) = b.score {
        let _ = write!(badge, " {score:.2}");
    }
    // keep the badge inside the box's page rectangle even for boxes at the top edge
    let badge_w = (badge.chars().count() as f64 * 6.0 + 4.0).min(b.bbox.width().max(0.0));
    let badge_h = BADGE_HEIGHT.min(b.bbox.height().max(0.0));
    let _ = writeln!(
        s,
        r#"<rect class="badge" x="{}" y="{}" width="{}" height="{}" fill="{color}"/>"#,
        num(x),
        num(y),
        num(badge_w),
        num(badge_h)
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" font-size="9" fill="#000">{}</text>"##,
        num(x + 2.0),
        num(y + 9.0),
        escape(&badge)
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Annotation, Detection};
    use crate::postprocess::postprocess_page;

    fn page() -> PageSample {
        let mut p = PageSample::new("p<1>", 200., 300.).unwrap();
        p.ground_truth.push(Annotation {
            id: 1,
            label: Label::Text,
            bbox: BBox::new(10., 10., 100., 40.).unwrap(),
        });
        for (score, x) in [(0.9, 10.), (0.3, 120.), (0.6, 150.)] {
            p.predictions.push(Detection {
                label: Label::Text,
                bbox: BBox::new(x, 10., x + 40., 40.).unwrap(),
                score,
            });
        }
        p
    }

    #[test]
    fn palette_is_distinct() {
        let set: std::collections::BTreeSet<_> = PALETTE.iter().collect();
        assert_eq!(set.len(), 17);
        assert_eq!(label_color(Label::Caption), PALETTE[0]);
        assert_eq!(label_color(Label::Title), PALETTE[16]);
    }

    #[test]
    fn empty_page_single_panel() {
        let p = PageSample::new("blank", 100., 100.).unwrap();
        let doc = render_overlay(&p, &[PanelSpec::new(BoxSource::Gt)], None, None).unwrap();
        assert_eq!(doc.panels.len(), 1);
        assert!(doc.panels[0].boxes.is_empty());
        let svg = doc.to_svg();
        assert_eq!(svg.matches(r#"class="page""#).count(), 1);
        assert_eq!(svg.matches(r#"class="box""#).count(), 0);
    }

    #[test]
    fn raw_has_at_least_gated() {
        let p = page();
        let panels = parse_panels("gt,raw,gated").unwrap();
        let doc = render_overlay(&p, &panels, None, None).unwrap();
        assert_eq!(doc.panels.len(), 3);
        assert_eq!(doc.panels[1].boxes.len(), 3);
        assert_eq!(doc.panels[2].boxes.len(), 2);
        let svg = doc.to_svg();
        assert!(svg.contains("p&lt;1&gt;"));
        assert!(svg.contains(r#"fill-opacity="0.3""#));
        assert_eq!(svg, render_overlay(&p, &panels, None, None).unwrap().to_svg());
    }

    #[test]
    fn clusters_need_to_be_supplied() {
        let p = page();
        let panels = [PanelSpec::new(BoxSource::Clusters)];
        assert!(matches!(render_overlay(&p, &panels, None, None), Err(Error::MissingSource(_))));
        let cl = postprocess_page(&p, &PipelineConfig::default());
        let doc = render_overlay(&p, &panels, None, Some(&cl)).unwrap();
        assert_eq!(doc.panels[0].boxes.len(), cl.len());
    }

    #[test]
    fn boxes_are_clamped_to_page() {
        let mut p = page();
        p.predictions.push(Detection {
            label: Label::Picture,
            bbox: BBox::new(-50., -50., 500., 500.).unwrap(),
            score: 0.99,
        });
        let doc = render_overlay(&p, &[PanelSpec::new(BoxSource::Raw)], None, None).unwrap();
        let bounds = p.bounds();
        assert!(doc.panels[0].boxes.iter().all(|b| bounds.contains(&b.bbox)));
    }

    #[test]
    fn panel_count_and_source_names() {
        let p = page();
        assert!(render_overlay(&p, &[], None, None).is_err());
        assert!(parse_panels("gt,bogus").is_err());
        assert_eq!(parse_panels("gt, Clusters").unwrap()[1].source, BoxSource::Clusters);
    }
}
