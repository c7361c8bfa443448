//! Turns raw detections into a clean set of layout clusters.
//!
//! One refinement pass runs these stages in order:
//!
//! 1. [`assign_cells`] gives each PDF cell to the regular cluster that
//!    contains most of it, and [`snap_to_cells`] shrinks or grows regular
//!    clusters to exactly enclose their cells.
//! 2. [`discard_oversized_pictures`] drops pictures covering most of the page.
//! 3. [`attach_children`] nests regular clusters under the special (picture or
//!    wrapper) cluster that contains them, and [`expand_wrappers`] grows Form
//!    and Key-Value Region boxes around their children.
//! 4. [`resolve_overlaps`] groups overlapping top-level clusters into
//!    connected components and keeps one winner per group.
//!
//! [`postprocess_page`] gates detections by confidence, then repeats the pass
//! on the flattened cluster list until it reaches a fixed point, so the output
//! is stable when fed back in as detections.
//!
//! Overlap everywhere means the containment fraction of the smaller box
//! inside the larger one. Cells are owned by regular clusters only; a special
//! cluster holds the cells of its group through its children.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{containment_fraction, union_bbox, BBox};
use crate::ingest::{Dataset, Detection, PageSample, TextCell};
use crate::taxonomy::{Label, LabelRole, TaxonomyConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub label: Label,
    pub bbox: BBox,
    pub score: f64,
    #[serde(default)]
    pub children: Vec<usize>,
    #[serde(default)]
    pub cell_ids: Vec<u64>,
}

impl Cluster {
    pub fn role(&self) -> LabelRole {
        self.label.role()
    }

    fn from_detection(id: usize, det: &Detection) -> Self {
        Self {
            id,
            label: det.label,
            bbox: det.bbox,
            score: det.score,
            children: Vec::new(),
            cell_ids: Vec::new(),
        }
    }

    fn same_geometry(&self, other: &Cluster) -> bool {
        self.id == other.id
            && self.label == other.label
            && self.bbox == other.bbox
            && self.score == other.score
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrphanPolicy {
    #[default]
    Ignore,
    /// Unassigned cells become Text clusters scored at the Text gate.
    EmitTextClusters,
}

/// Disqualification limits applied inside an overlap group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleGate {
    pub min_score: f64,
    pub min_area: f64,
}

impl Default for RoleGate {
    fn default() -> Self {
        Self {
            min_score: 0.5,
            min_area: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RoleGates {
    pub regular: RoleGate,
    pub picture: RoleGate,
    pub wrapper: RoleGate,
}

impl RoleGates {
    pub fn for_role(&self, role: LabelRole) -> RoleGate {
        match role {
            LabelRole::Regular => self.regular,
            LabelRole::Picture => self.picture,
            LabelRole::Wrapper => self.wrapper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub taxonomy: TaxonomyConfig,
    pub cell_assignment_threshold: f64,
    pub orphan_policy: OrphanPolicy,
    /// Exponent on cluster area in the `score * area^γ` ranking.
    pub size_weight_exponent: f64,
    pub role_gates: RoleGates,
    /// Upper bound on refinement passes before giving up on a fixed point.
    pub max_passes: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            taxonomy: TaxonomyConfig::default(),
            cell_assignment_threshold: 0.5,
            orphan_policy: OrphanPolicy::Ignore,
            size_weight_exponent: 0.0,
            role_gates: RoleGates::default(),
            max_passes: 64,
        }
    }
}

impl PipelineConfig {
    pub fn from_json_str(text: &str, source_name: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::from_json(source_name, text, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = crate::ingest::read_text(path)?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.taxonomy.validate()?;
        if !(0.0..=1.0).contains(&self.cell_assignment_threshold) {
            return Err(Error::Validation(format!(
                "cell_assignment_threshold {} is outside [0, 1]",
                self.cell_assignment_threshold
            )));
        }
        if !self.size_weight_exponent.is_finite() {
            return Err(Error::Validation("size_weight_exponent must be finite".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::Validation("max_passes must be at least 1".into()));
        }
        Ok(())
    }
}

/// Containment fraction with zero-area boxes counted as fully inside
/// (or fully outside) depending on closed-interval containment.
fn fraction_inside(inner: &BBox, outer: &BBox) -> f64 {
    containment_fraction(inner, outer).unwrap_or_else(|_| {
        if outer.contains(inner) {
            1.0
        } else {
            0.0
        }
    })
}

/// Fraction of the smaller box that lies inside the larger one.
pub fn overlap_fraction(a: &BBox, b: &BBox) -> f64 {
    if a.area() <= b.area() {
        fraction_inside(a, b)
    } else {
        fraction_inside(b, a)
    }
}

/// The overlap relation used for grouping. A zero threshold still needs
/// some actual overlap.
pub fn overlaps(a: &BBox, b: &BBox, threshold: f64) -> bool {
    let f = overlap_fraction(a, b);
    f > 0.0 && f >= threshold
}

/// Higher score first, then lower id.
fn better_tiebreak(a: &Cluster, b: &Cluster) -> bool {
    a.score > b.score || (a.score == b.score && a.id < b.id)
}

pub fn gate_by_confidence(dets: &[Detection], cfg: &TaxonomyConfig) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.score >= cfg.min_score_for(d.label))
        .cloned()
        .collect()
}

/// One cluster per detection, ids following input order.
pub fn build_clusters(dets: &[Detection]) -> Vec<Cluster> {
    dets.iter()
        .enumerate()
        .map(|(i, d)| Cluster::from_detection(i, d))
        .collect()
}

/// Replaces every regular cluster's `cell_ids` with the cells it wins.
pub fn assign_cells(clusters: &mut [Cluster], cells: &[TextCell], cfg: &PipelineConfig) {
    for c in clusters.iter_mut() {
        c.cell_ids.clear();
    }
    for cell in cells {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in clusters.iter().enumerate() {
            if c.role() != LabelRole::Regular {
                continue;
            }
            let f = fraction_inside(&cell.bbox, &c.bbox);
            if f <= 0.0 || f < cfg.cell_assignment_threshold {
                continue;
            }
            let take = match best {
                None => true,
                Some((bi, bf)) => f > bf || (f == bf && better_tiebreak(c, &clusters[bi])),
            };
            if take {
                best = Some((i, f));
            }
        }
        if let Some((i, _)) = best {
            clusters[i].cell_ids.push(cell.id);
        }
    }
    for c in clusters.iter_mut() {
        c.cell_ids.sort_unstable();
    }
}

fn cell_lookup(cells: &[TextCell]) -> HashMap<u64, &TextCell> {
    cells.iter().map(|c| (c.id, c)).collect()
}

fn cells_union(cell_ids: &[u64], lookup: &HashMap<u64, &TextCell>) -> Option<BBox> {
    union_bbox(cell_ids.iter().filter_map(|id| lookup.get(id).map(|c| &c.bbox))).ok()
}

/// Sets the bbox to the union of the assigned cells; no cells, no change.
pub fn snap_to_cells(cluster: &mut Cluster, cells: &[TextCell]) {
    snap_with(cluster, &cell_lookup(cells));
}

fn snap_with(cluster: &mut Cluster, lookup: &HashMap<u64, &TextCell>) {
    if let Some(b) = cells_union(&cluster.cell_ids, lookup) {
        cluster.bbox = b;
    }
}

pub fn discard_oversized_pictures(
    clusters: Vec<Cluster>,
    page: &PageSample,
    cfg: &TaxonomyConfig,
) -> Vec<Cluster> {
    let page_area = page.area();
    clusters
        .into_iter()
        .filter(|c| {
            c.label != Label::Picture
                || c.bbox.area() / page_area <= cfg.picture_page_coverage_limit
        })
        .collect()
}

/// Ids of clusters that are nobody's child.
pub fn top_level_ids(clusters: &[Cluster]) -> Vec<usize> {
    let children: BTreeSet<usize> = clusters.iter().flat_map(|c| c.children.iter().copied()).collect();
    clusters
        .iter()
        .map(|c| c.id)
        .filter(|id| !children.contains(id))
        .collect()
}

/// Position of the top-level special cluster containing the largest
/// fraction of `bbox`, if that fraction reaches the overlap threshold.
fn best_parent(bbox: &BBox, clusters: &[Cluster], top: &BTreeSet<usize>, cfg: &TaxonomyConfig) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (si, s) in clusters.iter().enumerate() {
        if !s.role().is_special() || !top.contains(&s.id) {
            continue;
        }
        let f = fraction_inside(bbox, &s.bbox);
        if f <= 0.0 || f < cfg.overlap_threshold {
            continue;
        }
        let take = match best {
            None => true,
            Some((bi, bf)) => f > bf || (f == bf && better_tiebreak(s, &clusters[bi])),
        };
        if take {
            best = Some((si, f));
        }
    }
    best.map(|(si, _)| si)
}

/// Nests each top-level regular cluster under the special cluster that
/// contains the largest fraction of it, if that fraction reaches the
/// overlap threshold.
pub fn attach_children(clusters: &mut [Cluster], cfg: &TaxonomyConfig) {
    let top: BTreeSet<usize> = top_level_ids(clusters).into_iter().collect();
    let assignments: Vec<(usize, usize)> = clusters
        .iter()
        .enumerate()
        .filter(|(_, r)| r.role() == LabelRole::Regular && top.contains(&r.id))
        .filter_map(|(ri, r)| best_parent(&r.bbox, clusters, &top, cfg).map(|si| (si, ri)))
        .collect();
    for (si, ri) in assignments {
        let child = clusters[ri].id;
        clusters[si].children.push(child);
    }
    for c in clusters.iter_mut() {
        c.children.sort_unstable();
    }
}

fn expands_to_children(label: Label) -> bool {
    matches!(label, Label::Form | Label::KeyValueRegion)
}

/// Grows Form and Key-Value Region boxes to enclose all their children.
pub fn expand_wrappers(clusters: &mut [Cluster]) {
    let boxes: HashMap<usize, BBox> = clusters.iter().map(|c| (c.id, c.bbox)).collect();
    for c in clusters.iter_mut() {
        if !expands_to_children(c.label) {
            continue;
        }
        for child in &c.children {
            if let Some(b) = boxes.get(child) {
                c.bbox = c.bbox.union(b);
            }
        }
    }
}

/// Picks the group's winner: disqualification by role gate, then label
/// priority, then `score * area^γ` descending, then lower id.
pub fn select_best_proposal<'a>(group: &[&'a Cluster], cfg: &PipelineConfig) -> Result<&'a Cluster> {
    if group.is_empty() {
        return Err(Error::EmptyInput("overlap group"));
    }
    let qualified = |c: &Cluster| {
        let gate = cfg.role_gates.for_role(c.role());
        c.score >= gate.min_score && c.bbox.area() >= gate.min_area
    };
    let any_qualified = group.iter().any(|c| qualified(c));
    let gamma = cfg.size_weight_exponent;
    let weight = |c: &Cluster| c.score * c.bbox.area().powf(gamma);
    let winner = group
        .iter()
        .copied()
        .filter(|c| !any_qualified || qualified(c))
        .min_by(|a, b| {
            cfg.taxonomy
                .priority_rank(a.label)
                .cmp(&cfg.taxonomy.priority_rank(b.label))
                .then_with(|| weight(b).total_cmp(&weight(a)))
                .then_with(|| a.id.cmp(&b.id))
        })
        .expect("non-empty group");
    Ok(winner)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller index becomes the root so group order follows ids
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components (size >= 2) of the overlap relation over the given
/// clusters, each as a sorted list of positions into `members`.
pub fn overlap_groups(members: &[&Cluster], threshold: f64) -> Vec<Vec<usize>> {
    let n = members.len();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if overlaps(&members[i].bbox, &members[j].bbox, threshold) {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().filter(|g| g.len() > 1).collect()
}

/// Collapses every overlap group among top-level clusters to its winner,
/// repeating until no two top-level clusters overlap.
///
/// A special winner adopts regular losers as children and takes over the
/// children of special losers. A regular winner absorbs the cells of every
/// loser (including their children) and re-snaps to them.
pub fn resolve_overlaps(
    mut clusters: Vec<Cluster>,
    cells: &[TextCell],
    cfg: &PipelineConfig,
) -> Vec<Cluster> {
    let lookup = cell_lookup(cells);
    loop {
        clusters.sort_by_key(|c| c.id);
        let top: BTreeSet<usize> = top_level_ids(&clusters).into_iter().collect();
        let pos: HashMap<usize, usize> = clusters.iter().enumerate().map(|(i, c)| (c.id, i)).collect();
        let members: Vec<&Cluster> = clusters.iter().filter(|c| top.contains(&c.id)).collect();
        let groups = overlap_groups(&members, cfg.taxonomy.overlap_threshold);
        if groups.is_empty() {
            return clusters;
        }

        let mut merges: Vec<(usize, Vec<usize>)> = Vec::with_capacity(groups.len());
        for g in &groups {
            let group: Vec<&Cluster> = g.iter().map(|&i| members[i]).collect();
            let winner = select_best_proposal(&group, cfg).expect("groups are non-empty").id;
            let losers = group.iter().map(|c| c.id).filter(|&id| id != winner).collect();
            merges.push((winner, losers));
        }

        let mut removed: BTreeSet<usize> = BTreeSet::new();
        for (winner, losers) in merges {
            let wi = pos[&winner];
            let winner_special = clusters[wi].role().is_special();
            let mut new_children = Vec::new();
            let mut new_cells = Vec::new();
            for loser in losers {
                let l = &clusters[pos[&loser]];
                match (winner_special, l.role().is_special()) {
                    (true, false) => new_children.push(loser),
                    (true, true) => {
                        new_children.extend(l.children.iter().copied());
                        removed.insert(loser);
                    }
                    (false, _) => {
                        new_cells.extend(l.cell_ids.iter().copied());
                        for child in &l.children {
                            new_cells.extend(clusters[pos[child]].cell_ids.iter().copied());
                            removed.insert(*child);
                        }
                        removed.insert(loser);
                    }
                }
            }
            let w = &mut clusters[wi];
            w.children.extend(new_children);
            w.children.sort_unstable();
            w.children.dedup();
            if !new_cells.is_empty() {
                w.cell_ids.extend(new_cells);
                w.cell_ids.sort_unstable();
                w.cell_ids.dedup();
                snap_with(w, &lookup);
            }
        }
        clusters.retain(|c| !removed.contains(&c.id));
        expand_wrappers(&mut clusters);
    }
}

/// One full refinement pass over a flat cluster list.
fn refine_pass(flat: &[Cluster], page: &PageSample, cfg: &PipelineConfig) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = flat
        .iter()
        .map(|c| Cluster {
            children: Vec::new(),
            cell_ids: Vec::new(),
            ..c.clone()
        })
        .collect();
    let cells = page.cells.as_deref().unwrap_or(&[]);
    if page.cells.is_some() {
        assign_cells(&mut clusters, cells, cfg);
        let lookup = cell_lookup(cells);
        for c in clusters.iter_mut() {
            snap_with(c, &lookup);
        }
    }
    let mut clusters = discard_oversized_pictures(clusters, page, &cfg.taxonomy);
    attach_children(&mut clusters, &cfg.taxonomy);
    expand_wrappers(&mut clusters);
    resolve_overlaps(clusters, cells, cfg)
}

fn flatten(clusters: &[Cluster]) -> Vec<Cluster> {
    let mut flat: Vec<Cluster> = clusters
        .iter()
        .map(|c| Cluster {
            children: Vec::new(),
            cell_ids: Vec::new(),
            ..c.clone()
        })
        .collect();
    flat.sort_by_key(|c| c.id);
    flat
}

fn reading_order(a: &Cluster, b: &Cluster) -> std::cmp::Ordering {
    a.bbox
        .top()
        .total_cmp(&b.bbox.top())
        .then_with(|| a.bbox.left().total_cmp(&b.bbox.left()))
        .then_with(|| a.id.cmp(&b.id))
}

/// Repeats [`refine_pass`] until the flattened layout stops changing.
/// Leaves the converged flat list in `flat` and returns the layout.
fn refine_to_fixed_point(flat: &mut Vec<Cluster>, page: &PageSample, cfg: &PipelineConfig) -> Vec<Cluster> {
    let mut layout = Vec::new();
    for _ in 0..cfg.max_passes {
        layout = refine_pass(flat, page, cfg);
        let next = flatten(&layout);
        let stable = next.len() == flat.len()
            && next.iter().zip(flat.iter()).all(|(a, b)| a.same_geometry(b));
        *flat = next;
        if stable {
            return layout;
        }
    }
    log::warn!(
        "page {:?}: refinement did not settle within {} passes",
        page.page_id,
        cfg.max_passes
    );
    layout
}

/// Runs the whole pipeline on one page.
///
/// With [`OrphanPolicy::EmitTextClusters`], cells left unowned after
/// refinement become Text clusters and refinement resumes, so orphans are
/// nested, merged and snapped like any other cluster.
///
/// The result lists top-level clusters in reading order (top, then left),
/// followed by nested children in reading order.
pub fn postprocess_page(page: &PageSample, cfg: &PipelineConfig) -> Vec<Cluster> {
    let gated = gate_by_confidence(&page.predictions, &cfg.taxonomy);
    let mut flat = build_clusters(&gated);
    let mut layout = refine_to_fixed_point(&mut flat, page, cfg);

    if let (OrphanPolicy::EmitTextClusters, Some(cells)) = (cfg.orphan_policy, &page.cells) {
        let score = cfg.taxonomy.min_score_for(Label::Text);
        for _ in 0..cfg.max_passes {
            let owned: BTreeSet<u64> = layout.iter().flat_map(|c| c.cell_ids.iter().copied()).collect();
            let mut next_id = flat.iter().map(|c| c.id + 1).max().unwrap_or(0);
            let before = flat.len();
            for cell in cells.iter().filter(|c| !owned.contains(&c.id)) {
                flat.push(Cluster {
                    id: next_id,
                    label: Label::Text,
                    bbox: cell.bbox,
                    score,
                    children: Vec::new(),
                    cell_ids: Vec::new(),
                });
                next_id += 1;
            }
            if flat.len() == before {
                break;
            }
            layout = refine_to_fixed_point(&mut flat, page, cfg);
        }
    }

    let top: BTreeSet<usize> = top_level_ids(&layout).into_iter().collect();
    layout.sort_by(|a, b| {
        top.contains(&b.id)
            .cmp(&top.contains(&a.id))
            .then_with(|| reading_order(a, b))
    });
    layout
}

/// Re-encodes clusters (top-level and nested) as detections in id order.
pub fn clusters_to_detections(clusters: &[Cluster]) -> Vec<Detection> {
    let mut sorted: Vec<&Cluster> = clusters.iter().collect();
    sorted.sort_by_key(|c| c.id);
    sorted
        .into_iter()
        .map(|c| Detection {
            label: c.label,
            bbox: c.bbox,
            score: c.score,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLayout {
    pub page_id: String,
    pub clusters: Vec<Cluster>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutFile {
    pub pages: Vec<PageLayout>,
}

/// Runs [`postprocess_page`] over every page in parallel; output follows
/// dataset page order.
pub fn postprocess_dataset(dataset: &Dataset, cfg: &PipelineConfig) -> LayoutFile {
    let pages = dataset
        .pages
        .par_iter()
        .map(|p| PageLayout {
            page_id: p.page_id.clone(),
            clusters: postprocess_page(p, cfg),
        })
        .collect();
    LayoutFile { pages }
}

/// Copy of `dataset` whose predictions are the post-processed clusters.
pub fn with_postprocessed_predictions(dataset: &Dataset, cfg: &PipelineConfig) -> Dataset {
    let layouts = postprocess_dataset(dataset, cfg);
    let mut out = dataset.clone();
    for (page, layout) in out.pages.iter_mut().zip(layouts.pages) {
        page.predictions = clusters_to_detections(&layout.clusters);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bb(l: f64, t: f64, r: f64, b: f64) -> BBox {
        BBox::new(l, t, r, b).unwrap()
    }

    fn det(label: Label, bbox: BBox, score: f64) -> Detection {
        Detection { label, bbox, score }
    }

    fn cl(id: usize, label: Label, bbox: BBox, score: f64) -> Cluster {
        Cluster::from_detection(id, &det(label, bbox, score))
    }

    fn cell(id: u64, bbox: BBox) -> TextCell {
        TextCell {
            id,
            bbox,
            text: String::new(),
        }
    }

    fn page(w: f64, h: f64) -> PageSample {
        PageSample::new("p", w, h).unwrap()
    }

    #[test]
    fn gating() {
        let dets = vec![
            det(Label::Text, bb(0., 0., 1., 1.), 0.7),
            det(Label::Table, bb(0., 0., 1., 1.), 0.3),
        ];
        let cfg = TaxonomyConfig::default();
        assert_eq!(gate_by_confidence(&dets, &cfg), vec![dets[0].clone()]);

        let mut zero = cfg.clone();
        zero.min_score.values_mut().for_each(|v| *v = 0.0);
        assert_eq!(gate_by_confidence(&dets, &zero), dets);

        let mut per_label = zero.clone();
        per_label.min_score.insert(Label::Text, 0.8);
        let dets2 = vec![
            det(Label::Text, bb(0., 0., 1., 1.), 0.7),
            det(Label::Table, bb(0., 0., 1., 1.), 0.7),
        ];
        assert_eq!(gate_by_confidence(&dets2, &per_label), vec![dets2[1].clone()]);
    }

    #[test]
    fn cell_assignment_rules() {
        let cfg = PipelineConfig::default();
        // cell (0,0,10,10): 80% inside A, 10% inside B
        let mut clusters = vec![
            cl(0, Label::Text, bb(2., 0., 20., 10.), 0.6),
            cl(1, Label::Text, bb(-5., 0., 1., 10.), 0.9),
        ];
        let cells = vec![cell(7, bb(0., 0., 10., 10.)), cell(8, bb(50., 50., 60., 60.))];
        assign_cells(&mut clusters, &cells, &cfg);
        assert_eq!(clusters[0].cell_ids, vec![7]);
        assert!(clusters[1].cell_ids.is_empty());

        // exact 50/50 split between equal-score clusters goes to the lower id
        let mut clusters = vec![
            cl(0, Label::Text, bb(0., 0., 5., 10.), 0.7),
            cl(1, Label::Text, bb(5., 0., 10., 10.), 0.7),
        ];
        assign_cells(&mut clusters, &[cell(1, bb(0., 0., 10., 10.))], &cfg);
        assert_eq!(clusters[0].cell_ids, vec![1]);
        assert!(clusters[1].cell_ids.is_empty());

        // wrappers never own cells
        let mut clusters = vec![cl(0, Label::Table, bb(0., 0., 10., 10.), 0.9)];
        assign_cells(&mut clusters, &[cell(1, bb(1., 1., 2., 2.))], &cfg);
        assert!(clusters[0].cell_ids.is_empty());
    }

    #[test]
    fn snapping() {
        let cells = vec![cell(0, bb(10., 10., 50., 20.)), cell(1, bb(10., 25., 60., 35.))];
        let mut c = cl(0, Label::Text, bb(0., 0., 100., 100.), 0.9);
        c.cell_ids = vec![0, 1];
        snap_to_cells(&mut c, &cells);
        assert_eq!(c.bbox, bb(10., 10., 60., 35.));

        let mut none = cl(1, Label::Text, bb(0., 0., 5., 5.), 0.9);
        snap_to_cells(&mut none, &cells);
        assert_eq!(none.bbox, bb(0., 0., 5., 5.));

        let mut grow = cl(2, Label::Text, bb(20., 12., 30., 18.), 0.9);
        grow.cell_ids = vec![0];
        snap_to_cells(&mut grow, &cells);
        assert_eq!(grow.bbox, bb(10., 10., 50., 20.));
    }

    #[test]
    fn picture_coverage_is_strict() {
        let cfg = TaxonomyConfig::default();
        let p = page(100., 100.);
        let pics = vec![
            cl(0, Label::Picture, bb(0., 0., 95., 100.), 0.9),
            cl(1, Label::Picture, bb(0., 0., 50., 100.), 0.9),
            cl(2, Label::Picture, bb(0., 0., 90., 100.), 0.9),
            cl(3, Label::Table, bb(0., 0., 100., 100.), 0.9),
        ];
        let kept: Vec<usize> = discard_oversized_pictures(pics, &p, &cfg).iter().map(|c| c.id).collect();
        assert_eq!(kept, vec![1, 2, 3]);
    }

    #[test]
    fn children_attach_to_best_special() {
        let cfg = TaxonomyConfig::default();
        let mut clusters = vec![
            cl(0, Label::Form, bb(0., 0., 100., 100.), 0.9),
            cl(1, Label::Text, bb(10., 10., 20., 20.), 0.9),
            cl(2, Label::Text, bb(200., 200., 210., 210.), 0.9),
        ];
        attach_children(&mut clusters, &cfg);
        assert_eq!(clusters[0].children, vec![1]);
        assert_eq!(top_level_ids(&clusters), vec![0, 2]);

        // 0.9 inside the Form, 0.6 inside the Table
        let mut clusters = vec![
            cl(0, Label::Table, bb(4., 0., 100., 10.), 0.9),
            cl(1, Label::Form, bb(1., 0., 8., 10.), 0.9),
            cl(2, Label::Text, bb(0., 0., 10., 10.), 0.9),
        ];
        attach_children(&mut clusters, &cfg);
        assert!(clusters[0].children.is_empty());
        assert_eq!(clusters[1].children, vec![2]);
    }

    #[test]
    fn only_form_and_key_value_expand() {
        let mut clusters = vec![
            cl(0, Label::Form, bb(0., 0., 100., 100.), 0.9),
            cl(1, Label::Text, bb(90., 90., 120., 110.), 0.9),
            cl(2, Label::Table, bb(200., 0., 300., 100.), 0.9),
            cl(3, Label::Text, bb(290., 10., 320., 20.), 0.9),
            cl(4, Label::KeyValueRegion, bb(0., 200., 10., 210.), 0.9),
        ];
        clusters[0].children = vec![1];
        clusters[2].children = vec![3];
        expand_wrappers(&mut clusters);
        assert_eq!(clusters[0].bbox, bb(0., 0., 120., 110.));
        assert_eq!(clusters[2].bbox, bb(200., 0., 300., 100.));
        assert_eq!(clusters[4].bbox, bb(0., 200., 10., 210.));
    }

    #[test]
    fn best_proposal_rules() {
        let cfg = PipelineConfig::default();
        let table = cl(0, Label::Table, bb(0., 0., 10., 10.), 0.8);
        let text = cl(1, Label::Text, bb(0., 0., 10., 10.), 0.95);
        assert_eq!(select_best_proposal(&[&table, &text], &cfg).unwrap().id, 0);
        assert_eq!(select_best_proposal(&[&text], &cfg).unwrap().id, 1);
        assert!(matches!(select_best_proposal(&[], &cfg), Err(Error::EmptyInput(_))));

        let small = cl(0, Label::Text, bb(0., 0., 10., 10.), 0.7);
        let large = cl(1, Label::Text, bb(0., 0., 20., 20.), 0.7);
        let mut area_cfg = cfg.clone();
        area_cfg.size_weight_exponent = 1.0;
        assert_eq!(select_best_proposal(&[&small, &large], &area_cfg).unwrap().id, 1);
        // without the size term the tie falls to the lower id
        assert_eq!(select_best_proposal(&[&small, &large], &cfg).unwrap().id, 0);

        // a disqualified wrapper loses despite priority
        let mut gated = cfg.clone();
        gated.role_gates.wrapper.min_score = 0.9;
        assert_eq!(select_best_proposal(&[&table, &text], &gated).unwrap().id, 1);
        // ... unless every member is struck
        gated.role_gates.regular.min_score = 0.99;
        assert_eq!(select_best_proposal(&[&table, &text], &gated).unwrap().id, 0);
    }

    #[test]
    fn overlap_resolution() {
        let cfg = PipelineConfig::default();
        let out = resolve_overlaps(
            vec![
                cl(0, Label::Text, bb(0., 0., 10., 10.), 0.6),
                cl(1, Label::Text, bb(0., 0., 10., 10.), 0.9),
            ],
            &[],
            &cfg,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.9);

        let disjoint = vec![
            cl(0, Label::Text, bb(0., 0., 10., 10.), 0.6),
            cl(1, Label::Text, bb(20., 0., 30., 10.), 0.9),
        ];
        assert_eq!(resolve_overlaps(disjoint.clone(), &[], &cfg), disjoint);
    }

    #[test]
    fn chained_overlaps_form_one_group() {
        let cfg = PipelineConfig::default();
        let cells = vec![
            cell(0, bb(0., 0., 10., 10.)),
            cell(1, bb(8., 0., 18., 10.)),
            cell(2, bb(16., 0., 26., 10.)),
        ];
        // A overlaps B, B overlaps C, A and C are disjoint
        let mut a = cl(0, Label::Text, bb(0., 0., 10., 10.), 0.7);
        let mut b = cl(1, Label::Text, bb(4., 0., 20., 10.), 0.9);
        let mut c = cl(2, Label::Text, bb(14., 0., 26., 10.), 0.6);
        a.cell_ids = vec![0];
        b.cell_ids = vec![1];
        c.cell_ids = vec![2];
        let out = resolve_overlaps(vec![a, b, c], &cells, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, 1);
        assert_eq!(out[0].cell_ids, vec![0, 1, 2]);
        assert_eq!(out[0].bbox, bb(0., 0., 26., 10.));
    }

    #[test]
    fn special_winner_adopts_regular_losers() {
        let cfg = PipelineConfig::default();
        // Text is larger than the picture, so it was not attached as a child
        let mut text = cl(0, Label::Text, bb(0., 0., 40., 40.), 0.9);
        text.cell_ids = vec![3];
        let pic = cl(1, Label::Picture, bb(5., 5., 30., 30.), 0.8);
        let out = resolve_overlaps(vec![text, pic], &[cell(3, bb(0., 0., 40., 40.))], &cfg);
        assert_eq!(out.len(), 2);
        assert_eq!(top_level_ids(&out), vec![1]);
        assert_eq!(out[1].children, vec![0]);
        assert_eq!(out[0].cell_ids, vec![3]);
    }

    #[test]
    fn empty_and_image_only_pages() {
        let cfg = PipelineConfig::default();
        assert!(postprocess_page(&page(100., 100.), &cfg).is_empty());

        let mut p = page(100., 100.);
        p.predictions = vec![
            det(Label::Text, bb(10., 10., 50., 20.), 0.9),
            det(Label::Text, bb(12., 10., 50., 20.), 0.8),
        ];
        let out = postprocess_page(&p, &cfg);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].bbox, bb(10., 10., 50., 20.));
        assert!(out[0].cell_ids.is_empty());
    }

    #[test]
    fn orphan_cells_can_become_text() {
        let mut p = page(100., 100.);
        p.cells = Some(vec![cell(0, bb(10., 10., 20., 20.)), cell(1, bb(60., 60., 70., 70.))]);
        p.predictions = vec![det(Label::Text, bb(8., 8., 22., 22.), 0.9)];
        let mut cfg = PipelineConfig::default();
        assert_eq!(postprocess_page(&p, &cfg).len(), 1);
        cfg.orphan_policy = OrphanPolicy::EmitTextClusters;
        let out = postprocess_page(&p, &cfg);
        assert_eq!(out.len(), 2);
        let orphan = out.iter().find(|c| c.cell_ids == vec![1]).unwrap();
        assert_eq!(orphan.label, Label::Text);
        assert_eq!(orphan.score, 0.5);
        assert_eq!(orphan.bbox, bb(60., 60., 70., 70.));

        // an orphan inside a table nests under it instead of overlapping it
        p.predictions.push(det(Label::Table, bb(50., 50., 90., 90.), 0.9));
        let out = postprocess_page(&p, &cfg);
        assert_eq!(top_level_ids(&out).len(), 2);
        let table = out.iter().find(|c| c.label == Label::Table).unwrap();
        let orphan = out.iter().find(|c| c.cell_ids == vec![1]).unwrap();
        assert_eq!(table.children, vec![orphan.id]);
    }

    #[test]
    fn output_is_in_reading_order() {
        let mut p = page(100., 100.);
        p.predictions = vec![
            det(Label::Text, bb(50., 50., 60., 60.), 0.9),
            det(Label::Text, bb(50., 10., 60., 20.), 0.9),
            det(Label::Text, bb(10., 10., 20., 20.), 0.9),
        ];
        let ids: Vec<usize> = postprocess_page(&p, &PipelineConfig::default())
            .iter()
            .map(|c| c.id)
            .collect();
        assert_eq!(ids, vec![2, 1, 0]);
    }

    #[test]
    fn config_json() {
        let cfg = PipelineConfig::from_json_str(
            r#"{"min_score": {"Table": 0.3}, "cell_assignment_threshold": 0.2,
                "orphan_policy": "emit-text-clusters", "role_gates": {"picture": {"min_area": 100}}}"#,
            "cfg",
        )
        .unwrap();
        assert_eq!(cfg.taxonomy.min_score_for(Label::Table), 0.3);
        assert_eq!(cfg.cell_assignment_threshold, 0.2);
        assert_eq!(cfg.orphan_policy, OrphanPolicy::EmitTextClusters);
        assert_eq!(cfg.role_gates.picture.min_area, 100.0);
        assert_eq!(cfg.role_gates.picture.min_score, 0.5);
        assert_eq!(cfg.taxonomy.overlap_threshold, 0.5);
        assert!(PipelineConfig::from_json_str(r#"{"cell_assignment_threshold": 2}"#, "cfg").is_err());
    }
}
