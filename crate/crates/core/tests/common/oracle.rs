//! Brute-force COCO reference, written without the library's matcher or
//! precision envelope. Boxes are plain `[l, t, r, b]` arrays.

#![allow(dead_code)]

pub type Rect = [f64; 4];

#[derive(Debug, Clone)]
pub struct OGt {
    pub class: usize,
    pub rect: Rect,
}

#[derive(Debug, Clone)]
pub struct ODet {
    pub class: usize,
    pub rect: Rect,
    pub score: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OPage {
    pub gts: Vec<OGt>,
    pub dets: Vec<ODet>,
}

/// `start + i * step`, last value forced to `stop`.
pub fn grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    let step = (stop - start) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| i as f64 * step + start).collect();
    v[n - 1] = stop;
    v
}

fn area(r: &Rect) -> f64 {
    (r[2] - r[0]) * (r[3] - r[1])
}

pub fn iou(a: &Rect, b: &Rect) -> f64 {
    let w = a[2].min(b[2]) - a[0].max(b[0]);
    let h = a[3].min(b[3]) - a[1].max(b[1]);
    let inter = if w > 0.0 && h > 0.0 { w * h } else { 0.0 };
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Per class: AP at every IoU threshold, or `None` without ground truth.
pub fn class_ap(pages: &[OPage], class: usize) -> Option<Vec<f64>> {
    let n_gt: usize = pages
        .iter()
        .map(|p| p.gts.iter().filter(|g| g.class == class).count())
        .sum();
    if n_gt == 0 {
        return None;
    }
    let recall_grid = grid(0.0, 1.0, 101);
    let mut aps = Vec::new();
    for t in grid(0.5, 0.95, 10) {
        let floor = t.min(1.0 - 1e-10);
        // (score, page, index within page, true positive)
        let mut ranked: Vec<(f64, usize, usize, bool)> = Vec::new();
        for (pi, page) in pages.iter().enumerate() {
            let gts: Vec<&OGt> = page.gts.iter().filter(|g| g.class == class).collect();
            let mut dets: Vec<(usize, &ODet)> =
                page.dets.iter().filter(|d| d.class == class).enumerate().collect();
            dets.sort_by(|a, b| b.1.score.partial_cmp(&a.1.score).unwrap().then(a.0.cmp(&b.0)));
            let mut taken = vec![false; gts.len()];
            for (di, d) in dets {
                // highest IoU wins; among equals the later box
                let mut pick: Option<(usize, f64)> = None;
                for (gi, g) in gts.iter().enumerate() {
                    let v = iou(&d.rect, &g.rect);
                    if taken[gi] || v < floor {
                        continue;
                    }
                    if pick.is_none_or(|(_, best)| v >= best) {
                        pick = Some((gi, v));
                    }
                }
                if let Some((gi, _)) = pick {
                    taken[gi] = true;
                }
                ranked.push((d.score, pi, di, pick.is_some()));
            }
        }
        ranked.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        // every prefix of the ranking is one operating point
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut tp = 0usize;
        for (k, r) in ranked.iter().enumerate() {
            if r.3 {
                tp += 1;
            }
            points.push((tp as f64 / n_gt as f64, tp as f64 / (k + 1) as f64));
        }
        let total: f64 = recall_grid
            .iter()
            .map(|&r| {
                points
                    .iter()
                    .filter(|(rc, _)| *rc >= r)
                    .map(|(_, p)| *p)
                    .fold(0.0, f64::max)
            })
            .sum();
        aps.push(total / recall_grid.len() as f64);
    }
    Some(aps)
}

pub struct OSummary {
    pub map: f64,
    pub ap50: f64,
    pub ap75: f64,
}

/// Means over classes with ground truth; -1 when there are none.
pub fn summarize(pages: &[OPage], n_classes: usize) -> OSummary {
    let per: Vec<Vec<f64>> = (0..n_classes).filter_map(|c| class_ap(pages, c)).collect();
    if per.is_empty() {
        return OSummary {
            map: -1.0,
            ap50: -1.0,
            ap75: -1.0,
        };
    }
    let n = per.len() as f64;
    OSummary {
        map: per.iter().map(|a| a.iter().sum::<f64>() / a.len() as f64).sum::<f64>() / n,
        ap50: per.iter().map(|a| a[0]).sum::<f64>() / n,
        ap75: per.iter().map(|a| a[5]).sum::<f64>() / n,
    }
}
