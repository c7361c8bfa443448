//! Axis-aligned rectangle arithmetic in page-pixel space.
//!
//! Origin is the top-left corner of the page and `y` grows downward.
//! Zero-area boxes are legal values, but they cannot serve as the
//! denominator of [`iou`] or [`containment_fraction`].

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid box ({left}, {top}, {right}, {bottom}): {reason}")]
    InvalidBox {
        left: f64,
        top: f64,
        right: f64,
        bottom: f64,
        reason: &'static str,
    },
    #[error("undefined geometry: {0}")]
    Undefined(&'static str),
    #[error("union of an empty list of boxes")]
    EmptyInput,
}

/// Rectangle `(left, top, right, bottom)` with `left <= right` and `top <= bottom`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    left: f64,
    top: f64,
    right: f64,
    bottom: f64,
}

impl BBox {
    pub fn new(left: f64, top: f64, right: f64, bottom: f64) -> Result<Self, GeometryError> {
        let invalid = |reason| GeometryError::InvalidBox {
            left,
            top,
            right,
            bottom,
            reason,
        };
        if ![left, top, right, bottom].iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if left > right {
            return Err(invalid("left > right"));
        }
        if top > bottom {
            return Err(invalid("top > bottom"));
        }
        Ok(Self {
            left,
            top,
            right,
            bottom,
        })
    }

    /// Builds a box from the COCO `[x, y, width, height]` convention.
    pub fn from_xywh(x: f64, y: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(x, y, x + width, y + height)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn top(&self) -> f64 {
        self.top
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn bottom(&self) -> f64 {
        self.bottom
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        self.area() <= 0.0
    }

    pub fn to_xywh(&self) -> [f64; 4] {
        [self.left, self.top, self.width(), self.height()]
    }

    pub fn to_ltrb(&self) -> [f64; 4] {
        [self.left, self.top, self.right, self.bottom]
    }

    /// Closed-interval containment: `other` lies inside `self`, edges included.
    pub fn contains(&self, other: &BBox) -> bool {
        other.left >= self.left
            && other.right <= self.right
            && other.top >= self.top
            && other.bottom <= self.bottom
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let left = self.left.max(other.left);
        let top = self.top.max(other.top);
        let right = self.right.min(other.right);
        let bottom = self.bottom.min(other.bottom);
        (left <= right && top <= bottom).then_some(BBox {
            left,
            top,
            right,
            bottom,
        })
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        self.intersection(other).map_or(0.0, |b| b.area())
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }

    pub fn translate(&self, dx: f64, dy: f64) -> BBox {
        BBox {
            left: self.left + dx,
            top: self.top + dy,
            right: self.right + dx,
            bottom: self.bottom + dy,
        }
    }

    /// Clamps the box to `[0, width] x [0, height]`.
    ///
    /// Returns `None` when the box lies entirely outside the page. A box that
    /// only touches an edge survives as a degenerate box.
    pub fn clamp_to_page(&self, width: f64, height: f64) -> Option<BBox> {
        let page = BBox {
            left: 0.0,
            top: 0.0,
            right: width,
            bottom: height,
        };
        self.intersection(&page)
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = GeometryError;

    fn try_from(v: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_ltrb()
    }
}

/// Intersection over union. Errors when both boxes have zero area.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64, GeometryError> {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return Err(GeometryError::Undefined("iou of two zero-area boxes"));
    }
    Ok((inter / union).clamp(0.0, 1.0))
}

/// Fraction of `inner`'s area that lies inside `outer`.
pub fn containment_fraction(inner: &BBox, outer: &BBox) -> Result<f64, GeometryError> {
    let area = inner.area();
    if area <= 0.0 {
        return Err(GeometryError::Undefined(
            "containment of a zero-area box",
        ));
    }
    Ok((inner.intersection_area(outer) / area).clamp(0.0, 1.0))
}

/// Smallest box enclosing every input.
pub fn union_bbox<'a, I>(boxes: I) -> Result<BBox, GeometryError>
where
    I: IntoIterator<Item = &'a BBox>,
{
    boxes
        .into_iter()
        .copied()
        .reduce(|acc, b| acc.union(&b))
        .ok_or(GeometryError::EmptyInput)
}
