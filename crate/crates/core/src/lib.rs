//! Document layout post-processing and evaluation.
//!
//! Raw detector output enters as COCO-style JSON, gets turned into clean
//! non-overlapping layout clusters by [`postprocess`], and is scored with
//! either the COCO protocol ([`eval_coco`]) or the document-targeted
//! protocol in [`eval_docling`]. [`curation`] filters corpora, [`bench`]
//! times a page runner, and [`report`] / [`viz`] produce tables and SVG
//! overlays.

pub mod bench;
pub mod curation;
pub mod error;
pub mod eval_coco;
pub mod eval_docling;
pub mod geometry;
pub mod ingest;
pub mod postprocess;
pub mod report;
pub mod taxonomy;
pub mod viz;

pub use error::{Error, Result};
pub use geometry::BBox;
pub use ingest::{Annotation, Dataset, Detection, PageSample, TextCell};
pub use postprocess::{Cluster, PipelineConfig};
pub use taxonomy::{Label, LabelRole, TaxonomyConfig};
