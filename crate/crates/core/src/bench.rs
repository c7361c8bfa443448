//! Runtime measurement around a pluggable batch runner.
//!
//! Pages are materialized in memory before the clock starts, so loading and
//! parsing never count. Each batch is timed with a monotonic clock and its
//! wall time is amortized over the pages it actually held (the last batch
//! may be partial). Every page contributes its amortized time to the series,
//! so the mean equals total time divided by page count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, PageSample};
use crate::postprocess::{postprocess_page, Cluster, PipelineConfig};

/// Something that processes pages a batch at a time. Outputs must be a
/// deterministic function of the input pages.
pub trait PageRunner {
    type Output;

    fn run_batch(&mut self, pages: &[PageSample]) -> Vec<Self::Output>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchOptions {
    pub batch_size: usize,
    /// Batches run untimed before measurement starts.
    pub warmup_batches: usize,
    pub device: String,
    pub model: String,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            batch_size: 32,
            warmup_batches: 1,
            device: "cpu".into(),
            model: "postprocess".into(),
        }
    }
}

/// Per-image seconds. Field order matches the runtime table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub device: String,
    pub batch_size: usize,
    pub model: String,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub n_images: usize,
}

pub struct BenchRun<T> {
    pub stats: RuntimeStats,
    pub outputs: Vec<T>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Summary statistics of a per-image series.
pub fn summarize(series: &[f64]) -> Result<(f64, f64, f64, f64)> {
    if series.is_empty() {
        return Err(Error::EmptyDataset("no timings".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    // rounding can push the mean of near-equal values outside [min, max]
    let mean = (sorted.iter().sum::<f64>() / sorted.len() as f64).clamp(min, max);
    Ok((mean, median(&sorted), min, max))
}

pub fn run_benchmark<R: PageRunner>(
    runner: &mut R,
    pages: &[PageSample],
    options: &BenchOptions,
) -> Result<BenchRun<R::Output>> {
    if pages.is_empty() {
        return Err(Error::EmptyDataset("nothing to benchmark".into()));
    }
    if options.batch_size == 0 {
        return Err(Error::Validation("batch size must be at least 1".into()));
    }
    let mut batch_size = options.batch_size;
    if batch_size > pages.len() {
        log::warn!(
            "batch size {batch_size} exceeds the {} available pages; running one batch",
            pages.len()
        );
        batch_size = pages.len();
    }

    for batch in pages.chunks(batch_size).take(options.warmup_batches) {
        let _ = runner.run_batch(batch);
    }

    let mut series = Vec::with_capacity(pages.len());
    let mut outputs = Vec::with_capacity(pages.len());
    for batch in pages.chunks(batch_size) {
        let start = Instant::now();
        let out = runner.run_batch(batch);
        let elapsed = start.elapsed().as_secs_f64();
        let per_image = elapsed / batch.len() as f64;
        series.extend(std::iter::repeat_n(per_image, batch.len()));
        outputs.extend(out);
    }

    let (mean, median, min, max) = summarize(&series)?;
    Ok(BenchRun {
        stats: RuntimeStats {
            device: options.device.clone(),
            batch_size: options.batch_size,
            model: options.model.clone(),
            mean,
            median,
            min,
            max,
            n_images: pages.len(),
        },
        outputs,
    })
}

/// Finishes `load` completely before any timing begins.
pub fn run_benchmark_preloaded<R, F>(
    load: F,
    runner: &mut R,
    options: &BenchOptions,
) -> Result<BenchRun<R::Output>>
where
    R: PageRunner,
    F: FnOnce() -> Result<Vec<PageSample>>,
{
    let pages = load()?;
    run_benchmark(runner, &pages, options)
}

/// The post-processing pipeline as a runner.
pub struct PostprocessRunner {
    pub config: PipelineConfig,
}

impl PageRunner for PostprocessRunner {
    type Output = Vec<Cluster>;

    fn run_batch(&mut self, pages: &[PageSample]) -> Vec<Self::Output> {
        pages.iter().map(|p| postprocess_page(p, &self.config)).collect()
    }
}

pub fn benchmark_postprocess(
    dataset: &Dataset,
    config: &PipelineConfig,
    options: &BenchOptions,
) -> Result<BenchRun<Vec<Cluster>>> {
    let mut runner = PostprocessRunner {
        config: config.clone(),
    };
    run_benchmark(&mut runner, &dataset.pages, options)
}
