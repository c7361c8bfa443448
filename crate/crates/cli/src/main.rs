use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use doclayout::bench::{benchmark_postprocess, BenchOptions};
use doclayout::curation::{apply_exclusion, detections_by_page, excise_tabled_pages, flag_delta_pages};
use doclayout::eval_coco::{evaluate_coco, EvalOptions};
use doclayout::eval_docling::evaluate_docling;
use doclayout::ingest::{load_cells, load_ground_truth, load_predictions, to_coco_ground_truth};
use doclayout::postprocess::{postprocess_dataset, postprocess_page, with_postprocessed_predictions};
use doclayout::report::{emit_report, Report, ReportFormat, ReportOptions};
use doclayout::viz::{parse_panels, render_overlay, BoxSource};
use doclayout::{Dataset, Label, PipelineConfig};

/// Post-processing, evaluation and curation of document layout detections.
#[derive(Parser)]
#[command(name = "doclayout", version)]
struct Cli {
    /// Worker threads for page-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn raw detections into layout clusters.
    Postprocess(PostprocessCmd),
    /// COCO metrics (mAP-50:95, AP-50/75, size buckets).
    EvalCoco(EvalCocoCmd),
    /// Document-targeted protocol: 0.5 gate, unit scores, count-matched pages.
    EvalDocling(EvalDoclingCmd),
    /// Exclude pages flagged by a filtering detector.
    Curate(CurateCmd),
    /// Time the post-processing pipeline per image.
    Bench(BenchCmd),
    /// Render side-by-side SVG overlays for one page.
    Viz(VizCmd),
}

#[derive(Args)]
struct Inputs {
    /// COCO ground-truth file.
    #[arg(long)]
    gt: PathBuf,
    /// COCO results file.
    #[arg(long)]
    pred: PathBuf,
    /// Text cells per page, `{pages:[{page_id, cells:[{id, bbox:[l,t,r,b], text}]}]}`.
    #[arg(long)]
    cells: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Pipeline configuration JSON; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl PipelineArgs {
    fn load(&self) -> Result<PipelineConfig> {
        match &self.config {
            Some(p) => Ok(PipelineConfig::load(p)?),
            None => Ok(PipelineConfig::default()),
        }
    }
}

#[derive(Args)]
struct PostprocessCmd {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Output clusters JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCocoCmd {
    #[command(flatten)]
    inputs: Inputs,
    /// Drop detections scoring below this before evaluating.
    #[arg(long)]
    score_floor: Option<f64>,
    /// Detections kept per page and class.
    #[arg(long, default_value_t = 100)]
    max_dets: usize,
    /// Evaluate post-processed clusters instead of raw detections.
    #[arg(long)]
    postprocess: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Add an AP-95 column to markdown output.
    #[arg(long)]
    ap95: bool,
    /// Report path; the extension picks markdown, CSV or JSON. Markdown on stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalDoclingCmd {
    #[command(flatten)]
    inputs: Inputs,
    /// Evaluate post-processed clusters instead of raw detections.
    #[arg(long)]
    postprocess: bool,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true, subcommand_negates_reqs = true)]
struct CurateCmd {
    #[command(subcommand)]
    action: Option<CurateAction>,
    /// COCO ground-truth file of the corpus to curate.
    #[arg(long, required = true)]
    gt: Option<PathBuf>,
    /// Filtering detector output as a COCO results file.
    #[arg(long, required = true)]
    filter_dets: Option<PathBuf>,
    /// Flag a page when a delta-label detection scores at or above this.
    #[arg(long, default_value_t = 0.3)]
    threshold: f64,
    /// Taxonomy/pipeline config supplying the delta labels.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Curated COCO ground truth.
    #[arg(long, required = true)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CurateAction {
    /// Drop every page whose ground truth contains a table.
    ExciseTables {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Label whose presence removes a page.
        #[arg(long, default_value = "Table")]
        trigger: Label,
    },
}

#[derive(Args)]
struct BenchCmd {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Untimed batches run first.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    /// Free-form device tag recorded in the report.
    #[arg(long, default_value = "cpu")]
    device_tag: String,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct VizCmd {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Page id (the image file name without extension).
    #[arg(long)]
    page: String,
    /// Comma-separated panel sources: gt, raw, gated, clusters.
    #[arg(long, default_value = "gt,raw,gated")]
    panels: String,
    /// Output SVG.
    #[arg(long)]
    out: PathBuf,
}

fn load_inputs(inputs: &Inputs) -> Result<Dataset> {
    let ds = load_ground_truth(&inputs.gt)?;
    let ds = load_predictions(&inputs.pred, ds)?;
    Ok(match &inputs.cells {
        Some(c) => load_cells(c, ds)?,
        None => ds,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_report<R: Report>(metrics: &R, path: Option<&Path>, options: &ReportOptions) -> Result<()> {
    match path {
        Some(p) => write(p, &emit_report(metrics, ReportFormat::from_path(p), options)),
        None => {
            print!("{}", emit_report(metrics, ReportFormat::Markdown, options));
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Postprocess(cmd) => {
            let cfg = cmd.pipeline.load()?;
            let ds = load_inputs(&cmd.inputs)?;
            let layout = postprocess_dataset(&ds, &cfg);
            write(&cmd.out, &to_json(&layout))?;
            let n: usize = layout.pages.iter().map(|p| p.clusters.len()).sum();
            log::info!("{} pages, {n} clusters", layout.pages.len());
        }
        Command::EvalCoco(cmd) => {
            let mut ds = load_inputs(&cmd.inputs)?;
            if cmd.postprocess {
                ds = with_postprocessed_predictions(&ds, &cmd.pipeline.load()?);
            }
            let options = EvalOptions {
                score_floor: cmd.score_floor,
                max_dets: cmd.max_dets,
            };
            let metrics = evaluate_coco(&ds, &options)?;
            let report = ReportOptions {
                include_ap95: cmd.ap95,
            };
            write_report(&metrics, cmd.report.as_deref(), &report)?;
        }
        Command::EvalDocling(cmd) => {
            let mut ds = load_inputs(&cmd.inputs)?;
            if cmd.postprocess {
                ds = with_postprocessed_predictions(&ds, &cmd.pipeline.load()?);
            }
            let report = evaluate_docling(&ds)?;
            write_report(&report, cmd.report.as_deref(), &ReportOptions::default())?;
        }
        Command::Curate(cmd) => match cmd.action {
            Some(CurateAction::ExciseTables { gt, out, trigger }) => {
                let ds = load_ground_truth(&gt)?;
                let kept = excise_tabled_pages(&ds, trigger);
                log::info!("kept {} of {} pages", kept.pages.len(), ds.pages.len());
                write(&out, &to_json(&to_coco_ground_truth(&kept)?))?;
            }
            None => {
                let (Some(gt), Some(filter), Some(out)) = (cmd.gt, cmd.filter_dets, cmd.out) else {
                    bail!("curate needs --gt, --filter-dets and --out");
                };
                if !(0.0..=1.0).contains(&cmd.threshold) {
                    bail!("--threshold must lie in [0, 1]");
                }
                let delta = match &cmd.config {
                    Some(p) => PipelineConfig::load(p)?.taxonomy.delta_labels,
                    None => PipelineConfig::default().taxonomy.delta_labels,
                };
                let ds = load_predictions(&filter, load_ground_truth(&gt)?)?;
                let flagged = flag_delta_pages(&detections_by_page(&ds), &delta, cmd.threshold);
                let (mut curated, report) = apply_exclusion(&ds, &flagged)?;
                for p in &mut curated.pages {
                    p.predictions.clear();
                }
                write(&out, &to_json(&to_coco_ground_truth(&curated)?))?;
                write_report(&report, cmd.report.as_deref(), &ReportOptions::default())?;
            }
        },
        Command::Bench(cmd) => {
            let cfg = cmd.pipeline.load()?;
            // loading finishes before any timing starts
            let ds = load_inputs(&cmd.inputs)?;
            let options = BenchOptions {
                batch_size: cmd.batch_size,
                warmup_batches: cmd.warmup,
                device: cmd.device_tag,
                model: "postprocess".into(),
            };
            let run = benchmark_postprocess(&ds, &cfg, &options)?;
            write_report(&run.stats, cmd.report.as_deref(), &ReportOptions::default())?;
        }
        Command::Viz(cmd) => {
            let cfg = cmd.pipeline.load()?;
            let panels = parse_panels(&cmd.panels)?;
            let ds = load_inputs(&cmd.inputs)?;
            let page = ds
                .page(&cmd.page)
                .with_context(|| format!("page {:?} is not in {}", cmd.page, cmd.inputs.gt.display()))?;
            let clusters = panels
                .iter()
                .any(|p| p.source == BoxSource::Clusters)
                .then(|| postprocess_page(page, &cfg));
            let doc = render_overlay(page, &panels, Some(&cfg), clusters.as_deref())?;
            write(&cmd.out, &doc.to_svg())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
