//! `phinet` — plan, build, price, execute and track PhiNet detection
//! backbones from the command line.
//!
//! Exit codes: 0 success, 1 runtime failure (bad paths, malformed files,
//! execution errors), 2 usage error (bad flags, missing/contradictory
//! budget), 3 budget infeasible.
//!
//! All output is a pure function of flags and --seed: no timestamps, no
//! durations, no absolute paths beyond what the caller passed in.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use phinet_core::archgraph::benchmark_specs;
use phinet_core::energy::{solar_endurance_hours, working_points};
use phinet_core::executor::default_anchors;
use phinet_core::tracker::iou_track::IouTracker;
use phinet_core::tracker::mot_io::{format_mot, parse_mot};
use phinet_core::tracker::score::{score, MotScore};
use phinet_core::tracker::sort::SortTracker;
use phinet_core::tracker::track_stream;
use phinet_core::{
    build_phinet, decode_head, deserialize_graph, estimate, nms, run, serialize_graph, tune,
    ArchitectureSpec, ComputationGraph, DecodedBox, Detection, EnergyModel, PlatformBudget,
    SortParams, Tensor, TuneError,
};

const EXIT_USAGE: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "phinet",
    version,
    about = "PhiNet backbones for microcontroller-class hardware",
    after_help = "Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 budget infeasible."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pick the heaviest architecture that fits a platform budget
    Plan(PlanArgs),
    /// Build the layer graph for explicit hyperparameters
    Build(BuildArgs),
    /// Price a graph: MACCs, parameter bytes, peak working memory
    Estimate(EstimateArgs),
    /// Run the network on synthetic frames and decode detections
    Exec(ExecArgs),
    /// Associate per-frame detections into tracks
    Track(TrackArgs),
    /// Energy per frame, average power and solar endurance
    Energy(EnergyArgs),
    /// Reference tables over the benchmark configurations
    Report(ReportArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum Format {
    /// Aligned, fixed-precision text tables
    Text,
    /// Pretty-printed JSON
    Json,
}

/// Hyperparameters shared by `build` and `estimate`.
#[derive(Args, Debug)]
struct SpecArgs {
    /// Input width in pixels (multiple of 32)
    #[arg(long, default_value_t = 128)]
    width: usize,
    /// Input height in pixels (multiple of 32)
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Width multiplier
    #[arg(long, default_value_t = 0.35)]
    alpha: f64,
    /// Number of convolutional blocks after the stem
    #[arg(long, default_value_t = 7)]
    blocks: usize,
    /// Shape factor; < 1 thins the expansions of early blocks
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Expansion factor of the deepest block
    #[arg(long = "t-zero", default_value_t = 6.0)]
    t_zero: f64,
    /// Object classes predicted by the head
    #[arg(long, default_value_t = 1)]
    classes: usize,
    /// Anchor boxes per grid cell
    #[arg(long, default_value_t = 5)]
    anchors: usize,
    /// Backbone only: skip the detection head
    #[arg(long)]
    no_head: bool,
}

impl SpecArgs {
    fn to_spec(&self) -> ArchitectureSpec {
        let mut spec = ArchitectureSpec::new(
            self.width,
            self.height,
            self.alpha,
            self.blocks,
            self.beta,
            self.t_zero,
        );
        spec.num_classes = self.classes;
        spec.num_anchors = self.anchors;
        spec.include_head = !self.no_head;
        spec
    }
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Per-inference MACC budget
    #[arg(long)]
    macc_budget: Option<u64>,
    /// RAM available for activations, in bytes
    #[arg(long, default_value_t = 400_000)]
    ram: u64,
    /// Flash available for weights, in bytes
    #[arg(long, default_value_t = 1_000_000)]
    flash: u64,
    /// Sustained platform throughput in MACC/s; with --fps this replaces --macc-budget
    #[arg(long = "macc-per-sec")]
    macc_per_sec: Option<u64>,
    /// Target frame rate, used together with --macc-per-sec
    #[arg(long)]
    fps: Option<f64>,
    /// Write the full tuning result (spec + resource report) as JSON
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Write the graph document here; without it the JSON goes to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Graph document produced by `phinet build`; otherwise the hyperparameter flags below are used
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    /// Append the per-layer cost table
    #[arg(long)]
    per_layer: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExecArgs {
    /// Graph document produced by `phinet build`
    #[arg(long)]
    graph: PathBuf,
    /// Seed for synthetic weights and input frames
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of synthetic frames to run
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Confidence cutoff for decoded boxes
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// IoU above which a lower-confidence box of the same class is dropped
    #[arg(long = "nms", default_value_t = 0.45)]
    nms_iou: f64,
    /// Write decoded detections here in MOT text format
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum TrackerKind {
    /// Kalman prediction + Hungarian association
    Sort,
    /// Greedy frame-to-frame IoU matching
    Iou,
}

#[derive(Args, Debug)]
struct TrackArgs {
    /// Detections in MOT text format (frame,id,left,top,w,h,conf,...)
    #[arg(long)]
    dets: PathBuf,
    #[arg(long, value_enum, default_value_t = TrackerKind::Sort)]
    tracker: TrackerKind,
    /// Frames a track survives without a match (sort only)
    #[arg(long, default_value_t = 1)]
    max_age: u32,
    /// Consecutive matches before a track is reported (sort only)
    #[arg(long, default_value_t = 3)]
    min_hits: u32,
    /// Minimum IoU for a detection-track association
    #[arg(long, default_value_t = 0.3)]
    iou_threshold: f64,
    /// Ground-truth MOT file; adds an ids/mota/motp score table
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Write the track rows here; without it they go to stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("load").required(true).args(["macc", "graph"])))]
struct EnergyArgs {
    /// Price exactly this many MACCs per inference
    #[arg(long)]
    macc: Option<u64>,
    /// Price the graph in this document instead
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Frame rate for the headline average-power figure
    #[arg(long, default_value_t = 10.0)]
    fps: f64,
    /// Energy coefficient in millijoules per million MACCs
    #[arg(long, default_value_t = 1.2)]
    mj_per_mmacc: f64,
    /// Idle draw of the rest of the board, in milliwatts
    #[arg(long, default_value_t = 0.0)]
    idle_mw: f64,
    /// Write a plot-ready two-column file (fps mW) sweeping 1..=30 fps
    #[arg(long)]
    plot_out: Option<PathBuf>,
    /// Solar endurance: panel mW, harvest efficiency, sun hours, load mW
    #[arg(long, num_args = 4, value_names = ["PANEL_MW", "EFFICIENCY", "SUN_HOURS", "LOAD_MW"])]
    endurance: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Benchmark configuration table: resolution, α, B, β, t₀, MACC, parameters
    #[arg(long)]
    table2: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = dispatch(&cli.command, &mut out).and_then(|()| Ok(out.flush()?));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A consumer hanging up early (`phinet report | head`) is their
        // choice, not a failure worth a message.
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.root_cause()
        .downcast_ref::<std::io::Error>()
        .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}

/// Tuner infeasibility gets its own exit code so scripts can tell "this
/// budget cannot be met" from crashes and typos; contradictory or missing
/// budget flags count as usage errors, matching clap's own exit code.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<TuneError>() {
        Some(TuneError::Infeasible { .. }) => EXIT_INFEASIBLE,
        Some(TuneError::MissingMaccBudget | TuneError::BadFps) => EXIT_USAGE,
        _ => 1,
    }
}

fn dispatch(command: &Command, out: &mut impl Write) -> Result<()> {
    match command {
        Command::Plan(args) => cmd_plan(args, out),
        Command::Build(args) => cmd_build(args, out),
        Command::Estimate(args) => cmd_estimate(args, out),
        Command::Exec(args) => cmd_exec(args, out),
        Command::Track(args) => cmd_track(args, out),
        Command::Energy(args) => cmd_energy(args, out),
        Command::Report(args) => cmd_report(args, out),
    }
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_graph(path: &Path) -> Result<ComputationGraph> {
    Ok(deserialize_graph(&read_file(path)?)?)
}

fn cmd_plan(args: &PlanArgs, out: &mut impl Write) -> Result<()> {
    let budget = PlatformBudget {
        macc_budget: args.macc_budget,
        ram_bytes: args.ram,
        flash_bytes: args.flash,
        fps_target: args.fps,
        macc_per_second: args.macc_per_sec,
    };
    let result = tune(&budget)?;
    match args.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&result)?)?,
        Format::Text => {
            writeln!(out, "{}", serde_json::to_string_pretty(&result.spec)?)?;
            writeln!(out)?;
            let r = &result.report;
            let (u_macc, u_ram, u_flash) = result.utilization;
            writeln!(out, "macc         {:>10}   {:5.1}% of budget", r.macc_total, 100.0 * u_macc)?;
            writeln!(out, "working mem  {:>10} B {:5.1}% of ram", r.peak_working_memory, 100.0 * u_ram)?;
            writeln!(out, "parameters   {:>10} B {:5.1}% of flash", r.param_memory, 100.0 * u_flash)?;
            writeln!(out, "refinements  {:>10}", result.iterations)?;
        }
    }
    if let Some(path) = &args.out {
        write_file(path, &serde_json::to_string_pretty(&result)?)?;
    }
    Ok(())
}

fn cmd_build(args: &BuildArgs, out: &mut impl Write) -> Result<()> {
    let graph = build_phinet(&args.spec.to_spec())?;
    let document = serialize_graph(&graph);
    match &args.out {
        None => writeln!(out, "{document}")?,
        Some(path) => {
            write_file(path, &document)?;
            let report = estimate(&graph);
            let (i, o) = (graph.input_shape, graph.output_shape);
            writeln!(out, "layers  {}", graph.layers.len())?;
            writeln!(out, "input   {}x{}x{}", i.w, i.h, i.c)?;
            writeln!(out, "output  {}x{}x{}", o.w, o.h, o.c)?;
            writeln!(out, "macc    {}", report.macc_total)?;
            writeln!(out, "params  {} B", report.param_memory)?;
        }
    }
    Ok(())
}

fn cmd_estimate(args: &EstimateArgs, out: &mut impl Write) -> Result<()> {
    let graph = match &args.graph {
        Some(path) => load_graph(path)?,
        None => build_phinet(&args.spec.to_spec())?,
    };
    let report = estimate(&graph);
    match args.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?,
        Format::Text => {
            writeln!(out, "macc total           {:>10}", report.macc_total)?;
            writeln!(out, "parameter memory     {:>10} B", report.param_memory)?;
            writeln!(out, "peak working memory  {:>10} B", report.peak_working_memory)?;
            if args.per_layer {
                writeln!(out)?;
                write!(out, "{}", report.flat_table(&graph))?;
            }
        }
    }
    Ok(())
}

/// Spread one seed into per-frame input seeds; the weight draw always uses
/// the base seed, so frames share a network and differ only in input.
fn frame_seed(seed: u64, frame: usize) -> u64 {
    seed ^ (frame as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn to_pixels(b: &DecodedBox, frame: usize, width: f64, height: f64) -> Detection {
    Detection {
        frame,
        id: -1,
        bbox: phinet_core::Bbox::new(
            (b.cx - b.w / 2.0) * width,
            (b.cy - b.h / 2.0) * height,
            b.w * width,
            b.h * height,
        ),
        confidence: b.confidence,
    }
}

fn cmd_exec(args: &ExecArgs, out: &mut impl Write) -> Result<()> {
    let graph = load_graph(&args.graph)?;
    let spec = graph.spec.clone();
    // Decoding needs the built-in anchor priors, which come in a set of 5.
    let decodable = spec.include_head && spec.num_anchors == default_anchors().len();
    if args.out.is_some() && !decodable {
        if spec.include_head {
            bail!(
                "graph head uses {} anchors per cell; decoding supports only the {} built-in priors",
                spec.num_anchors,
                default_anchors().len()
            );
        }
        bail!("graph has no detection head, so there are no boxes to write");
    }

    let anchors = default_anchors();
    let mut rows: Vec<Detection> = Vec::new();
    for frame in 1..=args.frames {
        let input = Tensor::random(graph.input_shape, frame_seed(args.seed, frame));
        let (output, trace) = run(&graph, &input, args.seed)?;
        let mut line = format!(
            "frame {frame}  macc {}  peak {} B  checksum {:016x}",
            trace.macc_performed,
            trace.peak_live_bytes,
            output.checksum()
        );
        if decodable {
            let boxes = nms(&decode_head(&output, &anchors, args.threshold)?, args.nms_iou);
            write!(line, "  boxes {}", boxes.len())?;
            rows.extend(
                boxes
                    .iter()
                    .map(|b| to_pixels(b, frame, spec.width as f64, spec.height as f64)),
            );
        }
        writeln!(out, "{line}")?;
    }
    if let Some(path) = &args.out {
        write_file(path, &format_mot(&rows))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct TrackSummary {
    rows: usize,
    tracks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    score: Option<MotScore>,
}

fn cmd_track(args: &TrackArgs, out: &mut impl Write) -> Result<()> {
    let detections = parse_mot(&read_file(&args.dets)?)?;
    let rows = match args.tracker {
        TrackerKind::Sort => {
            let mut tracker = SortTracker::new(SortParams {
                max_age: args.max_age,
                min_hits: args.min_hits,
                iou_threshold: args.iou_threshold,
            });
            track_stream(&detections, |boxes| tracker.step(boxes))
        }
        TrackerKind::Iou => {
            let mut tracker = IouTracker::new(args.iou_threshold);
            track_stream(&detections, |boxes| tracker.step(boxes))
        }
    };

    let formatted = format_mot(&rows);
    match &args.out {
        Some(path) => write_file(path, &formatted)?,
        None => write!(out, "{formatted}")?,
    }

    let summary = TrackSummary {
        rows: rows.len(),
        tracks: rows.iter().map(|d| d.id).collect::<BTreeSet<_>>().len(),
        score: match &args.gt {
            Some(path) => Some(score(&parse_mot(&read_file(path)?)?, &rows)?),
            None => None,
        },
    };
    match args.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?,
        Format::Text => {
            if args.out.is_some() {
                writeln!(out, "rows    {}", summary.rows)?;
                writeln!(out, "tracks  {}", summary.tracks)?;
            }
            if let Some(s) = &summary.score {
                writeln!(out, "ids  mota%  motp")?;
                writeln!(out, "{:<3}  {:5.1}  {:.3}", s.id_switches, 100.0 * s.mota, s.motp)?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct EnergySummary {
    macc: u64,
    energy_per_frame_mj: f64,
    average_power_mw: f64,
    points: Vec<phinet_core::WorkingPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    endurance_hours: Option<f64>,
}

fn cmd_energy(args: &EnergyArgs, out: &mut impl Write) -> Result<()> {
    let macc = match (&args.macc, &args.graph) {
        (Some(m), _) => *m,
        (None, Some(path)) => estimate(&load_graph(path)?).macc_total,
        (None, None) => unreachable!("clap enforces the load group"),
    };
    let model = EnergyModel {
        mj_per_mmacc: args.mj_per_mmacc,
        idle_mw: args.idle_mw,
        ..EnergyModel::default()
    };
    let energy = model.energy_per_inference(macc)?;
    let headline = model.power_at_fps(energy, args.fps)?;

    let sweep: Vec<(String, u64, f64)> = (1..=30)
        .map(|fps| (format!("{fps} fps"), macc, fps as f64))
        .collect();
    let points = working_points(&model, &sweep)?;

    let endurance_hours = match &args.endurance {
        Some(v) => Some(solar_endurance_hours(v[0], v[1], v[2], v[3])?),
        None => None,
    };

    if let Some(path) = &args.plot_out {
        let mut plot = String::from("fps mw\n");
        for p in &points {
            writeln!(plot, "{} {:.3}", p.fps, p.average_power_mw)?;
        }
        write_file(path, &plot)?;
    }

    match args.format {
        Format::Json => {
            let summary = EnergySummary {
                macc,
                energy_per_frame_mj: energy,
                average_power_mw: headline,
                points,
                endurance_hours,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
        }
        Format::Text => {
            writeln!(out, "macc             {macc}")?;
            writeln!(out, "energy/frame     {energy:.3} mJ")?;
            writeln!(out, "power @ {:.0} fps   {headline:.2} mW", args.fps)?;
            writeln!(out)?;
            writeln!(out, "  fps     mW")?;
            for p in points
                .iter()
                .filter(|p| matches!(p.fps as u32, 1 | 2 | 5 | 10 | 15 | 20 | 25 | 30))
            {
                writeln!(out, "{:>5.0}  {:>8.2}", p.fps, p.average_power_mw)?;
            }
            if let Some(h) = endurance_hours {
                writeln!(out)?;
                writeln!(out, "endurance        {h:.1} h")?;
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    width: usize,
    height: usize,
    alpha: f64,
    blocks: usize,
    beta: f64,
    t_zero: f64,
    macc: u64,
    params_bytes: u64,
}

fn cmd_report(args: &ReportArgs, out: &mut impl Write) -> Result<()> {
    // --table2 selects the only report there is; accepted for scripts that
    // name it explicitly.
    let _ = args.table2;
    let rows: Vec<ReportRow> = benchmark_specs()
        .iter()
        .map(|spec| {
            let report = estimate(&build_phinet(spec)?);
            Ok(ReportRow {
                width: spec.width,
                height: spec.height,
                alpha: spec.alpha,
                blocks: spec.num_blocks,
                beta: spec.beta,
                t_zero: spec.t_zero,
                macc: report.macc_total,
                params_bytes: report.param_memory,
            })
        })
        .collect::<Result<_>>()?;
    match args.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?,
        Format::Text => {
            writeln!(out, "Resolution  α     B  β     t₀   MACC     Parameters")?;
            for r in rows {
                writeln!(
                    out,
                    "{:<10}  {:<4.2}  {}  {:<4.2}  {:<3.1}  {:>5.2} M  {:>7.1} K",
                    format!("{}x{}", r.width, r.height),
                    r.alpha,
                    r.blocks,
                    r.beta,
                    r.t_zero,
                    r.macc as f64 / 1e6,
                    r.params_bytes as f64 / 1e3,
                )?;
            }
        }
    }
    Ok(())
}
