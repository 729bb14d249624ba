use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use moviemap::formats::{read_intersections, read_json, read_registered, write_json, MapFile};
use moviemap::frames::PngFrames;
use moviemap::package::{export_package, load_package, ExportInput};
use moviemap::pipeline::{self, TurnIndex, TURN_INDEX};
use moviemap::server;
use moviemap_core::assembly::{ExitPolicy, DEFAULT_CLUSTER_RADIUS_M};
use moviemap_core::detection::DetectionParams;
use moviemap_core::fixture::{generate, FixtureSpec, Layout};
use moviemap_core::scorer::{AnyScorer, OrbScorer, PatchCorrelation};
use moviemap_core::turning::TurnMethod;

#[derive(Parser)]
#[command(name = "mm", version, about = "Build and serve Movie Maps from street video trajectories")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scorer {
    Orb,
    Patch,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic area with ground truth
    Fixture {
        #[arg(long, value_parser = parse_layout)]
        layout: Layout,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.5)]
        spacing: f64,
        #[arg(long, default_value_t = 100.0)]
        street_length: f64,
        /// Frame width in pixels; height is half
        #[arg(long, default_value_t = 256)]
        frame_width: u32,
    },
    /// Place every video of an area on the common map
    Register {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find the intersection frame pair of every pair of streets
    Detect {
        #[arg(long)]
        registered: PathBuf,
        /// Frames root holding one directory per video (default: the
        /// directories named in the area config)
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_visual: bool,
        #[arg(long, value_enum, default_value_t = Scorer::Orb)]
        scorer: Scorer,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        pad: Option<f64>,
        #[arg(long)]
        window: Option<usize>,
        /// Also pair the two directions of one street
        #[arg(long)]
        same_street_pairs: bool,
    },
    /// Cluster intersections, cut sections and plan turns
    Assemble {
        #[arg(long)]
        registered: PathBuf,
        #[arg(long)]
        intersections: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CLUSTER_RADIUS_M)]
        cluster_radius: f64,
        /// Offer turning back the way one came at intersections
        #[arg(long)]
        allow_uturn: bool,
    },
    /// Render turning views for every planned turn
    Turns {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Used to locate frames when --frames is not given
        #[arg(long)]
        registered: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        frames_per_turn: usize,
        #[arg(long, default_value = "C", value_parser = parse_method)]
        method: TurnMethod,
    },
    /// Write a self-contained package
    Export {
        #[arg(long)]
        registered: PathBuf,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        turns: PathBuf,
        #[arg(long)]
        frames: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve a package over HTTP
    Serve {
        #[arg(long)]
        package: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

fn parse_layout(s: &str) -> Result<Layout, String> {
    Layout::from_name(s).ok_or_else(|| {
        let names: Vec<_> = Layout::ALL.iter().map(|l| l.name()).collect();
        format!("unknown layout {s}; one of {}", names.join(", "))
    })
}

fn parse_method(s: &str) -> Result<TurnMethod, String> {
    let mut c = s.chars();
    match (c.next().and_then(TurnMethod::from_letter), c.next()) {
        (Some(m), None) => Ok(m),
        _ => Err(format!("unknown method {s}; one of A, B, C")),
    }
}

type Res = Result<(), Box<dyn std::error::Error>>;

fn frames_for(frames: Option<&Path>, registered: &moviemap::formats::RegisteredArea) -> PngFrames {
    pipeline::frame_source(registered, frames)
}

fn run(cmd: Cmd) -> Res {
    match cmd {
        Cmd::Fixture {
            layout,
            seed,
            out,
            noise,
            spacing,
            street_length,
            frame_width,
        } => {
            let spec = FixtureSpec {
                noise_m: noise,
                keyframe_spacing_m: spacing,
                street_length_m: street_length,
                frame_size: (frame_width, frame_width / 2),
                ..FixtureSpec::new(layout, seed)
            };
            let f = generate(&spec);
            pipeline::write_fixture(&f, &out)?;
            tracing::info!(videos = f.trajectories.len(), crossings = f.truth.crossings.len(), "fixture written");
        }
        Cmd::Register { config, out } => {
            let index = pipeline::register(&config, &out)?;
            tracing::info!(videos = index.videos.len(), warnings = index.warnings.len(), "registered");
        }
        Cmd::Detect {
            registered,
            frames,
            out,
            no_visual,
            scorer,
            threshold,
            pad,
            window,
            same_street_pairs,
        } => {
            let area = read_registered(&registered)?;
            let d = DetectionParams::default();
            let params = DetectionParams {
                intersect_threshold_m: threshold.unwrap_or(d.intersect_threshold_m),
                pad_m: pad.unwrap_or(d.pad_m),
                refine_window: window.unwrap_or(d.refine_window),
                same_street_pairs,
                ..d
            };
            let scorer = (!no_visual).then(|| match scorer {
                Scorer::Orb => AnyScorer::Orb(OrbScorer::default()),
                Scorer::Patch => AnyScorer::Patch(PatchCorrelation::default()),
            });
            let src = frames_for(frames.as_deref(), &area);
            let report = pipeline::detect(&area, &src, scorer.as_ref(), &params)?;
            write_json(&out, &report.records)?;
            tracing::info!(
                records = report.records.len(),
                warnings = report.warnings.len(),
                failures = report.failures.len(),
                evaluations = report.evaluations,
                "detected"
            );
        }
        Cmd::Assemble {
            registered,
            intersections,
            out,
            cluster_radius,
            allow_uturn,
        } => {
            let area = read_registered(&registered)?;
            let records = read_intersections(&intersections)?;
            let policy = ExitPolicy {
                include_uturn: allow_uturn,
                ..ExitPolicy::default()
            };
            let map = pipeline::assemble(&area, &records, cluster_radius, &policy)?;
            write_json(&out, &map)?;
            tracing::info!(nodes = map.nodes.len(), sections = map.sections.len(), turns = map.turns.len(), "assembled");
        }
        Cmd::Turns {
            map,
            frames,
            registered,
            out,
            frames_per_turn,
            method,
        } => {
            let map: MapFile = read_json(&map)?;
            let src = match (frames, registered) {
                (_, Some(r)) => frames_for(None, &read_registered(&r)?),
                (Some(root), None) => {
                    let videos: std::collections::BTreeSet<&str> = map.sections.iter().map(|s| s.video_id.as_str()).collect();
                    PngFrames::under_root(&root, videos)
                }
                (None, None) => return Err("turns needs --frames or --registered".into()),
            };
            let index = pipeline::render_turns(&map.turns, &src, &out, frames_per_turn, method)?;
            tracing::info!(turns = index.turns.len(), "turns rendered");
        }
        Cmd::Export {
            registered,
            map,
            turns,
            frames,
            out,
        } => {
            let area = read_registered(&registered)?;
            let map: MapFile = read_json(&map)?;
            let turn_index: TurnIndex = read_json(&turns.join(TURN_INDEX))?;
            let src = frames_for(frames.as_deref(), &area);
            let m = export_package(
                &ExportInput {
                    registered: &area,
                    map: &map,
                    frames: &src,
                    turns_dir: &turns,
                    turn_index: &turn_index,
                },
                &out,
            )?;
            tracing::info!(sections = m.sections.len(), turns = m.turns.len(), "exported");
        }
        Cmd::Serve { package, addr, ui_dir } => {
            let pkg = Arc::new(load_package(&package)?);
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!(addr = %listener.local_addr()?, hash = %pkg.hash, "serving");
                let app = server::router(pkg, ui_dir);
                server::serve(listener, app, async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let filter = tracing_subscriber::EnvFilter::try_from_env("MM_LOG").unwrap_or_else(|_| "info".into());
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
