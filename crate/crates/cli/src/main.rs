use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use speedkit_core::bench;
use speedkit_core::distortion::{self, FitWarning};
use speedkit_core::model::{self, Project, SpeedUnit};
use speedkit_core::pipeline;
use speedkit_core::rectify::{self, GroundBounds};
use speedkit_core::synth::{self, SceneSpec};
use speedkit_core::timing;

#[derive(Parser)]
#[command(name = "speedkit", version, about = "Vehicle speed from video with worst-case uncertainty intervals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the lens distortion model from the project's line annotations.
    Calibrate {
        #[arg(long)]
        project: PathBuf,
        /// Store the fitted model in the project file.
        #[arg(long)]
        write_model: bool,
    },
    /// Render an aerial view of one frame around the reference rectangle.
    RectifyPreview {
        #[arg(long)]
        project: PathBuf,
        /// Frame index; defaults to the first contact point's frame.
        #[arg(long)]
        frame: Option<u64>,
        /// Source image; defaults to the frame's image path in the project.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50.0)]
        px_per_m: f64,
        #[arg(long, default_value_t = 2.0)]
        margin_m: f64,
    },
    /// Estimate the speed interval for an annotated project.
    Estimate {
        #[arg(long)]
        project: PathBuf,
        /// Also list speed over every prefix of the path (text format).
        #[arg(long)]
        prefix_table: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Display unit for text output: mph, km/h or m/s.
        #[arg(long, default_value = "mph")]
        unit: SpeedUnit,
    },
    /// Generate a synthetic project with known ground truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write the true speed and path length here.
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Render every frame to `frames/<index>.png` beside the project.
        #[arg(long)]
        render_frames: bool,
    },
    /// Evaluate every pass listed in a manifest and write the report.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also draw the Δv histograms as SVG.
        #[arg(long)]
        svg: bool,
    },
    /// Parse and check a project, listing warnings.
    Validate {
        #[arg(long)]
        project: PathBuf,
    },
    /// Run the local HTTP service used by the annotation client.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8765")]
        addr: SocketAddr,
        /// Directory with the browser client's built assets.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

fn project_dir(path: &Path) -> &Path {
    path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn calibrate(path: &Path, write_model: bool) -> Result<()> {
    let mut project = Project::load(path)?;
    let fit = distortion::fit_distortion(&project.lines, project.image)?;
    println!("k = {:.9}", fit.model.k);
    println!("cost = {:.6e} ({} line(s))", fit.cost, project.lines.len());
    if fit.warning == Some(FitWarning::NoCurvatureSignal) {
        println!("warning: lines are already straight; identity model kept");
    }
    if write_model {
        project.distortion = Some(fit.model);
        project.save(path)?;
        println!("model written to {}", path.display());
    }
    Ok(())
}

fn rectify_preview(
    path: &Path,
    frame: Option<u64>,
    image: Option<&Path>,
    out: &Path,
    px_per_m: f64,
    margin_m: f64,
) -> Result<()> {
    if !(px_per_m.is_finite() && px_per_m > 0.0) {
        bail!("--px-per-m must be positive");
    }
    let project = Project::load(path)?;
    let (chain, _, _) = pipeline::measurement_chain(&project)?;
    let grid = project.grid.as_ref().ok_or_else(|| anyhow!("project has no grid"))?;
    let source = match image {
        Some(p) => p.to_path_buf(),
        None => {
            let index = frame
                .or_else(|| project.path.cps.first().map(|c| c.frame))
                .ok_or_else(|| anyhow!("no --frame given and the path is empty"))?;
            let rel = project
                .frames
                .iter()
                .find(|f| f.index == index)
                .and_then(|f| f.image_path.as_ref())
                .ok_or_else(|| anyhow!("frame {index} has no image path; pass --image"))?;
            project_dir(path).join(rel)
        }
    };
    let img = image::open(&source).with_context(|| format!("cannot read {}", source.display()))?.to_rgb8();
    let bounds = GroundBounds::around_grid(grid, margin_m.max(0.0));
    let aerial = rectify::render_rectified_preview(&chain, &img, &bounds, px_per_m);
    aerial.save(out).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}x{} preview written to {}", aerial.width(), aerial.height(), out.display());
    Ok(())
}

fn estimate(path: &Path, prefix_table: bool, format: Format, unit: SpeedUnit) -> Result<()> {
    let est = pipeline::estimate_file(path)?;
    match format {
        Format::Json => print!("{}", est.to_json()),
        Format::Text => print!("{}", est.to_text(unit, prefix_table)),
    }
    Ok(())
}

fn synth_cmd(spec_path: &Path, out: &Path, gt: Option<&Path>, render_frames: bool) -> Result<()> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("cannot read {}", spec_path.display()))?;
    let spec = SceneSpec::from_toml_str(&text)?;
    let mut scene = synth::generate_scene(&spec)?;
    let dir = project_dir(out);
    if render_frames {
        std::fs::create_dir_all(dir.join("frames"))?;
        for f in scene.project.frames.iter_mut() {
            let rel = format!("frames/{}.png", f.index);
            synth::render_frame(&spec, f.index as usize).save(dir.join(&rel))?;
            f.image_path = Some(rel);
        }
    }
    scene.project.save(out)?;
    if let Some(times) = &scene.sidecar {
        std::fs::write(dir.join(synth::SIDECAR_NAME), timing::format_sidecar(times))?;
    }
    if let Some(gt) = gt {
        let v = spec.true_speed_mps();
        let body = format!(
            "true_speed_mps = {v:?}\ntrue_speed_mph = {:?}\ntrue_path_length_m = {:?}\n",
            SpeedUnit::Mph.from_mps(v),
            scene.true_path_length()
        );
        std::fs::write(gt, body)?;
    }
    println!("wrote {} ({} contact points)", out.display(), scene.project.path.cps.len());
    Ok(())
}

fn bench_cmd(manifest: &Path, out: &Path, svg: bool) -> Result<()> {
    let m = bench::ingest_manifest(manifest)?;
    let records = bench::run_bench(&m);
    match bench::write_report(&records, out, svg)? {
        Some(report) => print!("{}", report.summary_text()),
        None => println!("no measurable passes; {} record(s) written", records.len()),
    }
    Ok(())
}

fn validate(path: &Path) -> Result<()> {
    let project = Project::load(path)?;
    let warnings = model::validate(&project);
    println!("{}: valid", path.display());
    for w in warnings {
        println!("warning: {w}");
    }
    Ok(())
}

fn serve(addr: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("cannot bind {addr}"))?;
        println!("listening on http://{}", listener.local_addr()?);
        speedkit_service::serve(listener, static_dir).await?;
        Ok(())
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate { project, write_model } => calibrate(&project, write_model),
        Command::RectifyPreview { project, frame, image, out, px_per_m, margin_m } => {
            rectify_preview(&project, frame, image.as_deref(), &out, px_per_m, margin_m)
        }
        Command::Estimate { project, prefix_table, format, unit } => estimate(&project, prefix_table, format, unit),
        Command::Synth { spec, out, gt, render_frames } => synth_cmd(&spec, &out, gt.as_deref(), render_frames),
        Command::Bench { manifest, out, svg } => bench_cmd(&manifest, &out, svg),
        Command::Validate { project } => validate(&project),
        Command::Serve { addr, static_dir } => serve(addr, static_dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
