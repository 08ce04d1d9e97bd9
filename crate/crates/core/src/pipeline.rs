//! End-to-end estimate for one project: distortion, rectification, regions,
//! clock, speed. The CLI and the HTTP service both call [`estimate_project`]
//! and render with [`Estimation::to_json`], so their outputs match byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortion::{self, DistortionError, DistortionModel, FitWarning};
use crate::model::{ModelError, Project, SpeedUnit, TimingMode};
use crate::rectify::{self, MeasurementChain, RectifyError, RectifyingTransform};
use crate::speed::{self, PrefixRow, SpeedError, SpeedEstimate};
use crate::timing::{self, ClockSource, TimingError};
use crate::uncertainty::{self, RectifiedRegion, UncertaintyError};

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("incomplete annotation: missing {}", .0.join(", "))]
    IncompleteAnnotation(Vec<&'static str>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("distortion: {0}")]
    Distortion(#[from] DistortionError),
    #[error("rectification: {0}")]
    Rectify(#[from] RectifyError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error("timing: {0}")]
    Timing(#[from] TimingError),
    #[error("speed: {0}")]
    Speed(#[from] SpeedError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistortionSource {
    /// Model stored in the project file.
    Stored,
    /// Fitted from the project's line annotations.
    Fitted,
    /// No lines and no stored model.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub distortion: DistortionModel,
    pub distortion_source: DistortionSource,
    pub no_curvature_signal: bool,
    pub transform: RectifyingTransform,
    pub h_condition: f64,
    pub clock: ClockSource,
    pub frames: Vec<u64>,
    /// Per-segment speed `d_j / (t_j - t_{j-1})`, reported only.
    pub segment_speeds_mps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimation {
    pub estimate: SpeedEstimate,
    pub diagnostics: Diagnostics,
    pub prefix: Vec<PrefixRow>,
}

/// Names the pieces that block a computation.
pub fn missing_pieces(project: &Project) -> Vec<&'static str> {
    let mut missing = Vec::new();
    if project.grid.is_none() {
        missing.push("grid");
    }
    if project.path.cps.len() < 2 {
        missing.push("path (at least 2 contact points)");
    }
    missing
}

/// Distortion model to use: stored, else fitted from lines, else identity.
pub fn resolve_distortion(project: &Project) -> Result<(DistortionModel, DistortionSource, bool), DistortionError> {
    if let Some(m) = project.distortion {
        return Ok((m, DistortionSource::Stored, false));
    }
    if project.lines.is_empty() {
        return Ok((DistortionModel::identity(project.image), DistortionSource::Identity, false));
    }
    let fit = distortion::fit_distortion(&project.lines, project.image)?;
    Ok((fit.model, DistortionSource::Fitted, fit.warning == Some(FitWarning::NoCurvatureSignal)))
}

pub fn measurement_chain(project: &Project) -> Result<(MeasurementChain, DistortionSource, bool), EstimateError> {
    let grid = project.grid.as_ref().ok_or(EstimateError::IncompleteAnnotation(vec!["grid"]))?;
    let (model, source, flat) = resolve_distortion(project)?;
    let transform = rectify::estimate_rectifying_transform(grid, &model)?;
    Ok((MeasurementChain { distortion: model, transform }, source, flat))
}

/// Runs the full computation on an in-memory project. `sidecar` holds the
/// timestamp table when the project uses timestamp mode.
pub fn estimate_project(project: &Project, sidecar: Option<&[f64]>) -> Result<Estimation, EstimateError> {
    let missing = missing_pieces(project);
    if !missing.is_empty() {
        return Err(EstimateError::IncompleteAnnotation(missing));
    }
    project.check()?;
    let (chain, source, flat) = measurement_chain(project)?;
    let cps = &project.path.cps;
    let regions: Vec<RectifiedRegion> =
        cps.iter().map(|cp| uncertainty::rectify_region(cp, &chain)).collect::<Result<_, _>>()?;
    let frames: Vec<u64> = cps.iter().map(|cp| cp.frame).collect();
    let clock = timing::build_clock(&project.timing, &frames, sidecar)?;

    let path = uncertainty::path_distance(&regions)?;
    let dur = timing::duration(&clock, frames[0], frames[frames.len() - 1])?;
    let estimate = speed::estimate_speed(&path, &dur)?;
    let prefix = speed::prefix_analysis(&regions, &frames, &clock)?;

    let mut segment_speeds_mps = Vec::with_capacity(path.segments.len());
    for (seg, w) in path.segments.iter().zip(frames.windows(2)) {
        let dt = clock.time(w[1])? - clock.time(w[0])?;
        segment_speeds_mps.push(seg.d_m / dt);
    }
    let diagnostics = Diagnostics {
        distortion: chain.distortion,
        distortion_source: source,
        no_curvature_signal: flat,
        h_condition: chain.transform.condition_number(),
        transform: chain.transform,
        clock: clock.source,
        frames,
        segment_speeds_mps,
    };
    Ok(Estimation { estimate, diagnostics, prefix })
}

/// Resolves a sidecar path relative to the project file's directory.
pub fn sidecar_path(project: &Project, project_dir: &Path) -> Option<PathBuf> {
    match &project.timing.mode {
        TimingMode::Timestamps { sidecar } => Some(project_dir.join(sidecar)),
        TimingMode::ConstantFps { .. } => None,
    }
}

pub fn load_sidecar_for(project: &Project, project_dir: &Path) -> Result<Option<Vec<f64>>, TimingError> {
    sidecar_path(project, project_dir).map(|p| timing::load_sidecar(&p)).transpose()
}

/// Estimate for a project already in memory whose file lives in `project_dir`.
pub fn estimate_in_dir(project: &Project, project_dir: &Path) -> Result<Estimation, EstimateError> {
    let sidecar = load_sidecar_for(project, project_dir)?;
    estimate_project(project, sidecar.as_deref())
}

pub fn estimate_file(path: &Path) -> Result<Estimation, EstimateError> {
    let project = Project::load(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    estimate_in_dir(&project, dir)
}

impl Estimation {
    /// Machine-readable form at full precision.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("estimation serializes");
        s.push('\n');
        s
    }

    /// Human-readable report with one decimal in display units.
    pub fn to_text(&self, unit: SpeedUnit, with_prefix: bool) -> String {
        let e = &self.estimate;
        let d = &self.diagnostics;
        let mut s = String::new();
        s.push_str(&format!("speed      {}\n", e.display(unit)));
        s.push_str(&format!("distance   {:.3} ± {:.3} m ({} segment(s))\n", e.d_m, e.delta_d_m, e.segments.len()));
        s.push_str(&format!("duration   {:.4} s (Δt = {} s)\n", e.t_s, e.delta_t_s));
        s.push_str(&format!("rel. error ε_d = {:.4}  ε_t = {:.4}  ε_v = {:.4}\n", e.eps_d, e.eps_t, e.eps_v));
        s.push_str(&format!(
            "distortion k = {:.6} ({:?}{})\n",
            d.distortion.k,
            d.distortion_source,
            if d.no_curvature_signal { ", no curvature signal" } else { "" }
        ));
        s.push_str(&format!("homography condition {:.3e}\n", d.h_condition));
        s.push_str("\n  j  frames        d_j [m]   d_min [m]   d_max [m]    Δd_j [m]\n");
        for (j, (seg, w)) in e.segments.iter().zip(d.frames.windows(2)).enumerate() {
            s.push_str(&format!(
                "{:>3}  {:>5}-{:<5} {:>10.3} {:>11.3} {:>11.3} {:>11.3}\n",
                j + 1,
                w[0],
                w[1],
                seg.d_m,
                seg.d_min_m,
                seg.d_max_m,
                seg.delta_d_m
            ));
        }
        if with_prefix {
            let labels: Vec<String> = self
                .prefix
                .iter()
                .map(|row| (1..=row.segments).map(|j| format!("d{j}")).collect::<Vec<_>>().join("+"))
                .collect();
            let width = labels.iter().map(String::len).max().unwrap_or(0).max(4);
            let (vh, dvh) = (format!("v [{}]", unit.label()), format!("Δv [{}]", unit.label()));
            s.push_str(&format!("\n  {:<width$} {:>10} {:>10}\n", "path", vh, dvh));
            for (row, label) in self.prefix.iter().zip(&labels) {
                s.push_str(&format!(
                    "  {:<width$} {:>10.1} {:>10.1}\n",
                    label,
                    unit.from_mps(row.v_mps),
                    unit.from_mps(row.delta_v_mps)
                ));
            }
        }
        s
    }
}
