//! Domain types and the versioned project file.
//!
//! A project is a TOML document (`schema_version = 1`) with sections for the
//! image, frames, timing, lines, grid, path and ground truth. Floats are
//! written with Rust's shortest round-trip formatting, so a save/load cycle is
//! exact to the last bit, and serde's field order makes the output stable.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortion::DistortionModel;
use crate::geom::{self, Point};

pub const SCHEMA_VERSION: u32 = 1;

/// Default half-width timing uncertainty (5 ms).
pub const DEFAULT_DELTA_T_S: f64 = 0.005;

/// Fraction of the image size an annotation may fall outside the frame.
const BOUNDS_MARGIN: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported schema version {found:?} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: Option<i64> },
    #[error("invariant violated at {field}: {reason}")]
    InvariantViolation { field: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ModelError {
    pub fn invariant(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::InvariantViolation { field: field.into(), reason: reason.into() }
    }

    /// Field path of an invariant violation, if this is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ModelError::InvariantViolation { field, .. } => Some(field),
            _ => None,
        }
    }
}

/// Sub-pixel image coordinate, origin at the top-left corner.
/// Serialized as a two-element array `[x, y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PixelPoint { x, y }
    }

    pub fn to_point(self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for PixelPoint {
    fn from(v: [f64; 2]) -> Self {
        PixelPoint::new(v[0], v[1])
    }
}

impl From<PixelPoint> for [f64; 2] {
    fn from(p: PixelPoint) -> Self {
        [p.x, p.y]
    }
}

impl From<Point> for PixelPoint {
    fn from(p: Point) -> Self {
        PixelPoint::new(p.x, p.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub const fn new(width: u32, height: u32) -> Self {
        ImageSize { width, height }
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    pub fn half_diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64) / 2.0
    }

    /// Whether `p` lies inside the image extended by the annotation margin.
    pub fn contains_with_margin(&self, p: &PixelPoint) -> bool {
        let (w, h) = (self.width as f64, self.height as f64);
        let (mx, my) = (w * BOUNDS_MARGIN, h * BOUNDS_MARGIN);
        p.x >= -mx && p.x <= w + mx && p.y >= -my && p.y <= h + my
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRef {
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_s: Option<f64>,
}

impl FrameRef {
    pub fn new(index: u64) -> Self {
        FrameRef { index, image_path: None, timestamp_s: None }
    }
}

/// Points sampled along one real-world straight line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineAnnotation {
    pub points: Vec<PixelPoint>,
}

/// Orientation of the grid corners as drawn in the image (y axis down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winding {
    Clockwise,
    CounterClockwise,
}

impl Winding {
    /// Winding of a simple polygon given in image coordinates.
    pub fn of(points: &[Point]) -> Winding {
        // with y pointing down, a positive shoelace sum is a clockwise turn on screen
        if geom::signed_area2(points) > 0.0 {
            Winding::Clockwise
        } else {
            Winding::CounterClockwise
        }
    }
}

/// Extra image/ground correspondence used by the over-determined rectification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMark {
    pub pixel: PixelPoint,
    pub ground_m: [f64; 2],
}

/// Known ground rectangle. Corner `i` maps to `(0,0)`, `(w,0)`, `(w,h)`, `(0,h)`
/// in that order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAnnotation {
    pub corners: [PixelPoint; 4],
    pub width_m: f64,
    pub height_m: f64,
    pub winding: Winding,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_marks: Vec<ReferenceMark>,
}

impl GridAnnotation {
    pub fn new(corners: [PixelPoint; 4], width_m: f64, height_m: f64) -> Self {
        let pts: Vec<Point> = corners.iter().map(|c| c.to_point()).collect();
        GridAnnotation { corners, width_m, height_m, winding: Winding::of(&pts), extra_marks: Vec::new() }
    }

    /// Metric target of each corner in declared order.
    pub fn metric_corners(&self) -> [[f64; 2]; 4] {
        let (w, h) = (self.width_m, self.height_m);
        [[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
    }

    fn check(&self) -> Result<(), ModelError> {
        if !(self.width_m.is_finite() && self.width_m > 0.0) {
            return Err(ModelError::invariant("grid.width_m", "must be finite and > 0"));
        }
        if !(self.height_m.is_finite() && self.height_m > 0.0) {
            return Err(ModelError::invariant("grid.height_m", "must be finite and > 0"));
        }
        let pts: Vec<Point> = self.corners.iter().map(|c| c.to_point()).collect();
        for i in 0..4 {
            for j in (i + 1)..4 {
                if pts[i] == pts[j] {
                    return Err(ModelError::invariant("grid.corners", "corners must be distinct"));
                }
            }
        }
        if !geom::is_strictly_convex(&pts, 1e-12) {
            return Err(ModelError::invariant(
                "grid.corners",
                "corners must form a strictly convex quadrilateral with no three collinear",
            ));
        }
        if Winding::of(&pts) != self.winding {
            return Err(ModelError::invariant("grid.winding", "declared winding does not match the corners"));
        }
        for (i, mark) in self.extra_marks.iter().enumerate() {
            if !mark.pixel.is_finite() || !mark.ground_m.iter().all(|v| v.is_finite()) {
                return Err(ModelError::invariant(format!("grid.extra_marks[{i}]"), "non-finite value"));
            }
        }
        Ok(())
    }
}

/// One annotated wheel/road contact point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub frame: u64,
    pub point: PixelPoint,
    /// Uncertainty radius in pixels; the box is `(2m+1)²` pixels.
    pub m: u32,
}

impl ContactPoint {
    pub fn new(frame: u64, point: PixelPoint, m: u32) -> Self {
        ContactPoint { frame, point, m }
    }

    pub fn box_pixel_count(&self) -> u64 {
        let side = 2 * u64::from(self.m) + 1;
        side * side
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PathAnnotation {
    #[serde(default)]
    pub cps: Vec<ContactPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TimingMode {
    ConstantFps { fps: f64 },
    /// Path to a timestamp sidecar, stored verbatim (relative paths resolve
    /// against the project file's directory).
    Timestamps { sidecar: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingSpec {
    #[serde(flatten)]
    pub mode: TimingMode,
    #[serde(default = "default_delta_t")]
    pub delta_t_s: f64,
}

fn default_delta_t() -> f64 {
    DEFAULT_DELTA_T_S
}

impl TimingSpec {
    pub fn constant_fps(fps: f64) -> Self {
        TimingSpec { mode: TimingMode::ConstantFps { fps }, delta_t_s: DEFAULT_DELTA_T_S }
    }

    pub fn timestamps(sidecar: impl Into<String>) -> Self {
        TimingSpec { mode: TimingMode::Timestamps { sidecar: sidecar.into() }, delta_t_s: DEFAULT_DELTA_T_S }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedUnit {
    #[serde(rename = "mph")]
    Mph,
    #[serde(rename = "km/h")]
    Kmh,
    #[serde(rename = "m/s")]
    Mps,
}

/// Exact definition: 1 mph = 0.44704 m/s.
pub const MPS_PER_MPH: f64 = 0.44704;
pub const KMH_PER_MPS: f64 = 3.6;

impl SpeedUnit {
    pub fn to_mps(self, value: f64) -> f64 {
        match self {
            SpeedUnit::Mph => value * MPS_PER_MPH,
            SpeedUnit::Kmh => value / KMH_PER_MPS,
            SpeedUnit::Mps => value,
        }
    }

    pub fn from_mps(self, mps: f64) -> f64 {
        match self {
            SpeedUnit::Mph => mps / MPS_PER_MPH,
            SpeedUnit::Kmh => mps * KMH_PER_MPS,
            SpeedUnit::Mps => mps,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SpeedUnit::Mph => "mph",
            SpeedUnit::Kmh => "km/h",
            SpeedUnit::Mps => "m/s",
        }
    }
}

impl std::str::FromStr for SpeedUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mph" => Ok(SpeedUnit::Mph),
            "km/h" | "kmh" => Ok(SpeedUnit::Kmh),
            "m/s" | "mps" => Ok(SpeedUnit::Mps),
            other => Err(format!("unknown speed unit `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedValue {
    pub value: f64,
    pub unit: SpeedUnit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub speed: SpeedValue,
    #[serde(default)]
    pub source: String,
}

impl GroundTruth {
    pub fn mps(&self) -> f64 {
        self.speed.unit.to_mps(self.speed.value)
    }
}

/// One video analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub schema_version: u32,
    pub image: ImageSize,
    pub timing: TimingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<DistortionModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridAnnotation>,
    #[serde(default)]
    pub path: PathAnnotation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<GroundTruth>,
    #[serde(default)]
    pub frames: Vec<FrameRef>,
    #[serde(default)]
    pub lines: Vec<LineAnnotation>,
}

impl Project {
    pub fn new(image: ImageSize, timing: TimingSpec) -> Self {
        Project {
            schema_version: SCHEMA_VERSION,
            image,
            timing,
            distortion: None,
            grid: None,
            path: PathAnnotation::default(),
            ground_truth: None,
            frames: Vec::new(),
            lines: Vec::new(),
        }
    }

    /// Checks every type invariant; returns the first violation.
    pub fn check(&self) -> Result<(), ModelError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ModelError::SchemaVersion { found: Some(i64::from(self.schema_version)) });
        }
        if self.image.width == 0 || self.image.height == 0 {
            return Err(ModelError::invariant("image", "width and height must be > 0"));
        }
        self.check_timing()?;
        self.check_frames()?;
        for (i, line) in self.lines.iter().enumerate() {
            self.check_line(i, line)?;
        }
        if let Some(grid) = &self.grid {
            for (i, c) in grid.corners.iter().enumerate() {
                self.check_pixel(&format!("grid.corners[{i}]"), c)?;
            }
            grid.check()?;
        }
        self.check_path()?;
        if let Some(gt) = &self.ground_truth {
            if !(gt.speed.value.is_finite() && gt.speed.value > 0.0) {
                return Err(ModelError::invariant("ground_truth.speed", "must be finite and > 0"));
            }
        }
        if let Some(model) = &self.distortion {
            model
                .validate_for(self.image)
                .map_err(|e| ModelError::invariant("distortion", e.to_string()))?;
        }
        Ok(())
    }

    fn check_pixel(&self, field: &str, p: &PixelPoint) -> Result<(), ModelError> {
        if !p.is_finite() {
            return Err(ModelError::invariant(field, "coordinates must be finite"));
        }
        if !self.image.contains_with_margin(p) {
            return Err(ModelError::invariant(field, "point lies outside the image bounds (+10% margin)"));
        }
        Ok(())
    }

    fn check_timing(&self) -> Result<(), ModelError> {
        let dt = self.timing.delta_t_s;
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(ModelError::invariant("timing.delta_t_s", "must be finite and >= 0"));
        }
        match &self.timing.mode {
            TimingMode::ConstantFps { fps } if !(fps.is_finite() && *fps > 0.0) => {
                Err(ModelError::invariant("timing.fps", "must be finite and > 0"))
            }
            TimingMode::Timestamps { sidecar } if sidecar.is_empty() => {
                Err(ModelError::invariant("timing.sidecar", "path must not be empty"))
            }
            _ => Ok(()),
        }
    }

    fn check_frames(&self) -> Result<(), ModelError> {
        let mut prev: Option<&FrameRef> = None;
        for f in &self.frames {
            if let Some(t) = f.timestamp_s {
                if !t.is_finite() {
                    return Err(ModelError::invariant("frames.timestamp_s", "must be finite"));
                }
            }
            if let Some(p) = prev {
                if f.index <= p.index {
                    return Err(ModelError::invariant("frames", "indices strictly increasing"));
                }
                if let (Some(a), Some(b)) = (p.timestamp_s, f.timestamp_s) {
                    if b <= a {
                        return Err(ModelError::invariant("frames", "timestamps strictly increasing"));
                    }
                }
            }
            prev = Some(f);
        }
        Ok(())
    }

    fn check_line(&self, i: usize, line: &LineAnnotation) -> Result<(), ModelError> {
        let field = format!("lines[{i}]");
        if line.points.len() < 3 {
            return Err(ModelError::invariant(field, "needs at least 3 points"));
        }
        for p in &line.points {
            self.check_pixel(&field, p)?;
        }
        let span = line
            .points
            .iter()
            .flat_map(|a| line.points.iter().map(move |b| (a.to_point() - b.to_point()).norm()))
            .fold(0.0, f64::max);
        if span <= 1.0 {
            return Err(ModelError::invariant(field, "points span must exceed 1 pixel"));
        }
        Ok(())
    }

    fn check_path(&self) -> Result<(), ModelError> {
        let cps = &self.path.cps;
        for (i, cp) in cps.iter().enumerate() {
            self.check_pixel(&format!("path.cps[{i}]"), &cp.point)?;
            if !self.frames.is_empty() && !self.frames.iter().any(|f| f.index == cp.frame) {
                return Err(ModelError::invariant(
                    format!("path.cps[{i}].frame"),
                    format!("frame {} is not declared in frames", cp.frame),
                ));
            }
        }
        if cps.windows(2).any(|w| w[1].frame <= w[0].frame) {
            return Err(ModelError::invariant("path", "frames strictly increasing"));
        }
        Ok(())
    }

    /// Loads and validates a project file.
    pub fn load(path: impl AsRef<Path>) -> Result<Project, ModelError> {
        let text = fs::read_to_string(path)?;
        Project::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Project, ModelError> {
        let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ModelError::Parse(e.to_string()))?;
        match raw.get("schema_version") {
            Some(toml::Value::Integer(v)) if *v == i64::from(SCHEMA_VERSION) => {}
            Some(toml::Value::Integer(v)) => return Err(ModelError::SchemaVersion { found: Some(*v) }),
            _ => return Err(ModelError::SchemaVersion { found: None }),
        }
        let project: Project = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        project.check()?;
        Ok(project)
    }

    /// Serializes to the canonical text form.
    pub fn to_toml_string(&self) -> Result<String, ModelError> {
        toml::to_string(self).map_err(|e| ModelError::Parse(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}

/// Non-blocking findings about an otherwise valid project.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Warning {
    DistortionUncorrectable,
    FewDistortionLines(usize),
    StraightPathSimplification,
    MissingGroundTruth,
    MissingGrid,
    IncompletePath(usize),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DistortionUncorrectable => write!(f, "distortion uncorrectable: no line annotations"),
            Warning::FewDistortionLines(n) => {
                write!(f, "distortion weakly constrained: {n} line annotation(s), 3 or more recommended")
            }
            Warning::StraightPathSimplification => {
                write!(f, "straight-path simplification in effect: path has only start and end contact points")
            }
            Warning::MissingGroundTruth => write!(f, "missing ground truth"),
            Warning::MissingGrid => write!(f, "no rectification reference: grid not annotated"),
            Warning::IncompletePath(n) => write!(f, "incomplete path: {n} contact point(s), at least 2 required"),
        }
    }
}

pub fn validate(project: &Project) -> Vec<Warning> {
    let mut out = Vec::new();
    match project.lines.len() {
        0 if project.distortion.is_none() => out.push(Warning::DistortionUncorrectable),
        n @ 1..=2 if project.distortion.is_none() => out.push(Warning::FewDistortionLines(n)),
        _ => {}
    }
    if project.grid.is_none() {
        out.push(Warning::MissingGrid);
    }
    match project.path.cps.len() {
        n @ 0..=1 => out.push(Warning::IncompletePath(n)),
        2 => out.push(Warning::StraightPathSimplification),
        _ => {}
    }
    if project.ground_truth.is_none() {
        out.push(Warning::MissingGroundTruth);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal() -> Project {
        let mut p = Project::new(ImageSize::new(1920, 1080), TimingSpec::constant_fps(30.0));
        p.grid = Some(GridAnnotation::new(
            [
                PixelPoint::new(100.0, 100.0),
                PixelPoint::new(300.0, 100.0),
                PixelPoint::new(300.0, 200.0),
                PixelPoint::new(100.0, 200.0),
            ],
            4.0,
            2.0,
        ));
        p.path.cps = vec![
            ContactPoint::new(0, PixelPoint::new(150.0, 500.0), 1),
            ContactPoint::new(10, PixelPoint::new(450.0, 500.0), 1),
        ];
        p
    }

    #[test]
    fn minimal_project_round_trips() {
        let p = minimal();
        let text = p.to_toml_string().unwrap();
        let back = Project::from_toml_str(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.path.cps.len() - 1, 1);
        assert_eq!(text, back.to_toml_string().unwrap());
    }

    #[test]
    fn collinear_grid_rejected() {
        let mut p = minimal();
        let g = p.grid.as_mut().unwrap();
        g.corners = [
            PixelPoint::new(0.0, 0.0),
            PixelPoint::new(1.0, 0.0),
            PixelPoint::new(2.0, 0.0),
            PixelPoint::new(0.0, 1.0),
        ];
        let err = Project::from_toml_str(&p.to_toml_string().unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("grid.corners"));
    }

    #[test]
    fn duplicate_frame_rejected() {
        let mut p = minimal();
        p.path.cps[0].frame = 5;
        p.path.cps[1].frame = 5;
        let err = Project::from_toml_str(&p.to_toml_string().unwrap()).unwrap_err();
        assert_eq!(err.field(), Some("path"));
        assert!(err.to_string().contains("frames strictly increasing"));
    }

    #[test]
    fn winding_mismatch_rejected() {
        let mut p = minimal();
        p.grid.as_mut().unwrap().winding = Winding::CounterClockwise;
        assert_eq!(p.check().unwrap_err().field(), Some("grid.winding"));
    }

    #[test]
    fn schema_version_checked() {
        let text = minimal().to_toml_string().unwrap().replace("schema_version = 1", "schema_version = 2");
        assert!(matches!(Project::from_toml_str(&text), Err(ModelError::SchemaVersion { found: Some(2) })));
        let text = minimal().to_toml_string().unwrap().replace("schema_version = 1\n", "");
        assert!(matches!(Project::from_toml_str(&text), Err(ModelError::SchemaVersion { found: None })));
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(Project::from_toml_str("schema_version = 1\n[image\n"), Err(ModelError::Parse(_))));
        let text = minimal().to_toml_string().unwrap().replace("fps = 30.0", "fps = \"fast\"");
        assert!(matches!(Project::from_toml_str(&text), Err(ModelError::Parse(_))));
    }

    #[test]
    fn non_finite_numbers_rejected() {
        let text = minimal().to_toml_string().unwrap().replace("fps = 30.0", "fps = nan");
        assert_eq!(Project::from_toml_str(&text).unwrap_err().field(), Some("timing.fps"));
        let text = minimal().to_toml_string().unwrap().replace("width_m = 4.0", "width_m = inf");
        assert_eq!(Project::from_toml_str(&text).unwrap_err().field(), Some("grid.width_m"));
        let mut p = minimal();
        p.path.cps[1].point.x = f64::INFINITY;
        assert_eq!(p.check().unwrap_err().field(), Some("path.cps[1]"));
    }

    #[test]
    fn out_of_bounds_point_rejected() {
        let mut p = minimal();
        p.path.cps[1].point = PixelPoint::new(1920.0 * 1.05, 10.0);
        assert!(p.check().is_ok());
        p.path.cps[1].point = PixelPoint::new(1920.0 * 1.2, 10.0);
        assert_eq!(p.check().unwrap_err().field(), Some("path.cps[1]"));
    }

    #[test]
    fn timestamp_sidecar_path_preserved() {
        let mut p = minimal();
        p.timing = TimingSpec::timestamps("../pts/./T1P1 pts.txt");
        let back = Project::from_toml_str(&p.to_toml_string().unwrap()).unwrap();
        assert_eq!(back.timing.mode, TimingMode::Timestamps { sidecar: "../pts/./T1P1 pts.txt".into() });
    }

    #[test]
    fn delta_t_defaults_to_five_ms() {
        let text = minimal().to_toml_string().unwrap().replace("delta_t_s = 0.005\n", "");
        assert_eq!(Project::from_toml_str(&text).unwrap().timing.delta_t_s, 0.005);
    }

    #[test]
    fn lines_need_three_points_and_span() {
        let mut p = minimal();
        p.lines.push(LineAnnotation { points: vec![PixelPoint::new(1.0, 1.0), PixelPoint::new(5.0, 5.0)] });
        assert_eq!(p.check().unwrap_err().field(), Some("lines[0]"));
        p.lines[0].points = vec![PixelPoint::new(1.0, 1.0), PixelPoint::new(1.2, 1.2), PixelPoint::new(1.4, 1.4)];
        assert_eq!(p.check().unwrap_err().field(), Some("lines[0]"));
    }

    #[test]
    fn cp_frames_must_be_declared() {
        let mut p = minimal();
        p.frames = vec![FrameRef::new(0), FrameRef::new(5)];
        assert_eq!(p.check().unwrap_err().field(), Some("path.cps[1].frame"));
        p.frames.push(FrameRef::new(10));
        assert!(p.check().is_ok());
    }

    #[test]
    fn box_pixel_count() {
        for m in 0..50u32 {
            let cp = ContactPoint::new(0, PixelPoint::new(0.0, 0.0), m);
            assert_eq!(cp.box_pixel_count(), u64::from((2 * m + 1) * (2 * m + 1)));
        }
    }

    #[test]
    fn validate_warnings() {
        let p = minimal();
        let w = validate(&p);
        assert!(w.contains(&Warning::DistortionUncorrectable));
        assert!(w.iter().any(|w| w.to_string().contains("distortion uncorrectable")));
        assert!(w.iter().any(|w| w.to_string().contains("straight-path simplification in effect")));
        assert!(w.contains(&Warning::MissingGroundTruth));

        let mut full = minimal();
        full.path.cps.push(ContactPoint::new(20, PixelPoint::new(700.0, 500.0), 1));
        for y in [300.0, 400.0, 600.0] {
            full.lines.push(LineAnnotation {
                points: vec![PixelPoint::new(10.0, y), PixelPoint::new(500.0, y), PixelPoint::new(900.0, y)],
            });
        }
        full.ground_truth = Some(GroundTruth {
            speed: SpeedValue { value: 30.0, unit: SpeedUnit::Mph },
            source: "speedometer".into(),
        });
        assert!(validate(&full).is_empty());
    }

    #[test]
    fn unit_conversions_are_exact() {
        assert_eq!(SpeedUnit::Mph.to_mps(30.0), 13.4112);
        assert_eq!(SpeedUnit::Kmh.from_mps(10.0), 36.0);
    }
}
