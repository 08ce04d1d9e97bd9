//! Vehicle speed from fixed-camera footage with a worst-case uncertainty
//! interval.
//!
//! The measurement chain runs pixel → undistorted pixel → road-plane meters:
//! a one-parameter division model removes radial distortion, a homography
//! fitted to a ground rectangle of known size rectifies the road, and each
//! annotated contact point becomes a convex region on the road. Distances
//! between regions bound the travelled path; frame times bound the duration.

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod distortion;
pub mod geom;
pub mod model;
pub mod pipeline;
pub mod rectify;
pub mod speed;
pub mod synth;
pub mod timing;
pub mod uncertainty;

pub use distortion::{fit_distortion, DistortionFit, DistortionModel};
pub use model::{
    ContactPoint, FrameRef, GridAnnotation, GroundTruth, ImageSize, LineAnnotation, ModelError, PathAnnotation,
    PixelPoint, Project, SpeedUnit, TimingMode, TimingSpec, Warning,
};
pub use pipeline::{estimate_file, estimate_project, EstimateError, Estimation};
pub use rectify::{estimate_rectifying_transform, MeasurementChain, RectifyingTransform};
pub use speed::{estimate_speed, SpeedEstimate};
pub use uncertainty::{path_distance, rectify_region, PathDistance, RectifiedRegion};
