//! Worst-case distance intervals from per-point uncertainty boxes.
//!
//! Each contact point carries a `(2m+1)×(2m+1)` pixel box. The box boundary
//! is sampled, pushed through undistortion and rectification, and wrapped in
//! a convex hull on the ground plane. Distances between consecutive hulls
//! bound every segment; the path error is the sum of segment errors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{self, Point};
use crate::model::{ContactPoint, PixelPoint};
use crate::rectify::{MeasurementChain, RectifyError};

/// Interior samples per box edge, on top of the four corners.
pub const SAMPLES_PER_EDGE: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("uncertainty region extends past the vanishing line; point not measurable: {0}")]
    Horizon(#[source] RectifyError),
    #[error(transparent)]
    Rectify(RectifyError),
    #[error("a path needs at least 2 regions, got {0}")]
    TooFewRegions(usize),
}

impl From<RectifyError> for UncertaintyError {
    fn from(e: RectifyError) -> Self {
        match e {
            RectifyError::Horizon { .. } => UncertaintyError::Horizon(e),
            other => UncertaintyError::Rectify(other),
        }
    }
}

/// Ground-plane image of one uncertainty box.
#[derive(Clone, Debug, PartialEq)]
pub struct RectifiedRegion {
    /// Counter-clockwise hull vertices in meters; a single vertex when `m = 0`.
    pub hull: Vec<Point>,
    pub center: Point,
}

impl RectifiedRegion {
    pub fn point(center: Point) -> Self {
        RectifiedRegion { hull: vec![center], center }
    }

    pub fn area(&self) -> f64 {
        geom::polygon_area(&self.hull)
    }
}

/// Boundary samples of the box around `p` with half-width `m` pixels.
pub fn box_boundary(p: PixelPoint, m: u32, samples_per_edge: usize) -> Vec<PixelPoint> {
    if m == 0 {
        return vec![p];
    }
    let r = f64::from(m);
    let corners = [(-r, -r), (r, -r), (r, r), (-r, r)];
    let mut out = Vec::with_capacity(4 * (samples_per_edge + 1));
    for i in 0..4 {
        let (ax, ay) = corners[i];
        let (bx, by) = corners[(i + 1) % 4];
        out.push(PixelPoint::new(p.x + ax, p.y + ay));
        for j in 1..=samples_per_edge {
            let t = j as f64 / (samples_per_edge + 1) as f64;
            out.push(PixelPoint::new(p.x + ax + (bx - ax) * t, p.y + ay + (by - ay) * t));
        }
    }
    out
}

pub fn rectify_region(cp: &ContactPoint, chain: &MeasurementChain) -> Result<RectifiedRegion, UncertaintyError> {
    rectify_region_with_density(cp, chain, SAMPLES_PER_EDGE)
}

pub fn rectify_region_with_density(
    cp: &ContactPoint,
    chain: &MeasurementChain,
    samples_per_edge: usize,
) -> Result<RectifiedRegion, UncertaintyError> {
    let center = chain.to_ground(cp.point)?;
    if cp.m == 0 {
        return Ok(RectifiedRegion::point(center));
    }
    let mapped = box_boundary(cp.point, cp.m, samples_per_edge)
        .into_iter()
        .map(|p| chain.to_ground(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RectifiedRegion { hull: geom::convex_hull(&mapped), center })
}

/// Distance between two rectified points with its worst-case bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentInterval {
    pub d_m: f64,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub delta_d_m: f64,
}

impl SegmentInterval {
    pub fn new(d: f64, d_min: f64, d_max: f64) -> Self {
        // centers sit inside their hulls, so these clamps only absorb rounding
        let d_min = d_min.min(d);
        let d_max = d_max.max(d);
        SegmentInterval { d_m: d, d_min_m: d_min, d_max_m: d_max, delta_d_m: (d_max - d).max(d - d_min) }
    }
}

pub fn segment_interval(a: &RectifiedRegion, b: &RectifiedRegion) -> SegmentInterval {
    let d = (a.center - b.center).norm();
    let d_max = geom::convex_max_distance(&a.hull, &b.hull);
    let d_min = geom::convex_min_distance(&a.hull, &b.hull);
    SegmentInterval::new(d, d_min, d_max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathDistance {
    pub d_m: f64,
    pub delta_d_m: f64,
    pub segments: Vec<SegmentInterval>,
}

/// Sums segment distances and their errors over consecutive regions.
pub fn path_distance(regions: &[RectifiedRegion]) -> Result<PathDistance, UncertaintyError> {
    if regions.len() < 2 {
        return Err(UncertaintyError::TooFewRegions(regions.len()));
    }
    let segments: Vec<SegmentInterval> = regions.windows(2).map(|w| segment_interval(&w[0], &w[1])).collect();
    Ok(PathDistance {
        d_m: segments.iter().map(|s| s.d_m).sum(),
        delta_d_m: segments.iter().map(|s| s.delta_d_m).sum(),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distortion::DistortionModel;
    use crate::model::ImageSize;
    use crate::rectify::RectifyingTransform;
    use nalgebra::Matrix3;

    fn identity_chain() -> MeasurementChain {
        MeasurementChain {
            distortion: DistortionModel::identity(ImageSize::new(100, 100)),
            transform: RectifyingTransform::from_homography(Matrix3::identity(), &Point::origin()).unwrap(),
        }
    }

    fn square(cx: f64, cy: f64, r: f64) -> RectifiedRegion {
        RectifiedRegion {
            hull: vec![
                Point::new(cx - r, cy - r),
                Point::new(cx + r, cy - r),
                Point::new(cx + r, cy + r),
                Point::new(cx - r, cy + r),
            ],
            center: Point::new(cx, cy),
        }
    }

    #[test]
    fn zero_m_is_a_point() {
        let cp = ContactPoint::new(0, PixelPoint::new(10.0, 10.0), 0);
        let r = rectify_region(&cp, &identity_chain()).unwrap();
        assert_eq!(r.hull, vec![Point::new(10.0, 10.0)]);
        assert_eq!(r.area(), 0.0);
    }

    #[test]
    fn identity_box() {
        let cp = ContactPoint::new(0, PixelPoint::new(10.0, 10.0), 1);
        let r = rectify_region(&cp, &identity_chain()).unwrap();
        assert_eq!(r.hull.len(), 4);
        let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = r.hull.iter().map(|p| (p.x, p.y)).unzip();
        xs.sort_by(f64::total_cmp);
        ys.sort_by(f64::total_cmp);
        assert_eq!((xs[0], xs[3], ys[0], ys[3]), (9.0, 11.0, 9.0, 11.0));
        assert_eq!(r.area(), 4.0);
    }

    #[test]
    fn boundary_sample_count() {
        assert_eq!(box_boundary(PixelPoint::new(0.0, 0.0), 2, 8).len(), 36);
    }

    #[test]
    fn point_regions() {
        let s = segment_interval(&RectifiedRegion::point(Point::new(0.0, 0.0)), &RectifiedRegion::point(Point::new(10.0, 0.0)));
        assert_eq!(s, SegmentInterval { d_m: 10.0, d_min_m: 10.0, d_max_m: 10.0, delta_d_m: 0.0 });
    }

    #[test]
    fn separated_squares() {
        let s = segment_interval(&square(0.0, 0.0, 1.0), &square(10.0, 0.0, 1.0));
        assert_eq!(s.d_m, 10.0);
        assert_eq!(s.d_min_m, 8.0);
        assert!((s.d_max_m - 12.165_525_060_596_439).abs() < 1e-12);
        assert!((s.delta_d_m - 2.165_525_060_596_439).abs() < 1e-12);
    }

    #[test]
    fn overlapping_squares() {
        let s = segment_interval(&square(0.0, 0.0, 1.0), &square(1.0, 0.0, 1.0));
        assert_eq!(s.d_min_m, 0.0);
        assert_eq!(s.delta_d_m, s.d_max_m - s.d_m);
    }

    #[test]
    fn path_sums() {
        let pts = [0.0, 4.0, 10.0].map(|x| RectifiedRegion::point(Point::new(x, 0.0)));
        let p = path_distance(&pts).unwrap();
        assert_eq!((p.d_m, p.delta_d_m, p.segments.len()), (10.0, 0.0, 2));
        let single = path_distance(&pts[..2]).unwrap();
        assert_eq!(single.d_m, single.segments[0].d_m);
        assert!(matches!(path_distance(&pts[..1]), Err(UncertaintyError::TooFewRegions(1))));
    }
}
