//! Metric rectification of the road plane from a known ground rectangle.

use image::{Rgb, RgbImage};
use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortion::{DistortionError, DistortionModel};
use crate::geom::{self, Point};
use crate::model::{GridAnnotation, PixelPoint};

/// Minimum |w| (on the road side) for a point to be considered off the horizon.
pub const HORIZON_EPS: f64 = 1e-12;
const COLLINEAR_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum RectifyError {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(&'static str),
    #[error("point at or beyond the vanishing line (w = {w:e})")]
    Horizon { w: f64 },
    #[error("need at least 4 correspondences, got {0}")]
    TooFewCorrespondences(usize),
    #[error("homography is singular")]
    Singular,
    #[error(transparent)]
    Distortion(#[from] DistortionError),
}

/// Homography from undistorted pixels to ground-plane meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectifyingTransform {
    #[serde(with = "matrix_rows")]
    pub h: Matrix3<f64>,
    /// Sign of the homogeneous scale on the road side of the horizon.
    pub road_sign: f64,
}

mod matrix_rows {
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Ok(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

impl RectifyingTransform {
    /// Builds a transform from a raw homography, fixing the scale
    /// (`h33 = 1` unless that entry vanishes, then unit Frobenius norm) and
    /// recording which side of the horizon `road_point` lies on.
    pub fn from_homography(h: Matrix3<f64>, road_point: &Point) -> Result<Self, RectifyError> {
        if !h.iter().all(|v| v.is_finite()) || h.determinant() == 0.0 {
            return Err(RectifyError::Singular);
        }
        let fro = h.norm();
        let h = if h[(2, 2)].abs() > 1e-12 * fro { h / h[(2, 2)] } else { h / fro };
        let w = h[(2, 0)] * road_point.x + h[(2, 1)] * road_point.y + h[(2, 2)];
        if w == 0.0 {
            return Err(RectifyError::Horizon { w });
        }
        Ok(RectifyingTransform { h, road_sign: w.signum() })
    }

    /// The image line sent to infinity: `a x + b y + c = 0`.
    pub fn horizon(&self) -> [f64; 3] {
        [self.h[(2, 0)], self.h[(2, 1)], self.h[(2, 2)]]
    }

    /// Maps an undistorted pixel to ground meters.
    pub fn map_point(&self, p: &Point) -> Result<Point, RectifyError> {
        let v = self.h * Vector3::new(p.x, p.y, 1.0);
        if v.z * self.road_sign <= HORIZON_EPS {
            return Err(RectifyError::Horizon { w: v.z });
        }
        Ok(Point::new(v.x / v.z, v.y / v.z))
    }

    /// Maps ground meters back to an undistorted pixel.
    pub fn unmap_point(&self, q: &Point) -> Result<Point, RectifyError> {
        let inv = self.h.try_inverse().ok_or(RectifyError::Singular)?;
        let v = inv * Vector3::new(q.x, q.y, 1.0);
        if v.z.abs() <= HORIZON_EPS {
            return Err(RectifyError::Horizon { w: v.z });
        }
        Ok(Point::new(v.x / v.z, v.y / v.z))
    }

    /// Ratio of largest to smallest singular value of `h`.
    pub fn condition_number(&self) -> f64 {
        let sv = self.h.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 { f64::INFINITY } else { max / min }
    }
}

/// Undistortion followed by rectification: raw pixel to ground meters.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementChain {
    pub distortion: DistortionModel,
    pub transform: RectifyingTransform,
}

impl MeasurementChain {
    pub fn to_ground(&self, p: PixelPoint) -> Result<Point, RectifyError> {
        let u = self.distortion.undistort(p)?;
        self.transform.map_point(&u.to_point())
    }

    pub fn to_image(&self, q: &Point) -> Result<PixelPoint, RectifyError> {
        let u = self.transform.unmap_point(q)?;
        Ok(self.distortion.distort(u.into())?)
    }
}

/// Similarity moving the centroid to the origin with mean distance sqrt(2).
fn hartley(points: &[Point]) -> Matrix3<f64> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean = points.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    let s = if mean > 0.0 { std::f64::consts::SQRT_2 / mean } else { 1.0 };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

fn apply(m: &Matrix3<f64>, p: &Point) -> Point {
    let v = m * Vector3::new(p.x, p.y, 1.0);
    Point::new(v.x / v.z, v.y / v.z)
}

/// Projective map taking the unit square (0,0),(1,0),(1,1),(0,1) onto `q`
/// in order (closed form, Heckbert 1989).
fn square_to_quad(q: &[Point; 4]) -> Matrix3<f64> {
    let [p0, p1, p2, p3] = q;
    let sx = p0.x - p1.x + p2.x - p3.x;
    let sy = p0.y - p1.y + p2.y - p3.y;
    if sx == 0.0 && sy == 0.0 {
        return Matrix3::new(
            p1.x - p0.x, p3.x - p0.x, p0.x,
            p1.y - p0.y, p3.y - p0.y, p0.y,
            0.0, 0.0, 1.0,
        );
    }
    let (dx1, dx2) = (p1.x - p2.x, p3.x - p2.x);
    let (dy1, dy2) = (p1.y - p2.y, p3.y - p2.y);
    let den = dx1 * dy2 - dx2 * dy1;
    let g = (sx * dy2 - dx2 * sy) / den;
    let h = (dx1 * sy - sx * dy1) / den;
    Matrix3::new(
        p1.x - p0.x + g * p1.x, p3.x - p0.x + h * p3.x, p0.x,
        p1.y - p0.y + g * p1.y, p3.y - p0.y + h * p3.y, p0.y,
        g, h, 1.0,
    )
}

fn adjugate(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c = |r0: usize, c0: usize, r1: usize, c1: usize| m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)];
    Matrix3::new(
        c(1, 1, 2, 2), -c(0, 1, 2, 2), c(0, 1, 1, 2),
        -c(1, 0, 2, 2), c(0, 0, 2, 2), -c(0, 0, 1, 2),
        c(1, 0, 2, 1), -c(0, 0, 2, 1), c(0, 0, 1, 1),
    )
}

/// Exact homography taking four image points to the rectangle corners
/// (0,0), (w,0), (w,h), (0,h).
pub fn four_point_homography(image: &[Point; 4], width: f64, height: f64) -> Result<Matrix3<f64>, RectifyError> {
    for (i, j, k) in [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)] {
        if geom::nearly_collinear(&image[i], &image[j], &image[k], COLLINEAR_EPS) {
            return Err(RectifyError::DegenerateGrid("three corners are collinear"));
        }
    }
    let t = hartley(image);
    let normalized: [Point; 4] = std::array::from_fn(|i| apply(&t, &image[i]));
    let quad_to_square = adjugate(&square_to_quad(&normalized));
    let scale = Matrix3::new(width, 0.0, 0.0, 0.0, height, 0.0, 0.0, 0.0, 1.0);
    Ok(scale * quad_to_square * t)
}

/// Normalized DLT over `n >= 4` correspondences (least squares for `n > 4`).
pub fn dlt_homography(image: &[Point], ground: &[Point]) -> Result<Matrix3<f64>, RectifyError> {
    let n = image.len();
    if n < 4 || ground.len() != n {
        return Err(RectifyError::TooFewCorrespondences(n.min(ground.len())));
    }
    let ti = hartley(image);
    let tg = hartley(ground);
    // pad to at least 9 rows so the thin SVD still exposes the null vector
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for k in 0..n {
        let p = apply(&ti, &image[k]);
        let q = apply(&tg, &ground[k]);
        let (x, y, u, v) = (p.x, p.y, q.x, q.y);
        a.row_mut(2 * k).copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(2 * k + 1).copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or(RectifyError::Singular)?;
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or(RectifyError::Singular)?;
    let h = vt.row(idx);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tg_inv = tg.try_inverse().ok_or(RectifyError::Singular)?;
    Ok(tg_inv * hn * ti)
}

/// Rectifying transform from the annotated grid, after undistorting its
/// corners. Extra reference marks switch to the over-determined DLT.
pub fn estimate_rectifying_transform(
    grid: &GridAnnotation,
    model: &DistortionModel,
) -> Result<RectifyingTransform, RectifyError> {
    let corners: Vec<Point> =
        grid.corners.iter().map(|c| model.undistort(*c).map(|p| p.to_point())).collect::<Result<_, _>>()?;
    let corners: [Point; 4] = [corners[0], corners[1], corners[2], corners[3]];
    // for a quad the consecutive triples are all four triples, so this also
    // rejects any collinear triple
    if !geom::is_strictly_convex(&corners, COLLINEAR_EPS) {
        return Err(RectifyError::DegenerateGrid("undistorted corners are not strictly convex"));
    }
    let h = if grid.extra_marks.is_empty() {
        four_point_homography(&corners, grid.width_m, grid.height_m)?
    } else {
        let mut image = corners.to_vec();
        let mut ground: Vec<Point> = grid.metric_corners().iter().map(|c| Point::new(c[0], c[1])).collect();
        for mark in &grid.extra_marks {
            image.push(model.undistort(mark.pixel)?.to_point());
            ground.push(Point::new(mark.ground_m[0], mark.ground_m[1]));
        }
        dlt_homography(&image, &ground)?
    };
    RectifyingTransform::from_homography(h, &corners[0])
}

/// Axis-aligned ground-plane window in meters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundBounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl GroundBounds {
    pub fn around_grid(grid: &GridAnnotation, margin_m: f64) -> Self {
        GroundBounds {
            min_x: -margin_m,
            min_y: -margin_m,
            max_x: grid.width_m + margin_m,
            max_y: grid.height_m + margin_m,
        }
    }

    pub fn output_size(&self, px_per_m: f64) -> (u32, u32) {
        let w = ((self.max_x - self.min_x) * px_per_m).round().max(1.0) as u32;
        let h = ((self.max_y - self.min_y) * px_per_m).round().max(1.0) as u32;
        (w, h)
    }
}

fn bilinear(img: &RgbImage, x: f64, y: f64) -> Option<Rgb<u8>> {
    let (w, h) = (img.width() as f64, img.height() as f64);
    if !(x >= 0.0 && y >= 0.0 && x <= w - 1.0 && y <= h - 1.0) {
        return None;
    }
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as u32, y0 as u32);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        let v = |xx: u32, yy: u32| f64::from(img.get_pixel(xx, yy)[c]);
        let top = v(x0, y0) * (1.0 - fx) + v(x1, y0) * fx;
        let bottom = v(x0, y1) * (1.0 - fx) + v(x1, y1) * fx;
        *o = (top * (1.0 - fy) + bottom * fy).round().clamp(0.0, 255.0) as u8;
    }
    Some(Rgb(out))
}

/// Inverse-warped aerial view. Output pixel `(u, v)` shows ground point
/// `(min_x + u/px_per_m, min_y + v/px_per_m)`; anything off the source
/// image or past the horizon is black. Preview only, never measured.
pub fn render_rectified_preview(
    chain: &MeasurementChain,
    image: &RgbImage,
    bounds: &GroundBounds,
    px_per_m: f64,
) -> RgbImage {
    let (w, h) = bounds.output_size(px_per_m);
    RgbImage::from_fn(w, h, |u, v| {
        let q = Point::new(bounds.min_x + f64::from(u) / px_per_m, bounds.min_y + f64::from(v) / px_per_m);
        chain
            .to_image(&q)
            .ok()
            .and_then(|p| bilinear(image, p.x, p.y))
            .unwrap_or(Rgb([0, 0, 0]))
    })
}
