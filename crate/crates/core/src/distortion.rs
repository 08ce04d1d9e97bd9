//! One-parameter division model for radial lens distortion.
//!
//! A distorted pixel `p` at radius `r` from the center `c` is corrected to
//! `c + (p - c) / (1 + k (r / norm)^2)`. The center is fixed at the image
//! center and `norm` is the half diagonal, which makes `k` comparable across
//! resolutions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ImageSize, LineAnnotation, PixelPoint};

/// Search interval for the distortion coefficient.
pub const K_RANGE: (f64, f64) = (-0.5, 0.5);
/// Golden-section stops once the bracket is narrower than this.
pub const K_TOLERANCE: f64 = 1e-6;
/// Below this RMS residual (pixels) on every line the lines carry no curvature.
pub const NO_CURVATURE_PX: f64 = 1e-3;

const SCAN_STEPS: usize = 200;

#[derive(Debug, Error, PartialEq)]
pub enum DistortionError {
    #[error("fold-over: 1 + k*r^2 = {denominator} is not positive")]
    FoldOver { denominator: f64 },
    #[error("degenerate line: undistorted points collapse to a point")]
    DegenerateLine,
    #[error("precondition failed: {0}")]
    Precondition(&'static str),
    #[error("inverse distortion did not converge")]
    NoConvergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionModel {
    pub cx: f64,
    pub cy: f64,
    pub k: f64,
    pub norm: f64,
}

impl DistortionModel {
    /// Model centered on the image with the half-diagonal normalization.
    pub fn centered(size: ImageSize, k: f64) -> Self {
        let c = size.center();
        DistortionModel { cx: c.x, cy: c.y, k, norm: size.half_diagonal() }
    }

    pub fn identity(size: ImageSize) -> Self {
        DistortionModel::centered(size, 0.0)
    }

    pub fn is_identity(&self) -> bool {
        self.k == 0.0
    }

    fn denominator(&self, dx: f64, dy: f64) -> f64 {
        let s2 = (dx * dx + dy * dy) / (self.norm * self.norm);
        1.0 + self.k * s2
    }

    /// Checks finiteness and that the map does not fold over anywhere in
    /// the image (corners are the worst case for a radial model).
    pub fn validate_for(&self, size: ImageSize) -> Result<(), DistortionError> {
        if ![self.cx, self.cy, self.k, self.norm].iter().all(|v| v.is_finite()) || self.norm <= 0.0 {
            return Err(DistortionError::Precondition("model fields must be finite with norm > 0"));
        }
        let (w, h) = (size.width as f64, size.height as f64);
        for (x, y) in [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)] {
            let d = self.denominator(x - self.cx, y - self.cy);
            if d <= 0.0 {
                return Err(DistortionError::FoldOver { denominator: d });
            }
        }
        Ok(())
    }

    pub fn undistort(&self, p: PixelPoint) -> Result<PixelPoint, DistortionError> {
        if self.k == 0.0 {
            return Ok(p);
        }
        let (dx, dy) = (p.x - self.cx, p.y - self.cy);
        let d = self.denominator(dx, dy);
        if d <= 0.0 {
            return Err(DistortionError::FoldOver { denominator: d });
        }
        Ok(PixelPoint::new(self.cx + dx / d, self.cy + dy / d))
    }

    /// Inverse of [`undistort`](Self::undistort): maps an ideal pixel to where
    /// the lens images it. Used by the synthetic renderer and image previews.
    pub fn distort(&self, p: PixelPoint) -> Result<PixelPoint, DistortionError> {
        if self.k == 0.0 {
            return Ok(p);
        }
        let (dx, dy) = (p.x - self.cx, p.y - self.cy);
        let ru = dx.hypot(dy);
        if ru == 0.0 {
            return Ok(p);
        }
        let n2 = self.norm * self.norm;
        let g = |r: f64| r / (1.0 + self.k * r * r / n2) - ru;
        // g is increasing on the bracket; for k > 0 it peaks at r = n/sqrt(k)
        let (mut lo, mut hi) = if self.k < 0.0 {
            (0.0, ru.min(self.norm / (-self.k).sqrt()))
        } else {
            let fold = self.norm / self.k.sqrt();
            if g(fold) < 0.0 {
                return Err(DistortionError::NoConvergence);
            }
            (ru, fold)
        };
        let mut rd = 0.5 * (lo + hi);
        for _ in 0..200 {
            let f = g(rd);
            if f.abs() <= 1e-15 * ru {
                break;
            }
            if f < 0.0 {
                lo = rd;
            } else {
                hi = rd;
            }
            let den = 1.0 + self.k * rd * rd / n2;
            let df = (1.0 - self.k * rd * rd / n2) / (den * den);
            let next = rd - f / df;
            rd = if df > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let den = 1.0 + self.k * rd * rd / n2;
        if !rd.is_finite() || den <= 0.0 || (g(rd) / ru).abs() > 1e-12 {
            return Err(DistortionError::NoConvergence);
        }
        let s = rd / ru;
        Ok(PixelPoint::new(self.cx + dx * s, self.cy + dy * s))
    }
}

/// RMS orthogonal distance of the undistorted points to their total least
/// squares line.
pub fn line_straightness_residual(model: &DistortionModel, line: &LineAnnotation) -> Result<f64, DistortionError> {
    if line.points.len() < 3 {
        return Err(DistortionError::Precondition("a line needs at least 3 points"));
    }
    let pts = line.points.iter().map(|p| model.undistort(*p)).collect::<Result<Vec<_>, _>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = (p.x - mx, p.y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx + syy <= f64::MIN_POSITIVE {
        return Err(DistortionError::DegenerateLine);
    }
    // principal direction from the well-conditioned angle form; distances are
    // then measured directly instead of through the small eigenvalue
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (nx, ny) = (-theta.sin(), theta.cos());
    let ss: f64 = pts.iter().map(|p| ((p.x - mx) * nx + (p.y - my) * ny).powi(2)).sum();
    Ok((ss / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitWarning {
    /// Lines were already straight; the identity model was returned.
    NoCurvatureSignal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistortionFit {
    pub model: DistortionModel,
    /// Sum of squared line residuals at the returned `k`.
    pub cost: f64,
    pub warning: Option<FitWarning>,
}

fn total_cost(lines: &[LineAnnotation], model: &DistortionModel) -> f64 {
    let mut sum = 0.0;
    for line in lines {
        match line_straightness_residual(model, line) {
            Ok(r) => sum += r * r,
            Err(_) => return f64::INFINITY,
        }
    }
    sum
}

/// Fits `k` by minimizing the summed squared straightness residual.
///
/// A coarse scan over [`K_RANGE`] brackets the minimum, then golden-section
/// search narrows it to [`K_TOLERANCE`].
pub fn fit_distortion(lines: &[LineAnnotation], size: ImageSize) -> Result<DistortionFit, DistortionError> {
    if lines.is_empty() {
        return Err(DistortionError::Precondition("at least one line annotation is required"));
    }
    if size.width == 0 || size.height == 0 {
        return Err(DistortionError::Precondition("image size must be positive"));
    }
    let identity = DistortionModel::identity(size);
    let mut straight = true;
    for line in lines {
        if line_straightness_residual(&identity, line)? >= NO_CURVATURE_PX {
            straight = false;
        }
    }
    if straight {
        return Ok(DistortionFit {
            model: identity,
            cost: total_cost(lines, &identity),
            warning: Some(FitWarning::NoCurvatureSignal),
        });
    }

    let cost_at = |k: f64| total_cost(lines, &DistortionModel::centered(size, k));
    let (lo, hi) = K_RANGE;
    let step = (hi - lo) / SCAN_STEPS as f64;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..=SCAN_STEPS {
        let c = cost_at(lo + step * i as f64);
        if c < best {
            best = c;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = cost_at(x1);
    let mut f2 = cost_at(x2);
    while b - a >= K_TOLERANCE {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = cost_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = cost_at(x2);
        }
    }
    let k = 0.5 * (a + b);
    let mut fit = DistortionFit { model: DistortionModel::centered(size, k), cost: cost_at(k), warning: None };
    let grid_k = lo + step * best_i as f64;
    if best < fit.cost {
        fit = DistortionFit { model: DistortionModel::centered(size, grid_k), cost: best, warning: None };
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SIZE: ImageSize = ImageSize::new(1920, 1080);

    fn straight_line(a: (f64, f64), b: (f64, f64), n: usize) -> Vec<PixelPoint> {
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                PixelPoint::new(a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t)
            })
            .collect()
    }

    fn distorted_line(model: &DistortionModel, a: (f64, f64), b: (f64, f64), n: usize) -> LineAnnotation {
        LineAnnotation { points: straight_line(a, b, n).into_iter().map(|p| model.distort(p).unwrap()).collect() }
    }

    #[test]
    fn zero_k_is_identity() {
        let m = DistortionModel::identity(SIZE);
        let p = PixelPoint::new(100.0, 200.0);
        assert_eq!(m.undistort(p).unwrap(), p);
        let odd = PixelPoint::new(0.1 + 0.2, 1e-300);
        assert_eq!(m.undistort(odd).unwrap(), odd);
    }

    #[test]
    fn center_is_fixed() {
        for k in [-0.4, -0.1, 0.2] {
            let m = DistortionModel::centered(SIZE, k);
            let c = SIZE.center();
            assert_eq!(m.undistort(c).unwrap(), c);
            assert_eq!(m.distort(c).unwrap(), c);
        }
    }

    #[test]
    fn worked_undistort_value() {
        let m = DistortionModel { cx: 0.0, cy: 0.0, k: -0.1, norm: 1000.0 };
        let q = m.undistort(PixelPoint::new(500.0, 0.0)).unwrap();
        // independent scalar evaluation: 500 / (1 - 0.1 * 0.5^2)
        let expected = 500.0 / 0.975;
        assert!((q.x - expected).abs() < 1e-12);
        assert!((q.x - 512.820_512_820_512_8).abs() < 1e-9);
        assert_eq!(q.y, 0.0);
    }

    #[test]
    fn fold_over_detected() {
        let m = DistortionModel { cx: 0.0, cy: 0.0, k: -2.0, norm: 1.0 };
        assert!(matches!(m.undistort(PixelPoint::new(1.0, 0.0)), Err(DistortionError::FoldOver { .. })));
        assert!(m.validate_for(ImageSize::new(2, 2)).is_err());
    }

    #[test]
    fn residual_zero_for_collinear_and_radial() {
        let id = DistortionModel::identity(SIZE);
        let line = LineAnnotation { points: straight_line((10.0, 20.0), (1500.0, 900.0), 7) };
        assert!(line_straightness_residual(&id, &line).unwrap() < 1e-12);

        let c = SIZE.center();
        let ray = LineAnnotation { points: straight_line((c.x, c.y), (c.x + 700.0, c.y + 350.0), 9) };
        for k in [-0.3, 0.0, 0.25] {
            let m = DistortionModel::centered(SIZE, k);
            assert!(line_straightness_residual(&m, &ray).unwrap() < 1e-9);
        }
    }

    #[test]
    fn residual_vanishes_at_true_k() {
        let truth = DistortionModel::centered(SIZE, -0.12);
        let line = distorted_line(&truth, (100.0, 150.0), (1800.0, 250.0), 15);
        assert!(line_straightness_residual(&DistortionModel::identity(SIZE), &line).unwrap() > 1.0);
        assert!(line_straightness_residual(&truth, &line).unwrap() <= 1e-9);
    }

    #[test]
    fn degenerate_line() {
        let id = DistortionModel::identity(SIZE);
        let line = LineAnnotation { points: vec![PixelPoint::new(5.0, 5.0); 3] };
        assert_eq!(line_straightness_residual(&id, &line), Err(DistortionError::DegenerateLine));
    }

    #[test]
    fn fit_recovers_single_line_k() {
        let truth = DistortionModel::centered(SIZE, -0.12);
        let line = distorted_line(&truth, (100.0, 150.0), (1800.0, 250.0), 15);
        let fit = fit_distortion(&[line], SIZE).unwrap();
        assert!(fit.warning.is_none());
        assert!((fit.model.k + 0.12).abs() <= 1e-3, "k = {}", fit.model.k);
    }

    #[test]
    fn fit_restores_straightness() {
        let truth = DistortionModel::centered(SIZE, -0.15);
        let lines = vec![
            distorted_line(&truth, (50.0, 100.0), (1850.0, 160.0), 12),
            distorted_line(&truth, (80.0, 1000.0), (1700.0, 900.0), 12),
            distorted_line(&truth, (150.0, 50.0), (250.0, 1030.0), 12),
        ];
        let fit = fit_distortion(&lines, SIZE).unwrap();
        let diag = 2.0 * SIZE.half_diagonal();
        for line in &lines {
            assert!(line_straightness_residual(&fit.model, line).unwrap() < 1e-6 * diag);
        }
    }

    #[test]
    fn straight_lines_give_identity() {
        let lines = vec![LineAnnotation { points: straight_line((10.0, 20.0), (1500.0, 900.0), 5) }];
        let fit = fit_distortion(&lines, SIZE).unwrap();
        assert_eq!(fit.model.k, 0.0);
        assert_eq!(fit.warning, Some(FitWarning::NoCurvatureSignal));
    }

    #[test]
    fn empty_lines_rejected() {
        assert!(matches!(fit_distortion(&[], SIZE), Err(DistortionError::Precondition(_))));
    }

    proptest! {
        #[test]
        fn distort_inverts_undistort(k in -0.3f64..0.3, x in 0.0f64..1920.0, y in 0.0f64..1080.0) {
            let m = DistortionModel::centered(SIZE, k);
            let p = PixelPoint::new(x, y);
            let ru = (x - m.cx).hypot(y - m.cy);
            // with k > 0 no distorted radius reaches past n / (2 sqrt(k))
            let reachable = k <= 0.0 || ru < 0.999 * m.norm / (2.0 * k.sqrt());
            match m.distort(p) {
                Ok(d) => {
                    let q = m.undistort(d).unwrap();
                    prop_assert!((q.x - x).abs() < 1e-9 && (q.y - y).abs() < 1e-9);
                }
                Err(e) => prop_assert!(!reachable, "unexpected {e:?} at radius {ru}"),
            }
        }

        #[test]
        fn radial_map_is_monotone(k in -0.5f64..0.5, angle in 0.0f64..std::f64::consts::TAU,
                                  s1 in 0.0f64..1.0, s2 in 0.0f64..1.0) {
            prop_assume!((s1 - s2).abs() > 1e-9);
            let m = DistortionModel::centered(SIZE, k);
            let at = |s: f64| {
                let r = s * m.norm;
                let q = m.undistort(PixelPoint::new(m.cx + r * angle.cos(), m.cy + r * angle.sin())).unwrap();
                (q.x - m.cx).hypot(q.y - m.cy)
            };
            let (lo, hi) = if s1 < s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(at(lo) < at(hi));
        }
    }
}
