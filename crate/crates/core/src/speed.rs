//! Average speed and its worst-case interval.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SpeedUnit;
use crate::timing::{self, Duration, FrameClock, TimingError};
use crate::uncertainty::{self, PathDistance, RectifiedRegion, SegmentInterval, UncertaintyError};

#[derive(Debug, Error, PartialEq)]
pub enum SpeedError {
    #[error("path length must be positive, got {0} m")]
    ZeroDistance(f64),
    #[error("duration must be positive, got {0} s")]
    ZeroDuration(f64),
    #[error("{0} regions but {1} frames")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub v_mps: f64,
    pub delta_v_mps: f64,
    pub lower_mps: f64,
    pub upper_mps: f64,
    pub d_m: f64,
    pub delta_d_m: f64,
    pub t_s: f64,
    pub delta_t_s: f64,
    pub eps_d: f64,
    pub eps_t: f64,
    pub eps_v: f64,
    pub segments: Vec<SegmentInterval>,
}

impl SpeedEstimate {
    pub fn v_in(&self, unit: SpeedUnit) -> f64 {
        unit.from_mps(self.v_mps)
    }

    pub fn delta_v_in(&self, unit: SpeedUnit) -> f64 {
        unit.from_mps(self.delta_v_mps)
    }

    pub fn contains(&self, v_mps: f64) -> bool {
        self.lower_mps <= v_mps && v_mps <= self.upper_mps
    }

    /// One-decimal summary such as `82.5 ± 8.6 km/h [73.9, 91.1]`.
    pub fn display(&self, unit: SpeedUnit) -> String {
        format!(
            "{:.1} ± {:.1} {} [{:.1}, {:.1}]",
            self.v_in(unit),
            self.delta_v_in(unit),
            unit.label(),
            unit.from_mps(self.lower_mps),
            unit.from_mps(self.upper_mps)
        )
    }
}

/// `v = d/T`, `ε_v = Δd/d + 2Δt/T`, `Δv = ε_v·v`.
pub fn estimate_speed(path: &PathDistance, duration: &Duration) -> Result<SpeedEstimate, SpeedError> {
    if !(path.d_m > 0.0) {
        return Err(SpeedError::ZeroDistance(path.d_m));
    }
    if !(duration.t_s > 0.0) {
        return Err(SpeedError::ZeroDuration(duration.t_s));
    }
    let v = path.d_m / duration.t_s;
    let eps_d = path.delta_d_m / path.d_m;
    let eps_v = eps_d + duration.eps_t;
    let dv = eps_v * v;
    Ok(SpeedEstimate {
        v_mps: v,
        delta_v_mps: dv,
        lower_mps: v - dv,
        upper_mps: v + dv,
        d_m: path.d_m,
        delta_d_m: path.delta_d_m,
        t_s: duration.t_s,
        delta_t_s: duration.delta_t_s,
        eps_d,
        eps_t: duration.eps_t,
        eps_v,
        segments: path.segments.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrefixRow {
    /// Number of segments included (`d_1 + … + d_k`).
    pub segments: usize,
    pub start_frame: u64,
    pub end_frame: u64,
    pub v_mps: f64,
    pub delta_v_mps: f64,
}

/// Speed over every prefix of the path: `d_1`, `d_1 + d_2`, … up to the
/// full path, in that order.
pub fn prefix_analysis(
    regions: &[RectifiedRegion],
    frames: &[u64],
    clock: &FrameClock,
) -> Result<Vec<PrefixRow>, SpeedError> {
    if regions.len() != frames.len() {
        return Err(SpeedError::LengthMismatch(regions.len(), frames.len()));
    }
    if regions.len() < 2 {
        return Err(UncertaintyError::TooFewRegions(regions.len()).into());
    }
    (1..regions.len())
        .map(|k| {
            let path = uncertainty::path_distance(&regions[..=k])?;
            let dur = timing::duration(clock, frames[0], frames[k])?;
            let est = estimate_speed(&path, &dur)?;
            Ok(PrefixRow {
                segments: k,
                start_frame: frames[0],
                end_frame: frames[k],
                v_mps: est.v_mps,
                delta_v_mps: est.delta_v_mps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::model::TimingSpec;

    fn path(d: f64, dd: f64) -> PathDistance {
        PathDistance { d_m: d, delta_d_m: dd, segments: vec![SegmentInterval::new(d, d - dd, d + dd)] }
    }

    fn dur(t: f64, dt: f64) -> Duration {
        Duration { t_s: t, delta_t_s: dt, eps_t: 2.0 * dt / t }
    }

    #[test]
    fn thirty_mph_exactly() {
        let est = estimate_speed(&path(13.4112, 0.0), &dur(1.0, 0.0)).unwrap();
        assert_eq!(est.v_in(SpeedUnit::Mph), 30.0);
        assert_eq!(est.delta_v_mps, 0.0);
        assert_eq!(est.lower_mps, est.upper_mps);
        assert_eq!(est.display(SpeedUnit::Mph), "30.0 ± 0.0 mph [30.0, 30.0]");
    }

    #[test]
    fn composed_example() {
        let est = estimate_speed(&path(10.0, 2.16552), &dur(1.0, 0.005)).unwrap();
        assert_eq!(est.v_mps, 10.0);
        assert!((est.eps_d - 0.216552).abs() < 1e-15);
        assert!((est.eps_t - 0.01).abs() < 1e-15);
        assert!((est.delta_v_mps - 2.26552).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(estimate_speed(&path(0.0, 0.0), &dur(1.0, 0.0)), Err(SpeedError::ZeroDistance(0.0)));
        assert!(matches!(estimate_speed(&path(1.0, 0.0), &dur(0.0, 0.0)), Err(SpeedError::ZeroDuration(_))));
    }

    #[test]
    fn two_point_prefix_equals_estimate() {
        let regions = vec![RectifiedRegion::point(Point::new(0.0, 0.0)), RectifiedRegion::point(Point::new(3.0, 4.0))];
        let clock = timing::build_clock(&TimingSpec::constant_fps(10.0), &[0, 5], None).unwrap();
        let rows = prefix_analysis(&regions, &[0, 5], &clock).unwrap();
        assert_eq!(rows.len(), 1);
        let full = estimate_speed(
            &uncertainty::path_distance(&regions).unwrap(),
            &timing::duration(&clock, 0, 5).unwrap(),
        )
        .unwrap();
        assert_eq!((rows[0].v_mps, rows[0].delta_v_mps), (full.v_mps, full.delta_v_mps));
    }
}
