//! Frame times and the duration term of the speed error.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{TimingMode, TimingSpec};

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("no timestamp for frame {0}")]
    MissingTimestamp(u64),
    #[error("timestamps not strictly increasing at line {0}")]
    NonMonotonicTimestamps(usize),
    #[error("sidecar line {line}: cannot parse `{text}` as seconds")]
    SidecarParse { line: usize, text: String },
    #[error("timestamp mode requires sidecar contents")]
    MissingSidecar,
    #[error("frame rate must be finite and > 0, got {0}")]
    InvalidFps(f64),
    #[error("duration must be positive, got {0} s")]
    ZeroDuration(f64),
    #[error("start frame {0} must precede end frame {1}")]
    FrameOrder(u64, u64),
    #[error("cannot read sidecar {path}: {message}")]
    Io { path: String, message: String },
}

/// Parses a timestamp sidecar: one seconds value per line, line `k` for frame
/// `k`. Blank lines and `#` comments are skipped. Line numbers in errors are
/// 1-based file lines.
pub fn parse_sidecar(text: &str) -> Result<Vec<f64>, TimingError> {
    let mut out: Vec<f64> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: f64 = line
            .parse()
            .ok()
            .filter(|t: &f64| t.is_finite())
            .ok_or_else(|| TimingError::SidecarParse { line: i + 1, text: line.to_string() })?;
        if let Some(prev) = out.last() {
            if t <= *prev {
                return Err(TimingError::NonMonotonicTimestamps(i + 1));
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn load_sidecar(path: &Path) -> Result<Vec<f64>, TimingError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TimingError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_sidecar(&text)
}

/// Renders timestamps in sidecar form (shortest round-trip decimals).
pub fn format_sidecar(times: &[f64]) -> String {
    let mut s = String::from("# frame presentation timestamps, seconds; line k = frame k\n");
    for t in times {
        s.push_str(&format!("{t:?}\n"));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClockSource {
    Cfr { fps: f64 },
    PtsSidecar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameClock {
    pub times_s: BTreeMap<u64, f64>,
    pub delta_t_s: f64,
    pub source: ClockSource,
}

impl FrameClock {
    pub fn time(&self, frame: u64) -> Result<f64, TimingError> {
        self.times_s.get(&frame).copied().ok_or(TimingError::MissingTimestamp(frame))
    }
}

/// Times for the requested frames. Constant-rate clocks use `i / fps`;
/// sidecar clocks take the values verbatim.
pub fn build_clock(spec: &TimingSpec, frames: &[u64], sidecar: Option<&[f64]>) -> Result<FrameClock, TimingError> {
    let mut times_s = BTreeMap::new();
    let source = match &spec.mode {
        TimingMode::ConstantFps { fps } => {
            if !(fps.is_finite() && *fps > 0.0) {
                return Err(TimingError::InvalidFps(*fps));
            }
            for &f in frames {
                times_s.insert(f, f as f64 / fps);
            }
            ClockSource::Cfr { fps: *fps }
        }
        TimingMode::Timestamps { .. } => {
            let table = sidecar.ok_or(TimingError::MissingSidecar)?;
            if let Some(i) = table.windows(2).position(|w| w[1] <= w[0]) {
                return Err(TimingError::NonMonotonicTimestamps(i + 2));
            }
            for &f in frames {
                let t = usize::try_from(f).ok().and_then(|i| table.get(i)).ok_or(TimingError::MissingTimestamp(f))?;
                times_s.insert(f, *t);
            }
            ClockSource::PtsSidecar
        }
    };
    Ok(FrameClock { times_s, delta_t_s: spec.delta_t_s, source })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Duration {
    pub t_s: f64,
    pub delta_t_s: f64,
    pub eps_t: f64,
}

/// `T = t_N - t_0` and the relative time error `2Δt / T`.
pub fn duration(clock: &FrameClock, start: u64, end: u64) -> Result<Duration, TimingError> {
    if start >= end {
        return Err(TimingError::FrameOrder(start, end));
    }
    let t = clock.time(end)? - clock.time(start)?;
    if !(t > 0.0) {
        return Err(TimingError::ZeroDuration(t));
    }
    Ok(Duration { t_s: t, delta_t_s: clock.delta_t_s, eps_t: 2.0 * clock.delta_t_s / t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cfr_clock() {
        let frames: Vec<u64> = (0..10).collect();
        let clock = build_clock(&TimingSpec::constant_fps(30.0), &frames, None).unwrap();
        let d = duration(&clock, 0, 9).unwrap();
        assert!((d.t_s - 0.3).abs() < 1e-15);
    }

    #[test]
    fn vfr_sidecar_read_verbatim() {
        let times = parse_sidecar("0.0\n0.0667\n0.1333\n0.2001\n").unwrap();
        let clock = build_clock(&TimingSpec::timestamps("pts.txt"), &[0, 1, 2, 3], Some(&times)).unwrap();
        assert_eq!(clock.time(1).unwrap(), 0.0667);
        assert_eq!(clock.time(3).unwrap(), 0.2001);
        assert_eq!(clock.source, ClockSource::PtsSidecar);
    }

    #[test]
    fn non_monotonic_sidecar() {
        assert_eq!(parse_sidecar("0.0\n0.2\n0.1\n"), Err(TimingError::NonMonotonicTimestamps(3)));
        assert_eq!(
            build_clock(&TimingSpec::timestamps("x"), &[0], Some(&[0.0, 0.2, 0.1])),
            Err(TimingError::NonMonotonicTimestamps(3))
        );
    }

    #[test]
    fn sidecar_comments_and_errors() {
        assert_eq!(parse_sidecar("# header\n0.5\n\n# mid\n0.75\n").unwrap(), vec![0.5, 0.75]);
        assert!(matches!(parse_sidecar("0.1\nabc\n"), Err(TimingError::SidecarParse { line: 2, .. })));
        assert!(matches!(parse_sidecar("nan\n"), Err(TimingError::SidecarParse { line: 1, .. })));
    }

    #[test]
    fn sidecar_round_trip() {
        let times = vec![0.0, 1.0 / 15.0, 0.13333333333333333, 0.2001];
        assert_eq!(parse_sidecar(&format_sidecar(&times)).unwrap(), times);
    }

    #[test]
    fn missing_timestamp() {
        let err = build_clock(&TimingSpec::timestamps("x"), &[0, 5], Some(&[0.0, 0.1])).unwrap_err();
        assert_eq!(err, TimingError::MissingTimestamp(5));
        assert_eq!(build_clock(&TimingSpec::timestamps("x"), &[0], None).unwrap_err(), TimingError::MissingSidecar);
    }

    #[test]
    fn eps_t_arithmetic() {
        let mut clock = build_clock(&TimingSpec::constant_fps(10.0), &[0, 3, 6], None).unwrap();
        let d = duration(&clock, 0, 3).unwrap();
        assert!((d.t_s - 0.3).abs() < 1e-15);
        assert!((d.eps_t - 0.033_333_333_333_333_33).abs() < 1e-12);
        let d2 = duration(&clock, 0, 6).unwrap();
        assert_eq!(d2.t_s, 2.0 * d.t_s);
        assert_eq!(d2.eps_t, d.eps_t / 2.0);
        clock.delta_t_s = 0.0;
        assert_eq!(duration(&clock, 0, 3).unwrap().eps_t, 0.0);
    }

    #[test]
    fn duration_errors() {
        let clock = build_clock(&TimingSpec::constant_fps(10.0), &[0, 3], None).unwrap();
        assert_eq!(duration(&clock, 3, 0), Err(TimingError::FrameOrder(3, 0)));
        assert_eq!(duration(&clock, 0, 4), Err(TimingError::MissingTimestamp(4)));
    }

    #[test]
    fn cfr_and_pts_agree() {
        let fps = 15.0;
        let frames: Vec<u64> = (0..20).collect();
        let table: Vec<f64> = frames.iter().map(|&i| i as f64 / fps).collect();
        let a = build_clock(&TimingSpec::constant_fps(fps), &frames, None).unwrap();
        let b = build_clock(&TimingSpec::timestamps("x"), &frames, Some(&table)).unwrap();
        assert_eq!(a.times_s, b.times_s);
        assert_eq!(duration(&a, 2, 17).unwrap(), duration(&b, 2, 17).unwrap());
    }
}
