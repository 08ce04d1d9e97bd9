//! Batch evaluation over a dataset manifest and the aggregate error tables.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Project, SpeedUnit};
use crate::pipeline::{self, EstimateError};

/// Ground truth per pass id, identical for every camera in the dataset.
pub const BUNDLED_GROUND_TRUTH: &str = include_str!("../data/forespeed_gt.tsv");

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown pass id `{0}` (expected T1P<n> or T2P<n>)")]
    UnknownPassId(String),
    #[error("no ground truth for pass {0}")]
    MissingGroundTruth(String),
    #[error("invalid manifest: {0}")]
    Invalid(String),
    #[error("no evaluated records to aggregate")]
    EmptyAggregate,
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Low,
    Strong,
}

/// A validated `T<x>P<y>` pass identifier.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PassId {
    pub test: u32,
    pub pass: u32,
}

impl PassId {
    pub fn perspective(&self) -> Perspective {
        if self.test == 1 { Perspective::Low } else { Perspective::Strong }
    }
}

impl std::str::FromStr for PassId {
    type Err = BenchError;

    /// Accepts the bare id or a dataset file stem such as `T1P5-Ring-6996…`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        static RE: OnceLock<Regex> = OnceLock::new();
        let re = RE.get_or_init(|| Regex::new(r"^T(\d+)P(\d+)").unwrap());
        let caps = re.captures(s.trim()).ok_or_else(|| BenchError::UnknownPassId(s.to_string()))?;
        let test: u32 = caps[1].parse().map_err(|_| BenchError::UnknownPassId(s.to_string()))?;
        let pass: u32 = caps[2].parse().map_err(|_| BenchError::UnknownPassId(s.to_string()))?;
        if !(test == 1 || test == 2) || pass == 0 {
            return Err(BenchError::UnknownPassId(s.to_string()));
        }
        Ok(PassId { test, pass })
    }
}

impl TryFrom<String> for PassId {
    type Error = BenchError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PassId> for String {
    fn from(p: PassId) -> String {
        p.to_string()
    }
}

impl std::fmt::Display for PassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T{}P{}", self.test, self.pass)
    }
}

/// Parses a `pass_id<TAB>mph` table; `#` lines and blank lines are ignored.
pub fn parse_ground_truth(text: &str) -> Result<BTreeMap<String, f64>, BenchError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t').map(str::trim).filter(|c| !c.is_empty());
        let (Some(id), Some(mph), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(BenchError::Parse(format!("ground truth line {}: expected `pass_id<TAB>mph`", i + 1)));
        };
        let pass: PassId = id.parse()?;
        let mph: f64 = mph
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite() && *v > 0.0)
            .ok_or_else(|| BenchError::Parse(format!("ground truth line {}: bad speed `{mph}`", i + 1)))?;
        out.insert(pass.to_string(), mph);
    }
    Ok(out)
}

pub fn bundled_ground_truth() -> BTreeMap<String, f64> {
    parse_ground_truth(BUNDLED_GROUND_TRUTH).expect("bundled table parses")
}

#[derive(Clone, Debug, Deserialize)]
struct RawManifest {
    #[serde(default)]
    ground_truth: Option<String>,
    #[serde(default, rename = "entry")]
    entries: Vec<RawEntry>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    camera: String,
    #[serde(default)]
    stream: String,
    pass_id: String,
    project: String,
    #[serde(default)]
    gt_mph: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub camera: String,
    /// Folder path of the recording, e.g. `Lorex/cam1/main/avi`.
    pub stream: String,
    pub pass_id: PassId,
    /// Project file, resolved against the manifest's directory.
    pub project: PathBuf,
    pub gt_mph: f64,
}

impl ManifestEntry {
    pub fn perspective(&self) -> Perspective {
        self.pass_id.perspective()
    }

    pub fn label(&self) -> String {
        format!("{} / {}", self.camera, self.pass_id)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Parses manifest text. Relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Manifest, BenchError> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        let gt = match &raw.ground_truth {
            Some(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
                parse_ground_truth(&text)?
            }
            None => bundled_ground_truth(),
        };
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(raw.entries.len());
        for e in raw.entries {
            let pass_id: PassId = e.pass_id.parse()?;
            let gt_mph = match e.gt_mph {
                Some(v) => v,
                None => *gt.get(&pass_id.to_string()).ok_or_else(|| BenchError::MissingGroundTruth(pass_id.to_string()))?,
            };
            if !(gt_mph.is_finite() && gt_mph > 0.0) {
                return Err(BenchError::Invalid(format!("{}: ground truth must be > 0", e.camera)));
            }
            let project = base_dir.join(&e.project);
            if !seen.insert(project.clone()) {
                return Err(BenchError::Invalid(format!("duplicate project path {}", e.project)));
            }
            entries.push(ManifestEntry { camera: e.camera, stream: e.stream, pass_id, project, gt_mph });
        }
        Ok(Manifest { entries })
    }
}

pub fn ingest_manifest(path: &Path) -> Result<Manifest, BenchError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Manifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Measurement {
    pub v_mph: f64,
    pub delta_v_mph: f64,
    pub signed_error_mph: f64,
    pub covered: bool,
}

impl Measurement {
    pub fn new(v_mph: f64, delta_v_mph: f64, gt_mph: f64) -> Self {
        Measurement {
            v_mph,
            delta_v_mph,
            signed_error_mph: v_mph - gt_mph,
            covered: v_mph - delta_v_mph <= gt_mph && gt_mph <= v_mph + delta_v_mph,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Outcome {
    Measured(Measurement),
    Excluded(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRecord {
    pub camera: String,
    pub pass_id: PassId,
    pub perspective: Perspective,
    pub gt_mph: f64,
    pub outcome: Outcome,
}

impl EvalRecord {
    pub fn measured(&self) -> Option<&Measurement> {
        match &self.outcome {
            Outcome::Measured(m) => Some(m),
            Outcome::Excluded(_) => None,
        }
    }
}

fn exclusion_reason(err: &EstimateError) -> String {
    match err {
        EstimateError::IncompleteAnnotation(missing) if missing.contains(&"grid") => {
            "no rectification reference".to_string()
        }
        EstimateError::IncompleteAnnotation(_) => "contact points not visible along the path".to_string(),
        other => other.to_string(),
    }
}

pub fn evaluate_entry(entry: &ManifestEntry) -> EvalRecord {
    let outcome = match Project::load(&entry.project) {
        Err(e) => Outcome::Excluded(format!("cannot load project: {e}")),
        Ok(project) => {
            let dir = entry.project.parent().unwrap_or(Path::new("."));
            match pipeline::estimate_in_dir(&project, dir) {
                Ok(est) => Outcome::Measured(Measurement::new(
                    est.estimate.v_in(SpeedUnit::Mph),
                    est.estimate.delta_v_in(SpeedUnit::Mph),
                    entry.gt_mph,
                )),
                Err(e) => Outcome::Excluded(exclusion_reason(&e)),
            }
        }
    };
    EvalRecord {
        camera: entry.camera.clone(),
        pass_id: entry.pass_id.clone(),
        perspective: entry.perspective(),
        gt_mph: entry.gt_mph,
        outcome,
    }
}

/// Evaluates every entry in parallel; records come back in manifest order.
pub fn run_bench(manifest: &Manifest) -> Vec<EvalRecord> {
    manifest.entries.par_iter().map(evaluate_entry).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitStats {
    pub n: usize,
    pub mean_signed_error_mph: f64,
    /// Estimate rounded to whole mph equals the ground truth.
    pub exact: usize,
    pub within_1: usize,
    pub within_2: usize,
    pub covered: usize,
    /// Counts of `Δv` in bins `[k, k+1)` mph.
    pub dv_histogram: Vec<usize>,
}

impl SplitStats {
    fn from_measurements(ms: &[(&Measurement, f64)]) -> Option<SplitStats> {
        if ms.is_empty() {
            return None;
        }
        let n = ms.len();
        let mean = ms.iter().map(|(m, _)| m.signed_error_mph).sum::<f64>() / n as f64;
        let exact = ms.iter().filter(|(m, gt)| m.v_mph.round() == *gt).count();
        let within_1 = ms.iter().filter(|(m, _)| m.signed_error_mph.abs() <= 1.0).count();
        let within_2 = ms.iter().filter(|(m, _)| m.signed_error_mph.abs() <= 2.0).count();
        let covered = ms.iter().filter(|(m, _)| m.covered).count();
        let mut dv_histogram = Vec::new();
        for (m, _) in ms {
            let bin = m.delta_v_mph.max(0.0).floor() as usize;
            if dv_histogram.len() <= bin {
                dv_histogram.resize(bin + 1, 0);
            }
            dv_histogram[bin] += 1;
        }
        Some(SplitStats { n, mean_signed_error_mph: mean, exact, within_1, within_2, covered, dv_histogram })
    }
}

/// Integer percentage with halves rounded up, e.g. 54/89 → 61.
pub fn percent_half_up(count: usize, total: usize) -> u64 {
    assert!(total > 0, "percentage of an empty set");
    ((200 * count as u64) + total as u64) / (2 * total as u64)
}

/// `"61% (54)"`.
pub fn render_bucket(count: usize, total: usize) -> String {
    format!("{}% ({})", percent_half_up(count, total), count)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub total: usize,
    pub excluded: usize,
    pub all: SplitStats,
    pub low: Option<SplitStats>,
    pub strong: Option<SplitStats>,
}

impl Report {
    /// Unweighted average of the low and strong mean errors. Published
    /// summaries sometimes quote this instead of the pooled mean.
    pub fn mean_of_split_means(&self) -> Option<f64> {
        match (&self.low, &self.strong) {
            (Some(l), Some(s)) => Some(0.5 * (l.mean_signed_error_mph + s.mean_signed_error_mph)),
            _ => None,
        }
    }
}

pub fn aggregate(records: &[EvalRecord]) -> Result<Report, BenchError> {
    let pick = |p: Option<Perspective>| -> Vec<(&Measurement, f64)> {
        records
            .iter()
            .filter(|r| p.is_none_or(|p| r.perspective == p))
            .filter_map(|r| r.measured().map(|m| (m, r.gt_mph)))
            .collect()
    };
    let all = SplitStats::from_measurements(&pick(None)).ok_or(BenchError::EmptyAggregate)?;
    Ok(Report {
        total: records.len(),
        excluded: records.len() - all.n,
        low: SplitStats::from_measurements(&pick(Some(Perspective::Low))),
        strong: SplitStats::from_measurements(&pick(Some(Perspective::Strong))),
        all,
    })
}

impl Report {
    /// Error-range table: one row per perspective plus the overall row.
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>14} {:>16} {:>16} {:>12} {:>14}",
            "perspective", "records", "exact speed", "within ±1 mph", "within ±2 mph", "mean error", "covered"
        );
        let rows = [("low", self.low.as_ref()), ("strong", self.strong.as_ref()), ("all", Some(&self.all))];
        for (name, stats) in rows {
            match stats {
                Some(st) => {
                    let _ = writeln!(
                        s,
                        "{:<12} {:>8} {:>14} {:>16} {:>16} {:>12.2} {:>14}",
                        name,
                        st.n,
                        render_bucket(st.exact, st.n),
                        render_bucket(st.within_1, st.n),
                        render_bucket(st.within_2, st.n),
                        st.mean_signed_error_mph,
                        render_bucket(st.covered, st.n)
                    );
                }
                None => {
                    let _ = writeln!(s, "{name:<12} {:>8}", 0);
                }
            }
        }
        if let Some(m) = self.mean_of_split_means() {
            let _ = writeln!(s, "\nmean error, average of low and strong: {m:.2} mph");
        }
        let _ = writeln!(s, "\n{} record(s), {} excluded", self.total, self.excluded);
        s
    }
}

pub fn histogram_csv(stats: Option<&SplitStats>) -> String {
    let mut s = String::from("bin_lo_mph,bin_hi_mph,count\n");
    for (k, c) in stats.map(|st| st.dv_histogram.as_slice()).unwrap_or_default().iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", k, k + 1, c);
    }
    s
}

pub fn histogram_svg(stats: Option<&SplitStats>, title: &str) -> String {
    let bins = stats.map(|st| st.dv_histogram.clone()).unwrap_or_default();
    let (w, h, pad) = (640.0, 320.0, 40.0);
    let max = bins.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bw = if bins.is_empty() { 0.0 } else { (w - 2.0 * pad) / bins.len() as f64 };
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <text x=\"{pad}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n"
    );
    for (k, c) in bins.iter().enumerate() {
        let bh = (h - 2.0 * pad) * (*c as f64) / max;
        let x = pad + k as f64 * bw;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{bh:.1}\" fill=\"#4a78b5\"><title>[{k}, {}) mph: {c}</title></rect>",
            h - pad - bh,
            (bw - 1.0).max(0.5),
            k + 1
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">Δv [mph]</text>\n</svg>",
        w / 2.0,
        h - 10.0
    );
    s
}

#[derive(Serialize)]
struct CsvRow<'a> {
    camera: &'a str,
    pass_id: String,
    perspective: Perspective,
    gt_mph: f64,
    v_mph: Option<f64>,
    delta_v_mph: Option<f64>,
    signed_error_mph: Option<f64>,
    covered: Option<bool>,
    excluded: Option<&'a str>,
}

pub fn records_csv(records: &[EvalRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        let m = r.measured();
        let row = CsvRow {
            camera: &r.camera,
            pass_id: r.pass_id.to_string(),
            perspective: r.perspective,
            gt_mph: r.gt_mph,
            v_mph: m.map(|m| m.v_mph),
            delta_v_mph: m.map(|m| m.delta_v_mph),
            signed_error_mph: m.map(|m| m.signed_error_mph),
            covered: m.map(|m| m.covered),
            excluded: match &r.outcome {
                Outcome::Excluded(why) => Some(why),
                Outcome::Measured(_) => None,
            },
        };
        w.serialize(row).expect("record serializes");
    }
    if records.is_empty() {
        return "camera,pass_id,perspective,gt_mph,v_mph,delta_v_mph,signed_error_mph,covered,excluded\n".to_string();
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

/// Writes `records.csv`, `summary.txt`, `dv_hist_{low,strong}.csv` and,
/// when asked, matching `.svg` charts. Returns the aggregate (if any).
pub fn write_report(records: &[EvalRecord], out: &Path, svg: bool) -> Result<Option<Report>, BenchError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let write = |name: &str, body: &str| -> Result<(), BenchError> {
        let p = out.join(name);
        std::fs::write(&p, body).map_err(|e| io_err(&p, e))
    };
    write("records.csv", &records_csv(records))?;
    let report = match aggregate(records) {
        Ok(r) => r,
        Err(BenchError::EmptyAggregate) => {
            write("summary.txt", &format!("{} record(s), none evaluated\n", records.len()))?;
            return Ok(None);
        }
        Err(e) => return Err(e),
    };
    write("summary.txt", &report.summary_text())?;
    for (name, stats) in [("low", report.low.as_ref()), ("strong", report.strong.as_ref())] {
        write(&format!("dv_hist_{name}.csv"), &histogram_csv(stats))?;
        if svg {
            write(&format!("dv_hist_{name}.svg"), &histogram_svg(stats, &format!("Δv distribution, {name} perspective")))?;
        }
    }
    Ok(Some(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(p: Perspective, gt: f64, v: f64, dv: f64) -> EvalRecord {
        EvalRecord {
            camera: "cam".into(),
            pass_id: PassId { test: if p == Perspective::Low { 1 } else { 2 }, pass: 1 },
            perspective: p,
            gt_mph: gt,
            outcome: Outcome::Measured(Measurement::new(v, dv, gt)),
        }
    }

    #[test]
    fn pass_ids() {
        assert_eq!("T1P5-Ring-6996443541347278144".parse::<PassId>().unwrap(), PassId { test: 1, pass: 5 });
        assert_eq!("T2P8".parse::<PassId>().unwrap().perspective(), Perspective::Strong);
        assert!(matches!("T3P1".parse::<PassId>(), Err(BenchError::UnknownPassId(_))));
        assert!(matches!("P1T1".parse::<PassId>(), Err(BenchError::UnknownPassId(_))));
    }

    #[test]
    fn bundled_table() {
        let gt = bundled_ground_truth();
        assert_eq!(gt.len(), 14);
        assert_eq!(gt["T1P1"], 29.0);
        assert_eq!(gt["T1P4"], 31.0);
        assert_eq!(gt["T2P6"], 31.0);
        assert_eq!(gt["T2P8"], 29.0);
    }

    #[test]
    fn manifest_defaults_and_overrides() {
        let text = r#"
            [[entry]]
            camera = "ANRAN Cam 1"
            stream = "ANRAN/cam1/main/mp4"
            pass_id = "T1P1"
            project = "anran/T1P1.fsp"

            [[entry]]
            camera = "EUFY"
            pass_id = "T2P8"
            project = "eufy/T2P8.fsp"

            [[entry]]
            camera = "EUFY"
            pass_id = "T2P1"
            project = "eufy/T2P1.fsp"
            gt_mph = 33.5
        "#;
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.entries[0].gt_mph, 29.0);
        assert_eq!(m.entries[0].label(), "ANRAN Cam 1 / T1P1");
        assert_eq!(m.entries[0].project, Path::new("/data/anran/T1P1.fsp"));
        assert_eq!(m.entries[1].gt_mph, 29.0);
        assert_eq!(m.entries[2].gt_mph, 33.5);
        assert_eq!(m.entries[0].perspective(), Perspective::Low);
    }

    #[test]
    fn manifest_errors() {
        let bad_pass = "[[entry]]\ncamera = \"x\"\npass_id = \"T3P1\"\nproject = \"a.fsp\"\n";
        assert!(matches!(Manifest::parse(bad_pass, Path::new(".")), Err(BenchError::UnknownPassId(_))));
        let dup = "[[entry]]\ncamera = \"x\"\npass_id = \"T1P1\"\nproject = \"a.fsp\"\n\
                   [[entry]]\ncamera = \"y\"\npass_id = \"T1P2\"\nproject = \"a.fsp\"\n";
        assert!(matches!(Manifest::parse(dup, Path::new(".")), Err(BenchError::Invalid(_))));
        let neg = "[[entry]]\ncamera = \"x\"\npass_id = \"T1P1\"\nproject = \"a.fsp\"\ngt_mph = -3\n";
        assert!(matches!(Manifest::parse(neg, Path::new(".")), Err(BenchError::Invalid(_))));
        assert!(matches!(Manifest::parse("entry = 3", Path::new(".")), Err(BenchError::Parse(_))));
        assert!(Manifest::parse("", Path::new(".")).unwrap().entries.is_empty());
    }

    #[test]
    fn empty_manifest_runs() {
        assert!(run_bench(&Manifest::default()).is_empty());
        assert!(matches!(aggregate(&[]), Err(BenchError::EmptyAggregate)));
    }

    #[test]
    fn missing_project_is_excluded() {
        let m = Manifest::parse(
            "[[entry]]\ncamera = \"x\"\npass_id = \"T1P1\"\nproject = \"nope.fsp\"\n",
            Path::new("/nonexistent"),
        )
        .unwrap();
        let recs = run_bench(&m);
        assert!(matches!(&recs[0].outcome, Outcome::Excluded(why) if why.starts_with("cannot load project")));
    }

    #[test]
    fn percentages() {
        assert_eq!(render_bucket(54, 89), "61% (54)");
        assert_eq!(render_bucket(153, 180), "85% (153)");
        assert_eq!(percent_half_up(1, 8), 13);
        assert_eq!(percent_half_up(1, 200), 1);
        assert_eq!(percent_half_up(0, 5), 0);
        assert_eq!(percent_half_up(5, 5), 100);
    }

    #[test]
    fn single_exact_record() {
        let rep = aggregate(&[record(Perspective::Low, 30.0, 30.0, 1.0)]).unwrap();
        assert_eq!((rep.all.exact, rep.all.within_1, rep.all.within_2), (1, 1, 1));
        assert_eq!(rep.all.mean_signed_error_mph, 0.0);
        assert!(rep.strong.is_none());
        assert!(rep.summary_text().contains("100% (1)"));
    }

    #[test]
    fn histogram_bins() {
        let recs = [
            record(Perspective::Strong, 30.0, 29.0, 0.2),
            record(Perspective::Strong, 30.0, 29.0, 0.99),
            record(Perspective::Strong, 30.0, 29.0, 1.0),
            record(Perspective::Strong, 30.0, 29.0, 12.4),
        ];
        let rep = aggregate(&recs).unwrap();
        let h = &rep.strong.as_ref().unwrap().dv_histogram;
        assert_eq!(h.len(), 13);
        assert_eq!((h[0], h[1], h[12]), (2, 1, 1));
        let csv = histogram_csv(rep.strong.as_ref());
        assert!(csv.starts_with("bin_lo_mph,bin_hi_mph,count\n0,1,2\n1,2,1\n"));
        assert!(histogram_svg(rep.strong.as_ref(), "t").contains("<rect"));
    }

    #[test]
    fn csv_rows() {
        let mut recs = vec![record(Perspective::Low, 30.0, 31.25, 2.0)];
        recs.push(EvalRecord { outcome: Outcome::Excluded("no rectification reference".into()), ..recs[0].clone() });
        let text = records_csv(&recs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "camera,pass_id,perspective,gt_mph,v_mph,delta_v_mph,signed_error_mph,covered,excluded");
        assert_eq!(lines[1], "cam,T1P1,low,30.0,31.25,2.0,1.25,true,");
        assert_eq!(lines[2], "cam,T1P1,low,30.0,,,,,no rectification reference");
    }
}
