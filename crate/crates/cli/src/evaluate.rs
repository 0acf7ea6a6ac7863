use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pedcal::DistanceBin;

use crate::distances::DistanceReport;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, clap::Args)]
pub struct EvaluateArgs {
    /// Distance report written by `distances`.
    pub report: PathBuf,
    /// JSON array of labeled pairs.
    #[arg(long)]
    pub labels: PathBuf,
    /// JSON output path; when given, the text table goes to stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the text table here.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

/// Ground-truth annotation of one pair of people in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub frame_id: String,
    pub i: usize,
    pub j: usize,
    pub label: DistanceBin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: DistanceBin,
    /// Number of labels in this class (row sum).
    pub support: u64,
    /// Number of predictions of this class (column sum).
    pub predicted: u64,
    /// Zero when the class is never predicted.
    pub precision: f64,
    /// Zero when the class never occurs.
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub manifest: RunManifest,
    /// Rows are labels, columns are predictions, in bin order.
    pub confusion: [[u64; 4]; 4],
    pub classes: Vec<ClassScores>,
    pub total: u64,
    /// `None` when no label matched a prediction.
    pub accuracy: Option<f64>,
    /// Labels whose pair is absent from the report; not counted.
    pub unmatched: Vec<LabeledPair>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores computed from a confusion matrix.
pub fn scores(confusion: &[[u64; 4]; 4]) -> (Vec<ClassScores>, u64, Option<f64>) {
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..4).map(|k| confusion[k][k]).sum();
    let classes = DistanceBin::ALL
        .iter()
        .map(|&label| {
            let k = label.index();
            let support: u64 = confusion[k].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[k]).sum();
            let precision = ratio(confusion[k][k], predicted);
            let recall = ratio(confusion[k][k], support);
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassScores { label, support, predicted, precision, recall, f1 }
        })
        .collect();
    (classes, total, (total > 0).then(|| ratio(correct, total)))
}

pub fn evaluate_labels(
    report: &DistanceReport,
    labels: &[LabeledPair],
) -> CliResult<([[u64; 4]; 4], Vec<LabeledPair>)> {
    let mut confusion = [[0u64; 4]; 4];
    let mut unmatched = Vec::new();
    for l in labels {
        if l.i == l.j {
            return Err(CliError::schema(format!("label in frame {:?} pairs person {} with itself", l.frame_id, l.i)));
        }
        match report.pair(&l.frame_id, l.i, l.j) {
            Some(p) => confusion[l.label.index()][p.bin.index()] += 1,
            None => unmatched.push(l.clone()),
        }
    }
    Ok((confusion, unmatched))
}

/// Plain-text confusion matrix and per-class scores.
pub fn render_table(r: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<12}{:>8}{:>8}{:>8}{:>8}", "truth\\pred", "0-1 m", "1-2 m", "2-4 m", ">4 m");
    for label in DistanceBin::ALL {
        let row = &r.confusion[label.index()];
        let _ = writeln!(s, "{:<12}{:>8}{:>8}{:>8}{:>8}", label.label(), row[0], row[1], row[2], row[3]);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<12}{:>10}{:>10}{:>10}{:>10}", "class", "precision", "recall", "f1", "support");
    for c in &r.classes {
        let _ = writeln!(
            s,
            "{:<12}{:>10.2}{:>10.2}{:>10.2}{:>10}",
            c.label.label(),
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }
    let _ = writeln!(s);
    match r.accuracy {
        Some(a) => {
            let _ = writeln!(s, "accuracy {a:.2} over {} pairs", r.total);
        }
        None => {
            let _ = writeln!(s, "accuracy undefined: no labeled pair matched");
        }
    }
    if !r.unmatched.is_empty() {
        let _ = writeln!(s, "{} labels had no predicted pair", r.unmatched.len());
    }
    s
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<EvaluationReport> {
    let report: DistanceReport = io::read_json(&args.report)?;
    let labels: Vec<LabeledPair> = io::read_json(&args.labels)?;
    let (confusion, unmatched) = evaluate_labels(&report, &labels)?;
    let (classes, total, accuracy) = scores(&confusion);
    let mut manifest =
        RunManifest::new("evaluate", vec![args.report.display().to_string(), args.labels.display().to_string()]);
    manifest.height_m = report.manifest.height_m;
    manifest.fx_eq_fy = report.manifest.fx_eq_fy;
    manifest.distortion = report.manifest.distortion;
    manifest.seed = report.manifest.seed;
    Ok(EvaluationReport { manifest, confusion, classes, total, accuracy, unmatched })
}

pub fn run(args: &EvaluateArgs) -> CliResult<()> {
    let r = evaluate(args)?;
    let table = render_table(&r);
    io::write_text(args.output.as_deref(), &io::to_json(&r))?;
    if let Some(path) = &args.table {
        io::write_text(Some(path), &table)?;
    }
    if args.output.is_some() {
        io::write_text(None, &table)?;
    }
    Ok(())
}
